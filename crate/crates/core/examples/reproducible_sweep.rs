//! A support-coverage sweep run twice, on one thread and on four, producing byte-identical
//! CSVs. All randomness flows from the master seed through per-trial seeds.
//!
//! ```text
//! cargo run --release --example reproducible_sweep
//! ```

use ampest::benchmark::{run_experiment, write_csv, ExperimentConfig};
use ampest::{Family, PropertySpec};

fn csv(threads: usize) -> ampest::Result<Vec<u8>> {
    let mut cfg = ExperimentConfig::new(
        PropertySpec::coverage(5000.0)?,
        Family::Geometric { prob: 0.99 },
        1000,
    );
    cfg.trials = 20;
    cfg.threads = Some(threads);
    let mut out = Vec::new();
    write_csv(&run_experiment(&cfg)?, &mut out)?;
    Ok(out)
}

fn main() -> ampest::Result<()> {
    let one = csv(1)?;
    let four = csv(4)?;
    print!("{}", String::from_utf8_lossy(&one));
    assert_eq!(one, four, "thread count changed the output");
    eprintln!("identical output on 1 and 4 threads ({} bytes)", one.len());
    Ok(())
}

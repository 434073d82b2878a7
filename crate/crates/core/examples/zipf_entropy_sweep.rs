//! Entropy of a Zipf(1.5) distribution over 1,000 symbols: the amplified estimator against the
//! plug-in estimator on `n` and on `n sqrt(log n)` samples.
//!
//! ```text
//! cargo run --release --example zipf_entropy_sweep
//! ```

use ampest::benchmark::{run_experiment, write_csv, EstimatorKind, ExperimentConfig};
use ampest::{Family, PropertySpec, SplitMode};

fn main() -> ampest::Result<()> {
    let mut cfg = ExperimentConfig::new(PropertySpec::Entropy, Family::Zipf { power: 1.5 }, 1000);
    cfg.n_grid = vec![1000, 3162, 10_000];
    cfg.trials = 50;
    cfg.split = SplitMode::Shared;
    cfg.estimators = vec![
        EstimatorKind::Amplified,
        EstimatorKind::Empirical,
        EstimatorKind::EmpiricalPlus,
    ];
    let start = std::time::Instant::now();
    let rows = run_experiment(&cfg)?;
    write_csv(&rows, std::io::stdout().lock())?;
    for r in rows
        .iter()
        .filter(|r| r.estimator == EstimatorKind::Amplified)
    {
        eprintln!("n={} overflow={} clamped={}", r.n, r.overflow, r.clamped);
    }
    eprintln!("elapsed {:.1?}", start.elapsed());
    Ok(())
}

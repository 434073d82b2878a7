//! Inspect the coefficients `h_v · v!` behind the amplified estimator: values, which entries
//! needed the arbitrary-precision route, and how much cancellation each alternating sum had.
//!
//! ```text
//! cargo run --release --example coefficient_table
//! ```

use ampest::estimators::{derive_params, ParamChoice};
use ampest::{CoefficientTable, PropertySpec, SplitMode};

fn main() -> ampest::Result<()> {
    let spec = PropertySpec::Entropy;
    let n = 10_000.0;
    // the default cap max(4r, 200) runs to thousands of orders; the estimator only ever
    // reads the first few dozen
    let params =
        derive_params(n, &spec, &ParamChoice::default(), SplitMode::Shared)?.with_v_max(60);
    println!(
        "entropy, n = {n}: t = {:.4}, s0 = {}, u_max = {}, r = {}, t-decay {}",
        params.t, params.s0, params.u_max, params.r, params.t_decay
    );

    let table = CoefficientTable::new(&spec, None, &params)?;
    println!(
        "{:>4} {:>14} {:>14} {:>10} {:>8}",
        "v", "h_v v!", "f(v/n)", "cancel", "precise"
    );
    for v in 1..=12 {
        let e = table.get(v).expect("within v_max");
        println!(
            "{v:>4} {:>14.6e} {:>14.6e} {:>10.2} {:>8}",
            e.value,
            spec.eval_fx(0, v as f64 / n)?,
            e.cancellation_nats,
            e.precise
        );
    }

    // the whole table, as the `coeffs` subcommand writes it
    let entries = table.materialize();
    let precise = entries.iter().filter(|e| e.precise).count();
    println!(
        "{} coefficients, {} via big floats, {} clamped",
        entries.len(),
        precise,
        table.clamped_count()
    );
    Ok(())
}

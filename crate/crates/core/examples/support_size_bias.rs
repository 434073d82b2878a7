//! The plug-in support-size estimator only counts what it has seen, so on a uniform
//! distribution with `n = k` it lands near `1 - 1/e`. The amplified estimator extrapolates the
//! unseen mass.
//!
//! ```text
//! cargo run --release --example support_size_bias
//! ```

use ampest::benchmark::{run_experiment, EstimatorKind, ExperimentConfig};
use ampest::{Family, PropertySpec, SplitMode};

fn main() -> ampest::Result<()> {
    let k = 1000;
    let mut cfg = ExperimentConfig::new(PropertySpec::support_size(k as u64)?, Family::Uniform, k);
    cfg.n_grid = vec![500, 1000, 2000];
    cfg.trials = 50;
    cfg.split = SplitMode::Shared;
    cfg.estimators = vec![EstimatorKind::Amplified, EstimatorKind::Empirical];

    println!(
        "{:>6} {:>12} {:>10} {:>12}",
        "n", "estimator", "mean", "mse"
    );
    for row in run_experiment(&cfg)? {
        println!(
            "{:>6} {:>12} {:>10.4} {:>12.3e}",
            row.n,
            row.estimator.name(),
            row.mean_estimate,
            row.mse
        );
    }
    println!(
        "(true normalized support size is 1; 1 - 1/e = {:.4})",
        1.0 - (-1.0f64).exp()
    );
    Ok(())
}

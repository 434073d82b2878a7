//! The expected per-symbol contribution of the amplified estimator, `ĥ(λ)`, evaluated two
//! independent ways: as a Poisson-weighted series over the coefficients, and as a Bessel-kernel
//! integral, next to the plug-in target `f(λ/n)`.
//!
//! ```text
//! cargo run --release --example smoothed_series
//! ```

use ampest::estimators::{smoothed_h_hat, EstimatorParams};
use ampest::PropertySpec;

fn main() -> ampest::Result<()> {
    let spec = PropertySpec::Entropy;
    let params = EstimatorParams::new(150.0, 3.0, 1, false)?;
    println!(
        "{:>6} {:>14} {:>14} {:>10} {:>14}",
        "lambda", "series", "quadrature", "|diff|", "f(lambda/n)"
    );
    for lambda in [0.1, 0.25, 0.5, 1.0, 2.0, 4.0] {
        let (series, quad) = smoothed_h_hat(&spec, None, lambda, &params)?;
        println!(
            "{lambda:>6} {series:>14.8e} {quad:>14.8e} {:>10.1e} {:>14.8e}",
            (series - quad).abs(),
            spec.eval_fx(0, lambda / params.rate)?
        );
    }
    Ok(())
}

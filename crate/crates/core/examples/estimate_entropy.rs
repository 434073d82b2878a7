//! Estimate the entropy of a Zipf distribution from one Poissonized sample, with the plug-in,
//! modified plug-in and amplified estimators side by side.
//!
//! ```text
//! cargo run --release --example estimate_entropy -- [n]
//! ```

use ampest::distributions::split_sample;
use ampest::estimators::{derive_params, empirical, modified_empirical, ParamChoice};
use ampest::{AmplifiedEstimator, Distribution, Family, PropertySpec, SplitMode};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> ampest::Result<()> {
    let n: f64 = std::env::args()
        .nth(1)
        .map(|s| s.parse().expect("n must be a number"))
        .unwrap_or(5000.0);

    let dist = Distribution::new(Family::Zipf { power: 1.5 }, 1000, 0)?;
    let spec = PropertySpec::Entropy;
    let truth = spec.exact_value(dist.probs())?;

    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let sample = split_sample(&dist, n, SplitMode::TwoStream, &mut rng);

    let params = derive_params(n, &spec, &ParamChoice::default(), SplitMode::TwoStream)?;
    let estimator = AmplifiedEstimator::new(&spec, &params)?;
    let est = estimator.estimate(&sample)?;

    println!("true entropy        {truth:.6}");
    println!(
        "empirical           {:.6}",
        empirical(&sample.first, &spec)?
    );
    println!(
        "modified empirical  {:.6}",
        modified_empirical(&sample.first, n, &spec)?
    );
    println!("amplified           {:.6}", est.value);
    println!(
        "  small branch {:.6} over {} symbols, large branch {:.6} over {} symbols",
        est.small, est.small_symbols, est.large, est.large_symbols
    );
    println!(
        "  t = {:.3}, s0 = {}, u_max = {}, r = {}",
        params.t, params.s0, params.u_max, params.r
    );
    Ok(())
}

//! The benchmark distribution families and the exact value of every supported property on
//! each of them.
//!
//! ```text
//! cargo run --example distributions
//! ```

use ampest::{Distribution, Family, PropertySpec};

fn main() -> ampest::Result<()> {
    let k = 1000;
    let properties = [
        PropertySpec::Entropy,
        PropertySpec::support_size(k as u64)?,
        PropertySpec::coverage(5000.0)?,
        PropertySpec::power_sum(2.0)?,
        PropertySpec::dist_to_uniform(k as u64)?,
    ];

    print!("{:<10}", "family");
    for p in &properties {
        print!(" {:>16}", p.name());
    }
    println!();

    for name in [
        "uniform", "dirichlet", "zipf", "binomial", "poisson", "geometric",
    ] {
        let family = Family::default_for(name).expect("known family");
        // the Dirichlet family is a random draw; the seed fixes it
        let dist = Distribution::new(family, k, 42)?;
        print!("{name:<10}");
        for p in &properties {
            print!(" {:>16.6}", p.exact_value(dist.probs())?);
        }
        println!();
    }
    Ok(())
}

//! Run the numerical self-check suite, then the same suite against a deliberately broken
//! coefficient table to show that it notices.
//!
//! ```text
//! cargo run --release --example selfcheck -- [--deep]
//! ```

use ampest::selfcheck::{run, Fault, SelfcheckOptions};

fn main() {
    let deep = std::env::args().any(|a| a == "--deep");
    let healthy = run(&SelfcheckOptions {
        deep,
        fault: Fault::None,
    });
    for r in &healthy {
        println!("{r}");
    }

    println!("\nwith odd coefficients negated:");
    let broken = run(&SelfcheckOptions {
        deep: false,
        fault: Fault::FlipCoefficientSign,
    });
    for r in &broken {
        println!("{r}");
    }

    if healthy.iter().any(|r| !r.passed) {
        std::process::exit(2);
    }
}

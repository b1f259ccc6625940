//! Run the invariant suites and list each check.
//!
//! cargo run --release --example verify_suites [n]

use conformal_rigidity::experiments::{run_verify, Suite, VerifyOptions};
use conformal_rigidity::functionals::DegreeConvention;

fn main() -> conformal_rigidity::error::Result<()> {
    let n = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(3);
    let opts = VerifyOptions {
        n,
        fz_samples: 100_000,
        ..Default::default()
    };
    let rep = run_verify(&opts)?;
    for c in &rep.checks {
        println!(
            "{} {:<32} {:>12.3e} {} {:<10.1e} {}",
            if c.passed { "ok  " } else { "FAIL" },
            c.name,
            c.value,
            c.relation,
            c.bound,
            c.anchor
        );
    }
    println!("all passed: {}", rep.passed);

    // A flipped degree integrand must be caught.
    let flipped = run_verify(&VerifyOptions {
        suite: Suite::Functionals,
        degree_convention: DegreeConvention::Reversed,
        ..opts
    })?;
    for c in flipped.failures() {
        println!("flipped convention flags {}: {}", c.name, c.detail);
    }
    Ok(())
}

//! The flat bump family u_ε: deficit and distance to Ψ both scale like ε^{n-1}.
//! Prints the CSV and the fitted slopes.
//!
//! cargo run --release --example sharpness_sweep [n]

use conformal_rigidity::experiments::{sharpness_sweep, SharpnessOptions};

fn main() -> conformal_rigidity::error::Result<()> {
    let n = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(4);
    let opts = SharpnessOptions {
        n,
        include_zero: true,
        ..Default::default()
    };
    let rep = sharpness_sweep(&opts)?;
    print!("{}", rep.csv());
    println!(
        "slopes: deficit {:.4}, distance {:.4} (target {}); ratio max/min {:.4}",
        rep.deficit_slope,
        rep.distance_slope,
        n - 1,
        rep.ratio_spread
    );
    Ok(())
}

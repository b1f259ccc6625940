//! Ratio probe: fitted distance and dist²(∇u_h(0), SO(n)) over the deficit,
//! along a one-parameter family approaching the identity.
//!
//! cargo run --release --example stability_ratio [family] [n]

use conformal_rigidity::experiments::{log_grid, ratio_probe, RatioFamily, RatioOptions};

fn main() -> conformal_rigidity::error::Result<()> {
    let mut args = std::env::args().skip(1);
    let family: RatioFamily = args.next().as_deref().unwrap_or("normalized_linear").parse()?;
    let n = args.next().and_then(|s| s.parse().ok()).unwrap_or(3);
    let mut grid = log_grid(1e-3, 1e-1, 7)?;
    grid.push(0.0);
    let opts = RatioOptions {
        family,
        n,
        grid,
        level: if n == 3 { 16 } else { 12 },
        ..Default::default()
    };
    let rep = ratio_probe(&opts)?;
    print!("{}", rep.csv());
    println!(
        "max ratio {:.4}, max linear ratio {:.4}, bounded: {}",
        rep.max_ratio,
        rep.max_linear_ratio,
        rep.bounded()
    );
    Ok(())
}

//! Search for the constant c0(p, κ) in
//! |X+Y|^p >= |X|^p + p|X|^{p-2}<X,Y> + (1-κ)p/2 |X|^{p-2}|Y|^2 + c0|Y|^p
//! and check it on seeded samples; 4·c0 must fail somewhere.
//!
//! cargo run --release --example pointwise_inequality

use conformal_rigidity::linalg::{figalli_zhang_c0, figalli_zhang_check};

fn main() {
    println!("{:>4} {:>6} {:>12} {:>10} {:>12}", "p", "kappa", "c0", "viol(c0)", "viol(4 c0)");
    for p in [2.0, 3.0, 4.0, 5.0] {
        for kappa in [0.25, 0.5, 0.75] {
            let c0 = figalli_zhang_c0(p, kappa, 1e-9);
            let ok = figalli_zhang_check(p, kappa, c0, 200_000, 1);
            let over = figalli_zhang_check(p, kappa, 4.0 * c0, 200_000, 1);
            println!("{p:>4} {kappa:>6} {c0:>12.8} {:>10} {:>12}", ok.violations, over.violations);
        }
    }
}

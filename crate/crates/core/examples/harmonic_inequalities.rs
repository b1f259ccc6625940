//! Band-limited fields: sharp Poincaré gaps, Parseval, the harmonic
//! extension energy bound and the boundary expansion of ⨍_B det(I + ∇w_h).
//!
//! cargo run --release --example harmonic_inequalities

use conformal_rigidity::field::{HarmonicField, SphereField};
use conformal_rigidity::functionals::{harmonic_energy_bound, null_lagrangian_identity, poincare_gaps};
use conformal_rigidity::quadrature::{ball_rule, integrate_many, sphere_rule};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> conformal_rigidity::error::Result<()> {
    let n = 4;
    let rule = sphere_rule(n, 8)?;
    let ball = ball_rule(n, 8)?;
    let mut rng = ChaCha8Rng::seed_from_u64(3);

    for degrees in [vec![1], vec![2], vec![1, 2], vec![0, 1, 2, 3]] {
        let u = HarmonicField::random(&mut rng, n, &degrees, 1.0)?;
        let (g1, g2) = poincare_gaps(&u, &rule)?;
        let (m, e) = u.parseval();
        let q = integrate_many(&rule, 2, |f| {
            let s = u.eval(f)?;
            Ok(vec![s.value.norm_squared(), s.jac.norm_squared()])
        })?;
        let (lhs, rhs) = harmonic_energy_bound(&u, &ball, &rule)?;
        println!(
            "degrees {degrees:?}: gaps {g1:.3e} {g2:.3e}; Parseval {:.1e} {:.1e}; ball energy {lhs:.6} <= {rhs:.6}",
            (q[0] - m).abs(),
            (q[1] - e).abs()
        );
    }

    let w = HarmonicField::random(&mut rng, n, &[1, 2, 3], 0.3)?;
    let r = null_lagrangian_identity(&w, &ball, &rule)?;
    println!("⨍_B det(I + ∇w_h) = {:.15}", r.lhs);
    println!("boundary expansion  = {:.15}", r.rhs);
    for (k, t) in r.terms.iter().enumerate() {
        println!("  k = {}: {t:+.12e}", k + 1);
    }
    println!("n⨍<w,x> = {:+.12e}, volume = {:+.12e}", r.first_moment, r.volume);
    Ok(())
}

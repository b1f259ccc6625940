//! Product Gauss rules on S^{n-1}, B^n and flat discs, their exactness, the
//! two-level error estimate and the on-disk rule cache.
//!
//! cargo run --release --example quadrature_rules

use conformal_rigidity::field::sphere_monomial_mean;
use conformal_rigidity::quadrature::{
    ball_rule, disc_rule, integrate, integrate_ball, integrate_with_error, sphere_rule, unit_ball_volume, RuleCache,
};
use nalgebra::DVector;

fn main() -> conformal_rigidity::error::Result<()> {
    for n in 3..=5 {
        let rule = sphere_rule(n, 8)?;
        // ⨍ x_1^4 x_2^2 has a closed form.
        let mut a = vec![0u32; n];
        a[0] = 4;
        a[1] = 2;
        let q = integrate(&rule, |f| Ok(f.x()[0].powi(4) * f.x()[1].powi(2)))?;
        println!(
            "n = {n}: {} nodes, exact to degree {}, x1^4 x2^2 error {:.1e}",
            rule.len(),
            rule.exactness(),
            (q - sphere_monomial_mean(&a)).abs()
        );
    }

    // Something not polynomial: the error estimate against the half-level rule.
    let fine = sphere_rule(3, 16)?;
    let (v, err) = integrate_with_error(&fine.coarse()?, &fine, |f| Ok((3.0 * f.x()[2]).exp()))?;
    let exact = (3f64.sinh()) / 3.0;
    println!("⨍ e^(3 x_3) = {v:.15} (estimate {err:.1e}, true error {:.1e})", (v - exact).abs());

    let ball = ball_rule(4, 6)?;
    let r2 = integrate_ball(&ball, 1, |y| Ok(vec![y.norm_squared()]))?[0];
    println!("⨍_B |y|^2 = {r2:.15} (n/(n+2) = {:.15})", 4.0 / 6.0);

    let disc = disc_rule(&DVector::from_vec(vec![40.0, 0.0, 0.0]), 1.0, 10)?;
    let vol: f64 = disc.weights().iter().sum();
    println!("disc volume {vol:.15} vs {:.15}", unit_ball_volume(3));

    let dir = std::env::temp_dir().join("conformal-rule-cache");
    let cache = RuleCache::new(&dir);
    let r = cache.sphere(5, 10)?;
    let again = cache.sphere(5, 10)?;
    println!("cached rule: {} nodes, identical on reload: {}", r.len(), r.weights() == again.weights());
    Ok(())
}

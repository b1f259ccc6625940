//! Center a map by a Möbius reparametrization, then fit the nearest Möbius
//! map in the (n-1)-energy.
//!
//! cargo run --release --example nearest_mobius

use std::sync::Arc;

use conformal_rigidity::field::{normalized_linear_field, ComposedField, SphereField};
use conformal_rigidity::fit::{center, composed_mean, fit_mobius, recentered};
use conformal_rigidity::functionals::{deficit, linear_part_dist2};
use conformal_rigidity::quadrature::sphere_rule;
use conformal_rigidity::sphere::{MobiusElement, SpherePoint};
use nalgebra::{DMatrix, DVector};

fn main() -> conformal_rigidity::error::Result<()> {
    let n = 4;
    let rule = sphere_rule(n, 16)?;
    let a = DMatrix::from_diagonal(&DVector::from_vec(vec![1.1, 1.0, 1.0, 1.0]));
    let xi = SpherePoint::from_slice(&[0.0, 0.6, 0.0, 0.8])?;
    let u: Arc<dyn SphereField> = Arc::new(ComposedField::new(
        Arc::new(normalized_linear_field(a)?),
        MobiusElement::dilation(xi, 2.0)?,
    )?);

    println!("mean before centering: {:.3e}", composed_mean(&*u, &rule, &MobiusElement::identity(n)?)?.norm());
    let c = center(&*u, &rule, 1e-10)?;
    println!("centering element: lambda = {:.6}, residual {:.2e}", c.element.lambda(), c.residual);

    let v = recentered(u.clone(), &c.element)?;
    let (d0, d1) = (deficit(&*u, &rule)?, deficit(&v, &rule)?);
    println!("deficit before {:.10e}, after {:.10e}", d0.deficit, d1.deficit);

    let fit = fit_mobius(&v, &rule, None)?;
    println!(
        "fit: objective {:.6e} after {} iterations (converged: {}, |grad| {:.1e})",
        fit.objective, fit.iterations, fit.converged, fit.gradient_norm
    );
    println!("dist²(∇u_h(0), SO(n)) = {:.6e}", linear_part_dist2(&v, &rule)?);
    println!("ratios: {:.4} {:.4}", fit.objective / d1.deficit, linear_part_dist2(&v, &rule)? / d1.deficit);
    Ok(())
}

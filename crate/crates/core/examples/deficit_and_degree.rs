//! Deficit, degree and the Wente chain for a handful of maps.
//!
//! cargo run --release --example deficit_and_degree

use std::sync::Arc;

use conformal_rigidity::field::{
    identity_field, mobius_field, normalized_linear_field, reflection_field, ComposedField, SphereBump, SphereField,
};
use conformal_rigidity::functionals::{deficit, max_conformality_residual, wente_check};
use conformal_rigidity::quadrature::sphere_rule;
use conformal_rigidity::sphere::{MobiusElement, SpherePoint};
use nalgebra::{DMatrix, DVector};

fn main() -> conformal_rigidity::error::Result<()> {
    let n = 3;
    let rule = sphere_rule(n, 24)?;
    let xi = SpherePoint::from_slice(&[0.6, 0.0, 0.8])?;
    let stretched = normalized_linear_field(DMatrix::from_diagonal(&DVector::from_vec(vec![1.2, 1.0, 1.0])))?;
    let maps: Vec<(&str, Arc<dyn SphereField>)> = vec![
        ("identity", Arc::new(identity_field(n)?)),
        ("reflection", Arc::new(reflection_field(n)?)),
        ("dilation", Arc::new(mobius_field(MobiusElement::dilation(xi.clone(), 0.5)?))),
        ("stretch", Arc::new(stretched.clone())),
        (
            "stretch∘dilation",
            Arc::new(ComposedField::new(Arc::new(stretched), MobiusElement::dilation(xi.clone(), 0.5)?)?),
        ),
        (
            "bump",
            Arc::new(SphereBump::new(xi, 0.5, 0.2, DVector::from_vec(vec![0.0, 1.0, 0.0]))?),
        ),
    ];
    println!("{:<18} {:>12} {:>12} {:>9} {:>12}", "map", "deficit", "degree", "error", "max conf.");
    for (name, u) in &maps {
        let d = deficit(&**u, &rule)?;
        let c = max_conformality_residual(&**u, &rule)?;
        println!("{name:<18} {:>12.3e} {:>12.8} {:>9.1e} {:>12.3e}", d.deficit, d.degree, d.quadrature_error, c);
    }

    let w = wente_check(&*maps[3].1, &rule)?;
    println!("stretch: energy {:.8} >= area {:.8} >= volume^(2/3) {:.8}", w.lhs, w.mid, w.rhs);
    Ok(())
}

//! Möbius maps of the sphere: build, compose, push points around, and check
//! that the Jacobian is a scaled isometry on the tangent space.
//!
//! cargo run --release --example mobius_geometry

use conformal_rigidity::sphere::{frame_at, inverse_stereo, stereo, MobiusElement, SpherePoint};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> conformal_rigidity::error::Result<()> {
    let n = 4;
    let mut rng = ChaCha8Rng::seed_from_u64(11);

    let xi = SpherePoint::from_slice(&[0.0, 0.0, 0.6, 0.8])?;
    let dil = MobiusElement::dilation(xi.clone(), 0.25)?;
    let g = MobiusElement::random(&mut rng, n, 0.5, 2.0)?;
    let h = g.compose(&dil)?;
    println!("g∘φ: lambda = {:.6}, xi = {:?}", h.lambda(), h.xi().coords().as_slice());

    // Stereographic chart from ξ and back.
    let x = SpherePoint::random(&mut rng, n)?;
    let y = stereo(&xi, &x)?;
    let back = inverse_stereo(&xi, &y)?;
    println!("round trip error {:.2e}", (back.coords() - x.coords()).amax());

    // Jacobian at x: J^T J = s² I on the tangent space.
    let f = frame_at(&x)?;
    let j = h.jacobian(&f)?;
    let g2 = j.transpose() * &j;
    println!("J^T J =\n{g2:.6}");

    // The Lorentz picture: composition is a matrix product.
    let l = h.to_lorentz();
    let l2 = g.to_lorentz() * dil.to_lorentz();
    println!("|L(g∘φ) - L(g)L(φ)| = {:.2e}", (l - l2).amax());

    // JSON form, as used by map specs.
    println!("{}", serde_json::to_string(&h).unwrap());
    Ok(())
}

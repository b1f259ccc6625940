use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// `A = R₀ U` with `R₀ ∈ SO(n)` and `U` symmetric positive definite.
#[derive(Debug, Clone)]
pub struct PolarDecomposition {
    pub r0: DMatrix<f64>,
    pub u: DMatrix<f64>,
    /// Eigenvalues `α_i` of `U` (the singular values of `A`), ascending.
    pub singular_values: DVector<f64>,
    /// `λ_i = α_i − 1`.
    pub singular_shifts: DVector<f64>,
    /// `Λ = |U − I| = dist(A; SO(n))`.
    pub lambda: f64,
}

/// Orthogonal polar factor by scaled Newton iteration
/// `X ← (γX + γ⁻¹X⁻ᵗ)/2`.
fn newton_polar(a: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let mut x = a.clone();
    for _ in 0..100 {
        let inv = x
            .clone()
            .try_inverse()
            .ok_or_else(|| Error::SingularMatrix(x.determinant()))?;
        let gamma = (inv.norm() / x.norm()).sqrt();
        let next = (&x * gamma + inv.transpose() / gamma) * 0.5;
        let delta = (&next - &x).norm();
        x = next;
        if delta <= 1e-15 * x.norm() {
            break;
        }
    }
    Ok(x)
}

/// Polar decomposition of an orientation-preserving matrix.
pub fn polar(a: &DMatrix<f64>) -> Result<PolarDecomposition> {
    let det = a.determinant();
    if !(det > 0.0) {
        return Err(Error::NotOrientationPreserving(det));
    }
    let r0 = newton_polar(a)?;
    let u = r0.transpose() * a;
    let u = (&u + u.transpose()) * 0.5;
    let mut alphas: Vec<f64> = u.clone().symmetric_eigen().eigenvalues.iter().copied().collect();
    alphas.sort_by(f64::total_cmp);
    let singular_values = DVector::from_vec(alphas);
    let singular_shifts = singular_values.add_scalar(-1.0);
    let lambda = singular_shifts.norm();
    Ok(PolarDecomposition {
        r0,
        u,
        singular_values,
        singular_shifts,
        lambda,
    })
}

/// The rotation closest to `a` in Frobenius norm, for `det a > 0`.
pub fn nearest_rotation(a: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let det = a.determinant();
    if !(det > 0.0) {
        return Err(Error::NotOrientationPreserving(det));
    }
    newton_polar(a)
}

/// `dist²(A; SO(n))` for any square `A`, through the SVD (the sign of the
/// smallest singular value flips when `det A < 0`).
pub fn dist2_to_so(a: &DMatrix<f64>) -> f64 {
    let svd = a.clone().svd(false, false);
    let mut s: Vec<f64> = svd.singular_values.iter().copied().collect();
    s.sort_by(f64::total_cmp);
    if a.determinant() < 0.0 {
        s[0] = -s[0];
    }
    s.iter().map(|v| (v - 1.0).powi(2)).sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{check_rotation, random_rotation};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn identity_and_diagonal() {
        let p = polar(&DMatrix::identity(4, 4)).unwrap();
        assert!((p.r0 - DMatrix::identity(4, 4)).amax() < 1e-15);
        assert!(p.lambda < 1e-15);
        let d = DMatrix::from_diagonal(&DVector::from_vec(vec![2.0, 1.0, 1.0, 1.0]));
        let p = polar(&d).unwrap();
        assert!((p.lambda - 1.0).abs() < 1e-14);
        assert!((p.r0 - DMatrix::identity(4, 4)).amax() < 1e-14);
    }

    #[test]
    fn rejects_reflections() {
        let d = DMatrix::from_diagonal(&DVector::from_vec(vec![-1.0, 1.0, 1.0]));
        assert!(matches!(polar(&d), Err(Error::NotOrientationPreserving(_))));
    }

    #[test]
    fn matches_svd_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for n in 3..=6 {
            for _ in 0..20 {
                let mut a = DMatrix::from_fn(n, n, |_, _| rng.random_range(-1.0..1.0));
                if a.determinant() < 0.0 {
                    a.swap_columns(0, 1);
                }
                let p = polar(&a).unwrap();
                check_rotation(&p.r0, 1e-12).unwrap();
                assert!((&p.r0 * &p.u - &a).amax() < 1e-10);
                assert!((p.u.transpose() - &p.u).amax() < 1e-14);
                assert!(p.singular_values.iter().all(|&s| s > 0.0));
                let svd = a.clone().svd(false, false);
                let oracle: f64 = svd.singular_values.iter().map(|s| (s - 1.0).powi(2)).sum();
                assert!((p.lambda.powi(2) - oracle).abs() < 1e-10);
                assert!((p.lambda.powi(2) - (&p.u - DMatrix::identity(n, n)).norm_squared()).abs() < 1e-10);
                assert!((dist2_to_so(&a) - oracle).abs() < 1e-10);
                assert!(p.lambda.powi(2) <= (&a - DMatrix::identity(n, n)).norm_squared() + 1e-12);
            }
        }
    }

    #[test]
    fn polar_factor_is_nearest_rotation() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let n = 4;
        let mut a = DMatrix::from_fn(n, n, |_, _| rng.random_range(-1.0..1.0));
        if a.determinant() < 0.0 {
            a.swap_columns(0, 1);
        }
        let p = polar(&a).unwrap();
        let best = (&a - &p.r0).norm();
        for _ in 0..100 {
            let q = random_rotation(&mut rng, n);
            assert!(best <= (&a - q).norm() + 1e-12);
        }
    }
}

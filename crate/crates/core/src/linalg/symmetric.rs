use nalgebra::DMatrix;

/// Coefficients `c_0 = 1, c_1, …, c_n` of `det(tI − M) = Σ c_k t^{n-k}`,
/// by the Faddeev–LeVerrier recursion.
pub fn char_poly(m: &DMatrix<f64>) -> Vec<f64> {
    let n = m.nrows();
    let mut c = vec![0.0; n + 1];
    c[0] = 1.0;
    let mut mk = DMatrix::<f64>::zeros(n, n);
    for k in 1..=n {
        // M_k = M M_{k-1} + c_{k-1} I
        mk = m * &mk;
        for i in 0..n {
            mk[(i, i)] += c[k - 1];
        }
        c[k] = -(m * &mk).trace() / k as f64;
    }
    c
}

/// `σ_0(M) = 1, σ_1(M), …, σ_n(M)`.
pub fn sigma_all(m: &DMatrix<f64>) -> Vec<f64> {
    char_poly(m)
        .into_iter()
        .enumerate()
        .map(|(k, c)| if k % 2 == 0 { c } else { -c })
        .collect()
}

/// `σ_k(M)`: the `k`-th elementary symmetric polynomial of the eigenvalues.
pub fn sigma(k: usize, m: &DMatrix<f64>) -> f64 {
    assert!(k <= m.nrows(), "k = {k} exceeds matrix size");
    sigma_all(m)[k]
}

/// Entrywise gradient `∂σ_k/∂M_ij`:
/// `Σ_{j=0}^{k-1} (−1)^j σ_{k-1-j}(M) (Mᵗ)^j`.
///
/// `sigma_grad(1, M) = I`, `sigma_grad(n, M) = cof(M)`, and
/// `sigma_grad(k, M) : M = k σ_k(M)`.
pub fn sigma_grad(k: usize, m: &DMatrix<f64>) -> DMatrix<f64> {
    let n = m.nrows();
    assert!(k >= 1 && k <= n, "k = {k} out of range");
    let s = sigma_all(m);
    let mt = m.transpose();
    let mut pow = DMatrix::identity(n, n);
    let mut g = DMatrix::zeros(n, n);
    for j in 0..k {
        let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
        g += &pow * (sign * s[k - 1 - j]);
        pow = &pow * &mt;
    }
    g
}

/// `|det(I + M) − 1 − Σ_k σ_k(M)|`, with the determinant from LU.
pub fn det_expansion_check(m: &DMatrix<f64>) -> f64 {
    let n = m.nrows();
    let lhs = (DMatrix::identity(n, n) + m).determinant();
    let rhs: f64 = sigma_all(m).iter().sum();
    (lhs - rhs).abs()
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::DVector;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random(rng: &mut ChaCha8Rng, n: usize, scale: f64) -> DMatrix<f64> {
        DMatrix::from_fn(n, n, |_, _| rng.random_range(-scale..scale))
    }

    /// Brute force over all k-subsets of the eigenvalues.
    fn sigma_from_eigs(eigs: &[f64], k: usize) -> f64 {
        let n = eigs.len();
        (0u32..(1 << n))
            .filter(|mask| mask.count_ones() as usize == k)
            .map(|mask| (0..n).filter(|i| mask & (1 << i) != 0).map(|i| eigs[i]).product::<f64>())
            .sum()
    }

    #[test]
    fn diag_values() {
        let d = DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, 2.0, 3.0]));
        assert_eq!(sigma(2, &d), 11.0);
        assert_eq!(sigma(1, &d), 6.0);
        assert_eq!(sigma(3, &d), 6.0);
        let g = sigma_grad(2, &d);
        let want = DMatrix::from_diagonal(&DVector::from_vec(vec![5.0, 4.0, 3.0]));
        assert!((g - want).amax() < 1e-14);
    }

    #[test]
    fn first_gradient_is_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for n in 3..=6 {
            let m = random(&mut rng, n, 2.0);
            assert!((sigma_grad(1, &m) - DMatrix::identity(n, n)).amax() == 0.0);
        }
    }

    #[test]
    fn last_gradient_is_cofactor() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for n in 3..=6 {
            let m = random(&mut rng, n, 1.0);
            let cof = m.clone().try_inverse().unwrap().transpose() * m.determinant();
            assert!((sigma_grad(n, &m) - cof).amax() < 1e-10);
        }
    }

    #[test]
    fn euler_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for n in 3..=6 {
            for _ in 0..10 {
                let m = random(&mut rng, n, 1.5);
                for k in 1..=n {
                    let lhs = sigma_grad(k, &m).dot(&m);
                    let rhs = k as f64 * sigma(k, &m);
                    assert!((lhs - rhs).abs() <= 1e-10 * (1.0 + rhs.abs()), "n={n} k={k}");
                }
            }
        }
    }

    #[test]
    fn matches_eigenvalue_products_on_symmetric() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        for n in 3..=6 {
            let a = random(&mut rng, n, 1.0);
            let s = &a + a.transpose();
            let eigs: Vec<f64> = s.clone().symmetric_eigen().eigenvalues.iter().copied().collect();
            for k in 1..=n {
                assert!((sigma(k, &s) - sigma_from_eigs(&eigs, k)).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let h = 1e-5;
        for n in 3..=5 {
            let m = random(&mut rng, n, 1.0);
            for k in 1..=n {
                let g = sigma_grad(k, &m);
                for i in 0..n {
                    for j in 0..n {
                        let mut p = m.clone();
                        p[(i, j)] += h;
                        let mut q = m.clone();
                        q[(i, j)] -= h;
                        let fd = (sigma(k, &p) - sigma(k, &q)) / (2.0 * h);
                        assert!((fd - g[(i, j)]).abs() < 1e-6);
                    }
                }
            }
        }
    }

    #[test]
    fn det_expansion() {
        assert_eq!(det_expansion_check(&DMatrix::zeros(4, 4)), 0.0);
        let id = DMatrix::<f64>::identity(3, 3);
        assert_eq!(sigma_all(&id), vec![1.0, 3.0, 3.0, 1.0]);
        assert!(det_expansion_check(&id) < 1e-14);
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for n in 3..=6 {
            for _ in 0..20 {
                let m = random(&mut rng, n, 10.0 / (n as f64));
                let scale = (DMatrix::identity(n, n) + &m).determinant().abs().max(1.0);
                assert!(det_expansion_check(&m) <= 1e-10 * scale);
            }
        }
    }
}

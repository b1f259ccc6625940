//! Band-limited fields: sums of homogeneous harmonic polynomial maps
//! `R^n → R^n`, each of which is its own harmonic extension into the ball.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;

use super::{FieldSample, HarmonicExtension, SphereField};
use crate::error::{check_dim, Error, Result};
use crate::sphere::Frame;

/// Exponent vectors of total degree `k` in `n` variables, lexicographic.
pub(crate) fn monomials(n: usize, k: usize) -> Vec<Vec<u32>> {
    fn rec(n: usize, k: u32, prefix: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
        if prefix.len() == n - 1 {
            prefix.push(k);
            out.push(prefix.clone());
            prefix.pop();
            return;
        }
        for a in (0..=k).rev() {
            prefix.push(a);
            rec(n, k - a, prefix, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    rec(n, k as u32, &mut Vec::with_capacity(n), &mut out);
    out
}

/// Matrix of `Δ` from degree-`k` to degree-`(k−2)` monomial coefficients.
fn laplacian_matrix(n: usize, k: usize) -> DMatrix<f64> {
    let cols = monomials(n, k);
    if k < 2 {
        return DMatrix::zeros(0, cols.len());
    }
    let rows = monomials(n, k - 2);
    let mut l = DMatrix::zeros(rows.len(), cols.len());
    for (c, a) in cols.iter().enumerate() {
        for i in 0..n {
            if a[i] >= 2 {
                let mut b = a.clone();
                b[i] -= 2;
                let r = rows.iter().position(|m| *m == b).expect("monomial present");
                l[(r, c)] += (a[i] * (a[i] - 1)) as f64;
            }
        }
    }
    l
}

/// `⨍_{S^{n-1}} x^a = Π (a_i − 1)!! / Π_{j<|a|/2} (n + 2j)`, zero if any `a_i` is odd.
pub fn sphere_monomial_mean(a: &[u32]) -> f64 {
    if a.iter().any(|k| k % 2 == 1) {
        return 0.0;
    }
    let n = a.len() as f64;
    let mut num = 1.0;
    for &k in a {
        let mut j = k as i64 - 1;
        while j > 1 {
            num *= j as f64;
            j -= 2;
        }
    }
    let half: u32 = a.iter().sum::<u32>() / 2;
    let den: f64 = (0..half).map(|j| n + 2.0 * j as f64).product();
    num / den
}

/// `P(y) = C m(y)` with `m` the degree-`k` monomials.
#[derive(Debug, Clone)]
pub struct HomogeneousPart {
    degree: usize,
    monomials: Vec<Vec<u32>>,
    /// `n × (number of monomials)`.
    coeffs: DMatrix<f64>,
}

impl HomogeneousPart {
    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn coeffs(&self) -> &DMatrix<f64> {
        &self.coeffs
    }

    pub fn monomials(&self) -> &[Vec<u32>] {
        &self.monomials
    }

    fn eval(&self, y: &DVector<f64>) -> (DVector<f64>, DMatrix<f64>) {
        let n = y.len();
        let m = self.monomials.len();
        let mut vals = DVector::zeros(m);
        let mut grads = DMatrix::zeros(m, n);
        for (c, a) in self.monomials.iter().enumerate() {
            let pw: Vec<f64> = (0..n).map(|i| y[i].powi(a[i] as i32)).collect();
            vals[c] = pw.iter().product();
            for j in 0..n {
                if a[j] == 0 {
                    continue;
                }
                let mut g = a[j] as f64 * y[j].powi(a[j] as i32 - 1);
                for (i, p) in pw.iter().enumerate() {
                    if i != j {
                        g *= p;
                    }
                }
                grads[(c, j)] = g;
            }
        }
        (&self.coeffs * vals, &self.coeffs * grads)
    }

    /// `⨍_{S^{n-1}} |P|²` from exact sphere moments.
    pub fn sphere_mean_square(&self) -> f64 {
        let n = self.coeffs.nrows();
        let m = self.monomials.len();
        let mut total = 0.0;
        for p in 0..m {
            for q in 0..m {
                let dot: f64 = (0..n).map(|i| self.coeffs[(i, p)] * self.coeffs[(i, q)]).sum();
                if dot == 0.0 {
                    continue;
                }
                let e: Vec<u32> = self.monomials[p].iter().zip(&self.monomials[q]).map(|(a, b)| a + b).collect();
                total += dot * sphere_monomial_mean(&e);
            }
        }
        total
    }

    /// Largest coefficient of `ΔP`.
    pub fn laplacian_residual(&self) -> f64 {
        let l = laplacian_matrix(self.coeffs.nrows(), self.degree);
        if l.nrows() == 0 {
            return 0.0;
        }
        (&self.coeffs * l.transpose()).amax()
    }
}

/// A finite sum of homogeneous harmonic polynomial maps.
#[derive(Debug, Clone)]
pub struct HarmonicField {
    n: usize,
    parts: Vec<HomogeneousPart>,
}

impl HarmonicField {
    /// Random field with one part per entry of `degrees`, each normalized to
    /// `⨍|P_k|² = scale²`. Harmonicity comes from projecting Gaussian
    /// coefficients onto the kernel of `Δ`.
    pub fn random<G: Rng + ?Sized>(rng: &mut G, n: usize, degrees: &[usize], scale: f64) -> Result<Self> {
        check_dim(n)?;
        let mut parts = Vec::new();
        for &k in degrees {
            if k > 6 {
                return Err(Error::InvalidArgument(format!("harmonic degree {k} too large")));
            }
            let mons = monomials(n, k);
            let mut coeffs = DMatrix::from_fn(n, mons.len(), |_, _| rng.sample::<f64, _>(StandardNormal));
            let l = laplacian_matrix(n, k);
            if l.nrows() > 0 {
                let llt = &l * l.transpose();
                let chol = llt.cholesky().ok_or(Error::SingularMatrix(0.0))?;
                for i in 0..n {
                    let c = coeffs.row(i).transpose();
                    let lam = chol.solve(&(&l * &c));
                    let proj = c - l.transpose() * lam;
                    coeffs.set_row(i, &proj.transpose());
                }
            }
            let mut part = HomogeneousPart {
                degree: k,
                monomials: mons,
                coeffs,
            };
            let ms = part.sphere_mean_square();
            part.coeffs *= scale / ms.sqrt();
            parts.push(part);
        }
        Ok(HarmonicField { n, parts })
    }

    /// `Bx + c` as a band-limited field.
    pub fn linear(b: &DMatrix<f64>, c: &DVector<f64>) -> Result<Self> {
        let n = b.nrows();
        check_dim(n)?;
        if b.ncols() != n || c.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: c.len(),
            });
        }
        let m1 = monomials(n, 1);
        // degree-1 monomials come out as e_0, e_1, … in lexicographic order
        let mut c1 = DMatrix::zeros(n, n);
        for (col, a) in m1.iter().enumerate() {
            let j = a.iter().position(|&e| e == 1).unwrap();
            c1.set_column(col, &b.column(j));
        }
        Ok(HarmonicField {
            n,
            parts: vec![
                HomogeneousPart {
                    degree: 0,
                    monomials: monomials(n, 0),
                    coeffs: DMatrix::from_column_slice(n, 1, c.as_slice()),
                },
                HomogeneousPart {
                    degree: 1,
                    monomials: m1,
                    coeffs: c1,
                },
            ],
        })
    }

    pub fn parts(&self) -> &[HomogeneousPart] {
        &self.parts
    }

    /// The sub-field made of the parts of degree `k`.
    pub fn part_field(&self, k: usize) -> HarmonicField {
        HarmonicField {
            n: self.n,
            parts: self.parts.iter().filter(|p| p.degree == k).cloned().collect(),
        }
    }

    pub fn scaled(&self, s: f64) -> HarmonicField {
        let mut out = self.clone();
        for p in &mut out.parts {
            p.coeffs *= s;
        }
        out
    }

    /// Merges parts of equal degree.
    fn by_degree(&self) -> Vec<HomogeneousPart> {
        let mut out: Vec<HomogeneousPart> = Vec::new();
        for p in &self.parts {
            match out.iter_mut().find(|q| q.degree == p.degree) {
                Some(q) => q.coeffs += &p.coeffs,
                None => out.push(p.clone()),
            }
        }
        out
    }

    /// `(Σ_k ⨍|P_k|², Σ_k k(k+n−2) ⨍|P_k|²)`: the Parseval predictions of
    /// `⨍|u|²` and `⨍|∇_T u|²`.
    pub fn parseval(&self) -> (f64, f64) {
        let n = self.n as f64;
        self.by_degree().iter().fold((0.0, 0.0), |(a, b), p| {
            let m = p.sphere_mean_square();
            let k = p.degree as f64;
            (a + m, b + k * (k + n - 2.0) * m)
        })
    }

    /// Closed form of `⨍_{B₁} |∇u_h|² = Σ_k n k ⨍|P_k|²`.
    pub fn ball_energy(&self) -> f64 {
        let n = self.n as f64;
        self.by_degree()
            .iter()
            .map(|p| n * p.degree as f64 * p.sphere_mean_square())
            .sum()
    }

    pub fn laplacian_residual(&self) -> f64 {
        self.parts.iter().map(HomogeneousPart::laplacian_residual).fold(0.0, f64::max)
    }

    fn eval_full(&self, y: &DVector<f64>) -> FieldSample {
        let mut value = DVector::zeros(self.n);
        let mut jac = DMatrix::zeros(self.n, self.n);
        for p in &self.parts {
            let (v, g) = p.eval(y);
            value += v;
            jac += g;
        }
        FieldSample { value, jac }
    }
}

impl SphereField for HarmonicField {
    fn dim(&self) -> usize {
        self.n
    }
    fn sphere_valued(&self) -> bool {
        false
    }
    fn eval(&self, frame: &Frame) -> Result<FieldSample> {
        if frame.dim() != self.n {
            return Err(Error::DimensionMismatch {
                expected: self.n,
                got: frame.dim(),
            });
        }
        let s = self.eval_full(frame.x());
        Ok(FieldSample {
            value: s.value,
            jac: s.jac * frame.p_t(),
        })
    }
    fn harmonic_extension(&self) -> Option<&dyn HarmonicExtension> {
        Some(self)
    }
}

impl HarmonicExtension for HarmonicField {
    fn eval_ball(&self, y: &DVector<f64>) -> Result<FieldSample> {
        if y.len() != self.n {
            return Err(Error::DimensionMismatch {
                expected: self.n,
                got: y.len(),
            });
        }
        Ok(self.eval_full(y))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadrature::{integrate_many, sphere_rule};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn binom(a: usize, b: usize) -> usize {
        (0..b).fold(1, |acc, i| acc * (a - i) / (i + 1))
    }

    #[test]
    fn monomial_counts() {
        for n in 3..=6 {
            for k in 0..=4 {
                assert_eq!(monomials(n, k).len(), binom(n + k - 1, k));
            }
        }
        assert_eq!(monomials(3, 1), vec![vec![1, 0, 0], vec![0, 1, 0], vec![0, 0, 1]]);
    }

    #[test]
    fn closed_form_moments() {
        assert!((sphere_monomial_mean(&[2, 2, 0]) - 1.0 / 15.0).abs() < 1e-16);
        assert!((sphere_monomial_mean(&[2, 0, 0, 0]) - 0.25).abs() < 1e-16);
        assert!((sphere_monomial_mean(&[4, 0, 0]) - 0.2).abs() < 1e-16);
        assert_eq!(sphere_monomial_mean(&[1, 1, 0]), 0.0);
        // against quadrature
        let rule = sphere_rule(4, 6).unwrap();
        let a = [2u32, 4, 0, 2];
        let v = integrate_many(&rule, 1, |f| {
            Ok(vec![(0..4).map(|i| f.x()[i].powi(a[i] as i32)).product()])
        })
        .unwrap()[0];
        assert!((v - sphere_monomial_mean(&a)).abs() < 1e-14);
    }

    #[test]
    fn random_parts_are_harmonic_with_unit_norm() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for n in 3..=6 {
            let h = HarmonicField::random(&mut rng, n, &[0, 1, 2, 3], 1.0).unwrap();
            assert!(h.laplacian_residual() < 1e-12);
            for p in h.parts() {
                assert!((p.sphere_mean_square() - 1.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn parseval_against_quadrature() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for n in 3..=5 {
            let h = HarmonicField::random(&mut rng, n, &[0, 1, 2, 3], 0.7).unwrap();
            let rule = sphere_rule(n, 5).unwrap();
            let q = integrate_many(&rule, 2, |f| {
                let s = h.eval(f)?;
                Ok(vec![s.value.norm_squared(), s.jac.norm_squared()])
            })
            .unwrap();
            let (a, b) = h.parseval();
            assert!((q[0] - a).abs() < 1e-12);
            assert!((q[1] - b).abs() < 1e-11);
        }
    }

    #[test]
    fn linear_constructor() {
        let b = DMatrix::from_fn(3, 3, |i, j| (i * 3 + j) as f64);
        let c = DVector::from_vec(vec![1.0, 2.0, 3.0]);
        let h = HarmonicField::linear(&b, &c).unwrap();
        let y = DVector::from_vec(vec![0.1, -0.4, 0.7]);
        let s = h.eval_ball(&y).unwrap();
        assert!((s.value - (&b * &y + &c)).amax() < 1e-15);
        assert!((s.jac - &b).amax() < 1e-15);
    }
}

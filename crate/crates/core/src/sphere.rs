//! Points, tangent frames, stereographic charts and the orientation-preserving
//! Möbius group of the unit sphere `S^{n-1} ⊂ R^n`.
//!
//! A Möbius element is stored as `(R, ξ, λ)` and acts by `x ↦ R φ_{ξ,λ}(x)`,
//! where `φ_{ξ,λ}` conjugates the dilation by `λ` of the tangent plane at `ξ`
//! with the stereographic projection from `-ξ`. Composition and inversion go
//! through the isomorphism with `SO⁺(n,1)`: `φ_{ξ,λ}` is the Lorentz boost along
//! `ξ` with rapidity `-ln λ`, and `R` is the spatial rotation block.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};
use crate::linalg;

/// Tolerance on `|x| = 1` for points handed to [`SpherePoint::new`].
pub const UNIT_TOL: f64 = 1e-12;
/// `⟨x, ξ⟩ ≤ -1 + POLE_TOL` is treated as hitting the stereographic pole.
pub const POLE_TOL: f64 = 1e-12;

/// A unit vector in `R^n`, `n ≥ 3`.
#[derive(Debug, Clone, PartialEq)]
pub struct SpherePoint(DVector<f64>);

impl SpherePoint {
    pub fn new(x: DVector<f64>) -> Result<Self> {
        check_dim(x.len())?;
        let norm = x.norm();
        if (norm - 1.0).abs() > UNIT_TOL {
            return Err(Error::NotUnit { norm });
        }
        Ok(Self(x))
    }

    /// Normalizes `v` onto the sphere.
    pub fn normalize(v: DVector<f64>) -> Result<Self> {
        check_dim(v.len())?;
        let norm = v.norm();
        if !(norm > 0.0 && norm.is_finite()) {
            return Err(Error::NotUnit { norm });
        }
        Ok(Self(v / norm))
    }

    pub fn from_slice(x: &[f64]) -> Result<Self> {
        Self::new(DVector::from_column_slice(x))
    }

    /// The `i`-th standard basis vector.
    pub fn basis(n: usize, i: usize) -> Result<Self> {
        let mut v = DVector::zeros(n);
        v[i] = 1.0;
        Self::new(v)
    }

    pub fn random<R: Rng + ?Sized>(rng: &mut R, n: usize) -> Result<Self> {
        let v = DVector::from_fn(n, |_, _| rng.sample::<f64, _>(StandardNormal));
        Self::normalize(v)
    }

    pub(crate) fn new_unchecked(x: DVector<f64>) -> Self {
        Self(x)
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn coords(&self) -> &DVector<f64> {
        &self.0
    }

    pub fn into_inner(self) -> DVector<f64> {
        self.0
    }
}

/// A positively oriented orthonormal frame of `T_x S^{n-1}`.
///
/// The tangent vectors are stored as the columns of `P_T ∈ R^{n×(n-1)}`, so
/// `det[τ_1, …, τ_{n-1}, x] = +1` and `P_T P_Tᵗ = I − x⊗x`.
#[derive(Debug, Clone)]
pub struct Frame {
    base: SpherePoint,
    taus: DMatrix<f64>,
}

impl Frame {
    pub fn base(&self) -> &SpherePoint {
        &self.base
    }

    pub fn x(&self) -> &DVector<f64> {
        &self.base.0
    }

    /// `P_T`: the `n × (n-1)` matrix whose columns are the tangent vectors.
    pub fn p_t(&self) -> &DMatrix<f64> {
        &self.taus
    }

    pub fn dim(&self) -> usize {
        self.base.dim()
    }

    /// Returns the frame with its tangent vectors replaced by `P_T Q` for an
    /// orthogonal `(n-1)×(n-1)` matrix `Q` with `det Q = 1`.
    pub fn rotated(&self, q: &DMatrix<f64>) -> Frame {
        Frame {
            base: self.base.clone(),
            taus: &self.taus * q,
        }
    }

    /// `det[τ_1, …, τ_{n-1}, x]`.
    pub fn orientation(&self) -> f64 {
        let n = self.dim();
        let mut m = DMatrix::zeros(n, n);
        m.view_mut((0, 0), (n, n - 1)).copy_from(&self.taus);
        m.set_column(n - 1, self.x());
        m.determinant()
    }

    /// Max entry of `|[P_T | x]ᵗ[P_T | x] − I|`.
    pub fn orthonormality_residual(&self) -> f64 {
        let n = self.dim();
        let mut m = DMatrix::zeros(n, n);
        m.view_mut((0, 0), (n, n - 1)).copy_from(&self.taus);
        m.set_column(n - 1, self.x());
        (m.transpose() * &m - DMatrix::identity(n, n)).amax()
    }
}

/// Deterministic positively oriented frame at `x`.
///
/// Drops the standard basis vector most aligned with `x`, runs Gram–Schmidt on
/// the remaining ones in index order against `x`, then flips the last tangent
/// vector if the orientation is negative.
pub fn frame_at(x: &SpherePoint) -> Result<Frame> {
    let n = x.dim();
    let xv = x.coords();
    let skip = xv.iamax();
    let mut taus = DMatrix::zeros(n, n - 1);
    for (col, i) in (0..n).filter(|&i| i != skip).enumerate() {
        let mut v = DVector::zeros(n);
        v[i] = 1.0;
        // two passes of modified Gram-Schmidt
        for _ in 0..2 {
            let c = v.dot(xv);
            v.axpy(-c, xv, 1.0);
            for j in 0..col {
                let t = taus.column(j);
                let c = v.dot(&t);
                v.axpy(-c, &t, 1.0);
            }
        }
        let norm = v.norm();
        if norm < 1e-8 {
            return Err(Error::DegenerateFrame(i));
        }
        taus.set_column(col, &(v / norm));
    }
    let mut frame = Frame {
        base: x.clone(),
        taus,
    };
    if frame.orientation() < 0.0 {
        let mut last = frame.taus.column_mut(n - 2);
        last.neg_mut();
    }
    Ok(frame)
}

fn check_same_dim(a: usize, b: usize) -> Result<()> {
    if a == b {
        Ok(())
    } else {
        Err(Error::DimensionMismatch {
            expected: a,
            got: b,
        })
    }
}

/// Stereographic projection from `-ξ` onto `T_ξ S^{n-1}`:
/// `σ_ξ(x) = -(x − ⟨x,ξ⟩ξ)/(1 + ⟨x,ξ⟩)`.
pub fn stereo(xi: &SpherePoint, x: &SpherePoint) -> Result<DVector<f64>> {
    check_same_dim(xi.dim(), x.dim())?;
    let s = x.coords().dot(xi.coords());
    if s <= -1.0 + POLE_TOL {
        return Err(Error::PoleSingularity(s));
    }
    let t = x.coords() - xi.coords() * s;
    Ok(t * (-1.0 / (1.0 + s)))
}

/// Inverse of [`stereo`]: `y ↦ -2y/(1+|y|²) + (1-|y|²)/(1+|y|²) ξ` for `y ⊥ ξ`.
pub fn inverse_stereo(xi: &SpherePoint, y: &DVector<f64>) -> Result<SpherePoint> {
    check_same_dim(xi.dim(), y.len())?;
    let y2 = y.norm_squared();
    let d = 1.0 + y2;
    let v = y * (-2.0 / d) + xi.coords() * ((1.0 - y2) / d);
    Ok(SpherePoint::new_unchecked(v))
}

/// `Rφ_{ξ,λ}` with `R ∈ SO(n)`, `ξ ∈ S^{n-1}` and `λ > 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct MobiusElement {
    r: DMatrix<f64>,
    xi: SpherePoint,
    lambda: f64,
}

impl MobiusElement {
    pub fn new(r: DMatrix<f64>, xi: SpherePoint, lambda: f64) -> Result<Self> {
        let n = xi.dim();
        if r.nrows() != n || r.ncols() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: r.nrows(),
            });
        }
        linalg::check_rotation(&r, 1e-10)?;
        if !(lambda > 0.0 && lambda.is_finite()) {
            return Err(Error::InvalidLambda(lambda));
        }
        Ok(Self { r, xi, lambda })
    }

    pub fn identity(n: usize) -> Result<Self> {
        check_dim(n)?;
        Ok(Self {
            r: DMatrix::identity(n, n),
            xi: SpherePoint::basis(n, n - 1)?,
            lambda: 1.0,
        })
    }

    /// The pure dilation `φ_{ξ,λ}`.
    pub fn dilation(xi: SpherePoint, lambda: f64) -> Result<Self> {
        let n = xi.dim();
        Self::new(DMatrix::identity(n, n), xi, lambda)
    }

    /// The rotation `x ↦ Rx`.
    pub fn rotation(r: DMatrix<f64>) -> Result<Self> {
        let n = r.nrows();
        check_dim(n)?;
        Self::new(r, SpherePoint::basis(n, n - 1)?, 1.0)
    }

    /// Random element with Haar rotation, uniform `ξ`, and `ln λ` uniform in
    /// `[ln lo, ln hi]`.
    pub fn random<G: Rng + ?Sized>(rng: &mut G, n: usize, lo: f64, hi: f64) -> Result<Self> {
        let r = linalg::random_rotation(rng, n);
        let xi = SpherePoint::random(rng, n)?;
        let lambda = (rng.random_range(lo.ln()..=hi.ln())).exp();
        Self::new(r, xi, lambda)
    }

    pub fn dim(&self) -> usize {
        self.xi.dim()
    }

    pub fn r(&self) -> &DMatrix<f64> {
        &self.r
    }

    pub fn xi(&self) -> &SpherePoint {
        &self.xi
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    /// `φ_{ξ,λ}(x)` without the rotation, together with the denominator.
    fn dilate(&self, x: &DVector<f64>) -> (DVector<f64>, f64) {
        let xi = self.xi.coords();
        let l = self.lambda;
        let s = x.dot(xi);
        let d = l * l * (1.0 - s) + (1.0 + s);
        let mut num = x - xi * s;
        num *= 2.0 * l;
        num.axpy(-l * l * (1.0 - s) + (1.0 + s), xi, 1.0);
        (num / d, d)
    }

    pub fn apply(&self, x: &SpherePoint) -> Result<SpherePoint> {
        check_same_dim(self.dim(), x.dim())?;
        let (y, _) = self.dilate(x.coords());
        Ok(SpherePoint::new_unchecked(&self.r * y))
    }

    /// Value and analytic tangential Jacobian `∇_T(Rφ_{ξ,λ})` in the frame `f`.
    pub fn value_and_jacobian(&self, f: &Frame) -> Result<(DVector<f64>, DMatrix<f64>)> {
        check_same_dim(self.dim(), f.dim())?;
        let xi = self.xi.coords();
        let l = self.lambda;
        let (phi, d) = self.dilate(f.x());
        let a = f.p_t().transpose() * xi;
        let mut dn = f.p_t() * (2.0 * l);
        dn.ger((1.0 - l) * (1.0 - l), xi, &a, 1.0);
        dn.ger(-(1.0 - l * l), &phi, &a, 1.0);
        let jac = &self.r * (dn / d);
        Ok((&self.r * phi, jac))
    }

    pub fn jacobian(&self, f: &Frame) -> Result<DMatrix<f64>> {
        Ok(self.value_and_jacobian(f)?.1)
    }

    /// `(n+1)×(n+1)` Lorentz matrix acting on `(x, 1)` projectively.
    pub fn to_lorentz(&self) -> DMatrix<f64> {
        let n = self.dim();
        let mut rot = DMatrix::identity(n + 1, n + 1);
        rot.view_mut((0, 0), (n, n)).copy_from(&self.r);
        rot * boost(self.xi.coords(), -self.lambda.ln())
    }

    /// Decomposes a matrix in `SO⁺(n,1)` back into `(R, ξ, λ)`.
    pub fn from_lorentz(l: &DMatrix<f64>) -> Result<Self> {
        let n = l.nrows() - 1;
        check_dim(n)?;
        let v: DVector<f64> = DVector::from_iterator(n, (0..n).map(|j| l[(n, j)]));
        let sinh = v.norm();
        let eta = sinh.asinh();
        let xi = if sinh > 1e-300 {
            SpherePoint::new_unchecked(v / sinh)
        } else {
            SpherePoint::basis(n, n - 1)?
        };
        let binv = boost(xi.coords(), -eta);
        let k = l * binv;
        let r = linalg::nearest_rotation(&k.view((0, 0), (n, n)).into_owned())?;
        Self::new(r, xi, (-eta).exp())
    }

    /// The map `self ∘ other`.
    pub fn compose(&self, other: &MobiusElement) -> Result<Self> {
        check_same_dim(self.dim(), other.dim())?;
        Self::from_lorentz(&(self.to_lorentz() * other.to_lorentz()))
    }

    /// `(Rφ_{ξ,λ})⁻¹ = Rᵗ φ_{Rξ,1/λ}`.
    pub fn inverse(&self) -> Self {
        Self {
            r: self.r.transpose(),
            xi: SpherePoint::new_unchecked(&self.r * self.xi.coords()),
            lambda: 1.0 / self.lambda,
        }
    }

    /// Right-multiplies by `exp` of a Lie-algebra element: `omega` holds the
    /// `n(n-1)/2` upper-triangular entries of a skew rotation generator, `b`
    /// the boost vector. `b = η ξ` corresponds to `φ_{ξ, e^{-η}}`.
    pub fn perturbed(&self, omega: &[f64], b: &[f64]) -> Result<Self> {
        let n = self.dim();
        let g = lie_generator(n, omega, b)?;
        let e = linalg::expm(&g);
        Self::from_lorentz(&(self.to_lorentz() * e))
    }
}

/// Number of Lie-algebra coordinates of `Möb₊(S^{n-1})`.
pub fn group_dim(n: usize) -> usize {
    n * (n - 1) / 2 + n
}

fn lie_generator(n: usize, omega: &[f64], b: &[f64]) -> Result<DMatrix<f64>> {
    if omega.len() != n * (n - 1) / 2 || b.len() != n {
        return Err(Error::InvalidArgument(format!(
            "generator needs {} rotation and {} boost coordinates",
            n * (n - 1) / 2,
            n
        )));
    }
    let mut g = DMatrix::zeros(n + 1, n + 1);
    let mut k = 0;
    for i in 0..n {
        for j in (i + 1)..n {
            g[(i, j)] = omega[k];
            g[(j, i)] = -omega[k];
            k += 1;
        }
    }
    for i in 0..n {
        g[(i, n)] = b[i];
        g[(n, i)] = b[i];
    }
    Ok(g)
}

/// Lorentz boost along the unit vector `xi` with rapidity `eta`.
pub(crate) fn boost(xi: &DVector<f64>, eta: f64) -> DMatrix<f64> {
    let n = xi.len();
    let mut b = DMatrix::identity(n + 1, n + 1);
    let (sh, ch) = (eta.sinh(), eta.cosh());
    {
        let mut sp = b.view_mut((0, 0), (n, n));
        sp.ger(ch - 1.0, xi, xi, 1.0);
    }
    for i in 0..n {
        b[(i, n)] = sh * xi[i];
        b[(n, i)] = sh * xi[i];
    }
    b[(n, n)] = ch;
    b
}

/// Free-function form of [`MobiusElement::apply`].
pub fn mobius_apply(m: &MobiusElement, x: &SpherePoint) -> Result<SpherePoint> {
    m.apply(x)
}

/// Free-function form of [`MobiusElement::jacobian`].
pub fn mobius_jacobian(m: &MobiusElement, f: &Frame) -> Result<DMatrix<f64>> {
    m.jacobian(f)
}

/// JSON shape: `{"R": [[..]..], "xi": [..], "lambda": ..}` with `R` row-major.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MobiusJson {
    #[serde(rename = "R")]
    pub r: Vec<Vec<f64>>,
    pub xi: Vec<f64>,
    pub lambda: f64,
}

impl From<&MobiusElement> for MobiusJson {
    fn from(m: &MobiusElement) -> Self {
        MobiusJson {
            r: linalg::to_rows(&m.r),
            xi: m.xi.coords().iter().copied().collect(),
            lambda: m.lambda,
        }
    }
}

impl TryFrom<MobiusJson> for MobiusElement {
    type Error = Error;

    fn try_from(j: MobiusJson) -> Result<Self> {
        let r = linalg::from_rows(&j.r)?;
        let xi = SpherePoint::normalize(DVector::from_vec(j.xi))?;
        MobiusElement::new(r, xi, j.lambda)
    }
}

impl Serialize for MobiusElement {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        MobiusJson::from(self).serialize(s)
    }
}

impl<'de> Deserialize<'de> for MobiusElement {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let j = MobiusJson::deserialize(d)?;
        MobiusElement::try_from(j).map_err(serde::de::Error::custom)
    }
}

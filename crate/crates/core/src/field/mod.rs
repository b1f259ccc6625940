//! Maps `S^{n-1} → R^n` and `R^{n-1} → R^n` with analytic Jacobians.
//!
//! A [`SphereField`] returns its value and tangential Jacobian `∇_T u = ∇u P_T`
//! in the frame it is handed; a [`PlaneField`] returns the full Jacobian in the
//! flat chart.

mod harmonic;
mod plane;
mod spec;

pub use harmonic::{sphere_monomial_mean, HarmonicField, HomogeneousPart};
pub(crate) use harmonic::monomials;
pub use plane::{
    bump_family_field, cutoff, decay_center, gamma_n, inverse_stereographic_field, pullback_to_sphere,
    push_to_plane, BumpFamily, InverseStereographic, PlanarMobiusElement, PlanarMobiusField, PlaneToSphere,
    SphereToPlane,
};
pub use spec::{load_map_spec, parse_map_spec, AnyField, MapSpec};

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::linalg::check_rotation;
use crate::sphere::{frame_at, Frame, MobiusElement, SpherePoint};

/// Value and Jacobian at one point.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldSample {
    pub value: DVector<f64>,
    /// `n × (n-1)` on the sphere and in the flat chart, `n × n` in the ball.
    pub jac: DMatrix<f64>,
}

/// Exact harmonic extension to the unit ball.
pub trait HarmonicExtension: Send + Sync {
    /// `u_h(y)` and the full gradient `∇u_h(y) ∈ R^{n×n}` for `|y| ≤ 1`.
    fn eval_ball(&self, y: &DVector<f64>) -> Result<FieldSample>;
}

/// A map `u : S^{n-1} → R^n`.
pub trait SphereField: Send + Sync {
    fn dim(&self) -> usize;

    /// Whether `|u| = 1` everywhere.
    fn sphere_valued(&self) -> bool;

    /// `u(x)` and `∇_T u(x)` with respect to the tangent frame `frame`.
    fn eval(&self, frame: &Frame) -> Result<FieldSample>;

    fn harmonic_extension(&self) -> Option<&dyn HarmonicExtension> {
        None
    }
}

impl<T: SphereField + ?Sized> SphereField for Arc<T> {
    fn dim(&self) -> usize {
        (**self).dim()
    }
    fn sphere_valued(&self) -> bool {
        (**self).sphere_valued()
    }
    fn eval(&self, frame: &Frame) -> Result<FieldSample> {
        (**self).eval(frame)
    }
    fn harmonic_extension(&self) -> Option<&dyn HarmonicExtension> {
        (**self).harmonic_extension()
    }
}

impl<T: SphereField + ?Sized> SphereField for &T {
    fn dim(&self) -> usize {
        (**self).dim()
    }
    fn sphere_valued(&self) -> bool {
        (**self).sphere_valued()
    }
    fn eval(&self, frame: &Frame) -> Result<FieldSample> {
        (**self).eval(frame)
    }
    fn harmonic_extension(&self) -> Option<&dyn HarmonicExtension> {
        (**self).harmonic_extension()
    }
}

/// A map `u : R^{n-1} → R^n`.
pub trait PlaneField: Send + Sync {
    /// Target dimension `n`.
    fn dim(&self) -> usize;

    fn sphere_valued(&self) -> bool;

    fn eval(&self, y: &DVector<f64>) -> Result<FieldSample>;

    /// Disc outside which the field coincides with its background.
    fn support_hint(&self) -> Option<(DVector<f64>, f64)> {
        None
    }
}

impl<T: PlaneField + ?Sized> PlaneField for Arc<T> {
    fn dim(&self) -> usize {
        (**self).dim()
    }
    fn sphere_valued(&self) -> bool {
        (**self).sphere_valued()
    }
    fn eval(&self, y: &DVector<f64>) -> Result<FieldSample> {
        (**self).eval(y)
    }
    fn support_hint(&self) -> Option<(DVector<f64>, f64)> {
        (**self).support_hint()
    }
}

impl<T: PlaneField + ?Sized> PlaneField for &T {
    fn dim(&self) -> usize {
        (**self).dim()
    }
    fn sphere_valued(&self) -> bool {
        (**self).sphere_valued()
    }
    fn eval(&self, y: &DVector<f64>) -> Result<FieldSample> {
        (**self).eval(y)
    }
    fn support_hint(&self) -> Option<(DVector<f64>, f64)> {
        (**self).support_hint()
    }
}

/// `y/|y|` and its Jacobian `(I − ŷ⊗ŷ)/|y| · dw`.
pub(crate) fn normalize_with_jacobian(w: &DVector<f64>, dw: &DMatrix<f64>) -> Result<FieldSample> {
    let norm = w.norm();
    if !(norm > 0.0) {
        return Err(Error::SingularMatrix(norm));
    }
    let u = w / norm;
    let proj = u.transpose() * dw;
    let mut jac = dw / norm;
    jac.ger(-1.0 / norm, &u, &proj.transpose(), 1.0);
    Ok(FieldSample { value: u, jac })
}

fn check_frame(n: usize, frame: &Frame) -> Result<()> {
    if frame.dim() == n {
        Ok(())
    } else {
        Err(Error::DimensionMismatch {
            expected: n,
            got: frame.dim(),
        })
    }
}

/// `u(x) = Bx + c`. Its own harmonic extension.
#[derive(Debug, Clone)]
pub struct LinearField {
    b: DMatrix<f64>,
    c: DVector<f64>,
    sphere_valued: bool,
}

impl LinearField {
    pub fn new(b: DMatrix<f64>, c: DVector<f64>) -> Result<Self> {
        let n = b.nrows();
        if b.ncols() != n || c.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: c.len().min(b.ncols()),
            });
        }
        crate::error::check_dim(n)?;
        let orthogonal = (b.transpose() * &b - DMatrix::identity(n, n)).amax() < 1e-12;
        let sphere_valued = orthogonal && c.amax() == 0.0;
        Ok(LinearField { b, c, sphere_valued })
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.b
    }

    pub fn offset(&self) -> &DVector<f64> {
        &self.c
    }
}

impl SphereField for LinearField {
    fn dim(&self) -> usize {
        self.b.nrows()
    }
    fn sphere_valued(&self) -> bool {
        self.sphere_valued
    }
    fn eval(&self, frame: &Frame) -> Result<FieldSample> {
        check_frame(self.dim(), frame)?;
        Ok(FieldSample {
            value: &self.b * frame.x() + &self.c,
            jac: &self.b * frame.p_t(),
        })
    }
    fn harmonic_extension(&self) -> Option<&dyn HarmonicExtension> {
        Some(self)
    }
}

impl HarmonicExtension for LinearField {
    fn eval_ball(&self, y: &DVector<f64>) -> Result<FieldSample> {
        Ok(FieldSample {
            value: &self.b * y + &self.c,
            jac: self.b.clone(),
        })
    }
}

/// The identity map of `S^{n-1}`.
pub fn identity_field(n: usize) -> Result<LinearField> {
    LinearField::new(DMatrix::identity(n, n), DVector::zeros(n))
}

/// `x ↦ (x_1, …, x_{n-1}, −x_n)`, the reference map of degree `−1`.
pub fn reflection_field(n: usize) -> Result<LinearField> {
    let mut b = DMatrix::identity(n, n);
    b[(n - 1, n - 1)] = -1.0;
    LinearField::new(b, DVector::zeros(n))
}

/// `x ↦ Rx` for a rotation `R`.
pub fn rotation_field(r: DMatrix<f64>) -> Result<LinearField> {
    check_rotation(&r, 1e-10)?;
    let n = r.nrows();
    LinearField::new(r, DVector::zeros(n))
}

/// `R φ_{ξ,λ}` as a field.
#[derive(Debug, Clone)]
pub struct MobiusField {
    m: MobiusElement,
}

pub fn mobius_field(m: MobiusElement) -> MobiusField {
    MobiusField { m }
}

impl MobiusField {
    pub fn element(&self) -> &MobiusElement {
        &self.m
    }
}

impl SphereField for MobiusField {
    fn dim(&self) -> usize {
        self.m.dim()
    }
    fn sphere_valued(&self) -> bool {
        true
    }
    fn eval(&self, frame: &Frame) -> Result<FieldSample> {
        let (value, jac) = self.m.value_and_jacobian(frame)?;
        Ok(FieldSample { value, jac })
    }
}

/// `u(x) = Ax/|Ax|`.
#[derive(Debug, Clone)]
pub struct NormalizedLinear {
    a: DMatrix<f64>,
}

pub fn normalized_linear_field(a: DMatrix<f64>) -> Result<NormalizedLinear> {
    let n = a.nrows();
    if a.ncols() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: a.ncols(),
        });
    }
    crate::error::check_dim(n)?;
    let det = a.determinant();
    if det.abs() <= 1e-12 {
        return Err(Error::SingularMatrix(det.abs()));
    }
    if det < 0.0 {
        return Err(Error::NotOrientationPreserving(det));
    }
    Ok(NormalizedLinear { a })
}

impl NormalizedLinear {
    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.a
    }
}

impl SphereField for NormalizedLinear {
    fn dim(&self) -> usize {
        self.a.nrows()
    }
    fn sphere_valued(&self) -> bool {
        true
    }
    fn eval(&self, frame: &Frame) -> Result<FieldSample> {
        check_frame(self.dim(), frame)?;
        normalize_with_jacobian(&(&self.a * frame.x()), &(&self.a * frame.p_t()))
    }
}

/// `outer ∘ ψ` for a Möbius element `ψ`.
#[derive(Clone)]
pub struct ComposedField {
    outer: Arc<dyn SphereField>,
    inner: MobiusElement,
}

impl std::fmt::Debug for ComposedField {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ComposedField").field("inner", &self.inner).finish_non_exhaustive()
    }
}

impl ComposedField {
    pub fn new(outer: Arc<dyn SphereField>, inner: MobiusElement) -> Result<Self> {
        if outer.dim() != inner.dim() {
            return Err(Error::DimensionMismatch {
                expected: outer.dim(),
                got: inner.dim(),
            });
        }
        Ok(ComposedField { outer, inner })
    }

    pub fn inner(&self) -> &MobiusElement {
        &self.inner
    }

    pub fn outer(&self) -> &Arc<dyn SphereField> {
        &self.outer
    }
}

impl SphereField for ComposedField {
    fn dim(&self) -> usize {
        self.inner.dim()
    }
    fn sphere_valued(&self) -> bool {
        self.outer.sphere_valued()
    }
    fn eval(&self, frame: &Frame) -> Result<FieldSample> {
        let (y, jpsi) = self.inner.value_and_jacobian(frame)?;
        let fy = frame_at(&SpherePoint::normalize(y)?)?;
        let s = self.outer.eval(&fy)?;
        let jac = s.jac * (fy.p_t().transpose() * jpsi);
        Ok(FieldSample { value: s.value, jac })
    }
}

/// `u = (x + ε ζ(|x − c|/r) e)/|·|`: a localized perturbation of the identity.
#[derive(Debug, Clone)]
pub struct SphereBump {
    center: SpherePoint,
    radius: f64,
    eps: f64,
    dir: DVector<f64>,
}

impl SphereBump {
    /// `dir` is normalized; `eps ∈ [0, 1)` keeps the numerator away from zero.
    pub fn new(center: SpherePoint, radius: f64, eps: f64, dir: DVector<f64>) -> Result<Self> {
        if !(0.0..1.0).contains(&eps) {
            return Err(Error::InvalidEps(eps));
        }
        if !(radius > 0.0) {
            return Err(Error::InvalidArgument(format!("bump radius {radius}")));
        }
        if dir.len() != center.dim() {
            return Err(Error::DimensionMismatch {
                expected: center.dim(),
                got: dir.len(),
            });
        }
        let norm = dir.norm();
        if !(norm > 0.0) {
            return Err(Error::InvalidArgument("zero bump direction".into()));
        }
        Ok(SphereBump {
            center,
            radius,
            eps,
            dir: dir / norm,
        })
    }

    pub fn eps(&self) -> f64 {
        self.eps
    }
}

impl SphereField for SphereBump {
    fn dim(&self) -> usize {
        self.center.dim()
    }
    fn sphere_valued(&self) -> bool {
        true
    }
    fn eval(&self, frame: &Frame) -> Result<FieldSample> {
        check_frame(self.dim(), frame)?;
        let x = frame.x();
        let d = x - self.center.coords();
        let r = d.norm() / self.radius;
        let (z, dz) = cutoff(r);
        if z == 0.0 && dz == 0.0 || self.eps == 0.0 {
            return Ok(FieldSample {
                value: x.clone(),
                jac: frame.p_t().clone(),
            });
        }
        let w = x + &self.dir * (self.eps * z);
        let mut dw = frame.p_t().clone();
        if dz != 0.0 {
            let grad = d * (dz / (r * self.radius * self.radius));
            let gt = frame.p_t().transpose() * grad;
            dw.ger(self.eps, &self.dir, &gt, 1.0);
        }
        normalize_with_jacobian(&w, &dw)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::random_rotation;
    use crate::quadrature::sphere_rule;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    /// Central differences of `u` along the geodesics `cos(h) x + sin(h) τ_j`.
    pub(crate) fn fd_jacobian(u: &dyn SphereField, frame: &Frame, h: f64) -> DMatrix<f64> {
        let n = frame.dim();
        let mut jac = DMatrix::zeros(n, n - 1);
        for j in 0..n - 1 {
            let tau = frame.p_t().column(j).into_owned();
            let at = |s: f64| {
                let p = SpherePoint::normalize(frame.x() * s.cos() + &tau * s.sin()).unwrap();
                u.eval(&frame_at(&p).unwrap()).unwrap().value
            };
            jac.set_column(j, &((at(h) - at(-h)) / (2.0 * h)));
        }
        jac
    }

    fn check_fd(u: &dyn SphereField, seed: u64) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for _ in 0..20 {
            let x = SpherePoint::random(&mut rng, u.dim()).unwrap();
            let f = frame_at(&x).unwrap();
            let s = u.eval(&f).unwrap();
            let fd = fd_jacobian(u, &f, 1e-5);
            assert!((&s.jac - &fd).amax() < 1e-6, "{}", (&s.jac - &fd).amax());
            if u.sphere_valued() {
                assert!((s.value.norm() - 1.0).abs() < 1e-10);
                assert!((s.value.transpose() * &s.jac).amax() < 1e-8);
            }
        }
    }

    #[test]
    fn jacobians_match_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for n in 3..=5 {
            let a = DMatrix::identity(n, n) + DMatrix::from_fn(n, n, |i, j| 0.1 * ((i * n + j) as f64).sin());
            check_fd(&normalized_linear_field(a).unwrap(), 2);
            let m = MobiusElement::random(&mut rng, n, 0.5, 2.0).unwrap();
            check_fd(&mobius_field(m.clone()), 3);
            let outer: Arc<dyn SphereField> =
                Arc::new(normalized_linear_field(DMatrix::from_diagonal_element(n, n, 1.0) * 1.3).unwrap());
            check_fd(&ComposedField::new(outer, m).unwrap(), 4);
            let c = SpherePoint::random(&mut rng, n).unwrap();
            let bump = SphereBump::new(c, 1.2, 0.3, DVector::from_element(n, 1.0)).unwrap();
            check_fd(&bump, 5);
            let b = DMatrix::from_fn(n, n, |i, j| (i as f64 - j as f64) * 0.3);
            check_fd(&LinearField::new(b, DVector::from_element(n, 0.5)).unwrap(), 6);
        }
    }

    #[test]
    fn frame_covariance() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let n = 4;
        let u = normalized_linear_field(DMatrix::from_diagonal(&DVector::from_vec(vec![1.1, 1.0, 0.9, 1.2]))).unwrap();
        let x = SpherePoint::random(&mut rng, n).unwrap();
        let f = frame_at(&x).unwrap();
        let q = random_rotation(&mut rng, n - 1);
        let g = f.rotated(&q);
        let a = u.eval(&f).unwrap();
        let b = u.eval(&g).unwrap();
        assert!((a.jac * q - b.jac).amax() < 1e-14);
    }

    #[test]
    fn normalized_linear_rejects_singular() {
        let mut a = DMatrix::identity(3, 3);
        a[(2, 2)] = 0.0;
        assert!(matches!(normalized_linear_field(a), Err(Error::SingularMatrix(_))));
        let mut a = DMatrix::identity(3, 3);
        a[(2, 2)] = -1.0;
        assert!(matches!(normalized_linear_field(a), Err(Error::NotOrientationPreserving(_))));
    }

    #[test]
    fn rotation_and_identity_flags() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        assert!(identity_field(3).unwrap().sphere_valued());
        assert!(reflection_field(4).unwrap().sphere_valued());
        assert!(rotation_field(random_rotation(&mut rng, 5)).unwrap().sphere_valued());
        assert!(!LinearField::new(DMatrix::identity(3, 3) * 2.0, DVector::zeros(3)).unwrap().sphere_valued());
    }

    #[test]
    fn bump_is_identity_far_away() {
        let n = 3;
        let c = SpherePoint::basis(n, 0).unwrap();
        let bump = SphereBump::new(c, 0.5, 0.4, DVector::from_element(n, 1.0)).unwrap();
        let rule = sphere_rule(n, 6).unwrap();
        for f in rule.frames() {
            if (f.x() - DVector::from_vec(vec![1.0, 0.0, 0.0])).norm() >= 0.5 {
                let s = bump.eval(f).unwrap();
                assert_eq!(&s.value, f.x());
            }
        }
        assert!(matches!(
            SphereBump::new(SpherePoint::basis(3, 0).unwrap(), 0.5, 1.0, DVector::from_element(3, 1.0)),
            Err(Error::InvalidEps(_))
        ));
    }
}

//! The flat chart `R^{n-1}`: inverse stereographic projection through the
//! south pole, the bump family built on it, the flat Möbius family
//! `Rφ(ρ(· − x₀))`, and transport of fields between the chart and the sphere.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::{FieldSample, PlaneField, SphereField};
use crate::error::{check_dim, Error, Result};
use crate::linalg::{check_rotation, from_rows, to_rows};
use crate::quadrature::unit_ball_volume;
use crate::sphere::{frame_at, Frame, SpherePoint, POLE_TOL};

/// `γ_n = (n−1)^{(n−1)/2} n ω_n = ∫_{R^{n-1}} |∇φ|^{n-1}`.
pub fn gamma_n(n: usize) -> f64 {
    let m = (n - 1) as f64;
    m.powf(m / 2.0) * n as f64 * unit_ball_volume(n)
}

fn h(t: f64) -> f64 {
    if t <= 0.0 {
        0.0
    } else {
        (-1.0 / t).exp()
    }
}

/// Radial profile of the cutoff and its derivative: `1` on `[0, ½]`, `0` on
/// `[1, ∞)`, smooth in between.
pub fn cutoff(r: f64) -> (f64, f64) {
    if r <= 0.5 {
        return (1.0, 0.0);
    }
    if r >= 1.0 {
        return (0.0, 0.0);
    }
    let a = h(1.0 - r);
    let b = h(r - 0.5);
    let da = -a / (1.0 - r).powi(2);
    let db = b / (r - 0.5).powi(2);
    let s = a + b;
    (a / s, (da * b - a * db) / (s * s))
}

/// Center `(10/ε², 0, …, 0)`; on `D_1` of it `|φ^j| ≤ 2/|x|` and
/// `|∇φ| ≲ 4/|x|²` stay below `ε²`.
pub fn decay_center(n: usize, eps: f64) -> DVector<f64> {
    let mut c = DVector::zeros(n - 1);
    if eps > 0.0 {
        c[0] = 10.0 / (eps * eps);
    }
    c
}

/// `φ(y)` and `∇φ(y)`.
pub(crate) fn phi_with_jacobian(y: &DVector<f64>) -> FieldSample {
    let d = y.len();
    let n = d + 1;
    let y2 = y.norm_squared();
    let q = 1.0 + y2;
    let mut value = DVector::zeros(n);
    let mut jac = DMatrix::zeros(n, d);
    for i in 0..d {
        value[i] = -2.0 * y[i] / q;
        for j in 0..d {
            jac[(i, j)] = 4.0 * y[i] * y[j] / (q * q);
        }
        jac[(i, i)] -= 2.0 / q;
        jac[(d, i)] = -4.0 * y[i] / (q * q);
    }
    value[d] = (1.0 - y2) / q;
    FieldSample { value, jac }
}

/// `φ(y) = (−2y/(1+|y|²), (1−|y|²)/(1+|y|²))`.
#[derive(Debug, Clone, Copy)]
pub struct InverseStereographic {
    n: usize,
}

pub fn inverse_stereographic_field(n: usize) -> Result<InverseStereographic> {
    check_dim(n)?;
    Ok(InverseStereographic { n })
}

fn check_chart(n: usize, y: &DVector<f64>) -> Result<()> {
    if y.len() + 1 == n {
        Ok(())
    } else {
        Err(Error::DimensionMismatch {
            expected: n - 1,
            got: y.len(),
        })
    }
}

impl PlaneField for InverseStereographic {
    fn dim(&self) -> usize {
        self.n
    }
    fn sphere_valued(&self) -> bool {
        true
    }
    fn eval(&self, y: &DVector<f64>) -> Result<FieldSample> {
        check_chart(self.n, y)?;
        Ok(phi_with_jacobian(y))
    }
}

/// `u = (φ + ε ζ(· − c) e_1)/|φ + ε ζ(· − c) e_1|`.
#[derive(Debug, Clone)]
pub struct BumpFamily {
    n: usize,
    eps: f64,
    center: DVector<f64>,
}

/// Bump family with `eps ∈ [0, 1)`; `center = None` picks [`decay_center`].
pub fn bump_family_field(n: usize, eps: f64, center: Option<DVector<f64>>) -> Result<BumpFamily> {
    check_dim(n)?;
    if !(0.0..1.0).contains(&eps) {
        return Err(Error::InvalidEps(eps));
    }
    let center = center.unwrap_or_else(|| decay_center(n, eps));
    check_chart(n, &center)?;
    Ok(BumpFamily { n, eps, center })
}

impl BumpFamily {
    pub fn eps(&self) -> f64 {
        self.eps
    }

    pub fn center(&self) -> &DVector<f64> {
        &self.center
    }
}

impl PlaneField for BumpFamily {
    fn dim(&self) -> usize {
        self.n
    }
    fn sphere_valued(&self) -> bool {
        true
    }
    fn eval(&self, y: &DVector<f64>) -> Result<FieldSample> {
        check_chart(self.n, y)?;
        let base = phi_with_jacobian(y);
        let d = y - &self.center;
        let r = d.norm();
        let (z, dz) = cutoff(r);
        if self.eps == 0.0 || (z == 0.0 && dz == 0.0) {
            return Ok(base);
        }
        let mut w = base.value;
        w[0] += self.eps * z;
        let mut dw = base.jac;
        if dz != 0.0 {
            let grad = d * (dz / r);
            for j in 0..self.n - 1 {
                dw[(0, j)] += self.eps * grad[j];
            }
        }
        super::normalize_with_jacobian(&w, &dw)
    }
    fn support_hint(&self) -> Option<(DVector<f64>, f64)> {
        Some((self.center.clone(), 1.0))
    }
}

/// `(R, x₀, ρ)` standing for `ψ = Rφ(ρ(· − x₀))`.
#[derive(Debug, Clone, PartialEq)]
pub struct PlanarMobiusElement {
    r: DMatrix<f64>,
    x0: DVector<f64>,
    rho: f64,
}

impl PlanarMobiusElement {
    pub fn new(r: DMatrix<f64>, x0: DVector<f64>, rho: f64) -> Result<Self> {
        let n = r.nrows();
        check_dim(n)?;
        check_rotation(&r, 1e-10)?;
        check_chart(n, &x0)?;
        if !(rho > 0.0 && rho.is_finite()) {
            return Err(Error::InvalidLambda(rho));
        }
        Ok(PlanarMobiusElement { r, x0, rho })
    }

    /// `ψ = φ`.
    pub fn identity(n: usize) -> Result<Self> {
        Self::new(DMatrix::identity(n, n), DVector::zeros(n - 1), 1.0)
    }

    pub fn dim(&self) -> usize {
        self.r.nrows()
    }

    pub fn r(&self) -> &DMatrix<f64> {
        &self.r
    }

    pub fn x0(&self) -> &DVector<f64> {
        &self.x0
    }

    pub fn rho(&self) -> f64 {
        self.rho
    }

    /// `ψ(y)` and `∇ψ(y)`.
    pub fn eval(&self, y: &DVector<f64>) -> Result<FieldSample> {
        check_chart(self.dim(), y)?;
        let z = (y - &self.x0) * self.rho;
        let s = phi_with_jacobian(&z);
        Ok(FieldSample {
            value: &self.r * s.value,
            jac: &self.r * s.jac * self.rho,
        })
    }
}

#[derive(Serialize, Deserialize)]
struct PlanarJson {
    #[serde(rename = "R")]
    r: Vec<Vec<f64>>,
    x0: Vec<f64>,
    rho: f64,
}

impl Serialize for PlanarMobiusElement {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        PlanarJson {
            r: to_rows(&self.r),
            x0: self.x0.iter().copied().collect(),
            rho: self.rho,
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for PlanarMobiusElement {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let j = PlanarJson::deserialize(d)?;
        let r = from_rows(&j.r).map_err(serde::de::Error::custom)?;
        PlanarMobiusElement::new(r, DVector::from_vec(j.x0), j.rho).map_err(serde::de::Error::custom)
    }
}

/// An element of the flat Möbius family as a [`PlaneField`].
#[derive(Debug, Clone)]
pub struct PlanarMobiusField(pub PlanarMobiusElement);

impl PlaneField for PlanarMobiusField {
    fn dim(&self) -> usize {
        self.0.dim()
    }
    fn sphere_valued(&self) -> bool {
        true
    }
    fn eval(&self, y: &DVector<f64>) -> Result<FieldSample> {
        self.0.eval(y)
    }
}

/// `x ↦ p(σ(x))` with `σ(x) = −x'/(1 + x_n)`, the inverse of `φ`.
#[derive(Debug, Clone)]
pub struct PlaneToSphere<P> {
    inner: P,
}

pub fn pullback_to_sphere<P: PlaneField>(p: P) -> PlaneToSphere<P> {
    PlaneToSphere { inner: p }
}

impl<P: PlaneField> PlaneToSphere<P> {
    pub fn inner(&self) -> &P {
        &self.inner
    }
}

/// `σ(x)` and `dσ(x) P_T`.
pub(crate) fn chart_with_jacobian(frame: &Frame) -> Result<(DVector<f64>, DMatrix<f64>)> {
    let x = frame.x();
    let n = x.len();
    let d = 1.0 + x[n - 1];
    if d <= POLE_TOL {
        return Err(Error::PoleSingularity(x[n - 1]));
    }
    let y = DVector::from_iterator(n - 1, (0..n - 1).map(|i| -x[i] / d));
    let mut ds = DMatrix::zeros(n - 1, n);
    for i in 0..n - 1 {
        ds[(i, i)] = -1.0 / d;
        ds[(i, n - 1)] = x[i] / (d * d);
    }
    Ok((y, ds * frame.p_t()))
}

impl<P: PlaneField> SphereField for PlaneToSphere<P> {
    fn dim(&self) -> usize {
        self.inner.dim()
    }
    fn sphere_valued(&self) -> bool {
        self.inner.sphere_valued()
    }
    fn eval(&self, frame: &Frame) -> Result<FieldSample> {
        let (y, dy) = chart_with_jacobian(frame)?;
        let s = self.inner.eval(&y)?;
        Ok(FieldSample {
            value: s.value,
            jac: s.jac * dy,
        })
    }
}

/// `y ↦ s(φ(y))`.
#[derive(Debug, Clone)]
pub struct SphereToPlane<S> {
    inner: S,
}

pub fn push_to_plane<S: SphereField>(s: S) -> SphereToPlane<S> {
    SphereToPlane { inner: s }
}

impl<S: SphereField> PlaneField for SphereToPlane<S> {
    fn dim(&self) -> usize {
        self.inner.dim()
    }
    fn sphere_valued(&self) -> bool {
        self.inner.sphere_valued()
    }
    fn eval(&self, y: &DVector<f64>) -> Result<FieldSample> {
        check_chart(self.dim(), y)?;
        let p = phi_with_jacobian(y);
        let n = self.dim();
        if 1.0 + p.value[n - 1] <= POLE_TOL {
            return Err(Error::PoleSingularity(p.value[n - 1]));
        }
        let f = frame_at(&SpherePoint::normalize(p.value)?)?;
        let s = self.inner.eval(&f)?;
        Ok(FieldSample {
            value: s.value,
            jac: s.jac * (f.p_t().transpose() * p.jac),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;
    use crate::field::mobius_field;
    use crate::quadrature::{disc_rule, integrate_disc, sphere_rule};
    use crate::sphere::MobiusElement;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn fd_plane(p: &dyn PlaneField, y: &DVector<f64>, h: f64) -> DMatrix<f64> {
        let d = y.len();
        let mut jac = DMatrix::zeros(d + 1, d);
        for j in 0..d {
            let mut a = y.clone();
            a[j] += h;
            let mut b = y.clone();
            b[j] -= h;
            jac.set_column(j, &((p.eval(&a).unwrap().value - p.eval(&b).unwrap().value) / (2.0 * h)));
        }
        jac
    }

    #[test]
    fn phi_basics() {
        let phi = inverse_stereographic_field(4).unwrap();
        let s = phi.eval(&DVector::zeros(3)).unwrap();
        assert_eq!(s.value, DVector::from_vec(vec![0.0, 0.0, 0.0, 1.0]));
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..10_000 {
            let y = DVector::from_fn(3, |_, _| rng.random_range(-50.0..50.0));
            assert!((phi.eval(&y).unwrap().value.norm() - 1.0).abs() < 1e-14);
        }
        for _ in 0..20 {
            let y = DVector::from_fn(3, |_, _| rng.random_range(-3.0..3.0));
            assert!((phi.eval(&y).unwrap().jac - fd_plane(&phi, &y, 1e-5)).amax() < 1e-8);
        }
    }

    #[test]
    fn gamma_values() {
        assert!((gamma_n(3) - 8.0 * PI).abs() < 1e-13);
        assert!((gamma_n(3) - 25.13274).abs() < 1e-5);
        // |∇φ|² = 4(n−1)/(1+|y|²)² integrated radially in R^{n-1}
        for n in 3..=6 {
            let d = (n - 1) as f64;
            let m = 200_000;
            let mut s = 0.0;
            // r = tan(t), t ∈ (0, π/2), midpoint rule
            for k in 0..m {
                let t = (k as f64 + 0.5) * (PI / 2.0) / m as f64;
                let r = t.tan();
                let g = (4.0 * d).sqrt() / (1.0 + r * r);
                s += g.powf(d) * r.powf(d - 1.0) / t.cos().powi(2);
            }
            s *= (PI / 2.0) / m as f64 * d * unit_ball_volume(n - 1);
            assert!((s / gamma_n(n) - 1.0).abs() < 1e-6, "n={n}");
        }
    }

    #[test]
    fn cutoff_shape() {
        assert_eq!(cutoff(0.3), (1.0, 0.0));
        assert_eq!(cutoff(0.5), (1.0, 0.0));
        assert_eq!(cutoff(1.0), (0.0, 0.0));
        assert!((cutoff(0.75).0 - 0.5).abs() < 1e-15);
        let mut prev = 1.0;
        for k in 1..100 {
            let r = 0.5 + k as f64 * 0.005;
            let (z, dz) = cutoff(r);
            assert!(z <= prev && (0.0..=1.0).contains(&z));
            prev = z;
            let fd = (cutoff(r + 1e-6).0 - cutoff(r - 1e-6).0) / 2e-6;
            assert!((fd - dz).abs() < 1e-6);
        }
    }

    #[test]
    fn bump_family_properties() {
        let n = 4;
        let u0 = bump_family_field(n, 0.0, None).unwrap();
        let phi = inverse_stereographic_field(n).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..50 {
            let y = DVector::from_fn(3, |_, _| rng.random_range(-5.0..5.0));
            assert_eq!(u0.eval(&y).unwrap(), phi.eval(&y).unwrap());
        }
        let u = bump_family_field(n, 0.05, None).unwrap();
        assert!((u.center()[0] - 4000.0).abs() < 1e-9);
        for _ in 0..50 {
            let y = DVector::from_fn(3, |_, _| rng.random_range(-5.0..5.0)) + u.center();
            let s = u.eval(&y).unwrap();
            if (&y - u.center()).norm() >= 1.0 {
                assert_eq!(s, phi.eval(&y).unwrap());
            }
            assert!((s.value.norm() - 1.0).abs() < 1e-12);
            assert!((&s.jac - fd_plane(&u, &y, 1e-6)).amax() < 1e-6);
        }
        assert!(matches!(bump_family_field(n, 1.0, None), Err(Error::InvalidEps(_))));
    }

    #[test]
    fn planar_mobius_and_transport() {
        let n = 3;
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let r = crate::linalg::random_rotation(&mut rng, n);
        let e = PlanarMobiusElement::new(r, DVector::from_vec(vec![0.3, -0.2]), 1.7).unwrap();
        let f = PlanarMobiusField(e.clone());
        let y = DVector::from_vec(vec![0.4, 0.9]);
        assert!((f.eval(&y).unwrap().jac - fd_plane(&f, &y, 1e-6)).amax() < 1e-8);
        let json = serde_json::to_string(&e).unwrap();
        let back: PlanarMobiusElement = serde_json::from_str(&json).unwrap();
        assert_eq!(back, e);

        // pulling φ back gives the identity of the sphere
        let id = pullback_to_sphere(inverse_stereographic_field(n).unwrap());
        let rule = sphere_rule(n, 5).unwrap();
        for fr in rule.frames() {
            let s = id.eval(fr).unwrap();
            assert!((&s.value - fr.x()).amax() < 1e-13);
            assert!((&s.jac - fr.p_t()).amax() < 1e-12);
        }
    }

    #[test]
    fn pushed_mobius_has_flat_energy_gamma() {
        // the energy outside a large disc is tiny for a Möbius map close to φ
        let n = 3;
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let m = MobiusElement::random(&mut rng, n, 0.8, 1.25).unwrap();
        let p = push_to_plane(mobius_field(m));
        let rule = disc_rule(&DVector::zeros(2), 1.0, 12).unwrap();
        let inside = integrate_disc(&rule, 1, |y| Ok(vec![p.eval(y)?.jac.norm_squared()])).unwrap()[0];
        assert!(inside > 0.0 && inside < gamma_n(n));
    }
}

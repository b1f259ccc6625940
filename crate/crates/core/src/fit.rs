//! Centering and nearest-Möbius fitting.
//!
//! Both fitters run BFGS in a chart that is re-based at every accepted
//! iterate: the element `g` is moved to `g · exp(v)` for a Lie-algebra vector
//! `v`, so the parametrization stays smooth through `λ = 1`. Gradients are
//! central differences.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::field::{
    mobius_field, pullback_to_sphere, ComposedField, PlanarMobiusElement, PlanarMobiusField, PlaneField, SphereField,
};
use crate::linalg::expm;
use crate::quadrature::{integrate_disc, integrate_many, DiscRule, SphereRule};
use crate::sphere::{frame_at, group_dim, MobiusElement, SpherePoint};

/// Iterates with `λ` (or `ρ`) outside `[LAMBDA_MIN, LAMBDA_MAX]` are rejected.
pub const LAMBDA_MIN: f64 = 1e-3;
pub const LAMBDA_MAX: f64 = 1e3;

/// Elements that can be moved by a local coordinate vector.
pub trait Chart: Clone {
    fn chart_dim(&self) -> usize;
    fn step(&self, v: &[f64]) -> Result<Self>;
}

impl Chart for MobiusElement {
    fn chart_dim(&self) -> usize {
        group_dim(self.dim())
    }

    fn step(&self, v: &[f64]) -> Result<Self> {
        let n = self.dim();
        let k = n * (n - 1) / 2;
        let e = self.perturbed(&v[..k], &v[k..])?;
        if !(LAMBDA_MIN..=LAMBDA_MAX).contains(&e.lambda()) {
            return Err(Error::InvalidLambda(e.lambda()));
        }
        Ok(e)
    }
}

impl Chart for PlanarMobiusElement {
    fn chart_dim(&self) -> usize {
        let n = self.dim();
        n * (n - 1) / 2 + n
    }

    /// `R ← R exp(Ω)`, `x₀ ← x₀ + dx/ρ`, `ρ ← ρ e^s`.
    fn step(&self, v: &[f64]) -> Result<Self> {
        let n = self.dim();
        let mut omega = DMatrix::zeros(n, n);
        let mut k = 0;
        for i in 0..n {
            for j in (i + 1)..n {
                omega[(i, j)] = v[k];
                omega[(j, i)] = -v[k];
                k += 1;
            }
        }
        let r = crate::linalg::nearest_rotation(&(self.r() * expm(&omega)))?;
        let dx = DVector::from_iterator(n - 1, v[k..k + n - 1].iter().copied());
        let rho = self.rho() * v[k + n - 1].exp();
        if !(LAMBDA_MIN..=LAMBDA_MAX).contains(&rho) {
            return Err(Error::InvalidLambda(rho));
        }
        PlanarMobiusElement::new(r, self.x0() + dx / self.rho(), rho)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitOptions {
    pub max_iter: usize,
    /// Stop once the chart gradient norm falls below this.
    pub grad_tol: f64,
    pub fd_step: f64,
    /// Run a `p = 2` stage before the `p = n − 1` stage.
    pub warm_start: bool,
}

impl Default for FitOptions {
    fn default() -> Self {
        FitOptions {
            max_iter: 200,
            grad_tol: 1e-10,
            fd_step: 1e-5,
            warm_start: true,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct FitResult<E> {
    pub element: E,
    pub objective: f64,
    pub iterations: usize,
    pub converged: bool,
    pub gradient_norm: f64,
    /// Objective after each accepted step of the final stage, starting with
    /// its initial value.
    pub history: Vec<f64>,
}

fn eval_or_inf<E: Chart>(obj: &dyn Fn(&E) -> Result<f64>, e: Result<E>) -> Result<(f64, Option<E>)> {
    match e {
        Ok(e) => match obj(&e) {
            Ok(v) if v.is_finite() => Ok((v, Some(e))),
            Ok(_) => Ok((f64::INFINITY, None)),
            Err(Error::InvalidLambda(_)) | Err(Error::PoleSingularity(_)) => Ok((f64::INFINITY, None)),
            Err(err) => Err(err),
        },
        Err(Error::InvalidLambda(_)) | Err(Error::NotRotation(_)) => Ok((f64::INFINITY, None)),
        Err(err) => Err(err),
    }
}

fn fd_gradient<E: Chart>(obj: &dyn Fn(&E) -> Result<f64>, e: &E, h: f64) -> Result<DVector<f64>> {
    let d = e.chart_dim();
    let mut g = DVector::zeros(d);
    let mut v = vec![0.0; d];
    for i in 0..d {
        v[i] = h;
        let (fp, _) = eval_or_inf(obj, e.step(&v))?;
        v[i] = -h;
        let (fm, _) = eval_or_inf(obj, e.step(&v))?;
        v[i] = 0.0;
        g[i] = if fp.is_finite() && fm.is_finite() {
            (fp - fm) / (2.0 * h)
        } else {
            0.0
        };
    }
    Ok(g)
}

/// BFGS with Armijo backtracking in the re-based chart.
pub fn minimize<E: Chart>(init: E, obj: &dyn Fn(&E) -> Result<f64>, opts: &FitOptions) -> Result<FitResult<E>> {
    let d = init.chart_dim();
    let mut e = init;
    let mut f = obj(&e)?;
    let mut g = fd_gradient(obj, &e, opts.fd_step)?;
    let mut h = DMatrix::<f64>::identity(d, d);
    let mut history = vec![f];
    let mut iterations = 0;
    while iterations < opts.max_iter && g.norm() > opts.grad_tol {
        let mut dir = -(&h * &g);
        let mut slope = g.dot(&dir);
        if !(slope < 0.0) {
            h = DMatrix::identity(d, d);
            dir = -g.clone();
            slope = -g.norm_squared();
        }
        let mut t = 1.0;
        let mut accepted = None;
        for _ in 0..50 {
            let step: Vec<f64> = (&dir * t).iter().copied().collect();
            let (ft, et) = eval_or_inf(obj, e.step(&step))?;
            if ft <= f + 1e-4 * t * slope {
                accepted = et.map(|et| (et, ft, t));
                break;
            }
            t *= 0.5;
        }
        let Some((en, fnew, t)) = accepted else {
            if h != DMatrix::identity(d, d) {
                h = DMatrix::identity(d, d);
                continue;
            }
            break;
        };
        let gn = fd_gradient(obj, &en, opts.fd_step)?;
        let s = &dir * t;
        let y = &gn - &g;
        let sy = s.dot(&y);
        if sy > 1e-300 {
            let rho = 1.0 / sy;
            let ident = DMatrix::<f64>::identity(d, d);
            let a = &ident - &s * y.transpose() * rho;
            h = &a * &h * a.transpose() + &s * s.transpose() * rho;
        }
        iterations += 1;
        let stalled = fnew >= f;
        e = en;
        f = fnew;
        g = gn;
        history.push(f);
        if stalled {
            break;
        }
    }
    let gradient_norm = g.norm();
    Ok(FitResult {
        element: e,
        objective: f,
        iterations,
        converged: gradient_norm <= opts.grad_tol,
        gradient_norm,
        history,
    })
}

/// Two-stage fit: optional `p = 2` warm stage, then `p = p_final`. The result
/// is never worse than `init` for the final objective.
fn staged<E: Chart>(
    init: E,
    obj: &(dyn Fn(&E, f64) -> Result<f64> + Sync),
    p_final: f64,
    opts: &FitOptions,
) -> Result<FitResult<E>> {
    let mut start = init.clone();
    let mut warm_iters = 0;
    if opts.warm_start && p_final != 2.0 {
        let warm = minimize(init.clone(), &|e: &E| obj(e, 2.0), opts)?;
        warm_iters = warm.iterations;
        start = warm.element;
    }
    let f_init = obj(&init, p_final)?;
    let f_start = obj(&start, p_final)?;
    if f_start > f_init {
        start = init;
    }
    let mut res = minimize(start, &|e: &E| obj(e, p_final), opts)?;
    res.iterations += warm_iters;
    Ok(res)
}

/// Local minimizer of `⨍|∇_T u − ∇_T(Rφ_{ξ,λ})|^{n−1}`, started at `init` or
/// the identity.
pub fn fit_mobius(u: &dyn SphereField, rule: &SphereRule, init: Option<MobiusElement>) -> Result<FitResult<MobiusElement>> {
    fit_mobius_with(u, rule, init, &FitOptions::default())
}

pub fn fit_mobius_with(
    u: &dyn SphereField,
    rule: &SphereRule,
    init: Option<MobiusElement>,
    opts: &FitOptions,
) -> Result<FitResult<MobiusElement>> {
    let n = u.dim();
    let init = match init {
        Some(e) => e,
        None => MobiusElement::identity(n)?,
    };
    let obj = |e: &MobiusElement, p: f64| mobius_objective(u, rule, e, p);
    staged(init, &obj, (n - 1) as f64, opts)
}

/// `⨍|∇_T u − ∇_T m|^p`.
pub fn mobius_objective(u: &dyn SphereField, rule: &SphereRule, m: &MobiusElement, p: f64) -> Result<f64> {
    crate::functionals::grad_distance(u, &mobius_field(m.clone()), rule, p)
}

/// Flat objective `∫_{R^{n-1}} |∇u − ∇ψ|^p` for a field `u` that equals
/// `background` off `disc`.
///
/// The part off the disc is computed on the sphere: the `(n−1)`-energy is
/// invariant under the chart, so `∫|∇b − ∇ψ|^{n−1}` equals `|S^{n−1}|` times
/// the sphere average of `|∇_T(b∘σ) − ∇_T(ψ∘σ)|^{n−1}` with no truncation.
/// For `p ≠ n − 1` the same split defines the sphere-side `p`-energy, and the
/// disc part carries the weight `μ^{n−1−p}`, `μ = 2/(1+|y|²)`.
pub fn planar_objective(
    u: &dyn PlaneField,
    background: &dyn PlaneField,
    disc: &DiscRule,
    rule: &SphereRule,
    psi: &PlanarMobiusElement,
    p: f64,
) -> Result<f64> {
    let n = u.dim();
    let q = (n - 1) as f64 - p;
    let field = PlanarMobiusField(psi.clone());
    let inside = integrate_disc(disc, 1, |y| {
        let jp = field.eval(y)?.jac;
        let a = (u.eval(y)?.jac - &jp).norm().powf(p);
        let b = (background.eval(y)?.jac - &jp).norm().powf(p);
        let w = if q == 0.0 { 1.0 } else { (2.0 / (1.0 + y.norm_squared())).powf(q) };
        Ok(vec![(a - b) * w])
    })?[0];
    let bs = pullback_to_sphere(background);
    let ps = pullback_to_sphere(&field);
    let outside = integrate_many(rule, 1, |f| {
        let a = bs.eval(f)?.jac;
        let b = ps.eval(f)?.jac;
        Ok(vec![(a - b).norm().powf(p)])
    })?[0];
    let area = n as f64 * crate::quadrature::unit_ball_volume(n);
    Ok(inside + area * outside)
}

/// Fit over `Ψ = {Rφ(ρ(· − x₀))}`, started at `ψ = φ` unless `init` is given.
pub fn fit_planar(
    u: &dyn PlaneField,
    disc: &DiscRule,
    background: &dyn PlaneField,
    rule: &SphereRule,
    init: Option<PlanarMobiusElement>,
) -> Result<FitResult<PlanarMobiusElement>> {
    fit_planar_with(u, disc, background, rule, init, &FitOptions::default())
}

pub fn fit_planar_with(
    u: &dyn PlaneField,
    disc: &DiscRule,
    background: &dyn PlaneField,
    rule: &SphereRule,
    init: Option<PlanarMobiusElement>,
    opts: &FitOptions,
) -> Result<FitResult<PlanarMobiusElement>> {
    let n = u.dim();
    if background.dim() != n || rule.dim() != n || disc.dim() + 1 != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: rule.dim(),
        });
    }
    let init = match init {
        Some(e) => e,
        None => PlanarMobiusElement::identity(n)?,
    };
    let obj = |e: &PlanarMobiusElement, p: f64| planar_objective(u, background, disc, rule, e, p);
    staged(init, &obj, (n - 1) as f64, opts)
}

/// A centering element `ψ` and the norm of `⨍ u∘ψ`.
#[derive(Debug, Clone, Serialize)]
pub struct CenterResult {
    pub element: MobiusElement,
    pub residual: f64,
    pub iterations: usize,
}

/// `φ_{ξ, e^{−|b|}}` with `ξ = b/|b|`.
pub fn boost_element(b: &DVector<f64>) -> Result<MobiusElement> {
    let n = b.len();
    MobiusElement::identity(n)?.perturbed(&vec![0.0; n * (n - 1) / 2], b.as_slice())
}

/// `⨍ u∘ψ`.
pub fn composed_mean(u: &dyn SphereField, rule: &SphereRule, psi: &MobiusElement) -> Result<DVector<f64>> {
    let n = u.dim();
    let v = integrate_many(rule, n, |f| {
        let y = psi.apply(f.base())?;
        let fy = frame_at(&SpherePoint::normalize(y.into_inner())?)?;
        Ok(u.eval(&fy)?.value.iter().copied().collect())
    })?;
    Ok(DVector::from_vec(v))
}

fn newton_center(
    u: &dyn SphereField,
    rule: &SphereRule,
    b0: DVector<f64>,
    tol: f64,
) -> Result<(DVector<f64>, f64, usize)> {
    let n = u.dim();
    let max_b = LAMBDA_MAX.ln();
    let f_of = |b: &DVector<f64>| -> Result<DVector<f64>> { composed_mean(u, rule, &boost_element(b)?) };
    let mut b = b0;
    let mut f = f_of(&b)?;
    let mut it = 0;
    while f.norm() > tol && it < 60 {
        it += 1;
        let h = 1e-6;
        let mut jac = DMatrix::zeros(n, n);
        for j in 0..n {
            let mut bp = b.clone();
            bp[j] += h;
            let mut bm = b.clone();
            bm[j] -= h;
            jac.set_column(j, &((f_of(&bp)? - f_of(&bm)?) / (2.0 * h)));
        }
        let svd = jac.svd(true, true);
        let delta = match svd.solve(&(-&f), 1e-12) {
            Ok(d) => d,
            Err(_) => break,
        };
        let mut t = 1.0;
        let mut improved = false;
        for _ in 0..30 {
            let bt = &b + &delta * t;
            if bt.norm() <= max_b {
                let ft = f_of(&bt)?;
                if ft.norm() < f.norm() {
                    b = bt;
                    f = ft;
                    improved = true;
                    break;
                }
            }
            t *= 0.5;
        }
        if !improved {
            break;
        }
    }
    Ok((b, f.norm(), it))
}

/// Finds `ψ` with `|⨍ u∘ψ| ≤ tol`, trying `λ = 1` first and then the
/// `2n` axis directions with `λ ∈ {0.5, 0.25}`.
pub fn center(u: &dyn SphereField, rule: &SphereRule, tol: f64) -> Result<CenterResult> {
    let n = u.dim();
    let mut starts = vec![DVector::zeros(n)];
    for lambda in [0.5f64, 0.25] {
        for i in 0..n {
            for s in [1.0, -1.0] {
                let mut b = DVector::zeros(n);
                b[i] = -s * lambda.ln();
                starts.push(b);
            }
        }
    }
    let mut best = f64::INFINITY;
    let mut total = 0;
    for b0 in starts {
        let (b, r, it) = newton_center(u, rule, b0, tol)?;
        total += it;
        if r <= tol {
            return Ok(CenterResult {
                element: boost_element(&b)?,
                residual: r,
                iterations: total,
            });
        }
        best = best.min(r);
    }
    Err(Error::CenteringFailed { best, tol })
}

/// `u ∘ ψ` as a field.
pub fn recentered(u: std::sync::Arc<dyn SphereField>, psi: &MobiusElement) -> Result<ComposedField> {
    ComposedField::new(u, psi.clone())
}

use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::field::{
    identity_field, mobius_field, monomials, normalized_linear_field, reflection_field, sphere_monomial_mean,
    ComposedField, HarmonicField, LinearField, SphereField,
};
use crate::functionals::{
    deficit, deficit_with, harmonic_energy_bound, max_conformality_residual, moment_identities,
    null_lagrangian_identity, pass_tolerance, poincare_gaps, projections, wente_check, DegreeConvention,
};
use crate::linalg::{
    det_expansion_check, dist2_to_so, figalli_zhang_c0, figalli_zhang_check, random_rotation, sigma, sigma_grad,
};
use crate::quadrature::{ball_rule, disc_rule, integrate, integrate_ball, integrate_many, sphere_rule, unit_ball_volume};
use crate::sphere::{inverse_stereo, stereo, MobiusElement, SpherePoint};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Suite {
    Geometry,
    Quadrature,
    Functionals,
    Algebra,
    Inequalities,
    All,
}

impl FromStr for Suite {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "geometry" => Suite::Geometry,
            "quadrature" => Suite::Quadrature,
            "functionals" => Suite::Functionals,
            "algebra" => Suite::Algebra,
            "inequalities" => Suite::Inequalities,
            "all" => Suite::All,
            _ => return Err(Error::UnknownSuite(s.into())),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerifyOptions {
    pub suite: Suite,
    pub n: usize,
    pub level: usize,
    pub seed: u64,
    /// Random Möbius elements in the exactness check.
    pub mobius_samples: usize,
    /// Random matrices in the moment identities.
    pub matrices: usize,
    /// Band-limited fields in the boundary expansion.
    pub null_fields: usize,
    /// Band-limited fields in the Poincaré and Parseval checks.
    pub poincare_fields: usize,
    /// Samples per `(p, κ)` pair in the pointwise inequality.
    pub fz_samples: usize,
    /// `Reversed` is a sign fixture: it must make the degree checks fail.
    pub degree_convention: DegreeConvention,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        VerifyOptions {
            suite: Suite::All,
            n: 3,
            level: 16,
            seed: 0,
            mobius_samples: 20,
            matrices: 50,
            null_fields: 20,
            poincare_fields: 200,
            fz_samples: 1_000_000,
            degree_convention: DegreeConvention::Standard,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    /// The statement being checked.
    pub anchor: String,
    pub value: f64,
    /// `<=` or `>=`: how `value` compares with `bound`.
    pub relation: &'static str,
    pub bound: f64,
    pub passed: bool,
    #[serde(skip_serializing_if = "String::is_empty")]
    pub detail: String,
}

impl Check {
    fn at_most(name: &str, anchor: &str, value: f64, bound: f64) -> Check {
        Check {
            name: name.into(),
            anchor: anchor.into(),
            value,
            relation: "<=",
            bound,
            passed: value <= bound,
            detail: String::new(),
        }
    }

    fn at_least(name: &str, anchor: &str, value: f64, bound: f64) -> Check {
        Check {
            relation: ">=",
            passed: value >= bound,
            ..Check::at_most(name, anchor, value, bound)
        }
    }

    fn failed(name: &str, anchor: &str, err: &Error) -> Check {
        Check {
            name: name.into(),
            anchor: anchor.into(),
            value: f64::NAN,
            relation: "<=",
            bound: f64::NAN,
            passed: false,
            detail: err.to_string(),
        }
    }

    fn with_detail(mut self, detail: String) -> Check {
        self.detail = detail;
        self
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct VerifyReport {
    pub suite: Suite,
    pub n: usize,
    pub level: usize,
    pub seed: u64,
    pub passed: bool,
    pub checks: Vec<Check>,
}

impl VerifyReport {
    pub fn check(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }

    pub fn failures(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| !c.passed)
    }
}

/// Runs a group of checks; an error becomes a single failed check.
fn group(out: &mut Vec<Check>, name: &str, anchor: &str, f: impl FnOnce() -> Result<Vec<Check>>) {
    match f() {
        Ok(c) => out.extend(c),
        Err(e) => out.push(Check::failed(name, anchor, &e)),
    }
}

/// Each check group draws from its own stream so adding checks does not shift
/// the others.
fn rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    r.set_stream(stream);
    r
}

fn fmax(it: impl IntoIterator<Item = f64>) -> f64 {
    it.into_iter().fold(0.0, f64::max)
}

fn fmin(it: impl IntoIterator<Item = f64>) -> f64 {
    it.into_iter().fold(f64::INFINITY, f64::min)
}

pub fn run_verify(opts: &VerifyOptions) -> Result<VerifyReport> {
    // Validate once so usage errors surface before any work.
    sphere_rule(opts.n, opts.level)?;
    let mut checks = Vec::new();
    let s = opts.suite;
    if matches!(s, Suite::Geometry | Suite::All) {
        geometry(opts, &mut checks);
    }
    if matches!(s, Suite::Quadrature | Suite::All) {
        quadrature(opts, &mut checks);
    }
    if matches!(s, Suite::Functionals | Suite::All) {
        functionals(opts, &mut checks);
    }
    if matches!(s, Suite::Algebra | Suite::All) {
        algebra(opts, &mut checks);
    }
    if matches!(s, Suite::Inequalities | Suite::All) {
        inequalities(opts, &mut checks);
    }
    Ok(VerifyReport {
        suite: s,
        n: opts.n,
        level: opts.level,
        seed: opts.seed,
        passed: checks.iter().all(|c| c.passed),
        checks,
    })
}

fn geometry(o: &VerifyOptions, out: &mut Vec<Check>) {
    let n = o.n;
    group(out, "frame_orthonormality", "tangent frames are orthonormal and positive", || {
        let rule = sphere_rule(n, o.level)?;
        let res = fmax(rule.frames().iter().map(|f| f.orthonormality_residual()));
        let orient = fmax(rule.frames().iter().map(|f| (f.orientation() - 1.0).abs()));
        Ok(vec![
            Check::at_most("frame_orthonormality", "tangent frames are orthonormal", res, 1e-12),
            Check::at_most("frame_orientation", "tangent frames are positively oriented", orient, 1e-12),
        ])
    });
    group(out, "stereographic_round_trip", "stereographic projection and its inverse", || {
        let mut r = rng(o.seed, 1);
        let mut worst: f64 = 0.0;
        for _ in 0..200 {
            let xi = SpherePoint::random(&mut r, n)?;
            let x = SpherePoint::random(&mut r, n)?;
            if x.coords().dot(xi.coords()) < -0.99 {
                continue;
            }
            let back = inverse_stereo(&xi, &stereo(&xi, &x)?)?;
            worst = worst.max((back.coords() - x.coords()).amax());
        }
        Ok(vec![Check::at_most(
            "stereographic_round_trip",
            "inverse stereographic projection inverts the projection",
            worst,
            1e-10,
        )])
    });
    group(out, "mobius_group_law", "Möbius composition and inverse", || {
        let mut r = rng(o.seed, 2);
        let mut worst: f64 = 0.0;
        for _ in 0..20 {
            let a = MobiusElement::random(&mut r, n, 0.5, 2.0)?;
            let b = MobiusElement::random(&mut r, n, 0.5, 2.0)?;
            let x = SpherePoint::random(&mut r, n)?;
            let ab = a.compose(&b)?.apply(&x)?;
            let a_b = a.apply(&b.apply(&x)?)?;
            worst = worst.max((ab.coords() - a_b.coords()).amax());
            let e = a.compose(&a.inverse())?.apply(&x)?;
            worst = worst.max((e.coords() - x.coords()).amax());
        }
        Ok(vec![Check::at_most(
            "mobius_group_law",
            "composition acts as a group action; g∘g⁻¹ is the identity",
            worst,
            1e-9,
        )])
    });
    group(out, "mobius_exactness", "Möbius maps are equality cases", || {
        let rule = sphere_rule(n, o.level)?;
        let coarse = rule.coarse()?;
        let mut r = rng(o.seed, 3);
        let elems: Vec<MobiusElement> = (0..o.mobius_samples)
            .map(|_| MobiusElement::random(&mut r, n, 0.5, 2.0))
            .collect::<Result<_>>()?;
        let mut def: f64 = 0.0;
        let mut deg: f64 = 0.0;
        let mut conf: f64 = 0.0;
        for m in elems {
            let u = mobius_field(m);
            let d = deficit_with(&u, &rule, &coarse, o.degree_convention)?;
            def = def.max(d.deficit.abs());
            deg = deg.max((d.degree - 1.0).abs());
            conf = conf.max(max_conformality_residual(&u, &rule)?);
        }
        Ok(vec![
            Check::at_most("mobius_deficit", "the deficit of a Möbius map vanishes", def, 1e-6),
            Check::at_most("mobius_degree", "a Möbius map has degree one", deg, 1e-6),
            Check::at_most("mobius_conformality", "a Möbius map is weakly conformal at every node", conf, 1e-8),
        ])
    });
    group(out, "deficit_conformal_invariance", "the deficit is conformally invariant", || {
        let rule = sphere_rule(n, o.level)?;
        let mut diag = DVector::from_element(n, 1.0);
        diag[0] = 1.1;
        let u: std::sync::Arc<dyn SphereField> =
            std::sync::Arc::new(normalized_linear_field(DMatrix::from_diagonal(&diag))?);
        let d0 = deficit(&*u, &rule)?;
        let mut r = rng(o.seed, 4);
        let mut worst: f64 = 0.0;
        let mut tol: f64 = pass_tolerance(d0.quadrature_error);
        for _ in 0..5 {
            let m = MobiusElement::random(&mut r, n, 0.8, 1.25)?;
            let d = deficit(&ComposedField::new(u.clone(), m)?, &rule)?;
            worst = worst.max((d.deficit - d0.deficit).abs());
            tol = tol.max(pass_tolerance(d.quadrature_error));
        }
        Ok(vec![Check::at_most(
            "deficit_conformal_invariance",
            "the deficit is unchanged under precomposition with Möbius maps",
            worst,
            tol,
        )])
    });
}

fn quadrature(o: &VerifyOptions, out: &mut Vec<Check>) {
    let n = o.n;
    group(out, "weight_sum", "sphere weights average to one", || {
        let rule = sphere_rule(n, o.level)?;
        let s = integrate(&rule, |_| Ok(1.0))?;
        Ok(vec![Check::at_most(
            "weight_sum",
            "sphere weights average to one",
            (s - 1.0).abs(),
            1e-13,
        )])
    });
    group(out, "monomial_exactness", "exact integration of polynomials", || {
        let rule = sphere_rule(n, o.level)?;
        let top = rule.exactness().min(8);
        let mons: Vec<Vec<u32>> = (0..=top).flat_map(|k| monomials(n, k)).collect();
        let got = integrate_many(&rule, mons.len(), |f| {
            let x = f.x();
            Ok(mons
                .iter()
                .map(|a| a.iter().enumerate().map(|(i, &e)| x[i].powi(e as i32)).product())
                .collect())
        })?;
        let worst = fmax(mons.iter().zip(&got).map(|(a, g)| (g - sphere_monomial_mean(a)).abs()));
        Ok(vec![Check::at_most(
            "monomial_exactness",
            "sphere averages of monomials up to the rule's exactness match the closed form",
            worst,
            1e-12,
        )
        .with_detail(format!("{} monomials of degree <= {top}", mons.len()))])
    });
    group(out, "ball_moments", "ball averages", || {
        let ball = ball_rule(n, o.level.min(12))?;
        let v = integrate_ball(&ball, 2, |y| Ok(vec![1.0, y.norm_squared()]))?;
        let nf = n as f64;
        let err = (v[0] - 1.0).abs().max((v[1] - nf / (nf + 2.0)).abs());
        Ok(vec![Check::at_most(
            "ball_moments",
            "ball averages of 1 and |y|² are 1 and n/(n+2)",
            err,
            1e-13,
        )])
    });
    group(out, "disc_volume", "flat disc rule", || {
        let c = DVector::from_element(n - 1, 3.0);
        let disc = disc_rule(&c, 0.7, o.level)?;
        let s: f64 = disc.weights().iter().sum();
        let want = unit_ball_volume(n - 1) * 0.7f64.powi(n as i32 - 1);
        Ok(vec![Check::at_most(
            "disc_volume",
            "disc weights sum to the disc volume",
            (s - want).abs() / want,
            1e-13,
        )])
    });
    group(out, "parallel_determinism", "reductions do not depend on the worker count", || {
        let rule = sphere_rule(n, o.level)?;
        let f = |fr: &crate::sphere::Frame| Ok(fr.x()[0].exp() * fr.x()[n - 1].sin());
        let many = integrate(&rule, f)?;
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(1)
            .build()
            .map_err(|e| Error::InvalidArgument(e.to_string()))?;
        let one = pool.install(|| integrate(&rule, f))?;
        Ok(vec![Check::at_most(
            "parallel_determinism",
            "one worker and many workers give bit-identical integrals",
            if many.to_bits() == one.to_bits() { 0.0 } else { 1.0 },
            0.0,
        )])
    });
}

fn functionals(o: &VerifyOptions, out: &mut Vec<Check>) {
    let n = o.n;
    group(out, "identity_degree", "degree of the identity", || {
        let rule = sphere_rule(n, o.level)?;
        let coarse = rule.coarse()?;
        let id = deficit_with(&identity_field(n)?, &rule, &coarse, o.degree_convention)?;
        let refl = deficit_with(&reflection_field(n)?, &rule, &coarse, o.degree_convention)?;
        Ok(vec![
            Check::at_most("identity_degree", "deg(id) = 1", (id.degree - 1.0).abs(), 1e-12)
                .with_detail(format!("degree = {}", id.degree)),
            Check::at_most("identity_deficit", "the identity has zero deficit", id.deficit.abs(), 1e-12),
            Check::at_most("reflection_degree", "a reflection has degree -1", (refl.degree + 1.0).abs(), 1e-12)
                .with_detail(format!("degree = {}", refl.degree)),
        ])
    });
    group(out, "wente_chain", "Wente inequality on the sphere", || {
        let rule = sphere_rule(n, o.level)?;
        let mut r = rng(o.seed, 5);
        let mut gap = f64::INFINITY;
        let mut tol: f64 = 1e-8;
        for i in 0..5 {
            let u: Box<dyn SphereField> = if i == 0 {
                Box::new(mobius_field(MobiusElement::random(&mut r, n, 0.7, 1.4)?))
            } else {
                Box::new(normalized_linear_field(near_identity(&mut r, n, 0.2))?)
            };
            let w = wente_check(&*u, &rule)?;
            tol = tol.max(pass_tolerance(deficit(&*u, &rule)?.quadrature_error));
            gap = gap.min(w.lhs - w.mid).min(w.mid - w.rhs);
        }
        Ok(vec![Check::at_least(
            "wente_chain",
            "energy >= area >= |volume|^((n-1)/n)",
            gap,
            -tol,
        )])
    });
    group(out, "deficit_nonnegative", "the deficit is nonnegative on degree-one maps", || {
        let rule = sphere_rule(n, o.level)?;
        let mut r = rng(o.seed, 6);
        let mut worst = f64::INFINITY;
        let mut tol: f64 = 1e-8;
        for _ in 0..10 {
            let d = deficit(&normalized_linear_field(near_identity(&mut r, n, 0.3))?, &rule)?;
            worst = worst.min(d.deficit);
            tol = tol.max(pass_tolerance(d.quadrature_error));
        }
        Ok(vec![Check::at_least(
            "deficit_nonnegative",
            "the deficit is nonnegative on degree-one maps",
            worst,
            -tol,
        )])
    });
    group(out, "linear_projection", "projection onto degree <= 1", || {
        let rule = sphere_rule(n, o.level)?;
        let mut r = rng(o.seed, 7);
        let b = DMatrix::from_fn(n, n, |_, _| r.sample::<f64, _>(StandardNormal));
        let c = DVector::from_fn(n, |_, _| r.sample::<f64, _>(StandardNormal));
        let p = projections(&LinearField::new(b.clone(), c.clone())?, &rule)?;
        let err = (&p.a - &b).amax().max((&p.mean - &c).amax());
        Ok(vec![Check::at_most(
            "linear_projection",
            "A = n⨍u⊗x and the mean recover an affine field",
            err,
            1e-12,
        )])
    });
}

fn near_identity(r: &mut ChaCha8Rng, n: usize, s: f64) -> DMatrix<f64> {
    DMatrix::identity(n, n) + DMatrix::from_fn(n, n, |_, _| s * r.sample::<f64, _>(StandardNormal) / n as f64)
}

fn algebra(o: &VerifyOptions, out: &mut Vec<Check>) {
    let n = o.n;
    group(out, "moment_identities", "second moments of linear maps", || {
        let rule = sphere_rule(n, o.level)?;
        let mut r = rng(o.seed, 8);
        let nf = n as f64;
        let mut worst: f64 = 0.0;
        for _ in 0..o.matrices {
            let a = DMatrix::from_fn(n, n, |_, _| r.sample::<f64, _>(StandardNormal));
            let (pt, px) = moment_identities(&a, &rule)?;
            let a2 = a.norm_squared();
            worst = worst.max((pt - (nf - 1.0) / nf * a2).abs()).max((px - a2 / nf).abs());
        }
        Ok(vec![Check::at_most(
            "moment_identities",
            "⨍|AP_T|² = (n-1)/n |A|² and ⨍|Ax|² = |A|²/n",
            worst,
            1e-10,
        )])
    });
    group(out, "symmetric_functions", "elementary symmetric functions", || {
        let mut r = rng(o.seed, 9);
        let (mut expansion, mut euler, mut fd): (f64, f64, f64) = (0.0, 0.0, 0.0);
        for _ in 0..20 {
            let m = DMatrix::from_fn(n, n, |_, _| r.sample::<f64, _>(StandardNormal));
            expansion = expansion.max(det_expansion_check(&m));
            for k in 1..=n {
                let g = sigma_grad(k, &m);
                euler = euler.max((g.dot(&m) - k as f64 * sigma(k, &m)).abs());
                let h = 1e-6;
                for i in 0..n {
                    for j in 0..n {
                        let mut mp = m.clone();
                        mp[(i, j)] += h;
                        let mut mm = m.clone();
                        mm[(i, j)] -= h;
                        let d = (sigma(k, &mp) - sigma(k, &mm)) / (2.0 * h);
                        fd = fd.max((d - g[(i, j)]).abs());
                    }
                }
            }
        }
        Ok(vec![
            Check::at_most("determinant_expansion", "det(I+M) = 1 + Σσ_k(M)", expansion, 1e-10),
            Check::at_most("euler_identity", "σ_k'(M) : M = k σ_k(M)", euler, 1e-10),
            Check::at_most("sigma_gradient", "σ_k' matches central differences", fd, 1e-6),
        ])
    });
    group(out, "distance_to_rotations", "distance to SO(n)", || {
        let mut r = rng(o.seed, 10);
        let mut worst: f64 = 0.0;
        for _ in 0..20 {
            let q = random_rotation(&mut r, n);
            let s: DVector<f64> = DVector::from_fn(n, |_, _| r.random_range(0.5..2.0));
            let want: f64 = s.iter().map(|v| (v - 1.0).powi(2)).sum();
            let got = dist2_to_so(&(&q * DMatrix::from_diagonal(&s)));
            worst = worst.max((got - want).abs());
        }
        Ok(vec![Check::at_most(
            "distance_to_rotations",
            "dist²(Q diag(s), SO(n)) = Σ(s_i - 1)² for s > 0",
            worst,
            1e-10,
        )])
    });
    group(out, "null_lagrangian", "boundary expansion of the ball determinant", || {
        let rule = sphere_rule(n, o.level)?;
        let ball = ball_rule(n, o.level.min(12))?;
        let mut r = rng(o.seed, 11);
        let fields: Vec<HarmonicField> = (0..o.null_fields)
            .map(|_| {
                let s = r.random_range(0.1..0.5);
                HarmonicField::random(&mut r, n, &[1, 2, 3], s)
            })
            .collect::<Result<_>>()?;
        let reps = fields
            .par_iter()
            .map(|w| null_lagrangian_identity(w, &ball, &rule))
            .collect::<Result<Vec<_>>>()?;
        let res = fmax(reps.iter().map(|x| x.residual));
        let first = fmax(reps.iter().map(|x| (x.terms[0] - x.first_moment).abs()));
        let top = fmax(reps.iter().map(|x| (x.terms[n - 1] - x.volume).abs()));
        Ok(vec![
            Check::at_most(
                "null_lagrangian",
                "⨍_B det(I + ∇w_h) = 1 + Σ_k (n/k)⨍⟨w, σ_k' x⟩",
                res,
                1e-7,
            ),
            Check::at_most("null_lagrangian_first_term", "the k = 1 term is n⨍⟨w, x⟩", first, 1e-10),
            Check::at_most("null_lagrangian_top_term", "the k = n term is the volume ⨍⟨w, ⋀∂w⟩", top, 1e-10),
        ])
    });
}

fn inequalities(o: &VerifyOptions, out: &mut Vec<Check>) {
    let n = o.n;
    group(out, "poincare", "sharp Poincaré inequalities", || {
        let rule = sphere_rule(n, o.level)?;
        let ball = ball_rule(n, o.level.min(12))?;
        let mut r = rng(o.seed, 12);
        let mut corpus = Vec::with_capacity(o.poincare_fields);
        for _ in 0..o.poincare_fields {
            let mut degrees: Vec<usize> = (0..=3).filter(|_| r.random_bool(0.5)).collect();
            if degrees.is_empty() {
                degrees.push(r.random_range(0..=3));
            }
            let s = r.random_range(0.5..2.0);
            corpus.push(HarmonicField::random(&mut r, n, &degrees, s)?);
        }
        let stats = corpus
            .par_iter()
            .map(|u| {
                let (g1, g2) = poincare_gaps(u, &rule)?;
                let (m0, m1) = u.parseval();
                let q = integrate_many(&rule, 2, |f| {
                    let s = u.eval(f)?;
                    Ok(vec![s.value.norm_squared(), s.jac.norm_squared()])
                })?;
                let (lhs, rhs) = harmonic_energy_bound(u, &ball, &rule)?;
                let pars = (q[0] - m0).abs().max((q[1] - m1).abs());
                Ok([g1, g2, pars, rhs - lhs, (lhs - u.ball_energy()).abs()])
            })
            .collect::<Result<Vec<[f64; 5]>>>()?;
        let mut eq = rng(o.seed, 13);
        let mut eq1: f64 = 0.0;
        let mut eq2: f64 = 0.0;
        for _ in 0..10 {
            let s = eq.random_range(0.5..2.0);
            let u1 = HarmonicField::random(&mut eq, n, &[1], s)?;
            eq1 = eq1.max(poincare_gaps(&u1, &rule)?.0.abs());
            let u2 = HarmonicField::random(&mut eq, n, &[2], s)?;
            eq2 = eq2.max(poincare_gaps(&u2, &rule)?.1.abs());
        }
        Ok(vec![
            Check::at_least(
                "poincare_first",
                "⨍|∇u|² >= (n-1)⨍|u - Π₀u|²",
                fmin(stats.iter().map(|s| s[0])),
                -1e-8,
            ),
            Check::at_least(
                "poincare_second",
                "⨍|∇(u - Π₁u)|² >= 2n⨍|u - Π₀u - Π₁u|²",
                fmin(stats.iter().map(|s| s[1])),
                -1e-8,
            ),
            Check::at_most("poincare_first_equality", "equality for pure degree one", eq1, 1e-8),
            Check::at_most("poincare_second_equality", "equality for pure degree two", eq2, 1e-8),
            Check::at_most(
                "parseval",
                "⨍|u|² and ⨍|∇u|² from the spherical harmonic expansion",
                fmax(stats.iter().map(|s| s[2])),
                1e-8,
            ),
            Check::at_least(
                "harmonic_energy_bound",
                "⨍_B|∇u_h|² <= n/(n-1) ⨍|∇u|²",
                fmin(stats.iter().map(|s| s[3])),
                -1e-8,
            ),
            Check::at_most(
                "harmonic_energy_closed_form",
                "⨍_B|∇u_h|² = Σ n k ⨍|P_k|²",
                fmax(stats.iter().map(|s| s[4])),
                1e-8,
            ),
        ])
    });
    group(out, "figalli_zhang", "pointwise lower bound for |X+Y|^p", || {
        let pairs: Vec<(f64, f64)> = [2.0, 3.0, 4.0]
            .iter()
            .flat_map(|&p| [0.25, 0.5, 0.75].map(|k| (p, k)))
            .collect();
        let results: Vec<Vec<Check>> = pairs
            .par_iter()
            .enumerate()
            .map(|(i, &(p, k))| {
                let c0 = figalli_zhang_c0(p, k, 1e-9);
                let seed = o.seed.wrapping_mul(0x9E37_79B9_7F4A_7C15).wrapping_add(i as u64);
                let ok = figalli_zhang_check(p, k, c0, o.fz_samples, seed);
                let over = figalli_zhang_check(p, k, 4.0 * c0, o.fz_samples, seed);
                let tag = format!("p{p}_kappa{k}");
                vec![
                    Check::at_least(&format!("figalli_zhang_c0_{tag}"), "searched c0 is positive", c0, f64::MIN_POSITIVE),
                    Check::at_most(
                        &format!("figalli_zhang_{tag}"),
                        "no sampled pair violates the bound with the searched c0",
                        ok.violations as f64,
                        0.0,
                    )
                    .with_detail(format!("c0 = {c0}, samples = {}, worst = {}", ok.samples, ok.worst_margin)),
                    Check::at_least(
                        &format!("figalli_zhang_sharp_{tag}"),
                        "4 c0 is violated by some sampled pair",
                        over.violations as f64,
                        1.0,
                    ),
                ]
            })
            .collect();
        Ok(results.into_iter().flatten().collect())
    });
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small(suite: Suite) -> VerifyOptions {
        VerifyOptions {
            suite,
            level: 8,
            mobius_samples: 3,
            matrices: 5,
            null_fields: 3,
            poincare_fields: 10,
            fz_samples: 20_000,
            ..Default::default()
        }
    }

    #[test]
    fn every_suite_passes_small() {
        for s in [Suite::Geometry, Suite::Quadrature, Suite::Functionals, Suite::Algebra, Suite::Inequalities] {
            let rep = run_verify(&small(s)).unwrap();
            let bad: Vec<_> = rep.failures().collect();
            assert!(rep.passed, "{s:?}: {bad:#?}");
        }
    }

    #[test]
    fn mis_signed_degree_is_flagged() {
        let mut o = small(Suite::Functionals);
        o.degree_convention = DegreeConvention::Reversed;
        let rep = run_verify(&o).unwrap();
        assert!(!rep.passed);
        assert!(!rep.check("identity_degree").unwrap().passed);
    }

    #[test]
    fn unknown_suite() {
        assert!(matches!("bogus".parse::<Suite>(), Err(Error::UnknownSuite(_))));
        assert_eq!("all".parse::<Suite>().unwrap(), Suite::All);
    }

    #[test]
    fn bad_dimension_is_an_error() {
        let o = VerifyOptions { n: 9, ..small(Suite::Geometry) };
        assert!(run_verify(&o).is_err());
    }
}

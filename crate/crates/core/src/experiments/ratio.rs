use std::str::FromStr;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::Serialize;

use super::{fmt17, log_grid, CsvRow};
use crate::error::{Error, Result};
use crate::field::{normalized_linear_field, ComposedField, SphereBump, SphereField};
use crate::fit::{center, fit_mobius};
use crate::functionals::{deficit, linear_part_dist2, pass_tolerance};
use crate::quadrature::sphere_rule;
use crate::sphere::{MobiusElement, SpherePoint};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum RatioFamily {
    /// `x ↦ (I + tB)x/|(I + tB)x|` with a fixed symmetric traceless `B`.
    NormalizedLinear,
    /// The identity plus a bump of height `t` on a cap of radius `1/2`.
    BumpSphere,
    /// The normalized linear map precomposed with `φ_{ξ₀, 1/2}`.
    Composed,
}

impl RatioFamily {
    pub fn name(self) -> &'static str {
        match self {
            RatioFamily::NormalizedLinear => "normalized_linear",
            RatioFamily::BumpSphere => "bump_sphere",
            RatioFamily::Composed => "composed",
        }
    }

    /// Member `t` of the family in dimension `n`; `seed` fixes the direction.
    pub fn field(self, n: usize, t: f64, seed: u64) -> Result<Arc<dyn SphereField>> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        match self {
            RatioFamily::NormalizedLinear | RatioFamily::Composed => {
                let b = traceless_direction(&mut rng, n);
                let u: Arc<dyn SphereField> = Arc::new(normalized_linear_field(DMatrix::identity(n, n) + b * t)?);
                if self == RatioFamily::Composed {
                    let mut xi = DVector::zeros(n);
                    xi[0] = 0.6;
                    xi[n - 1] = 0.8;
                    let m = MobiusElement::dilation(SpherePoint::new(xi)?, 0.5)?;
                    Ok(Arc::new(ComposedField::new(u, m)?))
                } else {
                    Ok(u)
                }
            }
            RatioFamily::BumpSphere => {
                let c = SpherePoint::random(&mut rng, n)?;
                let v: DVector<f64> = DVector::from_fn(n, |_, _| StandardNormal.sample(&mut rng));
                let dir = &v - c.coords() * c.coords().dot(&v);
                Ok(Arc::new(SphereBump::new(c, 0.5, t, dir)?))
            }
        }
    }
}

impl FromStr for RatioFamily {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "normalized_linear" => Ok(RatioFamily::NormalizedLinear),
            "bump_sphere" => Ok(RatioFamily::BumpSphere),
            "composed" => Ok(RatioFamily::Composed),
            _ => Err(Error::InvalidArgument(format!("unknown family '{s}'"))),
        }
    }
}

/// Symmetric, traceless, unit Frobenius norm.
fn traceless_direction(rng: &mut ChaCha8Rng, n: usize) -> DMatrix<f64> {
    let g: DMatrix<f64> = DMatrix::from_fn(n, n, |_, _| StandardNormal.sample(rng));
    let mut s = (&g + g.transpose()) * 0.5;
    let tr = s.trace() / n as f64;
    for i in 0..n {
        s[(i, i)] -= tr;
    }
    let norm = s.norm();
    s / norm
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RatioOptions {
    pub family: RatioFamily,
    pub n: usize,
    pub grid: Vec<f64>,
    pub level: usize,
    pub seed: u64,
    pub center_tol: f64,
}

impl Default for RatioOptions {
    fn default() -> Self {
        RatioOptions {
            family: RatioFamily::NormalizedLinear,
            n: 3,
            grid: log_grid(1e-3, 1e-1, 9).expect("valid grid"),
            level: 16,
            seed: 0,
            center_tol: 1e-10,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RatioProbeRow {
    pub family: String,
    pub perturbation: f64,
    pub deficit: f64,
    pub fitted_distance: f64,
    pub ratio: f64,
    pub linear_part_dist2: f64,
    /// `linear_part_dist2 / deficit`
    pub linear_ratio: f64,
    pub quadrature_error: f64,
    /// `ok`, `centering_failed` (values for the uncentered map) or an error.
    pub status: String,
}

impl CsvRow for RatioProbeRow {
    fn header() -> &'static [&'static str] {
        &[
            "family",
            "perturbation",
            "deficit",
            "fitted_distance",
            "ratio",
            "linear_part_dist2",
            "linear_ratio",
            "quadrature_error",
            "status",
        ]
    }
    fn cells(&self) -> Vec<String> {
        vec![
            self.family.clone(),
            fmt17(self.perturbation),
            fmt17(self.deficit),
            fmt17(self.fitted_distance),
            fmt17(self.ratio),
            fmt17(self.linear_part_dist2),
            fmt17(self.linear_ratio),
            fmt17(self.quadrature_error),
            self.status.clone(),
        ]
    }
}

/// Center, measure the deficit, fit a Möbius map and compute the distance of
/// the linear part of the harmonic extension from `SO(n)`.
pub fn ratio_row(opts: &RatioOptions, t: f64) -> Result<RatioProbeRow> {
    let n = opts.n;
    let rule = sphere_rule(n, opts.level)?;
    let u = opts.family.field(n, t, opts.seed)?;
    let (v, status): (Arc<dyn SphereField>, &str) = match center(&*u, &rule, opts.center_tol) {
        Ok(c) => (Arc::new(ComposedField::new(u.clone(), c.element)?), "ok"),
        Err(Error::CenteringFailed { .. }) => (u.clone(), "centering_failed"),
        Err(e) => return Err(e),
    };
    let d = deficit(&*v, &rule)?;
    let fit = fit_mobius(&*v, &rule, None)?;
    let l2 = linear_part_dist2(&*v, &rule)?;
    let tol = pass_tolerance(d.quadrature_error);
    let ratio_of = |x: f64| if d.deficit > tol { x / d.deficit } else { f64::NAN };
    Ok(RatioProbeRow {
        family: opts.family.name().into(),
        perturbation: t,
        deficit: d.deficit,
        fitted_distance: fit.objective,
        ratio: ratio_of(fit.objective),
        linear_part_dist2: l2,
        linear_ratio: ratio_of(l2),
        quadrature_error: d.quadrature_error,
        status: status.into(),
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct RatioReport {
    pub options: RatioOptions,
    pub rows: Vec<RatioProbeRow>,
    /// Largest finite `ratio` over the grid (implementation-dependent
    /// empirical constant).
    pub max_ratio: f64,
    pub max_linear_ratio: f64,
}

pub fn ratio_probe(opts: &RatioOptions) -> Result<RatioReport> {
    if opts.grid.iter().any(|t| !(*t >= 0.0 && *t < 1.0)) {
        return Err(Error::InvalidArgument("perturbations must lie in [0, 1)".into()));
    }
    sphere_rule(opts.n, opts.level)?;
    let rows: Vec<RatioProbeRow> = opts
        .grid
        .par_iter()
        .map(|&t| {
            ratio_row(opts, t).unwrap_or_else(|e| RatioProbeRow {
                family: opts.family.name().into(),
                perturbation: t,
                deficit: f64::NAN,
                fitted_distance: f64::NAN,
                ratio: f64::NAN,
                linear_part_dist2: f64::NAN,
                linear_ratio: f64::NAN,
                quadrature_error: f64::NAN,
                status: e.to_string(),
            })
        })
        .collect();
    let fmax = |f: fn(&RatioProbeRow) -> f64| rows.iter().map(f).filter(|v| v.is_finite()).fold(f64::NAN, f64::max);
    Ok(RatioReport {
        options: opts.clone(),
        max_ratio: fmax(|r| r.ratio),
        max_linear_ratio: fmax(|r| r.linear_ratio),
        rows,
    })
}

impl RatioReport {
    pub fn csv(&self) -> String {
        super::to_csv(&self.rows)
    }

    /// Both ratio columns are finite wherever the deficit is resolved, and
    /// neither grows monotonically as `t` decreases across the whole grid.
    pub fn bounded(&self) -> bool {
        let mut rows: Vec<&RatioProbeRow> = self.rows.iter().filter(|r| r.perturbation > 0.0).collect();
        rows.sort_by(|a, b| b.perturbation.total_cmp(&a.perturbation));
        let ok = rows
            .iter()
            .all(|r| r.status == "ok" && r.ratio.is_finite() && r.linear_ratio.is_finite());
        let diverging = |f: fn(&RatioProbeRow) -> f64| {
            let v: Vec<f64> = rows.iter().map(|r| f(r)).collect();
            v.len() >= 3 && v.windows(2).all(|w| w[1] > w[0]) && v[v.len() - 1] > 2.0 * v[0]
        };
        ok && !diverging(|r| r.ratio) && !diverging(|r| r.linear_ratio)
    }
}

use rayon::prelude::*;
use serde::Serialize;

use super::{fmt17, log_grid, CsvRow};
use crate::error::{Error, Result};
use crate::field::{bump_family_field, inverse_stereographic_field, PlaneField};
use crate::fit::{fit_planar, planar_objective, FitResult};
use crate::functionals::flat_deficit;
use crate::field::PlanarMobiusElement;
use crate::quadrature::{disc_rule, sphere_rule};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SharpnessOptions {
    pub n: usize,
    pub eps_min: f64,
    pub eps_max: f64,
    pub points: usize,
    /// Disc rule level; the error estimate uses half of it.
    pub level: usize,
    /// Sphere rule level for the part of the objective off the disc.
    pub sphere_level: usize,
    /// Prepend an `ε = 0` row (excluded from the slopes).
    pub include_zero: bool,
}

impl Default for SharpnessOptions {
    fn default() -> Self {
        SharpnessOptions {
            n: 4,
            eps_min: 1e-2,
            eps_max: 1e-1,
            points: 8,
            level: 16,
            sphere_level: 6,
            include_zero: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub eps: f64,
    pub flat_deficit: f64,
    pub mobius_distance: f64,
    pub ratio: f64,
    pub quadrature_error: f64,
    /// Empty on success, otherwise the error that stopped this row.
    pub status: String,
}

impl CsvRow for SweepRow {
    fn header() -> &'static [&'static str] {
        &["eps", "flat_deficit", "mobius_distance", "ratio", "quadrature_error", "status"]
    }
    fn cells(&self) -> Vec<String> {
        vec![
            fmt17(self.eps),
            fmt17(self.flat_deficit),
            fmt17(self.mobius_distance),
            fmt17(self.ratio),
            fmt17(self.quadrature_error),
            if self.status.is_empty() { "ok".into() } else { self.status.clone() },
        ]
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SharpnessReport {
    pub options: SharpnessOptions,
    pub rows: Vec<SweepRow>,
    /// Least-squares slope of `ln flat_deficit` against `ln ε`.
    pub deficit_slope: f64,
    pub distance_slope: f64,
    /// `max ratio / min ratio` over the rows with `ε > 0`.
    pub ratio_spread: f64,
    /// `flat_deficit` strictly increases with `ε`.
    pub monotone: bool,
}

/// Least-squares slope of `ln y` on `ln x`.
pub fn log_log_slope(x: &[f64], y: &[f64]) -> f64 {
    let m = x.len() as f64;
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let mx = lx.iter().sum::<f64>() / m;
    let my = ly.iter().sum::<f64>() / m;
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = lx.iter().map(|a| (a - mx) * (a - mx)).sum();
    sxy / sxx
}

/// One sweep row: flat deficit on the unit disc around the decay center, its
/// error against the half-level disc rule, and the fitted distance to `Ψ`.
pub fn sharpness_row(n: usize, eps: f64, level: usize, sphere_level: usize) -> Result<SweepRow> {
    let u = bump_family_field(n, eps, None)?;
    let phi = inverse_stereographic_field(n)?;
    let disc = disc_rule(u.center(), 1.0, level)?;
    let coarse = disc_rule(u.center(), 1.0, level.div_ceil(2))?;
    let d = flat_deficit(&u, &phi, &disc)?;
    let dc = flat_deficit(&u, &phi, &coarse)?;
    let rule = sphere_rule(n, sphere_level)?;
    let dist = if eps == 0.0 {
        planar_objective(&u, &phi, &disc, &rule, &PlanarMobiusElement::identity(n)?, (n - 1) as f64)?
    } else {
        let fit: FitResult<_> = fit_planar(&u, &disc, &phi as &dyn PlaneField, &rule, None)?;
        fit.objective
    };
    Ok(SweepRow {
        eps,
        flat_deficit: d,
        mobius_distance: dist,
        ratio: if d > 0.0 { dist / d } else { f64::NAN },
        quadrature_error: (d - dc).abs(),
        status: String::new(),
    })
}

/// Runs the sweep with `ε` decreasing from `eps_max` to `eps_min`. Rows are
/// computed in parallel and returned in grid order; a failing row is kept
/// with its error in `status`.
pub fn sharpness_sweep(opts: &SharpnessOptions) -> Result<SharpnessReport> {
    if !(opts.eps_max <= 0.2) {
        return Err(Error::InvalidEps(opts.eps_max));
    }
    let mut grid = log_grid(opts.eps_min, opts.eps_max, opts.points)?;
    if opts.include_zero {
        grid.push(0.0);
    }
    // Fail fast on bad dimensions or levels before spawning rows.
    inverse_stereographic_field(opts.n)?;
    sphere_rule(opts.n, opts.sphere_level)?;
    let rows: Vec<SweepRow> = grid
        .par_iter()
        .map(|&eps| {
            sharpness_row(opts.n, eps, opts.level, opts.sphere_level).unwrap_or_else(|e| SweepRow {
                eps,
                flat_deficit: f64::NAN,
                mobius_distance: f64::NAN,
                ratio: f64::NAN,
                quadrature_error: f64::NAN,
                status: e.to_string(),
            })
        })
        .collect();
    let ok: Vec<&SweepRow> = rows.iter().filter(|r| r.eps > 0.0 && r.status.is_empty()).collect();
    let eps: Vec<f64> = ok.iter().map(|r| r.eps).collect();
    let defs: Vec<f64> = ok.iter().map(|r| r.flat_deficit).collect();
    let dists: Vec<f64> = ok.iter().map(|r| r.mobius_distance).collect();
    let ratios: Vec<f64> = ok.iter().map(|r| r.ratio).collect();
    let spread = ratios.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
        / ratios.iter().cloned().fold(f64::INFINITY, f64::min);
    // Rows run from large to small ε.
    let monotone = defs.windows(2).all(|w| w[0] > w[1]);
    Ok(SharpnessReport {
        options: opts.clone(),
        deficit_slope: log_log_slope(&eps, &defs),
        distance_slope: log_log_slope(&eps, &dists),
        ratio_spread: spread,
        monotone,
        rows,
    })
}

impl SharpnessReport {
    pub fn csv(&self) -> String {
        super::to_csv(&self.rows)
    }

    /// Slopes within `0.3` of `n − 1`, ratio spread at most 5, deficit
    /// increasing in `ε`, and no failed rows.
    pub fn passed(&self) -> bool {
        let target = (self.options.n - 1) as f64;
        (self.deficit_slope - target).abs() <= 0.3
            && (self.distance_slope - target).abs() <= 0.3
            && self.ratio_spread <= 5.0
            && self.monotone
            && self.rows.iter().all(|r| r.status.is_empty())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn slope_of_power_law() {
        let x = [0.01, 0.02, 0.05, 0.1];
        let y: Vec<f64> = x.iter().map(|v: &f64| 7.0 * v.powi(3)).collect();
        assert!((log_log_slope(&x, &y) - 3.0).abs() < 1e-12);
    }

    #[test]
    fn zero_row_vanishes() {
        let r = sharpness_row(3, 0.0, 6, 4).unwrap();
        assert_eq!(r.flat_deficit, 0.0);
        assert_eq!(r.mobius_distance, 0.0);
        assert!(r.ratio.is_nan());
    }

    #[test]
    fn small_sweep_n3() {
        let opts = SharpnessOptions {
            n: 3,
            points: 3,
            level: 10,
            sphere_level: 4,
            include_zero: true,
            ..Default::default()
        };
        let rep = sharpness_sweep(&opts).unwrap();
        assert_eq!(rep.rows.len(), 4);
        assert_eq!(rep.rows[3].eps, 0.0);
        assert!(rep.monotone);
        assert!((rep.deficit_slope - 2.0).abs() < 0.3, "{}", rep.deficit_slope);
        let csv = rep.csv();
        assert!(csv.starts_with("eps,flat_deficit,mobius_distance,ratio,quadrature_error,status\n"));
        assert_eq!(csv.lines().count(), 5);
    }

    #[test]
    fn rejects_large_eps() {
        let opts = SharpnessOptions {
            eps_max: 0.5,
            ..Default::default()
        };
        assert!(matches!(sharpness_sweep(&opts), Err(Error::InvalidEps(_))));
    }
}

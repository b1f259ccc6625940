//! Batch drivers: invariant suites, the flat sharpness sweep, the stability
//! ratio probe and single-map reports. Each driver returns plain data; CSV and
//! JSON rendering is deterministic so repeated runs are byte-identical.

mod config;
mod ratio;
mod sharpness;
mod single;
mod verify;

pub use config::Config;
pub use ratio::{ratio_probe, ratio_row, RatioFamily, RatioOptions, RatioProbeRow, RatioReport};
pub use sharpness::{log_log_slope, sharpness_row, sharpness_sweep, SharpnessOptions, SharpnessReport, SweepRow};
pub use single::{center_report, deficit_report, fit_report, CenterReport, DeficitJson, FitElement, FitReport, SingleOptions};
pub use verify::{run_verify, Check, Suite, VerifyOptions, VerifyReport};

use crate::error::{Error, Result};

/// Float at 17 significant digits. Non-finite values print as `NaN`, `inf`
/// and `-inf`.
pub fn fmt17(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else if x.is_nan() {
        "NaN".into()
    } else if x > 0.0 {
        "inf".into()
    } else {
        "-inf".into()
    }
}

/// Rows that render to CSV.
pub trait CsvRow {
    fn header() -> &'static [&'static str];
    fn cells(&self) -> Vec<String>;
}

pub fn to_csv<R: CsvRow>(rows: &[R]) -> String {
    let mut out = R::header().join(",");
    out.push('\n');
    for r in rows {
        out.push_str(&r.cells().join(","));
        out.push('\n');
    }
    out
}

/// `k` log-spaced points from `hi` down to `lo`.
pub fn log_grid(lo: f64, hi: f64, k: usize) -> Result<Vec<f64>> {
    if !(lo > 0.0 && hi >= lo && k >= 1) {
        return Err(Error::InvalidArgument(format!("log grid [{lo}, {hi}] with {k} points")));
    }
    if k == 1 {
        return Ok(vec![hi]);
    }
    let (a, b) = (lo.ln(), hi.ln());
    let mut g: Vec<f64> = (0..k).map(|i| (b + (a - b) * i as f64 / (k - 1) as f64).exp()).collect();
    g[0] = hi;
    g[k - 1] = lo;
    Ok(g)
}

/// Parses `log:LO:HI:K` or a comma-separated list of values.
pub fn parse_grid(s: &str) -> Result<Vec<f64>> {
    let bad = || Error::InvalidArgument(format!("bad grid '{s}'"));
    if let Some(rest) = s.strip_prefix("log:") {
        let parts: Vec<&str> = rest.split(':').collect();
        if parts.len() != 3 {
            return Err(bad());
        }
        let lo: f64 = parts[0].trim().parse().map_err(|_| bad())?;
        let hi: f64 = parts[1].trim().parse().map_err(|_| bad())?;
        let k: usize = parts[2].trim().parse().map_err(|_| bad())?;
        return log_grid(lo, hi, k);
    }
    let v = s
        .split(',')
        .filter(|t| !t.trim().is_empty())
        .map(|t| t.trim().parse::<f64>().map_err(|_| bad()))
        .collect::<Result<Vec<_>>>()?;
    if v.is_empty() {
        return Err(bad());
    }
    Ok(v)
}

//! Deterministic product quadrature on `S^{n-1}`, on the unit ball `B₁`, and on
//! flat discs `D_r(c) ⊂ R^{n-1}`.
//!
//! Sphere rules use hyperspherical angles: each polar angle with weight
//! `sin^k θ` becomes a Gauss–Jacobi rule in `t = cos θ` with `α = β = (k-1)/2`,
//! and the azimuth uses `2L` equispaced points shifted by a quarter step, which
//! keeps every node off the coordinate poles for odd and even `L` alike. With `L`
//! points per polar angle the rule integrates every polynomial of degree
//! `≤ 2L − 1` exactly. Sphere and ball weights are normalized to sum to one so
//! that weighted sums are averages; disc weights sum to the disc volume.
//!
//! Integration evaluates nodes in parallel and reduces with fixed-order
//! pairwise summation, so results do not depend on the worker count.

use std::f64::consts::PI;
use std::path::{Path, PathBuf};

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};
use crate::sphere::{frame_at, Frame, SpherePoint};

/// Default cap on the number of nodes of a single rule.
pub const DEFAULT_NODE_CAP: usize = 4_000_000;

/// Nodes and weights of the `m`-point Gauss–Jacobi rule for the weight
/// `(1−t)^α (1+t)^β` on `[−1, 1]`, weights normalized to sum to one.
pub fn gauss_jacobi(m: usize, alpha: f64, beta: f64) -> (Vec<f64>, Vec<f64>) {
    assert!(m >= 1);
    let ab = alpha + beta;
    let mut t = DMatrix::zeros(m, m);
    for k in 0..m {
        let kf = k as f64;
        let diag = if k == 0 {
            (beta - alpha) / (ab + 2.0)
        } else {
            (beta * beta - alpha * alpha) / ((2.0 * kf + ab) * (2.0 * kf + ab + 2.0))
        };
        t[(k, k)] = diag;
        if k + 1 < m {
            let j = kf + 1.0;
            let num = 4.0 * j * (j + alpha) * (j + beta) * (j + ab);
            let den = (2.0 * j + ab).powi(2) * (2.0 * j + ab + 1.0) * (2.0 * j + ab - 1.0);
            let off = (num / den).sqrt();
            t[(k, k + 1)] = off;
            t[(k + 1, k)] = off;
        }
    }
    let eig = t.symmetric_eigen();
    let mut pairs: Vec<(f64, f64)> = (0..m)
        .map(|i| (eig.eigenvalues[i], eig.eigenvectors[(0, i)].powi(2)))
        .collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    // symmetric weights give exactly symmetric nodes
    if alpha == beta {
        for i in 0..m / 2 {
            let j = m - 1 - i;
            let x = 0.5 * (pairs[j].0 - pairs[i].0);
            let w = 0.5 * (pairs[j].1 + pairs[i].1);
            pairs[i] = (-x, w);
            pairs[j] = (x, w);
        }
        if m % 2 == 1 {
            pairs[m / 2].0 = 0.0;
        }
    }
    let total: f64 = pairs.iter().map(|p| p.1).sum();
    pairs.into_iter().map(|(x, w)| (x, w / total)).unzip()
}

/// Gauss–Legendre rule on `[a, b]` with absolute weights.
pub fn gauss_legendre(m: usize, a: f64, b: f64) -> (Vec<f64>, Vec<f64>) {
    let (x, w) = gauss_jacobi(m, 0.0, 0.0);
    let h = 0.5 * (b - a);
    (
        x.iter().map(|t| a + h * (t + 1.0)).collect(),
        w.iter().map(|v| v * 2.0 * h).collect(),
    )
}

/// Unit-sphere nodes in `R^d` (`d ≥ 2`) and average-normalized weights.
fn sphere_nodes(d: usize, level: usize) -> (Vec<DVector<f64>>, Vec<f64>) {
    let naz = 2 * level;
    let az: Vec<f64> = (0..naz).map(|j| (j as f64 + 0.25) * PI / level as f64).collect();
    // polar angle i (0-based) carries sin^{d-2-i}
    let polar: Vec<(Vec<f64>, Vec<f64>)> = (0..d - 2)
        .map(|i| {
            let k = (d - 2 - i) as f64;
            let a = (k - 1.0) / 2.0;
            gauss_jacobi(level, a, a)
        })
        .collect();
    let total = level.pow((d - 2) as u32) * naz;
    let mut nodes = Vec::with_capacity(total);
    let mut weights = Vec::with_capacity(total);
    let mut idx = vec![0usize; d - 2];
    loop {
        for &phi in &az {
            let mut x = DVector::zeros(d);
            let mut w = 1.0 / naz as f64;
            let mut s = 1.0;
            for (i, &k) in idx.iter().enumerate() {
                let t = polar[i].0[k];
                x[i] = s * t;
                s *= (1.0 - t * t).max(0.0).sqrt();
                w *= polar[i].1[k];
            }
            x[d - 2] = s * phi.cos();
            x[d - 1] = s * phi.sin();
            let norm = x.norm();
            nodes.push(x / norm);
            weights.push(w);
        }
        // odometer over the polar indices
        let mut pos = d - 2;
        loop {
            if pos == 0 {
                return (nodes, weights);
            }
            pos -= 1;
            idx[pos] += 1;
            if idx[pos] < level {
                break;
            }
            idx[pos] = 0;
        }
    }
}

fn check_level(level: usize) -> Result<()> {
    if level == 0 {
        Err(Error::InvalidLevel(level))
    } else {
        Ok(())
    }
}

fn sphere_node_count(d: usize, level: usize) -> usize {
    level.saturating_pow((d - 2) as u32).saturating_mul(2 * level)
}

/// Average-normalized rule on `S^{n-1}` with a frame cached at every node.
#[derive(Debug, Clone)]
pub struct SphereRule {
    n: usize,
    level: usize,
    frames: Vec<Frame>,
    weights: Vec<f64>,
}

impl SphereRule {
    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn level(&self) -> usize {
        self.level
    }

    /// Polynomial degree integrated exactly.
    pub fn exactness(&self) -> usize {
        2 * self.level - 1
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn frames(&self) -> &[Frame] {
        &self.frames
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn nodes(&self) -> impl Iterator<Item = &SpherePoint> {
        self.frames.iter().map(Frame::base)
    }

    /// The rule at half the level, used for two-level error estimates.
    pub fn coarse(&self) -> Result<SphereRule> {
        sphere_rule(self.n, self.level.div_ceil(2).max(1))
    }

    fn from_parts(n: usize, level: usize, nodes: Vec<DVector<f64>>, weights: Vec<f64>) -> Result<Self> {
        let frames = nodes
            .into_iter()
            .map(|x| frame_at(&SpherePoint::new(x)?))
            .collect::<Result<Vec<_>>>()?;
        Ok(SphereRule {
            n,
            level,
            frames,
            weights,
        })
    }
}

/// Product rule on `S^{n-1}` with `level` points per polar angle.
pub fn sphere_rule(n: usize, level: usize) -> Result<SphereRule> {
    sphere_rule_with_cap(n, level, DEFAULT_NODE_CAP)
}

pub fn sphere_rule_with_cap(n: usize, level: usize, cap: usize) -> Result<SphereRule> {
    check_dim(n)?;
    check_level(level)?;
    let requested = sphere_node_count(n, level);
    if requested > cap {
        return Err(Error::ResourceLimit { requested, cap });
    }
    let (nodes, weights) = sphere_nodes(n, level);
    SphereRule::from_parts(n, level, nodes, weights)
}

/// Average-normalized rule on the unit ball `B₁ ⊂ R^n`.
#[derive(Debug, Clone)]
pub struct BallRule {
    n: usize,
    level: usize,
    nodes: Vec<DVector<f64>>,
    weights: Vec<f64>,
}

impl BallRule {
    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn level(&self) -> usize {
        self.level
    }

    pub fn exactness(&self) -> usize {
        2 * self.level - 1
    }

    pub fn nodes(&self) -> &[DVector<f64>] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }
}

/// Radial Gauss–Jacobi (weight `r^{n-1}`) times the sphere rule.
pub fn ball_rule(n: usize, level: usize) -> Result<BallRule> {
    check_dim(n)?;
    check_level(level)?;
    let requested = sphere_node_count(n, level).saturating_mul(level);
    if requested > DEFAULT_NODE_CAP {
        return Err(Error::ResourceLimit {
            requested,
            cap: DEFAULT_NODE_CAP,
        });
    }
    let (sn, sw) = sphere_nodes(n, level);
    let (rs, rw) = gauss_jacobi(level, 0.0, (n - 1) as f64);
    let mut nodes = Vec::with_capacity(requested);
    let mut weights = Vec::with_capacity(requested);
    for (s, wr) in rs.iter().zip(&rw) {
        let r = 0.5 * (s + 1.0);
        for (x, wx) in sn.iter().zip(&sw) {
            nodes.push(x * r);
            weights.push(wr * wx);
        }
    }
    Ok(BallRule {
        n,
        level,
        nodes,
        weights,
    })
}

/// Volume of the unit ball in `R^d`.
pub fn unit_ball_volume(d: usize) -> f64 {
    match d {
        0 => 1.0,
        1 => 2.0,
        _ => 2.0 * PI / d as f64 * unit_ball_volume(d - 2),
    }
}

/// Rule on a flat disc `D_radius(center) ⊂ R^d`; weights sum to its volume.
#[derive(Debug, Clone)]
pub struct DiscRule {
    center: DVector<f64>,
    radius: f64,
    level: usize,
    nodes: Vec<DVector<f64>>,
    weights: Vec<f64>,
}

impl DiscRule {
    pub fn center(&self) -> &DVector<f64> {
        &self.center
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn level(&self) -> usize {
        self.level
    }

    pub fn nodes(&self) -> &[DVector<f64>] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.center.len()
    }
}

/// Number of equal radial panels used by [`disc_rule`].
pub const DISC_PANELS: usize = 4;

/// Disc rule with `level` Gauss–Legendre points on each of [`DISC_PANELS`]
/// radial panels and a `level` sphere rule in the angular variables.
pub fn disc_rule(center: &DVector<f64>, radius: f64, level: usize) -> Result<DiscRule> {
    disc_rule_with_panels(center, radius, level, DISC_PANELS)
}

pub fn disc_rule_with_panels(
    center: &DVector<f64>,
    radius: f64,
    level: usize,
    panels: usize,
) -> Result<DiscRule> {
    let d = center.len();
    if !(2..=5).contains(&d) {
        return Err(Error::UnsupportedDimension(d + 1));
    }
    check_level(level)?;
    if !(radius > 0.0) || panels == 0 {
        return Err(Error::InvalidArgument(format!("disc radius {radius}, panels {panels}")));
    }
    let requested = sphere_node_count(d, level).saturating_mul(level * panels);
    if requested > DEFAULT_NODE_CAP {
        return Err(Error::ResourceLimit {
            requested,
            cap: DEFAULT_NODE_CAP,
        });
    }
    let (sn, sw) = sphere_nodes(d, level);
    let surface = d as f64 * unit_ball_volume(d);
    let mut nodes = Vec::with_capacity(requested);
    let mut weights = Vec::with_capacity(requested);
    for p in 0..panels {
        let a = p as f64 / panels as f64;
        let b = (p + 1) as f64 / panels as f64;
        let (rs, rw) = gauss_legendre(level.max(3), a, b);
        for (r, wr) in rs.iter().zip(&rw) {
            let radial = wr * r.powi(d as i32 - 1) * surface * radius.powi(d as i32);
            for (x, wx) in sn.iter().zip(&sw) {
                nodes.push(center + x * (r * radius));
                weights.push(radial * wx);
            }
        }
    }
    Ok(DiscRule {
        center: center.clone(),
        radius,
        level,
        nodes,
        weights,
    })
}

/// Fixed-order pairwise sum.
pub fn pairwise_sum(v: &[f64]) -> f64 {
    if v.len() <= 32 {
        v.iter().sum()
    } else {
        let mid = v.len() / 2;
        pairwise_sum(&v[..mid]) + pairwise_sum(&v[mid..])
    }
}

/// Weighted sums of `m` integrands evaluated together at each node.
pub fn weighted_sums<T, F>(nodes: &[T], weights: &[f64], m: usize, f: F) -> Result<Vec<f64>>
where
    T: Sync,
    F: Fn(&T) -> Result<Vec<f64>> + Sync,
{
    let vals: Vec<Vec<f64>> = nodes
        .par_iter()
        .map(|node| {
            let v = f(node)?;
            if v.len() != m {
                return Err(Error::DimensionMismatch {
                    expected: m,
                    got: v.len(),
                });
            }
            Ok(v)
        })
        .collect::<Result<_>>()?;
    let mut column = vec![0.0; nodes.len()];
    let mut out = Vec::with_capacity(m);
    for k in 0..m {
        for (i, (v, w)) in vals.iter().zip(weights).enumerate() {
            column[i] = v[k] * w;
        }
        out.push(pairwise_sum(&column));
    }
    Ok(out)
}

/// `⨍_{S^{n-1}} f` for a scalar integrand of the node frame.
pub fn integrate<F>(rule: &SphereRule, f: F) -> Result<f64>
where
    F: Fn(&Frame) -> Result<f64> + Sync,
{
    Ok(weighted_sums(&rule.frames, &rule.weights, 1, |fr| Ok(vec![f(fr)?]))?[0])
}

/// Several sphere averages from one pass over the nodes.
pub fn integrate_many<F>(rule: &SphereRule, m: usize, f: F) -> Result<Vec<f64>>
where
    F: Fn(&Frame) -> Result<Vec<f64>> + Sync,
{
    weighted_sums(&rule.frames, &rule.weights, m, f)
}

/// Fine-rule value and `|fine − coarse|`.
pub fn integrate_with_error<F>(coarse: &SphereRule, fine: &SphereRule, f: F) -> Result<(f64, f64)>
where
    F: Fn(&Frame) -> Result<f64> + Sync,
{
    let c = integrate(coarse, &f)?;
    let v = integrate(fine, &f)?;
    Ok((v, (v - c).abs()))
}

/// `⨍_{B₁} f`.
pub fn integrate_ball<F>(rule: &BallRule, m: usize, f: F) -> Result<Vec<f64>>
where
    F: Fn(&DVector<f64>) -> Result<Vec<f64>> + Sync,
{
    weighted_sums(&rule.nodes, &rule.weights, m, f)
}

/// `∫_{D} f` (unnormalized).
pub fn integrate_disc<F>(rule: &DiscRule, m: usize, f: F) -> Result<Vec<f64>>
where
    F: Fn(&DVector<f64>) -> Result<Vec<f64>> + Sync,
{
    weighted_sums(&rule.nodes, &rule.weights, m, f)
}

/// On-disk form of a sphere rule.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RuleFile {
    pub kind: String,
    pub n: usize,
    pub level: usize,
    pub exactness: usize,
    pub nodes: Vec<Vec<f64>>,
    pub weights: Vec<f64>,
}

impl From<&SphereRule> for RuleFile {
    fn from(r: &SphereRule) -> Self {
        RuleFile {
            kind: "sphere".into(),
            n: r.n,
            level: r.level,
            exactness: r.exactness(),
            nodes: r.nodes().map(|p| p.coords().iter().copied().collect()).collect(),
            weights: r.weights.clone(),
        }
    }
}

/// Directory cache of sphere rules keyed by `(kind, n, level)`.
#[derive(Debug, Clone)]
pub struct RuleCache {
    dir: PathBuf,
}

impl RuleCache {
    pub fn new(dir: impl AsRef<Path>) -> Self {
        RuleCache {
            dir: dir.as_ref().to_path_buf(),
        }
    }

    fn path(&self, n: usize, level: usize) -> PathBuf {
        self.dir.join(format!("sphere_n{n}_l{level}.json"))
    }

    /// Loads the rule from disk, building and storing it on a miss.
    pub fn sphere(&self, n: usize, level: usize) -> Result<SphereRule> {
        let path = self.path(n, level);
        if let Ok(text) = std::fs::read_to_string(&path) {
            let file: RuleFile =
                serde_json::from_str(&text).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
            if file.kind == "sphere" && file.n == n && file.level == level {
                let nodes = file.nodes.into_iter().map(DVector::from_vec).collect();
                return SphereRule::from_parts(n, level, nodes, file.weights);
            }
        }
        let rule = sphere_rule(n, level)?;
        std::fs::create_dir_all(&self.dir)?;
        let text = serde_json::to_string(&RuleFile::from(&rule)).map_err(|e| Error::Io(e.to_string()))?;
        std::fs::write(&path, text)?;
        Ok(rule)
    }
}

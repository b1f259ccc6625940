//! The pointwise lower bound
//!
//! ```text
//! |X+Y|^p ≥ |X|^p + p|X|^{p-2}⟨X,Y⟩ + (1-κ)p/2 |X|^{p-2}|Y|² + c₀|Y|^p
//! ```
//!
//! for vectors `X, Y ∈ R^m`, `p ≥ 2`, `κ ∈ (0,1)`. The margin is evaluated in
//! the cancellation-free form `a^q [f(s) + κ q |Y|²/a] − c₀|Y|^p` with
//! `a = |X|²`, `q = p/2`, `s = (2⟨X,Y⟩ + |Y|²)/a`, `f(s) = (1+s)^q − 1 − qs`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

/// Dimension of the sampled vectors. The margin only depends on
/// `(|X|, |Y|, ⟨X,Y⟩)`, so any `m ≥ 2` exercises every configuration.
pub const SAMPLE_DIM: usize = 6;

/// `(1+s)^q − 1 − qs` without cancellation for small `s`.
fn taylor_rest(q: f64, s: f64) -> f64 {
    if q == 1.0 {
        return 0.0;
    }
    if s.abs() < 0.01 {
        let mut coef = q * (q - 1.0) / 2.0;
        let mut pow = s * s;
        let mut sum = 0.0;
        for j in 2..40 {
            let term = coef * pow;
            sum += term;
            if term.abs() <= 1e-18 * sum.abs() {
                break;
            }
            coef *= (q - j as f64) / (j as f64 + 1.0);
            pow *= s;
        }
        sum
    } else {
        (q * s.ln_1p()).exp() - 1.0 - q * s
    }
}

fn margin_parts(p: f64, kappa: f64, c0: f64, a: f64, y2: f64, xy: f64) -> f64 {
    let q = p / 2.0;
    let ypow = y2.powf(q);
    if a == 0.0 {
        return ypow - c0 * ypow;
    }
    let s = (2.0 * xy + y2) / a;
    a.powf(q) * (taylor_rest(q, s) + kappa * q * y2 / a) - c0 * ypow
}

/// Left side minus right side of the inequality for the vectors `x`, `y`.
pub fn fz_margin(p: f64, kappa: f64, c0: f64, x: &[f64], y: &[f64]) -> f64 {
    let a: f64 = x.iter().map(|v| v * v).sum();
    let y2: f64 = y.iter().map(|v| v * v).sum();
    let xy: f64 = x.iter().zip(y).map(|(u, v)| u * v).sum();
    margin_parts(p, kappa, c0, a, y2, xy)
}

/// With `|X| = 1`, `|Y| = t` and angle `θ` between them, the largest admissible
/// `c₀` at that configuration: `[f(s) + κ q t²] / t^p`.
pub fn fz_reduced_ratio(p: f64, kappa: f64, t: f64, theta: f64) -> f64 {
    let q = p / 2.0;
    let s = 2.0 * t * theta.cos() + t * t;
    (taylor_rest(q, s) + kappa * q * t * t) / t.powf(p)
}

/// Largest `c₀` (minus `tol`) for which the inequality holds, from a grid over
/// `(ln t, θ)` refined by compass search, capped by the `X = 0` bound `c₀ ≤ 1`.
pub fn figalli_zhang_c0(p: f64, kappa: f64, tol: f64) -> f64 {
    assert!(p >= 2.0 && kappa > 0.0 && kappa < 1.0, "need p >= 2, 0 < kappa < 1");
    let h = |lt: f64, th: f64| fz_reduced_ratio(p, kappa, lt.exp(), th);
    let (nt, nth) = (241, 121);
    let (lt_lo, lt_hi) = (-12.0f64, 12.0f64);
    let mut best = (f64::INFINITY, 0.0, 0.0);
    for i in 0..nt {
        let lt = lt_lo + (lt_hi - lt_lo) * i as f64 / (nt - 1) as f64;
        for j in 0..nth {
            let th = std::f64::consts::PI * j as f64 / (nth - 1) as f64;
            let v = h(lt, th);
            if v < best.0 {
                best = (v, lt, th);
            }
        }
    }
    let (mut v, mut lt, mut th) = best;
    let mut step = (lt_hi - lt_lo) / (nt - 1) as f64;
    while step > 1e-12 {
        let mut moved = false;
        for (dl, dt) in [(step, 0.0), (-step, 0.0), (0.0, step), (0.0, -step)] {
            let (l2, t2) = (lt + dl, (th + dt).clamp(0.0, std::f64::consts::PI));
            let v2 = h(l2, t2);
            if v2 < v {
                v = v2;
                lt = l2;
                th = t2;
                moved = true;
            }
        }
        if !moved {
            step *= 0.5;
        }
    }
    v.min(1.0) - tol
}

/// Outcome of a sampled check.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FzCheck {
    pub samples: usize,
    pub violations: usize,
    /// Smallest margin normalized by `(|X|² + |Y|²)^{p/2}`.
    pub worst_margin: f64,
}

fn unit(rng: &mut ChaCha8Rng) -> Vec<f64> {
    let v: Vec<f64> = (0..SAMPLE_DIM).map(|_| rng.sample(StandardNormal)).collect();
    let n = v.iter().map(|a| a * a).sum::<f64>().sqrt();
    v.into_iter().map(|a| a / n).collect()
}

/// Unit vector orthogonal to `e`.
fn orthogonal_unit(rng: &mut ChaCha8Rng, e: &[f64]) -> Vec<f64> {
    let mut z = unit(rng);
    let d: f64 = z.iter().zip(e).map(|(a, b)| a * b).sum();
    z.iter_mut().zip(e).for_each(|(a, b)| *a -= d * b);
    let n = z.iter().map(|a| a * a).sum::<f64>().sqrt();
    z.into_iter().map(|a| a / n).collect()
}

/// Evaluates the margin on `samples` seeded pairs, mixing Gaussian pairs with
/// adversarial ones (`Y ∥ X`, `Y ⊥ X`, log-spaced `|Y|/|X|` over `[1e-4, 1e4]`
/// at arbitrary angles) plus the degenerate `X = 0` and `Y = 0` cases.
pub fn figalli_zhang_check(p: f64, kappa: f64, c0: f64, samples: usize, seed: u64) -> FzCheck {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut violations = 0;
    let mut worst = f64::INFINITY;
    for i in 0..samples {
        let scale = 10f64.powf(rng.random_range(-3.0..3.0));
        let xhat = unit(&mut rng);
        let t = 10f64.powf(-4.0 + 8.0 * ((i / 7) % 997) as f64 / 996.0);
        let (x, y): (Vec<f64>, Vec<f64>) = match i % 7 {
            0 if i == 0 => (vec![0.0; SAMPLE_DIM], unit(&mut rng)),
            0 if i == 7 => (xhat.clone(), vec![0.0; SAMPLE_DIM]),
            0 => {
                let r = 10f64.powf(rng.random_range(-4.0..4.0));
                let y: Vec<f64> = (0..SAMPLE_DIM)
                    .map(|_| rng.sample::<f64, _>(StandardNormal) * r)
                    .collect();
                (xhat.clone(), y)
            }
            1 => (xhat.clone(), xhat.iter().map(|v| v * t).collect()),
            2 => (xhat.clone(), xhat.iter().map(|v| -v * t).collect()),
            3 => {
                let z = orthogonal_unit(&mut rng, &xhat);
                (xhat.clone(), z.iter().map(|v| v * t).collect())
            }
            4 | 5 => {
                let z = orthogonal_unit(&mut rng, &xhat);
                let th: f64 = if i % 7 == 4 {
                    rng.random_range(0.0..std::f64::consts::PI)
                } else {
                    std::f64::consts::PI - rng.random_range(0.0f64..0.5).powi(2)
                };
                let tt = if i % 7 == 4 {
                    10f64.powf(rng.random_range(-4.0..4.0))
                } else {
                    10f64.powf(rng.random_range(-1.0..1.0))
                };
                let y = xhat
                    .iter()
                    .zip(&z)
                    .map(|(a, b)| tt * (th.cos() * a + th.sin() * b))
                    .collect();
                (xhat.clone(), y)
            }
            _ => {
                if i % 1000 == 6 {
                    (vec![0.0; SAMPLE_DIM], unit(&mut rng))
                } else {
                    let y = (0..SAMPLE_DIM).map(|_| rng.sample(StandardNormal)).collect();
                    (xhat.clone(), y)
                }
            }
        };
        let x: Vec<f64> = x.iter().map(|v| v * scale).collect();
        let y: Vec<f64> = y.iter().map(|v| v * scale).collect();
        let m = fz_margin(p, kappa, c0, &x, &y);
        let a: f64 = x.iter().map(|v| v * v).sum();
        let b: f64 = y.iter().map(|v| v * v).sum();
        let norm = (a + b).powf(p / 2.0);
        if m < 0.0 {
            violations += 1;
        }
        if norm > 0.0 {
            worst = worst.min(m / norm);
        }
    }
    FzCheck {
        samples,
        violations,
        worst_margin: worst,
    }
}

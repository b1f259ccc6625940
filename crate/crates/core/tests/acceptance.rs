//! Acceptance run: one PASS/FAIL line per criterion, then a repeat of every
//! criterion to confirm the reports are byte-identical.
//!
//! `cargo test --release --test acceptance`

use std::sync::Arc;
use std::time::Instant;

use conformal_rigidity::experiments::{
    ratio_probe, sharpness_sweep, RatioFamily, RatioOptions, SharpnessOptions,
};
use conformal_rigidity::field::{mobius_field, normalized_linear_field, ComposedField, HarmonicField, SphereField};
use conformal_rigidity::fit::{center, composed_mean, recentered};
use conformal_rigidity::functionals::{
    deficit, harmonic_energy_bound, max_conformality_residual, moment_identities, null_lagrangian_identity,
    poincare_gaps,
};
use conformal_rigidity::linalg::{figalli_zhang_c0, figalli_zhang_check};
use conformal_rigidity::quadrature::{ball_rule, integrate_many, sphere_rule};
use conformal_rigidity::sphere::{MobiusElement, SpherePoint};
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde_json::json;

struct Outcome {
    passed: bool,
    summary: String,
    /// Everything the criterion measured, serialized; compared across runs.
    report: String,
}

fn outcome(passed: bool, summary: String, report: serde_json::Value) -> Outcome {
    Outcome {
        passed,
        summary,
        report: serde_json::to_string(&report).unwrap(),
    }
}

fn mobius_exactness() -> Outcome {
    let mut rows = Vec::new();
    let (mut def, mut deg, mut conf) = (0.0f64, 0.0f64, 0.0f64);
    for n in [3, 4, 5] {
        let rule = sphere_rule(n, 16).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(100 + n as u64);
        for _ in 0..20 {
            let m = MobiusElement::random(&mut rng, n, 0.5, 2.0).unwrap();
            let u = mobius_field(m);
            let d = deficit(&u, &rule).unwrap();
            let c = max_conformality_residual(&u, &rule).unwrap();
            def = def.max(d.deficit.abs());
            deg = deg.max((d.degree - 1.0).abs());
            conf = conf.max(c);
            rows.push(json!([n, d.deficit, d.degree, c]));
        }
    }
    outcome(
        def <= 1e-6 && deg <= 1e-6 && conf <= 1e-8,
        format!("max |deficit| {def:.2e}, max |deg-1| {deg:.2e}, max conformality residual {conf:.2e}"),
        json!(rows),
    )
}

fn moment_identities_check() -> Outcome {
    let mut worst = 0.0f64;
    let mut rows = Vec::new();
    for n in [3, 4, 5] {
        let rule = sphere_rule(n, 4).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(200 + n as u64);
        let nf = n as f64;
        for _ in 0..50 {
            let a = DMatrix::from_fn(n, n, |_, _| rng.sample::<f64, _>(StandardNormal));
            let (pt, px) = moment_identities(&a, &rule).unwrap();
            // Closed forms from ⨍x_i x_j = δ_ij / n.
            let a2 = a.norm_squared();
            let e = (pt - (nf - 1.0) / nf * a2).abs().max((px - a2 / nf).abs());
            worst = worst.max(e);
            rows.push(json!([n, pt, px]));
        }
    }
    outcome(worst <= 1e-10, format!("max residual {worst:.2e}"), json!(rows))
}

fn null_lagrangian() -> Outcome {
    let (mut res, mut first, mut top) = (0.0f64, 0.0f64, 0.0f64);
    let mut rows = Vec::new();
    for n in [3, 4] {
        let rule = sphere_rule(n, 12).unwrap();
        let ball = ball_rule(n, 12).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(300 + n as u64);
        for _ in 0..20 {
            let s = rng.random_range(0.1..0.5);
            let w = HarmonicField::random(&mut rng, n, &[1, 2, 3], s).unwrap();
            let r = null_lagrangian_identity(&w, &ball, &rule).unwrap();
            res = res.max(r.residual);
            first = first.max((r.terms[0] - r.first_moment).abs());
            top = top.max((r.terms[n - 1] - r.volume).abs());
            rows.push(json!([n, r.lhs, r.rhs, r.terms]));
        }
    }
    outcome(
        res <= 1e-7 && first <= 1e-10 && top <= 1e-10,
        format!("max residual {res:.2e}, k=1 term gap {first:.2e}, k=n term gap {top:.2e}"),
        json!(rows),
    )
}

fn poincare_parseval() -> Outcome {
    let n = 3;
    let rule = sphere_rule(n, 8).unwrap();
    let ball = ball_rule(n, 8).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(400);
    let (mut g1, mut g2, mut pars, mut bound) = (f64::INFINITY, f64::INFINITY, 0.0f64, f64::INFINITY);
    let mut rows = Vec::new();
    for _ in 0..200 {
        let mut degrees: Vec<usize> = (0..=3).filter(|_| rng.random_bool(0.5)).collect();
        if degrees.is_empty() {
            degrees.push(1);
        }
        let s = rng.random_range(0.5..2.0);
        let u = HarmonicField::random(&mut rng, n, &degrees, s).unwrap();
        let (a, b) = poincare_gaps(&u, &rule).unwrap();
        // Parseval oracle: each part was normalized to ⨍|P_k|² = s², and
        // -Δ_S P_k = k(k+n-2) P_k.
        let m: f64 = degrees.len() as f64 * s * s;
        let e: f64 = degrees.iter().map(|&k| (k * (k + n - 2)) as f64 * s * s).sum();
        let q = integrate_many(&rule, 2, |f| {
            let x = u.eval(f)?;
            Ok(vec![x.value.norm_squared(), x.jac.norm_squared()])
        })
        .unwrap();
        let (lhs, rhs) = harmonic_energy_bound(&u, &ball, &rule).unwrap();
        g1 = g1.min(a);
        g2 = g2.min(b);
        pars = pars.max((q[0] - m).abs()).max((q[1] - e).abs());
        bound = bound.min(rhs - lhs);
        rows.push(json!([degrees, a, b, q, lhs, rhs]));
    }
    let mut eq = (0.0f64, 0.0f64);
    for _ in 0..10 {
        let s = rng.random_range(0.5..2.0);
        let u1 = HarmonicField::random(&mut rng, n, &[1], s).unwrap();
        let u2 = HarmonicField::random(&mut rng, n, &[2], s).unwrap();
        eq.0 = eq.0.max(poincare_gaps(&u1, &rule).unwrap().0.abs());
        eq.1 = eq.1.max(poincare_gaps(&u2, &rule).unwrap().1.abs());
    }
    outcome(
        g1 >= -1e-8 && g2 >= -1e-8 && eq.0 <= 1e-8 && eq.1 <= 1e-8 && pars <= 1e-8 && bound >= -1e-8,
        format!(
            "min gaps {g1:.2e}/{g2:.2e}, equality gaps {:.2e}/{:.2e}, Parseval {pars:.2e}, energy bound slack {bound:.2e}",
            eq.0, eq.1
        ),
        json!({"rows": rows, "equality": [eq.0, eq.1]}),
    )
}

fn figalli_zhang() -> Outcome {
    let mut ok = true;
    let mut rows = Vec::new();
    let mut i = 0u64;
    for p in [2.0, 3.0, 4.0] {
        for k in [0.25, 0.5, 0.75] {
            let c0 = figalli_zhang_c0(p, k, 1e-9);
            let a = figalli_zhang_check(p, k, c0, 1_000_000, 500 + i);
            let b = figalli_zhang_check(p, k, 4.0 * c0, 1_000_000, 500 + i);
            ok &= c0 > 0.0 && a.violations == 0 && b.violations >= 1;
            rows.push(json!([p, k, c0, a.violations, b.violations, a.worst_margin]));
            i += 1;
        }
    }
    let summary = rows
        .iter()
        .map(|r| format!("c0({},{})={:.4}", r[0], r[1], r[2].as_f64().unwrap()))
        .collect::<Vec<_>>()
        .join(" ");
    outcome(ok, summary, json!(rows))
}

fn sharpness() -> Outcome {
    let rep = sharpness_sweep(&SharpnessOptions::default()).unwrap();
    outcome(
        rep.passed(),
        format!(
            "slopes {:.4} (deficit), {:.4} (distance), ratio spread {:.4}",
            rep.deficit_slope, rep.distance_slope, rep.ratio_spread
        ),
        json!({"csv": rep.csv(), "slopes": [rep.deficit_slope, rep.distance_slope]}),
    )
}

fn ratio_bounded() -> Outcome {
    let mut ok = true;
    let mut parts = Vec::new();
    let mut csv = String::new();
    for (n, level) in [(3, 16), (4, 12)] {
        let opts = RatioOptions {
            family: RatioFamily::NormalizedLinear,
            n,
            level,
            ..Default::default()
        };
        let rep = ratio_probe(&opts).unwrap();
        ok &= rep.bounded() && rep.max_ratio.is_finite() && rep.max_linear_ratio.is_finite();
        parts.push(format!("n={n}: max ratios {:.4}/{:.4}", rep.max_ratio, rep.max_linear_ratio));
        csv.push_str(&rep.csv());
    }
    outcome(ok, parts.join(", "), json!(csv))
}

fn centering() -> Outcome {
    let n = 3;
    let rule = sphere_rule(n, 48).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(800);
    let (mut mean, mut diff) = (0.0f64, 0.0f64);
    let mut rows = Vec::new();
    for _ in 0..10 {
        let b = DMatrix::from_fn(n, n, |_, _| 0.1 * rng.sample::<f64, _>(StandardNormal));
        let xi = SpherePoint::random(&mut rng, n).unwrap();
        let lambda = rng.random_range(0.5..2.0);
        let base: Arc<dyn SphereField> = Arc::new(normalized_linear_field(DMatrix::identity(n, n) + b).unwrap());
        let u: Arc<dyn SphereField> =
            Arc::new(ComposedField::new(base, MobiusElement::dilation(xi, lambda).unwrap()).unwrap());
        let c = center(&*u, &rule, 1e-10).unwrap();
        // Re-integrate the mean on a finer rule than the one used to solve.
        let fine = sphere_rule(n, 64).unwrap();
        let m = composed_mean(&*u, &fine, &c.element).unwrap().norm();
        let before = deficit(&*u, &fine).unwrap();
        let after = deficit(&recentered(u.clone(), &c.element).unwrap(), &fine).unwrap();
        mean = mean.max(m);
        diff = diff.max((before.deficit - after.deficit).abs());
        rows.push(json!([m, before.deficit, after.deficit, c.element]));
    }
    outcome(
        mean <= 1e-6 && diff <= 1e-8,
        format!("max |mean| {mean:.2e}, max deficit change {diff:.2e}"),
        json!(rows),
    )
}

type Criterion = (&'static str, fn() -> Outcome);

const CRITERIA: [Criterion; 8] = [
    ("Möbius exactness", mobius_exactness),
    ("moment identities", moment_identities_check),
    ("null-Lagrangian expansion", null_lagrangian),
    ("Poincaré and Parseval", poincare_parseval),
    ("pointwise p-inequality", figalli_zhang),
    ("sharpness exponents", sharpness),
    ("stability ratio boundedness", ratio_bounded),
    ("centering", centering),
];

fn main() {
    let mut all = true;
    let mut reports = Vec::new();
    for (i, (name, f)) in CRITERIA.iter().enumerate() {
        let t = Instant::now();
        let o = f();
        let verdict = if o.passed { "PASS" } else { "FAIL" };
        println!(
            "criterion {} ({name}): {verdict}: {} [{:.1}s]",
            i + 1,
            o.summary,
            t.elapsed().as_secs_f64()
        );
        all &= o.passed;
        reports.push(o.report);
    }
    let t = Instant::now();
    let same: Vec<usize> = CRITERIA
        .iter()
        .enumerate()
        .filter(|(i, (_, f))| f().report != reports[*i])
        .map(|(i, _)| i + 1)
        .collect();
    let det = same.is_empty();
    println!(
        "criterion 9 (determinism): {}: {} [{:.1}s]",
        if det { "PASS" } else { "FAIL" },
        if det {
            "criteria 1-8 reproduced byte for byte".to_string()
        } else {
            format!("reports differ for criteria {same:?}")
        },
        t.elapsed().as_secs_f64()
    );
    all &= det;
    if !all {
        std::process::exit(1);
    }
}

//! Integral functionals of sphere fields: conformal energy, deficit and
//! degree, the isoperimetric chain, low-order harmonic projections, Poincaré
//! gaps, harmonic-extension energy, the null-Lagrangian boundary expansion and
//! gradient distances. All averages use average-normalized rules.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{gamma_n, PlaneField, SphereField};
use crate::linalg::{det_with_last, dist2_to_so, sigma_grad};
use crate::quadrature::{integrate_ball, integrate_disc, integrate_many, BallRule, DiscRule, SphereRule};

/// `(|J|²/m)^{m/2}` for an `n × m` Jacobian; equals `1` on rotations of `P_T`.
pub fn energy_density(jac: &DMatrix<f64>) -> f64 {
    let m = jac.ncols() as f64;
    (jac.norm_squared() / m).powf(m / 2.0)
}

/// `det[∂_{τ_1}u, …, ∂_{τ_{n-1}}u, u]`.
pub fn degree_density(value: &DVector<f64>, jac: &DMatrix<f64>) -> f64 {
    det_with_last(jac, value)
}

/// `max |JᵗJ − (|J|²/m) I|`: zero exactly for weakly conformal Jacobians.
pub fn conformality_residual(jac: &DMatrix<f64>) -> f64 {
    let m = jac.ncols();
    let g = jac.transpose() * jac;
    let s = jac.norm_squared() / m as f64;
    (g - DMatrix::identity(m, m) * s).amax()
}

/// Pass tolerance tied to a measured quadrature error.
pub fn pass_tolerance(quadrature_error: f64) -> f64 {
    (10.0 * quadrature_error).max(1e-8)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DeficitReport {
    pub energy: f64,
    pub deficit: f64,
    pub degree: f64,
    pub quadrature_error: f64,
}

/// Sign of the degree integrand. `Reversed` is deliberately wrong and exists
/// to exercise the sign checks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum DegreeConvention {
    #[default]
    Standard,
    Reversed,
}

fn energy_and_degree(u: &dyn SphereField, rule: &SphereRule, conv: DegreeConvention) -> Result<(f64, f64)> {
    let sign = match conv {
        DegreeConvention::Standard => 1.0,
        DegreeConvention::Reversed => -1.0,
    };
    let v = integrate_many(rule, 2, |f| {
        let s = u.eval(f)?;
        Ok(vec![energy_density(&s.jac), degree_density(&s.value, &s.jac)])
    })?;
    Ok((v[0], sign * v[1]))
}

/// Energy, deficit and degree on `rule`, with the error estimated against the
/// half-level rule.
pub fn deficit(u: &dyn SphereField, rule: &SphereRule) -> Result<DeficitReport> {
    deficit_with(u, rule, &rule.coarse()?, DegreeConvention::Standard)
}

pub fn deficit_with(
    u: &dyn SphereField,
    fine: &SphereRule,
    coarse: &SphereRule,
    conv: DegreeConvention,
) -> Result<DeficitReport> {
    check(u.dim(), fine.dim())?;
    let (e, d) = energy_and_degree(u, fine, conv)?;
    let (ec, dc) = energy_and_degree(u, coarse, conv)?;
    Ok(DeficitReport {
        energy: e,
        deficit: e - 1.0,
        degree: d,
        quadrature_error: (e - ec).abs().max((d - dc).abs()),
    })
}

fn check(a: usize, b: usize) -> Result<()> {
    if a == b {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected: a, got: b })
    }
}

/// Largest conformality residual over the nodes of `rule`.
pub fn max_conformality_residual(u: &dyn SphereField, rule: &SphereRule) -> Result<f64> {
    let v = rule
        .frames()
        .iter()
        .map(|f| Ok(conformality_residual(&u.eval(f)?.jac)))
        .collect::<Result<Vec<f64>>>()?;
    Ok(v.into_iter().fold(0.0, f64::max))
}

/// `lhs ≥ mid ≥ rhs` up to quadrature error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WenteChain {
    /// `⨍(|∇_T u|²/(n−1))^{(n−1)/2}`
    pub lhs: f64,
    /// `⨍ √det(∇_T uᵗ ∇_T u)`
    pub mid: f64,
    /// `|V_n(u)|^{(n−1)/n}`
    pub rhs: f64,
    /// `V_n(u) = ⨍⟨u, ⋀∂_τ u⟩`
    pub volume: f64,
}

pub fn wente_check(u: &dyn SphereField, rule: &SphereRule) -> Result<WenteChain> {
    check(u.dim(), rule.dim())?;
    let n = u.dim() as f64;
    let v = integrate_many(rule, 3, |f| {
        let s = u.eval(f)?;
        let g = s.jac.transpose() * &s.jac;
        Ok(vec![
            energy_density(&s.jac),
            g.determinant().max(0.0).sqrt(),
            degree_density(&s.value, &s.jac),
        ])
    })?;
    Ok(WenteChain {
        lhs: v[0],
        mid: v[1],
        rhs: v[2].abs().powf((n - 1.0) / n),
        volume: v[2],
    })
}

/// `Π_{n,0} u = mean` and `Π_{n,1} u (x) = A x` with `A = ∇u_h(0)`.
#[derive(Debug, Clone, PartialEq)]
pub struct HarmonicLinearPart {
    pub a: DMatrix<f64>,
    pub mean: DVector<f64>,
}

/// `mean = ⨍u`, `A = n ⨍ u ⊗ x`.
pub fn projections(u: &dyn SphereField, rule: &SphereRule) -> Result<HarmonicLinearPart> {
    check(u.dim(), rule.dim())?;
    let n = u.dim();
    let v = integrate_many(rule, n + n * n, |f| {
        let s = u.eval(f)?;
        let x = f.x();
        let mut out = Vec::with_capacity(n + n * n);
        out.extend(s.value.iter().copied());
        for i in 0..n {
            for j in 0..n {
                out.push(s.value[i] * x[j]);
            }
        }
        Ok(out)
    })?;
    let mean = DVector::from_iterator(n, v[..n].iter().copied());
    let a = DMatrix::from_row_iterator(n, n, v[n..].iter().map(|t| t * n as f64));
    Ok(HarmonicLinearPart { a, mean })
}

/// `dist²(∇u_h(0); SO(n))`.
pub fn linear_part_dist2(u: &dyn SphereField, rule: &SphereRule) -> Result<f64> {
    Ok(dist2_to_so(&projections(u, rule)?.a))
}

/// Gaps in the sharp Poincaré inequalities for the first two eigenvalues:
/// `gap1 = ⨍|∇_T u|² − (n−1)⨍|u − Π₀u|²` and
/// `gap2 = ⨍|∇_T(u − Π₁u)|² − 2n⨍|u − Π₀u − Π₁u|²`.
pub fn poincare_gaps(u: &dyn SphereField, rule: &SphereRule) -> Result<(f64, f64)> {
    let n = u.dim();
    let p = projections(u, rule)?;
    let v = integrate_many(rule, 4, |f| {
        let s = u.eval(f)?;
        let d0 = &s.value - &p.mean;
        let d1 = &d0 - &p.a * f.x();
        let j1 = &s.jac - &p.a * f.p_t();
        Ok(vec![s.jac.norm_squared(), d0.norm_squared(), j1.norm_squared(), d1.norm_squared()])
    })?;
    let nf = n as f64;
    Ok((v[0] - (nf - 1.0) * v[1], v[2] - 2.0 * nf * v[3]))
}

/// `(⨍_{B₁}|∇u_h|², n/(n−1) ⨍|∇_T u|²)`; needs an exact harmonic extension.
pub fn harmonic_energy_bound(u: &dyn SphereField, ball: &BallRule, rule: &SphereRule) -> Result<(f64, f64)> {
    let h = u.harmonic_extension().ok_or(Error::NotBandLimited)?;
    check(u.dim(), ball.dim())?;
    check(u.dim(), rule.dim())?;
    let n = u.dim() as f64;
    let lhs = integrate_ball(ball, 1, |y| Ok(vec![h.eval_ball(y)?.jac.norm_squared()]))?[0];
    let e = integrate_many(rule, 1, |f| Ok(vec![u.eval(f)?.jac.norm_squared()]))?[0];
    Ok((lhs, n / (n - 1.0) * e))
}

/// Both sides of the boundary expansion of `⨍_{B₁} det(I + ∇w_h)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NullLagrangianReport {
    pub lhs: f64,
    pub rhs: f64,
    pub residual: f64,
    /// `(n/k) ⨍⟨w, G_k x⟩` for `k = 1, …, n`, with `G_k` the entrywise gradient
    /// of `σ_k` at `∇_T w P_Tᵗ`.
    pub terms: Vec<f64>,
    /// `n ⨍⟨w, x⟩`
    pub first_moment: f64,
    /// `⨍⟨w, ⋀∂_τ w⟩`
    pub volume: f64,
    /// `⨍_{B₁} det ∇w_h`
    pub ball_det: f64,
}

pub fn null_lagrangian_identity(
    w: &dyn SphereField,
    ball: &BallRule,
    rule: &SphereRule,
) -> Result<NullLagrangianReport> {
    let h = w.harmonic_extension().ok_or(Error::NotBandLimited)?;
    check(w.dim(), ball.dim())?;
    check(w.dim(), rule.dim())?;
    let n = w.dim();
    let ident = DMatrix::<f64>::identity(n, n);
    let b = integrate_ball(ball, 2, |y| {
        let g = h.eval_ball(y)?.jac;
        Ok(vec![(&ident + &g).determinant(), g.determinant()])
    })?;
    let s = integrate_many(rule, n + 2, |f| {
        let smp = w.eval(f)?;
        let m = &smp.jac * f.p_t().transpose();
        let x = f.x();
        let mut out: Vec<f64> = (1..=n).map(|k| smp.value.dot(&(sigma_grad(k, &m) * x))).collect();
        out.push(smp.value.dot(x));
        out.push(degree_density(&smp.value, &smp.jac));
        Ok(out)
    })?;
    let terms: Vec<f64> = (1..=n).map(|k| n as f64 / k as f64 * s[k - 1]).collect();
    let rhs = 1.0 + terms.iter().sum::<f64>();
    Ok(NullLagrangianReport {
        lhs: b[0],
        rhs,
        residual: (b[0] - rhs).abs(),
        terms,
        first_moment: n as f64 * s[n],
        volume: s[n + 1],
        ball_det: b[1],
    })
}

/// `⨍|∇_T u − ∇_T v|^p`, both Jacobians taken in the same frame.
pub fn grad_distance(u: &dyn SphereField, v: &dyn SphereField, rule: &SphereRule, p: f64) -> Result<f64> {
    check(u.dim(), v.dim())?;
    check(u.dim(), rule.dim())?;
    Ok(integrate_many(rule, 1, |f| {
        let a = u.eval(f)?.jac;
        let b = v.eval(f)?.jac;
        Ok(vec![(a - b).norm().powf(p)])
    })?[0])
}

/// `(⨍|A P_T|², ⨍|Ax|²)`; the closed forms are `(n−1)/n |A|²` and `|A|²/n`.
pub fn moment_identities(a: &DMatrix<f64>, rule: &SphereRule) -> Result<(f64, f64)> {
    check(a.nrows(), rule.dim())?;
    let v = integrate_many(rule, 2, |f| {
        Ok(vec![(a * f.p_t()).norm_squared(), (a * f.x()).norm_squared()])
    })?;
    Ok((v[0], v[1]))
}

/// `∫_D |∇u|^{n-1}` over a flat disc.
pub fn flat_energy(u: &dyn PlaneField, disc: &DiscRule) -> Result<f64> {
    let p = (u.dim() - 1) as f64;
    Ok(integrate_disc(disc, 1, |y| Ok(vec![u.eval(y)?.jac.norm().powf(p)]))?[0])
}

/// `∫_D (|∇u|^{n-1} − |∇b|^{n-1})`: the flat deficit when `u = b` off `D`.
pub fn flat_deficit(u: &dyn PlaneField, background: &dyn PlaneField, disc: &DiscRule) -> Result<f64> {
    check(u.dim(), background.dim())?;
    let p = (u.dim() - 1) as f64;
    Ok(integrate_disc(disc, 1, |y| {
        let a = u.eval(y)?.jac.norm().powf(p);
        let b = background.eval(y)?.jac.norm().powf(p);
        Ok(vec![a - b])
    })?[0])
}

/// `(1/(nω_n)) ∫_D det[u, ∂_1 u, …, ∂_{n-1} u]`. With `u` in front the flat
/// chart `φ` counts with degree `+1` in every dimension.
pub fn flat_degree(u: &dyn PlaneField, disc: &DiscRule) -> Result<f64> {
    let n = u.dim();
    let v = integrate_disc(disc, 1, |y| {
        let s = u.eval(y)?;
        let mut m = DMatrix::zeros(n, n);
        m.set_column(0, &s.value);
        m.view_mut((0, 1), (n, n - 1)).copy_from(&s.jac);
        Ok(vec![m.determinant()])
    })?[0];
    Ok(v / (n as f64 * crate::quadrature::unit_ball_volume(n)))
}

/// Sphere deficit equivalent to a flat one: `δ = (∫|∇u|^{n-1} − γ_n)/γ_n`.
pub fn sphere_deficit_from_flat(n: usize, flat: f64) -> f64 {
    flat / gamma_n(n)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::{
        identity_field, inverse_stereographic_field, mobius_field, normalized_linear_field, pullback_to_sphere,
        reflection_field, rotation_field, HarmonicField, LinearField,
    };
    use crate::linalg::random_rotation;
    use crate::quadrature::{ball_rule, disc_rule, sphere_rule};
    use crate::sphere::MobiusElement;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn identity_and_reflection() {
        for n in 3..=5 {
            let rule = sphere_rule(n, 6).unwrap();
            let r = deficit(&identity_field(n).unwrap(), &rule).unwrap();
            assert!(r.deficit.abs() < 1e-12 && (r.degree - 1.0).abs() < 1e-12);
            let r = deficit(&reflection_field(n).unwrap(), &rule).unwrap();
            assert!((r.degree + 1.0).abs() < 1e-12);
            let e = integrate_many(&rule, 1, |f| Ok(vec![f.p_t().norm_squared()])).unwrap()[0];
            assert!((e - (n - 1) as f64).abs() < 1e-12);
        }
    }

    #[test]
    fn reversed_convention_flips_identity() {
        let rule = sphere_rule(4, 4).unwrap();
        let r = deficit_with(&identity_field(4).unwrap(), &rule, &rule.coarse().unwrap(), DegreeConvention::Reversed)
            .unwrap();
        assert!((r.degree + 1.0).abs() < 1e-12);
    }

    #[test]
    fn mobius_is_exact() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let rule = sphere_rule(4, 20).unwrap();
        let m = MobiusElement::random(&mut rng, 4, 0.5, 2.0).unwrap();
        let u = mobius_field(m);
        let r = deficit(&u, &rule).unwrap();
        assert!(r.deficit.abs() < 1e-6, "{r:?}");
        assert!((r.degree - 1.0).abs() < 1e-6);
        assert!(max_conformality_residual(&u, &rule).unwrap() < 1e-8);
        let w = wente_check(&u, &rule).unwrap();
        assert!((w.lhs - w.mid).abs() < 1e-6 && (w.mid - w.rhs).abs() < 1e-6);
    }

    #[test]
    fn wente_chain_is_strict_off_conformal() {
        let a = DMatrix::from_diagonal(&DVector::from_vec(vec![1.2, 1.0, 1.0, 1.0]));
        let u = normalized_linear_field(a).unwrap();
        let w = wente_check(&u, &sphere_rule(4, 24).unwrap()).unwrap();
        let wc = wente_check(&u, &sphere_rule(4, 12).unwrap()).unwrap();
        assert!((w.lhs - wc.lhs).abs() < 1e-8, "{w:?} {wc:?}");
        assert!(w.lhs > w.mid + 1e-4 && w.mid >= w.rhs - 1e-10);
        assert!((w.volume - 1.0).abs() < 1e-8);
    }

    #[test]
    fn projections_of_linear_and_constant() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let n = 4;
        let rule = sphere_rule(n, 4).unwrap();
        let b = random_rotation(&mut rng, n) * 1.7;
        let c = DVector::from_vec(vec![0.1, 0.2, -0.3, 0.4]);
        let p = projections(&LinearField::new(b.clone(), c.clone()).unwrap(), &rule).unwrap();
        assert!((p.a - b).amax() < 1e-10 && (p.mean - &c).amax() < 1e-12);
        let p = projections(&LinearField::new(DMatrix::zeros(n, n), c.clone()).unwrap(), &rule).unwrap();
        assert!(p.a.amax() < 1e-14 && (p.mean - c).amax() < 1e-14);
    }

    #[test]
    fn projection_matches_least_squares() {
        // degree ≤ 1 least squares on the sphere: fit u ≈ c + Bx at the nodes
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let n = 3;
        let rule = sphere_rule(n, 24).unwrap();
        let xi = crate::sphere::SpherePoint::random(&mut rng, n).unwrap();
        let u = mobius_field(MobiusElement::dilation(xi, 2.0).unwrap());
        let p = projections(&u, &rule).unwrap();
        let rows = rule.len();
        let mut design = DMatrix::zeros(rows, n + 1);
        let mut rhs = DMatrix::zeros(rows, n);
        for (i, (f, w)) in rule.frames().iter().zip(rule.weights()).enumerate() {
            let sw = w.sqrt();
            design[(i, 0)] = sw;
            for j in 0..n {
                design[(i, j + 1)] = sw * f.x()[j];
            }
            let v = u.eval(f).unwrap().value;
            for j in 0..n {
                rhs[(i, j)] = sw * v[j];
            }
        }
        let sol = design.svd(true, true).solve(&rhs, 1e-14).unwrap();
        let b = sol.rows(1, n).transpose();
        assert!((b - &p.a).amax() < 1e-6);
    }

    #[test]
    fn poincare_equality_cases() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for n in 3..=5 {
            let rule = sphere_rule(n, 5).unwrap();
            let b = DMatrix::from_fn(n, n, |i, j| ((i + 2 * j) as f64).cos());
            let (g1, _) = poincare_gaps(&LinearField::new(b, DVector::zeros(n)).unwrap(), &rule).unwrap();
            assert!(g1.abs() < 1e-10);
            let h2 = HarmonicField::random(&mut rng, n, &[2], 1.0).unwrap();
            let (g1, g2) = poincare_gaps(&h2, &rule).unwrap();
            assert!(g2.abs() < 1e-8 && g1 > 0.0);
        }
    }

    #[test]
    fn harmonic_energy_ratios() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let n = 4;
        let ball = ball_rule(n, 5).unwrap();
        let rule = sphere_rule(n, 5).unwrap();
        for k in 1..=3usize {
            let h = HarmonicField::random(&mut rng, n, &[k], 1.0).unwrap();
            let (l, r) = harmonic_energy_bound(&h, &ball, &rule).unwrap();
            assert!((l - h.ball_energy()).abs() < 1e-11);
            let want = (n - 1) as f64 / (k + n - 2) as f64;
            assert!((l / r - want).abs() < 1e-11, "k={k}");
        }
        let u = normalized_linear_field(DMatrix::identity(n, n)).unwrap();
        assert_eq!(harmonic_energy_bound(&u, &ball, &rule), Err(Error::NotBandLimited));
    }

    #[test]
    fn null_lagrangian_on_linear_maps() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let n = 4;
        let ball = ball_rule(n, 5).unwrap();
        let rule = sphere_rule(n, 6).unwrap();
        let b = DMatrix::from_fn(n, n, |_, _| rand::Rng::random_range(&mut rng, -1.0..1.0)) * 0.1;
        let w = LinearField::new(b.clone(), DVector::zeros(n)).unwrap();
        let r = null_lagrangian_identity(&w, &ball, &rule).unwrap();
        let want = (DMatrix::identity(n, n) + &b).determinant();
        assert!((r.lhs - want).abs() < 1e-13);
        assert!(r.residual < 1e-12, "{r:?}");
        assert!((r.terms[0] - r.first_moment).abs() < 1e-14);
        assert!((r.terms[n - 1] - b.determinant()).abs() < 1e-13);
        assert!((r.volume - b.determinant()).abs() < 1e-13);
        let zero = LinearField::new(DMatrix::zeros(n, n), DVector::zeros(n)).unwrap();
        let r = null_lagrangian_identity(&zero, &ball, &rule).unwrap();
        assert!((r.lhs - 1.0).abs() < 1e-15 && r.rhs == 1.0);
    }

    #[test]
    fn distances() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let n = 3;
        let rule = sphere_rule(n, 8).unwrap();
        let id = identity_field(n).unwrap();
        assert_eq!(grad_distance(&id, &id, &rule, 2.0).unwrap(), 0.0);
        // |P_T − R P_T|² = 2(n−1) − 2 tr(P_Tᵗ R P_T); average of tr(R(I − x⊗x)) = tr R (n−1)/n
        let r = random_rotation(&mut rng, n);
        let d = grad_distance(&id, &rotation_field(r.clone()).unwrap(), &rule, 2.0).unwrap();
        let want = 2.0 * (n - 1) as f64 - 2.0 * r.trace() * (n - 1) as f64 / n as f64;
        assert!((d - want).abs() < 1e-12);
    }

    #[test]
    fn moments() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for n in 3..=5 {
            let rule = sphere_rule(n, 2).unwrap();
            let a = DMatrix::from_fn(n, n, |_, _| rand::Rng::random_range(&mut rng, -2.0..2.0));
            let (l1, l2) = moment_identities(&a, &rule).unwrap();
            let f = a.norm_squared();
            assert!((l1 - (n - 1) as f64 / n as f64 * f).abs() < 1e-10);
            assert!((l2 - f / n as f64).abs() < 1e-10);
        }
    }

    #[test]
    fn flat_degree_of_phi_and_chart_invariance() {
        let n = 3;
        let phi = inverse_stereographic_field(n).unwrap();
        // most of the mass sits in |y| ≤ 40; the tail of det is O(|y|^{-4})
        let disc = disc_rule(&DVector::zeros(n - 1), 40.0, 40).unwrap();
        let d = flat_degree(&phi, &disc).unwrap();
        assert!((d - 1.0).abs() < 1e-3, "{d}");
        let sphere = deficit(&pullback_to_sphere(phi), &sphere_rule(n, 8).unwrap()).unwrap();
        assert!((sphere.degree - 1.0).abs() < 1e-12);
    }
}

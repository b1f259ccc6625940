use std::sync::Arc;

use serde::Serialize;

use crate::error::Result;
use crate::field::{inverse_stereographic_field, pullback_to_sphere, AnyField, PlanarMobiusElement, SphereField};
use crate::fit::{center, composed_mean, fit_mobius, fit_planar, FitResult};
use crate::functionals::{deficit, flat_deficit, DeficitReport};
use crate::quadrature::{disc_rule, sphere_rule};
use crate::sphere::MobiusElement;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SingleOptions {
    pub level: usize,
    pub center_tol: f64,
}

impl Default for SingleOptions {
    fn default() -> Self {
        SingleOptions {
            level: 16,
            center_tol: 1e-10,
        }
    }
}

fn on_sphere(field: &AnyField) -> Arc<dyn SphereField> {
    match field {
        AnyField::Sphere(s) => s.clone(),
        AnyField::Plane(p) => Arc::new(pullback_to_sphere(p.clone())),
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct DeficitJson {
    pub n: usize,
    pub level: usize,
    #[serde(flatten)]
    pub report: DeficitReport,
    /// `∫_D(|∇u|^{n−1} − |∇φ|^{n−1})` for flat fields with a support hint.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub flat_deficit: Option<f64>,
}

/// Deficit on the sphere; flat fields are transported through the chart.
pub fn deficit_report(field: &AnyField, opts: &SingleOptions) -> Result<DeficitJson> {
    let n = field.dim();
    let rule = sphere_rule(n, opts.level)?;
    let report = deficit(&*on_sphere(field), &rule)?;
    let flat = match field {
        AnyField::Plane(p) => match p.support_hint() {
            Some((c, r)) => {
                let phi = inverse_stereographic_field(n)?;
                Some(flat_deficit(&**p, &phi, &disc_rule(&c, r, opts.level)?)?)
            }
            None => None,
        },
        AnyField::Sphere(_) => None,
    };
    Ok(DeficitJson {
        n,
        level: opts.level,
        report,
        flat_deficit: flat,
    })
}

#[derive(Debug, Clone, Serialize)]
#[serde(untagged)]
pub enum FitElement {
    Sphere(MobiusElement),
    Plane(PlanarMobiusElement),
}

#[derive(Debug, Clone, Serialize)]
pub struct FitReport {
    pub n: usize,
    pub level: usize,
    pub element: FitElement,
    pub objective: f64,
    pub iterations: usize,
    pub converged: bool,
    pub gradient_norm: f64,
}

fn wrap<E>(n: usize, level: usize, r: FitResult<E>, f: impl FnOnce(E) -> FitElement) -> FitReport {
    FitReport {
        n,
        level,
        element: f(r.element),
        objective: r.objective,
        iterations: r.iterations,
        converged: r.converged,
        gradient_norm: r.gradient_norm,
    }
}

/// Sphere fields are fitted over `Möb₊`; flat fields with a support hint over
/// `Ψ` against the background `φ`.
pub fn fit_report(field: &AnyField, opts: &SingleOptions) -> Result<FitReport> {
    let n = field.dim();
    let rule = sphere_rule(n, opts.level)?;
    if let AnyField::Plane(p) = field {
        if let Some((c, r)) = p.support_hint() {
            let phi = inverse_stereographic_field(n)?;
            let disc = disc_rule(&c, r, opts.level)?;
            let res = fit_planar(&**p, &disc, &phi, &rule, None)?;
            return Ok(wrap(n, opts.level, res, FitElement::Plane));
        }
    }
    let res = fit_mobius(&*on_sphere(field), &rule, None)?;
    Ok(wrap(n, opts.level, res, FitElement::Sphere))
}

#[derive(Debug, Clone, Serialize)]
pub struct CenterReport {
    pub n: usize,
    pub level: usize,
    pub element: MobiusElement,
    /// `|⨍ u∘ψ|`
    pub residual: f64,
    pub iterations: usize,
    pub deficit_before: f64,
    pub deficit_after: f64,
    pub quadrature_error: f64,
}

pub fn center_report(field: &AnyField, opts: &SingleOptions) -> Result<CenterReport> {
    let n = field.dim();
    let rule = sphere_rule(n, opts.level)?;
    let u = on_sphere(field);
    let c = center(&*u, &rule, opts.center_tol)?;
    let before = deficit(&*u, &rule)?;
    let v = crate::fit::recentered(u.clone(), &c.element)?;
    let after = deficit(&v, &rule)?;
    let residual = composed_mean(&*u, &rule, &c.element)?.norm();
    Ok(CenterReport {
        n,
        level: opts.level,
        element: c.element,
        residual,
        iterations: c.iterations,
        deficit_before: before.deficit,
        deficit_after: after.deficit,
        quadrature_error: before.quadrature_error.max(after.quadrature_error),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::parse_map_spec;

    #[test]
    fn identity_mobius_spec() {
        let f = parse_map_spec(r#"{"family":"mobius","R":[[1,0,0],[0,1,0],[0,0,1]],"xi":[0,0,1],"lambda":1}"#, None)
            .unwrap();
        let opts = SingleOptions::default();
        let d = deficit_report(&f, &opts).unwrap();
        assert!(d.report.deficit.abs() < 1e-12);
        assert!((d.report.degree - 1.0).abs() < 1e-12);
        let fr = fit_report(&f, &opts).unwrap();
        assert!(fr.objective < 1e-12);
    }

    #[test]
    fn normalized_linear_spec() {
        let f = parse_map_spec(r#"{"family":"normalized_linear","matrix":[[1.2,0,0],[0,1,0],[0,0,1]]}"#, Some(3)).unwrap();
        let d = deficit_report(&f, &SingleOptions::default()).unwrap();
        assert!(d.report.deficit > 0.0);
        assert!(d.report.quadrature_error < d.report.deficit);
        let json = serde_json::to_value(&d).unwrap();
        for k in ["energy", "deficit", "degree", "quadrature_error"] {
            assert!(json.get(k).is_some(), "{k}");
        }
        let c = center_report(&f, &SingleOptions::default()).unwrap();
        assert!(c.residual <= 1e-10);
        assert!((c.deficit_before - c.deficit_after).abs() < 1e-10);
    }

    #[test]
    fn flat_bump_spec() {
        let f = parse_map_spec(r#"{"family":"bump","eps":0.05}"#, Some(3)).unwrap();
        let opts = SingleOptions {
            level: 8,
            ..Default::default()
        };
        let fr = fit_report(&f, &opts).unwrap();
        assert!(matches!(fr.element, FitElement::Plane(_)));
        assert!(fr.objective > 0.0);
    }
}

//! Map specifications in JSON:
//! `{"family": "...", "params": {...}}`, with the parameters also accepted at
//! top level. `compose` nests an `inner` Möbius element and an `outer` spec.

use std::path::Path;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use super::{
    bump_family_field, identity_field, inverse_stereographic_field, mobius_field, normalized_linear_field,
    reflection_field, ComposedField, HarmonicField, LinearField, PlaneField, SphereBump, SphereField,
};
use crate::error::{Error, Result};
use crate::linalg::from_rows;
use crate::sphere::{MobiusElement, SpherePoint};

/// A parsed field, on the sphere or in the flat chart.
#[derive(Clone)]
pub enum AnyField {
    Sphere(Arc<dyn SphereField>),
    Plane(Arc<dyn PlaneField>),
}

impl AnyField {
    pub fn dim(&self) -> usize {
        match self {
            AnyField::Sphere(s) => s.dim(),
            AnyField::Plane(p) => p.dim(),
        }
    }
}

impl std::fmt::Debug for AnyField {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            AnyField::Sphere(s) => write!(f, "Sphere(n = {})", s.dim()),
            AnyField::Plane(p) => write!(f, "Plane(n = {})", p.dim()),
        }
    }
}

/// Raw spec as read from disk.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct MapSpec {
    pub family: String,
    #[serde(default)]
    pub params: Map<String, Value>,
}

impl MapSpec {
    /// Reads `{"family", "params"}` or `{"family", ...top-level params}`.
    pub fn from_value(v: &Value) -> Result<Self> {
        let obj = v
            .as_object()
            .ok_or_else(|| Error::MalformedSpec("spec must be a JSON object".into()))?;
        let family = obj
            .get("family")
            .ok_or_else(|| Error::MalformedSpec("missing key 'family'".into()))?
            .as_str()
            .ok_or_else(|| Error::MalformedSpec("'family' must be a string".into()))?
            .to_string();
        let params = match obj.get("params") {
            Some(Value::Object(p)) => p.clone(),
            Some(_) => return Err(Error::MalformedSpec("'params' must be an object".into())),
            None => obj
                .iter()
                .filter(|(k, _)| k.as_str() != "family")
                .map(|(k, v)| (k.clone(), v.clone()))
                .collect(),
        };
        Ok(MapSpec { family, params })
    }

    /// Builds the field; `n` fills in the dimension when the spec has none.
    pub fn build(&self, n: Option<usize>) -> Result<AnyField> {
        let p = Params {
            family: &self.family,
            map: &self.params,
        };
        let dim = |inferred: Option<usize>| -> Result<usize> {
            match (inferred, n) {
                (Some(a), Some(b)) if a != b => Err(Error::MalformedSpec(format!(
                    "{}: spec has dimension {a} but n = {b} was requested",
                    self.family
                ))),
                (Some(a), _) | (None, Some(a)) => Ok(a),
                (None, None) => Err(Error::MalformedSpec(format!("{}: dimension unknown, pass n", self.family))),
            }
        };
        let sphere = |f: Arc<dyn SphereField>| Ok(AnyField::Sphere(f));
        match self.family.as_str() {
            "identity" => sphere(Arc::new(identity_field(dim(None)?)?)),
            "reflection" => sphere(Arc::new(reflection_field(dim(None)?)?)),
            "mobius" => {
                let m = mobius_from(&p, n)?;
                dim(Some(m.dim()))?;
                sphere(Arc::new(mobius_field(m)))
            }
            "linear" => {
                let b = p.matrix("matrix")?.ok_or_else(|| p.missing("matrix"))?;
                let nn = dim(Some(b.nrows()))?;
                let c = p.vector("offset")?.unwrap_or_else(|| DVector::zeros(nn));
                sphere(Arc::new(LinearField::new(b, c)?))
            }
            "normalized_linear" => {
                let a = match p.matrix("matrix")? {
                    Some(a) => a,
                    None => {
                        let d = p.vector("diag")?.ok_or_else(|| p.missing("matrix"))?;
                        DMatrix::from_diagonal(&d)
                    }
                };
                dim(Some(a.nrows()))?;
                sphere(Arc::new(normalized_linear_field(a)?))
            }
            "harmonic" => {
                let nn = dim(None)?;
                let degrees = match p.map.get("degrees") {
                    None => vec![1, 2, 3],
                    Some(v) => serde_json::from_value::<Vec<usize>>(v.clone())
                        .map_err(|e| p.bad("degrees", &e.to_string()))?,
                };
                let seed = p.number("seed")?.unwrap_or(0.0) as u64;
                let scale = p.number("scale")?.unwrap_or(1.0);
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                sphere(Arc::new(HarmonicField::random(&mut rng, nn, &degrees, scale)?))
            }
            "bump_sphere" => {
                let eps = p.number("eps")?.ok_or_else(|| p.missing("eps"))?;
                let center = p.vector("center")?;
                let nn = dim(center.as_ref().map(|c| c.len()))?;
                let center = center.unwrap_or_else(|| basis(nn, 0));
                let dir = p.vector("dir")?.unwrap_or_else(|| basis(nn, 1));
                let radius = p.number("radius")?.unwrap_or(0.5);
                sphere(Arc::new(SphereBump::new(SpherePoint::normalize(center)?, radius, eps, dir)?))
            }
            "inverse_stereo" => Ok(AnyField::Plane(Arc::new(inverse_stereographic_field(dim(None)?)?))),
            "bump" => {
                let eps = p.number("eps")?.ok_or_else(|| p.missing("eps"))?;
                let center = p.vector("center")?;
                let nn = dim(center.as_ref().map(|c| c.len() + 1))?;
                Ok(AnyField::Plane(Arc::new(bump_family_field(nn, eps, center)?)))
            }
            "compose" => {
                let outer = p.map.get("outer").ok_or_else(|| p.missing("outer"))?;
                let outer = MapSpec::from_value(outer)?.build(n)?;
                let outer = match outer {
                    AnyField::Sphere(s) => s,
                    AnyField::Plane(_) => return Err(p.bad("outer", "must be a sphere field")),
                };
                let inner = match p.map.get("inner") {
                    Some(Value::Object(m)) => mobius_from(
                        &Params {
                            family: "compose.inner",
                            map: m,
                        },
                        Some(outer.dim()),
                    )?,
                    Some(_) => return Err(p.bad("inner", "must be an object")),
                    None => return Err(p.missing("inner")),
                };
                sphere(Arc::new(ComposedField::new(outer, inner)?))
            }
            other => Err(Error::MalformedSpec(format!("unknown family '{other}'"))),
        }
    }
}

fn basis(n: usize, i: usize) -> DVector<f64> {
    let mut v = DVector::zeros(n);
    v[i % n] = 1.0;
    v
}

struct Params<'a> {
    family: &'a str,
    map: &'a Map<String, Value>,
}

impl Params<'_> {
    fn missing(&self, key: &str) -> Error {
        Error::MalformedSpec(format!("{}: missing field '{key}'", self.family))
    }

    fn bad(&self, key: &str, why: &str) -> Error {
        Error::MalformedSpec(format!("{}: field '{key}': {why}", self.family))
    }

    fn number(&self, key: &str) -> Result<Option<f64>> {
        match self.map.get(key) {
            None => Ok(None),
            Some(v) => v.as_f64().map(Some).ok_or_else(|| self.bad(key, "expected a number")),
        }
    }

    fn vector(&self, key: &str) -> Result<Option<DVector<f64>>> {
        match self.map.get(key) {
            None => Ok(None),
            Some(v) => serde_json::from_value::<Vec<f64>>(v.clone())
                .map(|x| Some(DVector::from_vec(x)))
                .map_err(|e| self.bad(key, &e.to_string())),
        }
    }

    fn matrix(&self, key: &str) -> Result<Option<DMatrix<f64>>> {
        match self.map.get(key) {
            None => Ok(None),
            Some(v) => {
                let rows: Vec<Vec<f64>> =
                    serde_json::from_value(v.clone()).map_err(|e| self.bad(key, &e.to_string()))?;
                let m = from_rows(&rows).map_err(|e| self.bad(key, &e.to_string()))?;
                if m.nrows() != m.ncols() {
                    return Err(self.bad(key, "matrix must be square"));
                }
                Ok(Some(m))
            }
        }
    }
}

fn mobius_from(p: &Params<'_>, n: Option<usize>) -> Result<MobiusElement> {
    let r = p.matrix("R")?;
    let xi = p.vector("xi")?;
    let nn = r
        .as_ref()
        .map(|r| r.nrows())
        .or(xi.as_ref().map(|x| x.len()))
        .or(n)
        .ok_or_else(|| Error::MalformedSpec(format!("{}: dimension unknown, pass n", p.family)))?;
    let r = r.unwrap_or_else(|| DMatrix::identity(nn, nn));
    let xi = xi.unwrap_or_else(|| basis(nn, nn - 1));
    let lambda = p.number("lambda")?.unwrap_or(1.0);
    if xi.len() != nn {
        return Err(p.bad("xi", &format!("length {} but R is {nn}x{nn}", xi.len())));
    }
    MobiusElement::new(r, SpherePoint::normalize(xi)?, lambda)
}

/// Parses a spec from JSON text. Syntax errors report line and column.
pub fn parse_map_spec(text: &str, n: Option<usize>) -> Result<AnyField> {
    let v: Value = serde_json::from_str(text)
        .map_err(|e| Error::MalformedSpec(format!("line {}, column {}: {e}", e.line(), e.column())))?;
    MapSpec::from_value(&v)?.build(n)
}

pub fn load_map_spec(path: impl AsRef<Path>, n: Option<usize>) -> Result<AnyField> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    parse_map_spec(&text, n)
}

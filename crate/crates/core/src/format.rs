//! JSON system files and the textual forms of complex numbers.
//!
//! Complex entries are `[re, im]` pairs; a bare number is read as real.
//! Matrices are row-major nested arrays.

use std::fmt;

use serde::de::{self, Deserializer, SeqAccess, Visitor};
use serde::ser::{SerializeSeq, Serializer};
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{Error, Result};
use crate::generators::GeneratorSpec;
use crate::hspace::{c, CMat, CVec, MetricSpace, C64};
use crate::ofamily::{build_system_from_ofamily, OFamily};
use crate::opalg::{lift, LimOperator};
use crate::poset::IndexPoset;
use crate::system::{ContractiveSystem, Link, Provenance};
use crate::tolerance::{ToleranceOverrides, Tolerances};

/// One complex entry.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Entry(pub C64);

impl Serialize for Entry {
    fn serialize<S: Serializer>(&self, ser: S) -> std::result::Result<S::Ok, S::Error> {
        [self.0.re, self.0.im].serialize(ser)
    }
}

impl<'de> Deserialize<'de> for Entry {
    fn deserialize<D: Deserializer<'de>>(de: D) -> std::result::Result<Self, D::Error> {
        struct EntryVisitor;
        impl<'de> Visitor<'de> for EntryVisitor {
            type Value = Entry;
            fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
                f.write_str("a number or an [re, im] pair")
            }
            fn visit_f64<E: de::Error>(self, v: f64) -> std::result::Result<Entry, E> {
                Ok(Entry(c(v, 0.0)))
            }
            fn visit_i64<E: de::Error>(self, v: i64) -> std::result::Result<Entry, E> {
                Ok(Entry(c(v as f64, 0.0)))
            }
            fn visit_u64<E: de::Error>(self, v: u64) -> std::result::Result<Entry, E> {
                Ok(Entry(c(v as f64, 0.0)))
            }
            fn visit_seq<A: SeqAccess<'de>>(self, mut seq: A) -> std::result::Result<Entry, A::Error> {
                let re: f64 = seq.next_element()?.ok_or_else(|| de::Error::invalid_length(0, &self))?;
                let im: f64 = seq.next_element()?.ok_or_else(|| de::Error::invalid_length(1, &self))?;
                if seq.next_element::<de::IgnoredAny>()?.is_some() {
                    return Err(de::Error::invalid_length(3, &self));
                }
                Ok(Entry(c(re, im)))
            }
        }
        de.deserialize_any(EntryVisitor)
    }
}

/// A complex vector in file form.
#[derive(Debug, Clone, PartialEq)]
pub struct Vector(pub CVec);

impl Serialize for Vector {
    fn serialize<S: Serializer>(&self, ser: S) -> std::result::Result<S::Ok, S::Error> {
        let mut seq = ser.serialize_seq(Some(self.0.len()))?;
        for z in self.0.iter() {
            seq.serialize_element(&Entry(*z))?;
        }
        seq.end()
    }
}

impl<'de> Deserialize<'de> for Vector {
    fn deserialize<D: Deserializer<'de>>(de: D) -> std::result::Result<Self, D::Error> {
        let entries = Vec::<Entry>::deserialize(de)?;
        Ok(Vector(CVec::from_iterator(entries.len(), entries.into_iter().map(|e| e.0))))
    }
}

/// A complex matrix in file form (row-major).
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix(pub CMat);

impl Serialize for Matrix {
    fn serialize<S: Serializer>(&self, ser: S) -> std::result::Result<S::Ok, S::Error> {
        let rows: Vec<Vec<Entry>> = (0..self.0.nrows())
            .map(|i| (0..self.0.ncols()).map(|j| Entry(self.0[(i, j)])).collect())
            .collect();
        rows.serialize(ser)
    }
}

impl<'de> Deserialize<'de> for Matrix {
    fn deserialize<D: Deserializer<'de>>(de: D) -> std::result::Result<Self, D::Error> {
        let rows = Vec::<Vec<Entry>>::deserialize(de)?;
        let ncols = rows.first().map_or(0, Vec::len);
        if let Some(k) = rows.iter().position(|r| r.len() != ncols) {
            return Err(de::Error::custom(format!(
                "ragged matrix: row {k} has {} entries, row 0 has {ncols}",
                rows[k].len()
            )));
        }
        Ok(Matrix(CMat::from_fn(rows.len(), ncols, |i, j| rows[i][j].0)))
    }
}

pub mod cvec_serde {
    use super::*;

    pub fn serialize<S: Serializer>(v: &CVec, ser: S) -> std::result::Result<S::Ok, S::Error> {
        Vector(v.clone()).serialize(ser)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(de: D) -> std::result::Result<CVec, D::Error> {
        Ok(Vector::deserialize(de)?.0)
    }
}

pub mod cmat_serde {
    use super::*;

    pub fn serialize<S: Serializer>(m: &CMat, ser: S) -> std::result::Result<S::Ok, S::Error> {
        Matrix(m.clone()).serialize(ser)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(de: D) -> std::result::Result<CMat, D::Error> {
        Ok(Matrix::deserialize(de)?.0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PosetDef {
    pub elements: Vec<String>,
    #[serde(default)]
    pub covers: Vec<(String, String)>,
}

/// A space: either a Gram matrix, or a dimension (identity metric).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpaceDef {
    pub label: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dim: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gram: Option<Matrix>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LinkDef {
    pub from: String,
    pub to: String,
    pub matrix: Matrix,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NamedMatrix {
    pub name: String,
    pub matrix: Matrix,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OperatorDef {
    pub name: String,
    pub base: String,
    pub matrix: Matrix,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum SystemSpec {
    Explicit {
        poset: PosetDef,
        spaces: Vec<SpaceDef>,
        #[serde(default)]
        links: Vec<LinkDef>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        provenance: Option<Provenance>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        coordinates: Option<Vec<f64>>,
    },
    Ofamily {
        base: SpaceDef,
        ops: Vec<NamedMatrix>,
    },
    Generator {
        generator: GeneratorSpec,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SystemFile {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    #[serde(flatten)]
    pub spec: SystemSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tolerances: Option<ToleranceOverrides>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub operators: Vec<OperatorDef>,
}

// Each kind is read through its own flat struct: `serde(flatten)` would
// buffer the input and lose the error path.
macro_rules! raw_file {
    ($name:ident { $($field:ident : $ty:ty $(= $default:ident)?),* $(,)? }) => {
        #[derive(Deserialize)]
        #[serde(deny_unknown_fields)]
        struct $name {
            #[allow(dead_code)]
            kind: String,
            #[serde(default)]
            name: Option<String>,
            #[serde(default)]
            tolerances: Option<ToleranceOverrides>,
            #[serde(default)]
            operators: Vec<OperatorDef>,
            $( $(#[serde($default)])? $field: $ty, )*
        }
    };
}

raw_file!(ExplicitFile {
    poset: PosetDef,
    spaces: Vec<SpaceDef>,
    links: Vec<LinkDef> = default,
    provenance: Option<Provenance> = default,
    coordinates: Option<Vec<f64>> = default,
});
raw_file!(OfamilyFile { base: SpaceDef, ops: Vec<NamedMatrix> });
raw_file!(GeneratorFile { generator: GeneratorSpec });

fn schema_error(e: serde_path_to_error::Error<serde_json::Error>) -> Error {
    let path = e.path().to_string();
    let inner = e.into_inner();
    Error::Schema {
        path: if inner.is_syntax() || inner.is_eof() {
            format!("line {} column {}", inner.line(), inner.column())
        } else {
            path
        },
        message: inner.to_string(),
    }
}

fn typed<T: for<'de> Deserialize<'de>>(value: serde_json::Value) -> Result<T> {
    serde_path_to_error::deserialize(value).map_err(schema_error)
}

/// A system file turned into live objects.
#[derive(Debug, Clone)]
pub struct LoadedSystem {
    pub name: Option<String>,
    pub system: ContractiveSystem,
    pub ofamily: Option<OFamily>,
    pub operators: Vec<(String, LimOperator)>,
}

impl LoadedSystem {
    pub fn operator(&self, name: &str) -> Result<&LimOperator> {
        self.operators
            .iter()
            .find(|(n, _)| n == name)
            .map(|(_, x)| x)
            .ok_or_else(|| Error::UnknownLabel(name.into()))
    }
}

fn build_space(def: &SpaceDef, tol: &Tolerances) -> Result<MetricSpace> {
    match (&def.gram, def.dim) {
        (Some(g), dim) => {
            if let Some(d) = dim.filter(|&d| d != g.0.nrows()) {
                return Err(Error::DimMismatch {
                    expected: d,
                    found: g.0.nrows(),
                });
            }
            MetricSpace::new(g.0.clone(), tol)
        }
        (None, Some(d)) if d > 0 => Ok(MetricSpace::identity(d)),
        _ => Err(Error::Schema {
            path: format!("space `{}`", def.label),
            message: "needs `gram` or a positive `dim`".into(),
        }),
    }
}

impl SystemFile {
    pub fn parse(text: &str) -> Result<Self> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let value: serde_json::Value = serde_path_to_error::deserialize(de).map_err(schema_error)?;
        let kind = value
            .get("kind")
            .and_then(|k| k.as_str())
            .ok_or_else(|| Error::Schema {
                path: "kind".into(),
                message: "missing string field `kind`".into(),
            })?
            .to_string();
        macro_rules! assemble {
            ($raw:expr, $spec:expr) => {{
                let raw = $raw;
                let spec = $spec(&raw);
                SystemFile {
                    name: raw.name,
                    spec,
                    tolerances: raw.tolerances,
                    operators: raw.operators,
                }
            }};
        }
        match kind.as_str() {
            "explicit" => Ok(assemble!(typed::<ExplicitFile>(value)?, |p: &ExplicitFile| SystemSpec::Explicit {
                poset: p.poset.clone(),
                spaces: p.spaces.clone(),
                links: p.links.clone(),
                provenance: p.provenance.clone(),
                coordinates: p.coordinates.clone(),
            })),
            "ofamily" => Ok(assemble!(typed::<OfamilyFile>(value)?, |p: &OfamilyFile| SystemSpec::Ofamily {
                base: p.base.clone(),
                ops: p.ops.clone(),
            })),
            "generator" => Ok(assemble!(typed::<GeneratorFile>(value)?, |p: &GeneratorFile| {
                SystemSpec::Generator {
                    generator: p.generator.clone(),
                }
            })),
            other => Err(Error::Schema {
                path: "kind".into(),
                message: format!("unknown kind `{other}`, expected explicit, ofamily or generator"),
            }),
        }
    }

    pub fn to_json(&self) -> String {
        let value = serde_json::to_value(self).expect("system files serialise");
        let mut out = String::new();
        write_compact(&value, 0, &mut out);
        out
    }

    /// File-level tolerances layered over `base`.
    pub fn tolerances(&self, base: Tolerances) -> Tolerances {
        self.tolerances.map_or(base, |o| o.apply(base))
    }

    pub fn build(&self, tol: &Tolerances) -> Result<LoadedSystem> {
        let (system, ofamily) = match &self.spec {
            SystemSpec::Explicit {
                poset,
                spaces,
                links,
                provenance,
                coordinates,
            } => {
                let p = IndexPoset::new(&poset.elements, &poset.covers)?;
                let mut ordered = Vec::with_capacity(p.len());
                for label in p.labels() {
                    let def = spaces
                        .iter()
                        .find(|d| &d.label == label)
                        .ok_or_else(|| Error::Schema {
                            path: "spaces".into(),
                            message: format!("no space for index `{label}`"),
                        })?;
                    ordered.push(build_space(def, tol)?);
                }
                if let Some(extra) = spaces.iter().find(|d| p.index(&d.label).is_err()) {
                    return Err(Error::UnknownLabel(extra.label.clone()));
                }
                let links = links
                    .iter()
                    .map(|l| Link::new(l.from.clone(), l.to.clone(), l.matrix.0.clone()))
                    .collect();
                let mut s = ContractiveSystem::new(p, ordered, links, *tol)?;
                if let Some(pv) = provenance {
                    s = s.with_provenance(pv.clone());
                }
                if let Some(cs) = coordinates {
                    s = s.with_coordinates(cs.clone());
                }
                (s, None)
            }
            SystemSpec::Ofamily { base, ops } => {
                let f = OFamily::new(
                    build_space(base, tol)?,
                    ops.iter().map(|o| (o.name.clone(), o.matrix.0.clone())).collect(),
                )?;
                (build_system_from_ofamily(&f, tol)?, Some(f))
            }
            SystemSpec::Generator { generator } => generator.build(tol)?,
        };
        let operators = self
            .operators
            .iter()
            .map(|o| Ok((o.name.clone(), lift(&system, &o.base, &o.matrix.0)?)))
            .collect::<Result<_>>()?;
        Ok(LoadedSystem {
            name: self.name.clone(),
            system,
            ofamily,
            operators,
        })
    }

    /// Explicit file describing `s` exactly.
    pub fn from_system(s: &ContractiveSystem, name: Option<String>) -> Self {
        let spaces = (0..s.len())
            .map(|i| SpaceDef {
                label: s.label(i).into(),
                dim: None,
                gram: Some(Matrix(s.space_idx(i).gram().clone())),
            })
            .collect();
        let links = s
            .links()
            .map(|(a, b, m)| LinkDef {
                from: s.label(a).into(),
                to: s.label(b).into(),
                matrix: Matrix(m.clone()),
            })
            .collect();
        let covers = s
            .poset()
            .covers()
            .iter()
            .map(|&(a, b)| (s.label(a).to_string(), s.label(b).to_string()))
            .collect();
        SystemFile {
            name,
            spec: SystemSpec::Explicit {
                poset: PosetDef {
                    elements: s.poset().labels().to_vec(),
                    covers,
                },
                spaces,
                links,
                provenance: match s.provenance() {
                    Provenance::Explicit => None,
                    p => Some(p.clone()),
                },
                coordinates: s.coordinates().map(<[f64]>::to_vec),
            },
            tolerances: None,
            operators: vec![],
        }
    }
}

fn is_flat(v: &Value) -> bool {
    match v {
        Value::Array(items) => items.iter().all(|x| !x.is_object() && (!x.is_array() || is_flat_leaf(x))),
        _ => false,
    }
}

fn is_flat_leaf(v: &Value) -> bool {
    matches!(v, Value::Array(items) if items.iter().all(|x| !x.is_array() && !x.is_object()))
}

/// Pretty JSON with matrix rows and vectors kept on one line.
fn write_compact(v: &Value, depth: usize, out: &mut String) {
    let pad = |d: usize| "  ".repeat(d);
    match v {
        Value::Array(items) if !items.is_empty() && !is_flat(v) => {
            out.push_str("[\n");
            for (k, x) in items.iter().enumerate() {
                out.push_str(&pad(depth + 1));
                write_compact(x, depth + 1, out);
                out.push_str(if k + 1 < items.len() { ",\n" } else { "\n" });
            }
            out.push_str(&pad(depth));
            out.push(']');
        }
        Value::Object(map) if !map.is_empty() => {
            out.push_str("{\n");
            for (k, (key, x)) in map.iter().enumerate() {
                out.push_str(&pad(depth + 1));
                out.push_str(&Value::String(key.clone()).to_string());
                out.push_str(": ");
                write_compact(x, depth + 1, out);
                out.push_str(if k + 1 < map.len() { ",\n" } else { "\n" });
            }
            out.push_str(&pad(depth));
            out.push('}');
        }
        Value::Array(items) => {
            let parts: Vec<String> = items.iter().map(Value::to_string).collect();
            out.push('[');
            out.push_str(&parts.join(", "));
            out.push(']');
        }
        other => out.push_str(&other.to_string()),
    }
}

/// Parse and build a system file. Tolerances: defaults, then `HSCALE_TOL`,
/// then the file, then `equal_override`.
pub fn load_system(text: &str, equal_override: Option<f64>) -> Result<LoadedSystem> {
    let file = SystemFile::parse(text)?;
    let mut tol = file.tolerances(Tolerances::from_env());
    if let Some(t) = equal_override {
        if !(t.is_finite() && t > 0.0) {
            return Err(Error::InvalidParameter(format!("tolerance must be positive, got {t}")));
        }
        tol.equal = t;
    }
    file.build(&tol)
}

/// `3`, `-1.5`, `2i`, `-i`, `1+2i`, `0.5-0.25i`, `1e-3+2e2i`.
pub fn parse_complex(text: &str) -> Result<C64> {
    let t: String = text.chars().filter(|ch| !ch.is_whitespace()).collect();
    let bad = || Error::InvalidParameter(format!("cannot parse `{text}` as a complex number"));
    if t.is_empty() {
        return Err(bad());
    }
    let Some(body) = t.strip_suffix('i') else {
        return t.parse::<f64>().map(|re| c(re, 0.0)).map_err(|_| bad());
    };
    // split at the last sign that is not the leading one or part of an exponent
    let bytes = body.as_bytes();
    let split = (1..bytes.len())
        .rev()
        .find(|&k| (bytes[k] == b'+' || bytes[k] == b'-') && !matches!(bytes[k - 1], b'e' | b'E'));
    let imag = |s: &str| -> Result<f64> {
        match s {
            "" | "+" => Ok(1.0),
            "-" => Ok(-1.0),
            _ => s.parse::<f64>().map_err(|_| bad()),
        }
    };
    match split {
        Some(k) => Ok(c(body[..k].parse::<f64>().map_err(|_| bad())?, imag(&body[k..])?)),
        None => Ok(c(0.0, imag(body)?)),
    }
}

/// Comma-separated complex entries, or a JSON array of entries.
pub fn parse_vector(text: &str) -> Result<CVec> {
    let t = text.trim();
    if t.starts_with('[') {
        let v: Vector = serde_json::from_str(t).map_err(|e| Error::InvalidParameter(e.to_string()))?;
        return Ok(v.0);
    }
    if t.is_empty() {
        return Ok(CVec::zeros(0));
    }
    let entries = t.split(',').map(parse_complex).collect::<Result<Vec<_>>>()?;
    Ok(CVec::from_vec(entries))
}

fn format_part(x: f64) -> String {
    if x == 0.0 {
        "0".into()
    } else {
        format!("{x:.15}")
    }
}

/// `a+bi` with 15 decimals; exact zeros print as `0`.
pub fn format_complex(z: C64) -> String {
    let re = format_part(z.re);
    let im = format_part(z.im.abs());
    let sign = if z.im.is_sign_negative() && z.im != 0.0 { '-' } else { '+' };
    format!("{re}{sign}{im}i")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hspace::{max_abs_diff, real_diag};

    const E1: &str = r#"{
        "kind": "ofamily",
        "base": {"label": "H", "dim": 2},
        "ops": [
            {"name": "1", "matrix": [[1, 0], [0, 2]]},
            {"name": "2", "matrix": [[2, 0], [0, 3]]}
        ],
        "operators": [{"name": "X", "base": "1", "matrix": [[1, 0], [0, 0]]}]
    }"#;

    #[test]
    fn entries_accept_numbers_and_pairs() {
        let m: Matrix = serde_json::from_str("[[1, [0, 2]], [[1.5, -1], 0]]").unwrap();
        assert_eq!(m.0[(0, 1)], c(0.0, 2.0));
        assert_eq!(m.0[(1, 0)], c(1.5, -1.0));
        let back: Matrix = serde_json::from_str(&serde_json::to_string(&m).unwrap()).unwrap();
        assert_eq!(back, m);
        assert!(serde_json::from_str::<Matrix>("[[1, 2], [3]]").is_err());
        assert!(serde_json::from_str::<Entry>("[1, 2, 3]").is_err());
    }

    #[test]
    fn ofamily_file_builds_e1() {
        let loaded = load_system(E1, None).unwrap();
        let s = &loaded.system;
        assert!(max_abs_diff(s.u_map("1", "2").unwrap().matrix(), &real_diag(&[0.4, 0.5])) < 1e-14);
        assert!(loaded.ofamily.is_some());
        assert_eq!(loaded.operators.len(), 1);
    }

    #[test]
    fn explicit_round_trip() {
        let s = load_system(E1, None).unwrap().system;
        let file = SystemFile::from_system(&s, Some("e1".into()));
        let text = file.to_json();
        let again = load_system(&text, None).unwrap().system;
        assert_eq!(again.poset(), s.poset());
        for i in 0..s.len() {
            assert_eq!(again.space_idx(i).gram(), s.space_idx(i).gram());
        }
        assert_eq!(SystemFile::parse(&text).unwrap(), file);
    }

    #[test]
    fn schema_errors_carry_a_path() {
        match load_system(r#"{"kind": "explicit", "poset": {"elements": ["a"]}, "spaces": [{"label": "a", "gram": [[1, "x"]]}]}"#, None) {
            Err(Error::Schema { path, .. }) => assert!(path.contains("spaces"), "{path}"),
            other => panic!("{other:?}"),
        }
        assert!(matches!(load_system("{not json", None), Err(Error::Schema { .. })));
        assert!(matches!(load_system(r#"{"kind": "nope"}"#, None), Err(Error::Schema { .. })));
    }

    #[test]
    fn tolerance_layers() {
        let text = r#"{"kind": "generator", "generator": {"type": "shift-chain", "dim": 2, "levels": 2},
                       "tolerances": {"equal": 1e-6, "inj": 1e-7}}"#;
        let s = load_system(text, None).unwrap().system;
        assert_eq!(s.tolerances().equal, 1e-6);
        assert_eq!(s.tolerances().inj, 1e-7);
        let s = load_system(text, Some(1e-4)).unwrap().system;
        assert_eq!(s.tolerances().equal, 1e-4);
    }

    #[test]
    fn complex_text() {
        assert_eq!(parse_complex("2").unwrap(), c(2.0, 0.0));
        assert_eq!(parse_complex("-i").unwrap(), c(0.0, -1.0));
        assert_eq!(parse_complex("1+2i").unwrap(), c(1.0, 2.0));
        assert_eq!(parse_complex("1e-3-2.5e1i").unwrap(), c(1e-3, -25.0));
        assert_eq!(parse_complex("-0.5i").unwrap(), c(0.0, -0.5));
        assert!(parse_complex("1+").is_err());
        assert_eq!(parse_vector("1,0").unwrap(), CVec::from_vec(vec![c(1.0, 0.0), c(0.0, 0.0)]));
        assert_eq!(parse_vector("[[0,1], 2]").unwrap(), CVec::from_vec(vec![c(0.0, 1.0), c(2.0, 0.0)]));
        assert_eq!(format_complex(c(2.0, 0.0)), "2.000000000000000+0i");
        assert_eq!(format_complex(c(0.0, -1.5)), "0-1.500000000000000i");
    }
}

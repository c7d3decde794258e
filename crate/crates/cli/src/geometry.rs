//! The geometry-file schema and its strict parser.
//!
//! A geometry file is a single JSON object:
//!
//! ```json
//! {
//!   "dim": 3,
//!   "gram": [[1,0,0],[0,1,0],[0,0,1]],
//!   "bracket": [[1, 2, 3, 1.0]],
//!   "structure": {"kind": "almost_contact", "matrix": [[...]], "xi": [0,0,1]},
//!   "taxonomy": "acms",
//!   "tol_rel": 1e-8
//! }
//! ```
//!
//! `gram`, `taxonomy` and `tol_rel` are optional. Bracket entries are
//! `[i, j, k, value]` with 1-based indices and `i < j`; the antisymmetric
//! counterpart is implied. Unknown keys anywhere are rejected.

use std::collections::BTreeSet;

use nalgebra::{DMatrix, DVector};
use serde_json::Value;

use riemgeo::lie::FrameModel;
use riemgeo::structures::StructureTensor;
use riemgeo::tensor::{FrameMetric, Tensor3};

#[derive(Debug)]
pub struct ParseError {
    pub path: String,
    pub message: String,
}

impl std::fmt::Display for ParseError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "parse error at {}: {}", self.path, self.message)
    }
}

fn err<T>(path: &str, message: impl Into<String>) -> Result<T, ParseError> {
    Err(ParseError { path: path.to_string(), message: message.into() })
}

#[derive(Debug, Clone)]
pub struct GeometryFile {
    pub dim: usize,
    pub model: FrameModel,
    pub structure: StructureTensor,
    pub taxonomy: Option<String>,
    pub tol_rel: Option<f64>,
}

fn require_keys(obj: &serde_json::Map<String, Value>, allowed: &[&str], path: &str) -> Result<(), ParseError> {
    for k in obj.keys() {
        if !allowed.contains(&k.as_str()) {
            return err(path, format!("unknown key `{k}`"));
        }
    }
    Ok(())
}

fn as_f64(v: &Value, path: &str) -> Result<f64, ParseError> {
    v.as_f64().ok_or(ParseError { path: path.into(), message: "expected a number".into() })
}

fn as_usize(v: &Value, path: &str) -> Result<usize, ParseError> {
    let x = as_f64(v, path)?;
    if x.fract() != 0.0 || x < 0.0 {
        return err(path, "expected a nonnegative integer");
    }
    Ok(x as usize)
}

fn parse_matrix(v: &Value, dim: usize, path: &str) -> Result<DMatrix<f64>, ParseError> {
    let rows = v.as_array().ok_or(ParseError { path: path.into(), message: "expected a matrix (array of rows)".into() })?;
    if rows.len() != dim {
        return err(path, format!("expected {dim} rows, found {}", rows.len()));
    }
    let mut m = DMatrix::zeros(dim, dim);
    for (i, row) in rows.iter().enumerate() {
        let cells = row.as_array().ok_or(ParseError {
            path: format!("{path}[{i}]"),
            message: "expected a row (array of numbers)".into(),
        })?;
        if cells.len() != dim {
            return err(&format!("{path}[{i}]"), format!("expected {dim} entries"));
        }
        for (j, cell) in cells.iter().enumerate() {
            m[(i, j)] = as_f64(cell, &format!("{path}[{i}][{j}]"))?;
        }
    }
    Ok(m)
}

fn parse_vector(v: &Value, dim: usize, path: &str) -> Result<DVector<f64>, ParseError> {
    let cells = v.as_array().ok_or(ParseError { path: path.into(), message: "expected an array of numbers".into() })?;
    if cells.len() != dim {
        return err(path, format!("expected {dim} entries, found {}", cells.len()));
    }
    let mut out = DVector::zeros(dim);
    for (i, cell) in cells.iter().enumerate() {
        out[i] = as_f64(cell, &format!("{path}[{i}]"))?;
    }
    Ok(out)
}

pub fn parse_geometry(text: &str) -> Result<GeometryFile, ParseError> {
    let root: Value = serde_json::from_str(text)
        .map_err(|e| ParseError { path: "$".into(), message: format!("invalid JSON: {e}") })?;
    let obj = match &root {
        Value::Object(o) => o,
        _ => return err("$", "expected a top-level object"),
    };
    require_keys(obj, &["dim", "gram", "bracket", "structure", "taxonomy", "tol_rel"], "$")?;
    let dim = as_usize(
        obj.get("dim").ok_or(ParseError { path: "$.dim".into(), message: "missing".into() })?,
        "$.dim",
    )?;
    if dim == 0 || dim > 24 {
        return err("$.dim", "dim must be between 1 and 24");
    }
    let gram = match obj.get("gram") {
        Some(v) => parse_matrix(v, dim, "$.gram")?,
        None => DMatrix::identity(dim, dim),
    };
    let frame = FrameMetric::new(gram)
        .map_err(|e| ParseError { path: "$.gram".into(), message: e.to_string() })?;
    // Bracket triples: only i < j stored; duplicates rejected.
    let mut c = Tensor3::zeros(dim);
    let mut seen: BTreeSet<(usize, usize, usize)> = BTreeSet::new();
    if let Some(v) = obj.get("bracket") {
        let entries = v.as_array().ok_or(ParseError {
            path: "$.bracket".into(),
            message: "expected an array of [i, j, k, value] quadruples".into(),
        })?;
        for (idx, e) in entries.iter().enumerate() {
            let path = format!("$.bracket[{idx}]");
            let quad = e.as_array().ok_or(ParseError {
                path: path.clone(),
                message: "expected [i, j, k, value]".into(),
            })?;
            if quad.len() != 4 {
                return err(&path, "expected exactly [i, j, k, value]");
            }
            let i = as_usize(&quad[0], &format!("{path}[0]"))?;
            let j = as_usize(&quad[1], &format!("{path}[1]"))?;
            let k = as_usize(&quad[2], &format!("{path}[2]"))?;
            let value = as_f64(&quad[3], &format!("{path}[3]"))?;
            if i < 1 || j < 1 || k < 1 || i > dim || j > dim || k > dim {
                return err(&path, format!("indices must be in 1..={dim}"));
            }
            if i >= j {
                return err(&path, "bracket entries must have i < j (the antisymmetric counterpart is implied)");
            }
            if !seen.insert((i, j, k)) {
                return err(&path, format!("duplicate bracket component ({i},{j},{k})"));
            }
            c[(i - 1, j - 1, k - 1)] = value;
            c[(j - 1, i - 1, k - 1)] = -value;
        }
    }
    let model = FrameModel::new(frame, c)
        .map_err(|e| ParseError { path: "$.bracket".into(), message: e.to_string() })?;
    // Structure.
    let sval = obj
        .get("structure")
        .ok_or(ParseError { path: "$.structure".into(), message: "missing".into() })?;
    let sobj = match sval {
        Value::Object(o) => o,
        _ => return err("$.structure", "expected an object"),
    };
    require_keys(sobj, &["kind", "matrix", "xi", "order"], "$.structure")?;
    let kind = sobj
        .get("kind")
        .and_then(|v| v.as_str())
        .ok_or(ParseError { path: "$.structure.kind".into(), message: "missing or not a string".into() })?;
    let matrix = parse_matrix(
        sobj.get("matrix")
            .ok_or(ParseError { path: "$.structure.matrix".into(), message: "missing".into() })?,
        dim,
        "$.structure.matrix",
    )?;
    let structure = match kind {
        "almost_product" => {
            if sobj.contains_key("xi") || sobj.contains_key("order") {
                return err("$.structure", "almost_product takes only `matrix`");
            }
            StructureTensor::AlmostProduct { p: matrix }
        }
        "almost_hermitian" => {
            if sobj.contains_key("xi") || sobj.contains_key("order") {
                return err("$.structure", "almost_hermitian takes only `matrix`");
            }
            StructureTensor::AlmostHermitian { j: matrix }
        }
        "f_structure" => {
            if sobj.contains_key("xi") || sobj.contains_key("order") {
                return err("$.structure", "f_structure takes only `matrix`");
            }
            StructureTensor::FStructure { f: matrix }
        }
        "almost_contact" => {
            let xi = parse_vector(
                sobj.get("xi").ok_or(ParseError {
                    path: "$.structure.xi".into(),
                    message: "missing (required for almost_contact)".into(),
                })?,
                dim,
                "$.structure.xi",
            )?;
            if sobj.contains_key("order") {
                return err("$.structure", "almost_contact takes `matrix` and `xi` only");
            }
            StructureTensor::AlmostContact { f: matrix, xi }
        }
        "sigma_affinor" => {
            if sobj.contains_key("xi") {
                return err("$.structure", "sigma_affinor takes `matrix` and optional `order`");
            }
            let order = match sobj.get("order") {
                Some(v) => Some(as_usize(v, "$.structure.order")? as u32),
                None => None,
            };
            StructureTensor::SigmaAffinor { s: matrix, order }
        }
        other => return err("$.structure.kind", format!("unknown structure kind `{other}`")),
    };
    let taxonomy = match obj.get("taxonomy") {
        Some(Value::String(s)) => {
            if !["on3", "gh", "acms"].contains(&s.as_str()) {
                return err("$.taxonomy", "expected on3, gh or acms");
            }
            Some(s.clone())
        }
        Some(_) => return err("$.taxonomy", "expected a string"),
        None => None,
    };
    let tol_rel = match obj.get("tol_rel") {
        Some(v) => Some(as_f64(v, "$.tol_rel")?),
        None => None,
    };
    Ok(GeometryFile { dim, model, structure, taxonomy, tol_rel })
}

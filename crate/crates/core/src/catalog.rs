//! Built-in catalog of left-invariant example geometries: the generalized
//! Heisenberg groups H(p,1) and H(1,r), the solvable group E(1,1), the
//! five-dimensional complex matrix group, su(2) with its bi-invariant
//! metric, and a rank-one solvable algebra realizing the T1 trace form.
//!
//! Structure constants come from inverting the stated left-invariant
//! coframes; expected class labels are recorded only where the source
//! states them.

use std::collections::{BTreeMap, BTreeSet};

use nalgebra::{DMatrix, DVector};

use crate::classify::TaxonomyId;
use crate::error::{GeoError, Result};
use crate::lie::{validate_lie, FrameModel};
use crate::structures::{validate_structure, StructureTensor};
use crate::tensor::{FrameMetric, Tensor3};

#[derive(Debug, Clone)]
pub enum ParamValue {
    Number(f64),
    Text(String),
}

pub type Params = BTreeMap<String, ParamValue>;

#[derive(Debug, Clone)]
pub struct CatalogEntry {
    pub name: String,
    /// Resolved parameters, echoed into reports.
    pub params: BTreeMap<String, String>,
    pub model: FrameModel,
    /// The structure tensor carried by the entry, when it has one.
    pub structure: Option<StructureTensor>,
    /// A user-supplied second fundamental tensor (covariant), for entries
    /// whose h does not come from one of the five structure families.
    pub intrinsic_h: Option<Tensor3>,
    /// Exact expected membership, when the source states it.
    pub expected_class: Option<(TaxonomyId, BTreeSet<usize>)>,
    /// A stated upper bound on the membership, when only that is known.
    pub expected_within: Option<(TaxonomyId, BTreeSet<usize>)>,
}

pub const CATALOG_NAMES: [&str; 7] = [
    "su2",
    "heisenberg3",
    "heisenberg_p1",
    "heisenberg_1r",
    "e11",
    "complex_group",
    "solvable_t1",
];

/// One-line synopsis per entry, for `catalog list`.
pub fn describe(name: &str) -> Option<&'static str> {
    match name {
        "su2" => Some("su(2), bi-invariant metric, naturally reductive h = [X,Y]/2 (params: none)"),
        "heisenberg3" => {
            Some("3-dim Heisenberg group with the alpha-Sasakian a.c.m.s., alpha = 1/2 (params: none)")
        }
        "heisenberg_p1" => Some(
            "H(p,1) with an admissible a.c.m.s. (params: p>=1; branch=t7|t5|generic; lambda=+-1; theta)",
        ),
        "heisenberg_1r" => {
            Some("H(1,r) with the diagonal or off-diagonal a.c.m.s. (params: r>=2; branch=t8|t9)")
        }
        "e11" => Some("E(1,1) rigid motions of Minkowski 2-space (params: lambda>0; xi=X1|X2|X3)"),
        "complex_group" => {
            Some("5-dim complex matrix group (params: branch=a (cosymplectic) | b (class T12))")
        }
        "solvable_t1" => Some(
            "rank-one solvable algebra [zeta,E_i] = c E_i (params: n>=3; c; structure=product|acms)",
        ),
        _ => None,
    }
}

fn set(v: &[usize]) -> BTreeSet<usize> {
    v.iter().copied().collect()
}

struct ParamReader<'a> {
    params: &'a Params,
    allowed: Vec<&'static str>,
}

impl<'a> ParamReader<'a> {
    fn new(params: &'a Params) -> Self {
        Self { params, allowed: Vec::new() }
    }

    fn number(&mut self, key: &'static str, default: f64) -> Result<f64> {
        self.allowed.push(key);
        match self.params.get(key) {
            None => Ok(default),
            Some(ParamValue::Number(x)) => Ok(*x),
            Some(ParamValue::Text(t)) => t
                .parse::<f64>()
                .map_err(|_| GeoError::InvalidParams(format!("parameter `{key}` must be numeric"))),
        }
    }

    fn integer(&mut self, key: &'static str, default: i64) -> Result<i64> {
        let x = self.number(key, default as f64)?;
        if x.fract() != 0.0 {
            return Err(GeoError::InvalidParams(format!("parameter `{key}` must be an integer")));
        }
        Ok(x as i64)
    }

    fn text(&mut self, key: &'static str, default: &str) -> Result<String> {
        self.allowed.push(key);
        match self.params.get(key) {
            None => Ok(default.to_string()),
            Some(ParamValue::Text(t)) => Ok(t.clone()),
            Some(ParamValue::Number(x)) => Ok(format!("{x}")),
        }
    }

    fn finish(&self) -> Result<()> {
        for k in self.params.keys() {
            if !self.allowed.contains(&k.as_str()) {
                return Err(GeoError::InvalidParams(format!("unknown parameter `{k}`")));
            }
        }
        Ok(())
    }
}

/// Load a catalog entry by name; parameters are validated per entry.
pub fn catalog_load(name: &str, params: &Params) -> Result<CatalogEntry> {
    let entry = match name {
        "su2" => su2(params)?,
        "heisenberg3" => heisenberg3(params)?,
        "heisenberg_p1" => heisenberg_p1(params)?,
        "heisenberg_1r" => heisenberg_1r(params)?,
        "e11" => e11(params)?,
        "complex_group" => complex_group(params)?,
        "solvable_t1" => solvable_t1(params)?,
        other => return Err(GeoError::UnknownCatalogEntry(other.to_string())),
    };
    let diag = validate_lie(&entry.model);
    if !diag.passes() {
        return Err(GeoError::InternalInconsistency(format!(
            "catalog entry `{name}` fails the Lie validator (antisymmetry {:.3e}, Jacobi {:.3e})",
            diag.antisymmetry, diag.jacobi
        )));
    }
    if let Some(s) = &entry.structure {
        validate_structure(s, entry.model.frame())?;
    }
    Ok(entry)
}

fn su2(params: &Params) -> Result<CatalogEntry> {
    let r = ParamReader::new(params);
    r.finish()?;
    let bracket = crate::tensor::epsilon3();
    let frame = FrameMetric::euclidean(3);
    let model = FrameModel::new(frame, bracket)?;
    // Naturally reductive h_X Y = [X, Y]/2, lowered.
    let h = Tensor3::from_fn(3, |i, j, k| 0.5 * model.bracket()[(i, j, k)]);
    Ok(CatalogEntry {
        name: "su2".into(),
        params: BTreeMap::new(),
        model,
        structure: None,
        intrinsic_h: Some(h),
        expected_class: Some((TaxonomyId::On3, set(&[3]))),
        expected_within: None,
    })
}

fn heisenberg3(params: &Params) -> Result<CatalogEntry> {
    let r = ParamReader::new(params);
    r.finish()?;
    let mut c = Tensor3::zeros(3);
    c[(0, 1, 2)] = 1.0;
    c[(1, 0, 2)] = -1.0;
    let model = FrameModel::new(FrameMetric::euclidean(3), c)?;
    // F e1 = e2, F e2 = -e1, xi = e3; this orientation makes the structure
    // alpha-Sasakian with alpha = +1/2.
    let f = DMatrix::from_row_slice(3, 3, &[0.0, -1.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 0.0]);
    let xi = DVector::from_vec(vec![0.0, 0.0, 1.0]);
    Ok(CatalogEntry {
        name: "heisenberg3".into(),
        params: BTreeMap::new(),
        model,
        structure: Some(StructureTensor::AlmostContact { f, xi }),
        intrinsic_h: None,
        expected_class: Some((TaxonomyId::Acms12, set(&[7]))),
        expected_within: None,
    })
}

/// Admissible F on H(p,1): in the basis `X_1..X_p, X_{p+1}..X_{2p}, Z`
/// these are `F X_j = sum_i M_ij X_{p+i}`, `F X_{p+j} = -sum_i M_ij X_i`
/// with a symmetric orthogonal involution M. The trace of M steers the
/// class between T5 (trace zero) and T7 (M = lambda I).
fn heisenberg_p1(params: &Params) -> Result<CatalogEntry> {
    let mut r = ParamReader::new(params);
    let p = r.integer("p", 2)?;
    let branch = r.text("branch", "t7")?;
    let lambda = r.number("lambda", 1.0)?;
    let theta = r.number("theta", 0.7)?;
    r.finish()?;
    if p < 1 {
        return Err(GeoError::InvalidParams("p must be >= 1".into()));
    }
    let p = p as usize;
    let n = 2 * p + 1;
    let mut c = Tensor3::zeros(n);
    for i in 0..p {
        c[(i, p + i, n - 1)] = 1.0;
        c[(p + i, i, n - 1)] = -1.0;
    }
    let model = FrameModel::new(FrameMetric::euclidean(n), c)?;
    let m: DMatrix<f64> = match branch.as_str() {
        "t7" => {
            if lambda != 1.0 && lambda != -1.0 {
                return Err(GeoError::InvalidParams(
                    "branch t7 needs lambda = 1 or lambda = -1 (F^2 = -I forces it)".into(),
                ));
            }
            DMatrix::identity(p, p) * lambda
        }
        "t5" => {
            if p % 2 != 0 {
                return Err(GeoError::InvalidParams(
                    "branch t5 needs even p for a traceless involution".into(),
                ));
            }
            DMatrix::from_fn(p, p, |i, j| {
                if i == j {
                    if i % 2 == 0 {
                        1.0
                    } else {
                        -1.0
                    }
                } else {
                    0.0
                }
            })
        }
        "generic" => {
            if p < 2 {
                return Err(GeoError::InvalidParams("branch generic needs p >= 2".into()));
            }
            // Conjugate diag(1,..,1,-1) by a rotation in the (0,1)-plane.
            let mut e = DMatrix::identity(p, p);
            e[(p - 1, p - 1)] = -1.0;
            let mut rot = DMatrix::identity(p, p);
            rot[(0, 0)] = theta.cos();
            rot[(0, 1)] = -theta.sin();
            rot[(1, 0)] = theta.sin();
            rot[(1, 1)] = theta.cos();
            &rot * e * rot.transpose()
        }
        other => {
            return Err(GeoError::InvalidParams(format!(
                "unknown branch `{other}` (expected t7, t5 or generic)"
            )))
        }
    };
    let mut f = DMatrix::zeros(n, n);
    for j in 0..p {
        for i in 0..p {
            f[(p + i, j)] = m[(i, j)];
            f[(i, p + j)] = -m[(i, j)];
        }
    }
    let xi = DVector::from_fn(n, |a, _| if a == n - 1 { 1.0 } else { 0.0 });
    let trace = m.trace();
    let (expected_class, expected_within) = if branch == "t7" {
        (Some((TaxonomyId::Acms12, set(&[7]))), None)
    } else if trace.abs() < 1e-12 {
        (Some((TaxonomyId::Acms12, set(&[5]))), None)
    } else {
        // Mixed class: strictly inside T5 + T7 with both parts nonzero.
        (
            Some((TaxonomyId::Acms12, set(&[5, 7]))),
            Some((TaxonomyId::Acms12, set(&[5, 7]))),
        )
    };
    let mut echo = BTreeMap::new();
    echo.insert("p".into(), p.to_string());
    echo.insert("branch".into(), branch.clone());
    if branch == "t7" {
        echo.insert("lambda".into(), format!("{lambda}"));
    }
    if branch == "generic" {
        echo.insert("theta".into(), format!("{theta}"));
    }
    Ok(CatalogEntry {
        name: "heisenberg_p1".into(),
        params: echo,
        model,
        structure: Some(StructureTensor::AlmostContact { f, xi }),
        intrinsic_h: None,
        expected_class,
        expected_within,
    })
}

fn heisenberg_1r(params: &Params) -> Result<CatalogEntry> {
    let mut r = ParamReader::new(params);
    let rr = r.integer("r", 2)?;
    let branch = r.text("branch", "t8")?;
    r.finish()?;
    if rr < 2 {
        return Err(GeoError::InvalidParams("r must be > 1".into()));
    }
    let rr = rr as usize;
    let n = 2 * rr + 1;
    // Dual frame of (alpha_i, alpha_{r+i}, gamma = dz): Z picks up the
    // x_j-shifts, so [X_i, Z] = X_{r+i} and everything else commutes.
    let mut c = Tensor3::zeros(n);
    for i in 0..rr {
        c[(i, n - 1, rr + i)] = 1.0;
        c[(n - 1, i, rr + i)] = -1.0;
    }
    let model = FrameModel::new(FrameMetric::euclidean(n), c)?;
    let mut f = DMatrix::zeros(n, n);
    match branch.as_str() {
        "t8" => {
            if rr % 2 != 0 {
                return Err(GeoError::InvalidParams(
                    "branch t8 needs even r (P^2 = -I on the first block)".into(),
                ));
            }
            // F = diag(P, P) with P the standard rotation pairing.
            for b in 0..rr / 2 {
                let (a, bb) = (2 * b, 2 * b + 1);
                f[(bb, a)] = 1.0;
                f[(a, bb)] = -1.0;
                f[(rr + bb, rr + a)] = 1.0;
                f[(rr + a, rr + bb)] = -1.0;
            }
        }
        "t9" => {
            // F = [[0, I], [-I, 0]] pattern across the two blocks.
            for i in 0..rr {
                f[(rr + i, i)] = -1.0;
                f[(i, rr + i)] = 1.0;
            }
        }
        other => {
            return Err(GeoError::InvalidParams(format!(
                "unknown branch `{other}` (expected t8 or t9)"
            )))
        }
    }
    let xi = DVector::from_fn(n, |a, _| if a == n - 1 { 1.0 } else { 0.0 });
    let expected = match branch.as_str() {
        "t8" => set(&[8]),
        _ => set(&[9]),
    };
    let mut echo = BTreeMap::new();
    echo.insert("r".into(), rr.to_string());
    echo.insert("branch".into(), branch);
    Ok(CatalogEntry {
        name: "heisenberg_1r".into(),
        params: echo,
        model,
        structure: Some(StructureTensor::AlmostContact { f, xi }),
        intrinsic_h: None,
        expected_class: Some((TaxonomyId::Acms12, expected)),
        expected_within: None,
    })
}

fn e11(params: &Params) -> Result<CatalogEntry> {
    let mut r = ParamReader::new(params);
    let lambda = r.number("lambda", 1.0)?;
    let xi_name = r.text("xi", "X3")?;
    r.finish()?;
    if lambda <= 0.0 {
        return Err(GeoError::InvalidParams("lambda must be positive".into()));
    }
    // X1 = e^{-z} d/dx, X2 = e^z d/dy, X3 = (1/lambda) d/dz:
    // [X3, X1] = -(1/lambda) X1, [X3, X2] = (1/lambda) X2.
    let mut c = Tensor3::zeros(3);
    let s = 1.0 / lambda;
    c[(2, 0, 0)] = -s;
    c[(0, 2, 0)] = s;
    c[(2, 1, 1)] = s;
    c[(1, 2, 1)] = -s;
    let model = FrameModel::new(FrameMetric::euclidean(3), c)?;
    let (f, xi, expected) = match xi_name.as_str() {
        "X3" => {
            let f = DMatrix::from_row_slice(3, 3, &[0.0, -1.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 0.0]);
            (f, DVector::from_vec(vec![0.0, 0.0, 1.0]), set(&[9]))
        }
        "X1" => {
            let f = DMatrix::from_row_slice(3, 3, &[0.0, 0.0, 0.0, 0.0, 0.0, -1.0, 0.0, 1.0, 0.0]);
            (f, DVector::from_vec(vec![1.0, 0.0, 0.0]), set(&[11]))
        }
        "X2" => {
            let f = DMatrix::from_row_slice(3, 3, &[0.0, 0.0, -1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0]);
            (f, DVector::from_vec(vec![0.0, 1.0, 0.0]), set(&[11]))
        }
        other => {
            return Err(GeoError::InvalidParams(format!(
                "unknown xi `{other}` (expected X1, X2 or X3)"
            )))
        }
    };
    let mut echo = BTreeMap::new();
    echo.insert("lambda".into(), format!("{lambda}"));
    echo.insert("xi".into(), xi_name);
    Ok(CatalogEntry {
        name: "e11".into(),
        params: echo,
        model,
        structure: Some(StructureTensor::AlmostContact { f, xi }),
        intrinsic_h: None,
        expected_class: Some((TaxonomyId::Acms12, expected)),
        expected_within: None,
    })
}

fn complex_group(params: &Params) -> Result<CatalogEntry> {
    let mut r = ParamReader::new(params);
    let branch = r.text("branch", "a")?;
    r.finish()?;
    // Basis X1, X2, X3, X4, W with [W, X1] = X3, [W, X2] = X4,
    // [W, X3] = -X1, [W, X4] = -X2.
    let n = 5;
    let mut c = Tensor3::zeros(n);
    let pairs = [(0usize, 2usize, 1.0), (1, 3, 1.0), (2, 0, -1.0), (3, 1, -1.0)];
    for (src, dst, w) in pairs {
        c[(4, src, dst)] = w;
        c[(src, 4, dst)] = -w;
    }
    let model = FrameModel::new(FrameMetric::euclidean(n), c)?;
    let mut f = DMatrix::zeros(n, n);
    // F X1 = X2, F X2 = -X1 in both branches.
    f[(1, 0)] = 1.0;
    f[(0, 1)] = -1.0;
    let expected = match branch.as_str() {
        "a" => {
            // F X3 = X4, F X4 = -X3: F commutes with ad_W, h = 0.
            f[(3, 2)] = 1.0;
            f[(2, 3)] = -1.0;
            set(&[])
        }
        "b" => {
            // Orientation reversed on the (X3, X4) plane: class T12.
            f[(3, 2)] = -1.0;
            f[(2, 3)] = 1.0;
            set(&[12])
        }
        other => {
            return Err(GeoError::InvalidParams(format!(
                "unknown branch `{other}` (expected a or b)"
            )))
        }
    };
    let xi = DVector::from_fn(n, |a, _| if a == 4 { 1.0 } else { 0.0 });
    let mut echo = BTreeMap::new();
    echo.insert("branch".into(), branch);
    Ok(CatalogEntry {
        name: "complex_group".into(),
        params: echo,
        model,
        structure: Some(StructureTensor::AlmostContact { f, xi }),
        intrinsic_h: None,
        expected_class: Some((TaxonomyId::Acms12, expected)),
        expected_within: None,
    })
}

fn solvable_t1(params: &Params) -> Result<CatalogEntry> {
    let mut r = ParamReader::new(params);
    let n = r.integer("n", 4)?;
    let c_param = r.number("c", 1.0)?;
    let structure = r.text("structure", "product")?;
    r.finish()?;
    if n < 3 {
        return Err(GeoError::InvalidParams("n must be >= 3".into()));
    }
    if c_param == 0.0 {
        return Err(GeoError::InvalidParams("c must be nonzero".into()));
    }
    let n = n as usize;
    let zeta = n - 1;
    let mut c = Tensor3::zeros(n);
    for i in 0..zeta {
        c[(zeta, i, i)] = c_param;
        c[(i, zeta, i)] = -c_param;
    }
    let model = FrameModel::new(FrameMetric::euclidean(n), c)?;
    let mut echo = BTreeMap::new();
    echo.insert("n".into(), n.to_string());
    echo.insert("c".into(), format!("{c_param}"));
    echo.insert("structure".into(), structure.clone());
    match structure.as_str() {
        "product" => {
            // Mirror [zeta]: P = +1 on zeta, -1 on the E_i.
            let p = DMatrix::from_fn(n, n, |i, j| {
                if i != j {
                    0.0
                } else if i == zeta {
                    1.0
                } else {
                    -1.0
                }
            });
            Ok(CatalogEntry {
                name: "solvable_t1".into(),
                params: echo,
                model,
                structure: Some(StructureTensor::AlmostProduct { p }),
                intrinsic_h: None,
                expected_class: Some((TaxonomyId::On3, set(&[1]))),
                expected_within: None,
            })
        }
        "acms" => {
            if n % 2 == 0 {
                return Err(GeoError::InvalidParams(
                    "structure acms needs odd n (even-dimensional V)".into(),
                ));
            }
            let m = (n - 1) / 2;
            let mut f = DMatrix::zeros(n, n);
            for i in 0..m {
                f[(m + i, i)] = 1.0;
                f[(i, m + i)] = -1.0;
            }
            let xi = DVector::from_fn(n, |a, _| if a == zeta { 1.0 } else { 0.0 });
            Ok(CatalogEntry {
                name: "solvable_t1".into(),
                params: echo,
                model,
                structure: Some(StructureTensor::AlmostContact { f, xi }),
                intrinsic_h: None,
                // alpha-Kenmotsu with alpha = -c.
                expected_class: Some((TaxonomyId::Acms12, set(&[10]))),
                expected_within: None,
            })
        }
        other => Err(GeoError::InvalidParams(format!(
            "unknown structure `{other}` (expected product or acms)"
        ))),
    }
}

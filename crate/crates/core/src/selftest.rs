//! Identity suites over the catalog, plus deterministic generators of
//! synthetic models and structures shared by the self-test command and
//! the test suites.

use std::collections::BTreeSet;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::analysis;
use crate::catalog::{catalog_load, CatalogEntry, Params};
use crate::classify::{self, TaxonomyId};
use crate::error::Result;
use crate::lie::{self, Connection, FrameModel};
use crate::structures::{self, DecoratedStructure, StructureTensor};
use crate::tensor::{FrameMetric, Tensor3};
use crate::tol;

/// One pass/fail line of the self-test.
#[derive(Debug, Clone)]
pub struct CheckResult {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl CheckResult {
    fn ok(name: impl Into<String>, detail: impl Into<String>) -> Self {
        Self { name: name.into(), passed: true, detail: detail.into() }
    }

    fn fail(name: impl Into<String>, detail: impl Into<String>) -> Self {
        Self { name: name.into(), passed: false, detail: detail.into() }
    }

    fn residual(name: impl Into<String>, value: f64, budget: f64) -> Self {
        Self {
            name: name.into(),
            passed: value <= budget,
            detail: format!("residual {value:.3e} (budget {budget:.0e})"),
        }
    }
}

/// Residuals of the per-geometry identity suite.
#[derive(Debug, Clone, Copy)]
pub struct IdentityResiduals {
    pub lie_antisymmetry: f64,
    pub lie_jacobi: f64,
    pub levi_civita_torsion: f64,
    pub levi_civita_metric: f64,
    pub bar_metric: f64,
    pub bar_structure: f64,
    pub h_skew: f64,
    pub family_symmetry: f64,
    pub torsion_dual: f64,
    pub curvature_relation: f64,
    pub bianchi: f64,
}

impl IdentityResiduals {
    pub fn worst_exact(&self) -> f64 {
        self.lie_antisymmetry
            .max(self.levi_civita_torsion)
            .max(self.h_skew)
            .max(self.family_symmetry)
            .max(self.torsion_dual)
    }

    pub fn worst_derived(&self) -> f64 {
        self.lie_jacobi
            .max(self.levi_civita_metric)
            .max(self.bar_metric)
            .max(self.bar_structure)
            .max(self.curvature_relation)
            .max(self.bianchi)
    }

    pub fn passes(&self) -> bool {
        self.worst_exact() <= tol::EXACT * 100.0 && self.worst_derived() <= tol::IDENTITY
    }
}

/// Family symmetry residual of `h` beyond metric-skewness:
/// `h_{XYZ} = -h_{X,JY,JZ}` for almost Hermitian structures and the same
/// with `F` on the V-distribution for f-structures / a.c.m.s.
pub fn family_symmetry_residual(dec: &DecoratedStructure, h: &Tensor3, model: &FrameModel) -> f64 {
    let n = model.dim();
    let frame = model.frame();
    let f = match &dec.structure {
        StructureTensor::AlmostHermitian { j } => j,
        StructureTensor::FStructure { f } => f,
        StructureTensor::AlmostContact { f, .. } => f,
        _ => return 0.0,
    };
    let vb = &dec.v_basis;
    let mut res = 0.0f64;
    for i in 0..n {
        let x = model.basis_vector(i);
        for a in 0..vb.ncols() {
            let y = vb.column(a).into_owned();
            let fy = f * &y;
            for b in 0..vb.ncols() {
                let z = vb.column(b).into_owned();
                let fz = f * &z;
                res = res.max((h.eval(&x, &y, &z) + h.eval(&x, &fy, &fz)).abs());
            }
        }
    }
    let _ = frame;
    res
}

/// Compute every identity residual for a geometry with a structure.
pub fn identity_residuals(
    model: &FrameModel,
    dec: &DecoratedStructure,
    nabla: &Connection,
    nabla_bar: &Connection,
    h: &Tensor3,
) -> IdentityResiduals {
    let frame = model.frame();
    let diag = lie::validate_lie(model);
    let r = lie::riemann_curvature(nabla, model);
    let torsion_direct = lie::frame_torsion(nabla_bar, model);
    let torsion_from_h = structures::torsion_bar(h, frame);
    IdentityResiduals {
        lie_antisymmetry: diag.antisymmetry,
        lie_jacobi: diag.jacobi,
        levi_civita_torsion: lie::torsion_free_residual(nabla, model),
        levi_civita_metric: nabla.metric_residual(frame),
        bar_metric: nabla_bar.metric_residual(frame),
        bar_structure: structures::structure_parallel_residual(dec, nabla_bar, frame),
        h_skew: h.metric_skew_residual(),
        family_symmetry: family_symmetry_residual(dec, h, model),
        torsion_dual: torsion_direct.sub(&torsion_from_h).amax(),
        curvature_relation: analysis::curvature_relation_check(model, nabla, nabla_bar, h),
        bianchi: lie::bianchi_residual(&r),
    }
}

/// Everything the pipeline needs for one structured geometry.
pub struct StructuredGeometry {
    pub dec: DecoratedStructure,
    pub nabla: Connection,
    pub nabla_bar: Connection,
    pub h: Tensor3,
    pub residuals: IdentityResiduals,
}

/// Validate the structure, build both connections and `h`, and run the
/// identity suite.
pub fn analyze_structure(model: &FrameModel, s: &StructureTensor) -> Result<StructuredGeometry> {
    let frame = model.frame();
    let dec = structures::validate_structure(s, frame)?;
    let nabla = lie::levi_civita(model);
    let nabla_bar = structures::canonical_connection(&dec, &nabla, frame)?;
    let h = structures::second_fundamental(&dec, &nabla, &nabla_bar, frame)?;
    let residuals = identity_residuals(model, &dec, &nabla, &nabla_bar, &h);
    Ok(StructuredGeometry { dec, nabla, nabla_bar, h, residuals })
}

/// Classify the h of a structured geometry against its natural taxonomy.
pub fn classify_structured(
    geo: &StructuredGeometry,
    model: &FrameModel,
    tol_rel: f64,
) -> Result<Option<classify::ClassReport>> {
    let frame = model.frame();
    let (tax_id, n) = match &geo.dec.structure {
        StructureTensor::AlmostHermitian { .. } => (TaxonomyId::Gh4, model.dim() / 2),
        StructureTensor::AlmostContact { .. } => (TaxonomyId::Acms12, (model.dim() - 1) / 2),
        StructureTensor::AlmostProduct { .. } | StructureTensor::FStructure { .. } => {
            (TaxonomyId::On3, model.dim())
        }
        StructureTensor::SigmaAffinor { .. } => (TaxonomyId::On3, model.dim()),
    };
    if tax_id == TaxonomyId::On3 && n < 3 {
        return Ok(None);
    }
    let tax = classify::build_taxonomy(tax_id, n)?;
    let h_std = classify::to_standard_coords(&geo.h, &geo.dec, frame);
    Ok(Some(classify::classify(&h_std, &tax, tol_rel)?))
}

// ---------------------------------------------------------------------
// deterministic synthetic inputs
// ---------------------------------------------------------------------

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Random special orthogonal matrix via the Cayley transform of a random
/// skew matrix.
pub fn random_orthogonal(n: usize, rng: &mut ChaCha8Rng) -> DMatrix<f64> {
    let mut k = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in (i + 1)..n {
            let v: f64 = rng.gen_range(-1.0..1.0);
            k[(i, j)] = v;
            k[(j, i)] = -v;
        }
    }
    let id = DMatrix::identity(n, n);
    (&id - &k) * (&id + &k).try_inverse().expect("I + K is invertible for skew K")
}

/// Random element of U(n) embedded in O(2n), commuting with the standard
/// complex structure: the Cayley transform of `[[A, -B], [B, A]]` with
/// `A` skew and `B` symmetric.
pub fn random_unitary_block(n: usize, rng: &mut ChaCha8Rng) -> DMatrix<f64> {
    let mut a = DMatrix::zeros(n, n);
    let mut b = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            if j > i {
                let v: f64 = rng.gen_range(-1.0..1.0);
                a[(i, j)] = v;
                a[(j, i)] = -v;
            }
            if j >= i {
                let v: f64 = rng.gen_range(-1.0..1.0);
                b[(i, j)] = v;
                b[(j, i)] = v;
            }
        }
    }
    let mut k = DMatrix::zeros(2 * n, 2 * n);
    for i in 0..n {
        for j in 0..n {
            k[(i, j)] = a[(i, j)];
            k[(n + i, n + j)] = a[(i, j)];
            k[(i, n + j)] = -b[(i, j)];
            k[(n + i, j)] = b[(i, j)];
        }
    }
    let id = DMatrix::identity(2 * n, 2 * n);
    (&id - &k) * (&id + &k).try_inverse().expect("Cayley")
}

/// Random element of U(n) x 1 acting on the standard a.c.m.s. frame.
pub fn random_acms_group_element(n: usize, rng: &mut ChaCha8Rng) -> DMatrix<f64> {
    let u = random_unitary_block(n, rng);
    let nn = 2 * n + 1;
    let mut m = DMatrix::identity(nn, nn);
    for i in 0..2 * n {
        for j in 0..2 * n {
            m[(i, j)] = u[(i, j)];
        }
    }
    m
}

/// Random two-step nilpotent algebra: `[V, V] subset Z`, `[V, Z] = 0`.
/// The Jacobi identity holds automatically.
pub fn random_two_step_nilpotent(v_dim: usize, z_dim: usize, rng: &mut ChaCha8Rng) -> FrameModel {
    let n = v_dim + z_dim;
    let mut c = Tensor3::zeros(n);
    for z in 0..z_dim {
        for i in 0..v_dim {
            for j in (i + 1)..v_dim {
                let w: f64 = rng.gen_range(-1.0..1.0);
                c[(i, j, v_dim + z)] = w;
                c[(j, i, v_dim + z)] = -w;
            }
        }
    }
    FrameModel::new(FrameMetric::euclidean(n), c).expect("valid model")
}

/// Random rank-one solvable algebra: `[zeta, E_i] = sum_j A_ji E_j` for a
/// random matrix A on the complement of zeta (the last basis vector).
pub fn random_solvable(n: usize, rng: &mut ChaCha8Rng) -> FrameModel {
    let mut c = Tensor3::zeros(n);
    for i in 0..n - 1 {
        for j in 0..n - 1 {
            let w: f64 = rng.gen_range(-0.8..0.8);
            c[(n - 1, i, j)] += w * if i == j { 1.0 } else { 0.3 };
            c[(i, n - 1, j)] -= w * if i == j { 1.0 } else { 0.3 };
        }
    }
    FrameModel::new(FrameMetric::euclidean(n), c).expect("valid model")
}

/// Random a.c.m.s. on an odd-dimensional Euclidean frame: a random unit
/// xi, a random orthonormal pairing of its complement.
pub fn random_acms_structure(n_total: usize, rng: &mut ChaCha8Rng) -> StructureTensor {
    assert!(n_total % 2 == 1);
    let q = random_orthogonal(n_total, rng);
    let xi = q.column(n_total - 1).into_owned();
    let m = (n_total - 1) / 2;
    let mut f = DMatrix::zeros(n_total, n_total);
    for i in 0..m {
        let e = q.column(i).into_owned();
        let fe = q.column(m + i).into_owned();
        // F e = fe, F fe = -e.
        f += &fe * e.transpose() - &e * fe.transpose();
    }
    StructureTensor::AlmostContact { f, xi }
}

/// Random g-orthogonal almost product structure on a Euclidean frame:
/// `P = Q diag(I_k, -I_{n-k}) Q^T` for a random rotation `Q`.
pub fn random_product_structure(n: usize, k: usize, rng: &mut ChaCha8Rng) -> StructureTensor {
    let q = random_orthogonal(n, rng);
    let d = DMatrix::from_fn(n, n, |i, j| {
        if i != j {
            0.0
        } else if i < k {
            1.0
        } else {
            -1.0
        }
    });
    StructureTensor::AlmostProduct { p: &q * d * q.transpose() }
}

/// Random orthogonal complex structure on an even-dimensional Euclidean
/// frame: a conjugated standard block rotation.
pub fn random_hermitian_structure(half: usize, rng: &mut ChaCha8Rng) -> StructureTensor {
    let n = 2 * half;
    let q = random_orthogonal(n, rng);
    let j0 = crate::classify::standard_j(half);
    StructureTensor::AlmostHermitian { j: &q * j0 * q.transpose() }
}

/// Random sigma affinor of finite order with no fixed directions: block
/// rotations by 2 pi / order, conjugated by a random rotation.
pub fn random_sigma_no_fix(half: usize, order: u32, rng: &mut ChaCha8Rng) -> StructureTensor {
    let n = 2 * half;
    let theta = 2.0 * std::f64::consts::PI / order as f64;
    let mut s = DMatrix::zeros(n, n);
    for b in 0..half {
        let (i, j) = (2 * b, 2 * b + 1);
        s[(i, i)] = theta.cos();
        s[(i, j)] = -theta.sin();
        s[(j, i)] = theta.sin();
        s[(j, j)] = theta.cos();
    }
    let q = random_orthogonal(n, rng);
    StructureTensor::SigmaAffinor { s: &q * s * q.transpose(), order: Some(order) }
}

/// Random covector with entries in [-1, 1].
pub fn random_covector(n: usize, rng: &mut ChaCha8Rng) -> DVector<f64> {
    DVector::from_fn(n, |_, _| rng.gen_range(-1.0..1.0))
}

/// Random metric-skew tensor with entries in [-1, 1].
pub fn random_skew_h(n: usize, rng: &mut ChaCha8Rng) -> Tensor3 {
    let mut h = Tensor3::zeros(n);
    for i in 0..n {
        for j in 0..n {
            for k in (j + 1)..n {
                let v: f64 = rng.gen_range(-1.0..1.0);
                h[(i, j, k)] = v;
                h[(i, k, j)] = -v;
            }
        }
    }
    h
}

/// Random tensor inside a taxonomy's ambient space.
pub fn random_ambient_tensor(tax: &classify::Taxonomy, rng: &mut ChaCha8Rng) -> Tensor3 {
    let d = tax.ambient.ncols();
    let coords = DVector::from_fn(d, |_, _| rng.gen_range(-1.0..1.0));
    let v = &tax.ambient * coords;
    let nn = tax.dim_total;
    Tensor3::from_fn(nn, |i, j, k| v[(i * nn + j) * nn + k])
}

// ---------------------------------------------------------------------
// the suite
// ---------------------------------------------------------------------

fn catalog_variants() -> Vec<(&'static str, Params)> {
    use crate::catalog::ParamValue as PV;
    let mut variants: Vec<(&'static str, Params)> = Vec::new();
    let mut p = Params::new();
    variants.push(("su2", p.clone()));
    p = Params::new();
    variants.push(("heisenberg3", p.clone()));
    for branch in ["t7", "t5", "generic"] {
        p = Params::new();
        p.insert("p".into(), PV::Number(2.0));
        p.insert("branch".into(), PV::Text(branch.into()));
        variants.push(("heisenberg_p1", p.clone()));
    }
    p = Params::new();
    p.insert("p".into(), PV::Number(3.0));
    p.insert("branch".into(), PV::Text("generic".into()));
    variants.push(("heisenberg_p1", p.clone()));
    for branch in ["t8", "t9"] {
        p = Params::new();
        p.insert("r".into(), PV::Number(2.0));
        p.insert("branch".into(), PV::Text(branch.into()));
        variants.push(("heisenberg_1r", p.clone()));
    }
    for xi in ["X1", "X2", "X3"] {
        p = Params::new();
        p.insert("xi".into(), PV::Text(xi.into()));
        variants.push(("e11", p.clone()));
    }
    for branch in ["a", "b"] {
        p = Params::new();
        p.insert("branch".into(), PV::Text(branch.into()));
        variants.push(("complex_group", p.clone()));
    }
    p = Params::new();
    variants.push(("solvable_t1", p.clone()));
    p = Params::new();
    p.insert("n".into(), PV::Number(5.0));
    p.insert("structure".into(), PV::Text("acms".into()));
    variants.push(("solvable_t1", p.clone()));
    variants
}

fn entry_label(entry: &CatalogEntry) -> String {
    if entry.params.is_empty() {
        entry.name.clone()
    } else {
        let ps: Vec<String> = entry.params.iter().map(|(k, v)| format!("{k}={v}")).collect();
        format!("{}[{}]", entry.name, ps.join(","))
    }
}

fn check_entry(entry: &CatalogEntry, out: &mut Vec<CheckResult>) {
    let label = entry_label(entry);
    let model = &entry.model;
    match &entry.structure {
        Some(s) => {
            let geo = match analyze_structure(model, s) {
                Ok(g) => g,
                Err(e) => {
                    out.push(CheckResult::fail(format!("{label}: analyze"), e.to_string()));
                    return;
                }
            };
            out.push(CheckResult::residual(
                format!("{label}: exact identities (skew, torsion dual, family symmetry)"),
                geo.residuals.worst_exact(),
                tol::EXACT * 100.0,
            ));
            out.push(CheckResult::residual(
                format!("{label}: derived identities (metricity, curvature relation)"),
                geo.residuals.worst_derived(),
                tol::IDENTITY,
            ));
            let report = match classify_structured(&geo, model, tol::MEMBERSHIP_REL) {
                Ok(r) => r,
                Err(e) => {
                    out.push(CheckResult::fail(format!("{label}: classify"), e.to_string()));
                    return;
                }
            };
            if let (Some((_, want)), Some(rep)) = (&entry.expected_class, &report) {
                if &rep.membership == want {
                    out.push(CheckResult::ok(
                        format!("{label}: expected class"),
                        format!("membership {:?}", rep.membership),
                    ));
                } else {
                    out.push(CheckResult::fail(
                        format!("{label}: expected class"),
                        format!("wanted {:?}, got {:?}", want, rep.membership),
                    ));
                }
            }
            // a.c.m.s. extras: dual-route classification and the N-tensors.
            if let StructureTensor::AlmostContact { .. } = s {
                match acms_dual_route(model, &geo) {
                    Ok(residual) => out.push(CheckResult::residual(
                        format!("{label}: dual-route classification + reconstruction"),
                        residual,
                        tol::IDENTITY,
                    )),
                    Err(e) => out.push(CheckResult::fail(
                        format!("{label}: dual-route classification"),
                        e.to_string(),
                    )),
                }
                match analysis::n_tensors(&geo.dec, model, &geo.h) {
                    Ok(nt) => out.push(CheckResult::residual(
                        format!("{label}: N-tensor route agreement"),
                        nt.route_disagreement,
                        tol::IDENTITY,
                    )),
                    Err(e) => {
                        out.push(CheckResult::fail(format!("{label}: N-tensors"), e.to_string()))
                    }
                }
            }
        }
        None => {
            // Intrinsic-h entry (su2): check the naturally reductive suite.
            let h = entry.intrinsic_h.as_ref().expect("entry carries h");
            let nabla = lie::levi_civita(model);
            let gamma_bar = {
                let n = model.dim();
                let hdir = analysis::h_directions(h, model.frame());
                let mut g = nabla.coeffs().clone();
                for i in 0..n {
                    for j in 0..n {
                        for k in 0..n {
                            g[(i, j, k)] -= hdir[i][(k, j)];
                        }
                    }
                }
                Connection::from_tensor(g)
            };
            let res = analysis::curvature_relation_check(model, &nabla, &gamma_bar, h);
            out.push(CheckResult::residual(
                format!("{label}: curvature relation with user h"),
                res,
                tol::IDENTITY,
            ));
            let tax = classify::build_taxonomy(TaxonomyId::On3, model.dim()).expect("on3");
            let h_std = h.change_basis(model.frame().ortho_basis());
            match classify::classify(&h_std, &tax, tol::MEMBERSHIP_REL) {
                Ok(rep) => {
                    let want: BTreeSet<usize> =
                        entry.expected_class.as_ref().map(|(_, s)| s.clone()).unwrap_or_default();
                    if rep.membership == want {
                        out.push(CheckResult::ok(
                            format!("{label}: expected class"),
                            format!("membership {:?}", rep.membership),
                        ));
                    } else {
                        out.push(CheckResult::fail(
                            format!("{label}: expected class"),
                            format!("wanted {:?}, got {:?}", want, rep.membership),
                        ));
                    }
                }
                Err(e) => out.push(CheckResult::fail(format!("{label}: classify"), e.to_string())),
            }
        }
    }
}

/// The h-route vs nabla-Phi-route agreement for an a.c.m.s.; returns the
/// worst residual across the membership bijection and the reconstruction.
pub fn acms_dual_route(model: &FrameModel, geo: &StructuredGeometry) -> Result<f64> {
    let frame = model.frame();
    let npairs = geo.dec.pairs();
    let tax_h = classify::build_taxonomy(TaxonomyId::Acms12, npairs)?;
    let tax_phi = classify::build_taxonomy(TaxonomyId::AcmsPhi12, npairs)?;
    let h_std = classify::to_standard_coords(&geo.h, &geo.dec, frame);
    let rep_h = classify::classify(&h_std, &tax_h, tol::MEMBERSHIP_REL)?;
    let forms = analysis::acms_forms(&geo.dec, &geo.nabla, &geo.h, frame)?;
    let phi_std = classify::to_standard_coords(&forms.nabla_phi, &geo.dec, frame);
    let rep_phi = classify::classify_acms_via_nabla_phi(&phi_std, &tax_phi, tol::MEMBERSHIP_REL)?;
    if !classify::cross_check_isomorphism(&rep_h, &rep_phi) {
        return Err(crate::error::GeoError::InternalInconsistency(format!(
            "membership bijection mismatch: h {:?} vs phi {:?}",
            rep_h.membership, rep_phi.membership
        )));
    }
    Ok(forms.diagnostics.reconstruction)
}

/// Run every identity suite; returns one result per check.
pub fn run_selftest() -> Vec<CheckResult> {
    let mut out = Vec::new();
    // Taxonomy dimension tripwires.
    for (id, ns) in [
        (TaxonomyId::On3, vec![3usize, 4, 5]),
        (TaxonomyId::Gh4, vec![2, 3, 4]),
        (TaxonomyId::Acms12, vec![1, 2, 3]),
        (TaxonomyId::AcmsPhi12, vec![1, 2, 3]),
    ] {
        for n in ns {
            match classify::build_taxonomy(id, n) {
                Ok(tax) => {
                    let dims: Vec<usize> =
                        tax.components.iter().map(|c| c.basis.ncols()).collect();
                    out.push(CheckResult::ok(
                        format!("taxonomy {}(n={n}) construction", id.as_str()),
                        format!("dims {:?}", dims),
                    ));
                }
                Err(e) => out.push(CheckResult::fail(
                    format!("taxonomy {}(n={n}) construction", id.as_str()),
                    e.to_string(),
                )),
            }
        }
    }
    for (name, params) in catalog_variants() {
        match catalog_load(name, &params) {
            Ok(entry) => check_entry(&entry, &mut out),
            Err(e) => out.push(CheckResult::fail(format!("catalog {name}"), e.to_string())),
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog::CATALOG_NAMES;

    #[test]
    fn selftest_is_green() {
        let results = run_selftest();
        let failures: Vec<&CheckResult> = results.iter().filter(|r| !r.passed).collect();
        assert!(
            failures.is_empty(),
            "selftest failures: {:#?}",
            failures
                .iter()
                .map(|r| format!("{}: {}", r.name, r.detail))
                .collect::<Vec<_>>()
        );
    }

    #[test]
    fn catalog_names_all_covered() {
        let variants = catalog_variants();
        for name in CATALOG_NAMES {
            assert!(variants.iter().any(|(n, _)| *n == name), "{name} missing from selftest");
        }
    }
}

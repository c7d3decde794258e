//! Irreducible invariant subspaces of the three taxonomies, realized as
//! explicit orthonormal bases; projection-based classification; named
//! classes and the special-structure recognizers.
//!
//! Taxonomies are built once per (family, n) in a standard adapted
//! orthonormal basis: the complex structure is the block matrix
//! `J0 = [[0, -I], [I, 0]]` and, for almost contact structures, `xi` is
//! the last basis vector. Tensors coming from a concrete geometry are
//! pulled into this basis before classification.
//!
//! Every subspace is the numerical nullspace of its defining linear
//! conditions (or the orthonormalized span, for the one- and 2n-dimensional
//! trace components). Computed dimensions are checked against the
//! closed-form dimension tables; a mismatch is a hard construction error.

use std::collections::{BTreeMap, BTreeSet};

use nalgebra::{DMatrix, DVector};

use crate::analysis::{self, AcmsForms};
use crate::error::{GeoError, Result};
use crate::lie::{cov_endo_dir, Connection, FrameModel};
use crate::structures::{DecoratedStructure, StructureTensor};
use crate::tensor::{FrameMetric, Tensor3};
use crate::tol;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum TaxonomyId {
    /// O(n)-classification of metric-skew tensors: T1, T2, T3.
    On3,
    /// U(n)-classification of almost Hermitian h: T1..T4 (Gray-Hervella).
    Gh4,
    /// U(n)x1-classification of a.c.m.s. h: T1..T12.
    Acms12,
    /// The nabla-Phi route: C1..C12 (Chinea-Gonzalez coordinates).
    AcmsPhi12,
}

impl TaxonomyId {
    pub fn as_str(&self) -> &'static str {
        match self {
            TaxonomyId::On3 => "on3",
            TaxonomyId::Gh4 => "gh4",
            TaxonomyId::Acms12 => "acms12",
            TaxonomyId::AcmsPhi12 => "acms_phi12",
        }
    }

    /// Prefix used when printing component indices.
    pub fn index_prefix(&self) -> &'static str {
        match self {
            TaxonomyId::On3 => "T",
            TaxonomyId::Gh4 => "U",
            TaxonomyId::Acms12 => "T",
            TaxonomyId::AcmsPhi12 => "C",
        }
    }
}

#[derive(Debug, Clone)]
pub struct Subspace {
    pub index: usize,
    /// Orthonormal basis in ambient coordinates (d_ambient x dim).
    pub basis: DMatrix<f64>,
    pub expected_dim: usize,
}

#[derive(Debug, Clone)]
pub struct Taxonomy {
    pub id: TaxonomyId,
    /// The parameter n of the family (frame dim is n, 2n or 2n+1).
    pub n: usize,
    /// Total frame dimension N.
    pub dim_total: usize,
    /// Orthonormal basis of the ambient constrained space (N^3 x d).
    pub ambient: DMatrix<f64>,
    pub components: Vec<Subspace>,
}

/// Classification result for one tensor against one taxonomy.
#[derive(Debug, Clone)]
pub struct ClassReport {
    pub taxonomy: TaxonomyId,
    pub component_norms: BTreeMap<usize, f64>,
    pub membership: BTreeSet<usize>,
    pub strict: bool,
    pub named_labels: Vec<String>,
    pub ambient_residual: f64,
    pub h_norm: f64,
    pub tol_rel: f64,
}

// ---------------------------------------------------------------------
// linear-algebra helpers
// ---------------------------------------------------------------------

/// Orthonormal basis of the nullspace of `a` (columns), via the symmetric
/// eigendecomposition of a^T a.
fn nullspace(a: &DMatrix<f64>) -> DMatrix<f64> {
    let cols = a.ncols();
    let ata = a.transpose() * a;
    let eig = ata.symmetric_eigen();
    let max_l = eig.eigenvalues.amax().max(1.0);
    let cut = 1e-14 * max_l;
    let mut keep = Vec::new();
    for j in 0..cols {
        if eig.eigenvalues[j] <= cut {
            keep.push(j);
        }
    }
    let mut out = DMatrix::zeros(cols, keep.len());
    for (c, &j) in keep.iter().enumerate() {
        out.set_column(c, &eig.eigenvectors.column(j));
    }
    out
}

/// Modified Gram-Schmidt, dropping dependent columns.
fn orthonormalize(cols: &[DVector<f64>]) -> DMatrix<f64> {
    let dim = cols.first().map(|c| c.len()).unwrap_or(0);
    let mut kept: Vec<DVector<f64>> = Vec::new();
    for c in cols {
        let mut w = c.clone();
        for k in &kept {
            let coef = k.dot(&w);
            w -= k * coef;
        }
        // second pass for numerical hygiene
        for k in &kept {
            let coef = k.dot(&w);
            w -= k * coef;
        }
        let nrm = w.norm();
        if nrm > 1e-10 {
            kept.push(w / nrm);
        }
    }
    let mut out = DMatrix::zeros(dim, kept.len());
    for (j, k) in kept.iter().enumerate() {
        out.set_column(j, k);
    }
    out
}

fn vec_index(n: usize, i: usize, j: usize, k: usize) -> usize {
    (i * n + j) * n + k
}

/// Sparse accumulator for constraint rows over the full N^3 space.
struct RowBuilder {
    n: usize,
    rows: Vec<Vec<(usize, f64)>>,
}

impl RowBuilder {
    fn new(n: usize) -> Self {
        Self { n, rows: Vec::new() }
    }

    fn row(&mut self, entries: Vec<(usize, f64)>) {
        self.rows.push(entries);
    }

    fn entry(&self, i: usize, j: usize, k: usize, w: f64) -> (usize, f64) {
        (vec_index(self.n, i, j, k), w)
    }

    /// Rows times an ambient basis: (num_rows x d_ambient), dense.
    fn against(&self, ambient: &DMatrix<f64>) -> DMatrix<f64> {
        let d = ambient.ncols();
        let mut m = DMatrix::zeros(self.rows.len(), d);
        for (r, row) in self.rows.iter().enumerate() {
            for &(idx, w) in row {
                for c in 0..d {
                    m[(r, c)] += w * ambient[(idx, c)];
                }
            }
        }
        m
    }
}

// ---------------------------------------------------------------------
// standard structures in adapted coordinates
// ---------------------------------------------------------------------

/// `J0` on R^{2n} in the adapted ordering `E_1..E_n, F E_1..F E_n`.
pub fn standard_j(n: usize) -> DMatrix<f64> {
    let mut j = DMatrix::zeros(2 * n, 2 * n);
    for i in 0..n {
        j[(n + i, i)] = 1.0;
        j[(i, n + i)] = -1.0;
    }
    j
}

/// The standard a.c.m.s. F on R^{2n+1}: `J0` on V, zero on `xi = e_{2n}`.
pub fn standard_f_acms(n: usize) -> DMatrix<f64> {
    let mut f = DMatrix::zeros(2 * n + 1, 2 * n + 1);
    for i in 0..n {
        f[(n + i, i)] = 1.0;
        f[(i, n + i)] = -1.0;
    }
    f
}

/// Orthonormal basis of the metric-skew space `{h : h_{ijk} = -h_{ikj}}`.
fn skew_basis(nn: usize) -> DMatrix<f64> {
    let mut cols = Vec::new();
    let inv = 1.0 / 2.0f64.sqrt();
    for i in 0..nn {
        for j in 0..nn {
            for k in (j + 1)..nn {
                let mut v = DVector::zeros(nn * nn * nn);
                v[vec_index(nn, i, j, k)] = inv;
                v[vec_index(nn, i, k, j)] = -inv;
                cols.push(v);
            }
        }
    }
    let dim = nn * nn * nn;
    let mut m = DMatrix::zeros(dim, cols.len());
    for (j, c) in cols.iter().enumerate() {
        m.set_column(j, c);
    }
    m
}

/// Ambient basis for a family with an F-symmetry
/// `h_{XYZ} = -h_{X, FY, FZ}` imposed on slots 2,3 restricted to `V`
/// (`v_dim` = dim V; for GH this is all of the space).
fn ambient_with_f(nn: usize, f: &DMatrix<f64>, v_dim: usize) -> DMatrix<f64> {
    let skew = skew_basis(nn);
    let mut rb = RowBuilder::new(nn);
    for i in 0..nn {
        for j in 0..v_dim {
            for k in 0..v_dim {
                // h_{ijk} + h(e_i, F e_j, F e_k) = 0
                let mut entries = vec![rb.entry(i, j, k, 1.0)];
                for b in 0..nn {
                    let fb = f[(b, j)];
                    if fb == 0.0 {
                        continue;
                    }
                    for c in 0..nn {
                        let fc = f[(c, k)];
                        if fc != 0.0 {
                            entries.push(rb.entry(i, b, c, fb * fc));
                        }
                    }
                }
                rb.row(entries);
            }
        }
    }
    let m = rb.against(&skew);
    let ns = nullspace(&m);
    &skew * ns
}

// ---------------------------------------------------------------------
// taxonomy construction
// ---------------------------------------------------------------------

fn component_from_rows(
    ambient: &DMatrix<f64>,
    rb: &RowBuilder,
    index: usize,
    name: &str,
    expected_dim: usize,
) -> Result<Subspace> {
    let m = rb.against(ambient);
    let basis = nullspace(&m);
    if basis.ncols() != expected_dim {
        return Err(GeoError::TaxonomyConstruction {
            component: name.to_string(),
            got: basis.ncols(),
            expected: expected_dim,
        });
    }
    Ok(Subspace { index, basis, expected_dim })
}

fn component_from_span(
    ambient: &DMatrix<f64>,
    generators: &[DVector<f64>],
    index: usize,
    name: &str,
    expected_dim: usize,
) -> Result<Subspace> {
    // Coordinates within the ambient space; the lift must be exact.
    let mut coords = Vec::new();
    for g in generators {
        let c = ambient.transpose() * g;
        let lift = ambient * &c;
        if (g - lift).amax() > 1e-9 * g.amax().max(1.0) {
            return Err(GeoError::TaxonomyConstruction {
                component: format!("{name} (generator outside ambient space)"),
                got: 0,
                expected: expected_dim,
            });
        }
        coords.push(c);
    }
    let basis = orthonormalize(&coords);
    if basis.ncols() != expected_dim {
        return Err(GeoError::TaxonomyConstruction {
            component: name.to_string(),
            got: basis.ncols(),
            expected: expected_dim,
        });
    }
    Ok(Subspace { index, basis, expected_dim })
}

fn finish_taxonomy(
    id: TaxonomyId,
    n: usize,
    dim_total: usize,
    ambient: DMatrix<f64>,
    components: Vec<Subspace>,
) -> Result<Taxonomy> {
    let d = ambient.ncols();
    let total: usize = components.iter().map(|c| c.basis.ncols()).sum();
    if total != d {
        return Err(GeoError::TaxonomyConstruction {
            component: format!("{} (direct sum completeness)", id.as_str()),
            got: total,
            expected: d,
        });
    }
    // Pairwise orthogonality of the component bases.
    for a in 0..components.len() {
        for b in (a + 1)..components.len() {
            if components[a].basis.ncols() == 0 || components[b].basis.ncols() == 0 {
                continue;
            }
            let cross = (components[a].basis.transpose() * &components[b].basis).amax();
            if cross > tol::IDENTITY {
                return Err(GeoError::TaxonomyConstruction {
                    component: format!(
                        "{} components {} and {} not orthogonal ({cross:.3e})",
                        id.as_str(),
                        components[a].index,
                        components[b].index
                    ),
                    got: 0,
                    expected: 0,
                });
            }
        }
    }
    Ok(Taxonomy { id, n, dim_total, ambient, components })
}

/// Build one of the four taxonomies at parameter `n`.
pub fn build_taxonomy(id: TaxonomyId, n: usize) -> Result<Taxonomy> {
    match id {
        TaxonomyId::On3 => build_on3(n),
        TaxonomyId::Gh4 => build_gh4(n),
        TaxonomyId::Acms12 => build_acms12(n),
        TaxonomyId::AcmsPhi12 => build_acms_phi(n),
    }
}

fn build_on3(n: usize) -> Result<Taxonomy> {
    if n < 3 {
        return Err(GeoError::InvalidParams(
            "the O(n) taxonomy needs n >= 3".into(),
        ));
    }
    let ambient = skew_basis(n);
    let nn3 = n * n * n;
    // T1: span of h_{ijk} = <e_i,e_j> beta_k - <e_i,e_k> beta_j.
    let mut gens = Vec::new();
    for l in 0..n {
        let mut v = DVector::zeros(nn3);
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    let mut w = 0.0;
                    if i == j && k == l {
                        w += 1.0;
                    }
                    if i == k && j == l {
                        w -= 1.0;
                    }
                    if w != 0.0 {
                        v[vec_index(n, i, j, k)] = w;
                    }
                }
            }
        }
        gens.push(v);
    }
    let t1 = component_from_span(&ambient, &gens, 1, "on3 T1", n)?;
    // T2: cyclic sum zero and c12 = 0.
    let mut rb = RowBuilder::new(n);
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                rb.row(vec![
                    rb.entry(i, j, k, 1.0),
                    rb.entry(j, k, i, 1.0),
                    rb.entry(k, i, j, 1.0),
                ]);
            }
        }
    }
    for k in 0..n {
        let mut entries = Vec::new();
        for i in 0..n {
            entries.push(rb.entry(i, i, k, 1.0));
        }
        rb.row(entries);
    }
    let dim_t3 = n * (n - 1) * (n - 2) / 6;
    let dim_amb = n * n * (n - 1) / 2;
    let t2 = component_from_rows(&ambient, &rb, 2, "on3 T2", dim_amb - n - dim_t3)?;
    // T3: totally antisymmetric.
    let mut rb = RowBuilder::new(n);
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                rb.row(vec![rb.entry(i, j, k, 1.0), rb.entry(j, i, k, 1.0)]);
            }
        }
    }
    let t3 = component_from_rows(&ambient, &rb, 3, "on3 T3", dim_t3)?;
    finish_taxonomy(TaxonomyId::On3, n, n, ambient, vec![t1, t2, t3])
}

/// Shared GH-style component constraints on a 2n-dimensional J-block.
/// `offsets` maps block indices into the full space; `xi` is an optional
/// extra index whose slots must vanish.
fn build_gh4(n: usize) -> Result<Taxonomy> {
    if n < 2 {
        return Err(GeoError::InvalidParams(
            "the Gray-Hervella taxonomy needs n >= 2 (dim >= 4)".into(),
        ));
    }
    let nn = 2 * n;
    let j0 = standard_j(n);
    let ambient = ambient_with_f(nn, &j0, nn);
    let dims = gh_dims(n);
    let comps = gh_components(&ambient, nn, &j0, None, &dims, &[1, 2, 3, 4])?;
    finish_taxonomy(TaxonomyId::Gh4, n, nn, ambient, comps)
}

fn gh_dims(n: usize) -> [usize; 4] {
    let nf = n;
    [
        nf * (nf.saturating_sub(1)) * (nf.saturating_sub(2)) / 3,
        2 * nf * (nf - 1) * (nf + 1) / 3,
        nf * (nf + 1) * (nf.saturating_sub(2)),
        2 * nf,
    ]
}

/// Builds the four GH components on the V-block of a space of total
/// dimension `nn_total`. `f` is the complex structure on V (zero on xi
/// when present); `xi` the index of the Reeb direction, whose slots are
/// constrained to vanish for these components.
fn gh_components(
    ambient: &DMatrix<f64>,
    nn_total: usize,
    f: &DMatrix<f64>,
    xi: Option<usize>,
    dims: &[usize; 4],
    indices: &[usize; 4],
) -> Result<Vec<Subspace>> {
    let v_dim = match xi {
        Some(_) => nn_total - 1,
        None => nn_total,
    };
    let zero_xi_rows = |rb: &mut RowBuilder| {
        if let Some(x) = xi {
            for a in 0..nn_total {
                for b in 0..nn_total {
                    for c in 0..nn_total {
                        if a == x || b == x || c == x {
                            rb.row(vec![rb.entry(a, b, c, 1.0)]);
                        }
                    }
                }
            }
        }
    };
    // T1: antisymmetric in the first two slots.
    let mut rb = RowBuilder::new(nn_total);
    zero_xi_rows(&mut rb);
    for i in 0..v_dim {
        for j in 0..v_dim {
            for k in 0..v_dim {
                rb.row(vec![rb.entry(i, j, k, 1.0), rb.entry(j, i, k, 1.0)]);
            }
        }
    }
    let t1 = component_from_rows(ambient, &rb, indices[0], "gh T1", dims[0])?;
    // T2: cyclic sum of h_{XY(FZ)} vanishes (the dPhi = 0 condition).
    let mut rb = RowBuilder::new(nn_total);
    zero_xi_rows(&mut rb);
    for i in 0..v_dim {
        for j in 0..v_dim {
            for k in 0..v_dim {
                let mut entries = Vec::new();
                for (x, y, z) in [(i, j, k), (j, k, i), (k, i, j)] {
                    for c in 0..nn_total {
                        let w = f[(c, z)];
                        if w != 0.0 {
                            entries.push(rb.entry(x, y, c, w));
                        }
                    }
                }
                rb.row(entries);
            }
        }
    }
    let t2 = component_from_rows(ambient, &rb, indices[1], "gh T2", dims[1])?;
    // T3: h_{XYZ} = h_{FX FY Z} and beta = 0.
    let mut rb = RowBuilder::new(nn_total);
    zero_xi_rows(&mut rb);
    for i in 0..v_dim {
        for j in 0..v_dim {
            for k in 0..v_dim {
                let mut entries = vec![rb.entry(i, j, k, 1.0)];
                for b in 0..nn_total {
                    let fb = f[(b, i)];
                    if fb == 0.0 {
                        continue;
                    }
                    for c in 0..nn_total {
                        let fc = f[(c, j)];
                        if fc != 0.0 {
                            entries.push(rb.entry(b, c, k, -fb * fc));
                        }
                    }
                }
                rb.row(entries);
            }
        }
    }
    for k in 0..v_dim {
        let mut entries = Vec::new();
        for a in 0..v_dim {
            entries.push(rb.entry(a, a, k, 1.0));
        }
        rb.row(entries);
    }
    let t3 = component_from_rows(ambient, &rb, indices[2], "gh T3", dims[2])?;
    // T4: the span of the conformal-type forms.
    let nn3 = nn_total * nn_total * nn_total;
    let mut gens = Vec::new();
    for l in 0..v_dim {
        let mut v = DVector::zeros(nn3);
        for i in 0..v_dim {
            for j in 0..v_dim {
                for k in 0..v_dim {
                    let d = |a: usize, b: usize| if a == b { 1.0 } else { 0.0 };
                    // <e_i, F e_j> = f[(i,j)] with the identity gram.
                    let mut w = d(i, j) * d(k, l) - d(i, k) * d(j, l);
                    w -= f[(i, j)] * f[(l, k)];
                    w += f[(i, k)] * f[(l, j)];
                    if w != 0.0 {
                        v[vec_index(nn_total, i, j, k)] = w;
                    }
                }
            }
        }
        gens.push(v);
    }
    let t4 = component_from_span(ambient, &gens, indices[3], "gh T4", dims[3])?;
    Ok(vec![t1, t2, t3, t4])
}

fn acms_dims(n: usize) -> [usize; 12] {
    [
        n * n.saturating_sub(1) * n.saturating_sub(2) / 3,
        2 * n * (n - 1) * (n + 1) / 3,
        n * (n + 1) * n.saturating_sub(2),
        if n >= 2 { 2 * n } else { 0 },
        n * n - 1,
        n * n - n,
        1,
        n * n - 1,
        n * n + n,
        1,
        2 * n,
        n * n - n,
    ]
}

fn build_acms12(n: usize) -> Result<Taxonomy> {
    if n < 1 {
        return Err(GeoError::InvalidParams("the a.c.m.s. taxonomy needs n >= 1".into()));
    }
    let nn = 2 * n + 1;
    let xi = 2 * n;
    let f = standard_f_acms(n);
    let ambient = ambient_with_f(nn, &f, 2 * n);
    let dims = acms_dims(n);
    // T1..T4 on the V^3 block.
    let gh = if n >= 2 {
        gh_components(
            &ambient,
            nn,
            &f,
            Some(xi),
            &[dims[0], dims[1], dims[2], dims[3]],
            &[1, 2, 3, 4],
        )?
    } else {
        // n = 1: all four V^3 components are zero-dimensional.
        (1..=4)
            .map(|index| Subspace {
                index,
                basis: DMatrix::zeros(ambient.ncols(), 0),
                expected_dim: 0,
            })
            .collect()
    };
    let mut comps = gh;
    // Helper closures for the V x V x xi block components T5..T10.
    let v_dim = 2 * n;
    // Zero out everything except the V x V x xi block (and its skew
    // companion V x xi x V, which the ambient ties to it).
    let zero_except_vvxi = |rb: &mut RowBuilder| {
        for a in 0..nn {
            for b in 0..nn {
                for c in 0..nn {
                    let in_vvv = a < v_dim && b < v_dim && c < v_dim;
                    if a == xi || in_vvv {
                        rb.row(vec![rb.entry(a, b, c, 1.0)]);
                    }
                }
            }
        }
    };
    let omega = |rb: &RowBuilder, a: usize, b: usize, w: f64| rb.entry(a, b, xi, w);
    // T5: omega antisymmetric, FF-invariant, skew-trace free.
    let mut rb = RowBuilder::new(nn);
    zero_except_vvxi(&mut rb);
    for a in 0..v_dim {
        for b in 0..v_dim {
            rb.row(vec![omega(&rb, a, b, 1.0), omega(&rb, b, a, 1.0)]);
            let mut entries = vec![omega(&rb, a, b, -1.0)];
            for p in 0..v_dim {
                let fp = f[(p, a)];
                if fp == 0.0 {
                    continue;
                }
                for q in 0..v_dim {
                    let fq = f[(q, b)];
                    if fq != 0.0 {
                        entries.push(omega(&rb, p, q, fp * fq));
                    }
                }
            }
            rb.row(entries);
        }
    }
    {
        let mut entries = Vec::new();
        for i in 0..n {
            entries.push(omega(&rb, i, n + i, 1.0));
            entries.push(omega(&rb, n + i, i, -1.0));
        }
        rb.row(entries);
    }
    comps.push(component_from_rows(&ambient, &rb, 5, "acms T5", dims[4])?);
    // T6: omega antisymmetric, FF-anti-invariant.
    let mut rb = RowBuilder::new(nn);
    zero_except_vvxi(&mut rb);
    for a in 0..v_dim {
        for b in 0..v_dim {
            rb.row(vec![omega(&rb, a, b, 1.0), omega(&rb, b, a, 1.0)]);
            let mut entries = vec![omega(&rb, a, b, 1.0)];
            for p in 0..v_dim {
                let fp = f[(p, a)];
                if fp == 0.0 {
                    continue;
                }
                for q in 0..v_dim {
                    let fq = f[(q, b)];
                    if fq != 0.0 {
                        entries.push(omega(&rb, p, q, fp * fq));
                    }
                }
            }
            rb.row(entries);
        }
    }
    comps.push(component_from_rows(&ambient, &rb, 6, "acms T6", dims[5])?);
    // T7: span of omega = <X, F Y>.
    let nn3 = nn * nn * nn;
    {
        let mut v = DVector::zeros(nn3);
        for a in 0..v_dim {
            for b in 0..v_dim {
                let w = f[(a, b)];
                if w != 0.0 {
                    v[vec_index(nn, a, b, xi)] = w;
                    v[vec_index(nn, a, xi, b)] = -w;
                }
            }
        }
        comps.push(component_from_span(&ambient, &[v], 7, "acms T7", dims[6])?);
    }
    // T8: omega symmetric, FF-invariant, trace free.
    let mut rb = RowBuilder::new(nn);
    zero_except_vvxi(&mut rb);
    for a in 0..v_dim {
        for b in 0..v_dim {
            rb.row(vec![omega(&rb, a, b, 1.0), omega(&rb, b, a, -1.0)]);
            let mut entries = vec![omega(&rb, a, b, -1.0)];
            for p in 0..v_dim {
                let fp = f[(p, a)];
                if fp == 0.0 {
                    continue;
                }
                for q in 0..v_dim {
                    let fq = f[(q, b)];
                    if fq != 0.0 {
                        entries.push(omega(&rb, p, q, fp * fq));
                    }
                }
            }
            rb.row(entries);
        }
    }
    {
        let mut entries = Vec::new();
        for a in 0..v_dim {
            entries.push(omega(&rb, a, a, 1.0));
        }
        rb.row(entries);
    }
    comps.push(component_from_rows(&ambient, &rb, 8, "acms T8", dims[7])?);
    // T9: omega symmetric, FF-anti-invariant.
    let mut rb = RowBuilder::new(nn);
    zero_except_vvxi(&mut rb);
    for a in 0..v_dim {
        for b in 0..v_dim {
            rb.row(vec![omega(&rb, a, b, 1.0), omega(&rb, b, a, -1.0)]);
            let mut entries = vec![omega(&rb, a, b, 1.0)];
            for p in 0..v_dim {
                let fp = f[(p, a)];
                if fp == 0.0 {
                    continue;
                }
                for q in 0..v_dim {
                    let fq = f[(q, b)];
                    if fq != 0.0 {
                        entries.push(omega(&rb, p, q, fp * fq));
                    }
                }
            }
            rb.row(entries);
        }
    }
    comps.push(component_from_rows(&ambient, &rb, 9, "acms T9", dims[8])?);
    // T10: span of omega = <X, Y>.
    {
        let mut v = DVector::zeros(nn3);
        for a in 0..v_dim {
            v[vec_index(nn, a, a, xi)] = 1.0;
            v[vec_index(nn, a, xi, a)] = -1.0;
        }
        comps.push(component_from_span(&ambient, &[v], 10, "acms T10", dims[9])?);
    }
    // T11: span of h_{xi a xi} components.
    {
        let mut gens = Vec::new();
        for a in 0..v_dim {
            let mut v = DVector::zeros(nn3);
            v[vec_index(nn, xi, a, xi)] = 1.0;
            v[vec_index(nn, xi, xi, a)] = -1.0;
            gens.push(v);
        }
        comps.push(component_from_span(&ambient, &gens, 11, "acms T11", dims[10])?);
    }
    // T12: the xi-V-V block (ambient already forces its V2-type symmetry).
    let mut rb = RowBuilder::new(nn);
    for a in 0..v_dim {
        for b in 0..nn {
            for c in 0..nn {
                rb.row(vec![rb.entry(a, b, c, 1.0)]);
            }
        }
    }
    for b in 0..nn {
        rb.row(vec![rb.entry(xi, b, xi, 1.0)]);
        rb.row(vec![rb.entry(xi, xi, b, 1.0)]);
    }
    comps.push(component_from_rows(&ambient, &rb, 12, "acms T12", dims[11])?);
    finish_taxonomy(TaxonomyId::Acms12, n, nn, ambient, comps)
}

fn acms_phi_dims(n: usize) -> [usize; 12] {
    [
        n * n.saturating_sub(1) * n.saturating_sub(2) / 3,
        2 * n * (n - 1) * (n + 1) / 3,
        n * (n + 1) * n.saturating_sub(2),
        if n >= 2 { 2 * n } else { 0 },
        1,
        1,
        n * n - 1,
        n * n - 1,
        n * (n + 1),
        n * (n - 1),
        n * (n - 1),
        2 * n,
    ]
}

fn build_acms_phi(n: usize) -> Result<Taxonomy> {
    if n < 1 {
        return Err(GeoError::InvalidParams("the nabla-Phi taxonomy needs n >= 1".into()));
    }
    let nn = 2 * n + 1;
    let xi = 2 * n;
    let v_dim = 2 * n;
    let f = standard_f_acms(n);
    // C(T) has the same ambient symmetries as the h-space.
    let ambient = ambient_with_f(nn, &f, v_dim);
    let dims = acms_phi_dims(n);
    let nn3 = nn * nn * nn;
    let eta = |a: usize| if a == xi { 1.0 } else { 0.0 };
    // (nabla_U eta)(W) = alpha(U, xi, F W): entries of that linear functional.
    let grad_eta = |rb: &RowBuilder, u: usize, w: usize, weight: f64| -> Vec<(usize, f64)> {
        let mut entries = Vec::new();
        for c in 0..nn {
            let fc = f[(c, w)];
            if fc != 0.0 {
                entries.push(rb.entry(u, xi, c, weight * fc));
            }
        }
        entries
    };
    let mut comps: Vec<Subspace> = Vec::new();
    // C1: alpha(X, X, Y) = 0 and nabla eta = 0.
    let mut rb = RowBuilder::new(nn);
    for a in 0..nn {
        for b in 0..nn {
            for c in 0..nn {
                rb.row(vec![rb.entry(a, b, c, 1.0), rb.entry(b, a, c, 1.0)]);
            }
        }
    }
    for a in 0..nn {
        for b in 0..v_dim {
            rb.row(vec![rb.entry(a, xi, b, 1.0)]);
        }
    }
    comps.push(component_from_rows(&ambient, &rb, 1, "phi C1", dims[0])?);
    // C2: dPhi = 0 and nabla eta = 0.
    let mut rb = RowBuilder::new(nn);
    for a in 0..nn {
        for b in 0..nn {
            for c in 0..nn {
                rb.row(vec![
                    rb.entry(a, b, c, 1.0),
                    rb.entry(b, c, a, 1.0),
                    rb.entry(c, a, b, 1.0),
                ]);
            }
        }
    }
    for a in 0..nn {
        for b in 0..v_dim {
            rb.row(vec![rb.entry(a, xi, b, 1.0)]);
        }
    }
    comps.push(component_from_rows(&ambient, &rb, 2, "phi C2", dims[1])?);
    // C3: alpha(X,Y,Z) = alpha(FX, FY, Z), delta Phi = 0.
    let mut rb = RowBuilder::new(nn);
    for a in 0..nn {
        for b in 0..nn {
            for c in 0..nn {
                let mut entries = vec![rb.entry(a, b, c, 1.0)];
                for p in 0..nn {
                    let fp = f[(p, a)];
                    if fp == 0.0 {
                        continue;
                    }
                    for q in 0..nn {
                        let fq = f[(q, b)];
                        if fq != 0.0 {
                            entries.push(rb.entry(p, q, c, -fp * fq));
                        }
                    }
                }
                rb.row(entries);
            }
        }
    }
    for c in 0..nn {
        let mut entries = Vec::new();
        for a in 0..nn {
            entries.push(rb.entry(a, a, c, 1.0));
        }
        rb.row(entries);
    }
    comps.push(component_from_rows(&ambient, &rb, 3, "phi C3", dims[2])?);
    // C4: span of the conformal forms with delta Phi supported on V.
    {
        let mut gens = Vec::new();
        for l in 0..v_dim {
            let mut v = DVector::zeros(nn3);
            let delta = |a: usize| if a == l { 1.0 } else { 0.0 };
            let delta_f = |a: usize| f[(l, a)];
            for a in 0..nn {
                for b in 0..nn {
                    for c in 0..nn {
                        // <FX, FY> = delta_ab on V (0 when either is xi).
                        let pv = |x: usize, y: usize| {
                            if x == y && x < v_dim {
                                1.0
                            } else {
                                0.0
                            }
                        };
                        let w = -(pv(a, b) * delta(c) - pv(a, c) * delta(b)
                            - f[(a, b)] * delta_f(c)
                            + f[(a, c)] * delta_f(b));
                        if w != 0.0 {
                            v[vec_index(nn, a, b, c)] = w;
                        }
                    }
                }
            }
            gens.push(v);
        }
        comps.push(component_from_span(&ambient, &gens, 4, "phi C4", dims[3])?);
    }
    // C5: Phi(X,Z) eta(Y) - Phi(X,Y) eta(Z), with Phi(X,Y) = <X, FY>.
    {
        let mut v = DVector::zeros(nn3);
        for a in 0..nn {
            for b in 0..nn {
                for c in 0..nn {
                    let w = f[(a, c)] * eta(b) - f[(a, b)] * eta(c);
                    if w != 0.0 {
                        v[vec_index(nn, a, b, c)] = w;
                    }
                }
            }
        }
        comps.push(component_from_span(&ambient, &[v], 5, "phi C5", dims[4])?);
    }
    // C6: <X,Z> eta(Y) - <X,Y> eta(Z).
    {
        let mut v = DVector::zeros(nn3);
        for a in 0..nn {
            for b in 0..nn {
                for c in 0..nn {
                    let d = |x: usize, y: usize| if x == y { 1.0 } else { 0.0 };
                    let w = d(a, c) * eta(b) - d(a, b) * eta(c);
                    if w != 0.0 {
                        v[vec_index(nn, a, b, c)] = w;
                    }
                }
            }
        }
        comps.push(component_from_span(&ambient, &[v], 6, "phi C6", dims[5])?);
    }
    // C7 .. C10: alpha(X,Y,Z) = s1 eta(Z)(nabla_Y eta)(FX) + s2 eta(Y)(nabla_{FX} eta)(Z).
    let build_c7_family = |s1: f64, s2: f64, extra: &str, index: usize, dim: usize| -> Result<Subspace> {
        let mut rb = RowBuilder::new(nn);
        for a in 0..nn {
            for b in 0..nn {
                for c in 0..nn {
                    let mut entries = vec![rb.entry(a, b, c, 1.0)];
                    // eta(Z) (nabla_Y eta)(F X): F X expands over the basis.
                    if c == xi {
                        for p in 0..nn {
                            let fp = f[(p, a)];
                            if fp != 0.0 {
                                for e in grad_eta(&rb, b, p, -s1 * fp) {
                                    entries.push(e);
                                }
                            }
                        }
                    }
                    if b == xi {
                        for p in 0..nn {
                            let fp = f[(p, a)];
                            if fp != 0.0 {
                                for e in grad_eta(&rb, p, c, -s2) {
                                    let mut e2 = e;
                                    e2.1 *= fp;
                                    entries.push(e2);
                                }
                            }
                        }
                    }
                    rb.row(entries);
                }
            }
        }
        match extra {
            "delta_phi" => {
                for c in 0..nn {
                    let mut entries = Vec::new();
                    for a in 0..nn {
                        entries.push(rb.entry(a, a, c, 1.0));
                    }
                    rb.row(entries);
                }
            }
            "delta_eta" => {
                let mut entries = Vec::new();
                for b in 0..v_dim {
                    for e in grad_eta(&rb, b, b, 1.0) {
                        entries.push(e);
                    }
                }
                rb.row(entries);
            }
            _ => {}
        }
        component_from_rows(&ambient, &rb, index, &format!("phi C{index}"), dim)
    };
    comps.push(build_c7_family(1.0, 1.0, "delta_phi", 7, dims[6])?);
    comps.push(build_c7_family(-1.0, 1.0, "delta_eta", 8, dims[7])?);
    comps.push(build_c7_family(1.0, -1.0, "", 9, dims[8])?);
    comps.push(build_c7_family(-1.0, -1.0, "", 10, dims[9])?);
    // C11: alpha(X,Y,Z) = -eta(X) alpha(xi, FY, FZ).
    let mut rb = RowBuilder::new(nn);
    for a in 0..nn {
        for b in 0..nn {
            for c in 0..nn {
                let mut entries = vec![rb.entry(a, b, c, 1.0)];
                if a == xi {
                    for p in 0..nn {
                        let fp = f[(p, b)];
                        if fp == 0.0 {
                            continue;
                        }
                        for q in 0..nn {
                            let fq = f[(q, c)];
                            if fq != 0.0 {
                                entries.push(rb.entry(xi, p, q, fp * fq));
                            }
                        }
                    }
                }
                rb.row(entries);
            }
        }
    }
    comps.push(component_from_rows(&ambient, &rb, 11, "phi C11", dims[10])?);
    // C12: alpha(X,Y,Z) = eta(X)eta(Z)(nabla_xi eta)(FY) - eta(X)eta(Y)(nabla_xi eta)(FZ).
    let mut rb = RowBuilder::new(nn);
    for a in 0..nn {
        for b in 0..nn {
            for c in 0..nn {
                let mut entries = vec![rb.entry(a, b, c, 1.0)];
                if a == xi {
                    if c == xi {
                        for p in 0..nn {
                            let fp = f[(p, b)];
                            if fp != 0.0 {
                                for e in grad_eta(&rb, xi, p, -fp) {
                                    entries.push(e);
                                }
                            }
                        }
                    }
                    if b == xi {
                        for p in 0..nn {
                            let fp = f[(p, c)];
                            if fp != 0.0 {
                                for e in grad_eta(&rb, xi, p, fp) {
                                    entries.push(e);
                                }
                            }
                        }
                    }
                }
                rb.row(entries);
            }
        }
    }
    comps.push(component_from_rows(&ambient, &rb, 12, "phi C12", dims[11])?);
    finish_taxonomy(TaxonomyId::AcmsPhi12, n, nn, ambient, comps)
}

// ---------------------------------------------------------------------
// classification
// ---------------------------------------------------------------------

/// Project a tensor (given in the taxonomy's standard adapted basis) onto
/// the components and assemble the report.
pub fn classify(h: &Tensor3, tax: &Taxonomy, tol_rel: f64) -> Result<ClassReport> {
    let nn = tax.dim_total;
    if h.dim() != nn {
        return Err(GeoError::InputShape(format!(
            "tensor dim {} does not match taxonomy dim {nn}",
            h.dim()
        )));
    }
    let v = DVector::from_column_slice(h.data());
    let coords = tax.ambient.transpose() * &v;
    let lift = &tax.ambient * &coords;
    let h_norm = v.norm();
    let ambient_residual = (&v - lift).norm();
    if ambient_residual > 1e-8 * h_norm.max(1e-6) {
        return Err(GeoError::AmbientViolation { residual: ambient_residual });
    }
    let mut component_norms = BTreeMap::new();
    let mut sum_sq = 0.0;
    for c in &tax.components {
        let p = c.basis.transpose() * &coords;
        let nrm = p.norm();
        sum_sq += nrm * nrm;
        component_norms.insert(c.index, nrm);
    }
    let pyth = (sum_sq - coords.norm_squared()).abs();
    if pyth > 1e-8 * coords.norm_squared().max(1e-12) {
        return Err(GeoError::InternalInconsistency(format!(
            "component norms fail Pythagoras by {pyth:.3e}"
        )));
    }
    let membership: BTreeSet<usize> = if h_norm <= tol::ZERO_NORM {
        BTreeSet::new()
    } else {
        component_norms
            .iter()
            .filter(|(_, &nrm)| nrm > tol_rel * h_norm)
            .map(|(&i, _)| i)
            .collect()
    };
    // Strictness: min eigenvalue of r1 in the standard frame.
    let frame = FrameMetric::euclidean(nn);
    let inv = analysis::ricci_like_invariants(h, &frame);
    let strict = {
        let eig = inv.r1.symmetric_eigen();
        eig.eigenvalues.min() > tol::EIGEN_REL
    };
    let named_labels = named_classes_for(tax.id, &membership);
    Ok(ClassReport {
        taxonomy: tax.id,
        component_norms,
        membership,
        strict,
        named_labels,
        ambient_residual,
        h_norm,
        tol_rel,
    })
}

/// Classify the `nabla Phi` tensor of an a.c.m.s. (already pulled into
/// the standard adapted basis) against the C1..C12 taxonomy.
pub fn classify_acms_via_nabla_phi(
    nabla_phi: &Tensor3,
    tax_phi: &Taxonomy,
    tol_rel: f64,
) -> Result<ClassReport> {
    if tax_phi.id != TaxonomyId::AcmsPhi12 {
        return Err(GeoError::InputShape("expected the nabla-Phi taxonomy".into()));
    }
    classify(nabla_phi, tax_phi, tol_rel)
}

/// The fixed bijection between the C-classes and the h-classes.
pub fn c_to_h_index(c: usize) -> usize {
    match c {
        1 => 1,
        2 => 2,
        3 => 3,
        4 => 4,
        5 => 10,
        6 => 7,
        7 => 5,
        8 => 8,
        9 => 9,
        10 => 6,
        11 => 12,
        12 => 11,
        _ => panic!("C-index out of range"),
    }
}

/// True iff the two memberships correspond under the fixed bijection.
pub fn cross_check_isomorphism(report_h: &ClassReport, report_phi: &ClassReport) -> bool {
    let mapped: BTreeSet<usize> = report_phi.membership.iter().map(|&c| c_to_h_index(c)).collect();
    mapped == report_h.membership
}

// ---------------------------------------------------------------------
// named classes
// ---------------------------------------------------------------------

fn gh_named() -> Vec<(BTreeSet<usize>, &'static str)> {
    let s = |v: &[usize]| v.iter().copied().collect::<BTreeSet<_>>();
    vec![
        (s(&[]), "Kaehlerian"),
        (s(&[1]), "NK (nearly Kaehlerian)"),
        (s(&[2]), "AK (almost Kaehlerian)"),
        (s(&[3]), "Hermitian semi-Kaehlerian"),
        (s(&[4]), "locally conformal Kaehlerian type"),
        (s(&[1, 2]), "QK (quasi Kaehlerian)"),
        (s(&[3, 4]), "H (Hermitian)"),
        (s(&[2, 4]), "locally conformal almost Kaehlerian"),
        (s(&[1, 2, 3]), "SK (semi-Kaehlerian)"),
        (s(&[1, 2, 4]), "G1"),
        (s(&[2, 3, 4]), "G2"),
        (s(&[1, 2, 3, 4]), "U (no condition)"),
    ]
}

fn acms_named() -> Vec<(BTreeSet<usize>, &'static str)> {
    let s = |v: &[usize]| v.iter().copied().collect::<BTreeSet<_>>();
    vec![
        (s(&[]), "cosymplectic"),
        (s(&[1]), "nearly-K-cosymplectic"),
        (s(&[7]), "alpha-Sasakian"),
        (s(&[10]), "alpha-Kenmotsu"),
        (s(&[2, 9]), "almost cosymplectic"),
        (s(&[7, 10]), "trans-Sasakian"),
        (s(&[5, 7]), "quasi-Sasakian"),
        (s(&[3, 5, 8]), "semi-cosymplectic and normal"),
        (s(&[1, 7, 10]), "nearly-trans-Sasakian"),
        (s(&[1, 2, 6, 9]), "quasi-K-cosymplectic"),
        (s(&[3, 4, 8, 10, 11]), "integrable"),
        (s(&[5, 7, 8, 10]), "normal"),
        (s(&[1, 2, 3, 4, 5, 6, 7, 8, 9, 10]), "almost-K-contact"),
        (s(&[1, 2, 3, 5, 6, 8, 9, 11, 12]), "semi-cosymplectic"),
        (
            s(&[1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11, 12]),
            "general a.c.m.s.",
        ),
    ]
}

fn on3_named() -> Vec<(BTreeSet<usize>, &'static str)> {
    let s = |v: &[usize]| v.iter().copied().collect::<BTreeSet<_>>();
    vec![
        (s(&[]), "particular"),
        (s(&[3]), "nearly particular"),
        (s(&[1, 2, 3]), "general"),
    ]
}

/// Every named class whose defining index set contains the membership,
/// preceded by the minimal class label itself.
pub fn named_classes_for(id: TaxonomyId, membership: &BTreeSet<usize>) -> Vec<String> {
    let prefix = id.index_prefix();
    let minimal = if membership.is_empty() {
        format!("{prefix}0 (zero class)")
    } else {
        membership
            .iter()
            .map(|i| format!("{prefix}{i}"))
            .collect::<Vec<_>>()
            .join("+")
    };
    let table = match id {
        TaxonomyId::On3 => on3_named(),
        TaxonomyId::Gh4 => gh_named(),
        TaxonomyId::Acms12 => acms_named(),
        TaxonomyId::AcmsPhi12 => {
            // Translate through the bijection and reuse the h-side names.
            let mapped: BTreeSet<usize> = membership.iter().map(|&c| c_to_h_index(c)).collect();
            let mut labels = vec![minimal];
            for (set, name) in acms_named() {
                if mapped.is_subset(&set) {
                    labels.push(name.to_string());
                }
            }
            return labels;
        }
    };
    let mut labels = vec![minimal];
    for (set, name) in table {
        if membership.is_subset(&set) {
            labels.push(name.to_string());
        }
    }
    labels
}

/// Pull a covariant tensor from a decorated structure's frame into the
/// standard adapted coordinates of the matching taxonomy.
pub fn to_standard_coords(h: &Tensor3, dec: &DecoratedStructure, frame: &FrameMetric) -> Tensor3 {
    match &dec.structure {
        StructureTensor::AlmostHermitian { .. } | StructureTensor::AlmostContact { .. } => {
            let q = dec.adapted.as_ref().expect("adapted basis");
            h.change_basis(q)
        }
        _ => h.change_basis(frame.ortho_basis()),
    }
}

// ---------------------------------------------------------------------
// special-structure recognizers
// ---------------------------------------------------------------------

/// Flags computed both from class membership and from the direct tensor
/// conditions; the two routes must agree.
#[derive(Debug, Clone)]
pub struct SpecialFlags {
    pub cosymplectic: bool,
    pub normal: bool,
    pub integrable: bool,
    pub alpha_sasakian: Option<f64>,
    pub alpha_kenmotsu: Option<f64>,
    pub nearly_k_cosymplectic: bool,
    pub v_invariant_type: bool,
    pub v_antiinvariant_type: bool,
    pub xi_antiinvariant_type: bool,
    pub v_parallel: bool,
}

/// Recognize the special a.c.m.s. classes via both routes.
#[allow(clippy::too_many_arguments)]
pub fn recognize_special(
    dec: &DecoratedStructure,
    model: &FrameModel,
    nabla: &Connection,
    h: &Tensor3,
    forms: &AcmsForms,
    report: &ClassReport,
) -> Result<SpecialFlags> {
    let (f, xi) = match &dec.structure {
        StructureTensor::AlmostContact { f, xi } => (f, xi),
        _ => return Err(GeoError::InputShape("recognize_special requires an a.c.m.s.".into())),
    };
    let n = model.dim();
    let frame = model.frame();
    let npairs = dec.pairs();
    let scale = 1.0 + h.amax();
    let tolr = tol::IDENTITY * scale.max(1.0) * 10.0;
    let subset = |allowed: &[usize]| -> bool {
        let set: BTreeSet<usize> = allowed.iter().copied().collect();
        report.membership.is_subset(&set)
    };
    let agree = |name: &str, class_route: bool, tensor_route: bool| -> Result<bool> {
        if class_route != tensor_route {
            return Err(GeoError::InternalInconsistency(format!(
                "{name}: class route says {class_route}, tensor route says {tensor_route}"
            )));
        }
        Ok(class_route)
    };
    let nt = analysis::n_tensors(dec, model, h)?;
    let nf = analysis::nijenhuis(f, model);

    let cosymplectic = agree("cosymplectic", report.membership.is_empty(), h.amax() <= tolr)?;
    let normal = agree("normal", subset(&[5, 7, 8, 10]), nt.n1.amax() <= tolr)?;
    let integrable = agree("integrable", subset(&[3, 4, 8, 10, 11]), nf.amax() <= tolr)?;

    // alpha-Sasakian: pure class {7} with alpha = delta Phi(xi) / (2n).
    let alpha_s = forms.delta_phi.dot(xi) / (2.0 * npairs as f64);
    let sasaki_tensor = {
        let mut res = 0.0f64;
        for i in 0..n {
            let df = cov_endo_dir(nabla, f, i);
            let ei = model.basis_vector(i);
            for j in 0..n {
                let ej = model.basis_vector(j);
                let lhs = &df * &ej;
                let rhs = alpha_s * (frame.inner(&ei, &ej) * xi - frame.inner(&ej, xi) * &ei);
                res = res.max((lhs - rhs).amax());
            }
        }
        res <= tolr && alpha_s.abs() > tol::IDENTITY
    };
    let is_sasakian = agree(
        "alpha_sasakian",
        report.membership == [7usize].into_iter().collect(),
        sasaki_tensor,
    )?;
    let alpha_sasakian = if is_sasakian { Some(alpha_s) } else { None };

    // alpha-Kenmotsu: pure class {10} with alpha = -delta eta / (2n).
    let alpha_k = -forms.delta_eta / (2.0 * npairs as f64);
    let kenmotsu_tensor = {
        let mut res = 0.0f64;
        for i in 0..n {
            let df = cov_endo_dir(nabla, f, i);
            let ei = model.basis_vector(i);
            let fei = f * &ei;
            for j in 0..n {
                let ej = model.basis_vector(j);
                let lhs = &df * &ej;
                let rhs = alpha_k * (frame.inner(&fei, &ej) * xi - frame.inner(&ej, xi) * &fei);
                res = res.max((lhs - rhs).amax());
            }
        }
        res <= tolr && alpha_k.abs() > tol::IDENTITY
    };
    let is_kenmotsu = agree(
        "alpha_kenmotsu",
        report.membership == [10usize].into_iter().collect(),
        kenmotsu_tensor,
    )?;
    let alpha_kenmotsu = if is_kenmotsu { Some(alpha_k) } else { None };

    // nearly-K-cosymplectic: (nabla_X F) Y + (nabla_Y F) X = 0 and nabla xi = 0.
    let nkc_tensor = {
        let mut res = 0.0f64;
        for i in 0..n {
            let di = cov_endo_dir(nabla, f, i);
            res = res.max((nabla.direction(i) * xi).amax());
            for j in 0..n {
                let dj = cov_endo_dir(nabla, f, j);
                let v = &di * model.basis_vector(j) + &dj * model.basis_vector(i);
                res = res.max(v.amax());
            }
        }
        res <= tolr
    };
    let nearly_k_cosymplectic = agree("nearly_k_cosymplectic", subset(&[1]), nkc_tensor)?;

    // Type predicates (directions measured against V and xi).
    let vb = &dec.v_basis;
    let v_cols = vb.ncols();
    let max_over_v = |g: &dyn Fn(&DVector<f64>, &DVector<f64>) -> f64| -> f64 {
        let mut res = 0.0f64;
        for a in 0..v_cols {
            let x = vb.column(a).into_owned();
            for b in 0..v_cols {
                let y = vb.column(b).into_owned();
                res = res.max(g(&x, &y));
            }
        }
        res
    };
    let dfx = |x: &DVector<f64>, y: &DVector<f64>| -> DVector<f64> {
        let mut acc = DVector::zeros(n);
        for i in 0..n {
            if x[i] != 0.0 {
                acc += x[i] * (cov_endo_dir(nabla, f, i) * y);
            }
        }
        acc
    };
    let v_invariant_tensor =
        max_over_v(&|x, y| frame.inner(&dfx(x, y), xi).abs()) <= tolr;
    let v_invariant_type = agree(
        "v_invariant_type",
        subset(&[1, 2, 3, 4, 11, 12]),
        v_invariant_tensor,
    )?;
    let v_anti_tensor = max_over_v(&|x, y| (&dec.pi2 * dfx(x, y)).amax()) <= tolr;
    let v_antiinvariant_type = agree(
        "v_antiinvariant_type",
        subset(&[5, 6, 7, 8, 9, 10, 11, 12]),
        v_anti_tensor,
    )?;
    let xi_anti_tensor = {
        let mut res = 0.0f64;
        for a in 0..v_cols {
            let x = vb.column(a).into_owned();
            res = res.max((&dec.pi2 * dfx(xi, &x)).amax());
        }
        res <= tolr
    };
    let xi_antiinvariant_type = agree(
        "xi_antiinvariant_type",
        subset(&[1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11]),
        xi_anti_tensor,
    )?;
    let v_parallel_tensor = max_over_v(&|x, y| dfx(x, y).amax()) <= tolr;
    let v_parallel = agree("v_parallel", subset(&[11, 12]), v_parallel_tensor)?;

    Ok(SpecialFlags {
        cosymplectic,
        normal,
        integrable,
        alpha_sasakian,
        alpha_kenmotsu,
        nearly_k_cosymplectic,
        v_invariant_type,
        v_antiinvariant_type,
        xi_antiinvariant_type,
        v_parallel,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::selftest::{random_ambient_tensor, random_unitary_block, rng};
    use crate::tensor;

    #[test]
    fn dimension_tables() {
        let on3 = build_taxonomy(TaxonomyId::On3, 4).unwrap();
        let dims: Vec<usize> = on3.components.iter().map(|c| c.basis.ncols()).collect();
        assert_eq!(dims, vec![4, 16, 4]);
        assert_eq!(on3.ambient.ncols(), 24);

        let gh3 = build_taxonomy(TaxonomyId::Gh4, 3).unwrap();
        let dims: Vec<usize> = gh3.components.iter().map(|c| c.basis.ncols()).collect();
        assert_eq!(dims, vec![2, 16, 12, 6]);

        let acms2 = build_taxonomy(TaxonomyId::Acms12, 2).unwrap();
        let dims: Vec<usize> = acms2.components.iter().map(|c| c.basis.ncols()).collect();
        assert_eq!(dims, vec![0, 4, 0, 4, 3, 2, 1, 3, 6, 1, 4, 2]);
        assert_eq!(dims.iter().sum::<usize>(), 30);

        let phi2 = build_taxonomy(TaxonomyId::AcmsPhi12, 2).unwrap();
        let dims: Vec<usize> = phi2.components.iter().map(|c| c.basis.ncols()).collect();
        assert_eq!(dims, vec![0, 4, 0, 4, 1, 1, 3, 3, 6, 2, 2, 4]);
    }

    #[test]
    fn zero_tensor_is_the_zero_class() {
        let tax = build_taxonomy(TaxonomyId::Acms12, 2).unwrap();
        let rep = classify(&Tensor3::zeros(5), &tax, tol::MEMBERSHIP_REL).unwrap();
        assert!(rep.membership.is_empty());
        assert!(rep.named_labels.iter().any(|l| l == "cosymplectic"));
        assert!(!rep.strict);
    }

    #[test]
    fn ambient_violation_detected() {
        let tax = build_taxonomy(TaxonomyId::Gh4, 2).unwrap();
        // A generic metric-skew tensor breaks the J-symmetry.
        let mut h = Tensor3::zeros(4);
        h[(0, 0, 1)] = 1.0;
        h[(0, 1, 0)] = -1.0;
        assert!(matches!(
            classify(&h, &tax, tol::MEMBERSHIP_REL),
            Err(GeoError::AmbientViolation { .. })
        ));
    }

    #[test]
    fn bijection_mapping_and_cross_check() {
        let mk = |tax: TaxonomyId, v: &[usize]| ClassReport {
            taxonomy: tax,
            component_norms: BTreeMap::new(),
            membership: v.iter().copied().collect(),
            strict: false,
            named_labels: vec![],
            ambient_residual: 0.0,
            h_norm: 1.0,
            tol_rel: 1e-8,
        };
        // Both empty.
        assert!(cross_check_isomorphism(
            &mk(TaxonomyId::Acms12, &[]),
            &mk(TaxonomyId::AcmsPhi12, &[])
        ));
        // C6 maps to T7.
        assert!(cross_check_isomorphism(
            &mk(TaxonomyId::Acms12, &[7]),
            &mk(TaxonomyId::AcmsPhi12, &[6])
        ));
        // C8 maps to T8, not T9: deliberate mismatch is detected.
        assert!(!cross_check_isomorphism(
            &mk(TaxonomyId::Acms12, &[9]),
            &mk(TaxonomyId::AcmsPhi12, &[8])
        ));
    }

    #[test]
    fn named_class_lookups() {
        let labels = named_classes_for(TaxonomyId::Gh4, &[1usize].into_iter().collect());
        assert!(labels.iter().any(|l| l.contains("nearly Kaehlerian")));
        assert!(labels.iter().any(|l| l.contains("QK")));
        assert!(labels.iter().any(|l| l.contains("SK")));
        assert!(labels.iter().any(|l| l == "G1"));
        let labels = named_classes_for(TaxonomyId::Acms12, &[7usize, 10].into_iter().collect());
        assert!(labels.iter().any(|l| l == "trans-Sasakian"));
        let labels = named_classes_for(TaxonomyId::Acms12, &BTreeSet::new());
        assert!(labels.iter().any(|l| l == "cosymplectic"));
    }

    #[test]
    fn membership_invariant_under_structure_group() {
        let tax = build_taxonomy(TaxonomyId::Gh4, 2).unwrap();
        let mut r = rng(7);
        let frame = FrameMetric::euclidean(4);
        for _ in 0..5 {
            let h = random_ambient_tensor(&tax, &mut r);
            let rep = classify(&h, &tax, tol::MEMBERSHIP_REL).unwrap();
            for _ in 0..4 {
                let a = random_unitary_block(2, &mut r);
                let moved = tensor::act_orthogonal(&a, &h, &frame).unwrap();
                let rep2 = classify(&moved, &tax, tol::MEMBERSHIP_REL).unwrap();
                assert_eq!(rep.membership, rep2.membership);
            }
        }
    }
}

//! Structure tensors, their validation, canonical connections and the
//! second fundamental tensor `h = nabla - nabla_bar`.
//!
//! Five families are supported: almost product (`P^2 = I`), almost
//! Hermitian (`J^2 = -I`), f-structure (`F^3 + F = 0`), almost contact
//! metric (`F, xi, eta` on odd dimension) and sigma affinors (g-orthogonal
//! `S`, optionally of finite order `S^k = I`).

use nalgebra::{DMatrix, DVector};

use crate::error::{GeoError, Result};
use crate::lie::{cov_endo_dir, Connection};
use crate::tensor::{self, Endo, FrameMetric, Tensor3};
use crate::tol;

#[derive(Debug, Clone)]
pub enum StructureTensor {
    AlmostProduct { p: Endo },
    AlmostHermitian { j: Endo },
    FStructure { f: Endo },
    AlmostContact { f: Endo, xi: DVector<f64> },
    SigmaAffinor { s: Endo, order: Option<u32> },
}

impl StructureTensor {
    pub fn kind(&self) -> &'static str {
        match self {
            StructureTensor::AlmostProduct { .. } => "almost_product",
            StructureTensor::AlmostHermitian { .. } => "almost_hermitian",
            StructureTensor::FStructure { .. } => "f_structure",
            StructureTensor::AlmostContact { .. } => "almost_contact",
            StructureTensor::SigmaAffinor { .. } => "sigma_affinor",
        }
    }
}

/// A validated structure together with its eigen-projections and
/// orthonormal bases of the two distributions `L = im(pi1)`, `V = im(pi2)`.
#[derive(Debug, Clone)]
pub struct DecoratedStructure {
    pub structure: StructureTensor,
    pub pi1: Endo,
    pub pi2: Endo,
    /// g-orthonormal basis of `L` (columns); empty for almost Hermitian.
    pub l_basis: DMatrix<f64>,
    /// g-orthonormal basis of `V` (columns).
    pub v_basis: DMatrix<f64>,
    /// For almost Hermitian / almost contact structures: the adapted
    /// orthonormal basis `E_1..E_n, F E_1..F E_n (, xi)` as columns.
    pub adapted: Option<DMatrix<f64>>,
}

impl DecoratedStructure {
    pub fn dim(&self) -> usize {
        self.pi1.nrows()
    }

    /// Number of complex pairs `n` for adapted structures
    /// (dim = 2n for a.H., dim = 2n + 1 for a.c.m.s.).
    pub fn pairs(&self) -> usize {
        match self.structure {
            StructureTensor::AlmostHermitian { .. } => self.dim() / 2,
            StructureTensor::AlmostContact { .. } => (self.dim() - 1) / 2,
            _ => 0,
        }
    }
}

fn check(cond: bool, msg: &str) -> Result<()> {
    if cond {
        Ok(())
    } else {
        Err(GeoError::StructureInvalid(msg.to_string()))
    }
}

fn is_g_orthogonal(a: &Endo, frame: &FrameMetric) -> bool {
    let scale = frame.gram().amax().max(1.0);
    (a.transpose() * frame.gram() * a - frame.gram()).amax() <= tol::ORTHO * scale
}

/// g-orthonormal basis of the image of a g-orthogonal projection.
fn projection_image_basis(pi: &Endo, frame: &FrameMetric) -> DMatrix<f64> {
    let n = frame.dim();
    let b = frame.ortho_basis();
    let b_inv = frame.ortho_basis_inv();
    let pi_o = b_inv * pi * b; // orthogonal projection in orthonormal coords
    let sym = 0.5 * (&pi_o + pi_o.transpose());
    let eig = sym.symmetric_eigen();
    let mut cols = Vec::new();
    for j in 0..n {
        if eig.eigenvalues[j] > 0.5 {
            cols.push(eig.eigenvectors.column(j).into_owned());
        }
    }
    let mut m = DMatrix::zeros(n, cols.len());
    for (j, c) in cols.iter().enumerate() {
        m.set_column(j, c);
    }
    b * m
}

/// Build the adapted basis `E_1..E_n, F E_1..F E_n` of `V` by pairing:
/// pick a unit vector, append its F-image, project the pair out, recurse.
fn adapted_v_basis(f: &Endo, v_basis: &DMatrix<f64>, frame: &FrameMetric) -> Result<DMatrix<f64>> {
    let dim = frame.dim();
    let v_dim = v_basis.ncols();
    if v_dim % 2 != 0 {
        return Err(GeoError::StructureInvalid(
            "V distribution has odd dimension; F cannot be a complex structure on it".into(),
        ));
    }
    let n = v_dim / 2;
    let mut chosen: Vec<DVector<f64>> = Vec::with_capacity(v_dim);
    let mut pool: Vec<DVector<f64>> = (0..v_dim).map(|j| v_basis.column(j).into_owned()).collect();
    for _ in 0..n {
        // Gram-Schmidt the pool against the pairs already chosen, keep the
        // first vector with a healthy residual.
        let mut seed = None;
        for cand in &pool {
            let mut w = cand.clone();
            for c in &chosen {
                let coef = frame.inner(&w, c);
                w -= c * coef;
            }
            let nrm = frame.norm(&w);
            if nrm > 1e-8 {
                seed = Some(w / nrm);
                break;
            }
        }
        let e = seed.ok_or_else(|| {
            GeoError::StructureInvalid("adapted basis construction ran out of directions".into())
        })?;
        let fe = f * &e;
        let fe_norm = frame.norm(&fe);
        if (fe_norm - 1.0).abs() > 1e-8 {
            return Err(GeoError::StructureInvalid(format!(
                "F does not preserve lengths on V (|F E| = {fe_norm:.6})"
            )));
        }
        chosen.push(e);
        chosen.push(fe);
        pool.retain(|c| {
            let mut w = c.clone();
            for ch in &chosen {
                let coef = frame.inner(&w, ch);
                w -= ch * coef;
            }
            frame.norm(&w) > 1e-10
        });
    }
    // Reorder as E_1..E_n, F E_1..F E_n.
    let mut m = DMatrix::zeros(dim, v_dim);
    for i in 0..n {
        m.set_column(i, &chosen[2 * i]);
        m.set_column(n + i, &chosen[2 * i + 1]);
    }
    Ok(m)
}

/// Validate all kind-specific invariants and construct the projections and
/// distribution bases.
pub fn validate_structure(s: &StructureTensor, frame: &FrameMetric) -> Result<DecoratedStructure> {
    let n = frame.dim();
    let id = DMatrix::<f64>::identity(n, n);
    match s {
        StructureTensor::AlmostProduct { p } => {
            check(p.nrows() == n && p.ncols() == n, "P has wrong shape")?;
            let scale = p.amax().max(1.0);
            check((p * p - &id).amax() <= tol::ORTHO * scale, "P^2 = I fails")?;
            check(is_g_orthogonal(p, frame), "<PX,PY> = <X,Y> fails")?;
            let pi1 = 0.5 * (&id + p);
            let pi2 = 0.5 * (&id - p);
            let l_basis = projection_image_basis(&pi1, frame);
            let v_basis = projection_image_basis(&pi2, frame);
            Ok(DecoratedStructure {
                structure: s.clone(),
                pi1,
                pi2,
                l_basis,
                v_basis,
                adapted: None,
            })
        }
        StructureTensor::AlmostHermitian { j } => {
            check(j.nrows() == n && j.ncols() == n, "J has wrong shape")?;
            check(n % 2 == 0, "almost Hermitian structures need even dimension")?;
            let scale = j.amax().max(1.0);
            check((j * j + &id).amax() <= tol::ORTHO * scale, "J^2 = -I fails")?;
            check(is_g_orthogonal(j, frame), "<JX,JY> = <X,Y> fails")?;
            let v_basis = {
                let b = frame.ortho_basis().clone();
                b
            };
            let adapted = adapted_v_basis(j, &v_basis, frame)?;
            Ok(DecoratedStructure {
                structure: s.clone(),
                pi1: DMatrix::zeros(n, n),
                pi2: id,
                l_basis: DMatrix::zeros(n, 0),
                v_basis,
                adapted: Some(adapted),
            })
        }
        StructureTensor::FStructure { f } => {
            check(f.nrows() == n && f.ncols() == n, "F has wrong shape")?;
            let scale = f.amax().max(1.0);
            check(
                (f * f * f + f).amax() <= tol::ORTHO * scale.powi(3).max(1.0),
                "F^3 + F = 0 fails",
            )?;
            let pi2 = -(f * f);
            let pi1 = &id - &pi2;
            check(
                (&pi2 * &pi2 - &pi2).amax() <= tol::ORTHO,
                "-F^2 is not a projection",
            )?;
            // <FX, FY> = <X, Y> on V is F* F = pi2.
            let fs = tensor::adjoint(f, frame);
            check(
                (&fs * f - &pi2).amax() <= tol::ORTHO * scale,
                "<FX,FY> = <X,Y> fails on V",
            )?;
            let l_basis = projection_image_basis(&pi1, frame);
            let v_basis = projection_image_basis(&pi2, frame);
            Ok(DecoratedStructure {
                structure: s.clone(),
                pi1,
                pi2,
                l_basis,
                v_basis,
                adapted: None,
            })
        }
        StructureTensor::AlmostContact { f, xi } => {
            check(f.nrows() == n && f.ncols() == n && xi.len() == n, "F/xi have wrong shape")?;
            check(n % 2 == 1, "almost contact metric structures need odd dimension")?;
            let scale = f.amax().max(1.0);
            check(
                (f * f * f + f).amax() <= tol::ORTHO * scale.powi(3).max(1.0),
                "F^3 + F = 0 fails",
            )?;
            check((f * xi).amax() <= tol::ORTHO, "F xi = 0 fails")?;
            check((frame.norm(xi) - 1.0).abs() <= tol::ORTHO, "|xi| = 1 fails")?;
            let pi2 = -(f * f);
            let pi1 = &id - &pi2;
            // rank F = n - 1 means the kernel L is exactly [xi].
            let l_basis = projection_image_basis(&pi1, frame);
            check(l_basis.ncols() == 1, "rank F = n - 1 fails (kernel not one-dimensional)")?;
            let fs = tensor::adjoint(f, frame);
            check(
                (&fs * f - &pi2).amax() <= tol::ORTHO * scale,
                "<FX,FY> = <X,Y> fails on V",
            )?;
            let v_basis = projection_image_basis(&pi2, frame);
            let mut adapted_v = adapted_v_basis(f, &v_basis, frame)?;
            let cols = adapted_v.ncols();
            let mut adapted = DMatrix::zeros(n, cols + 1);
            for j in 0..cols {
                adapted.set_column(j, &adapted_v.column(j));
            }
            // Normalize xi exactly to unit length before storing.
            let xin = xi / frame.norm(xi);
            adapted.set_column(cols, &xin);
            adapted_v = adapted.clone();
            let _ = adapted_v;
            Ok(DecoratedStructure {
                structure: s.clone(),
                pi1,
                pi2,
                l_basis,
                v_basis,
                adapted: Some(adapted),
            })
        }
        StructureTensor::SigmaAffinor { s: smat, order } => {
            check(smat.nrows() == n && smat.ncols() == n, "S has wrong shape")?;
            check(is_g_orthogonal(smat, frame), "S is not a g-isometry")?;
            if let Some(k) = order {
                check(*k >= 1, "order must be positive")?;
                let mut pow = id.clone();
                for _ in 0..*k {
                    pow = &pow * smat;
                }
                check((pow - &id).amax() <= tol::ORTHO, "S^k = I fails")?;
            }
            // T^1 = ker(S - I) via the symmetric part in orthonormal coords.
            let b = frame.ortho_basis();
            let b_inv = frame.ortho_basis_inv();
            let s_o = b_inv * smat * b;
            let sym = 0.5 * (&s_o + s_o.transpose());
            let eig = sym.symmetric_eigen();
            let mut fixed_cols = Vec::new();
            let mut moved_cols = Vec::new();
            for j in 0..n {
                if (eig.eigenvalues[j] - 1.0).abs() <= 1e-8 {
                    fixed_cols.push(eig.eigenvectors.column(j).into_owned());
                } else {
                    moved_cols.push(eig.eigenvectors.column(j).into_owned());
                }
            }
            let stack = |cols: &[DVector<f64>]| {
                let mut m = DMatrix::zeros(n, cols.len());
                for (j, c) in cols.iter().enumerate() {
                    m.set_column(j, c);
                }
                m
            };
            let t1_o = stack(&fixed_cols);
            let t2_o = stack(&moved_cols);
            // Invariance of both blocks under S.
            if t1_o.ncols() > 0 && t2_o.ncols() > 0 {
                let cross = (t2_o.transpose() * &s_o * &t1_o).amax();
                check(cross <= 1e-8, "T^1 is not S-invariant")?;
            }
            // (I - S) invertible on T^2.
            if t2_o.ncols() > 0 {
                let m = t2_o.transpose() * (DMatrix::identity(n, n) - &s_o) * &t2_o;
                let sv = m.svd(false, false);
                let min_sv = sv.singular_values.min();
                if min_sv <= 1e-8 {
                    return Err(GeoError::SingularOneMinusS { min_sv });
                }
            }
            let pi1_o = &t1_o * t1_o.transpose();
            let pi1 = b * &pi1_o * b_inv;
            let pi2 = &id - &pi1;
            Ok(DecoratedStructure {
                structure: StructureTensor::SigmaAffinor { s: smat.clone(), order: *order },
                pi1: pi1.clone(),
                pi2,
                l_basis: b * t1_o,
                v_basis: b * t2_o,
                adapted: None,
            })
        }
    }
}

/// Canonical connection of a validated structure, given the Levi-Civita
/// connection of the frame.
///
/// Per family: almost product projects the connection form onto the
/// block-diagonal subalgebra; almost Hermitian averages with `J`;
/// f-structures and a.c.m.s. combine both; sigma affinors of finite order
/// use the cyclic average over powers of `S`, and infinite-order affinors
/// the `(I - S)^{-1}` projection formula.
pub fn canonical_connection(dec: &DecoratedStructure, nabla: &Connection, frame: &FrameMetric) -> Result<Connection> {
    match &dec.structure {
        StructureTensor::AlmostProduct { .. } => Ok(project_directions(nabla, |gi| {
            &dec.pi1 * gi * &dec.pi1 + &dec.pi2 * gi * &dec.pi2
        })),
        StructureTensor::AlmostHermitian { j } => Ok(project_directions(nabla, |gi| {
            0.5 * (gi - j * gi * j)
        })),
        StructureTensor::FStructure { f } | StructureTensor::AlmostContact { f, .. } => {
            Ok(project_directions(nabla, |gi| {
                &dec.pi1 * gi * &dec.pi1 + 0.5 * (&dec.pi2 * (gi * &dec.pi2 - f * gi * f))
            }))
        }
        StructureTensor::SigmaAffinor { s, order } => match order {
            Some(k) => Ok(sigma_connection_order(s, *k, nabla)),
            None => sigma_connection_projection(dec, s, nabla, frame),
        },
    }
}

fn project_directions(nabla: &Connection, f: impl Fn(&Endo) -> Endo) -> Connection {
    let n = nabla.dim();
    let mut gamma = Tensor3::zeros(n);
    for i in 0..n {
        let gi = nabla.direction(i);
        let pi = f(&gi);
        for j in 0..n {
            for k in 0..n {
                gamma[(i, j, k)] = pi[(k, j)];
            }
        }
    }
    Connection::from_tensor(gamma)
}

/// Finite-order sigma connection: `(1/k) sum_j S^j nabla_X S^{k-j} Y`.
pub fn sigma_connection_order(s: &Endo, k: u32, nabla: &Connection) -> Connection {
    let n = nabla.dim();
    let mut powers = vec![DMatrix::<f64>::identity(n, n)];
    for _ in 1..k {
        let next = powers.last().unwrap() * s;
        powers.push(next);
    }
    project_directions(nabla, |gi| {
        let mut acc = DMatrix::zeros(n, n);
        for j in 0..k as usize {
            acc += &powers[j] * gi * &powers[(k as usize - j) % k as usize];
        }
        acc / k as f64
    })
}

/// Projection-form sigma connection:
/// `nabla_X Y - (nabla_{(I-S)^{-1} pi2 X} S)(S^{-1} Y)`.
pub fn sigma_connection_projection(
    dec: &DecoratedStructure,
    s: &Endo,
    nabla: &Connection,
    frame: &FrameMetric,
) -> Result<Connection> {
    let n = nabla.dim();
    let id = DMatrix::<f64>::identity(n, n);
    let s_inv = s
        .clone()
        .try_inverse()
        .ok_or_else(|| GeoError::StructureInvalid("S is singular".into()))?;
    // (I - S)^{-1} restricted to the moving block, zero on the mirror.
    let v = &dec.v_basis; // g-orthonormal columns
    let kmap = if v.ncols() == 0 {
        DMatrix::zeros(n, n)
    } else {
        let g = frame.gram();
        let block = v.transpose() * g * (&id - s) * v;
        let inv = block.try_inverse().ok_or(GeoError::SingularOneMinusS { min_sv: 0.0 })?;
        v * inv * v.transpose() * g
    };
    let mut gamma = Tensor3::zeros(n);
    for i in 0..n {
        let ei = DVector::from_fn(n, |a, _| if a == i { 1.0 } else { 0.0 });
        let w = &kmap * ei;
        // (nabla_W S) as a matrix.
        let mut dws = DMatrix::<f64>::zeros(n, n);
        for m in 0..n {
            if w[m] == 0.0 {
                continue;
            }
            dws += w[m] * cov_endo_dir(nabla, s, m);
        }
        let gi = nabla.direction(i) - dws * &s_inv;
        for j in 0..n {
            for k in 0..n {
                gamma[(i, j, k)] = gi[(k, j)];
            }
        }
    }
    Ok(Connection::from_tensor(gamma))
}

/// Residual of `nabla_bar(structure tensor) = 0`.
pub fn structure_parallel_residual(
    dec: &DecoratedStructure,
    conn: &Connection,
    frame: &FrameMetric,
) -> f64 {
    let n = conn.dim();
    let endo_residual = |a: &Endo| -> f64 {
        let mut r = 0.0f64;
        for i in 0..n {
            r = r.max(cov_endo_dir(conn, a, i).amax());
        }
        r
    };
    match &dec.structure {
        StructureTensor::AlmostProduct { p } => endo_residual(p),
        StructureTensor::AlmostHermitian { j } => endo_residual(j),
        StructureTensor::FStructure { f } => endo_residual(f),
        StructureTensor::AlmostContact { f, xi } => {
            let mut r = endo_residual(f);
            for i in 0..n {
                r = r.max((conn.direction(i) * xi).amax());
            }
            let eta = frame.gram() * xi;
            r = r.max(crate::lie::cov_covector(conn, &eta).amax());
            r
        }
        StructureTensor::SigmaAffinor { s, .. } => endo_residual(s),
    }
}

/// Second fundamental tensor `h = nabla - nabla_bar`, returned fully
/// covariant (`h_{ijk} = <h_{e_i} e_j, e_k>`). The difference is
/// cross-checked against the family's closed form.
pub fn second_fundamental(
    dec: &DecoratedStructure,
    nabla: &Connection,
    nabla_bar: &Connection,
    frame: &FrameMetric,
) -> Result<Tensor3> {
    let n = nabla.dim();
    let g = frame.gram();
    let diff = Tensor3::from_fn(n, |i, j, k| {
        let mut acc = 0.0;
        for m in 0..n {
            acc += (nabla.coeffs()[(i, j, m)] - nabla_bar.coeffs()[(i, j, m)]) * g[(m, k)];
        }
        acc
    });
    // Closed form per family (as a direction matrix).
    let closed_dir = |i: usize| -> Option<Endo> {
        let gi = nabla.direction(i);
        match &dec.structure {
            StructureTensor::AlmostProduct { .. } => {
                Some(&dec.pi1 * &gi * &dec.pi2 + &dec.pi2 * &gi * &dec.pi1)
            }
            StructureTensor::AlmostHermitian { j } => Some(0.5 * (&gi + j * &gi * j)),
            StructureTensor::FStructure { f } | StructureTensor::AlmostContact { f, .. } => {
                Some(
                    &dec.pi1 * &gi * &dec.pi2
                        + &dec.pi2 * &gi * &dec.pi1
                        + 0.5 * (&dec.pi2 * (&gi * &dec.pi2 + f * &gi * f)),
                )
            }
            StructureTensor::SigmaAffinor { .. } => None,
        }
    };
    let mut closed_residual = 0.0f64;
    for i in 0..n {
        if let Some(hi) = closed_dir(i) {
            let low = g * hi;
            for j in 0..n {
                for k in 0..n {
                    closed_residual = closed_residual.max((low[(k, j)] - diff[(i, j, k)]).abs());
                }
            }
        }
    }
    if closed_residual > tol::EXACT * 100.0 {
        return Err(GeoError::InternalInconsistency(format!(
            "second fundamental tensor: difference and closed form disagree by {closed_residual:.3e}"
        )));
    }
    let skew = diff.metric_skew_residual();
    if skew > tol::EXACT * 100.0 {
        return Err(GeoError::InternalInconsistency(format!(
            "second fundamental tensor is not metric-skew (residual {skew:.3e})"
        )));
    }
    Ok(diff)
}

/// Torsion of the canonical connection from `h` alone: `T_bar = -2 h^-`,
/// returned with the value index raised (same layout as
/// [`crate::lie::frame_torsion`]).
pub fn torsion_bar(h: &Tensor3, frame: &FrameMetric) -> Tensor3 {
    let n = h.dim();
    let (_, skew) = tensor::split_sym_skew(h);
    let ginv = frame.gram_inv();
    Tensor3::from_fn(n, |i, j, k| {
        let mut acc = 0.0;
        for m in 0..n {
            acc += -2.0 * skew[(i, j, m)] * ginv[(m, k)];
        }
        acc
    })
}

/// Pull a covariant rank-3 tensor into the adapted basis of a decorated
/// structure (identity when no adapted basis exists).
pub fn to_adapted(h: &Tensor3, dec: &DecoratedStructure) -> Tensor3 {
    match &dec.adapted {
        Some(q) => h.change_basis(q),
        None => h.clone(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lie::{levi_civita, FrameModel};

    fn heisenberg3() -> FrameModel {
        let mut c = Tensor3::zeros(3);
        c[(0, 1, 2)] = 1.0;
        c[(1, 0, 2)] = -1.0;
        FrameModel::new(FrameMetric::euclidean(3), c).unwrap()
    }

    fn heis_acms() -> StructureTensor {
        // F e1 = e2, F e2 = -e1, xi = e3.
        let f = DMatrix::from_row_slice(3, 3, &[0.0, -1.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 0.0]);
        StructureTensor::AlmostContact { f, xi: DVector::from_vec(vec![0.0, 0.0, 1.0]) }
    }

    #[test]
    fn validate_diag_product() {
        let frame = FrameMetric::euclidean(2);
        let p = DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, -1.0]));
        let dec = validate_structure(&StructureTensor::AlmostProduct { p }, &frame).unwrap();
        let expected = DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, 0.0]));
        assert!((dec.pi1 - expected).amax() < 1e-12);
        assert_eq!(dec.l_basis.ncols(), 1);
        assert_eq!(dec.v_basis.ncols(), 1);
    }

    #[test]
    fn validate_rejects_bad_product() {
        let frame = FrameMetric::euclidean(2);
        let p = DMatrix::from_diagonal(&DVector::from_vec(vec![2.0, -1.0]));
        assert!(matches!(
            validate_structure(&StructureTensor::AlmostProduct { p }, &frame),
            Err(GeoError::StructureInvalid(_))
        ));
    }

    #[test]
    fn validate_standard_complex_structure() {
        let frame = FrameMetric::euclidean(2);
        let j = DMatrix::from_row_slice(2, 2, &[0.0, -1.0, 1.0, 0.0]);
        let dec = validate_structure(&StructureTensor::AlmostHermitian { j }, &frame).unwrap();
        assert!(dec.adapted.is_some());
    }

    #[test]
    fn projections_sum_to_identity_for_acms() {
        let frame = FrameMetric::euclidean(3);
        let dec = validate_structure(&heis_acms(), &frame).unwrap();
        let id = DMatrix::identity(3, 3);
        assert!((&dec.pi1 + &dec.pi2 - id).amax() < 1e-12);
        assert!((&dec.pi1 * &dec.pi2).amax() < 1e-12);
        let q = dec.adapted.as_ref().unwrap();
        assert!((q.transpose() * q - DMatrix::identity(3, 3)).amax() < 1e-10);
    }

    #[test]
    fn canonical_connection_heisenberg_acms() {
        let model = heisenberg3();
        let nabla = levi_civita(&model);
        let dec = validate_structure(&heis_acms(), model.frame()).unwrap();
        let bar = canonical_connection(&dec, &nabla, model.frame()).unwrap();
        // Gamma_bar(e1, e2) = 0: the e3/2 part is removed.
        assert!(bar.basis_apply(0, 1).amax() < 1e-13);
        // Gamma_bar(e3, e1) = -e2/2 is retained on V.
        let expected = DVector::from_vec(vec![0.0, -0.5, 0.0]);
        assert!((bar.basis_apply(2, 0) - expected).amax() < 1e-13);
        // Metric and structure annihilation.
        assert!(bar.metric_residual(model.frame()) < 1e-12);
        assert!(structure_parallel_residual(&dec, &bar, model.frame()) < 1e-12);
    }

    #[test]
    fn second_fundamental_heisenberg_values() {
        let model = heisenberg3();
        let nabla = levi_civita(&model);
        let dec = validate_structure(&heis_acms(), model.frame()).unwrap();
        let bar = canonical_connection(&dec, &nabla, model.frame()).unwrap();
        let h = second_fundamental(&dec, &nabla, &bar, model.frame()).unwrap();
        assert!((h[(0, 1, 2)] - 0.5).abs() < 1e-13);
        assert!(h[(2, 0, 1)].abs() < 1e-13);
        assert!(h[(0, 0, 2)].abs() < 1e-13);
        assert!(h.is_metric_skew());
    }

    #[test]
    fn parallel_structure_means_h_zero() {
        // P = diag(1,-1) on the abelian algebra: nabla P = 0 already.
        let model = FrameModel::abelian(FrameMetric::euclidean(2));
        let nabla = levi_civita(&model);
        let p = DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, -1.0]));
        let dec = validate_structure(&StructureTensor::AlmostProduct { p }, model.frame()).unwrap();
        let bar = canonical_connection(&dec, &nabla, model.frame()).unwrap();
        assert!(bar.coeffs().sub(nabla.coeffs()).amax() < 1e-14);
        let h = second_fundamental(&dec, &nabla, &bar, model.frame()).unwrap();
        assert!(h.amax() < 1e-14);
    }

    #[test]
    fn torsion_bar_of_symmetric_h_vanishes() {
        // Anything symmetric in the first two slots has no torsion part.
        let frame = FrameMetric::euclidean(3);
        let h = Tensor3::from_fn(3, |i, j, k| ((i * j) as f64 + 1.0) * (k as f64 - 1.0));
        let (sym, _) = tensor::split_sym_skew(&h);
        assert!(torsion_bar(&sym, &frame).amax() < 1e-14);
        assert!(torsion_bar(&Tensor3::zeros(3), &frame).amax() == 0.0);
    }

    #[test]
    fn sigma_order2_matches_product_connection() {
        // S of order 2 is an almost product structure.
        let model = heisenberg3();
        let nabla = levi_civita(&model);
        let p = DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, 1.0, -1.0]));
        let dec_p =
            validate_structure(&StructureTensor::AlmostProduct { p: p.clone() }, model.frame())
                .unwrap();
        let via_product = canonical_connection(&dec_p, &nabla, model.frame()).unwrap();
        let via_sigma = sigma_connection_order(&p, 2, &nabla);
        assert!(via_product.coeffs().sub(via_sigma.coeffs()).amax() < 1e-14);
    }
}

//! The anticommutative algebra `(T, *)` attached to a nearly particular
//! quasi-homogeneous structure: `X * Y = h_X Y`. Axioms, the fundamental
//! operator, its spectral split and the decomposition into an abelian
//! ideal plus simple ideals.

use nalgebra::{DMatrix, DVector};

use crate::error::{GeoError, Result};
use crate::tensor::{self, Endo, FrameMetric, Tensor3};
use crate::tol;

/// Multiplication table `e_i * e_j = sum_k mult[(i,j,k)] e_k`.
#[derive(Debug, Clone)]
pub struct QrAlgebra {
    frame: FrameMetric,
    mult: Tensor3,
}

impl QrAlgebra {
    pub fn dim(&self) -> usize {
        self.frame.dim()
    }

    pub fn frame(&self) -> &FrameMetric {
        &self.frame
    }

    pub fn mult(&self) -> &Tensor3 {
        &self.mult
    }

    /// `x * y` by bilinearity.
    pub fn star(&self, x: &DVector<f64>, y: &DVector<f64>) -> DVector<f64> {
        let n = self.dim();
        let mut out = DVector::zeros(n);
        for i in 0..n {
            if x[i] == 0.0 {
                continue;
            }
            for j in 0..n {
                let w = x[i] * y[j];
                if w == 0.0 {
                    continue;
                }
                for k in 0..n {
                    out[k] += w * self.mult[(i, j, k)];
                }
            }
        }
        out
    }

    /// Residuals of the two axioms: `X * X = 0` and
    /// `<X * Y, Z> = <X, Y * Z>`.
    pub fn axiom_residuals(&self) -> (f64, f64) {
        let n = self.dim();
        let mut anti = 0.0f64;
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    anti = anti.max((self.mult[(i, j, k)] + self.mult[(j, i, k)]).abs());
                }
            }
        }
        let mut assoc = 0.0f64;
        for i in 0..n {
            let ei = self.basis(i);
            for j in 0..n {
                let ej = self.basis(j);
                for k in 0..n {
                    let ek = self.basis(k);
                    let lhs = self.frame.inner(&self.star(&ei, &ej), &ek);
                    let rhs = self.frame.inner(&ei, &self.star(&ej, &ek));
                    assoc = assoc.max((lhs - rhs).abs());
                }
            }
        }
        (anti, assoc)
    }

    fn basis(&self, i: usize) -> DVector<f64> {
        DVector::from_fn(self.dim(), |a, _| if a == i { 1.0 } else { 0.0 })
    }
}

/// Build the algebra from a nearly particular `h` (covariant):
/// `X * Y = h_X Y` with the value index raised.
pub fn from_h(h: &Tensor3, frame: &FrameMetric) -> Result<QrAlgebra> {
    let (sym, _) = tensor::split_sym_skew(h);
    let sym_norm = tensor::tensor_norm(&sym, frame)?;
    if sym_norm > tol::IDENTITY {
        return Err(GeoError::NotNearlyParticular { sym_norm });
    }
    let n = frame.dim();
    let ginv = frame.gram_inv();
    let mult = Tensor3::from_fn(n, |i, j, k| {
        let mut acc = 0.0;
        for m in 0..n {
            acc += h[(i, j, m)] * ginv[(m, k)];
        }
        acc
    });
    let alg = QrAlgebra { frame: frame.clone(), mult };
    let (anti, assoc) = alg.axiom_residuals();
    if anti > tol::IDENTITY || assoc > tol::IDENTITY {
        return Err(GeoError::InternalInconsistency(format!(
            "QR axioms fail on a nearly particular h (anticommutativity {anti:.3e}, form-associativity {assoc:.3e})"
        )));
    }
    Ok(alg)
}

/// The fundamental operator `<A X, Y> = sum_k <X * E_k, Y * E_k>` over a
/// g-orthonormal basis; g-self-adjoint and PSD, equal to r1 of the
/// generating h.
pub fn fundamental_operator(alg: &QrAlgebra) -> Endo {
    let n = alg.dim();
    let frame = alg.frame();
    let b = frame.ortho_basis();
    // <A u_x, u_y> over the orthonormal frame, then map the operator back.
    let mut a_ortho = DMatrix::zeros(n, n);
    let cols: Vec<DVector<f64>> = (0..n).map(|j| b.column(j).into_owned()).collect();
    for x in 0..n {
        for y in 0..n {
            let mut acc = 0.0;
            for k in 0..n {
                let xs = alg.star(&cols[x], &cols[k]);
                let ys = alg.star(&cols[y], &cols[k]);
                acc += frame.inner(&xs, &ys);
            }
            a_ortho[(x, y)] = acc;
        }
    }
    b * a_ortho * frame.ortho_basis_inv()
}

#[derive(Debug, Clone)]
pub struct EigenData {
    /// Distinct positive eigenvalues with orthonormal bases of their
    /// clustered eigenspaces.
    pub spaces: Vec<(f64, DMatrix<f64>)>,
    /// Orthonormal basis of `Ker A`.
    pub kernel: DMatrix<f64>,
}

/// Cluster the spectrum of the (g-self-adjoint, PSD) operator `A`;
/// eigenvalues closer than the relative cluster width merge.
pub fn spectral_split(a: &Endo, frame: &FrameMetric) -> EigenData {
    let n = frame.dim();
    let b = frame.ortho_basis();
    let a_o = frame.ortho_basis_inv() * a * b;
    let sym = 0.5 * (&a_o + a_o.transpose());
    let eig = sym.symmetric_eigen();
    let max_e = eig.eigenvalues.amax().max(1.0);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&x, &y| eig.eigenvalues[x].partial_cmp(&eig.eigenvalues[y]).unwrap());
    let mut clusters: Vec<(f64, Vec<usize>)> = Vec::new();
    for &j in &order {
        let lam = eig.eigenvalues[j];
        match clusters.last_mut() {
            Some((c, idx)) if (lam - *c).abs() <= tol::CLUSTER_REL * max_e => idx.push(j),
            _ => clusters.push((lam, vec![j])),
        }
    }
    let mut spaces = Vec::new();
    let mut kernel = DMatrix::zeros(n, 0);
    for (lam, idx) in clusters {
        let mut m = DMatrix::zeros(n, idx.len());
        for (c, &j) in idx.iter().enumerate() {
            m.set_column(c, &eig.eigenvectors.column(j));
        }
        let m = b * m;
        if lam.abs() <= tol::EIGEN_REL * max_e {
            kernel = m;
        } else {
            spaces.push((lam, m));
        }
    }
    EigenData { spaces, kernel }
}

#[derive(Debug, Clone)]
pub struct IdealDecomposition {
    /// Basis of the abelian ideal `I_0 = Ker A`.
    pub abelian: DMatrix<f64>,
    /// Bases of the minimal non-abelian ideals.
    pub ideals: Vec<DMatrix<f64>>,
    pub eigen: EigenData,
}

/// Decompose into the abelian ideal and minimal two-sided ideals, found by
/// span-closure of eigenvector seeds under multiplication.
pub fn ideal_decompose(alg: &QrAlgebra) -> Result<IdealDecomposition> {
    let n = alg.dim();
    let frame = alg.frame();
    let a = fundamental_operator(alg);
    let eigen = spectral_split(&a, frame);
    // Collect seeds: every eigenvector of every positive eigenspace.
    let mut seeds: Vec<DVector<f64>> = Vec::new();
    for (_, basis) in &eigen.spaces {
        for j in 0..basis.ncols() {
            seeds.push(basis.column(j).into_owned());
        }
    }
    let basis_vecs: Vec<DVector<f64>> =
        (0..n).map(|i| DVector::from_fn(n, |a2, _| if a2 == i { 1.0 } else { 0.0 })).collect();
    // Span-closure of a seed under v -> v * e_k.
    let closure = |seed: &DVector<f64>| -> Result<Vec<DVector<f64>>> {
        let mut span: Vec<DVector<f64>> = vec![seed / seed.norm()];
        let mut frontier = span.clone();
        let mut iterations = 0;
        while !frontier.is_empty() {
            iterations += 1;
            if iterations > n * n {
                return Err(GeoError::DecompositionFailure);
            }
            let mut next = Vec::new();
            for v in &frontier {
                for e in &basis_vecs {
                    let mut w = alg.star(v, e);
                    for s in &span {
                        let c = s.dot(&w);
                        w -= s * c;
                    }
                    let nrm = w.norm();
                    if nrm > 1e-9 {
                        let w = w / nrm;
                        span.push(w.clone());
                        next.push(w);
                    }
                }
            }
            frontier = next;
        }
        Ok(span)
    };
    let mut ideals: Vec<Vec<DVector<f64>>> = Vec::new();
    for seed in &seeds {
        // Skip seeds already inside a found ideal.
        let mut inside = false;
        for ideal in &ideals {
            let mut w = seed.clone();
            for s in ideal {
                let c = s.dot(&w);
                w -= s * c;
            }
            if w.norm() < 1e-9 {
                inside = true;
                break;
            }
        }
        if inside {
            continue;
        }
        let span = closure(seed)?;
        // Merge with any overlapping ideal.
        let mut merged = span;
        loop {
            let mut merge_idx = None;
            for (i, ideal) in ideals.iter().enumerate() {
                let overlaps = ideal.iter().any(|v| {
                    let mut w = v.clone();
                    for s in &merged {
                        let c = s.dot(&w);
                        w -= s * c;
                    }
                    w.norm() < 1e-9
                });
                if overlaps {
                    merge_idx = Some(i);
                    break;
                }
            }
            match merge_idx {
                Some(i) => {
                    let other = ideals.remove(i);
                    for v in other {
                        let mut w = v;
                        for s in &merged {
                            let c = s.dot(&w);
                            w -= s * c;
                        }
                        let nrm = w.norm();
                        if nrm > 1e-9 {
                            merged.push(w / nrm);
                        }
                    }
                }
                None => break,
            }
        }
        ideals.push(merged);
    }
    let to_matrix = |vecs: &[DVector<f64>]| {
        let mut m = DMatrix::zeros(n, vecs.len());
        for (j, v) in vecs.iter().enumerate() {
            m.set_column(j, v);
        }
        m
    };
    let ideals: Vec<DMatrix<f64>> = ideals.iter().map(|v| to_matrix(v)).collect();
    // Verify: cross products between distinct ideals vanish, and the
    // ideals together with the kernel span everything.
    for a1 in 0..ideals.len() {
        for a2 in (a1 + 1)..ideals.len() {
            for i in 0..ideals[a1].ncols() {
                for j in 0..ideals[a2].ncols() {
                    let x = ideals[a1].column(i).into_owned();
                    let y = ideals[a2].column(j).into_owned();
                    if alg.star(&x, &y).amax() > tol::IDENTITY {
                        return Err(GeoError::InternalInconsistency(
                            "distinct ideals do not multiply to zero".into(),
                        ));
                    }
                }
            }
        }
    }
    let total: usize = ideals.iter().map(|m| m.ncols()).sum::<usize>() + eigen.kernel.ncols();
    if total != n {
        return Err(GeoError::DecompositionFailure);
    }
    Ok(IdealDecomposition { abelian: eigen.kernel.clone(), ideals, eigen })
}

/// True iff the positive eigenspaces of `A` coincide with the minimal
/// ideals as subspaces. When true, the commutation identity
/// `A(X*Y) = AX*Y = X*AY` is additionally verified.
pub fn is_qra(alg: &QrAlgebra, decomp: &IdealDecomposition) -> Result<bool> {
    if decomp.eigen.spaces.len() != decomp.ideals.len() {
        return Ok(false);
    }
    // Match eigenspaces with ideals by projector distance.
    for (_, espace) in &decomp.eigen.spaces {
        let pe = espace * espace.transpose();
        let found = decomp.ideals.iter().any(|ideal| {
            if ideal.ncols() != espace.ncols() {
                return false;
            }
            let pi = ideal * ideal.transpose();
            (&pe - pi).amax() <= 1e-8
        });
        if !found {
            return Ok(false);
        }
    }
    // Prop-style commutation check.
    let a = fundamental_operator(alg);
    let n = alg.dim();
    let mut res = 0.0f64;
    for i in 0..n {
        let ei = DVector::from_fn(n, |x, _| if x == i { 1.0 } else { 0.0 });
        for j in 0..n {
            let ej = DVector::from_fn(n, |x, _| if x == j { 1.0 } else { 0.0 });
            let lhs = &a * alg.star(&ei, &ej);
            let mid = alg.star(&(&a * &ei), &ej);
            let rhs = alg.star(&ei, &(&a * &ej));
            res = res.max((&lhs - &mid).amax()).max((lhs - rhs).amax());
        }
    }
    if res > tol::IDENTITY {
        return Err(GeoError::InternalInconsistency(format!(
            "QRA commutation identity fails by {res:.3e}"
        )));
    }
    Ok(true)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tensor::epsilon3;

    fn su2_h() -> Tensor3 {
        epsilon3().scale(0.5)
    }

    #[test]
    fn abelian_from_zero_h() {
        let frame = FrameMetric::euclidean(3);
        let alg = from_h(&Tensor3::zeros(3), &frame).unwrap();
        let a = fundamental_operator(&alg);
        assert!(a.amax() < 1e-14);
        let d = ideal_decompose(&alg).unwrap();
        assert_eq!(d.abelian.ncols(), 3);
        assert!(d.ideals.is_empty());
    }

    #[test]
    fn su2_algebra_axioms_and_operator() {
        let frame = FrameMetric::euclidean(3);
        let alg = from_h(&su2_h(), &frame).unwrap();
        let (anti, assoc) = alg.axiom_residuals();
        assert!(anti < 1e-14 && assoc < 1e-14);
        let a = fundamental_operator(&alg);
        assert!((a - DMatrix::identity(3, 3) * 0.5).amax() < 1e-13);
        let d = ideal_decompose(&alg).unwrap();
        assert_eq!(d.ideals.len(), 1);
        assert_eq!(d.abelian.ncols(), 0);
        assert!(is_qra(&alg, &d).unwrap());
    }

    #[test]
    fn rejects_h_with_symmetric_part() {
        let frame = FrameMetric::euclidean(3);
        let mut h = Tensor3::zeros(3);
        // T1-type: h_{XYZ} = <X,Y> b(Z) - <X,Z> b(Y), b = e1*.
        for i in 0..3 {
            for j in 0..3 {
                for k in 0..3 {
                    let d = |a: usize, b: usize| if a == b { 1.0 } else { 0.0 };
                    h[(i, j, k)] = d(i, j) * d(k, 0) - d(i, k) * d(j, 0);
                }
            }
        }
        assert!(matches!(from_h(&h, &frame), Err(GeoError::NotNearlyParticular { .. })));
    }

    #[test]
    fn block_sums_and_qra_detection() {
        // su(2) + su(2) with different metric scaling: two ideals with
        // distinct eigenvalues -> QRA. Equal scaling merges the
        // eigenvalues -> one eigenspace, two ideals, not a QRA.
        let build = |scale: f64| -> (Tensor3, FrameMetric) {
            let n = 6;
            let eps = epsilon3();
            let mut h = Tensor3::zeros(n);
            for i in 0..3 {
                for j in 0..3 {
                    for k in 0..3 {
                        h[(i, j, k)] = 0.5 * eps[(i, j, k)];
                        h[(i + 3, j + 3, k + 3)] = 0.5 * eps[(i, j, k)] * scale;
                    }
                }
            }
            (h, FrameMetric::euclidean(n))
        };
        let (h, frame) = build(2.0);
        let alg = from_h(&h, &frame).unwrap();
        let d = ideal_decompose(&alg).unwrap();
        assert_eq!(d.ideals.len(), 2);
        assert_eq!(d.eigen.spaces.len(), 2);
        assert!(is_qra(&alg, &d).unwrap());

        let (h, frame) = build(1.0);
        let alg = from_h(&h, &frame).unwrap();
        let d = ideal_decompose(&alg).unwrap();
        assert_eq!(d.ideals.len(), 2);
        assert_eq!(d.eigen.spaces.len(), 1);
        assert!(!is_qra(&alg, &d).unwrap());
    }

    #[test]
    fn su2_plus_abelian_line() {
        let mut h = Tensor3::zeros(4);
        let eps = epsilon3();
        for i in 0..3 {
            for j in 0..3 {
                for k in 0..3 {
                    h[(i, j, k)] = 0.5 * eps[(i, j, k)];
                }
            }
        }
        let frame = FrameMetric::euclidean(4);
        let alg = from_h(&h, &frame).unwrap();
        let a = fundamental_operator(&alg);
        let expected = DMatrix::from_diagonal(&DVector::from_vec(vec![0.5, 0.5, 0.5, 0.0]));
        assert!((a - expected).amax() < 1e-13);
        let d = ideal_decompose(&alg).unwrap();
        assert_eq!(d.abelian.ncols(), 1);
        assert_eq!(d.ideals.len(), 1);
        assert!(is_qra(&alg, &d).unwrap());
    }

    #[test]
    fn clustered_eigenvalues_merge() {
        let frame = FrameMetric::euclidean(3);
        let a = DMatrix::from_diagonal(&DVector::from_vec(vec![
            0.5,
            0.5 + 1e-12,
            0.25,
        ]));
        let s = spectral_split(&a, &frame);
        assert_eq!(s.spaces.len(), 2);
        let dims: Vec<usize> = s.spaces.iter().map(|(_, m)| m.ncols()).collect();
        assert!(dims.contains(&2) && dims.contains(&1));
    }
}

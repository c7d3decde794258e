//! Dense tensor containers and the pointwise multilinear toolkit.
//!
//! Conventions fixed project-wide:
//! - endomorphisms act by columns: `A * e_j = sum_i A[(i,j)] e_i`;
//! - rank-3 tensors are fully covariant, `h[(i,j,k)] = h(e_i, e_j, e_k)`,
//!   with the second-fundamental convention `h_{XYZ} = <h_X Y, Z>`;
//! - inner products of tensors are always taken in a g-orthonormal frame.

use nalgebra::{DMatrix, DVector};

use crate::error::{GeoError, Result};
use crate::tol;

pub type Endo = DMatrix<f64>;
pub type Covector = DVector<f64>;

/// A finite-dimensional real inner-product space given by its Gram matrix.
///
/// Construction validates symmetry and positive definiteness and caches an
/// orthonormalizing change of basis `B` with `B^T G B = I`; the columns of
/// `B` are an orthonormal frame expressed in the original coordinates.
#[derive(Debug, Clone)]
pub struct FrameMetric {
    dim: usize,
    gram: DMatrix<f64>,
    gram_inv: DMatrix<f64>,
    /// Columns form a g-orthonormal frame.
    ortho: DMatrix<f64>,
    ortho_inv: DMatrix<f64>,
}

impl FrameMetric {
    pub fn euclidean(dim: usize) -> Self {
        Self::new(DMatrix::identity(dim, dim)).expect("identity gram is valid")
    }

    pub fn new(gram: DMatrix<f64>) -> Result<Self> {
        let dim = gram.nrows();
        if gram.ncols() != dim || dim == 0 {
            return Err(GeoError::BadMetric("gram matrix must be square and nonempty".into()));
        }
        let asym = (&gram - gram.transpose()).amax();
        if asym > tol::EXACT {
            return Err(GeoError::BadMetric(format!(
                "gram matrix asymmetry {asym:.3e} exceeds {:.0e}",
                tol::EXACT
            )));
        }
        let eig = gram.clone().symmetric_eigen();
        let max_eig = eig.eigenvalues.amax();
        let min_eig = eig.eigenvalues.min();
        if min_eig <= tol::EIGEN_REL * max_eig {
            return Err(GeoError::BadMetric(format!(
                "gram matrix not positive definite (min eigenvalue {min_eig:.3e})"
            )));
        }
        // B = Q diag(1/sqrt(lambda)) has B^T G B = I.
        let mut ortho = eig.eigenvectors.clone();
        for j in 0..dim {
            let s = eig.eigenvalues[j].sqrt();
            for i in 0..dim {
                ortho[(i, j)] /= s;
            }
        }
        let mut ortho_inv = eig.eigenvectors.transpose();
        for i in 0..dim {
            let s = eig.eigenvalues[i].sqrt();
            for j in 0..dim {
                ortho_inv[(i, j)] *= s;
            }
        }
        let gram_inv = &ortho * ortho.transpose();
        Ok(Self { dim, gram, gram_inv, ortho, ortho_inv })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn gram(&self) -> &DMatrix<f64> {
        &self.gram
    }

    pub fn gram_inv(&self) -> &DMatrix<f64> {
        &self.gram_inv
    }

    /// Orthonormalizing change of basis; columns are a g-orthonormal frame.
    pub fn ortho_basis(&self) -> &DMatrix<f64> {
        &self.ortho
    }

    pub fn ortho_basis_inv(&self) -> &DMatrix<f64> {
        &self.ortho_inv
    }

    pub fn is_euclidean(&self) -> bool {
        (&self.gram - DMatrix::identity(self.dim, self.dim)).amax() <= tol::EXACT
    }

    pub fn inner(&self, x: &DVector<f64>, y: &DVector<f64>) -> f64 {
        (x.transpose() * &self.gram * y)[(0, 0)]
    }

    pub fn norm(&self, x: &DVector<f64>) -> f64 {
        self.inner(x, x).max(0.0).sqrt()
    }

    /// Raise the index of a covector: the vector `v` with `<v, .> = beta`.
    pub fn raise(&self, beta: &Covector) -> DVector<f64> {
        &self.gram_inv * beta
    }
}

/// Fully covariant rank-3 tensor `h[(i,j,k)] = h(e_i, e_j, e_k)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor3 {
    n: usize,
    data: Vec<f64>,
}

impl Tensor3 {
    pub fn zeros(n: usize) -> Self {
        Self { n, data: vec![0.0; n * n * n] }
    }

    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize, usize) -> f64) -> Self {
        let mut t = Self::zeros(n);
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    t[(i, j, k)] = f(i, j, k);
                }
            }
        }
        t
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    /// Evaluate on arbitrary vectors by trilinearity.
    pub fn eval(&self, x: &DVector<f64>, y: &DVector<f64>, z: &DVector<f64>) -> f64 {
        let n = self.n;
        let mut acc = 0.0;
        for i in 0..n {
            if x[i] == 0.0 {
                continue;
            }
            for j in 0..n {
                if y[j] == 0.0 {
                    continue;
                }
                for k in 0..n {
                    acc += x[i] * y[j] * z[k] * self[(i, j, k)];
                }
            }
        }
        acc
    }

    /// The slice `h(e_i, e_j, .)` as a covector.
    pub fn slot3(&self, i: usize, j: usize) -> Covector {
        DVector::from_fn(self.n, |k, _| self[(i, j, k)])
    }

    pub fn scale(&self, s: f64) -> Self {
        Self { n: self.n, data: self.data.iter().map(|v| v * s).collect() }
    }

    pub fn add(&self, other: &Self) -> Self {
        assert_eq!(self.n, other.n);
        Self {
            n: self.n,
            data: self.data.iter().zip(&other.data).map(|(a, b)| a + b).collect(),
        }
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.scale(-1.0))
    }

    /// Plain Frobenius norm of the coefficient array (coordinate norm).
    pub fn coeff_norm(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn amax(&self) -> f64 {
        self.data.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }

    /// Residual of the metric-skew symmetry `h_{ijk} = -h_{ikj}`.
    pub fn metric_skew_residual(&self) -> f64 {
        let n = self.n;
        let mut r = 0.0f64;
        for i in 0..n {
            for j in 0..n {
                for k in j..n {
                    r = r.max((self[(i, j, k)] + self[(i, k, j)]).abs());
                }
            }
        }
        r
    }

    pub fn is_metric_skew(&self) -> bool {
        self.metric_skew_residual() <= tol::EXACT
    }

    /// Pull back along a basis change: `(B*h)(x,y,z) = h(Bx, By, Bz)`.
    pub fn change_basis(&self, b: &DMatrix<f64>) -> Self {
        let n = self.n;
        assert_eq!(b.nrows(), n);
        assert_eq!(b.ncols(), n);
        // Three successive mode contractions.
        let mut t1 = vec![0.0; n * n * n]; // (a, j, k)
        for a in 0..n {
            for i in 0..n {
                let w = b[(i, a)];
                if w == 0.0 {
                    continue;
                }
                for j in 0..n {
                    for k in 0..n {
                        t1[(a * n + j) * n + k] += w * self[(i, j, k)];
                    }
                }
            }
        }
        let mut t2 = vec![0.0; n * n * n]; // (a, b, k)
        for b2 in 0..n {
            for j in 0..n {
                let w = b[(j, b2)];
                if w == 0.0 {
                    continue;
                }
                for a in 0..n {
                    for k in 0..n {
                        t2[(a * n + b2) * n + k] += w * t1[(a * n + j) * n + k];
                    }
                }
            }
        }
        let mut out = Tensor3::zeros(n);
        for c in 0..n {
            for k in 0..n {
                let w = b[(k, c)];
                if w == 0.0 {
                    continue;
                }
                for a in 0..n {
                    for b2 in 0..n {
                        out[(a, b2, c)] += w * t2[(a * n + b2) * n + k];
                    }
                }
            }
        }
        out
    }
}

impl std::ops::Index<(usize, usize, usize)> for Tensor3 {
    type Output = f64;
    fn index(&self, (i, j, k): (usize, usize, usize)) -> &f64 {
        &self.data[(i * self.n + j) * self.n + k]
    }
}

impl std::ops::IndexMut<(usize, usize, usize)> for Tensor3 {
    fn index_mut(&mut self, (i, j, k): (usize, usize, usize)) -> &mut f64 {
        &mut self.data[(i * self.n + j) * self.n + k]
    }
}

/// Fully covariant rank-4 tensor, used for covariant derivatives of
/// rank-3 tensors and for lowered curvature.
#[derive(Debug, Clone)]
pub struct Tensor4 {
    n: usize,
    data: Vec<f64>,
}

impl Tensor4 {
    pub fn zeros(n: usize) -> Self {
        Self { n, data: vec![0.0; n * n * n * n] }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn amax(&self) -> f64 {
        self.data.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }
}

impl std::ops::Index<(usize, usize, usize, usize)> for Tensor4 {
    type Output = f64;
    fn index(&self, (i, j, k, l): (usize, usize, usize, usize)) -> &f64 {
        &self.data[((i * self.n + j) * self.n + k) * self.n + l]
    }
}

impl std::ops::IndexMut<(usize, usize, usize, usize)> for Tensor4 {
    fn index_mut(&mut self, (i, j, k, l): (usize, usize, usize, usize)) -> &mut f64 {
        &mut self.data[((i * self.n + j) * self.n + k) * self.n + l]
    }
}

/// Inner product of two rank-3 tensors over a g-orthonormal frame.
///
/// For the identity gram this is the plain component sum
/// `sum h1_{ijk} h2_{ijk}`; otherwise both tensors are first pulled back
/// to the cached orthonormal frame.
pub fn inner_product(h1: &Tensor3, h2: &Tensor3, frame: &FrameMetric) -> Result<f64> {
    if h1.dim() != frame.dim() || h2.dim() != frame.dim() {
        return Err(GeoError::InputShape(format!(
            "tensor dims {} / {} do not match frame dim {}",
            h1.dim(),
            h2.dim(),
            frame.dim()
        )));
    }
    if frame.is_euclidean() {
        return Ok(h1.data().iter().zip(h2.data()).map(|(a, b)| a * b).sum());
    }
    let b = frame.ortho_basis();
    let a = h1.change_basis(b);
    let c = h2.change_basis(b);
    Ok(a.data().iter().zip(c.data()).map(|(x, y)| x * y).sum())
}

pub fn tensor_norm(h: &Tensor3, frame: &FrameMetric) -> Result<f64> {
    Ok(inner_product(h, h, frame)?.max(0.0).sqrt())
}

/// Action of a g-orthogonal endomorphism: `(a.h)(X,Y,Z) = h(a^-1 X, a^-1 Y, a^-1 Z)`.
pub fn act_orthogonal(a: &Endo, h: &Tensor3, frame: &FrameMetric) -> Result<Tensor3> {
    let n = frame.dim();
    if a.nrows() != n || a.ncols() != n || h.dim() != n {
        return Err(GeoError::InputShape("act_orthogonal: dimension mismatch".into()));
    }
    let residual = (a.transpose() * frame.gram() * a - frame.gram()).amax();
    let scale = frame.gram().amax().max(1.0);
    if residual > tol::ORTHO * scale {
        return Err(GeoError::NotOrthogonal { residual });
    }
    let a_inv = a
        .clone()
        .try_inverse()
        .ok_or(GeoError::NotOrthogonal { residual: f64::INFINITY })?;
    Ok(h.change_basis(&a_inv))
}

/// Split into the parts symmetric / antisymmetric in the first two slots.
pub fn split_sym_skew(h: &Tensor3) -> (Tensor3, Tensor3) {
    let n = h.dim();
    let sym = Tensor3::from_fn(n, |i, j, k| 0.5 * (h[(i, j, k)] + h[(j, i, k)]));
    let skew = Tensor3::from_fn(n, |i, j, k| 0.5 * (h[(i, j, k)] - h[(j, i, k)]));
    (sym, skew)
}

/// Contraction over the first two slots in a g-orthonormal frame:
/// `c12(h)(Z) = sum_a h(u_a, u_a, Z)`, returned in original coordinates.
pub fn c12(h: &Tensor3, frame: &FrameMetric) -> Covector {
    let n = frame.dim();
    let ginv = frame.gram_inv();
    DVector::from_fn(n, |m, _| {
        let mut acc = 0.0;
        for i in 0..n {
            for j in 0..n {
                let w = ginv[(i, j)];
                if w != 0.0 {
                    acc += w * h[(i, j, m)];
                }
            }
        }
        acc
    })
}

/// Cyclic sum over the three slots.
pub fn cyclic_sum(h: &Tensor3) -> Tensor3 {
    Tensor3::from_fn(h.dim(), |i, j, k| h[(i, j, k)] + h[(j, k, i)] + h[(k, i, j)])
}

/// Metric adjoint `F*` with `<F* X, Y> = <X, F Y>`, i.e. `G F* = F^T G`.
pub fn adjoint(f: &Endo, frame: &FrameMetric) -> Endo {
    frame.gram_inv() * f.transpose() * frame.gram()
}

/// Whether `F` is g-self-adjoint.
pub fn is_self_adjoint(f: &Endo, frame: &FrameMetric) -> bool {
    let scale = f.amax().max(1.0);
    (adjoint(f, frame) - f).amax() <= tol::EIGEN_REL * scale
}

/// Unique g-self-adjoint PSD square root, via eigendecomposition in the
/// orthonormal frame. Eigenvalues in `[-1e-10 * scale, 0)` are clamped.
pub fn psd_sqrt(m: &Endo, frame: &FrameMetric) -> Result<Endo> {
    let n = frame.dim();
    if m.nrows() != n || m.ncols() != n {
        return Err(GeoError::InputShape("psd_sqrt: dimension mismatch".into()));
    }
    let b = frame.ortho_basis();
    let b_inv = frame.ortho_basis_inv();
    let sym = b_inv * m * b;
    let asym = (&sym - sym.transpose()).amax();
    let scale = sym.amax().max(1.0);
    if asym > tol::EIGEN_REL * scale * 10.0 {
        return Err(GeoError::InputShape(
            "psd_sqrt: operator is not g-self-adjoint".into(),
        ));
    }
    let sym = 0.5 * (&sym + sym.transpose());
    let eig = sym.symmetric_eigen();
    let floor = -tol::EIGEN_REL * scale;
    let mut root = DMatrix::zeros(n, n);
    for j in 0..n {
        let lam = eig.eigenvalues[j];
        if lam < floor {
            return Err(GeoError::NotPsd { min_eig: lam });
        }
        let s = lam.max(0.0).sqrt();
        for i in 0..n {
            root[(i, j)] = eig.eigenvectors[(i, j)] * s;
        }
    }
    let root = root * eig.eigenvectors.transpose();
    Ok(b * root * b_inv)
}

/// The totally antisymmetric epsilon tensor on n = 3.
pub fn epsilon3() -> Tensor3 {
    let mut e = Tensor3::zeros(3);
    e[(0, 1, 2)] = 1.0;
    e[(1, 2, 0)] = 1.0;
    e[(2, 0, 1)] = 1.0;
    e[(0, 2, 1)] = -1.0;
    e[(2, 1, 0)] = -1.0;
    e[(1, 0, 2)] = -1.0;
    e
}

#[cfg(test)]
mod tests {
    use super::*;

    fn frame2_diag14() -> FrameMetric {
        FrameMetric::new(DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, 4.0]))).unwrap()
    }

    #[test]
    fn inner_product_zero_and_single_component() {
        let frame = FrameMetric::euclidean(3);
        let z = Tensor3::zeros(3);
        assert_eq!(inner_product(&z, &z, &frame).unwrap(), 0.0);

        let mut h = Tensor3::zeros(3);
        h[(0, 1, 2)] = 1.0;
        assert!((inner_product(&h, &h, &frame).unwrap() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn inner_product_half_epsilon() {
        // 6 permutations, each (1/2)^2: total 1.5.
        let frame = FrameMetric::euclidean(3);
        let h = epsilon3().scale(0.5);
        assert!((inner_product(&h, &h, &frame).unwrap() - 1.5).abs() < 1e-14);
    }

    #[test]
    fn act_identity_and_permutation_sign() {
        let frame = FrameMetric::euclidean(3);
        let eps = epsilon3();
        let id = DMatrix::identity(3, 3);
        let same = act_orthogonal(&id, &eps, &frame).unwrap();
        assert!(same.sub(&eps).amax() < 1e-15);

        // Swap e1 <-> e2: odd permutation flips the sign of epsilon.
        let mut p = DMatrix::zeros(3, 3);
        p[(0, 1)] = 1.0;
        p[(1, 0)] = 1.0;
        p[(2, 2)] = 1.0;
        let swapped = act_orthogonal(&p, &eps, &frame).unwrap();
        assert!(swapped.add(&eps).amax() < 1e-14);
    }

    #[test]
    fn act_rejects_non_orthogonal() {
        let frame = FrameMetric::euclidean(2);
        let mut a = DMatrix::identity(2, 2);
        a[(0, 0)] = 2.0;
        let h = Tensor3::zeros(2);
        assert!(matches!(
            act_orthogonal(&a, &h, &frame),
            Err(GeoError::NotOrthogonal { .. })
        ));
    }

    #[test]
    fn split_reassembles_and_epsilon_is_pure_skew() {
        let eps = epsilon3();
        let (sym, skew) = split_sym_skew(&eps);
        assert!(sym.amax() < 1e-15);
        assert!(skew.sub(&eps).amax() < 1e-15);
        assert!(sym.add(&skew).sub(&eps).amax() < 1e-15);
    }

    #[test]
    fn c12_on_epsilon_vanishes() {
        let frame = FrameMetric::euclidean(3);
        assert!(c12(&epsilon3(), &frame).amax() < 1e-15);
    }

    #[test]
    fn c12_on_t1_form_gives_n_minus_1_beta() {
        // h_{XYZ} = <X,Y> beta(Z) - <X,Z> beta(Y) with xi = e_1, n = 4.
        let n = 4;
        let frame = FrameMetric::euclidean(n);
        let beta = DVector::from_fn(n, |i, _| if i == 0 { 1.0 } else { 0.0 });
        let h = Tensor3::from_fn(n, |i, j, k| {
            let d = |a: usize, b: usize| if a == b { 1.0 } else { 0.0 };
            d(i, j) * beta[k] - d(i, k) * beta[j]
        });
        let c = c12(&h, &frame);
        let expected = beta.scale((n - 1) as f64);
        assert!((c - expected).amax() < 1e-14);
    }

    #[test]
    fn cyclic_sum_of_epsilon_is_three_epsilon() {
        let eps = epsilon3();
        assert!(cyclic_sum(&eps).sub(&eps.scale(3.0)).amax() < 1e-15);
    }

    #[test]
    fn cyclic_telescoping_vanishes() {
        // h = u - shift(u) has zero cyclic sum.
        let mut u = Tensor3::zeros(3);
        u[(0, 1, 2)] = 2.0;
        u[(1, 1, 0)] = -0.5;
        u[(2, 0, 0)] = 1.25;
        let shifted = Tensor3::from_fn(3, |i, j, k| u[(j, k, i)]);
        let h = u.sub(&shifted);
        assert!(cyclic_sum(&h).amax() < 1e-15);
    }

    #[test]
    fn adjoint_is_transpose_for_identity_gram() {
        let frame = FrameMetric::euclidean(3);
        let f = DMatrix::from_row_slice(3, 3, &[1.0, 2.0, 0.0, -1.0, 0.5, 3.0, 0.0, 1.0, 1.0]);
        assert!((adjoint(&f, &frame) - f.transpose()).amax() < 1e-14);
    }

    #[test]
    fn adjoint_defining_identity_and_involution() {
        // gram = diag(1,4), F = [[0,1],[0,0]]: G F* = F^T G gives F* = [[0,0],[1/4,0]].
        let frame = frame2_diag14();
        let f = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 0.0, 0.0]);
        let fs = adjoint(&f, &frame);
        let expected = DMatrix::from_row_slice(2, 2, &[0.0, 0.0, 0.25, 0.0]);
        assert!((&fs - expected).amax() < 1e-14);
        // Defining identity <F* X, Y> = <X, F Y> on basis vectors.
        for i in 0..2 {
            for j in 0..2 {
                let ei = DVector::from_fn(2, |a, _| if a == i { 1.0 } else { 0.0 });
                let ej = DVector::from_fn(2, |a, _| if a == j { 1.0 } else { 0.0 });
                let lhs = frame.inner(&(&fs * &ei), &ej);
                let rhs = frame.inner(&ei, &(&f * &ej));
                assert!((lhs - rhs).abs() < 1e-14);
            }
        }
        assert!((adjoint(&fs, &frame) - &f).amax() < 1e-14);
    }

    #[test]
    fn adjoint_of_orthogonal_is_inverse() {
        let frame = FrameMetric::euclidean(2);
        let c = (0.3f64).cos();
        let s = (0.3f64).sin();
        let r = DMatrix::from_row_slice(2, 2, &[c, -s, s, c]);
        let rs = adjoint(&r, &frame);
        assert!((rs * &r - DMatrix::identity(2, 2)).amax() < 1e-14);
    }

    #[test]
    fn psd_sqrt_diagonal_and_identity() {
        let frame = FrameMetric::euclidean(2);
        let id = DMatrix::identity(2, 2);
        assert!((psd_sqrt(&id, &frame).unwrap() - &id).amax() < 1e-14);
        let m = DMatrix::from_diagonal(&DVector::from_vec(vec![4.0, 9.0]));
        let expected = DMatrix::from_diagonal(&DVector::from_vec(vec![2.0, 3.0]));
        assert!((psd_sqrt(&m, &frame).unwrap() - expected).amax() < 1e-13);
    }

    #[test]
    fn psd_sqrt_rejects_negative() {
        let frame = FrameMetric::euclidean(2);
        let m = DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, -0.5]));
        assert!(matches!(psd_sqrt(&m, &frame), Err(GeoError::NotPsd { .. })));
    }

    #[test]
    fn gram_validation() {
        let bad = DMatrix::from_row_slice(2, 2, &[1.0, 0.5, 0.0, 1.0]);
        assert!(FrameMetric::new(bad).is_err());
        let sing = DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 1.0, 1.0]);
        assert!(FrameMetric::new(sing).is_err());
    }
}

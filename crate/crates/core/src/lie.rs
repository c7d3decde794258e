//! The left-invariant computational arena: a Lie algebra with structure
//! constants plus an inner product, the Levi-Civita connection via the
//! Koszul formula, and frame-level curvature / covariant derivatives.
//!
//! All tensor fields here have constant frame components, so covariant
//! derivatives reduce to algebraic contractions against the connection
//! coefficients.

use nalgebra::{DMatrix, DVector};

use crate::error::{GeoError, Result};
use crate::tensor::{Covector, Endo, FrameMetric, Tensor3, Tensor4};
use crate::tol;

/// Bracket coefficients `[e_i, e_j] = sum_k c[(i,j,k)] e_k`.
pub type Bracket = Tensor3;

/// Connection coefficients `nabla_{e_i} e_j = sum_k gamma[(i,j,k)] e_k`.
#[derive(Debug, Clone)]
pub struct Connection {
    gamma: Tensor3,
}

impl Connection {
    pub fn zero(n: usize) -> Self {
        Self { gamma: Tensor3::zeros(n) }
    }

    pub fn from_tensor(gamma: Tensor3) -> Self {
        Self { gamma }
    }

    pub fn dim(&self) -> usize {
        self.gamma.dim()
    }

    pub fn coeffs(&self) -> &Tensor3 {
        &self.gamma
    }

    pub fn coeffs_mut(&mut self) -> &mut Tensor3 {
        &mut self.gamma
    }

    /// `nabla_{e_i} e_j` as a vector.
    pub fn basis_apply(&self, i: usize, j: usize) -> DVector<f64> {
        DVector::from_fn(self.dim(), |k, _| self.gamma[(i, j, k)])
    }

    /// Bilinear extension `nabla_X Y` for constant-component fields.
    pub fn apply(&self, x: &DVector<f64>, y: &DVector<f64>) -> DVector<f64> {
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
                    out[k] += w * self.gamma[(i, j, k)];
                }
            }
        }
        out
    }

    /// `nabla_{e_i}` as an endomorphism (columns `nabla_{e_i} e_j`).
    pub fn direction(&self, i: usize) -> Endo {
        let n = self.dim();
        DMatrix::from_fn(n, n, |k, j| self.gamma[(i, j, k)])
    }

    /// Max violation of metric compatibility,
    /// `<nabla_i e_j, e_k> + <e_j, nabla_i e_k>` over all triples.
    pub fn metric_residual(&self, frame: &FrameMetric) -> f64 {
        let n = self.dim();
        let g = frame.gram();
        let mut r = 0.0f64;
        for i in 0..n {
            let gi = self.direction(i);
            let m = g * &gi;
            for j in 0..n {
                for k in 0..n {
                    r = r.max((m[(k, j)] + m[(j, k)]).abs());
                }
            }
        }
        r
    }
}

/// A metric Lie algebra in a fixed frame.
#[derive(Debug, Clone)]
pub struct FrameModel {
    frame: FrameMetric,
    bracket: Bracket,
}

/// Residuals reported by [`validate_lie`].
#[derive(Debug, Clone, Copy)]
pub struct LieDiagnostics {
    pub antisymmetry: f64,
    pub jacobi: f64,
}

impl LieDiagnostics {
    pub fn passes(&self) -> bool {
        self.antisymmetry <= tol::EIGEN_REL && self.jacobi <= tol::EIGEN_REL
    }
}

impl FrameModel {
    pub fn new(frame: FrameMetric, bracket: Bracket) -> Result<Self> {
        if bracket.dim() != frame.dim() {
            return Err(GeoError::InputShape("bracket dim does not match frame".into()));
        }
        Ok(Self { frame, bracket })
    }

    pub fn abelian(frame: FrameMetric) -> Self {
        let n = frame.dim();
        Self { frame, bracket: Tensor3::zeros(n) }
    }

    pub fn dim(&self) -> usize {
        self.frame.dim()
    }

    pub fn frame(&self) -> &FrameMetric {
        &self.frame
    }

    pub fn bracket(&self) -> &Bracket {
        &self.bracket
    }

    /// `[X, Y]` by bilinearity.
    pub fn lie_bracket(&self, x: &DVector<f64>, y: &DVector<f64>) -> DVector<f64> {
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
                    out[k] += w * self.bracket[(i, j, k)];
                }
            }
        }
        out
    }

    pub fn basis_vector(&self, i: usize) -> DVector<f64> {
        DVector::from_fn(self.dim(), |a, _| if a == i { 1.0 } else { 0.0 })
    }
}

/// Antisymmetry and Jacobi residuals of the structure constants.
pub fn validate_lie(model: &FrameModel) -> LieDiagnostics {
    let n = model.dim();
    let c = model.bracket();
    let mut anti = 0.0f64;
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                anti = anti.max((c[(i, j, k)] + c[(j, i, k)]).abs());
            }
        }
    }
    let mut jac = 0.0f64;
    for i in 0..n {
        for j in 0..n {
            for l in 0..n {
                for k in 0..n {
                    let mut acc = 0.0;
                    for m in 0..n {
                        acc += c[(i, j, m)] * c[(m, l, k)]
                            + c[(j, l, m)] * c[(m, i, k)]
                            + c[(l, i, m)] * c[(m, j, k)];
                    }
                    jac = jac.max(acc.abs());
                }
            }
        }
    }
    LieDiagnostics { antisymmetry: anti, jacobi: jac }
}

/// Levi-Civita connection of a left-invariant metric, by the Koszul formula
/// `2 <nabla_X Y, Z> = <[X,Y],Z> - <[Y,Z],X> + <[Z,X],Y>`.
pub fn levi_civita(model: &FrameModel) -> Connection {
    let n = model.dim();
    let g = model.frame().gram();
    let ginv = model.frame().gram_inv();
    let c = model.bracket();
    // <[e_a, e_b], e_k> with the index k lowered by the gram matrix.
    let low = |a: usize, b: usize, k: usize| -> f64 {
        let mut acc = 0.0;
        for m in 0..n {
            acc += c[(a, b, m)] * g[(m, k)];
        }
        acc
    };
    let mut gamma = Tensor3::zeros(n);
    for i in 0..n {
        for j in 0..n {
            let rhs = DVector::from_fn(n, |k, _| {
                0.5 * (low(i, j, k) - low(j, k, i) + low(k, i, j))
            });
            let col = ginv * rhs;
            for k in 0..n {
                gamma[(i, j, k)] = col[k];
            }
        }
    }
    Connection::from_tensor(gamma)
}

/// Frame curvature `R(e_i, e_j) e_k` of a connection with constant
/// coefficients: `Gamma_i Gamma_j - Gamma_j Gamma_i - Gamma_{[e_i, e_j]}`
/// applied to `e_k`. Layout: `R[(i,j,k,l)]` is the `e_l` component.
pub fn riemann_curvature(conn: &Connection, model: &FrameModel) -> Tensor4 {
    let n = model.dim();
    let mut r = Tensor4::zeros(n);
    for i in 0..n {
        let gi = conn.direction(i);
        for j in 0..n {
            let gj = conn.direction(j);
            let bij = model.lie_bracket(&model.basis_vector(i), &model.basis_vector(j));
            for k in 0..n {
                let ek = model.basis_vector(k);
                let v = &gi * conn.apply(&model.basis_vector(j), &ek)
                    - &gj * conn.apply(&model.basis_vector(i), &ek)
                    - conn.apply(&bij, &ek);
                for l in 0..n {
                    r[(i, j, k, l)] = v[l];
                }
            }
        }
    }
    r
}

/// Lowered curvature `R_{ijkl} = <R(e_i,e_j) e_k, e_l>`.
pub fn lower_curvature(r: &Tensor4, frame: &FrameMetric) -> Tensor4 {
    let n = frame.dim();
    let g = frame.gram();
    let mut out = Tensor4::zeros(n);
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                for l in 0..n {
                    let mut acc = 0.0;
                    for m in 0..n {
                        acc += r[(i, j, k, m)] * g[(m, l)];
                    }
                    out[(i, j, k, l)] = acc;
                }
            }
        }
    }
    out
}

/// First Bianchi residual `max | sigma_{ijk} R(e_i,e_j)e_k |` for a
/// torsion-free connection.
pub fn bianchi_residual(r: &Tensor4) -> f64 {
    let n = r.dim();
    let mut res = 0.0f64;
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                for l in 0..n {
                    let s = r[(i, j, k, l)] + r[(j, k, i, l)] + r[(k, i, j, l)];
                    res = res.max(s.abs());
                }
            }
        }
    }
    res
}

/// Covariant derivative of an endomorphism with constant components:
/// `(nabla_{e_i} P)(e_j) = Gamma(e_i, P e_j) - P Gamma(e_i, e_j)`.
/// Layout of the result: `(i, j, k)` is the `e_k` component of `(nabla_i P)(e_j)`.
pub fn cov_endo(conn: &Connection, p: &Endo) -> Tensor3 {
    let n = conn.dim();
    let mut out = Tensor3::zeros(n);
    for i in 0..n {
        let gi = conn.direction(i);
        let d = &gi * p - p * &gi;
        for j in 0..n {
            for k in 0..n {
                out[(i, j, k)] = d[(k, j)];
            }
        }
    }
    out
}

/// `(nabla_{e_i} P)` in direction `i`, as an endomorphism.
pub fn cov_endo_dir(conn: &Connection, p: &Endo, i: usize) -> Endo {
    let gi = conn.direction(i);
    &gi * p - p * &gi
}

/// Covariant derivative of a covariant rank-3 tensor with constant
/// components: Leibniz with a minus sign on each slot.
/// Layout: `(l, i, j, k) = (nabla_{e_l} h)(e_i, e_j, e_k)`.
pub fn cov_tensor3(conn: &Connection, h: &Tensor3) -> Tensor4 {
    let n = conn.dim();
    let mut out = Tensor4::zeros(n);
    for l in 0..n {
        let gl = conn.direction(l);
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    let mut acc = 0.0;
                    for m in 0..n {
                        acc -= gl[(m, i)] * h[(m, j, k)];
                        acc -= gl[(m, j)] * h[(i, m, k)];
                        acc -= gl[(m, k)] * h[(i, j, m)];
                    }
                    out[(l, i, j, k)] = acc;
                }
            }
        }
    }
    out
}

/// Covariant derivative of a covector: `(nabla_{e_l} b)(e_i) = -b(Gamma(e_l, e_i))`.
pub fn cov_covector(conn: &Connection, b: &Covector) -> DMatrix<f64> {
    let n = conn.dim();
    DMatrix::from_fn(n, n, |l, i| {
        let mut acc = 0.0;
        for m in 0..n {
            acc -= conn.coeffs()[(l, i, m)] * b[m];
        }
        acc
    })
}

/// `max |(nabla g)|` of a connection, treating the gram matrix as a
/// covariant 2-tensor with constant components.
pub fn cov_metric_residual(conn: &Connection, frame: &FrameMetric) -> f64 {
    let n = conn.dim();
    let g = frame.gram();
    let mut r = 0.0f64;
    for l in 0..n {
        let gl = conn.direction(l);
        let m = g * &gl;
        for i in 0..n {
            for j in 0..n {
                r = r.max((m[(i, j)] + m[(j, i)]).abs());
            }
        }
    }
    r
}

/// Direct frame torsion `T(e_i, e_j) = Gamma(e_i,e_j) - Gamma(e_j,e_i) - [e_i,e_j]`,
/// layout `(i, j, k)` = `e_k` component.
pub fn frame_torsion(conn: &Connection, model: &FrameModel) -> Tensor3 {
    let n = model.dim();
    Tensor3::from_fn(n, |i, j, k| {
        conn.coeffs()[(i, j, k)] - conn.coeffs()[(j, i, k)] - model.bracket()[(i, j, k)]
    })
}

/// Torsion-free residual of the Levi-Civita output:
/// `Gamma^k_{ij} - Gamma^k_{ji} - c^k_{ij}`.
pub fn torsion_free_residual(conn: &Connection, model: &FrameModel) -> f64 {
    frame_torsion(conn, model).amax()
}

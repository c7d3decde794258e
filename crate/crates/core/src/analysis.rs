//! Derived invariants of a structure: curvature relation, Nijenhuis
//! tensors, trace forms of almost contact metric structures, the r1/r2
//! operators, quasi-homogeneity, polar decomposition, geodesic evolution
//! of affinors, conformal changes and structures induced by sigma
//! affinors.

use nalgebra::{DMatrix, DVector};

use crate::error::{GeoError, Result};
use crate::lie::{cov_endo_dir, cov_tensor3, Connection, FrameModel};
use crate::structures::{DecoratedStructure, StructureTensor};
use crate::tensor::{self, Covector, Endo, FrameMetric, Tensor3};
use crate::tol;

/// `h` as a family of endomorphisms `h_{e_i}` (value index raised).
pub fn h_directions(h: &Tensor3, frame: &FrameMetric) -> Vec<Endo> {
    let n = h.dim();
    let ginv = frame.gram_inv();
    (0..n)
        .map(|i| {
            DMatrix::from_fn(n, n, |k, j| {
                let mut acc = 0.0;
                for m in 0..n {
                    acc += h[(i, j, m)] * ginv[(m, k)];
                }
                acc
            })
        })
        .collect()
}

/// Max residual of the curvature relation
/// `R_XY Z = Rbar_XY Z + (nabla_bar_X h)(Y,Z) - (nabla_bar_Y h)(X,Z)
///  + [h_X, h_Y] Z + h_{Tbar_X Y} Z`
/// over all frame triples.
pub fn curvature_relation_check(
    model: &FrameModel,
    nabla: &Connection,
    nabla_bar: &Connection,
    h: &Tensor3,
) -> f64 {
    let n = model.dim();
    let frame = model.frame();
    let r = crate::lie::riemann_curvature(nabla, model);
    let r_bar = crate::lie::riemann_curvature(nabla_bar, model);
    let hdir = h_directions(h, frame);
    let torsion = crate::lie::frame_torsion(nabla_bar, model);
    // (nabla_bar_l h)_i as a matrix: D_l h_i - h_i D_l - sum_m (D_l)_{mi} h_m.
    let dirs: Vec<Endo> = (0..n).map(|l| nabla_bar.direction(l)).collect();
    let cov_h = |l: usize, i: usize| -> Endo {
        let mut m = &dirs[l] * &hdir[i] - &hdir[i] * &dirs[l];
        for a in 0..n {
            let w = dirs[l][(a, i)];
            if w != 0.0 {
                m -= w * &hdir[a];
            }
        }
        m
    };
    let mut res = 0.0f64;
    for i in 0..n {
        for j in 0..n {
            let comm = &hdir[i] * &hdir[j] - &hdir[j] * &hdir[i];
            let dih = cov_h(i, j);
            let djh = cov_h(j, i);
            let mut h_tors = DMatrix::<f64>::zeros(n, n);
            for m in 0..n {
                let w = torsion[(i, j, m)];
                if w != 0.0 {
                    h_tors += w * &hdir[m];
                }
            }
            for k in 0..n {
                for l in 0..n {
                    let lhs = r[(i, j, k, l)];
                    let rhs = r_bar[(i, j, k, l)]
                        + dih[(l, k)]
                        - djh[(l, k)]
                        + comm[(l, k)]
                        + h_tors[(l, k)];
                    res = res.max((lhs - rhs).abs());
                }
            }
        }
    }
    res
}

/// Nijenhuis tensor of an affinor on a frame model, layout
/// `(i, j, k)` = `e_k` component of `N(e_i, e_j)`.
pub fn nijenhuis(f: &Endo, model: &FrameModel) -> Tensor3 {
    let n = model.dim();
    let mut out = Tensor3::zeros(n);
    for i in 0..n {
        let ei = model.basis_vector(i);
        let fei = f * &ei;
        for j in 0..n {
            let ej = model.basis_vector(j);
            let fej = f * &ej;
            let v = model.lie_bracket(&fei, &fej) - f * model.lie_bracket(&fei, &ej)
                - f * model.lie_bracket(&ei, &fej)
                + f * (f * model.lie_bracket(&ei, &ej));
            for k in 0..n {
                out[(i, j, k)] = v[k];
            }
        }
    }
    out
}

/// Trace forms, exterior derivatives and coderivatives of an a.c.m.s.
#[derive(Debug, Clone)]
pub struct AcmsForms {
    /// `Phi(X, Y) = <X, F Y>`.
    pub phi: DMatrix<f64>,
    /// `(nabla_X Phi)(Y, Z) = <Y, (nabla_X F) Z>`, layout `(i, j, k)`.
    pub nabla_phi: Tensor3,
    /// `d eta` as an antisymmetric matrix.
    pub d_eta: DMatrix<f64>,
    /// `3 dPhi = cyclic sum of nabla Phi`.
    pub d_phi: Tensor3,
    pub delta_phi: Covector,
    pub delta_eta: f64,
    pub beta: Covector,
    pub beta_bar: Covector,
    /// Residuals of the internal consistency identities.
    pub diagnostics: AcmsFormDiagnostics,
}

#[derive(Debug, Clone, Copy)]
pub struct AcmsFormDiagnostics {
    /// `delta eta = beta(xi)`.
    pub delta_eta_vs_beta: f64,
    /// `delta Phi(X) = 2 beta(F X) + h_{xi xi F X}` on `V`.
    pub delta_phi_on_v: f64,
    /// `delta Phi(xi) = beta_bar(xi)`.
    pub delta_phi_at_xi: f64,
    /// Reconstruction of `h` from `nabla Phi` and `nabla eta`.
    pub reconstruction: f64,
}

/// Compute all a.c.m.s. forms in the adapted orthonormal basis and verify
/// the consistency identities against the second fundamental tensor.
pub fn acms_forms(
    dec: &DecoratedStructure,
    nabla: &Connection,
    h: &Tensor3,
    frame: &FrameMetric,
) -> Result<AcmsForms> {
    let (f, xi) = match &dec.structure {
        StructureTensor::AlmostContact { f, xi } => (f, xi),
        _ => {
            return Err(GeoError::InputShape(
                "acms_forms requires an almost contact metric structure".into(),
            ))
        }
    };
    let n_total = frame.dim();
    let npairs = dec.pairs();
    let g = frame.gram();
    let phi = g * f;
    // nabla Phi via (nabla_i F), lowered in the first slot of the value.
    let mut nabla_phi = Tensor3::zeros(n_total);
    for i in 0..n_total {
        let df = cov_endo_dir(nabla, f, i);
        let low = g * df;
        for j in 0..n_total {
            for k in 0..n_total {
                nabla_phi[(i, j, k)] = low[(j, k)];
            }
        }
    }
    let d_phi = tensor::cyclic_sum(&nabla_phi);
    // nabla eta: (nabla_X eta) Y = <Y, nabla_X xi>.
    let nabla_eta = DMatrix::from_fn(n_total, n_total, |i, j| {
        let dxi = nabla.direction(i) * xi;
        let ej = DVector::from_fn(n_total, |a, _| if a == j { 1.0 } else { 0.0 });
        frame.inner(&ej, &dxi)
    });
    let d_eta = DMatrix::from_fn(n_total, n_total, |i, j| {
        0.5 * (nabla_eta[(i, j)] - nabla_eta[(j, i)])
    });
    let q = dec
        .adapted
        .as_ref()
        .expect("validated a.c.m.s. carries an adapted basis");
    let e_col = |a: usize| q.column(a).into_owned();
    let eval_phi = |w: &DVector<f64>, u: &DVector<f64>, x: &DVector<f64>| nabla_phi.eval(w, u, x);
    // delta Phi(X) = -sum_a (nabla_{u_a} Phi)(u_a, X) over the adapted
    // orthonormal basis (including xi).
    let delta_phi = DVector::from_fn(n_total, |m, _| {
        let em = DVector::from_fn(n_total, |a, _| if a == m { 1.0 } else { 0.0 });
        let mut acc = 0.0;
        for a in 0..n_total {
            let u = e_col(a);
            acc -= eval_phi(&u, &u, &em);
        }
        acc
    });
    // delta eta = -sum over the V part of the adapted basis.
    let mut delta_eta = 0.0;
    for a in 0..2 * npairs {
        let u = e_col(a);
        let du = {
            let mut acc = DVector::zeros(n_total);
            for i in 0..n_total {
                if u[i] != 0.0 {
                    acc += u[i] * (nabla.direction(i) * xi);
                }
            }
            acc
        };
        delta_eta -= frame.inner(&u, &du);
    }
    // beta, beta_bar per the adapted trace sums.
    let beta = DVector::from_fn(n_total, |m, _| {
        let em = DVector::from_fn(n_total, |a, _| if a == m { 1.0 } else { 0.0 });
        let mut acc = 0.0;
        for i in 0..npairs {
            let e = e_col(i);
            let fe = e_col(npairs + i);
            acc += h.eval(&e, &e, &em) + h.eval(&fe, &fe, &em);
        }
        acc
    });
    let beta_bar = DVector::from_fn(n_total, |m, _| {
        let em = DVector::from_fn(n_total, |a, _| if a == m { 1.0 } else { 0.0 });
        let mut acc = 0.0;
        for i in 0..npairs {
            let e = e_col(i);
            let fe = e_col(npairs + i);
            acc += h.eval(&e, &fe, &em) - h.eval(&fe, &e, &em);
        }
        acc
    });
    // Consistency identities.
    let beta_xi = {
        let mut acc = 0.0;
        for m in 0..n_total {
            acc += beta[m] * xi[m];
        }
        acc
    };
    let dg1 = (delta_eta - beta_xi).abs();
    let mut dg2 = 0.0f64;
    for a in 0..2 * npairs {
        let x = e_col(a);
        let fx = f * &x;
        let lhs = {
            let mut acc = 0.0;
            for m in 0..n_total {
                acc += delta_phi[m] * x[m];
            }
            acc
        };
        let beta_fx = {
            let mut acc = 0.0;
            for m in 0..n_total {
                acc += beta[m] * fx[m];
            }
            acc
        };
        let h_xixifx = h.eval(xi, xi, &fx);
        dg2 = dg2.max((lhs - 2.0 * beta_fx - h_xixifx).abs());
    }
    let dg3 = {
        let lhs = {
            let mut acc = 0.0;
            for m in 0..n_total {
                acc += delta_phi[m] * xi[m];
            }
            acc
        };
        let rhs = {
            let mut acc = 0.0;
            for m in 0..n_total {
                acc += beta_bar[m] * xi[m];
            }
            acc
        };
        (lhs - rhs).abs()
    };
    // Reconstruction: h_{XYZ} = (nabla_X Phi)(Y, FZ)/2
    //   + eta(Y) (nabla_X eta) Z / 2 - eta(Z) (nabla_X eta) Y.
    let eta = g * xi;
    let mut dg4 = 0.0f64;
    for i in 0..n_total {
        for j in 0..n_total {
            for k in 0..n_total {
                let mut phi_term = 0.0;
                for m in 0..n_total {
                    phi_term += nabla_phi[(i, j, m)] * f[(m, k)];
                }
                let rhs =
                    0.5 * phi_term + 0.5 * eta[j] * nabla_eta[(i, k)] - eta[k] * nabla_eta[(i, j)];
                dg4 = dg4.max((h[(i, j, k)] - rhs).abs());
            }
        }
    }
    let diagnostics = AcmsFormDiagnostics {
        delta_eta_vs_beta: dg1,
        delta_phi_on_v: dg2,
        delta_phi_at_xi: dg3,
        reconstruction: dg4,
    };
    let worst = dg1.max(dg2).max(dg3).max(dg4);
    if worst > tol::IDENTITY {
        return Err(GeoError::InternalInconsistency(format!(
            "a.c.m.s. form identities violated (max residual {worst:.3e})"
        )));
    }
    Ok(AcmsForms {
        phi,
        nabla_phi,
        d_eta,
        d_phi,
        delta_phi,
        delta_eta,
        beta,
        beta_bar,
        diagnostics,
    })
}

/// The induced Ricci form `ri(X, Y) = sum_k <(R_bar - R)_{X, E_k} Y, E_k>`
/// over a g-orthonormal frame, returned as a bilinear form matrix. For
/// nearly particular h this equals `<r1 X, Y>`.
pub fn induced_ricci(
    model: &FrameModel,
    nabla: &Connection,
    nabla_bar: &Connection,
) -> DMatrix<f64> {
    let n = model.dim();
    let frame = model.frame();
    let r = crate::lie::riemann_curvature(nabla, model);
    let rb = crate::lie::riemann_curvature(nabla_bar, model);
    let g = frame.gram();
    let ginv = frame.gram_inv();
    // Lowered difference <(R_bar - R)(e_i, e_j) e_m, e_l>.
    let mut diff = crate::tensor::Tensor4::zeros(n);
    for i in 0..n {
        for j in 0..n {
            for m in 0..n {
                for l in 0..n {
                    let mut acc = 0.0;
                    for q in 0..n {
                        acc += (rb[(i, j, m, q)] - r[(i, j, m, q)]) * g[(q, l)];
                    }
                    diff[(i, j, m, l)] = acc;
                }
            }
        }
    }
    // Sum over an orthonormal frame contracts slots 2 and 4 with G^{-1}.
    DMatrix::from_fn(n, n, |x, y| {
        let mut acc = 0.0;
        for j in 0..n {
            for l in 0..n {
                let w = ginv[(j, l)];
                if w != 0.0 {
                    acc += w * diff[(x, j, y, l)];
                }
            }
        }
        acc
    })
}

/// The operators `r1`, `r2` of `h` together with kernel/image bases.
#[derive(Debug, Clone)]
pub struct RicciInvariants {
    pub r1: Endo,
    pub r2: Endo,
    pub ker_r1: DMatrix<f64>,
    pub im_r1: DMatrix<f64>,
}

/// `<r1 X, Y> = sum_k <h_X u_k, h_Y u_k>` over a g-orthonormal frame,
/// and the analogue `r2` built from the symmetric part of `h`.
pub fn ricci_like_invariants(h: &Tensor3, frame: &FrameMetric) -> RicciInvariants {
    let n = frame.dim();
    let b = frame.ortho_basis();
    let b_inv = frame.ortho_basis_inv();
    let ho = h.change_basis(b);
    let (sym, _) = tensor::split_sym_skew(&ho);
    let gram_op = |t: &Tensor3| -> DMatrix<f64> {
        DMatrix::from_fn(n, n, |x, y| {
            let mut acc = 0.0;
            for k in 0..n {
                for m in 0..n {
                    acc += t[(x, k, m)] * t[(y, k, m)];
                }
            }
            acc
        })
    };
    let r1_o = gram_op(&ho);
    let r2_o = gram_op(&sym);
    let eig = r1_o.clone().symmetric_eigen();
    let max_e = eig.eigenvalues.amax().max(1.0);
    let mut ker_cols = Vec::new();
    let mut im_cols = Vec::new();
    for j in 0..n {
        if eig.eigenvalues[j].abs() <= tol::EIGEN_REL * max_e {
            ker_cols.push(eig.eigenvectors.column(j).into_owned());
        } else {
            im_cols.push(eig.eigenvectors.column(j).into_owned());
        }
    }
    let stack = |cols: &[DVector<f64>]| {
        let mut m = DMatrix::zeros(n, cols.len());
        for (j, c) in cols.iter().enumerate() {
            m.set_column(j, c);
        }
        b * m
    };
    RicciInvariants {
        r1: b * r1_o * b_inv,
        r2: b * r2_o * b_inv,
        ker_r1: stack(&ker_cols),
        im_r1: stack(&im_cols),
    }
}

/// Quasi-homogeneity: `max |nabla_bar h|`, plus `max |nabla_bar r1|` when
/// the structure is quasi-homogeneous (Theorem-level consequence).
#[derive(Debug, Clone, Copy)]
pub struct QuasiHomogeneity {
    pub residual: f64,
    pub r1_parallel: Option<f64>,
}

pub fn quasi_homogeneity(
    h: &Tensor3,
    nabla_bar: &Connection,
    frame: &FrameMetric,
) -> QuasiHomogeneity {
    let residual = cov_tensor3(nabla_bar, h).amax();
    let r1_parallel = if residual <= tol::IDENTITY {
        let inv = ricci_like_invariants(h, frame);
        let n = frame.dim();
        let mut r = 0.0f64;
        for i in 0..n {
            r = r.max(cov_endo_dir(nabla_bar, &inv.r1, i).amax());
        }
        Some(r)
    } else {
        None
    };
    QuasiHomogeneity { residual, r1_parallel }
}

/// Polar decomposition `F = S P` with `S` g-orthogonal and `P` the
/// g-self-adjoint PSD root of `F* F`. Unique only for nonsingular `F`.
pub fn polar_decompose(f: &Endo, frame: &FrameMetric) -> Result<(Endo, Endo)> {
    let n = frame.dim();
    if f.nrows() != n || f.ncols() != n {
        return Err(GeoError::InputShape("polar_decompose: dimension mismatch".into()));
    }
    let f_o = frame.ortho_basis_inv() * f * frame.ortho_basis();
    let sv = f_o.svd(false, false);
    let smax = sv.singular_values.max();
    let smin = sv.singular_values.min();
    if smin <= 1e-10 * smax.max(1.0) {
        return Err(GeoError::SingularAffinor);
    }
    let fs = tensor::adjoint(f, frame);
    let p = tensor::psd_sqrt(&(&fs * f), frame)?;
    let p_inv = p.clone().try_inverse().ok_or(GeoError::SingularAffinor)?;
    let s = f * p_inv;
    Ok((s, p))
}

/// Result of evolving an affinor along a geodesic.
#[derive(Debug, Clone)]
pub struct Evolved {
    pub endo: Endo,
    /// Residual of the compatibility `P P' + P' P = 0`.
    pub compat_residual: f64,
    /// Estimated truncation error of the series evaluation.
    pub truncation_estimate: f64,
}

/// `P(t) = cos(t P') P0 + sin(t P')`, with matrix cosine/sine evaluated by
/// a scaled Taylor series with double-angle recombination.
pub fn evolve_along_geodesic(p0: &Endo, p0_prime: &Endo, t: f64) -> Result<Evolved> {
    let n = p0.nrows();
    if p0_prime.nrows() != n || p0.ncols() != n || p0_prime.ncols() != n {
        return Err(GeoError::InputShape("evolve: dimension mismatch".into()));
    }
    let compat_residual = (p0 * p0_prime + p0_prime * p0).amax();
    let c = p0_prime * t;
    let norm = c.amax() * n as f64; // crude bound on the operator norm
    let mut halvings = 0u32;
    let mut scale = 1.0;
    while norm * scale > 0.5 && halvings < 60 {
        scale *= 0.5;
        halvings += 1;
    }
    let a = &c * scale;
    const ORDER: usize = 20;
    let id = DMatrix::<f64>::identity(n, n);
    let a2 = &a * &a;
    // cos(A) = sum (-1)^m A^{2m} / (2m)!, sin(A) = sum (-1)^m A^{2m+1} / (2m+1)!.
    let mut cos_a = id.clone();
    let mut sin_coeff = id.clone();
    let mut term = id.clone();
    for m in 1..=ORDER {
        term = &term * &a2 / ((2 * m - 1) as f64 * (2 * m) as f64);
        if m % 2 == 1 {
            cos_a -= &term;
            sin_coeff -= &term / (2 * m + 1) as f64;
        } else {
            cos_a += &term;
            sin_coeff += &term / (2 * m + 1) as f64;
        }
    }
    let mut sin_a = sin_coeff * &a;
    // Taylor remainder at |A| <= 1/2 after ORDER terms, amplified by the
    // doubling steps.
    let next = 2 * (ORDER + 1);
    let mut fact = 1.0f64;
    for m in 1..=next {
        fact *= m as f64;
    }
    let tail = (0.5f64).powi(next as i32) / fact * 4.0f64.powi(halvings as i32);
    if tail > 1e-9 {
        return Err(GeoError::NonConvergence { estimate: tail });
    }
    for _ in 0..halvings {
        let cos2 = &cos_a * &cos_a * 2.0 - &id;
        let sin2 = &sin_a * &cos_a * 2.0;
        cos_a = cos2;
        sin_a = sin2;
    }
    Ok(Evolved {
        endo: &cos_a * p0 + &sin_a,
        compat_residual,
        truncation_estimate: tail,
    })
}

/// The conformal-failure tensor `mu` of an almost Hermitian structure,
/// fully covariant: `mu_{ijk} = <mu(e_i, e_j), e_k>`.
pub fn mu_tensor(
    dec: &DecoratedStructure,
    nabla: &Connection,
    h: &Tensor3,
    frame: &FrameMetric,
) -> Result<Tensor3> {
    let j = match &dec.structure {
        StructureTensor::AlmostHermitian { j } => j,
        _ => return Err(GeoError::InputShape("mu_tensor requires an almost Hermitian structure".into())),
    };
    let dim = frame.dim();
    let npairs = dim / 2;
    if npairs < 2 {
        return Err(GeoError::DegenerateDimension(
            "mu needs dim >= 4 (the 1/(n-1) factor degenerates)".into(),
        ));
    }
    let g = frame.gram();
    // beta = c12(h) over an orthonormal frame; delta Phi(X) = -2 beta(J X).
    let beta = tensor::c12(h, frame);
    let delta_phi: Covector = -2.0 * (j.transpose() * &beta);
    // (nabla_X Phi)(Y, Z) = <(nabla_X J) Y, Z> for Phi(Y, Z) = <J Y, Z>.
    // delta Phi composed with J, as a covector.
    let delta_phi_j: Covector = j.transpose() * &delta_phi;
    let mut out = Tensor3::zeros(dim);
    let gj = g * j; // <e_i, J e_a> = gj[(i, a)] ... note Phi(X,Y) = <J X, Y> here
    for i in 0..dim {
        let dj = cov_endo_dir(nabla, j, i);
        // <(nabla_i J) e_a, e_b> = (G dJ)[(b, a)].
        let low = g * &dj;
        for a in 0..dim {
            for bq in 0..dim {
                let corr = g[(i, a)] * delta_phi[bq] - g[(i, bq)] * delta_phi[a]
                    - gj[(i, a)] * delta_phi_j[bq]
                    + gj[(i, bq)] * delta_phi_j[a];
                out[(i, a, bq)] = low[(bq, a)] + corr / (2.0 * (npairs as f64 - 1.0));
            }
        }
    }
    Ok(out)
}

/// Conformal perturbation of a connection:
/// `Gamma'(X, Y) = Gamma(X, Y) + drho(X) Y + drho(Y) X - <X, Y> grad rho`.
pub fn conformal_perturb(nabla: &Connection, drho: &Covector, frame: &FrameMetric) -> Connection {
    let n = nabla.dim();
    let grad = frame.raise(drho);
    let g = frame.gram();
    let mut gamma = nabla.coeffs().clone();
    for i in 0..n {
        for jj in 0..n {
            for k in 0..n {
                let mut add = 0.0;
                if jj == k {
                    add += drho[i];
                }
                if i == k {
                    add += drho[jj];
                }
                add -= g[(i, jj)] * grad[k];
                gamma[(i, jj, k)] += add;
            }
        }
    }
    Connection::from_tensor(gamma)
}

/// Structure induced by a sigma affinor through its spectrum:
/// no fixed directions and fully complex spectrum gives an almost
/// Hermitian structure; a one-dimensional fixed space with complex
/// complement gives an a.c.m.s.; eigenvalues contained in {1, -1} give an
/// almost product structure; complex spectrum mixed with -1 (and no fixed
/// space) gives an f-structure. Imaginary parts are taken positive.
pub fn induce_from_affinor(dec: &DecoratedStructure, frame: &FrameMetric) -> Result<StructureTensor> {
    let s = match &dec.structure {
        StructureTensor::SigmaAffinor { s, .. } => s,
        _ => return Err(GeoError::InputShape("induce_from_affinor requires a sigma affinor".into())),
    };
    let n = frame.dim();
    let b = frame.ortho_basis();
    let b_inv = frame.ortho_basis_inv();
    let s_o = b_inv * s * b;
    let sym = 0.5 * (&s_o + s_o.transpose());
    let eig = sym.symmetric_eigen();
    // Cluster cos(theta) eigenvalues.
    let mut clusters: Vec<(f64, Vec<usize>)> = Vec::new();
    for j in 0..n {
        let lam = eig.eigenvalues[j];
        match clusters.iter_mut().find(|(c, _)| (lam - *c).abs() <= 1e-8) {
            Some((_, idx)) => idx.push(j),
            None => clusters.push((lam, vec![j])),
        }
    }
    let mut fixed_dim = 0usize;
    let mut minus_dim = 0usize;
    let mut complex_blocks: Vec<(f64, Vec<usize>)> = Vec::new();
    for (c, idx) in &clusters {
        if (*c - 1.0).abs() <= 1e-8 {
            fixed_dim += idx.len();
        } else if (*c + 1.0).abs() <= 1e-8 {
            minus_dim += idx.len();
        } else {
            complex_blocks.push((*c, idx.clone()));
        }
    }
    let has_complex = !complex_blocks.is_empty();
    // Projector onto a cluster, in original coordinates.
    let proj = |idx: &[usize]| -> Endo {
        let mut p = DMatrix::<f64>::zeros(n, n);
        for &j in idx {
            let col = eig.eigenvectors.column(j);
            for r in 0..n {
                for c2 in 0..n {
                    p[(r, c2)] += col[r] * col[c2];
                }
            }
        }
        b * p * b_inv
    };
    // J-part on the complex blocks: sum 1/b_i (S - a_i I) pi_i with b_i > 0.
    let complex_j = |blocks: &[(f64, Vec<usize>)]| -> Endo {
        let mut jm = DMatrix::<f64>::zeros(n, n);
        for (a, idx) in blocks {
            let bi = (1.0 - a * a).max(0.0).sqrt();
            let pi = proj(idx);
            jm += (s - DMatrix::identity(n, n) * *a) * pi / bi;
        }
        jm
    };
    if !has_complex {
        // Eigenvalues within {1, -1}: S^2 = I, S itself is the product
        // structure.
        return Ok(StructureTensor::AlmostProduct { p: s.clone() });
    }
    if fixed_dim == 0 && minus_dim == 0 {
        return Ok(StructureTensor::AlmostHermitian { j: complex_j(&complex_blocks) });
    }
    if fixed_dim + minus_dim == 1 {
        // A one-dimensional mirror (eigenvalue 1 or -1) with a fully
        // complex complement induces an a.c.m.s.: F vanishes on the
        // mirror and rotates V.
        let xi = if fixed_dim == 1 {
            dec.l_basis.column(0).into_owned()
        } else {
            // Unit vector of the -1 eigenspace.
            let mut found = None;
            for (c, idx) in &clusters {
                if (*c + 1.0).abs() <= 1e-8 {
                    let col = eig.eigenvectors.column(idx[0]).into_owned();
                    found = Some(b * col);
                }
            }
            found.expect("minus eigenspace present")
        };
        let f = complex_j(&complex_blocks);
        return Ok(StructureTensor::AlmostContact { f, xi });
    }
    if fixed_dim == 0 {
        // -1 eigenvalues of higher multiplicity plus rotations: an
        // f-structure vanishing on the -1 space.
        return Ok(StructureTensor::FStructure { f: complex_j(&complex_blocks) });
    }
    Err(GeoError::UnsupportedSpectrum(format!(
        "fixed space of dim {fixed_dim} with complex blocks ({} of them) and {} eigenvalue(s) -1",
        complex_blocks.len(),
        minus_dim
    )))
}

/// The four a.c.m.s. Nijenhuis-type tensors, each computed from the Lie
/// derivative definitions and from the expressions in `h`; both routes
/// must agree.
#[derive(Debug, Clone)]
pub struct NTensors {
    /// `N^{(1)}(X,Y) = N(F)(X,Y) + 2 d eta(X,Y) xi`, layout `(i,j,k)`.
    pub n1: Tensor3,
    /// `N^{(2)}(X,Y)`, an antisymmetric scalar 2-form.
    pub n2: DMatrix<f64>,
    /// `N^{(3)} = L_xi F` as an endomorphism.
    pub n3: Endo,
    /// `N^{(4)} = L_xi eta` as a covector.
    pub n4: Covector,
    pub route_disagreement: f64,
}

pub fn n_tensors(
    dec: &DecoratedStructure,
    model: &FrameModel,
    h: &Tensor3,
) -> Result<NTensors> {
    let (f, xi) = match &dec.structure {
        StructureTensor::AlmostContact { f, xi } => (f, xi),
        _ => return Err(GeoError::InputShape("n_tensors requires an a.c.m.s.".into())),
    };
    let n = model.dim();
    let frame = model.frame();
    let nf = nijenhuis(f, model);
    let hdir = h_directions(h, frame);
    let h_of = |x: &DVector<f64>, y: &DVector<f64>| -> DVector<f64> {
        let mut acc = DVector::zeros(n);
        for i in 0..n {
            if x[i] != 0.0 {
                acc += x[i] * (&hdir[i] * y);
            }
        }
        acc
    };
    // Lie-derivative route.
    let mut n1 = Tensor3::zeros(n);
    for i in 0..n {
        let ei = model.basis_vector(i);
        for jj in 0..n {
            let ej = model.basis_vector(jj);
            let two_deta = -frame.inner(&model.lie_bracket(&ei, &ej), xi);
            for k in 0..n {
                n1[(i, jj, k)] = nf[(i, jj, k)] + two_deta * xi[k];
            }
        }
    }
    let n2 = DMatrix::from_fn(n, n, |i, jj| {
        let ei = model.basis_vector(i);
        let ej = model.basis_vector(jj);
        let lfx = -frame.inner(&model.lie_bracket(&(f * &ei), &ej), xi);
        let lfy = -frame.inner(&model.lie_bracket(&(f * &ej), &ei), xi);
        lfx - lfy
    });
    let n3 = {
        let mut m = DMatrix::<f64>::zeros(n, n);
        for jj in 0..n {
            let ej = model.basis_vector(jj);
            let v = model.lie_bracket(xi, &(f * &ej)) - f * model.lie_bracket(xi, &ej);
            m.set_column(jj, &v);
        }
        m
    };
    let n4 = DVector::from_fn(n, |i, _| {
        let ei = model.basis_vector(i);
        -frame.inner(&model.lie_bracket(xi, &ei), xi)
    });
    // h route (the closed forms in h).
    let mut worst = 0.0f64;
    // N(F) via h: h_{FX} F Y - h_{FY} F X + F^2 (h_X Y - h_Y X)
    //   + F (h_Y F X - h_{FX} Y + h_{FY} X - h_X F Y).
    for i in 0..n {
        let x = model.basis_vector(i);
        let fx = f * &x;
        for jj in 0..n {
            let y = model.basis_vector(jj);
            let fy = f * &y;
            let nf_h = h_of(&fx, &fy) - h_of(&fy, &fx)
                + f * (f * (h_of(&x, &y) - h_of(&y, &x)))
                + f * (h_of(&y, &fx) - h_of(&fx, &y) + h_of(&fy, &x) - h_of(&x, &fy));
            let two_deta_h = h.eval(&y, &x, xi) - h.eval(&x, &y, xi);
            for k in 0..n {
                let lhs = n1[(i, jj, k)];
                let rhs = nf_h[k] + two_deta_h * xi[k];
                worst = worst.max((lhs - rhs).abs());
            }
            // N2 via h: (h_{Y FX xi} - h_{FX Y xi}) - (h_{X FY xi} - h_{FY X xi}).
            let n2_h = h.eval(&y, &fx, xi) - h.eval(&fx, &y, xi)
                - (h.eval(&x, &fy, xi) - h.eval(&fy, &x, xi));
            worst = worst.max((n2[(i, jj)] - n2_h).abs());
        }
        // N3 via h: 2 (h^-_xi F X - F h^-_xi X).
        let hm_xi = |v: &DVector<f64>| -> DVector<f64> {
            let mut swapped = DVector::zeros(n);
            for a in 0..n {
                if v[a] != 0.0 {
                    swapped += v[a] * (&hdir[a] * xi);
                }
            }
            0.5 * (h_of(xi, v) - swapped)
        };
        let x = model.basis_vector(i);
        let fx = f * &x;
        let n3_h = 2.0 * (hm_xi(&fx) - f * hm_xi(&x));
        for k in 0..n {
            worst = worst.max((n3[(k, i)] - n3_h[k]).abs());
        }
        let n4_h = -h.eval(xi, &x, xi);
        worst = worst.max((n4[i] - n4_h).abs());
    }
    if worst > tol::IDENTITY {
        return Err(GeoError::InternalInconsistency(format!(
            "N-tensor routes disagree by {worst:.3e}"
        )));
    }
    Ok(NTensors { n1, n2, n3, n4, route_disagreement: worst })
}

//! Pins the conformal correction of the almost product second
//! fundamental tensor on an explicit counterexample: on the flat plane
//! with P = diag(1,-1) and d rho = dx, the perturbed connection gives
//! h'(Y, Y) = -<Y, Y> pi1(grad rho) on the (-1)-distribution (the
//! umbilic term), so h is NOT conformally invariant. The full correction
//! is
//!   dh_{XYZ} = drho(pi2 Y)<pi1 X, Z> + drho(pi1 Y)<pi2 X, Z>
//!            - <pi2 X, Y> drho(pi1 Z) - <pi1 X, Y> drho(pi2 Z).

use nalgebra::{DMatrix, DVector};
use riemgeo::analysis;
use riemgeo::lie::{levi_civita, FrameModel};
use riemgeo::structures::{self, StructureTensor};
use riemgeo::tensor::{FrameMetric, Tensor3};

#[test]
fn almost_product_conformal_umbilic_correction() {
    // Flat R^2, P = diag(1,-1), h = 0. Conformal change with drho = dx.
    let model = FrameModel::abelian(FrameMetric::euclidean(2));
    let p = DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, -1.0]));
    let dec = structures::validate_structure(&StructureTensor::AlmostProduct { p }, model.frame()).unwrap();
    let nabla = levi_civita(&model);
    let bar = structures::canonical_connection(&dec, &nabla, model.frame()).unwrap();
    let h = structures::second_fundamental(&dec, &nabla, &bar, model.frame()).unwrap();
    assert!(h.amax() == 0.0);
    let drho = DVector::from_vec(vec![1.0, 0.0]);
    let pert = analysis::conformal_perturb(&nabla, &drho, model.frame());
    let bar2 = structures::canonical_connection(&dec, &pert, model.frame()).unwrap();
    let h2 = structures::second_fundamental(&dec, &pert, &bar2, model.frame()).unwrap();
    // Predicted umbilic correction: h'(Y, Y) = -<Y,Y> pi1 grad rho for Y in T^2,
    // i.e. h'_{2,2,1} = -1.
    println!("h2_221 = {}", h2[(1, 1, 0)]);
    println!("h2 max = {}", h2.amax());
    let predicted = Tensor3::from_fn(2, |i, j, k| {
        // delta h_{XYZ} = drho(pi2 Y)<pi1 X, Z> + drho(pi1 Y)<pi2 X, Z>
        //   - <pi2 X, Y> drho(pi1 Z) - <pi1 X, Y> drho(pi2 Z)
        let pi1 = |a: usize| if a == 0 { 1.0 } else { 0.0 };
        let pi2 = |a: usize| if a == 1 { 1.0 } else { 0.0 };
        let d = |a: usize| drho[a];
        d(j) * pi2(j) * pi1(i) * pi1(k) * if i == k { 1.0 } else { 0.0 }
            + d(j) * pi1(j) * pi2(i) * if i == k { 1.0 } else { 0.0 }
            - pi2(i) * if i == j { 1.0 } else { 0.0 } * d(k) * pi1(k)
            - pi1(i) * if i == j { 1.0 } else { 0.0 } * d(k) * pi2(k)
    });
    println!("agreement with analytic correction: {}", h2.sub(&predicted).amax());
    assert!(h2.sub(&predicted).amax() < 1e-14);
}

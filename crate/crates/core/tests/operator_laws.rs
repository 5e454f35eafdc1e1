mod common;

use std::sync::Arc;

use common::{monotone_affine, vector, zero_mean, LAMBDAS};
use monoport_core::elements::{
    capacitor_impedance, inductor_admittance, lift_pointwise, Capacitor, Inductor, LinearResistor,
    PiecewiseLinearResistor, ShockleyDiode,
};
use monoport_core::operators::{add, concatenate, congruence, invert, scale, shift, Relation, RelationRef};
use monoport_core::solvers::{SolveContext, SolverConfig};
use monoport_core::Vector;
use nalgebra::DMatrix;
use proptest::prelude::*;

/// Inner solves of inverses run at 1e-13 so that `apply` is not the error source.
fn resolvent_identity(s: &dyn Relation, u: &Vector) -> Result<(), TestCaseError> {
    let mut ctx = SolveContext::new(SolverConfig::default().with_tol(1e-13).with_max_iter(100_000));
    let y = s.apply_with(u, &mut ctx).map_err(|e| TestCaseError::fail(e.to_string()))?;
    for lambda in LAMBDAS {
        let x = s
            .resolvent(&(u + &y * lambda), lambda)
            .map_err(|e| TestCaseError::fail(format!("λ = {lambda}: {e}")))?;
        let err = (x - u).amax();
        prop_assert!(err <= 1e-8, "{}: λ = {lambda}, error {err:e}", s.label());
    }
    Ok(())
}

fn diode(n: usize) -> RelationRef {
    lift_pointwise(Arc::new(ShockleyDiode::default()), n).unwrap()
}

fn pwl(n: usize) -> RelationRef {
    let law = PiecewiseLinearResistor::new(vec![(-1.0, -1.0), (0.0, 0.0), (1.0, 0.2), (2.0, 3.0)]).unwrap();
    lift_pointwise(Arc::new(law), n).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn affine_resolvent(a in monotone_affine(6, 0.0), u in vector(6, 2.0)) {
        resolvent_identity(a.as_ref(), &u)?;
    }

    #[test]
    fn inverse_affine_resolvent(a in monotone_affine(6, 0.1), u in vector(6, 2.0)) {
        resolvent_identity(invert(a).as_ref(), &u)?;
    }

    #[test]
    fn diode_resolvent(u in vector(8, 1.0)) {
        let u = u.map(|x| x.abs() + 1e-12);
        resolvent_identity(diode(8).as_ref(), &u)?;
    }

    #[test]
    fn diode_inverse_resolvent(v in vector(8, 0.8)) {
        resolvent_identity(invert(diode(8)).as_ref(), &v)?;
    }

    #[test]
    fn pwl_resolvent(u in vector(8, 3.0)) {
        resolvent_identity(pwl(8).as_ref(), &u)?;
        resolvent_identity(invert(pwl(8)).as_ref(), &u)?;
    }

    #[test]
    fn integral_element_resolvents(u in zero_mean(16, 2.0), c in 0.1f64..5.0) {
        resolvent_identity(capacitor_impedance(&Capacitor::new(c).unwrap(), 16, 1.0).unwrap().as_ref(), &u)?;
        resolvent_identity(inductor_admittance(&Inductor::new(c).unwrap(), 16, 1.0).unwrap().as_ref(), &u)?;
    }

    #[test]
    fn sum_scale_shift_resolvents(a in monotone_affine(5, 0.0), u in vector(5, 0.5), y in vector(5, 1.0), alpha in 0.2f64..5.0) {
        let u = u.map(|x| x.abs());
        let s = add(diode(5), a.clone()).unwrap();
        resolvent_identity(s.as_ref(), &u)?;
        resolvent_identity(scale(alpha, s.clone()).unwrap().as_ref(), &u)?;
        resolvent_identity(shift(s, y).unwrap().as_ref(), &u)?;
    }

    #[test]
    fn concatenation_and_congruence_resolvents(u in vector(2, 1.0), r1 in 0.2f64..4.0, r2 in 0.2f64..4.0) {
        let a = lift_pointwise(Arc::new(LinearResistor::new(r1).unwrap()), 1).unwrap();
        let b = lift_pointwise(Arc::new(LinearResistor::new(r2).unwrap()), 1).unwrap();
        let block = concatenate(vec![a, b]).unwrap();
        resolvent_identity(block.as_ref(), &u)?;
        let m = DMatrix::from_row_slice(2, 2, &[1.0, 0.5, -0.5, 1.0]);
        resolvent_identity(congruence(m, block).unwrap().as_ref(), &u)?;
    }

    #[test]
    fn inverse_is_an_involution(a in monotone_affine(5, 0.1), u in vector(5, 1.0)) {
        let back = invert(invert(a.clone()));
        prop_assert!(Arc::ptr_eq(&back, &a));
        prop_assert!((back.apply(&u).unwrap() - a.apply(&u).unwrap()).amax() <= 1e-12);
    }

    #[test]
    fn affine_closure(a in monotone_affine(4, 0.0), b in monotone_affine(4, 0.0), alpha in 0.1f64..3.0, y in vector(4, 1.0)) {
        let s = add(a.clone(), b.clone()).unwrap();
        prop_assert!(s.affine().is_some());
        prop_assert!(scale(alpha, a.clone()).unwrap().affine().is_some());
        let d = shift(a.clone(), y.clone()).unwrap();
        let fa = a.affine().unwrap();
        prop_assert_eq!(d.affine().unwrap().offset(), &(fa.offset() - &y));
        let cb = b.affine().unwrap().constants_affine();
        let ca = fa.constants_affine();
        let cs = s.affine().unwrap().constants_affine();
        prop_assert!(cs.m >= ca.m + cb.m - 1e-10);
        prop_assert!(cs.l <= ca.l + cb.l + 1e-10);
    }

    #[test]
    fn constants_bound_rayleigh_quotients(a in monotone_affine(5, 0.0), xs in prop::collection::vec(vector(5, 1.0), 50)) {
        let fa = a.affine().unwrap();
        let c = fa.constants_affine();
        for x in xs {
            let nx = x.norm();
            if nx < 1e-6 {
                continue;
            }
            let ax = fa.matrix() * &x;
            prop_assert!(x.dot(&ax) >= c.m * nx * nx - 1e-10);
            prop_assert!(ax.norm() <= c.l * nx + 1e-10);
        }
    }
}

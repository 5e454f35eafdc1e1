mod common;

use std::sync::Arc;

use common::{monotone_matrix, LAMBDAS};
use monoport_core::diagnostics::{
    check_monotone, check_resolvent, estimate_cocoercivity, estimate_coercivity, estimate_lipschitz, RandomSampler,
};
use monoport_core::elements::{lift_pointwise, ShockleyDiode};
use monoport_core::operators::{add, invert, AffineOperator, RelationRef};
use nalgebra::DMatrix;
use proptest::prelude::*;

const N: usize = 5;
const TRIALS: usize = 200;

fn linear(a: &DMatrix<f64>) -> RelationRef {
    Arc::new(AffineOperator::linear(a.clone()).unwrap())
}

/// Smallest eigenvalue of the symmetric part.
fn true_coercivity(a: &DMatrix<f64>) -> f64 {
    let sym = (a + a.transpose()) * 0.5;
    sym.symmetric_eigenvalues().min()
}

fn true_lipschitz(a: &DMatrix<f64>) -> f64 {
    a.singular_values().max()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    // Sampled constants can only be looser than the true ones.
    #[test]
    fn estimates_bound_the_true_constants(a in monotone_matrix(N, 0.2), seed in any::<u64>()) {
        let s = linear(&a);
        let m = estimate_coercivity(s.as_ref(), &mut RandomSampler::new(seed), TRIALS).value;
        let l = estimate_lipschitz(s.as_ref(), &mut RandomSampler::new(seed), TRIALS).value;
        prop_assert!(m >= true_coercivity(&a) - 1e-10);
        prop_assert!(l <= true_lipschitz(&a) * (1.0 + 1e-10));
    }

    #[test]
    fn coercive_inverse_is_cocoercive(a in monotone_matrix(N, 0.2), seed in any::<u64>()) {
        let m = true_coercivity(&a);
        let inv = invert(linear(&a));
        let c = estimate_cocoercivity(inv.as_ref(), &mut RandomSampler::new(seed), 50);
        prop_assert!(c.samples > 0);
        prop_assert!(c.value >= m - 1e-8, "cocoercivity {} below {m}", c.value);
    }

    // Same seed, same pairs: pairwise Cauchy-Schwarz gives L ≤ 1/β.
    #[test]
    fn lipschitz_is_bounded_by_inverse_cocoercivity(a in monotone_matrix(N, 0.2), seed in any::<u64>()) {
        let s = linear(&a);
        let beta = estimate_cocoercivity(s.as_ref(), &mut RandomSampler::new(seed), TRIALS).value;
        let l = estimate_lipschitz(s.as_ref(), &mut RandomSampler::new(seed), TRIALS).value;
        prop_assert!(beta > 0.0);
        prop_assert!(l <= (1.0 / beta) * (1.0 + 1e-12));
    }

    #[test]
    fn sums_keep_monotonicity_and_add_coercivity(
        a in monotone_matrix(N, 0.1),
        b in monotone_matrix(N, 0.3),
        seed in any::<u64>(),
    ) {
        let s = add(linear(&a), linear(&b)).unwrap();
        let m = estimate_coercivity(s.as_ref(), &mut RandomSampler::new(seed), TRIALS).value;
        prop_assert!(m >= true_coercivity(&a) + true_coercivity(&b) - 1e-10);

        let d = lift_pointwise(Arc::new(ShockleyDiode::default()), N).unwrap();
        let s = add(linear(&a), d).unwrap();
        let r = check_monotone(s.as_ref(), &mut RandomSampler::new(seed).with_center(0.3), 40);
        prop_assert!(r.passed(), "{r}");
    }

    #[test]
    fn resolvents_of_monotone_matrices_check_out(a in monotone_matrix(N, 0.0), seed in any::<u64>()) {
        let r = check_resolvent(linear(&a).as_ref(), &mut RandomSampler::new(seed), &LAMBDAS, 20);
        prop_assert!(r.passed() && r.worst_margin <= 1e-9, "{r}");
    }
}

#![allow(dead_code)]

use std::sync::Arc;

use monoport_core::elements::ShockleyDiode;
use monoport_core::network::OnePort;
use monoport_core::operators::{AffineOperator, RelationRef};
use monoport_core::Vector;
use nalgebra::DMatrix;
use proptest::prelude::*;

pub const LAMBDAS: [f64; 3] = [0.1, 1.0, 10.0];

/// `PᵀP + (K − Kᵀ) + shift·I` with entries of `P`, `K` in `[−1, 1]`.
pub fn monotone_matrix(n: usize, shift: f64) -> impl Strategy<Value = DMatrix<f64>> {
    (
        prop::collection::vec(-1.0f64..1.0, n * n),
        prop::collection::vec(-1.0f64..1.0, n * n),
    )
        .prop_map(move |(p, k)| {
            let p = DMatrix::from_vec(n, n, p);
            let k = DMatrix::from_vec(n, n, k);
            p.transpose() * &p + (&k - k.transpose()) + DMatrix::identity(n, n) * shift
        })
}

pub fn monotone_affine(n: usize, shift: f64) -> impl Strategy<Value = RelationRef> {
    (monotone_matrix(n, shift), prop::collection::vec(-1.0f64..1.0, n)).prop_map(move |(a, b)| {
        Arc::new(AffineOperator::new(a, Vector::from_vec(b)).unwrap()) as RelationRef
    })
}

pub fn vector(n: usize, amp: f64) -> impl Strategy<Value = Vector> {
    prop::collection::vec(-amp..amp, n).prop_map(Vector::from_vec)
}

pub fn zero_mean(n: usize, amp: f64) -> impl Strategy<Value = Vector> {
    vector(n, amp).prop_map(|v| {
        let m = v.mean();
        v.add_scalar(-m)
    })
}

/// Leaves with positive, moderate parameters.
pub fn leaf(with_diode: bool) -> BoxedStrategy<OnePort> {
    let r = (0.2f64..5.0).prop_map(OnePort::resistor);
    let c = (0.1f64..3.0).prop_map(OnePort::capacitor);
    let l = (0.1f64..3.0).prop_map(OnePort::inductor);
    let pwl = (0.1f64..2.0, 0.0f64..1.0, 0.1f64..3.0).prop_map(|(a, b, c)| {
        OnePort::pwl(vec![(-1.0, -a), (0.0, 0.0), (1.0, b), (2.0, b + c)]).unwrap()
    });
    if with_diode {
        // A bare diode in series with a reactive element has a practically
        // empty domain, so diodes come with a leak.
        let d = (0.5f64..20.0).prop_map(|g| {
            OnePort::parallel(vec![OnePort::diode(ShockleyDiode::default()), OnePort::resistor(g)]).unwrap()
        });
        prop_oneof![r, c, l, pwl, d].boxed()
    } else {
        prop_oneof![r, c, l, pwl].boxed()
    }
}

/// Series/parallel trees of depth at most `depth` (a bare leaf has depth 0).
pub fn tree(depth: u32, with_diode: bool) -> BoxedStrategy<OnePort> {
    leaf(with_diode)
        .prop_recursive(depth, 12, 3, |inner| {
            prop_oneof![
                prop::collection::vec(inner.clone(), 2..=3).prop_map(|cs| OnePort::series(cs).unwrap()),
                prop::collection::vec(inner, 2..=3).prop_map(|cs| OnePort::parallel(cs).unwrap()),
            ]
        })
        .boxed()
}

/// Linear trees (resistors, capacitors, inductors only).
pub fn linear_tree(depth: u32) -> BoxedStrategy<OnePort> {
    let r = (0.2f64..5.0).prop_map(OnePort::resistor);
    let c = (0.1f64..3.0).prop_map(OnePort::capacitor);
    let l = (0.1f64..3.0).prop_map(OnePort::inductor);
    prop_oneof![r, c, l]
        .prop_recursive(depth, 12, 3, |inner| {
            prop_oneof![
                prop::collection::vec(inner.clone(), 2..=3).prop_map(|cs| OnePort::series(cs).unwrap()),
                prop::collection::vec(inner, 2..=3).prop_map(|cs| OnePort::parallel(cs).unwrap()),
            ]
        })
        .boxed()
}

pub fn max_abs(a: &Vector, b: &Vector) -> f64 {
    (a - b).amax()
}

mod common;

use common::*;
use kmsbound::pauli::{PauliOperator, SiteIndex};
use kmsbound::Window;
use proptest::prelude::*;

fn dense(a: &PauliOperator, w: &Window) -> CMatrix {
    a.to_dense(w.sites()).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn multiplication_is_associative(a in pauli_operator(0, 2, 4), b in pauli_operator(0, 2, 4), c in pauli_operator(0, 2, 4)) {
        let left = a.multiply(&b).multiply(&c);
        let right = a.multiply(&b.multiply(&c));
        prop_assert!(op_distance(&left, &right) < 1e-12);
    }

    #[test]
    fn multiplication_is_bilinear(a in pauli_operator(0, 2, 4), b in pauli_operator(0, 2, 4), c in pauli_operator(0, 2, 4), s in coefficient()) {
        let lhs = a.multiply(&(&b + &c.scale(s)));
        let rhs = &a.multiply(&b) + &a.multiply(&c).scale(s);
        prop_assert!(op_distance(&lhs, &rhs) < 1e-12);
    }

    #[test]
    fn commutator_identities(a in pauli_operator(-1, 1, 4), b in pauli_operator(-1, 1, 4)) {
        let ab = a.commutator(&b);
        prop_assert!(op_distance(&ab, &-&b.commutator(&a)) < 1e-12);
        let lhs = ab.adjoint();
        let rhs = b.adjoint().commutator(&a.adjoint());
        prop_assert!(op_distance(&lhs, &rhs) < 1e-12);
        let direct = &a.multiply(&b) - &b.multiply(&a);
        prop_assert!(op_distance(&ab, &direct) < 1e-12);
    }

    #[test]
    fn translation_is_a_homomorphism(a in pauli_operator(0, 2, 4), b in pauli_operator(0, 2, 4), x in -5i32..5) {
        let lhs = a.multiply(&b).translate(&[x]);
        let rhs = a.translate(&[x]).multiply(&b.translate(&[x]));
        prop_assert!(op_distance(&lhs, &rhs) < 1e-12);
        prop_assert_eq!(a.translate(&[x]).translate(&[-x]), a.clone());
        prop_assert_eq!(a.translate(&[0]), a);
    }

    #[test]
    fn dense_representation_is_faithful(a in pauli_operator(0, 5, 5), b in pauli_operator(0, 5, 5)) {
        let w = Window::interval(0, 5);
        let prod = dense(&a.multiply(&b), &w);
        let expect = dense(&a, &w) * dense(&b, &w);
        prop_assert!((prod - expect).norm() < 1e-10);
    }

    #[test]
    fn dense_round_trip(a in pauli_operator(-1, 1, 6)) {
        let w = Window::interval(-1, 1);
        let back = PauliOperator::from_dense(&dense(&a, &w), w.sites());
        prop_assert!(op_distance(&a, &back) < 1e-12);
    }

    #[test]
    fn adjoint_matches_dense(a in pauli_operator(0, 2, 5)) {
        let w = Window::interval(0, 2);
        prop_assert!((dense(&a.adjoint(), &w) - dense(&a, &w).adjoint()).norm() < 1e-12);
    }

    #[test]
    fn hs_inner_is_normalized_trace(a in pauli_operator(0, 2, 4), b in pauli_operator(0, 2, 4)) {
        let w = Window::interval(0, 2);
        let tr = (dense(&a, &w).adjoint() * dense(&b, &w)).trace() / c(8.0, 0.0);
        prop_assert!((a.hs_inner(&b) - tr).norm() < 1e-12);
    }

    #[test]
    fn text_round_trip(a in pauli_operator(-3, 3, 5)) {
        let back: PauliOperator = a.to_string().parse().unwrap();
        prop_assert!(op_distance(&a, &back) < 1e-12);
    }

    #[test]
    fn masks_round_trip(p in pauli_string(-2, 2)) {
        let index = SiteIndex::new(Window::interval(-2, 2).sites());
        let (x, z, _) = p.masks(&index).unwrap();
        prop_assert_eq!(kmsbound::PauliString::from_masks(x, z, &index), p);
    }
}

#[test]
fn hermitian_operator_is_its_own_adjoint() {
    let a = op("(2,0) X0 Z1 + (0.5,0) Y3");
    assert!(a.is_hermitian(1e-14));
    assert_eq!(a.adjoint(), a);
    assert!(!op("(0,1) X0").is_hermitian(1e-14));
    assert_eq!(op("(2,3) Z0 Y1").adjoint(), op("(2,-3) Z0 Y1"));
}

#[test]
fn two_dimensional_strings() {
    let w = Window::level(2, 1);
    let a = op("X0,0 Z1,0 + Y0,-1");
    let b = op("Z0,0 X0,1");
    let prod = dense(&a.multiply(&b), &w);
    assert!((prod - dense(&a, &w) * dense(&b, &w)).norm() < 1e-12);
    assert_eq!(a.translate(&[1, -1]).translate(&[-1, 1]), a);
}

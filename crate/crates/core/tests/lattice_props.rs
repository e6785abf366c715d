mod common;

use common::*;
use kmsbound::lattice::{commutator_with_h, extend_boundary, h_tilde_window, h_window, surface_term};
use kmsbound::{models, InteractionSpec, Window};
use proptest::prelude::*;

fn random_nn() -> impl Strategy<Value = InteractionSpec> {
    (proptest::array::uniform3(proptest::array::uniform3(-1.0f64..1.0)), proptest::array::uniform3(-1.0f64..1.0))
        .prop_map(|(bond, field)| models::nearest_neighbour(bond, field))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn commutator_is_translation_covariant(spec in random_nn(), a in pauli_operator(-1, 1, 4), x in -4i32..4) {
        let lhs = commutator_with_h(&spec, &a.translate(&[x]));
        let rhs = commutator_with_h(&spec, &a).translate(&[x]);
        prop_assert!(op_distance(&lhs, &rhs) < 1e-12);
    }

    #[test]
    fn commutator_matches_windowed_hamiltonian(spec in random_nn(), a in pauli_operator(-1, 1, 4)) {
        let comm = commutator_with_h(&spec, &a);
        let w = Window::interval(-1, 1);
        let direct = h_tilde_window(&spec, &w).commutator(&a);
        prop_assert!(op_distance(&comm, &direct) < 1e-12);
        let ext = extend_boundary(&spec, &w);
        prop_assert!(ext.contains_all(comm.support().iter()));
    }

    #[test]
    fn surface_term_lives_on_the_boundary(spec in random_nn(), lo in -2i32..0, len in 1i32..4) {
        let w = Window::interval(lo, lo + len);
        let s = surface_term(&spec, &w);
        let diff = &h_tilde_window(&spec, &w) - &h_window(&spec, &w);
        prop_assert!(op_distance(&s, &diff) < 1e-14);
        let ext = extend_boundary(&spec, &w);
        for (p, _) in s.terms() {
            prop_assert!(ext.contains_all(p.support()));
            prop_assert!(p.support().any(|c| !w.contains(c)));
        }
        prop_assert!(h_window(&spec, &w).is_hermitian(1e-14));
    }
}

#[test]
fn commuting_specs_annihilate_their_window_hamiltonians() {
    let zz = models::classical_ising();
    assert!(zz.is_commuting());
    for w in [Window::interval(0, 3), Window::interval(-2, 2)] {
        assert!(commutator_with_h(&zz, &h_window(&zz, &w)).is_zero());
    }
    let field = InteractionSpec::parse("dim 1 range 1\nterm -1 Z0 Z1\nterm 0.3 Z0\n").unwrap();
    assert!(field.is_commuting());
    let plaquette = InteractionSpec::parse("dim 1 range 2\nterm -1 Z0 Z1\nterm 0.5 X0 X1 X2\n").unwrap();
    assert!(!plaquette.is_commuting());
    assert!(!models::tf_ising(0.3).is_commuting());
}

#[test]
fn two_dimensional_commutator_covariance() {
    let h = models::tf_ising_2d(0.7);
    let a = op("X0,0 Z0,1 + (0.5,0) Y1,0");
    let lhs = commutator_with_h(&h, &a.translate(&[2, -1]));
    let rhs = commutator_with_h(&h, &a).translate(&[2, -1]);
    assert!(op_distance(&lhs, &rhs) < 1e-12);
}

#[test]
fn spec_file_round_trip() {
    let h = models::tf_ising(0.35);
    let back = InteractionSpec::parse(&h.to_text()).unwrap();
    assert_eq!(back.local_term(), h.local_term());
    let g2 = back.with_param("g", 1.25).unwrap();
    assert!((g2.local_term().coeff(&"X0".parse().unwrap()).re + 1.25).abs() < 1e-15);
}

//! Stock interactions.

use std::collections::BTreeMap;

use crate::lattice::{Coefficient, InteractionSpec, Term};
use crate::pauli::{Coord, Letter, PauliString};

fn term(value: f64, param: Option<&str>, string: PauliString) -> Term {
    Term {
        coeff: Coefficient {
            value,
            param: param.map(str::to_string),
        },
        string,
    }
}

/// `H = -sum Z_i Z_{i+1} - g sum X_i`
pub fn tf_ising(g: f64) -> InteractionSpec {
    use Letter::*;
    let mut params = BTreeMap::new();
    params.insert("g".to_string(), g);
    InteractionSpec::new(
        1,
        1,
        params,
        vec![
            term(-1.0, None, PauliString::chain(&[(0, Z), (1, Z)])),
            term(-1.0, Some("g"), PauliString::chain(&[(0, X)])),
        ],
    )
    .expect("valid model")
}

/// `H = -sum Z_i Z_{i+1}`
pub fn classical_ising() -> InteractionSpec {
    use Letter::*;
    InteractionSpec::new(
        1,
        1,
        BTreeMap::new(),
        vec![term(-1.0, None, PauliString::chain(&[(0, Z), (1, Z)]))],
    )
    .expect("valid model")
}

/// Square-lattice transverse-field Ising model.
pub fn tf_ising_2d(g: f64) -> InteractionSpec {
    use Letter::*;
    let c = |x: i32, y: i32| Coord::from_slice(&[x, y]);
    let mut params = BTreeMap::new();
    params.insert("g".to_string(), g);
    InteractionSpec::new(
        2,
        1,
        params,
        vec![
            term(-1.0, None, PauliString::new([(c(0, 0), Z), (c(1, 0), Z)])),
            term(-1.0, None, PauliString::new([(c(0, 0), Z), (c(0, 1), Z)])),
            term(-1.0, Some("g"), PauliString::new([(c(0, 0), X)])),
        ],
    )
    .expect("valid model")
}

/// Nearest-neighbour chain with the given 3x3 bond couplings `J[a][b]`
/// (term `J_ab P^a_0 P^b_1`) and field `h[a]` (term `h_a P^a_0`).
pub fn nearest_neighbour(bond: [[f64; 3]; 3], field: [f64; 3]) -> InteractionSpec {
    let mut templates = Vec::new();
    for (a, la) in Letter::ALL.iter().enumerate() {
        for (b, lb) in Letter::ALL.iter().enumerate() {
            if bond[a][b] != 0.0 {
                templates.push(term(bond[a][b], None, PauliString::chain(&[(0, *la), (1, *lb)])));
            }
        }
        if field[a] != 0.0 {
            templates.push(term(field[a], None, PauliString::chain(&[(0, *la)])));
        }
    }
    InteractionSpec::new(1, 1, BTreeMap::new(), templates).expect("valid model")
}

/// Looks up `tf-ising`, `tf-ising-2d` or `classical-ising` (with `g = 1`).
pub fn builtin(name: &str) -> Option<InteractionSpec> {
    match name {
        "tf-ising" | "tfising" => Some(tf_ising(1.0)),
        "tf-ising-2d" => Some(tf_ising_2d(1.0)),
        "classical-ising" | "ising" => Some(classical_ising()),
        _ => None,
    }
}

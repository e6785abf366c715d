#![allow(dead_code)]

use kmsbound::pauli::{Letter, PauliOperator, PauliString};
use nalgebra::DMatrix;
use num_complex::Complex64;
use proptest::prelude::*;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub type CMatrix = DMatrix<Complex64>;

pub fn op(s: &str) -> PauliOperator {
    s.parse().unwrap()
}

pub fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

pub fn random_matrix(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> CMatrix {
    CMatrix::from_fn(rows, cols, |_, _| c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
}

/// `G G^dagger + eps I`, a generic positive definite matrix.
pub fn random_pd(rng: &mut ChaCha8Rng, n: usize, eps: f64) -> CMatrix {
    let g = random_matrix(rng, n, n);
    &g * g.adjoint() + CMatrix::identity(n, n) * c(eps, 0.0)
}

pub fn random_density(rng: &mut ChaCha8Rng, n: usize) -> CMatrix {
    let r = random_pd(rng, n, 0.0);
    let t = r.trace();
    r / t
}

pub fn min_eig(m: &CMatrix) -> f64 {
    kmsbound::dop::min_eigenvalue(m)
}

pub fn letter() -> impl Strategy<Value = Letter> {
    prop_oneof![Just(Letter::X), Just(Letter::Y), Just(Letter::Z)]
}

/// Pauli strings on sites `lo..=hi`.
pub fn pauli_string(lo: i32, hi: i32) -> impl Strategy<Value = PauliString> {
    proptest::collection::vec(proptest::option::of(letter()), (hi - lo + 1) as usize).prop_map(move |ls| {
        let sites: Vec<(i32, Letter)> = ls
            .into_iter()
            .enumerate()
            .filter_map(|(k, l)| l.map(|l| (lo + k as i32, l)))
            .collect();
        PauliString::chain(&sites)
    })
}

pub fn coefficient() -> impl Strategy<Value = Complex64> {
    (-2.0f64..2.0, -2.0f64..2.0).prop_map(|(a, b)| c(a, b))
}

pub fn pauli_operator(lo: i32, hi: i32, max_terms: usize) -> impl Strategy<Value = PauliOperator> {
    proptest::collection::vec((pauli_string(lo, hi), coefficient()), 0..=max_terms)
        .prop_map(PauliOperator::from_terms)
}

pub fn hermitian_operator(lo: i32, hi: i32, max_terms: usize) -> impl Strategy<Value = PauliOperator> {
    proptest::collection::vec((pauli_string(lo, hi), -2.0f64..2.0), 0..=max_terms)
        .prop_map(|ts| PauliOperator::from_terms(ts.into_iter().map(|(p, x)| (p, c(x, 0.0)))))
}

pub fn op_distance(a: &PauliOperator, b: &PauliOperator) -> f64 {
    (a - b).terms().map(|(_, z)| z.norm()).fold(0.0, f64::max)
}

pub fn constant_expr(m: &CMatrix) -> kmsbound::moment::HermitianExpr {
    use kmsbound::moment::{ComplexForm, HermitianExpr};
    let n = m.nrows();
    let mut e = HermitianExpr::zeros(n);
    for i in 0..n {
        for j in 0..n {
            e.set(i, j, ComplexForm::constant(m[(i, j)]));
        }
    }
    e
}

/// Smallest `t` with the emitted `D^[m](X||Y) <= t I` system feasible.
pub fn emitted_min_t(x: &CMatrix, y: &CMatrix, m: u32) -> kmsbound::conic::SolveResult {
    use kmsbound::conic::{solve, AffineForm, ConicProgram, SolveOptions};
    use kmsbound::moment::{ComplexForm, HermitianExpr};
    let n = x.nrows();
    let mut p = ConicProgram::new();
    let t = p.new_var();
    let mut te = HermitianExpr::zeros(n);
    for i in 0..n {
        te.set(i, i, ComplexForm::real(AffineForm::var(t)));
    }
    kmsbound::dop::emit_dop_m_constraint(&mut p, &constant_expr(x), &constant_expr(y), &te, m).unwrap();
    p.set_objective(AffineForm::var(t));
    solve(&p, None, &SolveOptions::default()).unwrap()
}

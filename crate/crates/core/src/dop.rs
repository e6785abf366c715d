//! Operator relative entropy and its semidefinite under-approximations.

use kmsbound_conic::{AffineForm, ConicProgram};
use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::moment::{ComplexForm, HermitianExpr};

pub type CMatrix = DMatrix<Complex64>;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DopConfig {
    pub m: u32,
    /// Relative eigenvalue floor for supports and logarithms.
    pub eig_floor: f64,
}

impl Default for DopConfig {
    fn default() -> Self {
        Self { m: 3, eig_floor: 1e-12 }
    }
}

fn hermitize(m: &CMatrix) -> CMatrix {
    (m + m.adjoint()) * Complex64::new(0.5, 0.0)
}

/// `V f(lambda) V^dagger` for Hermitian `m`.
pub fn herm_apply(m: &CMatrix, f: impl Fn(f64) -> f64) -> CMatrix {
    let e = SymmetricEigen::new(hermitize(m));
    let d = e.eigenvalues.map(|l| Complex64::new(f(l), 0.0));
    &e.eigenvectors * CMatrix::from_diagonal(&d) * e.eigenvectors.adjoint()
}

pub fn herm_eigenvalues(m: &CMatrix) -> Vec<f64> {
    let mut v: Vec<f64> = SymmetricEigen::new(hermitize(m)).eigenvalues.iter().copied().collect();
    v.sort_by(f64::total_cmp);
    v
}

pub fn min_eigenvalue(m: &CMatrix) -> f64 {
    herm_eigenvalues(m).first().copied().unwrap_or(f64::INFINITY)
}

pub fn max_eigenvalue(m: &CMatrix) -> f64 {
    herm_eigenvalues(m).last().copied().unwrap_or(f64::NEG_INFINITY)
}

fn spectral_scale(m: &CMatrix) -> f64 {
    herm_eigenvalues(m).iter().fold(0.0f64, |a, l| a.max(l.abs()))
}

/// `A^{1/2} log(A^{1/2} B^{-1} A^{1/2}) A^{1/2}` on the support of `B`.
pub fn dop_exact(a: &CMatrix, b: &CMatrix, eig_floor: f64) -> Result<CMatrix> {
    let n = a.nrows();
    if a.ncols() != n || b.nrows() != n || b.ncols() != n {
        return Err(Error::SizeMismatch(format!("A is {}x{}, B is {}x{}", a.nrows(), a.ncols(), b.nrows(), b.ncols())));
    }
    let eb = SymmetricEigen::new(hermitize(b));
    let scale_b = eb.eigenvalues.iter().fold(0.0f64, |s, l| s.max(l.abs())).max(f64::MIN_POSITIVE);
    let scale_a = spectral_scale(a).max(f64::MIN_POSITIVE);
    let mut binv = CMatrix::zeros(n, n);
    for k in 0..n {
        let l = eb.eigenvalues[k];
        let u = eb.eigenvectors.column(k);
        if l > eig_floor * scale_b {
            binv += &u * u.adjoint() * Complex64::new(1.0 / l, 0.0);
        } else {
            let w = (u.adjoint() * a * u)[(0, 0)].re;
            if w > eig_floor.sqrt() * scale_a {
                return Err(Error::Support {
                    eigenvalue: l,
                    weight: w,
                    vector: u.iter().copied().collect(),
                });
            }
        }
    }
    let s = herm_apply(a, |l| l.max(0.0).sqrt());
    let mid = &s * binv * &s;
    let floor = eig_floor * spectral_scale(&mid).max(f64::MIN_POSITIVE);
    let lg = herm_apply(&mid, |l| if l > floor { l.ln() } else { 0.0 });
    Ok(hermitize(&(&s * lg * &s)))
}

/// `h_m(x) = 2^m (x^{2^-m} - 1)`
pub fn h_m_scalar(x: f64, m: u32) -> Result<f64> {
    if !(x > 0.0) {
        return Err(Error::InvalidConfig(format!("h_m needs x > 0, got {x}")));
    }
    let p = 2f64.powi(m as i32);
    Ok(p * (x.powf(1.0 / p) - 1.0))
}

/// Scalar `x * (-h_m(y/x))`, i.e. `2^m (x - x^{1-t} y^t)` with `t = 2^-m`;
/// zero at `x = 0`.
pub fn dop_m_scalar(x: f64, y: f64, m: u32) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    let y = y.max(0.0);
    let p = 2f64.powi(m as i32);
    let t = 1.0 / p;
    p * (x - x.powf(1.0 - t) * y.powf(t))
}

/// Scalar relative entropy `x log(x/y)`; zero at `x = 0`, infinite at `y = 0 < x`.
pub fn dop_scalar(x: f64, y: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else if y <= 0.0 {
        f64::INFINITY
    } else {
        x * (x / y).ln()
    }
}

/// Weighted geometric mean `A #_t B` on the support of `A`.
pub fn geometric_mean(a: &CMatrix, b: &CMatrix, t: f64, eig_floor: f64) -> CMatrix {
    let scale = spectral_scale(a).max(f64::MIN_POSITIVE);
    let s = herm_apply(a, |l| l.max(0.0).sqrt());
    let sinv = herm_apply(a, |l| if l > eig_floor * scale { 1.0 / l.sqrt() } else { 0.0 });
    let k = hermitize(&(&sinv * b * &sinv));
    let kt = herm_apply(&k, |l| l.max(0.0).powf(t));
    hermitize(&(&s * kt * &s))
}

/// `D^[m](A||B) = 2^m (A - A #_{2^-m} B)`; `m = 0` gives `A - B`.
pub fn dop_m_exact(a: &CMatrix, b: &CMatrix, m: u32, eig_floor: f64) -> CMatrix {
    if m == 0 {
        return a - b;
    }
    let p = 2f64.powi(m as i32);
    (a - geometric_mean(a, b, 1.0 / p, eig_floor)) * Complex64::new(p, 0.0)
}

/// Fresh `n x n` Hermitian matrix of program variables.
pub fn hermitian_variable(program: &mut ConicProgram, n: usize) -> HermitianExpr {
    let mut g = HermitianExpr::zeros(n);
    for i in 0..n {
        let v = program.new_var();
        g.set(i, i, ComplexForm::real(AffineForm::var(v)));
        for j in 0..i {
            let (re, im) = (program.new_var(), program.new_var());
            let f = ComplexForm {
                re: AffineForm::var(re),
                im: AffineForm::var(im),
            };
            g.set(j, i, f.conj());
            g.set(i, j, f);
        }
    }
    g
}

/// Adds blocks to `program` whose feasibility is `D^[m](X||Y) <= T` (for
/// `X > 0`); returns the auxiliary matrices `G_1..G_m`.
pub fn emit_dop_m_constraint(
    program: &mut ConicProgram,
    x: &HermitianExpr,
    y: &HermitianExpr,
    t: &HermitianExpr,
    m: u32,
) -> Result<Vec<HermitianExpr>> {
    let n = x.size();
    if y.size() != n || t.size() != n {
        return Err(Error::SizeMismatch(format!(
            "X is {n}x{n}, Y is {0}x{0}, T is {1}x{1}",
            y.size(),
            t.size()
        )));
    }
    if m == 0 {
        // T - X + Y >= 0
        let lhs = t.combine(1.0, x, -1.0)?.combine(1.0, y, 1.0)?;
        program.add_psd_block(lhs.realify());
        return Ok(Vec::new());
    }
    let mut gs: Vec<HermitianExpr> = Vec::with_capacity(m as usize);
    for k in 0..m as usize {
        let g = hermitian_variable(program, n);
        let prev = if k == 0 { y } else { &gs[k - 1] };
        program.add_psd_block(HermitianExpr::block2(x, &g, prev)?.realify());
        gs.push(g);
    }
    let p = 2f64.powi(m as i32);
    let last = gs.last().expect("m > 0");
    let lhs = t.combine(1.0, x, -p)?.combine(1.0, last, p)?;
    program.add_psd_block(lhs.realify());
    Ok(gs)
}

//! Reference values: exact diagonalization on periodic rings, the
//! transverse-field Ising closed forms, and the classical transfer matrix.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::lattice::{InteractionSpec, Window};
use crate::moment::MomentFunctional;
use crate::pauli::{i_pow, Coord};
use crate::relaxation::Beta;

pub const MAX_RING: usize = 12;

/// Periodic-ring Hamiltonian as a list of `(x_mask, z_mask, coefficient)`
/// with `P|t> = (-1)^{z.t} |t ^ x>` and the `i^{#Y}` phase folded into the
/// coefficient. Site 0 is the most significant bit.
#[derive(Debug, Clone)]
pub struct RingHamiltonian {
    n: usize,
    terms: Vec<(u64, u64, Complex64)>,
}

impl RingHamiltonian {
    pub fn new(spec: &InteractionSpec, n: usize) -> Result<Self> {
        if spec.dim() != 1 {
            return Err(Error::InvalidConfig("rings are one-dimensional".into()));
        }
        if n > MAX_RING {
            return Err(Error::TooLarge(format!("ring of {n} sites (limit {MAX_RING})")));
        }
        let mut terms = Vec::new();
        for x in 0..n as i32 {
            for (p, c) in spec.terms() {
                let q = p.translate(&[x]);
                let (mut xm, mut zm, mut ny) = (0u64, 0u64, 0u8);
                for (site, l) in q.sites() {
                    let k = site[0].rem_euclid(n as i32) as usize;
                    let bit = 1u64 << (n - 1 - k);
                    if (xm | zm) & bit != 0 {
                        return Err(Error::InvalidConfig(format!(
                            "ring of {n} sites is too small for term `{p}`"
                        )));
                    }
                    match l {
                        crate::pauli::Letter::X => xm |= bit,
                        crate::pauli::Letter::Z => zm |= bit,
                        crate::pauli::Letter::Y => {
                            xm |= bit;
                            zm |= bit;
                            ny += 1;
                        }
                    }
                }
                terms.push((xm, zm, i_pow(ny) * c));
            }
        }
        Ok(Self { n, terms })
    }

    pub fn sites(&self) -> usize {
        self.n
    }

    pub fn is_real(&self) -> bool {
        self.terms.iter().all(|t| t.2.im == 0.0)
    }

    pub fn dense(&self) -> DMatrix<Complex64> {
        let dim = 1usize << self.n;
        let mut m = DMatrix::zeros(dim, dim);
        for &(xm, zm, c) in &self.terms {
            for t in 0..dim as u64 {
                let s = if (zm & t).count_ones() % 2 == 0 { c } else { -c };
                m[((t ^ xm) as usize, t as usize)] += s;
            }
        }
        m
    }

    pub fn apply(&self, v: &DVector<Complex64>) -> DVector<Complex64> {
        let mut out = DVector::zeros(v.len());
        for &(xm, zm, c) in &self.terms {
            for t in 0..v.len() as u64 {
                let s = if (zm & t).count_ones() % 2 == 0 { c } else { -c };
                out[(t ^ xm) as usize] += s * v[t as usize];
            }
        }
        out
    }
}

/// Weighted eigenvectors `(w_k, v_k)` of the ring state.
fn state_vectors(h: &RingHamiltonian, beta: Beta) -> Vec<(f64, DVector<Complex64>)> {
    let dim = 1usize << h.n;
    if beta.is_infinite() && dim > 1024 {
        return lanczos_ground_space(h);
    }
    let (vals, vecs): (Vec<f64>, DMatrix<Complex64>) = if h.is_real() {
        let m = h.dense().map(|z| z.re);
        let e = SymmetricEigen::new(m);
        (e.eigenvalues.iter().copied().collect(), e.eigenvectors.map(|x| Complex64::new(x, 0.0)))
    } else {
        let e = SymmetricEigen::new(h.dense());
        (e.eigenvalues.iter().copied().collect(), e.eigenvectors)
    };
    let emin = vals.iter().copied().fold(f64::INFINITY, f64::min);
    let scale = vals.iter().fold(1.0f64, |a, v| a.max(v.abs()));
    let weights: Vec<f64> = match beta {
        Beta::Infinite => vals
            .iter()
            .map(|&e| if e - emin <= 1e-9 * scale { 1.0 } else { 0.0 })
            .collect(),
        Beta::Finite(b) => vals.iter().map(|&e| (-b * (e - emin)).exp()).collect(),
    };
    let z: f64 = weights.iter().sum();
    weights
        .iter()
        .enumerate()
        .filter(|(_, &w)| w / z > 1e-18)
        .map(|(k, &w)| (w / z, vecs.column(k).into_owned()))
        .collect()
}

/// Lowest eigenvectors by Lanczos with full reorthogonalization.
fn lanczos_ground_space(h: &RingHamiltonian) -> Vec<(f64, DVector<Complex64>)> {
    let dim = 1usize << h.n;
    let steps = dim.min(160);
    let mut q: Vec<DVector<Complex64>> = Vec::with_capacity(steps);
    let mut v = DVector::from_fn(dim, |k, _| Complex64::new(1.0 + ((k * 7919) % 13) as f64 * 0.01, 0.0));
    v /= Complex64::new(v.norm(), 0.0);
    let mut alpha = Vec::new();
    let mut betas = Vec::new();
    for j in 0..steps {
        q.push(v.clone());
        let mut w = h.apply(&v);
        let a = v.dotc(&w).re;
        alpha.push(a);
        for qi in &q {
            let c = qi.dotc(&w);
            w -= qi * c;
        }
        for qi in &q {
            let c = qi.dotc(&w);
            w -= qi * c;
        }
        let b = w.norm();
        if b < 1e-12 || j + 1 == steps {
            break;
        }
        betas.push(b);
        v = w / Complex64::new(b, 0.0);
    }
    let k = alpha.len();
    let t = DMatrix::from_fn(k, k, |i, j| {
        if i == j {
            alpha[i]
        } else if i == j + 1 {
            betas[j]
        } else if j == i + 1 {
            betas[i]
        } else {
            0.0
        }
    });
    let e = SymmetricEigen::new(t);
    let emin = e.eigenvalues.iter().copied().fold(f64::INFINITY, f64::min);
    let scale = e.eigenvalues.iter().fold(1.0f64, |a, v| a.max(v.abs()));
    let ground: Vec<usize> = (0..k)
        .filter(|&i| e.eigenvalues[i] - emin <= 1e-9 * scale)
        .collect();
    let w = 1.0 / ground.len() as f64;
    ground
        .into_iter()
        .map(|i| {
            let mut vec = DVector::zeros(dim);
            for (j, qj) in q.iter().enumerate().take(k) {
                vec += qj * Complex64::new(e.eigenvectors[(j, i)], 0.0);
            }
            let nrm = vec.norm();
            (w, vec / Complex64::new(nrm, 0.0))
        })
        .collect()
}

/// Reduced density matrix on `window` (ring coordinates taken mod `n`).
pub fn ring_marginal(h: &RingHamiltonian, beta: Beta, window: &Window) -> Result<DMatrix<Complex64>> {
    let n = h.n;
    let pos: Vec<usize> = window
        .sites()
        .iter()
        .map(|c| c[0].rem_euclid(n as i32) as usize)
        .collect();
    let mut uniq = pos.clone();
    uniq.sort();
    uniq.dedup();
    if uniq.len() != pos.len() {
        return Err(Error::InvalidConfig(format!("window {window} wraps onto itself on a ring of {n}")));
    }
    let w = pos.len();
    let rest: Vec<usize> = (0..n).filter(|k| !pos.contains(k)).collect();
    let (dw, dr) = (1usize << w, 1usize << rest.len());
    let full = |a: usize, r: usize| -> usize {
        let mut t = 0usize;
        for (i, &p) in pos.iter().enumerate() {
            if a >> (w - 1 - i) & 1 == 1 {
                t |= 1 << (n - 1 - p);
            }
        }
        for (i, &p) in rest.iter().enumerate() {
            if r >> (rest.len() - 1 - i) & 1 == 1 {
                t |= 1 << (n - 1 - p);
            }
        }
        t
    };
    let mut rho = DMatrix::<Complex64>::zeros(dw, dw);
    for (wt, v) in state_vectors(h, beta) {
        let psi = DMatrix::from_fn(dw, dr, |a, r| v[full(a, r)]);
        rho += (&psi * psi.adjoint()) * Complex64::new(wt, 0.0);
    }
    Ok(rho)
}

/// Gibbs (or ground-space averaged) state of the `n`-site ring restricted
/// to `window`, with the matching moment assignment.
pub fn ed_gibbs_marginal(
    spec: &InteractionSpec,
    n: usize,
    beta: Beta,
    window: &Window,
) -> Result<(DMatrix<Complex64>, MomentFunctional)> {
    let h = RingHamiltonian::new(spec, n)?;
    let rho = ring_marginal(&h, beta, window)?;
    let f = MomentFunctional::from_density(window, &rho)?;
    Ok((rho, f))
}

/// Ring expectation of a Pauli operator (ring coordinates mod `n`).
pub fn ring_expectation(
    spec: &InteractionSpec,
    n: usize,
    beta: Beta,
    obs: &crate::pauli::PauliOperator,
) -> Result<f64> {
    let supp = obs.support();
    let w = Window::from_sites(1, supp.iter().cloned());
    let h = RingHamiltonian::new(spec, n)?;
    let rho = ring_marginal(&h, beta, &w)?;
    let m = obs.to_dense(w.sites())?;
    Ok((rho * m).trace().re)
}

/// Ground-state magnetization `(1 - g^2)^{1/8}` for `g < 1`, else 0.
pub fn tfising_magnetization(g: f64) -> f64 {
    let g = g.abs();
    if g < 1.0 {
        (1.0 - g * g).powf(0.125)
    } else {
        0.0
    }
}

fn adaptive_simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    fn rec(f: &dyn Fn(f64) -> f64, a: f64, b: f64, fa: f64, fm: f64, fb: f64, whole: f64, tol: f64, depth: u32) -> f64 {
        let m = 0.5 * (a + b);
        let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
        let (flm, frm) = (f(lm), f(rm));
        let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
        let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
        let delta = left + right - whole;
        if depth == 0 || delta.abs() <= 15.0 * tol {
            left + right + delta / 15.0
        } else {
            rec(f, a, m, fa, flm, fm, left, tol / 2.0, depth - 1)
                + rec(f, m, b, fm, frm, fb, right, tol / 2.0, depth - 1)
        }
    }
    let (fa, fb, fm) = (f(a), f(b), f(0.5 * (a + b)));
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    rec(f, a, b, fa, fm, fb, whole, tol, 50)
}

/// Nearest-neighbour `<Z_0 Z_1>` of the transverse-field Ising chain:
/// `(1/pi) int_0^pi (1 + g cos k) / e(k) tanh(beta e(k)) dk` with
/// `e(k) = sqrt(1 + 2 g cos k + g^2)`.
pub fn tfising_zz(g: f64, beta: Beta) -> f64 {
    if let Beta::Finite(b) = beta {
        if b == 0.0 {
            return 0.0;
        }
    }
    let f = move |k: f64| {
        let e = (1.0 + 2.0 * g * k.cos() + g * g).sqrt();
        if e == 0.0 {
            return 0.0;
        }
        let th = match beta {
            Beta::Infinite => 1.0,
            Beta::Finite(b) => (b * e).tanh(),
        };
        (1.0 + g * k.cos()) / e * th
    };
    adaptive_simpson(&f, 0.0, std::f64::consts::PI, 1e-13) / std::f64::consts::PI
}

/// Infinite classical Ising chain `-sum s_i s_{i+1} - h sum s_i` at inverse
/// temperature `beta`: `(<s_0>, <s_0 s_1>)` from the leading eigenvector of
/// the symmetric transfer matrix.
pub fn classical_ising_transfer(beta: f64, h: f64) -> (f64, f64) {
    let s = [1.0, -1.0];
    let t = DMatrix::from_fn(2, 2, |i, j| {
        (beta * (s[i] * s[j] + 0.5 * h * (s[i] + s[j]))).exp()
    });
    let e = SymmetricEigen::new(t.clone());
    let k = if e.eigenvalues[0] >= e.eigenvalues[1] { 0 } else { 1 };
    let lam = e.eigenvalues[k];
    let v = e.eigenvectors.column(k);
    let mag = v[0] * v[0] * s[0] + v[1] * v[1] * s[1];
    let mut corr = 0.0;
    for i in 0..2 {
        for j in 0..2 {
            corr += v[i] * t[(i, j)] * v[j] * s[i] * s[j];
        }
    }
    (mag, corr / lam)
}

/// Sites `{a..a+len-1}` as a 1D window.
pub fn chain_window(a: i32, len: usize) -> Window {
    Window::from_sites(1, (0..len as i32).map(|k| Coord::from_slice(&[a + k])))
}

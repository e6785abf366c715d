//! Primal-dual interior-point method for block-diagonal SDPs.
//!
//! Works on the equality-free form produced by the presolve:
//!
//! ```text
//!   (P)  minimize   c'x            s.t.  X = sum_i x_i F_i - F_0  >= 0
//!   (D)  maximize   <F_0, Y>       s.t.  <F_i, Y> = c_i,  Y >= 0
//! ```
//!
//! Infeasible starting point, HKM search direction, Mehrotra
//! predictor-corrector, separate primal and dual step lengths.

use nalgebra::{Cholesky, DMatrix, DVector};

use crate::backend::{Backend, SolveOptions, SolveResult, SolveStatus};
use crate::program::ConicProgram;

/// Sparse lower-triangle entries of one `F_i` restricted to one block.
#[derive(Debug, Clone)]
struct Coeff {
    var: usize,
    entries: Vec<(usize, usize, f64)>,
    /// distinct columns touched by the symmetric matrix
    support: Vec<usize>,
}

#[derive(Debug, Clone)]
struct Block {
    n: usize,
    f0: DMatrix<f64>,
    coeffs: Vec<Coeff>,
}

impl Block {
    /// `<F_i, M>` for symmetric `F_i` stored as lower entries.
    fn inner(entries: &[(usize, usize, f64)], m: &DMatrix<f64>) -> f64 {
        entries
            .iter()
            .map(|&(r, c, v)| {
                if r == c {
                    v * m[(r, r)]
                } else {
                    v * (m[(r, c)] + m[(c, r)])
                }
            })
            .sum()
    }

    fn apply(&self, x: &[f64]) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.n, self.n);
        for co in &self.coeffs {
            let xi = x[co.var];
            if xi == 0.0 {
                continue;
            }
            for &(r, c, v) in &co.entries {
                m[(r, c)] += v * xi;
                if r != c {
                    m[(c, r)] += v * xi;
                }
            }
        }
        m
    }
}

struct Problem {
    m: usize,
    c: DVector<f64>,
    c_const: f64,
    blocks: Vec<Block>,
}

impl Problem {
    fn from_program(p: &ConicProgram) -> Self {
        let m = p.n_vars();
        let mut c = DVector::zeros(m);
        for &(v, coeff) in p.objective().terms() {
            c[v.index()] = coeff;
        }
        let blocks = p
            .blocks()
            .iter()
            .map(|b| {
                let n = b.size();
                let mut f0 = DMatrix::zeros(n, n);
                let mut per_var: std::collections::BTreeMap<usize, Vec<(usize, usize, f64)>> =
                    Default::default();
                for (&(r, cc), form) in b.entries() {
                    let k = form.constant_term();
                    f0[(r, cc)] = -k;
                    f0[(cc, r)] = -k;
                    for &(v, coeff) in form.terms() {
                        per_var.entry(v.index()).or_default().push((r, cc, coeff));
                    }
                }
                let coeffs = per_var
                    .into_iter()
                    .map(|(var, entries)| {
                        let mut support: Vec<usize> =
                            entries.iter().flat_map(|&(r, c, _)| [r, c]).collect();
                        support.sort_unstable();
                        support.dedup();
                        Coeff {
                            var,
                            entries,
                            support,
                        }
                    })
                    .collect();
                Block { n, f0, coeffs }
            })
            .collect();
        Self {
            m,
            c,
            c_const: p.objective().constant_term(),
            blocks,
        }
    }

    fn total_dim(&self) -> usize {
        self.blocks.iter().map(|b| b.n).sum()
    }

    fn adjoint(&self, y: &[DMatrix<f64>]) -> DVector<f64> {
        let mut out = DVector::zeros(self.m);
        for (b, yb) in self.blocks.iter().zip(y) {
            for co in &b.coeffs {
                out[co.var] += Block::inner(&co.entries, yb);
            }
        }
        out
    }

    fn apply(&self, x: &[f64]) -> Vec<DMatrix<f64>> {
        self.blocks.iter().map(|b| b.apply(x)).collect()
    }
}

fn frob(ms: &[DMatrix<f64>]) -> f64 {
    ms.iter().map(|m| m.norm_squared()).sum::<f64>().sqrt()
}

fn dot(a: &[DMatrix<f64>], b: &[DMatrix<f64>]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x.dot(y)).sum()
}

/// Largest `t` with `x + t dx` PSD (may be infinite), given the Cholesky
/// factor of `x`.
fn max_step(chol: &Cholesky<f64, nalgebra::Dyn>, dx: &DMatrix<f64>) -> f64 {
    let l = chol.l();
    let tmp = l
        .solve_lower_triangular(dx)
        .expect("Cholesky factor is nonsingular");
    let m = l
        .solve_lower_triangular(&tmp.transpose())
        .expect("Cholesky factor is nonsingular");
    let m = (&m + m.transpose()) * 0.5;
    let lmin = m.symmetric_eigenvalues().min();
    if lmin >= 0.0 {
        f64::INFINITY
    } else {
        -1.0 / lmin
    }
}

fn symmetrize(m: &DMatrix<f64>) -> DMatrix<f64> {
    (m + m.transpose()) * 0.5
}

struct Direction {
    dx: DVector<f64>,
    dxm: Vec<DMatrix<f64>>,
    dym: Vec<DMatrix<f64>>,
}

/// The built-in interior-point backend.
#[derive(Debug, Clone, Default)]
pub struct InteriorPoint;

impl Backend for InteriorPoint {
    fn name(&self) -> &str {
        "ipm"
    }

    fn reentrant(&self) -> bool {
        true
    }

    fn solve_reduced(&self, program: &ConicProgram, opts: &SolveOptions) -> SolveResult {
        solve(program, opts)
    }
}

fn schur(
    prob: &Problem,
    xinv: &[DMatrix<f64>],
    y: &[DMatrix<f64>],
) -> DMatrix<f64> {
    let mut bmat = DMatrix::zeros(prob.m, prob.m);
    for (k, block) in prob.blocks.iter().enumerate() {
        let n = block.n;
        let (xi, yk) = (&xinv[k], &y[k]);
        for (jj, cj) in block.coeffs.iter().enumerate() {
            // G = Xinv F_j, restricted to the columns F_j touches
            let s = &cj.support;
            let mut g = DMatrix::zeros(n, s.len());
            let pos = |col: usize| s.binary_search(&col).unwrap();
            for &(r, c, v) in &cj.entries {
                let pc = pos(c);
                g.column_mut(pc).axpy(v, &xi.column(r), 1.0);
                if r != c {
                    let pr = pos(r);
                    g.column_mut(pr).axpy(v, &xi.column(c), 1.0);
                }
            }
            let mut ys = DMatrix::zeros(s.len(), n);
            for (a, &row) in s.iter().enumerate() {
                ys.row_mut(a).copy_from(&yk.row(row));
            }
            let h = g * ys;
            for ci in &block.coeffs[jj..] {
                let val = Block::inner(&ci.entries, &h);
                bmat[(ci.var, cj.var)] += val;
                if ci.var != cj.var {
                    bmat[(cj.var, ci.var)] += val;
                }
            }
        }
    }
    bmat
}

fn solve(program: &ConicProgram, opts: &SolveOptions) -> SolveResult {
    let prob = Problem::from_program(program);
    let m = prob.m;
    let nt = prob.total_dim().max(1) as f64;
    if prob.blocks.iter().all(|b| b.n == 0) {
        return SolveResult::error(m, "program has no PSD blocks".into());
    }

    let fnorm = |e: &[(usize, usize, f64)]| -> f64 {
        e.iter()
            .map(|&(r, c, v)| if r == c { v * v } else { 2.0 * v * v })
            .sum::<f64>()
            .sqrt()
    };
    let mut xm = Vec::with_capacity(prob.blocks.len());
    let mut ym = Vec::with_capacity(prob.blocks.len());
    for b in &prob.blocks {
        let n = b.n as f64;
        let mut xi_ratio: f64 = 0.0;
        let mut eta: f64 = b.f0.norm();
        for co in &b.coeffs {
            let fn_ = fnorm(&co.entries);
            xi_ratio = xi_ratio.max((1.0 + prob.c[co.var].abs()) / (1.0 + fn_));
            eta = eta.max(fn_);
        }
        let xi = 10f64.max(n.sqrt()).max(n * xi_ratio);
        let eta = 10f64.max(n.sqrt()).max(eta);
        xm.push(DMatrix::identity(b.n, b.n) * eta);
        ym.push(DMatrix::identity(b.n, b.n) * xi);
    }
    let mut x = DVector::<f64>::zeros(m);
    let f0: Vec<DMatrix<f64>> = prob.blocks.iter().map(|b| b.f0.clone()).collect();
    let f0_norm = frob(&f0);
    let c_norm = prob.c.norm();

    let gamma = 0.95;
    let mut status = SolveStatus::SolverError;
    let mut message = None;
    let mut iters = 0;
    let mut stall = 0;
    let (mut pobj, mut dobj, mut pinf, mut dinf) = (0.0, 0.0, f64::INFINITY, f64::INFINITY);
    let mut best = f64::INFINITY;
    let mut since_best = 0;
    // primal (pobj, pinf, x) and dual (dobj, dinf) of every iterate
    let mut primal_hist: Vec<(f64, f64, DVector<f64>)> = Vec::new();
    let mut dual_hist: Vec<(f64, f64)> = Vec::new();

    for it in 0..opts.max_iterations {
        iters = it;
        let ax = prob.apply(x.as_slice());
        // primal residual P = A(x) - F0 - X
        let pres: Vec<DMatrix<f64>> = ax
            .iter()
            .zip(&f0)
            .zip(&xm)
            .map(|((a, f), xb)| a - f - xb)
            .collect();
        let rd = &prob.c - prob.adjoint(&ym);
        pobj = prob.c.dot(&x);
        dobj = dot(&f0, &ym);
        pinf = frob(&pres) / (1.0 + f0_norm);
        dinf = rd.norm() / (1.0 + c_norm);
        let mu = dot(&xm, &ym) / nt;
        let relgap = (pobj - dobj).abs() / (1.0 + pobj.abs() + dobj.abs());
        if opts.verbose {
            eprintln!(
                "ipm {it:3}  pobj {pobj:+.10e}  dobj {dobj:+.10e}  gap {relgap:.2e}  pinf {pinf:.2e}  dinf {dinf:.2e}  mu {mu:.2e}"
            );
        }
        if !(pobj.is_finite() && dobj.is_finite() && mu.is_finite()) {
            message = Some("non-finite iterate".into());
            status = SolveStatus::SolverError;
            break;
        }
        let score = relgap.max(pinf).max(dinf);
        if score < 0.9 * best {
            since_best = 0;
        } else {
            since_best += 1;
        }
        best = best.min(score);
        primal_hist.push((pobj, pinf, x.clone()));
        dual_hist.push((dobj, dinf));
        if since_best >= 12 {
            message = Some("no progress in the last 12 iterations".into());
            break;
        }
        if relgap <= opts.tolerance && pinf <= opts.tolerance && dinf <= opts.tolerance {
            status = SolveStatus::Optimal;
            break;
        }
        // certificates of infeasibility
        let ynorm = frob(&ym);
        if dobj > 0.0 && ynorm > 1e10 && prob.adjoint(&ym).norm() / dobj < 1e-8 {
            status = SolveStatus::Infeasible;
            message = Some("dual ray: no x makes the blocks PSD".into());
            break;
        }
        if x.norm() > 1e10 && pobj < 0.0 && pinf < 1e-6 && -pobj / x.norm() > 1e-10 {
            status = SolveStatus::Unbounded;
            message = Some("primal ray: objective unbounded below".into());
            break;
        }

        let mut chols = Vec::with_capacity(xm.len());
        let mut xinv = Vec::with_capacity(xm.len());
        let mut ok = true;
        for xb in &xm {
            match Cholesky::new(symmetrize(xb)) {
                Some(ch) => {
                    xinv.push(ch.inverse());
                    chols.push(ch);
                }
                None => {
                    ok = false;
                    break;
                }
            }
        }
        let ychols: Vec<_> = ym.iter().map(|yb| Cholesky::new(symmetrize(yb))).collect();
        if !ok || ychols.iter().any(|c| c.is_none()) {
            message = Some("iterate left the PSD cone".into());
            break;
        }
        let ychols: Vec<_> = ychols.into_iter().map(Option::unwrap).collect();

        let bmat = schur(&prob, &xinv, &ym);
        let diag_max = (0..m).map(|i| bmat[(i, i)].abs()).fold(0.0, f64::max);
        let floor = 1e-300f64.max(1e-30 * diag_max);
        let dscale = DVector::from_fn(m, |i, _| 1.0 / bmat[(i, i)].max(floor).sqrt());
        let mut reg = 1e-14;
        let bchol = loop {
            let mut b2 = DMatrix::from_fn(m, m, |i, j| bmat[(i, j)] * dscale[i] * dscale[j]);
            for i in 0..m {
                b2[(i, i)] += reg;
            }
            if let Some(ch) = Cholesky::new(b2) {
                break Some(ch);
            }
            reg *= 100.0;
            if reg > 1e-4 {
                break None;
            }
        };
        if opts.verbose {
            eprintln!("    schur reg {reg:.2e} diag_max {diag_max:.2e}");
        }
        let Some(bchol) = bchol else {
            message = Some("Schur complement is not positive definite".into());
            break;
        };
        let bsolve = |r: &DVector<f64>| -> DVector<f64> {
            let t = bchol.solve(&r.component_mul(&dscale));
            t.component_mul(&dscale)
        };

        let direction = |sigma_mu: f64, corr: Option<&[DMatrix<f64>]>| -> Direction {
            // R = sigma mu Xinv - Y - Xinv P Y - Xinv Corr
            let rmat: Vec<DMatrix<f64>> = (0..xm.len())
                .map(|k| {
                    let mut r = &xinv[k] * sigma_mu - &ym[k] - &xinv[k] * &pres[k] * &ym[k];
                    if let Some(cr) = corr {
                        r -= &xinv[k] * &cr[k];
                    }
                    r
                })
                .collect();
            let rhs = prob.adjoint(&rmat) - &rd;
            let mut dx = bsolve(&rhs);
            for _ in 0..2 {
                let r = &rhs - &bmat * &dx;
                dx += bsolve(&r);
            }
            let adx = prob.apply(dx.as_slice());
            let dxm: Vec<DMatrix<f64>> = adx.iter().zip(&pres).map(|(a, p)| a + p).collect();
            let dym: Vec<DMatrix<f64>> = (0..xm.len())
                .map(|k| {
                    let mut t = &dxm[k] * &ym[k];
                    if let Some(cr) = corr {
                        t += &cr[k];
                    }
                    let d = &xinv[k] * sigma_mu - &ym[k] - &xinv[k] * t;
                    symmetrize(&d)
                })
                .collect();
            Direction { dx, dxm, dym }
        };
        let steps = |d: &Direction| -> (f64, f64) {
            let ap = chols
                .iter()
                .zip(&d.dxm)
                .map(|(ch, dxb)| max_step(ch, dxb))
                .fold(f64::INFINITY, f64::min);
            let ad = ychols
                .iter()
                .zip(&d.dym)
                .map(|(ch, dyb)| max_step(ch, dyb))
                .fold(f64::INFINITY, f64::min);
            ((gamma * ap).min(1.0), (gamma * ad).min(1.0))
        };

        // predictor
        let pred = direction(0.0, None);
        let (ap, ad) = steps(&pred);
        let mu_aff = (0..xm.len())
            .map(|k| {
                let xa = &xm[k] + &pred.dxm[k] * ap;
                let ya = &ym[k] + &pred.dym[k] * ad;
                xa.dot(&ya)
            })
            .sum::<f64>()
            / nt;
        let sigma = (mu_aff / mu).clamp(0.0, 1.0).powi(3);
        let corr: Vec<DMatrix<f64>> = pred
            .dxm
            .iter()
            .zip(&pred.dym)
            .map(|(a, b)| a * b)
            .collect();
        let dir = direction(sigma * mu, Some(&corr));
        let (ap, ad) = steps(&dir);

        let (mut ap, mut ad) = (ap, ad);
        let mut accepted = false;
        for _ in 0..30 {
            let nx: Vec<DMatrix<f64>> = (0..xm.len()).map(|k| symmetrize(&(&xm[k] + &dir.dxm[k] * ap))).collect();
            let ny: Vec<DMatrix<f64>> = (0..ym.len()).map(|k| symmetrize(&(&ym[k] + &dir.dym[k] * ad))).collect();
            if nx.iter().chain(&ny).all(|m| Cholesky::new(m.clone()).is_some()) {
                x += &dir.dx * ap;
                xm = nx;
                ym = ny;
                accepted = true;
                break;
            }
            ap *= 0.5;
            ad *= 0.5;
        }
        if opts.verbose {
            eprintln!("    steps {ap:.2e} {ad:.2e}");
        }
        if !accepted {
            message = Some("iterate left the PSD cone".into());
            break;
        }
        if ap.max(ad) < 1e-9 {
            stall += 1;
            if stall >= 3 {
                message = Some("step lengths collapsed".into());
                break;
            }
        } else {
            stall = 0;
        }
    }

    if status == SolveStatus::SolverError {
        // weak duality pairs any primal iterate with any dual one
        let mut pick: Option<(f64, f64, usize, usize)> = None;
        for (i, (po, pi, _)) in primal_hist.iter().enumerate() {
            for (j, (dob, di)) in dual_hist.iter().enumerate() {
                let g = (po - dob).abs() / (1.0 + po.abs() + dob.abs());
                let sc = g.max(*pi).max(*di);
                if pick.map_or(true, |p| (sc, g) < (p.0, p.1)) {
                    pick = Some((sc, g, i, j));
                }
            }
        }
        if let Some((_, _, i, j)) = pick {
            (pobj, pinf) = (primal_hist[i].0, primal_hist[i].1);
            x = primal_hist[i].2.clone();
            (dobj, dinf) = dual_hist[j];
        }
    }
    let relgap = (pobj - dobj).abs() / (1.0 + pobj.abs() + dobj.abs());
    if status == SolveStatus::SolverError && message.is_none() {
        message = Some(format!("iteration limit {} reached", opts.max_iterations));
    }
    if status == SolveStatus::SolverError {
        let near = opts.near_optimal_tolerance;
        if relgap <= near && pinf <= near && dinf <= near {
            status = SolveStatus::NearOptimal;
        }
    }
    SolveResult {
        status,
        objective: pobj + prob.c_const,
        dual_objective: dobj + prob.c_const,
        gap: (pobj - dobj).abs(),
        primal_infeasibility: pinf,
        dual_infeasibility: dinf,
        assignment: x.as_slice().to_vec(),
        iterations: iters,
        message,
    }
}

//! Elimination of linear equalities by variable substitution.
//!
//! The equality system is reduced row by row with a sparse accumulator;
//! each new pivot is expressed through the variables that were still free
//! when it was created, and the resulting triangular system is resolved in
//! reverse creation order at the end. Variables that end up in no PSD
//! block are fixed to zero, unless the objective depends on them, in which
//! case the program is unbounded.

use crate::affine::{AffineForm, VarId};
use crate::program::ConicProgram;

/// Tolerances for [`eliminate_equalities`].
#[derive(Debug, Clone, Copy)]
pub struct PresolveTolerances {
    /// Coefficients below `pivot_rel * row_scale` are treated as zero.
    pub pivot_rel: f64,
    /// A fully reduced row whose constant exceeds `infeasible_rel * row_scale`
    /// proves the equalities inconsistent.
    pub infeasible_rel: f64,
}

impl Default for PresolveTolerances {
    fn default() -> Self {
        Self {
            pivot_rel: 1e-10,
            infeasible_rel: 1e-8,
        }
    }
}

#[derive(Debug, Clone)]
pub enum PresolveOutcome {
    Reduced(Presolved),
    /// The equalities have no solution; `residual` is the offending constant.
    Infeasible { residual: f64 },
    /// The objective depends on a direction that no constraint restricts.
    Unbounded,
}

/// A program without equalities plus the map back to the original variables.
#[derive(Debug, Clone)]
pub struct Presolved {
    pub program: ConicProgram,
    map: Vec<AffineForm>,
    rank: usize,
}

impl Presolved {
    /// Original assignment from a reduced one.
    pub fn lift(&self, z: &[f64]) -> Vec<f64> {
        self.map.iter().map(|f| f.eval(z)).collect()
    }

    /// Expression of original variable `v` in the reduced variables.
    pub fn expression(&self, v: VarId) -> &AffineForm {
        &self.map[v.index()]
    }

    /// Number of independent equalities removed.
    pub fn rank(&self) -> usize {
        self.rank
    }
}

struct Accumulator {
    values: Vec<f64>,
    touched: Vec<u32>,
    seen: Vec<bool>,
    constant: f64,
}

impl Accumulator {
    fn new(n: usize) -> Self {
        Self {
            values: vec![0.0; n],
            touched: Vec::new(),
            seen: vec![false; n],
            constant: 0.0,
        }
    }

    fn add(&mut self, v: u32, c: f64) {
        let i = v as usize;
        if !self.seen[i] {
            self.seen[i] = true;
            self.touched.push(v);
        }
        self.values[i] += c;
    }

    fn clear(&mut self) {
        for &v in &self.touched {
            self.values[v as usize] = 0.0;
            self.seen[v as usize] = false;
        }
        self.touched.clear();
        self.constant = 0.0;
    }
}

/// Eliminates all equalities of `program`.
pub fn eliminate_equalities(program: &ConicProgram, tol: PresolveTolerances) -> PresolveOutcome {
    let n = program.n_vars();
    // pivot_of[v] = index into `pivots` when v has been eliminated
    let mut pivot_of: Vec<Option<u32>> = vec![None; n];
    let mut pivots: Vec<(u32, AffineForm)> = Vec::new();
    let mut acc = Accumulator::new(n);
    let mut work: Vec<u32> = Vec::new();

    for eq in program.equalities() {
        let mut scale = eq.max_abs();
        acc.constant = eq.constant_term();
        for &(v, c) in eq.terms() {
            acc.add(v.0, c);
            if pivot_of[v.index()].is_some() {
                work.push(v.0);
            }
        }
        while let Some(p) = work.pop() {
            let c = acc.values[p as usize];
            if c == 0.0 {
                continue;
            }
            acc.values[p as usize] = 0.0;
            let (_, expr) = &pivots[pivot_of[p as usize].unwrap() as usize];
            acc.constant += c * expr.constant_term();
            for &(v, a) in expr.terms() {
                acc.add(v.0, c * a);
                if pivot_of[v.index()].is_some() {
                    work.push(v.0);
                }
            }
            scale = scale.max(c.abs());
        }
        let cutoff = tol.pivot_rel * scale.max(f64::MIN_POSITIVE);
        let mut best: Option<(u32, f64)> = None;
        for &v in &acc.touched {
            let c = acc.values[v as usize];
            if pivot_of[v as usize].is_none() && c.abs() > cutoff && best.is_none_or(|b| c.abs() > b.1.abs()) {
                best = Some((v, c));
            }
        }
        match best {
            None => {
                if acc.constant.abs() > tol.infeasible_rel * scale.max(1.0) {
                    return PresolveOutcome::Infeasible {
                        residual: acc.constant,
                    };
                }
            }
            Some((q, cq)) => {
                let terms = acc
                    .touched
                    .iter()
                    .filter(|&&v| v != q && pivot_of[v as usize].is_none())
                    .filter_map(|&v| {
                        let c = acc.values[v as usize];
                        (c.abs() > cutoff).then(|| (VarId(v), -c / cq))
                    });
                let expr = AffineForm::from_terms(-acc.constant / cq, terms);
                pivot_of[q as usize] = Some(pivots.len() as u32);
                pivots.push((q, expr));
            }
        }
        acc.clear();
    }

    // Resolve the triangular system: a pivot row only references pivots
    // created after it.
    let mut resolved: Vec<Option<AffineForm>> = vec![None; n];
    for (q, expr) in pivots.iter().rev() {
        let mut out = AffineForm::constant(expr.constant_term());
        let mut plain = Vec::new();
        for &(v, c) in expr.terms() {
            match &resolved[v.index()] {
                Some(r) => out.add_scaled(r, c),
                None => plain.push((v, c)),
            }
        }
        out.add_scaled(&AffineForm::from_terms(0.0, plain), 1.0);
        let s = out.max_abs();
        out.prune(1e-15 * s);
        resolved[*q as usize] = Some(out);
    }

    // Free variables in terms of themselves, for substitution.
    let to_free = |v: VarId| -> AffineForm {
        match &resolved[v.index()] {
            Some(r) => r.clone(),
            None => AffineForm::var(v),
        }
    };
    let objective = program.objective().substitute(to_free);
    let blocks: Vec<_> = program
        .blocks()
        .iter()
        .map(|b| b.map_forms(|f| f.substitute(to_free)))
        .collect();

    // Which free variables survive (appear in some block)?
    let mut in_block = vec![false; n];
    for b in &blocks {
        for (_, f) in b.entries() {
            for &(v, _) in f.terms() {
                in_block[v.index()] = true;
            }
        }
    }
    for &(v, c) in objective.terms() {
        if !in_block[v.index()] && c != 0.0 {
            return PresolveOutcome::Unbounded;
        }
    }
    let mut new_id: Vec<Option<VarId>> = vec![None; n];
    let mut n_new = 0u32;
    for v in 0..n {
        if pivot_of[v].is_none() && in_block[v] {
            new_id[v] = Some(VarId(n_new));
            n_new += 1;
        }
    }
    let renumber = |f: &AffineForm| -> AffineForm {
        AffineForm::from_terms(
            f.constant_term(),
            f.terms()
                .iter()
                .filter_map(|&(v, c)| new_id[v.index()].map(|w| (w, c))),
        )
    };
    let mut reduced = ConicProgram::with_vars(n_new as usize);
    reduced.set_objective(renumber(&objective));
    for b in &blocks {
        reduced.add_psd_block(b.map_forms(renumber));
    }
    let map = (0..n)
        .map(|v| renumber(&to_free(VarId(v as u32))))
        .collect();
    PresolveOutcome::Reduced(Presolved {
        program: reduced,
        map,
        rank: pivots.len(),
    })
}

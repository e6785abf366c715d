use std::collections::BTreeMap;

use nalgebra::DMatrix;

use crate::affine::{AffineForm, VarId};
use crate::error::ConicError;

/// A real symmetric matrix of affine forms, required to be positive
/// semidefinite. Only the lower triangle `(row >= col)` is stored.
#[derive(Debug, Clone, PartialEq)]
pub struct PsdBlock {
    size: usize,
    entries: BTreeMap<(usize, usize), AffineForm>,
}

impl PsdBlock {
    pub fn new(size: usize) -> Self {
        Self {
            size,
            entries: BTreeMap::new(),
        }
    }

    pub fn size(&self) -> usize {
        self.size
    }

    /// Adds `form` to entry `(i, j)`; the mirrored entry is implied.
    pub fn add(&mut self, i: usize, j: usize, form: &AffineForm) {
        assert!(i < self.size && j < self.size, "entry ({i},{j}) outside block of size {}", self.size);
        if form.is_zero() {
            return;
        }
        let key = if i >= j { (i, j) } else { (j, i) };
        let slot = self.entries.entry(key).or_default();
        *slot += form;
        if slot.is_zero() {
            self.entries.remove(&key);
        }
    }

    pub fn set(&mut self, i: usize, j: usize, form: AffineForm) {
        let key = if i >= j { (i, j) } else { (j, i) };
        if form.is_zero() {
            self.entries.remove(&key);
        } else {
            self.entries.insert(key, form);
        }
    }

    pub fn get(&self, i: usize, j: usize) -> Option<&AffineForm> {
        let key = if i >= j { (i, j) } else { (j, i) };
        self.entries.get(&key)
    }

    /// Lower-triangle entries in row-major order.
    pub fn entries(&self) -> impl Iterator<Item = (&(usize, usize), &AffineForm)> {
        self.entries.iter()
    }

    pub fn nnz(&self) -> usize {
        self.entries.len()
    }

    pub fn map_forms(&self, mut f: impl FnMut(&AffineForm) -> AffineForm) -> PsdBlock {
        let mut out = PsdBlock::new(self.size);
        for (&(i, j), form) in &self.entries {
            out.set(i, j, f(form));
        }
        out
    }

    /// Numeric value of the block at assignment `x`.
    pub fn eval(&self, x: &[f64]) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.size, self.size);
        for (&(i, j), form) in &self.entries {
            let v = form.eval(x);
            m[(i, j)] = v;
            m[(j, i)] = v;
        }
        m
    }
}

/// Solver-agnostic conic program:
///
/// minimize `objective(x)` subject to `equality_k(x) = 0` and every block
/// `B_k(x)` positive semidefinite.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ConicProgram {
    n_vars: usize,
    objective: AffineForm,
    equalities: Vec<AffineForm>,
    blocks: Vec<PsdBlock>,
}

impl ConicProgram {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_vars(n_vars: usize) -> Self {
        Self {
            n_vars,
            ..Self::default()
        }
    }

    pub fn n_vars(&self) -> usize {
        self.n_vars
    }

    pub fn new_var(&mut self) -> VarId {
        let v = VarId(self.n_vars as u32);
        self.n_vars += 1;
        v
    }

    pub fn new_vars(&mut self, k: usize) -> Vec<VarId> {
        (0..k).map(|_| self.new_var()).collect()
    }

    pub fn objective(&self) -> &AffineForm {
        &self.objective
    }

    pub fn set_objective(&mut self, objective: AffineForm) {
        self.objective = objective;
    }

    pub fn equalities(&self) -> &[AffineForm] {
        &self.equalities
    }

    /// Adds the constraint `form = 0`. Identically-zero forms are skipped.
    pub fn add_equality(&mut self, form: AffineForm) {
        if !form.is_zero() {
            self.equalities.push(form);
        }
    }

    pub fn blocks(&self) -> &[PsdBlock] {
        &self.blocks
    }

    pub fn add_psd_block(&mut self, block: PsdBlock) {
        self.blocks.push(block);
    }

    /// Checks that every form only references declared variables.
    pub fn validate(&self) -> Result<(), ConicError> {
        let check = |f: &AffineForm, what: &str| -> Result<(), ConicError> {
            match f.max_var() {
                Some(v) if v.index() >= self.n_vars => Err(ConicError::UndeclaredVariable {
                    var: v.index(),
                    n_vars: self.n_vars,
                    context: what.to_string(),
                }),
                _ => Ok(()),
            }
        };
        check(&self.objective, "objective")?;
        for (k, e) in self.equalities.iter().enumerate() {
            check(e, &format!("equality {k}"))?;
        }
        for (b, block) in self.blocks.iter().enumerate() {
            for (&(i, j), f) in block.entries() {
                check(f, &format!("block {b} entry ({i},{j})"))?;
            }
        }
        Ok(())
    }

    /// Same program with the objective negated (used for maximization).
    pub fn negated(&self) -> ConicProgram {
        let mut p = self.clone();
        p.objective = -&self.objective;
        p
    }

    pub fn objective_value(&self, x: &[f64]) -> f64 {
        self.objective.eval(x)
    }

    /// Largest absolute equality residual and smallest block eigenvalue at `x`.
    pub fn feasibility(&self, x: &[f64]) -> Feasibility {
        let max_equality_residual = self
            .equalities
            .iter()
            .map(|e| e.eval(x).abs())
            .fold(0.0, f64::max);
        let min_eigenvalue = self
            .blocks
            .iter()
            .map(|b| {
                if b.size() == 0 {
                    f64::INFINITY
                } else {
                    b.eval(x).symmetric_eigenvalues().min()
                }
            })
            .fold(f64::INFINITY, f64::min);
        Feasibility {
            max_equality_residual,
            min_eigenvalue,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Feasibility {
    pub max_equality_residual: f64,
    pub min_eigenvalue: f64,
}

impl Feasibility {
    pub fn is_feasible(&self, tol: f64) -> bool {
        self.max_equality_residual <= tol && self.min_eigenvalue >= -tol
    }
}

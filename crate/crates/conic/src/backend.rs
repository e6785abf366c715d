//! Solver backends and the registry that dispatches to them.

use std::collections::BTreeMap;
use std::sync::{Arc, Mutex};

use crate::error::ConicError;
use crate::ipm::InteriorPoint;
use crate::presolve::{eliminate_equalities, PresolveOutcome, PresolveTolerances};
use crate::program::ConicProgram;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolveOptions {
    /// Relative gap and residual target for [`SolveStatus::Optimal`].
    pub tolerance: f64,
    /// Looser target accepted when the iteration stalls.
    pub near_optimal_tolerance: f64,
    pub max_iterations: usize,
    pub verbose: bool,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self {
            tolerance: 1e-9,
            near_optimal_tolerance: 1e-6,
            max_iterations: 120,
            verbose: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SolveStatus {
    Optimal,
    NearOptimal,
    Infeasible,
    Unbounded,
    SolverError,
}

impl SolveStatus {
    pub fn is_success(self) -> bool {
        matches!(self, SolveStatus::Optimal | SolveStatus::NearOptimal)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            SolveStatus::Optimal => "optimal",
            SolveStatus::NearOptimal => "near_optimal",
            SolveStatus::Infeasible => "infeasible",
            SolveStatus::Unbounded => "unbounded",
            SolveStatus::SolverError => "solver_error",
        }
    }
}

impl std::fmt::Display for SolveStatus {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone)]
pub struct SolveResult {
    pub status: SolveStatus,
    /// Primal objective value, constant included.
    pub objective: f64,
    /// Dual objective value, constant included.
    pub dual_objective: f64,
    /// Absolute primal-dual gap.
    pub gap: f64,
    pub primal_infeasibility: f64,
    pub dual_infeasibility: f64,
    pub assignment: Vec<f64>,
    pub iterations: usize,
    pub message: Option<String>,
}

impl SolveResult {
    pub fn error(n_vars: usize, msg: String) -> Self {
        Self::with_status(n_vars, SolveStatus::SolverError, Some(msg))
    }

    pub fn with_status(n_vars: usize, status: SolveStatus, message: Option<String>) -> Self {
        Self {
            status,
            objective: f64::NAN,
            dual_objective: f64::NAN,
            gap: f64::INFINITY,
            primal_infeasibility: f64::INFINITY,
            dual_infeasibility: f64::INFINITY,
            assignment: vec![0.0; n_vars],
            iterations: 0,
            message,
        }
    }
}

/// A conic solver. Implementations receive programs without equalities.
pub trait Backend: Send + Sync {
    fn name(&self) -> &str;
    /// Whether concurrent calls are safe.
    fn reentrant(&self) -> bool;
    fn solve_reduced(&self, program: &ConicProgram, opts: &SolveOptions) -> SolveResult;
}

struct Entry {
    backend: Arc<dyn Backend>,
    lock: Option<Mutex<()>>,
}

/// Named backends. Non-reentrant backends are serialized behind a mutex.
pub struct SolverRegistry {
    entries: BTreeMap<String, Entry>,
    default: Option<String>,
}

impl Default for SolverRegistry {
    fn default() -> Self {
        let mut r = Self::empty();
        r.register(Arc::new(InteriorPoint));
        r
    }
}

impl SolverRegistry {
    pub fn empty() -> Self {
        Self {
            entries: BTreeMap::new(),
            default: None,
        }
    }

    /// Registers `backend`; the first one registered becomes the default.
    pub fn register(&mut self, backend: Arc<dyn Backend>) {
        let name = backend.name().to_string();
        let lock = (!backend.reentrant()).then(|| Mutex::new(()));
        if self.default.is_none() {
            self.default = Some(name.clone());
        }
        self.entries.insert(name, Entry { backend, lock });
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.entries.keys().map(String::as_str)
    }

    pub fn default_name(&self) -> Option<&str> {
        self.default.as_deref()
    }

    /// Presolves, dispatches to backend `name` (or the default) and lifts
    /// the assignment back to the original variables.
    pub fn solve(
        &self,
        program: &ConicProgram,
        name: Option<&str>,
        opts: &SolveOptions,
    ) -> Result<SolveResult, ConicError> {
        program.validate()?;
        let name = match name {
            Some(n) => n,
            None => self.default.as_deref().ok_or(ConicError::NoBackend)?,
        };
        let entry = self
            .entries
            .get(name)
            .ok_or_else(|| ConicError::UnknownBackend(name.to_string()))?;
        let n = program.n_vars();
        let reduced = match eliminate_equalities(program, PresolveTolerances::default()) {
            PresolveOutcome::Reduced(r) => r,
            PresolveOutcome::Infeasible { residual } => {
                return Ok(SolveResult::with_status(
                    n,
                    SolveStatus::Infeasible,
                    Some(format!("inconsistent equalities (residual {residual:e})")),
                ))
            }
            PresolveOutcome::Unbounded => {
                return Ok(SolveResult::with_status(
                    n,
                    SolveStatus::Unbounded,
                    Some("objective depends on an unconstrained direction".into()),
                ))
            }
        };
        let mut res = if reduced.program.n_vars() == 0 {
            solve_constant(&reduced.program)
        } else {
            let _guard = entry.lock.as_ref().map(|m| m.lock().unwrap_or_else(|e| e.into_inner()));
            entry.backend.solve_reduced(&reduced.program, opts)
        };
        res.assignment = if res.assignment.len() == reduced.program.n_vars() {
            reduced.lift(&res.assignment)
        } else {
            vec![0.0; n]
        };
        Ok(res)
    }
}

fn solve_constant(p: &ConicProgram) -> SolveResult {
    let f = p.feasibility(&[]);
    let value = p.objective().constant_term();
    let scale = p
        .blocks()
        .iter()
        .flat_map(|b| b.entries().map(|(_, f)| f.max_abs()))
        .fold(1.0, f64::max);
    if f.min_eigenvalue < -1e-10 * scale {
        return SolveResult::with_status(
            0,
            SolveStatus::Infeasible,
            Some(format!("constant block has eigenvalue {:e}", f.min_eigenvalue)),
        );
    }
    SolveResult {
        status: SolveStatus::Optimal,
        objective: value,
        dual_objective: value,
        gap: 0.0,
        primal_infeasibility: 0.0,
        dual_infeasibility: 0.0,
        assignment: Vec::new(),
        iterations: 0,
        message: None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::affine::{AffineForm, VarId};
    use crate::program::PsdBlock;

    #[test]
    fn registry_has_ipm_default() {
        let r = SolverRegistry::default();
        assert_eq!(r.default_name(), Some("ipm"));
        assert!(matches!(
            r.solve(&ConicProgram::new(), Some("nope"), &Default::default()),
            Err(ConicError::UnknownBackend(_))
        ));
    }

    #[test]
    fn equalities_are_presolved() {
        // min x0 s.t. x0 = 2 x1 - 1, [[1, x1],[x1, 1]] >= 0  ->  -3
        let mut p = ConicProgram::with_vars(2);
        p.add_equality(AffineForm::from_terms(1.0, [(VarId(0), 1.0), (VarId(1), -2.0)]));
        let mut b = PsdBlock::new(2);
        b.set(0, 0, AffineForm::constant(1.0));
        b.set(1, 1, AffineForm::constant(1.0));
        b.set(1, 0, AffineForm::var(VarId(1)));
        p.add_psd_block(b);
        p.set_objective(AffineForm::var(VarId(0)));
        let r = SolverRegistry::default()
            .solve(&p, None, &Default::default())
            .unwrap();
        assert_eq!(r.status, SolveStatus::Optimal);
        assert!((r.objective + 3.0).abs() < 1e-7);
        assert!(p.feasibility(&r.assignment).is_feasible(1e-7));
    }

    #[test]
    fn fully_determined_program() {
        let mut p = ConicProgram::with_vars(1);
        p.add_equality(AffineForm::from_terms(-0.5, [(VarId(0), 1.0)]));
        let mut b = PsdBlock::new(1);
        b.set(0, 0, AffineForm::var(VarId(0)));
        p.add_psd_block(b);
        p.set_objective(AffineForm::var(VarId(0)));
        let r = SolverRegistry::default()
            .solve(&p, None, &Default::default())
            .unwrap();
        assert_eq!(r.status, SolveStatus::Optimal);
        assert_eq!(r.objective, 0.5);
        assert_eq!(r.assignment, vec![0.5]);
    }
}

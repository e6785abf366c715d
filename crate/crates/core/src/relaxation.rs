//! The convex relaxation for ground and thermal states and the scalar
//! energy-entropy balance validator.

use std::collections::HashSet;
use std::fmt;
use std::str::FromStr;

use kmsbound_conic::{AffineForm, ConicProgram, PsdBlock, VarId};
use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::dop::{dop_m_scalar, dop_scalar, emit_dop_m_constraint};
use crate::error::{Error, Result};
use crate::lattice::{commutator_with_h, extend_boundary, InteractionSpec, Window};
use crate::moment::{HermitianExpr, MomentFunctional};
use crate::pauli::{PauliOperator, PauliString, SiteIndex};

/// Inverse temperature; `Infinite` selects ground states.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Beta {
    Finite(f64),
    Infinite,
}

impl Beta {
    pub fn is_infinite(self) -> bool {
        matches!(self, Beta::Infinite)
    }

    pub fn value(self) -> f64 {
        match self {
            Beta::Finite(b) => b,
            Beta::Infinite => f64::INFINITY,
        }
    }
}

impl fmt::Display for Beta {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Beta::Finite(b) => write!(f, "{b}"),
            Beta::Infinite => f.write_str("inf"),
        }
    }
}

impl FromStr for Beta {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "inf" | "Inf" | "infinity" | "\u{221e}" => Ok(Beta::Infinite),
            t => {
                let b: f64 = t
                    .parse()
                    .map_err(|e| Error::Parse(format!("bad beta `{t}`: {e}")))?;
                if b.is_infinite() && b > 0.0 {
                    Ok(Beta::Infinite)
                } else if !(b >= 0.0) {
                    Err(Error::InvalidConfig(format!("beta must be >= 0, got {t}")))
                } else {
                    Ok(Beta::Finite(b))
                }
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sense {
    Min,
    Max,
}

#[derive(Debug, Clone)]
pub struct RelaxationConfig {
    pub window: Window,
    /// Basis window for the energy-entropy constraint; default shrinks
    /// `window` by the interaction range.
    pub eeb_window: Option<Window>,
    /// Side of the centered box whose full Pauli basis indexes the moment
    /// matrix; `None` imposes positivity of the whole window state.
    pub l_mom: Option<usize>,
    pub beta: Beta,
    pub m: u32,
    pub moment_floor: Option<f64>,
    pub objective: PauliOperator,
    pub sense: Sense,
}

impl RelaxationConfig {
    pub fn new(dim: usize, ell: u32, objective: PauliOperator, beta: Beta) -> Self {
        Self {
            window: Window::level(dim, ell),
            eeb_window: None,
            l_mom: None,
            beta,
            m: 3,
            moment_floor: None,
            objective,
            sense: Sense::Min,
        }
    }

    pub fn with_m(mut self, m: u32) -> Self {
        self.m = m;
        self
    }

    pub fn with_l_mom(mut self, l: Option<usize>) -> Self {
        self.l_mom = l;
        self
    }

    pub fn with_eeb_window(mut self, w: Option<Window>) -> Self {
        self.eeb_window = w;
        self
    }

    pub fn with_moment_floor(mut self, c: Option<f64>) -> Self {
        self.moment_floor = c;
        self
    }

    pub fn with_sense(mut self, s: Sense) -> Self {
        self.sense = s;
        self
    }

    fn validate(&self) -> Result<()> {
        if let Beta::Finite(b) = self.beta {
            if !(b >= 0.0) || !b.is_finite() {
                return Err(Error::InvalidConfig(format!("beta must be >= 0, got {b}")));
            }
        }
        if !self.objective.is_hermitian(1e-12) {
            return Err(Error::InvalidConfig(format!("observable `{}` is not Hermitian", self.objective)));
        }
        if !self.window.contains_all(self.objective.support().iter()) {
            return Err(Error::OutsideWindow(format!(
                "observable `{}` not in window {}",
                self.objective, self.window
            )));
        }
        if let Some(c) = self.moment_floor {
            if !(c > 0.0 && c < 1.0) {
                return Err(Error::InvalidConfig(format!("moment floor must lie in (0,1), got {c}")));
            }
        }
        if let Some(0) = self.l_mom {
            return Err(Error::InvalidConfig("L_mom must be positive".into()));
        }
        Ok(())
    }
}

/// `A_ij = omega(a_i^dagger a_j)`, `B_ij = omega(a_j a_i^dagger)`,
/// `C_ij = omega(a_i^dagger [H, a_j])`.
#[derive(Debug, Clone)]
pub struct EEBTriple {
    pub a: HermitianExpr,
    pub b: HermitianExpr,
    pub c: HermitianExpr,
}

impl EEBTriple {
    pub fn eval(&self, x: &[f64]) -> (DMatrix<Complex64>, DMatrix<Complex64>, DMatrix<Complex64>) {
        (self.a.eval(x), self.b.eval(x), self.c.eval(x))
    }
}

/// A built relaxation: the program (objective set for `sense`) and the
/// pieces needed to inspect its solutions.
#[derive(Debug, Clone)]
pub struct Relaxation {
    pub program: ConicProgram,
    pub functional: MomentFunctional,
    /// `omega(O)`
    pub objective: AffineForm,
    pub eeb_basis: Vec<PauliString>,
    pub triple: Option<EEBTriple>,
}

impl Relaxation {
    /// Same constraints, objective `omega(O)` for `Min` and `-omega(O)` for `Max`.
    pub fn program_for(&self, sense: Sense) -> ConicProgram {
        let mut p = self.program.clone();
        p.set_objective(match sense {
            Sense::Min => self.objective.clone(),
            Sense::Max => -&self.objective,
        });
        p
    }
}

/// Every Pauli string (identity first) supported in `w`.
pub fn pauli_basis(w: &Window) -> Vec<PauliString> {
    let index = SiteIndex::new(w.sites());
    let dim = 1u64 << w.len();
    let mut out = Vec::with_capacity((dim * dim) as usize);
    for xm in 0..dim {
        for zm in 0..dim {
            out.push(PauliString::from_masks(xm, zm, &index));
        }
    }
    out.sort_by_key(|p| p.weight());
    out
}

/// Default or configured EEB window, checked so that commutators with `H`
/// stay inside the moment window.
pub fn eeb_window(spec: &InteractionSpec, cfg: &RelaxationConfig) -> Result<Window> {
    let w = match &cfg.eeb_window {
        Some(w) => w.clone(),
        None => cfg.window.shrink(spec.range()),
    };
    if w.is_empty() {
        return Err(Error::InvalidConfig(format!(
            "window {} leaves no room for the energy-entropy basis",
            cfg.window
        )));
    }
    let ext = extend_boundary(spec, &w);
    if !cfg.window.contains_all(ext.sites().iter()) {
        return Err(Error::OutsideWindow(format!(
            "commutators of the basis on {w} reach {ext}, outside {}",
            cfg.window
        )));
    }
    Ok(w)
}

pub fn eeb_triple_for_basis(
    spec: &InteractionSpec,
    basis: &[PauliString],
    f: &MomentFunctional,
) -> Result<EEBTriple> {
    let n = basis.len();
    let a = f.pauli_moment_matrix(basis)?;
    let mut b = HermitianExpr::zeros(n);
    for i in 0..n {
        for j in 0..n {
            b.set(i, j, f.evaluate_product(&basis[j], &basis[i])?);
        }
    }
    let comms: Vec<PauliOperator> = basis
        .iter()
        .map(|p| commutator_with_h(spec, &p.clone().into()))
        .collect();
    let mut c = HermitianExpr::zeros(n);
    for i in 0..n {
        let ai: PauliOperator = basis[i].clone().into();
        for j in 0..n {
            c.set(i, j, f.evaluate(&ai.multiply(&comms[j]))?);
        }
    }
    Ok(EEBTriple { a, b, c })
}

/// The triple over the full Pauli basis of the EEB window.
pub fn eeb_triple(spec: &InteractionSpec, cfg: &RelaxationConfig, f: &MomentFunctional) -> Result<EEBTriple> {
    let w = eeb_window(spec, cfg)?;
    eeb_triple_for_basis(spec, &pauli_basis(&w), f)
}

fn form_key(f: &AffineForm) -> Vec<(u32, u64)> {
    let s = f.max_abs();
    let mut k: Vec<(u32, u64)> = f
        .terms()
        .iter()
        .map(|&(v, c)| (v.0, (c / s).to_bits()))
        .collect();
    k.push((u32::MAX, (f.constant_term() / s).to_bits()));
    k
}

/// Adds `omega([H, a]) = 0` for every `a` in `basis`, skipping duplicates.
pub fn add_stationarity(
    program: &mut ConicProgram,
    spec: &InteractionSpec,
    f: &MomentFunctional,
    basis: &[PauliString],
) -> Result<usize> {
    let mut seen = HashSet::new();
    let mut added = 0;
    for p in basis {
        let e = f.evaluate(&commutator_with_h(spec, &p.clone().into()))?;
        for part in [e.re, e.im] {
            if part.is_zero() {
                continue;
            }
            let key = form_key(&part);
            let neg = form_key(&-&part);
            if seen.contains(&key) || seen.contains(&neg) {
                continue;
            }
            seen.insert(key);
            program.add_equality(part);
            added += 1;
        }
    }
    Ok(added)
}

/// Positivity of the window state, either in full or through the moment
/// matrix of a centered sub-box plus `|omega(P)| <= 1` for the rest.
pub fn add_positivity(
    program: &mut ConicProgram,
    f: &MomentFunctional,
    l_mom: Option<usize>,
) -> Result<()> {
    let w = f.window();
    let inner = match l_mom {
        None => None,
        Some(l) => {
            let b = w.centered_box(l);
            (b.len() < w.len()).then_some(b)
        }
    };
    match inner {
        None => program.add_psd_block(f.density_expr().realify()),
        Some(b) => {
            let basis = pauli_basis(&b);
            let m = f.pauli_moment_matrix(&basis)?;
            let mut covered: HashSet<VarId> = HashSet::new();
            for p in &basis {
                if let Some(v) = f.var(p)? {
                    covered.insert(v);
                }
            }
            program.add_psd_block(m.realify());
            for (v, _) in f.variables() {
                if !covered.contains(v) {
                    let mut blk = PsdBlock::new(2);
                    blk.set(0, 0, AffineForm::constant(1.0));
                    blk.set(1, 1, AffineForm::constant(1.0));
                    blk.set(1, 0, AffineForm::var(*v));
                    program.add_psd_block(blk);
                }
            }
        }
    }
    Ok(())
}

/// Builds the relaxation for `min` (or `max`) of `omega(O)`.
pub fn build(spec: &InteractionSpec, cfg: &RelaxationConfig) -> Result<Relaxation> {
    cfg.validate()?;
    if cfg.window.dim() != spec.dim() {
        return Err(Error::InvalidConfig(format!(
            "window is {}-dimensional, interaction is {}-dimensional",
            cfg.window.dim(),
            spec.dim()
        )));
    }
    let mut program = ConicProgram::new();
    let f = MomentFunctional::new(&cfg.window, &mut program)?;
    add_positivity(&mut program, &f, cfg.l_mom)?;

    let ew = eeb_window(spec, cfg)?;
    let basis = pauli_basis(&ew);
    add_stationarity(&mut program, spec, &f, &basis)?;

    let triple = eeb_triple_for_basis(spec, &basis, &f)?;
    let c = triple.c.hermitian_part();
    match cfg.beta {
        Beta::Infinite => program.add_psd_block(c.realify()),
        Beta::Finite(beta) => {
            let n = c.size();
            let t = HermitianExpr::zeros(n).combine(0.0, &c, beta)?;
            emit_dop_m_constraint(&mut program, &triple.a, &triple.b, &t, cfg.m)?;
        }
    }
    if let Some(floor) = cfg.moment_floor {
        let n = triple.a.size();
        let id = HermitianExpr::scaled_identity(n, floor);
        program.add_psd_block(triple.a.combine(1.0, &id, -1.0)?.realify());
        program.add_psd_block(triple.b.combine(1.0, &id, -1.0)?.realify());
    }

    let objective = f.evaluate(&cfg.objective)?.re;
    program.set_objective(match cfg.sense {
        Sense::Min => objective.clone(),
        Sense::Max => -&objective,
    });
    Ok(Relaxation {
        program,
        functional: f,
        objective,
        eeb_basis: basis,
        triple: Some(triple),
    })
}

/// Which scalar function the energy-entropy check uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EebFunction {
    /// `x log(x/y)`
    Log,
    /// `2^m (x - x^{1-2^-m} y^{2^-m})`, the level solved by the relaxation.
    Hm(u32),
}

#[derive(Debug, Clone)]
pub struct EebCheck {
    /// Largest `lhs - rhs` over the samples.
    pub max_violation: f64,
    pub worst: usize,
    pub violations: Vec<f64>,
}

/// `omega(a^dagger a) log(omega(a^dagger a) / omega(a a^dagger)) - beta omega(a^dagger [H, a])`
/// for every sample `a` (or its `h_m` analogue); at infinite beta the
/// violation is `-omega(a^dagger [H, a])`.
pub fn scalar_eeb_check(
    spec: &InteractionSpec,
    beta: Beta,
    f: &MomentFunctional,
    samples: &[PauliOperator],
    function: EebFunction,
) -> Result<EebCheck> {
    let mut violations = Vec::with_capacity(samples.len());
    for a in samples {
        let ad = a.adjoint();
        let x = f.value(&ad.multiply(a))?.re;
        let y = f.value(&a.multiply(&ad))?.re;
        let z = f.value(&ad.multiply(&commutator_with_h(spec, a)))?.re;
        let v = match beta {
            Beta::Infinite => -z,
            Beta::Finite(b) => {
                let lhs = match function {
                    EebFunction::Log => dop_scalar(x.max(0.0), y.max(0.0)),
                    EebFunction::Hm(m) => dop_m_scalar(x, y, m),
                };
                lhs - b * z
            }
        };
        violations.push(v);
    }
    let (worst, max_violation) = violations
        .iter()
        .copied()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |acc, (k, v)| if v > acc.1 { (k, v) } else { acc });
    Ok(EebCheck {
        max_violation,
        worst,
        violations,
    })
}

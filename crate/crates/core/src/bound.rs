//! Certified intervals from a pair of min/max solves.

use std::fmt;
use std::time::Instant;

use kmsbound_conic::{solve, SolveOptions, SolveResult, SolveStatus};

use crate::error::Result;
use crate::kms::build_commuting;
use crate::lattice::InteractionSpec;
use crate::relaxation::{build, Beta, Relaxation, RelaxationConfig, Sense};

#[derive(Debug, Clone)]
pub struct BoundOptions {
    pub backend: Option<String>,
    pub solve: SolveOptions,
    pub commuting: bool,
    /// Largest absolute duality gap still reported as certified.
    pub gap_threshold: f64,
}

impl Default for BoundOptions {
    fn default() -> Self {
        Self {
            backend: None,
            solve: SolveOptions::default(),
            commuting: false,
            gap_threshold: 1e-4,
        }
    }
}

#[derive(Debug, Clone)]
pub struct BoundReport {
    pub p_min: f64,
    pub p_max: f64,
    pub status_min: SolveStatus,
    pub status_max: SolveStatus,
    pub gap_min: f64,
    pub gap_max: f64,
    pub certified: bool,
    pub ell: Option<u32>,
    pub m: u32,
    pub beta: Beta,
    pub l_mom: Option<usize>,
    pub commuting: bool,
    pub backend: String,
    pub seconds: f64,
    pub n_vars: usize,
    pub message: Option<String>,
}

impl BoundReport {
    pub fn width(&self) -> f64 {
        self.p_max - self.p_min
    }

    pub fn contains(&self, v: f64, tol: f64) -> bool {
        self.p_min - tol <= v && v <= self.p_max + tol
    }
}

impl fmt::Display for BoundReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "p_min      {:.10}", self.p_min)?;
        writeln!(f, "p_max      {:.10}", self.p_max)?;
        writeln!(f, "status     {} / {}", self.status_min, self.status_max)?;
        writeln!(f, "gap        {:.3e} / {:.3e}", self.gap_min, self.gap_max)?;
        let ell = self.ell.map_or("-".to_string(), |l| l.to_string());
        let lmom = self.l_mom.map_or("full".to_string(), |l| l.to_string());
        writeln!(
            f,
            "config     ell={ell} m={} beta={} lmom={lmom} commuting={} backend={} vars={}",
            self.m, self.beta, self.commuting, self.backend, self.n_vars
        )?;
        writeln!(f, "seconds    {:.3}", self.seconds)?;
        if let Some(msg) = &self.message {
            writeln!(f, "message    {msg}")?;
        }
        write!(f, "{}", if self.certified { "CERTIFIED" } else { "NOT CERTIFIED" })
    }
}

fn endpoint(r: &SolveResult, sense: Sense) -> f64 {
    if !r.status.is_success() {
        return f64::NAN;
    }
    match sense {
        Sense::Min => r.objective - r.gap,
        Sense::Max => -r.objective + r.gap,
    }
}

pub fn build_relaxation(spec: &InteractionSpec, cfg: &RelaxationConfig, commuting: bool) -> Result<Relaxation> {
    if commuting {
        build_commuting(spec, cfg)
    } else {
        build(spec, cfg)
    }
}

/// Solves an already built relaxation in both senses.
pub fn solve_relaxation(rel: &Relaxation, cfg: &RelaxationConfig, opts: &BoundOptions) -> Result<BoundReport> {
    let start = Instant::now();
    let rmin = solve(&rel.program_for(Sense::Min), opts.backend.as_deref(), &opts.solve)?;
    let rmax = solve(&rel.program_for(Sense::Max), opts.backend.as_deref(), &opts.solve)?;
    let p_min = endpoint(&rmin, Sense::Min);
    let p_max = endpoint(&rmax, Sense::Max);
    let ok = rmin.status.is_success()
        && rmax.status.is_success()
        && rmin.gap <= opts.gap_threshold
        && rmax.gap <= opts.gap_threshold;
    let message = [&rmin.message, &rmax.message]
        .into_iter()
        .flatten()
        .cloned()
        .reduce(|a, b| format!("{a}; {b}"));
    Ok(BoundReport {
        p_min,
        p_max,
        status_min: rmin.status,
        status_max: rmax.status,
        gap_min: rmin.gap,
        gap_max: rmax.gap,
        certified: ok && p_min <= p_max,
        ell: cfg.window.level_param(),
        m: cfg.m,
        beta: cfg.beta,
        l_mom: cfg.l_mom,
        commuting: opts.commuting,
        backend: opts.backend.clone().unwrap_or_else(|| "ipm".into()),
        seconds: start.elapsed().as_secs_f64(),
        n_vars: rel.program.n_vars(),
        message,
    })
}

/// Builds the relaxation for `cfg` and brackets `omega(O)`.
pub fn solve_bounds(spec: &InteractionSpec, cfg: &RelaxationConfig, opts: &BoundOptions) -> Result<BoundReport> {
    let start = Instant::now();
    let rel = build_relaxation(spec, cfg, opts.commuting)?;
    let mut report = solve_relaxation(&rel, cfg, opts)?;
    report.seconds = start.elapsed().as_secs_f64();
    Ok(report)
}

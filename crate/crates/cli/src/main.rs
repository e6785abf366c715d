//! `kmsbound`: certified bounds on local observables from the command line.

mod args;

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use kmsbound::bound::{build_relaxation, solve_relaxation};
use kmsbound::conic::{export_sdpa, solve, SolveOptions};
use kmsbound::oracles::{classical_ising_transfer, ring_expectation, tfising_magnetization, tfising_zz};
use kmsbound::relaxation::{eeb_window, pauli_basis};
use kmsbound::{
    scalar_eeb_check, BoundOptions, BoundReport, Beta, EebFunction, InteractionSpec, MomentFunctional, PauliOperator,
    RelaxationConfig, Sense,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::args::{load_model, parse_betas, parse_param, parse_window, with_params, Grid};

/// Exit code for an uncertified bound or a failed validation.
const EXIT_NOT_CERTIFIED: u8 = 2;

#[derive(Parser)]
#[command(name = "kmsbound", version, about = "Certified bounds on thermal and ground-state expectation values")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Bracket one expectation value.
    Bound(BoundCmd),
    /// Bounds over a parameter grid, as CSV.
    Sweep(SweepCmd),
    /// Reference values (closed forms, transfer matrix or exact diagonalization), as CSV.
    Oracle(OracleCmd),
    /// Write one relaxation in SDPA sparse format.
    Export(ExportCmd),
    /// Check the energy-entropy inequalities of a stored moment assignment.
    Validate(ValidateCmd),
}

#[derive(Args)]
struct ModelArgs {
    /// Built-in name (tf-ising, tf-ising-2d, classical-ising) or model file.
    #[arg(long)]
    model: String,
    /// Override a model parameter, `name=value`.
    #[arg(long = "param", value_parser = parse_param)]
    params: Vec<(String, f64)>,
}

impl ModelArgs {
    fn load(&self) -> Result<InteractionSpec> {
        let spec = load_model(&self.model)?;
        for (k, _) in &self.params {
            if spec.param(k).is_none() {
                bail!("model `{}` has no parameter `{k}`", self.model);
            }
        }
        with_params(&spec, &self.params)
    }
}

#[derive(Args)]
struct RelaxArgs {
    /// Observable in operator text form, e.g. "Z0 Z1" or "0.5 X0 + 0.5 X1".
    #[arg(long)]
    obs: String,
    /// Window level: the box of side 2*ell+1 around the origin.
    #[arg(long, default_value_t = 1)]
    ell: u32,
    /// Level of the h_m approximation of the relative entropy.
    #[arg(long, default_value_t = 3)]
    m: u32,
    /// Side of the centered box whose Pauli basis indexes the moment matrix.
    #[arg(long)]
    lmom: Option<usize>,
    /// Basis window of the energy-entropy constraint: a level `L` or `a:b`.
    #[arg(long)]
    eeb_window: Option<String>,
    /// Require the moment matrix to dominate this multiple of the identity.
    #[arg(long)]
    moment_floor: Option<f64>,
    /// Use the linear relaxation for commuting interactions.
    #[arg(long)]
    commuting: bool,
    #[arg(long, env = "KMSBOUND_BACKEND")]
    backend: Option<String>,
    /// Largest duality gap accepted for a certified interval.
    #[arg(long, default_value_t = 1e-4)]
    tol: f64,
}

impl RelaxArgs {
    fn observable(&self) -> Result<PauliOperator> {
        self.obs.parse().map_err(|e| anyhow!("observable `{}`: {e}", self.obs))
    }

    fn config(&self, spec: &InteractionSpec, beta: Beta) -> Result<RelaxationConfig> {
        let mut cfg = RelaxationConfig::new(spec.dim(), self.ell, self.observable()?, beta)
            .with_m(self.m)
            .with_l_mom(self.lmom)
            .with_moment_floor(self.moment_floor);
        if let Some(w) = &self.eeb_window {
            cfg = cfg.with_eeb_window(Some(parse_window(w, spec.dim())?));
        }
        Ok(cfg)
    }

    fn options(&self) -> BoundOptions {
        BoundOptions {
            backend: self.backend.clone(),
            solve: SolveOptions::default(),
            commuting: self.commuting,
            gap_threshold: self.tol,
        }
    }
}

#[derive(Args)]
struct BoundCmd {
    #[command(flatten)]
    model: ModelArgs,
    #[command(flatten)]
    relax: RelaxArgs,
    /// Inverse temperature, `inf` for ground states.
    #[arg(long, default_value = "inf")]
    beta: Beta,
    /// Also write the report here.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Write the minimizing moment assignment as `pauli_string,value` CSV.
    #[arg(long)]
    assignment_out: Option<PathBuf>,
}

#[derive(Args)]
struct SweepCmd {
    #[command(flatten)]
    model: ModelArgs,
    #[command(flatten)]
    relax: RelaxArgs,
    /// Comma separated inverse temperatures.
    #[arg(long, default_value = "inf")]
    beta: String,
    /// `name=start:stop:step` or `name=v1,v2,...`.
    #[arg(long)]
    grid: Option<String>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads (default: all cores).
    #[arg(long)]
    jobs: Option<usize>,
}

#[derive(Args)]
struct OracleCmd {
    #[command(flatten)]
    model: ModelArgs,
    /// `Mz`, `ZZ` or any operator; closed forms are used where known.
    #[arg(long)]
    obs: String,
    #[arg(long, default_value = "inf")]
    beta: String,
    #[arg(long)]
    grid: Option<String>,
    /// Ring length for exact diagonalization.
    #[arg(long, default_value_t = 10)]
    ring: usize,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    jobs: Option<usize>,
}

#[derive(Args)]
struct ExportCmd {
    #[command(flatten)]
    model: ModelArgs,
    #[command(flatten)]
    relax: RelaxArgs,
    #[arg(long, default_value = "inf")]
    beta: Beta,
    /// `min` or `max`; the max program minimizes `-O`.
    #[arg(long, default_value = "min")]
    sense: String,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct ValidateCmd {
    #[command(flatten)]
    model: ModelArgs,
    /// `pauli_string,value` CSV.
    #[arg(long)]
    assignment: PathBuf,
    /// Window level of the assignment.
    #[arg(long, default_value_t = 1)]
    ell: u32,
    #[arg(long, default_value = "inf")]
    beta: Beta,
    /// Basis window of the sampled operators: a level `L` or `a:b`.
    #[arg(long)]
    eeb_window: Option<String>,
    /// Check the h_m inequality of this level instead of the exact one.
    #[arg(long)]
    m: Option<u32>,
    #[arg(long, default_value_t = 200)]
    samples: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

fn output(path: &Option<PathBuf>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p).with_context(|| format!("creating {}", p.display()))?)),
        None => Box::new(io::stdout().lock()),
    })
}

fn thread_pool(jobs: Option<usize>) -> Result<rayon::ThreadPool> {
    let mut b = rayon::ThreadPoolBuilder::new();
    if let Some(j) = jobs {
        if j == 0 {
            bail!("--jobs must be positive");
        }
        b = b.num_threads(j);
    }
    Ok(b.build()?)
}

/// Column name and `(label, spec)` for every grid point, or the bare model.
fn grid_points(spec: &InteractionSpec, grid: &Option<String>) -> Result<(String, Vec<(String, InteractionSpec)>)> {
    match grid {
        None => {
            let label = spec.param("g").map_or(String::new(), |g| g.to_string());
            Ok(("g".into(), vec![(label, spec.clone())]))
        }
        Some(g) => {
            let grid = Grid::parse(g)?;
            if spec.param(&grid.name).is_none() {
                bail!("model has no parameter `{}` to sweep", grid.name);
            }
            let points = grid
                .values
                .iter()
                .map(|&v| Ok((v.to_string(), spec.with_param(&grid.name, v)?)))
                .collect::<Result<_>>()?;
            Ok((grid.name, points))
        }
    }
}

fn cmd_bound(c: &BoundCmd) -> Result<ExitCode> {
    let spec = c.model.load()?;
    let cfg = c.relax.config(&spec, c.beta)?;
    let opts = c.relax.options();
    let start = Instant::now();
    let rel = build_relaxation(&spec, &cfg, opts.commuting)?;
    if let Some(path) = &c.assignment_out {
        let res = solve(&rel.program_for(Sense::Min), opts.backend.as_deref(), &opts.solve)?;
        if !res.status.is_success() {
            bail!("minimization ended with status {}", res.status);
        }
        let f = rel.functional.clone().with_assignment(res.assignment);
        f.write_csv(File::create(path).with_context(|| format!("creating {}", path.display()))?)?;
    }
    let mut report = solve_relaxation(&rel, &cfg, &opts)?;
    report.seconds = start.elapsed().as_secs_f64();
    println!("{report}");
    if let Some(p) = &c.out {
        std::fs::write(p, format!("{report}\n")).with_context(|| format!("writing {}", p.display()))?;
    }
    Ok(if report.certified { ExitCode::SUCCESS } else { ExitCode::from(EXIT_NOT_CERTIFIED) })
}

fn sweep_row(label: &str, beta: Beta, cfg: &RelaxationConfig, r: &Result<BoundReport>) -> Vec<String> {
    let ell = cfg.window.level_param().map_or(String::new(), |l| l.to_string());
    let head = [label.to_string(), beta.to_string(), ell, cfg.m.to_string()];
    let tail = match r {
        Ok(r) => [
            r.p_min.to_string(),
            r.p_max.to_string(),
            r.status_min.to_string(),
            r.status_max.to_string(),
            format!("{:.3}", r.seconds),
        ],
        Err(e) => {
            let s = format!("error: {e}");
            ["NaN".into(), "NaN".into(), s.clone(), s, String::new()]
        }
    };
    head.into_iter().chain(tail).collect()
}

fn cmd_sweep(c: &SweepCmd) -> Result<ExitCode> {
    let spec = c.model.load()?;
    let betas = parse_betas(&c.beta)?;
    let (name, points) = grid_points(&spec, &c.grid)?;
    let opts = c.relax.options();
    let mut jobs = Vec::new();
    for &beta in &betas {
        for (label, s) in &points {
            jobs.push((label.clone(), beta, s.clone(), c.relax.config(s, beta)?));
        }
    }
    let rows: Vec<Vec<String>> = thread_pool(c.jobs)?.install(|| {
        jobs.par_iter()
            .map(|(label, beta, s, cfg)| {
                let r = kmsbound::solve_bounds(s, cfg, &opts).map_err(anyhow::Error::from);
                if let Err(e) = &r {
                    eprintln!("{name}={label} beta={beta}: {e}");
                }
                sweep_row(label, *beta, cfg, &r)
            })
            .collect()
    });
    let mut w = csv::Writer::from_writer(output(&c.out)?);
    w.write_record([name.as_str(), "beta", "ell", "m", "p_min", "p_max", "status_min", "status_max", "seconds"])?;
    for row in rows {
        w.write_record(row)?;
    }
    w.flush()?;
    Ok(ExitCode::SUCCESS)
}

fn is_one_of(s: &str, names: &[&str]) -> bool {
    names.contains(&s.trim())
}

fn oracle_value(model: &str, spec: &InteractionSpec, obs: &str, beta: Beta, ring: usize) -> Result<f64> {
    let tfising = is_one_of(model, &["tf-ising", "tfising"]);
    let classical = is_one_of(model, &["classical-ising", "ising"]);
    let g = spec.param("g").unwrap_or(0.0);
    let zz = is_one_of(obs, &["ZZ", "Z0 Z1"]);
    let mz = is_one_of(obs, &["Mz", "Z0"]);
    if tfising && obs.trim() == "Mz" {
        // spontaneous magnetization of the symmetry-broken ground state
        return Ok(if beta.is_infinite() { tfising_magnetization(g) } else { 0.0 });
    }
    if tfising && zz {
        return Ok(tfising_zz(g, beta));
    }
    if classical && (zz || mz) {
        let (m, corr) = match beta {
            Beta::Infinite => (0.0, 1.0),
            Beta::Finite(b) => classical_ising_transfer(b, 0.0),
        };
        return Ok(if zz { corr } else { m });
    }
    let op_text = match obs.trim() {
        "ZZ" => "Z0 Z1",
        "Mz" => "Z0",
        other => other,
    };
    let op: PauliOperator = op_text.parse().map_err(|e| anyhow!("observable `{obs}`: {e}"))?;
    Ok(ring_expectation(spec, ring, beta, &op)?)
}

fn cmd_oracle(c: &OracleCmd) -> Result<ExitCode> {
    let spec = c.model.load()?;
    let betas = parse_betas(&c.beta)?;
    let (name, points) = grid_points(&spec, &c.grid)?;
    let mut jobs = Vec::new();
    for &beta in &betas {
        for p in &points {
            jobs.push((beta, p));
        }
    }
    let rows: Vec<Result<[String; 4]>> = thread_pool(c.jobs)?.install(|| {
        jobs.par_iter()
            .map(|(beta, (label, s))| {
                let v = oracle_value(&c.model.model, s, &c.obs, *beta, c.ring)?;
                Ok([label.clone(), beta.to_string(), c.obs.clone(), v.to_string()])
            })
            .collect()
    });
    let mut w = csv::Writer::from_writer(output(&c.out)?);
    w.write_record([name.as_str(), "beta", "observable", "value"])?;
    for row in rows {
        w.write_record(row?)?;
    }
    w.flush()?;
    Ok(ExitCode::SUCCESS)
}

fn cmd_export(c: &ExportCmd) -> Result<ExitCode> {
    let spec = c.model.load()?;
    let cfg = c.relax.config(&spec, c.beta)?;
    let sense = match c.sense.as_str() {
        "min" => Sense::Min,
        "max" => Sense::Max,
        s => bail!("--sense must be `min` or `max`, got `{s}`"),
    };
    let rel = build_relaxation(&spec, &cfg, c.relax.commuting)?;
    let e = export_sdpa(&rel.program_for(sense), &c.out)?;
    eprintln!(
        "wrote {} ({} variables after eliminating equalities); objective constant {}",
        c.out.display(),
        e.presolved.program.n_vars(),
        e.objective_constant
    );
    Ok(ExitCode::SUCCESS)
}

fn cmd_validate(c: &ValidateCmd) -> Result<ExitCode> {
    let spec = c.model.load()?;
    let mut cfg = RelaxationConfig::new(spec.dim(), c.ell, PauliOperator::identity(), c.beta);
    if let Some(w) = &c.eeb_window {
        cfg = cfg.with_eeb_window(Some(parse_window(w, spec.dim())?));
    }
    let basis = pauli_basis(&eeb_window(&spec, &cfg)?);
    let file = File::open(&c.assignment).with_context(|| format!("opening {}", c.assignment.display()))?;
    let f = MomentFunctional::read_csv(&cfg.window, file)
        .with_context(|| format!("reading {}", c.assignment.display()))?;
    let mut rng = ChaCha8Rng::seed_from_u64(c.seed);
    let samples: Vec<PauliOperator> = (0..c.samples)
        .map(|_| {
            PauliOperator::from_terms(basis.iter().map(|p| {
                (p.clone(), kmsbound::Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
            }))
        })
        .collect();
    let function = c.m.map_or(EebFunction::Log, EebFunction::Hm);
    let r = scalar_eeb_check(&spec, c.beta, &f, &samples, function)?;
    let pass = r.max_violation <= 1e-6;
    println!(
        "{} max violation {:.3e} over {} samples (worst #{})",
        if pass { "PASS" } else { "FAIL" },
        r.max_violation,
        c.samples,
        r.worst
    );
    Ok(if pass { ExitCode::SUCCESS } else { ExitCode::from(EXIT_NOT_CERTIFIED) })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Bound(c) => cmd_bound(c),
        Command::Sweep(c) => cmd_sweep(c),
        Command::Oracle(c) => cmd_oracle(c),
        Command::Export(c) => cmd_export(c),
        Command::Validate(c) => cmd_validate(c),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

//! Real-symmetric conic programs, an interior-point SDP solver and SDPA
//! sparse import/export.

pub mod affine;
pub mod backend;
pub mod error;
pub mod ipm;
pub mod presolve;
pub mod program;
pub mod sdpa;

pub use affine::{AffineForm, VarId};
pub use backend::{Backend, SolveOptions, SolveResult, SolveStatus, SolverRegistry};
pub use error::ConicError;
pub use ipm::InteriorPoint;
pub use presolve::{eliminate_equalities, PresolveOutcome, PresolveTolerances, Presolved};
pub use program::{ConicProgram, Feasibility, PsdBlock};
pub use sdpa::{export_sdpa, export_sdpa_string, parse_sdpa, to_sdpa_string, SdpaExport, SdpaProblem};

/// Solves `p` with the default registry.
pub fn solve(
    p: &ConicProgram,
    backend: Option<&str>,
    opts: &SolveOptions,
) -> Result<SolveResult, ConicError> {
    use std::sync::OnceLock;
    static REGISTRY: OnceLock<SolverRegistry> = OnceLock::new();
    REGISTRY.get_or_init(SolverRegistry::default).solve(p, backend, opts)
}

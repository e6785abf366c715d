//! Certified bounds on local observables of translation-invariant spin
//! chains and lattices in ground and thermal states.

pub mod bound;
pub mod dop;
pub mod error;
pub mod kms;
pub mod lattice;
pub mod models;
pub mod moment;
pub mod oracles;
pub mod pauli;
pub mod relaxation;

pub use bound::{solve_bounds, BoundOptions, BoundReport};
pub use error::{Error, Result};
pub use lattice::{InteractionSpec, Window};
pub use moment::MomentFunctional;
pub use pauli::{Letter, PauliOperator, PauliString};
pub use relaxation::{build, scalar_eeb_check, Beta, EebFunction, Relaxation, RelaxationConfig, Sense};

pub use kmsbound_conic as conic;
pub use num_complex::Complex64;

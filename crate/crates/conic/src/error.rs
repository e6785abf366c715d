use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConicError {
    #[error("{context} references variable x{var} but the program declares {n_vars}")]
    UndeclaredVariable {
        var: usize,
        n_vars: usize,
        context: String,
    },
    #[error("unknown backend `{0}`")]
    UnknownBackend(String),
    #[error("no solver backend registered")]
    NoBackend,
    #[error("malformed SDPA input at line {line}: {msg}")]
    SdpaParse { line: usize, msg: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

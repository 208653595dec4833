use thiserror::Error;

/// Errors raised anywhere in the fewnomial pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("lattice point has |alpha| = {norm} exceeding degree {degree}")]
    Domain { norm: u64, degree: u64 },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("spectrum is empty")]
    EmptySpectrum,

    #[error("cannot choose {requested} points from a lattice of {available}")]
    SpectrumTooLarge { requested: usize, available: usize },

    #[error("polytope is not full-dimensional")]
    DegeneratePolytope,

    #[error("point lies on the boundary where the potential is singular")]
    Boundary,

    #[error("quadrature did not reach tolerance (estimated error {0:.3e})")]
    Quadrature(f64),

    #[error("solver failed: {0}")]
    Solver(String),

    #[error("system is degenerate: {0}")]
    DegenerateSystem(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("cannot write {path}: {source}")]
    Output {
        path: std::path::PathBuf,
        source: std::io::Error,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

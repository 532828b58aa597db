use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("FCIDUMP format error: {0}")]
    Format(String),

    #[error("FCIDUMP index error on line {line}: index {index} outside [0, {norb}]")]
    Index {
        line: usize,
        index: i64,
        norb: usize,
    },

    #[error(
        "FCIDUMP consistency error on line {line}: integral ({i} {j}|{k} {l}) given as {first} and {second}"
    )]
    Consistency {
        line: usize,
        i: usize,
        j: usize,
        k: usize,
        l: usize,
        first: f64,
        second: f64,
    },

    #[error("invalid molecular data: {0}")]
    InvalidIntegrals(String),

    #[error("qubit count mismatch: {left} vs {right}")]
    SizeMismatch { left: usize, right: usize },

    #[error("index {index} out of range for {n_qubits} qubits")]
    IndexOutOfRange { index: usize, n_qubits: usize },

    #[error("dense matrices are limited to {cap} qubits, got {n_qubits}")]
    MatrixTooLarge { n_qubits: usize, cap: usize },

    #[error("operator is not Hermitian (max imaginary coefficient {0:e})")]
    NotHermitian(f64),

    #[error("Pauli rotation requires a string with phase +1")]
    CompositePhase,

    #[error("infeasible occupation: {0}")]
    Occupation(String),

    #[error("invalid excitation: {0}")]
    Excitation(String),

    #[error("eigensolver did not converge after {iterations} iterations (residual {residual:e})")]
    NotConverged { iterations: usize, residual: f64 },

    #[error("configuration error: {0}")]
    Config(String),

    #[error("inconsistent inputs: {0}")]
    Mismatch(String),

    #[error("insufficient data: {0}")]
    Insufficient(String),

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("serialization error: {0}")]
    Serialize(String),
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

//! Crate-wide error type.

use alloc::string::String;
use core::fmt;

/// Errors raised by simulator, circuit, network, and diagnostics operations.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Error {
    /// Invalid configuration value (qubit count out of range, empty dataset, ...).
    Config(String),
    /// Qubit index out of range for the state it is applied to.
    QubitIndex { index: usize, n_qubits: usize },
    /// Parameter index out of range.
    ParamIndex { index: usize, len: usize },
    /// A vector or matrix had the wrong length.
    Shape {
        what: &'static str,
        expected: usize,
        got: usize,
    },
    /// Input that the operation cannot meaningfully process (e.g. all-zero
    /// vector passed to amplitude encoding).
    DegenerateInput(&'static str),
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::Config(msg) => write!(f, "configuration error: {msg}"),
            Error::QubitIndex { index, n_qubits } => {
                write!(f, "qubit index {index} out of range for {n_qubits} qubits")
            }
            Error::ParamIndex { index, len } => {
                write!(
                    f,
                    "parameter index {index} out of range for {len} parameters"
                )
            }
            Error::Shape {
                what,
                expected,
                got,
            } => write!(
                f,
                "shape mismatch for {what}: expected {expected}, got {got}"
            ),
            Error::DegenerateInput(what) => write!(f, "degenerate input: {what}"),
        }
    }
}

impl core::error::Error for Error {}

pub type Result<T> = core::result::Result<T, Error>;

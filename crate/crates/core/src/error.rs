use alloc::string::String;
use alloc::vec::Vec;

pub type Result<T> = core::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    /// An argument lies outside the domain where the quantity is defined.
    #[error("domain error: {0}")]
    Domain(String),

    /// A kernel was evaluated on its singular set.
    #[error("singular evaluation: {0}")]
    Singular(String),

    #[error("shape mismatch: expected {expected:?}, got {got:?}")]
    Shape {
        expected: (usize, usize),
        got: (usize, usize),
    },

    #[error("invalid configuration: {0}")]
    Config(String),

    /// The time-stepping produced a non-finite value.
    #[error("blow-up: non-finite value {value} at t_index={t_index}, x_index={x_index}")]
    BlowUp {
        t_index: usize,
        x_index: usize,
        value: f64,
    },

    #[error("Picard iteration did not converge after {} iterations (last distance {:e})", trace.len(), trace.last().copied().unwrap_or(f64::NAN))]
    NonConvergence { trace: Vec<f64> },

    /// Degenerate statistical input (zero variance, empty mask, too few samples).
    #[error("degenerate input: {0}")]
    Degenerate(String),
}

macro_rules! domain {
    ($($arg:tt)*) => { $crate::error::Error::Domain(alloc::format!($($arg)*)) };
}
macro_rules! config {
    ($($arg:tt)*) => { $crate::error::Error::Config(alloc::format!($($arg)*)) };
}
macro_rules! degenerate {
    ($($arg:tt)*) => { $crate::error::Error::Degenerate(alloc::format!($($arg)*)) };
}
pub(crate) use {config, degenerate, domain};

use nalgebra::Complex;
use thiserror::Error;

/// Convenience alias used throughout the crate.
pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("dead zone must be a finite nonnegative number, got {0}")]
    NegativeDeadZone(f64),

    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("impulse response is identically zero")]
    ZeroResponse,

    #[error("the zero vector has no unimodality classification")]
    ZeroVector,

    #[error("denominator is not strictly stable (margin {margin:e}); poles: {}", format_poles(.poles))]
    UnstablePoles { poles: Vec<Complex<f64>>, margin: f64 },

    #[error("periodic summation did not reach tolerance {tol:e} within {cap} terms (residual {residual:e})")]
    SummationDidNotConverge { tol: f64, cap: usize, residual: f64 },

    #[error("undecidable: {0}")]
    Undecidable(String),

    #[error("period {period} exceeds the brute-force cap {cap}")]
    OracleCapExceeded { period: usize, cap: usize },

    #[error("trajectory diverged at t = {t}: |u| = {value:e} exceeds cap {cap:e}")]
    Divergence { t: usize, value: f64, cap: f64 },

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

fn format_poles(poles: &[Complex<f64>]) -> String {
    poles
        .iter()
        .map(|p| format!("{:.6}{:+.6}i (|p|={:.6})", p.re, p.im, p.norm()))
        .collect::<Vec<_>>()
        .join(", ")
}

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("design matrix is rank deficient (column {column}: |R_kk| = {value:e})")]
    RankDeficient { column: usize, value: f64 },

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("coordinate descent did not converge after {sweeps} sweeps")]
    NonConvergence { sweeps: usize, iterate: Vec<f64> },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("non-finite value at row {row}, column {col}")]
    NonFinite { row: usize, col: usize },
}

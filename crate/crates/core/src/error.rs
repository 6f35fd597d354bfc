use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("lattice error: {0}")]
    Lattice(String),

    #[error("partition of unity has a gap at grid node {node} (no bump covers it)")]
    CoverGap { node: usize },

    #[error("weights for cell {cell} cannot reach measure ratio {target} (best {best}) after {retries} retries")]
    Weights {
        cell: usize,
        target: f64,
        best: f64,
        retries: usize,
    },

    #[error("multiplier support [{lo}, {hi}] exceeds the spectral grid (Lambda_max = {lambda_max})")]
    MultiplierSupport { lo: f64, hi: f64, lambda_max: f64 },

    #[error("{0}")]
    Degenerate(String),

    #[error("reconstruction diverged at iteration {iteration} (error {error:.3e}); frame bounds do not hold")]
    Divergence { iteration: usize, error: f64 },

    #[error("io: {0}")]
    Io(#[from] std::io::Error),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid reciprocal vector ({0}, {1}, {2}): indices must share parity")]
    MixedParity(i32, i32, i32),

    #[error("alloy fraction {0} outside [0, 1]")]
    AlloyFraction(f64),

    #[error("bands {lower} and {upper} are degenerate (gap {gap:e} eV); gauge is ill-defined")]
    Degenerate { lower: usize, upper: usize, gap: f64 },

    #[error("eigensolver failed: {0}")]
    Eigensolver(String),

    #[error("envelope does not vanish at the domain boundary (edge/peak = {0:e}); enlarge the domain")]
    BoundaryLeak(f64),

    #[error("assembled operator is not Hermitian (max deviation {0:e})")]
    NonHermitian(f64),

    #[error("grid too coarse: {n_grid} points, at least {required} needed")]
    GridResolution { n_grid: usize, required: usize },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("scaling fit needs positive heights, got {0}")]
    NonPositiveHeight(f64),

    #[error("scaling fit needs at least 3 points, got {0}")]
    TooFewPoints(usize),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error("config parse error: {0}")]
    Toml(#[from] toml::de::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

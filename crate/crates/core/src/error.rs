use thiserror::Error;

use crate::voting::WeightMethod;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("matrix is not symmetric (max asymmetry {asymmetry:e}, tolerance {tolerance:e})")]
    NotSymmetric { asymmetry: f64, tolerance: f64 },

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("matrix is numerically singular (pivot {pivot:e} below {threshold:e})")]
    Singular { pivot: f64, threshold: f64 },

    #[error("Jacobi sweeps did not converge after {0} sweeps")]
    EigenConvergence(usize),

    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("cannot split spectrum into blocks: {0}")]
    Blocking(String),

    #[error("matrix is not positive semidefinite (eigenvalue {eigenvalue:e})")]
    NotPsd { eigenvalue: f64 },

    #[error("block {index}: {source}")]
    Block {
        index: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("starting point is infeasible: {0}")]
    Infeasible(String),

    #[error("active-set solver reached the iteration cap ({iterations}); best objective {objective}")]
    QpConvergence {
        iterations: usize,
        objective: f64,
        best: Vec<f64>,
    },

    #[error("degenerate training data: {0}")]
    DegenerateData(String),

    #[error("{method} weight fit failed: {source}")]
    Fit {
        method: WeightMethod,
        #[source]
        source: Box<Error>,
    },

    #[error("SMO did not converge within {0} iterations")]
    SvmConvergence(usize),

    #[error("{stage}: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<Error>,
    },

    #[error("malformed input: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    /// Wraps the error with the pipeline stage that produced it.
    pub fn at_stage(self, stage: &'static str) -> Error {
        Error::Stage {
            stage,
            source: Box::new(self),
        }
    }
}

pub(crate) trait StageExt<T> {
    fn stage(self, stage: &'static str) -> Result<T>;
}

impl<T> StageExt<T> for Result<T> {
    fn stage(self, stage: &'static str) -> Result<T> {
        self.map_err(|e| e.at_stage(stage))
    }
}

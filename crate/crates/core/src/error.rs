use thiserror::Error;

pub type Result<T> = std::result::Result<T, RadcomError>;

#[derive(Debug, Error)]
pub enum RadcomError {
    #[error("dimension mismatch in {context}: expected {expected}, got {got}")]
    DimensionMismatch {
        context: &'static str,
        expected: usize,
        got: usize,
    },

    #[error("matrix is not Hermitian (max asymmetry {asymmetry:e})")]
    NotHermitian { asymmetry: f64 },

    #[error("non-finite value encountered in {0}")]
    NonFinite(&'static str),

    #[error("invalid deployment: {0}")]
    InvalidSpec(String),

    #[error(
        "ADMM did not converge in {iterations} iterations \
         (primal residual {primal:e}, dual residual {dual:e})"
    )]
    AdmmNotConverged {
        iterations: usize,
        primal: f64,
        dual: f64,
    },

    #[error("solver failed at outer iteration {iteration}: {source}")]
    Iteration {
        iteration: usize,
        #[source]
        source: Box<RadcomError>,
    },

    #[error("target WSR {target} bps/Hz is outside the reachable range [{min:.3}, {max:.3}] for {solver}")]
    TargetUnreachable {
        solver: String,
        target: f64,
        min: f64,
        max: f64,
    },

    #[error("{solver}: reported {metric} {reported} disagrees with recomputed {recomputed}")]
    MetricMismatch {
        solver: String,
        metric: &'static str,
        reported: f64,
        recomputed: f64,
    },

    #[error("config key `{key}`: {message}")]
    Config { key: String, message: String },

    #[error("config parse error: {0}")]
    ConfigParse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl RadcomError {
    pub(crate) fn at_iteration(self, iteration: usize) -> Self {
        RadcomError::Iteration {
            iteration,
            source: Box::new(self),
        }
    }

    /// True for errors caused by user input (config file or arguments) rather than the solvers.
    pub fn is_config_error(&self) -> bool {
        matches!(
            self,
            RadcomError::Config { .. }
                | RadcomError::ConfigParse(_)
                | RadcomError::InvalidSpec(_)
                | RadcomError::TargetUnreachable { .. }
        )
    }
}

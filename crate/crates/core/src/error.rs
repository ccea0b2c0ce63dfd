use thiserror::Error;

/// Why the operating region `{x : y(x) < 0}` is empty.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct OperabilityDiagnosis {
    pub theta: f64,
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub discriminant: f64,
    pub reason: String,
}

impl std::fmt::Display for OperabilityDiagnosis {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "{} (theta = {}, y(x) = {}x^2 + {}x + {}, discriminant = {})",
            self.reason, self.theta, self.a, self.b, self.c, self.discriminant
        )
    }
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("no unique stationary state: tree-sum normalization Z = {z}")]
    DegenerateStationaryState { z: f64 },

    #[error("current formulas disagree for J{pair}: factored {factored}, definition {definition}")]
    CurrentMismatch {
        pair: &'static str,
        factored: f64,
        definition: f64,
    },

    #[error("integrator failure at t = {time}: {reason}")]
    IntegratorFailure { time: f64, reason: String },

    #[error("engine cannot operate: {0}")]
    NotOperable(OperabilityDiagnosis),

    #[error(
        "extracted power grows without bound along the operating half-line beyond x = {last_x} nm"
    )]
    UnboundedOptimum { last_x: f64 },

    #[error("Fock truncation N = {fock_dim} too small: occupation tail {tail:e} at level N exceeds {limit:e}")]
    Truncation {
        fock_dim: usize,
        tail: f64,
        limit: f64,
    },

    #[error("joint steady state not reached by t_max = {t_max}: window residual {residual:e}")]
    Timeout { t_max: f64, residual: f64 },

    #[error("config error: {0}")]
    Config(String),

    #[error("schedule line {line}: {message}")]
    Schedule { line: u64, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

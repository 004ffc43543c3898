use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("unsupported spatial dimension {0} (expected 1..=4)")]
    UnsupportedDimension(usize),
    #[error("symbol undefined at the zero frequency")]
    ZeroFrequency,
    #[error("{op}: input has a nonzero spatial mean ({mean:.3e}); inverse operators need mean-zero fields")]
    NonzeroMean { op: &'static str, mean: f64 },
    #[error("elliptic source has nonzero mean {mean:.3e} (total charge does not vanish on the torus)")]
    ChargeObstruction { mean: f64 },
    #[error("field shape mismatch: {0}")]
    Shape(String),
    #[error("field is not in the {0} representation")]
    Representation(&'static str),
    #[error("grid has no time axis")]
    NoTimeAxis,
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("non-finite value detected at t = {t}: {what}")]
    NonFinite { t: f64, what: String },
    #[error("input has {fraction:.3e} of its energy outside the retained annulus")]
    OutsideAnnulus { fraction: f64 },
    #[error("modulation precondition violated: rate {measured:.3e} exceeds {allowed:.3e}")]
    Modulation { measured: f64, allowed: f64 },
    #[error("iteration diverged: measured ratio {ratio:.3}")]
    Diverged { ratio: f64 },
    #[error("inner solver did not converge at step {step}: residual trace {trace:?}")]
    InnerSolve { step: usize, trace: Vec<f64> },
    #[error("box unresolvable on grid: {0}")]
    Unresolvable(String),
    #[error("separation condition violated: {0}")]
    Separation(String),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("identity check failed: {0}")]
    Identity(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

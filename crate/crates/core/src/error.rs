use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error in {func}: {msg}")]
    Domain { func: &'static str, msg: String },

    #[error("{func} evaluated at a pole ({at})")]
    Pole { func: &'static str, at: String },

    #[error("orbit enumeration would exceed the entry cap of {cap} (radius {radius})")]
    Capacity { cap: usize, radius: f64 },

    #[error("requested tolerance {requested:e} not reachable; best achievable bound {achieved:e}")]
    Tolerance { requested: f64, achieved: f64 },

    #[error("orbit radius {radius} insufficient: tail bound {achieved:e} exceeds {requested:e}")]
    InsufficientRadius { radius: f64, achieved: f64, requested: f64 },

    #[error("division by (near) zero in {func}: {msg}")]
    Division { func: &'static str, msg: String },

    #[error("singular coupling: alpha = 1/c0 = {0}")]
    SingularCoupling(f64),

    #[error("evaluation point within {margin} of a pole at {pole}")]
    PoleProximity { pole: f64, margin: f64 },

    #[error("contract violation: {0}")]
    Contract(String),

    #[error("mode mismatch: {0}")]
    Mode(String),

    #[error("data error: {0}")]
    Data(String),

    #[error("ladder exhausted; largest tested value {0}")]
    Exhausted(f64),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn domain(func: &'static str, msg: impl Into<String>) -> Self {
        Error::Domain { func, msg: msg.into() }
    }
}

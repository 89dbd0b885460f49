use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Everything that can go wrong while building metrics, profiles, maps or reports.
#[derive(Debug, Clone, Error)]
pub enum Error {
    #[error("unknown metric `{0}`")]
    UnknownMetric(String),

    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("{what}: {value} lies outside the domain ({lo}, {hi})")]
    Domain {
        what: &'static str,
        value: f64,
        lo: f64,
        hi: f64,
    },

    #[error("invalid annulus geometry: {0}")]
    Geometry(String),

    #[error("metric is not regular on ({tau}, {sigma}): {reason}")]
    NotRegular {
        tau: f64,
        sigma: f64,
        reason: String,
    },

    #[error("degenerate metric: {0}")]
    Degenerate(String),

    #[error("r = {r} is below the Nitsche bound r* = {r_star} (fat annulus); use the critical profile")]
    FatRange { r: f64, r_star: f64 },

    #[error("r = {r} satisfies the Nitsche condition (r* = {r_star}); the extremal map exists")]
    NitscheRange { r: f64, r_star: f64 },

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("map is not orientation preserving: {0}")]
    Orientation(String),

    #[error("no sign change on [{lo}, {hi}] (f = {f_lo}, {f_hi}){hint}")]
    Bracket {
        lo: f64,
        hi: f64,
        f_lo: f64,
        f_hi: f64,
        hint: &'static str,
    },

    #[error("no root found below the growth cap starting from {start}")]
    UnboundedRoot { start: f64 },

    #[error("non-finite value at x = {x}")]
    Evaluation { x: f64 },

    #[error("{what} did not reach tolerance: best estimate {estimate} (error estimate {err})")]
    Accuracy {
        what: &'static str,
        estimate: f64,
        err: f64,
    },

    #[error("invalid configuration: {0}")]
    Config(String),
}

impl Error {
    /// Accuracy failures carry a usable best estimate; everything else is a
    /// precondition or input problem.
    pub fn is_accuracy(&self) -> bool {
        matches!(self, Error::Accuracy { .. })
    }
}

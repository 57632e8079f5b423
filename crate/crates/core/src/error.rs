use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid profile: {0}")]
    InvalidProfile(String),

    #[error("{what} = {value} is outside the admissible range {range}")]
    OutOfRange {
        what: &'static str,
        value: f64,
        range: String,
    },

    #[error("equator curvature is not positive (alpha = {alpha})")]
    NonPositiveCurvature { alpha: f64 },

    #[error("profile is singular: 6*b*beta - alpha^2 = {defect:e}; the cubic law degenerates")]
    SingularProfile { defect: f64 },

    #[error("series error: {0}")]
    Series(String),

    #[error("ODE step size underflow at t = {t}")]
    StepUnderflow { t: f64 },

    #[error("ODE step budget of {max_steps} exhausted at t = {t}")]
    StepLimit { t: f64, max_steps: usize },

    #[error("geodesic left the polar chart at t = {t}")]
    LeftChart { t: f64 },

    #[error("event not reached: {0}")]
    EventNotFound(String),

    #[error("no connecting geodesic found: {0}")]
    NoGeodesic(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("grid too coarse: {0}")]
    Resolution(String),

    #[error("not enough reliable samples: need {needed}, have {have}")]
    InsufficientSamples { needed: usize, have: usize },

    #[error("fit failed: {0}")]
    Fit(String),

    #[error("serialization: {0}")]
    Serde(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn check_range(what: &'static str, value: f64, lo: f64, hi: f64) -> Result<()> {
    if value.is_finite() && value > lo && value < hi {
        Ok(())
    } else {
        Err(Error::OutOfRange {
            what,
            value,
            range: format!("({lo}, {hi})"),
        })
    }
}

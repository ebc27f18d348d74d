use thiserror::Error;

/// Errors raised by the model, stability analysis and simulator.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("non-finite value for `{0}`")]
    NonFinite(&'static str),

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("non-positive gap {gap} m (vehicle overlap)")]
    NonPositiveGap { gap: f64 },

    #[error("speed {speed} m/s has no equilibrium (must lie in [0, {desired_velocity}))")]
    NoEquilibrium { speed: f64, desired_velocity: f64 },

    #[error("gap {gap} m is below the jam distance {jam_distance} m")]
    GapBelowJamDistance { gap: f64, jam_distance: f64 },

    #[error("finite-difference step {step} too large for gap {gap} m")]
    StepTooLarge { step: f64, gap: f64 },

    #[error("every grid cell lacks an equilibrium; stable area is undefined")]
    UndefinedArea,

    #[error("trajectory carries no measurable perturbation")]
    Indeterminate,

    #[error("perturbation would leave a non-positive gap ({gap} m) at vehicle {vehicle}")]
    PerturbationOverlap { vehicle: usize, gap: f64 },

    #[error("invalid scenario: {0}")]
    Scenario(String),

    #[error("config: {0}")]
    Config(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn finite(value: f64, name: &'static str) -> Result<f64> {
    if value.is_finite() {
        Ok(value)
    } else {
        Err(Error::NonFinite(name))
    }
}

//! Model constants: the IDM parameter set and the connectivity parameters
//! governing the connected-vehicle feedback term.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Intelligent-driver-model constants, plus vehicle length and driver
/// reaction time. `Default` gives the typical highway values.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IdmParams {
    /// Desired velocity (m/s).
    pub desired_velocity: f64,
    /// Safe time headway (s).
    pub safe_time_headway: f64,
    /// Maximum acceleration (m/s²).
    pub max_acceleration: f64,
    /// Comfortable deceleration (m/s²).
    pub comfortable_deceleration: f64,
    /// Free-acceleration exponent.
    pub acceleration_exponent: f64,
    /// Jam distance (m).
    pub jam_distance: f64,
    /// Vehicle length (m).
    pub vehicle_length: f64,
    /// Driver reaction time (s).
    pub reaction_time: f64,
}

impl Default for IdmParams {
    fn default() -> Self {
        Self {
            desired_velocity: 33.3,
            safe_time_headway: 1.6,
            max_acceleration: 0.73,
            comfortable_deceleration: 1.67,
            acceleration_exponent: 4.0,
            jam_distance: 2.0,
            vehicle_length: 5.0,
            reaction_time: 1.0,
        }
    }
}

impl IdmParams {
    pub fn validate(&self) -> Result<()> {
        positive("desired_velocity", self.desired_velocity)?;
        non_negative("safe_time_headway", self.safe_time_headway)?;
        positive("max_acceleration", self.max_acceleration)?;
        positive("comfortable_deceleration", self.comfortable_deceleration)?;
        positive("acceleration_exponent", self.acceleration_exponent)?;
        positive("jam_distance", self.jam_distance)?;
        positive("vehicle_length", self.vehicle_length)?;
        non_negative("reaction_time", self.reaction_time)?;
        Ok(())
    }

    /// Copy with the maximum acceleration and safe time headway replaced,
    /// the two axes of a stability diagram.
    pub fn with_axes(&self, max_acceleration: f64, safe_time_headway: f64) -> Self {
        Self {
            max_acceleration,
            safe_time_headway,
            ..*self
        }
    }

    /// `2·sqrt(a0·b0)`, the denominator of the dynamic part of the desired gap.
    pub(crate) fn braking_scale(&self) -> f64 {
        2.0 * (self.max_acceleration * self.comfortable_deceleration).sqrt()
    }
}

/// How the per-neighbor weights ω_k are assigned to the connected
/// predecessors. The same weight multiplies the velocity-difference and
/// acceleration sums.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "scheme", rename_all = "snake_case", deny_unknown_fields)]
pub enum WeightScheme {
    /// ω_k = ratio^k, independent of the headway.
    Geometric { ratio: f64 },
    /// ω_k = (reference_gap / s_k)^exponent.
    InverseDistancePower { exponent: f64, reference_gap: f64 },
    /// ω_k = value.
    UniformConstant { value: f64 },
}

impl Default for WeightScheme {
    fn default() -> Self {
        WeightScheme::Geometric { ratio: 0.5 }
    }
}

impl WeightScheme {
    pub fn validate(&self) -> Result<()> {
        match *self {
            WeightScheme::Geometric { ratio } => {
                if !(ratio > 0.0 && ratio < 1.0) {
                    return Err(invalid("weights.ratio", format!("{ratio} not in (0, 1)")));
                }
            }
            WeightScheme::InverseDistancePower {
                exponent,
                reference_gap,
            } => {
                if !(exponent >= 1.0) || !exponent.is_finite() {
                    return Err(invalid("weights.exponent", format!("{exponent} < 1")));
                }
                positive("weights.reference_gap", reference_gap)?;
            }
            WeightScheme::UniformConstant { value } => positive("weights.value", value)?,
        }
        Ok(())
    }

    /// Weight of the `k`-th connected predecessor (1-based) at headway `gap`.
    /// The caller guarantees `k ≥ 1` and `gap > 0`.
    pub fn weight(&self, k: usize, gap: f64) -> f64 {
        match *self {
            WeightScheme::Geometric { ratio } => ratio.powi(k as i32),
            WeightScheme::InverseDistancePower {
                exponent,
                reference_gap,
            } => (reference_gap / gap).powf(exponent),
            WeightScheme::UniformConstant { value } => value,
        }
    }
}

/// Sensitivities and reach of the connected-vehicle feedback term.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ConnectivityParams {
    /// Sensitivity to velocity differences, in [0, 1].
    pub kv: f64,
    /// Sensitivity to broadcast accelerations, in [0, 1].
    pub ka: f64,
    /// Maximum number of connected predecessors taken into account.
    pub max_neighbors: usize,
    /// Communication range (m).
    pub comm_range: f64,
    pub weights: WeightScheme,
}

impl Default for ConnectivityParams {
    fn default() -> Self {
        Self {
            kv: 0.3,
            ka: 0.3,
            max_neighbors: 2,
            comm_range: 1000.0,
            weights: WeightScheme::default(),
        }
    }
}

impl ConnectivityParams {
    /// Parameters that reduce the extended model to plain IDM.
    pub fn disabled() -> Self {
        Self {
            kv: 0.0,
            ka: 0.0,
            max_neighbors: 0,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        unit_interval("kv", self.kv)?;
        unit_interval("ka", self.ka)?;
        if !(self.comm_range > 0.0) {
            return Err(invalid("comm_range", format!("{} must be > 0", self.comm_range)));
        }
        self.weights.validate()
    }

    /// True when the feedback term vanishes identically.
    pub fn is_inactive(&self) -> bool {
        self.max_neighbors == 0 || (self.kv == 0.0 && self.ka == 0.0)
    }
}

fn invalid(name: &'static str, reason: String) -> Error {
    Error::InvalidParameter { name, reason }
}

fn positive(name: &'static str, value: f64) -> Result<()> {
    if value.is_finite() && value > 0.0 {
        Ok(())
    } else {
        Err(invalid(name, format!("{value} must be finite and > 0")))
    }
}

fn non_negative(name: &'static str, value: f64) -> Result<()> {
    if value.is_finite() && value >= 0.0 {
        Ok(())
    } else {
        Err(invalid(name, format!("{value} must be finite and >= 0")))
    }
}

fn unit_interval(name: &'static str, value: f64) -> Result<()> {
    if (0.0..=1.0).contains(&value) {
        Ok(())
    } else {
        Err(invalid(name, format!("{value} not in [0, 1]")))
    }
}

//! Classifies a perturbed run as decaying or growing.
//!
//! On an open road the peak gap deviation of the last vehicle is compared
//! with that of the perturbed vehicle. On a ring the disturbance keeps
//! circulating, so every vehicle eventually sees the largest amplitude;
//! there the platoon-wide peak deviation over the final third of the
//! post-perturbation horizon is compared with the peak over a short window
//! right after injection, before any growth or saturation.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::EquilibriumState;

use super::engine::{Collision, Trajectory};
use super::platoon::Boundary;

/// Half-width of the marginal band around an amplification ratio of one.
pub const GROWTH_BAND: f64 = 0.05;

/// Longest reference window after injection on a ring, in seconds. Shorter
/// runs use a tenth of the post-perturbation horizon.
pub const RING_REFERENCE_WINDOW: f64 = 10.0;

/// Peak deviations below this count as no perturbation at all.
pub const MEASURABLE_DEVIATION: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum GrowthClass {
    Decaying,
    Growing,
    Marginal,
}

impl GrowthClass {
    pub fn as_str(self) -> &'static str {
        match self {
            GrowthClass::Decaying => "decaying",
            GrowthClass::Growing => "growing",
            GrowthClass::Marginal => "marginal",
        }
    }

    fn from_ratio(ratio: f64) -> Self {
        if ratio < 1.0 - GROWTH_BAND {
            GrowthClass::Decaying
        } else if ratio > 1.0 + GROWTH_BAND {
            GrowthClass::Growing
        } else {
            GrowthClass::Marginal
        }
    }
}

impl std::fmt::Display for GrowthClass {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GrowthReport {
    /// `max_t |s_n(t) − s_e|` per vehicle (`0` for the open-road head).
    pub peak_deviation: Vec<f64>,
    /// Amplification ratio; infinite after a collision.
    pub ratio: f64,
    pub class: GrowthClass,
    pub collision: Option<Collision>,
}

pub fn measure_growth(traj: &Trajectory, eq: &EquilibriumState) -> Result<GrowthReport> {
    let n = traj.vehicles();
    let mut peak = vec![0.0_f64; n];
    for frame in &traj.samples {
        for (d, s) in peak.iter_mut().zip(frame) {
            if let Some(gap) = s.gap {
                *d = d.max((gap - eq.gap).abs());
            }
        }
    }
    if let Some(c) = traj.collision() {
        return Ok(GrowthReport {
            peak_deviation: peak,
            ratio: f64::INFINITY,
            class: GrowthClass::Growing,
            collision: Some(c),
        });
    }
    if peak.iter().all(|&d| d < MEASURABLE_DEVIATION) {
        return Err(Error::Indeterminate);
    }
    let ratio = match traj.boundary {
        Boundary::Open => {
            let target = traj.perturbation.map(|p| p.target).unwrap_or(1).max(1);
            let source = peak[target];
            if source < MEASURABLE_DEVIATION {
                return Err(Error::Indeterminate);
            }
            peak[n - 1] / source
        }
        Boundary::Ring { .. } => ring_envelope_ratio(traj, eq)?,
    };
    Ok(GrowthReport {
        peak_deviation: peak,
        ratio,
        class: GrowthClass::from_ratio(ratio),
        collision: None,
    })
}

fn ring_envelope_ratio(traj: &Trajectory, eq: &EquilibriumState) -> Result<f64> {
    let start = traj.perturbation.map(|p| p.at).unwrap_or(0.0);
    let end = *traj.times.last().ok_or(Error::Indeterminate)?;
    let span = end - start;
    if !(span > 0.0) {
        return Err(Error::Indeterminate);
    }
    let envelope = |from: f64, to: f64| {
        traj.times
            .iter()
            .zip(&traj.samples)
            .filter(|(&t, _)| t >= from && t <= to)
            .flat_map(|(_, frame)| frame.iter().filter_map(|s| s.gap))
            .map(|gap| (gap - eq.gap).abs())
            .fold(0.0_f64, f64::max)
    };
    let early = envelope(start, start + (span / 10.0).min(RING_REFERENCE_WINDOW));
    let late = envelope(end - span / 3.0, end);
    if early < MEASURABLE_DEVIATION {
        return Err(Error::Indeterminate);
    }
    Ok(late / early)
}

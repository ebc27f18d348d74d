//! The acceleration law: an IDM term for the immediate leader plus a
//! weighted feedback term over the connected predecessors, and the
//! equilibrium speed/gap relation.

use serde::{Deserialize, Serialize};

use crate::error::{finite, Error, Result};
use crate::params::{ConnectivityParams, IdmParams, WeightScheme};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum VehicleClass {
    /// Receives broadcasts from connected vehicles ahead.
    Connected,
    /// Perceives only the immediate leader.
    HumanDriven,
}

impl VehicleClass {
    pub fn symbol(self) -> char {
        match self {
            VehicleClass::Connected => 'C',
            VehicleClass::HumanDriven => 'H',
        }
    }
}

/// Kinematic state of one vehicle. `position` is the rear bumper.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VehicleState {
    pub position: f64,
    pub velocity: f64,
    pub acceleration: f64,
    pub class: VehicleClass,
    pub length: f64,
}

impl VehicleState {
    /// Bumper-to-bumper gap from `self` to `leader`.
    pub fn gap_to(&self, leader: &VehicleState) -> f64 {
        leader.position - self.position - leader.length
    }
}

/// Information broadcast by a connected predecessor, as seen by the follower.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Neighbor {
    /// Net distance from the follower to this predecessor (m).
    pub gap: f64,
    pub velocity: f64,
    pub acceleration: f64,
}

/// Uniform flow: every vehicle at `speed` with net gap `gap`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EquilibriumState {
    pub speed: f64,
    pub gap: f64,
}

impl EquilibriumState {
    /// Equilibrium at `speed`, with the gap from [`equilibrium_gap`].
    pub fn at_speed(speed: f64, p: &IdmParams) -> Result<Self> {
        Ok(Self {
            speed,
            gap: equilibrium_gap(speed, p)?,
        })
    }
}

/// Desired minimum gap `s0 + v·T + v·dv / (2·sqrt(a0·b0))`.
///
/// `dv` is the closing speed (follower minus leader). The result is not
/// clamped and may fall below `s0` when the gap is opening.
pub fn desired_gap(v: f64, dv: f64, p: &IdmParams) -> Result<f64> {
    finite(v, "v")?;
    finite(dv, "dv")?;
    Ok(p.jam_distance + v * p.safe_time_headway + v * dv / p.braking_scale())
}

/// IDM acceleration `a0·[1 − (v/v0)^δ − (s*/s)²]` for net gap `s`.
pub fn idm_acceleration(s: f64, v: f64, dv: f64, p: &IdmParams) -> Result<f64> {
    finite(s, "s")?;
    if s <= 0.0 {
        return Err(Error::NonPositiveGap { gap: s });
    }
    let s_star = desired_gap(v, dv, p)?;
    let free = free_term(v, p);
    let interaction = (s_star / s).powi(2);
    Ok(p.max_acceleration * (1.0 - free - interaction))
}

fn free_term(v: f64, p: &IdmParams) -> f64 {
    let ratio = v / p.desired_velocity;
    if p.acceleration_exponent == 4.0 {
        ratio.powi(4)
    } else {
        ratio.powf(p.acceleration_exponent)
    }
}

/// Weights ω_1..ω_M for connected predecessors at the given headways
/// (nearest first).
pub fn compute_weights(gaps: &[f64], scheme: &WeightScheme) -> Result<Vec<f64>> {
    gaps.iter()
        .enumerate()
        .map(|(i, &gap)| {
            finite(gap, "gap")?;
            if gap <= 0.0 {
                return Err(Error::NonPositiveGap { gap });
            }
            Ok(scheme.weight(i + 1, gap))
        })
        .collect()
}

/// Connected-vehicle feedback `−K_v·Σ ω_k·Δv_k + K_a·Σ ω_k·a_k`, with
/// `Δv_k = follower_v − v_k`.
pub fn cv_effect(follower_v: f64, neighbors: &[Neighbor], cp: &ConnectivityParams) -> Result<f64> {
    if neighbors.is_empty() {
        return Ok(0.0);
    }
    let gaps: Vec<f64> = neighbors.iter().map(|n| n.gap).collect();
    let weights = compute_weights(&gaps, &cp.weights)?;
    let (mut velocity_sum, mut accel_sum) = (0.0, 0.0);
    for (n, w) in neighbors.iter().zip(&weights) {
        velocity_sum += w * (follower_v - n.velocity);
        accel_sum += w * n.acceleration;
    }
    Ok(-cp.kv * velocity_sum + cp.ka * accel_sum)
}

/// Acceleration split into its IDM and connected-vehicle parts.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AccelerationBreakdown {
    pub idm: f64,
    pub cv: f64,
}

impl AccelerationBreakdown {
    pub fn total(&self) -> f64 {
        self.idm + self.cv
    }
}

/// Both acceleration terms for `follower` behind `leader`. Human-driven
/// vehicles ignore `cv_neighbors` and get the IDM term alone.
pub fn acceleration_breakdown(
    follower: &VehicleState,
    leader: &VehicleState,
    cv_neighbors: &[Neighbor],
    p: &IdmParams,
    cp: &ConnectivityParams,
) -> Result<AccelerationBreakdown> {
    let gap = follower.gap_to(leader);
    let idm = idm_acceleration(
        gap,
        follower.velocity,
        follower.velocity - leader.velocity,
        p,
    )?;
    let cv = match follower.class {
        VehicleClass::Connected if !cv_neighbors.is_empty() => {
            cv_effect(follower.velocity, cv_neighbors, cp)?
        }
        _ => 0.0,
    };
    Ok(AccelerationBreakdown { idm, cv })
}

pub fn total_acceleration(
    follower: &VehicleState,
    leader: &VehicleState,
    cv_neighbors: &[Neighbor],
    p: &IdmParams,
    cp: &ConnectivityParams,
) -> Result<f64> {
    acceleration_breakdown(follower, leader, cv_neighbors, p, cp).map(|b| b.total())
}

/// Equilibrium net gap `(s0 + v·T) / sqrt(1 − (v/v0)^δ)` at speed `v`.
pub fn equilibrium_gap(v: f64, p: &IdmParams) -> Result<f64> {
    finite(v, "v")?;
    if v < 0.0 || v >= p.desired_velocity {
        return Err(Error::NoEquilibrium {
            speed: v,
            desired_velocity: p.desired_velocity,
        });
    }
    let denom = 1.0 - free_term(v, p);
    Ok((p.jam_distance + v * p.safe_time_headway) / denom.sqrt())
}

const GAP_TOLERANCE: f64 = 1e-9;

/// Inverse of [`equilibrium_gap`] by bisection on `[0, v0)`.
pub fn equilibrium_speed(s: f64, p: &IdmParams) -> Result<f64> {
    finite(s, "s")?;
    if s < p.jam_distance {
        return Err(Error::GapBelowJamDistance {
            gap: s,
            jam_distance: p.jam_distance,
        });
    }
    // s_e(0) = s0 and s_e grows without bound as v → v0.
    let (mut lo, mut hi) = (0.0_f64, p.desired_velocity);
    if equilibrium_gap(lo, p)? >= s {
        return Ok(0.0);
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let gap = equilibrium_gap(mid, p)?;
        if (gap - s).abs() <= GAP_TOLERANCE {
            return Ok(mid);
        }
        if gap < s {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

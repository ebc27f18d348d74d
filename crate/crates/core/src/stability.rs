//! Linear string-stability criterion for the extended model.
//!
//! The criterion is evaluated from the partial derivatives of the IDM term
//! at an equilibrium (`g1 = ∂g/∂s`, `g2 = ∂g/∂v`, `g3 = ∂g/∂Δv`), the
//! per-unit-weight derivatives of the feedback term (`f4 = −K_v`,
//! `f5 = K_a`), the weight sum over the connected predecessors and the
//! reaction time `T′`:
//!
//! ```text
//! lhs = g1 − g2²/2 − g1·g2·T′ − g2·g3 + f4·Σω − g2·f5·Σω
//! ```
//!
//! The flow is string stable iff `lhs < 0`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{compute_weights, idm_acceleration, EquilibriumState};
use crate::params::{ConnectivityParams, IdmParams};

/// `|lhs|` at or below this is reported as marginal.
pub const MARGINAL_BAND: f64 = 1e-12;

/// Default central-difference step for [`finite_difference_partials`].
pub const DEFAULT_FD_STEP: f64 = 1e-5;

/// Partial derivatives of the IDM acceleration at an equilibrium.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IdmPartials {
    /// ∂g/∂s (1/s²).
    pub g1: f64,
    /// ∂g/∂v (1/s).
    pub g2: f64,
    /// ∂g/∂Δv (1/s).
    pub g3: f64,
}

/// Everything the criterion consumes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinearCoefficients {
    pub g1: f64,
    pub g2: f64,
    pub g3: f64,
    /// Per-unit-weight ∂f/∂Δv, equal to `−K_v`.
    pub f4: f64,
    /// Per-unit-weight ∂f/∂a, equal to `K_a`.
    pub f5: f64,
    /// Σω over the connected predecessors at their equilibrium headways.
    pub weight_sum: f64,
    pub reaction_time: f64,
}

impl LinearCoefficients {
    pub fn new(
        partials: IdmPartials,
        cp: &ConnectivityParams,
        weight_sum: f64,
        reaction_time: f64,
    ) -> Self {
        Self {
            g1: partials.g1,
            g2: partials.g2,
            g3: partials.g3,
            f4: -cp.kv,
            f5: cp.ka,
            weight_sum,
            reaction_time,
        }
    }
}

/// Closed-form partials of the IDM acceleration at `(s_e, v_e, Δv = 0)`.
pub fn analytic_partials(p: &IdmParams, eq: &EquilibriumState) -> IdmPartials {
    let (s, v) = (eq.gap, eq.speed);
    let a0 = p.max_acceleration;
    let delta = p.acceleration_exponent;
    let s_star = p.jam_distance + v * p.safe_time_headway;
    let free_slope = if v == 0.0 && delta > 1.0 {
        0.0
    } else {
        delta * v.powf(delta - 1.0) / p.desired_velocity.powf(delta)
    };
    let g1 = 2.0 * a0 * s_star * s_star / (s * s * s);
    let g2 = -a0 * (free_slope + 2.0 * p.safe_time_headway * s_star / (s * s));
    let g3 = -a0 * v * s_star / (s * s * (a0 * p.comfortable_deceleration).sqrt());
    debug_assert!(g1 > 0.0 && g2 < 0.0 && g3 <= 0.0, "sign pattern violated");
    IdmPartials { g1, g2, g3 }
}

/// Central-difference partials of [`idm_acceleration`] around the
/// equilibrium, with step `h` in each variable.
pub fn finite_difference_partials(
    p: &IdmParams,
    eq: &EquilibriumState,
    h: f64,
) -> Result<IdmPartials> {
    if !(h > 0.0) || !h.is_finite() {
        return Err(Error::InvalidParameter {
            name: "h",
            reason: format!("{h} must be finite and > 0"),
        });
    }
    let (s, v) = (eq.gap, eq.speed);
    if s - h <= 0.0 {
        return Err(Error::StepTooLarge { step: h, gap: s });
    }
    let acc = |s: f64, v: f64, dv: f64| idm_acceleration(s, v, dv, p);
    let g1 = (acc(s + h, v, 0.0)? - acc(s - h, v, 0.0)?) / (2.0 * h);
    let g2 = (acc(s, v + h, 0.0)? - acc(s, v - h, 0.0)?) / (2.0 * h);
    let g3 = (acc(s, v, h)? - acc(s, v, -h)?) / (2.0 * h);
    Ok(IdmPartials { g1, g2, g3 })
}

/// Left-hand side of the criterion; stable iff negative.
pub fn stability_lhs(c: &LinearCoefficients) -> f64 {
    let LinearCoefficients {
        g1,
        g2,
        g3,
        f4,
        f5,
        weight_sum,
        reaction_time,
    } = *c;
    g1 - 0.5 * g2 * g2 - g1 * g2 * reaction_time - g2 * g3 + f4 * weight_sum
        - g2 * f5 * weight_sum
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    Stable,
    Unstable,
    Marginal,
    NoEquilibrium,
}

impl Verdict {
    pub fn as_str(self) -> &'static str {
        match self {
            Verdict::Stable => "stable",
            Verdict::Unstable => "unstable",
            Verdict::Marginal => "marginal",
            Verdict::NoEquilibrium => "no-equilibrium",
        }
    }
}

impl std::fmt::Display for Verdict {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StabilityVerdict {
    pub lhs: f64,
    /// `lhs < 0` outside the marginal band.
    pub stable: bool,
    pub margin: f64,
}

impl StabilityVerdict {
    pub fn from_lhs(lhs: f64) -> Self {
        Self {
            lhs,
            stable: lhs < -MARGINAL_BAND,
            margin: lhs.abs(),
        }
    }

    pub fn verdict(&self) -> Verdict {
        if self.lhs.abs() <= MARGINAL_BAND {
            Verdict::Marginal
        } else if self.stable {
            Verdict::Stable
        } else {
            Verdict::Unstable
        }
    }
}

/// Net equilibrium distance from a connected vehicle to its `k`-th
/// connected predecessor when consecutive CVs sit `cv_spacing` platoon
/// positions apart.
pub fn equilibrium_cv_headway(eq_gap: f64, vehicle_length: f64, cv_spacing: usize, k: usize) -> f64 {
    (cv_spacing * k) as f64 * (eq_gap + vehicle_length) - vehicle_length
}

/// Assembles the criterion inputs at equilibrium speed `v_e` with `neighbors`
/// connected predecessors `cv_spacing` positions apart.
pub fn linear_coefficients(
    p: &IdmParams,
    cp: &ConnectivityParams,
    v_e: f64,
    cv_spacing: usize,
    neighbors: usize,
) -> Result<LinearCoefficients> {
    if cv_spacing == 0 {
        return Err(Error::InvalidParameter {
            name: "cv_spacing",
            reason: "must be >= 1".into(),
        });
    }
    let eq = EquilibriumState::at_speed(v_e, p)?;
    let partials = analytic_partials(p, &eq);
    let headways: Vec<f64> = (1..=neighbors)
        .map(|k| equilibrium_cv_headway(eq.gap, p.vehicle_length, cv_spacing, k))
        .collect();
    let weight_sum: f64 = compute_weights(&headways, &cp.weights)?.iter().sum();
    Ok(LinearCoefficients::new(
        partials,
        cp,
        weight_sum,
        p.reaction_time,
    ))
}

pub fn classify_point(
    p: &IdmParams,
    cp: &ConnectivityParams,
    v_e: f64,
    cv_spacing: usize,
    neighbors: usize,
) -> Result<StabilityVerdict> {
    let c = linear_coefficients(p, cp, v_e, cv_spacing, neighbors)?;
    Ok(StabilityVerdict::from_lhs(stability_lhs(&c)))
}

/// Classification of the plain IDM (no connected-vehicle feedback).
pub fn classify_idm(p: &IdmParams, v_e: f64) -> Result<StabilityVerdict> {
    classify_point(p, &ConnectivityParams::disabled(), v_e, 1, 0)
}

//! Cross-checks the analytic criterion against simulated perturbation
//! growth on a ring.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::map::AxisRange;
use crate::params::{ConnectivityParams, IdmParams};
use crate::sim::{
    measure_growth, run, GrowthClass, PerturbationKind, PerturbationSpec, PlatoonComposition,
    ScenarioSpec, SimConfig,
};
use crate::stability::{classify_point, Verdict};

/// Points closer to the boundary than this fraction of the median `|lhs|`
/// of their batch are excluded from the comparison.
pub const DEFAULT_MARGIN_FRACTION: f64 = 0.1;

#[derive(Debug, Clone, PartialEq)]
pub struct VerifySpec {
    pub idm: IdmParams,
    pub connectivity: ConnectivityParams,
    pub equilibrium_speed: f64,
    pub composition: PlatoonComposition,
    pub cv_spacing: usize,
    /// Each entry is one batch: connected predecessors used by both the
    /// criterion and the simulated drivers.
    pub neighbor_counts: Vec<usize>,
    /// `(max_acceleration, time_headway)` points.
    pub points: Vec<(f64, f64)>,
    pub perturbation_target: usize,
    pub pulse: f64,
    pub pulse_time: f64,
    pub sim: SimConfig,
    pub margin_fraction: f64,
}

impl Default for VerifySpec {
    fn default() -> Self {
        Self {
            idm: IdmParams::default(),
            connectivity: ConnectivityParams::default(),
            equilibrium_speed: 20.0,
            composition: PlatoonComposition::new("CHH", 30).expect("valid pattern"),
            cv_spacing: 3,
            neighbor_counts: vec![0, 2],
            points: grid_points(&AxisRange::new(0.3, 2.5, 5), &AxisRange::new(0.5, 2.5, 5)),
            perturbation_target: 0,
            pulse: -0.5,
            pulse_time: 1.0,
            sim: SimConfig::default(),
            margin_fraction: DEFAULT_MARGIN_FRACTION,
        }
    }
}

/// All `(a_m, T_d)` combinations, headway outer.
pub fn grid_points(max_acceleration: &AxisRange, time_headway: &AxisRange) -> Vec<(f64, f64)> {
    time_headway
        .values()
        .flat_map(|t| max_acceleration.values().map(move |a| (a, t)))
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct PointResult {
    pub neighbors: usize,
    pub max_acceleration: f64,
    pub time_headway: f64,
    pub lhs: f64,
    pub analytic: Verdict,
    pub simulated: GrowthClass,
    pub ratio: f64,
    pub collided: bool,
    /// False when the point lies inside the excluded band near the boundary.
    pub retained: bool,
}

impl PointResult {
    pub fn agrees(&self) -> bool {
        matches!(
            (self.analytic, self.simulated),
            (Verdict::Stable, GrowthClass::Decaying) | (Verdict::Unstable, GrowthClass::Growing)
        )
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct VerifyReport {
    pub rows: Vec<PointResult>,
}

impl VerifyReport {
    pub fn retained(&self) -> impl Iterator<Item = &PointResult> {
        self.rows.iter().filter(|r| r.retained)
    }

    pub fn retained_count(&self) -> usize {
        self.retained().count()
    }

    pub fn agreement_count(&self) -> usize {
        self.retained().filter(|r| r.agrees()).count()
    }

    /// Fraction of retained points where both verdicts agree.
    pub fn agreement_rate(&self) -> Result<f64> {
        let n = self.retained_count();
        if n == 0 {
            return Err(Error::Scenario(
                "every point was excluded as near-boundary; comparison is inconclusive".into(),
            ));
        }
        Ok(self.agreement_count() as f64 / n as f64)
    }
}

fn median(values: &mut [f64]) -> f64 {
    values.sort_by(f64::total_cmp);
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2]
    } else {
        0.5 * (values[n / 2 - 1] + values[n / 2])
    }
}

/// Simulates one parameter point and classifies the perturbation growth.
pub fn simulate_point(
    spec: &VerifySpec,
    neighbors: usize,
    max_acceleration: f64,
    time_headway: f64,
) -> Result<(GrowthClass, f64, bool)> {
    let idm = spec.idm.with_axes(max_acceleration, time_headway);
    let connectivity = ConnectivityParams {
        max_neighbors: neighbors,
        ..spec.connectivity
    };
    let scenario = ScenarioSpec::ring(
        spec.composition.clone(),
        spec.equilibrium_speed,
        idm,
        connectivity,
    )?
    .with_perturbation(PerturbationSpec {
        target: spec.perturbation_target,
        kind: PerturbationKind::VelocityPulse { delta: spec.pulse },
        at: spec.pulse_time,
    });
    let traj = run(&scenario, &spec.sim)?;
    let report = measure_growth(&traj, &scenario.initial)?;
    Ok((report.class, report.ratio, report.collision.is_some()))
}

pub fn verify(spec: &VerifySpec) -> Result<VerifyReport> {
    if spec.points.is_empty() || spec.neighbor_counts.is_empty() {
        return Err(Error::Scenario("no parameter points to verify".into()));
    }
    let jobs: Vec<(usize, f64, f64)> = spec
        .neighbor_counts
        .iter()
        .flat_map(|&m| spec.points.iter().map(move |&(a, t)| (m, a, t)))
        .collect();
    let mut rows = jobs
        .par_iter()
        .map(|&(m, a, t)| {
            let p = spec.idm.with_axes(a, t);
            let verdict =
                classify_point(&p, &spec.connectivity, spec.equilibrium_speed, spec.cv_spacing, m)?;
            let (simulated, ratio, collided) = simulate_point(spec, m, a, t)?;
            Ok(PointResult {
                neighbors: m,
                max_acceleration: a,
                time_headway: t,
                lhs: verdict.lhs,
                analytic: verdict.verdict(),
                simulated,
                ratio,
                collided,
                retained: true,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    for &m in &spec.neighbor_counts {
        let mut magnitudes: Vec<f64> = rows
            .iter()
            .filter(|r| r.neighbors == m)
            .map(|r| r.lhs.abs())
            .collect();
        let cutoff = spec.margin_fraction * median(&mut magnitudes);
        for r in rows.iter_mut().filter(|r| r.neighbors == m) {
            r.retained = r.lhs.abs() >= cutoff && r.analytic != Verdict::Marginal;
        }
    }
    Ok(VerifyReport { rows })
}

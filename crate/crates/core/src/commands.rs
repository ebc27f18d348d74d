//! Subcommand bodies behind the `cvidm` binary. Each writes to the given
//! sinks and returns the process exit code.

use std::io::{self, Write};

use crate::config::RunConfig;
use crate::error::Error;
use crate::map::{region_area, stability_map, StabilityMapGrid};
use crate::model::{acceleration_breakdown, equilibrium_gap, Neighbor, VehicleClass, VehicleState};
use crate::output::{
    critical_curves_svg, num, write_equilibrium_csv, write_map_csv, write_trajectory_csv,
};
use crate::sim::{measure_growth, run};
use crate::stability::{linear_coefficients, stability_lhs, StabilityVerdict};
use crate::verify::verify;

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_DOMAIN: i32 = 2;
pub const EXIT_COLLISION: i32 = 3;
pub const EXIT_DISAGREEMENT: i32 = 4;

#[derive(Debug)]
pub struct CommandError {
    pub code: i32,
    pub message: String,
}

impl CommandError {
    pub fn usage(message: impl Into<String>) -> Self {
        Self {
            code: EXIT_USAGE,
            message: message.into(),
        }
    }
}

impl std::fmt::Display for CommandError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.message)
    }
}

impl std::error::Error for CommandError {}

impl From<Error> for CommandError {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::Config(_) => EXIT_USAGE,
            _ => EXIT_DOMAIN,
        };
        Self {
            code,
            message: e.to_string(),
        }
    }
}

impl From<io::Error> for CommandError {
    fn from(e: io::Error) -> Self {
        Self::usage(format!("i/o: {e}"))
    }
}

pub type CommandResult = std::result::Result<i32, CommandError>;

/// Inputs of a single acceleration evaluation.
#[derive(Debug, Clone, PartialEq)]
pub struct AccelInput {
    pub gap: f64,
    pub speed: f64,
    pub leader_speed: f64,
    pub class: VehicleClass,
    pub neighbors: Vec<Neighbor>,
}

pub fn cmd_accel(cfg: &RunConfig, input: &AccelInput, out: &mut dyn Write) -> CommandResult {
    cfg.idm.validate()?;
    cfg.connectivity.validate()?;
    let length = cfg.idm.vehicle_length;
    let follower = VehicleState {
        position: 0.0,
        velocity: input.speed,
        acceleration: 0.0,
        class: input.class,
        length,
    };
    let leader = VehicleState {
        position: input.gap + length,
        velocity: input.leader_speed,
        acceleration: 0.0,
        class: VehicleClass::HumanDriven,
        length,
    };
    let b = acceleration_breakdown(&follower, &leader, &input.neighbors, &cfg.idm, &cfg.connectivity)?;
    writeln!(out, "idm: {}", num(b.idm))?;
    writeln!(out, "cv: {}", num(b.cv))?;
    writeln!(out, "total: {}", num(b.total()))?;
    Ok(EXIT_OK)
}

/// Equilibrium gaps for each speed; speeds outside `[0, v0)` are flagged.
pub fn cmd_equilibrium(cfg: &RunConfig, speeds: &[f64], out: &mut dyn Write) -> CommandResult {
    if speeds.is_empty() {
        return Err(CommandError::usage("no speeds given"));
    }
    cfg.idm.validate()?;
    let mut rows = Vec::with_capacity(speeds.len());
    for &v in speeds {
        match equilibrium_gap(v, &cfg.idm) {
            Ok(s) => rows.push((v, Some(s))),
            Err(Error::NoEquilibrium { .. }) => rows.push((v, None)),
            Err(e) => return Err(e.into()),
        }
    }
    write_equilibrium_csv(&rows, out)?;
    Ok(EXIT_OK)
}

/// Criterion inputs and verdict at the configured parameter point, once per
/// entry of `map.neighbors`.
pub fn cmd_criterion(cfg: &RunConfig, out: &mut dyn Write) -> CommandResult {
    if cfg.map.neighbors.is_empty() {
        return Err(CommandError::usage("map.neighbors is empty"));
    }
    cfg.idm.validate()?;
    cfg.connectivity.validate()?;
    let v_e = cfg.scenario.equilibrium_speed;
    writeln!(out, "M,g1,g2,g3,f4,f5,weight_sum,lhs,verdict")?;
    for &m in &cfg.map.neighbors {
        let c = linear_coefficients(&cfg.idm, &cfg.connectivity, v_e, cfg.platoon.cv_spacing, m)?;
        let lhs = stability_lhs(&c);
        let verdict = StabilityVerdict::from_lhs(lhs).verdict();
        writeln!(
            out,
            "{m},{},{},{},{},{},{},{},{}",
            num(c.g1),
            num(c.g2),
            num(c.g3),
            num(c.f4),
            num(c.f5),
            num(c.weight_sum),
            num(lhs),
            verdict.as_str()
        )?;
    }
    Ok(EXIT_OK)
}

/// Sweeps every entry of `map.neighbors`. The first sweep goes to `csv`;
/// all of them are drawn into `svg`; the stable-area table goes to `summary`.
pub fn cmd_map(
    cfg: &RunConfig,
    csv: &mut dyn Write,
    svg: Option<&mut dyn Write>,
    summary: &mut dyn Write,
) -> CommandResult {
    if cfg.map.neighbors.is_empty() {
        return Err(CommandError::usage("map.neighbors is empty"));
    }
    if cfg.map.max_acceleration.count == 0 || cfg.map.time_headway.count == 0 {
        return Err(CommandError::usage("stability map grid is empty"));
    }
    let grids = cfg
        .grids()
        .iter()
        .map(stability_map)
        .collect::<Result<Vec<StabilityMapGrid>, _>>()?;
    write_map_csv(&grids[0], &mut *csv)?;
    csv.flush()?;
    if let Some(svg) = svg {
        let labelled: Vec<(usize, &StabilityMapGrid)> =
            grids.iter().map(|g| (g.spec.neighbors, g)).collect();
        svg.write_all(critical_curves_svg(&labelled).as_bytes())?;
        svg.flush()?;
    }
    writeln!(summary, "M,stable_area")?;
    for g in &grids {
        writeln!(summary, "{},{}", g.spec.neighbors, num(region_area(g)?))?;
    }
    Ok(EXIT_OK)
}

/// Runs the configured scenario. The trajectory is written even when the
/// run ends in a collision, which yields [`EXIT_COLLISION`].
pub fn cmd_simulate(cfg: &RunConfig, csv: &mut dyn Write, summary: &mut dyn Write) -> CommandResult {
    let scenario = cfg.scenario()?;
    let traj = run(&scenario, &cfg.sim)?;
    write_trajectory_csv(&traj, &mut *csv)?;
    csv.flush()?;
    let end = traj.times.last().copied().unwrap_or(0.0);
    writeln!(summary, "vehicles: {}", traj.vehicles())?;
    writeln!(summary, "equilibrium_gap: {}", num(scenario.initial.gap))?;
    writeln!(summary, "end_time: {}", num(end))?;
    if scenario.perturbation.is_some() {
        match measure_growth(&traj, &scenario.initial) {
            Ok(r) => {
                writeln!(summary, "growth: {}", r.class)?;
                writeln!(summary, "ratio: {}", num(r.ratio))?;
            }
            Err(Error::Indeterminate) => writeln!(summary, "growth: indeterminate")?,
            Err(e) => return Err(e.into()),
        }
    }
    match traj.collision() {
        Some(c) => {
            writeln!(
                summary,
                "collision: t={} follower={} leader={} gap={}",
                num(c.time),
                c.follower,
                c.leader,
                num(c.gap)
            )?;
            Ok(EXIT_COLLISION)
        }
        None => {
            writeln!(summary, "collision: none")?;
            Ok(EXIT_OK)
        }
    }
}

/// Compares analytic verdicts with simulated growth and prints one row per
/// point. Any disagreement among retained points yields
/// [`EXIT_DISAGREEMENT`].
pub fn cmd_verify(cfg: &RunConfig, out: &mut dyn Write) -> CommandResult {
    let spec = cfg.verify_spec();
    if spec.points.is_empty() || spec.neighbor_counts.is_empty() {
        return Err(CommandError::usage("no parameter points to verify"));
    }
    let report = verify(&spec)?;
    writeln!(out, "M,a_m,T_d,lhs,analytic,simulated,ratio,retained,agree")?;
    for r in &report.rows {
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{}",
            r.neighbors,
            num(r.max_acceleration),
            num(r.time_headway),
            num(r.lhs),
            r.analytic.as_str(),
            r.simulated.as_str(),
            num(r.ratio),
            r.retained,
            r.agrees()
        )?;
    }
    let rate = report.agreement_rate()?;
    writeln!(
        out,
        "agreement: {}/{} = {}",
        report.agreement_count(),
        report.retained_count(),
        num(rate)
    )?;
    if report.agreement_count() == report.retained_count() {
        Ok(EXIT_OK)
    } else {
        Ok(EXIT_DISAGREEMENT)
    }
}

//! Run configuration: one TOML document with a section per component.
//!
//! Every field is optional and falls back to the default parameter set.
//! Unknown keys anywhere in the document are rejected.
//!
//! ```toml
//! [idm]
//! max_acceleration = 0.73
//!
//! [connectivity]
//! kv = 0.3
//! weights = { scheme = "geometric", ratio = 0.5 }
//!
//! [platoon]
//! pattern = "CHH"
//! vehicles = 30
//!
//! [scenario]
//! road = "ring"
//! equilibrium_speed = 20.0
//!
//! [perturbation]
//! target = 0
//! at = 1.0
//! kind = { type = "velocity_pulse", delta = -0.5 }
//!
//! [sim]
//! dt = 0.05
//! duration = 300.0
//!
//! [map]
//! neighbors = [0, 2]
//! max_acceleration = { min = 0.3, max = 2.5, count = 50 }
//!
//! [verify]
//! neighbors = [0, 2]
//! ```

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::map::{AxisRange, GridSpec};
use crate::params::{ConnectivityParams, IdmParams};
use crate::sim::{
    PerturbationKind, PerturbationSpec, PlatoonComposition, PlatoonPattern, Road, ScenarioSpec,
    SimConfig, SpeedProfile,
};
use crate::verify::{grid_points, VerifySpec, DEFAULT_MARGIN_FRACTION};

/// Environment variable naming the config file used when `--config` is absent.
pub const CONFIG_ENV: &str = "CVIDM_CONFIG";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub idm: IdmParams,
    pub connectivity: ConnectivityParams,
    pub platoon: PlatoonSection,
    pub scenario: ScenarioSection,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub perturbation: Option<PerturbationSpec>,
    pub sim: SimConfig,
    pub map: MapSection,
    pub verify: VerifySection,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            idm: IdmParams::default(),
            connectivity: ConnectivityParams::default(),
            platoon: PlatoonSection::default(),
            scenario: ScenarioSection::default(),
            perturbation: None,
            sim: SimConfig::default(),
            map: MapSection::default(),
            verify: VerifySection::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PlatoonSection {
    pub pattern: PlatoonPattern,
    pub vehicles: usize,
    /// Platoon positions between consecutive connected vehicles, used by the
    /// analytic weight sum.
    pub cv_spacing: usize,
}

impl Default for PlatoonSection {
    fn default() -> Self {
        Self {
            pattern: "CHH".parse().expect("valid pattern"),
            vehicles: 30,
            cv_spacing: 3,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RoadKind {
    Ring,
    Open,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioSection {
    pub road: RoadKind,
    pub equilibrium_speed: f64,
    pub head_position: f64,
    /// `[time, speed]` breakpoints for the open-road head; constant
    /// equilibrium speed when absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub leader_profile: Option<Vec<(f64, f64)>>,
}

impl Default for ScenarioSection {
    fn default() -> Self {
        Self {
            road: RoadKind::Ring,
            equilibrium_speed: 20.0,
            head_position: 0.0,
            leader_profile: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MapSection {
    pub max_acceleration: AxisRange,
    pub time_headway: AxisRange,
    /// One sweep per entry; the first one is written as CSV.
    pub neighbors: Vec<usize>,
}

impl Default for MapSection {
    fn default() -> Self {
        let g = GridSpec::default();
        Self {
            max_acceleration: g.max_acceleration,
            time_headway: g.time_headway,
            neighbors: vec![g.neighbors],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VerifySection {
    pub max_acceleration: AxisRange,
    pub time_headway: AxisRange,
    /// Explicit `[max_acceleration, time_headway]` points; replace the grid
    /// when given.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub points: Option<Vec<(f64, f64)>>,
    pub neighbors: Vec<usize>,
    pub margin_fraction: f64,
}

impl Default for VerifySection {
    fn default() -> Self {
        Self {
            max_acceleration: AxisRange::new(0.3, 2.5, 5),
            time_headway: AxisRange::new(0.5, 2.5, 5),
            points: None,
            neighbors: vec![0, 2],
            margin_fraction: DEFAULT_MARGIN_FRACTION,
        }
    }
}

fn config_error(msg: impl Into<String>) -> Error {
    Error::Config(msg.into())
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| config_error(e.to_string()))
    }

    /// Parses `text` after applying `key.path=value` overrides. Values are
    /// read as TOML, falling back to a bare string.
    pub fn from_toml_with_overrides(text: &str, overrides: &[String]) -> Result<Self> {
        let mut doc: toml::Table = text.parse().map_err(|e: toml::de::Error| config_error(e.to_string()))?;
        for item in overrides {
            apply_override(&mut doc, item)?;
        }
        doc.try_into().map_err(|e: toml::de::Error| config_error(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| config_error(format!("{}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| config_error(e.to_string()))
    }

    pub fn composition(&self) -> PlatoonComposition {
        PlatoonComposition {
            pattern: self.platoon.pattern.clone(),
            vehicles: self.platoon.vehicles,
        }
    }

    pub fn scenario(&self) -> Result<ScenarioSpec> {
        let speed = self.scenario.equilibrium_speed;
        let mut spec = ScenarioSpec::ring(self.composition(), speed, self.idm, self.connectivity)?;
        if self.scenario.road == RoadKind::Open {
            let profile = match &self.scenario.leader_profile {
                Some(points) => SpeedProfile {
                    points: points.clone(),
                },
                None => SpeedProfile::constant(speed),
            };
            spec.road = Road::Open {
                leader_profile: profile,
            };
        }
        spec.perturbation = self.perturbation;
        spec.head_position = self.scenario.head_position;
        spec.validate()?;
        Ok(spec)
    }

    /// One grid per entry of `map.neighbors`.
    pub fn grids(&self) -> Vec<GridSpec> {
        self.map
            .neighbors
            .iter()
            .map(|&m| GridSpec {
                max_acceleration: self.map.max_acceleration,
                time_headway: self.map.time_headway,
                idm: self.idm,
                connectivity: self.connectivity,
                equilibrium_speed: self.scenario.equilibrium_speed,
                cv_spacing: self.platoon.cv_spacing,
                neighbors: m,
            })
            .collect()
    }

    /// Verification batches. The pulse comes from `[perturbation]` when it
    /// is a velocity pulse, otherwise −0.5 m/s on the head at t = 1 s.
    pub fn verify_spec(&self) -> VerifySpec {
        let base = VerifySpec::default();
        let (target, pulse, at) = match self.perturbation {
            Some(PerturbationSpec {
                target,
                kind: PerturbationKind::VelocityPulse { delta },
                at,
            }) => (target, delta, at),
            _ => (base.perturbation_target, base.pulse, base.pulse_time),
        };
        let points = match &self.verify.points {
            Some(p) => p.clone(),
            None => grid_points(&self.verify.max_acceleration, &self.verify.time_headway),
        };
        VerifySpec {
            idm: self.idm,
            connectivity: self.connectivity,
            equilibrium_speed: self.scenario.equilibrium_speed,
            composition: self.composition(),
            cv_spacing: self.platoon.cv_spacing,
            neighbor_counts: self.verify.neighbors.clone(),
            points,
            perturbation_target: target,
            pulse,
            pulse_time: at,
            sim: self.sim,
            margin_fraction: self.verify.margin_fraction,
        }
    }
}

fn apply_override(doc: &mut toml::Table, item: &str) -> Result<()> {
    let (key, raw) = item
        .split_once('=')
        .ok_or_else(|| config_error(format!("override `{item}` is not of the form key=value")))?;
    let path: Vec<&str> = key.trim().split('.').collect();
    if path.iter().any(|k| k.is_empty()) {
        return Err(config_error(format!("override `{item}` has an empty key")));
    }
    let raw = raw.trim();
    let value = format!("v = {raw}")
        .parse::<toml::Table>()
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(raw.to_string()));
    let (last, parents) = path.split_last().expect("non-empty path");
    let mut table = doc;
    for k in parents {
        table = table
            .entry(k.to_string())
            .or_insert_with(|| toml::Value::Table(toml::Table::new()))
            .as_table_mut()
            .ok_or_else(|| config_error(format!("`{k}` in `{key}` is not a table")))?;
    }
    table.insert(last.to_string(), value);
    Ok(())
}

//! Stability diagrams over the (maximum acceleration, time headway) plane.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::params::{ConnectivityParams, IdmParams};
use crate::stability::{classify_point, StabilityVerdict, Verdict};

/// Inclusive, evenly spaced axis: `count` points from `min` to `max`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AxisRange {
    pub min: f64,
    pub max: f64,
    pub count: usize,
}

impl AxisRange {
    pub fn new(min: f64, max: f64, count: usize) -> Self {
        Self { min, max, count }
    }

    /// Single-point axis.
    pub fn point(value: f64) -> Self {
        Self::new(value, value, 1)
    }

    pub fn step(&self) -> f64 {
        if self.count <= 1 {
            0.0
        } else {
            (self.max - self.min) / (self.count - 1) as f64
        }
    }

    pub fn value(&self, i: usize) -> f64 {
        if i + 1 == self.count {
            self.max
        } else {
            self.min + i as f64 * self.step()
        }
    }

    pub fn values(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.count).map(|i| self.value(i))
    }

    pub fn validate(&self, name: &'static str) -> Result<()> {
        let ok = self.count >= 1
            && self.min.is_finite()
            && self.max.is_finite()
            && (self.max > self.min || (self.count == 1 && self.max == self.min));
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidParameter {
                name,
                reason: format!(
                    "range [{}, {}] with {} points is empty or degenerate",
                    self.min, self.max, self.count
                ),
            })
        }
    }
}

/// A rectangular sweep. Scanned maximum accelerations replace
/// `idm.max_acceleration`; scanned headways replace `idm.safe_time_headway`.
#[derive(Debug, Clone, PartialEq)]
pub struct GridSpec {
    pub max_acceleration: AxisRange,
    pub time_headway: AxisRange,
    pub idm: IdmParams,
    pub connectivity: ConnectivityParams,
    pub equilibrium_speed: f64,
    /// Platoon positions between consecutive connected vehicles.
    pub cv_spacing: usize,
    /// Connected predecessors included in the weight sum.
    pub neighbors: usize,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self {
            max_acceleration: AxisRange::new(0.3, 2.5, 50),
            time_headway: AxisRange::new(0.5, 2.5, 50),
            idm: IdmParams::default(),
            connectivity: ConnectivityParams::default(),
            equilibrium_speed: 20.0,
            cv_spacing: 3,
            neighbors: 2,
        }
    }
}

impl GridSpec {
    pub fn validate(&self) -> Result<()> {
        self.max_acceleration.validate("max_acceleration")?;
        self.time_headway.validate("time_headway")?;
        self.idm.validate()?;
        self.connectivity.validate()?;
        if self.cv_spacing == 0 {
            return Err(Error::InvalidParameter {
                name: "cv_spacing",
                reason: "must be >= 1".into(),
            });
        }
        Ok(())
    }

    pub fn with_neighbors(&self, neighbors: usize) -> Self {
        Self {
            neighbors,
            ..self.clone()
        }
    }

    fn evaluate(&self, max_acceleration: f64, time_headway: f64) -> Cell {
        let p = self.idm.with_axes(max_acceleration, time_headway);
        match classify_point(
            &p,
            &self.connectivity,
            self.equilibrium_speed,
            self.cv_spacing,
            self.neighbors,
        ) {
            Ok(v) => Cell::Evaluated(v),
            Err(_) => Cell::NoEquilibrium,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Cell {
    Evaluated(StabilityVerdict),
    NoEquilibrium,
}

impl Cell {
    pub fn verdict(&self) -> Verdict {
        match self {
            Cell::Evaluated(v) => v.verdict(),
            Cell::NoEquilibrium => Verdict::NoEquilibrium,
        }
    }

    pub fn lhs(&self) -> Option<f64> {
        match self {
            Cell::Evaluated(v) => Some(v.lhs),
            Cell::NoEquilibrium => None,
        }
    }

    pub fn is_stable(&self) -> bool {
        matches!(self, Cell::Evaluated(v) if v.stable)
    }
}

/// Sweep result, row-major with headway outer and acceleration inner.
#[derive(Debug, Clone, PartialEq)]
pub struct StabilityMapGrid {
    pub spec: GridSpec,
    pub cells: Vec<Cell>,
}

impl StabilityMapGrid {
    pub fn cell(&self, headway_index: usize, accel_index: usize) -> &Cell {
        &self.cells[headway_index * self.spec.max_acceleration.count + accel_index]
    }

    /// `(time_headway, max_acceleration, cell)` in storage order.
    pub fn iter(&self) -> impl Iterator<Item = (f64, f64, &Cell)> + '_ {
        let na = self.spec.max_acceleration.count;
        self.cells.iter().enumerate().map(move |(i, c)| {
            (
                self.spec.time_headway.value(i / na),
                self.spec.max_acceleration.value(i % na),
                c,
            )
        })
    }

    pub fn stable_count(&self) -> usize {
        self.cells.iter().filter(|c| c.is_stable()).count()
    }

    /// For each headway, the maximum acceleration where the criterion
    /// crosses zero going up the acceleration axis (linear interpolation
    /// between neighbouring cells), if it does.
    pub fn critical_curve(&self) -> Vec<(f64, Option<f64>)> {
        let axis = &self.spec.max_acceleration;
        (0..self.spec.time_headway.count)
            .map(|j| {
                let t_d = self.spec.time_headway.value(j);
                let crossing = (1..axis.count).find_map(|i| {
                    let lo = self.cell(j, i - 1).lhs()?;
                    let hi = self.cell(j, i).lhs()?;
                    if lo >= 0.0 && hi < 0.0 {
                        let a_lo = axis.value(i - 1);
                        let a_hi = axis.value(i);
                        Some(a_lo + (a_hi - a_lo) * lo / (lo - hi))
                    } else {
                        None
                    }
                });
                (t_d, crossing)
            })
            .collect()
    }
}

/// Evaluates the criterion on every cell of the grid. Cells are independent
/// and evaluated in parallel; the result does not depend on scheduling.
pub fn stability_map(spec: &GridSpec) -> Result<StabilityMapGrid> {
    spec.validate()?;
    let na = spec.max_acceleration.count;
    let total = na * spec.time_headway.count;
    let cells = (0..total)
        .into_par_iter()
        .map(|i| {
            spec.evaluate(
                spec.max_acceleration.value(i % na),
                spec.time_headway.value(i / na),
            )
        })
        .collect();
    Ok(StabilityMapGrid {
        spec: spec.clone(),
        cells,
    })
}

/// Serial counterpart of [`stability_map`].
pub fn stability_map_serial(spec: &GridSpec) -> Result<StabilityMapGrid> {
    spec.validate()?;
    let cells = spec
        .time_headway
        .values()
        .flat_map(|t| {
            spec.max_acceleration
                .values()
                .map(move |a| spec.evaluate(a, t))
        })
        .collect();
    Ok(StabilityMapGrid {
        spec: spec.clone(),
        cells,
    })
}

/// Fraction of cells with an equilibrium that are stable.
pub fn region_area(grid: &StabilityMapGrid) -> Result<f64> {
    let evaluated = grid
        .cells
        .iter()
        .filter(|c| !matches!(c, Cell::NoEquilibrium))
        .count();
    if evaluated == 0 {
        return Err(Error::UndefinedArea);
    }
    Ok(grid.stable_count() as f64 / evaluated as f64)
}

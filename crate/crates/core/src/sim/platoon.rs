use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{EquilibriumState, Neighbor, VehicleClass, VehicleState};
use crate::params::{ConnectivityParams, IdmParams};

/// Vehicle classes along the platoon, head first, produced by cycling a
/// pattern such as `CHH` (one connected vehicle, then two human-driven).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct PlatoonPattern(Vec<VehicleClass>);

impl PlatoonPattern {
    pub fn new(classes: Vec<VehicleClass>) -> Result<Self> {
        if classes.is_empty() {
            return Err(Error::Scenario("platoon pattern is empty".into()));
        }
        Ok(Self(classes))
    }

    pub fn classes(&self) -> &[VehicleClass] {
        &self.0
    }

    pub fn class_at(&self, position: usize) -> VehicleClass {
        self.0[position % self.0.len()]
    }

    /// Fraction of connected vehicles in one period of the pattern.
    pub fn penetration(&self) -> f64 {
        let cv = self
            .0
            .iter()
            .filter(|&&c| c == VehicleClass::Connected)
            .count();
        cv as f64 / self.0.len() as f64
    }
}

impl FromStr for PlatoonPattern {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let classes = s
            .trim()
            .chars()
            .map(|c| match c.to_ascii_uppercase() {
                'C' => Ok(VehicleClass::Connected),
                'H' => Ok(VehicleClass::HumanDriven),
                other => Err(Error::Scenario(format!(
                    "unknown vehicle class `{other}` in pattern (expected C or H)"
                ))),
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(classes)
    }
}

impl TryFrom<String> for PlatoonPattern {
    type Error = Error;
    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<PlatoonPattern> for String {
    fn from(p: PlatoonPattern) -> String {
        p.to_string()
    }
}

impl fmt::Display for PlatoonPattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for c in &self.0 {
            write!(f, "{}", c.symbol())?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlatoonComposition {
    pub pattern: PlatoonPattern,
    pub vehicles: usize,
}

impl PlatoonComposition {
    pub fn new(pattern: &str, vehicles: usize) -> Result<Self> {
        Ok(Self {
            pattern: pattern.parse()?,
            vehicles,
        })
    }

    /// Fraction of connected vehicles among the `vehicles` actually placed.
    pub fn penetration(&self) -> f64 {
        if self.vehicles == 0 {
            return 0.0;
        }
        let cv = (0..self.vehicles)
            .filter(|&i| self.pattern.class_at(i) == VehicleClass::Connected)
            .count();
        cv as f64 / self.vehicles as f64
    }
}

/// Vehicles at uniform net gap and speed, head first, with the head's rear
/// bumper at position 0.
pub fn build_platoon(
    comp: &PlatoonComposition,
    eq: &EquilibriumState,
    p: &IdmParams,
) -> Vec<VehicleState> {
    let pitch = eq.gap + p.vehicle_length;
    (0..comp.vehicles)
        .map(|i| VehicleState {
            position: -(i as f64) * pitch,
            velocity: eq.speed,
            acceleration: 0.0,
            class: comp.pattern.class_at(i),
            length: p.vehicle_length,
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Boundary {
    /// Periodic road: vehicle 0 follows vehicle N − 1 across the seam.
    Ring { circumference: f64 },
    /// Vehicle 0 leads and has no leader.
    Open,
}

/// Index of the immediate leader of `idx` and the position offset to add to
/// the leader's position (the circumference when crossing the ring seam).
pub fn leader_of(idx: usize, n: usize, boundary: Boundary) -> Option<(usize, f64)> {
    match (idx, boundary) {
        (0, Boundary::Open) => None,
        (0, Boundary::Ring { circumference }) if n > 1 => Some((n - 1, circumference)),
        (0, Boundary::Ring { .. }) => None,
        (i, _) => Some((i - 1, 0.0)),
    }
}

/// Net gap from `idx` to its immediate leader.
pub fn gap_ahead(vehicles: &[VehicleState], idx: usize, boundary: Boundary) -> Option<f64> {
    let (j, offset) = leader_of(idx, vehicles.len(), boundary)?;
    Some(vehicles[j].position + offset - vehicles[idx].position - vehicles[j].length)
}

/// The nearest connected vehicles ahead of `idx` within communication range,
/// at most `cp.max_neighbors` of them, nearest first. On a ring the search
/// wraps across the seam but never looks further than half the
/// circumference, so no vehicle is counted twice.
pub fn connected_predecessors(
    vehicles: &[VehicleState],
    idx: usize,
    boundary: Boundary,
    cp: &ConnectivityParams,
) -> Vec<Neighbor> {
    let n = vehicles.len();
    let me = &vehicles[idx];
    let mut out = Vec::with_capacity(cp.max_neighbors);
    if cp.max_neighbors == 0 {
        return out;
    }
    let (reach, horizon) = match boundary {
        Boundary::Open => (idx, f64::INFINITY),
        Boundary::Ring { circumference } => (n.saturating_sub(1), 0.5 * circumference),
    };
    for step in 1..=reach {
        let (j, offset) = if step <= idx {
            (idx - step, 0.0)
        } else {
            match boundary {
                Boundary::Ring { circumference } => (idx + n - step, circumference),
                Boundary::Open => unreachable!(),
            }
        };
        let other = &vehicles[j];
        let distance = other.position + offset - me.position - other.length;
        if distance > cp.comm_range || distance > horizon {
            break;
        }
        if other.class == VehicleClass::Connected {
            out.push(Neighbor {
                gap: distance,
                velocity: other.velocity,
                acceleration: other.acceleration,
            });
            if out.len() == cp.max_neighbors {
                break;
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn eq() -> EquilibriumState {
        EquilibriumState::at_speed(20.0, &IdmParams::default()).unwrap()
    }

    fn ring(vehicles: &[VehicleState]) -> Boundary {
        let p = IdmParams::default();
        Boundary::Ring {
            circumference: vehicles.len() as f64 * (eq().gap + p.vehicle_length),
        }
    }

    #[test]
    fn chh_places_connected_vehicles_at_one_four_seven() {
        let comp = PlatoonComposition::new("CHH", 9).unwrap();
        let platoon = build_platoon(&comp, &eq(), &IdmParams::default());
        let cv: Vec<usize> = platoon
            .iter()
            .enumerate()
            .filter(|(_, v)| v.class == VehicleClass::Connected)
            .map(|(i, _)| i + 1)
            .collect();
        // the m-th connected vehicle sits at platoon position 3m − 2
        assert_eq!(cv, vec![1, 4, 7]);
        assert!((comp.penetration() - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn degenerate_patterns() {
        let p = IdmParams::default();
        let all_c = build_platoon(&PlatoonComposition::new("C", 5).unwrap(), &eq(), &p);
        assert!(all_c.iter().all(|v| v.class == VehicleClass::Connected));
        assert_eq!(PlatoonComposition::new("C", 5).unwrap().penetration(), 1.0);
        let all_h = build_platoon(&PlatoonComposition::new("h", 5).unwrap(), &eq(), &p);
        assert!(all_h.iter().all(|v| v.class == VehicleClass::HumanDriven));
        assert!(PlatoonComposition::new("", 5).is_err());
        assert!(PlatoonComposition::new("CXH", 5).is_err());
    }

    #[test]
    fn platoon_sits_at_equilibrium() {
        let p = IdmParams::default();
        let e = eq();
        let platoon = build_platoon(&PlatoonComposition::new("CHH", 6).unwrap(), &e, &p);
        let b = ring(&platoon);
        for i in 0..6 {
            assert!((gap_ahead(&platoon, i, b).unwrap() - e.gap).abs() < 1e-9);
            assert_eq!(platoon[i].velocity, 20.0);
        }
        assert!(gap_ahead(&platoon, 0, Boundary::Open).is_none());
    }

    #[test]
    fn predecessors_of_the_third_cv() {
        let p = IdmParams::default();
        let platoon = build_platoon(&PlatoonComposition::new("CHH", 9).unwrap(), &eq(), &p);
        let cp = ConnectivityParams {
            max_neighbors: 2,
            comm_range: f64::INFINITY,
            ..Default::default()
        };
        let nb = connected_predecessors(&platoon, 6, Boundary::Open, &cp);
        assert_eq!(nb.len(), 2);
        // positions 4 and 1 (indices 3 and 0)
        assert!((nb[0].gap - (platoon[3].position - platoon[6].position - 5.0)).abs() < 1e-12);
        assert!((nb[1].gap - (platoon[0].position - platoon[6].position - 5.0)).abs() < 1e-12);
    }

    #[test]
    fn tiny_range_sees_nothing() {
        let p = IdmParams::default();
        let platoon = build_platoon(&PlatoonComposition::new("C", 5).unwrap(), &eq(), &p);
        let cp = ConnectivityParams {
            comm_range: 1e-9,
            ..Default::default()
        };
        for i in 0..5 {
            assert!(connected_predecessors(&platoon, i, Boundary::Open, &cp).is_empty());
        }
    }

    /// Enumerates every vehicle by its forward ring distance and keeps the
    /// connected ones within half the circumference.
    fn brute_force_ring(vehicles: &[VehicleState], idx: usize, c: f64, m: usize) -> Vec<f64> {
        let me = vehicles[idx];
        let mut found: Vec<f64> = vehicles
            .iter()
            .enumerate()
            .filter(|(j, v)| *j != idx && v.class == VehicleClass::Connected)
            .map(|(_, v)| (v.position - me.position).rem_euclid(c) - v.length)
            .filter(|&d| d <= 0.5 * c)
            .collect();
        found.sort_by(f64::total_cmp);
        found.truncate(m);
        found
    }

    #[test]
    fn ring_wraps_without_double_counting() {
        let p = IdmParams::default();
        let platoon = build_platoon(&PlatoonComposition::new("CHH", 6).unwrap(), &eq(), &p);
        let b = ring(&platoon);
        let Boundary::Ring { circumference } = b else { unreachable!() };
        let cp = ConnectivityParams {
            max_neighbors: 3,
            comm_range: 1e9,
            ..Default::default()
        };
        for idx in 0..6 {
            let got: Vec<f64> = connected_predecessors(&platoon, idx, b, &cp)
                .iter()
                .map(|n| n.gap)
                .collect();
            let want = brute_force_ring(&platoon, idx, circumference, 3);
            assert_eq!(got.len(), want.len(), "idx {idx}");
            for (g, w) in got.iter().zip(&want) {
                assert!((g - w).abs() < 1e-9);
            }
        }
        let first = connected_predecessors(&platoon, 0, b, &cp);
        assert_eq!(first.len(), 1);
    }

    #[test]
    fn pattern_round_trips_through_text() {
        let p: PlatoonPattern = "chh".parse().unwrap();
        assert_eq!(p.to_string(), "CHH");
        assert!((p.penetration() - 1.0 / 3.0).abs() < 1e-15);
    }
}

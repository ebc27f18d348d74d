use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{
    total_acceleration, EquilibriumState, Neighbor, VehicleClass, VehicleState,
};
use crate::params::{ConnectivityParams, IdmParams};

use super::history::{History, Kinematics, Side, Snapshot};
use super::platoon::{
    build_platoon, connected_predecessors, gap_ahead, leader_of, Boundary, PlatoonComposition,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Integrator {
    ExplicitEuler,
    Heun,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimConfig {
    /// Time step (s).
    pub dt: f64,
    /// Horizon (s).
    pub duration: f64,
    pub integrator: Integrator,
    /// Reaction time of connected-vehicle drivers; `None` uses the IDM
    /// parameter set's value.
    pub cv_reaction_time: Option<f64>,
    /// Reaction time of human drivers; `None` uses the IDM parameter set's
    /// value.
    pub hv_reaction_time: Option<f64>,
    pub velocity_floor: f64,
    /// Largest deceleration magnitude (m/s²); `None` disables the cap.
    pub deceleration_cap: Option<f64>,
    /// Record every n-th step (the final step is always recorded).
    pub sample_stride: usize,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            dt: 0.05,
            duration: 300.0,
            integrator: Integrator::ExplicitEuler,
            cv_reaction_time: None,
            hv_reaction_time: None,
            velocity_floor: 0.0,
            deceleration_cap: Some(9.0),
            sample_stride: 1,
        }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |name, reason: String| Err(Error::InvalidParameter { name, reason });
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return bad("dt", format!("{} must be > 0", self.dt));
        }
        if !(self.duration > 0.0 && self.duration.is_finite()) {
            return bad("duration", format!("{} must be > 0", self.duration));
        }
        for (name, d) in [
            ("cv_reaction_time", self.cv_reaction_time),
            ("hv_reaction_time", self.hv_reaction_time),
        ] {
            if let Some(d) = d {
                if !(d >= 0.0 && d.is_finite()) {
                    return bad(name, format!("{d} must be >= 0"));
                }
            }
        }
        if let Some(cap) = self.deceleration_cap {
            if !(cap > 0.0) {
                return bad("deceleration_cap", format!("{cap} must be > 0"));
            }
        }
        if self.sample_stride == 0 {
            return bad("sample_stride", "must be >= 1".into());
        }
        Ok(())
    }

    pub fn steps(&self) -> i64 {
        (self.duration / self.dt).round() as i64
    }

    pub fn reaction_time(&self, class: VehicleClass, p: &IdmParams) -> f64 {
        match class {
            VehicleClass::Connected => self.cv_reaction_time,
            VehicleClass::HumanDriven => self.hv_reaction_time,
        }
        .unwrap_or(p.reaction_time)
    }
}

/// Piecewise-linear speed of an externally driven leader, held constant
/// outside its breakpoints.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpeedProfile {
    /// `(time s, speed m/s)` breakpoints with strictly increasing times.
    pub points: Vec<(f64, f64)>,
}

impl SpeedProfile {
    pub fn constant(speed: f64) -> Self {
        Self {
            points: vec![(0.0, speed)],
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.points.is_empty() {
            return Err(Error::Scenario("leader profile has no breakpoints".into()));
        }
        if self.points.windows(2).any(|w| !(w[1].0 > w[0].0)) {
            return Err(Error::Scenario(
                "leader profile times must strictly increase".into(),
            ));
        }
        if self.points.iter().any(|&(t, v)| !t.is_finite() || !(v >= 0.0)) {
            return Err(Error::Scenario(
                "leader profile speeds must be finite and >= 0".into(),
            ));
        }
        Ok(())
    }

    fn segment(&self, t: f64) -> Option<(f64, f64, f64, f64)> {
        let i = self.points.partition_point(|&(ti, _)| ti <= t);
        if i == 0 || i == self.points.len() {
            return None;
        }
        let (t0, v0) = self.points[i - 1];
        let (t1, v1) = self.points[i];
        Some((t0, v0, t1, v1))
    }

    pub fn speed_at(&self, t: f64) -> f64 {
        match self.segment(t) {
            Some((t0, v0, t1, v1)) => v0 + (v1 - v0) * (t - t0) / (t1 - t0),
            None if t < self.points[0].0 => self.points[0].1,
            None => self.points[self.points.len() - 1].1,
        }
    }

    pub fn acceleration_at(&self, t: f64) -> f64 {
        match self.segment(t) {
            Some((t0, v0, t1, v1)) => (v1 - v0) / (t1 - t0),
            None => 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum Road {
    /// Periodic road whose circumference tiles the equilibrium exactly.
    Ring,
    /// Vehicle 0 follows `leader_profile` and is not model-controlled.
    Open { leader_profile: SpeedProfile },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum PerturbationKind {
    /// Instantaneous change of the target's velocity (m/s).
    VelocityPulse { delta: f64 },
    /// Instantaneous shift of the target's position (m).
    PositionOffset { delta: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PerturbationSpec {
    /// Platoon index, 0 = head.
    pub target: usize,
    pub kind: PerturbationKind,
    /// Application time (s).
    pub at: f64,
}

impl PerturbationSpec {
    /// Checks the target index and that the magnitude stays in the linear
    /// regime: `|Δx| ≤ 0.1·s_e`, `|Δv| ≤ 0.1·v_e`.
    pub fn validate(&self, vehicles: usize, eq: &EquilibriumState) -> Result<()> {
        if self.target >= vehicles {
            return Err(Error::Scenario(format!(
                "perturbation target {} outside platoon of {vehicles}",
                self.target
            )));
        }
        if !(self.at >= 0.0 && self.at.is_finite()) {
            return Err(Error::Scenario(format!(
                "perturbation time {} must be >= 0",
                self.at
            )));
        }
        let (magnitude, bound, what) = match self.kind {
            PerturbationKind::VelocityPulse { delta } => (delta, 0.1 * eq.speed, "velocity"),
            PerturbationKind::PositionOffset { delta } => (delta, 0.1 * eq.gap, "position"),
        };
        if !(magnitude.abs() <= bound) {
            return Err(Error::Scenario(format!(
                "{what} perturbation {magnitude} exceeds the small-perturbation bound {bound}"
            )));
        }
        Ok(())
    }
}

/// Offsets one vehicle's position or velocity. Rejects offsets that would
/// close a gap; the platoon is left untouched in that case.
pub fn inject_perturbation(
    vehicles: &mut [VehicleState],
    boundary: Boundary,
    spec: &PerturbationSpec,
) -> Result<()> {
    let n = vehicles.len();
    let target = spec.target;
    if target >= n {
        return Err(Error::Scenario(format!(
            "perturbation target {target} outside platoon of {n}"
        )));
    }
    match spec.kind {
        PerturbationKind::VelocityPulse { delta } => {
            vehicles[target].velocity += delta;
        }
        PerturbationKind::PositionOffset { delta } => {
            let before = vehicles[target].position;
            vehicles[target].position += delta;
            let follower = match boundary {
                Boundary::Ring { .. } if n > 1 => Some((target + 1) % n),
                _ if target + 1 < n => Some(target + 1),
                _ => None,
            };
            for idx in std::iter::once(target).chain(follower) {
                if let Some(gap) = gap_ahead(vehicles, idx, boundary) {
                    if gap <= 0.0 {
                        vehicles[target].position = before;
                        return Err(Error::PerturbationOverlap { vehicle: idx, gap });
                    }
                }
            }
        }
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioSpec {
    pub road: Road,
    pub composition: PlatoonComposition,
    pub initial: EquilibriumState,
    pub perturbation: Option<PerturbationSpec>,
    pub idm: IdmParams,
    pub connectivity: ConnectivityParams,
    /// Rear-bumper position of the head vehicle at t = 0.
    pub head_position: f64,
}

impl ScenarioSpec {
    /// Ring scenario at equilibrium speed `speed`.
    pub fn ring(
        composition: PlatoonComposition,
        speed: f64,
        idm: IdmParams,
        connectivity: ConnectivityParams,
    ) -> Result<Self> {
        Ok(Self {
            road: Road::Ring,
            composition,
            initial: EquilibriumState::at_speed(speed, &idm)?,
            perturbation: None,
            idm,
            connectivity,
            head_position: 0.0,
        })
    }

    /// Open-road scenario whose head keeps the equilibrium speed.
    pub fn open(
        composition: PlatoonComposition,
        speed: f64,
        idm: IdmParams,
        connectivity: ConnectivityParams,
    ) -> Result<Self> {
        Ok(Self {
            road: Road::Open {
                leader_profile: SpeedProfile::constant(speed),
            },
            ..Self::ring(composition, speed, idm, connectivity)?
        })
    }

    pub fn with_perturbation(self, perturbation: PerturbationSpec) -> Self {
        Self {
            perturbation: Some(perturbation),
            ..self
        }
    }

    pub fn circumference(&self) -> f64 {
        self.composition.vehicles as f64 * (self.initial.gap + self.idm.vehicle_length)
    }

    pub fn boundary(&self) -> Boundary {
        match self.road {
            Road::Ring => Boundary::Ring {
                circumference: self.circumference(),
            },
            Road::Open { .. } => Boundary::Open,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.idm.validate()?;
        self.connectivity.validate()?;
        let n = self.composition.vehicles;
        match &self.road {
            Road::Ring if n < 2 => {
                return Err(Error::Scenario("a ring needs at least 2 vehicles".into()))
            }
            Road::Open { leader_profile } => leader_profile.validate()?,
            _ => {}
        }
        if n == 0 {
            return Err(Error::Scenario("platoon has no vehicles".into()));
        }
        if !(self.initial.gap > 0.0) {
            return Err(Error::NonPositiveGap {
                gap: self.initial.gap,
            });
        }
        if let Some(p) = &self.perturbation {
            p.validate(n, &self.initial)?;
            if p.target == 0 && matches!(self.road, Road::Open { .. }) {
                return Err(Error::Scenario(
                    "the open-road head follows its profile; perturb a follower".into(),
                ));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Collision {
    pub time: f64,
    pub follower: usize,
    pub leader: usize,
    pub gap: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Outcome {
    Completed,
    Collision(Collision),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sample {
    pub position: f64,
    pub velocity: f64,
    pub acceleration: f64,
    /// Net gap to the immediate leader; `None` for the open-road head.
    pub gap: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub classes: Vec<VehicleClass>,
    pub boundary: Boundary,
    pub perturbation: Option<PerturbationSpec>,
    pub times: Vec<f64>,
    /// `samples[i][n]` is vehicle `n` at `times[i]`.
    pub samples: Vec<Vec<Sample>>,
    pub outcome: Outcome,
}

impl Trajectory {
    pub fn vehicles(&self) -> usize {
        self.classes.len()
    }

    pub fn collision(&self) -> Option<Collision> {
        match self.outcome {
            Outcome::Collision(c) => Some(c),
            Outcome::Completed => None,
        }
    }
}

/// A platoon advancing in time. Drivers react to the platoon state
/// `T′` seconds in the past; the delay applies uniformly to the immediate
/// leader and to broadcast information.
pub struct Simulation {
    scenario: ScenarioSpec,
    config: SimConfig,
    boundary: Boundary,
    /// Positions relative to the initial head position.
    vehicles: Vec<VehicleState>,
    history: History,
    step: i64,
    perturbation_pending: bool,
}

impl Simulation {
    pub fn new(scenario: &ScenarioSpec, config: &SimConfig) -> Result<Self> {
        scenario.validate()?;
        config.validate()?;
        let vehicles = build_platoon(&scenario.composition, &scenario.initial, &scenario.idm);
        let max_delay = [VehicleClass::Connected, VehicleClass::HumanDriven]
            .iter()
            .map(|&c| config.reaction_time(c, &scenario.idm))
            .fold(0.0, f64::max);
        let history = History::primed(&kinematics(&vehicles), config.dt, max_delay);
        Ok(Self {
            boundary: scenario.boundary(),
            scenario: scenario.clone(),
            config: *config,
            vehicles,
            history,
            step: 0,
            perturbation_pending: scenario.perturbation.is_some(),
        })
    }

    pub fn time(&self) -> f64 {
        self.step as f64 * self.config.dt
    }

    pub fn vehicles(&self) -> &[VehicleState] {
        &self.vehicles
    }

    pub fn boundary(&self) -> Boundary {
        self.boundary
    }

    fn apply_due_perturbation(&mut self) -> Result<()> {
        let Some(spec) = self.scenario.perturbation else {
            return Ok(());
        };
        if self.perturbation_pending && self.time() >= spec.at - 1e-9 * self.config.dt {
            inject_perturbation(&mut self.vehicles, self.boundary, &spec)?;
            self.history.jump_latest(kinematics(&self.vehicles));
            self.perturbation_pending = false;
        }
        Ok(())
    }

    fn open_leader(&self) -> Option<&SpeedProfile> {
        match &self.scenario.road {
            Road::Open { leader_profile } => Some(leader_profile),
            Road::Ring => None,
        }
    }

    /// Model accelerations at step `at_step`, from inputs delayed by each
    /// class's reaction time.
    fn accelerations(
        &self,
        at_step: i64,
        side: Side,
        provisional: Option<&Snapshot>,
    ) -> std::result::Result<Vec<f64>, Collision> {
        let p = &self.scenario.idm;
        let cp = &self.scenario.connectivity;
        let dt = self.config.dt;
        let n = self.vehicles.len();
        let mut delayed: Vec<(f64, Vec<VehicleState>)> = Vec::with_capacity(2);
        let mut out = Vec::with_capacity(n);
        let mut neighbors: Vec<Neighbor> = Vec::new();
        for i in 0..n {
            let class = self.vehicles[i].class;
            if i == 0 {
                if let Some(profile) = self.open_leader() {
                    out.push(profile.acceleration_at(at_step as f64 * dt));
                    continue;
                }
            }
            let delay = self.config.reaction_time(class, p);
            let view = match delayed.iter().position(|(d, _)| *d == delay) {
                Some(k) => &delayed[k].1,
                None => {
                    let snap = self
                        .history
                        .sample(at_step as f64 - delay / dt, side, provisional);
                    delayed.push((delay, self.with_kinematics(&snap)));
                    &delayed[delayed.len() - 1].1
                }
            };
            let (j, offset) = leader_of(i, n, self.boundary).expect("followers have leaders");
            let mut leader = view[j];
            leader.position += offset;
            neighbors.clear();
            if class == VehicleClass::Connected && !cp.is_inactive() {
                neighbors.extend(connected_predecessors(view, i, self.boundary, cp));
            }
            let a = total_acceleration(&view[i], &leader, &neighbors, p, cp).map_err(|_| {
                Collision {
                    time: at_step as f64 * dt,
                    follower: i,
                    leader: j,
                    gap: view[i].gap_to(&leader),
                }
            })?;
            out.push(match self.config.deceleration_cap {
                Some(cap) => a.max(-cap),
                None => a,
            });
        }
        Ok(out)
    }

    fn with_kinematics(&self, snap: &Snapshot) -> Vec<VehicleState> {
        self.vehicles
            .iter()
            .zip(snap)
            .map(|(v, k)| VehicleState {
                position: k.position,
                velocity: k.velocity,
                acceleration: k.acceleration,
                ..*v
            })
            .collect()
    }

    fn first_overlap(&self, vehicles: &[VehicleState]) -> Option<Collision> {
        (0..vehicles.len()).find_map(|i| {
            let gap = gap_ahead(vehicles, i, self.boundary)?;
            (gap <= 0.0).then(|| Collision {
                time: self.time() + self.config.dt,
                follower: i,
                leader: leader_of(i, vehicles.len(), self.boundary).unwrap().0,
                gap,
            })
        })
    }

    /// Evaluates accelerations at the current time (applying a due
    /// perturbation first) and stores them on the vehicles.
    pub fn evaluate(&mut self) -> Result<std::result::Result<(), Collision>> {
        self.apply_due_perturbation()?;
        let acc = match self.accelerations(self.step, Side::Right, None) {
            Ok(a) => a,
            Err(c) => return Ok(Err(c)),
        };
        for ((v, a), k) in self
            .vehicles
            .iter_mut()
            .zip(&acc)
            .zip(self.history.latest_mut().iter_mut())
        {
            v.acceleration = *a;
            k.acceleration = *a;
        }
        Ok(Ok(()))
    }

    /// Advances one step using the accelerations from the last
    /// [`Simulation::evaluate`].
    pub fn advance(&mut self) -> std::result::Result<(), Collision> {
        let dt = self.config.dt;
        let floor = self.config.velocity_floor;
        let t = self.time();
        let leader_speed = self.open_leader().map(|p| p.speed_at(t + dt));
        let mut next = self.vehicles.clone();
        match self.config.integrator {
            Integrator::ExplicitEuler => {
                for v in next.iter_mut() {
                    v.position += v.velocity * dt;
                    v.velocity = (v.velocity + v.acceleration * dt).max(floor);
                }
            }
            Integrator::Heun => {
                let mut predicted = self.vehicles.clone();
                for v in predicted.iter_mut() {
                    v.position += v.velocity * dt;
                    v.velocity = (v.velocity + v.acceleration * dt).max(floor);
                }
                if let Some(speed) = leader_speed {
                    predicted[0].velocity = speed;
                }
                if let Some(c) = self.first_overlap(&predicted) {
                    return Err(c);
                }
                let provisional = kinematics(&predicted);
                let corrector = self.accelerations(self.step + 1, Side::Left, Some(&provisional))?;
                for ((v, pred), a2) in next.iter_mut().zip(&predicted).zip(&corrector) {
                    v.position += 0.5 * (v.velocity + pred.velocity) * dt;
                    v.velocity = (v.velocity + 0.5 * (v.acceleration + a2) * dt).max(floor);
                }
            }
        }
        if let Some(speed) = leader_speed {
            let head = &mut next[0];
            head.position = self.vehicles[0].position + 0.5 * (self.vehicles[0].velocity + speed) * dt;
            head.velocity = speed;
        }
        if let Some(c) = self.first_overlap(&next) {
            self.vehicles = next;
            return Err(c);
        }
        self.vehicles = next;
        self.history.push(kinematics(&self.vehicles));
        self.step += 1;
        Ok(())
    }

    /// One full step: evaluate then advance.
    pub fn step(&mut self) -> Result<std::result::Result<(), Collision>> {
        if let Err(c) = self.evaluate()? {
            return Ok(Err(c));
        }
        Ok(self.advance())
    }

    fn record(&self, traj: &mut Trajectory) {
        let head = self.scenario.head_position;
        traj.times.push(self.time());
        traj.samples.push(
            (0..self.vehicles.len())
                .map(|i| {
                    let v = &self.vehicles[i];
                    Sample {
                        position: head + v.position,
                        velocity: v.velocity,
                        acceleration: v.acceleration,
                        gap: gap_ahead(&self.vehicles, i, self.boundary),
                    }
                })
                .collect(),
        );
    }
}

fn kinematics(vehicles: &[VehicleState]) -> Snapshot {
    vehicles
        .iter()
        .map(|v| Kinematics {
            position: v.position,
            velocity: v.velocity,
            acceleration: v.acceleration,
        })
        .collect()
}

/// Runs a scenario to its horizon or to the first collision.
pub fn run(scenario: &ScenarioSpec, config: &SimConfig) -> Result<Trajectory> {
    let mut sim = Simulation::new(scenario, config)?;
    let mut traj = Trajectory {
        classes: sim.vehicles.iter().map(|v| v.class).collect(),
        boundary: sim.boundary,
        perturbation: scenario.perturbation,
        times: Vec::new(),
        samples: Vec::new(),
        outcome: Outcome::Completed,
    };
    let steps = config.steps();
    let stride = config.sample_stride as i64;
    loop {
        if let Err(c) = sim.evaluate()? {
            traj.outcome = Outcome::Collision(c);
            break;
        }
        if sim.step % stride == 0 || sim.step == steps {
            sim.record(&mut traj);
        }
        if sim.step == steps {
            break;
        }
        if let Err(c) = sim.advance() {
            traj.outcome = Outcome::Collision(c);
            break;
        }
    }
    Ok(traj)
}

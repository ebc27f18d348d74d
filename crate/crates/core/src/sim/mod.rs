//! Time-domain simulation of mixed platoons with driver reaction delay.

mod engine;
mod growth;
mod history;
mod platoon;

pub use engine::{
    inject_perturbation, run, Collision, Integrator, Outcome, PerturbationKind,
    PerturbationSpec, Road, Sample, ScenarioSpec, SimConfig, Simulation, SpeedProfile, Trajectory,
};
pub use growth::{measure_growth, GrowthClass, GrowthReport, GROWTH_BAND, MEASURABLE_DEVIATION,
    RING_REFERENCE_WINDOW};
pub use history::{History, Kinematics, Side, Snapshot};
pub use platoon::{
    build_platoon, connected_predecessors, gap_ahead, leader_of, Boundary, PlatoonComposition,
    PlatoonPattern,
};

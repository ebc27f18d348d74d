//! Extended intelligent-driver car-following model for mixed platoons of
//! connected and human-driven vehicles.
//!
//! Connected vehicles add a weighted feedback term over the velocity
//! differences and accelerations broadcast by connected vehicles ahead.
//! The crate provides the acceleration law, a linear string-stability
//! criterion with parameter sweeps, and a delayed platoon simulator used to
//! check the criterion against perturbation growth in the time domain.

pub mod commands;
pub mod config;
pub mod error;
pub mod map;
pub mod model;
pub mod output;
pub mod params;
pub mod sim;
pub mod stability;
pub mod verify;

pub use error::{Error, Result};
pub use model::{EquilibriumState, Neighbor, VehicleClass, VehicleState};
pub use params::{ConnectivityParams, IdmParams, WeightScheme};

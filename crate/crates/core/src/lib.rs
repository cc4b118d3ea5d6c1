//! Joint transmit beamforming and movable-antenna placement for a secondary
//! transmitter that shares spectrum with protected primary receivers.
//!
//! The crate is organised bottom-up:
//!
//! - [`config`], [`types`], [`rng`]: shared configuration, domain types and
//!   deterministic random streams.
//! - [`channel`]: field-response channel model and random scenario synthesis.
//! - [`metrics`]: SNR, interference power and feasibility of a design.
//! - [`beamforming`]: MRT, ZF and the successive convex approximation loop
//!   with its barrier-method inner solver.
//! - [`placement`]: sampling grid, sequential search, particle swarm and the
//!   fixed uniform layout.
//! - [`ao`]: alternating optimisation and the MRT/ZF alternating baselines.
//! - [`theory`]: executable two-antenna spacing construction and
//!   multi-antenna null-steering checks.
//! - [`harness`]: Monte-Carlo sweeps, CSV output, replay and plot data.

pub mod ao;
pub mod beamforming;
pub mod channel;
pub mod config;
pub mod error;
pub mod harness;
pub mod metrics;
pub mod placement;
pub mod rng;
pub mod theory;
pub mod types;

pub use config::ScenarioConfig;
pub use error::{Error, Result};
pub use types::{Apv, Beamformer, ComplexVec, PathSet, Point, SolveReport};

/// Converts a power in dBm to watts.
pub fn dbm_to_watts(dbm: f64) -> f64 {
    10f64.powf(dbm / 10.0) / 1000.0
}

/// Converts a power in watts to dBm. Zero maps to negative infinity.
pub fn watts_to_dbm(watts: f64) -> f64 {
    10.0 * (watts * 1000.0).log10()
}

/// Linear ratio to dB.
pub fn to_db(linear: f64) -> f64 {
    10.0 * linear.log10()
}

pub fn from_db(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

//! Antenna placement: sampling grid, sequential search, particle swarm and
//! the fixed uniform layout.

mod fpa;
mod grid;
mod pso;
mod search;

pub use fpa::fpa_layout;
pub use grid::{feasible_points, ResponseTable, SamplingGrid};
pub use pso::{pso_optimize, pso_optimize_with, repair_layout, sca_update, BeamUpdate, PsoOutcome};
pub use search::{
    sequential_search, sequential_search_with, FixedBeam, MrtBackoff, PlacementObjective,
    SearchOutcome, ZeroForcing,
};

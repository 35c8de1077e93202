//! Configurations and weights of the loop, spin and dilute Potts measures.

pub mod boundary;
pub mod graph;
pub mod io;
pub mod loops;
pub mod params;
pub mod potts;
pub mod spins;

pub use boundary::{BoundaryCondition, ExteriorSpin, ResolvedBoundary};
pub use graph::SpinGraph;
pub use io::ConfigRecord;
pub use loops::{loop_log_weight, loop_weight, spins_to_loops, LoopConfig};
pub use params::{homeomorphism_f, nienhuis_xc, ModelParams};
pub use potts::{dilute_potts_log_weight, DiluteParams, DilutePottsConfig, SiteGraph};
pub use spins::{delta_log_weight, spin_log_weight, stats_log_weight, FlipDelta, SpinConfig, SpinStats};

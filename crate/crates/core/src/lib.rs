//! Simulation and exact verification of the spin representation of the loop
//! O(n) model on the hexagonal lattice.

pub mod crossing;
pub mod density;
pub mod dsu;
pub mod error;
pub mod exact;
pub mod lattice;
pub mod model;
pub mod sampler;

/// Engine version embedded in every run artifact.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

pub use error::{Error, Result};
pub use lattice::{ArcLabel, DomainKind, EdgePartition, FaceCoord, HexDomain};
pub use model::{BoundaryCondition, ModelParams, SpinConfig, SpinGraph, SpinStats};

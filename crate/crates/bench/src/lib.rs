//! Fixtures shared by the benchmarks.

use hexcross::sampler::{ChainState, Dynamics, Start};
use hexcross::{BoundaryCondition, HexDomain, ModelParams, SpinGraph};

/// Ising point of the spin measure, below the critical edge weight.
pub fn ising(x: f64) -> ModelParams {
    ModelParams::loop_only(1.0, x).expect("valid parameters")
}

/// A chain on `domain` after `warmup` sweeps from a random start.
pub fn warm_chain(domain: &HexDomain, params: ModelParams, dynamics: Dynamics, warmup: u64) -> ChainState {
    let graph = SpinGraph::new(domain, &BoundaryCondition::Free).expect("free boundary resolves");
    let mut chain = ChainState::new(graph, params, dynamics, Start::Random, 1, 0).expect("valid chain");
    for _ in 0..warmup {
        chain.sweep();
    }
    chain
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn warm_chain_keeps_counts_coherent() {
        let d = HexDomain::hex_box(6, 6).unwrap();
        let mut c = warm_chain(&d, ising(0.5), Dynamics::HeatBath, 5);
        assert_eq!(c.sweep_count(), 5);
        assert!(c.config_mut().is_coherent());
    }
}

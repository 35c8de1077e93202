//! Markov chain Monte Carlo for the spin measure.
//!
//! Chain `c` of a run draws from ChaCha8 seeded with the run seed, on
//! stream `c`. Chains run in parallel but never share state, so results do
//! not depend on the number of worker threads.

mod chain;
mod stats;

use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use chain::{ChainState, Dynamics, Start};
pub use stats::{batch_means, batch_std_error, combine_chains, Estimate, BATCHES};

use crate::error::Result;
use crate::exact::EventPredicate;
use crate::lattice::HexDomain;
use crate::model::boundary::BoundaryCondition;
use crate::model::graph::SpinGraph;
use crate::model::params::ModelParams;
use crate::model::spins::SpinConfig;

/// Sweeps, thinning and chain count of a run.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Schedule {
    pub burn_in: u64,
    pub sweeps: u64,
    /// Record every `thin`-th sweep.
    pub thin: u64,
    pub chains: usize,
    pub seed: u64,
    #[serde(default)]
    pub dynamics: Dynamics,
}

impl Default for Schedule {
    fn default() -> Self {
        Self {
            burn_in: 1_000,
            sweeps: 10_000,
            thin: 1,
            chains: 3,
            seed: 0,
            dynamics: Dynamics::HeatBath,
        }
    }
}

impl Schedule {
    pub fn with_seed(self, seed: u64) -> Self {
        Self { seed, ..self }
    }

    /// Doubles the recorded sweeps and burn-in.
    pub fn doubled(self) -> Self {
        Self {
            burn_in: self.burn_in * 2,
            sweeps: self.sweeps * 2,
            ..self
        }
    }
}

/// Start of chain `c`: all plus, all minus, random, repeating.
pub fn chain_start(c: usize) -> Start {
    match c % 3 {
        0 => Start::AllPlus,
        1 => Start::AllMinus,
        _ => Start::Random,
    }
}

/// Per-chain diagnostics of a run.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct RunDiagnostics {
    pub checkpoint_mismatches: u64,
    pub split_search_fallbacks: u64,
    pub sweeps_per_chain: u64,
}

/// Recorded observables per chain: `traces[chain][obs]` is a series.
#[derive(Clone, Debug, PartialEq)]
pub struct Traces {
    pub traces: Vec<Vec<Vec<f64>>>,
    pub diagnostics: RunDiagnostics,
}

impl Traces {
    /// Estimate of observable `obs` pooled over chains.
    pub fn estimate(&self, obs: usize, seed: u64) -> Estimate {
        let series: Vec<Vec<f64>> = self.traces.iter().map(|c| c[obs].clone()).collect();
        combine_chains(&series, seed)
    }
}

/// Whether `x = 0` pins the chain to a single ground configuration.
fn frozen_ground(params: &ModelParams, bc: &BoundaryCondition) -> Option<Start> {
    if params.x != 0.0 {
        return None;
    }
    match bc {
        BoundaryCondition::Free => Some(Start::AllMinus),
        BoundaryCondition::Wired => Some(Start::AllPlus),
        _ => None,
    }
}

/// Series, checkpoint mismatches and split-search fallbacks of one chain.
type ChainOutput = (Vec<Vec<f64>>, u64, u64);

/// Runs `schedule.chains` chains and records `n_obs` observables every
/// `thin` sweeps after burn-in.
pub fn run_chains<F>(
    graph: &Arc<SpinGraph>,
    params: &ModelParams,
    schedule: &Schedule,
    n_obs: usize,
    observe: F,
) -> Result<Traces>
where
    F: Fn(&mut SpinConfig, &mut Vec<f64>) + Sync,
{
    let ground = frozen_ground(params, graph.boundary());
    let thin = schedule.thin.max(1);
    let per_chain: Result<Vec<ChainOutput>> = (0..schedule.chains.max(1))
        .into_par_iter()
        .map(|c| {
            let start = ground.unwrap_or_else(|| chain_start(c));
            let mut chain = ChainState::new(
                Arc::clone(graph),
                *params,
                schedule.dynamics,
                start,
                schedule.seed,
                c as u64,
            )?;
            for _ in 0..schedule.burn_in {
                chain.sweep();
            }
            let mut series = vec![Vec::with_capacity((schedule.sweeps / thin) as usize); n_obs];
            let mut buf = Vec::with_capacity(n_obs);
            for s in 1..=schedule.sweeps {
                chain.sweep();
                if s % thin == 0 {
                    buf.clear();
                    observe(chain.config_mut(), &mut buf);
                    debug_assert_eq!(buf.len(), n_obs);
                    for (dst, &v) in series.iter_mut().zip(buf.iter()) {
                        dst.push(v);
                    }
                }
            }
            chain.checkpoint();
            Ok((series, chain.checkpoint_mismatches(), chain.config().fallback_count()))
        })
        .collect();
    let per_chain = per_chain?;
    let diagnostics = RunDiagnostics {
        checkpoint_mismatches: per_chain.iter().map(|c| c.1).sum(),
        split_search_fallbacks: per_chain.iter().map(|c| c.2).sum(),
        sweeps_per_chain: schedule.burn_in + schedule.sweeps,
    };
    Ok(Traces {
        traces: per_chain.into_iter().map(|c| c.0).collect(),
        diagnostics,
    })
}

/// Estimates `μ[A]` by MCMC.
pub fn estimate_event(
    domain: &HexDomain,
    params: &ModelParams,
    bc: &BoundaryCondition,
    event: &EventPredicate,
    schedule: &Schedule,
) -> Result<Estimate> {
    Ok(estimate_events(domain, params, bc, std::slice::from_ref(event), schedule)?.remove(0))
}

/// Estimates several events from the same chains.
pub fn estimate_events(
    domain: &HexDomain,
    params: &ModelParams,
    bc: &BoundaryCondition,
    events: &[EventPredicate],
    schedule: &Schedule,
) -> Result<Vec<Estimate>> {
    let graph = SpinGraph::new(domain, bc)?;
    let traces = run_chains(&graph, params, schedule, events.len(), |c, out| {
        let spins = c.domain_spins();
        out.extend(events.iter().map(|e| if e.eval(spins) { 1.0 } else { 0.0 }));
    })?;
    Ok((0..events.len()).map(|i| traces.estimate(i, schedule.seed)).collect())
}

/// Change in the cluster count if `face` took `new_spin`.
pub fn delta_cluster_count(config: &mut SpinConfig, face: usize, new_spin: i8) -> i64 {
    if config.spin(face) == new_spin {
        return 0;
    }
    let tracking = config.cluster_tracking();
    if !tracking {
        config.set_cluster_tracking(true);
    }
    let dk = config.flip_delta(face).dk;
    if !tracking {
        config.set_cluster_tracking(false);
    }
    dk
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::crossing::horizontal_crossing;
    use crate::exact::{event_probability, event_table};
    use crate::lattice::FaceCoord;
    use statrs::distribution::{ChiSquared, ContinuousCDF};

    fn quick(seed: u64) -> Schedule {
        Schedule {
            burn_in: 500,
            sweeps: 40_000,
            thin: 1,
            chains: 3,
            seed,
            dynamics: Dynamics::HeatBath,
        }
    }

    #[test]
    fn single_face_conditional_is_exact() {
        let d = HexDomain::hex_box(1, 1).unwrap();
        let p = ModelParams::new(1.7, 0.6, 0.2, -0.3).unwrap();
        let exact = event_probability(&d, &p, &BoundaryCondition::Free, &EventPredicate::face_plus(0)).unwrap();
        let g = SpinGraph::new(&d, &BoundaryCondition::Free).unwrap();
        let mut chain = ChainState::new(g, p, Dynamics::HeatBath, Start::Random, 1, 0).unwrap();
        let steps = 1_000_000;
        let mut plus = 0u64;
        for _ in 0..steps {
            chain.heatbath_step(0);
            plus += u64::from(chain.config().spin(0) > 0);
        }
        // The heat bath on one face draws independently each step.
        let e_plus = exact * steps as f64;
        let e_minus = steps as f64 - e_plus;
        let chi2 = (plus as f64 - e_plus).powi(2) / e_plus + ((steps - plus) as f64 - e_minus).powi(2) / e_minus;
        let pval = 1.0 - ChiSquared::new(1.0).unwrap().cdf(chi2);
        assert!(pval > 0.001, "p = {pval}");
    }

    #[test]
    fn two_face_distribution_matches_enumeration() {
        let d = HexDomain::hex_box(2, 1).unwrap();
        let p = ModelParams::new(1.5, 0.5, 0.1, 0.2).unwrap();
        let bc = BoundaryCondition::Wired;
        let events: Vec<EventPredicate> = (0..4u8)
            .map(|b| EventPredicate::new(format!("{b}"), move |s| (s[0] > 0) as u8 + 2 * (s[1] > 0) as u8 == b))
            .collect();
        let exact = event_table(&d, &p, &bc, &events).unwrap();
        let g = SpinGraph::new(&d, &bc).unwrap();
        let mut chain = ChainState::new(g, p, Dynamics::HeatBath, Start::Random, 2, 0).unwrap();
        // Thinning makes the recorded states effectively independent, which
        // the chi-square test needs.
        let (samples, thin) = (125_000, 8);
        let mut counts = [0u64; 4];
        for _ in 0..samples {
            for _ in 0..thin {
                chain.sweep();
            }
            let s = chain.config().domain_spins();
            counts[(s[0] > 0) as usize + 2 * (s[1] > 0) as usize] += 1;
        }
        let chi2: f64 = counts
            .iter()
            .zip(&exact.single)
            .map(|(&c, &q)| {
                let e = q * samples as f64;
                (c as f64 - e).powi(2) / e
            })
            .sum();
        let pval = 1.0 - ChiSquared::new(3.0).unwrap().cdf(chi2);
        assert!(pval > 0.001, "p = {pval}, counts {counts:?} vs {:?}", exact.single);
    }

    #[test]
    fn crossing_estimate_agrees_with_exact() {
        let d = HexDomain::hex_box(3, 2).unwrap();
        let p = ModelParams::loop_only(1.5, 0.55).unwrap();
        let h = EventPredicate::crossing("H", &d, horizontal_crossing(&d).unwrap());
        for bc in [BoundaryCondition::Free, BoundaryCondition::Wired] {
            let exact = event_probability(&d, &p, &bc, &h).unwrap();
            let est = estimate_event(&d, &p, &bc, &h, &quick(4)).unwrap();
            assert!((est.mean - exact).abs() <= 3.0 * est.std_error.max(1e-3), "{est:?} vs {exact}");
            assert!(!est.non_converged);
        }
    }

    #[test]
    fn wolff_agrees_with_exact() {
        let d = HexDomain::hex_box(4, 3).unwrap();
        let p = ModelParams::loop_only(1.0, 0.5).unwrap();
        let h = EventPredicate::crossing("H", &d, horizontal_crossing(&d).unwrap());
        let bc = BoundaryCondition::Free;
        let exact = event_probability(&d, &p, &bc, &h).unwrap();
        let sched = Schedule {
            dynamics: Dynamics::Wolff,
            ..quick(8)
        };
        let est = estimate_event(&d, &p, &bc, &h, &sched).unwrap();
        assert!((est.mean - exact).abs() <= 3.0 * est.std_error.max(1e-3), "{est:?} vs {exact}");
    }

    #[test]
    fn estimates_are_reproducible() {
        let d = HexDomain::hex_box(3, 3).unwrap();
        let p = ModelParams::loop_only(2.0, 0.6).unwrap();
        let h = EventPredicate::crossing("H", &d, horizontal_crossing(&d).unwrap());
        let s = Schedule {
            sweeps: 2000,
            ..quick(11)
        };
        let a = estimate_event(&d, &p, &BoundaryCondition::Free, &h, &s).unwrap();
        let b = estimate_event(&d, &p, &BoundaryCondition::Free, &h, &s).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.mean.to_bits(), b.mean.to_bits());
    }

    #[test]
    fn frozen_at_zero_x() {
        let d = HexDomain::hex_box(4, 2).unwrap();
        let p = ModelParams::loop_only(1.0, 0.0).unwrap();
        let h = EventPredicate::crossing("H", &d, horizontal_crossing(&d).unwrap());
        let s = Schedule {
            sweeps: 200,
            burn_in: 10,
            ..quick(0)
        };
        let est = estimate_event(&d, &p, &BoundaryCondition::Free, &h, &s).unwrap();
        assert_eq!(est.mean, 0.0);
        assert_eq!(est.std_error, 0.0);
        let est = estimate_event(&d, &p, &BoundaryCondition::Wired, &h, &s).unwrap();
        assert_eq!(est.mean, 1.0);
    }

    #[test]
    fn delta_cluster_count_fixtures() {
        let d = HexDomain::regular_hexagon(1).unwrap();
        let g = SpinGraph::new(&d, &BoundaryCondition::Wired).unwrap();
        let mut c = SpinConfig::uniform(g, 1).unwrap();
        let centre = d.index_of(FaceCoord::new(0, 0)).unwrap();
        assert_eq!(delta_cluster_count(&mut c, centre, -1), 1);
        assert_eq!(delta_cluster_count(&mut c, centre, 1), 0);
        c.flip(centre);
        // A - centre inside a + ring: flipping it back merges into the ring.
        assert_eq!(delta_cluster_count(&mut c, centre, 1), -1);
        c.set_cluster_tracking(false);
        assert_eq!(delta_cluster_count(&mut c, centre, 1), -1);
        assert!(!c.cluster_tracking());
    }

    #[test]
    fn delta_cluster_count_matches_recount_on_random_flips() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(21);
        let d = HexDomain::hex_box(6, 5).unwrap();
        let bcs = [BoundaryCondition::Free, BoundaryCondition::mixed_push_primal(), BoundaryCondition::Dobrushin { start: 0.2, end: 0.7 }];
        for i in 0..10_000 {
            let g = SpinGraph::new(&d, &bcs[i % 3]).unwrap();
            let bits: u64 = rng.random();
            let mut c = SpinConfig::from_bits(g, bits).unwrap();
            let face = rng.random_range(0..d.len());
            let new = -c.spin(face);
            let before = c.recount().k;
            let dk = delta_cluster_count(&mut c, face, new);
            c.flip(face);
            assert_eq!(c.recount().k - before, dk);
        }
    }
}

use std::collections::VecDeque;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::graph::{SpinGraph, NONE};
use crate::model::params::ModelParams;
use crate::model::spins::{delta_log_weight, SpinConfig, SpinStats};

/// Recent statistics kept for diagnostics.
const HISTORY: usize = 32;

/// Update rule.
#[derive(Copy, Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Dynamics {
    /// Systematic-scan single-face heat bath. Valid for all parameters.
    #[default]
    HeatBath,
    /// Heat-bath sweep followed by one cluster flip. Only for `n = 1`,
    /// `h = h' = 0`, `0 < x <= 1`.
    Wolff,
}

impl Dynamics {
    pub fn check(&self, params: &ModelParams) -> Result<()> {
        match self {
            Dynamics::HeatBath => Ok(()),
            Dynamics::Wolff => {
                if params.n == 1.0 && params.h == 0.0 && params.h_prime == 0.0 && params.x > 0.0 && params.x <= 1.0 {
                    Ok(())
                } else {
                    Err(Error::Precondition(
                        "cluster moves need n = 1, h = h' = 0 and 0 < x <= 1".into(),
                    ))
                }
            }
        }
    }
}

/// Initial configuration of a chain.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Start {
    AllPlus,
    AllMinus,
    Random,
}

/// One Markov chain on the spin measure.
#[derive(Clone, Debug)]
pub struct ChainState {
    config: SpinConfig,
    params: ModelParams,
    dynamics: Dynamics,
    rng: ChaCha8Rng,
    sweep_count: u64,
    checkpoint_every: u64,
    checkpoint_mismatches: u64,
    history: VecDeque<SpinStats>,
    cluster: Vec<u32>,
    in_cluster: Vec<bool>,
}

impl ChainState {
    /// Chain `stream` of the generator seeded with `seed`.
    pub fn new(
        graph: Arc<SpinGraph>,
        params: ModelParams,
        dynamics: Dynamics,
        start: Start,
        seed: u64,
        stream: u64,
    ) -> Result<Self> {
        params.validate()?;
        dynamics.check(&params)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream);
        let n = graph.n_domain();
        let spins: Vec<i8> = match start {
            Start::AllPlus => vec![1; n],
            Start::AllMinus => vec![-1; n],
            Start::Random => (0..n).map(|_| if rng.random_bool(0.5) { 1 } else { -1 }).collect(),
        };
        let nodes = graph.n_nodes();
        let mut config = SpinConfig::new(graph, &spins)?;
        // The cluster term is constant at n = 1.
        config.set_cluster_tracking(params.n != 1.0);
        Ok(Self {
            config,
            params,
            dynamics,
            rng,
            sweep_count: 0,
            checkpoint_every: 100,
            checkpoint_mismatches: 0,
            history: VecDeque::with_capacity(HISTORY),
            cluster: Vec::new(),
            in_cluster: vec![false; nodes],
        })
    }

    pub fn config(&self) -> &SpinConfig {
        &self.config
    }

    pub fn config_mut(&mut self) -> &mut SpinConfig {
        &mut self.config
    }

    pub fn params(&self) -> &ModelParams {
        &self.params
    }

    pub fn sweep_count(&self) -> u64 {
        self.sweep_count
    }

    /// Sweeps between cache-versus-recount checks; 0 disables them.
    pub fn set_checkpoint_every(&mut self, every: u64) {
        self.checkpoint_every = every;
    }

    /// Checkpoints at which the cached statistics disagreed with a recount.
    pub fn checkpoint_mismatches(&self) -> u64 {
        self.checkpoint_mismatches
    }

    pub fn history(&self) -> &VecDeque<SpinStats> {
        &self.history
    }

    /// Resamples one face from its conditional distribution given the rest.
    pub fn heatbath_step(&mut self, face: usize) {
        let delta = self.config.flip_delta(face);
        let d = delta_log_weight(&delta, &self.params);
        // d is ln w(flipped) - ln w(current).
        let flip = if d == f64::INFINITY {
            true
        } else if d == f64::NEG_INFINITY {
            false
        } else {
            let p = 1.0 / (1.0 + (-d).exp());
            self.rng.random::<f64>() < p
        };
        if flip {
            self.config.apply_flip(face, &delta);
        }
    }

    /// One cluster move. Bonds between equal neighbours open with
    /// probability `1 - x`; a cluster reaching the frozen ring is left alone.
    /// Returns the size of the flipped cluster, 0 when rejected.
    pub fn wolff_step(&mut self) -> usize {
        let graph = Arc::clone(self.config.graph());
        let nd = graph.n_domain();
        if nd == 0 {
            return 0;
        }
        let p_bond = 1.0 - self.params.x;
        let seed = self.rng.random_range(0..nd);
        let s = self.config.spin(seed);
        self.cluster.clear();
        self.cluster.push(seed as u32);
        self.in_cluster[seed] = true;
        let mut head = 0;
        let mut rejected = false;
        'grow: while head < self.cluster.len() {
            let v = self.cluster[head] as usize;
            head += 1;
            for &w in graph.nbrs(v) {
                if w == NONE {
                    continue;
                }
                let wu = w as usize;
                if self.in_cluster[wu] || self.config.spin(wu) != s {
                    continue;
                }
                if self.rng.random::<f64>() < p_bond {
                    if wu >= nd {
                        rejected = true;
                        break 'grow;
                    }
                    self.in_cluster[wu] = true;
                    self.cluster.push(w);
                }
            }
        }
        for &v in &self.cluster {
            self.in_cluster[v as usize] = false;
        }
        if rejected {
            return 0;
        }
        let faces: Vec<usize> = self.cluster.iter().map(|&v| v as usize).collect();
        self.config.set_spins(&faces, -s);
        faces.len()
    }

    /// One systematic scan over all faces, plus a cluster move when enabled.
    pub fn sweep(&mut self) {
        for face in 0..self.config.len() {
            self.heatbath_step(face);
        }
        if self.dynamics == Dynamics::Wolff {
            self.wolff_step();
        }
        self.sweep_count += 1;
        if self.history.len() == HISTORY {
            self.history.pop_front();
        }
        self.history.push_back(self.config.cached_stats());
        if self.checkpoint_every > 0 && self.sweep_count.is_multiple_of(self.checkpoint_every) {
            self.checkpoint();
        }
    }

    /// Compares the cache with a full recount and resynchronises.
    pub fn checkpoint(&mut self) -> bool {
        let ok = self.config.is_coherent();
        if !ok {
            self.checkpoint_mismatches += 1;
            self.config.resync();
        }
        ok
    }
}

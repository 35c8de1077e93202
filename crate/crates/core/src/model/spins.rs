use std::collections::VecDeque;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::dsu::UnionFind;
use crate::error::{Error, Result};
use crate::model::graph::{SpinGraph, NONE};
use crate::model::params::ModelParams;

/// Node budget of the split-detection search before falling back to a full
/// cluster recount.
pub const DEFAULT_SEARCH_BUDGET: usize = 512;

/// Sufficient statistics of a spin configuration.
///
/// - `e`: hexagonal edges separating unequal spins, domain–ring edges included
/// - `k`: constant-spin clusters on domain ∪ ring, merged ring groups counting once
/// - `r`: sum of domain spins
/// - `r_prime`: sum over triangles touching the domain of `s * 1{monochromatic}`
#[derive(Copy, Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SpinStats {
    pub e: i64,
    pub k: i64,
    pub r: i64,
    pub r_prime: i64,
}

/// Change of the statistics under a single-face flip.
#[derive(Copy, Clone, Debug, Default, PartialEq, Eq)]
pub struct FlipDelta {
    pub de: i64,
    pub dk: i64,
    pub dr: i64,
    pub dr_prime: i64,
}

/// `k ln n + e ln x + h r + (h'/2) r'`, with `x = 0` and `e > 0` giving `-inf`.
pub fn stats_log_weight(stats: &SpinStats, params: &ModelParams) -> f64 {
    let edge_term = if stats.e == 0 {
        0.0
    } else if params.x == 0.0 {
        return f64::NEG_INFINITY;
    } else {
        stats.e as f64 * params.x.ln()
    };
    stats.k as f64 * params.ln_n() + edge_term + params.h * stats.r as f64 + 0.5 * params.h_prime * stats.r_prime as f64
}

/// Log-weight change of a flip. `x = 0` turns any change in the edge count
/// into `+-inf`.
pub fn delta_log_weight(delta: &FlipDelta, params: &ModelParams) -> f64 {
    let edge_term = if delta.de == 0 {
        0.0
    } else if params.x == 0.0 {
        return if delta.de > 0 { f64::NEG_INFINITY } else { f64::INFINITY };
    } else {
        delta.de as f64 * params.x.ln()
    };
    delta.dk as f64 * params.ln_n()
        + edge_term
        + params.h * delta.dr as f64
        + 0.5 * params.h_prime * delta.dr_prime as f64
}

/// Reusable buffers for cluster searches.
#[derive(Clone, Debug)]
struct Scratch {
    stamp: u32,
    seen: Vec<u32>,
    owner: Vec<u8>,
    queues: [VecDeque<u32>; 3],
    uf: UnionFind,
}

impl Scratch {
    fn new(n: usize) -> Self {
        Self {
            stamp: 0,
            seen: vec![0; n],
            owner: vec![0; n],
            queues: Default::default(),
            uf: UnionFind::new(n),
        }
    }

    fn next_stamp(&mut self) -> u32 {
        self.stamp = self.stamp.wrapping_add(1);
        if self.stamp == 0 {
            self.seen.fill(0);
            self.stamp = 1;
        }
        self.stamp
    }
}

/// Spin configuration on a domain with frozen exterior ring spins and cached
/// statistics kept current under single-face flips.
#[derive(Clone, Debug)]
pub struct SpinConfig {
    graph: Arc<SpinGraph>,
    spins: Vec<i8>,
    stats: SpinStats,
    track_clusters: bool,
    clusters_stale: bool,
    budget: usize,
    fallbacks: u64,
    scratch: Scratch,
}

impl SpinConfig {
    /// Builds a configuration from domain spins in domain face order.
    pub fn new(graph: Arc<SpinGraph>, domain_spins: &[i8]) -> Result<Self> {
        if domain_spins.len() != graph.n_domain() {
            return Err(Error::InvalidConfig(format!(
                "expected {} spins, got {}",
                graph.n_domain(),
                domain_spins.len()
            )));
        }
        if let Some(s) = domain_spins.iter().find(|&&s| s != 1 && s != -1) {
            return Err(Error::InvalidConfig(format!("spin value {s} is not +-1")));
        }
        let mut spins = Vec::with_capacity(graph.n_nodes());
        spins.extend_from_slice(domain_spins);
        spins.extend_from_slice(graph.ring_spins());
        let n = graph.n_nodes();
        let mut config = Self {
            graph,
            spins,
            stats: SpinStats::default(),
            track_clusters: true,
            clusters_stale: false,
            budget: DEFAULT_SEARCH_BUDGET,
            fallbacks: 0,
            scratch: Scratch::new(n),
        };
        config.stats = config.recount();
        Ok(config)
    }

    pub fn uniform(graph: Arc<SpinGraph>, spin: i8) -> Result<Self> {
        let spins = vec![spin; graph.n_domain()];
        Self::new(graph, &spins)
    }

    /// Bit `i` set means face `i` is `+`.
    pub fn from_bits(graph: Arc<SpinGraph>, bits: u64) -> Result<Self> {
        let spins: Vec<i8> = (0..graph.n_domain()).map(|i| if bits >> i & 1 == 1 { 1 } else { -1 }).collect();
        Self::new(graph, &spins)
    }

    pub fn graph(&self) -> &Arc<SpinGraph> {
        &self.graph
    }

    #[inline]
    pub fn spin(&self, node: usize) -> i8 {
        self.spins[node]
    }

    /// Spins of the domain faces.
    pub fn domain_spins(&self) -> &[i8] {
        &self.spins[..self.graph.n_domain()]
    }

    /// Spins of domain and ring nodes.
    pub fn node_spins(&self) -> &[i8] {
        &self.spins
    }

    pub fn len(&self) -> usize {
        self.graph.n_domain()
    }

    pub fn is_empty(&self) -> bool {
        self.graph.n_domain() == 0
    }

    /// When disabled, flips skip the cluster-count update and `k` is
    /// recomputed lazily. Useful when `n = 1` makes `k` irrelevant.
    pub fn set_cluster_tracking(&mut self, on: bool) {
        if on && self.clusters_stale {
            self.stats.k = self.count_clusters();
            self.clusters_stale = false;
        }
        self.track_clusters = on;
    }

    pub fn cluster_tracking(&self) -> bool {
        self.track_clusters
    }

    pub fn set_search_budget(&mut self, budget: usize) {
        self.budget = budget;
    }

    /// Number of split searches that exceeded the budget and fell back to a
    /// full recount.
    pub fn fallback_count(&self) -> u64 {
        self.fallbacks
    }

    /// Cached statistics; refreshes `k` first if it is stale.
    pub fn stats(&mut self) -> SpinStats {
        if self.clusters_stale {
            self.stats.k = self.count_clusters();
            self.clusters_stale = false;
        }
        self.stats
    }

    /// Cached statistics without refreshing; `k` may be stale when cluster
    /// tracking is off.
    pub fn cached_stats(&self) -> SpinStats {
        self.stats
    }

    pub fn log_weight(&mut self, params: &ModelParams) -> f64 {
        let stats = self.stats();
        stats_log_weight(&stats, params)
    }

    /// Statistics recomputed from scratch.
    pub fn recount(&mut self) -> SpinStats {
        let mut stats = self.local_stats();
        stats.k = self.count_clusters();
        stats
    }

    /// `e`, `r` and `r'` from scratch, leaving `k` at zero.
    fn local_stats(&self) -> SpinStats {
        let g = &self.graph;
        let nd = g.n_domain();
        let mut e = 0i64;
        for f in 0..nd {
            for &nb in g.nbrs(f) {
                let nb = nb as usize;
                if (nb >= nd || nb > f) && self.spins[f] != self.spins[nb] {
                    e += 1;
                }
            }
        }
        let r = self.spins[..nd].iter().map(|&s| s as i64).sum();
        let r_prime = g
            .triangles()
            .iter()
            .map(|t| {
                let s = self.spins[t[0] as usize];
                if s == self.spins[t[1] as usize] && s == self.spins[t[2] as usize] {
                    s as i64
                } else {
                    0
                }
            })
            .sum();
        SpinStats { e, k: 0, r, r_prime }
    }

    /// Whether the cache agrees with a full recount.
    pub fn is_coherent(&mut self) -> bool {
        let fresh = self.recount();
        fresh == self.stats()
    }

    /// Replaces the cache with a full recount.
    pub fn resync(&mut self) {
        self.stats = self.recount();
        self.clusters_stale = false;
    }

    fn count_clusters(&mut self) -> i64 {
        let mut uf = self.cluster_forest();
        let n = self.graph.n_nodes();
        let k = (0..n).filter(|&i| uf.find(i) == i).count() as i64;
        self.scratch.uf = uf;
        k
    }

    /// Union-find over same-spin adjacency plus merged ring groups.
    fn cluster_forest(&mut self) -> UnionFind {
        let mut uf = std::mem::replace(&mut self.scratch.uf, UnionFind::new(0));
        if uf.len() != self.graph.n_nodes() {
            uf = UnionFind::new(self.graph.n_nodes());
        } else {
            uf.reset();
        }
        let g = &self.graph;
        for v in 0..g.n_nodes() {
            for &w in g.nbrs(v) {
                if w != NONE && (w as usize) > v && self.spins[v] == self.spins[w as usize] {
                    uf.union(v, w as usize);
                }
            }
        }
        for group in g.groups() {
            for pair in group.windows(2) {
                uf.union(pair[0] as usize, pair[1] as usize);
            }
        }
        uf
    }

    /// Statistics change if domain face `face` were flipped.
    pub fn flip_delta(&mut self, face: usize) -> FlipDelta {
        debug_assert!(face < self.graph.n_domain());
        let g = Arc::clone(&self.graph);
        let nb = g.nbrs(face);
        let s = self.spins[face];
        let mut disagree = 0i64;
        for &w in nb {
            if self.spins[w as usize] != s {
                disagree += 1;
            }
        }
        let de = 6 - 2 * disagree;

        let mut dr_prime = 0i64;
        for i in 0..6 {
            let a = self.spins[nb[i] as usize];
            let b = self.spins[nb[(i + 1) % 6] as usize];
            // A triangle with equal outer pair contributes s before the flip
            // when a == s and -s after it when a == -s; either way r' drops by s.
            if a == b {
                dr_prime -= s as i64;
            }
        }

        let dk = if self.track_clusters {
            // Clusters of -s touching `face` merge into one; the cluster of
            // `face` may split into several pieces of spin s.
            let merged = self.distinct_clusters(face, -s);
            self.spins[face] = -s;
            let pieces = self.distinct_clusters(face, s);
            self.spins[face] = s;
            pieces - merged
        } else {
            0
        };

        FlipDelta {
            de,
            dk,
            dr: -2 * s as i64,
            dr_prime,
        }
    }

    /// Applies a flip whose delta was computed by [`Self::flip_delta`] on the
    /// current state.
    pub fn apply_flip(&mut self, face: usize, delta: &FlipDelta) {
        self.spins[face] = -self.spins[face];
        self.stats.e += delta.de;
        self.stats.r += delta.dr;
        self.stats.r_prime += delta.dr_prime;
        if self.track_clusters {
            self.stats.k += delta.dk;
        } else {
            self.clusters_stale = true;
        }
    }

    pub fn flip(&mut self, face: usize) -> FlipDelta {
        let d = self.flip_delta(face);
        self.apply_flip(face, &d);
        d
    }

    /// Sets a set of domain faces at once and recounts. Used by cluster moves.
    pub fn set_spins(&mut self, faces: &[usize], spin: i8) {
        for &f in faces {
            debug_assert!(f < self.graph.n_domain());
            self.spins[f] = spin;
        }
        if self.track_clusters {
            self.resync();
        } else {
            let k = self.stats.k;
            self.stats = self.local_stats();
            self.stats.k = k;
            self.clusters_stale = true;
        }
    }

    /// Number of distinct `spin` clusters among the neighbours of `center`,
    /// whose own spin differs from `spin`.
    fn distinct_clusters(&mut self, center: usize, spin: i8) -> i64 {
        let g = Arc::clone(&self.graph);
        let nb = g.nbrs(center);
        debug_assert_ne!(self.spins[center], spin);

        // Runs of consecutive same-spin neighbours are locally connected.
        let mut seeds = [0u32; 3];
        let mut n_seeds = 0;
        let mut all_match = true;
        for i in 0..6 {
            let here = self.spins[nb[i] as usize] == spin;
            let prev = self.spins[nb[(i + 5) % 6] as usize] == spin;
            all_match &= here;
            if here && !prev {
                seeds[n_seeds] = nb[i];
                n_seeds += 1;
            }
        }
        if all_match {
            return 1;
        }
        // Ring groups can join runs without any path through the lattice.
        if n_seeds <= 1 {
            return n_seeds as i64;
        }
        match self.joined_runs(&seeds[..n_seeds], spin) {
            Some(k) => k,
            None => {
                self.fallbacks += 1;
                let mut uf = self.cluster_forest();
                let mut roots = [usize::MAX; 3];
                for (i, &s) in seeds[..n_seeds].iter().enumerate() {
                    roots[i] = uf.find(s as usize);
                }
                self.scratch.uf = uf;
                let mut distinct = 0;
                for i in 0..n_seeds {
                    if !roots[..i].contains(&roots[i]) {
                        distinct += 1;
                    }
                }
                distinct
            }
        }
    }

    /// Interleaved breadth-first searches from each seed. A search that runs
    /// dry without meeting another has exhausted its cluster. Returns `None`
    /// when the node budget runs out.
    fn joined_runs(&mut self, seeds: &[u32], spin: i8) -> Option<i64> {
        let g = Arc::clone(&self.graph);
        let stamp = self.scratch.next_stamp();
        // Group label per search; merged searches share a representative.
        let mut rep = [0u8, 1, 2];
        let mut active = [false; 3];
        for (i, &s) in seeds.iter().enumerate() {
            self.scratch.queues[i].clear();
            self.scratch.queues[i].push_back(s);
            self.scratch.seen[s as usize] = stamp;
            self.scratch.owner[s as usize] = i as u8;
            active[i] = true;
        }
        let find = |rep: &[u8; 3], mut i: u8| {
            while rep[i as usize] != i {
                i = rep[i as usize];
            }
            i
        };
        let mut finished = 0i64;
        let mut visited = seeds.len();

        loop {
            let live = active.iter().filter(|&&a| a).count();
            if live <= 1 {
                return Some(finished + live as i64);
            }
            for i in 0..seeds.len() {
                if !active[i] {
                    continue;
                }
                let Some(v) = self.scratch.queues[i].pop_front() else {
                    active[i] = false;
                    finished += 1;
                    continue;
                };
                let v = v as usize;
                let group_members: &[u32] = match g.group_of(v) {
                    Some(gi) => &g.groups()[gi],
                    None => &[],
                };
                for &w in g.nbrs(v).iter().chain(group_members) {
                    if w == NONE || self.spins[w as usize] != spin {
                        continue;
                    }
                    let wu = w as usize;
                    if self.scratch.seen[wu] == stamp {
                        let a = find(&rep, i as u8);
                        let b = find(&rep, self.scratch.owner[wu]);
                        if a != b {
                            // Fold search b into search a.
                            rep[b as usize] = a;
                            let moved = std::mem::take(&mut self.scratch.queues[b as usize]);
                            self.scratch.queues[a as usize].extend(moved);
                            active[b as usize] = false;
                            if !active[a as usize] {
                                active[a as usize] = true;
                            }
                        }
                    } else {
                        self.scratch.seen[wu] = stamp;
                        self.scratch.owner[wu] = find(&rep, i as u8);
                        self.scratch.queues[i].push_back(w);
                        visited += 1;
                    }
                }
                if visited > self.budget {
                    return None;
                }
                if active.iter().filter(|&&a| a).count() <= 1 {
                    break;
                }
                // The search may have been folded into another one.
                if find(&rep, i as u8) != i as u8 {
                    continue;
                }
            }
        }
    }
}

/// `spin_log_weight` for a configuration: cached statistics, boundary taken
/// from the configuration's graph.
pub fn spin_log_weight(config: &mut SpinConfig, params: &ModelParams) -> f64 {
    config.log_weight(params)
}

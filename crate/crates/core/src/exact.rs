//! Exhaustive enumeration on small domains: partition functions, exact event
//! probabilities and brute-force checks of the correlation inequalities.
//!
//! Configurations are visited in Gray-code order so each step is a single
//! flip with incremental statistics. The top spins are fixed per shard and
//! shards run in parallel; shard results are merged in shard order, so the
//! output does not depend on the thread count.

use std::collections::HashMap;
use std::fmt;
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::crossing::{horizontal_crossing, vertical_crossing, CrossingEvent, HexTriple};
use crate::error::{Error, Result};
use crate::lattice::HexDomain;
use crate::model::boundary::{BoundaryCondition, ExteriorSpin};
use crate::model::graph::SpinGraph;
use crate::model::params::ModelParams;
use crate::model::spins::{stats_log_weight, SpinConfig, SpinStats};

pub const DEFAULT_CAP: usize = 22;
const RESYNC_PERIOD: u64 = 1 << 14;

type PredicateFn = dyn Fn(&[i8]) -> bool + Send + Sync;

/// A named boolean function of the domain spins.
#[derive(Clone)]
pub struct EventPredicate {
    name: String,
    monotone_increasing: Option<bool>,
    f: Arc<PredicateFn>,
}

impl fmt::Debug for EventPredicate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("EventPredicate")
            .field("name", &self.name)
            .field("monotone_increasing", &self.monotone_increasing)
            .finish()
    }
}

impl EventPredicate {
    pub fn new(name: impl Into<String>, f: impl Fn(&[i8]) -> bool + Send + Sync + 'static) -> Self {
        Self {
            name: name.into(),
            monotone_increasing: None,
            f: Arc::new(f),
        }
    }

    /// Declares the event increasing in the spins.
    pub fn increasing(name: impl Into<String>, f: impl Fn(&[i8]) -> bool + Send + Sync + 'static) -> Self {
        Self {
            monotone_increasing: Some(true),
            ..Self::new(name, f)
        }
    }

    pub fn always() -> Self {
        Self::new("always", |_| true)
    }

    /// Face `idx` carries `+`.
    pub fn face_plus(idx: usize) -> Self {
        Self::increasing(format!("face{idx}+"), move |s| s[idx] > 0)
    }

    /// Every face is `+`.
    pub fn all_plus() -> Self {
        Self::increasing("all+", |s| s.iter().all(|&v| v > 0))
    }

    /// A connectivity event on `domain`. Increasing for `+` paths,
    /// decreasing for `-` paths.
    pub fn crossing(name: impl Into<String>, domain: &HexDomain, ev: CrossingEvent) -> Self {
        let d = domain.clone();
        let up = ev.spin > 0;
        Self {
            name: name.into(),
            monotone_increasing: Some(up),
            f: Arc::new(move |s| ev.holds(&d, s)),
        }
    }

    pub fn negate(&self) -> Self {
        let f = Arc::clone(&self.f);
        Self {
            name: format!("not {}", self.name),
            monotone_increasing: self.monotone_increasing.map(|m| !m),
            f: Arc::new(move |s| !f(s)),
        }
    }

    pub fn and(&self, other: &Self) -> Self {
        let (f, g) = (Arc::clone(&self.f), Arc::clone(&other.f));
        let mono = match (self.monotone_increasing, other.monotone_increasing) {
            (Some(a), Some(b)) if a == b => Some(a),
            _ => None,
        };
        Self {
            name: format!("{} and {}", self.name, other.name),
            monotone_increasing: mono,
            f: Arc::new(move |s| f(s) && g(s)),
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn monotone_increasing(&self) -> Option<bool> {
        self.monotone_increasing
    }

    #[inline]
    pub fn eval(&self, spins: &[i8]) -> bool {
        (self.f)(spins)
    }

    /// Checks the declared monotonicity on every configuration of up to
    /// `n_faces <= 16` faces: raising one `-` to `+` never turns an
    /// increasing event off. Returns `true` when nothing is declared.
    pub fn verify_monotone(&self, n_faces: usize) -> bool {
        let Some(up) = self.monotone_increasing else {
            return true;
        };
        assert!(n_faces <= 16, "monotonicity check is exhaustive");
        let mut s = vec![0i8; n_faces];
        for bits in 0u32..(1 << n_faces) {
            for (i, v) in s.iter_mut().enumerate() {
                *v = if bits >> i & 1 == 1 { 1 } else { -1 };
            }
            let before = self.eval(&s);
            for i in 0..n_faces {
                if s[i] < 0 {
                    s[i] = 1;
                    let after = self.eval(&s);
                    s[i] = -1;
                    if (up && before && !after) || (!up && !before && after) {
                        return false;
                    }
                }
            }
        }
        true
    }
}

/// Online log-sum-exp.
#[derive(Copy, Clone, Debug, PartialEq)]
pub struct LogSum {
    max: f64,
    sum: f64,
}

impl Default for LogSum {
    fn default() -> Self {
        Self {
            max: f64::NEG_INFINITY,
            sum: 0.0,
        }
    }
}

impl LogSum {
    #[inline]
    pub fn add(&mut self, lw: f64) {
        if lw == f64::NEG_INFINITY {
            return;
        }
        if lw > self.max {
            self.sum = self.sum * (self.max - lw).exp() + 1.0;
            self.max = lw;
        } else {
            self.sum += (lw - self.max).exp();
        }
    }

    pub fn merge(&mut self, other: &LogSum) {
        if other.max == f64::NEG_INFINITY {
            return;
        }
        if other.max > self.max {
            self.sum = self.sum * (self.max - other.max).exp() + other.sum;
            self.max = other.max;
        } else {
            self.sum += other.sum * (other.max - self.max).exp();
        }
    }

    /// `ln` of the accumulated sum; `-inf` when empty.
    pub fn value(&self) -> f64 {
        if self.max == f64::NEG_INFINITY {
            f64::NEG_INFINITY
        } else {
            self.max + self.sum.ln()
        }
    }
}

/// Enumeration settings.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Enumerator {
    /// Largest domain accepted.
    pub cap: usize,
    /// Spins fixed per shard; `2^shard_bits` shards.
    pub shard_bits: u32,
}

impl Default for Enumerator {
    fn default() -> Self {
        Self {
            cap: DEFAULT_CAP,
            shard_bits: 6,
        }
    }
}

impl Enumerator {
    pub fn with_cap(cap: usize) -> Self {
        Self { cap, ..Self::default() }
    }

    fn check(&self, graphs: &[Arc<SpinGraph>]) -> Result<usize> {
        let n = graphs[0].n_domain();
        if graphs.iter().any(|g| g.n_domain() != n) {
            return Err(Error::Precondition("enumerated graphs must share a domain size".into()));
        }
        if n > self.cap || n > 40 {
            return Err(Error::DomainTooLarge {
                faces: n,
                cap: self.cap.min(40),
            });
        }
        Ok(n)
    }

    /// Visits every configuration of the common domain of `graphs`, passing
    /// the domain spins and the log weight under each graph's boundary.
    /// Returns one state per shard, in shard order.
    pub fn run<S, I, V>(&self, graphs: &[Arc<SpinGraph>], params: &ModelParams, init: I, visit: V) -> Result<Vec<S>>
    where
        S: Send,
        I: Fn() -> S + Sync,
        V: Fn(&mut S, &[i8], &[f64]) + Sync,
    {
        self.run_with_stats(graphs, params, params.n != 1.0, init, |s, spins, lw, _| visit(s, spins, lw))
    }

    /// As [`Self::run`], also passing the statistics. With `clusters` off
    /// the `k` entries are meaningless and the weights ignore `k`, which is
    /// exact at `n = 1`.
    pub fn run_with_stats<S, I, V>(
        &self,
        graphs: &[Arc<SpinGraph>],
        params: &ModelParams,
        clusters: bool,
        init: I,
        visit: V,
    ) -> Result<Vec<S>>
    where
        S: Send,
        I: Fn() -> S + Sync,
        V: Fn(&mut S, &[i8], &[f64], &[SpinStats]) + Sync,
    {
        let n = self.check(graphs)?;
        if !clusters && params.n != 1.0 {
            return Err(Error::Precondition("cluster counts are needed unless n = 1".into()));
        }
        let b = self.shard_bits.min(n as u32);
        let low = n as u32 - b;
        (0..1u64 << b)
            .into_par_iter()
            .map(|shard| {
                let base = shard << low;
                let mut configs = graphs
                    .iter()
                    .map(|g| {
                        let mut c = SpinConfig::from_bits(Arc::clone(g), base)?;
                        c.set_cluster_tracking(clusters);
                        Ok(c)
                    })
                    .collect::<Result<Vec<_>>>()?;
                let mut logw = vec![0.0; graphs.len()];
                let mut stats = vec![SpinStats::default(); graphs.len()];
                let mut state = init();
                for step in 0u64..(1 << low) {
                    if step > 0 {
                        let face = step.trailing_zeros() as usize;
                        for c in configs.iter_mut() {
                            c.flip(face);
                            if step % RESYNC_PERIOD == 0 {
                                c.resync();
                            }
                        }
                    }
                    for ((w, st), c) in logw.iter_mut().zip(stats.iter_mut()).zip(&configs) {
                        *st = c.cached_stats();
                        let mut s = *st;
                        if !clusters {
                            s.k = 0;
                        }
                        *w = stats_log_weight(&s, params);
                    }
                    visit(&mut state, configs[0].domain_spins(), &logw, &stats);
                }
                Ok(state)
            })
            .collect()
    }
}

fn graph_for(domain: &HexDomain, bc: &BoundaryCondition) -> Result<Arc<SpinGraph>> {
    SpinGraph::new(domain, bc)
}

/// Largest log weight, then linear sums relative to it.
fn max_log_weight(en: &Enumerator, graphs: &[Arc<SpinGraph>], params: &ModelParams) -> Result<Vec<f64>> {
    let k = graphs.len();
    let shards = en.run(
        graphs,
        params,
        || vec![f64::NEG_INFINITY; k],
        |m: &mut Vec<f64>, _, lw| {
            for (a, &b) in m.iter_mut().zip(lw) {
                if b > *a {
                    *a = b;
                }
            }
        },
    )?;
    let mut out = vec![f64::NEG_INFINITY; k];
    for s in shards {
        for (a, b) in out.iter_mut().zip(s) {
            *a = a.max(b);
        }
    }
    Ok(out)
}

/// `ln Z` by enumeration.
pub fn partition_function_log(domain: &HexDomain, params: &ModelParams, bc: &BoundaryCondition) -> Result<f64> {
    partition_function_log_with(&Enumerator::default(), domain, params, bc)
}

pub fn partition_function_log_with(
    en: &Enumerator,
    domain: &HexDomain,
    params: &ModelParams,
    bc: &BoundaryCondition,
) -> Result<f64> {
    let g = graph_for(domain, bc)?;
    let shards = en.run(&[g], params, LogSum::default, |acc: &mut LogSum, _, lw| acc.add(lw[0]))?;
    let mut total = LogSum::default();
    for s in &shards {
        total.merge(s);
    }
    Ok(total.value())
}

/// Exact single and pairwise event probabilities under one measure.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EventTable {
    pub names: Vec<String>,
    pub log_z: f64,
    /// `P[A_i]`.
    pub single: Vec<f64>,
    /// `P[A_i ∩ A_j]`, symmetric, diagonal equal to `single`.
    pub joint: Vec<Vec<f64>>,
    /// Sum of all normalized weights; 1 up to rounding.
    pub total_probability: f64,
}

impl EventTable {
    /// `P[A_i ∩ A_j] - P[A_i] P[A_j]`.
    pub fn covariance(&self, i: usize, j: usize) -> f64 {
        self.joint[i][j] - self.single[i] * self.single[j]
    }
}

/// Enumerates once and tabulates every event and every pair of events.
pub fn event_table(
    domain: &HexDomain,
    params: &ModelParams,
    bc: &BoundaryCondition,
    events: &[EventPredicate],
) -> Result<EventTable> {
    event_table_with(&Enumerator::default(), domain, params, bc, events)
}

pub fn event_table_with(
    en: &Enumerator,
    domain: &HexDomain,
    params: &ModelParams,
    bc: &BoundaryCondition,
    events: &[EventPredicate],
) -> Result<EventTable> {
    let g = [graph_for(domain, bc)?];
    let reference = max_log_weight(en, &g, params)?[0];
    if reference == f64::NEG_INFINITY {
        return Err(Error::Precondition("every configuration has zero weight".into()));
    }
    let m = events.len();
    struct Acc {
        total: f64,
        single: Vec<f64>,
        joint: Vec<f64>,
        hits: Vec<usize>,
    }
    let shards = en.run(
        &g,
        params,
        || Acc {
            total: 0.0,
            single: vec![0.0; m],
            joint: vec![0.0; m * m],
            hits: Vec::with_capacity(m),
        },
        |acc: &mut Acc, spins, lw| {
            let w = (lw[0] - reference).exp();
            if w == 0.0 {
                return;
            }
            acc.total += w;
            acc.hits.clear();
            for (i, ev) in events.iter().enumerate() {
                if ev.eval(spins) {
                    acc.hits.push(i);
                    acc.single[i] += w;
                }
            }
            for (a, &i) in acc.hits.iter().enumerate() {
                for &j in &acc.hits[a + 1..] {
                    acc.joint[i * m + j] += w;
                }
            }
        },
    )?;
    let mut total = 0.0;
    let mut single = vec![0.0; m];
    let mut joint = vec![0.0; m * m];
    for s in &shards {
        total += s.total;
        for (a, b) in single.iter_mut().zip(&s.single) {
            *a += b;
        }
        for (a, b) in joint.iter_mut().zip(&s.joint) {
            *a += b;
        }
    }
    let mut table = vec![vec![0.0; m]; m];
    for i in 0..m {
        table[i][i] = single[i] / total;
        for j in i + 1..m {
            table[i][j] = joint[i * m + j] / total;
            table[j][i] = table[i][j];
        }
    }
    let total_probability = shards.iter().map(|s| s.total).sum::<f64>() / total;
    Ok(EventTable {
        names: events.iter().map(|e| e.name.clone()).collect(),
        log_z: reference + total.ln(),
        single: single.iter().map(|s| s / total).collect(),
        joint: table,
        total_probability,
    })
}

/// `P[A]` by enumeration.
pub fn event_probability(
    domain: &HexDomain,
    params: &ModelParams,
    bc: &BoundaryCondition,
    event: &EventPredicate,
) -> Result<f64> {
    Ok(event_table(domain, params, bc, std::slice::from_ref(event))?.single[0])
}

/// Outcome of a positive-association check.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FkgReport {
    pub margin: f64,
    pub p_a: f64,
    pub p_b: f64,
    pub p_ab: f64,
    /// False outside `n >= 1, n x^2 <= exp(-|h'|)`; the inequality is then
    /// not expected to hold.
    pub regime_supported: bool,
}

/// `P[A ∩ B] - P[A] P[B]`.
pub fn check_fkg(
    domain: &HexDomain,
    params: &ModelParams,
    bc: &BoundaryCondition,
    a: &EventPredicate,
    b: &EventPredicate,
) -> Result<FkgReport> {
    let t = event_table(domain, params, bc, &[a.clone(), b.clone()])?;
    Ok(FkgReport {
        margin: t.covariance(0, 1),
        p_a: t.single[0],
        p_b: t.single[1],
        p_ab: t.joint[0][1],
        regime_supported: params.is_fkg_regime(),
    })
}

fn require_ordered(domain: &HexDomain, tau: &BoundaryCondition, tau_prime: &BoundaryCondition) -> Result<()> {
    match tau.compare(tau_prime, domain)? {
        Some(std::cmp::Ordering::Less) | Some(std::cmp::Ordering::Equal) => Ok(()),
        _ => Err(Error::Precondition(format!(
            "boundary {} is not below {}",
            tau.label(),
            tau_prime.label()
        ))),
    }
}

/// `μ^τ'[A] - μ^τ[A]` for `τ <= τ'`.
pub fn check_cbc(
    domain: &HexDomain,
    params: &ModelParams,
    a: &EventPredicate,
    tau: &BoundaryCondition,
    tau_prime: &BoundaryCondition,
) -> Result<f64> {
    require_ordered(domain, tau, tau_prime)?;
    let lo = event_probability(domain, params, tau, a)?;
    let hi = event_probability(domain, params, tau_prime, a)?;
    Ok(hi - lo)
}

/// Quantitative comparison between two boundary conditions.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CbcFactorReport {
    /// `exp(max D - min D)` with `D(σ) = ln w_τ(σ) - ln w_τ'(σ)`; bounds
    /// `μ^τ[A] / μ^τ'[A]` for every event.
    pub factor: f64,
    /// Largest pointwise weight ratio `exp(max D)`.
    pub max_ratio: f64,
    /// `max_σ n^{k_τ'(σ) - k_τ(σ)} x e^h`, the single-flip shape of the bound.
    pub paper_form: f64,
    pub p_tau: f64,
    pub p_tau_prime: f64,
    /// `factor * μ^τ'[A] - μ^τ[A]`.
    pub margin: f64,
}

pub fn check_cbc_factor(
    domain: &HexDomain,
    params: &ModelParams,
    a: &EventPredicate,
    tau: &BoundaryCondition,
    tau_prime: &BoundaryCondition,
) -> Result<CbcFactorReport> {
    require_ordered(domain, tau, tau_prime)?;
    let en = Enumerator::default();
    let graphs = [graph_for(domain, tau)?, graph_for(domain, tau_prime)?];
    #[derive(Default)]
    struct Acc {
        max_d: f64,
        min_d: f64,
        max_dk: i64,
        lo: LogSum,
        lo_a: LogSum,
        hi: LogSum,
        hi_a: LogSum,
    }
    let fresh = || Acc {
        max_d: f64::NEG_INFINITY,
        min_d: f64::INFINITY,
        max_dk: i64::MIN,
        ..Default::default()
    };
    let shards = en.run_with_stats(&graphs, params, true, fresh, |acc: &mut Acc, spins, lw, st| {
        let (w0, w1) = (lw[0], lw[1]);
        if w0 > f64::NEG_INFINITY && w1 > f64::NEG_INFINITY {
            let d = w0 - w1;
            acc.max_d = acc.max_d.max(d);
            acc.min_d = acc.min_d.min(d);
            acc.max_dk = acc.max_dk.max(st[1].k - st[0].k);
        }
        acc.lo.add(w0);
        acc.hi.add(w1);
        if a.eval(spins) {
            acc.lo_a.add(w0);
            acc.hi_a.add(w1);
        }
    })?;
    let mut tot = fresh();
    for s in &shards {
        tot.max_d = tot.max_d.max(s.max_d);
        tot.min_d = tot.min_d.min(s.min_d);
        tot.max_dk = tot.max_dk.max(s.max_dk);
        tot.lo.merge(&s.lo);
        tot.lo_a.merge(&s.lo_a);
        tot.hi.merge(&s.hi);
        tot.hi_a.merge(&s.hi_a);
    }
    let p_tau = (tot.lo_a.value() - tot.lo.value()).exp();
    let p_tau_prime = (tot.hi_a.value() - tot.hi.value()).exp();
    let factor = (tot.max_d - tot.min_d).exp();
    Ok(CbcFactorReport {
        factor,
        max_ratio: tot.max_d.exp(),
        paper_form: (tot.max_dk as f64 * params.ln_n()).exp() * params.x * params.h.exp(),
        p_tau,
        p_tau_prime,
        margin: factor * p_tau_prime - p_tau,
    })
}

/// Result of a spatial Markov property check.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SmpReport {
    pub max_deviation: f64,
    /// Outside configurations with positive probability.
    pub conditions: usize,
}

/// Compares `μ_O[A | ξ on O \ I]` with `μ_I^{ξ}[A]` for every `ξ`, where the
/// inner measure takes `ξ` plus the outer boundary as an explicit exterior.
/// `a` is evaluated on the inner spins.
pub fn check_smp(
    inner: &HexDomain,
    outer: &HexDomain,
    params: &ModelParams,
    bc_outer: &BoundaryCondition,
    a: &EventPredicate,
) -> Result<SmpReport> {
    let inner_idx: Vec<usize> = inner
        .faces()
        .iter()
        .map(|&f| {
            outer
                .index_of(f)
                .ok_or_else(|| Error::Precondition(format!("inner face {f} is not in the outer domain")))
        })
        .collect::<Result<_>>()?;
    let rest: Vec<usize> = (0..outer.len()).filter(|i| !inner_idx.contains(i)).collect();
    if rest.len() > 30 {
        return Err(Error::DomainTooLarge {
            faces: outer.len(),
            cap: DEFAULT_CAP,
        });
    }
    let outer_graph = graph_for(outer, bc_outer)?;
    let en = Enumerator::default();
    let shards = en.run(
        &[Arc::clone(&outer_graph)],
        params,
        HashMap::<u64, (LogSum, LogSum)>::new,
        |map, spins, lw| {
            let key = rest
                .iter()
                .enumerate()
                .fold(0u64, |k, (b, &f)| k | (u64::from(spins[f] > 0) << b));
            let inner_spins: Vec<i8> = inner_idx.iter().map(|&f| spins[f]).collect();
            let entry = map.entry(key).or_default();
            entry.0.add(lw[0]);
            if a.eval(&inner_spins) {
                entry.1.add(lw[0]);
            }
        },
    )?;
    let mut merged: std::collections::BTreeMap<u64, (LogSum, LogSum)> = std::collections::BTreeMap::new();
    for s in shards {
        for (k, (all, hit)) in s {
            let e = merged.entry(k).or_default();
            e.0.merge(&all);
            e.1.merge(&hit);
        }
    }
    let outer_ring: HashMap<_, _> = outer
        .exterior_ring()
        .into_iter()
        .zip(outer_graph.ring_spins().iter().copied())
        .collect();
    let mut max_dev: f64 = 0.0;
    let mut conditions = 0;
    for (key, (all, hit)) in merged {
        if all.value() == f64::NEG_INFINITY {
            continue;
        }
        conditions += 1;
        let conditional = (hit.value() - all.value()).exp();
        let spins: Vec<ExteriorSpin> = inner
            .exterior_ring()
            .into_iter()
            .map(|f| {
                let spin = match outer.index_of(f) {
                    Some(i) => {
                        let b = rest.iter().position(|&r| r == i).expect("ring face outside inner");
                        if key >> b & 1 == 1 {
                            1
                        } else {
                            -1
                        }
                    }
                    None => outer_ring[&f],
                };
                ExteriorSpin { face: f, spin }
            })
            .collect();
        let local = event_probability(inner, params, &BoundaryCondition::Explicit { spins }, a)?;
        max_dev = max_dev.max((conditional - local).abs());
    }
    Ok(SmpReport {
        max_deviation: max_dev,
        conditions,
    })
}

/// Crossing duality on a box.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ComplementarityReport {
    /// `μ⁰[+ crossing left to right]`.
    pub free_horizontal: f64,
    /// `μ¹[+ crossing bottom to top]`.
    pub wired_vertical: f64,
    /// `μ⁰[- crossing bottom to top]`, the blocking event.
    pub free_vertical_minus: f64,
    /// `|μ⁰[H+] + μ¹[V+] - 1|`; zero when the measure is flip symmetric.
    pub deviation: f64,
    /// `|μ⁰[H+] + μ⁰[V-] - 1|`; zero for any parameters.
    pub same_measure_deviation: f64,
    /// Configurations where neither or both of `H+`, `V-` hold.
    pub dichotomy_violations: u64,
    pub flip_symmetric: bool,
}

pub fn check_complementarity(domain: &HexDomain, params: &ModelParams) -> Result<ComplementarityReport> {
    let h = horizontal_crossing(domain)?;
    let v = vertical_crossing(domain)?;
    let events = [
        EventPredicate::crossing("H+", domain, h.clone()),
        EventPredicate::crossing("V+", domain, v.clone()),
        EventPredicate::crossing("V-", domain, v.with_spin(-1)),
    ];
    let free = event_table(domain, params, &BoundaryCondition::Free, &events)?;
    let wired = event_table(domain, params, &BoundaryCondition::Wired, &events)?;
    let n = domain.len();
    if n > 30 {
        return Err(Error::DomainTooLarge { faces: n, cap: 30 });
    }
    let vm = v.with_spin(-1);
    let violations: u64 = (0u64..1 << n)
        .into_par_iter()
        .map(|bits| {
            let s: Vec<i8> = (0..n).map(|i| if bits >> i & 1 == 1 { 1 } else { -1 }).collect();
            u64::from(h.holds(domain, &s) == vm.holds(domain, &s))
        })
        .sum();
    Ok(ComplementarityReport {
        free_horizontal: free.single[0],
        wired_vertical: wired.single[1],
        free_vertical_minus: free.single[2],
        deviation: (free.single[0] + wired.single[1] - 1.0).abs(),
        same_measure_deviation: (free.single[0] + free.single[2] - 1.0).abs(),
        dichotomy_violations: violations,
        flip_symmetric: params.is_flip_symmetric(),
    })
}

/// Union bound over the arm events of a hexagon triple.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct UnionBoundReport {
    pub side: u32,
    pub shift: u32,
    pub cells: usize,
    /// `μ[V]`, vertical crossing of the centre hexagon.
    pub vertical: f64,
    /// `(name, cell, probability)` per arm event.
    pub events: Vec<(String, usize, f64)>,
    pub max_event: f64,
    /// `μ[V] / (3 I)`.
    pub bound: f64,
    /// `max_event - bound`.
    pub margin: f64,
    /// `μ[C0]` per cell.
    pub c0: Vec<f64>,
    /// Largest `c` with `μ[C0] >= c μ[V]^5 / λ^5` over the cells.
    pub fitted_c: f64,
    pub lambda: f64,
}

pub fn check_union_bound_9star(
    side: u32,
    shift: u32,
    cells: usize,
    params: &ModelParams,
    bc: &BoundaryCondition,
    lambda: f64,
) -> Result<UnionBoundReport> {
    let t = HexTriple::new(side, shift)?;
    let arms = t.six_arm_events(cells)?;
    let mut preds = vec![EventPredicate::crossing("V", &t.union, t.centre_vertical()?)];
    for ev in &arms {
        let ev2 = ev.clone();
        let d = t.union.clone();
        preds.push(EventPredicate::new(format!("{}[{}]", ev.name, ev.cell), move |s| ev2.holds(&d, s)));
    }
    for cell in 0..cells {
        preds.push(EventPredicate::crossing(format!("C0[{cell}]"), &t.union, t.c0_event(cells, cell)?));
    }
    let table = event_table(&t.union, params, bc, &preds)?;
    let vertical = table.single[0];
    let events: Vec<(String, usize, f64)> = arms
        .iter()
        .zip(&table.single[1..=arms.len()])
        .map(|(e, &p)| (e.name.clone(), e.cell, p))
        .collect();
    let max_event = events.iter().map(|e| e.2).fold(0.0, f64::max);
    let bound = vertical / (3.0 * cells as f64);
    let c0: Vec<f64> = table.single[1 + arms.len()..].to_vec();
    let fitted_c = if vertical > 0.0 {
        c0.iter().copied().fold(f64::INFINITY, f64::min) * lambda.powi(5) / vertical.powi(5)
    } else {
        f64::INFINITY
    };
    Ok(UnionBoundReport {
        side,
        shift,
        cells,
        vertical,
        events,
        max_event,
        bound,
        margin: max_event - bound,
        c0,
        fitted_c,
        lambda,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::FaceCoord;

    /// Statistics straight from coordinates, no shared code with the model.
    fn naive_log_weight(domain: &HexDomain, ring: &[(FaceCoord, i8)], merge_ring: bool, spins: &[i8], p: &ModelParams) -> f64 {
        let mut spin_at: HashMap<FaceCoord, i8> = ring.iter().copied().collect();
        for (i, &f) in domain.faces().iter().enumerate() {
            spin_at.insert(f, spins[i]);
        }
        let mut e = 0;
        for &f in domain.faces() {
            for g in f.neighbors() {
                if spin_at[&f] != spin_at[&g] && (!domain.contains(g) || g > f) {
                    e += 1;
                }
            }
        }
        // Cluster count by repeated flood fill.
        let nodes: Vec<FaceCoord> = spin_at.keys().copied().collect();
        let mut seen: HashMap<FaceCoord, bool> = nodes.iter().map(|&f| (f, false)).collect();
        let mut k = 0;
        let mut ring_counted = false;
        for &start in &nodes {
            if seen[&start] {
                continue;
            }
            let mut stack = vec![start];
            seen.insert(start, true);
            let mut touches_ring = false;
            while let Some(f) = stack.pop() {
                touches_ring |= !domain.contains(f);
                for g in f.neighbors() {
                    if spin_at.get(&g) == Some(&spin_at[&f]) && !seen[&g] {
                        seen.insert(g, true);
                        stack.push(g);
                    }
                }
            }
            if merge_ring && touches_ring {
                if !ring_counted {
                    k += 1;
                    ring_counted = true;
                }
            } else {
                k += 1;
            }
        }
        let r: i64 = spins.iter().map(|&s| s as i64).sum();
        let mut rp = 0i64;
        let mut tri = std::collections::BTreeSet::new();
        for &f in domain.faces() {
            let nb = f.neighbors();
            for i in 0..6 {
                let mut t = [f, nb[i], nb[(i + 1) % 6]];
                t.sort();
                tri.insert(t);
            }
        }
        for t in tri {
            let s = spin_at[&t[0]];
            if s == spin_at[&t[1]] && s == spin_at[&t[2]] {
                rp += s as i64;
            }
        }
        let et = if e == 0 { 0.0 } else { e as f64 * p.x.ln() };
        k as f64 * p.n.ln() + et + p.h * r as f64 + 0.5 * p.h_prime * rp as f64
    }

    fn naive_log_z(domain: &HexDomain, plus_ring: bool, p: &ModelParams) -> f64 {
        let s = if plus_ring { 1 } else { -1 };
        let ring: Vec<(FaceCoord, i8)> = domain.exterior_ring().into_iter().map(|f| (f, s)).collect();
        let mut acc = LogSum::default();
        for bits in 0u64..1 << domain.len() {
            let spins: Vec<i8> = (0..domain.len()).map(|i| if bits >> i & 1 == 1 { 1 } else { -1 }).collect();
            acc.add(naive_log_weight(domain, &ring, true, &spins, p));
        }
        acc.value()
    }

    #[test]
    fn one_face_partition_functions() {
        let d = HexDomain::hex_box(1, 1).unwrap();
        let p = ModelParams::new(1.0, 1.0, 0.0, 0.0).unwrap();
        for bc in [BoundaryCondition::Free, BoundaryCondition::Wired] {
            assert!((partition_function_log(&d, &p, &bc).unwrap() - 2f64.ln()).abs() < 1e-15);
        }
        let p = ModelParams::new(1.0, 1.0, 2f64.ln(), 0.0).unwrap();
        assert!((partition_function_log(&d, &p, &BoundaryCondition::Free).unwrap() - 2.5f64.ln()).abs() < 1e-15);
    }

    #[test]
    fn matches_naive_oracle() {
        let cases = [
            (HexDomain::regular_hexagon(1).unwrap(), ModelParams::new(1.0, 0.5, 0.1, 0.0).unwrap()),
            (HexDomain::regular_hexagon(1).unwrap(), ModelParams::new(1.5, 0.55, 0.0, -0.3).unwrap()),
            (HexDomain::hex_box(4, 3).unwrap(), ModelParams::new(2.0, 0.6, 0.2, 0.4).unwrap()),
            (HexDomain::hex_box(3, 2).unwrap(), ModelParams::new(0.7, 1.3, -0.4, 0.2).unwrap()),
        ];
        for (d, p) in cases {
            for (bc, plus) in [(BoundaryCondition::Free, false), (BoundaryCondition::Wired, true)] {
                let ours = partition_function_log(&d, &p, &bc).unwrap();
                let oracle = naive_log_z(&d, plus, &p);
                assert!(((ours - oracle) / oracle).abs() < 1e-12, "{ours} vs {oracle}");
            }
        }
    }

    #[test]
    fn sharding_does_not_change_results() {
        let d = HexDomain::regular_hexagon(1).unwrap();
        let p = ModelParams::new(1.5, 0.5, 0.1, 0.2).unwrap();
        let bc = BoundaryCondition::mixed_push_primal();
        let bc = if bc.resolve(&d).is_ok() { bc } else { BoundaryCondition::Wired };
        let a = partition_function_log_with(&Enumerator { cap: 22, shard_bits: 0 }, &d, &p, &bc).unwrap();
        let b = partition_function_log_with(&Enumerator { cap: 22, shard_bits: 5 }, &d, &p, &bc).unwrap();
        assert!((a - b).abs() < 1e-12);
    }

    #[test]
    fn cap_is_enforced() {
        let d = HexDomain::hex_box(5, 5).unwrap();
        let p = ModelParams::loop_only(1.0, 0.5).unwrap();
        assert!(matches!(
            partition_function_log(&d, &p, &BoundaryCondition::Free),
            Err(Error::DomainTooLarge { .. })
        ));
    }

    #[test]
    fn probabilities_normalize() {
        let d = HexDomain::hex_box(3, 2).unwrap();
        let p = ModelParams::loop_only(1.0, crate::model::nienhuis_xc(1.0).unwrap()).unwrap();
        let h = EventPredicate::crossing("H", &d, horizontal_crossing(&d).unwrap());
        let t = event_table(&d, &p, &BoundaryCondition::Free, &[EventPredicate::always(), h.clone(), h.negate()]).unwrap();
        assert!((t.single[0] - 1.0).abs() < 1e-12);
        assert!((t.single[1] + t.single[2] - 1.0).abs() < 1e-12);
        assert!((t.total_probability - 1.0).abs() < 1e-12);
        let one = HexDomain::hex_box(1, 1).unwrap();
        let q = ModelParams::loop_only(1.0, 1.0).unwrap();
        let c = event_probability(&one, &q, &BoundaryCondition::Free, &EventPredicate::face_plus(0)).unwrap();
        assert!((c - 0.5).abs() < 1e-15);
    }

    #[test]
    fn fkg_identities() {
        let d = HexDomain::regular_hexagon(1).unwrap();
        let p = ModelParams::loop_only(1.5, 0.5).unwrap();
        let a = EventPredicate::face_plus(3);
        let r = check_fkg(&d, &p, &BoundaryCondition::Free, &a, &a).unwrap();
        assert!((r.margin - r.p_a * (1.0 - r.p_a)).abs() < 1e-12);
        assert!(r.regime_supported);
    }

    #[test]
    fn cbc_trivial_and_ordered() {
        let d = HexDomain::hex_box(2, 1).unwrap();
        let p = ModelParams::loop_only(1.0, 0.6).unwrap();
        let a = EventPredicate::all_plus();
        let same = check_cbc(&d, &p, &a, &BoundaryCondition::Free, &BoundaryCondition::Free).unwrap();
        assert_eq!(same, 0.0);
        let m = check_cbc(&d, &p, &a, &BoundaryCondition::Free, &BoundaryCondition::Wired).unwrap();
        // Four configurations: --, +-, -+, ++ with disagreement counts
        // against the free ring 0, 6, 6, 10 and against the wired ring 10, 6, 6, 0.
        let x: f64 = 0.6;
        let free = x.powi(10) / (1.0 + 2.0 * x.powi(6) + x.powi(10));
        let wired = 1.0 / (1.0 + 2.0 * x.powi(6) + x.powi(10));
        assert!((m - (wired - free)).abs() < 1e-12);
        assert!(check_cbc(&d, &p, &a, &BoundaryCondition::Wired, &BoundaryCondition::Free).is_err());
    }

    #[test]
    fn cbc_factor_bounds() {
        let d = HexDomain::hex_box(2, 1).unwrap();
        let p = ModelParams::new(1.5, 0.5, 0.1, 0.0).unwrap();
        let a = EventPredicate::all_plus();
        let same = check_cbc_factor(&d, &p, &a, &BoundaryCondition::Free, &BoundaryCondition::Free).unwrap();
        assert!((same.factor - 1.0).abs() < 1e-12 && same.margin.abs() < 1e-12);
        let r = check_cbc_factor(&d, &p, &a, &BoundaryCondition::Free, &BoundaryCondition::Wired).unwrap();
        assert!(r.margin >= 0.0 && r.factor >= 1.0);
        // Brute-force maximum of the pointwise ratio.
        let lw = |bc: &BoundaryCondition, bits: u64| {
            let g = SpinGraph::new(&d, bc).unwrap();
            SpinConfig::from_bits(g, bits).unwrap().log_weight(&p)
        };
        let brute = (0..4)
            .map(|b| lw(&BoundaryCondition::Free, b) - lw(&BoundaryCondition::Wired, b))
            .fold(f64::NEG_INFINITY, f64::max);
        assert!((r.max_ratio.ln() - brute).abs() < 1e-12);
        assert!(r.paper_form.is_finite() && r.paper_form > 0.0);
    }

    #[test]
    fn smp_is_exact_at_unit_fugacity() {
        let outer = HexDomain::from_faces([FaceCoord::new(0, 0), FaceCoord::new(1, 0), FaceCoord::new(2, 0)]).unwrap();
        let inner = HexDomain::from_faces([FaceCoord::new(1, 0)]).unwrap();
        let p = ModelParams::new(1.0, 0.6, 0.2, 0.3).unwrap();
        let a = EventPredicate::face_plus(0);
        let r = check_smp(&inner, &outer, &p, &BoundaryCondition::Free, &a).unwrap();
        assert!(r.max_deviation <= 1e-12);
        assert_eq!(r.conditions, 4);
        let same = check_smp(&outer, &outer, &p, &BoundaryCondition::Wired, &EventPredicate::face_plus(1)).unwrap();
        assert!(same.max_deviation <= 1e-12);
    }

    #[test]
    fn complementarity_small_boxes() {
        let p = ModelParams::loop_only(1.0, 0.6).unwrap();
        for (w, h) in [(1, 1), (2, 2), (3, 2)] {
            let d = HexDomain::hex_box(w, h).unwrap();
            let r = check_complementarity(&d, &p).unwrap();
            assert_eq!(r.dichotomy_violations, 0);
            assert!(r.deviation < 1e-10 && r.same_measure_deviation < 1e-10);
        }
    }

    #[test]
    fn union_bound_side_one() {
        let p = ModelParams::loop_only(1.0, 0.5).unwrap();
        let r = check_union_bound_9star(1, 2, 1, &p, &BoundaryCondition::Free, 2.0).unwrap();
        assert!(r.margin >= 0.0);
        let zero = ModelParams::loop_only(1.0, 0.0).unwrap();
        let r = check_union_bound_9star(1, 2, 1, &zero, &BoundaryCondition::Free, 2.0).unwrap();
        assert_eq!(r.vertical, 0.0);
        assert!(r.margin >= 0.0);
    }

    #[test]
    fn declared_monotonicity_holds() {
        let d = HexDomain::hex_box(3, 3).unwrap();
        let h = EventPredicate::crossing("H", &d, horizontal_crossing(&d).unwrap());
        assert!(h.verify_monotone(9));
        assert!(h.negate().verify_monotone(9));
        let fake = EventPredicate::increasing("face0-", |s| s[0] < 0);
        assert!(!fake.verify_monotone(2));
    }
}

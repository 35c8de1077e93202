use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::fit::LinearFit;
use super::{horizontal_event, job_seed, measure};
use crate::crossing::{component_volumes, CrossingEvent};
use crate::error::{Error, Result};
use crate::exact::EventPredicate;
use crate::lattice::{FaceCoord, HexDomain};
use crate::model::boundary::BoundaryCondition;
use crate::model::graph::SpinGraph;
use crate::model::params::ModelParams;
use crate::sampler::{run_chains, Estimate, Schedule};

/// Finite-size regime.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    Subcritical,
    Supercritical,
    ContinuousCritical,
    DiscontinuousCritical,
    Undetermined,
}

/// Significance thresholds of the classifier.
#[derive(Copy, Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PhaseThresholds {
    /// Crossing estimates inside `[ε, 1 − ε]` count as bounded.
    pub epsilon: f64,
    /// One-sided p-value a decay slope must beat.
    pub p_value: f64,
    pub r_squared: f64,
}

impl Default for PhaseThresholds {
    fn default() -> Self {
        Self {
            epsilon: 0.02,
            p_value: 0.01,
            r_squared: 0.9,
        }
    }
}

impl PhaseThresholds {
    fn decays(&self, fit: &Option<LinearFit>) -> bool {
        fit.is_some_and(|f| f.slope < 0.0 && f.p_negative < self.p_value && f.r_squared > self.r_squared)
    }
}

/// Crossing estimates under one boundary condition across sizes.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BcFit {
    pub bc: String,
    pub estimates: Vec<Estimate>,
    /// `ln P` against size.
    pub decay: Option<LinearFit>,
    /// `ln(1 − P)` against size.
    pub complement_decay: Option<LinearFit>,
    pub decays: bool,
    pub complement_decays: bool,
    pub bounded: bool,
}

/// Log of a probability, floored at half a sample so that an estimate of
/// zero stays finite.
fn floored_ln(p: f64, n_samples: usize) -> f64 {
    let floor = if n_samples > 0 { 0.5 / n_samples as f64 } else { f64::MIN_POSITIVE };
    p.max(floor).ln()
}

fn log_fit(sizes: &[u32], estimates: &[Estimate], complement: bool) -> Option<LinearFit> {
    let xs: Vec<f64> = sizes.iter().map(|&s| s as f64).collect();
    let ys: Vec<f64> = estimates
        .iter()
        .map(|e| floored_ln(if complement { 1.0 - e.mean } else { e.mean }, e.n_samples))
        .collect();
    LinearFit::fit(&xs, &ys)
}

impl BcFit {
    fn new(bc: String, sizes: &[u32], estimates: Vec<Estimate>, t: &PhaseThresholds) -> Self {
        let decay = log_fit(sizes, &estimates, false);
        let complement_decay = log_fit(sizes, &estimates, true);
        let bounded = estimates.iter().all(|e| e.mean >= t.epsilon && e.mean <= 1.0 - t.epsilon);
        Self {
            bc,
            decays: t.decays(&decay),
            complement_decays: t.decays(&complement_decay),
            estimates,
            decay,
            complement_decay,
            bounded,
        }
    }
}

/// Evidence behind a verdict.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PhaseEvidence {
    pub free: BcFit,
    pub wired: BcFit,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PhaseVerdict {
    pub regime: Regime,
    pub params: ModelParams,
    pub sizes: Vec<u32>,
    pub thresholds: PhaseThresholds,
    pub evidence: PhaseEvidence,
    /// Some chain failed to converge.
    pub flagged: bool,
}

/// Applies the four clauses to horizontal crossing estimates on `L × L`
/// boxes. The first clause that passes wins:
///
/// * subcritical: the wired estimate decays in `L`;
/// * supercritical: one minus the free estimate decays;
/// * discontinuous critical: one minus the wired estimate decays and the
///   free estimate decays;
/// * continuous critical: both estimates stay within `[ε, 1 − ε]`.
pub fn classify_phase(
    params: &ModelParams,
    sizes: &[u32],
    schedule: &Schedule,
    thresholds: PhaseThresholds,
    cap: usize,
) -> Result<PhaseVerdict> {
    params.validate()?;
    if sizes.len() < 4 {
        return Err(Error::Parameter("phase classification needs at least four sizes".into()));
    }
    if sizes.windows(2).any(|w| w[0] >= w[1]) || sizes[0] == 0 {
        return Err(Error::Parameter("sizes must be positive and increasing".into()));
    }
    let bcs = [BoundaryCondition::Free, BoundaryCondition::Wired];
    let jobs: Vec<(usize, u32)> = (0..2).flat_map(|b| sizes.iter().map(move |&l| (b, l))).collect();
    let results: Vec<Estimate> = jobs
        .par_iter()
        .map(|&(b, l)| {
            let domain = HexDomain::hex_box(l, l)?;
            let event = horizontal_event(&domain)?;
            let s = schedule.with_seed(job_seed(schedule.seed, &format!("phase:{}:{l}", bcs[b].label())));
            measure(&domain, params, &bcs[b], std::slice::from_ref(&event), &s, cap).map(|mut r| r.0.remove(0))
        })
        .collect::<Result<_>>()?;
    let k = sizes.len();
    let free = BcFit::new("free".into(), sizes, results[..k].to_vec(), &thresholds);
    let wired = BcFit::new("wired".into(), sizes, results[k..].to_vec(), &thresholds);
    let regime = if wired.decays {
        Regime::Subcritical
    } else if free.complement_decays {
        Regime::Supercritical
    } else if wired.complement_decays && free.decays {
        Regime::DiscontinuousCritical
    } else if free.bounded && wired.bounded {
        Regime::ContinuousCritical
    } else {
        Regime::Undetermined
    };
    let flagged = results.iter().any(|e| e.non_converged);
    Ok(PhaseVerdict {
        regime,
        params: *params,
        sizes: sizes.to_vec(),
        thresholds,
        evidence: PhaseEvidence { free, wired },
        flagged,
    })
}

/// Rate `c` in `P ≈ e^{-c L}`; infinite when every probability is zero.
fn decay_rate(sizes: &[u32], estimates: &[Estimate]) -> (Option<LinearFit>, f64) {
    if estimates.iter().all(|e| e.mean <= 0.0) {
        return (None, f64::INFINITY);
    }
    let fit = log_fit(sizes, estimates, false);
    let c = fit.map_or(0.0, |f| -f.slope);
    (fit, c)
}

fn check_sizes(sizes: &[u32]) -> Result<()> {
    if sizes.len() < 2 || sizes[0] == 0 || sizes.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::Parameter("need at least two positive increasing sizes".into()));
    }
    Ok(())
}

/// Faces of a hexagon at distance exactly `d` from the origin.
fn ring_faces(domain: &HexDomain, d: i32) -> Vec<usize> {
    let o = FaceCoord::new(0, 0);
    (0..domain.len()).filter(|&i| domain.face(i).distance(o) == d).collect()
}

fn all_faces(domain: &HexDomain) -> Vec<usize> {
    (0..domain.len()).collect()
}

/// Centre-to-boundary connectivity under wired boundary conditions and the
/// free/wired gap of the centre spin.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecayProbe {
    pub sizes: Vec<u32>,
    pub connectivity: Vec<Estimate>,
    pub fit: Option<LinearFit>,
    pub c: f64,
    /// `x = 0`: a single configuration carries all the mass.
    pub frozen: bool,
    /// `P¹[centre +] − P⁰[centre +]` per size.
    pub magnetization_gap: Vec<f64>,
    pub gap_decreasing: bool,
}

/// Hexagons of the given sides, centred at the origin.
pub fn decay_probe_prop_a(params: &ModelParams, sides: &[u32], schedule: &Schedule, cap: usize) -> Result<DecayProbe> {
    params.validate()?;
    check_sizes(sides)?;
    let per_size: Vec<(Estimate, f64)> = sides
        .par_iter()
        .map(|&l| {
            let domain = HexDomain::regular_hexagon(l)?;
            let centre = domain
                .index_of(FaceCoord::new(0, 0))
                .ok_or_else(|| Error::Parameter("hexagon has no centre face".into()))?;
            let ev = CrossingEvent::new(vec![centre], ring_faces(&domain, l as i32), all_faces(&domain), 1)?;
            let conn = EventPredicate::crossing("centre to boundary", &domain, ev);
            let plus = EventPredicate::face_plus(centre);
            let sw = schedule.with_seed(job_seed(schedule.seed, &format!("prop_a:wired:{l}")));
            let sf = schedule.with_seed(job_seed(schedule.seed, &format!("prop_a:free:{l}")));
            let (wired, _) = measure(&domain, params, &BoundaryCondition::Wired, &[conn, plus.clone()], &sw, cap)?;
            let (free, _) = measure(&domain, params, &BoundaryCondition::Free, &[plus], &sf, cap)?;
            Ok((wired[0].clone(), wired[1].mean - free[0].mean))
        })
        .collect::<Result<_>>()?;
    let connectivity: Vec<Estimate> = per_size.iter().map(|r| r.0.clone()).collect();
    let magnetization_gap: Vec<f64> = per_size.iter().map(|r| r.1).collect();
    let (fit, c) = decay_rate(sides, &connectivity);
    let gap_decreasing = magnetization_gap.windows(2).all(|w| w[1].abs() <= w[0].abs());
    Ok(DecayProbe {
        sizes: sides.to_vec(),
        connectivity,
        fit,
        c,
        frozen: params.x == 0.0,
        magnetization_gap,
        gap_decreasing,
    })
}

/// Failure of the `+` cluster of the inner hexagon to reach the boundary of
/// the doubled one, under free boundary conditions.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DualProbe {
    pub sizes: Vec<u32>,
    pub failure: Vec<Estimate>,
    pub fit: Option<LinearFit>,
    pub c: f64,
    /// The failure probability does not decrease: not a supercritical point.
    pub precondition_violated: bool,
}

pub fn dual_probe_prop_b(params: &ModelParams, sides: &[u32], schedule: &Schedule, cap: usize) -> Result<DualProbe> {
    params.validate()?;
    check_sizes(sides)?;
    let failure: Vec<Estimate> = sides
        .par_iter()
        .map(|&l| {
            let domain = HexDomain::regular_hexagon(2 * l)?;
            let o = FaceCoord::new(0, 0);
            let inner: Vec<usize> = (0..domain.len()).filter(|&i| domain.face(i).distance(o) <= l as i32).collect();
            let ev = CrossingEvent::new(inner, ring_faces(&domain, 2 * l as i32), all_faces(&domain), 1)?;
            let fail = EventPredicate::crossing("inner to boundary", &domain, ev).negate();
            let s = schedule.with_seed(job_seed(schedule.seed, &format!("prop_b:{l}")));
            measure(&domain, params, &BoundaryCondition::Free, std::slice::from_ref(&fail), &s, cap).map(|mut r| r.0.remove(0))
        })
        .collect::<Result<_>>()?;
    let (fit, c) = decay_rate(sides, &failure);
    let precondition_violated = c.is_finite() && fit.is_some_and(|f| f.slope >= 0.0);
    Ok(DualProbe {
        sizes: sides.to_vec(),
        failure,
        fit,
        c,
        precondition_violated,
    })
}

/// Volumes of same-spin components inside an annulus.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AnnulusTail {
    pub side: u32,
    pub delta: u32,
    pub spin: i8,
    pub bc: String,
    /// `counts[v]`: components of volume `v` over all samples.
    pub counts: Vec<u64>,
    pub samples: usize,
    /// `tail[N − 1]`: fraction of components with volume at least `N`, for
    /// `N` up to the largest volume seen.
    pub tail: Vec<f64>,
    pub strictly_decreasing: bool,
    /// `ln tail` against `N`.
    pub fit: Option<LinearFit>,
}

impl AnnulusTail {
    /// Tail strictly decreasing with a negative fitted slope.
    pub fn has_decaying_tail(&self) -> bool {
        self.strictly_decreasing && self.fit.is_some_and(|f| f.slope < 0.0)
    }
}

/// Samples the hexagon of side `side + delta` and records the `spin`
/// components met by the annulus between sides `side` and `side + delta`.
pub fn annulus_tail(
    params: &ModelParams,
    side: u32,
    delta: u32,
    bc: &BoundaryCondition,
    spin: i8,
    schedule: &Schedule,
) -> Result<AnnulusTail> {
    params.validate()?;
    let annulus = HexDomain::annulus(side, delta)?;
    let outer = HexDomain::regular_hexagon(side + delta)?;
    let graph = SpinGraph::new(&outer, bc)?;
    let max_vol = annulus.len();
    let s = schedule.with_seed(job_seed(schedule.seed, &format!("annulus:{side}:{delta}:{spin}")));
    let traces = run_chains(&graph, params, &s, max_vol + 1, |c, out| {
        out.resize(max_vol + 1, 0.0);
        for v in component_volumes(c, &annulus, spin) {
            out[v] += 1.0;
        }
    })?;
    let mut counts = vec![0u64; max_vol + 1];
    let mut samples = 0;
    for chain in &traces.traces {
        samples += chain[0].len();
        for (v, series) in chain.iter().enumerate() {
            counts[v] += series.iter().sum::<f64>() as u64;
        }
    }
    let total: u64 = counts.iter().sum();
    let largest = counts.iter().rposition(|&c| c > 0).unwrap_or(0);
    let mut tail = Vec::with_capacity(largest);
    let mut above = total;
    for &c in &counts[1..=largest] {
        tail.push(above as f64 / total as f64);
        above -= c;
    }
    let strictly_decreasing = tail.len() >= 2 && tail.windows(2).all(|w| w[1] < w[0]);
    let xs: Vec<f64> = (1..=tail.len()).map(|n| n as f64).collect();
    let ys: Vec<f64> = tail.iter().map(|t| t.ln()).collect();
    Ok(AnnulusTail {
        side,
        delta,
        spin,
        bc: bc.label(),
        counts,
        samples,
        tail,
        strictly_decreasing,
        fit: LinearFit::fit(&xs, &ys),
    })
}

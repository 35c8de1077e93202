//! Strip densities, the inequalities relating them, mixed-boundary push
//! probes and the finite-size phase classifier.
//!
//! Every probability is computed exactly when the domain fits under the
//! enumeration cap and by MCMC otherwise. Each job derives its own seed from
//! the run seed and a job tag, so results do not depend on scheduling.

mod fit;
mod phase;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

pub use fit::LinearFit;
pub use phase::{
    annulus_tail, classify_phase, decay_probe_prop_a, dual_probe_prop_b, AnnulusTail, BcFit, DecayProbe, DualProbe,
    PhaseEvidence, PhaseThresholds, PhaseVerdict, Regime,
};

use crate::crossing::{horizontal_crossing, vertical_crossing};
use crate::error::{Error, Result};
use crate::exact::{event_probability, EventPredicate};
use crate::lattice::HexDomain;
use crate::model::boundary::BoundaryCondition;
use crate::model::params::ModelParams;
use crate::sampler::{estimate_events, Estimate, Schedule};

/// Number of trailing ρ values used for extrapolation.
pub const TAIL_WINDOW: usize = 3;

/// Seed of the job named `tag` within a run seeded with `base`.
pub fn job_seed(base: u64, tag: &str) -> u64 {
    let mut h = Sha256::new();
    h.update(base.to_le_bytes());
    h.update(tag.as_bytes());
    let d = h.finalize();
    u64::from_le_bytes(d[..8].try_into().expect("digest is 32 bytes"))
}

/// Probability with a zero standard error, as produced by enumeration.
pub fn exact_estimate(p: f64) -> Estimate {
    Estimate {
        mean: p,
        std_error: 0.0,
        n_samples: 0,
        autocorrelation_time: 0.0,
        seeds: Vec::new(),
        chain_means: Vec::new(),
        chain_errors: Vec::new(),
        non_converged: false,
    }
}

/// `μ[A]` for each event, exactly when `domain` has at most `cap` faces.
/// Returns the estimates and whether they are exact.
pub fn measure(
    domain: &HexDomain,
    params: &ModelParams,
    bc: &BoundaryCondition,
    events: &[EventPredicate],
    schedule: &Schedule,
    cap: usize,
) -> Result<(Vec<Estimate>, bool)> {
    if domain.len() <= cap {
        let ps = events
            .iter()
            .map(|e| event_probability(domain, params, bc, e).map(exact_estimate))
            .collect::<Result<Vec<_>>>()?;
        Ok((ps, true))
    } else {
        Ok((estimate_events(domain, params, bc, events, schedule)?, false))
    }
}

/// Left-right crossing by `+` faces.
pub fn horizontal_event(domain: &HexDomain) -> Result<EventPredicate> {
    Ok(EventPredicate::crossing("H", domain, horizontal_crossing(domain)?))
}

/// No bottom-top crossing by `+` faces.
pub fn vertical_blocking_event(domain: &HexDomain) -> Result<EventPredicate> {
    Ok(EventPredicate::crossing("V", domain, vertical_crossing(domain)?).negate())
}

/// Which density a curve measures.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BcMode {
    /// `p_n`: horizontal crossing under free boundary conditions.
    FreeHorizontal,
    /// `q_n`: no vertical crossing under wired boundary conditions.
    WiredVerticalComplement,
}

impl BcMode {
    pub fn boundary(&self) -> BoundaryCondition {
        match self {
            BcMode::FreeHorizontal => BoundaryCondition::Free,
            BcMode::WiredVerticalComplement => BoundaryCondition::Wired,
        }
    }

    pub fn event(&self, domain: &HexDomain) -> Result<EventPredicate> {
        match self {
            BcMode::FreeHorizontal => horizontal_event(domain),
            BcMode::WiredVerticalComplement => vertical_blocking_event(domain),
        }
    }
}

/// Box shape behind a strip density: `ρ n` faces wide and `λ · stretch`
/// rows high unless overridden.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct StripGeometry {
    pub n: u32,
    pub stretch: u32,
    pub lambda: u32,
    #[serde(default)]
    pub height_override: Option<u32>,
}

impl Default for StripGeometry {
    fn default() -> Self {
        Self {
            n: 1,
            stretch: 1,
            lambda: 2,
            height_override: None,
        }
    }
}

impl StripGeometry {
    pub fn height(&self) -> u32 {
        self.height_override.unwrap_or(self.lambda * self.stretch)
    }

    pub fn width(&self, rho: u32) -> u32 {
        rho * self.n
    }

    pub fn domain(&self, rho: u32) -> Result<HexDomain> {
        HexDomain::hex_box(self.width(rho), self.height())
    }

    fn check(&self) -> Result<()> {
        if self.n == 0 || self.stretch == 0 || self.height() == 0 {
            return Err(Error::Parameter("strip geometry needs positive n, stretch and height".into()));
        }
        if self.lambda < 2 {
            return Err(Error::Parameter("lambda must be an integer >= 2".into()));
        }
        Ok(())
    }
}

/// Per-ρ crossing probabilities and their ρ-th roots.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DensityCurve {
    pub mode: BcMode,
    pub geometry: StripGeometry,
    pub rho_values: Vec<u32>,
    pub raw_probs: Vec<Estimate>,
    pub densities: Vec<f64>,
    /// Intercept of `ln d` against `1/ρ` over the tail window, mapped back.
    pub extrapolated: f64,
    pub extrapolated_error: f64,
    /// Range of the densities in the tail window.
    pub tail_min: f64,
    pub tail_max: f64,
    pub exact: bool,
    pub flagged: bool,
}

impl DensityCurve {
    /// Builds a curve from given probabilities.
    pub fn from_probs(
        mode: BcMode,
        geometry: StripGeometry,
        rho_values: Vec<u32>,
        raw_probs: Vec<Estimate>,
        exact: bool,
    ) -> Result<Self> {
        check_rho(&rho_values)?;
        if raw_probs.len() != rho_values.len() {
            return Err(Error::Parameter("one probability per rho value".into()));
        }
        let densities: Vec<f64> = raw_probs
            .iter()
            .zip(&rho_values)
            .map(|(e, &r)| e.mean.clamp(0.0, 1.0).powf(1.0 / r as f64))
            .collect();
        let start = rho_values.len().saturating_sub(TAIL_WINDOW);
        let tail = &densities[start..];
        let tail_min = tail.iter().copied().fold(f64::INFINITY, f64::min);
        let tail_max = tail.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let (extrapolated, extrapolated_error) = if tail_min <= 0.0 {
            (0.0, 0.0)
        } else {
            let xs: Vec<f64> = rho_values[start..].iter().map(|&r| 1.0 / r as f64).collect();
            let w = fit::LinearFit::intercept_weights(&xs)
                .ok_or_else(|| Error::Parameter("rho values must be distinct".into()))?;
            let mut intercept = 0.0;
            let mut var = 0.0;
            for (i, wi) in w.iter().enumerate() {
                let j = start + i;
                let p = raw_probs[j].mean;
                intercept += wi * tail[i].ln();
                let sd = raw_probs[j].std_error / (rho_values[j] as f64 * p);
                var += wi * wi * sd * sd;
            }
            let e = intercept.exp().clamp(0.0, 1.0);
            (e, e * var.sqrt())
        };
        let flagged = raw_probs.iter().any(|e| e.non_converged);
        Ok(Self {
            mode,
            geometry,
            rho_values,
            raw_probs,
            densities,
            extrapolated,
            extrapolated_error,
            tail_min,
            tail_max,
            exact,
            flagged,
        })
    }
}

fn check_rho(rho: &[u32]) -> Result<()> {
    if rho.len() < 2 {
        return Err(Error::Parameter("rho schedule needs at least two values".into()));
    }
    if rho[0] == 0 || rho.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::Parameter("rho schedule must be positive and increasing".into()));
    }
    Ok(())
}

/// Strip density curve over `rho_values`.
pub fn strip_density(
    params: &ModelParams,
    geometry: StripGeometry,
    mode: BcMode,
    rho_values: &[u32],
    schedule: &Schedule,
    cap: usize,
) -> Result<DensityCurve> {
    params.validate()?;
    geometry.check()?;
    check_rho(rho_values)?;
    let bc = mode.boundary();
    let results: Vec<(Estimate, bool)> = rho_values
        .par_iter()
        .map(|&rho| {
            let domain = geometry.domain(rho)?;
            let event = mode.event(&domain)?;
            let s = schedule.with_seed(job_seed(schedule.seed, &format!("strip:{mode:?}:{rho}")));
            let (mut est, exact) = measure(&domain, params, &bc, std::slice::from_ref(&event), &s, cap)?;
            Ok((est.remove(0), exact))
        })
        .collect::<Result<_>>()?;
    let exact = results.iter().all(|r| r.1);
    let probs = results.into_iter().map(|r| r.0).collect();
    DensityCurve::from_probs(mode, geometry, rho_values.to_vec(), probs, exact)
}

/// Smallest `C >= 0` with `lhs >= λ^{-C} rhs^{exponent}`. Infinite when
/// `lhs = 0` and the right side is positive.
pub fn min_constant(lhs: f64, rhs: f64, exponent: f64, lambda: u32) -> f64 {
    let ln_rhs = if exponent == 0.0 { 0.0 } else { exponent * rhs.ln() };
    if ln_rhs == f64::NEG_INFINITY {
        return 0.0;
    }
    if lhs <= 0.0 {
        return f64::INFINITY;
    }
    ((ln_rhs - lhs.ln()) / (lambda as f64).ln()).max(0.0)
}

/// Smallest constants in `p ≥ λ^{-C} q^{S+S/λ}` and the symmetric form.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StripInequalityReport {
    pub lambda: u32,
    pub stretch: u32,
    pub exponent: f64,
    pub p: f64,
    pub q: f64,
    pub c_p_from_q: f64,
    pub c_q_from_p: f64,
    /// Set when either constant is infinite.
    pub flagged: bool,
}

pub fn check_strip_inequality(p: &DensityCurve, q: &DensityCurve, lambda: u32) -> Result<StripInequalityReport> {
    if lambda < 2 {
        return Err(Error::Parameter("lambda must be an integer >= 2".into()));
    }
    if p.geometry.n != q.geometry.n || p.geometry.stretch != q.geometry.stretch {
        return Err(Error::Precondition("curves must share n and stretch".into()));
    }
    let s = p.geometry.stretch as f64;
    let exponent = s + s / lambda as f64;
    let (pv, qv) = (p.extrapolated, q.extrapolated);
    let c_p_from_q = min_constant(pv, qv, exponent, lambda);
    let c_q_from_p = min_constant(qv, pv, exponent, lambda);
    Ok(StripInequalityReport {
        lambda,
        stretch: p.geometry.stretch,
        exponent,
        p: pv,
        q: qv,
        c_p_from_q,
        c_q_from_p,
        flagged: !c_p_from_q.is_finite() || !c_q_from_p.is_finite(),
    })
}

/// Constants for the renormalisation step between scales `n` and `3n`.
///
/// The primary reading is `d_{3n} ≤ λ^C d_n^{3 − 9/λ}`. The alternative
/// reading, `d ≥ λ^{-C} d^{S − nS/λ}` on a single scale, is reported for
/// both scales without being relied on.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RenormReport {
    pub lambda: u32,
    pub exponent: f64,
    pub d_n: f64,
    pub d_3n: f64,
    pub c_primary: f64,
    pub alt_exponent_n: f64,
    pub c_alt_n: f64,
    pub alt_exponent_3n: f64,
    pub c_alt_3n: f64,
    pub flagged: bool,
}

/// Smallest `C >= 0` with `upper ≤ λ^C base^{exponent}`.
fn min_upper_constant(upper: f64, base: f64, exponent: f64, lambda: u32) -> f64 {
    if upper <= 0.0 {
        return 0.0;
    }
    let ln_base = if exponent == 0.0 { 0.0 } else { exponent * base.ln() };
    if ln_base == f64::NEG_INFINITY {
        return f64::INFINITY;
    }
    ((upper.ln() - ln_base) / (lambda as f64).ln()).max(0.0)
}

pub fn check_renorm_inequality(curve_n: &DensityCurve, curve_3n: &DensityCurve, lambda: u32) -> Result<RenormReport> {
    if lambda < 2 {
        return Err(Error::Parameter("lambda must be an integer >= 2".into()));
    }
    if curve_n.mode != curve_3n.mode || curve_3n.geometry.n != 3 * curve_n.geometry.n {
        return Err(Error::Precondition("curves must measure the same density at scales n and 3n".into()));
    }
    let l = lambda as f64;
    let exponent = 3.0 - 9.0 / l;
    let (dn, d3n) = (curve_n.extrapolated, curve_3n.extrapolated);
    let c_primary = min_upper_constant(d3n, dn, exponent, lambda);
    let alt = |c: &DensityCurve| {
        let s = c.geometry.stretch as f64;
        let e = s - c.geometry.n as f64 * s / l;
        (e, min_constant(c.extrapolated, c.extrapolated, e, lambda))
    };
    let (alt_exponent_n, c_alt_n) = alt(curve_n);
    let (alt_exponent_3n, c_alt_3n) = alt(curve_3n);
    Ok(RenormReport {
        lambda,
        exponent,
        d_n: dn,
        d_3n: d3n,
        c_primary,
        alt_exponent_n,
        c_alt_n,
        alt_exponent_3n,
        c_alt_3n,
        flagged: !c_primary.is_finite(),
    })
}

/// Mixed-boundary probe.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PushKind {
    /// Wired left, top and right, free bottom; horizontal crossing on a box.
    Primal,
    /// The negated boundary; no vertical crossing on a box.
    Dual,
    /// [`PushKind::Primal`] boundary, no vertical crossing, on a strip.
    PrimalStrip,
    /// [`PushKind::Dual`] boundary, horizontal crossing, on a strip.
    DualStrip,
}

impl PushKind {
    pub fn boundary(&self) -> BoundaryCondition {
        match self {
            PushKind::Primal | PushKind::PrimalStrip => BoundaryCondition::mixed_push_primal(),
            PushKind::Dual | PushKind::DualStrip => BoundaryCondition::mixed_push_dual(),
        }
    }

    pub fn domain(&self, geometry: &StripGeometry, rho: u32) -> Result<HexDomain> {
        match self {
            PushKind::Primal | PushKind::Dual => geometry.domain(rho),
            PushKind::PrimalStrip | PushKind::DualStrip => HexDomain::strip(geometry.width(rho), geometry.height()),
        }
    }

    pub fn event(&self, domain: &HexDomain) -> Result<EventPredicate> {
        match self {
            PushKind::Primal | PushKind::DualStrip => horizontal_event(domain),
            PushKind::Dual | PushKind::PrimalStrip => vertical_blocking_event(domain),
        }
    }
}

/// Probabilities of a push probe along a ρ schedule.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PushReport {
    pub kind: PushKind,
    pub geometry: StripGeometry,
    pub rho_values: Vec<u32>,
    pub estimates: Vec<Estimate>,
    /// Largest `c` with `P_ρ ≥ c^ρ` on the whole schedule.
    pub c1: f64,
    /// Exponential of the fitted slope of `ln P` against `ρ`.
    pub fitted_rate: Option<f64>,
    pub degenerate: bool,
    pub exact: bool,
    pub flagged: bool,
}

pub fn push_probe(
    params: &ModelParams,
    geometry: StripGeometry,
    kind: PushKind,
    rho_values: &[u32],
    schedule: &Schedule,
    cap: usize,
) -> Result<PushReport> {
    params.validate()?;
    geometry.check()?;
    check_rho(rho_values)?;
    let bc = kind.boundary();
    let results: Vec<(Estimate, bool)> = rho_values
        .par_iter()
        .map(|&rho| {
            let domain = kind.domain(&geometry, rho)?;
            let event = kind.event(&domain)?;
            let s = schedule.with_seed(job_seed(schedule.seed, &format!("push:{kind:?}:{rho}")));
            let (mut est, exact) = measure(&domain, params, &bc, std::slice::from_ref(&event), &s, cap)?;
            Ok((est.remove(0), exact))
        })
        .collect::<Result<_>>()?;
    let exact = results.iter().all(|r| r.1);
    let estimates: Vec<Estimate> = results.into_iter().map(|r| r.0).collect();
    Ok(push_report(kind, geometry, rho_values.to_vec(), estimates, exact))
}

/// Summarises given probe probabilities.
pub fn push_report(
    kind: PushKind,
    geometry: StripGeometry,
    rho_values: Vec<u32>,
    estimates: Vec<Estimate>,
    exact: bool,
) -> PushReport {
    let degenerate = estimates.iter().any(|e| e.mean <= 0.0);
    let c1 = if degenerate {
        0.0
    } else {
        estimates
            .iter()
            .zip(&rho_values)
            .map(|(e, &r)| e.mean.min(1.0).powf(1.0 / r as f64))
            .fold(1.0, f64::min)
    };
    let fitted_rate = if degenerate {
        None
    } else {
        let xs: Vec<f64> = rho_values.iter().map(|&r| r as f64).collect();
        let ys: Vec<f64> = estimates.iter().map(|e| e.mean.min(1.0).ln()).collect();
        LinearFit::fit(&xs, &ys).map(|f| f.slope.exp().min(1.0))
    };
    let flagged = estimates.iter().any(|e| e.non_converged);
    PushReport {
        kind,
        geometry,
        rho_values,
        estimates,
        c1,
        fitted_rate,
        degenerate,
        exact,
        flagged,
    }
}

/// At least one of a primal/dual pair has a positive rate.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PushDisjunction {
    pub primal_c1: f64,
    pub dual_c1: f64,
    pub holds: bool,
    /// Both probes degenerate; no verdict.
    pub deferred: bool,
}

pub fn push_disjunction(primal: &PushReport, dual: &PushReport) -> PushDisjunction {
    PushDisjunction {
        primal_c1: primal.c1,
        dual_c1: dual.c1,
        holds: primal.c1 > 0.0 || dual.c1 > 0.0,
        deferred: primal.degenerate && dual.degenerate,
    }
}

/// Horizontal crossing under free, mixed and wired boundaries.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CbcScaleReport {
    pub free: Estimate,
    pub mixed: Estimate,
    pub wired: Estimate,
    /// Both orderings hold within three combined standard errors.
    pub holds: bool,
}

pub fn cbc_at_scale(domain: &HexDomain, params: &ModelParams, schedule: &Schedule, cap: usize) -> Result<CbcScaleReport> {
    let event = horizontal_event(domain)?;
    let bcs = [
        BoundaryCondition::Free,
        BoundaryCondition::mixed_push_primal(),
        BoundaryCondition::Wired,
    ];
    let mut est: Vec<Estimate> = bcs
        .par_iter()
        .map(|bc| {
            let s = schedule.with_seed(job_seed(schedule.seed, &format!("cbc:{}", bc.label())));
            measure(domain, params, bc, std::slice::from_ref(&event), &s, cap).map(|mut r| r.0.remove(0))
        })
        .collect::<Result<_>>()?;
    let wired = est.pop().expect("three estimates");
    let mixed = est.pop().expect("three estimates");
    let free = est.pop().expect("three estimates");
    let below = |a: &Estimate, b: &Estimate| a.mean <= b.mean + 3.0 * a.std_error.hypot(b.std_error) + 1e-12;
    let holds = below(&free, &mixed) && below(&mixed, &wired);
    Ok(CbcScaleReport { free, mixed, wired, holds })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::DEFAULT_CAP;

    fn geometry(n: u32) -> StripGeometry {
        StripGeometry {
            n,
            ..StripGeometry::default()
        }
    }

    #[test]
    fn job_seeds_are_stable_and_distinct() {
        assert_eq!(job_seed(7, "a"), job_seed(7, "a"));
        assert_ne!(job_seed(7, "a"), job_seed(7, "b"));
        assert_ne!(job_seed(7, "a"), job_seed(8, "a"));
    }

    #[test]
    fn constant_probability_extrapolates_to_one() {
        let rho = vec![2, 4, 8, 16];
        let probs = vec![exact_estimate(0.3); 4];
        let c = DensityCurve::from_probs(BcMode::FreeHorizontal, geometry(1), rho.clone(), probs, true).unwrap();
        for (d, r) in c.densities.iter().zip(&rho) {
            assert!((d - 0.3f64.powf(1.0 / *r as f64)).abs() < 1e-15);
        }
        assert!((c.extrapolated - 1.0).abs() < 1e-12);
    }

    #[test]
    fn geometric_probability_extrapolates_to_its_rate() {
        let rho = vec![2, 3, 5, 8];
        let probs = rho.iter().map(|&r| exact_estimate(0.7 * 0.6f64.powi(r as i32))).collect();
        let c = DensityCurve::from_probs(BcMode::FreeHorizontal, geometry(1), rho, probs, true).unwrap();
        assert!((c.extrapolated - 0.6).abs() < 1e-12);
        assert!(c.densities.iter().all(|d| (0.0..=1.0).contains(d)));
    }

    #[test]
    fn frozen_free_strip_has_zero_density() {
        let p = ModelParams::loop_only(1.0, 0.0).unwrap();
        let c = strip_density(&p, geometry(1), BcMode::FreeHorizontal, &[2, 3], &Schedule::default(), DEFAULT_CAP).unwrap();
        assert!(c.exact);
        assert!(c.raw_probs.iter().all(|e| e.mean == 0.0));
        assert_eq!(c.densities, vec![0.0, 0.0]);
        assert_eq!(c.extrapolated, 0.0);
    }

    #[test]
    fn bad_schedules_are_rejected() {
        let p = ModelParams::loop_only(1.0, 0.5).unwrap();
        let s = Schedule::default();
        assert!(strip_density(&p, geometry(1), BcMode::FreeHorizontal, &[2], &s, DEFAULT_CAP).is_err());
        assert!(strip_density(&p, geometry(1), BcMode::FreeHorizontal, &[3, 2], &s, DEFAULT_CAP).is_err());
        let g = StripGeometry {
            lambda: 1,
            ..geometry(1)
        };
        assert!(strip_density(&p, g, BcMode::FreeHorizontal, &[2, 3], &s, DEFAULT_CAP).is_err());
    }

    fn curve_with(mode: BcMode, n: u32, value: f64) -> DensityCurve {
        let rho = vec![2, 4];
        let probs = rho.iter().map(|&r| exact_estimate(value.powi(r as i32))).collect();
        DensityCurve::from_probs(mode, geometry(n), rho, probs, true).unwrap()
    }

    #[test]
    fn strip_inequality_arithmetic() {
        let one_p = curve_with(BcMode::FreeHorizontal, 1, 1.0);
        let one_q = curve_with(BcMode::WiredVerticalComplement, 1, 1.0);
        let r = check_strip_inequality(&one_p, &one_q, 2).unwrap();
        assert_eq!((r.c_p_from_q, r.c_q_from_p), (0.0, 0.0));
        let half_p = curve_with(BcMode::FreeHorizontal, 1, 0.5);
        let half_q = curve_with(BcMode::WiredVerticalComplement, 1, 0.5);
        let r = check_strip_inequality(&half_p, &half_q, 2).unwrap();
        assert!((r.p - 0.5).abs() < 1e-12);
        assert!((r.exponent - 1.5).abs() < 1e-15);
        assert_eq!(r.c_p_from_q, 0.0);
        let zero_p = curve_with(BcMode::FreeHorizontal, 1, 0.0);
        let r = check_strip_inequality(&zero_p, &half_q, 2).unwrap();
        assert!(r.c_p_from_q.is_infinite() && r.flagged);
        assert_eq!(r.c_q_from_p, 0.0);
        // q^{1.5} > p forces a positive constant.
        let small_p = curve_with(BcMode::FreeHorizontal, 1, 0.1);
        let r = check_strip_inequality(&small_p, &half_q, 2).unwrap();
        let want = (0.5f64.powf(1.5) / 0.1).log2();
        assert!((r.c_p_from_q - want).abs() < 1e-9);
    }

    #[test]
    fn renorm_inequality_arithmetic() {
        let r = check_renorm_inequality(
            &curve_with(BcMode::FreeHorizontal, 1, 1.0),
            &curve_with(BcMode::FreeHorizontal, 3, 1.0),
            2,
        )
        .unwrap();
        assert_eq!(r.c_primary, 0.0);
        let r = check_renorm_inequality(
            &curve_with(BcMode::FreeHorizontal, 1, 0.9),
            &curve_with(BcMode::FreeHorizontal, 3, 0.5),
            3,
        )
        .unwrap();
        assert_eq!(r.exponent, 0.0);
        assert_eq!(r.c_primary, 0.0);
        assert!(r.c_alt_n.is_finite() && r.c_alt_3n.is_finite());
        assert!(check_renorm_inequality(
            &curve_with(BcMode::FreeHorizontal, 1, 0.9),
            &curve_with(BcMode::FreeHorizontal, 2, 0.5),
            3
        )
        .is_err());
    }

    #[test]
    fn push_rates_from_known_probabilities() {
        let rho = vec![2, 4, 8];
        let est: Vec<Estimate> = rho.iter().map(|&r| exact_estimate(0.8f64.powi(r as i32))).collect();
        let r = push_report(PushKind::Primal, geometry(1), rho.clone(), est, true);
        assert!((r.c1 - 0.8).abs() < 1e-12);
        assert!((r.fitted_rate.unwrap() - 0.8).abs() < 1e-12);
        let zero = push_report(PushKind::Dual, geometry(1), rho, vec![exact_estimate(0.0); 3], true);
        assert!(zero.degenerate && zero.c1 == 0.0);
        let d = push_disjunction(&r, &zero);
        assert!(d.holds && !d.deferred);
        assert!(push_disjunction(&zero, &zero).deferred);
    }

    #[test]
    fn nearly_frozen_push_crossing_is_certain() {
        // All + pays only the walls along the bottom, the cheapest option.
        let p = ModelParams::loop_only(1.0, 0.01).unwrap();
        let r = push_probe(&p, geometry(1), PushKind::Primal, &[2, 3], &Schedule::default(), DEFAULT_CAP);
        let r = r.unwrap();
        assert!(r.exact);
        assert!(r.estimates.iter().all(|e| e.mean > 0.999), "{:?}", r.estimates);
        assert!(r.c1 > 0.999);
    }

    #[test]
    fn exact_cbc_ordering_on_a_small_box() {
        let d = HexDomain::hex_box(3, 3).unwrap();
        let p = ModelParams::loop_only(1.5, 0.5).unwrap();
        let r = cbc_at_scale(&d, &p, &Schedule::default(), DEFAULT_CAP).unwrap();
        assert!(r.holds);
        assert!(r.free.mean < r.mixed.mean && r.mixed.mean < r.wired.mean);
    }
}

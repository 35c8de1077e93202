//! One function per subcommand. Each returns an [`Outcome`] and leaves all
//! file I/O to the caller.

use anyhow::{bail, Context};
use hexcross::crossing::{horizontal_crossing, vertical_crossing};
use hexcross::density::{
    annulus_tail, check_renorm_inequality, check_strip_inequality, classify_phase, horizontal_event, measure,
    push_disjunction, push_probe, strip_density, vertical_blocking_event, BcMode, DensityCurve, PushKind, PushReport,
    StripGeometry,
};
use hexcross::exact::{
    check_cbc, check_cbc_factor, check_complementarity, check_fkg, check_smp, check_union_bound_9star,
    event_probability, event_table, EventPredicate,
};
use hexcross::sampler::{run_chains, Estimate};
use hexcross::{BoundaryCondition, DomainKind, HexDomain, SpinGraph};
use serde_json::{json, Value};

use crate::config::{PushSelection, RunConfig};
use crate::output::{Outcome, Row};

/// Tolerance for identities that hold exactly in enumeration.
const EXACT_TOL: f64 = 1e-10;
const MARGIN_TOL: f64 = 1e-12;

fn domain(cfg: &RunConfig) -> anyhow::Result<HexDomain> {
    HexDomain::parse_spec(&cfg.domain).with_context(|| format!("domain {:?}", cfg.domain))
}

fn boundary(cfg: &RunConfig) -> anyhow::Result<BoundaryCondition> {
    Ok(BoundaryCondition::parse_spec(&cfg.bc)?)
}

/// Event named on the command line.
pub fn parse_event(spec: &str, domain: &HexDomain) -> anyhow::Result<EventPredicate> {
    Ok(match spec {
        "horizontal" => horizontal_event(domain)?,
        "vertical" => EventPredicate::crossing("vertical", domain, vertical_crossing(domain)?),
        "vertical-minus" => EventPredicate::crossing("vertical-minus", domain, vertical_crossing(domain)?.with_spin(-1)),
        "blocking" => vertical_blocking_event(domain)?,
        "all-plus" => EventPredicate::all_plus(),
        _ => {
            let idx: usize = spec
                .strip_prefix("face:")
                .and_then(|i| i.parse().ok())
                .with_context(|| format!("unknown event {spec:?}"))?;
            if idx >= domain.len() {
                bail!("face {idx} outside a domain of {} faces", domain.len());
            }
            EventPredicate::face_plus(idx)
        }
    })
}

fn events(cfg: &RunConfig, domain: &HexDomain) -> anyhow::Result<Vec<EventPredicate>> {
    cfg.events.iter().map(|e| parse_event(e, domain)).collect()
}

fn estimate_flag(e: &Estimate, exact: bool) -> String {
    if exact {
        "exact".into()
    } else if e.non_converged {
        "non_converged".into()
    } else {
        String::new()
    }
}

fn estimate_row(cfg: &RunConfig, run_id: &str, observable: &str, e: &Estimate, exact: bool) -> Row {
    Row {
        estimate: e.mean,
        std_error: e.std_error,
        flag: estimate_flag(e, exact),
        ..Row::new(cfg, run_id, observable)
    }
}

pub fn enumerate(cfg: &RunConfig, run_id: &str) -> anyhow::Result<Outcome> {
    let d = domain(cfg)?;
    if d.len() > cfg.cap {
        return Err(hexcross::Error::DomainTooLarge { faces: d.len(), cap: cfg.cap }.into());
    }
    let params = cfg.params()?;
    let evs = events(cfg, &d)?;
    let table = event_table(&d, &params, &boundary(cfg)?, &evs)?;
    let rows = table
        .names
        .iter()
        .zip(&table.single)
        .map(|(name, &p)| Row {
            size: Some(d.len() as u64),
            estimate: p,
            flag: "exact".into(),
            ..Row::new(cfg, run_id, name.as_str())
        })
        .collect();
    Ok(Outcome {
        result: json!({
            "faces": d.len(),
            "configurations": 1u64 << d.len(),
            "log_z": table.log_z,
            "total_probability": table.total_probability,
            "events": table.names,
            "probabilities": table.single,
            "joint": table.joint,
        }),
        rows,
        flagged: false,
        extra: None,
    })
}

/// Canonical increasing events: two single faces, the crossings the domain
/// supports, and all plus.
fn canonical_events(d: &HexDomain) -> Vec<EventPredicate> {
    let mut out = vec![EventPredicate::face_plus(0)];
    if d.len() > 1 {
        out.push(EventPredicate::face_plus(d.len() / 2));
    }
    if let Ok(h) = horizontal_crossing(d) {
        out.push(EventPredicate::crossing("horizontal", d, h));
    }
    if let Ok(v) = vertical_crossing(d) {
        out.push(EventPredicate::crossing("vertical", d, v));
    }
    out.push(EventPredicate::all_plus());
    out
}

pub fn verify(cfg: &RunConfig, run_id: &str) -> anyhow::Result<Outcome> {
    let d = domain(cfg)?;
    let params = cfg.params()?;
    let bc = boundary(cfg)?;
    let (quantity, value, pass, asserted, details): (&str, f64, bool, bool, Value) = match cfg.check.as_str() {
        "normalization" => {
            let p = event_probability(&d, &params, &bc, &EventPredicate::always())?;
            let dev = (p - 1.0).abs();
            ("deviation", dev, dev <= MARGIN_TOL, true, json!({ "total_probability": p }))
        }
        "fkg" => {
            let evs = canonical_events(&d);
            let mut pairs = Vec::new();
            let mut margin = f64::INFINITY;
            for i in 0..evs.len() {
                for j in i + 1..evs.len() {
                    let r = check_fkg(&d, &params, &bc, &evs[i], &evs[j])?;
                    margin = margin.min(r.margin);
                    pairs.push(json!({ "a": evs[i].name(), "b": evs[j].name(), "report": r }));
                }
            }
            let asserted = params.is_fkg_regime();
            ("margin", margin, margin >= -MARGIN_TOL, asserted, json!({ "regime_supported": asserted, "pairs": pairs }))
        }
        "cbc" => {
            let mut margin = f64::INFINITY;
            let mut per_event = Vec::new();
            for ev in canonical_events(&d) {
                let below = check_cbc(&d, &params, &ev, &BoundaryCondition::Free, &bc)?;
                let above = check_cbc(&d, &params, &ev, &bc, &BoundaryCondition::Wired)?;
                margin = margin.min(below).min(above);
                per_event.push(json!({ "event": ev.name(), "free_to_bc": below, "bc_to_wired": above }));
            }
            let asserted = params.is_fkg_regime();
            ("margin", margin, margin >= -MARGIN_TOL, asserted, json!({ "events": per_event }))
        }
        "cbc-factor" => {
            let ev = events(cfg, &d)?.remove(0);
            let r = check_cbc_factor(&d, &params, &ev, &BoundaryCondition::Free, &BoundaryCondition::Wired)?;
            ("margin", r.margin, r.margin >= -MARGIN_TOL, true, json!({ "event": ev.name(), "report": r }))
        }
        "smp" => {
            let inner = HexDomain::parse_spec(&cfg.inner).with_context(|| format!("inner domain {:?}", cfg.inner))?;
            let ev = parse_event(&cfg.events[0], &inner)?;
            let r = check_smp(&inner, &d, &params, &bc, &ev)?;
            // The cluster weight is nonlocal unless n = 1.
            let asserted = params.n == 1.0;
            ("deviation", r.max_deviation, r.max_deviation <= EXACT_TOL, asserted, json!({ "report": r }))
        }
        "complementarity" => {
            let r = check_complementarity(&d, &params)?;
            let pass = r.same_measure_deviation <= EXACT_TOL
                && r.dichotomy_violations == 0
                && (!r.flip_symmetric || r.deviation <= EXACT_TOL);
            let worst = r.same_measure_deviation.max(if r.flip_symmetric { r.deviation } else { 0.0 });
            ("deviation", worst, pass, true, json!({ "report": r }))
        }
        "union-bound" => {
            let r = check_union_bound_9star(cfg.side, cfg.shift, cfg.cells, &params, &bc, cfg.lambda as f64)?;
            ("margin", r.margin, r.margin >= -MARGIN_TOL, true, json!({ "report": r }))
        }
        other => bail!("unknown check {other:?}"),
    };
    let flagged = asserted && !pass;
    let row = Row {
        size: Some(d.len() as u64),
        estimate: value,
        flag: if flagged { "failed".into() } else { String::new() },
        ..Row::new(cfg, run_id, format!("{}:{quantity}", cfg.check))
    };
    Ok(Outcome {
        result: json!({
            "check": cfg.check,
            "params": params,
            "domain": cfg.domain,
            "bc": bc.label(),
            quantity: value,
            "pass": pass,
            "asserted": asserted,
            "details": details,
        }),
        rows: vec![row],
        flagged,
        extra: None,
    })
}

pub fn sample(cfg: &RunConfig, run_id: &str) -> anyhow::Result<Outcome> {
    let d = domain(cfg)?;
    let params = cfg.params()?;
    let evs = events(cfg, &d)?;
    let graph = SpinGraph::new(&d, &boundary(cfg)?)?;
    let schedule = cfg.schedule();
    let m = evs.len();
    let traces = run_chains(&graph, &params, &schedule, m + 4, |c, out| {
        let spins = c.domain_spins();
        out.extend(evs.iter().map(|e| if e.eval(spins) { 1.0 } else { 0.0 }));
        let s = c.stats();
        out.extend([s.e as f64, s.k as f64, s.r as f64, s.r_prime as f64]);
    })?;
    let names: Vec<String> = evs
        .iter()
        .map(|e| e.name().to_string())
        .chain(["e", "k", "r", "r_prime"].map(String::from))
        .collect();
    let estimates: Vec<Estimate> = (0..names.len()).map(|i| traces.estimate(i, schedule.seed)).collect();
    let flagged = traces.diagnostics.checkpoint_mismatches > 0 || estimates[..m].iter().any(|e| e.non_converged);
    let rows = names
        .iter()
        .zip(&estimates)
        .map(|(name, e)| Row {
            size: Some(d.len() as u64),
            ..estimate_row(cfg, run_id, name, e, false)
        })
        .collect();
    let extra = if cfg.per_sample {
        let mut w = csv::Writer::from_writer(Vec::new());
        let mut header = vec!["chain".to_string(), "sample".to_string()];
        header.extend(names.iter().cloned());
        w.write_record(&header)?;
        for (c, chain) in traces.traces.iter().enumerate() {
            for t in 0..chain.first().map_or(0, Vec::len) {
                let mut rec = vec![c.to_string(), t.to_string()];
                rec.extend(chain.iter().map(|series| series[t].to_string()));
                w.write_record(&rec)?;
            }
        }
        Some(("samples.csv".to_string(), w.into_inner().map_err(|e| anyhow::anyhow!("{e}"))?))
    } else {
        None
    };
    Ok(Outcome {
        result: json!({
            "observables": names,
            "estimates": estimates,
            "diagnostics": traces.diagnostics,
        }),
        rows,
        flagged,
        extra,
    })
}

pub fn crossing_prob(cfg: &RunConfig, run_id: &str) -> anyhow::Result<Outcome> {
    let d = domain(cfg)?;
    let params = cfg.params()?;
    let evs = events(cfg, &d)?;
    let (estimates, exact) = measure(&d, &params, &boundary(cfg)?, &evs, &cfg.schedule(), cfg.cap)?;
    let rows = evs
        .iter()
        .zip(&estimates)
        .map(|(ev, e)| Row {
            size: Some(d.len() as u64),
            ..estimate_row(cfg, run_id, ev.name(), e, exact)
        })
        .collect();
    let names: Vec<&str> = evs.iter().map(|e| e.name()).collect();
    Ok(Outcome {
        result: json!({ "events": names, "exact": exact, "estimates": estimates }),
        rows,
        flagged: estimates.iter().any(|e| e.non_converged),
        extra: None,
    })
}

fn mode_name(mode: BcMode) -> &'static str {
    match mode {
        BcMode::FreeHorizontal => "p",
        BcMode::WiredVerticalComplement => "q",
    }
}

fn curve_rows(cfg: &RunConfig, run_id: &str, curve: &DensityCurve) -> Vec<Row> {
    let name = mode_name(curve.mode);
    let bc = curve.mode.boundary().label();
    let mut rows: Vec<Row> = curve
        .rho_values
        .iter()
        .zip(&curve.raw_probs)
        .map(|(&rho, e)| Row {
            bc: bc.clone(),
            domain: format!("box:{}x{}", curve.geometry.width(rho), curve.geometry.height()),
            size: Some(curve.geometry.n as u64),
            rho: Some(rho),
            ..estimate_row(cfg, run_id, name, e, curve.exact)
        })
        .collect();
    rows.push(Row {
        bc,
        size: Some(curve.geometry.n as u64),
        estimate: curve.extrapolated,
        std_error: curve.extrapolated_error,
        flag: if curve.flagged { "non_converged".into() } else { String::new() },
        domain: String::new(),
        ..Row::new(cfg, run_id, format!("{name}:extrapolated"))
    });
    rows
}

pub fn strip_density_cmd(cfg: &RunConfig, run_id: &str) -> anyhow::Result<Outcome> {
    let params = cfg.params()?;
    let schedule = cfg.schedule();
    let geometry = cfg.geometry();
    let curves: Vec<DensityCurve> = cfg
        .bc_modes()
        .into_iter()
        .map(|m| strip_density(&params, geometry, m, &cfg.rho, &schedule, cfg.cap))
        .collect::<hexcross::Result<_>>()?;
    let inequality = match curves.as_slice() {
        [p, q] => Some(check_strip_inequality(p, q, cfg.lambda)?),
        _ => None,
    };
    let mut renorm = Vec::new();
    let mut coarse_curves = Vec::new();
    if cfg.renorm {
        let coarse = StripGeometry {
            n: 3 * geometry.n,
            ..geometry
        };
        for fine in &curves {
            let c = strip_density(&params, coarse, fine.mode, &cfg.rho, &schedule, cfg.cap)?;
            renorm.push(check_renorm_inequality(fine, &c, cfg.lambda)?);
            coarse_curves.push(c);
        }
    }
    let flagged = curves.iter().chain(&coarse_curves).any(|c| c.flagged)
        || inequality.as_ref().is_some_and(|r| r.flagged);
    let rows = curves.iter().chain(&coarse_curves).flat_map(|c| curve_rows(cfg, run_id, c)).collect();
    Ok(Outcome {
        result: json!({
            "curves": curves,
            "strip_inequality": inequality,
            "renormalisation": renorm,
            "coarse_curves": coarse_curves,
        }),
        rows,
        flagged,
        extra: None,
    })
}

fn push_kind_name(kind: PushKind) -> &'static str {
    match kind {
        PushKind::Primal => "primal",
        PushKind::Dual => "dual",
        PushKind::PrimalStrip => "primal_strip",
        PushKind::DualStrip => "dual_strip",
    }
}

pub fn push_probe_cmd(cfg: &RunConfig, run_id: &str) -> anyhow::Result<Outcome> {
    let params = cfg.params()?;
    let schedule = cfg.schedule();
    let geometry = cfg.geometry();
    let kinds = match cfg.push {
        PushSelection::Primal => vec![PushKind::Primal],
        PushSelection::Dual => vec![PushKind::Dual],
        PushSelection::PrimalStrip => vec![PushKind::PrimalStrip],
        PushSelection::DualStrip => vec![PushKind::DualStrip],
        PushSelection::Pair => vec![PushKind::Primal, PushKind::Dual],
    };
    let reports: Vec<PushReport> = kinds
        .iter()
        .map(|&k| push_probe(&params, geometry, k, &cfg.rho, &schedule, cfg.cap))
        .collect::<hexcross::Result<_>>()?;
    let disjunction = match reports.as_slice() {
        [p, d] => Some(push_disjunction(p, d)),
        _ => None,
    };
    let mut rows = Vec::new();
    for r in &reports {
        let name = push_kind_name(r.kind);
        for (&rho, e) in r.rho_values.iter().zip(&r.estimates) {
            let d = r.kind.domain(&r.geometry, rho)?;
            rows.push(Row {
                bc: r.kind.boundary().label(),
                domain: d.kind().to_string(),
                size: Some(r.geometry.n as u64),
                rho: Some(rho),
                ..estimate_row(cfg, run_id, name, e, r.exact)
            });
        }
        rows.push(Row {
            bc: r.kind.boundary().label(),
            size: Some(r.geometry.n as u64),
            estimate: r.c1,
            flag: if r.degenerate { "degenerate".into() } else { String::new() },
            domain: String::new(),
            ..Row::new(cfg, run_id, format!("{name}:c1"))
        });
    }
    Ok(Outcome {
        result: json!({ "reports": reports, "disjunction": disjunction }),
        rows,
        flagged: reports.iter().any(|r| r.flagged),
        extra: None,
    })
}

pub fn phase_scan(cfg: &RunConfig, run_id: &str) -> anyhow::Result<Outcome> {
    let params = cfg.params()?;
    let verdict = classify_phase(&params, &cfg.sizes, &cfg.schedule(), cfg.thresholds(), cfg.cap)?;
    let mut rows = Vec::new();
    for fit in [&verdict.evidence.free, &verdict.evidence.wired] {
        for (&l, e) in verdict.sizes.iter().zip(&fit.estimates) {
            rows.push(Row {
                bc: fit.bc.clone(),
                domain: DomainKind::HexBox { width: l, height: l }.to_string(),
                size: Some(l as u64),
                ..estimate_row(cfg, run_id, "horizontal", e, e.n_samples == 0)
            });
        }
    }
    Ok(Outcome {
        result: serde_json::to_value(&verdict)?,
        rows,
        flagged: verdict.flagged,
        extra: None,
    })
}

pub fn annulus_volumes(cfg: &RunConfig, run_id: &str) -> anyhow::Result<Outcome> {
    let params = cfg.params()?;
    let tail = annulus_tail(&params, cfg.side, cfg.delta, &boundary(cfg)?, cfg.spin, &cfg.schedule())?;
    let domain = DomainKind::Annulus {
        side: cfg.side,
        delta: cfg.delta,
    }
    .to_string();
    let rows = tail
        .tail
        .iter()
        .enumerate()
        .map(|(i, &t)| Row {
            domain: domain.clone(),
            size: Some(i as u64 + 1),
            estimate: t,
            ..Row::new(cfg, run_id, "tail")
        })
        .collect();
    Ok(Outcome {
        result: json!({ "tail": tail, "has_decaying_tail": tail.has_decaying_tail() }),
        rows,
        flagged: false,
        extra: None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn events_parse_against_the_domain() {
        let d = HexDomain::hex_box(3, 2).unwrap();
        for spec in ["horizontal", "vertical", "vertical-minus", "blocking", "all-plus", "face:5"] {
            parse_event(spec, &d).unwrap();
        }
        assert!(parse_event("face:6", &d).is_err());
        assert!(parse_event("diagonal", &d).is_err());
        let a = HexDomain::annulus(1, 1).unwrap();
        assert!(parse_event("horizontal", &a).is_err());
    }

    #[test]
    fn blocking_is_the_complement_of_vertical() {
        let d = HexDomain::hex_box(2, 2).unwrap();
        let v = parse_event("vertical", &d).unwrap();
        let b = parse_event("blocking", &d).unwrap();
        for bits in 0u32..16 {
            let s: Vec<i8> = (0..4).map(|i| if bits >> i & 1 == 1 { 1 } else { -1 }).collect();
            assert_ne!(v.eval(&s), b.eval(&s));
        }
    }

    #[test]
    fn canonical_events_skip_missing_crossings() {
        let names = |d: &HexDomain| canonical_events(d).iter().map(|e| e.name().to_string()).collect::<Vec<_>>();
        assert_eq!(names(&HexDomain::hex_box(2, 2).unwrap()).len(), 5);
        assert_eq!(names(&HexDomain::annulus(1, 1).unwrap()).len(), 3);
    }
}

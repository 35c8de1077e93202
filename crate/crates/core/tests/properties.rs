//! Randomised invariants of the measure, the crossing machinery and the
//! density summaries.

mod common;

use hexcross::crossing::{horizontal_crossing, vertical_crossing};
use hexcross::density::{exact_estimate, BcMode, DensityCurve, StripGeometry};
use hexcross::exact::{check_cbc, check_fkg, event_probability, EventPredicate};
use hexcross::model::spins_to_loops;
use hexcross::{BoundaryCondition, HexDomain, ModelParams, SpinConfig, SpinGraph};
use proptest::prelude::*;

fn spins_from(bits: &[bool]) -> Vec<i8> {
    bits.iter().map(|&b| if b { 1 } else { -1 }).collect()
}

/// Parameters with `n >= 1` and `n x^2 <= exp(-|h'|)`.
fn fkg_params() -> impl Strategy<Value = ModelParams> {
    (1.0f64..2.0, 0.05f64..1.0, -1.0f64..1.0, -0.8f64..0.0).prop_map(|(n, frac, h, hp)| {
        let x_max = ((-hp.abs()).exp() / n).sqrt();
        ModelParams::new(n, frac * x_max, h, hp).unwrap()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn flipping_spins_and_boundary_keeps_zero_field_weight(
        bits in prop::collection::vec(any::<bool>(), 19),
        n in 0.2f64..3.0,
        x in 0.05f64..2.0,
    ) {
        let d = HexDomain::regular_hexagon(2).unwrap();
        let p = ModelParams::loop_only(n, x).unwrap();
        let s = spins_from(&bits);
        let flipped: Vec<i8> = s.iter().map(|v| -v).collect();
        let mut a = SpinConfig::new(SpinGraph::new(&d, &BoundaryCondition::Free).unwrap(), &s).unwrap();
        let mut b = SpinConfig::new(SpinGraph::new(&d, &BoundaryCondition::Wired).unwrap(), &flipped).unwrap();
        prop_assert!((a.log_weight(&p) - b.log_weight(&p)).abs() < 1e-9);
    }

    #[test]
    fn incremental_counts_survive_flip_sequences(
        bits in prop::collection::vec(any::<bool>(), 19),
        flips in prop::collection::vec(0usize..19, 1..200),
        wired in any::<bool>(),
    ) {
        let d = HexDomain::regular_hexagon(2).unwrap();
        let bc = if wired { BoundaryCondition::Wired } else { BoundaryCondition::Free };
        let mut c = SpinConfig::new(SpinGraph::new(&d, &bc).unwrap(), &spins_from(&bits)).unwrap();
        for f in flips {
            c.flip(f);
        }
        let cached = c.cached_stats();
        prop_assert_eq!(cached, c.recount());
    }

    #[test]
    fn loop_edges_are_the_domain_walls(bits in prop::collection::vec(any::<bool>(), 37), wired in any::<bool>()) {
        let d = HexDomain::regular_hexagon(3).unwrap();
        let bc = if wired { BoundaryCondition::Wired } else { BoundaryCondition::Free };
        let mut c = SpinConfig::new(SpinGraph::new(&d, &bc).unwrap(), &spins_from(&bits)).unwrap();
        let e = c.stats().e;
        prop_assert_eq!(spins_to_loops(&c).edge_count() as i64, e);
    }

    #[test]
    fn exactly_one_of_crossing_and_blocking_path(
        w in 1u32..9,
        h in 1u32..9,
        seed in prop::collection::vec(any::<bool>(), 64),
    ) {
        let d = HexDomain::hex_box(w, h).unwrap();
        let s = spins_from(&seed[..d.len()]);
        let across = horizontal_crossing(&d).unwrap().holds(&d, &s);
        let blocked = vertical_crossing(&d).unwrap().with_spin(-1).holds(&d, &s);
        prop_assert_ne!(across, blocked);
    }

    #[test]
    fn event_and_complement_sum_to_one(
        n in 0.3f64..2.5,
        x in 0.05f64..2.0,
        h in -1.0f64..1.0,
        face in 0usize..9,
    ) {
        let d = HexDomain::hex_box(3, 3).unwrap();
        let p = ModelParams::new(n, x, h, 0.0).unwrap();
        let a = EventPredicate::crossing("h", &d, horizontal_crossing(&d).unwrap()).and(&EventPredicate::face_plus(face));
        let pa = event_probability(&d, &p, &BoundaryCondition::Free, &a).unwrap();
        let pn = event_probability(&d, &p, &BoundaryCondition::Free, &a.negate()).unwrap();
        prop_assert!((pa + pn - 1.0).abs() < 1e-12);
    }

    #[test]
    fn increasing_events_correlate_in_the_regime(p in fkg_params(), i in 0usize..9, j in 0usize..9, wired in any::<bool>()) {
        let d = HexDomain::hex_box(3, 3).unwrap();
        let bc = if wired { BoundaryCondition::Wired } else { BoundaryCondition::Free };
        let h = EventPredicate::crossing("h", &d, horizontal_crossing(&d).unwrap());
        let r = check_fkg(&d, &p, &bc, &EventPredicate::face_plus(i), &EventPredicate::face_plus(j)).unwrap();
        prop_assert!(r.margin >= -1e-12, "faces {} {}: {}", i, j, r.margin);
        let r = check_fkg(&d, &p, &bc, &EventPredicate::face_plus(i), &h).unwrap();
        prop_assert!(r.margin >= -1e-12, "face {} with crossing: {}", i, r.margin);
    }

    #[test]
    fn wired_dominates_free_in_the_regime(p in fkg_params(), face in 0usize..7) {
        let d = HexDomain::regular_hexagon(1).unwrap();
        for ev in [EventPredicate::face_plus(face), EventPredicate::crossing("h", &d, horizontal_crossing(&d).unwrap())] {
            let m = check_cbc(&d, &p, &ev, &BoundaryCondition::Free, &BoundaryCondition::Wired).unwrap();
            prop_assert!(m >= -1e-12);
        }
    }

    #[test]
    fn densities_stay_in_the_unit_interval(probs in prop::collection::vec(0.0f64..=1.0, 4)) {
        let rho = vec![2, 3, 5, 8];
        let est = probs.iter().map(|&p| exact_estimate(p)).collect();
        let c = DensityCurve::from_probs(BcMode::FreeHorizontal, StripGeometry::default(), rho, est, true).unwrap();
        prop_assert!(c.densities.iter().all(|d| (0.0..=1.0).contains(d)));
        prop_assert!((0.0..=1.0).contains(&c.extrapolated));
        prop_assert!(c.tail_min <= c.tail_max);
    }
}

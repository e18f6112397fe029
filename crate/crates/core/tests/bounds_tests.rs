mod common;

use rand::Rng;
use wavebound_core::bernoulli::conjugate_streams;
use wavebound_core::bounds::{
    check_all, check_theorem1, check_theorem3, detect_counter_current, synth_perturbed_field,
    synth_stream_field, synth_stream_field_on, RegionTag,
};
use wavebound_core::counter_current::{h_minus, h_plus};
use wavebound_core::{ClassLabel, StreamSolver, SynthKind, Verdict, WaveField};

fn assert_bc(f: &WaveField) {
    for row in &f.psi {
        assert!(row[0].abs() <= 1e-12);
        assert!((row[row.len() - 1] - 1.0).abs() <= 1e-12);
    }
}

fn applicable(report: &wavebound_core::BoundsReport, n: u8) -> bool {
    report.theorems.iter().any(|t| t.theorem == n && t.applicable)
}

/// Stream fields of every kind a class supports, plus perturbations.
fn fields_for(solver: &StreamSolver, rng: &mut rand_chacha::ChaCha8Rng) -> Vec<WaveField> {
    let s0 = solver.s0();
    let mut out = vec![synth_stream_field(solver, SynthKind::Stream, s0 + rng.gen_range(0.2..2.0), 3.0, 7, 17).unwrap()];
    match solver.label() {
        ClassLabel::II => out.push(synth_stream_field(solver, SynthKind::Minus, rng.gen_range(0.05..0.5), 3.0, 7, 17).unwrap()),
        ClassLabel::III => out.push(synth_stream_field(solver, SynthKind::Plus, s0 + rng.gen_range(0.05..0.5), 3.0, 7, 17).unwrap()),
        ClassLabel::I => {}
    }
    let bases = out.clone();
    for b in &bases {
        let a = 0.1 * b.eta[0];
        out.push(synth_perturbed_field(b, a, 2.0).unwrap());
    }
    out
}

#[test]
fn synthetic_fields_keep_boundary_values() {
    let mut rng = common::rng(41);
    for k in 0..12 {
        let label = [ClassLabel::I, ClassLabel::II, ClassLabel::III][k % 3];
        let solver = common::solver_of_class(&mut rng, label);
        for f in fields_for(&solver, &mut rng) {
            assert_bc(&f);
            f.validate().unwrap();
        }
    }
}

#[test]
fn router_picks_one_theorem_per_side() {
    let mut rng = common::rng(42);
    for k in 0..12 {
        let label = [ClassLabel::I, ClassLabel::II, ClassLabel::III][k % 3];
        let solver = common::solver_of_class(&mut rng, label);
        for f in fields_for(&solver, &mut rng) {
            let rep = check_all(&f, &solver).unwrap();
            let lower = applicable(&rep, 1) as u8 + applicable(&rep, 3) as u8;
            let upper = applicable(&rep, 2) as u8 + applicable(&rep, 4) as u8;
            match label {
                ClassLabel::I => assert!(lower == 1 && upper == 1 && applicable(&rep, 1)),
                ClassLabel::II => assert!(lower == 1 && upper <= 1),
                ClassLabel::III => assert!(lower <= 1 && upper == 1),
            }
            for t in rep.theorems.iter().filter(|t| !t.applicable) {
                assert_eq!(t.verdict, Verdict::Inapplicable);
                assert!(!t.hypothesis_log.is_empty());
            }
        }
    }
}

#[test]
fn lowering_psi_does_not_shrink_theorem1_margins() {
    let mut rng = common::rng(43);
    for k in 0..9 {
        let label = [ClassLabel::I, ClassLabel::II, ClassLabel::III][k % 3];
        let solver = common::solver_of_class(&mut rng, label);
        for f in fields_for(&solver, &mut rng) {
            let a = check_theorem1(&f, &solver).unwrap();
            let b = check_theorem1(&f.lowered(1e-3), &solver).unwrap();
            assert_eq!(a.checks.len(), b.checks.len());
            for (x, y) in a.checks.iter().zip(&b.checks) {
                assert_eq!(x.label, y.label);
                assert!(y.margin.to_f64() >= x.margin.to_f64() - 1e-12, "{x:?} {y:?}");
            }
            let strip = b.checks.iter().find(|c| c.label.starts_with("psi <"));
            let base = a.checks.iter().find(|c| c.label.starts_with("psi <"));
            if let (Some(x), Some(y)) = (base, strip) {
                assert!(y.margin.to_f64() >= x.margin.to_f64() + 0.5e-3);
            }
        }
    }
}

#[test]
fn theorem3_implies_near_bottom_counter_current() {
    let mut rng = common::rng(44);
    let mut solvers = vec![common::constant(-2.0)];
    solvers.extend((0..6).map(|_| common::solver_of_class(&mut rng, ClassLabel::II)));
    let mut verified = 0;
    for solver in &solvers {
        let s = 0.5;
        let f = synth_stream_field(solver, SynthKind::Minus, s, 2.0, 5, 65).unwrap();
        let t = check_theorem3(&f, solver).unwrap();
        if t.verdict != Verdict::Holds {
            continue;
        }
        verified += 1;
        let s_star = t.parameter.unwrap();
        let stationary = t.counter_current_at.unwrap();
        let depth = h_minus(solver, s_star).unwrap();
        // nodes clustered around the thin reversed layer
        let mut sigma: Vec<f64> = (0..=64).map(|k| k as f64 / 64.0).collect();
        let mid = stationary / depth;
        sigma.extend((0..64).map(|k| 2.0 * mid * (k as f64 + 0.5) / 64.0));
        sigma.sort_by(f64::total_cmp);
        sigma.dedup();
        let cell = 2.0 * stationary / 64.0;
        let comparison =
            synth_stream_field_on(solver, SynthKind::Minus, s_star, vec![0.0, 1.0, 2.0], sigma).unwrap();
        let regions = detect_counter_current(&comparison);
        assert!(
            regions.iter().any(|r| r.tag == RegionTag::NearBottom
                && r.y_min <= cell
                && (r.y_max - stationary).abs() <= cell),
            "{regions:?} {stationary}"
        );
    }
    assert!(verified >= 1);
}

#[test]
fn counter_current_is_localized_within_a_cell() {
    let minus = common::constant(-2.0);
    let f = synth_stream_field(&minus, SynthKind::Minus, 1.0, 2.0, 5, 41).unwrap();
    let cell = f.eta[0] / 40.0;
    let r = detect_counter_current(&f);
    assert_eq!(r.len(), 1);
    assert_eq!(r[0].tag, RegionTag::NearBottom);
    assert!((r[0].y_max - 0.5).abs() <= cell, "{r:?}");

    let plus = common::constant(2.0);
    let f = synth_stream_field(&plus, SynthKind::Plus, 3.0, 2.0, 5, 41).unwrap();
    let cell = h_plus(&plus, 3.0).unwrap() / 40.0;
    let r = detect_counter_current(&f);
    assert_eq!(r.len(), 1);
    assert_eq!(r[0].tag, RegionTag::NearSurface);
    assert!((r[0].y_min - 1.5).abs() <= cell, "{r:?}");
}

#[test]
fn perturbed_surfaces_violate_theorem1() {
    let solver = common::constant(0.0);
    let pair = conjugate_streams(&solver, 1.05).unwrap();
    let base = synth_stream_field(&solver, SynthKind::Stream, pair.s_plus.unwrap(), 6.0, 61, 33).unwrap();
    for a in [0.1, 0.2, 0.3] {
        let f = synth_perturbed_field(&base, a, 1.0).unwrap();
        let t = check_theorem1(&f, &solver).unwrap();
        assert_eq!(t.verdict, Verdict::Violated, "{a} {t:?}");
        assert!(t.witness.is_some());
    }
}

#[test]
fn broken_hypotheses_are_inapplicable() {
    let solver = common::constant(-2.0);
    let mut f = synth_stream_field(&solver, SynthKind::Stream, 1.0, 1.0, 3, 9).unwrap();
    let rep = check_all(&f, &common::constant(2.0)).unwrap();
    let t3 = rep.theorems.iter().find(|t| t.theorem == 3).unwrap();
    assert_eq!(t3.verdict, Verdict::Inapplicable);
    f.psi[1][4] = 1.2;
    let rep = check_all(&f, &solver).unwrap();
    for n in [1, 3, 5] {
        let t = rep.theorems.iter().find(|t| t.theorem == n).unwrap();
        assert_eq!(t.verdict, Verdict::Inapplicable, "{t:?}");
    }
}

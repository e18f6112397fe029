mod common;

use proptest::prelude::*;

use wavebound_core::quad::{integrate, QuadOptions};
use wavebound_core::{ClassLabel, ExtensionOptions, VorticityDistribution};

fn on_unit(d: &VorticityDistribution) -> Vec<(f64, f64, Vec<f64>)> {
    d.segment_data()
        .into_iter()
        .filter(|(a, b, _)| *a >= 0.0 && *b <= 1.0)
        .collect()
}

proptest! {
    #![proptest_config(common::config(256))]

    #[test]
    fn one_label_survives_refinement(d in common::dist_strategy(), t in 0.01f64..0.99) {
        let c = d.classify();
        let refined = match d.split_at(t) {
            Ok(r) => r,
            Err(_) => d.clone(),
        };
        prop_assert_eq!(refined.classify().label, c.label);
    }

    #[test]
    fn primitive_matches_quadrature(d in common::dist_strategy(), t in 0.0f64..1.0) {
        // integrate piece by piece so the kinks sit at interval ends
        let opts = QuadOptions::default();
        let mut cuts: Vec<f64> = d.breakpoints().into_iter().filter(|&b| b > 0.0 && b < t).collect();
        cuts.insert(0, 0.0);
        cuts.push(t);
        let q: f64 = cuts.windows(2).map(|w| integrate(|x| d.omega(x).unwrap(), w[0], w[1], &opts).value).sum();
        let p = d.omega_primitive(t).unwrap();
        prop_assert!((p - q).abs() <= 1e-12, "{} vs {}", p, q);
    }

    #[test]
    fn continuous_at_breakpoints(d in common::dist_strategy()) {
        let segs = d.segment_data();
        for w in segs.windows(2) {
            let (a, b, c) = &w[0];
            let left = c.iter().rev().fold(0.0, |acc, k| acc * (b - a) + k);
            let right = d.omega(*b).unwrap();
            prop_assert!((left - right).abs() <= 1e-12, "{} vs {}", left, right);
        }
    }

    #[test]
    fn lipschitz_bound_dominates_slopes(d in common::dist_strategy()) {
        let l = d.lipschitz_bound();
        for (_, _, c) in d.segment_data() {
            if c.len() > 1 {
                prop_assert!(c[1].abs() <= l);
            }
        }
    }

    #[test]
    fn extensions_reuse_unit_segments(d in common::dist_strategy()) {
        let s = d.s0() + 1.0;
        let right = d.extend_right(s, ExtensionOptions::default()).unwrap();
        prop_assert_eq!(on_unit(&right), on_unit(&d));
        if let Ok(left) = d.extend_left(s, ExtensionOptions::default()) {
            prop_assert_eq!(on_unit(&left), on_unit(&d));
        }
    }

    #[test]
    fn json_round_trip(d in common::dist_strategy()) {
        let back = VorticityDistribution::from_json(&d.to_json()).unwrap();
        prop_assert_eq!(back.segment_data(), d.segment_data());
    }
}

#[test]
fn class_two_primitive_negative_at_breakpoints() {
    let mut rng = common::rng(11);
    for _ in 0..100 {
        let d = common::random_of_class(&mut rng, ClassLabel::II);
        for b in d.breakpoints() {
            if b > 0.0 && b <= 1.0 {
                assert!(d.omega_primitive(b).unwrap() < 0.0);
            }
        }
    }
}

#[test]
fn thousand_random_distributions_partition() {
    let mut rng = common::rng(7);
    let mut counts = [0usize; 3];
    for _ in 0..1000 {
        let d = common::random_pl(&mut rng);
        let c = d.classify();
        counts[match c.label {
            ClassLabel::I => 0,
            ClassLabel::II => 1,
            ClassLabel::III => 2,
        }] += 1;
        let mid = d.split_at(0.5).unwrap_or_else(|_| d.clone());
        assert_eq!(mid.classify().label, c.label);
    }
    assert_eq!(counts.iter().sum::<usize>(), 1000);
    assert!(counts.iter().all(|&c| c > 0), "{counts:?}");
}

#[test]
fn malformed_json_names_the_key() {
    let text = r#"{"segments":[{"from":0,"to":1,"coefs":[1]}]}"#;
    let err = VorticityDistribution::from_json(text).unwrap_err().to_string();
    assert!(err.contains("coefs"), "{err}");
}

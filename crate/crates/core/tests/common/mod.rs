#![allow(dead_code)]

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use wavebound_core::{ClassLabel, StreamSolver, VorticityDistribution};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Knots `0 = t_0 < ... < t_n = 1` with values in `[lo, hi]`.
pub fn random_knots(rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> Vec<(f64, f64)> {
    let n = rng.gen_range(1..=5);
    let mut t: Vec<f64> = (0..n - 1).map(|_| rng.gen_range(0.05..0.95)).collect();
    t.push(0.0);
    t.push(1.0);
    t.sort_by(f64::total_cmp);
    t.dedup_by(|a, b| (*a - *b).abs() < 1e-3);
    t.iter().map(|&x| (x, rng.gen_range(lo..hi))).collect()
}

pub fn random_pl(rng: &mut ChaCha8Rng) -> VorticityDistribution {
    VorticityDistribution::piecewise_linear(&random_knots(rng, -3.0, 3.0)).unwrap()
}

/// Rejection sampling of a distribution of the given class with its
/// class witnesses away from the tolerance boundary.
pub fn random_of_class(rng: &mut ChaCha8Rng, label: ClassLabel) -> VorticityDistribution {
    loop {
        let d = match label {
            // mostly negative values
            ClassLabel::II => VorticityDistribution::piecewise_linear(&random_knots(rng, -3.0, 1.0)).unwrap(),
            ClassLabel::III => VorticityDistribution::piecewise_linear(&random_knots(rng, -1.0, 3.0)).unwrap(),
            ClassLabel::I => random_pl(rng),
        };
        let c = d.classify();
        if c.label != label || c.warning.is_some() {
            continue;
        }
        let clear = match label {
            ClassLabel::II => c.omega_0 < -0.2 && c.max_primitive_open < -0.05,
            ClassLabel::III => c.omega_1 > 0.2 && c.primitive_1 > 0.05,
            ClassLabel::I => true,
        };
        if clear {
            return d;
        }
    }
}

pub fn solver_of_class(rng: &mut ChaCha8Rng, label: ClassLabel) -> StreamSolver {
    StreamSolver::new(random_of_class(rng, label))
}

pub fn constant(c: f64) -> StreamSolver {
    StreamSolver::new(VorticityDistribution::constant(c))
}

/// Proptest strategy for continuous piecewise-linear knots on `[0, 1]`.
pub fn knots_strategy() -> impl Strategy<Value = Vec<(f64, f64)>> {
    (proptest::collection::vec(0.05f64..0.95, 0..4), proptest::collection::vec(-3.0f64..3.0, 6))
        .prop_map(|(mut t, v)| {
            t.push(0.0);
            t.push(1.0);
            t.sort_by(f64::total_cmp);
            t.dedup_by(|a, b| (*a - *b).abs() < 1e-3);
            t.iter().zip(v).map(|(&x, w)| (x, w)).collect()
        })
}

pub fn dist_strategy() -> impl Strategy<Value = VorticityDistribution> {
    knots_strategy().prop_map(|k| VorticityDistribution::piecewise_linear(&k).unwrap())
}

pub fn config(cases: u32) -> ProptestConfig {
    ProptestConfig {
        cases,
        failure_persistence: None,
        ..ProptestConfig::default()
    }
}

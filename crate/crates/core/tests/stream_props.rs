mod common;

use proptest::prelude::*;
use wavebound_core::stream::equispaced;
use wavebound_core::{ClassLabel, Extended, StreamProfile, StreamSolver, Tolerances, VorticityDistribution};

fn both_sides(d: &VorticityDistribution) -> VorticityDistribution {
    d.continue_left().unwrap().continue_right().unwrap()
}

#[test]
fn implicit_and_cauchy_agree() {
    let mut rng = common::rng(3);
    for _ in 0..50 {
        let solver = StreamSolver::new(common::random_pl(&mut rng));
        let s0 = solver.s0();
        for k in [0.05, 0.3, 1.0, 2.0, 5.0] {
            let s = s0 + k * (1.0 + s0);
            let h = solver.depth(s).unwrap();
            let grid = equispaced(0.0, h, 33);
            let a = solver.profile_implicit(s, &grid).unwrap();
            let b = solver.profile_cauchy(s, (0.0, h), 33).unwrap();
            let gap = a
                .u_values
                .iter()
                .zip(&b.u_values)
                .map(|(x, y)| (x - y).abs())
                .fold(0.0, f64::max);
            assert!(gap <= 1e-8, "s = {s}: gap {gap}");
            assert!(a.energy_residual(solver.dist()).unwrap() <= 1e-8);
            assert!(b.energy_residual(solver.dist()).unwrap() <= 1e-8);
        }
    }
}

proptest! {
    #![proptest_config(common::config(64))]

    #[test]
    fn depth_strictly_decreasing(d in common::dist_strategy(), a in 0.01f64..3.0, b in 0.01f64..3.0) {
        prop_assume!((a - b).abs() > 1e-6);
        let solver = StreamSolver::new(d);
        let s0 = solver.s0();
        let (s1, s2) = (s0 + a.min(b), s0 + a.max(b));
        prop_assert!(solver.depth(s1).unwrap() > solver.depth(s2).unwrap());
    }

    #[test]
    fn turning_points_solve_the_level_equation(d in common::dist_strategy(), k in 0.0f64..2.0) {
        let d = both_sides(&d);
        let solver = StreamSolver::new(d.clone());
        let s = k * (1.0 + solver.s0());
        let tp = solver.turning_points(s).unwrap();
        for (tau, y, up) in [(tp.tau_plus, tp.y_plus, true), (tp.tau_minus, tp.y_minus, false)] {
            match tau {
                Extended::Finite(t) => {
                    let side_ok = if up { t >= 0.0 } else { t <= 0.0 };
                    prop_assert!(side_ok);
                    if t != 0.0 {
                        let res = 2.0 * d.omega_primitive(t).unwrap() - s * s;
                        prop_assert!(res.abs() <= 1e-12 * (1.0 + s * s), "residual {}", res);
                        let w = d.omega(t).unwrap();
                        let steep = if up { w > 1e-12 } else { w < -1e-12 };
                        prop_assert_eq!(y.is_finite(), steep);
                    }
                }
                _ => prop_assert!(!y.is_finite()),
            }
        }
    }

    #[test]
    fn cauchy_data_and_energy(d in common::dist_strategy(), k in 0.1f64..3.0) {
        let solver = StreamSolver::new(d);
        let s = solver.s0() + k;
        let h = solver.depth(s).unwrap();
        let p = solver.profile_cauchy(s, (0.0, h), 17).unwrap();
        prop_assert!(p.u_values[0].abs() <= 1e-10);
        prop_assert!((p.u_prime[0] - s).abs() <= 1e-10);
        prop_assert!((p.u_values[16] - 1.0).abs() <= 1e-9);
        prop_assert!(p.energy_residual(solver.dist()).unwrap() <= 1e-8);
        prop_assert!(p.u_prime.iter().all(|&v| v > 0.0));
    }

    #[test]
    fn halving_tolerance_stays_within_estimate(d in common::dist_strategy(), k in 0.05f64..3.0) {
        let coarse = StreamSolver::new(d.clone());
        let fine = StreamSolver::with_tolerances(d, Tolerances { quad_rel: 5e-13, ..Tolerances::default() });
        let s = coarse.s0() + k;
        let a = coarse.depth_estimate(s).unwrap();
        let b = fine.depth_estimate(s).unwrap();
        prop_assert!((a.value - b.value).abs() <= a.abs_err.max(1e-15 * a.value.abs()));
    }
}

#[test]
fn profiles_are_symmetric_about_stationary_points() {
    let mut rng = common::rng(5);
    for label in [ClassLabel::III, ClassLabel::II] {
        for _ in 0..10 {
            let d = both_sides(&common::random_of_class(&mut rng, label));
            let solver = StreamSolver::new(d);
            let s = solver.s0() + 0.5;
            let tp = solver.turning_points(s).unwrap();
            let y0 = match label {
                ClassLabel::III => tp.y_plus,
                _ => tp.y_minus,
            }
            .finite()
            .unwrap();
            let sol = solver.cauchy(s, (2.0 * y0).min(0.0), (2.0 * y0).max(0.0)).unwrap();
            for i in 1..=20 {
                let t = y0.abs() * i as f64 / 20.0;
                let a = sol.eval(y0 + t).unwrap().0;
                let b = sol.eval(y0 - t).unwrap().0;
                assert!((a - b).abs() <= 1e-8, "{label:?}: {a} vs {b}");
            }
            let p = solver.profile_cauchy(s, (y0 - 1.0, y0 + 1.0), 65).unwrap();
            let changes = p.u_prime.windows(2).filter(|w| w[0].signum() != w[1].signum()).count();
            assert_eq!(changes, 1);
        }
    }
}

#[test]
fn profile_json_round_trip() {
    let solver = common::constant(-2.0);
    let h = solver.depth(1.0).unwrap();
    let p = solver.profile_cauchy(1.0, (0.0, h), 9).unwrap();
    let text = wavebound_core::io::to_json(&p).unwrap();
    let back: StreamProfile = serde_json::from_str(&text).unwrap();
    assert_eq!(back, p);
}

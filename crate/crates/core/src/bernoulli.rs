//! The Bernoulli curve `R(s) = [s^2 - 2 Omega(1) + 2 h(s)] / 3`, its
//! minimum `(s_c, r_c)`, the limit `r0`, conjugate stream pairs, the
//! negative-`s` branch of class II and the disconjugacy test.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::Serialize;

use crate::counter_current::{covering, S_GUARD};
use crate::error::{Error, Result};
use crate::extended::Extended;
use crate::ode::{self, OdeOptions};
use crate::roots;
use crate::stream::StreamSolver;
use crate::vorticity::{ClassLabel, Direction, Side};

/// Scan window for `s'` when `s^>` is infinite.
pub const SIGMA_CAP: f64 = 20.0;

const SCAN_POINTS: usize = 256;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Branch {
    Positive,
    Negative,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CurveSample {
    pub s: f64,
    pub h: f64,
    #[serde(rename = "R")]
    pub r: f64,
    pub branch: Branch,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CriticalPoint {
    pub s_c: f64,
    pub r_c: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum PairStatus {
    /// Both conjugates exist.
    Regular,
    /// `r = r_c`: the two conjugates coincide at `s_c`.
    Merged,
    /// `r >= r0`: only the supercritical conjugate exists.
    SubcriticalAbsent,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ConjugatePair {
    pub r: f64,
    pub s_plus: Option<f64>,
    pub s_minus: f64,
    #[serde(rename = "H_plus")]
    pub h_plus: Option<f64>,
    #[serde(rename = "H_minus")]
    pub h_minus: f64,
    pub status: PairStatus,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SPrime {
    pub s_prime: Extended,
    pub r_prime: Extended,
    /// No sign change of the slope was found: `s' = -s^>`.
    pub boundary: bool,
    /// The slope vanished on consecutive scan points.
    pub plateau: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NegativeBranch {
    #[serde(flatten)]
    pub s_prime: SPrime,
    /// `|h(0-) - h(0+)|` from one-sided linear extrapolation.
    pub continuity_gap: f64,
    pub samples: Vec<CurveSample>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CriticalConstants {
    pub s0: f64,
    pub h0: Extended,
    pub s_c: f64,
    pub r_c: f64,
    pub r0: Extended,
    pub s_prime: Option<Extended>,
    pub r_prime: Option<Extended>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BifurcationCurve {
    pub samples: Vec<CurveSample>,
    #[serde(flatten)]
    pub constants: CriticalConstants,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub negative_branch: Option<NegativeBranch>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Disconjugacy {
    pub s: f64,
    pub depth: f64,
    pub positive: bool,
    /// First conjugate point minus the depth.
    pub margin: Extended,
    pub conjugate_point: Extended,
    pub mu: f64,
    pub sufficient_mu_bound: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MonotoneCheck {
    pub holds: bool,
    pub degenerate: bool,
    pub u1: f64,
    pub u2: f64,
}

/// `R(s)` on the positive branch (`s >= s0`) or, for class II, on the
/// negative branch.
pub fn bernoulli_r(solver: &StreamSolver, s: f64) -> Result<f64> {
    let h = extended_depth(solver, s)?;
    Ok(r_from_depth(solver, s, h))
}

fn r_from_depth(solver: &StreamSolver, s: f64, h: f64) -> f64 {
    (s * s - 2.0 * solver.class().primitive_1 + 2.0 * h) / 3.0
}

/// `h(s)`, continued to `s < 0` by `h(s) = h(-s) - 2 y_-(-s)` for class II.
pub fn extended_depth(solver: &StreamSolver, s: f64) -> Result<f64> {
    if s >= 0.0 || solver.label() != ClassLabel::II {
        return solver.depth(s);
    }
    let cover = covering(solver, Side::Below)?;
    negative_depth(&cover, -s)
}

/// `h_-(sigma) = h(sigma) - 2 y_-(sigma)` on a covering solver.
fn negative_depth(cover: &StreamSolver, sigma: f64) -> Result<f64> {
    let bound = cover.dist().boundary_zeros(Side::Below)?;
    if !bound.s_bound.gt(sigma + S_GUARD) {
        return Err(Error::OutOfRange(format!(
            "s = {} is not above -s^> = {}",
            -sigma,
            bound.s_bound.neg()
        )));
    }
    let (_, y) = cover.turning_point(sigma, Direction::Left)?;
    let y = y
        .finite()
        .ok_or_else(|| Error::NoConvergence(format!("y_-({sigma}) is not finite")))?;
    Ok(cover.depth(sigma)? - 2.0 * y)
}

/// `d h_- / d sigma = -sigma J(sigma) - 2 y_-'(sigma)`, with
/// `y_-' = 1/omega(0) + int_{tau_-}^0 sigma omega' / (omega^2 sqrt(F))`.
fn negative_depth_slope(cover: &StreamSolver, sigma: f64) -> Result<f64> {
    let w0 = cover.dist().omega_at(0.0);
    if sigma == 0.0 {
        return Ok(-1.0 / w0);
    }
    let (tau, _) = cover.turning_point(sigma, Direction::Left)?;
    let tau = tau
        .finite()
        .ok_or_else(|| Error::NoConvergence(format!("tau_-({sigma}) is not finite")))?;
    let dist = cover.dist();
    let r = cover.singular_integral(sigma * sigma, tau, 0.0, (true, false), |t, f| {
        let w = dist.omega_at(t);
        sigma * dist.omega_prime_at(t) / (w * w * f.sqrt())
    });
    if !r.value.is_finite() || !(r.converged || r.abs_err <= 1e-8 * r.value.abs().max(1.0)) {
        return Err(Error::NoConvergence(format!("slope integral at sigma = {sigma}")));
    }
    let y_dot = 1.0 / w0 + r.value;
    Ok(-sigma * cover.j_integral(sigma)? - 2.0 * y_dot)
}

/// `h'(s)` on both branches.
pub fn extended_depth_slope(solver: &StreamSolver, s: f64) -> Result<f64> {
    if s > 0.0 || solver.label() != ClassLabel::II {
        return solver.depth_slope(s);
    }
    let cover = covering(solver, Side::Below)?;
    Ok(-negative_depth_slope(&cover, -s)?)
}

/// Minimum of `R` on `(s0, inf)`: the unique root of `J(s) = 1`.
pub fn critical(solver: &StreamSolver) -> Result<CriticalPoint> {
    let s0 = solver.s0();
    let g = |s: f64| -> Result<f64> { Ok(solver.j_integral(s)? - 1.0) };
    let mut hi = s0 + 10.0 * (1.0 + s0);
    let mut tries = 0;
    while g(hi)? > 0.0 {
        hi = s0 + 2.0 * (hi - s0);
        tries += 1;
        if tries > 60 {
            return Err(Error::NoBracket("minimum of R not bracketed above".into()));
        }
    }
    let mut lo = s0 + 0.5 * (hi - s0);
    tries = 0;
    while g(lo)? < 0.0 {
        lo = s0 + 0.5 * (lo - s0);
        tries += 1;
        if tries > 200 {
            return Err(Error::NoBracket("minimum of R not bracketed below".into()));
        }
    }
    let s_c = roots::brent(g, lo, hi, 1e-13)?;
    Ok(CriticalPoint {
        s_c,
        r_c: bernoulli_r(solver, s_c)?,
    })
}

/// `r0 = lim_{s -> s0+} R(s)`; infinite exactly for class I.
pub fn r0(solver: &StreamSolver) -> Result<Extended> {
    Ok(match solver.h0()? {
        Extended::Finite(h0) => Extended::Finite(r_from_depth(solver, solver.s0(), h0)),
        _ => Extended::PosInfinity,
    })
}

/// Roots `s_+ < s_c < s_-` of `R(s) = r` and their depths.
pub fn conjugate_streams(solver: &StreamSolver, r: f64) -> Result<ConjugatePair> {
    let crit = critical(solver)?;
    let tie = 1e-12 * crit.r_c.abs().max(1.0);
    if r < crit.r_c - tie {
        return Err(Error::Inapplicable(format!(
            "r = {r} is below r_c = {}: no stream solutions",
            crit.r_c
        )));
    }
    if (r - crit.r_c).abs() <= tie {
        let h = solver.depth(crit.s_c)?;
        return Ok(ConjugatePair {
            r,
            s_plus: Some(crit.s_c),
            s_minus: crit.s_c,
            h_plus: Some(h),
            h_minus: h,
            status: PairStatus::Merged,
        });
    }
    let s0 = solver.s0();
    let f = |s: f64| -> Result<f64> { Ok(bernoulli_r(solver, s)? - r) };
    let mut hi = crit.s_c + (1.0 + crit.s_c);
    while f(hi)? < 0.0 {
        hi = crit.s_c + 2.0 * (hi - crit.s_c);
    }
    let s_minus = roots::brent(f, crit.s_c, hi, 1e-14)?;
    let h_minus = solver.depth(s_minus)?;

    let r_zero = r0(solver)?;
    if !r_zero.gt(r) {
        return Ok(ConjugatePair {
            r,
            s_plus: None,
            s_minus,
            h_plus: None,
            h_minus,
            status: PairStatus::SubcriticalAbsent,
        });
    }
    let lo = if r_zero.is_finite() {
        s0
    } else {
        let mut lo = s0 + 0.5 * (crit.s_c - s0);
        let mut tries = 0;
        while f(lo)? < 0.0 {
            lo = s0 + 0.5 * (lo - s0);
            tries += 1;
            if tries > 200 {
                return Err(Error::NoBracket("R(s) = r below s_c".into()));
            }
        }
        lo
    };
    let s_plus = roots::brent(f, lo, crit.s_c, 1e-14)?;
    Ok(ConjugatePair {
        r,
        s_plus: Some(s_plus),
        s_minus,
        h_plus: Some(solver.depth(s_plus)?),
        h_minus,
        status: PairStatus::Regular,
    })
}

/// `s^2 - 2 Omega(1) + 2 H - 3 r` for one conjugate.
pub fn bernoulli_residual(solver: &StreamSolver, s: f64, h: f64, r: f64) -> f64 {
    s * s - 2.0 * solver.class().primitive_1 + 2.0 * h - 3.0 * r
}

fn require_two(solver: &StreamSolver) -> Result<()> {
    if solver.label() != ClassLabel::II {
        return Err(Error::ClassMismatch {
            expected: ClassLabel::II,
            found: solver.label(),
        });
    }
    Ok(())
}

pub(crate) fn sigma_cap(cover: &StreamSolver) -> Result<(f64, Extended)> {
    let bound = cover.dist().boundary_zeros(Side::Below)?;
    let cap = match bound.s_bound {
        Extended::Finite(sb) => 0.999 * sb,
        _ => SIGMA_CAP,
    };
    Ok((cap, bound.s_bound))
}

/// `s'`: the lower end of the interval `(s', 0)` on which `h' < 0`.
pub fn s_prime(solver: &StreamSolver) -> Result<SPrime> {
    require_two(solver)?;
    let cover = covering(solver, Side::Below)?;
    let (cap, s_bound) = sigma_cap(&cover)?;
    let slope = |sigma: f64| negative_depth_slope(&cover, sigma);
    let mut prev_sigma = 0.0;
    let mut prev = slope(0.0)?;
    let mut plateau = false;
    let flat = |v: f64| v.abs() <= 1e-10;
    for k in 1..=SCAN_POINTS {
        let sigma = cap * k as f64 / SCAN_POINTS as f64;
        let v = slope(sigma)?;
        if flat(v) && flat(prev) {
            plateau = true;
        }
        if v <= 0.0 {
            let root = if v == 0.0 {
                sigma
            } else {
                roots::brent(slope, prev_sigma, sigma, 1e-13)?
            };
            let h = negative_depth(&cover, root)?;
            return Ok(SPrime {
                s_prime: Extended::Finite(-root),
                r_prime: Extended::Finite(r_from_depth(solver, -root, h)),
                boundary: false,
                plateau,
            });
        }
        prev_sigma = sigma;
        prev = v;
    }
    Ok(SPrime {
        s_prime: s_bound.neg(),
        r_prime: Extended::PosInfinity,
        boundary: true,
        plateau,
    })
}

/// Samples of the class II negative branch on `(s', 0)`.
pub fn extend_negative(solver: &StreamSolver, n: usize) -> Result<NegativeBranch> {
    require_two(solver)?;
    let cover = covering(solver, Side::Below)?;
    let sp = s_prime(solver)?;
    let (cap, _) = sigma_cap(&cover)?;
    let end = match sp.s_prime {
        Extended::Finite(v) if !sp.boundary => -v,
        _ => cap,
    };
    let n = n.max(2);
    let sigmas: Vec<f64> = (1..=n).rev().map(|k| end * k as f64 / n as f64).collect();
    let samples = sigmas
        .par_iter()
        .map(|&sigma| {
            let h = negative_depth(&cover, sigma)?;
            Ok(CurveSample {
                s: -sigma,
                h,
                r: r_from_depth(solver, -sigma, h),
                branch: Branch::Negative,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let eps = 1e-6;
    let left = 2.0 * negative_depth(&cover, eps)? - negative_depth(&cover, 2.0 * eps)?;
    let right = 2.0 * solver.depth(eps)? - solver.depth(2.0 * eps)?;
    Ok(NegativeBranch {
        s_prime: sp,
        continuity_gap: (left - right).abs(),
        samples,
    })
}

/// Positive-branch samples at the given `s` values (parallel, ordered).
pub fn sample_curve(solver: &StreamSolver, s_values: &[f64]) -> Result<Vec<CurveSample>> {
    s_values
        .par_iter()
        .map(|&s| {
            let h = extended_depth(solver, s)?;
            Ok(CurveSample {
                s,
                h,
                r: r_from_depth(solver, s, h),
                branch: if s < 0.0 { Branch::Negative } else { Branch::Positive },
            })
        })
        .collect()
}

pub fn critical_constants(solver: &StreamSolver, sp: Option<SPrime>) -> Result<CriticalConstants> {
    let crit = critical(solver)?;
    Ok(CriticalConstants {
        s0: solver.s0(),
        h0: solver.h0()?,
        s_c: crit.s_c,
        r_c: crit.r_c,
        r0: r0(solver)?,
        s_prime: sp.map(|v| v.s_prime),
        r_prime: sp.map(|v| v.r_prime),
    })
}

/// Curve on the given grid with constants, plus the negative branch for
/// class II.
pub fn bifurcation_curve(
    solver: &StreamSolver,
    s_values: &[f64],
    negative_points: Option<usize>,
) -> Result<BifurcationCurve> {
    let samples = sample_curve(solver, s_values)?;
    let negative_branch = match negative_points {
        Some(n) if solver.label() == ClassLabel::II => Some(extend_negative(solver, n)?),
        _ => None,
    };
    let constants = critical_constants(solver, negative_branch.as_ref().map(|b| b.s_prime))?;
    Ok(BifurcationCurve {
        samples,
        constants,
        negative_branch,
    })
}

/// CSV with header `s,h,R,branch`.
pub fn curve_csv(samples: &[CurveSample]) -> Result<String> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(Vec::new());
    w.write_record(["s", "h", "R", "branch"])?;
    for p in samples {
        w.write_record([
            crate::io::fmt17(p.s),
            crate::io::fmt17(p.h),
            crate::io::fmt17(p.r),
            match p.branch {
                Branch::Positive => "positive".to_string(),
                Branch::Negative => "negative".to_string(),
            },
        ])?;
    }
    let bytes = w
        .into_inner()
        .map_err(|e| Error::Format(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("ascii csv"))
}

/// Sturm test of `z'' + omega'(U(y; s)) z = 0`, `z(0) = 0`, `z'(0) = 1`
/// on `(0, h(s)]`. Outside the domain of the depth function `h(s)` is
/// the first `y > 0` with `U(y; s) = 1`.
pub fn disconjugacy(solver: &StreamSolver, s: f64) -> Result<Disconjugacy> {
    let cover = covering(&covering(solver, Side::Below)?, Side::Above)?;
    let dist = cover.dist();
    let opts = OdeOptions {
        rtol: solver.tolerances().ode_local,
        atol: solver.tolerances().ode_local,
        ..OdeOptions::default()
    };
    // state (U - 1, U', z, z')
    let rhs = |_: f64, y: &[f64; 4]| -> Result<[f64; 4]> {
        let u = y[0] + 1.0;
        Ok([y[1], -dist.omega_at(u), y[3], -dist.omega_prime_at(u) * y[2]])
    };
    let start = [-1.0, s, 0.0, 1.0];
    let bps: Vec<f64> = dist.breakpoints().into_iter().filter(|b| b.is_finite()).map(|b| b - 1.0).collect();
    let kinks = Some(ode::Kinks { component: 0, values: &bps });
    let h = match depth_if_defined(solver, s)? {
        Some(h) => h,
        None => {
            let mut end = 4.0;
            loop {
                let tr = ode::integrate_with_kinks(rhs, 0.0, start, end, &[], kinks, &opts)?;
                if let Some(t) = tr.sign_changes(0).into_iter().find(|&t| t > 0.0) {
                    break t;
                }
                end *= 2.0;
                if end > 1e4 {
                    return Err(Error::Inapplicable(format!(
                        "U(y; {s}) does not reach 1"
                    )));
                }
            }
        }
    };
    let tr = ode::integrate_with_kinks(rhs, 0.0, start, 4.0 * h, &[h], kinks, &opts)?;
    let conjugate_point = tr.sign_changes(2).into_iter().find(|&t| t > 1e-12);
    let mu = solver.dist().max_omega_prime();
    Ok(Disconjugacy {
        s,
        depth: h,
        positive: conjugate_point.is_none_or(|t| t > h),
        margin: conjugate_point.map_or(Extended::PosInfinity, |t| Extended::Finite(t - h)),
        conjugate_point: conjugate_point.map_or(Extended::PosInfinity, Extended::Finite),
        mu,
        sufficient_mu_bound: mu < PI * PI / (h * h),
    })
}

fn depth_if_defined(solver: &StreamSolver, s: f64) -> Result<Option<f64>> {
    if s >= solver.s0() && !(s == solver.s0() && solver.label() == ClassLabel::I) {
        return solver.depth(s).map(Some);
    }
    if s < 0.0 && solver.label() == ClassLabel::II {
        return match extended_depth(solver, s) {
            Ok(h) => Ok(Some(h)),
            Err(Error::OutOfRange(_)) => Ok(None),
            Err(e) => Err(e),
        };
    }
    Ok(None)
}

/// `U(y; s1) < U(y; s2)` for `s1 < s2`.
pub fn monotone_in_s(solver: &StreamSolver, y: f64, s1: f64, s2: f64) -> Result<MonotoneCheck> {
    let cover = if s1.min(s2) < 0.0 {
        covering(solver, Side::Below)?
    } else {
        solver.clone()
    };
    let eval = |s: f64| -> Result<f64> {
        let sol = cover.cauchy(s, y.min(0.0), y.max(0.0))?;
        Ok(sol.eval(y)?.0)
    };
    let u1 = eval(s1)?;
    if s1 == s2 {
        return Ok(MonotoneCheck {
            holds: true,
            degenerate: true,
            u1,
            u2: u1,
        });
    }
    let u2 = eval(s2)?;
    let (a, b) = if s1 < s2 { (u1, u2) } else { (u2, u1) };
    Ok(MonotoneCheck {
        holds: a < b,
        degenerate: false,
        u1,
        u2,
    })
}

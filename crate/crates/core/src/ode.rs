//! Dormand-Prince 5(4) integrator with dense output.
//!
//! The right-hand side is fallible so that a solution leaving the domain
//! of the vorticity function aborts cleanly instead of extrapolating.

use crate::error::{Error, Result};
use crate::roots;

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;
const D1: f64 = -12715105075.0 / 11282082432.0;
const D3: f64 = 87487479700.0 / 32700410799.0;
const D4: f64 = -10690763975.0 / 1880347072.0;
const D5: f64 = 701980252875.0 / 199316789632.0;
const D6: f64 = -1453857185.0 / 822651844.0;
const D7: f64 = 69997945.0 / 29380423.0;

#[derive(Debug, Clone, Copy)]
pub struct OdeOptions {
    pub rtol: f64,
    pub atol: f64,
    pub max_steps: usize,
}

impl Default for OdeOptions {
    fn default() -> Self {
        OdeOptions {
            rtol: 1e-12,
            atol: 1e-12,
            max_steps: 200_000,
        }
    }
}

#[derive(Debug, Clone)]
struct Step<const N: usize> {
    t0: f64,
    h: f64,
    r: [[f64; N]; 5],
}

impl<const N: usize> Step<N> {
    fn eval(&self, t: f64) -> [f64; N] {
        let theta = (t - self.t0) / self.h;
        let theta1 = 1.0 - theta;
        let mut out = [0.0; N];
        for i in 0..N {
            let r = &self.r;
            out[i] = r[0][i]
                + theta * (r[1][i] + theta1 * (r[2][i] + theta * (r[3][i] + theta1 * r[4][i])));
        }
        out
    }

    fn t1(&self) -> f64 {
        self.t0 + self.h
    }
}

/// Accepted steps of one integration run, evaluable anywhere in the
/// covered range.
#[derive(Debug, Clone)]
pub struct Trajectory<const N: usize> {
    t0: f64,
    y0: [f64; N],
    t_end: f64,
    steps: Vec<Step<N>>,
}

impl<const N: usize> Trajectory<N> {
    pub fn start(&self) -> f64 {
        self.t0
    }

    pub fn end(&self) -> f64 {
        self.t_end
    }

    pub fn covers(&self, t: f64) -> bool {
        let (lo, hi) = (self.t0.min(self.t_end), self.t0.max(self.t_end));
        t >= lo && t <= hi
    }

    /// Step end points, starting with the initial time.
    pub fn knots(&self) -> Vec<f64> {
        let mut k = vec![self.t0];
        k.extend(self.steps.iter().map(|s| s.t1()));
        k
    }

    pub fn eval(&self, t: f64) -> Result<[f64; N]> {
        if !self.covers(t) {
            return Err(Error::OutOfRange(format!(
                "t = {t} outside the integrated range [{}, {}]",
                self.t0.min(self.t_end),
                self.t0.max(self.t_end)
            )));
        }
        if t == self.t0 || self.steps.is_empty() {
            return Ok(self.y0);
        }
        let forward = self.t_end > self.t0;
        // first step whose end reaches t
        let idx = self.steps.partition_point(|s| {
            if forward {
                s.t1() < t
            } else {
                s.t1() > t
            }
        });
        let step = &self.steps[idx.min(self.steps.len() - 1)];
        Ok(step.eval(t))
    }

    /// First time after the start at which component `i` changes sign,
    /// located on the dense interpolant.
    pub fn first_sign_change(&self, i: usize) -> Option<f64> {
        self.sign_changes(i).into_iter().next()
    }

    /// All sign changes of component `i`, in integration order.
    pub fn sign_changes(&self, i: usize) -> Vec<f64> {
        const SUB: usize = 4;
        let mut out = Vec::new();
        let mut prev_t = self.t0;
        let mut prev_v = self.y0[i];
        for step in &self.steps {
            for k in 1..=SUB {
                let t = if k == SUB {
                    step.t1()
                } else {
                    step.t0 + step.h * k as f64 / SUB as f64
                };
                let v = step.eval(t)[i];
                if prev_v != 0.0 && (v == 0.0 || v.signum() != prev_v.signum()) {
                    let root = if v == 0.0 {
                        t
                    } else {
                        roots::brent(|x| Ok(step.eval(x)[i]), prev_t, t, 1e-15)
                            .unwrap_or(0.5 * (prev_t + t))
                    };
                    out.push(root);
                }
                if v != 0.0 {
                    prev_v = v;
                }
                prev_t = t;
            }
        }
        out
    }
}

/// Values of one state component at which the right-hand side has a
/// kink. Steps are cut so that every crossing is a step boundary.
#[derive(Debug, Clone, Copy)]
pub struct Kinks<'a> {
    pub component: usize,
    pub values: &'a [f64],
}

/// Integrate `y' = f(t, y)` from `t0` to `t1` (either direction). The
/// integrator lands exactly on every time in `stops` that lies in range.
pub fn integrate<const N: usize, F>(
    f: F,
    t0: f64,
    y0: [f64; N],
    t1: f64,
    stops: &[f64],
    opts: &OdeOptions,
) -> Result<Trajectory<N>>
where
    F: FnMut(f64, &[f64; N]) -> Result<[f64; N]>,
{
    integrate_with_kinks(f, t0, y0, t1, stops, None, opts)
}

/// First crossing of a kink value strictly inside a candidate step.
fn kink_crossing<const N: usize>(step: &Step<N>, y: &[f64; N], y_new: &[f64; N], k: &Kinks) -> Option<f64> {
    let (a, b) = (y[k.component], y_new[k.component]);
    let t_a = step.t0;
    let mut best: Option<f64> = None;
    for &v in k.values {
        let da = a - v;
        let db = b - v;
        if da.abs() <= 1e-12 * (1.0 + v.abs()) || da.signum() == db.signum() || db == 0.0 {
            continue;
        }
        let (lo, hi) = if step.h > 0.0 { (t_a, step.t1()) } else { (step.t1(), t_a) };
        if let Ok(tc) = roots::brent(|t| Ok(step.eval(t)[k.component] - v), lo, hi, 1e-15) {
            if best.is_none_or(|b| (tc - t_a).abs() < (b - t_a).abs()) {
                best = Some(tc);
            }
        }
    }
    best.filter(|&tc| (tc - t_a).abs() > 1e-13 * t_a.abs().max(1.0) && (step.t1() - tc).abs() > 1e-13 * tc.abs().max(1.0))
}

pub fn integrate_with_kinks<const N: usize, F>(
    mut f: F,
    t0: f64,
    y0: [f64; N],
    t1: f64,
    stops: &[f64],
    kinks: Option<Kinks>,
    opts: &OdeOptions,
) -> Result<Trajectory<N>>
where
    F: FnMut(f64, &[f64; N]) -> Result<[f64; N]>,
{
    let mut traj = Trajectory {
        t0,
        y0,
        t_end: t1,
        steps: Vec::new(),
    };
    if t0 == t1 {
        return Ok(traj);
    }
    let dir = (t1 - t0).signum();
    let mut targets: Vec<f64> = stops
        .iter()
        .copied()
        .filter(|&s| (s - t0) * dir > 0.0 && (t1 - s) * dir > 0.0)
        .collect();
    targets.push(t1);
    targets.sort_by(|a, b| ((a - t0) * dir).total_cmp(&((b - t0) * dir)));
    targets.dedup();

    let mut t = t0;
    let mut y = y0;
    let mut k1 = f(t, &y)?;
    let mut h = initial_step(&y, &k1, (t1 - t0).abs(), opts);
    let mut target_idx = 0;
    let mut n = 0;
    let mut facold: f64 = 1e-4;
    while target_idx < targets.len() {
        let target = targets[target_idx];
        n += 1;
        if n > opts.max_steps {
            return Err(Error::NoConvergence(format!(
                "ODE step limit reached at t = {t}"
            )));
        }
        let mut hs = h.min((target - t).abs()) * dir;
        let hits = (t + hs - target) * dir >= 0.0 || ((target - t - hs) * dir).abs() < 1e-14 * target.abs().max(1.0);
        if hits {
            hs = target - t;
        }
        let mut stage = |tt: f64, yy: &[f64; N]| f(tt, yy);
        let (y_new, k7, err, ks) = match try_step(&mut stage, t, &y, &k1, hs, opts) {
            Ok(v) => v,
            Err(e @ Error::LeftDomain { .. }) => {
                // a stage left the domain: shrink unless the step is already tiny
                if hs.abs() < 1e-10 * t.abs().max(1.0) {
                    return Err(e);
                }
                h = hs.abs() * 0.25;
                continue;
            }
            Err(e) => return Err(e),
        };
        if err <= 1.0 {
            let t_new = if hits { target } else { t + hs };
            let mut r = [[0.0; N]; 5];
            for i in 0..N {
                let ydiff = y_new[i] - y[i];
                let bspl = hs * k1[i] - ydiff;
                r[0][i] = y[i];
                r[1][i] = ydiff;
                r[2][i] = bspl;
                r[3][i] = ydiff - hs * k7[i] - bspl;
                r[4][i] = hs
                    * (D1 * ks[0][i] + D3 * ks[2][i] + D4 * ks[3][i] + D5 * ks[4][i] + D6 * ks[5][i]
                        + D7 * k7[i]);
            }
            let step = Step { t0: t, h: t_new - t, r };
            if let Some(tc) = kinks.as_ref().and_then(|k| kink_crossing(&step, &y, &y_new, k)) {
                // redo the step so that it ends on the crossing
                targets.insert(target_idx, tc);
                h = (tc - t).abs();
                continue;
            }
            traj.steps.push(step);
            t = t_new;
            y = y_new;
            k1 = k7;
            if hits {
                target_idx += 1;
            }
            // PI step size control
            let fac11 = err.max(1e-10).powf(0.17);
            let fac = (fac11 / facold.powf(0.04) / 0.9).clamp(0.1, 5.0);
            facold = err.max(1e-4);
            h = hs.abs() / fac;
        } else {
            let fac = (err.powf(0.2) / 0.9).min(10.0);
            h = hs.abs() / fac;
        }
    }
    Ok(traj)
}

fn initial_step<const N: usize>(y: &[f64; N], k1: &[f64; N], span: f64, opts: &OdeOptions) -> f64 {
    let mut dnf = 0.0;
    let mut dny = 0.0;
    for i in 0..N {
        let sk = opts.atol + opts.rtol * y[i].abs();
        dnf += (k1[i] / sk).powi(2);
        dny += (y[i] / sk).powi(2);
    }
    let h = if dnf <= 1e-10 || dny <= 1e-10 {
        1e-6
    } else {
        0.01 * (dny / dnf).sqrt()
    };
    h.clamp(1e-8, span.max(1e-8)).min(0.01f64.max(span * 1e-3))
}

type StepOutput<const N: usize> = ([f64; N], [f64; N], f64, [[f64; N]; 6]);

fn try_step<const N: usize, F>(
    f: &mut F,
    t: f64,
    y: &[f64; N],
    k1: &[f64; N],
    h: f64,
    opts: &OdeOptions,
) -> Result<StepOutput<N>>
where
    F: FnMut(f64, &[f64; N]) -> Result<[f64; N]>,
{
    let comb = |coef: &[(f64, &[f64; N])]| {
        let mut out = *y;
        for i in 0..N {
            let mut acc = 0.0;
            for (c, k) in coef {
                acc += c * k[i];
            }
            out[i] += h * acc;
        }
        out
    };
    let k2 = f(t + C2 * h, &comb(&[(A21, k1)]))?;
    let k3 = f(t + C3 * h, &comb(&[(A31, k1), (A32, &k2)]))?;
    let k4 = f(t + C4 * h, &comb(&[(A41, k1), (A42, &k2), (A43, &k3)]))?;
    let k5 = f(
        t + C5 * h,
        &comb(&[(A51, k1), (A52, &k2), (A53, &k3), (A54, &k4)]),
    )?;
    let k6 = f(
        t + h,
        &comb(&[(A61, k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)]),
    )?;
    let y_new = comb(&[(A71, k1), (A73, &k3), (A74, &k4), (A75, &k5), (A76, &k6)]);
    let k7 = f(t + h, &y_new)?;
    let mut err = 0.0;
    for i in 0..N {
        let e = h * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
        let sk = opts.atol + opts.rtol * y[i].abs().max(y_new[i].abs());
        err += (e / sk).powi(2);
    }
    let err = (err / N as f64).sqrt();
    Ok((y_new, k7, err, [*k1, k2, k3, k4, k5, k6]))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn harmonic(_: f64, y: &[f64; 2]) -> Result<[f64; 2]> {
        Ok([y[1], -y[0]])
    }

    #[test]
    fn harmonic_oscillator_forward_and_backward() {
        let opts = OdeOptions::default();
        let fwd = integrate(harmonic, 0.0, [0.0, 1.0], 10.0, &[], &opts).unwrap();
        let y = fwd.eval(10.0).unwrap();
        assert!((y[0] - 10f64.sin()).abs() < 1e-10);
        let mid = fwd.eval(3.3).unwrap();
        assert!((mid[0] - 3.3f64.sin()).abs() < 1e-10, "dense output");
        let bwd = integrate(harmonic, 0.0, [0.0, 1.0], -4.0, &[], &opts).unwrap();
        let y = bwd.eval(-4.0).unwrap();
        assert!((y[0] - (-4f64).sin()).abs() < 1e-10);
    }

    #[test]
    fn lands_exactly_on_stops() {
        let opts = OdeOptions::default();
        let traj = integrate(harmonic, 0.0, [0.0, 1.0], 2.0, &[0.5, 1.25], &opts).unwrap();
        let knots = traj.knots();
        assert!(knots.contains(&0.5) && knots.contains(&1.25) && knots.contains(&2.0));
    }

    #[test]
    fn sign_changes_of_sine() {
        let opts = OdeOptions::default();
        let traj = integrate(harmonic, 0.0, [0.0, 1.0], 10.0, &[], &opts).unwrap();
        let z = traj.sign_changes(0);
        assert_eq!(z.len(), 3);
        for (k, r) in z.iter().enumerate() {
            assert!((r - std::f64::consts::PI * (k + 1) as f64).abs() < 1e-9);
        }
    }

    #[test]
    fn kinks_become_step_boundaries() {
        let opts = OdeOptions::default();
        let f = |_: f64, y: &[f64; 2]| -> Result<[f64; 2]> { Ok([y[1], if y[0] < 0.0 { 1.0 } else { -1.0 }]) };
        let k = Kinks { component: 0, values: &[0.0] };
        let traj = integrate_with_kinks(f, 0.0, [-1.0, 2.0], 3.0, &[], Some(k), &opts).unwrap();
        let cross = traj.sign_changes(0)[0];
        assert!(traj.knots().iter().any(|&t| (t - cross).abs() < 1e-12));
        // y = -1 + 2t + t^2 / 2 before the crossing
        let exact = -2.0 + 6f64.sqrt();
        assert!((cross - exact).abs() < 1e-12);
    }

    #[test]
    fn domain_error_propagates() {
        let opts = OdeOptions::default();
        let res = integrate(
            |t, y: &[f64; 1]| {
                if y[0] > 1.0 {
                    Err(Error::LeftDomain { y: t, u: y[0] })
                } else {
                    Ok([1.0])
                }
            },
            0.0,
            [0.0],
            5.0,
            &[],
            &opts,
        );
        assert!(matches!(res, Err(Error::LeftDomain { .. })));
    }
}

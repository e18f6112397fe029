//! Piecewise-polynomial vorticity distributions, their primitive,
//! classification and the ramp extensions used outside `[0, 1]`.

use std::fmt;

use serde::{Deserialize, Serialize};
use serde_json::{Number, Value};

use crate::error::{Error, Result};
use crate::extended::Extended;
use crate::poly::Polynomial;

/// Tolerance for sign decisions in classification.
pub const CLASS_TOL: f64 = 1e-12;

/// Continuity tolerance at breakpoints.
pub const CONTINUITY_TOL: f64 = 1e-12;

const MAX_DEGREE: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ClassLabel {
    I,
    II,
    III,
}

impl fmt::Display for ClassLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ClassLabel::I => "I",
            ClassLabel::II => "II",
            ClassLabel::III => "III",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Below,
    Above,
}

impl fmt::Display for Side {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Side::Below => "below",
            Side::Above => "above",
        })
    }
}

/// Classification result with the data that decided it.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VorticityClass {
    pub label: ClassLabel,
    /// Maximum of the primitive on `[0, 1]` and a maximizer.
    pub max_primitive: f64,
    pub argmax: f64,
    pub omega_0: f64,
    pub omega_1: f64,
    pub primitive_1: f64,
    /// Largest value of the primitive over the critical points in `(0, 1]`
    /// (the quantity that decides the class II test).
    pub max_primitive_open: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub warning: Option<String>,
}

// ---------------------------------------------------------------------------
// JSON spec

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SegmentSpec {
    pub from: Value,
    pub to: Value,
    pub coeffs: Vec<Number>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DistributionSpec {
    pub segments: Vec<SegmentSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub comment: Option<Value>,
}

impl DistributionSpec {
    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("spec serializes") + "\n"
    }
}

fn number(x: f64) -> Number {
    Number::from_f64(x).expect("finite number")
}

fn bound_value(x: f64) -> Value {
    if x == f64::INFINITY {
        Value::String("inf".into())
    } else if x == f64::NEG_INFINITY {
        Value::String("-inf".into())
    } else {
        Value::Number(number(x))
    }
}

fn parse_bound(v: &Value) -> Result<f64> {
    match v {
        Value::Number(n) => n
            .as_f64()
            .filter(|x| x.is_finite())
            .ok_or_else(|| Error::InvalidDistribution(format!("bad breakpoint {n}"))),
        Value::String(s) if s == "inf" || s == "+inf" => Ok(f64::INFINITY),
        Value::String(s) if s == "-inf" => Ok(f64::NEG_INFINITY),
        other => Err(Error::InvalidDistribution(format!(
            "breakpoint must be a number, \"inf\" or \"-inf\", got {other}"
        ))),
    }
}

// ---------------------------------------------------------------------------
// Distribution

#[derive(Debug, Clone)]
struct Segment {
    from: f64,
    to: f64,
    // local variable is tau - anchor
    anchor: f64,
    poly: Polynomial,
    prim: Polynomial,
    // primitive on this segment is offset + prim(tau - anchor)
    offset: f64,
    spec: SegmentSpec,
}

impl Segment {
    fn new(spec: SegmentSpec) -> Result<Self> {
        let from = parse_bound(&spec.from)?;
        let to = parse_bound(&spec.to)?;
        if from >= to || from == f64::INFINITY || to == f64::NEG_INFINITY {
            return Err(Error::InvalidDistribution(format!(
                "segment [{from}, {to}] is empty"
            )));
        }
        if spec.coeffs.is_empty() {
            return Err(Error::InvalidDistribution("segment without coefficients".into()));
        }
        if spec.coeffs.len() > MAX_DEGREE + 1 {
            return Err(Error::InvalidDistribution(format!(
                "segment degree {} exceeds {MAX_DEGREE}",
                spec.coeffs.len() - 1
            )));
        }
        let coeffs = spec
            .coeffs
            .iter()
            .map(|n| {
                n.as_f64()
                    .filter(|x| x.is_finite())
                    .ok_or_else(|| Error::InvalidDistribution(format!("bad coefficient {n}")))
            })
            .collect::<Result<Vec<f64>>>()?;
        let poly = Polynomial::new(coeffs);
        let unbounded = from.is_infinite() || to.is_infinite();
        if unbounded && poly.degree().unwrap_or(0) > 1 {
            return Err(Error::InvalidDistribution(
                "unbounded segments must be at most linear".into(),
            ));
        }
        let anchor = if from.is_finite() {
            from
        } else if to.is_finite() {
            to
        } else {
            0.0
        };
        let prim = poly.antiderivative();
        Ok(Segment {
            from,
            to,
            anchor,
            poly,
            prim,
            offset: 0.0,
            spec,
        })
    }

    fn from_coeffs(from: f64, to: f64, coeffs: &[f64]) -> Result<Self> {
        Segment::new(SegmentSpec {
            from: bound_value(from),
            to: bound_value(to),
            coeffs: coeffs.iter().map(|&c| number(c)).collect(),
        })
    }

    fn omega(&self, tau: f64) -> f64 {
        self.poly.eval(tau - self.anchor)
    }

    fn omega_prime(&self, tau: f64) -> f64 {
        self.poly.derivative().eval(tau - self.anchor)
    }

    fn primitive(&self, tau: f64) -> f64 {
        self.offset + self.prim.eval(tau - self.anchor)
    }

    /// Local interval `[a, b]` mapped into the segment variable.
    fn local(&self, a: f64, b: f64) -> (f64, f64) {
        (a - self.anchor, b - self.anchor)
    }
}

/// Real roots of `p` on `[a, b]`, where `a` or `b` may be infinite. A
/// Cauchy bound turns an unbounded interval into a bounded one.
fn roots_unbounded(p: &Polynomial, a: f64, b: f64) -> Vec<f64> {
    let Some(deg) = p.degree() else {
        return Vec::new();
    };
    if deg == 0 {
        return Vec::new();
    }
    let c = p.coeffs();
    let lead = c[deg];
    let bound = 2.0 + c[..deg].iter().map(|x| (x / lead).abs()).fold(0.0, f64::max);
    let lo = if a.is_finite() { a } else { -bound };
    let hi = if b.is_finite() { b } else { bound };
    if lo > hi {
        return Vec::new();
    }
    p.real_roots(lo, hi)
}

/// Which side of the origin a level-set search runs on.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    Right,
    Left,
}

#[derive(Debug, Clone)]
pub struct VorticityDistribution {
    segments: Vec<Segment>,
    comment: Option<Value>,
    lipschitz: f64,
}

/// Options for [`VorticityDistribution::extend_right`] and
/// [`VorticityDistribution::extend_left`].
#[derive(Debug, Clone, Copy, Default)]
pub struct ExtensionOptions {
    /// Ramp width; the default is a tenth of the largest admissible width.
    pub width: Option<f64>,
    /// Left extensions only: also keep `s0^2 - 2 Omega(tau) > s0^2 / 2`
    /// for `tau <= 0`.
    pub near_threshold: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BoundaryZero {
    pub side: Side,
    /// `y^>` (largest zero below 0) or `y^<` (least zero above 1).
    pub y_zero: Extended,
    /// `sqrt(2 Omega(y_zero))`.
    pub s_bound: Extended,
}

impl VorticityDistribution {
    pub fn from_spec(spec: &DistributionSpec) -> Result<Self> {
        let segments = spec
            .segments
            .iter()
            .cloned()
            .map(Segment::new)
            .collect::<Result<Vec<_>>>()?;
        Self::assemble(segments, spec.comment.clone())
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Self::from_spec(&DistributionSpec::from_json(text)?)
    }

    /// Build from `(from, to, coefficients)` triples; coefficients are in
    /// powers of `tau - from` (of `tau - to` when `from` is `-inf`).
    pub fn from_segments(segments: &[(f64, f64, Vec<f64>)]) -> Result<Self> {
        let segs = segments
            .iter()
            .map(|(a, b, c)| Segment::from_coeffs(*a, *b, c))
            .collect::<Result<Vec<_>>>()?;
        Self::assemble(segs, None)
    }

    /// `omega == c` on `[0, 1]`.
    pub fn constant(c: f64) -> Self {
        Self::from_segments(&[(0.0, 1.0, vec![c])]).expect("constant distribution")
    }

    /// Continuous piecewise-linear interpolant of `(tau, omega)` knots.
    pub fn piecewise_linear(knots: &[(f64, f64)]) -> Result<Self> {
        if knots.len() < 2 {
            return Err(Error::InvalidDistribution("need at least two knots".into()));
        }
        let segs: Vec<(f64, f64, Vec<f64>)> = knots
            .windows(2)
            .map(|w| {
                let (a, fa) = w[0];
                let (b, fb) = w[1];
                (a, b, vec![fa, (fb - fa) / (b - a)])
            })
            .collect();
        Self::from_segments(&segs)
    }

    fn assemble(mut segments: Vec<Segment>, comment: Option<Value>) -> Result<Self> {
        if segments.is_empty() {
            return Err(Error::InvalidDistribution("no segments".into()));
        }
        for w in segments.windows(2) {
            let (l, r) = (&w[0], &w[1]);
            if l.to < r.from {
                return Err(Error::InvalidDistribution(format!(
                    "gap between {} and {}",
                    l.to, r.from
                )));
            }
            if l.to > r.from {
                return Err(Error::InvalidDistribution(format!(
                    "segments overlap on [{}, {}]",
                    r.from, l.to
                )));
            }
            let (vl, vr) = (l.omega(l.to), r.omega(r.from));
            if (vl - vr).abs() > CONTINUITY_TOL * vl.abs().max(vr.abs()).max(1.0) {
                return Err(Error::InvalidDistribution(format!(
                    "discontinuity at tau = {}: {vl} vs {vr}",
                    l.to
                )));
            }
        }
        let (lo, hi) = (segments[0].from, segments.last().unwrap().to);
        if lo > 0.0 || hi < 1.0 {
            return Err(Error::InvalidDistribution(format!(
                "domain [{lo}, {hi}] does not contain [0, 1]"
            )));
        }
        let z = Self::index_in(&segments, 0.0);
        segments[z].offset = -segments[z].prim.eval(0.0 - segments[z].anchor);
        for k in z + 1..segments.len() {
            let edge = segments[k - 1].to;
            let left = segments[k - 1].primitive(edge);
            segments[k].offset = left - segments[k].prim.eval(edge - segments[k].anchor);
        }
        for k in (0..z).rev() {
            let edge = segments[k + 1].from;
            let right = segments[k + 1].primitive(edge);
            segments[k].offset = right - segments[k].prim.eval(edge - segments[k].anchor);
        }
        let lipschitz = segments
            .iter()
            .map(|s| {
                let d = s.poly.derivative();
                if d.is_zero() {
                    0.0
                } else if s.from.is_infinite() || s.to.is_infinite() {
                    d.coeffs()[0].abs()
                } else {
                    let (a, b) = s.local(s.from, s.to);
                    d.max_on(a, b).0.max(-d.min_on(a, b).0)
                }
            })
            .fold(0.0, f64::max);
        Ok(VorticityDistribution {
            segments,
            comment,
            lipschitz,
        })
    }

    fn index_in(segments: &[Segment], tau: f64) -> usize {
        segments
            .partition_point(|s| s.to <= tau)
            .min(segments.len() - 1)
    }

    fn index(&self, tau: f64) -> usize {
        Self::index_in(&self.segments, tau)
    }

    pub fn to_spec(&self) -> DistributionSpec {
        DistributionSpec {
            segments: self.segments.iter().map(|s| s.spec.clone()).collect(),
            comment: self.comment.clone(),
        }
    }

    pub fn to_json(&self) -> String {
        self.to_spec().to_json()
    }

    pub fn domain(&self) -> (f64, f64) {
        (self.segments[0].from, self.segments.last().unwrap().to)
    }

    pub fn contains(&self, tau: f64) -> bool {
        let (lo, hi) = self.domain();
        tau >= lo && tau <= hi
    }

    pub fn segment_count(&self) -> usize {
        self.segments.len()
    }

    /// Interior breakpoints, ascending.
    pub fn breakpoints(&self) -> Vec<f64> {
        self.segments[1..].iter().map(|s| s.from).collect()
    }

    /// Segments as `(from, to, coefficients)` triples.
    pub fn segment_data(&self) -> Vec<(f64, f64, Vec<f64>)> {
        self.segments
            .iter()
            .map(|s| (s.from, s.to, s.poly.coeffs().to_vec()))
            .collect()
    }

    fn check(&self, tau: f64) -> Result<()> {
        if self.contains(tau) && !tau.is_nan() {
            Ok(())
        } else {
            Err(Error::OutsideDomain(tau))
        }
    }

    pub fn omega(&self, tau: f64) -> Result<f64> {
        self.check(tau)?;
        Ok(self.omega_at(tau))
    }

    /// The primitive `Omega(tau) = int_0^tau omega`.
    pub fn omega_primitive(&self, tau: f64) -> Result<f64> {
        self.check(tau)?;
        Ok(self.primitive_at(tau))
    }

    pub(crate) fn omega_at(&self, tau: f64) -> f64 {
        self.segments[self.index(tau)].omega(tau)
    }

    pub(crate) fn primitive_at(&self, tau: f64) -> f64 {
        self.segments[self.index(tau)].primitive(tau)
    }

    /// Right derivative of omega.
    pub(crate) fn omega_prime_at(&self, tau: f64) -> f64 {
        self.segments[self.index(tau)].omega_prime(tau)
    }

    pub fn lipschitz_bound(&self) -> f64 {
        self.lipschitz
    }

    /// `sup omega'` over the open segments of the whole domain.
    pub fn max_omega_prime(&self) -> f64 {
        self.segments
            .iter()
            .map(|s| {
                let d = s.poly.derivative();
                if s.from.is_infinite() || s.to.is_infinite() {
                    d.coeffs()[0]
                } else {
                    let (a, b) = s.local(s.from, s.to);
                    d.max_on(a, b).0
                }
            })
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// Taylor expansion of the primitive about `p` using the polynomial of
    /// segment `k`: returns `q` with `Omega(p + t) = Omega(p) + q(t)` and
    /// `q(0) = 0` exactly.
    pub(crate) fn primitive_increment(&self, k: usize, p: f64) -> Polynomial {
        let seg = &self.segments[k];
        seg.prim.taylor_shift(p - seg.anchor).with_constant(0.0)
    }

    /// Primitive at `p` evaluated with segment `k`.
    pub(crate) fn primitive_in(&self, k: usize, p: f64) -> f64 {
        self.segments[k].primitive(p)
    }

    pub(crate) fn segment_index(&self, tau: f64) -> usize {
        self.index(tau)
    }

    /// Breakpoints strictly inside `(a, b)`.
    pub(crate) fn breakpoints_between(&self, a: f64, b: f64) -> Vec<f64> {
        self.segments[1..]
            .iter()
            .map(|s| s.from)
            .filter(|&x| x > a && x < b)
            .collect()
    }

    /// Zeros of omega strictly inside `(a, b)`, excluding segments on which
    /// omega vanishes identically.
    pub fn omega_zeros_between(&self, a: f64, b: f64) -> Vec<f64> {
        let mut out = Vec::new();
        for s in &self.segments {
            let lo = s.from.max(a);
            let hi = s.to.min(b);
            if lo >= hi {
                continue;
            }
            let (la, lb) = s.local(lo, hi);
            for r in roots_unbounded(&s.poly, la, lb) {
                let tau = r + s.anchor;
                if tau > a && tau < b {
                    out.push(tau);
                }
            }
        }
        out.sort_by(f64::total_cmp);
        out.dedup_by(|x, y| (*x - *y).abs() <= 1e-14 * (1.0 + y.abs()));
        out
    }

    /// Maximum of the primitive on the finite interval `[a, b]` and a
    /// maximizer.
    pub fn max_primitive_on(&self, a: f64, b: f64) -> (f64, f64) {
        let mut best = (self.primitive_at(a), a);
        let mut consider = |x: f64| {
            let v = self.primitive_at(x);
            if v > best.0 {
                best = (v, x);
            }
        };
        consider(b);
        for x in self.breakpoints_between(a, b) {
            consider(x);
        }
        for x in self.omega_zeros_between(a, b) {
            consider(x);
        }
        best
    }

    /// Nearest root of `Omega(tau) = level` strictly to one side of 0.
    ///
    /// `Ok(None)` means there is no root on an unbounded side; a bounded
    /// domain without a root is an error asking for an extension.
    pub fn nearest_level_root(&self, level: f64, dir: Direction) -> Result<Option<f64>> {
        let z = self.index(0.0);
        let order: Vec<usize> = match dir {
            Direction::Right => (z..self.segments.len()).collect(),
            Direction::Left => (0..=z).rev().collect(),
        };
        // the trivial root at the origin is excluded
        let exclude = 1e-13;
        for k in order {
            let s = &self.segments[k];
            let (lo, hi) = match dir {
                Direction::Right => (s.from.max(0.0), s.to),
                Direction::Left => (s.from, s.to.min(0.0)),
            };
            if lo >= hi {
                continue;
            }
            let shifted = s.prim.with_constant(s.prim.coeffs()[0] + s.offset - level);
            let (la, lb) = s.local(lo, hi);
            let mut roots: Vec<f64> = roots_unbounded(&shifted, la, lb)
                .into_iter()
                .map(|r| r + s.anchor)
                .filter(|&t| match dir {
                    Direction::Right => t > 0.0 && !(level == 0.0 && t <= exclude),
                    Direction::Left => t < 0.0 && !(level == 0.0 && t >= -exclude),
                })
                .collect();
            if dir == Direction::Left {
                roots.reverse();
            }
            if let Some(&r) = roots.first() {
                return Ok(Some(r));
            }
        }
        let (lo, hi) = self.domain();
        match dir {
            Direction::Right if hi.is_infinite() => Ok(None),
            Direction::Left if lo.is_infinite() => Ok(None),
            Direction::Right => Err(Error::NotExtended(Side::Above)),
            Direction::Left => Err(Error::NotExtended(Side::Below)),
        }
    }

    // -----------------------------------------------------------------------
    // Classification

    pub fn classify(&self) -> VorticityClass {
        let omega_0 = self.omega_at(0.0);
        let omega_1 = self.omega_at(1.0);
        let primitive_1 = self.primitive_at(1.0);
        let (max_primitive, argmax) = self.max_primitive_on(0.0, 1.0);

        let mut crit = self.breakpoints_between(0.0, 1.0);
        crit.extend(self.omega_zeros_between(0.0, 1.0));
        let max_interior = crit
            .iter()
            .map(|&x| self.primitive_at(x))
            .fold(f64::NEG_INFINITY, f64::max);
        let max_open = max_interior.max(primitive_1);

        // class II: omega(0) < 0 and Omega < 0 on (0, 1]
        let two = Tri::all(&[Tri::positive(-omega_0), Tri::positive(-max_open)]);

        // class III: omega(1) > 0, Omega < Omega(1) on (0, 1), and the
        // additional requirement omega(0) < 0 when Omega(1) = 0
        let below_end = if max_interior == f64::NEG_INFINITY {
            Tri::True
        } else {
            Tri::positive(primitive_1 - max_interior)
        };
        let near_origin = if primitive_1 == 0.0 {
            Tri::positive(-omega_0)
        } else {
            Tri::positive(primitive_1)
        };
        let three = Tri::all(&[Tri::positive(omega_1), below_end, near_origin]);

        let (label, warning) = match (two, three) {
            (Tri::True, _) => (ClassLabel::II, None),
            (_, Tri::True) => (ClassLabel::III, None),
            (Tri::Tie, _) | (_, Tri::Tie) => (
                ClassLabel::I,
                Some(format!(
                    "sign decision within tolerance {CLASS_TOL}; resolved toward class I"
                )),
            ),
            _ => (ClassLabel::I, None),
        };
        VorticityClass {
            label,
            max_primitive,
            argmax,
            omega_0,
            omega_1,
            primitive_1,
            max_primitive_open: max_open,
            warning,
        }
    }

    /// `s0 = sqrt(2 max(0, max_{[0,1]} Omega))`.
    pub fn s0(&self) -> f64 {
        let (m, _) = self.max_primitive_on(0.0, 1.0);
        (2.0 * m.max(0.0)).sqrt()
    }

    // -----------------------------------------------------------------------
    // Extensions

    fn push_segments(&self, left: Vec<Segment>, right: Vec<Segment>) -> Result<Self> {
        let mut segs = left;
        segs.extend(self.segments.iter().cloned());
        segs.extend(right);
        Self::assemble(segs, self.comment.clone())
    }

    /// Linear ramp from the right edge value to zero over `width`, then
    /// `omega = 0` to `+inf`.
    pub fn with_ramp_right(&self, width: f64) -> Result<Self> {
        let (_, hi) = self.domain();
        if hi.is_infinite() {
            return Err(Error::Extension("the domain is already unbounded above".into()));
        }
        let v = self.omega_at(hi);
        let mut add = Vec::new();
        if v == 0.0 {
            add.push(Segment::from_coeffs(hi, f64::INFINITY, &[0.0])?);
        } else {
            if !(width > 0.0 && width.is_finite()) {
                return Err(Error::Extension(format!("invalid ramp width {width}")));
            }
            add.push(Segment::from_coeffs(hi, hi + width, &[v, -v / width])?);
            add.push(Segment::from_coeffs(hi + width, f64::INFINITY, &[0.0])?);
        }
        self.push_segments(Vec::new(), add)
    }

    /// Mirror image of [`Self::with_ramp_right`] below the left edge.
    pub fn with_ramp_left(&self, width: f64) -> Result<Self> {
        let (lo, _) = self.domain();
        if lo.is_infinite() {
            return Err(Error::Extension("the domain is already unbounded below".into()));
        }
        let v = self.omega_at(lo);
        let mut add = Vec::new();
        if v == 0.0 {
            add.push(Segment::from_coeffs(f64::NEG_INFINITY, lo, &[0.0])?);
        } else {
            if !(width > 0.0 && width.is_finite()) {
                return Err(Error::Extension(format!("invalid ramp width {width}")));
            }
            add.push(Segment::from_coeffs(f64::NEG_INFINITY, lo - width, &[0.0])?);
            add.push(Segment::from_coeffs(lo - width, lo, &[0.0, v / width])?);
        }
        self.push_segments(add, Vec::new())
    }

    /// Continue the right edge value as a constant to `+inf`.
    pub fn continue_right(&self) -> Result<Self> {
        let (_, hi) = self.domain();
        if hi.is_infinite() {
            return Err(Error::Extension("the domain is already unbounded above".into()));
        }
        let v = self.omega_at(hi);
        self.push_segments(Vec::new(), vec![Segment::from_coeffs(hi, f64::INFINITY, &[v])?])
    }

    /// Continue the left edge value as a constant to `-inf`.
    pub fn continue_left(&self) -> Result<Self> {
        let (lo, _) = self.domain();
        if lo.is_infinite() {
            return Err(Error::Extension("the domain is already unbounded below".into()));
        }
        let v = self.omega_at(lo);
        self.push_segments(vec![Segment::from_coeffs(f64::NEG_INFINITY, lo, &[v])?], Vec::new())
    }

    /// Ramp-then-zero extension above the domain keeping
    /// `s_target^2 > 2 Omega(tau)` for all `tau >= 0`.
    pub fn extend_right(&self, s_target: f64, opts: ExtensionOptions) -> Result<Self> {
        let (_, hi) = self.domain();
        if hi.is_infinite() {
            return Err(Error::Extension("the domain is already unbounded above".into()));
        }
        let limit = 0.5 * s_target * s_target;
        let (m, at) = self.max_primitive_on(0.0, hi);
        if !(m < limit) {
            return Err(Error::Extension(format!(
                "s_target = {s_target} violates s^2 > 2 Omega at tau = {at} (Omega = {m})"
            )));
        }
        let v = self.omega_at(hi);
        let edge = self.primitive_at(hi);
        // the ramp raises Omega by v * w / 2 when v > 0
        let w_max = if v > 0.0 {
            2.0 * (limit - edge) / v
        } else {
            f64::INFINITY
        };
        let width = pick_width(opts.width, w_max)?;
        self.with_ramp_right(width)
    }

    /// Ramp-then-zero extension below the domain keeping
    /// `s_target^2 > 2 Omega(tau)` for all `tau <= 0`, and with
    /// `near_threshold` also `Omega(tau) < s0^2 / 4` there.
    pub fn extend_left(&self, s_target: f64, opts: ExtensionOptions) -> Result<Self> {
        let (lo, _) = self.domain();
        if lo.is_infinite() {
            return Err(Error::Extension("the domain is already unbounded below".into()));
        }
        let mut limit = 0.5 * s_target * s_target;
        if opts.near_threshold {
            let s0 = self.s0();
            limit = limit.min(0.25 * s0 * s0);
        }
        let (m, at) = self.max_primitive_on(lo, 0.0);
        if !(m < limit) {
            return Err(Error::Extension(format!(
                "cannot keep Omega below {limit} for tau <= 0: Omega({at}) = {m}"
            )));
        }
        let v = self.omega_at(lo);
        let edge = self.primitive_at(lo);
        // going left, the ramp raises Omega by |v| * w / 2 when v < 0
        let w_max = if v < 0.0 {
            2.0 * (limit - edge) / -v
        } else {
            f64::INFINITY
        };
        let width = pick_width(opts.width, w_max)?;
        self.with_ramp_left(width)
    }

    /// Largest zero of omega below 0 or least zero above 1.
    pub fn boundary_zeros(&self, side: Side) -> Result<BoundaryZero> {
        let (lo, hi) = self.domain();
        let found = match side {
            Side::Below => {
                if lo >= 0.0 {
                    return Err(Error::NotExtended(side));
                }
                self.largest_zero_below(0.0)
            }
            Side::Above => {
                if hi <= 1.0 {
                    return Err(Error::NotExtended(side));
                }
                self.least_zero_above(1.0)
            }
        };
        let y_zero = match (found, side) {
            (Some(y), _) => Extended::Finite(y),
            (None, Side::Below) if lo.is_infinite() => Extended::NegInfinity,
            (None, Side::Above) if hi.is_infinite() => Extended::PosInfinity,
            (None, _) => return Err(Error::NotExtended(side)),
        };
        let s_bound = match y_zero {
            Extended::Finite(y) => Extended::Finite((2.0 * self.primitive_at(y)).max(0.0).sqrt()),
            // without a zero omega keeps one sign on the linear tail, so
            // Omega grows without bound there
            _ => Extended::PosInfinity,
        };
        Ok(BoundaryZero {
            side,
            y_zero,
            s_bound,
        })
    }

    fn largest_zero_below(&self, x: f64) -> Option<f64> {
        for s in self.segments.iter().rev() {
            if s.from >= x {
                continue;
            }
            let hi = s.to.min(x);
            if s.poly.is_zero() {
                return Some(if hi < x { hi } else { x });
            }
            let (la, lb) = s.local(s.from, hi);
            let r = roots_unbounded(&s.poly, la, lb)
                .into_iter()
                .map(|r| r + s.anchor)
                .filter(|&t| t < x)
                .fold(None, |acc: Option<f64>, t| Some(acc.map_or(t, |a| a.max(t))));
            if r.is_some() {
                return r;
            }
        }
        None
    }

    fn least_zero_above(&self, x: f64) -> Option<f64> {
        for s in &self.segments {
            if s.to <= x {
                continue;
            }
            let lo = s.from.max(x);
            if s.poly.is_zero() {
                return Some(if lo > x { lo } else { x });
            }
            let (la, lb) = s.local(lo, s.to);
            let r = roots_unbounded(&s.poly, la, lb)
                .into_iter()
                .map(|r| r + s.anchor)
                .filter(|&t| t > x)
                .fold(None, |acc: Option<f64>, t| Some(acc.map_or(t, |a| a.min(t))));
            if r.is_some() {
                return r;
            }
        }
        None
    }

    /// Same function with an extra breakpoint at `tau`.
    pub fn split_at(&self, tau: f64) -> Result<Self> {
        let k = self.index(tau);
        let s = &self.segments[k];
        if !(tau > s.from && tau < s.to) {
            return Err(Error::OutOfRange(format!(
                "tau = {tau} is not interior to a segment"
            )));
        }
        // new local variable is tau' - tau on both halves
        let local = s.poly.taylor_shift(tau - s.anchor);
        let left = if s.from.is_finite() {
            Segment::from_coeffs(s.from, tau, s.poly.coeffs())?
        } else {
            Segment::from_coeffs(s.from, tau, local.coeffs())?
        };
        let right = Segment::from_coeffs(tau, s.to, local.coeffs())?;
        let mut segs = self.segments.clone();
        segs.splice(k..=k, [left, right]);
        Self::assemble(segs, self.comment.clone())
    }
}

fn pick_width(requested: Option<f64>, w_max: f64) -> Result<f64> {
    match requested {
        Some(w) if !(w > 0.0 && w.is_finite()) => {
            Err(Error::Extension(format!("invalid ramp width {w}")))
        }
        Some(w) if w >= w_max => Err(Error::Extension(format!(
            "ramp width {w} must be below {w_max}"
        ))),
        Some(w) => Ok(w),
        None if w_max.is_finite() => Ok(0.1 * w_max),
        None => Ok(0.1),
    }
}

/// Three-valued outcome of a sign decision under tolerance.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Tri {
    True,
    False,
    Tie,
}

impl Tri {
    fn positive(x: f64) -> Tri {
        // an exact zero is a decided (false) strict inequality
        if x > CLASS_TOL {
            Tri::True
        } else if x < -CLASS_TOL || x == 0.0 {
            Tri::False
        } else {
            Tri::Tie
        }
    }

    fn all(parts: &[Tri]) -> Tri {
        if parts.contains(&Tri::False) {
            Tri::False
        } else if parts.contains(&Tri::Tie) {
            Tri::Tie
        } else {
            Tri::True
        }
    }

}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constants_build_with_zero_lipschitz_bound() {
        let d = VorticityDistribution::constant(-2.0);
        assert_eq!(d.lipschitz_bound(), 0.0);
        assert_eq!(d.domain(), (0.0, 1.0));
    }

    #[test]
    fn primitive_of_constants() {
        let d = VorticityDistribution::constant(-2.0);
        assert_eq!(d.omega_primitive(0.5).unwrap(), -1.0);
        assert_eq!(d.omega_primitive(0.0).unwrap(), 0.0);
        let d = VorticityDistribution::constant(2.0);
        assert_eq!(d.omega_primitive(1.0).unwrap(), 2.0);
        assert!(matches!(d.omega_primitive(1.5), Err(Error::OutsideDomain(_))));
    }

    #[test]
    fn rejects_discontinuity_gap_and_short_domain() {
        let jump = VorticityDistribution::from_segments(&[
            (0.0, 0.5, vec![1.0]),
            (0.5, 1.0, vec![2.0]),
        ]);
        assert!(matches!(jump, Err(Error::InvalidDistribution(_))));
        let gap = VorticityDistribution::from_segments(&[
            (0.0, 0.5, vec![1.0]),
            (0.6, 1.0, vec![1.0]),
        ]);
        assert!(matches!(gap, Err(Error::InvalidDistribution(_))));
        let short = VorticityDistribution::from_segments(&[(0.0, 0.9, vec![1.0])]);
        assert!(matches!(short, Err(Error::InvalidDistribution(_))));
    }

    #[test]
    fn classifies_constant_examples() {
        assert_eq!(VorticityDistribution::constant(-2.0).classify().label, ClassLabel::II);
        assert_eq!(VorticityDistribution::constant(2.0).classify().label, ClassLabel::III);
        let c = VorticityDistribution::constant(0.0).classify();
        assert_eq!(c.label, ClassLabel::I);
        assert!(c.warning.is_none());
    }

    #[test]
    fn class_three_with_vanishing_primitive_at_one() {
        // omega = -1 + 2 tau: Omega(1) = 0, omega(0) < 0, omega(1) > 0
        let d = VorticityDistribution::from_segments(&[(0.0, 1.0, vec![-1.0, 2.0])]).unwrap();
        assert_eq!(d.classify().label, ClassLabel::III);
        // omega = 1 - 2 tau: Omega(1) = 0 but omega(0) > 0
        let d = VorticityDistribution::from_segments(&[(0.0, 1.0, vec![1.0, -2.0])]).unwrap();
        assert_eq!(d.classify().label, ClassLabel::I);
    }

    #[test]
    fn interior_maximum_is_class_one() {
        // omega = 1 - 3 tau: Omega has its maximum 1/6 at tau = 1/3
        let d = VorticityDistribution::from_segments(&[(0.0, 1.0, vec![1.0, -3.0])]).unwrap();
        let c = d.classify();
        assert_eq!(c.label, ClassLabel::I);
        assert!((c.argmax - 1.0 / 3.0).abs() < 1e-14);
        assert!((d.s0() - (2.0f64 * (1.0 / 6.0)).sqrt()).abs() < 1e-14);
    }

    #[test]
    fn primitive_is_continuous_across_breakpoints() {
        let d = VorticityDistribution::piecewise_linear(&[(-1.0, 3.0), (0.0, -1.0), (0.4, 2.0), (1.0, 0.5)])
            .unwrap();
        for &b in &[-1.0, 0.0, 0.4, 1.0] {
            let l = d.primitive_at(b - 1e-12);
            let r = d.primitive_at(b + 1e-12);
            if d.contains(b - 1e-12) && d.contains(b + 1e-12) {
                assert!((l - r).abs() < 1e-10);
            }
        }
        assert_eq!(d.omega_primitive(0.0).unwrap(), 0.0);
        // int_0^0.4 (-1 + 7.5 t) dt = -0.4 + 0.6
        assert!((d.omega_primitive(0.4).unwrap() - 0.2).abs() < 1e-15);
    }

    #[test]
    fn right_extension_of_constant_two() {
        let d = VorticityDistribution::constant(2.0);
        let e = d
            .extend_right(3.0, ExtensionOptions { width: Some(0.1), ..Default::default() })
            .unwrap();
        assert!((e.omega(1.05).unwrap() - 1.0).abs() < 1e-14);
        assert_eq!(e.omega(5.0).unwrap(), 0.0);
        // Omega_max = 2 + w = 2.1 < 4.5
        assert!((e.omega_primitive(7.0).unwrap() - 2.1).abs() < 1e-14);
        let z = e.boundary_zeros(Side::Above).unwrap();
        assert!((z.y_zero.finite().unwrap() - 1.1).abs() < 1e-15);
        // default width is a tenth of the admissible 2.5
        let e = d.extend_right(3.0, ExtensionOptions::default()).unwrap();
        let z = e.boundary_zeros(Side::Above).unwrap();
        assert!((z.y_zero.finite().unwrap() - 1.25).abs() < 1e-15);
        assert!(d.extend_right(3.0, ExtensionOptions { width: Some(3.0), ..Default::default() }).is_err());
        assert!(d.extend_right(2.0, ExtensionOptions::default()).is_err());
    }

    #[test]
    fn left_extension_of_constant_minus_two() {
        let d = VorticityDistribution::constant(-2.0);
        let e = d
            .extend_left(1.0, ExtensionOptions { width: Some(0.2), ..Default::default() })
            .unwrap();
        let z = e.boundary_zeros(Side::Below).unwrap();
        assert_eq!(z.y_zero, Extended::Finite(-0.2));
        // Omega(-0.2) = int_{-0.2}^0 2 * (t + 0.2)/0.2 dt = 0.2
        let want = (2.0f64 * 0.2).sqrt();
        assert!((z.s_bound.finite().unwrap() - want).abs() < 1e-14);
        assert!(d.extend_left(0.0, ExtensionOptions::default()).is_err());
    }

    #[test]
    fn extensions_reuse_original_segments() {
        let d = VorticityDistribution::piecewise_linear(&[(0.0, 0.3), (0.5, -0.2), (1.0, 0.7)]).unwrap();
        let e = d.extend_right(5.0, ExtensionOptions::default()).unwrap();
        let e = e.extend_left(5.0, ExtensionOptions::default()).unwrap();
        let orig = d.to_spec().segments;
        let ext = e.to_spec().segments;
        let start = ext.iter().position(|s| s == &orig[0]).unwrap();
        assert_eq!(&ext[start..start + orig.len()], &orig[..]);
    }

    #[test]
    fn boundary_zeros_need_extension() {
        let d = VorticityDistribution::constant(-2.0);
        assert_eq!(d.boundary_zeros(Side::Below), Err(Error::NotExtended(Side::Below)));
        // negative linear tail: no zero below 0
        let e = VorticityDistribution::from_segments(&[
            (f64::NEG_INFINITY, 0.0, vec![-2.0]),
            (0.0, 1.0, vec![-2.0]),
        ])
        .unwrap();
        let z = e.boundary_zeros(Side::Below).unwrap();
        assert_eq!(z.y_zero, Extended::NegInfinity);
        assert_eq!(z.s_bound, Extended::PosInfinity);
    }

    #[test]
    fn json_round_trip_preserves_decimal_strings() {
        let text = r#"{"segments":[{"from":"-inf","to":0,"coeffs":[0.1000000000000000055511151231257827]},{"from":0,"to":1.0,"coeffs":[0.1000000000000000055511151231257827,1e-3]}],"comment":"x"}"#;
        let spec = DistributionSpec::from_json(text).unwrap();
        let again = DistributionSpec::from_json(&spec.to_json()).unwrap();
        assert_eq!(spec, again);
        assert!(spec.to_json().contains("0.1000000000000000055511151231257827"));
        let d = VorticityDistribution::from_spec(&spec).unwrap();
        assert_eq!(d.to_spec(), spec);
    }

    #[test]
    fn split_preserves_values_and_class() {
        let d = VorticityDistribution::from_segments(&[(0.0, 1.0, vec![-1.0, 0.5, 2.0])]).unwrap();
        let e = d.split_at(0.37).unwrap();
        assert_eq!(e.segment_count(), 2);
        for i in 0..=20 {
            let t = i as f64 / 20.0;
            assert!((d.omega(t).unwrap() - e.omega(t).unwrap()).abs() < 1e-14);
            assert!((d.omega_primitive(t).unwrap() - e.omega_primitive(t).unwrap()).abs() < 1e-14);
        }
        assert_eq!(d.classify().label, e.classify().label);
    }

    #[test]
    fn level_roots_on_each_side() {
        let d = VorticityDistribution::constant(2.0).with_ramp_right(0.5).unwrap();
        // Omega = 2 tau near 0; level 4.5/2... solve 2 Omega = 9 -> Omega = 4.5 > max 2.5
        assert_eq!(d.nearest_level_root(4.5, Direction::Right).unwrap(), None);
        let r = d.nearest_level_root(1.0, Direction::Right).unwrap().unwrap();
        assert!((r - 0.5).abs() < 1e-15);
        assert_eq!(
            d.nearest_level_root(1.0, Direction::Left),
            Err(Error::NotExtended(Side::Below))
        );
    }
}

//! Dense univariate polynomials in a local variable, with exact
//! differentiation, antidifferentiation, Taylor shifts and real-root
//! isolation by recursive derivative splitting.

use crate::roots;

#[derive(Debug, Clone, PartialEq)]
pub struct Polynomial {
    coeffs: Vec<f64>,
}

impl Polynomial {
    pub fn new(coeffs: Vec<f64>) -> Self {
        let mut p = Polynomial { coeffs };
        p.trim();
        p
    }

    pub fn constant(c: f64) -> Self {
        Polynomial::new(vec![c])
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    fn trim(&mut self) {
        while self.coeffs.len() > 1 && *self.coeffs.last().unwrap() == 0.0 {
            self.coeffs.pop();
        }
        if self.coeffs.is_empty() {
            self.coeffs.push(0.0);
        }
    }

    /// Degree of the polynomial; `None` for the zero polynomial.
    pub fn degree(&self) -> Option<usize> {
        if self.is_zero() {
            None
        } else {
            Some(self.coeffs.len() - 1)
        }
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.len() == 1 && self.coeffs[0] == 0.0
    }

    pub fn eval(&self, t: f64) -> f64 {
        self.coeffs.iter().rev().fold(0.0, |acc, &c| acc * t + c)
    }

    pub fn derivative(&self) -> Polynomial {
        if self.coeffs.len() <= 1 {
            return Polynomial::constant(0.0);
        }
        Polynomial::new(
            self.coeffs
                .iter()
                .enumerate()
                .skip(1)
                .map(|(k, &c)| c * k as f64)
                .collect(),
        )
    }

    /// Antiderivative vanishing at `t = 0`.
    pub fn antiderivative(&self) -> Polynomial {
        let mut out = Vec::with_capacity(self.coeffs.len() + 1);
        out.push(0.0);
        out.extend(
            self.coeffs
                .iter()
                .enumerate()
                .map(|(k, &c)| c / (k + 1) as f64),
        );
        Polynomial::new(out)
    }

    /// Coefficients of `t -> p(x0 + t)`.
    pub fn taylor_shift(&self, x0: f64) -> Polynomial {
        let mut c = self.coeffs.clone();
        let n = c.len();
        for i in 0..n {
            for j in (i..n - 1).rev() {
                c[j] += x0 * c[j + 1];
            }
        }
        Polynomial::new(c)
    }

    /// Coefficients of `t -> p(-t)`.
    pub fn reflect(&self) -> Polynomial {
        Polynomial::new(
            self.coeffs
                .iter()
                .enumerate()
                .map(|(k, &c)| if k % 2 == 1 { -c } else { c })
                .collect(),
        )
    }

    pub fn scale(&self, factor: f64) -> Polynomial {
        Polynomial::new(self.coeffs.iter().map(|c| c * factor).collect())
    }

    /// Same polynomial with its constant term replaced.
    pub fn with_constant(&self, c0: f64) -> Polynomial {
        let mut c = self.coeffs.clone();
        c[0] = c0;
        Polynomial::new(c)
    }

    /// Magnitude scale used for relative zero tests at `t`.
    fn magnitude(&self, t: f64) -> f64 {
        let a = t.abs().max(1.0);
        let mut m = 0.0;
        let mut p = 1.0;
        for &c in &self.coeffs {
            m += c.abs() * p;
            p *= a;
        }
        m
    }

    /// Real roots in the closed interval `[a, b]`, sorted ascending.
    ///
    /// Monotone pieces are delimited by the roots of the derivative; each
    /// piece with a sign change contributes one root, polished by
    /// safeguarded Newton iteration. Critical points where the polynomial
    /// vanishes to rounding accuracy are reported as (touching) roots.
    pub fn real_roots(&self, a: f64, b: f64) -> Vec<f64> {
        assert!(a <= b, "real_roots: empty interval");
        let mut roots = Vec::new();
        match self.degree() {
            None | Some(0) => return roots,
            Some(1) => {
                let r = -self.coeffs[0] / self.coeffs[1];
                if r >= a && r <= b {
                    roots.push(r);
                }
                return roots;
            }
            _ => {}
        }
        let crit = self.derivative().real_roots(a, b);
        let mut pts = vec![a];
        pts.extend(crit.into_iter().filter(|&c| c > a && c < b));
        pts.push(b);
        let vals: Vec<f64> = pts.iter().map(|&x| self.eval(x)).collect();
        let touch = |x: f64, v: f64| v.abs() <= 64.0 * f64::EPSILON * self.magnitude(x);

        for (i, (&x, &v)) in pts.iter().zip(&vals).enumerate() {
            if v == 0.0 || ((i != 0 && i != pts.len() - 1) && touch(x, v)) {
                roots.push(x);
            }
        }
        for w in 0..pts.len() - 1 {
            let (l, r) = (pts[w], pts[w + 1]);
            let (fl, fr) = (vals[w], vals[w + 1]);
            if fl == 0.0 || fr == 0.0 || fl.signum() == fr.signum() {
                continue;
            }
            let dp = self.derivative();
            if let Ok(x) = roots::newton_bisect(
                |x| Ok((self.eval(x), dp.eval(x))),
                l,
                r,
                4.0 * f64::EPSILON,
            ) {
                roots.push(x);
            }
        }
        // endpoints that vanish to rounding accuracy count too
        if (roots.is_empty() || roots[0] != a)
            && touch(a, vals[0]) && vals[0] != 0.0 {
                roots.push(a);
            }
        let last = vals.len() - 1;
        if touch(b, vals[last]) && vals[last] != 0.0 {
            roots.push(b);
        }
        roots.sort_by(|x, y| x.partial_cmp(y).unwrap());
        roots.dedup_by(|x, y| (*x - *y).abs() <= 1e-13 * (1.0 + y.abs()));
        roots
    }

    /// Maximum of the polynomial on `[a, b]` and a maximizer.
    pub fn max_on(&self, a: f64, b: f64) -> (f64, f64) {
        let mut best = (self.eval(a), a);
        let mut consider = |x: f64| {
            let v = self.eval(x);
            if v > best.0 {
                best = (v, x);
            }
        };
        consider(b);
        for c in self.derivative().real_roots(a, b) {
            consider(c);
        }
        best
    }

    pub fn min_on(&self, a: f64, b: f64) -> (f64, f64) {
        let (v, x) = self.scale(-1.0).max_on(a, b);
        (-v, x)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn taylor_shift_matches_direct_evaluation() {
        let p = Polynomial::new(vec![1.0, -2.0, 0.5, 3.0]);
        let q = p.taylor_shift(0.75);
        for &t in &[-1.0, 0.0, 0.3, 2.0] {
            assert!((q.eval(t) - p.eval(0.75 + t)).abs() < 1e-12);
        }
        assert_eq!(
            Polynomial::new(vec![0.0, 0.0, 1.0]).taylor_shift(1.0).coeffs(),
            &[1.0, 2.0, 1.0]
        );
    }

    #[test]
    fn antiderivative_then_derivative_is_identity() {
        let p = Polynomial::new(vec![2.0, -1.0, 4.0]);
        assert_eq!(p.antiderivative().derivative(), p);
        assert_eq!(p.antiderivative().eval(0.0), 0.0);
    }

    #[test]
    fn roots_of_cubic_with_three_real_roots() {
        // (x - 0.1)(x - 0.5)(x - 2)
        let p = Polynomial::new(vec![-0.1, 1.25, -2.6, 1.0]);
        let r = p.real_roots(-1.0, 3.0);
        assert_eq!(r.len(), 3);
        for (got, want) in r.iter().zip([0.1, 0.5, 2.0]) {
            assert!((got - want).abs() < 1e-14, "{got} vs {want}");
        }
        assert_eq!(p.real_roots(0.2, 0.4), Vec::<f64>::new());
    }

    #[test]
    fn touching_root_is_reported() {
        // (x - 0.3)^2
        let p = Polynomial::new(vec![0.09, -0.6, 1.0]);
        let r = p.real_roots(0.0, 1.0);
        assert_eq!(r.len(), 1);
        assert!((r[0] - 0.3).abs() < 1e-12);
    }

    #[test]
    fn roots_at_interval_endpoints() {
        let p = Polynomial::new(vec![0.0, 1.0, -1.0]); // x(1 - x)
        let r = p.real_roots(0.0, 1.0);
        assert_eq!(r, vec![0.0, 1.0]);
    }

    #[test]
    fn zero_and_constant_polynomials_have_no_isolated_roots() {
        assert!(Polynomial::constant(0.0).real_roots(0.0, 1.0).is_empty());
        assert!(Polynomial::constant(2.0).real_roots(0.0, 1.0).is_empty());
        assert_eq!(Polynomial::new(vec![1.0, 0.0, 0.0]).degree(), Some(0));
    }

    #[test]
    fn max_on_interval() {
        let p = Polynomial::new(vec![0.0, 1.0, -1.0]);
        let (v, x) = p.max_on(0.0, 1.0);
        assert!((v - 0.25).abs() < 1e-15 && (x - 0.5).abs() < 1e-12);
        let (v, _) = p.min_on(0.0, 1.0);
        assert_eq!(v, 0.0);
    }
}

//! Univariate polynomials with rational coefficients and real root isolation.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::Rational;

/// Coefficients from the constant term upward, without trailing zeros.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Poly(Vec<Rational>);

impl Poly {
    pub fn new(mut coeffs: Vec<Rational>) -> Self {
        while coeffs.last().is_some_and(Rational::is_zero) {
            coeffs.pop();
        }
        Poly(coeffs)
    }

    pub fn from_i64(coeffs: &[i64]) -> Self {
        Self::new(coeffs.iter().map(|&c| Rational::from(c)).collect())
    }

    pub fn zero() -> Self {
        Poly(Vec::new())
    }

    pub fn constant(c: Rational) -> Self {
        Self::new(vec![c])
    }

    /// The polynomial `x`.
    pub fn x() -> Self {
        Self::from_i64(&[0, 1])
    }

    pub fn coeffs(&self) -> &[Rational] {
        &self.0
    }

    pub fn is_zero(&self) -> bool {
        self.0.is_empty()
    }

    /// Degree; the zero polynomial reports 0.
    pub fn degree(&self) -> usize {
        self.0.len().saturating_sub(1)
    }

    pub fn leading(&self) -> Rational {
        self.0.last().cloned().unwrap_or_else(Rational::zero)
    }

    pub fn eval(&self, x: &Rational) -> Rational {
        let mut acc = Rational::zero();
        for c in self.0.iter().rev() {
            acc = &(&acc * x) + c;
        }
        acc
    }

    pub fn eval_f64(&self, x: f64) -> f64 {
        self.0.iter().rev().fold(0.0, |acc, c| acc * x + c.to_f64())
    }

    pub fn derivative(&self) -> Self {
        Self::new(
            self.0
                .iter()
                .enumerate()
                .skip(1)
                .map(|(j, c)| c * &Rational::from(j))
                .collect(),
        )
    }

    pub fn add(&self, other: &Poly) -> Self {
        let n = self.0.len().max(other.0.len());
        let z = Rational::zero();
        Self::new(
            (0..n)
                .map(|j| self.0.get(j).unwrap_or(&z) + other.0.get(j).unwrap_or(&z))
                .collect(),
        )
    }

    pub fn scale(&self, s: &Rational) -> Self {
        Self::new(self.0.iter().map(|c| c * s).collect())
    }

    pub fn sub(&self, other: &Poly) -> Self {
        self.add(&other.scale(&-Rational::one()))
    }

    pub fn mul(&self, other: &Poly) -> Self {
        if self.is_zero() || other.is_zero() {
            return Self::zero();
        }
        let mut out = vec![Rational::zero(); self.0.len() + other.0.len() - 1];
        for (i, a) in self.0.iter().enumerate() {
            for (j, b) in other.0.iter().enumerate() {
                out[i + j] += a * b;
            }
        }
        Self::new(out)
    }

    /// Quotient and remainder of division by a nonzero polynomial.
    pub fn div_rem(&self, d: &Poly) -> (Self, Self) {
        assert!(!d.is_zero(), "division by the zero polynomial");
        let mut r = self.0.clone();
        let mut quot = vec![Rational::zero(); r.len().saturating_sub(d.0.len()) + 1];
        let dl = d.leading();
        while r.len() >= d.0.len() && !r.is_empty() {
            let shift = r.len() - d.0.len();
            let f = r.last().expect("nonempty") / &dl;
            for (j, c) in d.0.iter().enumerate() {
                r[shift + j] -= &f * c;
            }
            quot[shift] = f;
            r.pop();
            while r.last().is_some_and(Rational::is_zero) {
                r.pop();
            }
        }
        (Self::new(quot), Self::new(r))
    }

    pub fn rem(&self, d: &Poly) -> Self {
        self.div_rem(d).1
    }

    /// Monic greatest common divisor; zero only if both inputs are zero.
    pub fn gcd(&self, other: &Poly) -> Self {
        let (mut a, mut b) = (self.clone(), other.clone());
        while !b.is_zero() {
            let r = a.rem(&b);
            a = b;
            b = r;
        }
        if a.is_zero() {
            return a;
        }
        let lc = a.leading().recip();
        a.scale(&lc)
    }

    /// Same roots, each with multiplicity one.
    pub fn squarefree(&self) -> Self {
        if self.degree() == 0 {
            return self.clone();
        }
        self.div_rem(&self.gcd(&self.derivative())).0
    }

    /// Sturm sequence `p, p', -rem(...)`, each scaled by a positive constant.
    pub fn sturm(&self) -> Vec<Poly> {
        let mut seq = vec![self.clone()];
        if self.is_zero() {
            return seq;
        }
        let d = self.derivative();
        if d.is_zero() {
            return seq;
        }
        seq.push(d);
        loop {
            let k = seq.len();
            let r = seq[k - 2].rem(&seq[k - 1]);
            if r.is_zero() {
                break;
            }
            let lc = r.leading().abs();
            seq.push(r.scale(&(-lc.recip())));
        }
        seq
    }

    /// Number of distinct real roots in the half-open interval `(a, b]`.
    pub fn count_roots(seq: &[Poly], a: &Rational, b: &Rational) -> usize {
        let va = sign_changes(seq, a);
        let vb = sign_changes(seq, b);
        va.saturating_sub(vb)
    }

    /// Isolates the distinct real roots in the open interval `(lo, hi)` and
    /// shrinks each bracket below `width`. Brackets are returned in ascending order.
    pub fn real_roots(&self, lo: &Rational, hi: &Rational, width: &Rational) -> Vec<RootBracket> {
        if self.is_zero() || self.degree() == 0 {
            return Vec::new();
        }
        // Sturm counts at an endpoint that is a repeated root are unreliable.
        let p = self.squarefree();
        let seq = p.sturm();
        let mut out = Vec::new();
        // (a, b] intervals; exclude hi itself.
        let mut stack = vec![(lo.clone(), hi.clone())];
        while let Some((a, b)) = stack.pop() {
            let mut cnt = Poly::count_roots(&seq, &a, &b);
            if b == *hi && p.eval(&b).is_zero() {
                cnt -= 1;
            }
            if cnt == 0 {
                continue;
            }
            if cnt == 1 {
                out.push(p.refine(&seq, a, b, hi, width));
                continue;
            }
            let mid = Rational::midpoint(&a, &b);
            stack.push((mid.clone(), b));
            stack.push((a, mid));
        }
        out.sort_by(|x, y| x.lo.cmp(&y.lo));
        out
    }

    fn refine(&self, seq: &[Poly], mut a: Rational, mut b: Rational, hi: &Rational, width: &Rational) -> RootBracket {
        loop {
            // The root is in (a, b]; if b is the excluded endpoint it is strictly inside.
            if self.eval(&b).is_zero() && b != *hi {
                return RootBracket::exact(b);
            }
            if &(&b - &a) < width {
                return RootBracket { lo: a, hi: b };
            }
            let mid = Rational::midpoint(&a, &b);
            if self.eval(&mid).is_zero() {
                return RootBracket::exact(mid);
            }
            if Poly::count_roots(seq, &a, &mid) == 1 {
                b = mid;
            } else {
                a = mid;
            }
        }
    }
}

fn sign_changes(seq: &[Poly], x: &Rational) -> usize {
    let mut last = 0;
    let mut changes = 0;
    for p in seq {
        let s = p.eval(x).signum();
        if s != 0 {
            if last != 0 && s != last {
                changes += 1;
            }
            last = s;
        }
    }
    changes
}

/// A root known to lie in `[lo, hi]`; `lo == hi` when found exactly.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RootBracket {
    pub lo: Rational,
    pub hi: Rational,
}

impl RootBracket {
    pub fn exact(x: Rational) -> Self {
        Self { lo: x.clone(), hi: x }
    }

    pub fn is_exact(&self) -> bool {
        self.lo == self.hi
    }

    pub fn midpoint(&self) -> Rational {
        Rational::midpoint(&self.lo, &self.hi)
    }

    pub fn approx(&self) -> f64 {
        self.midpoint().to_f64()
    }
}

impl fmt::Display for Poly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        let parts: Vec<String> = self.0.iter().map(|c| c.to_string()).collect();
        write!(f, "{}", parts.join(","))
    }
}

impl FromStr for Poly {
    type Err = Error;

    /// Comma-separated coefficients from the constant term upward, e.g. `"-1,8,-8"`.
    fn from_str(s: &str) -> Result<Self> {
        let coeffs = s
            .split(',')
            .map(|t| {
                t.trim()
                    .parse::<Rational>()
                    .map_err(|e| Error::Invalid(e.to_string()))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Poly::new(coeffs))
    }
}

/// `2^-bits` as a rational.
pub fn pow2_inv(bits: u32) -> Rational {
    Rational::from_bigints(1.into(), num_bigint::BigInt::from(1u8) << bits)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::q;

    #[test]
    fn arithmetic() {
        let p = Poly::from_i64(&[-1, 8, -8]);
        assert_eq!(p.eval(&q(1, 2)), q(1, 1));
        assert_eq!(p.derivative(), Poly::from_i64(&[8, -16]));
        assert_eq!(p.to_string(), "-1,8,-8");
        assert_eq!("-1, 8, -8".parse::<Poly>().unwrap(), p);
        let x2m1 = Poly::from_i64(&[-1, 0, 1]);
        assert_eq!(x2m1.rem(&Poly::from_i64(&[-1, 1])), Poly::zero());
        assert_eq!(Poly::from_i64(&[1, 1]).mul(&Poly::from_i64(&[-1, 1])), x2m1);
    }

    #[test]
    fn isolates_roots() {
        // 8x^2 - 8x + 1 has roots (2 -+ sqrt 2) / 4.
        let p = Poly::from_i64(&[1, -8, 8]);
        let roots = p.real_roots(&q(0, 1), &q(1, 1), &pow2_inv(45));
        assert_eq!(roots.len(), 2);
        let want = [(2.0 - 2f64.sqrt()) / 4.0, (2.0 + 2f64.sqrt()) / 4.0];
        for (r, w) in roots.iter().zip(want) {
            assert!((r.approx() - w).abs() < 1e-12);
        }
        // Exact rational and repeated roots.
        let p = Poly::from_i64(&[1, -4, 4]);
        let roots = p.real_roots(&q(0, 1), &q(1, 1), &pow2_inv(40));
        assert_eq!(roots, vec![RootBracket::exact(q(1, 2))]);
        let p = Poly::from_i64(&[0, 1]);
        assert!(p.real_roots(&q(0, 1), &q(1, 1), &pow2_inv(40)).is_empty());
        // Double root at the left endpoint plus one inside.
        let p = Poly::from_i64(&[0, 0, -1, 2]);
        let roots = p.real_roots(&q(0, 1), &q(1, 1), &pow2_inv(40));
        assert_eq!(roots, vec![RootBracket::exact(q(1, 2))]);
        assert_eq!(p.squarefree(), Poly::from_i64(&[0, -1, 2]));
    }
}

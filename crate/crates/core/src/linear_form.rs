//! Coefficients of the form `a + b·α` and the derangement-gap terms built from them.
//!
//! Every term family in the crate has the shape `scale · (D_k − α)` with
//! `D_k = !k / k!`. At `α = 1/e` the difference `D_k − 1/e` equals
//! `(−1)^k T(k) / k!`, where `T(k)` is the positive scaled tail from
//! [`crate::exact::scaled_e_tail_enclosure`]. Evaluating through `T(k)` avoids
//! the catastrophic cancellation of subtracting two nearly equal numbers.

use std::fmt;
use std::str::FromStr;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

use crate::error::{LabError, Result};
use crate::exact::{derangement_ratio, factorial, scaled_e_tail_enclosure, RationalInterval};
use crate::real::{const_e, PrecisionConfig, PrecisionReal};

/// Exact coefficient pair for `a + b·α`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LinearFormCoefficient {
    pub a: BigRational,
    pub b: BigRational,
}

impl LinearFormCoefficient {
    pub fn new(a: BigRational, b: BigRational) -> Self {
        Self { a, b }
    }

    /// Exact value at a rational `α`.
    pub fn at_rational(&self, alpha: &BigRational) -> BigRational {
        &self.a + &self.b * alpha
    }

    /// Numeric value at any `α`. Suffers cancellation near a root; use
    /// [`DerangementGap::evaluate`] for terms of that family.
    pub fn at(&self, alpha: &Alpha, prec: u32) -> PrecisionReal {
        match alpha {
            Alpha::Exact(q) => PrecisionReal::from_rational(&self.at_rational(q), prec),
            _ => {
                let a = PrecisionReal::from_rational(&self.a, prec);
                &a + &alpha.to_real(prec).mul_rational(&self.b)
            }
        }
    }
}

/// The free coefficient `α`.
#[derive(Debug, Clone)]
pub enum Alpha {
    /// An exact rational value.
    Exact(BigRational),
    /// `1/e + offset` with an exact rational offset.
    InvE { offset: BigRational },
    /// Any other real value given as a ball.
    Real(PrecisionReal),
}

impl Alpha {
    pub fn inv_e() -> Self {
        Alpha::InvE {
            offset: BigRational::zero(),
        }
    }

    pub fn rational(num: i64, den: i64) -> Self {
        Alpha::Exact(BigRational::new(BigInt::from(num), BigInt::from(den)))
    }

    /// True only for the symbolic value `1/e`.
    pub fn is_inv_e(&self) -> bool {
        matches!(self, Alpha::InvE { offset } if offset.is_zero())
    }

    pub fn to_real(&self, prec: u32) -> PrecisionReal {
        match self {
            Alpha::Exact(q) => PrecisionReal::from_rational(q, prec),
            Alpha::InvE { offset } => {
                &inv_e(prec) + &PrecisionReal::from_rational(offset, prec)
            }
            Alpha::Real(x) => x.with_prec(prec),
        }
    }

    /// `1/e − α` as a ball, exact zero for the symbolic `1/e`.
    pub fn gap_from_inv_e(&self, prec: u32) -> PrecisionReal {
        match self {
            Alpha::InvE { offset } => -PrecisionReal::from_rational(offset, prec),
            other => &inv_e(prec) - &other.to_real(prec),
        }
    }

    /// Parse `"1/e"`, `"1/e+δ"`, `"1/e-δ"`, `"p/q"` or a decimal such as `"0.25"` or `"3e-2"`.
    pub fn parse(token: &str) -> Result<Self> {
        let t = token.trim();
        if let Some(rest) = t.strip_prefix("1/e") {
            let rest = rest.trim();
            if rest.is_empty() {
                return Ok(Alpha::inv_e());
            }
            let (sign, num) = match rest.as_bytes()[0] {
                b'+' => (1, &rest[1..]),
                b'-' => (-1, &rest[1..]),
                _ => return Err(bad_alpha(token)),
            };
            let off = parse_rational(num.trim()).ok_or_else(|| bad_alpha(token))?;
            let offset = if sign < 0 { -off } else { off };
            return Ok(Alpha::InvE { offset });
        }
        parse_rational(t).map(Alpha::Exact).ok_or_else(|| bad_alpha(token))
    }
}

impl FromStr for Alpha {
    type Err = LabError;

    fn from_str(s: &str) -> Result<Self> {
        Alpha::parse(s)
    }
}

impl fmt::Display for Alpha {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Alpha::Exact(q) => write!(f, "{q}"),
            Alpha::InvE { offset } if offset.is_zero() => write!(f, "1/e"),
            Alpha::InvE { offset } if offset.is_negative() => write!(f, "1/e-{}", -offset),
            Alpha::InvE { offset } => write!(f, "1/e+{offset}"),
            Alpha::Real(x) => write!(f, "{}", x.to_sci_string(20)),
        }
    }
}

fn bad_alpha(token: &str) -> LabError {
    LabError::Domain(format!(
        "cannot parse alpha {token:?}; expected 1/e, p/q or a decimal"
    ))
}

fn inv_e(prec: u32) -> PrecisionReal {
    // const_e takes a decimal config; the bit precision is reapplied afterwards
    let digits = ((prec as f64) / std::f64::consts::LOG2_10).ceil() as u32;
    let cfg = PrecisionConfig {
        digits: digits.max(10),
        guard_digits: 5,
    };
    const_e(&cfg).recip().expect("e is positive").with_prec(prec)
}

/// Exact rational from `p/q` or a decimal with optional exponent.
pub fn parse_rational(s: &str) -> Option<BigRational> {
    if s.is_empty() {
        return None;
    }
    if let Some((p, q)) = s.split_once('/') {
        let p = BigInt::from_str(p.trim()).ok()?;
        let q = BigInt::from_str(q.trim()).ok()?;
        if q.is_zero() {
            return None;
        }
        return Some(BigRational::new(p, q));
    }
    let (mantissa, exponent) = match s.find(['e', 'E']) {
        Some(i) => (&s[..i], i64::from_str(&s[i + 1..]).ok()?),
        None => (s, 0),
    };
    let (neg, body) = match mantissa.as_bytes().first()? {
        b'-' => (true, &mantissa[1..]),
        b'+' => (false, &mantissa[1..]),
        _ => (false, mantissa),
    };
    let (int_part, frac_part) = body.split_once('.').unwrap_or((body, ""));
    if int_part.is_empty() && frac_part.is_empty() {
        return None;
    }
    if !int_part.bytes().chain(frac_part.bytes()).all(|b| b.is_ascii_digit()) {
        return None;
    }
    if exponent.abs() > 10_000 {
        return None;
    }
    let digits = format!("{int_part}{frac_part}");
    let mut n = BigInt::from_str(if digits.is_empty() { "0" } else { &digits }).ok()?;
    if neg {
        n = -n;
    }
    let scale = exponent - frac_part.len() as i64;
    let ten = BigInt::from(10);
    let q = if scale >= 0 {
        BigRational::from_integer(n * num_traits::pow(ten, scale as usize))
    } else {
        BigRational::new(n, num_traits::pow(ten, (-scale) as usize))
    };
    Some(q)
}

/// A term `scale · (D_k − α)` with `D_k = !k/k!`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DerangementGap {
    pub k: u64,
    pub scale: BigRational,
}

impl DerangementGap {
    pub fn new(k: u64, scale: BigRational) -> Self {
        Self { k, scale }
    }

    /// Exact pair `a = scale·D_k`, `b = −scale`.
    pub fn linear_form(&self) -> LinearFormCoefficient {
        LinearFormCoefficient {
            a: &self.scale * derangement_ratio(self.k),
            b: -self.scale.clone(),
        }
    }

    /// `scale / k!` as a ball; skips the rational reduction of a large quotient.
    fn scale_over_factorial(&self, prec: u32) -> PrecisionReal {
        let den = self.scale.denom() * factorial(self.k);
        PrecisionReal::from_ratio(self.scale.numer(), &den, prec)
    }

    /// Enclosure of `T(k)` tight enough for `prec` relative bits.
    pub fn scaled_tail(&self, prec: u32) -> RationalInterval {
        let per_term = ((self.k + 2) as f64).log2();
        let extra = ((prec as f64 + 16.0) / per_term).ceil() as u64 + 2;
        scaled_e_tail_enclosure(self.k, extra)
    }

    /// `D_k − 1/e = (−1)^k T(k) / k!` as a ball with small relative radius.
    pub fn gap_at_inv_e(&self, prec: u32) -> PrecisionReal {
        let t = PrecisionReal::from_interval(&self.scaled_tail(prec), prec);
        let den = factorial(self.k);
        let v = t.checked_div(&PrecisionReal::from_bigint(&den, prec)).expect("k! > 0");
        if self.k % 2 == 0 {
            v
        } else {
            -v
        }
    }

    /// Value at `α`. Every kind of `α` goes through the `1/e` split
    /// `scale·(D_k − 1/e) + scale·(1/e − α)` so no precision is lost near the root.
    pub fn evaluate(&self, alpha: &Alpha, prec: u32) -> PrecisionReal {
        self.evaluate_with_ratio(alpha, prec, &self.scale_over_factorial(prec))
    }

    /// As [`Self::evaluate`], with `scale / k!` supplied by a caller that
    /// already tracks factorials incrementally.
    pub fn evaluate_with_ratio(
        &self,
        alpha: &Alpha,
        prec: u32,
        scale_over_factorial: &PrecisionReal,
    ) -> PrecisionReal {
        let t = PrecisionReal::from_interval(&self.scaled_tail(prec), prec);
        let signed = if self.k % 2 == 0 { t } else { -t };
        let at_root = &signed * scale_over_factorial;
        let gap = alpha.gap_from_inv_e(prec);
        if gap.is_zero_exact() {
            return at_root;
        }
        &at_root + &gap.mul_rational(&self.scale)
    }

    /// Exact value at a rational `α`.
    pub fn evaluate_exact(&self, alpha: &BigRational) -> BigRational {
        &self.scale * (derangement_ratio(self.k) - alpha)
    }

    /// Exact enclosure of the value at `α = 1/e + offset`.
    pub fn enclosure_at_inv_e(&self, offset: &BigRational, prec: u32) -> RationalInterval {
        let t = self.scaled_tail(prec);
        let mut f = &self.scale / BigRational::from_integer(factorial(self.k));
        if self.k % 2 == 1 {
            f = -f;
        }
        t.scale(&f).shift(&(-(&self.scale * offset)))
    }
}

/// `(−1)^k` as a rational.
pub(crate) fn sign_pow(k: u64) -> BigRational {
    if k % 2 == 0 {
        BigRational::one()
    } else {
        -BigRational::one()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const P: u32 = 240;

    fn q(a: i64, b: i64) -> BigRational {
        BigRational::new(BigInt::from(a), BigInt::from(b))
    }

    #[test]
    fn parse_tokens() {
        assert!(Alpha::parse("1/e").unwrap().is_inv_e());
        assert!(matches!(Alpha::parse("1/3").unwrap(), Alpha::Exact(v) if v == q(1, 3)));
        assert!(matches!(Alpha::parse("0.25").unwrap(), Alpha::Exact(v) if v == q(1, 4)));
        assert!(matches!(Alpha::parse("-1.5e-2").unwrap(), Alpha::Exact(v) if v == q(-3, 200)));
        assert!(matches!(Alpha::parse("2").unwrap(), Alpha::Exact(v) if v == q(2, 1)));
        match Alpha::parse("1/e-1e-6").unwrap() {
            Alpha::InvE { offset } => assert_eq!(offset, q(-1, 1_000_000)),
            other => panic!("{other:?}"),
        }
        for bad in ["", "abc", "1/0", "1/e*2", "1.2.3", "e"] {
            assert!(Alpha::parse(bad).is_err(), "{bad}");
        }
    }

    #[test]
    fn display_round_trips() {
        for t in ["1/e", "1/3", "1/e+1/1000", "1/e-1/7"] {
            let a = Alpha::parse(t).unwrap();
            assert_eq!(a.to_string(), t);
        }
    }

    #[test]
    fn first_derangement_gaps() {
        // D_1 = 0, D_2 = 1/2, D_3 = 1/3
        let g = DerangementGap::new(1, BigRational::one());
        assert_eq!(g.linear_form().a, q(0, 1));
        assert_eq!(g.evaluate_exact(&q(1, 3)), q(-1, 3));
        let g3 = DerangementGap::new(3, q(2, 1));
        assert_eq!(g3.linear_form(), LinearFormCoefficient::new(q(2, 3), q(-2, 1)));
    }

    #[test]
    fn root_path_matches_naive_path_at_small_k() {
        let alpha = Alpha::inv_e();
        for k in 1..30u64 {
            let g = DerangementGap::new(k, q(3, 7));
            let fast = g.evaluate(&alpha, P);
            let lf = g.linear_form();
            let naive = lf.at(&alpha, P + 200);
            assert!(fast.agrees_within(&naive.with_prec(P), 1e-60), "k={k}");
        }
    }

    #[test]
    fn root_path_keeps_relative_precision_at_large_k() {
        let g = DerangementGap::new(2000, BigRational::one());
        let v = g.evaluate(&Alpha::inv_e(), P);
        // |v| = T(k)/k! and T(k) is between 1/(k+2) and 1/(k+1)
        let rel = v.radius().div(v.abs_lower());
        let lg = v.log2_abs_approx().unwrap();
        assert!((-19_070.0..-19_040.0).contains(&lg), "{lg}");
        assert!(rel < crate::real::Mag::pow2(-200), "{rel}");
        assert!(v.is_positive());
    }

    #[test]
    fn rational_alpha_agrees_with_exact_value() {
        for k in [1u64, 2, 5, 17, 40] {
            let g = DerangementGap::new(k, q(-5, 3));
            let a = q(2, 5);
            let exact = g.evaluate_exact(&a);
            let ball = g.evaluate(&Alpha::Exact(a), P);
            assert!(ball.contains_rational(&exact), "k={k}");
        }
    }

    #[test]
    fn exact_enclosure_contains_ball_midpoint() {
        let g = DerangementGap::new(9, q(1, 1));
        let iv = g.enclosure_at_inv_e(&q(1, 100), P);
        let ball = g.evaluate(&Alpha::parse("1/e+1/100").unwrap(), P);
        assert!(iv.contains(&ball.mid_rational()) || ball.contains_rational(iv.lo()));
    }
}

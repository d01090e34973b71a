//! Configurable-precision real numbers carrying a rigorous error radius.
//!
//! A [`PrecisionReal`] is a ball `mid ± rad` where `mid = mantissa * 2^exp`
//! is a dyadic number rounded to the working precision. Every operation
//! widens the radius enough to keep the true value inside the ball.

mod elementary;
mod mag;

use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};

use num_bigint::{BigInt, Sign};
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};
use crate::exact::RationalInterval;

pub use elementary::{const_e, const_ln2, const_pi};
pub use mag::Mag;

const LOG2_10: f64 = std::f64::consts::LOG2_10;

/// Working precision in decimal digits plus guard digits.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct PrecisionConfig {
    pub digits: u32,
    pub guard_digits: u32,
}

impl PrecisionConfig {
    pub const DEFAULT_DIGITS: u32 = 60;
    pub const DEFAULT_GUARD: u32 = 10;

    pub fn new(digits: u32, guard_digits: u32) -> Result<Self> {
        if digits < 10 {
            return Err(LabError::Precondition(format!(
                "precision must be at least 10 digits, got {digits}"
            )));
        }
        if guard_digits < 5 {
            return Err(LabError::Precondition(format!(
                "guard digits must be at least 5, got {guard_digits}"
            )));
        }
        Ok(Self {
            digits,
            guard_digits,
        })
    }

    pub fn with_digits(digits: u32) -> Result<Self> {
        Self::new(digits, Self::DEFAULT_GUARD)
    }

    /// Binary working precision covering `digits + guard_digits` decimals.
    pub fn bits(&self) -> u32 {
        ((self.digits + self.guard_digits) as f64 * LOG2_10).ceil() as u32 + 4
    }

    /// `10^-digits`, the accuracy promised to callers.
    pub fn target(&self) -> Mag {
        Mag::from_f64_down(10f64.powi(-(self.digits as i32)))
    }

    /// Same config with extra guard digits, used internally by cancelling sums.
    pub fn widened(&self, extra_digits: u32) -> Self {
        Self {
            digits: self.digits,
            guard_digits: self.guard_digits + extra_digits,
        }
    }
}

impl Default for PrecisionConfig {
    fn default() -> Self {
        Self {
            digits: Self::DEFAULT_DIGITS,
            guard_digits: Self::DEFAULT_GUARD,
        }
    }
}

/// A real number enclosed in the ball `[mid - rad, mid + rad]`.
#[derive(Clone, PartialEq)]
pub struct PrecisionReal {
    man: BigInt,
    exp: i64,
    rad: Mag,
    prec: u32,
}

fn bits_of(n: &BigInt) -> i64 {
    n.bits() as i64
}

/// `n * 2^shift`, truncating toward zero when `shift < 0`.
fn shift_int(n: &BigInt, shift: i64) -> BigInt {
    if shift >= 0 {
        n << shift as usize
    } else {
        let s = (-shift) as usize;
        if n.is_negative() {
            -((-n) >> s)
        } else {
            n >> s
        }
    }
}

impl PrecisionReal {
    fn raw(man: BigInt, exp: i64, rad: Mag, prec: u32) -> Self {
        let mut r = Self {
            man,
            exp,
            rad,
            prec,
        };
        r.normalize();
        r
    }

    /// Round the midpoint to `prec` bits, charging one unit in the last place.
    fn normalize(&mut self) {
        if self.man.is_zero() {
            self.exp = 0;
            return;
        }
        let b = bits_of(&self.man);
        let excess = b - self.prec as i64;
        if excess > 0 {
            let neg = self.man.is_negative();
            let mag = self.man.magnitude();
            let half = num_bigint::BigUint::one() << (excess as usize - 1);
            let rounded = (mag + half) >> excess as usize;
            self.man = BigInt::from_biguint(if neg { Sign::Minus } else { Sign::Plus }, rounded);
            self.exp += excess;
            self.rad = self.rad.add(Mag::pow2(self.exp));
        }
        let tz = self.man.trailing_zeros().unwrap_or(0);
        if tz > 0 {
            self.man >>= tz as usize;
            self.exp += tz as i64;
        }
    }

    pub fn zero(prec: u32) -> Self {
        Self::raw(BigInt::zero(), 0, Mag::ZERO, prec)
    }

    pub fn one(prec: u32) -> Self {
        Self::from_i64(1, prec)
    }

    pub fn from_i64(v: i64, prec: u32) -> Self {
        Self::raw(BigInt::from(v), 0, Mag::ZERO, prec)
    }

    pub fn from_bigint(v: &BigInt, prec: u32) -> Self {
        Self::raw(v.clone(), 0, Mag::ZERO, prec)
    }

    /// Exact dyadic conversion of a finite `f64`.
    pub fn from_f64(x: f64, prec: u32) -> Self {
        assert!(x.is_finite(), "cannot convert non-finite f64");
        if x == 0.0 {
            return Self::zero(prec);
        }
        let bits = x.to_bits();
        let raw_exp = ((bits >> 52) & 0x7ff) as i64;
        let frac = (bits & ((1u64 << 52) - 1)) as i64;
        let (m, e) = if raw_exp == 0 {
            (frac, -1074)
        } else {
            (frac | (1i64 << 52), raw_exp - 1075)
        };
        let m = if x < 0.0 { -m } else { m };
        Self::raw(BigInt::from(m), e, Mag::ZERO, prec)
    }

    /// `num / den` rounded to `prec` bits.
    pub fn from_ratio(num: &BigInt, den: &BigInt, prec: u32) -> Self {
        assert!(!den.is_zero(), "zero denominator");
        if num.is_zero() {
            return Self::zero(prec);
        }
        let s = prec as i64 + 2 + bits_of(den) - bits_of(num);
        let (n, d) = if s >= 0 {
            (num << s as usize, den.clone())
        } else {
            (num.clone(), den << (-s) as usize)
        };
        let (q, r) = n.div_rem(&d);
        let rad = if r.is_zero() {
            Mag::ZERO
        } else {
            Mag::pow2(-s)
        };
        Self::raw(q, -s, rad, prec)
    }

    pub fn from_rational(q: &BigRational, prec: u32) -> Self {
        Self::from_ratio(q.numer(), q.denom(), prec)
    }

    /// Ball covering an exact rational interval.
    pub fn from_interval(iv: &RationalInterval, prec: u32) -> Self {
        let two = BigRational::from_integer(BigInt::from(2));
        let mid = (iv.lo() + iv.hi()) / &two;
        let half = (iv.hi() - iv.lo()) / two;
        let mut r = Self::from_rational(&mid, prec);
        r.rad = r
            .rad
            .add(Mag::from_bigint(half.numer(), 0, true).div(Mag::from_bigint(half.denom(), 0, false)));
        r
    }

    pub fn with_radius(mut self, extra: Mag) -> Self {
        self.rad = self.rad.add(extra);
        self
    }

    pub fn radius(&self) -> Mag {
        self.rad
    }

    pub fn prec(&self) -> u32 {
        self.prec
    }

    /// Same ball re-rounded to a different working precision.
    pub fn with_prec(&self, prec: u32) -> Self {
        Self::raw(self.man.clone(), self.exp, self.rad, prec)
    }

    /// Midpoint as an exact rational.
    pub fn mid_rational(&self) -> BigRational {
        if self.exp >= 0 {
            BigRational::from_integer(&self.man << self.exp as usize)
        } else {
            BigRational::new(self.man.clone(), BigInt::one() << (-self.exp) as usize)
        }
    }

    /// Exact rational interval `[mid - rad, mid + rad]`.
    pub fn to_interval(&self) -> RationalInterval {
        let mid = self.mid_rational();
        let (n, d) = self.rad.to_ratio();
        let r = BigRational::new(n, d);
        RationalInterval::new(&mid - &r, mid + r).expect("radius is nonnegative")
    }

    pub fn contains_rational(&self, q: &BigRational) -> bool {
        self.to_interval().contains(q)
    }

    /// Upper bound of `|mid|`.
    pub fn mid_mag_up(&self) -> Mag {
        Mag::from_bigint(&self.man, self.exp, true)
    }

    fn mid_mag_down(&self) -> Mag {
        Mag::from_bigint(&self.man, self.exp, false)
    }

    /// Upper bound of every `|x|` in the ball.
    pub fn abs_upper(&self) -> Mag {
        self.mid_mag_up().add(self.rad)
    }

    /// Lower bound of every `|x|` in the ball (zero when the ball straddles zero).
    pub fn abs_lower(&self) -> Mag {
        self.mid_mag_down().sub_down(self.rad)
    }

    pub fn is_zero_exact(&self) -> bool {
        self.man.is_zero() && self.rad.is_zero()
    }

    pub fn contains_zero(&self) -> bool {
        self.abs_lower().is_zero()
    }

    /// True when every point of the ball is strictly positive.
    pub fn is_positive(&self) -> bool {
        self.man.is_positive() && !self.abs_lower().is_zero()
    }

    pub fn is_negative(&self) -> bool {
        self.man.is_negative() && !self.abs_lower().is_zero()
    }

    pub fn mid_sign(&self) -> Sign {
        self.man.sign()
    }

    /// Nearest `f64` to the midpoint (saturating).
    pub fn to_f64(&self) -> f64 {
        if self.man.is_zero() {
            return 0.0;
        }
        let b = bits_of(&self.man);
        let shift = (b - 64).max(0);
        let top = shift_int(&self.man, -shift).to_f64().unwrap();
        let e = self.exp + shift;
        let half = e / 2;
        let clamp = |v: i64| v.clamp(-1100, 1100) as i32;
        top * 2f64.powi(clamp(half)) * 2f64.powi(clamp(e - half))
    }

    /// Approximate `log2 |mid|`, or `None` for a zero midpoint.
    pub fn log2_abs_approx(&self) -> Option<f64> {
        if self.man.is_zero() {
            return None;
        }
        let b = bits_of(&self.man);
        let shift = (b - 60).max(0);
        let top = shift_int(&self.man, -shift).to_f64().unwrap().abs();
        Some(top.log2() + (self.exp + shift) as f64)
    }

    /// Natural log of `|mid|` as an `f64`, usable far outside the `f64` range.
    pub fn ln_abs_approx(&self) -> Option<f64> {
        self.log2_abs_approx().map(|l| l * std::f64::consts::LN_2)
    }

    pub fn abs(&self) -> Self {
        if self.man.is_negative() {
            -self
        } else {
            self.clone()
        }
    }

    pub fn mul_pow2(&self, k: i64) -> Self {
        Self {
            man: self.man.clone(),
            exp: if self.man.is_zero() { 0 } else { self.exp + k },
            rad: self.rad.mul_pow2(k),
            prec: self.prec,
        }
    }

    pub fn mul_i64(&self, k: i64) -> Self {
        let rad = self.rad.mul_u64(k.unsigned_abs());
        Self::raw(&self.man * k, self.exp, rad, self.prec)
    }

    pub fn div_u64(&self, k: u64) -> Self {
        assert!(k > 0, "division by zero");
        self / &Self::from_i64(k as i64, self.prec)
    }

    pub fn mul_bigint(&self, k: &BigInt) -> Self {
        self * &Self::from_bigint(k, self.prec)
    }

    pub fn mul_rational(&self, q: &BigRational) -> Self {
        self * &Self::from_rational(q, self.prec)
    }

    pub fn square(&self) -> Self {
        self * self
    }

    pub fn powi(&self, n: u32) -> Self {
        let mut acc = Self::one(self.prec);
        let mut base = self.clone();
        let mut e = n;
        while e > 0 {
            if e & 1 == 1 {
                acc = &acc * &base;
            }
            e >>= 1;
            if e > 0 {
                base = base.square();
            }
        }
        acc
    }

    pub fn checked_div(&self, other: &Self) -> Result<Self> {
        let lower = other.abs_lower();
        if lower.is_zero() {
            return Err(LabError::Domain("division by a ball containing zero".into()));
        }
        let prec = self.prec.max(other.prec);
        if self.man.is_zero() {
            let rad = self.rad.div(lower);
            return Ok(Self::raw(BigInt::zero(), 0, rad, prec));
        }
        let s = prec as i64 + 2 + bits_of(&other.man) - bits_of(&self.man);
        let (n, d) = if s >= 0 {
            (&self.man << s as usize, other.man.clone())
        } else {
            (self.man.clone(), &other.man << (-s) as usize)
        };
        let q = &n / &d;
        let exp = self.exp - other.exp - s;
        // midpoint truncation is at most one unit of 2^exp
        let q_mag = Mag::from_bigint(&q, exp, true).add(Mag::pow2(exp));
        let prop = self.rad.add(q_mag.mul(other.rad)).div(lower);
        let rad = prop.add(Mag::pow2(exp));
        Ok(Self::raw(q, exp, rad, prec))
    }

    pub fn recip(&self) -> Result<Self> {
        Self::one(self.prec).checked_div(self)
    }

    pub fn exp(&self) -> Self {
        elementary::exp(self)
    }

    pub fn ln(&self) -> Result<Self> {
        elementary::ln(self)
    }

    /// `(sinh x, cosh x)` sharing one exponential.
    pub fn sinh_cosh(&self) -> (Self, Self) {
        let e = self.exp();
        let inv = e.recip().expect("exp is positive");
        let s = (&e - &inv).mul_pow2(-1);
        let c = (&e + &inv).mul_pow2(-1);
        (s, c)
    }

    /// Midpoint distance plus both radii is below `tol`, and each radius is
    /// below `tol / 4` so that a pass is not vacuous.
    pub fn agrees_within(&self, other: &Self, tol: f64) -> bool {
        let tol_m = Mag::from_f64_down(tol);
        let quarter = tol_m.mul_pow2(-2);
        if self.rad >= quarter || other.rad >= quarter {
            return false;
        }
        let diff = self - other;
        diff.abs_upper() < tol_m
    }

    /// Upper bound on `|self - other|` over both balls.
    pub fn distance_upper(&self, other: &Self) -> Mag {
        (self - other).abs_upper()
    }

    /// Compare midpoints only.
    pub fn cmp_mid(&self, other: &Self) -> Ordering {
        match (self - other).man.sign() {
            Sign::Plus => Ordering::Greater,
            Sign::Minus => Ordering::Less,
            Sign::NoSign => Ordering::Equal,
        }
    }

    /// Scientific-notation rendering of the midpoint with `digits` significant digits.
    pub fn to_sci_string(&self, digits: usize) -> String {
        if self.man.is_zero() {
            return "0".to_string();
        }
        let digits = digits.max(1);
        let l10 = self.log2_abs_approx().unwrap() / LOG2_10;
        let mut e10 = l10.floor() as i64;
        loop {
            let scale = digits as i64 - 1 - e10;
            let q = self.mid_rational() * pow10_rational(scale);
            let rounded = round_half_away(&q);
            let s = rounded.abs().to_string();
            if s.len() > digits {
                e10 += 1;
                continue;
            }
            if s.len() < digits {
                e10 -= 1;
                continue;
            }
            let sign = if rounded.is_negative() { "-" } else { "" };
            let (head, tail) = s.split_at(1);
            return if tail.is_empty() {
                format!("{sign}{head}e{e10}")
            } else {
                format!("{sign}{head}.{tail}e{e10}")
            };
        }
    }

    /// Fixed-point rendering with `decimals` digits after the point.
    pub fn to_fixed_string(&self, decimals: usize) -> String {
        let q = self.mid_rational() * pow10_rational(decimals as i64);
        let r = round_half_away(&q);
        let neg = r.is_negative();
        let mut s = r.abs().to_string();
        if s.len() <= decimals {
            s = format!("{}{}", "0".repeat(decimals + 1 - s.len()), s);
        }
        let (int, frac) = s.split_at(s.len() - decimals);
        let sign = if neg { "-" } else { "" };
        if decimals == 0 {
            format!("{sign}{int}")
        } else {
            format!("{sign}{int}.{frac}")
        }
    }
}

fn pow10_rational(k: i64) -> BigRational {
    let p = num_traits::pow(BigInt::from(10), k.unsigned_abs() as usize);
    if k >= 0 {
        BigRational::from_integer(p)
    } else {
        BigRational::new(BigInt::one(), p)
    }
}

fn round_half_away(q: &BigRational) -> BigInt {
    let two = BigInt::from(2);
    let n = q.numer() * &two + if q.is_negative() { -q.denom() } else { q.denom().clone() };
    let d = q.denom() * two;
    // truncating division of (2n ± d) / 2d
    let (quot, _) = n.div_rem(&d);
    quot
}

fn add_impl(a: &PrecisionReal, b: &PrecisionReal, negate_b: bool) -> PrecisionReal {
    let prec = a.prec.max(b.prec);
    let bman = if negate_b { -&b.man } else { b.man.clone() };
    if b.man.is_zero() {
        return PrecisionReal::raw(a.man.clone(), a.exp, a.rad.add(b.rad), prec);
    }
    if a.man.is_zero() {
        return PrecisionReal::raw(bman, b.exp, a.rad.add(b.rad), prec);
    }
    // fold an operand far below the other's last place into the radius
    let top_a = a.exp + bits_of(&a.man);
    let top_b = b.exp + bits_of(&b.man);
    let gap = prec as i64 + 8;
    if top_b < top_a - gap && top_b < a.exp {
        let rad = a.rad.add(b.abs_upper());
        return PrecisionReal::raw(a.man.clone(), a.exp, rad, prec);
    }
    if top_a < top_b - gap && top_a < b.exp {
        let rad = b.rad.add(a.abs_upper());
        return PrecisionReal::raw(bman, b.exp, rad, prec);
    }
    let e = a.exp.min(b.exp);
    let man = shift_int(&a.man, a.exp - e) + shift_int(&bman, b.exp - e);
    PrecisionReal::raw(man, e, a.rad.add(b.rad), prec)
}

fn mul_impl(a: &PrecisionReal, b: &PrecisionReal) -> PrecisionReal {
    let prec = a.prec.max(b.prec);
    let man = &a.man * &b.man;
    let rad = a
        .mid_mag_up()
        .mul(b.rad)
        .add(b.mid_mag_up().mul(a.rad))
        .add(a.rad.mul(b.rad));
    PrecisionReal::raw(man, a.exp + b.exp, rad, prec)
}

impl<'a> Add<&'a PrecisionReal> for &'a PrecisionReal {
    type Output = PrecisionReal;
    fn add(self, rhs: &PrecisionReal) -> PrecisionReal {
        add_impl(self, rhs, false)
    }
}

impl<'a> Sub<&'a PrecisionReal> for &'a PrecisionReal {
    type Output = PrecisionReal;
    fn sub(self, rhs: &PrecisionReal) -> PrecisionReal {
        add_impl(self, rhs, true)
    }
}

impl<'a> Mul<&'a PrecisionReal> for &'a PrecisionReal {
    type Output = PrecisionReal;
    fn mul(self, rhs: &PrecisionReal) -> PrecisionReal {
        mul_impl(self, rhs)
    }
}

impl<'a> Div<&'a PrecisionReal> for &'a PrecisionReal {
    type Output = PrecisionReal;
    /// Panics when the divisor ball contains zero; use `checked_div` otherwise.
    fn div(self, rhs: &PrecisionReal) -> PrecisionReal {
        self.checked_div(rhs).expect("divisor ball contains zero")
    }
}

impl Neg for &PrecisionReal {
    type Output = PrecisionReal;
    fn neg(self) -> PrecisionReal {
        PrecisionReal {
            man: -&self.man,
            exp: self.exp,
            rad: self.rad,
            prec: self.prec,
        }
    }
}

impl Neg for PrecisionReal {
    type Output = PrecisionReal;
    fn neg(self) -> PrecisionReal {
        -&self
    }
}

macro_rules! owned_binop {
    ($tr:ident, $m:ident) => {
        impl $tr<PrecisionReal> for PrecisionReal {
            type Output = PrecisionReal;
            fn $m(self, rhs: PrecisionReal) -> PrecisionReal {
                (&self).$m(&rhs)
            }
        }
        impl<'a> $tr<&'a PrecisionReal> for PrecisionReal {
            type Output = PrecisionReal;
            fn $m(self, rhs: &PrecisionReal) -> PrecisionReal {
                (&self).$m(rhs)
            }
        }
        impl<'a> $tr<PrecisionReal> for &'a PrecisionReal {
            type Output = PrecisionReal;
            fn $m(self, rhs: PrecisionReal) -> PrecisionReal {
                self.$m(&rhs)
            }
        }
    };
}

owned_binop!(Add, add);
owned_binop!(Sub, sub);
owned_binop!(Mul, mul);
owned_binop!(Div, div);

impl fmt::Debug for PrecisionReal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} ± {:?}", self.to_sci_string(24), self.rad)
    }
}

impl fmt::Display for PrecisionReal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let digits = f.precision().unwrap_or(20);
        write!(f, "{}", self.to_sci_string(digits))
    }
}

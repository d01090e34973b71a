//! Unsigned magnitude bounds with a short mantissa and an unbounded exponent.
//!
//! Every constructor and operation states its rounding direction. Upper
//! bounds never underflow to zero, so radii stay honest for values far
//! below the `f64` range (tail remainders like `1/300!`).

use std::cmp::Ordering;
use std::fmt;

use num_bigint::{BigInt, BigUint};
use num_traits::{ToPrimitive, Zero};

const BITS: u32 = 30;
const LOW: u64 = 1 << (BITS - 1);
const HIGH: u64 = 1 << BITS;

/// A nonnegative number `man * 2^exp` with `man` normalized to 30 bits.
#[derive(Clone, Copy, PartialEq, Eq, Hash)]
pub struct Mag {
    man: u64,
    exp: i64,
}

impl Mag {
    pub const ZERO: Mag = Mag { man: 0, exp: 0 };

    pub fn is_zero(&self) -> bool {
        self.man == 0
    }

    /// Exactly `2^e`.
    pub fn pow2(e: i64) -> Mag {
        Mag {
            man: LOW,
            exp: e - (BITS as i64 - 1),
        }
    }

    pub fn one() -> Mag {
        Mag::pow2(0)
    }

    fn norm(man: u128, exp: i64, up: bool) -> Mag {
        if man == 0 {
            return Mag::ZERO;
        }
        let bits = 128 - man.leading_zeros();
        if bits > BITS {
            let shift = bits - BITS;
            let mut m = (man >> shift) as u64;
            let lost = man & ((1u128 << shift) - 1) != 0;
            if up && lost {
                m += 1;
                if m == HIGH {
                    return Mag {
                        man: LOW,
                        exp: exp + shift as i64 + 1,
                    };
                }
            }
            Mag {
                man: m,
                exp: exp + shift as i64,
            }
        } else {
            let shift = BITS - bits;
            Mag {
                man: (man << shift) as u64,
                exp: exp - shift as i64,
            }
        }
    }

    pub fn from_u64(v: u64) -> Mag {
        Mag::norm(v as u128, 0, true)
    }

    /// Upper bound of `|x|` for a finite `f64`.
    pub fn from_f64_up(x: f64) -> Mag {
        Self::from_f64(x, true)
    }

    /// Lower bound of `|x|` for a finite `f64`.
    pub fn from_f64_down(x: f64) -> Mag {
        Self::from_f64(x, false)
    }

    fn from_f64(x: f64, up: bool) -> Mag {
        assert!(x.is_finite(), "non-finite magnitude");
        let x = x.abs();
        if x == 0.0 {
            return Mag::ZERO;
        }
        let bits = x.to_bits();
        let raw_exp = ((bits >> 52) & 0x7ff) as i64;
        let frac = bits & ((1u64 << 52) - 1);
        let (man, exp) = if raw_exp == 0 {
            (frac, -1074)
        } else {
            (frac | (1u64 << 52), raw_exp - 1075)
        };
        Mag::norm(man as u128, exp, up)
    }

    /// Bound of `|n| * 2^exp`.
    pub fn from_bigint(n: &BigInt, exp: i64, up: bool) -> Mag {
        Self::from_biguint(n.magnitude(), exp, up)
    }

    pub fn from_biguint(n: &BigUint, exp: i64, up: bool) -> Mag {
        if n.is_zero() {
            return Mag::ZERO;
        }
        let bits = n.bits();
        if bits <= 64 {
            return Mag::norm(n.to_u64().unwrap() as u128, exp, up);
        }
        let shift = bits - 64;
        let top: BigUint = n >> shift;
        let mut m = top.to_u64().unwrap() as u128;
        if up {
            // anything below the retained 64 bits rounds the bound up
            m += 1;
        }
        Mag::norm(m, exp + shift as i64, up)
    }

    /// `a + b` rounded up.
    pub fn add(self, other: Mag) -> Mag {
        if self.is_zero() {
            return other;
        }
        if other.is_zero() {
            return self;
        }
        let (hi, lo) = if self.exp >= other.exp {
            (self, other)
        } else {
            (other, self)
        };
        let d = hi.exp - lo.exp;
        if d > 90 {
            // lo is below one unit of hi's mantissa
            return Mag::norm(hi.man as u128 + 1, hi.exp, true);
        }
        let sum = ((hi.man as u128) << d) + lo.man as u128;
        Mag::norm(sum, lo.exp, true)
    }

    /// `max(a - b, 0)` rounded down.
    pub fn sub_down(self, other: Mag) -> Mag {
        if other.is_zero() {
            return self;
        }
        if self <= other {
            return Mag::ZERO;
        }
        let d = self.exp - other.exp;
        if d > 90 {
            return Mag::norm(self.man as u128 - 1, self.exp, false);
        }
        if d >= 0 {
            let a = (self.man as u128) << d;
            Mag::norm(a - other.man as u128, other.exp, false)
        } else {
            // other.exp > self.exp yet other < self cannot happen with normalized mantissas
            let a = self.man as u128;
            let b = (other.man as u128) << (-d);
            Mag::norm(a - b, self.exp, false)
        }
    }

    fn mul_dir(self, other: Mag, up: bool) -> Mag {
        if self.is_zero() || other.is_zero() {
            return Mag::ZERO;
        }
        Mag::norm(
            self.man as u128 * other.man as u128,
            self.exp + other.exp,
            up,
        )
    }

    /// `a * b` rounded up.
    pub fn mul(self, other: Mag) -> Mag {
        self.mul_dir(other, true)
    }

    pub fn mul_down(self, other: Mag) -> Mag {
        self.mul_dir(other, false)
    }

    fn div_dir(self, other: Mag, up: bool) -> Mag {
        assert!(!other.is_zero(), "magnitude division by zero");
        if self.is_zero() {
            return Mag::ZERO;
        }
        let num = (self.man as u128) << 64;
        let q = num / other.man as u128;
        let rem = num % other.man as u128;
        let q = if up && rem != 0 { q + 1 } else { q };
        Mag::norm(q, self.exp - other.exp - 64, up)
    }

    /// `a / b` rounded up; `b` must be nonzero.
    pub fn div(self, other: Mag) -> Mag {
        self.div_dir(other, true)
    }

    pub fn div_down(self, other: Mag) -> Mag {
        self.div_dir(other, false)
    }

    pub fn mul_pow2(self, k: i64) -> Mag {
        if self.is_zero() {
            self
        } else {
            Mag {
                man: self.man,
                exp: self.exp + k,
            }
        }
    }

    /// Upper bound `u64` times `self`.
    pub fn mul_u64(self, k: u64) -> Mag {
        self.mul(Mag::from_u64(k))
    }

    /// Smallest `e` with `self < 2^e`; `i64::MIN` for zero.
    pub fn log2_ceil(&self) -> i64 {
        if self.is_zero() {
            i64::MIN
        } else {
            self.exp + BITS as i64
        }
    }

    /// Nearest `f64`; saturates to `0.0` or `inf` outside the `f64` range.
    pub fn to_f64(&self) -> f64 {
        if self.is_zero() {
            return 0.0;
        }
        let e = self.exp + BITS as i64;
        if e > 1024 {
            return f64::INFINITY;
        }
        if e < -1074 {
            return 0.0;
        }
        let m = self.man as f64;
        // split the scaling to stay inside the exponent range of powi
        let half = self.exp / 2;
        m * 2f64.powi(half as i32) * 2f64.powi((self.exp - half) as i32)
    }

    /// Exact value as a rational `(numerator, denominator)` pair of big integers.
    pub fn to_ratio(&self) -> (BigInt, BigInt) {
        let man = BigInt::from(self.man);
        if self.exp >= 0 {
            (man << self.exp as usize, BigInt::from(1u8))
        } else {
            (man, BigInt::from(1u8) << (-self.exp) as usize)
        }
    }

    pub fn mantissa_exponent(&self) -> (u64, i64) {
        (self.man, self.exp)
    }

    pub fn max(self, other: Mag) -> Mag {
        if self >= other {
            self
        } else {
            other
        }
    }
}

impl Ord for Mag {
    fn cmp(&self, other: &Self) -> Ordering {
        match (self.is_zero(), other.is_zero()) {
            (true, true) => Ordering::Equal,
            (true, false) => Ordering::Less,
            (false, true) => Ordering::Greater,
            _ => self
                .exp
                .cmp(&other.exp)
                .then_with(|| self.man.cmp(&other.man)),
        }
    }
}

impl PartialOrd for Mag {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Debug for Mag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let v = self.to_f64();
        if v == 0.0 && !self.is_zero() {
            write!(f, "Mag(2^{})", self.log2_ceil())
        } else {
            write!(f, "Mag({v:e})")
        }
    }
}

impl fmt::Display for Mag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rounding_directions_bracket_f64() {
        for &x in &[1.0, 0.1, 3.0e-200, 7.5e100, 1.0 / 3.0] {
            let up = Mag::from_f64_up(x).to_f64();
            let down = Mag::from_f64_down(x).to_f64();
            assert!(down <= x && x <= up, "{x}: {down} {up}");
        }
    }

    #[test]
    fn tiny_values_survive_below_f64_range() {
        let tiny = Mag::pow2(-5000);
        assert!(!tiny.is_zero());
        assert_eq!(tiny.to_f64(), 0.0);
        assert!(tiny.mul(tiny) < tiny);
        assert_eq!(tiny.mul(tiny).log2_ceil(), -9999);
    }

    #[test]
    fn add_and_sub_are_directed() {
        let a = Mag::from_f64_up(1.0);
        let b = Mag::from_f64_up(1e-30);
        let s = a.add(b);
        assert!(s > a);
        let d = s.sub_down(b);
        assert!(d <= s);
        assert_eq!(a.sub_down(s), Mag::ZERO);
    }

    #[test]
    fn division_brackets() {
        let a = Mag::from_u64(1);
        let b = Mag::from_u64(3);
        assert!(a.div_down(b).to_f64() <= 1.0 / 3.0);
        assert!(a.div(b).to_f64() >= 1.0 / 3.0);
    }
}

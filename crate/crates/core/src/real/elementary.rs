//! exp, ln and the constants they need, evaluated in fixed point.
//!
//! Kernels work on integers `X` standing for `X * 2^-w` with `w` a few dozen
//! bits above the caller's precision. Each truncating step costs at most one
//! unit; the counts are charged to the result radius.

use std::sync::Mutex;

use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};

use super::{bits_of, shift_int, Mag, PrecisionConfig, PrecisionReal};
use crate::error::{LabError, Result};

/// Cached fixed-point constant, stored at the widest precision requested so far.
struct ConstCache {
    slot: Mutex<Option<(u32, BigInt)>>,
    compute: fn(u32) -> BigInt,
}

impl ConstCache {
    const fn new(compute: fn(u32) -> BigInt) -> Self {
        Self {
            slot: Mutex::new(None),
            compute,
        }
    }

    /// Value times `2^w`, accurate to a few units.
    fn get(&self, w: u32) -> BigInt {
        let mut guard = self.slot.lock().expect("constant cache poisoned");
        if let Some((cw, v)) = guard.as_ref() {
            if *cw >= w {
                return v >> (cw - w) as usize;
            }
        }
        let cw = w.max(256) + 64;
        let v = (self.compute)(cw);
        let out = &v >> (cw - w) as usize;
        *guard = Some((cw, v));
        out
    }
}

static LN2: ConstCache = ConstCache::new(ln2_fixed);
static PI: ConstCache = ConstCache::new(pi_fixed);

/// `atanh(1/n) * 2^w` by its Taylor series; error below `terms` units.
fn atanh_recip(n: u64, w: u32) -> BigInt {
    let n2 = BigInt::from(n * n);
    let mut term = (BigInt::one() << w as usize) / n;
    let mut sum = BigInt::zero();
    let mut k = 1u64;
    while !term.is_zero() {
        sum += &term / k;
        term /= &n2;
        k += 2;
    }
    sum
}

fn atan_recip(n: u64, w: u32) -> BigInt {
    let n2 = BigInt::from(n * n);
    let mut term = (BigInt::one() << w as usize) / n;
    let mut sum = BigInt::zero();
    let mut k = 1u64;
    let mut neg = false;
    while !term.is_zero() {
        let t = &term / k;
        if neg {
            sum -= t;
        } else {
            sum += t;
        }
        neg = !neg;
        term /= &n2;
        k += 2;
    }
    sum
}

fn ln2_fixed(w: u32) -> BigInt {
    let g = 16;
    (atanh_recip(3, w + g) << 1) >> g as usize
}

fn pi_fixed(w: u32) -> BigInt {
    let g = 16;
    let v = atan_recip(5, w + g) * 16 - atan_recip(239, w + g) * 4;
    v >> g as usize
}

/// Radius charged for a cached constant at `w` bits.
fn const_slack(w: u32) -> Mag {
    Mag::from_u64(16).mul_pow2(-(w as i64))
}

/// ln 2 as a ball at `prec` bits.
pub fn const_ln2(prec: u32) -> PrecisionReal {
    let w = prec + 32;
    PrecisionReal::raw(LN2.get(w), -(w as i64), const_slack(w), prec)
}

/// π as a ball at `prec` bits.
pub fn const_pi(prec: u32) -> PrecisionReal {
    let w = prec + 32;
    PrecisionReal::raw(PI.get(w), -(w as i64), const_slack(w), prec)
}

/// e from the partial sums of `Σ 1/k!`; the radius covers the truncated
/// tail and every rounding step, well below `10^-digits`.
pub fn const_e(cfg: &PrecisionConfig) -> PrecisionReal {
    let prec = cfg.bits();
    let w = prec + 32;
    let mut term = BigInt::one() << w as usize;
    let mut sum = BigInt::zero();
    let mut k = 0u64;
    while !term.is_zero() {
        sum += &term;
        k += 1;
        term /= k;
    }
    // each term carries at most one unit of error, the omitted tail below two units
    let rad = Mag::from_u64(k + 2).mul_pow2(-(w as i64));
    PrecisionReal::raw(sum, -(w as i64), rad, prec)
}

/// Bound for `e^r` with `r` given as a magnitude.
fn exp_of_mag(r: Mag) -> Mag {
    let rf = r.to_f64();
    if rf < 700.0 {
        Mag::from_f64_up(rf.exp() * (1.0 + 1e-12))
    } else if rf.is_finite() {
        Mag::pow2((rf * std::f64::consts::LOG2_E).ceil() as i64 + 1)
    } else {
        panic!("exp radius overflow");
    }
}

pub(super) fn exp(x: &PrecisionReal) -> PrecisionReal {
    let prec = x.prec;
    if x.man.is_zero() {
        // exp(0 ± r) ⊂ 1 ± (e^r - 1)
        let rad = if x.rad.is_zero() {
            Mag::ZERO
        } else if x.rad < Mag::pow2(-2) {
            x.rad.mul_pow2(1)
        } else {
            exp_of_mag(x.rad)
        };
        return PrecisionReal::one(prec).with_radius(rad);
    }
    let l2 = x.log2_abs_approx().unwrap();
    if l2 > 40.0 {
        if x.man.is_negative() {
            // e^x below 2^(-|x| log2 e) for |x| beyond 2^40
            let upper = x.to_f64().max(-1e300);
            let xu = upper + x.rad.to_f64().min(1e300);
            let e2 = (xu * std::f64::consts::LOG2_E).ceil() as i64 + 1;
            return PrecisionReal::zero(prec).with_radius(Mag::pow2(e2.min(0)));
        }
        panic!("exp overflow for argument of magnitude 2^{l2:.0}");
    }
    let xf = x.to_f64();
    let k = (xf / std::f64::consts::LN_2).round() as i64;
    let kbits = 64 - k.unsigned_abs().leading_zeros();
    let s: u32 = 10;
    let w = prec + 48 + s + kbits;
    let wi = w as i64;

    let xfix = shift_int(&x.man, x.exp + wi);
    let r = xfix - LN2.get(w) * k;
    let r = shift_int(&r, -(s as i64));

    let one = BigInt::one() << w as usize;
    let mut sum = one.clone();
    let mut term = one;
    let mut count = 0u64;
    let mut i = 1u64;
    loop {
        term = shift_int(&(&term * &r), -wi) / i;
        if term.is_zero() {
            break;
        }
        sum += &term;
        count += 1;
        i += 1;
    }
    let mut y = sum;
    for _ in 0..s {
        y = (&y * &y) >> w as usize;
    }
    let units = (count + 16 + 8 * k.unsigned_abs()) << (s + 2);
    let y_mag = Mag::from_bigint(&y, k - wi, true);
    let rad_eval = y_mag.mul(Mag::from_u64(units)).mul_pow2(-wi);
    let bound = y_mag.add(rad_eval);
    let rad_prop = if x.rad.is_zero() {
        Mag::ZERO
    } else if x.rad < Mag::pow2(-2) {
        bound.mul(x.rad).mul_pow2(1)
    } else {
        bound.mul(exp_of_mag(x.rad))
    };
    PrecisionReal::raw(y, k - wi, rad_eval.add(rad_prop), prec)
}

pub(super) fn ln(x: &PrecisionReal) -> Result<PrecisionReal> {
    if !x.is_positive() {
        return Err(LabError::Domain(format!(
            "logarithm of a ball not strictly positive: {x:?}"
        )));
    }
    let prec = x.prec;
    let b = bits_of(&x.man);
    let mut e2 = x.exp + b;
    let w = prec + 48 + (64 - e2.unsigned_abs().leading_zeros());
    let wi = w as i64;
    let one = BigInt::one() << w as usize;
    let mut m = shift_int(&x.man, wi - b);
    if &m * 10 < &one * 7 {
        m <<= 1;
        e2 -= 1;
    }
    let z = ((&m - &one) << w as usize) / (&m + &one);
    let z2 = (&z * &z) >> w as usize;
    let mut sum = z.clone();
    let mut p = z;
    let mut count = 1u64;
    let mut k = 3u64;
    loop {
        p = shift_int(&(&p * &z2), -wi);
        if p.is_zero() {
            break;
        }
        sum += &p / k;
        count += 1;
        k += 2;
    }
    let res = (sum << 1) + LN2.get(w) * e2;
    let units = 4 * count + 16 + 8 * e2.unsigned_abs();
    let rad_eval = Mag::from_u64(units).mul_pow2(-wi);
    let rad_prop = if x.rad.is_zero() {
        Mag::ZERO
    } else {
        x.rad.div(x.abs_lower())
    };
    Ok(PrecisionReal::raw(res, -wi, rad_eval.add(rad_prop), prec))
}

//! Ein, Ei, E1 and the constants γ and δ, each reachable by independent routes.
//!
//! γ comes from Euler–Maclaurin summation of `H_N − ln N` and never from the
//! relation `γ + δ/e = Ein(1)`, which the rest of the crate checks against.

use std::fmt;
use std::sync::Mutex;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};
use crate::quadrature::{integrate_finite, integrate_half_line, QuadratureConfig};
use crate::real::{const_e, Mag, PrecisionConfig, PrecisionReal};

/// Largest `|z|` accepted by [`ei`]. Beyond it callers use asymptotic tails.
pub const Z_MAX: f64 = 30.0;

/// `Ein(z) = Σ_{k≥1} (−1)^{k+1} z^k / (k·k!)`, evaluated at the precision of `z`.
pub fn ein(z: &PrecisionReal) -> PrecisionReal {
    let prec = z.prec();
    if z.is_zero_exact() {
        return PrecisionReal::zero(prec);
    }
    let zf = z.to_f64().abs();
    // the largest term is about e^{|z|}; keep that many extra bits
    let guard = (zf * std::f64::consts::LOG2_E).ceil() as u32 + 16;
    let wp = prec + guard;
    let mid = PrecisionReal::from_rational(&z.mid_rational(), wp);
    let neg = -&mid;
    let mut p = PrecisionReal::one(wp);
    let mut sum = PrecisionReal::zero(wp);
    let mut k = 1u64;
    loop {
        p = (&p * &neg).div_u64(k);
        let term = -p.div_u64(k);
        sum = &sum + &term;
        let mag = term.abs_upper();
        if (k as f64) > 2.0 * zf + 1.0 {
            // ratio of consecutive terms is below 1/2 from here on
            let floor = sum.abs_lower().mul_pow2(-(wp as i64)).max(Mag::pow2(-(wp as i64) - 64));
            if mag < floor {
                sum = sum.with_radius(mag);
                break;
            }
        }
        k += 1;
    }
    // |Ein'(z)| = |1 − e^{−z}|/|z| ≤ e^{|z|}
    let r = z.radius();
    let out = sum.with_prec(prec);
    if r.is_zero() {
        out
    } else {
        let slope = PrecisionReal::from_f64(zf + r.to_f64(), 64).exp().abs_upper();
        out.with_radius(slope.mul(r))
    }
}

/// `Ei(z) = γ + ln|z| − Ein(−z)` for `0 < |z| ≤ Z_MAX`.
pub fn ei(z: &PrecisionReal) -> Result<PrecisionReal> {
    if z.contains_zero() {
        return Err(LabError::Domain("Ei has a logarithmic pole at z = 0".into()));
    }
    let zf = z.to_f64().abs();
    if zf > Z_MAX {
        return Err(LabError::Range(format!(
            "Ei series limited to |z| <= {Z_MAX}, got |z| = {zf:.3}; use the asymptotic tail"
        )));
    }
    let prec = z.prec();
    let gamma = euler_gamma_bits(prec);
    let ln = z.abs().ln()?;
    Ok(&(&gamma + &ln) - &ein(&-z))
}

/// `(e^x − 1)/x`, accurate for `x` near zero.
pub fn exprel(x: &PrecisionReal) -> PrecisionReal {
    let prec = x.prec();
    if x.abs_upper() < Mag::pow2(-2) {
        // Σ x^k/(k+1)!; ratios below 1/4 so the tail is under a third of the last term
        let mut term = PrecisionReal::one(prec);
        let mut sum = PrecisionReal::one(prec);
        let mut k = 1u64;
        loop {
            term = (&term * x).div_u64(k + 1);
            sum = &sum + &term;
            if term.abs_upper() < Mag::pow2(-(prec as i64) - 4) {
                return sum.with_radius(term.abs_upper());
            }
            k += 1;
        }
    }
    let one = PrecisionReal::one(prec);
    (&x.exp() - &one).checked_div(x).expect("x is away from zero")
}

/// `E1(x) = ∫_x^∞ e^{−t}/t dt` for `x > 0`.
pub fn e1(x: &PrecisionReal) -> Result<PrecisionReal> {
    if !x.is_positive() {
        return Err(LabError::Domain("E1 requires a positive argument".into()));
    }
    if x.to_f64() >= 4.0 {
        return e1_continued_fraction(x);
    }
    let gamma = euler_gamma_bits(x.prec());
    Ok(&(&ein(x) - &gamma) - &x.ln()?)
}

/// Stieltjes continued fraction
/// `E1(x) = e^{−x} · 1/(x+ 1/(1+ 1/(x+ 2/(1+ 2/(x+ …)))))`.
/// Successive convergents bracket the value, so their gap bounds the error.
pub fn e1_continued_fraction(x: &PrecisionReal) -> Result<PrecisionReal> {
    if !(x.is_positive() && x.abs_lower() >= Mag::one()) {
        return Err(LabError::Precondition(
            "continued fraction for E1 needs x >= 1".into(),
        ));
    }
    let prec = x.prec();
    let wp = prec + 32;
    let xm = PrecisionReal::from_rational(&x.mid_rational(), wp);
    let one = PrecisionReal::one(wp);
    let (mut a_prev, mut a_cur) = (PrecisionReal::one(wp), PrecisionReal::zero(wp));
    let (mut b_prev, mut b_cur) = (PrecisionReal::zero(wp), PrecisionReal::one(wp));
    let mut last: Option<PrecisionReal> = None;
    let tol = Mag::pow2(-(prec as i64) - 8);
    for n in 1..200_000u64 {
        let an = if n == 1 { 1 } else { (n / 2) as i64 };
        let bn = if n % 2 == 1 { &xm } else { &one };
        let a_next = &(bn * &a_cur) + &a_prev.mul_i64(an);
        let b_next = &(bn * &b_cur) + &b_prev.mul_i64(an);
        a_prev = a_cur;
        a_cur = a_next;
        b_prev = b_cur;
        b_cur = b_next;
        // power-of-two rescaling keeps the recurrences bounded without rounding
        if let Some(l2) = b_cur.log2_abs_approx() {
            let s = -(l2.floor() as i64);
            a_prev = a_prev.mul_pow2(s);
            a_cur = a_cur.mul_pow2(s);
            b_prev = b_prev.mul_pow2(s);
            b_cur = b_cur.mul_pow2(s);
        }
        let c = a_cur.checked_div(&b_cur)?;
        if let Some(prev) = &last {
            let gap = (&c - prev).abs_upper();
            if n > 4 && gap < tol.mul(c.abs_lower()) {
                let v = &c.with_radius(gap) * &(-&xm).exp();
                let r = x.radius();
                let out = v.with_prec(prec);
                if r.is_zero() {
                    return Ok(out);
                }
                // |E1'(x)| = e^{−x}/x ≤ e^{−(x−r)}/(x−r)
                let lo = x.abs_lower().sub_down(r).to_f64().max(1e-300);
                let slope = Mag::from_f64_up((-lo).exp() / lo * (1.0 + 1e-9));
                return Ok(out.with_radius(slope.mul(r)));
            }
        }
        last = Some(c);
    }
    Err(LabError::Precondition("E1 continued fraction did not settle".into()))
}

/// Even-index Bernoulli numbers `B_0, B_2, …, B_{2m}` (with `B_1 = −1/2` omitted).
pub fn bernoulli_even(m: usize) -> Vec<BigRational> {
    // Akiyama–Tanigawa yields B_n with B_1 = +1/2; only even indices are kept
    let n_max = 2 * m;
    let mut a: Vec<BigRational> = Vec::with_capacity(n_max + 1);
    let mut out = Vec::with_capacity(m + 1);
    for n in 0..=n_max {
        a.push(BigRational::new(BigInt::one(), BigInt::from(n + 1)));
        for j in (1..=n).rev() {
            let diff = &a[j - 1] - &a[j];
            a[j - 1] = diff * BigRational::from_integer(BigInt::from(j));
        }
        if n % 2 == 0 {
            out.push(a[0].clone());
        }
    }
    out
}

static GAMMA_CACHE: Mutex<Option<PrecisionReal>> = Mutex::new(None);

/// γ by Euler–Maclaurin:
/// `γ = H_N − ln N − 1/(2N) + Σ_{j=1}^{m} B_{2j}/(2j N^{2j}) + R`,
/// with `|R|` below the first omitted correction.
pub fn gamma_euler_maclaurin(prec: u32) -> PrecisionReal {
    let wp = prec + 16;
    let n = (prec as u64 * 3) / 10 + 10;
    let mut h = BigRational::zero();
    for k in 1..=n {
        h += BigRational::new(BigInt::one(), BigInt::from(k));
    }
    let nn = BigRational::from_integer(BigInt::from(n));
    let mut corr = -BigRational::new(BigInt::one(), BigInt::from(2 * n));
    let target = Mag::pow2(-(wp as i64));
    let mut m = 8;
    let (bern, omitted) = loop {
        let b = bernoulli_even(m + 1);
        let last = &b[m + 1] / (BigRational::from_integer(BigInt::from(2 * m + 2)) * pow(&nn, 2 * m + 2));
        let bound = ratio_mag_up(&last.abs());
        if bound < target || m > 400 {
            break (b, bound);
        }
        m += 8;
    };
    for j in 1..=m {
        corr += &bern[j] / (BigRational::from_integer(BigInt::from(2 * j)) * pow(&nn, 2 * j));
    }
    let exact = PrecisionReal::from_rational(&(h + corr), wp);
    let ln_n = PrecisionReal::from_i64(n as i64, wp).ln().expect("N > 0");
    (&exact - &ln_n).with_radius(omitted).with_prec(prec)
}

/// γ = −∫₀^∞ ln t · e^{−t} dt by exp-sinh quadrature.
pub fn gamma_integral(prec: u32, quad: &QuadratureConfig) -> Result<PrecisionReal> {
    let zero = PrecisionReal::zero(prec);
    let q = integrate_half_line(|t| Ok(&t.ln()? * &(-t).exp()), &zero, quad, prec)?;
    Ok(-q.value)
}

pub(crate) fn euler_gamma_bits(prec: u32) -> PrecisionReal {
    let mut cache = GAMMA_CACHE.lock().expect("gamma cache poisoned");
    if let Some(g) = cache.as_ref() {
        if g.prec() >= prec {
            return g.with_prec(prec);
        }
    }
    let g = gamma_euler_maclaurin(prec);
    *cache = Some(g.clone());
    g
}

/// The Euler–Mascheroni constant at the configured precision.
pub fn euler_gamma(cfg: &PrecisionConfig) -> PrecisionReal {
    euler_gamma_bits(cfg.bits())
}

/// δ = ∫₀^∞ e^{−t}/(1+t) dt by exp-sinh quadrature.
pub fn delta_integral(prec: u32, quad: &QuadratureConfig) -> Result<PrecisionReal> {
    let zero = PrecisionReal::zero(prec);
    let one = PrecisionReal::one(prec);
    let q = integrate_half_line(
        |t| (-t).exp().checked_div(&(&one + t)),
        &zero,
        quad,
        prec,
    )?;
    Ok(q.value)
}

/// δ = −e·Ei(−1).
pub fn delta_from_ei(cfg: &PrecisionConfig) -> PrecisionReal {
    let prec = cfg.bits();
    let e = const_e(cfg).with_prec(prec);
    let ei_m1 = ei(&PrecisionReal::from_i64(-1, prec)).expect("-1 is inside the series range");
    -(&e * &ei_m1)
}

/// The Euler–Gompertz constant from its defining integral.
///
/// The Ei route reduces to `e·(Ein(1) − γ)`, so checks of `γ + δ/e = Ein(1)`
/// must use this value to stay meaningful.
pub fn gompertz_delta(cfg: &PrecisionConfig) -> Result<PrecisionReal> {
    delta_integral(cfg.bits(), &QuadratureConfig::for_precision(cfg))
}

/// `Ein(1) = ∫₀¹ (1 − e^{−t})/t dt` by tanh-sinh quadrature.
pub fn ein1_integral(prec: u32, quad: &QuadratureConfig) -> Result<PrecisionReal> {
    let zero = PrecisionReal::zero(prec);
    let one = PrecisionReal::one(prec);
    let q = integrate_finite(|t| Ok(exprel(&-t)), &zero, &one, quad, prec)?;
    Ok(q.value)
}

/// `Ei(1) = γ + ∫₀¹ (e^t − 1)/t dt` by tanh-sinh quadrature.
pub fn ei1_integral(prec: u32, quad: &QuadratureConfig) -> Result<PrecisionReal> {
    let zero = PrecisionReal::zero(prec);
    let one = PrecisionReal::one(prec);
    let q = integrate_finite(|t| Ok(exprel(t)), &zero, &one, quad, prec)?;
    Ok(&euler_gamma_bits(prec) + &q.value)
}

/// Which constant a [`ConstantReport`] describes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ConstantName {
    Gamma,
    Delta,
    Ein1,
    Ei1,
}

impl ConstantName {
    pub const ALL: [ConstantName; 4] = [
        ConstantName::Gamma,
        ConstantName::Delta,
        ConstantName::Ein1,
        ConstantName::Ei1,
    ];
}

impl fmt::Display for ConstantName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            ConstantName::Gamma => "gamma",
            ConstantName::Delta => "delta",
            ConstantName::Ein1 => "ein1",
            ConstantName::Ei1 => "ei1",
        };
        f.write_str(s)
    }
}

/// A constant computed along several independent routes.
#[derive(Debug, Clone)]
pub struct ConstantReport {
    pub name: ConstantName,
    pub routes: Vec<(String, PrecisionReal)>,
    pub max_pairwise_discrepancy: Mag,
}

impl ConstantReport {
    fn from_routes(name: ConstantName, routes: Vec<(String, PrecisionReal)>) -> Self {
        let mut worst = Mag::ZERO;
        for i in 0..routes.len() {
            for j in i + 1..routes.len() {
                worst = worst.max(routes[i].1.distance_upper(&routes[j].1));
            }
        }
        Self {
            name,
            routes,
            max_pairwise_discrepancy: worst,
        }
    }

    /// Value from the primary route.
    pub fn value(&self) -> &PrecisionReal {
        &self.routes[0].1
    }
}

/// Evaluate one constant along every route.
pub fn constant_report(
    name: ConstantName,
    cfg: &PrecisionConfig,
    quad: &QuadratureConfig,
) -> Result<ConstantReport> {
    let prec = cfg.bits();
    let routes = match name {
        ConstantName::Gamma => vec![
            ("euler-maclaurin".to_string(), euler_gamma(cfg)),
            ("log-integral".to_string(), gamma_integral(prec, quad)?),
        ],
        ConstantName::Delta => vec![
            ("defining-integral".to_string(), delta_integral(prec, quad)?),
            ("ei-series".to_string(), delta_from_ei(cfg)),
        ],
        ConstantName::Ein1 => vec![
            ("series".to_string(), ein(&PrecisionReal::one(prec))),
            ("integral".to_string(), ein1_integral(prec, quad)?),
        ],
        ConstantName::Ei1 => vec![
            ("series".to_string(), ei(&PrecisionReal::one(prec))?),
            ("integral".to_string(), ei1_integral(prec, quad)?),
        ],
    };
    Ok(ConstantReport::from_routes(name, routes))
}

fn pow(q: &BigRational, e: usize) -> BigRational {
    num_traits::pow(q.clone(), e)
}

/// Upper bound of a nonnegative rational as a magnitude.
pub(crate) fn ratio_mag_up(q: &BigRational) -> Mag {
    Mag::from_bigint(q.numer(), 0, true).div(Mag::from_bigint(q.denom(), 0, false))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(d: u32) -> PrecisionConfig {
        PrecisionConfig::with_digits(d).unwrap()
    }

    fn q(a: i64, b: i64) -> BigRational {
        BigRational::new(BigInt::from(a), BigInt::from(b))
    }

    #[test]
    fn bernoulli_values() {
        let b = bernoulli_even(6);
        assert_eq!(b[0], q(1, 1));
        assert_eq!(b[1], q(1, 6));
        assert_eq!(b[2], q(-1, 30));
        assert_eq!(b[3], q(1, 42));
        assert_eq!(b[4], q(-1, 30));
        assert_eq!(b[5], q(5, 66));
        assert_eq!(b[6], q(-691, 2730));
    }

    #[test]
    fn ein_at_zero_and_one() {
        let p = cfg(30).bits();
        assert!(ein(&PrecisionReal::zero(p)).is_zero_exact());
        // rational oracle: partial sums of the convergent series with alternating bound
        let mut s = BigRational::zero();
        let mut fact = BigInt::one();
        for k in 1..40i64 {
            fact *= k;
            let t = BigRational::new(BigInt::one(), BigInt::from(k) * &fact);
            if k % 2 == 1 {
                s += t;
            } else {
                s -= t;
            }
        }
        let v = ein(&PrecisionReal::one(p));
        let oracle = PrecisionReal::from_rational(&s, p);
        assert!(v.agrees_within(&oracle, 1e-28));
        assert_eq!(v.to_fixed_string(6), "0.796600");
    }

    #[test]
    fn gamma_ten_digits_and_routes() {
        let c = cfg(10);
        assert_eq!(euler_gamma(&c).to_fixed_string(10), "0.5772156649");
        let c = cfg(60);
        let quad = QuadratureConfig::for_precision(&c);
        let a = gamma_euler_maclaurin(c.bits());
        let b = gamma_integral(c.bits(), &quad).unwrap();
        assert!(a.agrees_within(&b, 1e-50), "{a:?} {b:?}");
    }

    #[test]
    fn delta_ten_digits_and_routes() {
        let c = cfg(10);
        assert_eq!(gompertz_delta(&c).unwrap().to_fixed_string(10), "0.5963473623");
        let c = cfg(60);
        let quad = QuadratureConfig::for_precision(&c);
        let a = delta_from_ei(&c);
        let b = delta_integral(c.bits(), &quad).unwrap();
        assert!(a.agrees_within(&b, 1e-50));
    }

    #[test]
    fn ein_one_from_independent_constants() {
        let c = cfg(60);
        let p = c.bits();
        let g = euler_gamma(&c);
        let d = gompertz_delta(&c).unwrap();
        let e = const_e(&c).with_prec(p);
        let lhs = &g + &d.checked_div(&e).unwrap();
        assert!(lhs.agrees_within(&ein(&PrecisionReal::one(p)), 1e-40));
    }

    #[test]
    fn ei_of_one_and_errors() {
        let p = cfg(30).bits();
        let v = ei(&PrecisionReal::one(p)).unwrap();
        assert!(v.to_fixed_string(8).starts_with("1.895117"));
        assert!(matches!(ei(&PrecisionReal::zero(p)), Err(LabError::Domain(_))));
        assert!(matches!(
            ei(&PrecisionReal::from_i64(31, p)),
            Err(LabError::Range(_))
        ));
        assert!(ei(&PrecisionReal::from_i64(-30, p)).is_ok());
    }

    #[test]
    fn ei_near_zero_approaches_log_plus_gamma() {
        let p = cfg(40).bits();
        let g = euler_gamma_bits(p);
        let u = PrecisionReal::one(p).mul_pow2(-40);
        let d = &(&ei(&u).unwrap() - &u.ln().unwrap()) - &g;
        assert!(d.abs_upper().to_f64() < 2e-12);
    }

    #[test]
    fn e1_routes_agree() {
        let p = cfg(40).bits();
        for x in [4i64, 7, 12, 29, 30] {
            let xr = PrecisionReal::from_i64(x, p);
            let cf = e1_continued_fraction(&xr).unwrap();
            // cancellation in the series route costs about x·log2(e) bits
            let hp = p + 120;
            let xh = PrecisionReal::from_i64(x, hp);
            let series = (&(&ein(&xh) - &euler_gamma_bits(hp)) - &xh.ln().unwrap()).with_prec(p);
            assert!(cf.agrees_within(&series, 1e-38 * (-(x as f64)).exp().max(1e-50)), "x={x}");
        }
        assert!(e1(&PrecisionReal::zero(p)).is_err());
    }

    #[test]
    fn exprel_small_and_large() {
        let p = 200;
        let tiny = PrecisionReal::one(p).mul_pow2(-300);
        let v = exprel(&tiny);
        assert!(v.agrees_within(&PrecisionReal::one(p), 1e-55));
        let two = PrecisionReal::from_i64(2, p);
        let direct = (&two.exp() - &PrecisionReal::one(p)).div_u64(2);
        assert!(exprel(&two).agrees_within(&direct, 1e-55));
    }

    #[test]
    fn reports_have_small_discrepancy() {
        let c = cfg(30);
        let quad = QuadratureConfig::for_precision(&c);
        for name in ConstantName::ALL {
            let r = constant_report(name, &c, &quad).unwrap();
            assert!(r.routes.len() >= 2);
            assert!(r.max_pairwise_discrepancy.to_f64() < 1e-28, "{name}: {}", r.max_pairwise_discrepancy);
        }
    }
}

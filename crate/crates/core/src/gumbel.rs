//! Moments of the standard Gumbel distribution, `F(x) = exp(−e^{−x})`.
//!
//! With `v = e^{−x}` every moment integral becomes `∫ (−ln v)^n e^{−v} dv` over
//! `(0, ∞)`, `(1, ∞)` or `(0, 1)`:
//!
//! * `γ^(n) = E[X^n]` over `(0, ∞)`,
//! * `δ^(n) = −e ∫₁^∞ (−ln v)^n e^{−v} dv`, the `x ≤ 0` part,
//! * `E[(X⁺)^n]` over `(0, 1)`, also `n! Σ (−1)^{k+1}/(k^n k!)`.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};
use crate::exact::factorial;
use crate::linear_form::Alpha;
use crate::quadrature::{integrate_finite, integrate_half_line, QuadratureConfig};
use crate::real::{Mag, PrecisionReal};

/// Largest supported moment order.
pub const MAX_ORDER: u32 = 12;

/// Working precision: the integrands reach about `n!` in size.
fn working_prec(n: u32, prec: u32) -> u32 {
    prec + 4 * n + 40
}

fn check_order(n: u32) -> Result<()> {
    if n > MAX_ORDER {
        return Err(LabError::Range(format!(
            "moment order must be at most {MAX_ORDER}, got {n}"
        )));
    }
    Ok(())
}

/// `(−ln v)^n e^{−v}`.
fn log_power_weight(v: &PrecisionReal, n: u32) -> Result<PrecisionReal> {
    let w = (-v).exp();
    if n == 0 {
        return Ok(w);
    }
    Ok(&(-v.ln()?).powi(n) * &w)
}

/// `γ^(n) = E[X^n] = ∫₀^∞ (−ln v)^n e^{−v} dv`.
pub fn moment_full(n: u32, quad: &QuadratureConfig, prec: u32) -> Result<PrecisionReal> {
    check_order(n)?;
    let w = working_prec(n, prec);
    let zero = PrecisionReal::zero(w);
    Ok(integrate_half_line(|v| log_power_weight(v, n), &zero, quad, w)?
        .value
        .with_prec(prec))
}

/// `δ^(n) = −e ∫_{−∞}^0 x^n e^{−x−e^{−x}} dx = −e ∫₁^∞ (−ln v)^n e^{−v} dv`.
pub fn moment_conditional(n: u32, quad: &QuadratureConfig, prec: u32) -> Result<PrecisionReal> {
    check_order(n)?;
    let w = working_prec(n, prec);
    let one = PrecisionReal::one(w);
    let i = integrate_half_line(|v| log_power_weight(v, n), &one, quad, w)?.value;
    let e = Alpha::inv_e().to_real(w).recip()?;
    Ok((-(&e * &i)).with_prec(prec))
}

/// `E[(X⁺)^n] = ∫₀¹ (−ln v)^n e^{−v} dv` by tanh-sinh quadrature.
pub fn moment_positive_quadrature(
    n: u32,
    quad: &QuadratureConfig,
    prec: u32,
) -> Result<PrecisionReal> {
    check_order(n)?;
    let w = working_prec(n, prec);
    let zero = PrecisionReal::zero(w);
    let one = PrecisionReal::one(w);
    Ok(integrate_finite(|v| log_power_weight(v, n), &zero, &one, quad, w)?
        .value
        .with_prec(prec))
}

/// `E[(X⁺)^n] = n! Σ_{k≥1} (−1)^{k+1}/(k^n k!)`, summed in exact rationals.
///
/// The terms decrease from `k = 1` on, so the first omitted term bounds the
/// remainder.
pub fn moment_positive_series(n: u32, prec: u32) -> Result<PrecisionReal> {
    check_order(n)?;
    let target = Mag::pow2(-(prec as i64) - 8);
    let mut sum = BigRational::zero();
    let mut kfact = BigInt::one();
    let mut k = 1u64;
    let omitted = loop {
        kfact *= k;
        let den = BigInt::from(k).pow(n) * &kfact;
        let term = BigRational::new(BigInt::one(), den);
        let mag = crate::special::ratio_mag_up(&term);
        if mag < target {
            break mag;
        }
        if k % 2 == 1 {
            sum += term;
        } else {
            sum -= term;
        }
        k += 1;
    };
    let scaled = sum * BigRational::from_integer(factorial(n as u64));
    let bound = omitted.mul(Mag::from_bigint(&factorial(n as u64), 0, true));
    Ok(PrecisionReal::from_rational(&scaled, prec).with_radius(bound))
}

/// `Pr{X ≤ 0} = ∫₁^∞ e^{−v} dv` by quadrature; analytically `1/e`.
pub fn prob_nonpositive(quad: &QuadratureConfig, prec: u32) -> Result<PrecisionReal> {
    let one = PrecisionReal::one(prec);
    Ok(integrate_half_line(|v| Ok((-v).exp()), &one, quad, prec)?.value)
}

/// `F_n(t) = ∫₀^∞ x^n exp(−x − t e^{−x}) dx` for `t ≥ 0`.
pub fn e_function(
    n: u32,
    t: &PrecisionReal,
    quad: &QuadratureConfig,
    prec: u32,
) -> Result<PrecisionReal> {
    check_order(n)?;
    if t.is_negative() || (t.contains_zero() && !t.is_zero_exact()) {
        return Err(LabError::Domain("F_n(t) requires t >= 0".into()));
    }
    let w = working_prec(n, prec);
    let zero = PrecisionReal::zero(w);
    let t = t.with_prec(w);
    let f = |x: &PrecisionReal| {
        let inner = &(-x) - &(&t * &(-x).exp());
        Ok(&x.powi(n) * &inner.exp())
    };
    Ok(integrate_half_line(f, &zero, quad, w)?.value.with_prec(prec))
}

/// Every moment of one order, with the closure residual
/// `|γ^(n) + δ^(n)/e − E[(X⁺)^n]|`.
#[derive(Debug, Clone)]
pub struct MomentReport {
    pub n: u32,
    pub full: PrecisionReal,
    pub conditional: PrecisionReal,
    pub positive_series: PrecisionReal,
    pub positive_quadrature: PrecisionReal,
    pub routes: Vec<(String, String)>,
    pub identity_residual: Mag,
    pub route_discrepancy: Mag,
}

pub fn moment_report(n: u32, quad: &QuadratureConfig, prec: u32) -> Result<MomentReport> {
    let full = moment_full(n, quad, prec)?;
    let conditional = moment_conditional(n, quad, prec)?;
    let positive_series = moment_positive_series(n, prec)?;
    let positive_quadrature = moment_positive_quadrature(n, quad, prec)?;
    let inv_e = Alpha::inv_e().to_real(prec);
    let closure = &(&full + &(&conditional * &inv_e)) - &positive_series;
    Ok(MomentReport {
        n,
        identity_residual: closure.abs_upper(),
        route_discrepancy: positive_series.distance_upper(&positive_quadrature),
        full,
        conditional,
        positive_series,
        positive_quadrature,
        routes: vec![
            ("full".into(), "exp-sinh on (0, inf)".into()),
            ("conditional".into(), "exp-sinh on (1, inf)".into()),
            ("positive_series".into(), "exact alternating series".into()),
            ("positive_quadrature".into(), "tanh-sinh on (0, 1)".into()),
        ],
    })
}

/// Sample mean and its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SampleMean {
    pub mean: f64,
    pub std_error: f64,
}

/// Monte Carlo estimates of `E[X^n]`, `E[(X⁺)^n]` and `Pr{X ≤ 0}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MonteCarloReport {
    pub n: u32,
    pub samples: u64,
    pub seed: u64,
    pub full: SampleMean,
    pub positive: SampleMean,
    pub nonpositive: SampleMean,
}

/// Samples drawn by one generator stream.
pub const MC_BLOCK: u64 = 1 << 16;
pub const MC_MIN_SAMPLES: u64 = 10_000;

#[derive(Clone, Copy, Default)]
struct Welford {
    count: f64,
    mean: f64,
    m2: f64,
}

impl Welford {
    fn push(&mut self, x: f64) {
        self.count += 1.0;
        let d = x - self.mean;
        self.mean += d / self.count;
        self.m2 += d * (x - self.mean);
    }

    fn merge(self, o: Welford) -> Welford {
        if self.count == 0.0 {
            return o;
        }
        let count = self.count + o.count;
        let d = o.mean - self.mean;
        Welford {
            count,
            mean: self.mean + d * o.count / count,
            m2: self.m2 + o.m2 + d * d * self.count * o.count / count,
        }
    }

    fn finish(self) -> SampleMean {
        let var = self.m2 / (self.count - 1.0);
        SampleMean {
            mean: self.mean,
            std_error: (var / self.count).sqrt(),
        }
    }
}

/// Inverse-CDF sampling `X = −ln(−ln U)` with `U` uniform on `(0, 1)`.
///
/// Block `b` covers samples `b·2^16 …` and draws from ChaCha8 seeded with
/// `seed` on stream `b`. Blocks run in parallel and are merged in block order,
/// so the output depends only on `(n, samples, seed)`.
pub fn monte_carlo_moments(n: u32, samples: u64, seed: u64) -> Result<MonteCarloReport> {
    check_order(n)?;
    if samples < MC_MIN_SAMPLES {
        return Err(LabError::Precondition(format!(
            "Monte Carlo needs at least {MC_MIN_SAMPLES} samples, got {samples}"
        )));
    }
    let blocks = samples.div_ceil(MC_BLOCK);
    let partial: Vec<[Welford; 3]> = (0..blocks)
        .into_par_iter()
        .map(|b| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(b);
            let count = MC_BLOCK.min(samples - b * MC_BLOCK);
            let mut acc = [Welford::default(); 3];
            for _ in 0..count {
                let u = loop {
                    let u: f64 = rng.gen();
                    if u > 0.0 {
                        break u;
                    }
                };
                let x = -(-u.ln()).ln();
                let xn = x.powi(n as i32);
                acc[0].push(xn);
                acc[1].push(if x > 0.0 { xn } else { 0.0 });
                acc[2].push(if x <= 0.0 { 1.0 } else { 0.0 });
            }
            acc
        })
        .collect();
    let mut total = [Welford::default(); 3];
    for p in partial {
        for i in 0..3 {
            total[i] = total[i].merge(p[i]);
        }
    }
    Ok(MonteCarloReport {
        n,
        samples,
        seed,
        full: total[0].finish(),
        positive: total[1].finish(),
        nonpositive: total[2].finish(),
    })
}

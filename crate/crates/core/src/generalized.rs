//! Order-`n` analogues of the combined series, built from signed Stirling
//! numbers of the first kind:
//!
//! `t_k^(n)(α) = (−1)^n n! s(k,n) (!k/k! − α)`, for `k ≥ n`.
//!
//! At `n = 1` this is the ordinary combined series. At `α = 1/e` every term
//! equals `n!|s(k,n)| T(k)/k! > 0` and the sum tends to `E[(X⁺)^n]`.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed};
use rayon::prelude::*;

use crate::error::{LabError, Result};
use crate::exact::{factorial, stirling_first, RationalInterval, StirlingRows};
use crate::linear_form::{Alpha, DerangementGap, LinearFormCoefficient};
use crate::real::PrecisionReal;
use crate::series::PartialSumTrace;

/// Largest supported order.
pub const MAX_ORDER: u32 = 6;
/// Largest `k` accepted by [`generalized_cancellation_bound`].
pub const MAX_BOUND_K: u64 = 2000;

fn check_order(n: u32) -> Result<()> {
    if n == 0 || n > MAX_ORDER {
        return Err(LabError::Precondition(format!(
            "order must lie in 1..={MAX_ORDER}, got {n}"
        )));
    }
    Ok(())
}

/// One term of the order-`n` series.
#[derive(Debug, Clone)]
pub struct GeneralizedTerm {
    pub n: u32,
    pub k: u64,
    pub gap: DerangementGap,
}

impl GeneralizedTerm {
    /// `a = (−1)^n n! s(k,n) !k/k!`, `b = (−1)^{n+1} n! s(k,n)`.
    pub fn form(&self) -> LinearFormCoefficient {
        self.gap.linear_form()
    }
}

fn scale_int(n: u32, s: &BigInt) -> BigInt {
    let v = factorial(n as u64) * s;
    if n % 2 == 0 {
        v
    } else {
        -v
    }
}

pub fn generalized_term(n: u32, k: u64) -> Result<GeneralizedTerm> {
    check_order(n)?;
    if k < n as u64 {
        return Err(LabError::Precondition(format!(
            "order {n} terms start at k = {n}, got k = {k}"
        )));
    }
    let s = stirling_first(k, n as u64)?;
    Ok(GeneralizedTerm {
        n,
        k,
        gap: DerangementGap::new(k, BigRational::from_integer(scale_int(n, &s))),
    })
}

/// `(k, s(k,n), k!)` for `k = n..=K`, built incrementally.
fn stirling_column(n: u32, k_max: u64) -> Vec<(u64, BigInt, BigInt)> {
    let mut out = Vec::with_capacity(k_max as usize);
    let mut kfact = BigInt::one();
    for (k, row) in StirlingRows::new(n as usize).take(k_max as usize) {
        kfact *= k;
        if k >= n as u64 {
            out.push((k, row[n as usize - 1].clone(), kfact.clone()));
        }
    }
    out
}

/// Values `t_n … t_K` at `α`; the expensive tail evaluations run in parallel.
fn term_values(n: u32, alpha: &Alpha, k_max: u64, prec: u32) -> Vec<PrecisionReal> {
    stirling_column(n, k_max)
        .into_par_iter()
        .map(|(k, s, kfact)| {
            let scale = scale_int(n, &s);
            let ratio = PrecisionReal::from_ratio(&scale, &kfact, prec);
            DerangementGap::new(k, BigRational::from_integer(scale))
                .evaluate_with_ratio(alpha, prec, &ratio)
        })
        .collect()
}

/// Trace of `Σ_{k=n}^{K} t_k^(n)(α)`, classified as in the order-one case.
pub fn generalized_partial_sums(
    n: u32,
    alpha: &Alpha,
    k_max: u64,
    prec: u32,
) -> Result<PartialSumTrace> {
    check_order(n)?;
    if k_max < 10 * n as u64 {
        return Err(LabError::Precondition(format!(
            "order {n} traces need K >= {}, got {k_max}",
            10 * n
        )));
    }
    let terms = term_values(n, alpha, k_max, prec);
    Ok(PartialSumTrace::from_terms(alpha.clone(), n as u64, terms))
}

/// Exact enclosure of `Σ_{k>K} t_k^(n)(1/e)`.
///
/// With `σ_m(k) = |s(k,m)|/(k−1)!` one has `σ_m(k+1) = σ_m(k) + σ_{m−1}(k)/k`,
/// which telescopes to `U = Σ_{k>K} σ_n(k)/(k(k+1)) = Σ_{m≤n} σ_m(K+1)/(K+1)`.
/// Since `1/(k+2) < T(k) < 1/(k+1)`, the tail lies in `n!·U·[1 − 1/(K+3), 1]`.
pub fn generalized_tail_enclosure(n: u32, k_max: u64) -> Result<RationalInterval> {
    check_order(n)?;
    if k_max < n as u64 {
        return Err(LabError::Precondition("K must be at least n".into()));
    }
    let k1 = k_max + 1;
    let den = factorial(k1 - 1) * BigInt::from(k1);
    let mut num = BigInt::from(0);
    for m in 1..=n as u64 {
        num += stirling_first(k1, m)?.abs();
    }
    let hi = BigRational::new(num * factorial(n as u64), den);
    let shrink = BigRational::new(BigInt::from(k_max + 2), BigInt::from(k_max + 3));
    let lo = &hi * shrink;
    RationalInterval::new(lo, hi)
}

/// `S_K^(n)(1/e)` plus the exact tail enclosure.
pub fn generalized_limit_estimate(n: u32, k_max: u64, prec: u32) -> Result<PrecisionReal> {
    let tail = generalized_tail_enclosure(n, k_max)?;
    let mut sum = PrecisionReal::zero(prec);
    for t in term_values(n, &Alpha::inv_e(), k_max, prec) {
        sum = &sum + &t;
    }
    Ok(&sum + &PrecisionReal::from_interval(&tail, prec))
}

/// Certified bound `|t_k^(n)(1/e)| ≤ n!|s(k,n)|/(k+1)!`.
#[derive(Debug, Clone)]
pub struct CancellationBound {
    pub n: u32,
    pub k: u64,
    /// Exact enclosure of `|t_k^(n)(1/e)|`.
    pub term: RationalInterval,
    pub bound: BigRational,
    pub holds: bool,
}

pub fn generalized_cancellation_bound(n: u32, k: u64) -> Result<CancellationBound> {
    if k > MAX_BOUND_K {
        return Err(LabError::Precondition(format!(
            "k must be at most {MAX_BOUND_K}, got {k}"
        )));
    }
    let term = generalized_term(n, k)?;
    let enclosure = term.gap.enclosure_at_inv_e(&BigRational::from_integer(0.into()), 64);
    let (lo, hi) = enclosure.abs_bounds();
    let bound = BigRational::new(
        factorial(n as u64) * stirling_first(k, n as u64)?.abs(),
        factorial(k + 1),
    );
    let holds = hi <= bound;
    Ok(CancellationBound {
        n,
        k,
        term: RationalInterval::new(lo, hi)?,
        bound,
        holds,
    })
}

/// [`generalized_cancellation_bound`] for every `k = n..=K`, sharing one
/// pass over the Stirling column.
pub fn cancellation_bounds(n: u32, k_max: u64) -> Result<Vec<CancellationBound>> {
    check_order(n)?;
    if k_max > MAX_BOUND_K {
        return Err(LabError::Precondition(format!(
            "k must be at most {MAX_BOUND_K}, got {k_max}"
        )));
    }
    let nf = factorial(n as u64);
    stirling_column(n, k_max)
        .into_par_iter()
        .map(|(k, s, kfact)| {
            let gap = DerangementGap::new(k, BigRational::from_integer(scale_int(n, &s)));
            let (lo, hi) = gap
                .enclosure_at_inv_e(&BigRational::from_integer(0.into()), 64)
                .abs_bounds();
            let bound = BigRational::new(&nf * s.abs(), kfact * BigInt::from(k + 1));
            Ok(CancellationBound {
                n,
                k,
                holds: hi <= bound,
                term: RationalInterval::new(lo, hi)?,
                bound,
            })
        })
        .collect()
}

/// Borel coefficient `t_k^(n)(α)/k!` of the order-`n` combined series.
///
/// The `γ`-part and the `δ`-part alone have ratio tending to one; at
/// `α = 1/e` the combination decays like `1/(k+1)!` more.
pub fn generalized_borel_coefficient(n: u32, k: u64, alpha: &Alpha, prec: u32) -> Result<PrecisionReal> {
    let term = generalized_term(n, k)?;
    let v = term.gap.evaluate(alpha, prec);
    Ok(v.checked_div(&PrecisionReal::from_bigint(&factorial(k), prec))
        .expect("k! > 0"))
}

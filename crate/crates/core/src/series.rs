//! The series `S(α) = Σ (−1)^k !k/k + α Σ (−1)^{k−1}(k−1)!` term by term.
//!
//! Each term is `t_k = (−1)^k (k−1)! (!k/k! − α)`; at `α = 1/e` it equals
//! `T(k)/k > 0`, so the partial sums increase towards `Ein(1)`. Any other `α`
//! leaves a `(k−1)!·|α − 1/e|` component that eventually dominates.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::borel::least_squares;
use crate::error::{LabError, Result};
use crate::exact::{factorial, RationalInterval};
use crate::linear_form::{sign_pow, Alpha, DerangementGap, LinearFormCoefficient};
use crate::real::{Mag, PrecisionReal};
use crate::special::ein;

/// One term of the combined series.
#[derive(Debug, Clone)]
pub struct SeriesTerm {
    pub k: u64,
    pub gap: DerangementGap,
    pub at_alpha: Option<PrecisionReal>,
}

impl SeriesTerm {
    /// Exact `a_k + b_k α` with `a_k = (−1)^k (k−1)! !k/k!` and `b_k = (−1)^{k+1}(k−1)!`.
    pub fn form(&self) -> LinearFormCoefficient {
        self.gap.linear_form()
    }
}

fn series_gap(k: u64) -> DerangementGap {
    DerangementGap::new(k, sign_pow(k) * BigRational::from_integer(factorial(k - 1)))
}

/// The exact term `t_k` as a linear form in `α`.
pub fn combined_term(k: u64) -> Result<SeriesTerm> {
    if k == 0 {
        return Err(LabError::Precondition("terms start at k = 1".into()));
    }
    Ok(SeriesTerm {
        k,
        gap: series_gap(k),
        at_alpha: None,
    })
}

/// The term `t_k` together with its value at `α`.
pub fn combined_term_at(k: u64, alpha: &Alpha, prec: u32) -> Result<SeriesTerm> {
    let mut t = combined_term(k)?;
    t.at_alpha = Some(t.gap.evaluate(alpha, prec));
    Ok(t)
}

/// Values `t_1 … t_K` at `α`, computed in parallel.
pub fn term_values(alpha: &Alpha, k_max: u64, prec: u32) -> Vec<PrecisionReal> {
    (1..=k_max)
        .into_par_iter()
        .map(|k| {
            let gap = series_gap(k);
            // scale/k! = (−1)^k/k
            let ratio = PrecisionReal::one(prec).div_u64(k);
            let ratio = if k % 2 == 0 { ratio } else { -ratio };
            gap.evaluate_with_ratio(alpha, prec, &ratio)
        })
        .collect()
}

/// Verdict of the convergence classifier.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Converging,
    Diverging,
    Undecided,
}

impl std::fmt::Display for Verdict {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Verdict::Converging => "converging",
            Verdict::Diverging => "diverging",
            Verdict::Undecided => "undecided",
        })
    }
}

/// Fit of `ln|t_k| ≈ c0 + c1 ln k + c2 k ln k` on the trailing quarter.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GrowthFit {
    pub window: (u64, u64),
    pub c0: f64,
    pub c1: f64,
    pub c2: f64,
    pub c2_std_error: f64,
    /// Fitted `d ln|t_k| / dk` at the end of the window.
    pub end_slope: f64,
    /// Spread of the cumulative sums over the first and second half of the window.
    pub spread_first: f64,
    pub spread_second: f64,
}

/// One row of a trace.
#[derive(Debug, Clone)]
pub struct TraceRow {
    pub k: u64,
    pub term: PrecisionReal,
    pub cumulative: PrecisionReal,
}

/// Partial sums of a series together with the classifier's verdict.
#[derive(Debug, Clone)]
pub struct PartialSumTrace {
    pub alpha: Alpha,
    pub rows: Vec<TraceRow>,
    pub verdict: Verdict,
    pub evidence: Option<GrowthFit>,
}

impl PartialSumTrace {
    /// Assemble cumulative sums in index order and classify them.
    pub fn from_terms(alpha: Alpha, first_k: u64, terms: Vec<PrecisionReal>) -> Self {
        let mut rows = Vec::with_capacity(terms.len());
        let mut acc: Option<PrecisionReal> = None;
        for (i, term) in terms.into_iter().enumerate() {
            let cumulative = match acc {
                None => term.clone(),
                Some(a) => &a + &term,
            };
            acc = Some(cumulative.clone());
            rows.push(TraceRow {
                k: first_k + i as u64,
                term,
                cumulative,
            });
        }
        let (verdict, evidence) = classify(&rows);
        Self {
            alpha,
            rows,
            verdict,
            evidence,
        }
    }

    pub fn last_sum(&self) -> &PrecisionReal {
        &self.rows.last().expect("trace is never empty").cumulative
    }

    /// Largest `|t_k|` over the trace as an upper bound.
    pub fn max_abs_term(&self) -> Mag {
        self.rows
            .iter()
            .map(|r| r.term.abs_upper())
            .fold(Mag::ZERO, Mag::max)
    }
}

/// Classify a trace from its trailing quarter.
///
/// Diverging: the `k ln k` coefficient is significantly positive and the fitted
/// log-magnitude still rises at the end of the window. Converging: the fitted
/// log-magnitude falls, the `k ln k` coefficient is not significantly positive,
/// and the cumulative sums spread less over the second half of the window
/// than over the first. Anything else is undecided.
pub fn classify(rows: &[TraceRow]) -> (Verdict, Option<GrowthFit>) {
    let n = rows.len();
    if n < 8 {
        return (Verdict::Undecided, None);
    }
    let start = n - n / 4;
    let window = &rows[start..];
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for r in window {
        if r.term.contains_zero() {
            continue;
        }
        let Some(l) = r.term.ln_abs_approx() else { continue };
        let k = r.k as f64;
        xs.push(vec![1.0, k.ln(), k * k.ln()]);
        ys.push(l);
    }
    let Some((beta, se)) = least_squares(&xs, &ys) else {
        return (Verdict::Undecided, None);
    };
    let k_end = window.last().unwrap().k as f64;
    let end_slope = beta[1] / k_end + beta[2] * (k_end.ln() + 1.0);
    let half = window.len() / 2;
    let spread = |rs: &[TraceRow]| {
        let vals: Vec<f64> = rs.iter().map(|r| r.cumulative.to_f64()).collect();
        let lo = vals.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = vals.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        hi - lo
    };
    let fit = GrowthFit {
        window: (window[0].k, window.last().unwrap().k),
        c0: beta[0],
        c1: beta[1],
        c2: beta[2],
        c2_std_error: se[2],
        end_slope,
        spread_first: spread(&window[..half]),
        spread_second: spread(&window[half..]),
    };
    let significant = fit.c2 > 3.0 * fit.c2_std_error;
    let verdict = if fit.c2 > 0.0 && significant && fit.end_slope > 0.0 {
        Verdict::Diverging
    } else if fit.end_slope < 0.0
        && !(fit.c2 > 0.0 && significant)
        && fit.spread_second.is_finite()
        && fit.spread_second < fit.spread_first
    {
        Verdict::Converging
    } else {
        Verdict::Undecided
    };
    (verdict, Some(fit))
}

/// Partial sums `S_1 … S_K` of the combined series at `α`.
pub fn partial_sums(alpha: &Alpha, k_max: u64, prec: u32) -> Result<PartialSumTrace> {
    if k_max < 10 {
        return Err(LabError::Precondition(format!(
            "a trace needs K >= 10, got {k_max}"
        )));
    }
    let terms = term_values(alpha, k_max, prec);
    Ok(PartialSumTrace::from_terms(alpha.clone(), 1, terms))
}

/// Exact enclosure of `Σ_{k>K} T(k)/k`, the tail at `α = 1/e`.
///
/// From `1/(k+1) − 1/((k+1)(k+2)) ≤ T(k) ≤ that + 1/((k+1)(k+2)(k+3))`
/// and the telescoping sums of `1/(k(k+1)⋯(k+j))`.
pub fn tail_enclosure(k_max: u64) -> RationalInterval {
    let k1 = BigInt::from(k_max + 1);
    let k2 = BigInt::from(k_max + 2);
    let k3 = BigInt::from(k_max + 3);
    let lead = BigRational::new(BigInt::one(), k1.clone());
    let second = BigRational::new(BigInt::one(), BigInt::from(2) * &k1 * &k2);
    let third = BigRational::new(BigInt::one(), BigInt::from(3) * &k1 * &k2 * &k3);
    let lo = lead - second;
    let hi = &lo + third;
    RationalInterval::new(lo, hi).expect("ordered endpoints")
}

/// `S_K` at `α = 1/e` plus an exact enclosure of the remaining tail.
pub fn limit_estimate(k_max: u64, prec: u32) -> Result<PrecisionReal> {
    if k_max == 0 {
        return Err(LabError::Precondition("K must be positive".into()));
    }
    let terms = term_values(&Alpha::inv_e(), k_max, prec);
    let mut sum = PrecisionReal::zero(prec);
    for t in &terms {
        sum = &sum + t;
    }
    Ok(&sum + &PrecisionReal::from_interval(&tail_enclosure(k_max), prec))
}

/// Smallest term of a divergent series and the accuracy it buys.
#[derive(Debug, Clone)]
pub struct OptimalTruncationReport {
    pub alpha: Alpha,
    pub k_star: u64,
    pub min_term: PrecisionReal,
    /// `|S_{k*} − Ein(1)|`.
    pub best_error: PrecisionReal,
}

/// Scan terms until they have clearly turned upward and report the smallest one.
pub fn optimal_truncation(alpha: &Alpha, prec: u32) -> Result<OptimalTruncationReport> {
    let gap = alpha.gap_from_inv_e(prec);
    if gap.contains_zero() || gap.abs_lower() <= gap.radius().mul_u64(10) {
        return Err(LabError::Precondition(
            "alpha is indistinguishable from 1/e; the series converges and has no optimal truncation"
                .into(),
        ));
    }
    const K_CAP: u64 = 20_000;
    let mut sum = PrecisionReal::zero(prec);
    let mut best: Option<(u64, PrecisionReal, PrecisionReal)> = None;
    let mut k = 1u64;
    while k <= K_CAP {
        let t = combined_term_at(k, alpha, prec)?.at_alpha.unwrap();
        sum = &sum + &t;
        let mag = t.abs_upper();
        match &best {
            Some((kb, tb, _)) => {
                if mag < tb.abs_upper() {
                    best = Some((k, t, sum.clone()));
                } else if k > kb + 8 && mag > tb.abs_upper().mul_u64(1 << 20) {
                    break;
                }
            }
            None => best = Some((k, t, sum.clone())),
        }
        k += 1;
    }
    let (k_star, min_term, s) = best.expect("at least one term");
    let reference = ein(&PrecisionReal::one(prec));
    Ok(OptimalTruncationReport {
        alpha: alpha.clone(),
        k_star,
        min_term: min_term.abs(),
        best_error: (&s - &reference).abs(),
    })
}

/// Both sides of the finite rearrangement behind the convergence proof.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FiniteIdentity {
    pub left: BigRational,
    pub right: BigRational,
    /// `left − right`, zero when the rearrangement is exact.
    pub residual: BigRational,
}

/// Check the finite-`(K, M)` rearrangement in exact rationals.
///
/// With `N = K + M`, `E_N = Σ_{ℓ≤N} (−1)^ℓ/ℓ!` and `S_δ = Σ_{k≤K} (−1)^{k−1}(k−1)!`:
///
/// left  = `Σ_{k≤K} (−1)^k (k−1)! (E_N − Σ_{ℓ=k+1}^{N} (−1)^ℓ/ℓ! − α)`
///
/// right = `(α − E_N)·S_δ + Σ_{m≤M} (−1)^{m+1}/(m·m!) + (E_N − E_{M+1}) + C − B`
///
/// where `C = Σ_{m≤M} (−1)^m K!/(m (K+m)!)` is left over from the telescoping
/// cutoff and `B = Σ_{k=2}^{K} Σ_{m=M+1}^{N−k} (−1)^m (k−1)!/(k+m)!` collects
/// the double-sum entries beyond `m = M`.
pub fn prop1_finite_identity(alpha: &BigRational, k_max: u64, m_max: u64) -> Result<FiniteIdentity> {
    if k_max < 2 || m_max < 2 {
        return Err(LabError::Precondition(format!(
            "need K, M >= 2, got K = {k_max}, M = {m_max}"
        )));
    }
    let n = k_max + m_max;
    let fact: Vec<BigInt> = {
        let mut v = vec![BigInt::one()];
        for i in 1..=n {
            let next = &v[i as usize - 1] * BigInt::from(i);
            v.push(next);
        }
        v
    };
    let f = |i: u64| BigRational::from_integer(fact[i as usize].clone());
    let inv_f = |i: u64| BigRational::new(BigInt::one(), fact[i as usize].clone());
    // E_j for j ≤ N
    let mut e = Vec::with_capacity(n as usize + 1);
    let mut acc = BigRational::zero();
    for l in 0..=n {
        acc += sign_pow(l) * inv_f(l);
        e.push(acc.clone());
    }
    let e_n = e[n as usize].clone();

    let mut left = BigRational::zero();
    for k in 1..=k_max {
        let mut r = BigRational::zero();
        for l in k + 1..=n {
            r += sign_pow(l) * inv_f(l);
        }
        left += sign_pow(k) * f(k - 1) * (&e_n - r - alpha);
    }

    let mut s_delta = BigRational::zero();
    for k in 1..=k_max {
        s_delta -= sign_pow(k) * f(k - 1);
    }
    let mut main = BigRational::zero();
    for m in 1..=m_max {
        main -= sign_pow(m) * BigRational::new(BigInt::one(), BigInt::from(m) * &fact[m as usize]);
    }
    let mut c = BigRational::zero();
    for m in 1..=m_max {
        c += sign_pow(m) * BigRational::new(fact[k_max as usize].clone(), BigInt::from(m) * &fact[(k_max + m) as usize]);
    }
    let mut b = BigRational::zero();
    for k in 2..=k_max {
        for m in m_max + 1..=n.saturating_sub(k) {
            b += sign_pow(m) * BigRational::new(fact[k as usize - 1].clone(), fact[(k + m) as usize].clone());
        }
    }
    let boundary = (&e_n - &e[m_max as usize + 1]) + c - b;
    let right = (alpha - &e_n) * s_delta + main + boundary;
    let residual = &left - &right;
    Ok(FiniteIdentity {
        left,
        right,
        residual,
    })
}

//! Exact integer and rational sequences: factorials, derangement numbers,
//! signed Stirling numbers of the first kind, and enclosures of the
//! alternating tail `R(k) = Σ_{ℓ>k} (-1)^ℓ / ℓ!`.
//!
//! Nothing here rounds. `R(k)` is the quantity behind `!k/k! - 1/e = -R(k)`,
//! so it is only ever handled through rational enclosures.

use std::fmt;
use std::sync::{OnceLock, RwLock};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

use crate::error::{LabError, Result};

/// `k!`.
pub fn factorial(k: u64) -> BigInt {
    let mut acc = BigInt::one();
    for i in 2..=k {
        acc *= i;
    }
    acc
}

/// `!k` from `!k = k·!(k-1) + (-1)^k`, `!0 = 1`.
pub fn derangement(k: u64) -> BigInt {
    let mut d = BigInt::one();
    for i in 1..=k {
        d *= i;
        if i % 2 == 0 {
            d += 1;
        } else {
            d -= 1;
        }
    }
    d
}

/// `!k / k!` as a reduced rational.
pub fn derangement_ratio(k: u64) -> BigRational {
    BigRational::new(derangement(k), factorial(k))
}

/// Closed interval with exact rational endpoints.
#[derive(Clone, PartialEq, Eq)]
pub struct RationalInterval {
    lo: BigRational,
    hi: BigRational,
}

impl RationalInterval {
    pub fn new(lo: BigRational, hi: BigRational) -> Result<Self> {
        if lo > hi {
            return Err(LabError::Precondition(format!(
                "interval endpoints out of order: {lo} > {hi}"
            )));
        }
        Ok(Self { lo, hi })
    }

    /// Interval spanning two values given in either order.
    pub fn hull(a: BigRational, b: BigRational) -> Self {
        if a <= b {
            Self { lo: a, hi: b }
        } else {
            Self { lo: b, hi: a }
        }
    }

    pub fn point(q: BigRational) -> Self {
        Self {
            lo: q.clone(),
            hi: q,
        }
    }

    pub fn lo(&self) -> &BigRational {
        &self.lo
    }

    pub fn hi(&self) -> &BigRational {
        &self.hi
    }

    pub fn width(&self) -> BigRational {
        &self.hi - &self.lo
    }

    pub fn contains(&self, q: &BigRational) -> bool {
        &self.lo <= q && q <= &self.hi
    }

    pub fn contains_interval(&self, other: &RationalInterval) -> bool {
        self.lo <= other.lo && other.hi <= self.hi
    }

    /// Multiply by an exact scalar, flipping endpoints for negative factors.
    pub fn scale(&self, c: &BigRational) -> Self {
        Self::hull(&self.lo * c, &self.hi * c)
    }

    pub fn shift(&self, c: &BigRational) -> Self {
        Self {
            lo: &self.lo + c,
            hi: &self.hi + c,
        }
    }

    pub fn neg(&self) -> Self {
        Self {
            lo: -&self.hi,
            hi: -&self.lo,
        }
    }

    /// Smallest and largest `|x|` over the interval.
    pub fn abs_bounds(&self) -> (BigRational, BigRational) {
        let (a, b) = (self.lo.abs(), self.hi.abs());
        if self.lo.is_negative() && self.hi.is_positive() {
            (BigRational::zero(), a.max(b))
        } else if a <= b {
            (a, b)
        } else {
            (b, a)
        }
    }

    pub fn is_positive(&self) -> bool {
        self.lo.is_positive()
    }

    pub fn is_negative(&self) -> bool {
        self.hi.is_negative()
    }
}

impl fmt::Debug for RationalInterval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}, {}]", self.lo, self.hi)
    }
}

/// Exact enclosure of `R(k) = Σ_{ℓ=k+1}^∞ (-1)^ℓ/ℓ!`.
///
/// The endpoints are the partial sums through `ℓ = k + extra_terms - 1` and
/// `ℓ = k + extra_terms`; the width is exactly `1/(k + extra_terms)!`.
pub fn e_tail_enclosure(k: u64, extra_terms: u64) -> Result<RationalInterval> {
    if k < 1 {
        return Err(LabError::Precondition("e_tail_enclosure needs k >= 1".into()));
    }
    if extra_terms < 2 {
        return Err(LabError::Precondition(
            "e_tail_enclosure needs at least two extra terms".into(),
        ));
    }
    let mut fact = factorial(k);
    let mut sum = BigRational::zero();
    let mut prev = sum.clone();
    for l in (k + 1)..=(k + extra_terms) {
        fact *= l;
        prev = sum.clone();
        let term = BigRational::new(BigInt::one(), fact.clone());
        if l % 2 == 0 {
            sum += term;
        } else {
            sum -= term;
        }
    }
    Ok(RationalInterval::hull(prev, sum))
}

/// Exact enclosure of the scaled tail
/// `T(k) = (-1)^{k+1} k! R(k) = Σ_{j≥1} (-1)^{j+1} / ((k+1)(k+2)⋯(k+j))`.
///
/// `T(k)` is positive with `1/(k+2) < T(k) < 1/(k+1)`. Working with the scaled
/// tail keeps the rationals small when `k` runs into the thousands. The width
/// is `1/((k+1)⋯(k+extra_terms))`.
pub fn scaled_e_tail_enclosure(k: u64, extra_terms: u64) -> RationalInterval {
    assert!(extra_terms >= 2, "need at least two tail terms");
    let mut prod = BigInt::one();
    let mut sum = BigRational::zero();
    let mut prev = sum.clone();
    for j in 1..=extra_terms {
        prod *= k + j;
        prev = sum.clone();
        let term = BigRational::new(BigInt::one(), prod.clone());
        if j % 2 == 1 {
            sum += term;
        } else {
            sum -= term;
        }
    }
    RationalInterval::hull(prev, sum)
}

/// Direct finite sum `Σ_{k=2}^{K} [(k-1)!/(k+m-1)! - k!/(k+m)!]`.
pub fn telescoping_sum(m: u64, upper: u64) -> Result<BigRational> {
    Ok(telescoping_prefix_sums(m, upper)?
        .pop()
        .expect("at least one prefix"))
}

/// Every prefix of the telescoping sum: entry `i` holds the sum up to `K = i + 2`.
pub fn telescoping_prefix_sums(m: u64, upper: u64) -> Result<Vec<BigRational>> {
    if m < 1 || upper < 2 {
        return Err(LabError::Precondition(format!(
            "telescoping_sum needs m >= 1 and K >= 2, got m={m}, K={upper}"
        )));
    }
    // (k-1)!/(k+m-1)! = 1 / (k (k+1) ⋯ (k+m-1))
    let rising = |k: u64| -> BigRational {
        let mut p = BigInt::one();
        for i in k..(k + m) {
            p *= i;
        }
        BigRational::new(BigInt::one(), p)
    };
    let mut out = Vec::with_capacity(upper as usize - 1);
    let mut sum = BigRational::zero();
    let mut current = rising(2);
    for k in 2..=upper {
        let next = rising(k + 1);
        sum += &current - &next;
        out.push(sum.clone());
        current = next;
    }
    Ok(out)
}

/// Streams rows of signed Stirling numbers of the first kind, truncated to
/// columns `1..=max_n`, starting at `k = 1`.
#[derive(Clone)]
pub struct StirlingRows {
    k: u64,
    row: Vec<BigInt>,
    max_n: usize,
}

impl StirlingRows {
    pub fn new(max_n: usize) -> Self {
        assert!(max_n >= 1, "need at least one column");
        Self {
            k: 0,
            row: Vec::new(),
            max_n,
        }
    }
}

impl Iterator for StirlingRows {
    /// `(k, [s(k,1), …, s(k,min(k,max_n))])`.
    type Item = (u64, Vec<BigInt>);

    fn next(&mut self) -> Option<Self::Item> {
        if self.k == 0 {
            self.k = 1;
            self.row = vec![BigInt::one()];
            return Some((1, self.row.clone()));
        }
        // s(k+1,n) = s(k,n-1) - k·s(k,n), with s(k,0) = 0 for k >= 1
        let k = self.k;
        let width = ((k + 1) as usize).min(self.max_n);
        let mut next = Vec::with_capacity(width);
        for n in 1..=width {
            let left = if n >= 2 {
                self.row.get(n - 2).cloned().unwrap_or_default()
            } else {
                BigInt::zero()
            };
            let here = self.row.get(n - 1).map(|v| v * k).unwrap_or_default();
            next.push(left - here);
        }
        self.k = k + 1;
        self.row = next;
        Some((self.k, self.row.clone()))
    }
}

/// Dense triangular cache of `s(k, n)` for `n ≤ max_n`, grown on demand.
#[derive(Clone)]
pub struct StirlingTable {
    rows: Vec<Vec<BigInt>>,
    max_n: usize,
}

impl StirlingTable {
    pub fn new(max_n: usize) -> Self {
        Self {
            rows: Vec::new(),
            max_n: max_n.max(1),
        }
    }

    pub fn max_k(&self) -> u64 {
        self.rows.len() as u64
    }

    pub fn max_n(&self) -> usize {
        self.max_n
    }

    /// Make sure rows up to `k` and columns up to `n` are present.
    pub fn ensure(&mut self, k: u64, n: usize) {
        if n > self.max_n {
            self.max_n = n;
            self.rows.clear();
        }
        if self.rows.len() as u64 >= k {
            return;
        }
        let mut it = StirlingRows::new(self.max_n);
        if let Some(last) = self.rows.last() {
            it = StirlingRows {
                k: self.rows.len() as u64,
                row: last.clone(),
                max_n: self.max_n,
            };
        }
        while (self.rows.len() as u64) < k {
            let (_, row) = it.next().expect("row iterator is infinite");
            self.rows.push(row);
        }
    }

    /// `s(k, n)` if already cached.
    pub fn get(&self, k: u64, n: usize) -> Option<&BigInt> {
        if k == 0 || n == 0 {
            return None;
        }
        self.rows.get(k as usize - 1).and_then(|r| r.get(n - 1))
    }
}

fn shared_table() -> &'static RwLock<StirlingTable> {
    static TABLE: OnceLock<RwLock<StirlingTable>> = OnceLock::new();
    TABLE.get_or_init(|| RwLock::new(StirlingTable::new(8)))
}

/// Signed Stirling number of the first kind `s(k, n)`, `1 ≤ n ≤ k`.
///
/// Backed by a process-wide cache; readers share it once it covers `(k, n)`.
pub fn stirling_first(k: u64, n: u64) -> Result<BigInt> {
    if n < 1 || n > k {
        return Err(LabError::Precondition(format!(
            "stirling_first needs 1 <= n <= k, got k={k}, n={n}"
        )));
    }
    let table = shared_table();
    {
        let t = table.read().expect("stirling cache poisoned");
        if let Some(v) = t.get(k, n as usize) {
            return Ok(v.clone());
        }
    }
    let mut t = table.write().expect("stirling cache poisoned");
    let cols = (n as usize).max(t.max_n());
    t.ensure(k, cols);
    Ok(t.get(k, n as usize).expect("cache was just extended").clone())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn q(n: i64, d: i64) -> BigRational {
        BigRational::new(BigInt::from(n), BigInt::from(d))
    }

    /// `k! Σ_{ℓ≤k} (-1)^ℓ/ℓ!` evaluated directly in rationals.
    fn derangement_by_sum(k: u64) -> BigRational {
        let mut fact = BigInt::one();
        let mut s = BigRational::zero();
        for l in 0..=k {
            if l > 0 {
                fact *= l;
            }
            let t = BigRational::new(BigInt::one(), fact.clone());
            if l % 2 == 0 {
                s += t;
            } else {
                s -= t;
            }
        }
        s * BigRational::from_integer(fact)
    }

    /// Coefficients of x(x-1)⋯(x-k+1), lowest degree first.
    fn falling_factorial_poly(k: u64) -> Vec<BigInt> {
        let mut p = vec![BigInt::one()];
        for j in 0..k {
            let mut next = vec![BigInt::zero(); p.len() + 1];
            for (i, c) in p.iter().enumerate() {
                next[i + 1] += c;
                next[i] -= c * j;
            }
            p = next;
        }
        p
    }

    #[test]
    fn factorial_values() {
        assert_eq!(factorial(0), BigInt::one());
        assert_eq!(factorial(1), BigInt::one());
        let oracle: u64 = (1..=10).product();
        assert_eq!(factorial(10), BigInt::from(oracle));
        assert_eq!(factorial(10), BigInt::from(3_628_800));
    }

    #[test]
    fn derangement_small_values() {
        assert_eq!(derangement(0), BigInt::one());
        assert_eq!(derangement(1), BigInt::zero());
        assert_eq!(derangement(5), BigInt::from(44));
        assert_eq!(derangement_by_sum(5), q(44, 1));
    }

    #[test]
    fn derangement_recurrence_matches_defining_sum() {
        let mut fact = BigInt::one();
        let mut sum = BigRational::zero();
        let mut d = BigInt::one();
        for k in 0..=500u64 {
            if k > 0 {
                fact *= k;
                d = &d * k + if k % 2 == 0 { 1 } else { -1 };
            }
            let t = BigRational::new(BigInt::one(), fact.clone());
            if k % 2 == 0 {
                sum += t;
            } else {
                sum -= t;
            }
            assert_eq!(BigRational::from_integer(d.clone()), &sum * BigRational::from_integer(fact.clone()));
        }
        assert_eq!(derangement(500), d);
    }

    #[test]
    fn stirling_examples_against_polynomial_oracle() {
        assert_eq!(stirling_first(1, 1).unwrap(), BigInt::one());
        let p3 = falling_factorial_poly(3);
        assert_eq!(p3[2], BigInt::from(-3));
        assert_eq!(stirling_first(3, 2).unwrap(), BigInt::from(-3));
        let p4 = falling_factorial_poly(4);
        assert_eq!(p4[2], BigInt::from(11));
        assert_eq!(stirling_first(4, 2).unwrap(), BigInt::from(11));
    }

    #[test]
    fn stirling_rejects_bad_indices() {
        assert!(stirling_first(3, 4).is_err());
        assert!(stirling_first(3, 0).is_err());
    }

    #[test]
    fn stirling_rows_reproduce_falling_factorial() {
        let mut table = StirlingTable::new(60);
        table.ensure(60, 60);
        for k in 1..=60u64 {
            let poly = falling_factorial_poly(k);
            for x in 1..=(k as i64 + 1) {
                let xb = BigInt::from(x);
                let mut lhs = BigInt::zero();
                let mut pw = BigInt::one();
                for n in 1..=k {
                    pw *= &xb;
                    lhs += table.get(k, n as usize).unwrap() * &pw;
                }
                let mut rhs = BigInt::one();
                for j in 0..k as i64 {
                    rhs *= x - j;
                }
                assert_eq!(lhs, rhs, "k={k} x={x}");
                assert_eq!(poly[1..].len(), k as usize);
            }
        }
    }

    #[test]
    fn stirling_first_column() {
        let mut table = StirlingTable::new(1);
        table.ensure(200, 1);
        for k in 1..=200u64 {
            let expected = factorial(k - 1) * if k % 2 == 1 { 1 } else { -1 };
            assert_eq!(table.get(k, 1).unwrap(), &expected);
        }
    }

    #[test]
    fn table_extends_incrementally() {
        let mut t = StirlingTable::new(3);
        t.ensure(10, 3);
        let a = t.get(10, 3).cloned().unwrap();
        t.ensure(20, 3);
        assert_eq!(t.get(10, 3), Some(&a));
        let fresh: Vec<_> = StirlingRows::new(3).take(20).collect();
        assert_eq!(t.get(20, 2), Some(&fresh[19].1[1]));
    }

    #[test]
    fn e_tail_brackets_one_over_e() {
        let iv = e_tail_enclosure(1, 40).unwrap();
        let lo = iv.lo().clone();
        let hi = iv.hi().clone();
        let inv_e = 0.367_879_441_171_442_3_f64;
        let to_f = |r: &BigRational| {
            use num_traits::ToPrimitive;
            r.to_f64().unwrap()
        };
        assert!(to_f(&lo) <= inv_e + 1e-16 && inv_e - 1e-16 <= to_f(&hi));
        assert!(to_f(&iv.width()) < 1e-40);
    }

    #[test]
    fn e_tail_width_is_reciprocal_factorial() {
        for k in 1..20u64 {
            for j in 2..8u64 {
                let iv = e_tail_enclosure(k, j).unwrap();
                assert_eq!(iv.width(), BigRational::new(BigInt::one(), factorial(k + j)));
            }
        }
    }

    #[test]
    fn e_tail_small_case_endpoints() {
        let iv = e_tail_enclosure(4, 2).unwrap();
        let s55 = q(-1, 120);
        let s56 = q(-1, 120) + q(1, 720);
        assert_eq!(iv, RationalInterval::hull(s55, s56));
        assert!(e_tail_enclosure(0, 3).is_err());
        assert!(e_tail_enclosure(3, 1).is_err());
    }

    #[test]
    fn scaled_tail_agrees_with_unscaled() {
        for k in 1..30u64 {
            let plain = e_tail_enclosure(k, 12).unwrap();
            let scaled = scaled_e_tail_enclosure(k, 12);
            let sign = if k % 2 == 1 { 1 } else { -1 };
            let c = BigRational::from_integer(factorial(k) * sign);
            assert_eq!(plain.scale(&c), scaled);
            assert!(scaled.lo() > &q(1, k as i64 + 2) || k == 0);
            assert!(scaled.hi() < &q(1, k as i64 + 1));
        }
    }

    #[test]
    fn telescoping_examples() {
        assert!(telescoping_sum(0, 5).is_err());
        assert!(telescoping_sum(1, 1).is_err());
        for m in 1..6u64 {
            let single = telescoping_sum(m, 2).unwrap();
            let expect = BigRational::new(BigInt::one(), factorial(m + 1))
                - BigRational::new(BigInt::from(2), factorial(m + 2));
            assert_eq!(single, expect);
        }
        let big = telescoping_sum(3, 100).unwrap();
        let direct = q(1, 24) - BigRational::new(factorial(100), factorial(103));
        assert_eq!(big, direct);
        let near_half = telescoping_sum(1, 2000).unwrap();
        assert_eq!(near_half, q(1, 2) - q(1, 2001));
    }

    #[test]
    fn telescoping_closed_form_grid() {
        for m in (1..=50u64).step_by(7) {
            for k in [2u64, 3, 17, 120, 500] {
                let lhs = telescoping_sum(m, k).unwrap();
                let rhs = BigRational::new(BigInt::one(), factorial(m + 1))
                    - BigRational::new(factorial(k), factorial(k + m));
                assert_eq!(lhs, rhs, "m={m} K={k}");
            }
        }
    }

    #[test]
    fn partial_fraction_split() {
        let mut mf = BigInt::one();
        for m in 1..=1000u64 {
            mf *= m;
            let m1f = &mf * (m + 1);
            let lhs = BigRational::new(BigInt::one(), &m1f * m);
            let rhs = BigRational::new(BigInt::one(), &mf * m) - BigRational::new(BigInt::one(), m1f);
            assert_eq!(lhs, rhs);
        }
    }

    proptest! {
        #[test]
        fn interval_scale_preserves_membership(n in -1000i64..1000, d in 1i64..1000, c in -50i64..50) {
            let x = q(n, d);
            let iv = RationalInterval::hull(x.clone() - q(1, 7), x.clone() + q(1, 9));
            let c = q(c, 3);
            prop_assert!(iv.scale(&c).contains(&(x * c)));
        }
    }
}

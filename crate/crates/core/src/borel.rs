//! Borel transforms of the divergent series for γ and δ.
//!
//! `B_γ(u) = Σ (−u)^k !k/(k·k!)` and `B_δ(u) = ln(1+u)` both have a single
//! logarithmic singularity at `u = −1`. The combination `B_γ + α B_δ` is entire
//! exactly when `α = 1/e`.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};

use crate::error::{LabError, Result};
use crate::exact::derangement_ratio;
use crate::linear_form::{Alpha, DerangementGap, LinearFormCoefficient};
use crate::quadrature::{integrate_finite, QuadratureConfig};
use crate::real::{const_ln2, Mag, PrecisionReal};
use crate::special::{e1, ei, ein, euler_gamma_bits, Z_MAX};

/// Which transform a series or integral refers to.
#[derive(Debug, Clone)]
pub enum TransformKind {
    Gamma,
    Delta,
    Combined(Alpha),
}

impl TransformKind {
    pub fn label(&self) -> String {
        match self {
            TransformKind::Gamma => "gamma".into(),
            TransformKind::Delta => "delta".into(),
            TransformKind::Combined(a) => format!("combined({a})"),
        }
    }
}

/// Coefficients `c_1 … c_K` of a Borel transform as exact linear forms in `α`.
#[derive(Debug, Clone)]
pub struct TransformSeries {
    pub kind: TransformKind,
    pub coefficients: Vec<LinearFormCoefficient>,
}

fn gamma_coefficient(k: u64) -> BigRational {
    let c = derangement_ratio(k) / BigRational::from_integer(BigInt::from(k));
    if k % 2 == 0 {
        c
    } else {
        -c
    }
}

fn delta_coefficient(k: u64) -> BigRational {
    let c = BigRational::new(BigInt::one(), BigInt::from(k));
    if k % 2 == 1 {
        c
    } else {
        -c
    }
}

/// Exact coefficients for `k = 1..=K`.
///
/// Gamma-kind puts its value in `a` (with `b = 0`), delta-kind in `b` (with
/// `a = 0`), and the combined kind carries both.
pub fn transform_coefficients(kind: TransformKind, k_max: usize) -> Result<TransformSeries> {
    if k_max == 0 {
        return Err(LabError::Precondition("need at least one coefficient".into()));
    }
    let coefficients = (1..=k_max as u64)
        .map(|k| {
            let (a, b) = match kind {
                TransformKind::Gamma => (gamma_coefficient(k), BigRational::zero()),
                TransformKind::Delta => (BigRational::zero(), delta_coefficient(k)),
                TransformKind::Combined(_) => (gamma_coefficient(k), delta_coefficient(k)),
            };
            LinearFormCoefficient::new(a, b)
        })
        .collect();
    Ok(TransformSeries { kind, coefficients })
}

impl TransformSeries {
    pub fn len(&self) -> usize {
        self.coefficients.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coefficients.is_empty()
    }

    /// Numeric value of `c_k` (1-based), using the root-safe path for the combined kind.
    pub fn coefficient_value(&self, k: usize, prec: u32) -> PrecisionReal {
        let c = &self.coefficients[k - 1];
        match &self.kind {
            TransformKind::Gamma => PrecisionReal::from_rational(&c.a, prec),
            TransformKind::Delta => PrecisionReal::from_rational(&c.b, prec),
            TransformKind::Combined(alpha) => {
                // c_k = (−1)^k (D_k − α)/k
                let scale = delta_coefficient(k as u64) * -BigRational::one();
                DerangementGap::new(k as u64, scale).evaluate(alpha, prec)
            }
        }
    }

    /// Truncated series `Σ_{k≤K} c_k u^k`.
    pub fn evaluate(&self, u: &PrecisionReal) -> PrecisionReal {
        let prec = u.prec();
        let mut sum = PrecisionReal::zero(prec);
        let mut pw = PrecisionReal::one(prec);
        for k in 1..=self.len() {
            pw = &pw * u;
            sum = &sum + &(&self.coefficient_value(k, prec) * &pw);
        }
        sum
    }

    /// Bound on `|Σ_{k>K} c_k u^k|` for `|u| < 1`, from `|c_k| ≤ (1 + |α|)/k`.
    pub fn remainder_bound(&self, u: &PrecisionReal) -> Result<Mag> {
        let x = u.abs_upper();
        if x >= Mag::one() {
            return Err(LabError::Domain("remainder bound needs |u| < 1".into()));
        }
        let k1 = self.len() as u64 + 1;
        let xf = x.to_f64();
        let lead = Mag::from_f64_up(xf.powi(k1 as i32) / (1.0 - xf) * (1.0 + 1e-12));
        let factor = match &self.kind {
            TransformKind::Combined(a) => Mag::one().add(a.to_real(64).abs_upper()),
            _ => Mag::one(),
        };
        Ok(lead.mul(factor).div(Mag::from_u64(k1)))
    }
}

/// Constants shared by every evaluation of the closed forms.
#[derive(Debug, Clone)]
pub struct ClosedForms {
    prec: u32,
    gamma: PrecisionReal,
    ei1: PrecisionReal,
    inv_e: PrecisionReal,
}

impl ClosedForms {
    pub fn new(prec: u32) -> Self {
        let one = PrecisionReal::one(prec);
        Self {
            prec,
            gamma: euler_gamma_bits(prec),
            ei1: ei(&one).expect("Ei(1) is in range"),
            inv_e: Alpha::inv_e().to_real(prec),
        }
    }

    pub fn prec(&self) -> u32 {
        self.prec
    }

    fn check_domain(u: &PrecisionReal) -> Result<PrecisionReal> {
        let up1 = u + &PrecisionReal::one(u.prec());
        if !up1.is_positive() {
            return Err(LabError::Domain(format!(
                "Borel transforms are singular at u = -1; got u = {}",
                u.to_sci_string(10)
            )));
        }
        Ok(up1)
    }

    /// `B_γ(u) = Σ u^k/(k·k!) + (Ei(1) − Ei(u+1))/e`, with `Σ u^k/(k·k!) = −Ein(−u)`.
    pub fn bgamma(&self, u: &PrecisionReal) -> Result<PrecisionReal> {
        let up1 = Self::check_domain(u)?;
        let u = u.with_prec(self.prec);
        let head = -ein(&-&u);
        let tail = &(&self.ei1 - &ei(&up1.with_prec(self.prec))?) * &self.inv_e;
        Ok(&head + &tail)
    }

    /// `B_δ(u) = ln(1 + u)`.
    pub fn bdelta(&self, u: &PrecisionReal) -> Result<PrecisionReal> {
        Self::check_domain(u)?.with_prec(self.prec).ln()
    }

    pub fn transform(&self, kind: &TransformKind, u: &PrecisionReal) -> Result<PrecisionReal> {
        match kind {
            TransformKind::Gamma => self.bgamma(u),
            TransformKind::Delta => self.bdelta(u),
            TransformKind::Combined(a) => {
                let alpha = a.to_real(self.prec);
                Ok(&self.bgamma(u)? + &(&alpha * &self.bdelta(u)?))
            }
        }
    }

    /// `∫_U^∞ e^{−u} B_γ(u) du`, from
    /// `e^{−u}B_γ(u) = g(u) − g(u+1) + e^{−u}(Ei(1)/e − γ − ln u)` with `g = e^{−x}Ei(x)`.
    fn gamma_tail(&self, cap: &PrecisionReal, quad: &QuadratureConfig) -> Result<PrecisionReal> {
        let p = self.prec;
        let one = PrecisionReal::one(p);
        let g = integrate_finite(
            |u| Ok(&(-u).exp() * &ei(u)?),
            cap,
            &(cap + &one),
            quad,
            p,
        )?;
        let em = (-cap).exp();
        let bracket = &(&(&self.ei1 * &self.inv_e) - &self.gamma) - &cap.ln()?;
        Ok(&(&g.value + &(&em * &bracket)) - &e1(cap)?)
    }

    /// `∫_U^∞ e^{−u} ln(1+u) du = e^{−U} ln(1+U) + e·E1(U+1)`.
    fn delta_tail(&self, cap: &PrecisionReal) -> Result<PrecisionReal> {
        let p = self.prec;
        let up1 = cap + &PrecisionReal::one(p);
        let e = self.inv_e.recip()?;
        Ok(&(&(-cap).exp() * &up1.ln()?) + &(&e * &e1(&up1)?))
    }
}

/// `B_γ(u)` at the precision of `u`.
pub fn bgamma_closed(u: &PrecisionReal) -> Result<PrecisionReal> {
    ClosedForms::new(u.prec()).bgamma(u)
}

/// `B_δ(u) = ln(1 + u)` at the precision of `u`.
pub fn bdelta_closed(u: &PrecisionReal) -> Result<PrecisionReal> {
    ClosedForms::new(u.prec()).bdelta(u)
}

/// Laplace integral `∫₀^∞ e^{−u} B(u) du`: quadrature on `[0, U]` plus an exact tail.
pub fn laplace_borel_sum(
    kind: &TransformKind,
    quad: &QuadratureConfig,
    prec: u32,
) -> Result<PrecisionReal> {
    quad.validate()?;
    if quad.interval_cap + 1.0 > Z_MAX {
        return Err(LabError::Range(format!(
            "interval cap must be at most {}, got {}",
            Z_MAX - 1.0,
            quad.interval_cap
        )));
    }
    let forms = ClosedForms::new(prec);
    let cap = PrecisionReal::from_f64(quad.interval_cap, prec);
    let zero = PrecisionReal::zero(prec);
    let head = integrate_finite(
        |u| Ok(&(-u).exp() * &forms.transform(kind, u)?),
        &zero,
        &cap,
        quad,
        prec,
    )?;
    let tail = match kind {
        TransformKind::Gamma => forms.gamma_tail(&cap, quad)?,
        TransformKind::Delta => forms.delta_tail(&cap)?,
        TransformKind::Combined(a) => {
            let alpha = a.to_real(prec);
            &forms.gamma_tail(&cap, quad)? + &(&alpha * &forms.delta_tail(&cap)?)
        }
    };
    Ok(&head.value + &tail)
}

/// Ordinary least squares for a small dense system; returns coefficients and their standard errors.
pub(crate) fn least_squares(rows: &[Vec<f64>], y: &[f64]) -> Option<(Vec<f64>, Vec<f64>)> {
    let p = rows.first()?.len();
    let n = rows.len();
    if n <= p {
        return None;
    }
    let mut ata = vec![vec![0.0; p]; p];
    let mut aty = vec![0.0; p];
    for (r, &yi) in rows.iter().zip(y) {
        for i in 0..p {
            aty[i] += r[i] * yi;
            for j in 0..p {
                ata[i][j] += r[i] * r[j];
            }
        }
    }
    let inv = invert(&ata)?;
    let beta: Vec<f64> = (0..p)
        .map(|i| (0..p).map(|j| inv[i][j] * aty[j]).sum())
        .collect();
    let rss: f64 = rows
        .iter()
        .zip(y)
        .map(|(r, &yi)| {
            let fit: f64 = r.iter().zip(&beta).map(|(a, b)| a * b).sum();
            (yi - fit).powi(2)
        })
        .sum();
    let sigma2 = rss / (n - p) as f64;
    let se = (0..p).map(|i| (sigma2 * inv[i][i]).max(0.0).sqrt()).collect();
    Some((beta, se))
}

fn invert(m: &[Vec<f64>]) -> Option<Vec<Vec<f64>>> {
    let n = m.len();
    let mut a: Vec<Vec<f64>> = m
        .iter()
        .enumerate()
        .map(|(i, row)| {
            let mut r = row.clone();
            r.extend((0..n).map(|j| if i == j { 1.0 } else { 0.0 }));
            r
        })
        .collect();
    for c in 0..n {
        let piv = (c..n).max_by(|&i, &j| a[i][c].abs().total_cmp(&a[j][c].abs()))?;
        if a[piv][c].abs() < 1e-300 {
            return None;
        }
        a.swap(c, piv);
        let d = a[c][c];
        for v in a[c].iter_mut() {
            *v /= d;
        }
        for r in 0..n {
            if r != c {
                let f = a[r][c];
                if f != 0.0 {
                    for j in 0..2 * n {
                        a[r][j] -= f * a[c][j];
                    }
                }
            }
        }
    }
    Some(a.into_iter().map(|r| r[n..].to_vec()).collect())
}

/// Root-test estimate of the radius of convergence.
///
/// Fits `ln|c_k| = a + b ln k − k ln R` over the last half of the coefficients
/// and returns `R` with a radius covering two standard errors of `ln R`.
pub fn radius_of_convergence(ts: &TransformSeries) -> Result<PrecisionReal> {
    let k_max = ts.len();
    if k_max < 50 {
        return Err(LabError::Precondition(format!(
            "radius estimate needs at least 50 coefficients, got {k_max}"
        )));
    }
    let mut rows = Vec::new();
    let mut ys = Vec::new();
    for k in k_max / 2..=k_max {
        let c = ts.coefficient_value(k, 128);
        if c.contains_zero() {
            continue;
        }
        let Some(l) = c.ln_abs_approx() else { continue };
        let kf = k as f64;
        rows.push(vec![1.0, kf.ln(), -kf]);
        ys.push(l);
    }
    if rows.is_empty() {
        return Err(LabError::Undefined(
            "all coefficients vanish; radius is undefined".into(),
        ));
    }
    let (beta, se) = least_squares(&rows, &ys)
        .ok_or_else(|| LabError::Undefined("too few nonzero coefficients to fit".into()))?;
    let ln_r = beta[2];
    let band = 2.0 * se[2] + 1e-12;
    let r = ln_r.exp();
    let half = ((ln_r + band).exp() - (ln_r - band).exp()) / 2.0;
    Ok(PrecisionReal::from_f64(r, 64).with_radius(Mag::from_f64_up(half)))
}

/// Target of a Stokes-constant extraction.
#[derive(Debug, Clone)]
pub enum StokesTarget {
    Gamma,
    Delta,
    Combined(Alpha),
    /// Order-`n` generalization; no closed-form transform is available for it.
    Generalized(u32),
}

/// Ratios `B(u)/ln(u+1)` on `u_j = −1 + 2^{−j}` and their extrapolation to `u = −1`.
#[derive(Debug, Clone)]
pub struct StokesEstimate {
    pub target: StokesTarget,
    /// `(j, u_j, ratio)` with `u_j` decreasing towards `−1`.
    pub samples: Vec<(u32, PrecisionReal, PrecisionReal)>,
    pub extrapolated: PrecisionReal,
    pub method: String,
}

/// First ladder exponent; earlier rungs sit too far from the singularity to help.
pub const STOKES_FIRST_RUNG: u32 = 20;

/// Extract the coefficient of `ln(u+1)` at the singularity.
///
/// The ratio behaves like `s + c/ln(u+1) + O(u+1)`. On the ladder this is
/// `s + c'/j` plus a geometric remainder, so Richardson extrapolation runs in
/// `h = 1/j` unless consecutive differences shrink geometrically.
pub fn stokes_constant(target: &StokesTarget, samples: usize, prec: u32) -> Result<StokesEstimate> {
    if samples < 5 {
        return Err(LabError::Precondition(format!(
            "need at least 5 ladder samples, got {samples}"
        )));
    }
    let kind = match target {
        StokesTarget::Gamma => TransformKind::Gamma,
        StokesTarget::Delta => TransformKind::Delta,
        StokesTarget::Combined(a) => TransformKind::Combined(a.clone()),
        StokesTarget::Generalized(n) => {
            return Err(LabError::Undefined(format!(
                "no closed-form transform is available for order {n}"
            )))
        }
    };
    let forms = ClosedForms::new(prec);
    let ln2 = const_ln2(prec);
    let mut pts = Vec::with_capacity(samples);
    for i in 0..samples as u32 {
        let j = STOKES_FIRST_RUNG + i;
        let up1 = PrecisionReal::one(prec).mul_pow2(-(j as i64));
        let u = &up1 - &PrecisionReal::one(prec);
        let b = forms.transform(&kind, &u)?;
        // ln(u+1) = −j ln 2 exactly on the ladder
        let l = -ln2.mul_i64(j as i64);
        pts.push((j, u, b.checked_div(&l)?));
    }
    let (extrapolated, method) = richardson(&pts, prec);
    Ok(StokesEstimate {
        target: target.clone(),
        samples: pts,
        extrapolated,
        method,
    })
}

fn richardson(pts: &[(u32, PrecisionReal, PrecisionReal)], prec: u32) -> (PrecisionReal, String) {
    let n = pts.len();
    let r = |i: usize| &pts[i].2;
    let d1 = r(n - 1) - r(n - 2);
    let d0 = r(n - 2) - r(n - 3);
    let floor = Mag::pow2(-(prec as i64) + 8).max(r(n - 1).radius().mul_pow2(4));
    if d1.abs_upper() <= floor && d0.abs_upper() <= floor {
        return (r(n - 1).clone(), "constant ladder (no extrapolation)".into());
    }
    let ratio = d1.to_f64() / d0.to_f64();
    if (0.35..0.65).contains(&ratio) {
        // geometric in 2^{-j}: one Richardson step with factor 2
        let v = &r(n - 1).mul_i64(2) - r(n - 2);
        return (v, format!("richardson in 2^-j, order 1 (difference ratio {ratio:.3})"));
    }
    // algebraic in 1/j: eliminate the c/j term with the last two rungs
    let (j1, j0) = (pts[n - 1].0 as i64, pts[n - 2].0 as i64);
    let num = &r(n - 1).mul_i64(j1) - &r(n - 2).mul_i64(j0);
    let v = num.div_u64((j1 - j0) as u64);
    (
        v,
        format!("richardson in 1/j, order 1 (difference ratio {ratio:.3})"),
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    const P: u32 = 200;

    fn q(a: i64, b: i64) -> BigRational {
        BigRational::new(BigInt::from(a), BigInt::from(b))
    }

    fn real(a: i64, b: i64) -> PrecisionReal {
        PrecisionReal::from_rational(&q(a, b), P)
    }

    #[test]
    fn coefficient_examples() {
        let g = transform_coefficients(TransformKind::Gamma, 3).unwrap();
        assert_eq!(g.coefficients[0].a, q(0, 1));
        assert_eq!(g.coefficients[1].a, q(1, 4));
        assert!(g.coefficients.iter().all(|c| c.b.is_zero()));
        let d = transform_coefficients(TransformKind::Delta, 3).unwrap();
        assert_eq!(d.coefficients[2].b, q(1, 3));
        assert!(d.coefficients.iter().all(|c| c.a.is_zero()));
        assert!(transform_coefficients(TransformKind::Gamma, 0).is_err());
    }

    #[test]
    fn closed_forms_at_simple_points() {
        let z = PrecisionReal::zero(P);
        assert!(bgamma_closed(&z).unwrap().abs_upper().to_f64() < 1e-55);
        assert!(bdelta_closed(&z).unwrap().is_zero_exact() || bdelta_closed(&z).unwrap().abs_upper().to_f64() < 1e-55);
        let e_minus_1 = &Alpha::inv_e().to_real(P).recip().unwrap() - &PrecisionReal::one(P);
        assert!(bdelta_closed(&e_minus_1).unwrap().agrees_within(&PrecisionReal::one(P), 1e-50));
        for bad in [-1i64, -2] {
            let u = PrecisionReal::from_i64(bad, P);
            assert!(matches!(bgamma_closed(&u), Err(LabError::Domain(_))));
            assert!(matches!(bdelta_closed(&u), Err(LabError::Domain(_))));
        }
    }

    #[test]
    fn closed_forms_match_series_at_half() {
        let u = real(1, 2);
        for kind in [TransformKind::Gamma, TransformKind::Delta] {
            let ts = transform_coefficients(kind.clone(), 120).unwrap();
            let closed = ClosedForms::new(P).transform(&kind, &u).unwrap();
            assert!(closed.agrees_within(&ts.evaluate(&u), 1e-30), "{}", kind.label());
        }
    }

    #[test]
    fn bgamma_grows_like_log_near_singularity() {
        let f = ClosedForms::new(P);
        let mut prev = f64::NEG_INFINITY;
        for j in [5i64, 10, 20, 40] {
            let u = &PrecisionReal::one(P).mul_pow2(-j) - &PrecisionReal::one(P);
            let v = f.bgamma(&u).unwrap().to_f64();
            assert!(v > prev);
            prev = v;
        }
        assert!(prev > 9.0);
    }

    #[test]
    fn delta_stokes_is_exactly_one() {
        let s = stokes_constant(&StokesTarget::Delta, 6, P).unwrap();
        for (_, _, r) in &s.samples {
            assert!(r.agrees_within(&PrecisionReal::one(P), 1e-50));
        }
        assert!(s.extrapolated.agrees_within(&PrecisionReal::one(P), 1e-50));
    }

    #[test]
    fn stokes_rejects_short_ladders_and_generalized() {
        assert!(stokes_constant(&StokesTarget::Gamma, 4, P).is_err());
        assert!(matches!(
            stokes_constant(&StokesTarget::Generalized(2), 8, P),
            Err(LabError::Undefined(_))
        ));
    }

    #[test]
    fn least_squares_recovers_line() {
        let rows: Vec<Vec<f64>> = (0..10).map(|i| vec![1.0, i as f64]).collect();
        let y: Vec<f64> = (0..10).map(|i| 3.0 - 2.0 * i as f64).collect();
        let (b, se) = least_squares(&rows, &y).unwrap();
        assert!((b[0] - 3.0).abs() < 1e-12 && (b[1] + 2.0).abs() < 1e-12);
        assert!(se[1] < 1e-10);
    }
}

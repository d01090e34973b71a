//! The ten end-to-end acceptance checks, shared by the test target and the
//! `verify-all` command.

use std::fmt::Display;
use std::time::{Duration, Instant};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::borel::{
    laplace_borel_sum, radius_of_convergence, stokes_constant, transform_coefficients,
    StokesTarget, TransformKind,
};
use crate::error::Result;
use crate::exact::{derangement, factorial, telescoping_prefix_sums};
use crate::generalized::{
    cancellation_bounds, generalized_limit_estimate, generalized_partial_sums, generalized_term,
};
use crate::gumbel::{
    e_function, moment_conditional, moment_full, moment_positive_series, moment_report,
    monte_carlo_moments, prob_nonpositive,
};
use crate::linear_form::{Alpha, DerangementGap};
use crate::quadrature::QuadratureConfig;
use crate::real::{const_pi, Mag, PrecisionConfig, PrecisionReal};
use crate::series::{combined_term, limit_estimate, partial_sums, prop1_finite_identity, Verdict};
use crate::special::{constant_report, ein, euler_gamma, gompertz_delta, ConstantName};

/// Knobs for a full run. Criteria stated at 60 digits never run below 60.
#[derive(Debug, Clone, Serialize)]
pub struct AcceptanceConfig {
    pub digits: u32,
    pub seed: u64,
    pub mc_samples: u64,
}

impl Default for AcceptanceConfig {
    fn default() -> Self {
        Self {
            digits: 60,
            seed: 20_240_101,
            mc_samples: 1_000_000,
        }
    }
}

impl AcceptanceConfig {
    fn cfg60(&self) -> PrecisionConfig {
        PrecisionConfig {
            digits: self.digits.max(60),
            ..PrecisionConfig::default()
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct CriterionResult {
    pub id: u8,
    pub name: String,
    pub passed: bool,
    pub detail: String,
    pub elapsed_ms: u128,
    pub time_limit_ms: Option<u128>,
}

impl Display for CriterionResult {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "criterion {:>2} [{}] {}: {} ({} ms)",
            self.id,
            if self.passed { "PASS" } else { "FAIL" },
            self.name,
            self.detail,
            self.elapsed_ms
        )
    }
}

pub const CRITERIA: [(u8, &str); 10] = [
    (1, "constants"),
    (2, "ein identity"),
    (3, "borel sums"),
    (4, "stokes constants"),
    (5, "exact identities"),
    (6, "numeric dichotomy"),
    (7, "entire combined transform"),
    (8, "gumbel moments"),
    (9, "generalized series"),
    (10, "monte carlo"),
];

fn time_limit(id: u8) -> Option<Duration> {
    match id {
        1 => Some(Duration::from_secs(10)),
        3 => Some(Duration::from_secs(60)),
        6 => Some(Duration::from_secs(30)),
        9 => Some(Duration::from_secs(120)),
        _ => None,
    }
}

#[derive(Default)]
struct Checks {
    failed: Vec<String>,
    passed: Vec<String>,
}

impl Checks {
    fn check(&mut self, label: &str, ok: bool, info: impl Display) {
        let line = format!("{label}: {info}");
        if ok {
            self.passed.push(line);
        } else {
            self.failed.push(line);
        }
    }

    fn within(&mut self, label: &str, got: &PrecisionReal, want: &PrecisionReal, tol: f64) {
        let d = got.distance_upper(want);
        self.check(label, got.agrees_within(want, tol), format!("|diff| <= {:.2e} (tol {tol:.0e})", d.to_f64()));
    }
}

fn mag(x: Mag) -> f64 {
    x.to_f64()
}

pub fn run_criterion(id: u8, cfg: &AcceptanceConfig) -> CriterionResult {
    let name = CRITERIA
        .iter()
        .find(|c| c.0 == id)
        .map(|c| c.1)
        .unwrap_or("unknown");
    let start = Instant::now();
    let mut checks = Checks::default();
    let outcome = match id {
        1 => constants(cfg, &mut checks),
        2 => ein_identity(cfg, &mut checks),
        3 => borel_sums(&mut checks),
        4 => stokes(&mut checks),
        5 => exact_layer(cfg, &mut checks),
        6 => dichotomy(&mut checks),
        7 => entire_transform(&mut checks),
        8 => gumbel(cfg, &mut checks),
        9 => generalized(&mut checks),
        10 => monte_carlo(cfg, &mut checks),
        _ => {
            checks.check("criterion", false, "no such criterion");
            Ok(())
        }
    };
    if let Err(e) = outcome {
        checks.check("error", false, e);
    }
    let elapsed = start.elapsed();
    let limit = time_limit(id);
    if let Some(l) = limit {
        checks.check("runtime", elapsed <= l, format!("{:.1} s of {} s", elapsed.as_secs_f64(), l.as_secs()));
    }
    let passed = checks.failed.is_empty();
    let detail = if passed {
        checks.passed.join("; ")
    } else {
        checks.failed.join("; ")
    };
    CriterionResult {
        id,
        name: name.to_string(),
        passed,
        detail,
        elapsed_ms: elapsed.as_millis(),
        time_limit_ms: limit.map(|l| l.as_millis()),
    }
}

pub fn run_all(cfg: &AcceptanceConfig) -> Vec<CriterionResult> {
    CRITERIA.iter().map(|c| run_criterion(c.0, cfg)).collect()
}

fn constants(cfg: &AcceptanceConfig, c: &mut Checks) -> Result<()> {
    let pc = cfg.cfg60();
    let quad = QuadratureConfig::for_precision(&pc);
    for (name, prefix) in [(ConstantName::Gamma, "0.577215"), (ConstantName::Delta, "0.596347")] {
        let r = constant_report(name, &pc, &quad)?;
        let text = r.value().to_fixed_string(12);
        c.check(&format!("{name} prefix"), text.starts_with(prefix), &text);
        let worst = mag(r.max_pairwise_discrepancy);
        c.check(&format!("{name} routes"), worst < 1e-50, format!("{worst:.2e}"));
    }
    Ok(())
}

fn ein_identity(cfg: &AcceptanceConfig, c: &mut Checks) -> Result<()> {
    let pc = cfg.cfg60();
    let p = pc.bits();
    let g = euler_gamma(&pc);
    let d = gompertz_delta(&pc)?;
    let e = Alpha::inv_e().to_real(p).recip()?;
    let ein1 = ein(&PrecisionReal::one(p));
    let eq2 = &ein1 - &(&g + &d.checked_div(&e)?);
    c.check("ein(1) - (g + d/e)", mag(eq2.abs_upper()) < 1e-40, format!("{:.2e}", mag(eq2.abs_upper())));
    let hardy = &d + &(&e * &(&g - &ein1));
    c.check("d + e(g - ein(1))", mag(hardy.abs_upper()) < 1e-40, format!("{:.2e}", mag(hardy.abs_upper())));
    Ok(())
}

fn borel_sums(c: &mut Checks) -> Result<()> {
    let pc = PrecisionConfig::with_digits(40)?;
    let p = pc.bits();
    let quad = QuadratureConfig::for_precision(&pc);
    let g = laplace_borel_sum(&TransformKind::Gamma, &quad, p)?;
    c.within("gamma kind", &g, &euler_gamma(&pc), 1e-12);
    let d = laplace_borel_sum(&TransformKind::Delta, &quad, p)?;
    c.within("delta kind", &d, &gompertz_delta(&pc)?, 1e-30);
    let comb = laplace_borel_sum(&TransformKind::Combined(Alpha::inv_e()), &quad, p)?;
    c.within("combined at 1/e", &comb, &ein(&PrecisionReal::one(p)), 1e-12);
    Ok(())
}

fn stokes(c: &mut Checks) -> Result<()> {
    let p = 160;
    let d = stokes_constant(&StokesTarget::Delta, 10, p)?;
    let one = PrecisionReal::one(p);
    let exact = d.samples.iter().all(|s| {
        s.2.contains_rational(&BigRational::one()) && s.2.radius() < Mag::pow2(-(p as i64) + 16)
    });
    c.check("delta ratio", exact && d.extrapolated.agrees_within(&one, 1e-40), "1 at every rung");
    let g = stokes_constant(&StokesTarget::Gamma, 10, p)?;
    let minus_inv_e = -Alpha::inv_e().to_real(p);
    let dg = mag(g.extrapolated.distance_upper(&minus_inv_e));
    c.check("gamma", dg < 1e-6, format!("{dg:.2e} via {}", g.method));
    let k = stokes_constant(&StokesTarget::Combined(Alpha::inv_e()), 10, p)?;
    let dk = mag(k.extrapolated.abs_upper());
    c.check("combined at 1/e", dk < 1e-6, format!("{dk:.2e}"));
    Ok(())
}

fn exact_layer(cfg: &AcceptanceConfig, c: &mut Checks) -> Result<()> {
    // !k against k! Σ (−1)^ℓ/ℓ!
    let mut partial = BigRational::zero();
    let mut inv_fact = BigRational::one();
    let mut ok = true;
    for k in 0..=500u64 {
        if k > 0 {
            inv_fact /= BigRational::from_integer(BigInt::from(k));
        }
        if k % 2 == 0 {
            partial += &inv_fact;
        } else {
            partial -= &inv_fact;
        }
        ok &= BigRational::from_integer(derangement(k)) == &partial * BigRational::from_integer(factorial(k));
    }
    c.check("derangement sum", ok, "k <= 500");

    let mut ok = true;
    for m in 1..=50u64 {
        let prefixes = telescoping_prefix_sums(m, 500)?;
        let head = BigRational::new(BigInt::one(), factorial(m + 1));
        // K!/(K+m)! = 1/((K+1)⋯(K+m)), updated as K grows
        for (i, s) in prefixes.iter().enumerate() {
            let kk = i as u64 + 2;
            let mut den = BigInt::one();
            for j in 1..=m {
                den *= kk + j;
            }
            ok &= *s == &head - BigRational::new(BigInt::one(), den);
        }
    }
    c.check("telescoping", ok, "m <= 50, K <= 500");

    let mut ok = true;
    let mut mf = BigInt::one();
    for m in 1..=1000u64 {
        mf *= m;
        let mb = BigInt::from(m);
        let lhs = BigRational::new(BigInt::one(), &mb * &mf * (m + 1));
        let rhs = BigRational::new(BigInt::one(), &mb * &mf) - BigRational::new(BigInt::one(), &mf * (m + 1));
        ok &= lhs == rhs;
    }
    c.check("partial fractions", ok, "m <= 1000");

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut ok = true;
    for _ in 0..20 {
        let alpha = BigRational::new(
            BigInt::from(rng.gen_range(-1000i64..=1000)),
            BigInt::from(rng.gen_range(1i64..=1000)),
        );
        let k = rng.gen_range(2u64..=50);
        let m = rng.gen_range(2u64..=20);
        ok &= prop1_finite_identity(&alpha, k, m)?.residual.is_zero();
    }
    c.check("finite identity", ok, "20 random cases, residual 0");
    Ok(())
}

fn dichotomy(c: &mut Checks) -> Result<()> {
    let p = PrecisionConfig::default().bits();
    let reference = ein(&PrecisionReal::one(p));
    let tr = partial_sums(&Alpha::inv_e(), 1000, p)?;
    let raw = mag(tr.last_sum().distance_upper(&reference));
    c.check("raw K=1000", raw < 2e-3, format!("{raw:.2e}"));
    c.check("verdict at 1/e", tr.verdict == Verdict::Converging, tr.verdict);
    c.within("tail corrected", &limit_estimate(1000, p)?, &reference, 1e-5);
    for a in ["0", "0.3", "1", "1/e+1e-3", "1/e-1e-3", "1/e+1e-8", "1/e-1e-8"] {
        let tr = partial_sums(&Alpha::parse(a)?, 400, p)?;
        let big = tr.max_abs_term() > Mag::from_f64_up(1e10);
        c.check(
            &format!("alpha={a}"),
            tr.verdict == Verdict::Diverging && big,
            format!("{}, max term 2^{:.0}", tr.verdict, tr.max_abs_term().log2_ceil()),
        );
    }
    Ok(())
}

fn entire_transform(c: &mut Checks) -> Result<()> {
    let mut ok = true;
    for k in 1..=300u64 {
        let scale = crate::linear_form::sign_pow(k) / BigRational::from_integer(BigInt::from(k));
        let (lo, hi) = DerangementGap::new(k, scale)
            .enclosure_at_inv_e(&BigRational::zero(), 64)
            .abs_bounds();
        let bound = BigRational::new(BigInt::one(), BigInt::from(k) * factorial(k + 1));
        ok &= lo <= bound && hi <= bound;
    }
    c.check("coefficient bound", ok, "k <= 300");
    for kind in [TransformKind::Gamma, TransformKind::Delta] {
        let r = radius_of_convergence(&transform_coefficients(kind.clone(), 200)?)?.to_f64();
        c.check(&kind.label(), (r - 1.0).abs() < 0.05, format!("radius {r:.3}"));
    }
    let r = radius_of_convergence(&transform_coefficients(TransformKind::Combined(Alpha::inv_e()), 200)?)?.to_f64();
    c.check("combined", r > 10.0, format!("radius {r:.1}"));
    Ok(())
}

fn gumbel(cfg: &AcceptanceConfig, c: &mut Checks) -> Result<()> {
    let pc = cfg.cfg60();
    let p = pc.bits();
    let quad = QuadratureConfig::for_precision(&pc);
    let mut worst = 0.0f64;
    for n in 0..=8 {
        worst = worst.max(mag(moment_report(n, &quad, p)?.identity_residual));
    }
    c.check("closure n <= 8", worst < 1e-25, format!("{worst:.2e}"));
    let g = euler_gamma(&pc);
    c.within("E[X] = gamma", &moment_full(1, &quad, p)?, &g, 1e-30);
    c.within("conditional = delta", &moment_conditional(1, &quad, p)?, &gompertz_delta(&pc)?, 1e-30);
    c.within("P(X <= 0)", &prob_nonpositive(&quad, p)?, &Alpha::inv_e().to_real(p), 1e-30);
    let pi = const_pi(p);
    let m2 = &g.square() + &pi.square().div_u64(6);
    c.within("E[X^2]", &moment_full(2, &quad, p)?, &m2, 1e-20);
    let one = PrecisionReal::one(p);
    let mut worst = 0.0f64;
    for n in 0..=6 {
        let d = e_function(n, &one, &quad, p)?.distance_upper(&moment_positive_series(n, p)?);
        worst = worst.max(mag(d));
    }
    c.check("F_n(1) n <= 6", worst < 1e-20, format!("{worst:.2e}"));
    Ok(())
}

fn generalized(c: &mut Checks) -> Result<()> {
    let p = PrecisionConfig::default().bits();
    let mut ok = true;
    for k in 1..=300 {
        ok &= generalized_term(1, k)?.form() == combined_term(k)?.form();
    }
    c.check("n=1 reduction", ok, "k <= 300");
    for n in [2u32, 3] {
        let target = moment_positive_series(n, p)?;
        let est = generalized_limit_estimate(n, 3000, p)?;
        c.within(&format!("n={n} limit"), &est, &target, 1e-4);
        for a in ["0", "1/e+1e-3", "1/e-1e-3"] {
            let tr = generalized_partial_sums(n, &Alpha::parse(a)?, 400, p)?;
            c.check(&format!("n={n} alpha={a}"), tr.verdict == Verdict::Diverging, tr.verdict);
        }
    }
    for n in 1..=4u32 {
        let all = cancellation_bounds(n, 1000)?;
        c.check(&format!("n={n} term bound"), all.iter().all(|b| b.holds), "k <= 1000");
    }
    Ok(())
}

fn monte_carlo(cfg: &AcceptanceConfig, c: &mut Checks) -> Result<()> {
    let a = monte_carlo_moments(1, cfg.mc_samples, cfg.seed)?;
    let b = monte_carlo_moments(1, cfg.mc_samples, cfg.seed)?;
    let gamma = euler_gamma(&PrecisionConfig::default()).to_f64();
    let z = (a.full.mean - gamma).abs() / a.full.std_error;
    c.check("mean vs gamma", z < 4.0, format!("{z:.2} standard errors"));
    let z = (a.nonpositive.mean - (-1.0f64).exp()).abs() / a.nonpositive.std_error;
    c.check("indicator vs 1/e", z < 4.0, format!("{z:.2} standard errors"));
    let same = a.full.mean.to_bits() == b.full.mean.to_bits()
        && a.full.std_error.to_bits() == b.full.std_error.to_bits()
        && a.nonpositive.mean.to_bits() == b.nonpositive.mean.to_bits();
    c.check("reproducible", same, "two runs bit-identical");
    Ok(())
}

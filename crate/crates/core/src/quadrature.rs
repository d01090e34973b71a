//! Double-exponential quadrature over ball arithmetic.
//!
//! Two transforms share one driver: tanh-sinh for finite intervals and
//! exp-sinh for `[a, ∞)`. The abscissa range is fixed on the coarsest level
//! (step 1/2) by scanning outwards until two consecutive weighted samples
//! drop below the truncation threshold; finer levels add the odd points
//! inside that range. Node values are computed in parallel and summed in
//! index order, so results do not depend on the thread count.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};
use crate::real::{const_pi, Mag, PrecisionConfig, PrecisionReal};

/// Which double-exponential substitution to use.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Transform {
    /// `x = a + (b - a) / (1 + exp(-π sinh t))` on a finite interval.
    TanhSinh,
    /// `x = a + exp(π/2 sinh t)` on `[a, ∞)`.
    ExpSinh,
}

/// Quadrature settings exposed to callers and the command line.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadratureConfig {
    /// Maximum number of integrand evaluations per integral.
    pub node_budget: usize,
    /// Target absolute error.
    pub tolerance: f64,
    /// Upper end `U` of the finite Laplace interval used for slowly decaying transforms.
    pub interval_cap: f64,
    /// Finest refinement level; the step is `2^-(level + 1)`.
    pub max_level: u32,
}

impl QuadratureConfig {
    pub const MIN_BUDGET: usize = 16;

    pub fn new(node_budget: usize, tolerance: f64, interval_cap: f64) -> Result<Self> {
        let cfg = Self {
            node_budget,
            tolerance,
            interval_cap,
            max_level: 9,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.node_budget < Self::MIN_BUDGET {
            return Err(LabError::Precondition(format!(
                "node budget must be at least {}, got {}",
                Self::MIN_BUDGET,
                self.node_budget
            )));
        }
        if !(self.tolerance > 0.0 && self.tolerance.is_finite()) {
            return Err(LabError::Precondition(format!(
                "tolerance must be positive, got {}",
                self.tolerance
            )));
        }
        if !(self.interval_cap > 1.0 && self.interval_cap.is_finite()) {
            return Err(LabError::Precondition(format!(
                "interval cap must exceed 1, got {}",
                self.interval_cap
            )));
        }
        Ok(())
    }

    /// Tolerance tied to a decimal precision: `10^-digits`.
    pub fn for_digits(digits: u32) -> Self {
        Self {
            node_budget: 40_000,
            tolerance: 10f64.powi(-(digits as i32)),
            interval_cap: 29.0,
            max_level: 9,
        }
    }

    /// Tolerance halfway into the guard digits of a precision configuration.
    pub fn for_precision(cfg: &PrecisionConfig) -> Self {
        Self::for_digits(cfg.digits + cfg.guard_digits / 2)
    }

    pub fn with_tolerance(mut self, tolerance: f64) -> Self {
        self.tolerance = tolerance;
        self
    }

    pub fn with_budget(mut self, node_budget: usize) -> Self {
        self.node_budget = node_budget;
        self
    }
}

impl Default for QuadratureConfig {
    fn default() -> Self {
        Self::for_digits(50)
    }
}

/// Result of one quadrature run.
#[derive(Debug, Clone)]
pub struct Quadrature {
    /// Integral estimate; its radius includes the level-difference estimate.
    pub value: PrecisionReal,
    /// Difference between the last two refinement levels.
    pub level_difference: Mag,
    pub nodes: usize,
    pub levels: u32,
}

struct Nodes {
    transform: Transform,
    a: PrecisionReal,
    width: Option<PrecisionReal>,
    pi: PrecisionReal,
    prec: u32,
}

impl Nodes {
    /// `(x(t), x'(t))` for the dyadic abscissa `j * 2^-shift`.
    fn at(&self, j: i64, shift: u32) -> (PrecisionReal, PrecisionReal) {
        let t = PrecisionReal::from_i64(j, self.prec).mul_pow2(-(shift as i64));
        let (s, c) = t.sinh_cosh();
        match self.transform {
            Transform::TanhSinh => {
                let e = (-(&self.pi * &s)).exp();
                let one = PrecisionReal::one(self.prec);
                let g = (&one + &e).recip().expect("1 + e^x is positive");
                let w = &(&(&self.pi * &c) * &e) * &g.square();
                let width = self.width.as_ref().expect("finite interval");
                (&self.a + &(width * &g), width * &w)
            }
            Transform::ExpSinh => {
                let big = (&self.pi * &s).mul_pow2(-1).exp();
                let w = &(&self.pi * &c).mul_pow2(-1) * &big;
                (&self.a + &big, w)
            }
        }
    }
}

const T_MIN_SCAN: i64 = 3; // in units of the coarse step 1/2
const T_MAX_SCAN: i64 = 14;

fn drive<F>(f: &F, nodes: &Nodes, cfg: &QuadratureConfig) -> Result<Quadrature>
where
    F: Fn(&PrecisionReal) -> Result<PrecisionReal> + Sync,
{
    cfg.validate()?;
    let prec = nodes.prec;
    let eval = |j: i64, shift: u32| -> Result<PrecisionReal> {
        let (x, w) = nodes.at(j, shift);
        if w.is_zero_exact() {
            return Ok(PrecisionReal::zero(prec));
        }
        Ok(&f(&x)? * &w)
    };
    let thresh = Mag::from_f64_down(cfg.tolerance).mul_pow2(-12);

    // coarse scan with step 1/2 fixes the abscissa range
    let mut count = 0usize;
    let center = eval(0, 1)?;
    count += 1;
    let mut coarse = center;
    let mut bounds = [0i64; 2];
    let mut tail_mag = Mag::ZERO;
    for (side, dir) in [(0usize, -1i64), (1, 1)] {
        let mut small_run = 0;
        let mut j = 0i64;
        loop {
            j += dir;
            if j.abs() > T_MAX_SCAN {
                break;
            }
            let term = eval(j, 1)?;
            count += 1;
            let mag = term.abs_upper();
            coarse = &coarse + &term;
            if mag < thresh {
                small_run += 1;
            } else {
                small_run = 0;
            }
            if small_run >= 2 && j.abs() >= T_MIN_SCAN {
                tail_mag = tail_mag.add(mag);
                break;
            }
        }
        bounds[side] = j;
    }
    // step 1/2 at shift 1
    let mut total = coarse;
    let mut estimate = total.mul_pow2(-1);
    let mut level = 0u32;
    let mut last_diff = f64::INFINITY;
    loop {
        level += 1;
        if level > cfg.max_level {
            return Err(LabError::Quadrature {
                achieved: last_diff,
                target: cfg.tolerance,
                nodes: count,
            });
        }
        let shift = level + 1;
        let lo = bounds[0] << level;
        let hi = bounds[1] << level;
        let odd: Vec<i64> = (lo..=hi).filter(|j| j & 1 == 1).collect();
        if count + odd.len() > cfg.node_budget {
            let achieved = estimate.radius().to_f64();
            return Err(LabError::Quadrature {
                achieved,
                target: cfg.tolerance,
                nodes: count,
            });
        }
        let values: Vec<Result<PrecisionReal>> =
            odd.par_iter().map(|&j| eval(j, shift)).collect();
        count += odd.len();
        for v in values {
            total = &total + &v?;
        }
        let next = total.mul_pow2(-(shift as i64));
        let diff = (&next - &estimate).abs_upper();
        estimate = next;
        last_diff = diff.to_f64();
        if level >= 2 && diff.to_f64() <= cfg.tolerance / 8.0 {
            // the truncated tails are bounded by a few boundary samples
            let trunc = tail_mag.mul_pow2(2);
            let value = estimate.clone().with_radius(diff.add(trunc));
            return Ok(Quadrature {
                value,
                level_difference: diff,
                nodes: count,
                levels: level,
            });
        }
    }
}

/// `∫_a^b f(x) dx` by tanh-sinh.
pub fn integrate_finite<F>(
    f: F,
    a: &PrecisionReal,
    b: &PrecisionReal,
    cfg: &QuadratureConfig,
    prec: u32,
) -> Result<Quadrature>
where
    F: Fn(&PrecisionReal) -> Result<PrecisionReal> + Sync,
{
    let nodes = Nodes {
        transform: Transform::TanhSinh,
        a: a.with_prec(prec),
        width: Some((b - a).with_prec(prec)),
        pi: const_pi(prec),
        prec,
    };
    drive(&f, &nodes, cfg)
}

/// `∫_a^∞ f(x) dx` by exp-sinh.
pub fn integrate_half_line<F>(
    f: F,
    a: &PrecisionReal,
    cfg: &QuadratureConfig,
    prec: u32,
) -> Result<Quadrature>
where
    F: Fn(&PrecisionReal) -> Result<PrecisionReal> + Sync,
{
    let nodes = Nodes {
        transform: Transform::ExpSinh,
        a: a.with_prec(prec),
        width: None,
        pi: const_pi(prec),
        prec,
    };
    drive(&f, &nodes, cfg)
}

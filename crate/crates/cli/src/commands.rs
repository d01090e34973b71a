use einlab::acceptance::{run_criterion, AcceptanceConfig, CRITERIA};
use einlab::borel::{
    laplace_borel_sum, radius_of_convergence, stokes_constant, transform_coefficients,
    StokesTarget, TransformKind,
};
use einlab::generalized::{generalized_limit_estimate, generalized_partial_sums};
use einlab::gumbel::{moment_report, monte_carlo_moments, prob_nonpositive};
use einlab::linear_form::parse_rational;
use einlab::series::{limit_estimate, optimal_truncation, partial_sums, prop1_finite_identity};
use einlab::special::{constant_report, ein, euler_gamma, gompertz_delta, ConstantName};
use einlab::{
    Alpha, LabError, PartialSumTrace, PrecisionConfig, PrecisionReal, QuadratureConfig,
};
use serde_json::{json, Value};

use crate::args::*;
use crate::output::{ball, sci, CliError, Outcome, RunConfig, Table, TRACE_HEADER};

pub struct Env {
    pub cfg: PrecisionConfig,
    pub quad: QuadratureConfig,
    pub digits: u32,
}

impl Env {
    pub fn new(common: &Common) -> Result<Self, CliError> {
        let cfg = PrecisionConfig::with_digits(common.digits)
            .map_err(|e| CliError::BadArgs(e.to_string()))?;
        let mut quad = QuadratureConfig::for_precision(&cfg);
        if let Some(b) = common.quad_budget {
            quad = quad.with_budget(b);
            quad.validate().map_err(|e| CliError::BadArgs(e.to_string()))?;
        }
        Ok(Self {
            cfg,
            quad,
            digits: common.digits,
        })
    }

    fn prec(&self) -> u32 {
        self.cfg.bits()
    }

    fn target(&self) -> f64 {
        10f64.powi(-(self.digits as i32))
    }
}

fn parse_alpha(s: &str) -> Result<Alpha, CliError> {
    Alpha::parse(s).map_err(|e| CliError::BadArgs(format!("--alpha {s}: {e}")))
}

pub fn base_config(name: &str, common: &Common) -> RunConfig {
    RunConfig {
        command: name.to_string(),
        digits: common.digits,
        quad_budget: common.quad_budget,
        format: Some(common.format),
        output: common.output.clone(),
        ..RunConfig::default()
    }
}

fn trace_table(tr: &PartialSumTrace, digits: u32) -> Table {
    let d = digits.min(40);
    Table {
        header: TRACE_HEADER.to_vec(),
        rows: tr
            .rows
            .iter()
            .map(|r| {
                vec![
                    r.k.to_string(),
                    sci(&r.term, d),
                    sci(&r.cumulative, d),
                    sci(&r.term.abs(), d),
                ]
            })
            .collect(),
    }
}

fn trace_json(tr: &PartialSumTrace, digits: u32) -> Value {
    json!({
        "alpha": tr.alpha.to_string(),
        "verdict": tr.verdict,
        "evidence": tr.evidence,
        "terms": tr.rows.len(),
        "last_sum": ball(tr.last_sum(), digits),
        "max_abs_term": tr.max_abs_term().to_f64(),
    })
}

pub fn constants(a: &ConstantsArgs) -> Result<Outcome, CliError> {
    let env = Env::new(&a.common)?;
    let names: Vec<ConstantName> = if a.name.is_empty() {
        ConstantName::ALL.to_vec()
    } else {
        a.name
            .iter()
            .map(|n| match n {
                ConstantArg::Gamma => ConstantName::Gamma,
                ConstantArg::Delta => ConstantName::Delta,
                ConstantArg::Ein1 => ConstantName::Ein1,
                ConstantArg::Ei1 => ConstantName::Ei1,
            })
            .collect()
    };
    let mut results = serde_json::Map::new();
    let mut bounds = serde_json::Map::new();
    let mut table = Table {
        header: vec!["name", "route", "value", "max_discrepancy"],
        rows: Vec::new(),
    };
    let mut ok = true;
    for name in names {
        let r = constant_report(name, &env.cfg, &env.quad)?;
        let worst = r.max_pairwise_discrepancy.to_f64();
        ok &= worst <= env.target();
        let routes: Vec<Value> = r
            .routes
            .iter()
            .map(|(route, v)| json!({ "route": route, "value": ball(v, env.digits) }))
            .collect();
        for (route, v) in &r.routes {
            table.rows.push(vec![
                name.to_string(),
                route.clone(),
                sci(v, env.digits),
                format!("{worst:e}"),
            ]);
        }
        results.insert(
            name.to_string(),
            json!({ "value": ball(r.value(), env.digits), "routes": routes }),
        );
        bounds.insert(name.to_string(), json!({ "max_pairwise_discrepancy": worst }));
    }
    Ok(Outcome {
        results: Value::Object(results),
        errors_bounds: Value::Object(bounds),
        table,
        tolerance_met: ok,
    })
}

pub fn prop1(a: &Prop1Args) -> Result<Outcome, CliError> {
    let env = Env::new(&a.common)?;
    let p = env.prec();
    let alpha = parse_alpha(&a.alpha)?;
    let tr = partial_sums(&alpha, a.terms, p)?;
    let mut results = trace_json(&tr, env.digits);
    let mut bounds = json!({});
    let reference = ein(&PrecisionReal::one(p));
    results["ein1"] = ball(&reference, env.digits);
    if alpha.is_inv_e() {
        let est = limit_estimate(a.terms, p)?;
        bounds["limit_minus_ein1"] = json!(est.distance_upper(&reference).to_f64());
        bounds["limit_radius"] = json!(est.radius().to_f64());
        results["limit_estimate"] = ball(&est, env.digits);
    } else {
        let opt = optimal_truncation(&alpha, p)?;
        results["optimal_truncation"] = json!({
            "k_star": opt.k_star,
            "min_term": ball(&opt.min_term, 20),
            "best_error": ball(&opt.best_error, 20),
        });
    }
    if let Some(m) = a.identity_m {
        let Alpha::Exact(q) = &alpha else {
            return Err(CliError::BadArgs("--identity-m needs a rational --alpha".into()));
        };
        let id = prop1_finite_identity(q, a.terms, m)?;
        results["finite_identity"] = json!({
            "m": m,
            "left": id.left.to_string(),
            "right": id.right.to_string(),
            "residual": id.residual.to_string(),
        });
    }
    Ok(Outcome {
        results,
        errors_bounds: bounds,
        table: trace_table(&tr, env.digits),
        tolerance_met: true,
    })
}

fn shifted(center: &Alpha, offset: &str, prec: u32) -> Result<Alpha, CliError> {
    let off = parse_rational(offset)
        .ok_or_else(|| CliError::BadArgs(format!("offset {offset:?} is not a rational number")))?;
    Ok(match center {
        Alpha::InvE { offset: o } => Alpha::InvE { offset: o + off },
        Alpha::Exact(q) => Alpha::Exact(q + off),
        Alpha::Real(x) => Alpha::Real(x + &PrecisionReal::from_rational(&off, prec)),
    })
}

pub fn alpha_scan(a: &AlphaScanArgs) -> Result<Outcome, CliError> {
    let env = Env::new(&a.common)?;
    let p = env.prec();
    let center = parse_alpha(&a.center)?;
    let mut rows = Vec::new();
    let mut table = Table {
        header: vec!["alpha", "verdict", "k_star", "min_term", "best_error"],
        rows: Vec::new(),
    };
    for off in &a.offsets {
        let alpha = shifted(&center, off, p)?;
        let tr = partial_sums(&alpha, a.terms, p)?;
        let opt = match optimal_truncation(&alpha, p) {
            Ok(o) => Some(o),
            Err(LabError::Precondition(_)) => None,
            Err(e) => return Err(e.into()),
        };
        let (k, min, best) = match &opt {
            Some(o) => (o.k_star.to_string(), sci(&o.min_term, 12), sci(&o.best_error, 12)),
            None => (String::new(), String::new(), String::new()),
        };
        table.rows.push(vec![alpha.to_string(), tr.verdict.to_string(), k, min, best]);
        rows.push(json!({
            "alpha": alpha.to_string(),
            "offset": off,
            "verdict": tr.verdict,
            "k_star": opt.as_ref().map(|o| o.k_star),
            "min_term": opt.as_ref().map(|o| ball(&o.min_term, 12)),
            "best_error": opt.as_ref().map(|o| ball(&o.best_error, 12)),
        }));
    }
    Ok(Outcome {
        results: json!({ "center": center.to_string(), "rows": rows }),
        errors_bounds: json!({}),
        table,
        tolerance_met: true,
    })
}

pub fn borel(a: &BorelArgs) -> Result<Outcome, CliError> {
    let env = Env::new(&a.common)?;
    let p = env.prec();
    let kind = match a.kind {
        KindArg::Gamma => TransformKind::Gamma,
        KindArg::Delta => TransformKind::Delta,
        KindArg::Combined => TransformKind::Combined(parse_alpha(&a.alpha)?),
    };
    let sum = laplace_borel_sum(&kind, &env.quad, p)?;
    let g = euler_gamma(&env.cfg);
    let d = gompertz_delta(&env.cfg)?;
    let reference = match &kind {
        TransformKind::Gamma => g,
        TransformKind::Delta => d,
        TransformKind::Combined(al) => &g + &(&al.to_real(p) * &d),
    };
    let diff = sum.distance_upper(&reference).to_f64();
    let radius = radius_of_convergence(&transform_coefficients(kind.clone(), a.terms as usize)?)?;
    let table = Table {
        header: vec!["kind", "laplace_sum", "reference", "difference", "radius_estimate"],
        rows: vec![vec![
            kind.label(),
            sci(&sum, env.digits),
            sci(&reference, env.digits),
            format!("{diff:e}"),
            sci(&radius, 8),
        ]],
    };
    Ok(Outcome {
        results: json!({
            "kind": kind.label(),
            "laplace_sum": ball(&sum, env.digits),
            "reference": ball(&reference, env.digits),
            "radius_estimate": ball(&radius, 8),
            "radius_terms": a.terms,
        }),
        errors_bounds: json!({ "laplace_minus_reference": diff, "laplace_radius": sum.radius().to_f64() }),
        table,
        tolerance_met: diff <= env.target().max(1e-12),
    })
}

pub fn stokes(a: &StokesArgs) -> Result<Outcome, CliError> {
    let env = Env::new(&a.common)?;
    let p = env.prec();
    let target = match a.target {
        StokesArg::Gamma => StokesTarget::Gamma,
        StokesArg::Delta => StokesTarget::Delta,
        StokesArg::Combined => StokesTarget::Combined(parse_alpha(&a.alpha)?),
        StokesArg::Generalized => StokesTarget::Generalized(a.n),
    };
    let est = stokes_constant(&target, a.samples, p)?;
    let samples: Vec<Value> = est
        .samples
        .iter()
        .map(|(j, u, r)| json!({ "j": j, "u": sci(u, 20), "ratio": ball(r, 20) }))
        .collect();
    let table = Table {
        header: vec!["j", "u", "ratio"],
        rows: est
            .samples
            .iter()
            .map(|(j, u, r)| vec![j.to_string(), sci(u, 20), sci(r, 20)])
            .collect(),
    };
    let last = &est.samples.last().expect("at least five samples").2;
    Ok(Outcome {
        results: json!({
            "extrapolated": ball(&est.extrapolated, 20),
            "method": est.method,
            "samples": samples,
        }),
        errors_bounds: json!({
            "last_rung_minus_extrapolated": last.distance_upper(&est.extrapolated).to_f64()
        }),
        table,
        tolerance_met: true,
    })
}

pub fn moments(a: &MomentsArgs) -> Result<Outcome, CliError> {
    let env = Env::new(&a.common)?;
    let p = env.prec();
    let r = moment_report(a.n, &env.quad, p)?;
    let pr = prob_nonpositive(&env.quad, p)?;
    let d = env.digits;
    let mut table = Table {
        header: vec!["quantity", "value"],
        rows: vec![
            vec!["full".into(), sci(&r.full, d)],
            vec!["conditional".into(), sci(&r.conditional, d)],
            vec!["positive_series".into(), sci(&r.positive_series, d)],
            vec!["positive_quadrature".into(), sci(&r.positive_quadrature, d)],
            vec!["prob_nonpositive".into(), sci(&pr, d)],
        ],
    };
    let mut results = json!({
        "n": a.n,
        "full": ball(&r.full, d),
        "conditional": ball(&r.conditional, d),
        "positive_series": ball(&r.positive_series, d),
        "positive_quadrature": ball(&r.positive_quadrature, d),
        "prob_nonpositive": ball(&pr, d),
        "routes": r.routes.iter().map(|(k, v)| json!({ "quantity": k, "route": v })).collect::<Vec<_>>(),
    });
    if let Some(samples) = a.mc_samples {
        let mc = monte_carlo_moments(a.n, samples, a.seed)?;
        table.rows.push(vec!["mc_full".into(), format!("{:e}", mc.full.mean)]);
        table.rows.push(vec!["mc_positive".into(), format!("{:e}", mc.positive.mean)]);
        table.rows.push(vec!["mc_nonpositive".into(), format!("{:e}", mc.nonpositive.mean)]);
        results["monte_carlo"] = serde_json::to_value(mc)?;
    }
    let residual = r.identity_residual.to_f64();
    let routes = r.route_discrepancy.to_f64();
    Ok(Outcome {
        results,
        errors_bounds: json!({ "closure_residual": residual, "positive_route_discrepancy": routes }),
        table,
        tolerance_met: residual.max(routes) <= env.target().max(1e-25),
    })
}

pub fn gen_series(a: &GenSeriesArgs) -> Result<Outcome, CliError> {
    let env = Env::new(&a.common)?;
    let p = env.prec();
    let alpha = parse_alpha(&a.alpha)?;
    let tr = generalized_partial_sums(a.n, &alpha, a.terms, p)?;
    let mut results = trace_json(&tr, env.digits);
    results["n"] = json!(a.n);
    let mut bounds = json!({});
    if alpha.is_inv_e() {
        let target = einlab::gumbel::moment_positive_series(a.n, p)?;
        let est = generalized_limit_estimate(a.n, a.terms, p)?;
        results["limit_estimate"] = ball(&est, env.digits);
        results["positive_moment"] = ball(&target, env.digits);
        bounds["limit_minus_moment"] = json!(est.distance_upper(&target).to_f64());
        bounds["limit_radius"] = json!(est.radius().to_f64());
    }
    Ok(Outcome {
        results,
        errors_bounds: bounds,
        table: trace_table(&tr, env.digits),
        tolerance_met: true,
    })
}

pub fn verify_all(a: &VerifyArgs) -> Result<Outcome, CliError> {
    for id in &a.only {
        if !CRITERIA.iter().any(|c| c.0 == *id) {
            return Err(CliError::BadArgs(format!("no criterion {id}")));
        }
    }
    let cfg = AcceptanceConfig {
        digits: a.common.digits,
        seed: a.seed,
        mc_samples: a.mc_samples,
    };
    let results: Vec<_> = CRITERIA
        .iter()
        .filter(|c| a.only.is_empty() || a.only.contains(&c.0))
        .map(|c| {
            let r = run_criterion(c.0, &cfg);
            eprintln!("{r}");
            r
        })
        .collect();
    let all = results.iter().all(|r| r.passed);
    let table = Table {
        header: vec!["id", "name", "passed", "elapsed_ms", "detail"],
        rows: results
            .iter()
            .map(|r| {
                vec![
                    r.id.to_string(),
                    r.name.clone(),
                    r.passed.to_string(),
                    r.elapsed_ms.to_string(),
                    r.detail.clone(),
                ]
            })
            .collect(),
    };
    let failed: Vec<u8> = results.iter().filter(|r| !r.passed).map(|r| r.id).collect();
    Ok(Outcome {
        results: json!({ "criteria": results, "all_passed": all }),
        errors_bounds: json!({ "failed": failed }),
        table,
        tolerance_met: all,
    })
}

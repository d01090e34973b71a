use einlab::exact::{derangement, factorial, scaled_e_tail_enclosure};
use einlab::linear_form::Alpha;
use einlab::real::{Mag, PrecisionConfig, PrecisionReal};
use einlab::series::{
    combined_term, limit_estimate, optimal_truncation, partial_sums, prop1_finite_identity,
    Verdict,
};
use einlab::special::ein;
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};
use proptest::prelude::*;

fn prec() -> u32 {
    PrecisionConfig::default().bits()
}

fn q(a: i64, b: i64) -> BigRational {
    BigRational::new(BigInt::from(a), BigInt::from(b))
}

#[test]
fn term_identity_as_linear_forms() {
    // (−1)^k !k/k + α(−1)^{k−1}(k−1)! built independently from the two series
    for k in 1..=300u64 {
        let sign = if k % 2 == 0 { BigInt::one() } else { -BigInt::one() };
        let a = BigRational::new(&sign * derangement(k), BigInt::from(k));
        let b = BigRational::from_integer(-sign * factorial(k - 1));
        let form = combined_term(k).unwrap().form();
        assert_eq!(form.a, a, "k={k}");
        assert_eq!(form.b, b, "k={k}");
    }
}

#[test]
fn terms_positive_and_bracketed_at_inv_e() {
    // t_k(1/e) = T(k)/k, with 1/(k(k+1)(k+2)) ≤ t_k ≤ 1/(k(k+1))
    for k in 1..=300u64 {
        let t = scaled_e_tail_enclosure(k, 6);
        let kk = BigInt::from(k);
        let lo_t = t.lo() / BigRational::from_integer(kk.clone());
        let hi_t = t.hi() / BigRational::from_integer(kk.clone());
        let lower = BigRational::new(BigInt::one(), &kk * (&kk + 1) * (&kk + 2));
        let upper = BigRational::new(BigInt::one(), &kk * (&kk + 1));
        assert!(lo_t > BigRational::zero());
        assert!(lower <= lo_t && hi_t <= upper, "k={k}");
    }
}

#[test]
fn convergence_at_inv_e() {
    let p = prec();
    let reference = ein(&PrecisionReal::one(p));
    let tr = partial_sums(&Alpha::inv_e(), 1000, p).unwrap();
    assert_eq!(tr.verdict, Verdict::Converging, "{:?}", tr.evidence);
    let raw = tr.last_sum().distance_upper(&reference).to_f64();
    assert!(raw < 2e-3, "{raw}");
    let corrected = limit_estimate(1000, p).unwrap();
    assert!(corrected.agrees_within(&reference, 1e-5));

    let early = partial_sums(&Alpha::inv_e(), 10, p).unwrap();
    let s10 = early.last_sum();
    assert!(s10.to_f64() > 0.7 && (&reference - s10).is_positive());
    assert!(early.rows.iter().all(|r| r.term.is_positive()));
}

#[test]
fn limit_estimate_is_monotone_and_bounded() {
    let p = prec();
    let reference = ein(&PrecisionReal::one(p));
    let mut prev: Option<PrecisionReal> = None;
    for k in [10u64, 20, 50, 100, 200] {
        let v = limit_estimate(k, p).unwrap();
        assert!(v.to_f64() <= reference.to_f64() + v.radius().to_f64() + 1e-15);
        if let Some(pv) = prev {
            assert!(v.to_f64() + v.radius().to_f64() >= pv.to_f64() - pv.radius().to_f64());
        }
        prev = Some(v);
    }
}

#[test]
fn divergence_everywhere_else() {
    let p = prec();
    let alphas = [
        "0", "0.3", "1", "1/e+1e-3", "1/e-1e-3", "1/e+1e-8", "1/e-1e-8",
    ];
    for a in alphas {
        let alpha = Alpha::parse(a).unwrap();
        let tr = partial_sums(&alpha, 400, p).unwrap();
        assert_eq!(tr.verdict, Verdict::Diverging, "alpha={a}: {:?}", tr.evidence);
        assert!(tr.max_abs_term() > Mag::from_f64_up(1e10), "alpha={a}");
    }
}

#[test]
fn optimal_truncation_behaviour() {
    let p = prec();
    // scan oracle: smallest |t_k| from direct evaluation
    let alpha = Alpha::parse("1/e+1e-6").unwrap();
    let r = optimal_truncation(&alpha, p).unwrap();
    let tr = partial_sums(&alpha, 40, p).unwrap();
    let (k_min, _) = tr
        .rows
        .iter()
        .map(|row| (row.k, row.term.abs_upper()))
        .min_by(|a, b| a.1.cmp(&b.1))
        .unwrap();
    assert_eq!(r.k_star, k_min);
    // crossover of (k−1)!·1e−6 and 1/(k(k+1))
    let cross = (1..40u64)
        .find(|&k| {
            let f: f64 = (1..k).map(|i| i as f64).product();
            f * 1e-6 > 1.0 / (k * (k + 1)) as f64
        })
        .unwrap();
    assert!((r.k_star as i64 - cross as i64).abs() <= 1, "{} vs {cross}", r.k_star);

    let half = optimal_truncation(&Alpha::parse("0.5").unwrap(), p).unwrap();
    assert!(half.k_star < 6 && half.best_error.to_f64() > 1e-2);

    let tight = optimal_truncation(&Alpha::parse("1/e+1e-8").unwrap(), p).unwrap();
    let loose = optimal_truncation(&Alpha::parse("1/e+1e-4").unwrap(), p).unwrap();
    assert!(tight.k_star > loose.k_star);
    assert!(tight.best_error.to_f64() < loose.best_error.to_f64());
}

#[test]
fn finite_identity_spec_cases() {
    for (a, k, m) in [(q(0, 1), 10, 10), (q(1, 3), 50, 20), (q(-7, 2), 2, 2)] {
        let r = prop1_finite_identity(&a, k, m).unwrap();
        assert!(r.residual.is_zero(), "alpha={a} K={k} M={m}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(20))]
    #[test]
    fn finite_identity_holds_for_random_rationals(
        num in -1000i64..1000,
        den in 1i64..1000,
        k in 2u64..=50,
        m in 2u64..=20,
    ) {
        let r = prop1_finite_identity(&q(num, den), k, m).unwrap();
        prop_assert!(r.residual.is_zero());
    }
}

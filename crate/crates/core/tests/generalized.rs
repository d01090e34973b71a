use einlab::generalized::{
    cancellation_bounds, generalized_borel_coefficient, generalized_cancellation_bound,
    generalized_limit_estimate, generalized_partial_sums, generalized_tail_enclosure,
    generalized_term,
};
use einlab::gumbel::moment_positive_series;
use einlab::linear_form::Alpha;
use einlab::real::PrecisionConfig;
use einlab::series::{combined_term, partial_sums, Verdict};
use num_traits::ToPrimitive;

fn prec() -> u32 {
    PrecisionConfig::default().bits()
}

#[test]
fn order_one_reduces_to_the_combined_series() {
    for k in 1..=300 {
        assert_eq!(generalized_term(1, k).unwrap().form(), combined_term(k).unwrap().form(), "k={k}");
    }
    let p = prec();
    for a in ["1/e", "0.3"] {
        let alpha = Alpha::parse(a).unwrap();
        let g = generalized_partial_sums(1, &alpha, 60, p).unwrap();
        let s = partial_sums(&alpha, 60, p).unwrap();
        assert_eq!(g.verdict, s.verdict);
        for (x, y) in g.rows.iter().zip(&s.rows) {
            assert_eq!(x.k, y.k);
            assert!(x.cumulative.agrees_within(&y.cumulative, 1e-40 * (1.0 + y.cumulative.to_f64().abs())));
        }
    }
}

#[test]
fn tail_enclosure_matches_direct_summation() {
    // σ_m(k) = |s(k,m)|/(k−1)! by its own recurrence; Σ_{K<k≤L} σ_n(k)/(k(k+1))
    // must equal U(K) − U(L) with U(K) = Σ_{m≤n} σ_m(K+1)/(K+1)
    let (kk, l) = (40usize, 4000usize);
    for n in 1..=4usize {
        let mut sigma = vec![vec![0.0f64; n + 1]; l + 2];
        sigma[1][1] = 1.0;
        for k in 1..=l {
            for m in 1..=n {
                sigma[k + 1][m] = sigma[k][m] + sigma[k][m - 1] / k as f64;
            }
        }
        let direct: f64 = (kk + 1..=l)
            .map(|k| sigma[k][n] / (k * (k + 1)) as f64)
            .sum();
        let u = |k: usize| (1..=n).map(|m| sigma[k + 1][m]).sum::<f64>() / (k + 1) as f64;
        assert!((direct - (u(kk) - u(l))).abs() < 1e-12 * u(kk), "n={n}");
        let nf: f64 = (1..=n).map(|i| i as f64).product();
        let enc = generalized_tail_enclosure(n as u32, kk as u64).unwrap();
        assert!((enc.hi().to_f64().unwrap() - nf * u(kk)).abs() < 1e-12);
    }
}

#[test]
fn converges_to_positive_moment_at_inv_e() {
    let p = prec();
    for n in [2u32, 3] {
        let target = moment_positive_series(n, p).unwrap();
        let tr = generalized_partial_sums(n, &Alpha::inv_e(), 3000, p).unwrap();
        assert_eq!(tr.verdict, Verdict::Converging, "n={n}: {:?}", tr.evidence);
        assert!(tr.rows.iter().all(|r| r.term.is_positive()));
        assert!((&target - tr.last_sum()).is_positive());
        let est = generalized_limit_estimate(n, 3000, p).unwrap();
        assert!(est.agrees_within(&target, 1e-4), "n={n}: {}", est.to_sci_string(12));
    }
    // order four: the tail bracket alone is about 1e−3 wide at K = 1000
    let target = moment_positive_series(4, p).unwrap();
    let est = generalized_limit_estimate(4, 1000, p).unwrap();
    assert!(est.radius().to_f64() < 2e-3);
    assert!(est.distance_upper(&target).to_f64() < 2e-3);
}

#[test]
fn diverges_away_from_inv_e() {
    let p = prec();
    for n in [2u32, 3, 4] {
        for a in ["0", "0.25", "1/e+1e-3", "1/e-1e-3"] {
            let tr = generalized_partial_sums(n, &Alpha::parse(a).unwrap(), 400, p).unwrap();
            assert_eq!(tr.verdict, Verdict::Diverging, "n={n}, alpha={a}");
        }
    }
}

#[test]
fn term_bound_holds_exactly() {
    for n in 1..=4u32 {
        let all = cancellation_bounds(n, 1000).unwrap();
        assert_eq!(all.len(), 1001 - n as usize);
        assert!(all.iter().all(|b| b.holds), "n={n}");
    }
    let single = generalized_cancellation_bound(2, 777).unwrap();
    let batch = &cancellation_bounds(2, 777).unwrap()[775];
    assert_eq!(single.k, batch.k);
    assert_eq!(single.bound, batch.bound);
}

#[test]
fn combined_borel_coefficients_decay_where_the_parts_do_not() {
    let p = prec();
    for n in [2u32, 3] {
        let c = |k: u64, a: &str| {
            generalized_borel_coefficient(n, k, &Alpha::parse(a).unwrap(), p)
                .unwrap()
                .log2_abs_approx()
                .unwrap()
        };
        // a lone α-part has consecutive ratio near 1; the 1/e combination
        // shrinks by about 1/k per step
        let ratio_off = (c(201, "0") - c(200, "0")).exp2();
        assert!((ratio_off - 1.0).abs() < 0.05, "{ratio_off}");
        let ratio_on = (c(201, "1/e") - c(200, "1/e")).exp2();
        assert!(ratio_on < 0.01, "{ratio_on}");
    }
}

mod common;

use common::grid::*;
use common::oracle;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_xoshiro::Xoshiro256PlusPlus;
use roleprobe_core::stats::dist::*;
use roleprobe_core::stats::*;

fn close(got: f64, want: f64, abs: f64, rel: f64) -> bool {
    (got - want).abs() <= abs.max(rel * want.abs())
}

#[test]
fn distribution_grid() {
    for &(x, want) in NORMAL_CDF {
        assert!(close(normal_cdf(x), want, 1e-12, 1e-10), "Phi({x})");
        assert!(close(normal_sf(-x), want, 1e-12, 1e-10), "sf(-{x})");
    }
    for &(t, df, want) in STUDENT_T {
        assert!(close(student_t_two_sided_p(t, df), want, 1e-10, 1e-8), "t={t} df={df}");
        assert!(close(student_t_cdf(-t, df), want / 2.0, 1e-10, 1e-8));
    }
    for &(x, df, want) in CHI2_SF {
        assert!(close(chi2_sf(x, df), want, 1e-10, 1e-8), "chi2 {x} {df}");
    }
    for &(f, d1, d2, want) in F_SF {
        assert!(close(f_sf(f, d1, d2), want, 1e-10, 1e-8), "F {f} {d1} {d2}");
    }
    for &(x, a, b, want) in BETA {
        assert!(close(reg_inc_beta(a, b, x), want, 1e-10, 1e-8), "I_{x}({a},{b})");
    }
    assert!((normal_cdf(1.959964) - 0.975).abs() < 1e-8);
}

#[test]
fn gamma_halves_sum_to_one() {
    for &(a, x) in &[(0.5, 0.2), (3.0, 2.0), (10.0, 15.0), (2.5, 30.0)] {
        assert!((reg_gamma_lower(a, x) + reg_gamma_upper(a, x) - 1.0).abs() < 1e-13);
    }
}

#[test]
fn rank_tests_match_enumeration() {
    let mut rng = Xoshiro256PlusPlus::seed_from_u64(7);
    for case in 0..150 {
        let n = rng.random_range(1..=10);
        let shift = rng.random::<f64>() * 1.5;
        let diffs = oracle::sample(&mut rng, n, shift);
        if diffs.iter().any(|&d| d != 0.0) {
            let got = wilcoxon_signed_rank(&diffs).unwrap().p_raw;
            let want = oracle::wilcoxon_exact(&diffs);
            assert!((got - want).abs() < 1e-12, "case {case}: {diffs:?} {got} {want}");
        }

        let (n1, n2) = (rng.random_range(1..=8), rng.random_range(1..=8));
        let a = oracle::sample(&mut rng, n1, shift);
        let b = oracle::sample(&mut rng, n2, 0.0);
        let got = rank_sum(&a, &b).unwrap().p_raw;
        let want = oracle::rank_sum_exact(&a, &b);
        assert!((got - want).abs() < 1e-12, "case {case}: {a:?} {b:?}");

        let k = rng.random_range(2..=4);
        let rows = rng.random_range(2..=5);
        let data: Vec<Vec<f64>> = (0..rows).map(|_| oracle::sample(&mut rng, k, 0.0)).collect();
        let got = friedman_test(&data).unwrap().p_raw;
        let want = oracle::friedman_permutation(&data, u64::MAX, 0, 0);
        assert!((got - want).abs() < 1e-12, "case {case}: {data:?}");
    }
}

#[test]
fn asymptotic_routes_on_moderate_samples() {
    // normal approximation against exact enumeration, n = 10
    let mut rng = Xoshiro256PlusPlus::seed_from_u64(11);
    for _ in 0..40 {
        let diffs: Vec<f64> = (0..10).map(|_| rng.random::<f64>() * 2.0 - 0.6).collect();
        let approx = wilcoxon_signed_rank_with(&diffs, PMethod::Asymptotic).unwrap().p_raw;
        assert!((approx - oracle::wilcoxon_exact(&diffs)).abs() < 0.02);
    }
    // Friedman chi-square against a 10,000-draw permutation estimate, 20 x 4
    let data: Vec<Vec<f64>> = (0..20)
        .map(|i| (0..4).map(|j| rng.random::<f64>() + 0.08 * j as f64 * (i % 3) as f64).collect())
        .collect();
    let chi = friedman_test(&data).unwrap();
    assert_eq!(chi.method, PRoute::Asymptotic);
    let perm = oracle::friedman_permutation(&data, 0, 10_000, 3);
    assert!((chi.p_raw - perm).abs() < 0.02, "{} vs {perm}", chi.p_raw);
}

#[test]
fn explicit_exact_beyond_auto_limit() {
    let diffs: Vec<f64> = (1..=40).map(|i| if i % 3 == 0 { -(i as f64) } else { i as f64 }).collect();
    let exact = wilcoxon_signed_rank_with(&diffs, PMethod::Exact).unwrap();
    let approx = wilcoxon_signed_rank(&diffs).unwrap();
    assert_eq!(exact.method, PRoute::Exact);
    assert_eq!(approx.method, PRoute::Asymptotic);
    assert_eq!(exact.statistic, approx.statistic);
    assert!((exact.p_raw - approx.p_raw).abs() < 0.005);
    let big: Vec<f64> = (0..200).map(|i| i as f64 + 0.5).collect();
    assert!(wilcoxon_signed_rank_with(&big, PMethod::Exact).is_err());
}

#[test]
fn bootstrap_within_resampled_range() {
    let xs: Vec<f64> = (0..25).map(|i| ((i * 13) % 7) as f64 - 2.0).collect();
    let ci = bootstrap_mean_ci(&xs, 2000, 5, 0.95).unwrap();
    let min = xs.iter().copied().fold(f64::INFINITY, f64::min);
    let max = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    assert!(min <= ci.lower && ci.lower <= ci.upper && ci.upper <= max);
}

#[test]
fn ols_f_and_adjusted_r2_match_definitions() {
    // two dummies plus intercept, three groups
    let data = [
        (0, 1.0), (0, 2.0), (0, 2.5), (1, 3.0), (1, 4.5), (1, 3.5), (2, 6.0), (2, 5.0), (2, 7.5),
    ];
    let x: Vec<Vec<f64>> = data
        .iter()
        .map(|&(g, _)| vec![1.0, (g == 1) as u8 as f64, (g == 2) as u8 as f64])
        .collect();
    let y: Vec<f64> = data.iter().map(|&(_, v)| v).collect();
    let fit = ols_fit(&x, &y).unwrap();
    let means = [5.5 / 3.0, 11.0 / 3.0, 18.5 / 3.0];
    assert!((fit.coefficients[1] - (means[1] - means[0])).abs() < 1e-12);
    assert!((fit.coefficients[2] - (means[2] - means[0])).abs() < 1e-12);
    let grand = y.iter().sum::<f64>() / 9.0;
    let ssb: f64 = means.iter().map(|m| 3.0 * (m - grand).powi(2)).sum();
    let sse: f64 = data.iter().map(|&(g, v)| (v - means[g]).powi(2)).sum();
    let f = (ssb / 2.0) / (sse / 6.0);
    let test = fit.f_test.unwrap();
    assert!((test.statistic - f).abs() < 1e-9);
    assert_eq!(test.df, Some(Df::Two(2.0, 6.0)));
    let r2 = ssb / (ssb + sse);
    assert!((fit.adj_r_squared - (1.0 - (1.0 - r2) * 8.0 / 6.0)).abs() < 1e-12);
}

proptest! {
    #[test]
    fn rank_tests_invariant_under_exp(
        xs in prop::collection::vec(-3.0f64..3.0, 2..12),
        ys in prop::collection::vec(-3.0f64..3.0, 1..12),
    ) {
        let ex: Vec<f64> = xs.iter().map(|v| v.exp()).collect();
        let ey: Vec<f64> = ys.iter().map(|v| v.exp()).collect();
        let a = rank_sum(&xs, &ys).unwrap();
        let b = rank_sum(&ex, &ey).unwrap();
        prop_assert_eq!(a.statistic, b.statistic);
        prop_assert_eq!(a.p_raw, b.p_raw);

        let k = 3;
        let rows: Vec<Vec<f64>> = xs.chunks(1).map(|c| vec![c[0], c[0] * 0.5 + 0.1, -c[0]]).collect();
        let erows: Vec<Vec<f64>> = rows.iter().map(|r| r.iter().map(|v| v.exp()).collect()).collect();
        let f1 = friedman_test(&rows).unwrap();
        let f2 = friedman_test(&erows).unwrap();
        prop_assert_eq!(f1.statistic, f2.statistic);
        prop_assert_eq!(f1.p_raw, f2.p_raw);
        prop_assert_eq!(rows[0].len(), k);

        // signed-rank depends on |d| order and sign; a sign-preserving
        // monotone map is x -> sinh(x)
        let dx: Vec<f64> = xs.iter().map(|v| v.sinh()).collect();
        if xs.iter().any(|&v| v != 0.0) {
            let w1 = wilcoxon_signed_rank(&xs).unwrap();
            let w2 = wilcoxon_signed_rank(&dx).unwrap();
            prop_assert_eq!(w1.statistic, w2.statistic);
            prop_assert_eq!(w1.p_raw, w2.p_raw);
        }
    }

    #[test]
    fn bonferroni_monotone_and_capped(ps in prop::collection::vec(0.0f64..=1.0, 1..20), extra in 0usize..200) {
        let m = ps.len() + extra;
        let adj = bonferroni(&ps, m);
        for (p, a) in ps.iter().zip(&adj) {
            prop_assert!(*a >= *p && *a <= 1.0);
        }
        let again = bonferroni(&adj, m);
        for (a, b) in adj.iter().zip(&again) {
            prop_assert!(*a < 1.0 || *b == 1.0);
        }
        let mut sorted = ps.clone();
        sorted.sort_by(f64::total_cmp);
        let adj_sorted = bonferroni(&sorted, m);
        prop_assert!(adj_sorted.windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn p_values_in_unit_interval(xs in prop::collection::vec(-5.0f64..5.0, 2..30), mu in -2.0f64..2.0) {
        if let Ok(r) = one_sample_t(&xs, mu) {
            prop_assert!((0.0..=1.0).contains(&r.p_raw));
        }
        let r = wilcoxon_signed_rank_with(&xs, PMethod::Asymptotic);
        if let Ok(r) = r {
            prop_assert!((0.0..=1.0).contains(&r.p_raw));
        }
    }
}

use densum::concentration::{ci_mean, u_multiplier, MeanMethod};
use densum::model::{summarize, Partition};
use densum::special::{beta_quantile, reg_inc_beta, std_normal_cdf, std_normal_quantile, truncnorm_cdf, truncnorm_quantile};
use densum::uclass::{ln_av_product, ln_sinhc, sinhc};
use densum::variance::{additive_variance_from_summary, summaries_from_covariance};
use densum::{Matrix, WeightMatrix};
use proptest::prelude::*;

proptest! {
    #[test]
    fn sinhc_is_even_and_at_least_one(x in -30.0..30.0f64) {
        prop_assert!(sinhc(x) >= 1.0);
        prop_assert_eq!(sinhc(x), sinhc(-x));
        prop_assert!((ln_sinhc(x) - sinhc(x).ln()).abs() < 1e-12 * sinhc(x).ln().max(1.0));
    }

    #[test]
    fn sinhc_below_gaussian_envelope(x in -50.0..50.0f64) {
        prop_assert!(ln_sinhc(x) <= x * x / 6.0 + 1e-12);
    }

    #[test]
    fn av_product_below_hoeffding(
        s in 0.0..20.0f64,
        w in prop::collection::vec(0.0..1.0f64, 1..30),
        m in 0.01..5.0f64,
    ) {
        let big_m = vec![m; w.len()];
        let ln = ln_av_product(s, &w, &big_m).unwrap();
        let envelope: f64 = w.iter().map(|wi| s * s * wi * wi * (2.0 * m).powi(2) / 8.0).sum();
        prop_assert!(ln <= envelope + 1e-12);
    }

    #[test]
    fn normal_quantile_round_trip(p in 1e-12..(1.0f64 - 1e-12)) {
        let x: f64 = std_normal_quantile(p).unwrap();
        let q = p.min(1.0 - p);
        prop_assert!((std_normal_cdf(x) - p).abs() <= 1e-12 * q.max(1e-3));
    }

    #[test]
    fn beta_quantile_round_trip(a in 0.5..60.0f64, b in 0.5..60.0f64, p in 1e-6..(1.0 - 1e-6)) {
        let x = beta_quantile(a, b, p).unwrap();
        prop_assert!((0.0..=1.0).contains(&x));
        prop_assert!((reg_inc_beta(a, b, x) - p).abs() < 1e-10);
    }

    #[test]
    fn truncnorm_quantile_round_trip(
        mu in -3.0..3.0f64,
        sigma in 0.1..5.0f64,
        half in 0.5..10.0f64,
        p in 1e-6..(1.0 - 1e-6),
    ) {
        let (lo, hi) = (mu - half, mu + 2.0 * half);
        let x = truncnorm_quantile(mu, sigma, lo, hi, p).unwrap();
        prop_assert!(x >= lo && x <= hi);
        prop_assert!((truncnorm_cdf(mu, sigma, lo, hi, x) - p).abs() < 1e-9);
    }

    #[test]
    fn variance_identity_holds(
        (n, a, w) in (2usize..12).prop_flat_map(|n| (
            Just(n),
            prop::collection::vec(-1.0..1.0f64, n * n),
            prop::collection::vec(-1.0..1.0f64, 2 * n),
        ))
    ) {
        let a = Matrix::from_vec(n, n, a).unwrap();
        let cov = a.matmul(&a.transpose()).unwrap();
        let w = WeightMatrix::new(Matrix::from_vec(2, n, w).unwrap()).unwrap();
        let summary = summaries_from_covariance(&cov, &w).unwrap();
        let diag: Vec<f64> = (0..n).map(|i| cov[(i, i)]).collect();
        let total = additive_variance_from_summary(&w, &diag, &summary).unwrap().total;
        let direct = w.matrix().matmul(&cov).unwrap().matmul(&w.matrix().transpose()).unwrap();
        let scale = direct.max_abs().max(1e-12);
        for s in 0..2 {
            for t in 0..2 {
                prop_assert!((total[(s, t)] - direct[(s, t)]).abs() <= 1e-10 * scale);
            }
        }
    }

    #[test]
    fn mean_sets_contain_their_center(
        y in prop::collection::vec(0.0..1.0f64, 2..200),
        alpha in 0.001..0.5f64,
    ) {
        let s = summarize(&y).unwrap();
        for method in [MeanMethod::Hoeffding, MeanMethod::USharp, MeanMethod::Bernstein, MeanMethod::Wald] {
            let ci = ci_mean(&s, 1.0, alpha, method).unwrap();
            prop_assert!(ci.contains(s.mean));
            prop_assert!(ci.lower <= ci.upper);
        }
        let h = ci_mean(&s, 1.0, alpha, MeanMethod::Hoeffding).unwrap().half_width();
        let u = ci_mean(&s, 1.0, alpha, MeanMethod::USharp).unwrap().half_width();
        prop_assert!((h / u - 3f64.sqrt()).abs() < 1e-12);
        prop_assert!((u - u_multiplier(alpha).unwrap() / (y.len() as f64).sqrt()).abs() < 1e-14);
    }

    #[test]
    fn sequential_partition_covers(n in 1usize..500, k in 1usize..50) {
        prop_assume!(k <= n);
        let p = Partition::sequential(n, k).unwrap();
        prop_assert_eq!(p.clusters(), k);
        prop_assert_eq!(p.sizes().iter().sum::<usize>(), n);
        let sizes = p.sizes();
        prop_assert!(sizes.iter().max().unwrap() - sizes.iter().min().unwrap() <= 1);
    }
}

use nalgebra::DMatrix;
use proptest::prelude::*;

use dantzig_density::analysis::{restricted_correlation, restricted_eigenvalues, SUBSET_BUDGET};
use dantzig_density::density::l2_risk;
use dantzig_density::empirical::{eta, sigma_tilde_sq};
use dantzig_density::experiments::BoxplotStats;
use dantzig_density::gram::{read_cache_file, write_cache_file};
use dantzig_density::quad::integrate;
use dantzig_density::solvers::{dantzig_solve, lasso_solve, soft, soft_threshold_estimate};
use dantzig_density::{
    DantzigProblem, DensityId, Dictionary, DictionaryKind, EmpiricalStats, GramCache, GramMatrix, SolverOptions,
    TrueDensity,
};

fn gram_from(entries: &[f64], m: usize, k: usize) -> GramMatrix {
    let a = DMatrix::from_row_slice(k, m, &entries[..k * m]);
    let mut g = a.transpose() * &a;
    for i in 0..m {
        g[(i, i)] += 1e-3;
    }
    let d: Vec<f64> = (0..m).map(|i| g[(i, i)].sqrt()).collect();
    for i in 0..m {
        for j in 0..m {
            g[(i, j)] /= d[i] * d[j];
        }
    }
    GramMatrix::from_dmatrix(&((&g + g.transpose()) * 0.5)).unwrap()
}

/// `(G, beta, eta)` with beta in the range of G.
fn instance(max_m: usize) -> impl Strategy<Value = (GramMatrix, Vec<f64>, Vec<f64>)> {
    (2..=max_m, 1..=max_m + 2).prop_flat_map(|(m, k)| {
        (
            prop::collection::vec(-1.0..1.0f64, k * m),
            prop::collection::vec(-1.0..1.0f64, m),
            prop::collection::vec(0.02..0.3f64, m),
        )
            .prop_map(move |(a, star, eta)| {
                let g = gram_from(&a, m, k);
                let beta = g.mul_vec(&star);
                (g, beta, eta)
            })
    })
}

fn density() -> impl Strategy<Value = DensityId> {
    prop::sample::select(DensityId::ALL.to_vec())
}

fn kind() -> impl Strategy<Value = DictionaryKind> {
    prop::sample::select(DictionaryKind::ALL.to_vec())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn lasso_solution_is_dantzig_feasible_and_not_sparser((g, beta, eta) in instance(12)) {
        let p = DantzigProblem::new(&g, &beta, &eta).unwrap();
        let opts = SolverOptions::default();
        let (l, _) = lasso_solve(&p, &opts).unwrap();
        let (d, report) = dantzig_solve(&p, &opts).unwrap();
        prop_assert!(p.violation(&l.values) <= 1e-8);
        prop_assert!(p.violation(&d.values) <= 1e-8);
        prop_assert!(d.l1_norm <= l.l1_norm + 1e-8);
        prop_assert!(report.duality_gap_or_kkt_residual.abs() <= 1e-8);
    }

    #[test]
    fn dantzig_scales_with_data((g, beta, eta) in instance(8), c in 0.1..10.0f64) {
        let opts = SolverOptions::default();
        let (d, _) = dantzig_solve(&DantzigProblem::new(&g, &beta, &eta).unwrap(), &opts).unwrap();
        let beta_c: Vec<f64> = beta.iter().map(|b| c * b).collect();
        let eta_c: Vec<f64> = eta.iter().map(|e| c * e).collect();
        let (dc, _) = dantzig_solve(&DantzigProblem::new(&g, &beta_c, &eta_c).unwrap(), &opts).unwrap();
        prop_assert!((dc.l1_norm - c * d.l1_norm).abs() <= 1e-8 * (1.0 + c * d.l1_norm));
    }

    #[test]
    fn dantzig_objective_is_permutation_invariant((g, beta, eta) in instance(8), seed in any::<u64>()) {
        let m = g.dim();
        let mut perm: Vec<usize> = (0..m).collect();
        let mut s = seed;
        for i in (1..m).rev() {
            s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            perm.swap(i, (s >> 33) as usize % (i + 1));
        }
        let gp = GramMatrix::new(m, (0..m * m).map(|x| g.get(perm[x / m], perm[x % m])).collect()).unwrap();
        let bp: Vec<f64> = perm.iter().map(|&i| beta[i]).collect();
        let ep: Vec<f64> = perm.iter().map(|&i| eta[i]).collect();
        let opts = SolverOptions::default();
        let (a, _) = dantzig_solve(&DantzigProblem::new(&g, &beta, &eta).unwrap(), &opts).unwrap();
        let (b, _) = dantzig_solve(&DantzigProblem::new(&gp, &bp, &ep).unwrap(), &opts).unwrap();
        prop_assert!((a.l1_norm - b.l1_norm).abs() <= 1e-8 * (1.0 + a.l1_norm));
    }

    #[test]
    fn wide_bands_give_zero((g, beta, _) in instance(8)) {
        let eta: Vec<f64> = beta.iter().map(|b| b.abs() + 1e-6).collect();
        let p = DantzigProblem::new(&g, &beta, &eta).unwrap();
        let (d, _) = dantzig_solve(&p, &SolverOptions::default()).unwrap();
        let (l, _) = lasso_solve(&p, &SolverOptions::default()).unwrap();
        prop_assert!(d.support.is_empty());
        prop_assert!(l.support.is_empty());
    }

    #[test]
    fn soft_threshold_shrinks(b in -10.0..10.0f64, e in 0.0..5.0f64) {
        let s = soft(b, e);
        prop_assert!(s.abs() <= b.abs());
        prop_assert!(s == 0.0 || s.signum() == b.signum());
        prop_assert!((b.abs() - s.abs() - e.min(b.abs())).abs() < 1e-12);
    }

    #[test]
    fn thresholds_grow_with_gamma(s2 in 0.0..4.0f64, sup in 1.0..8.0f64, g1 in 0.1..2.0f64, dg in 0.0..2.0f64, n in 16usize..5000) {
        let m = n;
        let t1 = sigma_tilde_sq(s2, sup, g1, m, n);
        let t2 = sigma_tilde_sq(s2, sup, g1 + dg, m, n);
        prop_assert!(t1 >= s2);
        prop_assert!(t2 >= t1);
        prop_assert!(eta(t2, sup, g1 + dg, m, n) >= eta(t1, sup, g1, m, n));
    }

    #[test]
    fn restricted_eigenvalues_are_monotone((g, _, _) in instance(7)) {
        let m = g.dim();
        let mut prev = (f64::INFINITY, 0.0f64);
        for l in 1..=m {
            let (lo, hi) = restricted_eigenvalues(&g, l, SUBSET_BUDGET).unwrap();
            prop_assert!(lo <= prev.0 + 1e-12);
            prop_assert!(hi >= prev.1 - 1e-12);
            prev = (lo, hi);
        }
        prop_assert!((prev.0 - g.min_eigenvalue()).abs() < 1e-9);
    }

    #[test]
    fn restricted_correlation_is_bounded((g, _, _) in instance(7), l in 1usize..4, lp in 1usize..4) {
        let m = g.dim();
        prop_assume!(l + lp <= m);
        let theta = restricted_correlation(&g, l, lp, SUBSET_BUDGET).unwrap();
        let (_, a) = restricted_eigenvalues(&g, l, SUBSET_BUDGET).unwrap();
        let (_, b) = restricted_eigenvalues(&g, lp, SUBSET_BUDGET).unwrap();
        prop_assert!(theta >= 0.0);
        prop_assert!(theta <= (a * b).sqrt() + 1e-12);
    }

    #[test]
    fn boxplot_statistics_are_ordered(v in prop::collection::vec(-100.0..100.0f64, 1..60)) {
        let s = BoxplotStats::from_values(&v).unwrap();
        prop_assert!(s.min <= s.whisker_low && s.whisker_low <= s.q1 + 1e-12);
        prop_assert!(s.q1 <= s.median && s.median <= s.q3);
        prop_assert!(s.q3 <= s.whisker_high + 1e-12 && s.whisker_high <= s.max);
        prop_assert!(s.min <= s.mean && s.mean <= s.max);
        prop_assert_eq!(s.count, v.len());
    }

    #[test]
    fn gram_cache_round_trip(entries in prop::collection::vec(-1.0..1.0f64, 9 * 3)) {
        let g = gram_from(&entries, 9, 3);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("g.bin");
        write_cache_file(&path, (DictionaryKind::Mix, 64, 9), &g).unwrap();
        prop_assert_eq!(read_cache_file(&path, (DictionaryKind::Mix, 64, 9)).unwrap(), g.clone());
        prop_assert!(read_cache_file(&path, (DictionaryKind::Mix2, 64, 9)).is_err());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn samples_are_deterministic_and_in_range(id in density(), n in 2usize..400, seed in any::<u64>()) {
        let f = TrueDensity::new(id);
        let a = f.sample(n, seed).unwrap();
        let b = f.sample(n, seed).unwrap();
        prop_assert_eq!(a.values(), b.values());
        prop_assert!(a.values().iter().all(|x| (0.0..=1.0).contains(x)));
    }

    #[test]
    fn sample_statistics_are_consistent(id in density(), k in kind(), n in 16usize..300, seed in any::<u64>(), gamma in 0.1..3.0f64) {
        let dict = Dictionary::build(k, n).unwrap();
        let sample = TrueDensity::new(id).sample(n, seed).unwrap();
        let stats = EmpiricalStats::compute(&sample, &dict, gamma).unwrap();
        prop_assert_eq!(stats.beta_hat.len(), dict.len());
        for m in 0..dict.len() {
            prop_assert!(stats.sigma_hat_sq[m] >= 0.0);
            prop_assert!(stats.sigma_tilde_sq[m] >= stats.sigma_hat_sq[m]);
            prop_assert!(stats.eta[m] > 0.0);
            prop_assert!(stats.beta_hat[m].abs() <= dict.sup_norms()[m] + 1e-12);
        }
    }

    #[test]
    fn orthonormal_dictionaries_have_identity_gram(k in prop::sample::select(vec![DictionaryKind::Fou, DictionaryKind::Hist, DictionaryKind::Haar]), n in 16usize..200) {
        let dict = Dictionary::build(k, n).unwrap();
        let g = GramCache::in_memory().get(&dict).unwrap();
        prop_assert!(g.identity_deviation() < 1e-10);
    }

    #[test]
    fn soft_threshold_is_dantzig_on_orthonormal(id in density(), n in 32usize..300, seed in any::<u64>()) {
        let dict = Dictionary::build(DictionaryKind::Haar, n).unwrap();
        let g = GramCache::in_memory().get(&dict).unwrap();
        let sample = TrueDensity::new(id).sample(n, seed).unwrap();
        let stats = EmpiricalStats::compute(&sample, &dict, 1.01).unwrap();
        let p = DantzigProblem::new(&g, &stats.beta_hat, &stats.eta).unwrap();
        let (d, _) = dantzig_solve(&p, &SolverOptions::default()).unwrap();
        let s = soft_threshold_estimate(&stats.beta_hat, &stats.eta).unwrap();
        for (a, b) in d.values.iter().zip(&s.values) {
            prop_assert!((a - b).abs() <= 1e-9);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn risk_matches_quadrature(id in density(), coefs in prop::collection::vec(-2.0..2.0f64, 4)) {
        // a redundant dictionary: the risk formula must still equal the integral
        let n = 64;
        let dict = Dictionary::build(DictionaryKind::Mix, n).unwrap();
        let f = TrueDensity::new(id);
        let g = GramCache::in_memory().get(&dict).unwrap();
        let beta0 = f.true_coefficients(&dict).unwrap();
        let mut lambda = vec![0.0; dict.len()];
        for (slot, c) in [0, 3, dict.len() - 5, dict.len() - 1].into_iter().zip(&coefs) {
            lambda[slot] = *c;
        }
        let risk = l2_risk(&g, &beta0, f.l2_norm_sq, &lambda).unwrap();
        let mut breaks = f.breakpoints();
        breaks.extend((1..16).map(|i| i as f64 / 16.0));
        let direct = integrate(
            |x| {
                let fl = dict.synthesize(&lambda, &[x]).unwrap()[0];
                (fl - f.pdf(x)).powi(2)
            },
            0.0,
            1.0,
            &breaks,
            64,
            1e-10,
        )
        .unwrap();
        prop_assert!((risk - direct).abs() <= 1e-7 * (1.0 + direct), "{} vs {}", risk, direct);
    }
}

use infospec::eval::{
    bayes_error, correlation_matrix, distances, evaluate_transform, ideal_matrix, partition_indices, pearson,
    split_samples, BayesConfig, CorrelationMatrix, PriorWeighting,
};
use infospec::{ClassMultiplicities, LabeledSpectrum, PpmGrid, Spectrum, SpectrumLibrary};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

fn naive_pearson(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    for i in 0..x.len() {
        sxy += (x[i] - mx) * (y[i] - my);
        sxx += (x[i] - mx) * (x[i] - mx);
        syy += (y[i] - my) * (y[i] - my);
    }
    sxy / (sxx * syy).sqrt()
}

#[test]
fn matrix_matches_pairwise_loop() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let vs: Vec<Vec<f64>> = (0..10).map(|_| (0..64).map(|_| rng.random_range(-1.0..1.0)).collect()).collect();
    let m = correlation_matrix(&vs).unwrap();
    for i in 0..10 {
        for j in 0..10 {
            let want = if i == j { 1.0 } else { naive_pearson(&vs[i], &vs[j]) };
            assert!((m.get(i, j) - want).abs() < 1e-12, "({i},{j})");
        }
    }
    assert!(m.is_symmetric(1e-12));
}

/// Lowest weighted empirical error over an exhaustive grid of thresholds.
fn sweep(intra: &[f64], inter: &[f64], priors: (f64, f64)) -> f64 {
    let lo = intra.iter().chain(inter).cloned().fold(f64::INFINITY, f64::min);
    let hi = intra.iter().chain(inter).cloned().fold(f64::NEG_INFINITY, f64::max);
    (0..=10_000)
        .map(|k| {
            let t = lo + (hi - lo) * k as f64 / 10_000.0;
            let miss = intra.iter().filter(|&&x| x < t).count() as f64 / intra.len() as f64;
            let fa = inter.iter().filter(|&&x| x >= t).count() as f64 / inter.len() as f64;
            priors.0 * miss + priors.1 * fa
        })
        .fold(f64::INFINITY, f64::min)
}

fn gaussian(rng: &mut ChaCha8Rng, mu: f64, sd: f64, n: usize) -> Vec<f64> {
    let d = Normal::new(mu, sd).unwrap();
    (0..n).map(|_| d.sample(rng)).collect()
}

#[test]
fn bayes_matches_threshold_sweep() {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    for (mu, sd, n0, n1) in [(0.6, 0.15, 300, 3000), (0.5, 0.2, 500, 500), (0.3, 0.1, 200, 2000)] {
        let intra = gaussian(&mut rng, mu, sd, n0);
        let inter = gaussian(&mut rng, 0.1, 0.15, n1);
        for priors in [PriorWeighting::Equal, PriorWeighting::Empirical] {
            let r = bayes_error(&intra, &inter, &BayesConfig { priors, ..BayesConfig::default() }).unwrap();
            let want = sweep(&intra, &inter, (r.prior_intra, r.prior_inter));
            assert!((r.error_probability - want).abs() <= 0.02, "{priors:?}: {} vs sweep {want}", r.error_probability);
            assert!(r.error_probability >= want - 1e-12);
        }
    }
}

#[test]
fn identical_distributions_give_chance() {
    let mut rng = ChaCha8Rng::seed_from_u64(23);
    let a = gaussian(&mut rng, 0.0, 1.0, 2000);
    let b = gaussian(&mut rng, 0.0, 1.0, 2000);
    let r = bayes_error(&a, &b, &BayesConfig::default()).unwrap();
    assert!((r.error_probability - 0.5).abs() <= 0.05, "{}", r.error_probability);
}

#[test]
fn evaluation_composes_components() {
    let grid = PpmGrid::new(1.0, 5.5, 30).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mult = ClassMultiplicities::new(vec![3, 2, 4]).unwrap();
    let labels = mult.class_of_each();
    let rows: Vec<Vec<f64>> = labels.iter().map(|_| (0..30).map(|_| rng.random_range(0.0..1.0)).collect()).collect();
    let entries = rows
        .iter()
        .zip(&labels)
        .map(|(r, l)| LabeledSpectrum { label: format!("c{l}"), spectrum: Spectrum::new(grid, r.clone()).unwrap() })
        .collect();
    let lib = SpectrumLibrary::validated(grid, entries).unwrap();
    let cfg = BayesConfig::default();

    let ev = evaluate_transform(&lib, &rows, &mult, &cfg).unwrap();
    let m = correlation_matrix(&rows).unwrap();
    let part = partition_indices(&mult);
    assert_eq!(ev.distances, distances(&m, &ideal_matrix(&mult), &part).unwrap());
    let (a, b) = split_samples(&m, &part);
    assert_eq!(ev.bayes, bayes_error(&a, &b, &cfg).unwrap());

    // Every member replaced by its class centroid: perfect intra agreement.
    let centroids: Vec<Vec<f64>> = labels
        .iter()
        .map(|&l| {
            let members: Vec<&Vec<f64>> = rows.iter().zip(&labels).filter(|(_, k)| **k == l).map(|(r, _)| r).collect();
            (0..30).map(|c| members.iter().map(|r| r[c]).sum::<f64>() / members.len() as f64).collect()
        })
        .collect();
    let ev = evaluate_transform(&lib, &centroids, &mult, &cfg).unwrap();
    assert!(ev.distances.d_intra.abs() < 1e-20, "{}", ev.distances.d_intra);

    assert!(evaluate_transform(&lib, &rows[1..], &mult, &cfg).is_err());
}

fn pair_strategy() -> impl Strategy<Value = (Vec<f64>, Vec<f64>)> {
    (2usize..60)
        .prop_flat_map(|n| (prop::collection::vec(-100.0f64..100.0, n), prop::collection::vec(-100.0f64..100.0, n)))
        .prop_filter("variance", |(x, y)| pearson(x, y).is_ok())
}

fn mult_strategy() -> impl Strategy<Value = ClassMultiplicities> {
    prop::collection::vec(1usize..6, 1..8).prop_map(|c| ClassMultiplicities::new(c).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn pearson_symmetric_and_bounded((x, y) in pair_strategy()) {
        let r = pearson(&x, &y).unwrap();
        prop_assert_eq!(r, pearson(&y, &x).unwrap());
        prop_assert!(r.abs() <= 1.0 + 1e-12);
    }

    #[test]
    fn pearson_affine_invariant((x, y) in pair_strategy(), a in 0.01f64..100.0, b in -100.0f64..100.0) {
        let r = pearson(&x, &y).unwrap();
        let ax: Vec<f64> = x.iter().map(|v| a * v + b).collect();
        prop_assert!((pearson(&ax, &y).unwrap() - r).abs() <= 1e-9);
        prop_assert!((pearson(&x, &ax).unwrap() - 1.0).abs() <= 1e-9);
    }

    #[test]
    fn distances_are_additive(mult in mult_strategy(), seed in any::<u64>()) {
        let n = mult.total();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let vals: Vec<f64> = (0..n * n).map(|_| rng.random_range(-1.0..1.0)).collect();
        let m = CorrelationMatrix::from_fn(n, |i, j| vals[i * n + j]);
        let part = partition_indices(&mult);
        let d = distances(&m, &ideal_matrix(&mult), &part).unwrap();
        prop_assert!((d.d_total - (d.d_intra + d.d_inter)).abs() <= 1e-9);
        let avg = d.d_intra / d.intra_size as f64 + if d.inter_size == 0 { 0.0 } else { d.d_inter / d.inter_size as f64 };
        prop_assert!((d.d_avg - avg).abs() <= 1e-9);
        prop_assert!(d.d_intra >= 0.0 && d.d_inter >= 0.0);
        prop_assert_eq!(part.intra.len() + part.inter.len(), n * n);
        prop_assert_eq!(part.intra.len(), mult.counts().iter().map(|c| c * c).sum::<usize>());
    }

    #[test]
    fn ideal_is_binary_with_unit_trace(mult in mult_strategy()) {
        let m = ideal_matrix(&mult);
        prop_assert!(m.rows().flatten().all(|&v| v == 0.0 || v == 1.0));
        let trace: f64 = (0..m.n()).map(|i| m.get(i, i)).sum();
        prop_assert_eq!(trace, mult.total() as f64);
    }

    #[test]
    fn disjoint_supports_have_no_error(
        intra in prop::collection::vec(0.9f64..1.0, 1..50),
        inter in prop::collection::vec(-1.0f64..0.1, 1..50),
    ) {
        let r = bayes_error(&intra, &inter, &BayesConfig::default()).unwrap();
        prop_assert_eq!(r.error_probability, 0.0);
        let r = bayes_error(&intra, &inter, &BayesConfig { priors: PriorWeighting::Empirical, ..BayesConfig::default() }).unwrap();
        prop_assert_eq!(r.error_probability, 0.0);
    }

    #[test]
    fn bayes_error_never_exceeds_smaller_prior(
        intra in prop::collection::vec(-1.0f64..1.0, 1..60),
        inter in prop::collection::vec(-1.0f64..1.0, 1..60),
    ) {
        prop_assume!(intra.iter().chain(&inter).any(|v| *v != intra[0]));
        for priors in [PriorWeighting::Equal, PriorWeighting::Empirical] {
            let r = bayes_error(&intra, &inter, &BayesConfig { priors, ..BayesConfig::default() }).unwrap();
            prop_assert!((0.0..=1.0).contains(&r.error_probability));
            prop_assert!(r.error_probability <= r.prior_intra.min(r.prior_inter) + 1e-12);
        }
    }
}

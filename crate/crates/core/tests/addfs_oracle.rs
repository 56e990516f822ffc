use std::path::Path;

use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use vtid_core::addfs::{
    chi_square, chimerge, class_distributions, critical_value, feature_score, min_max_scale_column,
    rank_features, score_column, wasserstein_1d, AddfsParams, ClassDistributionMatrix, SupportMode,
};
use vtid_core::dataset::{load_tabular, LabeledDataset};
use vtid_core::Exec;
use vtid_oracles::transport::min_cost_transport;

fn random_dist(rng: &mut ChaCha8Rng, k: usize) -> Vec<f64> {
    let w: Vec<f64> = (0..k)
        .map(|_| if rng.gen_bool(0.2) { 0.0 } else { rng.gen::<f64>() })
        .collect();
    let s: f64 = w.iter().sum();
    if s == 0.0 {
        let mut v = vec![0.0; k];
        v[0] = 1.0;
        return v;
    }
    w.iter().map(|x| x / s).collect()
}

#[test]
fn closed_form_matches_transport_solver() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..300 {
        let k = rng.gen_range(1..=15);
        let p = random_dist(&mut rng, k);
        let q = random_dist(&mut rng, k);
        let mut s: Vec<f64> = (0..k).map(|_| rng.gen::<f64>()).collect();
        s.sort_by(f64::total_cmp);
        let closed = wasserstein_1d(&p, &q, &s).unwrap();
        let lp = min_cost_transport(&p, &q, &s);
        assert!((closed - lp).abs() <= 1e-9, "{closed} vs {lp}");
    }
}

#[test]
fn three_class_score_is_pairwise_sum() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for _ in 0..50 {
        let k = rng.gen_range(2..=8);
        let p: Vec<Vec<f64>> = (0..3).map(|_| random_dist(&mut rng, k)).collect();
        let support: Vec<f64> = (0..k).map(|i| i as f64 / k as f64).collect();
        let m = ClassDistributionMatrix { p: p.clone(), support: support.clone() };
        let want = min_cost_transport(&p[0], &p[1], &support)
            + min_cost_transport(&p[0], &p[2], &support)
            + min_cost_transport(&p[1], &p[2], &support);
        assert!((feature_score(&m).unwrap() - want).abs() < 1e-9);
    }
}

proptest! {
    #[test]
    fn chi_square_matches_expected_table(
        a in proptest::collection::vec(0u64..20, 2..6),
        seed in any::<u64>(),
    ) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let b: Vec<u64> = a.iter().map(|_| rng.gen_range(0..20)).collect();
        let want = vtid_oracles::chi_square([&a, &b]);
        prop_assert!((chi_square(&a, &b) - want).abs() <= 1e-9 * want.max(1.0));
    }
}

fn random_feature(rng: &mut ChaCha8Rng) -> (Vec<f64>, Vec<usize>, usize) {
    let m = rng.gen_range(1..=300);
    let c = rng.gen_range(2..=5);
    let levels = rng.gen_range(1..=60);
    let shift: Vec<f64> = (0..c).map(|_| rng.gen::<f64>()).collect();
    let labels: Vec<usize> = (0..m).map(|_| rng.gen_range(0..c)).collect();
    let values = labels
        .iter()
        .map(|&l| {
            let raw = (rng.gen::<f64>() + shift[l]) / 2.0;
            (raw * levels as f64).round() / levels as f64
        })
        .collect();
    (values, labels, c)
}

#[test]
fn chimerge_contract_on_random_data() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..200 {
        let (values, labels, c) = random_feature(&mut rng);
        let part = chimerge(&values, &labels, c, 15, 0.95).unwrap();
        assert!(part.k() <= 15);
        assert!(part.cut_points.windows(2).all(|w| w[0] < w[1]));
        if part.k() > 1 && part.k() < 15 {
            let crit = critical_value(0.95, c - 1).unwrap();
            let counts = part.counts(&values, &labels, c);
            for w in counts.windows(2) {
                assert!(vtid_oracles::chi_square([&w[0], &w[1]]) >= crit);
            }
        }
    }
}

#[test]
fn distribution_rows_are_normalized() {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    for _ in 0..100 {
        let (values, labels, c) = random_feature(&mut rng);
        let present: Vec<bool> = (0..c).map(|k| labels.contains(&k)).collect();
        let part = chimerge(&values, &labels, c, 15, 0.95).unwrap();
        let res = class_distributions(&values, &labels, c, &part, SupportMode::Midpoint);
        if present.iter().all(|&p| p) {
            let m = res.unwrap();
            for row in &m.p {
                assert!((row.iter().sum::<f64>() - 1.0).abs() < 1e-9);
                assert!(row.iter().all(|&x| x >= 0.0));
            }
            assert!(m.support.windows(2).all(|w| w[0] <= w[1]));
        } else {
            assert!(res.is_err());
        }
    }
}

#[test]
fn shuffled_labels_score_lower() {
    let values = [0.0, 0.1, 0.2, 0.8, 0.9, 1.0];
    let labels = [0, 0, 0, 1, 1, 1];
    let params = AddfsParams::default();
    let truth = score_column(&values, &labels, 2, &params).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut total = 0.0;
    let runs = 40;
    for _ in 0..runs {
        let mut l = labels;
        l.shuffle(&mut rng);
        total += score_column(&values, &l, 2, &params).unwrap();
    }
    assert_eq!(truth, 0.5);
    assert!(total / runs as f64 <= truth / 2.0);
}

fn wine() -> LabeledDataset {
    let p = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data/wine.dat");
    load_tabular(p).unwrap().dataset
}

#[test]
fn positive_affine_maps_leave_scores_unchanged() {
    let d = wine();
    let params = AddfsParams::default();
    let base = rank_features(&d, &params, Exec::Parallel).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    for _ in 0..10 {
        let j = rng.gen_range(0..d.n_features());
        let a = 10f64.powf(rng.gen_range(-2.0..2.0));
        let b = rng.gen_range(-100.0..100.0);
        let t = d.map_column(j, |x| a * x + b);
        let before = min_max_scale_column(&d.column(j));
        let after = min_max_scale_column(&t.column(j));
        assert!(before.iter().zip(&after).all(|(x, y)| (x - y).abs() < 1e-9));
        assert_eq!(rank_features(&t, &params, Exec::Sequential).unwrap(), base);
    }
}

#[test]
fn ranking_is_deterministic_across_strategies() {
    let d = wine();
    for support in [SupportMode::Midpoint, SupportMode::Index] {
        let params = AddfsParams { support, ..Default::default() };
        let a = rank_features(&d, &params, Exec::Sequential).unwrap();
        let b = rank_features(&d, &params, Exec::Parallel).unwrap();
        assert_eq!(a, b);
        let mut sorted = a.order.clone();
        sorted.sort_unstable();
        assert_eq!(sorted, (0..d.n_features()).collect::<Vec<_>>());
        assert!(a.order.windows(2).all(|w| a.scores[w[0]] >= a.scores[w[1]]));
    }
}

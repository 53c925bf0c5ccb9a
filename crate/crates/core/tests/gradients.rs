mod common;

use mpanon::loss::{loss_identity, loss_local};
use mpanon::{
    batch_gradient, batch_loss, mp_fast, sample_triples, LossWeights, TimeSeries, WindowConfig,
};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[test]
fn gradient_matches_central_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let cfg = WindowConfig::new(8);
    let t = common::random_walk(&mut rng, 120);
    let that = common::random_series(&mut rng, 120);
    let mp = mp_fast(&t, &cfg).unwrap();
    let triples = sample_triples(&mp, 6, &mut rng).unwrap();
    let w = LossWeights {
        w_local: 2.0,
        w_distance: 0.5,
        w_identity: 1.5,
        identity_margin: 0.3,
    };
    let grad = batch_gradient(&t, &that, &triples, &w, &cfg).unwrap();
    let h = 1e-5;
    for p in 0..that.len() {
        let shifted = |delta: f64| {
            let mut v = that.values().to_vec();
            v[p] += delta;
            let s = TimeSeries::new(v).unwrap();
            batch_loss(&t, &s, &triples, &w, &cfg).unwrap().0
        };
        let fd = (shifted(h) - shifted(-h)) / (2.0 * h);
        let g = grad.as_slice()[p];
        assert!(
            (g - fd).abs() <= 1e-6 * g.abs().max(1.0),
            "p {p}: {g} vs {fd}"
        );
    }
}

#[test]
fn self_copy_is_a_fixed_point_of_the_global_terms() {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let cfg = WindowConfig::new(12);
    let t = common::random_walk(&mut rng, 400);
    let mp = mp_fast(&t, &cfg).unwrap();
    for tr in sample_triples(&mp, 200, &mut rng).unwrap() {
        assert_eq!(loss_identity(&t, &tr, &cfg, 0.0).unwrap(), 0.0);
        assert!((loss_local(&t, &t, tr.i, &cfg).unwrap() - 1.0).abs() < 1e-12);
    }
}

/// The 0.999 quantile of the chi-square distribution with 19
/// degrees of freedom, so a uniform sampler fails with probability 0.001.
const CHI2_19_Q999: f64 = 43.820;

#[test]
fn anchors_are_uniform() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let t = common::random_series(&mut rng, 1019);
    let mp = mp_fast(&t, &WindowConfig::new(20)).unwrap();
    let bins = 20;
    let draws = 10_000;
    let mut counts = vec![0usize; bins];
    for tr in sample_triples(&mp, draws, &mut rng).unwrap() {
        counts[tr.i * bins / mp.len()] += 1;
    }
    let expected = draws as f64 / bins as f64;
    let chi2: f64 = counts
        .iter()
        .map(|&c| (c as f64 - expected).powi(2) / expected)
        .sum();
    assert!(chi2 < CHI2_19_Q999, "chi-square {chi2}, counts {counts:?}");
}

mod common;

use common::{chi_square_p, lg, mean_and_se, pf_history};
use paris_core::hmm::{simulate, statistics, StochasticVolatility, SvParams};
use paris_core::rng::RngKey;
use paris_core::smoother::{
    backward_weights, default_threshold, ffbsi_estimate, ffbsi_sample_paths, sample_backward_ar, BackwardSampler,
    FfbsmState, ParisState,
};

#[test]
fn accept_reject_matches_exact_kernel_on_filter_clouds() {
    let model = lg();
    let ys = simulate(&model, 3, RngKey::new(1)).observations;
    let clouds = pf_history(&model, &ys, 30, RngKey::new(2));
    let (prev, next) = (&clouds[2], &clouds[3]);
    let targets: Vec<(usize, usize)> = (0..5).map(|i| (i, 20_000)).collect();
    let (idx, stats) = sample_backward_ar(prev, &model, next.particles(), &targets, Some(5), RngKey::new(3)).unwrap();
    assert_eq!(stats.draws, 100_000);
    for (p, &(target, count)) in targets.iter().enumerate() {
        let bw = backward_weights(prev, &model, &next.particles()[target]).unwrap();
        let mut counts = vec![0u64; prev.len()];
        for &j in &idx[p * count..(p + 1) * count] {
            counts[j] += 1;
        }
        assert!(chi_square_p(&counts, bw.probs()) > 1e-3, "target {target}");
    }
}

#[test]
fn trial_histogram_accounts_for_every_draw() {
    let model = lg();
    let ys = simulate(&model, 2, RngKey::new(4)).observations;
    let clouds = pf_history(&model, &ys, 40, RngKey::new(5));
    let targets: Vec<(usize, usize)> = (0..40).map(|i| (i, 2)).collect();
    let m = default_threshold(40);
    let (_, stats) = sample_backward_ar(&clouds[1], &model, clouds[2].particles(), &targets, Some(m), RngKey::new(6)).unwrap();
    let hist = stats.histogram();
    assert_eq!(hist.len(), m + 1);
    assert_eq!(hist.iter().map(|(_, c)| c).sum::<u64>(), 80);
    assert!(stats.mean_trials() >= 1.0);
}

/// PaRIS variance over backward randomness shrinks toward the FFBSm value
/// as K grows.
#[test]
fn paris_approaches_ffbsm_as_precision_grows() {
    let model = lg();
    let horizon = 15;
    let ys = simulate(&model, horizon, RngKey::new(7)).observations;
    let clouds = pf_history(&model, &ys, 40, RngKey::new(8));
    let f = [statistics::sum_x2()];
    let mut ffbsm = FfbsmState::from_cloud(clouds[0].clone(), 1);
    for c in &clouds[1..] {
        ffbsm = ffbsm.advance(&model, &f, c.clone()).unwrap();
    }
    let target = ffbsm.estimates(&f)[0];
    let mut last_mse = f64::INFINITY;
    for k in [1usize, 4, 32] {
        let errs: Vec<f64> = (0..200u64)
            .map(|r| {
                let mut s = ParisState::from_cloud(clouds[0].clone(), k, 1).unwrap();
                for (t, c) in clouds.iter().enumerate().skip(1) {
                    let key = RngKey::new(9).derive(&[k as u64, r, t as u64]);
                    s = s.advance(&model, &f, c.clone(), BackwardSampler::Exact, key).unwrap().0;
                }
                (s.estimates(&f)[0] - target).powi(2)
            })
            .collect();
        let (mse, _) = mean_and_se(&errs);
        assert!(mse < last_mse, "K={k}: mse {mse} not below {last_mse}");
        last_mse = mse;
    }
}

#[test]
fn ffbsi_agrees_with_ffbsm_on_stochastic_volatility() {
    let model = StochasticVolatility::new(SvParams::new(0.975, 0.16, 0.63)).unwrap();
    let ys = simulate(&model, 12, RngKey::new(10)).observations;
    let clouds = pf_history(&model, &ys, 60, RngKey::new(11));
    let f = [statistics::sum_x2(), statistics::sum_lag1()];
    let mut ffbsm = FfbsmState::from_cloud(clouds[0].clone(), 2);
    for c in &clouds[1..] {
        ffbsm = ffbsm.advance(&model, &f, c.clone()).unwrap();
    }
    let exact = ffbsm.estimates(&f);
    let paths = ffbsi_sample_paths(
        &clouds,
        &model,
        5_000,
        BackwardSampler::AcceptReject { threshold: Some(8) },
        RngKey::new(12),
    )
    .unwrap();
    for (fun, e) in f.iter().zip(exact) {
        let (m, se) = ffbsi_estimate(&clouds, &paths, fun).unwrap();
        assert!((m - e).abs() < 3.5 * se, "{}: {m} vs {e} (se {se})", fun.name());
    }
}

#[test]
fn paris_step_is_reproducible() {
    let model = lg();
    let ys = simulate(&model, 20, RngKey::new(13)).observations;
    let f = [statistics::sum_x()];
    let run = || {
        let key = RngKey::new(14);
        let mut s = ParisState::init(&model, &ys[0], 50, 2, 1, key.child(0)).unwrap();
        for (t, y) in ys.iter().enumerate().skip(1) {
            let sampler = BackwardSampler::AcceptReject { threshold: None };
            s = s.step(&model, &f, y, sampler, key.child(t as u64)).unwrap().0;
        }
        s.estimates(&f)[0]
    };
    assert_eq!(run().to_bits(), run().to_bits());
}

#[test]
fn threshold_fourteen_rarely_falls_back_at_n250() {
    use paris_core::genealogy::trial_statistics;
    let model = lg();
    let ys = simulate(&model, 100, RngKey::new(15)).observations;
    let clouds = pf_history(&model, &ys, 250, RngKey::new(16));
    let f = [statistics::sum_x()];
    let mut s = ParisState::from_cloud(clouds[0].clone(), 2, 1).unwrap();
    let mut all = Vec::new();
    for (t, c) in clouds.iter().enumerate().skip(1) {
        let sampler = BackwardSampler::AcceptReject { threshold: Some(14) };
        let (next, stats) = s.advance(&model, &f, c.clone(), sampler, RngKey::new(17).child(t as u64)).unwrap();
        s = next;
        all.push(stats.unwrap());
    }
    let summary = trial_statistics(&all).unwrap();
    assert_eq!(summary.draws, 100 * 250 * 2);
    assert!(summary.exceed_fraction > 0.0 && summary.exceed_fraction < 0.15, "{}", summary.exceed_fraction);
    // Acceptance at the first proposal is the most common outcome.
    let top = summary.histogram.iter().max_by_key(|(_, c)| *c).unwrap();
    assert_eq!(top.0, 1);
}

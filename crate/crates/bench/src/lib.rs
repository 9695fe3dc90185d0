//! Fixtures shared by the benchmarks.

use paris_core::filter::{init_cloud, pf_step, WeightedCloud};
use paris_core::hmm::{simulate, LgParams, LinearGaussian};
use paris_core::rng::RngKey;

pub fn lg_model() -> LinearGaussian {
    LinearGaussian::new(LgParams::stationary(0.7, 1.0, 0.2, 1.0).expect("stationary")).expect("valid")
}

/// Two consecutive filter clouds of size `n` after a short burn-in.
pub fn cloud_pair(model: &LinearGaussian, n: usize) -> (WeightedCloud<f64>, WeightedCloud<f64>) {
    let ys = simulate(model, 11, RngKey::new(1)).observations;
    let key = RngKey::new(2);
    let mut prev = init_cloud(model, &ys[0], n, key.child(0)).expect("init");
    for (t, y) in ys.iter().enumerate().take(10).skip(1) {
        prev = pf_step(model, &prev, y, key.child(t as u64)).expect("step");
    }
    let next = pf_step(model, &prev, &ys[10], key.child(10)).expect("step");
    (prev, next)
}

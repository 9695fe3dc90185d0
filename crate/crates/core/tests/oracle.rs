mod common;

use common::joint_gaussian_smoother;
use paris_core::hmm::{simulate, LgParams, LinearGaussian};
use paris_core::oracle::{exact_smoothed_statistics, kalman_filter, rts_smoother};
use paris_core::rng::RngKey;
use rand::Rng;

fn random_params(rng: &mut impl Rng) -> LgParams {
    LgParams::stationary(
        rng.random_range(-0.95..0.95),
        rng.random_range(-2.0..2.0),
        rng.random_range(0.05..1.5),
        rng.random_range(0.05..1.5),
    )
    .unwrap()
}

#[test]
fn rts_matches_joint_gaussian_conditioning() {
    let mut rng = RngKey::new(3).rng();
    for horizon in [0, 1, 3, 5, 12] {
        for case in 0..20u64 {
            let p = random_params(&mut rng);
            let ys = simulate(&LinearGaussian::new(p).unwrap(), horizon, RngKey::new(case)).observations;
            let sm = rts_smoother(&p, &kalman_filter(&p, &ys));
            let (m, v, c) = joint_gaussian_smoother(&p, &ys);
            for (a, b) in sm.means.iter().zip(&m).chain(sm.vars.iter().zip(&v)).chain(sm.lag_one.iter().zip(&c)) {
                assert!((a - b).abs() < 1e-8, "T={horizon} case {case}: {a} vs {b}");
            }
        }
    }
}

#[test]
fn smoothed_statistics_are_sums_of_moments() {
    let p = LgParams::stationary(0.7, 1.0, 0.2, 1.0).unwrap();
    let ys = simulate(&LinearGaussian::new(p).unwrap(), 5, RngKey::new(8)).observations;
    let (m, v, c) = joint_gaussian_smoother(&p, &ys);
    let s = exact_smoothed_statistics(&p, &ys);
    let sum_x: f64 = m.iter().sum();
    let sum_x2: f64 = m.iter().zip(&v).map(|(m, v)| v + m * m).sum();
    let sum_lag1: f64 = (0..5).map(|s| c[s] + m[s] * m[s + 1]).sum();
    for (a, b) in s.as_array().iter().zip([sum_x, sum_x2, sum_lag1]) {
        assert!((a - b).abs() < 1e-10);
    }
}

#[test]
fn non_stationary_initial_law() {
    let mut p = LgParams::stationary(0.8, 0.5, 0.3, 0.4).unwrap();
    p.init_mean = 2.0;
    p.init_var = 0.01;
    let ys = [1.0, 0.3, -0.2, 0.8];
    let sm = rts_smoother(&p, &kalman_filter(&p, &ys));
    let (m, v, _) = joint_gaussian_smoother(&p, &ys);
    for s in 0..4 {
        assert!((sm.means[s] - m[s]).abs() < 1e-10);
        assert!((sm.vars[s] - v[s]).abs() < 1e-10);
    }
}

#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use paris_core::filter::{init_cloud, pf_step, WeightedCloud};
use paris_core::hmm::{LgParams, LinearGaussian, StateSpaceModel};
use paris_core::rng::RngKey;
use statrs::distribution::{ChiSquared, ContinuousCDF};

pub fn lg_params() -> LgParams {
    LgParams::stationary(0.7, 1.0, 0.2, 1.0).unwrap()
}

pub fn lg() -> LinearGaussian {
    LinearGaussian::new(lg_params()).unwrap()
}

/// Smoothed means, variances and lag-one covariances of `X_{0:T}` by
/// conditioning the joint Gaussian law of `(X, Y)` directly.
pub fn joint_gaussian_smoother(p: &LgParams, ys: &[f64]) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
    let n = ys.len();
    let q = p.sigma_eps * p.sigma_eps;
    let r = p.sigma_obs * p.sigma_obs;
    let mut mu = vec![p.init_mean; n];
    let mut var = vec![p.init_var; n];
    for t in 1..n {
        mu[t] = p.a * mu[t - 1];
        var[t] = p.a * p.a * var[t - 1] + q;
    }
    let sxx = DMatrix::from_fn(n, n, |s, t| {
        let (lo, hi) = if s <= t { (s, t) } else { (t, s) };
        p.a.powi((hi - lo) as i32) * var[lo]
    });
    let syy = &sxx * (p.b * p.b) + DMatrix::identity(n, n) * r;
    let sxy = &sxx * p.b;
    let mx = DVector::from_vec(mu.clone());
    let resid = DVector::from_iterator(n, ys.iter().zip(&mu).map(|(y, m)| y - p.b * m));
    let chol = syy.cholesky().expect("observation covariance is positive definite");
    let mean = &mx + &sxy * chol.solve(&resid);
    let cov = &sxx - &sxy * chol.solve(&sxy.transpose());
    let means = mean.iter().copied().collect();
    let vars = (0..n).map(|s| cov[(s, s)]).collect();
    let lag = (0..n.saturating_sub(1)).map(|s| cov[(s, s + 1)]).collect();
    (means, vars, lag)
}

/// Filter clouds `0..=T` of one bootstrap run.
pub fn pf_history<M: StateSpaceModel>(model: &M, ys: &[M::Obs], n: usize, key: RngKey) -> Vec<WeightedCloud<M::State>> {
    let mut clouds = vec![init_cloud(model, &ys[0], n, key.child(0)).unwrap()];
    for (t, y) in ys.iter().enumerate().skip(1) {
        let next = pf_step(model, clouds.last().unwrap(), y, key.child(t as u64)).unwrap();
        clouds.push(next);
    }
    clouds
}

/// Pearson goodness-of-fit p-value. Cells with expected count below 5 are
/// pooled into one.
pub fn chi_square_p(counts: &[u64], probs: &[f64]) -> f64 {
    let total: u64 = counts.iter().sum();
    let total = total as f64;
    let (mut stat, mut cells) = (0.0, 0usize);
    let (mut pooled_obs, mut pooled_exp) = (0.0, 0.0);
    for (&c, &p) in counts.iter().zip(probs) {
        let e = p * total;
        if e < 5.0 {
            pooled_obs += c as f64;
            pooled_exp += e;
        } else {
            stat += (c as f64 - e).powi(2) / e;
            cells += 1;
        }
    }
    if pooled_exp > 0.0 {
        stat += (pooled_obs - pooled_exp).powi(2) / pooled_exp;
        cells += 1;
    } else if pooled_obs > 0.0 {
        return 0.0;
    }
    if cells < 2 {
        return 1.0;
    }
    1.0 - ChiSquared::new((cells - 1) as f64).unwrap().cdf(stat)
}

pub fn mean_and_se(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let m = xs.iter().sum::<f64>() / n;
    let v = xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0);
    (m, (v / n).sqrt())
}

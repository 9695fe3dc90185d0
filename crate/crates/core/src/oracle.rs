//! Exact filtering and smoothing for the scalar linear Gaussian model.

use crate::hmm::LgParams;

/// Per-time Gaussian marginals. For smoothed beliefs `lag_one[s]` is
/// `Cov(X_s, X_{s+1} | y_{0:T})`; filtered beliefs leave it empty.
#[derive(Clone, Debug, PartialEq)]
pub struct GaussianBelief {
    pub means: Vec<f64>,
    pub vars: Vec<f64>,
    pub lag_one: Vec<f64>,
}

/// Kalman filter output. `pred_*[t]` is the law of `X_t` given `y_{0:t-1}`
/// (the initial law at `t = 0`).
#[derive(Clone, Debug, PartialEq)]
pub struct FilteredBelief {
    pub filtered: GaussianBelief,
    pub pred_means: Vec<f64>,
    pub pred_vars: Vec<f64>,
}

pub fn kalman_filter(params: &LgParams, ys: &[f64]) -> FilteredBelief {
    let LgParams {
        a,
        b,
        sigma_eps,
        sigma_obs,
        init_mean,
        init_var,
    } = *params;
    let q = sigma_eps * sigma_eps;
    let r = sigma_obs * sigma_obs;
    let n = ys.len();
    let mut means = Vec::with_capacity(n);
    let mut vars = Vec::with_capacity(n);
    let mut pred_means = Vec::with_capacity(n);
    let mut pred_vars = Vec::with_capacity(n);
    let (mut m_pred, mut p_pred) = (init_mean, init_var);
    for &y in ys {
        pred_means.push(m_pred);
        pred_vars.push(p_pred);
        let s = b * b * p_pred + r;
        let gain = p_pred * b / s;
        let m = m_pred + gain * (y - b * m_pred);
        let p = (1.0 - gain * b) * p_pred;
        means.push(m);
        vars.push(p);
        m_pred = a * m;
        p_pred = a * a * p + q;
    }
    FilteredBelief {
        filtered: GaussianBelief {
            means,
            vars,
            lag_one: Vec::new(),
        },
        pred_means,
        pred_vars,
    }
}

/// Rauch-Tung-Striebel backward pass with gains `J_s = a P_s / P_{s+1|s}`.
pub fn rts_smoother(params: &LgParams, filtered: &FilteredBelief) -> GaussianBelief {
    let a = params.a;
    let f = &filtered.filtered;
    let n = f.means.len();
    if n == 0 {
        return GaussianBelief {
            means: Vec::new(),
            vars: Vec::new(),
            lag_one: Vec::new(),
        };
    }
    let mut means = f.means.clone();
    let mut vars = f.vars.clone();
    let mut lag_one = vec![0.0; n - 1];
    for s in (0..n - 1).rev() {
        let gain = if filtered.pred_vars[s + 1] > 0.0 {
            a * f.vars[s] / filtered.pred_vars[s + 1]
        } else {
            0.0
        };
        means[s] = f.means[s] + gain * (means[s + 1] - filtered.pred_means[s + 1]);
        vars[s] = f.vars[s] + gain * gain * (vars[s + 1] - filtered.pred_vars[s + 1]);
        lag_one[s] = gain * vars[s + 1];
    }
    GaussianBelief { means, vars, lag_one }
}

/// Exact smoothed sufficient statistics given `y_{0:T}`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SmoothedStatistics {
    /// `E[Σ_{s=0}^T X_s | y]`
    pub sum_x: f64,
    /// `E[Σ_{s=0}^T X_s² | y]`
    pub sum_x2: f64,
    /// `E[Σ_{s=0}^{T-1} X_s X_{s+1} | y]`
    pub sum_lag1: f64,
}

impl SmoothedStatistics {
    pub fn as_array(&self) -> [f64; 3] {
        [self.sum_x, self.sum_x2, self.sum_lag1]
    }
}

pub fn exact_smoothed_statistics(params: &LgParams, ys: &[f64]) -> SmoothedStatistics {
    let sm = rts_smoother(params, &kalman_filter(params, ys));
    let sum_x = sm.means.iter().sum();
    let sum_x2 = sm.means.iter().zip(&sm.vars).map(|(m, v)| v + m * m).sum();
    let sum_lag1 = sm
        .lag_one
        .iter()
        .enumerate()
        .map(|(s, c)| c + sm.means[s] * sm.means[s + 1])
        .sum();
    SmoothedStatistics {
        sum_x,
        sum_x2,
        sum_lag1,
    }
}

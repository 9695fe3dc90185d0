use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::StateSpaceModel;
use crate::error::{Error, Result};
use crate::rng::StreamRng;

const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_8;

/// `X_{t+1} = φ X_t + σ ε_{t+1}`, `Y_t = β exp(X_t / 2) η_t`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SvParams {
    pub phi: f64,
    pub sigma: f64,
    pub beta: f64,
}

impl SvParams {
    pub fn new(phi: f64, sigma: f64, beta: f64) -> Self {
        Self { phi, sigma, beta }
    }

    /// Variance of the stationary law `N(0, σ² / (1 − φ²))`, used as initial law.
    pub fn stationary_var(&self) -> f64 {
        self.sigma * self.sigma / (1.0 - self.phi * self.phi)
    }
}

#[derive(Clone, Debug)]
pub struct StochasticVolatility {
    params: SvParams,
    log_q_norm: f64,
    inv_two_var: f64,
    ln_beta: f64,
    inv_two_beta2: f64,
}

impl StochasticVolatility {
    pub fn new(params: SvParams) -> Result<Self> {
        if !(params.phi.abs() < 1.0) {
            return Err(Error::invalid("phi", format!("|phi| must be < 1, got {}", params.phi)));
        }
        if !(params.sigma > 0.0 && params.sigma.is_finite()) {
            return Err(Error::invalid("sigma", "must be positive and finite"));
        }
        if !(params.beta > 0.0 && params.beta.is_finite()) {
            return Err(Error::invalid("beta", "must be positive and finite"));
        }
        Ok(Self {
            params,
            log_q_norm: -LN_SQRT_2PI - params.sigma.ln(),
            inv_two_var: 0.5 / (params.sigma * params.sigma),
            ln_beta: params.beta.ln(),
            inv_two_beta2: 0.5 / (params.beta * params.beta),
        })
    }

    pub fn params(&self) -> &SvParams {
        &self.params
    }
}

impl StateSpaceModel for StochasticVolatility {
    type State = f64;
    type Obs = f64;

    fn state_dim(&self) -> usize {
        1
    }

    fn obs_dim(&self) -> usize {
        1
    }

    fn sample_initial(&self, rng: &mut StreamRng) -> f64 {
        let z: f64 = StandardNormal.sample(rng);
        self.params.stationary_var().sqrt() * z
    }

    fn sample_transition(&self, x: &f64, rng: &mut StreamRng) -> f64 {
        let z: f64 = StandardNormal.sample(rng);
        self.params.phi * x + self.params.sigma * z
    }

    fn sample_observation(&self, x: &f64, rng: &mut StreamRng) -> f64 {
        let z: f64 = StandardNormal.sample(rng);
        self.params.beta * (0.5 * x).exp() * z
    }

    #[inline]
    fn transition_log_density(&self, x: &f64, x_next: &f64) -> f64 {
        let r = x_next - self.params.phi * x;
        self.log_q_norm - r * r * self.inv_two_var
    }

    fn transition_density_bound(&self) -> f64 {
        self.log_q_norm.exp()
    }

    /// `y | x ~ N(0, β² e^x)`
    #[inline]
    fn emission_log_density(&self, x: &f64, y: &f64) -> f64 {
        -LN_SQRT_2PI - self.ln_beta - 0.5 * x - y * y * self.inv_two_beta2 * (-x).exp()
    }
}

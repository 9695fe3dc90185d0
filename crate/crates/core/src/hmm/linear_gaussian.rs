use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::StateSpaceModel;
use crate::error::{Error, Result};
use crate::rng::StreamRng;

const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_8;

/// `X_{t+1} = a X_t + σ_ε ε_{t+1}`, `Y_t = b X_t + σ_o η_t`, `X_0 ~ N(m_0, v_0)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LgParams {
    pub a: f64,
    pub b: f64,
    pub sigma_eps: f64,
    pub sigma_obs: f64,
    pub init_mean: f64,
    pub init_var: f64,
}

impl LgParams {
    /// Parameters with the initial law set to the stationary distribution
    /// `N(0, σ_ε² / (1 − a²))`.
    pub fn stationary(a: f64, b: f64, sigma_eps: f64, sigma_obs: f64) -> Result<Self> {
        if !(a.abs() < 1.0) {
            return Err(Error::invalid("a", format!("|a| must be < 1 for a stationary start, got {a}")));
        }
        let p = Self {
            a,
            b,
            sigma_eps,
            sigma_obs,
            init_mean: 0.0,
            init_var: sigma_eps * sigma_eps / (1.0 - a * a),
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        let finite = [self.a, self.b, self.sigma_eps, self.sigma_obs, self.init_mean, self.init_var]
            .iter()
            .all(|v| v.is_finite());
        if !finite {
            return Err(Error::invalid("lg", "parameters must be finite"));
        }
        if self.sigma_eps < 0.0 {
            return Err(Error::invalid("sigma_eps", "must be >= 0"));
        }
        if self.sigma_obs <= 0.0 {
            return Err(Error::invalid("sigma_obs", "must be > 0"));
        }
        if self.init_var < 0.0 {
            return Err(Error::invalid("init_var", "must be >= 0"));
        }
        Ok(())
    }
}

/// Scalar linear Gaussian state-space model.
#[derive(Clone, Debug)]
pub struct LinearGaussian {
    params: LgParams,
    log_q_norm: f64,
    inv_two_var_eps: f64,
    log_g_norm: f64,
    inv_two_var_obs: f64,
}

impl LinearGaussian {
    pub fn new(params: LgParams) -> Result<Self> {
        params.validate()?;
        let var_eps = params.sigma_eps * params.sigma_eps;
        let var_obs = params.sigma_obs * params.sigma_obs;
        Ok(Self {
            params,
            log_q_norm: -LN_SQRT_2PI - params.sigma_eps.ln(),
            inv_two_var_eps: 0.5 / var_eps,
            log_g_norm: -LN_SQRT_2PI - params.sigma_obs.ln(),
            inv_two_var_obs: 0.5 / var_obs,
        })
    }

    pub fn params(&self) -> &LgParams {
        &self.params
    }
}

impl StateSpaceModel for LinearGaussian {
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
        self.params.init_mean + self.params.init_var.sqrt() * z
    }

    fn sample_transition(&self, x: &f64, rng: &mut StreamRng) -> f64 {
        let z: f64 = StandardNormal.sample(rng);
        self.params.a * x + self.params.sigma_eps * z
    }

    fn sample_observation(&self, x: &f64, rng: &mut StreamRng) -> f64 {
        let z: f64 = StandardNormal.sample(rng);
        self.params.b * x + self.params.sigma_obs * z
    }

    #[inline]
    fn transition_log_density(&self, x: &f64, x_next: &f64) -> f64 {
        let r = x_next - self.params.a * x;
        self.log_q_norm - r * r * self.inv_two_var_eps
    }

    fn transition_density_bound(&self) -> f64 {
        self.log_q_norm.exp()
    }

    #[inline]
    fn emission_log_density(&self, x: &f64, y: &f64) -> f64 {
        let r = y - self.params.b * x;
        self.log_g_norm - r * r * self.inv_two_var_obs
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_parameters() {
        assert!(LgParams::stationary(1.0, 1.0, 0.2, 1.0).is_err());
        assert!(LgParams::stationary(0.5, 1.0, 0.2, 0.0).is_err());
        assert!(LgParams::stationary(0.5, 1.0, -0.2, 1.0).is_err());
    }

    #[test]
    fn stationary_initial_variance() {
        let p = LgParams::stationary(0.7, 1.0, 0.2, 1.0).unwrap();
        assert!((p.init_var - 0.04 / 0.51).abs() < 1e-15);
        assert_eq!(p.init_mean, 0.0);
    }

    #[test]
    fn densities_match_gaussian_formula() {
        let m = LinearGaussian::new(LgParams::stationary(0.7, 2.0, 0.2, 1.5).unwrap()).unwrap();
        let q = m.transition_density(&1.0, &0.9);
        let expected = (-(0.2f64).powi(2) / (2.0 * 0.04)).exp() / (0.2 * (2.0 * std::f64::consts::PI).sqrt());
        assert!((q - expected).abs() < 1e-13);
        let g = m.emission_log_density(&1.0, &2.5).exp();
        let expected = (-(0.5f64).powi(2) / (2.0 * 2.25)).exp() / (1.5 * (2.0 * std::f64::consts::PI).sqrt());
        assert!((g - expected).abs() < 1e-13);
        assert!((m.transition_density_bound() - 1.0 / (0.2 * (2.0 * std::f64::consts::PI).sqrt())).abs() < 1e-13);
    }
}

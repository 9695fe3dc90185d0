//! State-space model abstraction, additive functionals and data simulation.

mod functional;
mod linear_gaussian;
mod stochastic_volatility;

pub use functional::{statistics, AdditiveFunctional, MarginalFn, TermFn};
pub use linear_gaussian::{LgParams, LinearGaussian};
pub use stochastic_volatility::{StochasticVolatility, SvParams};

use crate::rng::{RngKey, StreamRng};

/// A fully dominated hidden Markov model.
///
/// The latent chain starts from the initial law and moves with a kernel
/// that admits a density bounded above by
/// [`transition_density_bound`](Self::transition_density_bound).
/// Densities are exposed in log space; the bound is on the plain scale.
pub trait StateSpaceModel: Send + Sync {
    type State: Clone + Send + Sync;
    type Obs: Clone + Send + Sync;

    fn state_dim(&self) -> usize;
    fn obs_dim(&self) -> usize;

    fn sample_initial(&self, rng: &mut StreamRng) -> Self::State;
    fn sample_transition(&self, x: &Self::State, rng: &mut StreamRng) -> Self::State;
    fn sample_observation(&self, x: &Self::State, rng: &mut StreamRng) -> Self::Obs;

    /// log q(x, x_next)
    fn transition_log_density(&self, x: &Self::State, x_next: &Self::State) -> f64;

    /// Upper bound on q over all pairs. May be `f64::INFINITY` for
    /// degenerate kernels, which rules out accept-reject backward sampling.
    fn transition_density_bound(&self) -> f64;

    /// log g(x, y)
    fn emission_log_density(&self, x: &Self::State, y: &Self::Obs) -> f64;

    fn transition_density(&self, x: &Self::State, x_next: &Self::State) -> f64 {
        self.transition_log_density(x, x_next).exp()
    }
}

/// A simulated latent path together with its observations.
#[derive(Clone, Debug, PartialEq)]
pub struct Trajectory<S, Y> {
    pub states: Vec<S>,
    pub observations: Vec<Y>,
}

impl<S, Y> Trajectory<S, Y> {
    /// Number of time points, `horizon + 1`.
    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }
}

/// Draws `x_0 ~ χ`, `x_{t+1} ~ Q(x_t, ·)` and `y_t ~ g(x_t, ·)` for
/// `t = 0..=horizon`.
///
/// The state chain and the observation noise use separate sub-streams of
/// `key`, so the output is a pure function of `(model, horizon, key)`.
pub fn simulate<M: StateSpaceModel>(
    model: &M,
    horizon: usize,
    key: RngKey,
) -> Trajectory<M::State, M::Obs> {
    let mut state_rng = key.child(0).rng();
    let mut obs_rng = key.child(1).rng();
    let mut states = Vec::with_capacity(horizon + 1);
    let mut observations = Vec::with_capacity(horizon + 1);
    let mut x = model.sample_initial(&mut state_rng);
    for t in 0..=horizon {
        if t > 0 {
            x = model.sample_transition(&x, &mut state_rng);
        }
        observations.push(model.sample_observation(&x, &mut obs_rng));
        states.push(x.clone());
    }
    Trajectory {
        states,
        observations,
    }
}

//! Bootstrap particle filter.

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::hmm::StateSpaceModel;
use crate::rng::{RngKey, StreamRng};

/// Clouds at least this large are mutated on the rayon pool.
const PARALLEL_MIN_PARTICLES: usize = 2048;

/// `N` particles with importance weights at one time step.
///
/// Weights are held in log space; the normalized weights `ω_i / Ω` are
/// computed once at construction after subtracting the largest log-weight.
#[derive(Clone, Debug)]
pub struct WeightedCloud<S> {
    particles: Vec<S>,
    log_weights: Vec<f64>,
    weights: Vec<f64>,
    time: usize,
    ancestors: Option<Vec<usize>>,
}

impl<S> WeightedCloud<S> {
    pub fn new(
        particles: Vec<S>,
        log_weights: Vec<f64>,
        time: usize,
        ancestors: Option<Vec<usize>>,
    ) -> Result<Self> {
        if particles.is_empty() {
            return Err(Error::invalid("particles", "cloud must hold at least one particle"));
        }
        if particles.len() != log_weights.len() {
            return Err(Error::invalid(
                "log_weights",
                format!("{} weights for {} particles", log_weights.len(), particles.len()),
            ));
        }
        if let Some(a) = &ancestors {
            if a.len() != particles.len() {
                return Err(Error::invalid("ancestors", "length differs from cloud size"));
            }
        }
        let weights = normalize_log_weights(&log_weights).ok_or(Error::DegenerateCloud { time })?;
        Ok(Self {
            particles,
            log_weights,
            weights,
            time,
            ancestors,
        })
    }

    /// Uniformly weighted cloud.
    pub fn uniform(particles: Vec<S>, time: usize) -> Result<Self> {
        let n = particles.len();
        Self::new(particles, vec![0.0; n], time, None)
    }

    pub fn len(&self) -> usize {
        self.particles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.particles.is_empty()
    }

    pub fn particles(&self) -> &[S] {
        &self.particles
    }

    pub fn log_weights(&self) -> &[f64] {
        &self.log_weights
    }

    /// Normalized weights `ω_i / Ω`.
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn time(&self) -> usize {
        self.time
    }

    /// Selection indices `I_t^i` that produced this cloud, if any.
    pub fn ancestors(&self) -> Option<&[usize]> {
        self.ancestors.as_deref()
    }

    /// Effective sample size `1 / Σ (ω_i/Ω)²`.
    pub fn ess(&self) -> f64 {
        1.0 / self.weights.iter().map(|w| w * w).sum::<f64>()
    }
}

/// Normalizes log-weights to probabilities. `None` if no weight is positive
/// and finite, or if any log-weight is NaN or `+inf`.
pub(crate) fn normalize_log_weights(log_weights: &[f64]) -> Option<Vec<f64>> {
    if log_weights.iter().any(|w| w.is_nan() || *w == f64::INFINITY) {
        return None;
    }
    let max = log_weights.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !max.is_finite() {
        return None;
    }
    let mut w: Vec<f64> = log_weights.iter().map(|lw| (lw - max).exp()).collect();
    let total: f64 = w.iter().sum();
    w.iter_mut().for_each(|x| *x /= total);
    Some(w)
}

/// Categorical law over indices with probabilities proportional to `weights`.
pub(crate) fn categorical(weights: &[f64]) -> Result<WeightedIndex<f64>> {
    WeightedIndex::new(weights).map_err(|_| Error::DegenerateWeights)
}

/// `draws` i.i.d. indices with `P(i) = w_i / Σ w`.
pub fn multinomial_sample(weights: &[f64], draws: usize, rng: &mut StreamRng) -> Result<Vec<usize>> {
    let dist = categorical(weights)?;
    Ok((0..draws).map(|_| dist.sample(rng)).collect())
}

/// Draws `ξ_0^i ~ χ` and weights them by `g(ξ_0^i, y_0)`.
///
/// Particle `i` uses the stream `key.child(i)`.
pub fn init_cloud<M: StateSpaceModel>(
    model: &M,
    y0: &M::Obs,
    n: usize,
    key: RngKey,
) -> Result<WeightedCloud<M::State>> {
    if n == 0 {
        return Err(Error::invalid("n", "need at least one particle"));
    }
    let draw = |i: usize| {
        let mut rng = key.child(i as u64).rng();
        let x = model.sample_initial(&mut rng);
        let lw = model.emission_log_density(&x, y0);
        (x, lw)
    };
    let (particles, log_weights): (Vec<_>, Vec<_>) = if n >= PARALLEL_MIN_PARTICLES {
        (0..n).into_par_iter().map(draw).unzip()
    } else {
        (0..n).map(draw).unzip()
    };
    WeightedCloud::new(particles, log_weights, 0, None)
}

/// One iteration of the bootstrap filter: multinomial selection, mutation
/// through the transition kernel and reweighting by the emission density.
///
/// Particle `i` uses the stream `key.child(i)` for both its ancestor index
/// and its mutation, so the output does not depend on how the loop is
/// scheduled.
pub fn pf_step<M: StateSpaceModel>(
    model: &M,
    cloud: &WeightedCloud<M::State>,
    y_next: &M::Obs,
    key: RngKey,
) -> Result<WeightedCloud<M::State>> {
    let n = cloud.len();
    let selection = categorical(cloud.weights()).map_err(|_| Error::DegenerateCloud { time: cloud.time() })?;
    let propagate = |i: usize| {
        let mut rng = key.child(i as u64).rng();
        let a = selection.sample(&mut rng);
        let x = model.sample_transition(&cloud.particles[a], &mut rng);
        let lw = model.emission_log_density(&x, y_next);
        (a, x, lw)
    };
    let out: Vec<(usize, M::State, f64)> = if n >= PARALLEL_MIN_PARTICLES {
        (0..n).into_par_iter().map(propagate).collect()
    } else {
        (0..n).map(propagate).collect()
    };
    let mut ancestors = Vec::with_capacity(n);
    let mut particles = Vec::with_capacity(n);
    let mut log_weights = Vec::with_capacity(n);
    for (a, x, lw) in out {
        ancestors.push(a);
        particles.push(x);
        log_weights.push(lw);
    }
    WeightedCloud::new(particles, log_weights, cloud.time() + 1, Some(ancestors))
}

/// Self-normalized estimate `Σ_i (ω_i/Ω) f(ξ_i)`.
pub fn estimate_filter<S>(cloud: &WeightedCloud<S>, f: impl Fn(&S) -> f64) -> f64 {
    cloud
        .particles
        .iter()
        .zip(&cloud.weights)
        .map(|(x, w)| w * f(x))
        .sum()
}

use super::backward::backward_probs_into;
use crate::error::{Error, Result};
use crate::filter::{init_cloud, pf_step, WeightedCloud};
use crate::hmm::{AdditiveFunctional, StateSpaceModel};
use crate::rng::RngKey;

/// Exact forward-only FFBSm update:
/// `τ̃'^i = Σ_j Λ(i, j) (τ̃^j + h_t(ξ^j, ξ'^i))`, `O(N²)` per step.
///
/// `prev_tau` is row-major with `functionals.len()` entries per particle,
/// the same layout as [`ParisState`](super::ParisState).
pub fn ffbsm_forward_step<M: StateSpaceModel>(
    prev: &WeightedCloud<M::State>,
    prev_tau: &[f64],
    model: &M,
    functionals: &[AdditiveFunctional<M::State>],
    next: &WeightedCloud<M::State>,
) -> Result<Vec<f64>> {
    let dim = functionals.len();
    if prev_tau.len() != prev.len() * dim {
        return Err(Error::invalid("prev_tau", "length must be cloud size times statistic count"));
    }
    let t = prev.time();
    let mut tau = vec![0.0; next.len() * dim];
    let mut probs = Vec::with_capacity(prev.len());
    for (i, target) in next.particles().iter().enumerate() {
        if !backward_probs_into(prev, model, target, &mut probs) {
            return Err(Error::UnreachableTarget {
                time: next.time(),
                target: Some(i),
            });
        }
        let row = &mut tau[i * dim..(i + 1) * dim];
        for (j, (&p, src)) in probs.iter().zip(prev.particles()).enumerate() {
            if p == 0.0 {
                continue;
            }
            let old = &prev_tau[j * dim..(j + 1) * dim];
            for ((acc, f), o) in row.iter_mut().zip(functionals).zip(old) {
                *acc += p * (o + f.term(t, src, target));
            }
        }
    }
    Ok(tau)
}

/// Running forward-only FFBSm smoother.
#[derive(Clone, Debug)]
pub struct FfbsmState<S> {
    cloud: WeightedCloud<S>,
    tau: Vec<f64>,
    dim: usize,
}

impl<S: Clone + Send + Sync> FfbsmState<S> {
    pub fn init<M>(model: &M, y0: &M::Obs, n: usize, dim: usize, key: RngKey) -> Result<Self>
    where
        M: StateSpaceModel<State = S>,
    {
        Ok(Self::from_cloud(init_cloud(model, y0, n, key)?, dim))
    }

    pub fn from_cloud(cloud: WeightedCloud<S>, dim: usize) -> Self {
        let tau = vec![0.0; cloud.len() * dim];
        Self { cloud, tau, dim }
    }

    pub fn cloud(&self) -> &WeightedCloud<S> {
        &self.cloud
    }

    pub fn tau(&self, i: usize) -> &[f64] {
        &self.tau[i * self.dim..(i + 1) * self.dim]
    }

    pub fn raw_tau(&self) -> &[f64] {
        &self.tau
    }

    /// Filter step with `key`, then the exact update.
    pub fn step<M>(self, model: &M, functionals: &[AdditiveFunctional<S>], y_next: &M::Obs, key: RngKey) -> Result<Self>
    where
        M: StateSpaceModel<State = S>,
    {
        let next = pf_step(model, &self.cloud, y_next, key)?;
        self.advance(model, functionals, next)
    }

    pub fn advance<M>(self, model: &M, functionals: &[AdditiveFunctional<S>], next: WeightedCloud<S>) -> Result<Self>
    where
        M: StateSpaceModel<State = S>,
    {
        let tau = ffbsm_forward_step(&self.cloud, &self.tau, model, functionals, &next)?;
        Ok(Self {
            cloud: next,
            tau,
            dim: self.dim,
        })
    }

    /// Estimates of every statistic, marginal terms included.
    pub fn estimates(&self, functionals: &[AdditiveFunctional<S>]) -> Vec<f64> {
        let w = self.cloud.weights();
        functionals
            .iter()
            .enumerate()
            .map(|(d, f)| {
                w.iter()
                    .zip(self.cloud.particles())
                    .enumerate()
                    .map(|(i, (w, x))| w * (self.tau[i * self.dim + d] + f.marginal_value(x)))
                    .sum()
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hmm::{LgParams, LinearGaussian};

    fn lg() -> LinearGaussian {
        LinearGaussian::new(LgParams::stationary(0.7, 1.0, 0.2, 1.0).unwrap()).unwrap()
    }

    #[test]
    fn zero_terms_stay_zero() {
        let zero = AdditiveFunctional::homogeneous("0", |_: &f64, _: &f64| 0.0);
        let s = FfbsmState::init(&lg(), &0.3, 12, 1, RngKey::new(1)).unwrap();
        let s = s.step(&lg(), std::slice::from_ref(&zero), &0.5, RngKey::new(2)).unwrap();
        assert!(s.raw_tau().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn single_particle_adds_the_term() {
        let f = AdditiveFunctional::homogeneous("xy", |x: &f64, y: &f64| x * y + 1.0);
        let prev = WeightedCloud::uniform(vec![0.5], 0).unwrap();
        let next = WeightedCloud::uniform(vec![-0.2], 1).unwrap();
        let tau = ffbsm_forward_step(&prev, &[3.0], &lg(), std::slice::from_ref(&f), &next).unwrap();
        assert!((tau[0] - (3.0 + 0.5 * -0.2 + 1.0)).abs() < 1e-15);
    }
}

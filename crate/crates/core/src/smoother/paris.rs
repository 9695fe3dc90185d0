use super::backward::{backward_probs_into, sample_backward_ar, BackwardSampler, BackwardWeights, TrialStats};
use crate::error::{Error, Result};
use crate::filter::{init_cloud, pf_step, WeightedCloud};
use crate::genealogy::BackwardIndexHistory;
use crate::hmm::{AdditiveFunctional, StateSpaceModel};
use crate::rng::RngKey;

/// State of the PaRIS smoother at time `t`: the filter cloud, one vector of
/// auxiliary statistics `τ̂_t^i` per particle and the precision `K`.
///
/// Several statistics can be tracked at once on the same backward draws;
/// `tau` is stored row-major with `dim` entries per particle.
#[derive(Clone, Debug)]
pub struct ParisState<S> {
    cloud: WeightedCloud<S>,
    tau: Vec<f64>,
    dim: usize,
    precision: usize,
    backward_log: Option<BackwardIndexHistory>,
}

impl<S: Clone + Send + Sync> ParisState<S> {
    /// Initial cloud from the filter and `τ̂_0 ≡ 0`.
    pub fn init<M>(model: &M, y0: &M::Obs, n: usize, precision: usize, dim: usize, key: RngKey) -> Result<Self>
    where
        M: StateSpaceModel<State = S>,
    {
        Self::from_cloud(init_cloud(model, y0, n, key)?, precision, dim)
    }

    pub fn from_cloud(cloud: WeightedCloud<S>, precision: usize, dim: usize) -> Result<Self> {
        if precision == 0 {
            return Err(Error::invalid("precision", "K must be at least 1"));
        }
        let tau = vec![0.0; cloud.len() * dim];
        Ok(Self {
            cloud,
            tau,
            dim,
            precision,
            backward_log: None,
        })
    }

    /// Starts logging the backward index matrices from the current time on.
    pub fn record_backward(mut self) -> Self {
        self.backward_log = Some(BackwardIndexHistory::new(self.cloud.len(), self.precision));
        self
    }

    pub fn cloud(&self) -> &WeightedCloud<S> {
        &self.cloud
    }

    pub fn precision(&self) -> usize {
        self.precision
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn time(&self) -> usize {
        self.cloud.time()
    }

    /// Auxiliary statistics of particle `i`.
    pub fn tau(&self, i: usize) -> &[f64] {
        &self.tau[i * self.dim..(i + 1) * self.dim]
    }

    /// Statistic `component` for every particle.
    pub fn tau_component(&self, component: usize) -> Vec<f64> {
        self.tau.iter().skip(component).step_by(self.dim).copied().collect()
    }

    pub fn backward_log(&self) -> Option<&BackwardIndexHistory> {
        self.backward_log.as_ref()
    }

    pub fn into_backward_log(self) -> Option<BackwardIndexHistory> {
        self.backward_log
    }

    /// Propagates the filter one step, then updates the statistics.
    ///
    /// The filter uses `key.child(0)` and the backward draws `key.child(1)`.
    pub fn step<M>(
        self,
        model: &M,
        functionals: &[AdditiveFunctional<S>],
        y_next: &M::Obs,
        sampler: BackwardSampler,
        key: RngKey,
    ) -> Result<(Self, Option<TrialStats>)>
    where
        M: StateSpaceModel<State = S>,
    {
        let next = pf_step(model, &self.cloud, y_next, key.child(0))?;
        self.advance(model, functionals, next, sampler, key.child(1))
    }

    /// Updates the statistics onto an already propagated cloud `next`.
    ///
    /// For every particle `i` of `next`, `K` indices `J` are drawn from
    /// `Λ(i, ·)` and `τ̂^i ← K⁻¹ Σ_J (τ̂^J + h_t(ξ^J, ξ'^i))`. With the exact
    /// sampler the draws of particle `i` use `key.child(i)`; accept-reject
    /// draws are keyed as in [`sample_backward_ar`].
    pub fn advance<M>(
        self,
        model: &M,
        functionals: &[AdditiveFunctional<S>],
        next: WeightedCloud<S>,
        sampler: BackwardSampler,
        key: RngKey,
    ) -> Result<(Self, Option<TrialStats>)>
    where
        M: StateSpaceModel<State = S>,
    {
        if functionals.len() != self.dim {
            return Err(Error::invalid(
                "functionals",
                format!("{} functionals for {} tracked statistics", functionals.len(), self.dim),
            ));
        }
        if next.len() != self.cloud.len() {
            return Err(Error::invalid("next", "cloud size changed between steps"));
        }
        let n = next.len();
        let k = self.precision;
        let prev = &self.cloud;

        let (indices, stats) = match sampler {
            BackwardSampler::Exact => {
                let mut indices = Vec::with_capacity(n * k);
                let mut buf = Vec::with_capacity(n);
                for (i, target) in next.particles().iter().enumerate() {
                    if !backward_probs_into(prev, model, target, &mut buf) {
                        return Err(Error::UnreachableTarget {
                            time: next.time(),
                            target: Some(i),
                        });
                    }
                    let bw = BackwardWeights::from_probs(std::mem::take(&mut buf));
                    let mut rng = key.child(i as u64).rng();
                    indices.extend((0..k).map(|_| bw.sample(&mut rng)));
                    buf = bw.into_probs();
                }
                (indices, None)
            }
            BackwardSampler::AcceptReject { threshold } => {
                let targets: Vec<(usize, usize)> = (0..n).map(|i| (i, k)).collect();
                let (indices, stats) = sample_backward_ar(prev, model, next.particles(), &targets, threshold, key)?;
                (indices, Some(stats))
            }
        };

        let t = prev.time();
        let dim = self.dim;
        let inv_k = 1.0 / k as f64;
        let mut tau = vec![0.0; n * dim];
        for (i, target) in next.particles().iter().enumerate() {
            let row = &mut tau[i * dim..(i + 1) * dim];
            for &j in &indices[i * k..(i + 1) * k] {
                let src = &prev.particles()[j];
                let prev_tau = &self.tau[j * dim..(j + 1) * dim];
                for ((acc, f), old) in row.iter_mut().zip(functionals).zip(prev_tau) {
                    *acc += old + f.term(t, src, target);
                }
            }
            row.iter_mut().for_each(|v| *v *= inv_k);
        }

        let mut backward_log = self.backward_log;
        if let Some(log) = backward_log.as_mut() {
            log.push(indices)?;
        }
        Ok((
            Self {
                cloud: next,
                tau,
                dim,
                precision: k,
                backward_log,
            },
            stats,
        ))
    }

    /// `Σ_i (ω_i/Ω)(τ̂_i[component] + m(ξ_i))`, with `m ≡ 0` when absent.
    pub fn estimate(&self, component: usize, marginal: Option<&dyn Fn(&S) -> f64>) -> f64 {
        self.cloud
            .weights()
            .iter()
            .zip(self.cloud.particles())
            .enumerate()
            .map(|(i, (w, x))| w * (self.tau[i * self.dim + component] + marginal.map_or(0.0, |m| m(x))))
            .sum()
    }

    /// Estimates of every tracked statistic, marginal terms included.
    pub fn estimates(&self, functionals: &[AdditiveFunctional<S>]) -> Vec<f64> {
        functionals
            .iter()
            .enumerate()
            .map(|(d, f)| match f.marginal() {
                Some(m) => self.estimate(d, Some(m.as_ref())),
                None => self.estimate(d, None),
            })
            .collect()
    }
}

use super::backward::{backward_probs_into, sample_backward_ar, BackwardSampler, BackwardWeights, TrialStats};
use crate::error::{Error, Result};
use crate::filter::{categorical, WeightedCloud};
use crate::hmm::{AdditiveFunctional, StateSpaceModel};
use crate::rng::RngKey;
use rand::distr::Distribution;

/// Backward index trajectories; `paths[p][s]` indexes the cloud at time `s`.
#[derive(Clone, Debug)]
pub struct FfbsiPaths {
    pub paths: Vec<Vec<usize>>,
    pub trials: Option<TrialStats>,
}

/// Forward-filtering backward-simulation over a stored cloud history
/// `clouds[0..=T]`.
///
/// Each path starts from `J_T ~ Pr(ω_T)` and moves back with
/// `J_s ~ Λ_s(J_{s+1}, ·)`. Paths are conditionally independent given the
/// clouds. Draws at time `s` use `key.child(s)`.
pub fn ffbsi_sample_paths<M: StateSpaceModel>(
    clouds: &[WeightedCloud<M::State>],
    model: &M,
    n_paths: usize,
    sampler: BackwardSampler,
    key: RngKey,
) -> Result<FfbsiPaths> {
    let last = clouds.len().checked_sub(1).ok_or_else(|| Error::invalid("clouds", "empty history"))?;
    let mut paths = vec![vec![0usize; last + 1]; n_paths];
    let mut trials = match sampler {
        BackwardSampler::Exact => None,
        BackwardSampler::AcceptReject { threshold } => Some(TrialStats::new(threshold)),
    };

    let terminal = categorical(clouds[last].weights()).map_err(|_| Error::DegenerateCloud { time: last })?;
    let mut rng = key.child(last as u64).rng();
    for path in paths.iter_mut() {
        path[last] = terminal.sample(&mut rng);
    }

    let mut buf = Vec::new();
    for s in (0..last).rev() {
        let prev = &clouds[s];
        let next = &clouds[s + 1];
        let step_key = key.child(s as u64);
        match sampler {
            BackwardSampler::Exact => {
                for (p, path) in paths.iter_mut().enumerate() {
                    let target = path[s + 1];
                    if !backward_probs_into(prev, model, &next.particles()[target], &mut buf) {
                        return Err(Error::UnreachableTarget {
                            time: s + 1,
                            target: Some(target),
                        });
                    }
                    let bw = BackwardWeights::from_probs(std::mem::take(&mut buf));
                    path[s] = bw.sample(&mut step_key.child(p as u64).rng());
                    buf = bw.into_probs();
                }
            }
            BackwardSampler::AcceptReject { threshold } => {
                let targets: Vec<(usize, usize)> = paths.iter().map(|path| (path[s + 1], 1)).collect();
                let (idx, stats) = sample_backward_ar(prev, model, next.particles(), &targets, threshold, step_key)?;
                for (path, j) in paths.iter_mut().zip(idx) {
                    path[s] = j;
                }
                if let Some(t) = trials.as_mut() {
                    t.merge(&stats);
                }
            }
        }
    }
    Ok(FfbsiPaths { paths, trials })
}

/// Mean of the full statistic over the sampled state paths, together with
/// the standard error of that mean.
pub fn ffbsi_estimate<S: Clone>(
    clouds: &[WeightedCloud<S>],
    paths: &FfbsiPaths,
    functional: &AdditiveFunctional<S>,
) -> Result<(f64, f64)> {
    let values = paths
        .paths
        .iter()
        .map(|path| {
            let states: Vec<S> = path.iter().enumerate().map(|(s, &j)| clouds[s].particles()[j].clone()).collect();
            functional.evaluate_statistic(&states)
        })
        .collect::<Result<Vec<f64>>>()?;
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0).max(1.0);
    Ok((mean, (var / n).sqrt()))
}

use rand::distr::Distribution;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::filter::{categorical, multinomial_sample, WeightedCloud};
use crate::hmm::StateSpaceModel;
use crate::rng::{RngKey, StreamRng};

/// How backward indices are drawn from `Λ(i, ·)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum BackwardSampler {
    /// Normalize `Λ(i, ·)` explicitly for every target: `O(N)` per target.
    Exact,
    /// Rejection sampling with proposal `Pr(ω)` and bound `ε̄`. After
    /// `threshold` rejected proposals a draw falls back to exact sampling;
    /// `None` never falls back.
    AcceptReject { threshold: Option<usize> },
}

/// `round(√N)`
pub fn default_threshold(n: usize) -> usize {
    (n as f64).sqrt().round() as usize
}

/// Backward transition probabilities `Λ(i, j) ∝ ω^j q(ξ^j, ξ'_i)` for one target.
#[derive(Clone, Debug, PartialEq)]
pub struct BackwardWeights {
    probs: Vec<f64>,
}

impl BackwardWeights {
    pub(crate) fn from_probs(probs: Vec<f64>) -> Self {
        Self { probs }
    }

    pub(crate) fn into_probs(self) -> Vec<f64> {
        self.probs
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    /// One draw by inverse CDF.
    pub(crate) fn sample(&self, rng: &mut StreamRng) -> usize {
        let u: f64 = rng.random();
        let mut acc = 0.0;
        for (j, p) in self.probs.iter().enumerate() {
            acc += p;
            if u < acc {
                return j;
            }
        }
        // u landed in the rounding slack above the final partial sum
        self.probs.iter().rposition(|&p| p > 0.0).unwrap_or(0)
    }
}

/// Fills `buf` with normalized `Λ(·)` for `target`; `false` if every entry vanishes.
pub(crate) fn backward_probs_into<M: StateSpaceModel>(
    prev: &WeightedCloud<M::State>,
    model: &M,
    target: &M::State,
    buf: &mut Vec<f64>,
) -> bool {
    buf.clear();
    let mut max = f64::NEG_INFINITY;
    for (x, lw) in prev.particles().iter().zip(prev.log_weights()) {
        let v = lw + model.transition_log_density(x, target);
        if v > max {
            max = v;
        }
        buf.push(v);
    }
    if !max.is_finite() {
        return false;
    }
    let mut total = 0.0;
    for v in buf.iter_mut() {
        *v = (*v - max).exp();
        total += *v;
    }
    let inv = 1.0 / total;
    buf.iter_mut().for_each(|v| *v *= inv);
    true
}

/// `Λ(·)` for a particle `target` of the next generation.
pub fn backward_weights<M: StateSpaceModel>(
    prev: &WeightedCloud<M::State>,
    model: &M,
    target: &M::State,
) -> Result<BackwardWeights> {
    let mut probs = Vec::with_capacity(prev.len());
    if !backward_probs_into(prev, model, target, &mut probs) {
        return Err(Error::UnreachableTarget {
            time: prev.time() + 1,
            target: None,
        });
    }
    Ok(BackwardWeights { probs })
}

/// `draws` i.i.d. indices from `Λ`.
pub fn sample_backward_exact(bw: &BackwardWeights, draws: usize, rng: &mut StreamRng) -> Result<Vec<usize>> {
    multinomial_sample(&bw.probs, draws, rng)
}

/// Counts of accept-reject trials per backward draw.
///
/// `counts[k]` is the number of draws accepted at proposal `k` (index 0 is
/// unused). Draws that hit the threshold are counted in `fallbacks` and shown
/// as the bucket `threshold + 1` by [`histogram`](Self::histogram).
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct TrialStats {
    pub threshold: Option<usize>,
    pub counts: Vec<u64>,
    pub fallbacks: u64,
    pub draws: u64,
    /// Proposals examined, fallback draws included.
    pub proposals: u64,
}

impl TrialStats {
    pub fn new(threshold: Option<usize>) -> Self {
        Self {
            threshold,
            counts: vec![0; threshold.map_or(2, |m| m + 1)],
            ..Default::default()
        }
    }

    fn record_accept(&mut self, trials: usize) {
        if trials >= self.counts.len() {
            self.counts.resize(trials + 1, 0);
        }
        self.counts[trials] += 1;
        self.draws += 1;
        self.proposals += trials as u64;
    }

    fn record_fallback(&mut self, trials: usize) {
        self.fallbacks += 1;
        self.draws += 1;
        self.proposals += trials as u64;
    }

    pub fn merge(&mut self, other: &TrialStats) {
        if other.counts.len() > self.counts.len() {
            self.counts.resize(other.counts.len(), 0);
        }
        for (a, b) in self.counts.iter_mut().zip(&other.counts) {
            *a += b;
        }
        self.fallbacks += other.fallbacks;
        self.draws += other.draws;
        self.proposals += other.proposals;
    }

    /// Fraction of draws that fell back to exact sampling.
    pub fn exceed_fraction(&self) -> f64 {
        if self.draws == 0 {
            0.0
        } else {
            self.fallbacks as f64 / self.draws as f64
        }
    }

    pub fn mean_trials(&self) -> f64 {
        if self.draws == 0 {
            0.0
        } else {
            self.proposals as f64 / self.draws as f64
        }
    }

    /// `(trials, count)` rows for `trials = 1..`, with fallbacks in the
    /// final overflow row when a threshold is set.
    pub fn histogram(&self) -> Vec<(usize, u64)> {
        let mut rows: Vec<(usize, u64)> = (1..self.counts.len()).map(|k| (k, self.counts[k])).collect();
        if let Some(m) = self.threshold {
            rows.truncate(m);
            rows.push((m + 1, self.fallbacks));
        }
        rows
    }
}

/// Accept-reject backward sampling over a batch of draws.
///
/// `targets` lists `(index into next, number of draws)`. The result holds the
/// draws in target order. The `d`-th draw of the target at list position `p`
/// consumes the stream `key.derive(&[p, d])`, proposals first and, after
/// `threshold` rejections, one exact draw from `Λ`.
///
/// Pending draws are processed in rounds: every round gives each unaccepted
/// draw one proposal `J ~ Pr(ω)` and accepts it when `U ≤ q(ξ^J, ξ'_i) / ε̄`.
pub fn sample_backward_ar<M: StateSpaceModel>(
    prev: &WeightedCloud<M::State>,
    model: &M,
    next: &[M::State],
    targets: &[(usize, usize)],
    threshold: Option<usize>,
    key: RngKey,
) -> Result<(Vec<usize>, TrialStats)> {
    let bound = model.transition_density_bound();
    if !(bound > 0.0 && bound.is_finite()) {
        return Err(Error::UnboundedTransition(bound));
    }
    let log_bound = bound.ln();
    let proposal = categorical(prev.weights()).map_err(|_| Error::DegenerateCloud { time: prev.time() })?;

    let mut offsets = Vec::with_capacity(targets.len() + 1);
    offsets.push(0);
    for &(_, count) in targets {
        offsets.push(offsets.last().unwrap() + count);
    }
    let total = *offsets.last().unwrap();
    let mut out = vec![usize::MAX; total];
    let mut stats = TrialStats::new(threshold);

    struct Pending {
        slot: usize,
        target: usize,
        rng: StreamRng,
        trials: usize,
    }
    let mut pending: Vec<Pending> = Vec::with_capacity(total);
    for (p, &(target, count)) in targets.iter().enumerate() {
        for d in 0..count {
            pending.push(Pending {
                slot: offsets[p] + d,
                target,
                rng: key.derive(&[p as u64, d as u64]).rng(),
                trials: 0,
            });
        }
    }

    let mut buf = Vec::with_capacity(prev.len());
    let mut fallback = |draw: &mut Pending, out: &mut [usize], stats: &mut TrialStats| -> Result<()> {
        if !backward_probs_into(prev, model, &next[draw.target], &mut buf) {
            return Err(Error::UnreachableTarget {
                time: prev.time() + 1,
                target: Some(draw.target),
            });
        }
        let bw = BackwardWeights { probs: std::mem::take(&mut buf) };
        out[draw.slot] = bw.sample(&mut draw.rng);
        buf = bw.probs;
        stats.record_fallback(draw.trials);
        Ok(())
    };

    if threshold == Some(0) {
        for draw in pending.iter_mut() {
            fallback(draw, &mut out, &mut stats)?;
        }
        return Ok((out, stats));
    }

    while !pending.is_empty() {
        let mut still = Vec::with_capacity(pending.len());
        for mut draw in pending {
            let j = proposal.sample(&mut draw.rng);
            let u: f64 = draw.rng.random();
            draw.trials += 1;
            let log_ratio = model.transition_log_density(&prev.particles()[j], &next[draw.target]) - log_bound;
            if u.ln() <= log_ratio {
                out[draw.slot] = j;
                stats.record_accept(draw.trials);
            } else if threshold.is_some_and(|m| draw.trials >= m) {
                fallback(&mut draw, &mut out, &mut stats)?;
            } else {
                still.push(draw);
            }
        }
        pending = still;
    }
    Ok((out, stats))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hmm::{LgParams, LinearGaussian};

    /// Chain whose kernel ignores the current state: q ≡ 1 on [0, 1).
    pub(crate) struct UniformKernel;

    impl StateSpaceModel for UniformKernel {
        type State = f64;
        type Obs = f64;
        fn state_dim(&self) -> usize {
            1
        }
        fn obs_dim(&self) -> usize {
            1
        }
        fn sample_initial(&self, rng: &mut StreamRng) -> f64 {
            rng.random()
        }
        fn sample_transition(&self, _x: &f64, rng: &mut StreamRng) -> f64 {
            rng.random()
        }
        fn sample_observation(&self, x: &f64, _rng: &mut StreamRng) -> f64 {
            *x
        }
        fn transition_log_density(&self, _x: &f64, _x_next: &f64) -> f64 {
            0.0
        }
        fn transition_density_bound(&self) -> f64 {
            1.0
        }
        fn emission_log_density(&self, x: &f64, y: &f64) -> f64 {
            -(x - y).powi(2)
        }
    }

    fn lg() -> LinearGaussian {
        LinearGaussian::new(LgParams::stationary(0.7, 1.0, 0.2, 1.0).unwrap()).unwrap()
    }

    #[test]
    fn single_particle_is_certain() {
        let c = WeightedCloud::new(vec![0.3], vec![-2.0], 0, None).unwrap();
        let bw = backward_weights(&c, &lg(), &0.1).unwrap();
        assert_eq!(bw.probs(), &[1.0]);
    }

    #[test]
    fn constant_kernel_equal_weights_is_uniform() {
        let c = WeightedCloud::uniform(vec![0.1, 0.5, 0.9, 0.2], 0).unwrap();
        let bw = backward_weights(&c, &UniformKernel, &0.4).unwrap();
        assert!(bw.probs().iter().all(|p| (p - 0.25).abs() < 1e-15));
    }

    /// Kernel with hand-set densities: q(x, ·) = x.
    struct TableKernel;
    impl StateSpaceModel for TableKernel {
        type State = f64;
        type Obs = f64;
        fn state_dim(&self) -> usize {
            1
        }
        fn obs_dim(&self) -> usize {
            1
        }
        fn sample_initial(&self, _: &mut StreamRng) -> f64 {
            0.5
        }
        fn sample_transition(&self, _: &f64, _: &mut StreamRng) -> f64 {
            0.5
        }
        fn sample_observation(&self, _: &f64, _: &mut StreamRng) -> f64 {
            0.0
        }
        fn transition_log_density(&self, x: &f64, _: &f64) -> f64 {
            x.ln()
        }
        fn transition_density_bound(&self) -> f64 {
            1.0
        }
        fn emission_log_density(&self, _: &f64, _: &f64) -> f64 {
            0.0
        }
    }

    #[test]
    fn fixture_backward_weights() {
        // ω = (1, 2), q to the target = (0.5, 0.25): 0.5 / (0.5 + 0.5) each
        let c = WeightedCloud::new(vec![0.5, 0.25], vec![0.0, 2f64.ln()], 0, None).unwrap();
        let bw = backward_weights(&c, &TableKernel, &0.0).unwrap();
        assert!((bw.probs()[0] - 0.5).abs() < 1e-15);
        assert!((bw.probs()[1] - 0.5).abs() < 1e-15);
    }

    #[test]
    fn unreachable_target_errors() {
        let c = WeightedCloud::new(vec![0.0, 0.0], vec![0.0, 0.0], 2, None).unwrap();
        assert!(matches!(
            backward_weights(&c, &TableKernel, &1.0),
            Err(Error::UnreachableTarget { time: 3, .. })
        ));
    }

    #[test]
    fn constant_kernel_accepts_first_proposal() {
        let c = WeightedCloud::new(vec![0.1, 0.5, 0.9], vec![0.0, -1.0, 0.5], 0, None).unwrap();
        let next = vec![0.3, 0.7];
        let (idx, stats) =
            sample_backward_ar(&c, &UniformKernel, &next, &[(0, 50), (1, 50)], Some(5), RngKey::new(1)).unwrap();
        assert_eq!(idx.len(), 100);
        assert_eq!(stats.draws, 100);
        assert_eq!(stats.counts[1], 100);
        assert_eq!(stats.exceed_fraction(), 0.0);
        assert_eq!(stats.mean_trials(), 1.0);
        assert_eq!(stats.histogram()[0], (1, 100));
    }

    #[test]
    fn zero_threshold_always_falls_back() {
        let c = WeightedCloud::new(vec![0.1, 0.5, 0.9], vec![0.0, -1.0, 0.5], 0, None).unwrap();
        let (_, stats) =
            sample_backward_ar(&c, &lg(), &[0.2, 0.0], &[(0, 10), (1, 10)], Some(0), RngKey::new(1)).unwrap();
        assert_eq!(stats.exceed_fraction(), 1.0);
        assert_eq!(stats.proposals, 0);
        assert_eq!(stats.histogram(), vec![(1, 20)]);
    }

    #[test]
    fn unbounded_kernel_is_rejected() {
        let p = LgParams { a: 1.0, b: 1.0, sigma_eps: 0.0, sigma_obs: 1.0, init_mean: 0.0, init_var: 0.0 };
        let m = LinearGaussian::new(p).unwrap();
        let c = WeightedCloud::uniform(vec![0.0], 0).unwrap();
        assert!(matches!(
            sample_backward_ar(&c, &m, &[0.0], &[(0, 1)], None, RngKey::new(0)),
            Err(Error::UnboundedTransition(_))
        ));
    }

    #[test]
    fn ar_is_reproducible() {
        let c = WeightedCloud::new(vec![-0.4, 0.1, 0.3, 0.6], vec![0.0, -0.3, 0.2, -1.0], 0, None).unwrap();
        let next = [0.0, 0.25, -0.1];
        let targets = [(0, 3), (1, 3), (2, 3)];
        let a = sample_backward_ar(&c, &lg(), &next, &targets, Some(3), RngKey::new(8)).unwrap();
        let b = sample_backward_ar(&c, &lg(), &next, &targets, Some(3), RngKey::new(8)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn stats_merge_and_histogram() {
        let mut a = TrialStats::new(Some(3));
        a.record_accept(1);
        a.record_accept(3);
        let mut b = TrialStats::new(Some(3));
        b.record_fallback(3);
        b.record_accept(2);
        a.merge(&b);
        assert_eq!(a.histogram(), vec![(1, 1), (2, 1), (3, 1), (4, 1)]);
        assert_eq!(a.draws, 4);
        assert!((a.mean_trials() - 9.0 / 4.0).abs() < 1e-15);
        assert!((a.exceed_fraction() - 0.25).abs() < 1e-15);
    }
}

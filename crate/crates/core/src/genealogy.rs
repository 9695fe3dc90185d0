//! Support of the PaRIS estimator and accept-reject trial summaries.
//!
//! Backward indices link particles of consecutive generations. The set
//! `A_{s,t}` holds the time-`s` particles reachable from some time-`t`
//! particle through the logged indices; the estimator at time `t` is
//! supported on `A_{0,t} × ... × A_{t,t}`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::smoother::TrialStats;

/// Backward index matrices `J_t^{(i,k)}` for `t = 1..=horizon`.
///
/// Times are relative to the first logged cloud, which is time 0 here.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BackwardIndexHistory {
    n: usize,
    k: usize,
    steps: Vec<Vec<usize>>,
}

impl BackwardIndexHistory {
    pub fn new(n: usize, k: usize) -> Self {
        Self { n, k, steps: Vec::new() }
    }

    pub fn from_steps(n: usize, k: usize, steps: Vec<Vec<usize>>) -> Result<Self> {
        let mut h = Self::new(n, k);
        for s in steps {
            h.push(s)?;
        }
        Ok(h)
    }

    /// Appends the row-major `N × K` matrix for the next time step.
    pub fn push(&mut self, indices: Vec<usize>) -> Result<()> {
        if indices.len() != self.n * self.k {
            return Err(Error::invalid(
                "indices",
                format!("expected {}x{} backward indices, got {}", self.n, self.k, indices.len()),
            ));
        }
        if let Some(bad) = indices.iter().find(|&&j| j >= self.n) {
            return Err(Error::invalid("indices", format!("index {bad} out of range for N={}", self.n)));
        }
        self.steps.push(indices);
        Ok(())
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn k(&self) -> usize {
        self.k
    }

    /// Last logged time `T`.
    pub fn horizon(&self) -> usize {
        self.steps.len()
    }

    /// The `K` time-`(t-1)` indices drawn for particle `i` at time `t ≥ 1`.
    pub fn parents(&self, t: usize, i: usize) -> &[usize] {
        &self.steps[t - 1][i * self.k..(i + 1) * self.k]
    }

    /// `(t, i, k, j)` rows, `t ≥ 1`.
    pub fn rows(&self) -> impl Iterator<Item = (usize, usize, usize, usize)> + '_ {
        self.steps.iter().enumerate().flat_map(move |(t, m)| {
            m.iter()
                .enumerate()
                .map(move |(pos, &j)| (t + 1, pos / self.k, pos % self.k, j))
        })
    }
}

/// Cardinalities `#A_{s,t}` for `s = 0..=t`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SupportProfile {
    pub t: usize,
    pub n: usize,
    pub cardinalities: Vec<usize>,
}

impl SupportProfile {
    pub fn fractions(&self) -> Vec<f64> {
        self.cardinalities.iter().map(|&c| c as f64 / self.n as f64).collect()
    }

    /// `log #S_t − (t + 1) log N`, i.e. the log of `#S_t / N^{t+1}`.
    pub fn log_ratio(&self) -> f64 {
        let ln_n = (self.n as f64).ln();
        self.cardinalities.iter().map(|&c| (c as f64).ln() - ln_n).sum()
    }

    /// Mean of the per-slice fractions over `s = 0..t`, i.e. excluding the
    /// trivially full slice `s = t`.
    pub fn mean_fraction(&self) -> f64 {
        let f = self.fractions();
        if f.len() <= 1 {
            return 1.0;
        }
        f[..f.len() - 1].iter().sum::<f64>() / (f.len() - 1) as f64
    }
}

/// Reachable sets from slice `t` down to slice 0.
pub fn support_profile(hist: &BackwardIndexHistory, t: usize) -> Result<SupportProfile> {
    if t > hist.horizon() {
        return Err(Error::invalid("t", format!("t={t} beyond logged horizon {}", hist.horizon())));
    }
    let n = hist.n();
    let mut cardinalities = vec![0; t + 1];
    let mut reach = vec![true; n];
    cardinalities[t] = n;
    for s in (0..t).rev() {
        let mut below = vec![false; n];
        for (i, _) in reach.iter().enumerate().filter(|(_, &r)| r) {
            for &j in hist.parents(s + 1, i) {
                below[j] = true;
            }
        }
        cardinalities[s] = below.iter().filter(|&&b| b).count();
        reach = below;
    }
    Ok(SupportProfile { t, n, cardinalities })
}

/// `#A_{s,t}` for every `t = s..=T`, by propagating, for each particle, the
/// set of time-`s` particles it reaches. Costs `O(T N K N / 64)`.
pub fn support_series(hist: &BackwardIndexHistory, s: usize) -> Result<Vec<usize>> {
    if s > hist.horizon() {
        return Err(Error::invalid("s", format!("s={s} beyond logged horizon {}", hist.horizon())));
    }
    let n = hist.n();
    let words = n.div_ceil(64);
    let mut reach = vec![0u64; n * words];
    for i in 0..n {
        reach[i * words + i / 64] |= 1 << (i % 64);
    }
    let mut series = vec![n];
    let mut next = vec![0u64; n * words];
    for t in s + 1..=hist.horizon() {
        next.iter_mut().for_each(|w| *w = 0);
        for i in 0..n {
            for &j in hist.parents(t, i) {
                for w in 0..words {
                    next[i * words + w] |= reach[j * words + w];
                }
            }
        }
        std::mem::swap(&mut reach, &mut next);
        let mut union = vec![0u64; words];
        for i in 0..n {
            for w in 0..words {
                union[w] |= reach[i * words + w];
            }
        }
        series.push(union.iter().map(|w| w.count_ones() as usize).sum());
    }
    Ok(series)
}

/// Aggregate of accept-reject trial counts.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrialSummary {
    /// `(trials, count)`; with a threshold the final row counts fallbacks.
    pub histogram: Vec<(usize, u64)>,
    pub exceed_fraction: f64,
    pub mean_trials: f64,
    pub draws: u64,
}

pub fn trial_statistics<'a>(stats: impl IntoIterator<Item = &'a TrialStats>) -> Result<TrialSummary> {
    let mut iter = stats.into_iter();
    let mut total = iter
        .next()
        .cloned()
        .ok_or_else(|| Error::invalid("stats", "empty trial-statistics stream"))?;
    for s in iter {
        total.merge(s);
    }
    Ok(TrialSummary {
        histogram: total.histogram(),
        exceed_fraction: total.exceed_fraction(),
        mean_trials: total.mean_trials(),
        draws: total.draws,
    })
}

use std::time::{Duration, Instant};

use rayon::prelude::*;
use sha2::{Digest, Sha256};

use super::config::{Algorithm, ExperimentConfig, ModelSpec};
use super::report::{
    BackwardLogRecord, EstimateRow, ExperimentReport, ReplicateFailure, StepTrials, SupportRecord, TrialRecord,
};
use crate::error::{Error, Result};
use crate::filter::{init_cloud, pf_step, WeightedCloud};
use crate::genealogy::{support_profile, support_series};
use crate::hmm::{simulate, statistics, AdditiveFunctional, LinearGaussian, StateSpaceModel, StochasticVolatility};
use crate::oracle::exact_smoothed_statistics;
use crate::rng::RngKey;
use crate::smoother::{ffbsi_estimate, ffbsi_sample_paths, FfbsmState, ParisState, TrialStats};

// Stream labels below the master seed.
const DATA: u64 = 0;
const REPLICATE: u64 = 1;
// ... and below each replicate.
const FORWARD: u64 = 0;
const BACKWARD: u64 = 1;
const FFBSI: u64 = 2;

/// Functional for a statistic id understood by the runner.
pub fn statistic_functional(id: &str) -> Option<AdditiveFunctional<f64>> {
    match id {
        "sum_x" => Some(statistics::sum_x()),
        "sum_x2" => Some(statistics::sum_x2()),
        "sum_lag1" => Some(statistics::sum_lag1()),
        _ => None,
    }
}

/// SHA-256 of the config as canonical JSON, hex encoded.
pub fn config_hash(cfg: &ExperimentConfig) -> String {
    let mut canonical = cfg.clone();
    canonical.workers = 0;
    canonical.out_dir = None;
    let bytes = serde_json::to_vec(&canonical).expect("config serializes");
    Sha256::digest(&bytes).iter().map(|b| format!("{b:02x}")).collect()
}

/// Runs every replicate of `cfg` on one frozen observation sequence.
///
/// The observations come from the stream `(seed, DATA)`; replicate `r` draws
/// from `(seed, REPLICATE, r)` only, so the report does not depend on the
/// number of workers. All PaRIS precisions and FFBSm share the forward
/// particles of a replicate. A replicate that aborts (for example on a
/// degenerate cloud) is recorded in `failures` and left out of the rows.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    cfg.validate()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.workers)
        .build()
        .map_err(|e| Error::config("run.workers", e.to_string()))?;
    match cfg.model {
        ModelSpec::Lg(p) => {
            let model = LinearGaussian::new(p).map_err(|e| Error::config("model", e.to_string()))?;
            let ys = simulate(&model, cfg.horizon, RngKey::new(cfg.seed).child(DATA)).observations;
            let oracle = exact_smoothed_statistics(&p, &ys);
            let oracle = cfg
                .statistics
                .iter()
                .map(|s| match s.as_str() {
                    "sum_x" => oracle.sum_x,
                    "sum_x2" => oracle.sum_x2,
                    _ => oracle.sum_lag1,
                })
                .collect();
            pool.install(|| run_on_data(&model, cfg, ys, Some(oracle)))
        }
        ModelSpec::Sv(p) => {
            let model = StochasticVolatility::new(p).map_err(|e| Error::config("model", e.to_string()))?;
            let ys = simulate(&model, cfg.horizon, RngKey::new(cfg.seed).child(DATA)).observations;
            pool.install(|| run_on_data(&model, cfg, ys, None))
        }
    }
}

fn run_on_data<M>(model: &M, cfg: &ExperimentConfig, ys: Vec<f64>, oracle: Option<Vec<f64>>) -> Result<ExperimentReport>
where
    M: StateSpaceModel<State = f64, Obs = f64>,
{
    let functionals: Vec<AdditiveFunctional<f64>> = cfg
        .statistics
        .iter()
        .map(|id| statistic_functional(id).ok_or_else(|| Error::config("run.statistics", format!("unknown `{id}`"))))
        .collect::<Result<_>>()?;

    let outcomes: Vec<Result<ReplicateOutput>> = (0..cfg.replicates)
        .into_par_iter()
        .map(|r| run_replicate(model, cfg, &ys, &functionals, r))
        .collect();

    let mut report = ExperimentReport {
        config: cfg.clone(),
        config_hash: config_hash(cfg),
        statistic_ids: cfg.statistics.clone(),
        observations: ys,
        oracle,
        rows: Vec::new(),
        trials: Vec::new(),
        support: Vec::new(),
        failures: Vec::new(),
        backward_logs: Vec::new(),
    };
    for (r, outcome) in outcomes.into_iter().enumerate() {
        match outcome {
            Ok(out) => {
                report.rows.extend(out.rows);
                report.trials.extend(out.trials);
                report.support.extend(out.support);
                report.backward_logs.extend(out.backward_logs);
            }
            Err(e) => report.failures.push(ReplicateFailure {
                replicate: r,
                message: e.to_string(),
            }),
        }
    }
    Ok(report)
}

struct ReplicateOutput {
    rows: Vec<EstimateRow>,
    trials: Vec<TrialRecord>,
    support: Vec<SupportRecord>,
    backward_logs: Vec<BackwardLogRecord>,
}

struct ParisRun {
    k: usize,
    state: Option<ParisState<f64>>,
    elapsed: Duration,
    trials: Option<TrialStats>,
    per_step: Vec<StepTrials>,
}

fn run_replicate<M>(
    model: &M,
    cfg: &ExperimentConfig,
    ys: &[f64],
    functionals: &[AdditiveFunctional<f64>],
    r: usize,
) -> Result<ReplicateOutput>
where
    M: StateSpaceModel<State = f64, Obs = f64>,
{
    let rep = RngKey::new(cfg.seed).derive(&[REPLICATE, r as u64]);
    let fwd = rep.child(FORWARD);
    let dim = functionals.len();
    let horizon = cfg.horizon;
    let log_backward = cfg.support || r < cfg.backward_log_replicates;
    let wants = |a: Algorithm| cfg.algorithms.contains(&a);

    let start = Instant::now();
    let mut cloud = init_cloud(model, &ys[0], cfg.particles, fwd.child(0))?;
    let mut fwd_elapsed = start.elapsed();

    let mut paris: Vec<ParisRun> = if wants(Algorithm::Paris) {
        cfg.precision
            .iter()
            .map(|&k| {
                let state = ParisState::from_cloud(cloud.clone(), k, dim)?;
                Ok(ParisRun {
                    k,
                    state: Some(if log_backward { state.record_backward() } else { state }),
                    elapsed: Duration::ZERO,
                    trials: None,
                    per_step: Vec::new(),
                })
            })
            .collect::<Result<_>>()?
    } else {
        Vec::new()
    };
    let mut ffbsm = wants(Algorithm::FfbsmForward).then(|| (FfbsmState::from_cloud(cloud.clone(), dim), Duration::ZERO));
    let mut history: Option<Vec<WeightedCloud<f64>>> = wants(Algorithm::Ffbsi).then(|| vec![cloud.clone()]);

    let mut rows = Vec::new();
    let mut record = |t: usize, paris: &[ParisRun], ffbsm: &Option<(FfbsmState<f64>, Duration)>, fwd: Duration| {
        if t % cfg.record_every != 0 && t != horizon {
            return;
        }
        let mut push = |algorithm, k, estimates: Vec<f64>, elapsed: Duration| {
            for (id, estimate) in cfg.statistics.iter().zip(estimates) {
                rows.push(EstimateRow {
                    algorithm,
                    k,
                    replicate: r,
                    t,
                    statistic_id: id.clone(),
                    estimate,
                    seconds: (fwd + elapsed).as_secs_f64(),
                });
            }
        };
        for run in paris {
            let state = run.state.as_ref().expect("state present between steps");
            push(Algorithm::Paris, Some(run.k), state.estimates(functionals), run.elapsed);
        }
        if let Some((state, elapsed)) = ffbsm {
            push(Algorithm::FfbsmForward, None, state.estimates(functionals), *elapsed);
        }
    };
    record(0, &paris, &ffbsm, fwd_elapsed);

    for t in 1..=horizon {
        let start = Instant::now();
        let next = pf_step(model, &cloud, &ys[t], fwd.child(t as u64))?;
        fwd_elapsed += start.elapsed();

        for run in paris.iter_mut() {
            let key = rep.derive(&[BACKWARD, run.k as u64, t as u64]);
            let start = Instant::now();
            let state = run.state.take().expect("state present between steps");
            let (state, stats) = state.advance(model, functionals, next.clone(), cfg.sampler, key)?;
            run.elapsed += start.elapsed();
            run.state = Some(state);
            if let Some(s) = stats {
                run.per_step.push(StepTrials {
                    draws: s.draws,
                    proposals: s.proposals,
                    fallbacks: s.fallbacks,
                });
                run.trials.get_or_insert_with(|| TrialStats::new(s.threshold)).merge(&s);
            }
        }
        if let Some((state, elapsed)) = ffbsm.take() {
            let start = Instant::now();
            let state = state.advance(model, functionals, next.clone())?;
            ffbsm = Some((state, elapsed + start.elapsed()));
        }
        if let Some(h) = history.as_mut() {
            h.push(next.clone());
        }
        cloud = next;
        record(t, &paris, &ffbsm, fwd_elapsed);
    }

    if let Some(h) = history {
        let start = Instant::now();
        let paths = ffbsi_sample_paths(&h, model, cfg.ffbsi_paths, cfg.sampler, rep.child(FFBSI))?;
        let estimates = functionals
            .iter()
            .map(|f| ffbsi_estimate(&h, &paths, f).map(|(m, _)| m))
            .collect::<Result<Vec<f64>>>()?;
        let seconds = (fwd_elapsed + start.elapsed()).as_secs_f64();
        for (id, estimate) in cfg.statistics.iter().zip(estimates) {
            rows.push(EstimateRow {
                algorithm: Algorithm::Ffbsi,
                k: None,
                replicate: r,
                t: horizon,
                statistic_id: id.clone(),
                estimate,
                seconds,
            });
        }
    }

    let mut trials = Vec::new();
    let mut support = Vec::new();
    let mut backward_logs = Vec::new();
    for run in paris {
        if let Some(stats) = run.trials {
            trials.push(TrialRecord {
                k: run.k,
                replicate: r,
                stats,
                per_step: run.per_step,
            });
        }
        let state = run.state.expect("state present after loop");
        if let Some(hist) = state.into_backward_log() {
            if cfg.support {
                support.push(SupportRecord {
                    k: run.k,
                    replicate: r,
                    profile: support_profile(&hist, hist.horizon())?,
                    origin_series: support_series(&hist, 0)?,
                });
            }
            if r < cfg.backward_log_replicates {
                backward_logs.push(BackwardLogRecord {
                    k: run.k,
                    replicate: r,
                    history: hist,
                });
            }
        }
    }
    Ok(ReplicateOutput {
        rows,
        trials,
        support,
        backward_logs,
    })
}

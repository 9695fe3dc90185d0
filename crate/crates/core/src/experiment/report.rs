use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::config::{Algorithm, ExperimentConfig};
use super::growth::VarianceSeries;
use super::stats::{mean, sample_variance};
use crate::error::{Error, Result};
use crate::genealogy::{BackwardIndexHistory, SupportProfile};
use crate::smoother::TrialStats;

/// One estimate in the long-format output.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EstimateRow {
    pub algorithm: Algorithm,
    #[serde(rename = "K")]
    pub k: Option<usize>,
    pub replicate: usize,
    pub t: usize,
    pub statistic_id: String,
    pub estimate: f64,
    /// Wall-clock seconds spent by this algorithm up to `t`, forward filter included.
    pub seconds: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AggregateRow {
    pub algorithm: Algorithm,
    #[serde(rename = "K")]
    pub k: Option<usize>,
    pub t: usize,
    pub statistic_id: String,
    pub replicates: usize,
    pub mean: f64,
    pub variance: f64,
    pub mean_seconds: f64,
    /// `1 / (variance × mean_seconds)`
    pub efficiency: f64,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct StepTrials {
    pub draws: u64,
    pub proposals: u64,
    pub fallbacks: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub k: usize,
    pub replicate: usize,
    pub stats: TrialStats,
    #[serde(skip)]
    pub per_step: Vec<StepTrials>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SupportRecord {
    pub k: usize,
    pub replicate: usize,
    /// `#A_{s,T}` for `s = 0..=T`.
    pub profile: SupportProfile,
    /// `#A_{0,t}` for `t = 0..=T`.
    pub origin_series: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReplicateFailure {
    pub replicate: usize,
    pub message: String,
}

#[derive(Clone, Debug, PartialEq)]
pub struct BackwardLogRecord {
    pub k: usize,
    pub replicate: usize,
    pub history: BackwardIndexHistory,
}

/// Everything produced by one experiment run.
#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentReport {
    pub config: ExperimentConfig,
    pub config_hash: String,
    pub statistic_ids: Vec<String>,
    pub observations: Vec<f64>,
    /// Exact smoothed values at the horizon, per statistic (linear Gaussian model only).
    pub oracle: Option<Vec<f64>>,
    pub rows: Vec<EstimateRow>,
    pub trials: Vec<TrialRecord>,
    pub support: Vec<SupportRecord>,
    pub failures: Vec<ReplicateFailure>,
    pub backward_logs: Vec<BackwardLogRecord>,
}

/// Summary of the time-normalized estimates at the horizon.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FinalSummary {
    pub algorithm: Algorithm,
    #[serde(rename = "K")]
    pub k: Option<usize>,
    pub statistic_id: String,
    pub replicates: usize,
    pub mean: f64,
    pub std_dev: f64,
    pub oracle: Option<f64>,
    pub mean_seconds: f64,
}

#[derive(Serialize)]
struct ReportJson<'a> {
    config: &'a ExperimentConfig,
    config_hash: &'a str,
    seed: u64,
    statistic_ids: &'a [String],
    oracle: Option<&'a [f64]>,
    failures: &'a [ReplicateFailure],
    final_time_normalized: Vec<FinalSummary>,
    trials: &'a [TrialRecord],
    support: Vec<SupportJson>,
}

#[derive(Serialize)]
struct SupportJson {
    k: usize,
    replicate: usize,
    mean_fraction: f64,
    log_ratio: f64,
    origin_collapse_time: Option<usize>,
}

type SeriesKey = (Algorithm, Option<usize>, String);

impl ExperimentReport {
    pub fn seed(&self) -> u64 {
        self.config.seed
    }

    /// Estimates grouped by `(algorithm, K, statistic)` then by `t`, one value per
    /// successful replicate (in replicate order), with their seconds.
    fn grouped(&self) -> BTreeMap<SeriesKey, BTreeMap<usize, Vec<(f64, f64)>>> {
        group_rows(&self.rows)
    }

    pub fn aggregate(&self) -> Vec<AggregateRow> {
        aggregate_rows(&self.rows)
    }

    /// Replicate estimates at the horizon for one estimator.
    pub fn final_estimates(&self, algorithm: Algorithm, k: Option<usize>, statistic: &str) -> Vec<f64> {
        let mut rows: Vec<&EstimateRow> = self
            .rows
            .iter()
            .filter(|r| r.algorithm == algorithm && r.k == k && r.statistic_id == statistic && r.t == self.config.horizon)
            .collect();
        rows.sort_by_key(|r| r.replicate);
        rows.iter().map(|r| r.estimate).collect()
    }

    /// Mean wall-clock seconds of the full run for one estimator.
    pub fn mean_seconds(&self, algorithm: Algorithm, k: Option<usize>) -> f64 {
        let stat = &self.statistic_ids[0];
        let secs: Vec<f64> = self
            .rows
            .iter()
            .filter(|r| r.algorithm == algorithm && r.k == k && &r.statistic_id == stat && r.t == self.config.horizon)
            .map(|r| r.seconds)
            .collect();
        mean(&secs)
    }

    pub fn variance_series(&self, algorithm: Algorithm, statistic: &str) -> Vec<VarianceSeries> {
        variance_series_from_rows(&self.rows, algorithm, statistic)
    }

    pub fn final_summaries(&self) -> Vec<FinalSummary> {
        let horizon = self.config.horizon;
        self.grouped()
            .into_iter()
            .filter_map(|((algorithm, k, statistic_id), by_t)| {
                let vals = by_t.get(&horizon)?;
                let est: Vec<f64> = vals.iter().map(|(e, _)| e / horizon as f64).collect();
                let secs: Vec<f64> = vals.iter().map(|(_, s)| *s).collect();
                let oracle = self.oracle.as_ref().and_then(|o| {
                    let pos = self.statistic_ids.iter().position(|s| s == &statistic_id)?;
                    Some(o[pos] / horizon as f64)
                });
                Some(FinalSummary {
                    algorithm,
                    k,
                    replicates: est.len(),
                    mean: mean(&est),
                    std_dev: sample_variance(&est).sqrt(),
                    oracle,
                    mean_seconds: mean(&secs),
                    statistic_id,
                })
            })
            .collect()
    }

    /// Writes the report directory, replacing `dir` in one rename.
    pub fn write(&self, dir: &Path) -> Result<()> {
        let parent = dir.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
        fs::create_dir_all(parent)?;
        let name = dir.file_name().ok_or_else(|| Error::config("output.dir", "must name a directory"))?;
        let tmp = parent.join(format!(".{}.tmp-{}", name.to_string_lossy(), std::process::id()));
        if tmp.exists() {
            fs::remove_dir_all(&tmp)?;
        }
        fs::create_dir_all(&tmp)?;
        self.write_files(&tmp)?;
        if dir.exists() {
            fs::remove_dir_all(dir)?;
        }
        fs::rename(&tmp, dir)?;
        Ok(())
    }

    fn write_files(&self, dir: &Path) -> Result<()> {
        let json = ReportJson {
            config: &self.config,
            config_hash: &self.config_hash,
            seed: self.config.seed,
            statistic_ids: &self.statistic_ids,
            oracle: self.oracle.as_deref(),
            failures: &self.failures,
            final_time_normalized: self.final_summaries(),
            trials: &self.trials,
            support: self
                .support
                .iter()
                .map(|s| SupportJson {
                    k: s.k,
                    replicate: s.replicate,
                    mean_fraction: s.profile.mean_fraction(),
                    log_ratio: s.profile.log_ratio(),
                    origin_collapse_time: s.origin_series.iter().position(|&c| c == 1),
                })
                .collect(),
        };
        fs::write(dir.join("report.json"), serde_json::to_string_pretty(&json)? + "\n")?;

        let mut w = csv::Writer::from_path(dir.join("observations.csv"))?;
        w.write_record(["t", "y"])?;
        for (t, y) in self.observations.iter().enumerate() {
            w.write_record([t.to_string(), y.to_string()])?;
        }
        w.flush()?;

        write_rows(&dir.join("estimates.csv"), &self.rows)?;
        write_rows(&dir.join("aggregate.csv"), &self.aggregate())?;

        if !self.trials.is_empty() {
            let mut by_k: BTreeMap<usize, TrialStats> = BTreeMap::new();
            for rec in &self.trials {
                by_k.entry(rec.k)
                    .or_insert_with(|| TrialStats::new(rec.stats.threshold))
                    .merge(&rec.stats);
            }
            let mut w = csv::Writer::from_path(dir.join("trials.csv"))?;
            w.write_record(["K", "trials", "count"])?;
            for (k, stats) in &by_k {
                for (trials, count) in stats.histogram() {
                    w.write_record([k.to_string(), trials.to_string(), count.to_string()])?;
                }
            }
            w.flush()?;

            let mut w = csv::Writer::from_path(dir.join("trials_per_step.csv"))?;
            w.write_record(["K", "replicate", "t", "draws", "proposals", "fallbacks"])?;
            for rec in &self.trials {
                for (i, s) in rec.per_step.iter().enumerate() {
                    w.write_record([
                        rec.k.to_string(),
                        rec.replicate.to_string(),
                        (i + 1).to_string(),
                        s.draws.to_string(),
                        s.proposals.to_string(),
                        s.fallbacks.to_string(),
                    ])?;
                }
            }
            w.flush()?;
        }

        if !self.support.is_empty() {
            write_support_csv(&dir.join("support.csv"), &self.support)?;
        }

        if !self.backward_logs.is_empty() {
            let bdir = dir.join("backward");
            fs::create_dir_all(&bdir)?;
            for log in &self.backward_logs {
                write_backward_log(&bdir.join(backward_log_name(log.k, log.replicate)), &log.history)?;
            }
        }
        Ok(())
    }
}

fn write_rows<T: Serialize>(path: &Path, rows: &[T]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

fn group_rows(rows: &[EstimateRow]) -> BTreeMap<SeriesKey, BTreeMap<usize, Vec<(f64, f64)>>> {
    let mut sorted: Vec<&EstimateRow> = rows.iter().collect();
    sorted.sort_by_key(|r| r.replicate);
    let mut out: BTreeMap<SeriesKey, BTreeMap<usize, Vec<(f64, f64)>>> = BTreeMap::new();
    for r in sorted {
        out.entry((r.algorithm, r.k, r.statistic_id.clone()))
            .or_default()
            .entry(r.t)
            .or_default()
            .push((r.estimate, r.seconds));
    }
    out
}

/// Per-`(algorithm, K, t, statistic)` mean, variance and efficiency.
pub fn aggregate_rows(rows: &[EstimateRow]) -> Vec<AggregateRow> {
    let mut out = Vec::new();
    for ((algorithm, k, statistic_id), by_t) in group_rows(rows) {
        for (t, vals) in by_t {
            let est: Vec<f64> = vals.iter().map(|(e, _)| *e).collect();
            let secs: Vec<f64> = vals.iter().map(|(_, s)| *s).collect();
            let variance = sample_variance(&est);
            let mean_seconds = mean(&secs);
            out.push(AggregateRow {
                algorithm,
                k,
                t,
                statistic_id: statistic_id.clone(),
                replicates: est.len(),
                mean: mean(&est),
                variance,
                mean_seconds,
                efficiency: 1.0 / (variance * mean_seconds),
            });
        }
    }
    out
}

/// Across-replicate variance of `statistic` per `K` (0 for non-PaRIS rows).
pub fn variance_series_from_rows(rows: &[EstimateRow], algorithm: Algorithm, statistic: &str) -> Vec<VarianceSeries> {
    let mut out = Vec::new();
    for ((alg, k, stat), by_t) in group_rows(rows) {
        if alg != algorithm || stat != statistic {
            continue;
        }
        let mut t = Vec::new();
        let mut variance = Vec::new();
        let mut replicates = usize::MAX;
        for (tt, vals) in by_t {
            let est: Vec<f64> = vals.iter().map(|(e, _)| *e).collect();
            replicates = replicates.min(est.len());
            t.push(tt);
            variance.push(sample_variance(&est));
        }
        out.push(VarianceSeries {
            k: k.unwrap_or(0),
            replicates,
            t,
            variance,
        });
    }
    out
}

/// Reads `estimates.csv`, given either the file or the report directory.
pub fn read_estimates(path: &Path) -> Result<Vec<EstimateRow>> {
    let file = if path.is_dir() { path.join("estimates.csv") } else { path.to_path_buf() };
    let mut r = csv::Reader::from_path(&file)?;
    let rows = r.deserialize().collect::<std::result::Result<Vec<EstimateRow>, _>>()?;
    Ok(rows)
}

pub fn backward_log_name(k: usize, replicate: usize) -> String {
    format!("paris_K{k}_r{replicate}.csv")
}

/// `(K, replicate)` encoded in a backward log file name.
pub fn parse_backward_log_name(name: &str) -> Option<(usize, usize)> {
    let rest = name.strip_prefix("paris_K")?.strip_suffix(".csv")?;
    let (k, r) = rest.split_once("_r")?;
    Some((k.parse().ok()?, r.parse().ok()?))
}

pub fn write_backward_log(path: &Path, history: &BackwardIndexHistory) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["t", "i", "k", "j"])?;
    for (t, i, k, j) in history.rows() {
        w.write_record([t.to_string(), i.to_string(), k.to_string(), j.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_backward_log(path: &Path) -> Result<BackwardIndexHistory> {
    let mut r = csv::Reader::from_path(path)?;
    let mut rows = Vec::new();
    for rec in r.deserialize() {
        let row: (usize, usize, usize, usize) = rec?;
        rows.push(row);
    }
    let n = rows.iter().map(|r| r.1).max().map_or(0, |m| m + 1);
    let k = rows.iter().map(|r| r.2).max().map_or(0, |m| m + 1);
    let horizon = rows.iter().map(|r| r.0).max().unwrap_or(0);
    let mut steps = vec![vec![usize::MAX; n * k]; horizon];
    for (t, i, kk, j) in rows {
        if t == 0 {
            return Err(Error::Report(format!("{}: backward rows start at t=1", path.display())));
        }
        steps[t - 1][i * k + kk] = j;
    }
    if steps.iter().any(|s| s.contains(&usize::MAX)) {
        return Err(Error::Report(format!("{}: incomplete backward index matrix", path.display())));
    }
    BackwardIndexHistory::from_steps(n, k, steps)
}

/// Backward logs under `report_dir/backward`, with their `(K, replicate)`.
pub fn read_backward_logs(report_dir: &Path) -> Result<Vec<BackwardLogRecord>> {
    let dir = report_dir.join("backward");
    let mut paths: Vec<PathBuf> = fs::read_dir(&dir)
        .map_err(|e| Error::Report(format!("{}: {e}", dir.display())))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .collect();
    paths.sort();
    let mut out = Vec::new();
    for p in paths {
        let Some((k, replicate)) = p.file_name().and_then(|n| parse_backward_log_name(&n.to_string_lossy())) else {
            continue;
        };
        out.push(BackwardLogRecord {
            k,
            replicate,
            history: read_backward_log(&p)?,
        });
    }
    Ok(out)
}

/// Long-format support table: `K, replicate, t, s, cardinality, fraction`.
pub fn write_support_csv(path: &Path, records: &[SupportRecord]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["K", "replicate", "t", "s", "cardinality", "fraction"])?;
    for rec in records {
        let p = &rec.profile;
        for (s, (c, f)) in p.cardinalities.iter().zip(p.fractions()).enumerate() {
            w.write_record([
                rec.k.to_string(),
                rec.replicate.to_string(),
                p.t.to_string(),
                s.to_string(),
                c.to_string(),
                f.to_string(),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

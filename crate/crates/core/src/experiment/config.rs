use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hmm::{LgParams, SvParams};
use crate::smoother::{default_threshold, BackwardSampler};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum ModelSpec {
    Lg(LgParams),
    Sv(SvParams),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Algorithm {
    Paris,
    FfbsmForward,
    Ffbsi,
}

impl Algorithm {
    pub fn id(&self) -> &'static str {
        match self {
            Algorithm::Paris => "paris",
            Algorithm::FfbsmForward => "ffbsm_forward",
            Algorithm::Ffbsi => "ffbsi",
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

impl FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "paris" => Ok(Algorithm::Paris),
            "ffbsm_forward" | "ffbsm" => Ok(Algorithm::FfbsmForward),
            "ffbsi" => Ok(Algorithm::Ffbsi),
            other => Err(Error::config("run.algorithms", format!("unknown algorithm `{other}`"))),
        }
    }
}

/// Statistics understood by the runner, all on scalar states.
pub const STATISTIC_IDS: [&str; 3] = ["sum_x", "sum_x2", "sum_lag1"];

/// Validated experiment description.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub model: ModelSpec,
    pub seed: u64,
    pub particles: usize,
    pub precision: Vec<usize>,
    pub horizon: usize,
    pub replicates: usize,
    pub algorithms: Vec<Algorithm>,
    pub sampler: BackwardSampler,
    pub statistics: Vec<String>,
    /// Estimate rows are kept for `t % record_every == 0` and at the horizon.
    pub record_every: usize,
    /// Compute support profiles from the backward indices of every replicate.
    pub support: bool,
    /// Number of leading replicates whose backward index logs are written out.
    pub backward_log_replicates: usize,
    pub ffbsi_paths: usize,
    /// Worker threads; 0 uses every available core.
    pub workers: usize,
    pub out_dir: Option<PathBuf>,
}

// On-disk layout: `[model]`, `[run]` and `[output]` sections of flat keys.
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    model: RawModel,
    run: RawRun,
    #[serde(default)]
    output: RawOutput,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawModel {
    kind: String,
    a: Option<f64>,
    b: Option<f64>,
    sigma_eps: Option<f64>,
    sigma_obs: Option<f64>,
    init_mean: Option<f64>,
    init_var: Option<f64>,
    phi: Option<f64>,
    sigma: Option<f64>,
    beta: Option<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
enum RawThreshold {
    Count(i64),
    Word(String),
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawRun {
    seed: Option<u64>,
    particles: i64,
    precision: Option<Vec<i64>>,
    horizon: i64,
    replicates: i64,
    algorithms: Option<Vec<String>>,
    sampler: Option<String>,
    threshold: Option<RawThreshold>,
    statistics: Option<Vec<String>>,
    record_every: Option<i64>,
    support: Option<bool>,
    backward_log_replicates: Option<i64>,
    ffbsi_paths: Option<i64>,
    workers: Option<i64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawOutput {
    dir: Option<PathBuf>,
}

/// `section.key` for the line holding byte offset `pos`.
fn key_at(text: &str, pos: usize) -> String {
    let start = text[..pos].rfind('\n').map_or(0, |i| i + 1);
    let end = text[pos..].find('\n').map_or(text.len(), |i| pos + i);
    let key = text[start..end].split('=').next().unwrap_or("").trim();
    let section = text[..start]
        .lines()
        .rev()
        .map(str::trim)
        .find(|l| l.starts_with('['))
        .map(|l| l.trim_matches(|c| c == '[' || c == ']'));
    match section {
        Some(sec) if !key.starts_with('[') => format!("{sec}.{key}"),
        _ => key.to_string(),
    }
}

fn positive(field: &str, v: i64) -> Result<usize> {
    if v >= 1 {
        Ok(v as usize)
    } else {
        Err(Error::config(field, format!("must be >= 1, got {v}")))
    }
}

fn nonneg(field: &str, v: i64) -> Result<usize> {
    if v >= 0 {
        Ok(v as usize)
    } else {
        Err(Error::config(field, format!("must be >= 0, got {v}")))
    }
}

fn required(field: &str, v: Option<f64>) -> Result<f64> {
    v.ok_or_else(|| Error::config(field, "missing"))
}

impl RawModel {
    fn into_spec(self) -> Result<ModelSpec> {
        match self.kind.as_str() {
            "lg" => {
                for (name, v) in [("model.phi", self.phi), ("model.sigma", self.sigma), ("model.beta", self.beta)] {
                    if v.is_some() {
                        return Err(Error::config(name, "not a parameter of the lg model"));
                    }
                }
                let a = required("model.a", self.a)?;
                let b = required("model.b", self.b)?;
                let se = required("model.sigma_eps", self.sigma_eps)?;
                let so = required("model.sigma_obs", self.sigma_obs)?;
                let mut p = match (self.init_mean, self.init_var) {
                    (Some(m), Some(v)) => LgParams { a, b, sigma_eps: se, sigma_obs: so, init_mean: m, init_var: v },
                    (None, None) => LgParams::stationary(a, b, se, so)
                        .map_err(|e| Error::config("model.a", e.to_string()))?,
                    _ => return Err(Error::config("model.init_var", "give both init_mean and init_var or neither")),
                };
                if !(p.sigma_eps > 0.0) {
                    return Err(Error::config("model.sigma_eps", "must be > 0"));
                }
                p.validate().map_err(|e| Error::config("model", e.to_string()))?;
                p.init_var = p.init_var.max(0.0);
                Ok(ModelSpec::Lg(p))
            }
            "sv" => {
                for (name, v) in [
                    ("model.a", self.a),
                    ("model.b", self.b),
                    ("model.sigma_eps", self.sigma_eps),
                    ("model.sigma_obs", self.sigma_obs),
                    ("model.init_mean", self.init_mean),
                    ("model.init_var", self.init_var),
                ] {
                    if v.is_some() {
                        return Err(Error::config(name, "not a parameter of the sv model"));
                    }
                }
                let p = SvParams::new(
                    required("model.phi", self.phi)?,
                    required("model.sigma", self.sigma)?,
                    required("model.beta", self.beta)?,
                );
                crate::hmm::StochasticVolatility::new(p).map_err(|e| Error::config("model", e.to_string()))?;
                Ok(ModelSpec::Sv(p))
            }
            other => Err(Error::config("model.kind", format!("expected `lg` or `sv`, got `{other}`"))),
        }
    }
}

impl ExperimentConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let raw: RawConfig = toml::from_str(text)
            .map_err(|e| Error::config(e.span().map_or_else(|| "<file>".into(), |s| key_at(text, s.start)), e.message()))?;
        Self::from_raw(raw)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_toml_str(&std::fs::read_to_string(path)?)
    }

    fn from_raw(raw: RawConfig) -> Result<Self> {
        let model = raw.model.into_spec()?;
        let run = raw.run;
        let particles = positive("run.particles", run.particles)?;
        let precision = run
            .precision
            .unwrap_or_else(|| vec![2])
            .into_iter()
            .map(|k| positive("run.precision", k))
            .collect::<Result<Vec<_>>>()?;
        if precision.is_empty() {
            return Err(Error::config("run.precision", "need at least one K"));
        }
        let algorithms = run
            .algorithms
            .unwrap_or_else(|| vec!["paris".into()])
            .iter()
            .map(|a| a.parse())
            .collect::<Result<Vec<Algorithm>>>()?;
        if algorithms.is_empty() {
            return Err(Error::config("run.algorithms", "need at least one algorithm"));
        }
        let threshold = match run.threshold {
            None => Some(default_threshold(particles)),
            Some(RawThreshold::Count(m)) => Some(nonneg("run.threshold", m)?),
            Some(RawThreshold::Word(w)) => match w.as_str() {
                "sqrt" => Some(default_threshold(particles)),
                "none" => None,
                other => {
                    return Err(Error::config("run.threshold", format!("expected integer, `sqrt` or `none`, got `{other}`")))
                }
            },
        };
        let sampler = match run.sampler.as_deref().unwrap_or("ar") {
            "exact" => BackwardSampler::Exact,
            "ar" | "accept_reject" => BackwardSampler::AcceptReject { threshold },
            other => return Err(Error::config("run.sampler", format!("expected `exact` or `ar`, got `{other}`"))),
        };
        let statistics = run.statistics.unwrap_or_else(|| match model {
            ModelSpec::Lg(_) => STATISTIC_IDS.iter().map(|s| s.to_string()).collect(),
            ModelSpec::Sv(_) => vec!["sum_x2".into(), "sum_lag1".into()],
        });
        if statistics.is_empty() {
            return Err(Error::config("run.statistics", "need at least one statistic"));
        }
        if let Some(bad) = statistics.iter().find(|s| !STATISTIC_IDS.contains(&s.as_str())) {
            return Err(Error::config("run.statistics", format!("unknown statistic `{bad}`")));
        }
        let cfg = Self {
            model,
            seed: run.seed.unwrap_or(0),
            particles,
            precision,
            horizon: positive("run.horizon", run.horizon)?,
            replicates: positive("run.replicates", run.replicates)?,
            algorithms,
            sampler,
            statistics,
            record_every: positive("run.record_every", run.record_every.unwrap_or(1))?,
            support: run.support.unwrap_or(false),
            backward_log_replicates: nonneg("run.backward_log_replicates", run.backward_log_replicates.unwrap_or(0))?,
            ffbsi_paths: positive("run.ffbsi_paths", run.ffbsi_paths.unwrap_or(1000))?,
            workers: nonneg("run.workers", run.workers.unwrap_or(0))?,
            out_dir: raw.output.dir,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    /// Checks the invariants of a config built in code.
    pub fn validate(&self) -> Result<()> {
        for (field, v) in [
            ("run.particles", self.particles),
            ("run.horizon", self.horizon),
            ("run.replicates", self.replicates),
            ("run.record_every", self.record_every),
        ] {
            if v == 0 {
                return Err(Error::config(field, "must be >= 1"));
            }
        }
        if self.precision.is_empty() || self.precision.contains(&0) {
            return Err(Error::config("run.precision", "every K must be >= 1"));
        }
        if self.algorithms.is_empty() {
            return Err(Error::config("run.algorithms", "need at least one algorithm"));
        }
        if self.statistics.is_empty() || self.statistics.iter().any(|s| !STATISTIC_IDS.contains(&s.as_str())) {
            return Err(Error::config("run.statistics", "unknown or empty statistic list"));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const LG: &str = r#"
[model]
kind = "lg"
a = 0.7
b = 1.0
sigma_eps = 0.2
sigma_obs = 1.0

[run]
seed = 7
particles = 100
precision = [1, 2]
horizon = 50
replicates = 4
algorithms = ["paris", "ffbsm_forward"]
"#;

    #[test]
    fn parses_with_defaults() {
        let c = ExperimentConfig::from_toml_str(LG).unwrap();
        assert_eq!(c.precision, vec![1, 2]);
        assert_eq!(c.sampler, BackwardSampler::AcceptReject { threshold: Some(10) });
        assert_eq!(c.statistics, vec!["sum_x", "sum_x2", "sum_lag1"]);
        assert_eq!(c.algorithms, vec![Algorithm::Paris, Algorithm::FfbsmForward]);
        match c.model {
            ModelSpec::Lg(p) => assert!((p.init_var - 0.04 / 0.51).abs() < 1e-15),
            _ => panic!(),
        }
    }

    #[test]
    fn threshold_words() {
        let none = LG.replace("[run]", "[run]\nthreshold = \"none\"");
        let c = ExperimentConfig::from_toml_str(&none).unwrap();
        assert_eq!(c.sampler, BackwardSampler::AcceptReject { threshold: None });
        let fixed = LG.replace("[run]", "[run]\nthreshold = 14");
        let c = ExperimentConfig::from_toml_str(&fixed).unwrap();
        assert_eq!(c.sampler, BackwardSampler::AcceptReject { threshold: Some(14) });
    }

    fn field_of(text: &str) -> String {
        match ExperimentConfig::from_toml_str(text) {
            Err(Error::Config { field, .. }) => field,
            other => panic!("expected config error, got {other:?}"),
        }
    }

    #[test]
    fn errors_name_the_field() {
        assert_eq!(field_of(&LG.replace("particles = 100", "particles = 0")), "run.particles");
        assert_eq!(field_of(&LG.replace("replicates = 4", "replicates = -1")), "run.replicates");
        assert_eq!(field_of(&LG.replace("precision = [1, 2]", "precision = [0]")), "run.precision");
        assert_eq!(field_of(&LG.replace("a = 0.7", "a = 1.5")), "model.a");
        assert_eq!(field_of(&LG.replace("kind = \"lg\"", "kind = \"garch\"")), "model.kind");
        assert_eq!(field_of(&LG.replace("\"ffbsm_forward\"", "\"poor_man\"")), "run.algorithms");
        assert_eq!(field_of(&LG.replace("horizon = 50", "horizon = 50\nbogus = 1")), "run.bogus");
        assert_eq!(field_of(&LG.replace("particles = 100", "particles = \"many\"")), "run.particles");
    }

    #[test]
    fn sv_defaults() {
        let text = r#"
[model]
kind = "sv"
phi = 0.975
sigma = 0.16
beta = 0.63
[run]
particles = 250
horizon = 10
replicates = 1
"#;
        let c = ExperimentConfig::from_toml_str(text).unwrap();
        assert_eq!(c.statistics, vec!["sum_x2", "sum_lag1"]);
    }
}

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};
use paris_core::experiment::{
    compare_variance_growth, read_backward_logs, read_estimates, run_experiment, variance_series_from_rows,
    write_support_csv, Algorithm, ExperimentConfig, SupportRecord,
};
use paris_core::genealogy::{support_profile, support_series};

#[derive(Parser)]
#[command(name = "paris", version, about = "Replicated PaRIS smoothing experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiment described by a config file and write its report.
    Run {
        config: PathBuf,
        /// Override the master seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Worker threads (0 = all cores).
        #[arg(long)]
        workers: Option<usize>,
        /// Report directory; defaults to `[output] dir` or `reports/<config name>`.
        #[arg(long)]
        out_dir: Option<PathBuf>,
    },
    /// Variance growth diagnostics from a report's PaRIS estimates.
    Variance {
        report: PathBuf,
        /// Where to write variance_growth.csv (default: the report directory).
        #[arg(long)]
        out_dir: Option<PathBuf>,
    },
    /// Support profiles from a report's logged backward indices.
    Support {
        report: PathBuf,
        /// Where to write support.csv (default: the report directory).
        #[arg(long)]
        out_dir: Option<PathBuf>,
    },
}

/// Exit status when the report was written but some replicates aborted.
const PARTIAL_FAILURE: u8 = 2;

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Run {
            config,
            seed,
            workers,
            out_dir,
        } => run(&config, seed, workers, out_dir),
        Command::Variance { report, out_dir } => variance(&report, out_dir).map(|_| ExitCode::SUCCESS),
        Command::Support { report, out_dir } => support(&report, out_dir).map(|_| ExitCode::SUCCESS),
    };
    outcome.unwrap_or_else(|e| {
        report_error(&e);
        ExitCode::FAILURE
    })
}

fn report_error(e: &anyhow::Error) {
    let (kind, field) = match e.downcast_ref::<paris_core::Error>() {
        Some(paris_core::Error::Config { field, .. }) => ("config", Some(field.as_str())),
        Some(paris_core::Error::Io(_)) => ("io", None),
        Some(paris_core::Error::Csv(_) | paris_core::Error::Json(_) | paris_core::Error::Report(_)) => ("report", None),
        Some(_) => ("numeric", None),
        None => ("usage", None),
    };
    let mut line = format!("level=error kind={kind}");
    if let Some(f) = field {
        line.push_str(&format!(" field={f}"));
    }
    let chain: Vec<String> = e.chain().map(|c| c.to_string()).collect();
    line.push_str(&format!(" message={:?}", chain.join(": ")));
    eprintln!("{line}");
}

fn run(config: &Path, seed: Option<u64>, workers: Option<usize>, out_dir: Option<PathBuf>) -> Result<ExitCode> {
    let mut cfg = ExperimentConfig::load(config)?;
    if let Some(s) = seed {
        cfg.seed = s;
    }
    if let Some(w) = workers {
        cfg.workers = w;
    }
    let dir = out_dir.or_else(|| cfg.out_dir.clone()).unwrap_or_else(|| {
        let stem = config.file_stem().map_or("report".into(), |s| s.to_string_lossy().into_owned());
        PathBuf::from("reports").join(stem)
    });

    let report = run_experiment(&cfg)?;
    report.write(&dir).with_context(|| format!("writing report to {}", dir.display()))?;

    println!("report: {}", dir.display());
    println!("config_hash: {}", report.config_hash);
    for s in report.final_summaries() {
        let k = s.k.map_or("-".to_string(), |k| k.to_string());
        let oracle = s.oracle.map_or(String::new(), |o| format!(" oracle={o:.6}"));
        println!(
            "{} K={k} {}: mean={:.6} sd={:.6}{oracle} seconds={:.3}",
            s.algorithm, s.statistic_id, s.mean, s.std_dev, s.mean_seconds
        );
    }
    for f in &report.failures {
        eprintln!("level=warn kind=replicate replicate={} message={:?}", f.replicate, f.message);
    }
    Ok(if report.failures.is_empty() {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(PARTIAL_FAILURE)
    })
}

fn report_dir(path: &Path) -> PathBuf {
    if path.is_dir() {
        path.to_path_buf()
    } else {
        path.parent().map_or_else(|| PathBuf::from("."), Path::to_path_buf)
    }
}

fn variance(report: &Path, out_dir: Option<PathBuf>) -> Result<()> {
    let rows = read_estimates(report)?;
    let mut stats: Vec<String> = rows.iter().map(|r| r.statistic_id.clone()).collect();
    stats.sort();
    stats.dedup();
    let out = out_dir.unwrap_or_else(|| report_dir(report)).join("variance_growth.csv");
    let mut w = csv::Writer::from_path(&out)?;
    w.write_record(["statistic_id", "K", "t", "variance", "var_over_t", "var_over_t2", "ratio_k1_k2", "insufficient_replicates"])?;
    let mut any = false;
    for stat in &stats {
        let series = variance_series_from_rows(&rows, Algorithm::Paris, stat);
        if series.is_empty() {
            continue;
        }
        any = true;
        let d = compare_variance_growth(&series)?;
        if d.insufficient_replicates {
            eprintln!("level=warn kind=variance statistic={stat} message=\"fewer than 20 replicates; variance curves are unreliable\"");
        }
        for g in &d.per_k {
            for (i, &t) in g.t.iter().enumerate() {
                let ratio = d
                    .ratio_k1_k2
                    .as_ref()
                    .and_then(|r| r.t.iter().position(|&u| u == t).map(|p| r.ratio[p].to_string()))
                    .unwrap_or_default();
                w.write_record([
                    stat.clone(),
                    g.k.to_string(),
                    t.to_string(),
                    (g.var_over_t[i] * t as f64).to_string(),
                    g.var_over_t[i].to_string(),
                    g.var_over_t2[i].to_string(),
                    ratio,
                    d.insufficient_replicates.to_string(),
                ])?;
            }
            println!(
                "{stat} K={}: var/t slope={:.4e} r2={:.3}",
                g.k, g.var_over_t_fit.slope, g.var_over_t_fit.r_squared
            );
        }
        if let Some(r) = &d.ratio_k1_k2 {
            println!("{stat} var(K=1)/var(K=2): slope={:.4e} r2={:.3}", r.fit.slope, r.fit.r_squared);
        }
    }
    w.flush()?;
    if !any {
        bail!("no PaRIS estimates in {}", report.display());
    }
    println!("wrote {}", out.display());
    Ok(())
}

fn support(report: &Path, out_dir: Option<PathBuf>) -> Result<()> {
    let dir = report_dir(report);
    let logs = read_backward_logs(&dir)?;
    if logs.is_empty() {
        bail!(
            "no backward index logs under {}; rerun with backward_log_replicates > 0",
            dir.join("backward").display()
        );
    }
    let mut records = Vec::with_capacity(logs.len());
    for log in logs {
        let profile = support_profile(&log.history, log.history.horizon())?;
        let origin_series = support_series(&log.history, 0)?;
        println!(
            "K={} replicate={}: mean slice support={:.3} origin collapse at t={}",
            log.k,
            log.replicate,
            profile.mean_fraction(),
            origin_series
                .iter()
                .position(|&c| c == 1)
                .map_or("never".to_string(), |t| t.to_string())
        );
        records.push(SupportRecord {
            k: log.k,
            replicate: log.replicate,
            profile,
            origin_series,
        });
    }
    let out = out_dir.unwrap_or(dir).join("support.csv");
    write_support_csv(&out, &records)?;
    println!("wrote {}", out.display());
    Ok(())
}

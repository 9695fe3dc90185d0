use paris_core::experiment::{
    read_backward_logs, read_estimates, run_experiment, Algorithm, ExperimentConfig,
};
use paris_core::Error;

fn config(run: &str) -> ExperimentConfig {
    let text = format!(
        "[model]\nkind = \"lg\"\na = 0.7\nb = 1.0\nsigma_eps = 0.2\nsigma_obs = 1.0\n\n[run]\n{run}\n"
    );
    ExperimentConfig::from_toml_str(&text).unwrap()
}

const SMALL: &str = "seed = 3\nparticles = 40\nprecision = [1, 2]\nhorizon = 30\nreplicates = 4\nalgorithms = [\"paris\", \"ffbsm_forward\", \"ffbsi\"]\nrecord_every = 10\nffbsi_paths = 50\nbackward_log_replicates = 1";

fn without_seconds(rows: &[paris_core::experiment::EstimateRow]) -> Vec<(String, Option<usize>, usize, usize, String, u64)> {
    rows.iter()
        .map(|r| (r.algorithm.to_string(), r.k, r.replicate, r.t, r.statistic_id.clone(), r.estimate.to_bits()))
        .collect()
}

#[test]
fn rerun_is_bit_identical_and_worker_independent() {
    let mut a = config(SMALL);
    a.workers = 1;
    let mut b = a.clone();
    b.workers = 3;
    let ra = run_experiment(&a).unwrap();
    let rb = run_experiment(&b).unwrap();
    assert!(ra.failures.is_empty());
    assert_eq!(without_seconds(&ra.rows), without_seconds(&rb.rows));
    assert_eq!(ra.config_hash, rb.config_hash);
}

#[test]
fn observations_are_frozen_across_algorithm_choices() {
    let a = run_experiment(&config(SMALL)).unwrap();
    let b = run_experiment(&config(&SMALL.replace("[1, 2]", "[5]").replace(", \"ffbsi\"", ""))).unwrap();
    let bits = |v: &[f64]| v.iter().map(|x| x.to_bits()).collect::<Vec<_>>();
    assert_eq!(bits(&a.observations), bits(&b.observations));
    assert_eq!(a.observations.len(), 31);
}

#[test]
fn replicates_differ_and_shared_forward_pass_is_consistent() {
    let r = run_experiment(&config(SMALL)).unwrap();
    let k2 = r.final_estimates(Algorithm::Paris, Some(2), "sum_x");
    assert_eq!(k2.len(), 4);
    assert!(k2.windows(2).all(|w| w[0] != w[1]));
    // At t = 0 every estimator reduces to the same filter average.
    let at0: Vec<f64> = r
        .rows
        .iter()
        .filter(|row| row.t == 0 && row.replicate == 0 && row.statistic_id == "sum_x")
        .map(|row| row.estimate)
        .collect();
    assert_eq!(at0.len(), 3);
    assert!(at0.iter().all(|v| (v - at0[0]).abs() < 1e-12));
}

#[test]
fn report_round_trips_through_disk() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = config(SMALL);
    cfg.support = true;
    let report = run_experiment(&cfg).unwrap();
    let out = dir.path().join("report");
    report.write(&out).unwrap();
    for f in ["report.json", "estimates.csv", "aggregate.csv", "observations.csv", "trials.csv", "support.csv"] {
        assert!(out.join(f).is_file(), "{f} missing");
    }
    let rows = read_estimates(&out).unwrap();
    assert_eq!(without_seconds(&rows), without_seconds(&report.rows));
    let logs = read_backward_logs(&out).unwrap();
    assert_eq!(logs.len(), 2);
    let orig = report.backward_logs.iter().find(|l| l.k == 2).unwrap();
    let back = logs.iter().find(|l| l.k == 2).unwrap();
    assert_eq!(orig.history, back.history);

    let text = std::fs::read_to_string(out.join("aggregate.csv")).unwrap();
    let header = text.lines().next().unwrap();
    assert!(header.contains("efficiency"));
    assert!(!text.contains('\r'));
}

#[test]
fn invalid_config_names_the_field() {
    let text = "[model]\nkind = \"lg\"\na = 0.7\nb = 1.0\nsigma_eps = 0.2\nsigma_obs = 1.0\n\n[run]\nparticles = 0\nhorizon = 5\nreplicates = 2\n";
    match ExperimentConfig::from_toml_str(text) {
        Err(Error::Config { field, .. }) => assert_eq!(field, "run.particles"),
        other => panic!("unexpected {other:?}"),
    }
    let text = text.replace("particles = 0", "particles = 10").replace("a = 0.7", "a = 1.5");
    match ExperimentConfig::from_toml_str(&text) {
        Err(Error::Config { field, .. }) => assert!(field.starts_with("model"), "{field}"),
        other => panic!("unexpected {other:?}"),
    }
}

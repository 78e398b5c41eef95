use std::fs;
use std::path::Path;
use std::process::Command;

use trotter_bias_cli::{execute, Experiment, ExperimentError, ModelSpec, OneOrMany, RunConfig};

fn config(out: &Path) -> RunConfig {
    RunConfig {
        trotter_m: OneOrMany::Many(vec![2, 3]),
        tau: OneOrMany::Many(vec![1.0, 2.0]),
        tau_sd_reference: 5.0,
        output_dir: out.to_path_buf(),
        ..RunConfig::default()
    }
}

fn binary() -> Command {
    Command::new(env!("CARGO_BIN_EXE_trotter-bias"))
}

#[test]
fn repeated_runs_are_byte_identical() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    for experiment in [Experiment::Heatmap, Experiment::Rules, Experiment::Kinks, Experiment::Timeseries] {
        let cfg = |dir: &Path| {
            let mut c = config(dir);
            if matches!(experiment, Experiment::Kinks | Experiment::Timeseries) {
                c.tau = OneOrMany::One(2.0);
            }
            if experiment == Experiment::Timeseries {
                c.trotter_m = OneOrMany::One(3);
            }
            c
        };
        let ra = execute(experiment, cfg(a.path())).unwrap();
        let rb = execute(experiment, cfg(b.path())).unwrap();
        for (pa, pb) in ra.outputs.iter().zip(&rb.outputs) {
            let (ta, tb) = (fs::read_to_string(pa).unwrap(), fs::read_to_string(pb).unwrap());
            assert!(ta.starts_with(&format!("# trotter-bias {} config=", experiment.name())));
            // the provenance line names the output directory, so compare the tables
            assert_eq!(ta.lines().skip(1).collect::<Vec<_>>(), tb.lines().skip(1).collect::<Vec<_>>());
        }
    }
    // rerun in place: the cached reference must reproduce the file exactly
    let first = fs::read(a.path().join("heatmap.csv")).unwrap();
    execute(Experiment::Heatmap, config(a.path())).unwrap();
    assert_eq!(first, fs::read(a.path().join("heatmap.csv")).unwrap());
}

#[test]
fn thread_count_does_not_change_output() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    for (dir, threads) in [(&a, "1"), (&b, "4")] {
        let status = binary()
            .args(["rules", "--m", "2,3", "--tau", "1,2", "--tau-sd", "5", "--threads", threads, "--out"])
            .arg(dir.path())
            .status()
            .unwrap();
        assert!(status.success());
    }
    let body = |d: &tempfile::TempDir| {
        let text = fs::read_to_string(d.path().join("rules.csv")).unwrap();
        text.lines().skip(1).map(String::from).collect::<Vec<_>>()
    };
    assert_eq!(body(&a), body(&b));
    assert!(a.path().join("rules-argmin.csv").exists());
    assert!(a.path().join("rules.meta.json").exists());
}

#[test]
fn dt_bound_violation_aborts_before_any_output() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = config(dir.path());
    cfg.trotter_m = OneOrMany::Many(vec![2, 11]);
    assert!(matches!(execute(Experiment::Heatmap, cfg), Err(ExperimentError::Invalid(_))));
    assert!(!dir.path().join("heatmap.csv").exists());

    let out =
        binary().args(["heatmap", "--m", "4", "--tau", "1", "--dt", "0.2", "--out"]).arg(dir.path()).output().unwrap();
    assert!(!out.status.success());
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("dt"), "stderr: {stderr}");
    assert!(!dir.path().join("heatmap.csv").exists());
}

#[test]
fn loads_problem_files() {
    let dir = tempfile::tempdir().unwrap();
    let problem = dir.path().join("chain.json");
    // the N = 2 toy chain written out explicitly, 1-based
    fs::write(&problem, r#"{"n_spins": 2, "couplings": [[1, 2, 1.0]], "fields": [[1, 1.0], [2, -1.0]]}"#).unwrap();
    let mut from_file = config(&dir.path().join("file"));
    from_file.model = ModelSpec::File(problem.clone());
    let from_toy = config(&dir.path().join("toy"));
    execute(Experiment::Heatmap, from_file).unwrap();
    execute(Experiment::Heatmap, from_toy).unwrap();
    let body = |sub: &str| {
        let text = fs::read_to_string(dir.path().join(sub).join("heatmap.csv")).unwrap();
        text.lines().skip(1).map(String::from).collect::<Vec<_>>()
    };
    assert_eq!(body("file"), body("toy"));

    fs::write(&problem, r#"{"n_spins": 2, "couplings": [[0, 1, -1.0]], "fields": []}"#).unwrap();
    let mut bad = config(dir.path());
    bad.model = ModelSpec::File(problem);
    assert!(execute(Experiment::Heatmap, bad).is_err());
}

#[test]
fn config_file_and_flags_combine() {
    let dir = tempfile::tempdir().unwrap();
    let cfg_path = dir.path().join("run.json");
    fs::write(&cfg_path, r#"{"trotter_m": 2, "tau": 1, "s_checkpoints": [0.5, 1.0]}"#).unwrap();
    let status = binary()
        .args(["equilibrium", "--m", "2,3", "--config"])
        .arg(&cfg_path)
        .arg("--out")
        .arg(dir.path())
        .status()
        .unwrap();
    assert!(status.success());
    let text = fs::read_to_string(dir.path().join("equilibrium.csv")).unwrap();
    assert_eq!(text.lines().nth(1), Some("s,m,source,expected_kinks_per_site,expected_kinks_per_spin"));
    assert_eq!(text.lines().count(), 2 + 4);
    let meta: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("equilibrium.meta.json")).unwrap()).unwrap();
    assert!(meta["wall_clock_seconds"].as_f64().unwrap() >= 0.0);
}

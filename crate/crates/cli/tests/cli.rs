use rgibbs::experiments::{ScenarioConfig, SCENARIOS};
use rgibbs_cli::config::{self, ConfigError, RunConfig};
use rgibbs_cli::output::RunManifest;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};
use toml::{Table, Value};

fn fixtures() -> Vec<PathBuf> {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures");
    let mut v: Vec<PathBuf> = std::fs::read_dir(dir).unwrap().map(|e| e.unwrap().path()).collect();
    v.sort();
    v
}

fn rgibbs(args: &[&str], env: &[(&str, &str)]) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_rgibbs"));
    cmd.args(args).env_remove(rgibbs_cli::ENV_THREADS).env_remove(rgibbs_cli::ENV_OUTPUT_DIR);
    for (k, v) in env {
        cmd.env(k, v);
    }
    cmd.output().unwrap()
}

fn write_config(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

/// Every key written in the source appears in the normalized form with the same value.
fn assert_contains(normalized: &Table, source: &Table, path: &str) {
    for (k, v) in source {
        let got = normalized.get(k).unwrap_or_else(|| panic!("{path}: key `{k}` dropped"));
        match (v, got) {
            (Value::Table(s), Value::Table(n)) => assert_contains(n, s, path),
            (Value::Integer(i), Value::Float(f)) => assert_eq!(*i as f64, *f, "{path}: {k}"),
            (Value::Array(a), Value::Array(b)) => {
                assert_eq!(a.len(), b.len(), "{path}: {k}");
                for (x, y) in a.iter().zip(b) {
                    match (x, y) {
                        (Value::Integer(i), Value::Float(f)) => assert_eq!(*i as f64, *f, "{path}: {k}"),
                        _ => assert_eq!(x, y, "{path}: {k}"),
                    }
                }
            }
            _ => assert_eq!(v, got, "{path}: {k}"),
        }
    }
}

#[test]
fn twenty_fixtures_round_trip() {
    let files = fixtures();
    assert_eq!(files.len(), 20);
    for path in files {
        let text = std::fs::read_to_string(&path).unwrap();
        let cfg = config::parse_str(&text).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
        let normalized = cfg.to_toml();
        let again = config::parse_str(&normalized).unwrap();
        assert_eq!(again, cfg, "{}", path.display());
        assert_eq!(again.to_toml(), normalized, "{}: normal form is not a fixed point", path.display());
        let source: Table = text.parse().unwrap();
        let norm: Table = normalized.parse().unwrap();
        assert_contains(&norm, &source, &path.display().to_string());
    }
}

#[test]
fn unknown_key_is_named() {
    let err = config::parse_str("scenario = \"tilt\"\n[tilt]\npotental = \"quadratic\"\n").unwrap_err();
    let ConfigError::Validation(list) = err else { panic!("expected a validation error") };
    assert!(list.iter().any(|e| e.contains("potental")), "{list:?}");
}

#[test]
fn validate_reports_all_problems_and_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "bad.toml", "scenario = \"ward\"\nthreads = 0\n[ward]\npotental = 1\nsweeps = -5\n");
    let out = rgibbs(&["validate", cfg.to_str().unwrap()], &[]);
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8_lossy(&out.stderr);
    for needle in ["threads", "potental", "sweeps"] {
        assert!(err.contains(needle), "missing `{needle}` in {err}");
    }
}

#[test]
fn semantic_errors_are_reported() {
    let err = config::parse_str("scenario = \"tightness\"\n[tightness]\ntilt = [0.5, 0.0]\n").unwrap_err();
    assert!(err.to_string().contains("tilt"), "{err}");
}

#[test]
fn validate_accepts_every_fixture() {
    for path in fixtures() {
        let out = rgibbs(&["validate", path.to_str().unwrap()], &[]);
        assert_eq!(out.status.code(), Some(0), "{}", path.display());
    }
}

#[test]
fn list_names_every_scenario_with_its_schema() {
    for args in [&["list"][..], &["--list"][..]] {
        let out = rgibbs(args, &[]);
        assert_eq!(out.status.code(), Some(0));
        let text = stdout(&out);
        for id in SCENARIOS {
            assert!(text.contains(&format!("{id} [")), "missing {id}");
            for p in config::schema(id).unwrap() {
                assert!(text.contains(&p.key), "missing {id}.{}", p.key);
            }
        }
    }
}

#[test]
fn template_output_is_a_valid_config() {
    for id in SCENARIOS {
        let out = rgibbs(&["template", id], &[]);
        assert_eq!(out.status.code(), Some(0));
        let cfg = config::parse_str(&stdout(&out)).unwrap();
        assert_eq!(cfg.scenario, ScenarioConfig::default_for(id).unwrap());
    }
}

const SMALL_SLLN: &str = "scenario = \"slln\"\nseed = 5\n[slln]\nns = [3, 5]\nseeds = 6\n";

#[test]
fn slln_run_exits_zero_with_a_row_per_seed_and_size() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "slln.toml", SMALL_SLLN);
    let out_dir = dir.path().join("out");
    let out = rgibbs(&["run", cfg.to_str().unwrap(), "--output-dir", out_dir.to_str().unwrap()], &[]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let mut rdr = csv::Reader::from_path(out_dir.join("slln.csv")).unwrap();
    assert_eq!(rdr.headers().unwrap().iter().collect::<Vec<_>>(), rgibbs_cli::output::CSV_COLUMNS);
    let mut pairs = std::collections::BTreeSet::new();
    for row in rdr.records() {
        let row = row.unwrap();
        if &row[4] == "normalized_centered_quad_form" {
            pairs.insert((row[2].to_string(), row[3].to_string()));
        }
    }
    assert_eq!(pairs.len(), 2 * 6);
    let manifest: RunManifest = serde_json::from_slice(&std::fs::read(out_dir.join("slln.manifest.json")).unwrap()).unwrap();
    assert!(manifest.passed);
    assert_eq!(manifest.outputs.len(), 2);
    for o in &manifest.outputs {
        let bytes = std::fs::read(out_dir.join(&o.file)).unwrap();
        assert_eq!(rgibbs_cli::output::sha256_hex(&bytes), o.sha256);
    }
    // nothing is written outside the output directory
    let mut names: Vec<String> = std::fs::read_dir(&out_dir).unwrap().map(|e| e.unwrap().file_name().into_string().unwrap()).collect();
    names.sort();
    assert_eq!(names, ["slln.csv", "slln.jsonl", "slln.manifest.json"]);
}

#[test]
fn impossible_tolerance_exits_two_and_names_the_check() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "strict.toml", &format!("{SMALL_SLLN}decay_factor = 0.0\n"));
    let out = rgibbs(&["run", cfg.to_str().unwrap()], &[("RGIBBS_OUTPUT_DIR", dir.path().join("o").to_str().unwrap())]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stdout(&out).contains("FAIL mean_abs_decay"));
    let report = std::fs::read_to_string(dir.path().join("o/slln.jsonl")).unwrap();
    let summary: serde_json::Value = serde_json::from_str(report.lines().last().unwrap()).unwrap();
    assert_eq!(summary["failed"], serde_json::json!(["mean_abs_decay"]));
}

#[test]
fn execution_errors_exit_one() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "bad.toml", "scenario = \"deloc\"\n[deloc]\nmethod = \"magic\"\n");
    let out = rgibbs(&["run", cfg.to_str().unwrap(), "--output-dir", dir.path().to_str().unwrap()], &[]);
    assert_eq!(out.status.code(), Some(1));
    let missing = rgibbs(&["run", "/nonexistent/config.toml"], &[]);
    assert_eq!(missing.status.code(), Some(1));
}

#[test]
fn environment_overrides_and_precedence() {
    let dir = tempfile::tempdir().unwrap();
    let cfg_dir = dir.path().join("from_config");
    let cfg = write_config(
        dir.path(),
        "c.toml",
        &format!("scenario = \"free_energy_bound\"\noutput_dir = \"{}\"\nthreads = 3\n[free_energy_bound]\ninstances = 4\n", cfg_dir.display()),
    );
    let env_dir = dir.path().join("from_env");
    let out = rgibbs(&["run", cfg.to_str().unwrap()], &[("RGIBBS_OUTPUT_DIR", env_dir.to_str().unwrap()), ("RGIBBS_THREADS", "2")]);
    assert_eq!(out.status.code(), Some(0));
    let m: RunManifest = serde_json::from_slice(&std::fs::read(env_dir.join("free_energy_bound.manifest.json")).unwrap()).unwrap();
    assert_eq!(m.threads, 2);
    assert!(!cfg_dir.exists());

    let flag_dir = dir.path().join("from_flag");
    let out = rgibbs(
        &["run", cfg.to_str().unwrap(), "--output-dir", flag_dir.to_str().unwrap(), "--threads", "1"],
        &[("RGIBBS_OUTPUT_DIR", env_dir.to_str().unwrap()), ("RGIBBS_THREADS", "2")],
    );
    assert_eq!(out.status.code(), Some(0));
    let m: RunManifest = serde_json::from_slice(&std::fs::read(flag_dir.join("free_energy_bound.manifest.json")).unwrap()).unwrap();
    assert_eq!(m.threads, 1);

    let out = rgibbs(&["run", cfg.to_str().unwrap()], &[]);
    assert_eq!(out.status.code(), Some(0));
    let m: RunManifest = serde_json::from_slice(&std::fs::read(cfg_dir.join("free_energy_bound.manifest.json")).unwrap()).unwrap();
    assert_eq!(m.threads, 3);

    let out = rgibbs(&["run", cfg.to_str().unwrap()], &[("RGIBBS_THREADS", "many")]);
    assert_eq!(out.status.code(), Some(1));
}

fn csv_of(dir: &Path, id: &str) -> Vec<u8> {
    std::fs::read(dir.join(format!("{id}.csv"))).unwrap()
}

#[test]
fn reruns_are_byte_identical_across_thread_counts_and_from_the_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "s.toml",
        "scenario = \"shift_covariance\"\nseed = 17\n[shift_covariance]\nns = [2, 3]\nseeds = 4\n",
    );
    // the verdict may be pass or check failure; only the bytes matter here
    let code = rgibbs(&["run", cfg.to_str().unwrap(), "--output-dir", dir.path().join("probe").to_str().unwrap()], &[]).status.code();
    assert_ne!(code, Some(1));
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    let c = dir.path().join("c");
    assert_eq!(rgibbs(&["run", cfg.to_str().unwrap(), "--output-dir", a.to_str().unwrap(), "--threads", "1"], &[]).status.code(), code);
    assert_eq!(rgibbs(&["run", cfg.to_str().unwrap(), "--output-dir", b.to_str().unwrap(), "--threads", "4"], &[]).status.code(), code);
    let manifest = a.join("shift_covariance.manifest.json");
    assert_eq!(rgibbs(&["run", manifest.to_str().unwrap(), "--output-dir", c.to_str().unwrap()], &[]).status.code(), code);
    let first = csv_of(&a, "shift_covariance");
    assert!(!first.is_empty());
    assert_eq!(first, csv_of(&b, "shift_covariance"));
    assert_eq!(first, csv_of(&c, "shift_covariance"));
    let ma: RunManifest = serde_json::from_slice(&std::fs::read(&manifest).unwrap()).unwrap();
    let mc: RunManifest = serde_json::from_slice(&std::fs::read(c.join("shift_covariance.manifest.json")).unwrap()).unwrap();
    assert_eq!(ma.outputs, mc.outputs);
}

#[test]
fn mcmc_runs_are_reproducible_in_process() {
    let cfg: RunConfig = config::parse_str(
        "scenario = \"ward\"\nseed = 8\n[ward]\nside = 3\nsweeps = 2000\nexact_sweeps = 2000\nexact_side_d3 = 2\nbatches = 20\ntrend_sides = [2]\n",
    )
    .unwrap();
    let dir = tempfile::tempdir().unwrap();
    let one = rgibbs_cli::execute(&cfg, &dir.path().join("1"), 1).unwrap();
    let four = rgibbs_cli::execute(&cfg, &dir.path().join("4"), 4).unwrap();
    assert_eq!(one.report.measurements, four.report.measurements);
    assert_eq!(one.manifest.outputs, four.manifest.outputs);
}

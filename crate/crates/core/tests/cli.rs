use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use adaptsurv::cli_io::{trial_from_csv, RunManifest};

const SMALL: &str = "
[design]
target_enrollment = 40
entry_rate = 20.0
horizon = 6.0
arm_codes = [-1.0, 1.0]
seed = 5

[hazard]
rates = [1.0]
censor_rate = 0.1

[allocation]
policy = \"rpw\"
response_window = 0.5

[monitoring]
looks = 2

[validation]
replicates = 500
v_grid = [0.5]
";

fn run(args: &[&str], seed_env: Option<&str>) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_adaptsurv"));
    cmd.args(args).env_remove("ADAPTSURV_SEED");
    if let Some(seed) = seed_env {
        cmd.env("ADAPTSURV_SEED", seed);
    }
    cmd.output().unwrap()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

fn setup() -> (tempfile::TempDir, PathBuf) {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("c.toml");
    std::fs::write(&config, SMALL).unwrap();
    (dir, config)
}

#[test]
fn every_subcommand_writes_outputs_and_a_manifest() {
    let (dir, config) = setup();
    let root = dir.path();
    let sim = root.join("sim");
    let trial = sim.join("trial.csv");
    let cases: Vec<(Vec<&str>, PathBuf, Vec<&str>)> = vec![
        (
            vec!["simulate", "--config", p(&config)],
            sim.clone(),
            vec!["trial.csv", "allocation_log.csv"],
        ),
        (
            vec![
                "score",
                "--trial",
                p(&trial),
                "--beta",
                "-0.2",
                "--t",
                "3",
                "--theta",
                "2",
            ],
            root.join("score"),
            vec!["score.json", "rescaled_path.csv"],
        ),
        (
            vec!["estimate", "--trial", p(&trial), "--variant", "full"],
            root.join("est"),
            vec!["mple.json"],
        ),
        (
            vec!["monitor", "--trial", p(&trial), "--plan", p(&config)],
            root.join("mon"),
            vec!["monitoring.json"],
        ),
        (
            vec![
                "boundaries",
                "--looks",
                "4",
                "--spending",
                "pocock_type",
                "--sided",
                "one",
            ],
            root.join("bnd"),
            vec!["boundaries.csv"],
        ),
        (
            vec!["validate", "--config", p(&config), "--threads", "2"],
            root.join("val"),
            vec!["diagnostics.json", "replicates.csv"],
        ),
    ];
    for (mut args, out, files) in cases {
        args.extend(["--out", p(&out)]);
        let output = run(&args, None);
        assert!(
            output.status.success(),
            "{args:?}: {}",
            String::from_utf8_lossy(&output.stderr)
        );
        let manifest = RunManifest::read(&out).unwrap();
        assert_eq!(manifest.status, "complete");
        assert_eq!(manifest.command, args[0]);
        let names: Vec<&str> = manifest.outputs.iter().map(|f| f.name.as_str()).collect();
        assert_eq!(names, files);
        for f in &manifest.outputs {
            let bytes = std::fs::read(out.join(&f.name)).unwrap();
            assert_eq!(adaptsurv::cli_io::sha256_hex(&bytes), f.sha256);
        }
    }
    let data = trial_from_csv(&std::fs::read_to_string(&trial).unwrap()).unwrap();
    assert_eq!(data.len(), 40);
    let table = std::fs::read_to_string(root.join("bnd/boundaries.csv")).unwrap();
    assert_eq!(table.lines().count(), 5);
}

#[test]
fn usage_errors_exit_with_two() {
    assert_eq!(run(&["frobnicate"], None).status.code(), Some(2));
    assert_eq!(run(&["boundaries"], None).status.code(), Some(2));
    assert_eq!(
        run(&["boundaries", "--looks", "x", "--out", "/tmp"], None)
            .status
            .code(),
        Some(2)
    );
}

#[test]
fn domain_errors_exit_with_one_and_a_stable_code() {
    let (dir, config) = setup();
    let out = dir.path().join("o");
    let missing = run(&["estimate", "--trial", "/nonexistent/t.csv", "--out", p(&out)], None);
    assert_eq!(missing.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&missing.stderr).contains("error[E_IO]"));
    assert_eq!(RunManifest::read(&out).unwrap().status, "failed");

    let bad = dir.path().join("bad.toml");
    std::fs::write(&bad, SMALL.replace("horizon = 6.0", "horizon = 6.0\nv_bar = 0")).unwrap();
    let invalid = run(&["simulate", "--config", p(&bad), "--out", p(&out)], None);
    assert_eq!(invalid.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&invalid.stderr).contains("error[E_VALIDATION]"));

    let too_few = run(
        &[
            "validate",
            "--config",
            p(&config),
            "--replicates",
            "20",
            "--out",
            p(&out),
        ],
        None,
    );
    assert_eq!(too_few.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&too_few.stderr).contains("error[E_INSUFFICIENT_REPLICATES]"));

    let bad_alpha = run(&["boundaries", "--alpha", "1.5", "--out", p(&out)], None);
    assert_eq!(bad_alpha.status.code(), Some(1));
}

#[test]
fn seed_environment_variable_overrides_the_config() {
    let (dir, config) = setup();
    let read = |name: &str| std::fs::read(dir.path().join(name).join("trial.csv")).unwrap();
    for (name, seed) in [("a", None), ("b", Some("5")), ("c", Some("6"))] {
        let out = dir.path().join(name);
        assert!(run(&["simulate", "--config", p(&config), "--out", p(&out)], seed)
            .status
            .success());
    }
    assert_eq!(read("a"), read("b"));
    assert_ne!(read("a"), read("c"));
    assert_eq!(RunManifest::read(&dir.path().join("c")).unwrap().seed, Some(6));
    let bad = run(
        &["simulate", "--config", p(&config), "--out", p(&dir.path().join("d"))],
        Some("x"),
    );
    assert_eq!(bad.status.code(), Some(1));
}

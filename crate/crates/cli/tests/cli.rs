use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn s2p(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_s2p"))
        .args(args)
        .arg("--out-dir")
        .arg(out)
        .env_remove("S2P_OUT_DIR")
        .output()
        .expect("binary runs")
}

fn reference_config() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs/reference.toml")
}

fn files(dir: &Path) -> Vec<String> {
    let mut v: Vec<String> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().file_name().into_string().unwrap())
        .collect();
    v.sort();
    v
}

/// A small, fast configuration: few executions, so the treasure is never
/// reached and no symbol can express the goal.
const SHORT_RUN: &str = r#"
seed = 3
goal = ["treasure_held=1"]

[collect]
budget = 500
min_per_option = 1000
episode_len = 50

[abstraction]
eps = 0.03
"#;

#[test]
fn missing_map_exits_one_and_names_the_path() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.toml");
    std::fs::write(&cfg, "[map]\npath = \"nowhere.map\"\n").unwrap();
    let out = s2p(&["discover", "--config", cfg.to_str().unwrap()], &dir.path().join("out"));
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("nowhere.map"));
}

#[test]
fn missing_config_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    let out = s2p(&["pipeline", "--config", "no-such.toml"], dir.path());
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("no-such.toml"));
}

#[test]
fn malformed_config_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.toml");
    std::fs::write(&cfg, "goal = [\"treasure_held\"]\n").unwrap();
    let out = s2p(&["discover", "--config", cfg.to_str().unwrap()], &dir.path().join("out"));
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn discover_stage_writes_only_the_options_file() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let cfg = reference_config();
    let r = s2p(&["pipeline", "--config", cfg.to_str().unwrap(), "--stage", "discover"], &out);
    assert_eq!(r.status.code(), Some(0), "{}", String::from_utf8_lossy(&r.stderr));
    assert_eq!(files(&out), vec!["options.tsv"]);
    let text = std::fs::read_to_string(out.join("options.tsv")).unwrap();
    assert_eq!(text.lines().filter(|l| !l.starts_with('#') && !l.is_empty()).count(), 11);

    // finished stages are skipped unless forced
    let again = s2p(&["discover", "--config", cfg.to_str().unwrap()], &out);
    assert!(String::from_utf8_lossy(&again.stderr).contains("skipping"));
    let forced = s2p(&["discover", "--config", cfg.to_str().unwrap(), "--force"], &out);
    assert!(!String::from_utf8_lossy(&forced.stderr).contains("skipping"));
    assert_eq!(std::fs::read_to_string(out.join("options.tsv")).unwrap(), text);
}

#[test]
fn later_stage_without_inputs_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    let r = s2p(&["plan"], dir.path());
    assert_eq!(r.status.code(), Some(1));
    let err = String::from_utf8_lossy(&r.stderr);
    assert!(err.contains("stage plan") && err.contains("domain.ppddl"), "{err}");
}

#[test]
fn unreachable_goal_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("short.toml");
    std::fs::write(&cfg, SHORT_RUN).unwrap();
    let out = dir.path().join("out");
    let r = s2p(&["pipeline", "--config", cfg.to_str().unwrap()], &out);
    assert_eq!(r.status.code(), Some(2), "{}", String::from_utf8_lossy(&r.stderr));
    assert!(String::from_utf8_lossy(&r.stderr).contains("stage abstract"));
    assert_eq!(files(&out), vec!["options.tsv", "transitions.tsv"]);
}

#[test]
fn out_dir_comes_from_the_environment() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("from-env");
    let r = Command::new(env!("CARGO_BIN_EXE_s2p"))
        .args(["pipeline", "--stage", "discover"])
        .env("S2P_OUT_DIR", &out)
        .output()
        .unwrap();
    assert_eq!(r.status.code(), Some(0));
    assert!(out.join("options.tsv").is_file());
}

#[test]
fn seed_flag_overrides_the_config() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("short.toml");
    std::fs::write(&cfg, SHORT_RUN).unwrap();
    let run = |seed: &str, name: &str| {
        let out = dir.path().join(name);
        let args = ["pipeline", "--config", cfg.to_str().unwrap(), "--stage", "collect", "--seed", seed];
        assert_eq!(s2p(&args, &out).status.code(), Some(0));
        std::fs::read_to_string(out.join("transitions.tsv")).unwrap()
    };
    let a = run("1", "a");
    assert_eq!(a, run("1", "b"));
    assert_ne!(a, run("2", "c"));
}

#[test]
fn validate_ppddl_reports_positions() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path().join("d.ppddl");
    let p = dir.path().join("p.ppddl");
    std::fs::write(
        &d,
        "(define (domain t)\n  (:requirements :probabilistic-effects)\n  (:predicates (a) (b))\n  (:action go\n    :parameters ()\n    :precondition (a)\n    :effect (probabilistic 1.0 (b))))\n",
    )
    .unwrap();
    std::fs::write(&p, "(define (problem q) (:domain t) (:init (a)) (:goal (b)))\n").unwrap();
    let ok = Command::new(env!("CARGO_BIN_EXE_s2p")).arg("validate-ppddl").arg(&d).arg(&p).output().unwrap();
    assert_eq!(ok.status.code(), Some(0), "{}", String::from_utf8_lossy(&ok.stdout));

    std::fs::write(&p, "(define (problem q) (:domain t) (:init (a)) (:goal (c)))\n").unwrap();
    let bad = Command::new(env!("CARGO_BIN_EXE_s2p")).arg("validate-ppddl").arg(&d).arg(&p).output().unwrap();
    assert_eq!(bad.status.code(), Some(1));
    let text = String::from_utf8_lossy(&bad.stdout);
    assert!(text.starts_with("1:"), "{text}");
}

use std::path::Path;
use std::process::{Command, Output};

fn eqboost(args: &[&str], env_seed: Option<&str>) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_eqboost"));
    cmd.args(args).env_remove("EQBOOST_SEED");
    if let Some(s) = env_seed {
        cmd.env("EQBOOST_SEED", s);
    }
    cmd.output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

const SMALL_COMPARE: &[&str] = &[
    "compare",
    "--n",
    "1024",
    "--eps",
    "0.125,0.03125",
    "--trials",
    "3",
];

#[test]
fn help_and_usage_exit_codes() {
    assert_eq!(eqboost(&["--help"], None).status.code(), Some(0));
    assert_eq!(eqboost(&["learn", "--help"], None).status.code(), Some(0));
    assert_eq!(eqboost(&[], None).status.code(), Some(2));
    assert_eq!(eqboost(&["frobnicate"], None).status.code(), Some(2));
    assert_eq!(
        eqboost(&["learn", "--no-such-flag"], None).status.code(),
        Some(2)
    );
}

#[test]
fn bad_epsilon_names_the_flag() {
    let o = eqboost(&["learn", "--eps", "1.5"], None);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("--eps"), "{}", stderr(&o));
    assert!(o.stdout.is_empty());
}

#[test]
fn theory_execution_needs_a_budget() {
    let o = eqboost(&["learn", "--mode", "theory"], None);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("--budget"));
    let o = eqboost(&["learn", "--mode", "theory", "--dry-run"], None);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("executed: false"));
}

#[test]
fn bad_environment_seed_is_a_usage_error() {
    let o = eqboost(&["learn", "--n", "64"], Some("not-a-number"));
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("EQBOOST_SEED"));
}

#[test]
fn learn_executes_and_reports() {
    let o = eqboost(
        &["learn", "--eps", "0.125", "--n", "1024", "--seed", "5"],
        None,
    );
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    for key in [
        "executed: true",
        "eq_queries: ",
        "final_risk: ",
        "pac_samples: ",
    ] {
        assert!(text.contains(key), "missing {key} in\n{text}");
    }
}

#[test]
fn compare_is_deterministic_and_seed_sources_agree() {
    let a = eqboost(&[SMALL_COMPARE, &["--seed", "9"]].concat(), None);
    let b = eqboost(&[SMALL_COMPARE, &["--seed", "9"]].concat(), Some("1"));
    let c = eqboost(SMALL_COMPARE, Some("9"));
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout, "the flag outranks the environment");
    assert_eq!(
        a.stdout, c.stdout,
        "the environment seeds when no flag is given"
    );
    let d = eqboost(&[SMALL_COMPARE, &["--seed", "10"]].concat(), None);
    assert_ne!(a.stdout, d.stdout);

    let text = stdout(&a);
    assert!(!text.contains('\r'));
    let mut rdr = csv::Reader::from_reader(text.as_bytes());
    assert_eq!(rdr.headers().unwrap().len(), 14);
    let kinds: Vec<String> = rdr.records().map(|r| r.unwrap()[0].to_string()).collect();
    assert_eq!(kinds.iter().filter(|k| *k == "trial").count(), 6);
    assert_eq!(kinds.iter().filter(|k| *k == "summary").count(), 2);
}

#[test]
fn compare_writes_to_a_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("sweep.csv");
    let p = path.to_str().unwrap();
    let o = eqboost(
        &[SMALL_COMPARE, &["--seed", "9", "--output", p]].concat(),
        None,
    );
    assert_eq!(o.status.code(), Some(0));
    assert!(o.stdout.is_empty());
    let inline = eqboost(&[SMALL_COMPARE, &["--seed", "9"]].concat(), None);
    assert_eq!(std::fs::read(&path).unwrap(), inline.stdout);
}

fn write_config(dir: &Path, body: &str) -> String {
    let path = dir.join("run.json");
    std::fs::write(&path, body).unwrap();
    path.to_str().unwrap().to_string()
}

#[test]
fn config_file_values_and_precedence() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        r#"{"n": 1024, "eps": [0.125, 0.03125], "trials": 3, "seed": 9}"#,
    );
    let from_file = eqboost(&["compare", "--config", &cfg], None);
    let from_flags = eqboost(&[SMALL_COMPARE, &["--seed", "9"]].concat(), None);
    assert_eq!(from_file.status.code(), Some(0));
    assert_eq!(from_file.stdout, from_flags.stdout);

    let overridden = eqboost(&["compare", "--config", &cfg, "--seed", "10"], None);
    let direct = eqboost(&[SMALL_COMPARE, &["--seed", "10"]].concat(), None);
    assert_eq!(overridden.stdout, direct.stdout);
}

#[test]
fn config_file_rejects_unknown_keys_and_bad_json() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), r#"{"colour": "blue"}"#);
    let o = eqboost(&["compare", "--config", &cfg], None);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("colour"));

    let cfg = write_config(dir.path(), "{not json");
    assert_eq!(
        eqboost(&["compare", "--config", &cfg], None).status.code(),
        Some(2)
    );
    let missing = dir.path().join("absent.json");
    let o = eqboost(&["compare", "--config", missing.to_str().unwrap()], None);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn process_trajectory_csv() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("traj.csv");
    let o = eqboost(
        &[
            "process",
            "--eps",
            "0.0078125",
            "--record-every",
            "100",
            "--output",
            path.to_str().unwrap(),
        ],
        None,
    );
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let text = std::fs::read_to_string(&path).unwrap();
    let mut rdr = csv::Reader::from_reader(text.as_bytes());
    let header: Vec<String> = rdr.headers().unwrap().iter().map(String::from).collect();
    assert_eq!(header[0], "step");
    let rows: Vec<csv::StringRecord> = rdr.records().map(|r| r.unwrap()).collect();
    assert!(rows.len() > 2);
    assert_eq!(&rows[0][0], "0");
}

#[test]
fn game_reports_every_trial() {
    let o = eqboost(
        &[
            "game",
            "--adversary",
            "lazy",
            "--trials",
            "3",
            "--seed",
            "2",
        ],
        None,
    );
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    assert_eq!(text.lines().filter(|l| l.starts_with("game ")).count(), 3);
    assert!(text.contains("failure=0"));
}

#[test]
fn quick_verification_passes() {
    let o = eqboost(&["verify", "--quick"], None);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let text = stdout(&o);
    assert_eq!(text.lines().filter(|l| l.starts_with("PASS ")).count(), 7);
    assert!(!text.lines().any(|l| l.ends_with(' ')));
}

use std::path::Path;
use std::process::{Command, Output};

fn slipstab(out: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_slipstab"))
        .args(args)
        .arg("--out")
        .arg(out)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn profile_passes_and_writes_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let o = slipstab(dir.path(), &["profile"]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    assert!(stdout(&o).contains("PASS navier residual"));
    for name in ["profile.csv", "profile.json", "match.json", "inflections.json"] {
        assert!(dir.path().join(name).is_file(), "{name}");
    }
    let m: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(dir.path().join("match.json")).unwrap()).unwrap();
    assert!((m["x0"].as_f64().unwrap() - 0.5).abs() < 1e-12, "{m}");
}

#[test]
fn zero_slip_is_a_runtime_error() {
    let dir = tempfile::tempdir().unwrap();
    let o = slipstab(dir.path(), &["profile", "--set", "a=0"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).starts_with("error:"));
}

#[test]
fn failed_assertion_exits_with_two() {
    // A depth-6 well binds two states.
    let dir = tempfile::tempdir().unwrap();
    let o = slipstab(dir.path(), &["sturm", "-s", "potential=\"sech2\"", "-s", "depth=6"]);
    assert_eq!(o.status.code(), Some(2), "{}", stdout(&o));
    assert!(stdout(&o).contains("FAIL single negative eigenvalue"));
    assert!(stdout(&o).contains("PASS variational bound"));
}

#[test]
fn overrides_take_precedence_over_the_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.toml");
    std::fs::write(&cfg, "[envelope]\nlambda = 0.5\nmu = 0.4\n").unwrap();
    let out = dir.path().join("a");
    let bad = slipstab(&out, &["envelope", "--config", cfg.to_str().unwrap()]);
    assert_eq!(bad.status.code(), Some(1), "mu below lambda must be rejected");
    let good = slipstab(&out, &["envelope", "--config", cfg.to_str().unwrap(), "--set", "mu=1.5"]);
    assert_eq!(good.status.code(), Some(0), "{}", stdout(&good));
    assert!(out.join("envelope.csv").is_file());
    assert!(out.join("envelope_summary.json").is_file());
}

#[test]
fn unknown_keys_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(slipstab(dir.path(), &["envelope", "--set", "lamda=1"]).status.code(), Some(1));
}

#[test]
fn seed_makes_the_variational_check_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let read = |sub: &str, seed: &str| {
        let out = dir.path().join(sub);
        let o = slipstab(&out, &["sturm", "--seed", seed, "-s", "trials=8"]);
        assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
        std::fs::read(out.join("variational.json")).unwrap()
    };
    assert_eq!(read("a", "11"), read("b", "11"));
    assert_ne!(read("a", "11"), read("c", "12"));
}

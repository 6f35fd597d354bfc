use std::path::Path;
use std::process::{Command, Stdio};

use serde_json::Value;

const SMALL: &str = "\
# coarse grid, everything runs in about a second
r_max = 5
n_r = 64
n_theta = 64
lambda_max = 16
n_lambda = 64
n_b = 64
a0 = 1
";

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_hypframes"));
    c.stdout(Stdio::null()).stderr(Stdio::null());
    c
}

fn small_config(dir: &Path, extra: &str) -> std::path::PathBuf {
    let p = dir.join("run.cfg");
    std::fs::write(&p, format!("{SMALL}{extra}")).unwrap();
    p
}

fn report(dir: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(dir.join("report.json")).unwrap()).unwrap()
}

#[test]
fn all_passes_and_writes_every_report() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("out");
    let st = bin()
        .args(["all", "--config"])
        .arg(small_config(tmp.path(), ""))
        .arg("--out")
        .arg(&out)
        .status()
        .unwrap();
    assert_eq!(st.code(), Some(0));
    let top = report(&out);
    assert_eq!(top["experiment"], "all");
    assert_eq!(top["pass"], true);
    for name in ["plancherel", "frame-bounds", "reconstruct", "besov", "decay"] {
        let r = report(&out.join(name));
        assert_eq!(r["experiment"], name);
        assert_eq!(r["pass"], true);
        for key in ["config", "metrics", "verdicts", "wall_clock_s", "tables"] {
            assert!(r.get(key).is_some(), "{name} report lacks {key}");
        }
        for t in r["tables"].as_array().unwrap() {
            let csv = std::fs::read_to_string(out.join(name).join(t.as_str().unwrap())).unwrap();
            assert!(csv.lines().count() >= 2, "{name}/{t} has no rows");
        }
    }
}

#[test]
fn coarse_spectral_grid_fails_plancherel() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("out");
    let st = bin()
        .args(["plancherel", "--config"])
        .arg(small_config(tmp.path(), "n_lambda = 4\n"))
        .arg("--out")
        .arg(&out)
        .status()
        .unwrap();
    assert_eq!(st.code(), Some(1));
    let r = report(&out);
    assert_eq!(r["pass"], false);
    assert_eq!(r["verdicts"]["norms_agree"], false);
}

#[test]
fn usage_and_config_errors_exit_2() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("out");
    let cases: Vec<Vec<String>> = vec![
        vec!["nonsense".into()],
        vec![],
        vec!["plancherel".into(), "--delta".into(), "1.5".into()],
        vec!["plancherel".into(), "--a0".into(), "lots".into()],
        vec!["plancherel".into(), "--jmax".into(), "9".into()],
        vec!["plancherel".into(), "--config".into(), "/nonexistent/x.cfg".into()],
    ];
    for args in cases {
        let st = bin().args(&args).arg("--out").arg(&out).status().unwrap();
        assert_eq!(st.code(), Some(2), "{args:?}");
    }
    let bad = tmp.path().join("bad.cfg");
    std::fs::write(&bad, "colour = red\n").unwrap();
    let st = bin().args(["plancherel", "--config"]).arg(&bad).status().unwrap();
    assert_eq!(st.code(), Some(2));
}

#[test]
fn same_seed_same_report() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = small_config(tmp.path(), "");
    let mut seen = Vec::new();
    for (k, seed) in ["7", "7", "8"].iter().enumerate() {
        let out = tmp.path().join(format!("o{k}"));
        let st = bin()
            .args(["frame-bounds", "--seed", seed, "--config"])
            .arg(&cfg)
            .arg("--out")
            .arg(&out)
            .status()
            .unwrap();
        assert_eq!(st.code(), Some(0));
        let r = report(&out);
        assert_eq!(r["config"]["seed"], seed.parse::<u64>().unwrap());
        seen.push((r["metrics"].clone(), r["verdicts"].clone()));
    }
    assert_eq!(seen[0], seen[1]);
    assert_ne!(seen[0].0, seen[2].0);
}

#[test]
fn flags_override_config_file() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("out");
    let st = bin()
        .args(["frame-bounds", "--delta", "0.4", "--a0", "0.5", "--config"])
        .arg(small_config(tmp.path(), "delta = 0.3\n"))
        .arg("--out")
        .arg(&out)
        .status()
        .unwrap();
    assert!(st.code() == Some(0) || st.code() == Some(1));
    let r = report(&out);
    assert_eq!(r["config"]["delta"], 0.4);
    assert_eq!(r["config"]["a0"], 0.5);
    assert_eq!(r["metrics"]["interval"][0], 0.6 - 0.05);
}

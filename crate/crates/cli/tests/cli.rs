use std::path::Path;
use std::process::{Command, Output};

fn xyff(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_xyff")).args(args).output().unwrap()
}

fn write_config(dir: &Path, body: &str) -> String {
    let p = dir.join("config.json");
    std::fs::write(&p, body).unwrap();
    p.to_str().unwrap().to_string()
}

fn json(path: &Path) -> serde_json::Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

const HOMOGENEOUS: &str = r#"{"model": {"N": 4, "tau": [0.3, 0.7], "xi": "homogeneous"}, "gauge": "random"}"#;

#[test]
fn roots_are_deterministic_and_on_shell() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), HOMOGENEOUS);
    let (a, b) = (dir.path().join("a.json"), dir.path().join("b.json"));
    for out in [&a, &b] {
        let o = xyff(&["roots", "--nu", "0", "--config", &cfg, "--out", out.to_str().unwrap()]);
        assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    }
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
    let v = json(&a);
    let states = v[0]["states"].as_array().unwrap();
    assert!(!states.is_empty());
    for s in states {
        assert!(s["residual_max"].as_f64().unwrap() < 1e-10);
        // Complex numbers are [re, im] pairs.
        assert_eq!(s["roots"][0].as_array().unwrap().len(), 2);
    }
}

#[test]
fn odd_chain_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), r#"{"model": {"N": 5, "tau": [0.0, 1.0]}}"#);
    assert_eq!(xyff(&["roots", "--config", &cfg]).status.code(), Some(2));
    let cfg = write_config(dir.path(), r#"{"model": {"N": 4, "tau": [0.3, -0.7]}}"#);
    assert_eq!(xyff(&["roots", "--config", &cfg]).status.code(), Some(2));
    let cfg = write_config(dir.path(), r#"{"model": {"N": 4, "tau": [0.3, 0.7]}, "colour": 1}"#);
    assert_eq!(xyff(&["roots", "--config", &cfg]).status.code(), Some(2));
}

#[test]
fn ff_zero_records_and_admissible_value() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), HOMOGENEOUS);
    let roots = dir.path().join("roots.json");
    assert!(xyff(&["roots", "--config", &cfg, "--out", roots.to_str().unwrap()]).status.success());
    let r = roots.to_str().unwrap();
    let bra = format!("{r}#0");
    let out = dir.path().join("ff.json");
    let o = xyff(&[
        "ff",
        "--config",
        &cfg,
        "--axis",
        "z",
        "--site",
        "2",
        "--bra",
        &bra,
        "--ket",
        &bra,
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0));
    let v = json(&out);
    assert_eq!(v["records"][0]["reason"], "magnetization-vanishes");
    assert_eq!(v["records"][0]["route"], "closed-form");

    // Sector-1 states follow the sector-0 ones; find one with each parity of mu_1.
    let n0 = json(&roots)[0]["states"].as_array().unwrap().len();
    let mut reasons = Vec::new();
    for k in n0..2 * n0 {
        let ket = format!("{r}#{k}");
        let o = xyff(&[
            "ff",
            "--config",
            &cfg,
            "--axis",
            "x",
            "--site",
            "1",
            "--bra",
            &bra,
            "--ket",
            &ket,
            "--out",
            out.to_str().unwrap(),
        ]);
        assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
        let rec = json(&out)["records"][0].clone();
        let mu1 = rec["mu1"].as_i64().unwrap();
        if mu1 % 2 != 0 {
            assert_eq!(rec["reason"], "parity");
            assert_eq!(rec["value"], serde_json::json!([0.0, 0.0]));
        } else {
            assert!(rec.get("reason").is_none());
            let z = rec["value"].as_array().unwrap();
            assert!(z[0].as_f64().unwrap().hypot(z[1].as_f64().unwrap()) > 1e-6);
        }
        reasons.push(mu1 % 2 != 0);
    }
    assert!(reasons.contains(&true) && reasons.contains(&false));
}

#[test]
fn quadratic_ff_agrees_with_oracle() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), r#"{"model": {"N": 4, "tau": [0.3, 0.7], "xi": "random", "seed": 3}}"#);
    let roots = dir.path().join("roots.json");
    assert!(xyff(&["roots", "--config", &cfg, "--out", roots.to_str().unwrap()]).status.success());
    let r = roots.to_str().unwrap();
    let o = xyff(&[
        "ff",
        "--config",
        &cfg,
        "--axis",
        "y",
        "--site",
        "1",
        "--site2",
        "3",
        "--bra",
        &format!("{r}#1"),
        "--ket",
        &format!("{r}#6"),
        "--format",
        "csv",
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let text = String::from_utf8(o.stdout).unwrap();
    let routes: Vec<&str> = text.lines().skip(1).map(|l| l.split(',').nth(5).unwrap()).collect();
    assert_eq!(routes, ["closed-form", "generic-assembly", "oracle"]);
}

#[test]
fn verify_reports_and_strict_tolerance_fails() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("v.json");
    let o = xyff(&["verify", "--suite", "thetas", "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    let v = json(&out);
    assert_eq!(v[0]["id"], 1);
    assert_eq!(v[0]["pass"], true);
    let o = xyff(&["verify", "--suite", "thetas", "--tolerance", "1e-16", "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert_eq!(json(&out)[0]["pass"], false);
    assert_eq!(xyff(&["verify", "--suite", "nonsense"]).status.code(), Some(2));
}

#[test]
fn oracle_and_identities() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), HOMOGENEOUS);
    let out = dir.path().join("o.json");
    let o = xyff(&["oracle", "--config", &cfg, "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let v = json(&out);
    assert!(v["states"].as_array().unwrap().iter().all(|s| !s["level"].is_null()));
    assert!(v["comparisons"].as_array().unwrap().iter().all(|c| c["gap"].as_f64().unwrap() < 1e-8));
    let o = xyff(&["identities", "--config", &cfg, "--format", "csv"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(String::from_utf8(o.stdout).unwrap().starts_with("identity,residual"));
}

#[test]
fn mismatched_run_command_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), r#"{"model": {"N": 4, "tau": [0.3, 0.7]}, "run": {"command": "roots"}}"#);
    assert_eq!(xyff(&["identities", "--config", &cfg]).status.code(), Some(2));
}

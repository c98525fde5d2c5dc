use std::process::Command;

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_moment-lab"));
    c.env_remove("MOMENT_LAB_FIXTURES");
    c
}

fn run(args: &[&str]) -> (i32, String, String) {
    let out = bin().args(args).output().expect("binary runs");
    (out.status.code().unwrap_or(-1), String::from_utf8_lossy(&out.stdout).into_owned(), String::from_utf8_lossy(&out.stderr).into_owned())
}

#[test]
fn moments_exact_csv_schema() {
    let (code, out, err) = run(&["moments", "exact", "--weight", "12", "--ell", "1"]);
    assert_eq!(code, 0, "{err}");
    let mut lines = out.lines();
    assert_eq!(lines.next().unwrap(), "l,weight,exact,oracle,residual,main_term,phi_sum,Phi_sum,certified_tail,wall_time_ms");
    let row: Vec<&str> = lines.next().unwrap().split(',').collect();
    assert_eq!(&row[..2], &["1", "12"]);
    let residual: f64 = row[4].parse().unwrap();
    assert!(residual <= 1e-20);
    // manifest on stderr
    let manifest: serde_json::Value = serde_json::from_str(err.lines().last().unwrap()).unwrap();
    assert_eq!(manifest["command"], "moments exact");
    assert_eq!(manifest["prec_bits"], 256);
    for key in ["flags", "started_at", "duration_ms", "git_describe"] {
        assert!(manifest.get(key).is_some(), "{key}");
    }
}

#[test]
fn json_output_is_decimal_strings() {
    let (code, out, err) = run(&["kernels", "eval", "--k-list", "6,8", "--x", "0.25,0.5", "--format", "json"]);
    assert_eq!(code, 0, "{err}");
    let rows: Vec<serde_json::Value> = serde_json::from_str(&out).unwrap();
    assert_eq!(rows.len(), 4);
    for r in &rows {
        assert!(r.as_object().unwrap().values().all(|v| v.is_string()));
    }
    // φ_6(1/2) = −32/15
    let v: f64 = rows[1]["phi_re"].as_str().unwrap().parse().unwrap();
    assert!((v + 32.0 / 15.0).abs() < 1e-15);
}

#[test]
fn out_dir_and_fixture_round_trip() {
    let dir = std::env::temp_dir().join(format!("moment-lab-cli-{}", std::process::id()));
    let _ = std::fs::remove_dir_all(&dir);
    let d = dir.to_str().unwrap();
    let (code, _, err) = run(&["oracle", "forms", "--weight", "24", "--out", d]);
    assert_eq!(code, 0, "{err}");
    assert!(dir.join("report.csv").is_file() && dir.join("manifest.json").is_file());
    assert!(dir.join("fixtures/weight_24.json").is_file());
    let (_, direct, _) = run(&["oracle", "weights", "--weight", "24"]);
    let out = bin().args(["oracle", "weights", "--weight", "24"]).env("MOMENT_LAB_FIXTURES", dir.join("fixtures")).output().unwrap();
    assert!(out.status.success());
    assert_eq!(String::from_utf8_lossy(&out.stdout), direct);
    let _ = std::fs::remove_dir_all(&dir);
}

#[test]
fn byte_identical_reruns() {
    let args = ["lg", "constants", "--k-list", "10,20"];
    let (a, b) = (run(&args).1, run(&args).1);
    assert!(!a.is_empty());
    assert_eq!(a, b);
}

#[test]
fn exit_codes() {
    assert_eq!(run(&["moments", "exact"]).0, 2);
    assert_eq!(run(&["nonsense"]).0, 2);
    assert_eq!(run(&["moments", "exact", "--weight", "13"]).0, 3);
    assert_eq!(run(&["moments", "exact-uv", "--weight", "12", "--u", "0", "--v", "0.1i"]).0, 3);
    assert_eq!(run(&["acceptance", "--criteria", "14b"]).0, 4);
    assert_eq!(run(&["acceptance", "--criteria", "2"]).0, 0);
}

#[test]
fn lg_compare_reports_slope() {
    let (code, out, err) = run(&["lg", "compare", "--case", "osc", "--k", "20,40,80", "--x", "0.3", "--N", "1"]);
    assert_eq!(code, 0, "{err}");
    let last = out.lines().last().unwrap();
    let slope: f64 = last.rsplit(',').next().unwrap().parse().unwrap();
    assert!(slope <= -2.9, "{slope}");
}

use std::process::{Command, Output};

use serde_json::Value;

fn cpm(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cpm"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn json_of(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| {
        panic!(
            "stdout is not JSON ({e}): {}\nstderr: {}",
            String::from_utf8_lossy(&out.stdout),
            String::from_utf8_lossy(&out.stderr)
        )
    })
}

fn num(v: &Value) -> f64 {
    match v {
        Value::String(s) => s.parse().unwrap(),
        other => other.as_f64().unwrap(),
    }
}

#[test]
fn identity_passes_with_schema() {
    let out = cpm(&["identity", "--N", "3", "--L", "4"]);
    assert_eq!(out.status.code(), Some(0));
    let v = json_of(&out);
    assert_eq!(v["schema"], 1);
    assert_eq!(v["pass"], true);
    assert_eq!(v["failed"], 0);
    assert!(v["checked"].as_u64().unwrap() > 0);
}

#[test]
fn appendix_passes() {
    let out = cpm(&["appendix", "--N", "2", "--L", "4", "--samples", "20"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(json_of(&out)["pass"], true);
}

#[test]
fn order_limit_field() {
    let out = cpm(&["order", "--N", "3", "--r", "1", "--kp", "0.5", "--L", "30", "--method", "det"]);
    assert_eq!(out.status.code(), Some(0));
    let v = json_of(&out);
    assert!((num(&v["limit"]) - 0.75f64.powf(2.0 / 9.0)).abs() < 1e-15);
    assert!(num(&v["abs_error"]) < 1e-20);
    assert_eq!(v["kp"], "0.5");
    assert_eq!(v["terms"].as_array().unwrap().len(), 3);
}

#[test]
fn sum_route_guard_exits_3() {
    let out = cpm(&["order", "--N", "3", "--L", "300", "--kp", "0.5", "--method", "sum"]);
    assert_eq!(out.status.code(), Some(3));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("--method det"), "{err}");
}

#[test]
fn invalid_configs_exit_2() {
    for args in [
        vec!["order", "--N", "3", "--L", "6", "--kp", "1.5"],
        vec!["order", "--N", "3", "--L", "6", "--kp", "abc"],
        vec!["order", "--N", "3", "--L", "6", "--kp", "0.5", "--r", "3"],
        vec!["order", "--N", "1", "--L", "6", "--kp", "0.5"],
        vec!["formfactor", "--N", "3", "--L", "6", "--P", "4", "--Q", "0", "--kp", "0.5"],
        vec!["bogus"],
    ] {
        let out = cpm(&args);
        assert_eq!(out.status.code(), Some(2), "{args:?}");
    }
}

#[test]
fn output_is_deterministic() {
    let args = ["formfactor", "--N", "3", "--L", "7", "--P", "1", "--Q", "0", "--kp", "0.2"];
    let a = cpm(&args);
    let b = cpm(&args);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn formfactor_routes_agree() {
    let out = cpm(&["formfactor", "--N", "3", "--L", "8", "--P", "2", "--Q", "0", "--kp", "0.8", "--method", "all"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let v = json_of(&out);
    assert!(v["sum_det_rel_diff"].as_f64().unwrap() < 1e-10);
    let sum = num(&v["dhat_sum"]);
    let det = num(&v["dhat_det"]);
    assert!((sum - det).abs() < 1e-12);
}

#[test]
fn sweep_csv_decreasing() {
    let out = cpm(&["sweep", "--N", "2", "--kp", "0.5", "--Ls", "4,8,16", "--format", "csv"]);
    assert_eq!(out.status.code(), Some(0));
    let mut rdr = csv::Reader::from_reader(out.stdout.as_slice());
    let errs: Vec<f64> = rdr
        .records()
        .map(|r| r.unwrap()[5].parse::<f64>().unwrap())
        .collect();
    assert_eq!(errs.len(), 3);
    assert!(errs.windows(2).all(|w| w[1] < w[0]));
    // the limit column is constant at (1−k'²)^{1/4}
    let mut rdr = csv::Reader::from_reader(out.stdout.as_slice());
    for r in rdr.records() {
        let lim: f64 = r.unwrap()[4].parse().unwrap();
        assert!((lim - 0.75f64.powf(0.25)).abs() < 1e-15);
    }
}

#[test]
fn single_entry_sweep_matches_order() {
    let s = cpm(&["sweep", "--N", "3", "--kp", "0.5", "--Ls", "9"]);
    let o = cpm(&["order", "--N", "3", "--kp", "0.5", "--L", "9"]);
    let sv = json_of(&s);
    let ov = json_of(&o);
    assert_eq!(sv["rows"][0]["finite_l"], ov["finite_l"]);
}

#[test]
fn oracle_and_spectral_dump() {
    let out = cpm(&["oracle", "--N", "3", "--L", "3", "--kp", "0.5"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let v = json_of(&out);
    assert!(v["max_abs_diff"].as_f64().unwrap() < 1e-8);
    let csv_out = cpm(&["oracle", "--N", "2", "--L", "3", "--kp", "0.5", "--format", "csv"]);
    assert_eq!(csv_out.status.code(), Some(0));
    let text = String::from_utf8(csv_out.stdout).unwrap();
    assert!(text.starts_with("Q,P,j,eigenvalue_modulus,overlap_with_max_q"));
}

#[test]
fn correlate_starts_at_one() {
    let out = cpm(&["correlate", "--N", "3", "--L", "4", "--kp", "0.5", "--ell", "0,64"]);
    assert_eq!(out.status.code(), Some(0));
    let v = json_of(&out);
    let rows = v["rows"].as_array().unwrap();
    assert!((rows[0]["g"].as_f64().unwrap() - 1.0).abs() < 1e-10);
    assert!(rows[1]["minus_limit"].as_f64().unwrap().abs() < 1e-8);
}

#[test]
fn drinfeld_report() {
    let out = cpm(&["drinfeld", "--N", "3", "--L", "6", "--kp", "0.5"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let v = json_of(&out);
    let sectors = v["sectors"].as_array().unwrap();
    assert_eq!(sectors.len(), 3);
    assert!(sectors.iter().all(|s| s["projection_ok"] == true && s["degree_formula_ok"] == true));
    assert_eq!(v["reciprocal_pairing"].as_array().unwrap().len(), 3);
}

#[test]
fn diagnostics_and_file_output() {
    let dir = std::env::temp_dir().join(format!("cpm-cli-test-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("diag.json");
    let out = cpm(&["diagnostics", "--N", "3", "--L", "3", "--kp", "0.5", "--out", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    assert!(out.stdout.is_empty());
    let v: Value = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    assert_eq!(v["schema"], 1);
    assert_eq!(v["report"]["sectors"].as_array().unwrap().len(), 3);
    std::fs::remove_dir_all(&dir).unwrap();
}

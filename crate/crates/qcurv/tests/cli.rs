//! End-to-end checks of the command-line surface: example payloads, exit
//! codes, and format handling.

use std::process::Command;

fn qcurv(args: &[&str]) -> (i32, String, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_qcurv"))
        .args(args)
        .output()
        .expect("binary runs");
    (
        out.status.code().unwrap_or(-1),
        String::from_utf8_lossy(&out.stdout).into_owned(),
        String::from_utf8_lossy(&out.stderr).into_owned(),
    )
}

#[test]
fn constants_cell_example() {
    let (code, stdout, _) = qcurv(&["constants", "--n", "8", "--k", "2", "--l", "0"]);
    assert_eq!(code, 0);
    assert!(stdout.contains("\"c_nkl\":\"179200\""), "{stdout}");
    assert!(stdout.contains("\"schema\":\"1\""));
}

#[test]
fn certify_borderline_flat_data_is_not_certified() {
    let (code, stdout, _) = qcurv(&[
        "certify", "--n", "10", "--k", "3", "--f", "1", "--lap-f", "0", "--bilap-f", "0",
        "--weyl-sq", "0",
    ]);
    assert_eq!(code, 0);
    let v: serde_json::Value = serde_json::from_str(stdout.trim()).unwrap();
    assert_eq!(v["verdict"]["certified"], serde_json::Value::Bool(false));
    assert_eq!(v["verdict"]["branch"], "Borderline");
}

#[test]
fn scan_small_grid_is_clean() {
    let (code, stdout, _) = qcurv(&["scan", "--k-range", "2:4", "--n-margin", "10"]);
    assert_eq!(code, 0);
    let v: serde_json::Value = serde_json::from_str(stdout.trim()).unwrap();
    assert_eq!(v["violations"].as_array().unwrap().len(), 0);
    assert_eq!(v["cells"], 33);
}

#[test]
fn scan_csv_has_header_and_rows() {
    let (code, stdout, _) = qcurv(&["scan", "--k-range", "2:2", "--n-margin", "2", "--format", "csv"]);
    assert_eq!(code, 0);
    let lines: Vec<&str> = stdout.lines().collect();
    assert_eq!(lines[0], "n,k,sign,value_decimal");
    assert_eq!(lines.len(), 4);
}

#[test]
fn domain_error_is_json_with_exit_2() {
    let (code, stdout, _) = qcurv(&["constants", "--n", "4", "--k", "2"]);
    assert_eq!(code, 2);
    let v: serde_json::Value = serde_json::from_str(stdout.trim()).unwrap();
    assert_eq!(v["code"], "domain");
    assert!(v["message"].as_str().unwrap().contains("domain"));
}

#[test]
fn unknown_flag_is_usage_exit_64() {
    let (code, _, stderr) = qcurv(&["constants", "--bogus", "1"]);
    assert_eq!(code, 64);
    assert!(!stderr.is_empty());
}

#[test]
fn csv_rejected_for_tree_payloads() {
    let (code, stdout, _) = qcurv(&[
        "certify", "--n", "12", "--k", "3", "--f", "1", "--format", "csv",
    ]);
    assert_eq!(code, 2);
    assert!(stdout.contains("\"code\":\"unsupported\""));
}

#[test]
fn sphere_probe_payload_certifies() {
    let (code, stdout, _) = qcurv(&[
        "sphere", "--n", "5", "--k", "2", "--theta", "3.141592653589793",
    ]);
    assert_eq!(code, 0);
    let v: serde_json::Value = serde_json::from_str(stdout.trim()).unwrap();
    assert_eq!(v["sharpness"], serde_json::Value::Bool(true));
    assert_eq!(v["green_probe"]["positivity_certified"], serde_json::Value::Bool(true));
}

#[test]
fn meta_flag_adds_metadata_and_payload_is_otherwise_deterministic() {
    let (_, first, _) = qcurv(&["constants", "--n", "9", "--k", "2"]);
    let (_, second, _) = qcurv(&["constants", "--n", "9", "--k", "2"]);
    assert_eq!(first, second);
    assert!(!first.contains("meta"));
    let (_, with_meta, _) = qcurv(&["constants", "--n", "9", "--k", "2", "--meta"]);
    assert!(with_meta.contains("generated_at_unix"));
}

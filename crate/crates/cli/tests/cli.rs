//! End-to-end checks of the `nrsync` binary: flag validation, config
//! merging, output plumbing and exit codes.

use std::path::Path;
use std::process::{Command, Output};

fn nrsync(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_nrsync"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout_of(output: &Output) -> String {
    String::from_utf8(output.stdout.clone()).unwrap()
}

fn stderr_of(output: &Output) -> String {
    String::from_utf8(output.stderr.clone()).unwrap()
}

fn exit_code(output: &Output) -> i32 {
    output.status.code().expect("no signal")
}

#[test]
fn unsupported_scs_is_a_usage_error() {
    let out = nrsync(&["sim", "--scs", "25", "--trials", "10"]);
    assert_eq!(exit_code(&out), 2);
    assert!(
        stderr_of(&out).contains("--scs"),
        "stderr: {}",
        stderr_of(&out)
    );
}

#[test]
fn unknown_flag_is_a_usage_error() {
    let out = nrsync(&["sim", "--no-such-flag"]);
    assert_eq!(exit_code(&out), 2);
    assert!(stderr_of(&out).contains("--no-such-flag"));
}

#[test]
fn out_of_range_flag_values_name_the_flag() {
    for (args, flag) in [
        (vec!["sim", "--trials", "0"], "--trials"),
        (vec!["sim", "--confidence", "1.5"], "--confidence"),
        (vec!["sim", "--toa-slot", "0"], "--toa-slot"),
        (vec!["sim", "--sigma-rel", "-0.5"], "--sigma-rel"),
        (vec!["sweep", "--avg", "1,0,4"], "--avg"),
        (vec!["pipeline", "--resync-ms", "0"], "--resync-ms"),
        (vec!["budget", "--target-ns", "-5"], "--target-ns"),
    ] {
        let out = nrsync(&args);
        assert_eq!(exit_code(&out), 2, "args: {args:?}");
        assert!(
            stderr_of(&out).contains(flag),
            "args {args:?}: {}",
            stderr_of(&out)
        );
    }
}

#[test]
fn budget_rejects_csv_format() {
    let out = nrsync(&["budget", "--format", "csv"]);
    assert_eq!(exit_code(&out), 2);
}

#[test]
fn invalid_config_file_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("scenario.json");
    std::fs::write(
        &path,
        r#"{
            "scs_khz": 15,
            "toa_prior": {"type": "uniform-in-slot", "center_index": 100},
            "error_model": {"type": "los", "sigma_rel": 0.5},
            "trials": 0,
            "avg_window": 1,
            "seed": 1,
            "confidence": 0.999
        }"#,
    )
    .unwrap();
    let out = nrsync(&["sim", "--config", path.to_str().unwrap()]);
    assert_eq!(exit_code(&out), 3);
    assert!(stderr_of(&out).contains("trials"));
}

#[test]
fn missing_config_file_exits_5() {
    let out = nrsync(&["sim", "--config", "/nonexistent/scenario.json"]);
    assert_eq!(exit_code(&out), 5);
    assert!(stderr_of(&out).contains("/nonexistent/scenario.json"));
}

#[test]
fn explicit_flags_override_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("scenario.json");
    std::fs::write(
        &path,
        r#"{
            "scs_khz": 30,
            "toa_prior": {"type": "uniform-in-slot", "center_index": 7},
            "error_model": {"type": "los", "sigma_rel": 1.0},
            "trials": 500,
            "avg_window": 2,
            "seed": 9,
            "confidence": 0.9
        }"#,
    )
    .unwrap();

    let out = nrsync(&[
        "sim",
        "--config",
        path.to_str().unwrap(),
        "--trials",
        "200",
        "--format",
        "csv",
    ]);
    assert_eq!(exit_code(&out), 0, "stderr: {}", stderr_of(&out));
    let text = stdout_of(&out);
    let config_line = text.lines().nth(1).unwrap();
    // flag wins
    assert!(config_line.contains("\"trials\":200"), "{config_line}");
    // file values survive where no flag was given
    assert!(config_line.contains("\"scs_khz\":30"), "{config_line}");
    assert!(config_line.contains("\"center_index\":7"), "{config_line}");
    assert!(config_line.contains("\"avg_window\":2"), "{config_line}");
    assert!(config_line.contains("\"seed\":9"), "{config_line}");
}

#[test]
fn flags_map_onto_the_scenario() {
    // scs=30 -> mu=1, slot width 130.2083 ns; sigma_rel 0.5 resolves to
    // 65.10416666666667 ns in the canonical echo
    let out = nrsync(&[
        "sim",
        "--scs",
        "30",
        "--sigma-rel",
        "0.5",
        "--trials",
        "100000",
        "--seed",
        "7",
        "--format",
        "json",
    ]);
    assert_eq!(exit_code(&out), 0);
    let summary: serde_json::Value = serde_json::from_str(&stdout_of(&out)).unwrap();
    assert_eq!(summary["scs_khz"], 30);
    assert_eq!(summary["trials"], 100000);
    assert_eq!(summary["meta"]["config"]["seed"], 7);
    let sigma = summary["meta"]["config"]["error_model"]["sigma"]
        .as_f64()
        .unwrap();
    let slot = 130.20833333333334e-9;
    assert!((sigma - 0.5 * slot).abs() < 1e-18, "sigma {sigma}");
}

#[test]
fn bias_correction_flag_enters_the_scenario() {
    let out = nrsync(&[
        "sim",
        "--trials",
        "50",
        "--bias-correction-ns",
        "-10",
        "--format",
        "csv",
    ]);
    assert_eq!(exit_code(&out), 0);
    let text = stdout_of(&out);
    assert!(text
        .lines()
        .nth(1)
        .unwrap()
        .contains("\"bias_correction\":-1e-8"));
}

#[test]
fn output_echoes_resolved_defaults_and_version() {
    let out = nrsync(&["sim", "--trials", "50", "--format", "csv"]);
    assert_eq!(exit_code(&out), 0);
    let text = stdout_of(&out);
    assert!(text.starts_with(&format!("# nrsync {} sim\n", env!("CARGO_PKG_VERSION"))));
    let config_line = text.lines().nth(1).unwrap();
    for expected in [
        "\"scs_khz\":15",
        "\"seed\":42",
        "\"confidence\":0.999",
        "\"avg_window\":1",
        "\"center_index\":100",
    ] {
        assert!(config_line.contains(expected), "{config_line}");
    }
}

#[test]
fn csv_values_reparse_to_identical_doubles() {
    let out = nrsync(&["sim", "--trials", "200", "--format", "csv"]);
    let text = stdout_of(&out);
    let mut seen = 0;
    for line in text.lines().skip(3) {
        let (value, cdf) = line.split_once(',').unwrap();
        let v: f64 = value.parse().unwrap();
        let c: f64 = cdf.parse().unwrap();
        assert_eq!(format!("{v}"), value);
        assert_eq!(format!("{c}"), cdf);
        seen += 1;
    }
    assert!(seen > 100);
}

#[test]
fn atomic_write_and_output_dir_env() {
    let dir = tempfile::tempdir().unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_nrsync"))
        .args(["constants", "--format", "json", "--output", "c.json"])
        .env("NRSYNC_OUTPUT_DIR", dir.path())
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0), "stderr: {}", stderr_of(&out));
    let written = dir.path().join("c.json");
    assert!(written.exists());
    let value: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&written).unwrap()).unwrap();
    assert_eq!(value["constants"][0]["scs_khz"], 15);
    // no temp files left behind
    let entries: Vec<_> = std::fs::read_dir(dir.path()).unwrap().collect();
    assert_eq!(entries.len(), 1);
}

#[test]
fn sweep_csv_has_one_column_group_per_window() {
    let out = nrsync(&[
        "sweep", "--trials", "300", "--avg", "1,2,4", "--format", "csv",
    ]);
    assert_eq!(exit_code(&out), 0);
    let text = stdout_of(&out);
    let header = text.lines().nth(2).unwrap();
    assert_eq!(
        header,
        "error_ns_k1,cdf_k1,error_ns_k2,cdf_k2,error_ns_k4,cdf_k4"
    );
    let first = text.lines().nth(3).unwrap();
    assert_eq!(first.split(',').count(), 6);
}

#[test]
fn budget_from_sim_substitutes_p_e() {
    let dir = tempfile::tempdir().unwrap();
    let summary = dir.path().join("summary.json");

    // zero-noise run at a bin center: P_e = 0, so the 15 kHz total drops
    // from 1160 to 900
    let out = nrsync(&[
        "sim",
        "--trials",
        "100",
        "--sigma-rel",
        "0",
        "--toa-fixed-ns",
        "26041.666666666668",
        "--summary",
        summary.to_str().unwrap(),
        "--format",
        "table",
    ]);
    assert_eq!(exit_code(&out), 0, "stderr: {}", stderr_of(&out));

    let parsed: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&summary).unwrap()).unwrap();
    assert_eq!(parsed["scs_khz"], 15);
    assert_eq!(parsed["p_e_ns"], 0.0);

    let out = nrsync(&[
        "budget",
        "--scs",
        "15",
        "--from-sim",
        summary.to_str().unwrap(),
        "--format",
        "json",
    ]);
    assert_eq!(exit_code(&out), 0, "stderr: {}", stderr_of(&out));
    let report: serde_json::Value = serde_json::from_str(&stdout_of(&out)).unwrap();
    assert_eq!(report["total_ns"], 900.0);
    assert_eq!(report["pass"], true);

    // numerology mismatch: summary is 15 kHz, budget asks for 30
    let out = nrsync(&[
        "budget",
        "--scs",
        "30",
        "--from-sim",
        summary.to_str().unwrap(),
    ]);
    assert_eq!(exit_code(&out), 3);
    assert!(stderr_of(&out).contains("mismatch"));
}

#[test]
fn fail_on_target_miss_uses_exit_code_4() {
    let out = nrsync(&["budget", "--scs", "15", "--fail-on-target-miss"]);
    assert_eq!(exit_code(&out), 4);
    // the report is still produced
    assert!(stdout_of(&out).contains("total = 1160 ns"));

    let out = nrsync(&["budget", "--scs", "30", "--fail-on-target-miss"]);
    assert_eq!(exit_code(&out), 0);
}

#[test]
fn budget_flags_change_the_total() {
    let out = nrsync(&[
        "budget",
        "--scs",
        "15",
        "--tae",
        "positioning",
        "--format",
        "json",
    ]);
    let report: serde_json::Value = serde_json::from_str(&stdout_of(&out)).unwrap();
    assert_eq!(report["total_ns"], 1105.0);

    let out = nrsync(&[
        "budget",
        "--scs",
        "15",
        "--include-ul-tx-error",
        "--format",
        "json",
    ]);
    let report: serde_json::Value = serde_json::from_str(&stdout_of(&out)).unwrap();
    assert_eq!(report["total_ns"], 1550.0);

    let out = nrsync(&[
        "budget",
        "--scs",
        "15",
        "--policy",
        "root-sum-square",
        "--format",
        "json",
    ]);
    let report: serde_json::Value = serde_json::from_str(&stdout_of(&out)).unwrap();
    let rss = report["total_ns"].as_f64().unwrap();
    assert!(rss < 1160.0);
    assert_eq!(report["pass"], true);
}

#[test]
fn pipeline_csv_trace_shape() {
    let out = nrsync(&["pipeline", "--epochs", "12", "--format", "csv"]);
    assert_eq!(exit_code(&out), 0);
    let text = stdout_of(&out);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[2], "epoch,pre_offset_ns,post_offset_ns");
    assert_eq!(lines.len(), 3 + 12);
    assert!(lines[3].starts_with("0,"));
    assert!(lines[14].starts_with("11,"));
}

#[test]
fn pipeline_config_file_with_flag_override() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("pipeline.json");
    std::fs::write(
        &path,
        r#"{
            "scs_khz": 30,
            "error_model": {"type": "los", "sigma_rel": 0.5},
            "drift_ppm": 5.0,
            "resync_period": 0.02,
            "epochs": 4,
            "seed": 11
        }"#,
    )
    .unwrap();
    let out = nrsync(&[
        "pipeline",
        "--config",
        path.to_str().unwrap(),
        "--epochs",
        "6",
        "--format",
        "csv",
    ]);
    assert_eq!(exit_code(&out), 0, "stderr: {}", stderr_of(&out));
    let text = stdout_of(&out);
    let config_line = text.lines().nth(1).unwrap();
    assert!(config_line.contains("\"epochs\":6"));
    assert!(config_line.contains("\"scs_khz\":30"));
    assert!(config_line.contains("\"drift_ppm\":5.0"));
    assert_eq!(text.lines().count(), 3 + 6);
}

#[test]
fn sim_writes_csv_and_summary_in_one_invocation() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("cdf.csv");
    let summary = dir.path().join("summary.json");
    let out = nrsync(&[
        "sim",
        "--trials",
        "500",
        "--output",
        csv.to_str().unwrap(),
        "--summary",
        summary.to_str().unwrap(),
    ]);
    assert_eq!(exit_code(&out), 0);
    assert!(Path::new(&csv).exists());
    assert!(Path::new(&summary).exists());
    let parsed: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&summary).unwrap()).unwrap();
    assert_eq!(parsed["trials"], 500);
    assert_eq!(parsed["meta"]["tool"], "nrsync");
    assert!(parsed["quantiles_ns"]["0.999"].is_f64());
}

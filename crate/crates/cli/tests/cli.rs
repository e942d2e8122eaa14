//! End-to-end runs of the `siegellab` binary: exit codes, report schema,
//! determinism across thread counts, the CSV surface and the persisted
//! sieve cache.

use std::process::{Command, Output};

fn siegellab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_siegellab"))
        .args(args)
        .env_remove("SIEGELLAB_SIEVE_CACHE")
        .output()
        .expect("binary runs")
}

fn stdout_str(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).expect("utf-8 output")
}

#[test]
fn verify_lemmas_small_is_green_json() {
    let out = siegellab(&[
        "verify-lemmas",
        "--qmax",
        "40",
        "--dmax",
        "30",
        "--format",
        "json",
        "--no-timestamp",
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let report: serde_json::Value = serde_json::from_str(&stdout_str(&out)).unwrap();
    assert_eq!(report["command"], "verify-lemmas");
    assert_eq!(report["config"]["qmax"], 40);
    assert_eq!(report["config"]["command"], "verify-lemmas");
    assert!(report["results"]["ramanujan_pairs_checked"].as_u64().unwrap() > 0);
    let assertions = report["assertions"].as_array().unwrap();
    assert!(!assertions.is_empty());
    assert!(assertions.iter().all(|a| a["passed"].as_bool().unwrap()));
    assert!(report.get("timestamp").is_none());
}

#[test]
fn timestamp_present_by_default() {
    let out = siegellab(&["goldbach", "--n", "100", "--sieve-limit", "1000", "--format", "json"]);
    assert!(out.status.success());
    let report: serde_json::Value = serde_json::from_str(&stdout_str(&out)).unwrap();
    assert!(report["timestamp"].is_string());
}

#[test]
fn goldbach_reports_both_counts() {
    let out = siegellab(&[
        "goldbach",
        "--n",
        "10",
        "--sieve-limit",
        "1000",
        "--format",
        "json",
        "--no-timestamp",
    ]);
    assert!(out.status.success());
    let report: serde_json::Value = serde_json::from_str(&stdout_str(&out)).unwrap();
    assert_eq!(report["results"]["r"], 3);
    assert_eq!(report["results"]["r_odd"], 3);
}

#[test]
fn s_sum_identity_and_schema() {
    let out = siegellab(&[
        "s-sum",
        "--x",
        "10000",
        "--q",
        "101",
        "--sieve-limit",
        "10000",
        "--format",
        "json",
        "--no-timestamp",
    ]);
    assert!(out.status.success());
    let report: serde_json::Value = serde_json::from_str(&stdout_str(&out)).unwrap();
    let r = &report["results"]["report"];
    let sd = r["s_direct"].as_f64().unwrap();
    let sc = r["s_counting"].as_f64().unwrap();
    assert!((sd - sc).abs() <= 1e-6 * sc.max(1.0));
    assert_eq!(report["results"]["character"]["discriminant"], 101);
}

#[test]
fn exit_code_2_on_bad_inputs() {
    // unknown conjecture kind
    let out = siegellab(&["conjectures", "--kind", "c9", "--x", "100", "--sieve-limit", "1000"]);
    assert_eq!(out.status.code(), Some(2));
    // non-fundamental discriminant
    let out = siegellab(&["gauss", "--d", "-9"]);
    assert_eq!(out.status.code(), Some(2));
    // x beyond the sieve
    let out = siegellab(&["s-sum", "--x", "100000", "--q", "7", "--sieve-limit", "1000"]);
    assert_eq!(out.status.code(), Some(2));
    // zero-scan step too coarse
    let out = siegellab(&["lfunc-scan", "--d", "-4", "--step", "0.5"]);
    assert_eq!(out.status.code(), Some(2));
    // malformed flag (clap)
    let out = siegellab(&["verify-lemmas", "--qqqmax", "4"]);
    assert_eq!(out.status.code(), Some(2));
    // csv for a non-scan command
    let out = siegellab(&["goldbach", "--n", "10", "--sieve-limit", "100", "--format", "csv"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn csv_outputs_have_fixed_headers() {
    let out = siegellab(&[
        "conjectures",
        "--kind",
        "c1",
        "--x",
        "200",
        "--sieve-limit",
        "1000",
        "--format",
        "csv",
        "--no-timestamp",
    ]);
    assert!(out.status.success());
    let text = stdout_str(&out);
    assert!(text.starts_with("n,count,ratio,below_constant\n"), "{text}");
    assert!(text.lines().count() > 50);

    let out = siegellab(&[
        "lfunc-scan",
        "--d",
        "-4",
        "--step",
        "0.01",
        "--format",
        "csv",
        "--no-timestamp",
    ]);
    assert!(out.status.success());
    let text = stdout_str(&out);
    assert!(text.starts_with("s,value,error_bound,certified\n"), "{text}");
    assert_eq!(text.lines().count(), 101); // header + 100 grid points
    assert!(text.lines().skip(1).all(|l| l.ends_with(",true")));
}

#[test]
fn identical_runs_are_byte_identical_across_thread_counts() {
    let base = [
        "s-sum",
        "--x",
        "20000",
        "--q",
        "163",
        "--sieve-limit",
        "20000",
        "--format",
        "json",
        "--no-timestamp",
    ];
    let one = siegellab(&[&base[..], &["--threads", "1"]].concat());
    let eight = siegellab(&[&base[..], &["--threads", "8"]].concat());
    assert!(one.status.success() && eight.status.success());
    assert_eq!(stdout_str(&one), stdout_str(&eight));

    let scan = ["lfunc-scan", "--d", "-8", "--step", "0.01", "--format", "json", "--no-timestamp"];
    let one = siegellab(&[&scan[..], &["--threads", "1"]].concat());
    let eight = siegellab(&[&scan[..], &["--threads", "8"]].concat());
    assert_eq!(stdout_str(&one), stdout_str(&eight));
}

#[test]
fn sieve_cache_is_written_validated_and_reused() {
    let dir = tempfile::tempdir().unwrap();
    let run = |args: &[&str]| {
        Command::new(env!("CARGO_BIN_EXE_siegellab"))
            .args(args)
            .env("SIEGELLAB_SIEVE_CACHE", dir.path())
            .output()
            .expect("binary runs")
    };
    let args = [
        "goldbach",
        "--n",
        "1000",
        "--sieve-limit",
        "5000",
        "--format",
        "json",
        "--no-timestamp",
    ];
    let first = run(&args);
    assert!(first.status.success());
    let cache = dir.path().join("sieve-5000.slsv");
    assert!(cache.is_file());
    let bytes = std::fs::read(&cache).unwrap();
    assert_eq!(&bytes[..4], b"SLSV");
    assert_eq!(u32::from_le_bytes(bytes[4..8].try_into().unwrap()), 1);
    assert_eq!(u64::from_le_bytes(bytes[8..16].try_into().unwrap()), 5000);

    let second = run(&args);
    assert!(second.status.success());
    assert_eq!(stdout_str(&first), stdout_str(&second));

    // corrupt cache is ignored, not trusted
    std::fs::write(&cache, b"garbage").unwrap();
    let third = run(&args);
    assert!(third.status.success());
    assert_eq!(stdout_str(&first), stdout_str(&third));
}

#[test]
fn output_flag_writes_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("report.json");
    let out = siegellab(&[
        "ramanujan",
        "--q",
        "12",
        "--format",
        "json",
        "--no-timestamp",
        "--output",
        path.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    assert!(stdout_str(&out).is_empty());
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    assert_eq!(report["results"]["values"][5], -4); // c_12(6)
    assert_eq!(report["results"]["max_proper"], 4);
}

#[test]
fn full_report_small_runs_green() {
    let out = siegellab(&[
        "full-report",
        "--qmax",
        "12",
        "--dmax",
        "15",
        "--x",
        "2000",
        "--sieve-limit",
        "2000",
        "--format",
        "json",
        "--no-timestamp",
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let report: serde_json::Value = serde_json::from_str(&stdout_str(&out)).unwrap();
    assert_eq!(report["results"]["zero_scans"]["certified_sign_changes"], 0);
    assert!(report["assertions"].as_array().unwrap().len() >= 5);
}

#[test]
fn gauss_command_checks_identities() {
    let out = siegellab(&["gauss", "--d", "-4", "--format", "json", "--no-timestamp"]);
    assert!(out.status.success());
    let report: serde_json::Value = serde_json::from_str(&stdout_str(&out)).unwrap();
    let tau = &report["results"]["tau"];
    assert!(tau["re"].as_f64().unwrap().abs() < 1e-9);
    assert!((tau["im"].as_f64().unwrap() - 2.0).abs() < 1e-9);
    assert_eq!(report["results"]["tau_square"]["expected"]["re"], -4.0);
}

#[test]
fn conjectures_c2_and_c3_via_binary() {
    let out = siegellab(&[
        "conjectures", "--kind", "c2", "--x", "10000", "--q", "7", "--sieve-limit", "10000",
        "--format", "json", "--no-timestamp",
    ]);
    assert!(out.status.success());
    let report: serde_json::Value = serde_json::from_str(&stdout_str(&out)).unwrap();
    let results = &report["results"];
    assert_eq!(results["kind"], "C2");
    assert!((results["allowance"].as_f64().unwrap() - 10000.0 / 56.0).abs() < 1e-9);
    assert!(results["min_ratio"].as_f64().unwrap() > 0.0);

    let out = siegellab(&[
        "conjectures", "--kind", "c3", "--x", "10000", "--q", "101", "--sieve-limit", "10000",
        "--format", "json", "--no-timestamp",
    ]);
    assert!(out.status.success());
    let report: serde_json::Value = serde_json::from_str(&stdout_str(&out)).unwrap();
    assert!(report["results"]["min_ratio"].as_f64().unwrap() > 0.0);

    // c2/c3 without --q is a usage error
    let out = siegellab(&["conjectures", "--kind", "c2", "--x", "1000", "--sieve-limit", "1000"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn s_sum_even_character_and_beta() {
    // q = 8 carries both d = 8 and d = -8; the odd character is preferred
    let out = siegellab(&[
        "s-sum", "--x", "5000", "--q", "8", "--sieve-limit", "5000", "--format", "json",
        "--no-timestamp",
    ]);
    assert!(out.status.success());
    let report: serde_json::Value = serde_json::from_str(&stdout_str(&out)).unwrap();
    assert_eq!(report["results"]["character"]["discriminant"], -8);

    // explicit even character is labeled as outside the odd-parity hypotheses
    let out = siegellab(&[
        "s-sum", "--x", "5000", "--d", "8", "--sieve-limit", "5000", "--format", "json",
        "--no-timestamp",
    ]);
    assert!(out.status.success());
    let report: serde_json::Value = serde_json::from_str(&stdout_str(&out)).unwrap();
    assert!(report["results"]["parity_hypothesis_note"]
        .as_str()
        .unwrap()
        .contains("outside"));

    // a beta input fills the secondary term with the parity sign
    let out = siegellab(&[
        "s-sum", "--x", "5000", "--d", "-3", "--beta", "0.9", "--sieve-limit", "5000",
        "--format", "json", "--no-timestamp",
    ]);
    assert!(out.status.success());
    let report: serde_json::Value = serde_json::from_str(&stdout_str(&out)).unwrap();
    assert!(report["results"]["report"]["secondary_term"].as_f64().unwrap() < 0.0);

    // modulus without any fundamental discriminant still verifies S
    let out = siegellab(&[
        "s-sum", "--x", "5000", "--q", "50", "--sieve-limit", "5000", "--format", "json",
        "--no-timestamp",
    ]);
    assert!(out.status.success());
    let report: serde_json::Value = serde_json::from_str(&stdout_str(&out)).unwrap();
    assert!(report["results"]["character"].is_null());
    assert!(report["results"]["report"]["s_counting"].as_u64().unwrap() > 0);
}

#[test]
fn ramanujan_single_value_path() {
    let out = siegellab(&[
        "ramanujan", "--q", "9", "--n", "3", "--format", "json", "--no-timestamp",
    ]);
    assert!(out.status.success());
    let report: serde_json::Value = serde_json::from_str(&stdout_str(&out)).unwrap();
    assert_eq!(report["results"]["closed"], -3);
    assert_eq!(report["results"]["brute"], -3);
}

use std::path::PathBuf;
use std::process::Command;

use serde_json::Value;

fn systems(name: &str) -> String {
    let p = PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../systems")
        .join(name);
    p.display().to_string()
}

fn scratch(name: &str) -> PathBuf {
    std::env::temp_dir().join(format!("compactness-cli-{}-{name}", std::process::id()))
}

/// Runs the binary with structured output; returns the exit code and the
/// report (when stdout parses).
fn run(args: &[&str]) -> (i32, Option<Value>) {
    let out = Command::new(env!("CARGO_BIN_EXE_compactness"))
        .args(args)
        .args(["--format", "structured"])
        .output()
        .expect("binary runs");
    let report = serde_json::from_slice(&out.stdout).ok();
    (out.status.code().expect("exit code"), report)
}

fn error_kind(report: &Value) -> &str {
    report["outcome"]["error"]["kind"].as_str().unwrap_or("")
}

#[test]
fn planted_file_is_solved() {
    let (code, rep) = run(&[
        "solve-linear",
        &systems("planted.json"),
        "--schedule",
        "2:8,4:16,8:32",
        "--window",
        "2",
    ]);
    assert_eq!(code, 0);
    let rep = rep.unwrap();
    let coords = rep["result"]["coordinates"].as_array().unwrap();
    let mut determined = 0;
    for c in coords.iter().filter(|c| c["determined"] == true) {
        let n = c["index"].as_u64().unwrap() as i32;
        assert!((c["value"].as_f64().unwrap() - 0.5f64.powi(n)).abs() <= 1e-6);
        determined += 1;
    }
    assert!(determined >= 7);
    assert!(rep["input"].is_object(), "reports embed their input");
}

#[test]
fn sample_systems_run() {
    let cases: [(&[&str], i32); 5] = [
        (
            &[
                "solve-ring",
                &systems("ring_chain.json"),
                "--schedule",
                "4,8,16",
            ],
            0,
        ),
        (
            &[
                "solve-ring",
                &systems("ring_list.json"),
                "--schedule",
                "1,2,3",
            ],
            0,
        ),
        (
            &[
                "solve-box",
                &systems("box_list.json"),
                "--schedule",
                "1,2,3",
            ],
            0,
        ),
        (
            &[
                "solve-linear",
                &systems("helly_rows.json"),
                "--schedule",
                "1:2,2:3,3:4",
            ],
            0,
        ),
        (
            &[
                "solve-linear",
                &systems("approx.json"),
                "--schedule",
                "4:16,8:32,12:48",
                "--eps",
                "1e-8,1e-10,1e-12",
            ],
            0,
        ),
    ];
    for (args, want) in cases {
        assert_eq!(run(args).0, want, "{args:?}");
    }
}

#[test]
fn abian_stream_never_settles() {
    // every prefix has a root in [−10, 10]^I but x tracks the prefix length
    let (code, rep) = run(&["solve-box", &systems("abian.json"), "--schedule", "2,4,6,8"]);
    assert_eq!(code, 2);
    assert_eq!(rep.unwrap()["result"]["verified_prefix"], 8);
}

#[test]
fn refutations_exit_one() {
    let (code, rep) = run(&["demo", "helly"]);
    assert_eq!(code, 1);
    assert_eq!(error_kind(&rep.unwrap()), "NotPSummable");
    let (code, rep) = run(&["demo", "abian", "--box", "5", "--prefix", "7"]);
    assert_eq!(code, 1);
    assert_eq!(error_kind(&rep.unwrap()), "PrefixRootNotFound");

    let path = scratch("unsat.json");
    std::fs::write(
        &path,
        r#"{"ring": {"zmod": 2}, "constraints": [[{"coeff": 1, "vars": [0]}], [{"coeff": 1, "vars": [0]}, {"coeff": 1, "vars": []}]]}"#,
    )
    .unwrap();
    let (code, rep) = run(&["solve-ring", path.to_str().unwrap(), "--schedule", "1,2"]);
    assert_eq!(code, 1);
    assert_eq!(error_kind(&rep.unwrap()), "PrefixUnsatisfiable");
}

#[test]
fn budgets_are_inconclusive() {
    let (code, rep) = run(&[
        "solve-ring",
        &systems("ring_list.json"),
        "--schedule",
        "1,2,3",
        "--budget",
        "1",
    ]);
    assert_eq!(code, 2);
    assert_eq!(error_kind(&rep.unwrap()), "SearchBudgetExceeded");
}

#[test]
fn input_errors_exit_three() {
    let bad_json = scratch("bad.json");
    std::fs::write(&bad_json, "{\"p\": 2,\n \"rows\": [").unwrap();
    let unknown_field = scratch("unknown.json");
    std::fs::write(&unknown_field, r#"{"p": 2, "rows": [], "colour": 1}"#).unwrap();
    let planted = systems("planted.json");
    let cases: [&[&str]; 8] = [
        &[
            "solve-linear",
            "/nonexistent/system.json",
            "--schedule",
            "1:1",
        ],
        &[
            "solve-linear",
            bad_json.to_str().unwrap(),
            "--schedule",
            "1:1",
        ],
        &[
            "solve-linear",
            unknown_field.to_str().unwrap(),
            "--schedule",
            "1:1",
        ],
        &["solve-linear", &planted, "--schedule", "2-8"],
        &["solve-linear", &planted],
        &[
            "solve-linear",
            &planted,
            "--schedule",
            "2:8",
            "--eps",
            "1e-9",
        ],
        &["solve-linear", &planted, "--schedule", "4:8,2:16"],
        &["frobnicate"],
    ];
    for args in cases {
        assert_eq!(run(args).0, 3, "{args:?}");
    }
    let (_, rep) = run(&[
        "solve-linear",
        bad_json.to_str().unwrap(),
        "--schedule",
        "1:1",
    ]);
    let msg = rep.unwrap()["outcome"]["error"]["message"]
        .as_str()
        .unwrap()
        .to_string();
    assert!(msg.contains(":2:"), "diagnostic names the line: {msg}");
}

#[test]
fn verify_round_trip_and_tampering() {
    let report = scratch("report.json");
    let status = Command::new(env!("CARGO_BIN_EXE_compactness"))
        .args([
            "solve-linear",
            &systems("planted.json"),
            "--schedule",
            "2:8,4:16,8:32",
        ])
        .args(["--format", "structured", "--out", report.to_str().unwrap()])
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(0));
    let (code, rep) = run(&["verify", report.to_str().unwrap()]);
    assert_eq!(code, 0);
    let checks = rep.unwrap()["result"]["checks"].as_array().unwrap().clone();
    assert!(checks
        .iter()
        .any(|c| c["name"] == "residual_certificates" && c["pass"] == true));

    let mut doc: Value = serde_json::from_str(&std::fs::read_to_string(&report).unwrap()).unwrap();
    doc["result"]["y"][0] = Value::from(0.75);
    doc["outcome"]["exit_code"] = Value::from(1);
    let tampered = scratch("tampered.json");
    std::fs::write(&tampered, serde_json::to_string(&doc).unwrap()).unwrap();
    let (code, rep) = run(&["verify", tampered.to_str().unwrap()]);
    assert_eq!(code, 2);
    let failed: Vec<String> = rep.unwrap()["result"]["checks"]
        .as_array()
        .unwrap()
        .iter()
        .filter(|c| c["pass"] == false)
        .map(|c| c["name"].as_str().unwrap().to_string())
        .collect();
    assert!(failed.contains(&"exit_code".to_string()) && failed.contains(&"result".to_string()));
}

#[test]
fn human_output_is_a_table() {
    let out = Command::new(env!("CARGO_BIN_EXE_compactness"))
        .args(["demo", "planted"])
        .output()
        .unwrap();
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.starts_with("demo planted: solved (exit 0)"));
    assert!(text.contains("coord"));
}

#[test]
fn in_process_entry_point() {
    assert_eq!(compactness_cli::run_cli(["compactness", "--version"]), 0);
    assert_eq!(compactness_cli::run_cli(["compactness", "demo"]), 3);
}

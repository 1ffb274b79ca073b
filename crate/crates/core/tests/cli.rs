use std::path::Path;
use std::process::{Command, Output};

use d2dcache::harness::AuditReport;
use d2dcache::trace::TraceDocument;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_d2dcache"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn read_trace(p: &Path) -> TraceDocument {
    serde_json::from_str(&std::fs::read_to_string(p).unwrap()).unwrap()
}

#[test]
fn run_then_verify_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let trace = dir.path().join("trace.json");
    let out = run(&["run", "--K", "4", "--N", "4", "--t", "2", "--seed", "0", "--out", trace.to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let doc = read_trace(&trace);
    assert!(doc.success);
    assert_eq!(doc.transmissions.len(), 12);

    let report = dir.path().join("report.json");
    let out = run(&["verify", trace.to_str().unwrap(), "--out", report.to_str().unwrap()]);
    assert!(out.status.success());
    let r: AuditReport = serde_json::from_str(&std::fs::read_to_string(report).unwrap()).unwrap();
    assert!(r.pass && r.run_success);
}

#[test]
fn memory_flag_selects_corner() {
    let out = run(&["run", "--K", "4", "--M", "11/2"]);
    assert!(out.status.success());
    let doc: TraceDocument = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(doc.geometry.t, 2);
    let bad = run(&["run", "--K", "4", "--M", "5"]);
    assert_eq!(bad.status.code(), Some(2));
}

#[test]
fn place_then_deliver_matches_run() {
    let dir = tempfile::tempdir().unwrap();
    let placement = dir.path().join("placement.json");
    let trace = dir.path().join("trace.json");
    let common = ["--scheme", "decentralized", "--K", "7", "--L", "3", "--t", "1", "--seed", "5"];
    let mut args = vec!["place"];
    args.extend(common);
    args.extend(["--out", placement.to_str().unwrap()]);
    assert!(run(&args).status.success());
    let out = run(&["deliver", placement.to_str().unwrap(), "--out", trace.to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));

    let mut args = vec!["run"];
    args.extend(common);
    let direct = run(&args);
    assert_eq!(std::fs::read(&trace).unwrap(), direct.stdout);
}

#[test]
fn explicit_demands_are_honoured() {
    let out = run(&["run", "--K", "3", "--N", "4", "--t", "1", "--demands", "4,4,2"]);
    assert!(out.status.success());
    let doc: TraceDocument = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(doc.demands, vec![4, 4, 2]);
    assert!(doc.decode.iter().all(|d| d.bit_exact));
}

#[test]
fn sabotaged_run_exits_nonzero() {
    let out = run(&["run", "--K", "3", "--t", "1", "--field-bits", "8", "--tamper", "zero-keys"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("secure caching FAIL"));
}

#[test]
fn keyless_run_succeeds_with_annotation() {
    let out = run(&["run", "--scheme", "keyless", "--K", "4"]);
    assert!(out.status.success());
    let doc: TraceDocument = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(doc.expected_failures, vec!["secure_delivery"]);
}

#[test]
fn tampered_trace_fails_audit_at_the_record() {
    let dir = tempfile::tempdir().unwrap();
    let trace = dir.path().join("trace.json");
    assert!(run(&["run", "--K", "4", "--t", "2", "--out", trace.to_str().unwrap()]).status.success());
    let mut doc = read_trace(&trace);
    doc.transmissions[7].payload ^= 0x0100;
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, doc.to_json()).unwrap();
    let out = run(&["verify", bad.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    let r: AuditReport = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(r.first_inconsistent_record, Some(7));
}

#[test]
fn sweep_writes_csv() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("sweep.csv");
    let out = run(&["sweep", "--K", "6", "--L", "3,6", "--M", "1,5,9.5,40", "--out", csv.to_str().unwrap()]);
    assert!(out.status.success());
    let text = std::fs::read_to_string(csv).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 5);
    assert!(lines[0].contains("decentralized_L6"));
    assert!(lines[1].starts_with("1,1.000000,true"));
}

#[test]
fn bad_input_is_reported() {
    assert_eq!(run(&["verify", "/nonexistent/trace.json"]).status.code(), Some(2));
    assert_eq!(run(&["run", "--K", "4", "--t", "2", "--demands", "1,2"]).status.code(), Some(2));
    assert!(!run(&["run", "--scheme", "bogus", "--K", "4", "--t", "1"]).status.success());
}

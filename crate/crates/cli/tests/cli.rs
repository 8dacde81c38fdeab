use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn twinforge(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_twinforge"))
        .args(args)
        .env_remove("TWINFORGE_THREADS")
        .output()
        .expect("binary runs")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

/// Simulates the default scenario and runs it with `extra` run flags.
fn simulate_and_run(dir: &Path, extra: &[&str]) -> Output {
    let sim = twinforge(&[
        "simulate",
        "--seed",
        "42",
        "--duration",
        "120",
        "--out",
        p(dir),
    ]);
    assert!(sim.status.success(), "{}", stderr(&sim));
    let trace = dir.join("trace.jsonl");
    let mut args = vec!["run", p(&trace), "--out", p(dir)];
    args.extend_from_slice(extra);
    twinforge(&args)
}

#[test]
fn simulate_is_deterministic() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    for d in [&a, &b] {
        let o = twinforge(&[
            "simulate",
            "--seed",
            "42",
            "--duration",
            "10",
            "--out",
            p(d.path()),
        ]);
        assert!(o.status.success(), "{}", stderr(&o));
    }
    for f in ["trace.jsonl", "ground_truth.json", "scenario.json"] {
        assert_eq!(
            fs::read(a.path().join(f)).unwrap(),
            fs::read(b.path().join(f)).unwrap(),
            "{f}"
        );
    }
    let first = fs::read_to_string(a.path().join("trace.jsonl")).unwrap();
    let line = first.lines().next().unwrap();
    assert!(
        line.starts_with(r#"{"asset":"drill-1","ch":"plc_state","ts":0,"v":0"#),
        "{line}"
    );
}

#[test]
fn simulate_zero_duration_writes_empty_trace() {
    let d = tempfile::tempdir().unwrap();
    let o = twinforge(&["simulate", "--duration", "0", "--out", p(d.path())]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(
        fs::read_to_string(d.path().join("trace.jsonl")).unwrap(),
        ""
    );
}

#[test]
fn simulate_rejects_bad_specs() {
    let d = tempfile::tempdir().unwrap();
    let spec = d.path().join("spec.json");
    fs::write(&spec, "{ not json").unwrap();
    let o = twinforge(&["simulate", "--spec", p(&spec), "--out", p(d.path())]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("invalid scenario"));

    // Well-formed JSON whose schedule leaves a gap.
    fs::write(
        &spec,
        r#"{"seed":1,"machines":["m"],"duration":10,"phase_schedule":[
            {"machine":"m","start_s":0,"end_s":4,"state":"Idle"},
            {"machine":"m","start_s":5,"end_s":10,"state":"Active"}]}"#,
    )
    .unwrap();
    let o = twinforge(&["simulate", "--spec", p(&spec), "--out", p(d.path())]);
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
}

#[test]
fn simulate_accepts_spec_files() {
    let d = tempfile::tempdir().unwrap();
    let spec = d.path().join("spec.json");
    fs::write(
        &spec,
        r#"{"seed":3,"machines":["m"],"duration":2,"phase_schedule":[
            {"machine":"m","start_s":0,"end_s":1,"state":"Idle"},
            {"machine":"m","start_s":1,"end_s":2,"state":"Active"}]}"#,
    )
    .unwrap();
    let o = twinforge(&["simulate", "--spec", p(&spec), "--out", p(d.path())]);
    assert!(o.status.success(), "{}", stderr(&o));
    let trace = fs::read_to_string(d.path().join("trace.jsonl")).unwrap();
    // Two PLC transitions plus three axes at 100 Hz for 2 s.
    assert_eq!(trace.lines().count(), 2 + 3 * 200);
}

#[test]
fn run_writes_all_artifacts() {
    let d = tempfile::tempdir().unwrap();
    let o = simulate_and_run(d.path(), &[]);
    assert!(o.status.success(), "{}", stderr(&o));
    for f in [
        "report.json",
        "timeline.csv",
        "changepoints.txt",
        "anomalies.json",
        "twin.json",
        "manifest.json",
    ] {
        assert!(d.path().join(f).exists(), "{f}");
    }
    let report: serde_json::Value =
        serde_json::from_slice(&fs::read(d.path().join("report.json")).unwrap()).unwrap();
    let selected = report["selected"].as_str().unwrap();
    let winner = &report["results"][0];
    assert_eq!(winner["replica_version"], selected);
    let truth: serde_json::Value =
        serde_json::from_slice(&fs::read(d.path().join("ground_truth.json")).unwrap()).unwrap();
    let drill = truth["machines"]
        .as_array()
        .unwrap()
        .iter()
        .find(|m| m["asset_id"] == "drill-1")
        .unwrap();
    // Truth is projected on 50-sample blocks; so is the winner here.
    assert_eq!(winner["hyperparams"]["block_size"], 50);
    assert_eq!(
        winner["segmentation"]["change_points"],
        drill["change_points"]
    );
    assert_eq!(winner["segment_count"], 5);
    assert!(winner.get("wall_time").is_none());

    let timeline = fs::read_to_string(d.path().join("timeline.csv")).unwrap();
    let mut lines = timeline.lines();
    assert_eq!(
        lines.next(),
        Some("block_start,block_end,cluster,is_anomaly")
    );
    assert_eq!(lines.count(), 5);
    assert_eq!(
        fs::read_to_string(d.path().join("changepoints.txt")).unwrap(),
        "80\n120\n128\n160\n"
    );

    let twin: serde_json::Value =
        serde_json::from_slice(&fs::read(d.path().join("twin.json")).unwrap()).unwrap();
    assert_eq!(twin["phase"], "Synchronized");
    let events = twin["state"]["events"].as_array().unwrap();
    assert!(events.iter().any(|e| e["type"] == "anomaly_detected"));
}

#[test]
fn run_is_byte_identical_on_rerun() {
    let d = tempfile::tempdir().unwrap();
    assert!(simulate_and_run(d.path(), &[]).status.success());
    let first = fs::read(d.path().join("report.json")).unwrap();
    let trace = d.path().join("trace.jsonl");
    let again = twinforge(&["run", p(&trace), "--out", p(&d.path().join("again"))]);
    assert!(again.status.success());
    assert_eq!(fs::read(d.path().join("again/report.json")).unwrap(), first);
}

#[test]
fn run_exit_codes() {
    let d = tempfile::tempdir().unwrap();
    let o = simulate_and_run(d.path(), &["--machine", "ghost"]);
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));

    let trace = d.path().join("trace.jsonl");
    let o = twinforge(&[
        "run",
        p(&trace),
        "--out",
        p(d.path()),
        "--grid",
        r#"{"gamma":[1]}"#,
    ]);
    assert_eq!(o.status.code(), Some(2));
    let o = twinforge(&["run", p(&trace), "--out", p(d.path()), "--threshold", "2"]);
    assert_eq!(o.status.code(), Some(2));
    let o = twinforge(&[
        "run",
        p(&d.path().join("missing.jsonl")),
        "--out",
        p(d.path()),
    ]);
    assert_eq!(o.status.code(), Some(2));
    let o = twinforge(&["run"]);
    assert_eq!(o.status.code(), Some(2));

    // Every replica fails when blocks outgrow the window.
    let o = twinforge(&[
        "run",
        p(&trace),
        "--out",
        p(d.path()),
        "--grid",
        r#"{"block_size":[100000]}"#,
    ]);
    assert_eq!(o.status.code(), Some(4));
    assert!(stderr(&o).contains("replica v1-"), "{}", stderr(&o));
}

#[test]
fn run_rejects_malformed_trace() {
    let d = tempfile::tempdir().unwrap();
    let trace = d.path().join("trace.jsonl");
    fs::write(
        &trace,
        "{\"asset\":\"m\",\"ch\":\"accel_x\",\"ts\":0,\"v\":1,\"q\":\"good\"}\n{oops\n",
    )
    .unwrap();
    let o = twinforge(&["run", p(&trace), "--machine", "m", "--out", p(d.path())]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("line 2"), "{}", stderr(&o));
}

#[test]
fn report_marks_the_winner() {
    let d = tempfile::tempdir().unwrap();
    let o = simulate_and_run(d.path(), &["--grid", r#"{"penalty":[10,40,160],"k":[4]}"#]);
    assert!(o.status.success(), "{}", stderr(&o));
    let r = twinforge(&["report", p(&d.path().join("report.json"))]);
    assert!(r.status.success());
    let out = stdout(&r);
    let rows: Vec<&str> = out.lines().skip(1).collect();
    assert_eq!(rows.len(), 3, "{out}");
    assert_eq!(rows.iter().filter(|l| l.starts_with('*')).count(), 1);
    assert!(rows[0].starts_with("* v"), "{out}");
    // Silhouette with four decimals.
    let sil = rows[0].split_whitespace().nth(5).unwrap();
    assert_eq!(sil.split('.').nth(1).map(str::len), Some(4), "{sil}");
}

#[test]
fn report_edge_cases() {
    let d = tempfile::tempdir().unwrap();
    let empty = d.path().join("empty.json");
    fs::write(
        &empty,
        r#"{"results":[],"selected":"","ranking_rule_applied":""}"#,
    )
    .unwrap();
    let o = twinforge(&["report", p(&empty)]);
    assert!(o.status.success());
    assert_eq!(stdout(&o), "no replicas\n");

    let truncated = d.path().join("truncated.json");
    fs::write(&truncated, r#"{"results":[{"replica_version":"v1"#).unwrap();
    assert_eq!(twinforge(&["report", p(&truncated)]).status.code(), Some(2));
    assert_eq!(
        twinforge(&["report", p(&d.path().join("nope.json"))])
            .status
            .code(),
        Some(2)
    );
}

#[test]
fn bench_prints_integer_rate() {
    let d = tempfile::tempdir().unwrap();
    assert!(simulate_and_run(d.path(), &[]).status.success());
    let trace = d.path().join("trace.jsonl");
    let o = twinforge(&[
        "bench",
        p(&trace),
        "--report",
        p(&d.path().join("report.json")),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let out = stdout(&o);
    let rate = out.trim().strip_suffix(" samples/s").expect("rate suffix");
    assert!(rate.parse::<u64>().unwrap() >= 700);

    // Without a report the champion is trained from the trace first.
    let o = twinforge(&["bench", p(&trace), "--min-samples", "1000"]);
    assert!(o.status.success(), "{}", stderr(&o));
}

#[test]
fn bench_on_empty_trace_is_no_data() {
    let d = tempfile::tempdir().unwrap();
    let sim = twinforge(&["simulate", "--duration", "120", "--out", p(d.path())]);
    assert!(sim.status.success());
    assert!(twinforge(&[
        "run",
        p(&d.path().join("trace.jsonl")),
        "--out",
        p(d.path())
    ])
    .status
    .success());
    let empty = d.path().join("empty.jsonl");
    fs::write(&empty, "").unwrap();
    let o = twinforge(&[
        "bench",
        p(&empty),
        "--report",
        p(&d.path().join("report.json")),
    ]);
    assert_eq!(o.status.code(), Some(3));
    let o = twinforge(&["bench", p(&empty)]);
    assert_eq!(o.status.code(), Some(3));
}

#[test]
fn thread_cap_must_be_positive() {
    let d = tempfile::tempdir().unwrap();
    assert!(
        twinforge(&["simulate", "--duration", "30", "--out", p(d.path())])
            .status
            .success()
    );
    let o = Command::new(env!("CARGO_BIN_EXE_twinforge"))
        .args([
            "run",
            p(&d.path().join("trace.jsonl")),
            "--out",
            p(d.path()),
        ])
        .env("TWINFORGE_THREADS", "zero")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(2));
}

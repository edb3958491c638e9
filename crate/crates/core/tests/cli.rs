use std::fs;
use std::path::Path;
use std::process::{Command, Output};

const SMALL: &[&str] = &["--preset", "exp10", "--events-per-node", "20000", "--seed", "11"];

fn nphc(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_nphc"))
        .args(args)
        .env_remove("NPHC_THREADS")
        .output()
        .expect("binary runs")
}

fn ok(args: &[&str]) -> String {
    let out = nphc(args);
    assert!(
        out.status.success(),
        "nphc {args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn fails(args: &[&str], code: i32) -> serde_json::Value {
    let out = nphc(args);
    assert_eq!(out.status.code(), Some(code), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    let line = String::from_utf8_lossy(&out.stderr);
    serde_json::from_str(line.lines().last().unwrap()).expect("error is JSON")
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

fn read(path: &Path) -> Vec<u8> {
    fs::read(path).unwrap_or_else(|e| panic!("{}: {e}", path.display()))
}

#[test]
fn simulate_is_reproducible() {
    let tmp = tempfile::tempdir().unwrap();
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    for dir in [&a, &b] {
        let mut args = vec!["simulate", "--ancestry", "--out", p(dir)];
        args.extend_from_slice(SMALL);
        ok(&args);
    }
    for f in ["events.csv", "G.csv", "mu.csv", "model.json", "ancestry.csv"] {
        assert_eq!(read(&a.join(f)), read(&b.join(f)), "{f} differs");
    }
}

#[test]
fn pipeline_matches_experiment() {
    let tmp = tempfile::tempdir().unwrap();
    let sim = tmp.path().join("sim");
    let cum = tmp.path().join("cum");
    let fit = tmp.path().join("fit");
    let exp = tmp.path().join("exp");

    let mut args = vec!["simulate", "--out", p(&sim)];
    args.extend_from_slice(SMALL);
    ok(&args);
    let model: serde_json::Value = serde_json::from_slice(&read(&sim.join("model.json"))).unwrap();
    let horizon = model["horizon"].as_f64().unwrap().to_string();

    let events = sim.join("events.csv");
    ok(&["cumulants", "--events", p(&events), "--horizon", &horizon, "--nodes", "10", "--half-width", "10000", "--out", p(&cum)]);
    ok(&["fit", "--cumulants", p(&cum), "--out", p(&fit)]);

    let mut args = vec!["experiment", "--runs", "1", "--out", p(&exp)];
    args.extend_from_slice(SMALL);
    let table = ok(&args);
    assert!(table.contains("RelErr") || table.contains("rel_err"), "{table}");

    for f in ["lambda.csv", "C.csv", "Kc.csv"] {
        assert_eq!(read(&cum.join(f)), read(&exp.join(f)), "{f} differs");
    }
    for f in ["G_hat.csv", "R_hat.csv", "mu_hat.csv", "loss_trace.csv"] {
        assert_eq!(read(&fit.join(f)), read(&exp.join(f)), "{f} differs");
    }
    assert_eq!(read(&sim.join("G.csv")), read(&exp.join("G.csv")));

    let rec = ok(&["eval", "--truth", p(&sim.join("G.csv")), "--estimate", p(&fit.join("G_hat.csv"))]);
    let v: serde_json::Value = serde_json::from_str(rec.trim()).unwrap();
    assert!(v["rel_err"].as_f64().unwrap().is_finite());
    assert!(v["runtime_secs"].as_f64().is_some(), "runtime taken from timing.json");
}

#[test]
fn eval_of_truth_against_itself() {
    let tmp = tempfile::tempdir().unwrap();
    let g = tmp.path().join("G.csv");
    fs::write(&g, "0.1,0.0,0.3\n0.0,0.2,0.0\n0.4,0.0,0.05\n").unwrap();
    let distinct = tmp.path().join("D.csv");
    fs::write(&distinct, "0.1,0.2,0.3\n0.5,0.2,0.1\n0.4,0.01,0.05\n").unwrap();
    let rec = ok(&["eval", "--truth", p(&distinct), "--estimate", p(&distinct), "--runtime", "1.5"]);
    let v: serde_json::Value = serde_json::from_str(rec.trim()).unwrap();
    assert_eq!(v["rel_err"].as_f64(), Some(0.0));
    assert_eq!(v["mean_rank_corr"].as_f64(), Some(1.0));
    assert_eq!(v["runtime_secs"].as_f64(), Some(1.5));

    // tied pairs count as neither concordant nor discordant
    let rec = ok(&["eval", "--truth", p(&g), "--estimate", p(&g)]);
    let v: serde_json::Value = serde_json::from_str(rec.trim()).unwrap();
    assert_eq!(v["rel_err"].as_f64(), Some(0.0));
    assert!((v["mean_rank_corr"].as_f64().unwrap() - 8.0 / 9.0).abs() < 1e-12);
    assert!(v["runtime_secs"].is_null());
}

#[test]
fn fit_recovers_scalar_fixture() {
    let tmp = tempfile::tempdir().unwrap();
    let cum = tmp.path().join("cum");
    fs::create_dir(&cum).unwrap();
    fs::write(cum.join("lambda.csv"), "2\n").unwrap();
    fs::write(cum.join("C.csv"), "8\n").unwrap();
    fs::write(cum.join("Kc.csv"), "64\n").unwrap();
    let out = tmp.path().join("fit");
    ok(&["fit", "--cumulants", p(&cum), "--out", p(&out)]);
    let text = String::from_utf8(read(&out.join("G_hat.csv"))).unwrap();
    let g: f64 = text.trim().parse().unwrap();
    assert!((g - 0.5).abs() < 1e-3, "g = {g}");
    let mu: f64 = String::from_utf8(read(&out.join("mu_hat.csv"))).unwrap().trim().parse().unwrap();
    assert!((mu - 1.0).abs() < 1e-2, "mu = {mu}");
}

#[test]
fn ingests_csv_and_jsonl_alike() {
    let tmp = tempfile::tempdir().unwrap();
    let csv = tmp.path().join("ev.csv");
    let jsonl = tmp.path().join("ev.jsonl");
    let mut c = String::from("node_id,timestamp\n# comment\n");
    let mut j = String::new();
    for k in 0..200 {
        let (node, t) = (k % 2, k as f64 * 0.37 + (k % 2) as f64 * 0.1);
        c.push_str(&format!("{node},{t}\n"));
        j.push_str(&format!("{{\"node\":{node},\"t\":{t}}}\n"));
    }
    fs::write(&csv, c).unwrap();
    fs::write(&jsonl, j).unwrap();
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    ok(&["cumulants", "--events", p(&csv), "--horizon", "80", "--half-width", "2", "--out", p(&a)]);
    ok(&["cumulants", "--events", p(&jsonl), "--horizon", "80", "--half-width", "2", "--out", p(&b)]);
    for f in ["lambda.csv", "C.csv", "Kc.csv"] {
        assert_eq!(read(&a.join(f)), read(&b.join(f)));
    }
}

#[test]
fn rejects_bad_event_files() {
    let tmp = tempfile::tempdir().unwrap();
    let dup = tmp.path().join("dup.csv");
    fs::write(&dup, "node_id,timestamp\n0,1.0\n1,2.0\n0,1.0\n").unwrap();
    let e = fails(&["cumulants", "--events", p(&dup), "--half-width", "0.1", "--out", p(tmp.path())], 2);
    let msg = e["message"].as_str().unwrap();
    assert!(msg.contains("duplicate") && msg.contains("lines 2 and 4"), "{msg}");

    let range = tmp.path().join("range.csv");
    fs::write(&range, "node_id,timestamp\n0,1.0\n5,2.0\n").unwrap();
    let e = fails(&["cumulants", "--events", p(&range), "--nodes", "2", "--half-width", "0.1", "--out", p(tmp.path())], 2);
    assert!(e["message"].as_str().unwrap().contains("out of range"));

    let late = tmp.path().join("late.csv");
    fs::write(&late, "node_id,timestamp\n0,1.0\n0,20.0\n").unwrap();
    fails(&["cumulants", "--events", p(&late), "--horizon", "10", "--half-width", "0.1", "--out", p(tmp.path())], 2);

    let noheader = tmp.path().join("nohead.csv");
    fs::write(&noheader, "0,1.0\n").unwrap();
    let e = fails(&["cumulants", "--events", p(&noheader), "--half-width", "0.1", "--out", p(tmp.path())], 2);
    assert_eq!(e["error"], "ParseError");
}

#[test]
fn error_classes_map_to_exit_codes() {
    let tmp = tempfile::tempdir().unwrap();
    let missing = tmp.path().join("nope.csv");
    let e = fails(&["cumulants", "--events", p(&missing), "--half-width", "1", "--out", p(tmp.path())], 4);
    assert_eq!(e["error"], "IoError");
    assert_eq!(e["exit_code"], 4);

    let ev = tmp.path().join("ev.csv");
    fs::write(&ev, "node_id,timestamp\n0,1.0\n1,3.0\n").unwrap();
    let e = fails(&["cumulants", "--events", p(&ev), "--horizon", "10", "--half-width", "5", "--out", p(tmp.path())], 2);
    assert_eq!(e["error"], "InvalidWindow");

    let e = fails(&["experiment", "--preset", "exp10", "--alpha", "0.5", "--events-per-node", "100"], 3);
    assert_eq!(e["error"], "StabilityViolation");

    let e = fails(&["fit", "--cumulants", p(tmp.path()), "--restarts", "2", "--out", p(tmp.path())], 2);
    assert_eq!(e["error"], "InvalidParameter");

    let out = Command::new(env!("CARGO_BIN_EXE_nphc"))
        .args(["eval", "--truth", p(&ev), "--estimate", p(&ev)])
        .env("NPHC_THREADS", "0")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));

    assert_eq!(nphc(&["simulate", "--no-such-flag"]).status.code(), Some(2));
}

#[test]
fn config_file_is_read_and_flags_win() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("run.conf");
    let out = tmp.path().join("sim");
    fs::write(&cfg, format!("# small run\npreset = exp10\nevents-per-node = 5000\nseed = 3\nout = {}\n", p(&out))).unwrap();
    ok(&["simulate", "--config", p(&cfg), "--seed", "4"]);
    let model: serde_json::Value = serde_json::from_slice(&read(&out.join("model.json"))).unwrap();
    assert_eq!(model["config"]["seed"], 4);

    fs::write(&cfg, "preset = exp10\nbogus = 1\n").unwrap();
    let e = fails(&["simulate", "--config", p(&cfg)], 2);
    assert_eq!(e["error"], "ParseError");
}

#[test]
fn scan_h_prints_a_table() {
    let tmp = tempfile::tempdir().unwrap();
    let sim = tmp.path().join("sim");
    ok(&["simulate", "--preset", "exp10", "--events-per-node", "5000", "--out", p(&sim)]);
    let model: serde_json::Value = serde_json::from_slice(&read(&sim.join("model.json"))).unwrap();
    let horizon = model["horizon"].as_f64().unwrap().to_string();
    let text = ok(&["cumulants", "--events", p(&sim.join("events.csv")), "--horizon", &horizon, "--scan-h", "100,1000,10000", "--out", p(tmp.path())]);
    assert_eq!(text.lines().count(), 4, "{text}");
    assert!(tmp.path().join("scan.csv").exists());
}

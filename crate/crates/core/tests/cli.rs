use std::path::{Path, PathBuf};

use clap::Parser;
use serde_json::Value;
use sha2::{Digest, Sha256};

use qvd::cli::{execute, Cli, RunReport};
use qvd::tensor::{read_tensor, write_tensor};
use qvd::Tensor;

fn parse(args: &[&str]) -> Cli {
    Cli::try_parse_from(std::iter::once("qvd").chain(args.iter().copied())).unwrap()
}

fn ok(args: &[&str]) -> RunReport {
    execute(&parse(args)).unwrap_or_else(|e| panic!("qvd {args:?}: {e}"))
}

fn code(args: &[&str]) -> i32 {
    match Cli::try_parse_from(std::iter::once("qvd").chain(args.iter().copied())) {
        Ok(cli) => execute(&cli).map_or_else(|e| e.exit_code(), |_| 0),
        Err(_) => 2,
    }
}

fn s(p: &Path) -> String {
    p.display().to_string()
}

fn json(p: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(p).unwrap()).unwrap()
}

fn sha(p: &Path) -> Vec<u8> {
    Sha256::digest(std::fs::read(p).unwrap()).to_vec()
}

fn small_traj(dir: &Path) -> PathBuf {
    let spec = dir.join("small.json");
    std::fs::write(&spec, r#"{"kind": "skewed", "steps": 6, "dim": 40}"#).unwrap();
    let out = dir.join("small");
    ok(&["gen", &s(&spec), "--out", &s(&out)]);
    out.join("trajectory")
}

#[test]
fn gen_default_trajectory_has_25_steps() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("g");
    let r = ok(&["gen", "--out", &s(&out)]);
    let steps = std::fs::read_dir(out.join("trajectory"))
        .unwrap()
        .filter(|e| e.as_ref().unwrap().path().extension().is_some_and(|x| x == "qvdt"))
        .count();
    assert_eq!(steps, 25);
    assert_eq!(json(&out.join("spec.json"))["steps"], 25);
    assert_eq!(r.seed, 42);
    assert!(r.artifacts.iter().all(|a| Path::new(a).exists()));
}

#[test]
fn gen_is_reproducible_per_seed() {
    let dir = tempfile::tempdir().unwrap();
    let run = |name: &str, seed: &str| {
        let out = dir.path().join(name);
        ok(&["gen", "--kind", "interchannel", "--seed", seed, "--out", &s(&out)]);
        sha(&out.join("interchannel.qvdt"))
    };
    assert_eq!(run("a", "7"), run("b", "7"));
    assert_ne!(run("a", "7"), run("c", "8"));
}

#[test]
fn gen_all_dense_spec_passes_through() {
    let dir = tempfile::tempdir().unwrap();
    let spec = dir.path().join("dense.json");
    std::fs::write(&spec, r#"{"kind": "skewed", "steps": 3, "dim": 16, "dense_fraction": 1.0}"#).unwrap();
    let out = dir.path().join("d");
    ok(&["gen", &s(&spec), "--out", &s(&out)]);
    let traj = qvd::temporal::load_trajectory(&out.join("trajectory")).unwrap();
    assert!(traj.flatten().iter().all(|v| v.abs() <= 0.002));
}

#[test]
fn gen_rejects_bad_specs() {
    let dir = tempfile::tempdir().unwrap();
    let out = s(&dir.path().join("o"));
    for (name, text) in [
        ("unknown.json", r#"{"kind": "skewed", "stepz": 3}"#),
        ("fraction.json", r#"{"kind": "skewed", "dense_fraction": 0.0}"#),
        ("kind.json", r#"{"kind": "video"}"#),
        ("syntax.json", "{"),
    ] {
        let p = dir.path().join(name);
        std::fs::write(&p, text).unwrap();
        assert_eq!(code(&["gen", &s(&p), "--out", &out]), 2, "{name}");
    }
}

#[test]
fn usage_errors_exit_2() {
    assert_eq!(code(&["frobnicate"]), 2);
    assert_eq!(code(&["calibrate", "x.qvdt"]), 2);
    assert_eq!(qvd::cli::run(["qvd", "--seed", "abc", "gen"]), 2);
}

#[test]
fn minmax_on_byte_range() {
    let dir = tempfile::tempdir().unwrap();
    let x = dir.path().join("bytes.qvdt");
    write_tensor(&Tensor::from_vec((0..=255).map(|v| v as f32).collect()).unwrap(), &x).unwrap();
    let out = dir.path().join("c");
    let r = ok(&["calibrate", &s(&x), "--method", "minmax", "--bits", "8", "--out", &s(&out)]);
    assert_eq!(r.metrics["s"], 1.0);
    assert_eq!(r.metrics["z"], 0.0);
    assert_eq!(r.metrics["roundtrip_mse"], 0.0);
    let p = json(&out.join("params.json"));
    assert_eq!((p["s"].as_f64(), p["z"].as_i64()), (Some(1.0), Some(0)));
}

#[test]
fn mse_trace_argmin_is_reported() {
    let dir = tempfile::tempdir().unwrap();
    let ic = dir.path().join("ic");
    ok(&["gen", "--kind", "interchannel", "--out", &s(&ic)]);
    let out = dir.path().join("m");
    let r = ok(&["calibrate", &s(&ic.join("interchannel.qvdt")), "--method", "mse", "--bits", "4", "--out", &s(&out)]);
    let trace = json(&out.join("trace.json"));
    let best = trace
        .as_array()
        .unwrap()
        .iter()
        .min_by(|a, b| a["objective"].as_f64().unwrap().total_cmp(&b["objective"].as_f64().unwrap()))
        .unwrap();
    let params = json(&out.join("params.json"));
    assert_eq!(best["s"], params["s"]);
    assert_eq!(best["z"], params["z"]);
    assert_eq!(best["objective"].as_f64().unwrap(), r.metrics["objective"]);
}

#[test]
fn htdq_trace_covers_the_grid() {
    let dir = tempfile::tempdir().unwrap();
    let traj = small_traj(dir.path());
    let out = dir.path().join("h");
    let r = ok(&["calibrate", &s(&traj), "--method", "htdq", "--beta-grid", "4", "--out", &s(&out)]);
    let trace = json(&out.join("trace.json"));
    let (ns, nb) = (trace["s_grid"].as_array().unwrap().len(), trace["beta_grid"].as_array().unwrap().len());
    let cands = trace["candidates"].as_array().unwrap();
    assert_eq!(nb, 5);
    assert_eq!(cands.len(), ns * nb);
    assert_eq!(r.metrics["trace_len"], (ns * nb) as f64);
    let min = cands.iter().map(|c| c["objective"].as_f64().unwrap()).fold(f64::INFINITY, f64::min);
    assert_eq!(min, r.metrics["objective"]);
    assert!(r.metrics["objective"] <= r.metrics["baseline_objective"]);
    assert_eq!(json(&out.join("params.json"))["kind"], "hidi");
}

#[test]
fn htdq_needs_a_trajectory() {
    let dir = tempfile::tempdir().unwrap();
    let x = dir.path().join("x.qvdt");
    write_tensor(&Tensor::from_vec(vec![1.0, -2.0, 3.0]).unwrap(), &x).unwrap();
    assert_eq!(code(&["calibrate", &s(&x), "--method", "htdq", "--out", &s(&dir.path().join("o"))]), 2);
}

#[test]
fn degenerate_and_missing_inputs() {
    let dir = tempfile::tempdir().unwrap();
    let out = s(&dir.path().join("o"));
    let x = dir.path().join("const.qvdt");
    write_tensor(&Tensor::from_vec(vec![2.5; 10]).unwrap(), &x).unwrap();
    assert_eq!(code(&["calibrate", &s(&x), "--method", "minmax", "--out", &out]), 3);
    assert_eq!(code(&["calibrate", &s(&x), "--method", "mse", "--out", &out]), 3);
    let missing = s(&dir.path().join("nope.qvdt"));
    assert_eq!(code(&["calibrate", &missing, "--method", "minmax", "--out", &out]), 4);
    let garbage = dir.path().join("garbage.qvdt");
    std::fs::write(&garbage, b"not a tensor").unwrap();
    assert_ne!(code(&["calibrate", &s(&garbage), "--method", "minmax", "--out", &out]), 0);
}

#[test]
fn analyze_coverage_by_formula() {
    let dir = tempfile::tempdir().unwrap();
    let x = dir.path().join("x.qvdt");
    // channel ranges 1 and 2 out of a global range of 2
    let t = Tensor::new(vec![2, 2], vec![0.0, 0.0, 1.0, 2.0]).unwrap().with_channel_axis(1).unwrap();
    write_tensor(&t, &x).unwrap();
    let r = ok(&["analyze", &s(&x), "--analysis", "coverage", "--out", &s(&dir.path().join("a"))]);
    assert_eq!(r.metrics["coverage_mean"], 0.75);
    assert_eq!(r.metrics["coverage_min"], 0.5);
    assert_eq!(r.metrics["coverage_max"], 1.0);
}

#[test]
fn analyze_tdscore_of_identical_steps_is_one() {
    let dir = tempfile::tempdir().unwrap();
    let step = Tensor::from_vec(vec![0.5, -3.0, 0.01, 7.0]).unwrap();
    let traj = qvd::temporal::TemporalTrajectory::new(vec![step; 4]).unwrap();
    let tdir = dir.path().join("t");
    qvd::temporal::save_trajectory(&traj, &tdir).unwrap();
    let r = ok(&["analyze", &s(&tdir), "--analysis", "tdscore", "--out", &s(&dir.path().join("a"))]);
    assert!((r.metrics["tdscore_mean"] - 1.0).abs() < 1e-12);
    assert!((r.metrics["tdscore_min"] - 1.0).abs() < 1e-12);
}

#[test]
fn analyze_levels_needs_params() {
    let dir = tempfile::tempdir().unwrap();
    let traj = small_traj(dir.path());
    let out = s(&dir.path().join("a"));
    assert_eq!(code(&["analyze", &s(&traj), "--analysis", "levels", "--out", &out]), 2);
}

#[test]
fn dense_interval_collapses_under_10_bit_uniform() {
    let dir = tempfile::tempdir().unwrap();
    let g = dir.path().join("g");
    ok(&["gen", "--out", &s(&g)]);
    let traj = g.join("trajectory");
    // per-step calibration: one params file per step
    let mut worst = 0.0f64;
    for t in 1..=25 {
        let step = dir.path().join(format!("step{t}.qvdt"));
        std::fs::copy(traj.join(format!("step_{t:04}.qvdt")), &step).unwrap();
        let cal = dir.path().join(format!("cal{t}"));
        ok(&["calibrate", &s(&step), "--method", "minmax", "--bits", "10", "--out", &s(&cal)]);
        let r = ok(&[
            "analyze",
            &s(&step),
            "--analysis",
            "levels",
            "--params",
            &s(&cal.join("params.json")),
            "--out",
            &s(&dir.path().join(format!("lv{t}"))),
        ]);
        worst = worst.max(r.metrics["levels_max"]);
    }
    assert!(worst <= 2.0, "{worst}");
}

#[test]
fn scri_grid_of_two() {
    let dir = tempfile::tempdir().unwrap();
    let toy = dir.path().join("toy");
    ok(&["gen", "--kind", "toy-block", "--out", &s(&toy)]);
    let out = dir.path().join("s");
    let r = ok(&["scri", &s(&toy.join("block.json")), &s(&toy.join("frames.qvdt")), "--grid", "2", "--out", &s(&out)]);
    let trace = json(&out.join("trace.json"));
    let trace = trace.as_array().unwrap();
    assert_eq!(trace.len(), 2);
    let t = r.metrics["t"];
    let ts: Vec<f64> = trace.iter().map(|c| c["t"].as_f64().unwrap()).collect();
    assert!(ts[0] <= t && t <= ts[1]);
    let best = trace
        .iter()
        .min_by(|a, b| a["objective"].as_f64().unwrap().total_cmp(&b["objective"].as_f64().unwrap()))
        .unwrap();
    assert_eq!(best["t"].as_f64().unwrap(), t);
    assert_eq!(json(&out.join("scale.json"))["t"].as_f64().unwrap(), t);
    let folded = qvd::scri::AffineBlock::load(&out.join("folded_block.json")).unwrap();
    assert_eq!(folded.channels(), 64);
}

#[test]
fn scri_default_grid_bounds_and_argmin() {
    let dir = tempfile::tempdir().unwrap();
    let toy = dir.path().join("toy");
    ok(&["gen", "--kind", "toy-block", "--out", &s(&toy)]);
    let out = dir.path().join("s");
    let r = ok(&["scri", &s(&toy.join("block.json")), &s(&toy.join("frames.qvdt")), "--out", &s(&out)]);
    let trace = json(&out.join("trace.json"));
    let trace = trace.as_array().unwrap();
    assert_eq!(trace.len(), 100);
    let t = r.metrics["t"];
    assert!(r.metrics["channel_max_min"] <= t && t <= r.metrics["channel_max_max"]);
    let first_best = trace
        .iter()
        .fold(None::<&Value>, |acc, c| match acc {
            Some(a) if a["objective"].as_f64() <= c["objective"].as_f64() => Some(a),
            _ => Some(c),
        })
        .unwrap();
    assert_eq!(first_best["t"].as_f64().unwrap(), t);
    assert!(r.metrics["coverage_after_mean"] > r.metrics["coverage_before_mean"]);
}

#[test]
fn scri_degenerate_channel_maxima_exit_3() {
    let dir = tempfile::tempdir().unwrap();
    // two channels normalize to +-1 in every row, so both maxima coincide
    let block = qvd::scri::AffineBlock::new(
        vec![1.0, 1.0],
        vec![0.0, 0.0],
        Tensor::new(vec![1, 2], vec![1.0, 1.0]).unwrap(),
        vec![0.0],
    )
    .unwrap();
    block.save(dir.path(), "block").unwrap();
    let x = dir.path().join("x.qvdt");
    write_tensor(&Tensor::new(vec![2, 2], vec![0.0, 1.0, 1.0, 0.0]).unwrap(), &x).unwrap();
    let out = s(&dir.path().join("o"));
    assert_eq!(code(&["scri", &s(&dir.path().join("block.json")), &s(&x), "--out", &out]), 3);
}

#[test]
fn footprint_examples() {
    let dir = tempfile::tempdir().unwrap();
    let spec = dir.path().join("fp.json");
    std::fs::write(
        &spec,
        r#"{"layers": [{"name": "mac", "param_count": 1, "macs_per_forward": 1}], "w_bits": 32, "a_bits": 32}"#,
    )
    .unwrap();
    let out = dir.path().join("f");
    let r = ok(&["footprint", &s(&spec), "--out", &s(&out)]);
    assert_eq!(r.metrics["bops"], 1024.0);
    assert_eq!(r.metrics["size_ratio"], 1.0);
    let r = ok(&["footprint", &s(&spec), "--w-bits", "6", "--a-bits", "8", "--out", &s(&out)]);
    assert_eq!(r.metrics["size_ratio"], 0.1875);
    let f = json(&out.join("footprint.json"));
    assert_eq!(f["size_ratio"], serde_json::json!({"num": 3, "den": 16}));

    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, r#"{"layers": [{"name": "x", "param_count": 0, "macs_per_forward": 1}], "w_bits": 8, "a_bits": 8}"#)
        .unwrap();
    assert_eq!(code(&["footprint", &s(&bad), "--out", &s(&out)]), 2);
    let neg = dir.path().join("neg.json");
    std::fs::write(&neg, r#"{"layers": [{"name": "x", "param_count": -4, "macs_per_forward": 1}], "w_bits": 8, "a_bits": 8}"#)
        .unwrap();
    assert_eq!(code(&["footprint", &s(&neg), "--out", &s(&out)]), 2);
}

#[test]
fn report_merges_and_sorts() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b, c) = (dir.path().join("a"), dir.path().join("b"), dir.path().join("c"));
    ok(&["gen", "--kind", "interchannel", "--out", &s(&a)]);
    let x = a.join("interchannel.qvdt");
    ok(&["analyze", &s(&x), "--analysis", "coverage", "--out", &s(&b)]);
    ok(&["gen", "--kind", "interchannel", "--seed", "3", "--out", &s(&c)]);

    let one = dir.path().join("one");
    ok(&["report", &s(&a), "--out", &s(&one)]);
    let table = json(&one.join("summary.json"));
    assert_eq!(table["reports"].as_array().unwrap().len(), 1);
    assert_eq!(table["reports"][0], json(&a.join("report.json")));

    let all = dir.path().join("all");
    let r = ok(&["report", &s(&c), &s(&b), &s(&a.join("report.json")), "--out", &s(&all)]);
    assert_eq!(r.metrics["reports"], 3.0);
    let table = json(&all.join("summary.json"));
    let rows: Vec<(String, u64)> = table["reports"]
        .as_array()
        .unwrap()
        .iter()
        .map(|r| (r["command"].as_str().unwrap().to_string(), r["timestamp_ms"].as_u64().unwrap()))
        .collect();
    let mut sorted = rows.clone();
    sorted.sort();
    assert_eq!(rows, sorted);
    assert_eq!(rows[0].0, "analyze");
    let md = std::fs::read_to_string(all.join("summary.md")).unwrap();
    assert_eq!(md.lines().count(), 5);

    assert_eq!(code(&["report", &s(&dir.path().join("missing")), "--out", &s(&all)]), 2);
}

#[test]
fn config_echo_reproduces_the_run() {
    let dir = tempfile::tempdir().unwrap();
    let first = dir.path().join("first");
    let r = ok(&["gen", "--kind", "toy-block", "--seed", "9", "--out", &s(&first)]);
    let echo = &r.config_echo;
    assert_eq!(echo["global"]["seed"], 9);
    assert_eq!(echo["args"]["kind"], "toy_block");
    let second = dir.path().join("second");
    let seed = echo["global"]["seed"].to_string();
    ok(&["gen", "--kind", "toy-block", "--seed", &seed, "--out", &s(&second)]);
    for f in ["block.json", "block_weight.qvdt", "frames.qvdt", "projection.qvdt", "spec.json"] {
        assert_eq!(sha(&first.join(f)), sha(&second.join(f)), "{f}");
    }
    let frames = read_tensor(first.join("frames.qvdt")).unwrap();
    assert_eq!(frames.shape(), &[16, 64]);
}

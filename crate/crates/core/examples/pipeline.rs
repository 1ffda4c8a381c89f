//! The command flow without the binary: generate, calibrate, analyze and
//! merge the run reports. Artifacts land in a temporary directory.

use clap::Parser;
use qvd::cli::{execute, Cli};

fn run(args: &[&str]) -> qvd::Result<qvd::cli::RunReport> {
    let cli = Cli::try_parse_from(std::iter::once("qvd").chain(args.iter().copied()))
        .map_err(|e| qvd::QvdError::InvalidArgument(e.to_string()))?;
    execute(&cli)
}

fn main() -> qvd::Result<()> {
    let root = std::env::temp_dir().join("qvd-example-pipeline");
    let p = |s: &str| root.join(s).display().to_string();
    std::fs::create_dir_all(&root)?;
    std::fs::write(root.join("spec.json"), r#"{"kind": "skewed", "steps": 8, "dim": 64}"#)?;

    run(&["gen", &p("spec.json"), "--out", &p("gen")])?;
    let cal = run(&["calibrate", &p("gen/trajectory"), "--method", "htdq", "--out", &p("htdq")])?;
    println!("htdq: s = {:.4}, beta = {:.5}", cal.metrics["s"], cal.metrics["beta"]);
    let an = run(&[
        "analyze",
        &p("gen/trajectory"),
        "--analysis",
        "tdscore,levels",
        "--params",
        &p("htdq/params.json"),
        "--out",
        &p("analysis"),
    ])?;
    for (k, v) in &an.metrics {
        println!("  {k:<22} {v:.4}");
    }
    run(&["report", &p("gen"), &p("htdq"), &p("analysis"), "--out", &p("report")])?;
    println!("{}", std::fs::read_to_string(root.join("report/summary.md"))?);
    Ok(())
}

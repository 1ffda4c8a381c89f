use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::analysis::{distinct_values, level_occupancy, middle_indices};
use crate::error::{QvdError, Result};
use crate::fsutil::write_json;
use crate::harness::{
    gen_interchannel, gen_skewed_trajectory, InterChannelSpec, SkewedTemporalSpec, ToyBlock, ToyBlockSpec,
};
use crate::quant::{
    calibrate_minmax, calibrate_mse_uniform, fake_quant, Granularity, ParamsJson, QuantParams,
};
use crate::scri::{channel_max, search_t, AffineBlock, BlockQuantConfig};
use crate::temporal::{
    composite_k, load_trajectory, save_trajectory, search_hidi_params, tdscores, HtdqCandidate, HtdqSearchConfig,
    TemporalTrajectory,
};
use crate::tensor::{coverage_ratio, mse, read_tensor, write_tensor, Tensor};

use super::footprint::{footprint, LayerFootprintSpec};
use super::report::{merge_reports, write_table, RunReport};
use super::{
    AnalyzeArgs, Analysis, CalibrateArgs, FootprintArgs, GenArgs, GenKind, Globals, GranularityArg, Method,
    ReportArgs, ScriArgs,
};

/// Spec file accepted by `gen`, tagged by `"kind"`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum GenSpec {
    Skewed(SkewedTemporalSpec),
    Interchannel(InterChannelSpec),
    ToyBlock(ToyBlockSpec),
}

impl GenSpec {
    fn default_for(kind: GenKind) -> Self {
        match kind {
            GenKind::Skewed => GenSpec::Skewed(Default::default()),
            GenKind::Interchannel => GenSpec::Interchannel(Default::default()),
            GenKind::ToyBlock => GenSpec::ToyBlock(Default::default()),
        }
    }

    fn set_seed(&mut self, seed: u64) {
        match self {
            GenSpec::Skewed(s) => s.seed = seed,
            GenSpec::Interchannel(s) => s.seed = seed,
            GenSpec::ToyBlock(s) => s.seed = seed,
        }
    }
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    Ok(serde_json::from_str(&std::fs::read_to_string(path)?)?)
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

fn min_max(v: &[f64]) -> (f64, f64) {
    v.iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &x| (a.min(x), b.max(x)))
}

enum Input {
    Tensor(Tensor),
    Trajectory(TemporalTrajectory),
}

impl Input {
    fn load(path: &Path) -> Result<Self> {
        if path.is_dir() {
            Ok(Input::Trajectory(load_trajectory(path)?))
        } else {
            Ok(Input::Tensor(read_tensor(path)?))
        }
    }

    /// Trajectories stack into `[T, step shape..]`.
    fn into_tensor(self) -> Result<Tensor> {
        match self {
            Input::Tensor(t) => Ok(t),
            Input::Trajectory(t) => {
                let mut shape = vec![t.len()];
                shape.extend_from_slice(t.step_shape());
                Tensor::new(shape, t.flatten())
            }
        }
    }
}

fn echo(g: &Globals, args: &impl Serialize, resolved: serde_json::Value) -> serde_json::Value {
    json!({ "global": g, "args": args, "resolved": resolved })
}

pub fn cmd_gen(args: &GenArgs, g: &Globals) -> Result<RunReport> {
    let mut spec = match &args.spec {
        Some(p) => read_json::<GenSpec>(p)?,
        None => GenSpec::default_for(args.kind),
    };
    spec.set_seed(g.seed);
    let mut report = RunReport::new("gen", echo(g, args, serde_json::to_value(&spec)?), g.seed);
    let out = &g.out;
    let spec_path = out.join("spec.json");
    write_json(&spec_path, &spec)?;
    report.artifact(&spec_path);
    match &spec {
        GenSpec::Skewed(s) => {
            let traj = gen_skewed_trajectory(s)?;
            report.artifacts(save_trajectory(&traj, &out.join("trajectory"))?);
            let flat = traj.flatten();
            let max_abs = flat.iter().fold(0.0f32, |m, v| m.max(v.abs()));
            report.metric("steps", traj.len() as f64)?;
            report.metric("dim", traj.step_len() as f64)?;
            report.metric("dense_count", s.dense_count() as f64)?;
            report.metric("max_abs", max_abs as f64)?;
            report.metric("tdscore_mean", mean(&tdscores(&traj, crate::temporal::DEFAULT_WINDOW, crate::temporal::DEFAULT_EPS)?))?;
        }
        GenSpec::Interchannel(s) => {
            let x = gen_interchannel(s)?;
            let p = out.join("interchannel.qvdt");
            write_tensor(&x, &p)?;
            report.artifact(&p);
            report.metric("coverage_mean", mean(&coverage_ratio(&x, 1)?))?;
        }
        GenSpec::ToyBlock(s) => {
            let toy = ToyBlock::from_spec(s)?;
            let frames = s.gen_frames()?;
            report.artifacts(toy.block.save(out, "block")?);
            let fp = out.join("frames.qvdt");
            write_tensor(&frames, &fp)?;
            report.artifact(&fp);
            let pp = out.join("projection.qvdt");
            write_tensor(&toy.proj_weight, &pp)?;
            report.artifact(&pp);
            let acts = toy.block.normalize(&frames)?;
            report.metric("post_norm_coverage_mean", mean(&coverage_ratio(&acts, 1)?))?;
        }
    }
    Ok(report)
}

#[derive(Serialize)]
struct HtdqTrace<'a> {
    s_grid: &'a [f64],
    beta_grid: &'a [f64],
    candidates: &'a [HtdqCandidate],
}

pub fn cmd_calibrate(args: &CalibrateArgs, g: &Globals) -> Result<RunReport> {
    let input = Input::load(&args.input)?;
    let out = &g.out;
    let params_path = out.join("params.json");
    let trace_path = out.join("trace.json");
    match args.method {
        Method::Minmax | Method::Mse => {
            let x = input.into_tensor()?;
            let gran = match args.granularity {
                GranularityArg::Tensor => Granularity::Tensor,
                GranularityArg::Channel => Granularity::Channel(
                    args.axis
                        .or(x.channel_axis())
                        .ok_or_else(|| QvdError::arg("per-channel calibration needs --axis"))?,
                ),
            };
            let mut report = RunReport::new("calibrate", echo(g, args, json!({ "granularity": format!("{gran:?}") })), g.seed);
            let params = if args.method == Method::Minmax {
                calibrate_minmax(&x, args.bits, gran)?
            } else {
                if gran != Granularity::Tensor {
                    return Err(QvdError::arg("mse calibration is per-tensor only"));
                }
                let cal = calibrate_mse_uniform(&x, args.bits)?;
                write_json(&trace_path, &cal.trace)?;
                report.artifact(&trace_path);
                let chosen = cal.trace.iter().find(|c| c.objective == cal.objective);
                report.metric("objective", cal.objective)?;
                report.metric("clip_fraction", chosen.map_or(1.0, |c| c.fraction))?;
                report.metric("trace_len", cal.trace.len() as f64)?;
                QuantParams::Uniform(cal.params)
            };
            if let QuantParams::Uniform(p) = &params {
                report.metric("s", p.scale)?;
                report.metric("z", p.zero_point as f64)?;
            }
            report.metric("roundtrip_mse", mse(&x, &fake_quant(&x, &params)?)?)?;
            write_json(&params_path, &params.to_json())?;
            report.artifact(&params_path);
            Ok(report)
        }
        Method::Htdq => {
            let Input::Trajectory(traj) = input else {
                return Err(QvdError::arg("htdq calibration needs a trajectory directory"));
            };
            let cfg = HtdqSearchConfig {
                window: args.window,
                bits: args.bits,
                s_step_exponent: args.s_step,
                beta_grid_size: args.beta_grid,
                eps: args.eps,
            };
            let mut report = RunReport::new("calibrate", echo(g, args, serde_json::to_value(cfg)?), g.seed);
            let found = search_hidi_params(&traj, &cfg)?;
            write_json(&params_path, &QuantParams::HiDi(found.params).to_json())?;
            write_json(
                &trace_path,
                &HtdqTrace {
                    s_grid: &found.s_grid,
                    beta_grid: &found.beta_grid,
                    candidates: &found.trace,
                },
            )?;
            report.artifact(&params_path);
            report.artifact(&trace_path);
            report.metric("objective", found.objective)?;
            report.metric("s", found.params.scale)?;
            report.metric("beta", found.params.beta)?;
            report.metric("s_grid_len", found.s_grid.len() as f64)?;
            report.metric("beta_grid_len", found.beta_grid.len() as f64)?;
            report.metric("trace_len", found.trace.len() as f64)?;
            report.metric("baseline_objective", found.trace[0].objective)?;
            Ok(report)
        }
    }
}

fn load_params(path: &Option<PathBuf>) -> Result<Option<QuantParams>> {
    path.as_ref()
        .map(|p| QuantParams::from_json(&read_json::<ParamsJson>(p)?))
        .transpose()
}

pub fn cmd_analyze(args: &AnalyzeArgs, g: &Globals) -> Result<RunReport> {
    let params = load_params(&args.params)?;
    if args.analyses.contains(&Analysis::Levels) && params.is_none() {
        return Err(QvdError::arg("levels analysis needs --params"));
    }
    let input = Input::load(&args.input)?;
    let mut report = RunReport::new("analyze", echo(g, args, json!(null)), g.seed);
    let mut doc = serde_json::Map::new();
    let steps: Vec<Tensor> = match &input {
        Input::Tensor(t) => vec![t.clone()],
        Input::Trajectory(t) => t.steps().to_vec(),
    };
    for analysis in &args.analyses {
        match analysis {
            Analysis::Coverage => {
                let x = match &input {
                    Input::Tensor(t) => t.clone(),
                    Input::Trajectory(_) => Input::load(&args.input)?.into_tensor()?,
                };
                let axis = args
                    .axis
                    .or(x.channel_axis())
                    .ok_or_else(|| QvdError::arg("coverage needs --axis for an untagged tensor"))?;
                let cov = coverage_ratio(&x, axis)?;
                let (lo, hi) = min_max(&cov);
                report.metric("coverage_mean", mean(&cov))?;
                report.metric("coverage_min", lo)?;
                report.metric("coverage_max", hi)?;
                doc.insert("coverage".into(), json!({ "axis": axis, "per_channel": cov }));
            }
            Analysis::Tdscore => {
                let Input::Trajectory(traj) = &input else {
                    return Err(QvdError::arg("tdscore needs a trajectory directory"));
                };
                let scored = match &params {
                    Some(p) => traj.map_steps(|_, s| fake_quant(s, p))?,
                    None => traj.clone(),
                };
                let scores = tdscores(&scored, args.window, args.eps)?;
                let (lo, hi) = min_max(&scores);
                report.metric("tdscore_mean", mean(&scores))?;
                report.metric("tdscore_min", lo)?;
                report.metric("tdscore_max", hi)?;
                if params.is_some() {
                    report.metric("composite_k", composite_k(traj, &scored, args.window, args.eps)?)?;
                }
                doc.insert("tdscore".into(), json!({ "window": args.window, "scores": scores }));
            }
            Analysis::Levels => {
                let p = params.as_ref().expect("checked above");
                let mut levels = Vec::with_capacity(steps.len());
                let mut distinct = Vec::with_capacity(steps.len());
                for s in &steps {
                    levels.push(level_occupancy(s, p, args.fraction)? as f64);
                    let idx = middle_indices(s.data(), args.fraction)?;
                    distinct.push(distinct_values(fake_quant(s, p)?.data(), Some(&idx)) as f64);
                }
                let (lo, hi) = min_max(&levels);
                report.metric("levels_min", lo)?;
                report.metric("levels_max", hi)?;
                report.metric("levels_mean", mean(&levels))?;
                report.metric("distinct_values_mean", mean(&distinct))?;
                doc.insert(
                    "levels".into(),
                    json!({ "fraction": args.fraction, "per_step": levels, "distinct_values": distinct }),
                );
            }
        }
    }
    let path = g.out.join("analysis.json");
    write_json(&path, &doc)?;
    report.artifact(&path);
    Ok(report)
}

pub fn cmd_scri(args: &ScriArgs, g: &Globals) -> Result<RunReport> {
    let block = AffineBlock::load(&args.block)?;
    let calib = read_tensor(&args.calib)?;
    let cfg = BlockQuantConfig {
        act_bits: args.act_bits,
        weight_bits: args.weight_bits,
    };
    let mut report = RunReport::new("scri", echo(g, args, serde_json::to_value(cfg)?), g.seed);
    let found = search_t(&block, &calib, &cfg, args.grid)?;
    let out = &g.out;
    let scale_path = out.join("scale.json");
    write_json(&scale_path, &found.scale)?;
    report.artifact(&scale_path);
    report.artifacts(found.folded.save(out, "folded_block")?);
    let trace_path = out.join("trace.json");
    write_json(&trace_path, &found.trace)?;
    report.artifact(&trace_path);

    let acts = block.normalize(&calib)?;
    let cmax = channel_max(&acts, 1)?;
    let (lo, hi) = min_max(&cmax);
    report.metric("t", found.scale.t)?;
    report.metric("objective", found.objective)?;
    report.metric("objective_at_t_min", found.trace[0].objective)?;
    report.metric("objective_at_t_max", found.trace[found.trace.len() - 1].objective)?;
    report.metric("channel_max_min", lo)?;
    report.metric("channel_max_max", hi)?;
    report.metric("coverage_before_mean", mean(&coverage_ratio(&acts, 1)?))?;
    report.metric("coverage_after_mean", mean(&coverage_ratio(&found.folded.normalize(&calib)?, 1)?))?;
    Ok(report)
}

pub fn cmd_footprint(args: &FootprintArgs, g: &Globals) -> Result<RunReport> {
    let mut spec: LayerFootprintSpec = read_json(&args.spec)?;
    if let Some(w) = args.w_bits {
        spec.w_bits = w;
    }
    if let Some(a) = args.a_bits {
        spec.a_bits = a;
    }
    let mut report = RunReport::new("footprint", echo(g, args, serde_json::to_value(&spec)?), g.seed);
    let f = footprint(&spec)?;
    let path = g.out.join("footprint.json");
    write_json(&path, &f)?;
    report.artifact(&path);
    report.metric("size_bits", f.size_bits as f64)?;
    report.metric("size_bytes", f.size_bytes.value())?;
    report.metric("bops", f.bops as f64)?;
    report.metric("size_ratio", f.size_ratio.value())?;
    report.metric("bops_ratio", f.bops_ratio.value())?;
    Ok(report)
}

pub fn cmd_report(args: &ReportArgs, g: &Globals) -> Result<RunReport> {
    let table = merge_reports(&args.inputs)?;
    let mut report = RunReport::new("report", echo(g, args, json!(null)), g.seed);
    report.artifacts(write_table(&table, &g.out)?);
    report.metric("reports", table.reports.len() as f64)?;
    Ok(report)
}

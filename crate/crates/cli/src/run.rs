//! Dispatch of a parsed config to the library, and artifact writing.

use std::collections::BTreeMap;
use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use setquant::geometry::{boundary_band, write_cover_csv, write_mask_csv, DeltaCover};
use setquant::oracle::{brute_force_invariant, discretize_actions, disturbance_samples, rasterize, OracleOptions};
use setquant::quantification::{
    quantify_adaptive, quantify_delta_pruning, quantify_spe, quantify_vanilla, AdaptiveOptions, QuantOutcome, RunReport,
    SpeOptions,
};
use setquant::scenario::{ActionSet, Policy, ScenarioSystem, SvKind, Trajectory};
use setquant::validation::{
    sample_size_probabilistic, validate_delta, validate_eps, Region, SamplingOptions, ValidationVerdict,
};

use crate::config::{to_box, Algorithm, RunConfig};
use crate::error::{CliError, Code, ConfigError};

pub const REPORT: &str = "report.json";
pub const CELLS: &str = "cells.csv";
pub const ORACLE: &str = "oracle.csv";
pub const SLICES: &str = "slices.csv";
pub const TRAJECTORIES: &str = "trajectories.ndjson";

/// Environment variable that overrides `output_dir`.
pub const OUTPUT_ENV: &str = "SETQUANT_OUTPUT";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CounterexampleRecord {
    pub seed: u64,
    pub start: Vec<f64>,
    pub violation: serde_json::Value,
    pub trajectory: Trajectory,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationRecord {
    pub result: bool,
    pub n_samples: u64,
    pub epsilon: Option<f64>,
    pub beta: Option<f64>,
    pub delta: Option<f64>,
    pub under_sampled: bool,
    pub boundary_band: bool,
    pub policy: String,
    pub counterexample: Option<CounterexampleRecord>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleRecord {
    pub grid_cells: usize,
    pub invariant_cells: usize,
    pub iterations: usize,
    pub horizon: usize,
    pub n_actions: usize,
    pub n_disturbances: usize,
    pub fixed_point: bool,
}

/// Contents of report.json.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub config_digest: String,
    pub scope_digest: String,
    pub algorithm: String,
    pub system: String,
    pub sv_policy: Option<SvKind>,
    pub seed: u64,
    pub exit_code: i32,
    pub status: String,
    pub domain: Vec<[f64; 2]>,
    /// Cell radius of cells.csv, when written.
    pub resolution: Option<f64>,
    pub cell_count: usize,
    pub volume: f64,
    pub quantification: Option<RunReport>,
    pub validation: Option<ValidationRecord>,
    pub oracle: Option<OracleRecord>,
    pub warnings: Vec<String>,
    pub artifacts: Vec<String>,
}

#[derive(Debug)]
pub struct RunOutcome {
    pub exit_code: i32,
    pub report: Report,
    pub output_dir: PathBuf,
}

/// `flag`, then the environment override, then the config value.
pub fn resolve_output_dir(cfg: &RunConfig, flag: Option<&Path>) -> PathBuf {
    if let Some(p) = flag {
        return p.to_path_buf();
    }
    match std::env::var_os(OUTPUT_ENV) {
        Some(v) if !v.is_empty() => PathBuf::from(v),
        _ => cfg.output_dir.clone(),
    }
}

/// Scenario policy for validation and replay: Γ* when adversarial, else uniform Γ.
pub fn scenario_policy(sys: &ScenarioSystem, cfg: &RunConfig) -> Policy {
    if cfg.options.adversarial {
        Policy::adversarial_for(sys)
    } else {
        Policy::Uniform(sys.actions().clone())
    }
}

/// Action set handed to the quantifiers, plus a warning when Γ* has no closed form.
fn scenario_actions(sys: &ScenarioSystem, cfg: &RunConfig) -> (ActionSet, Option<String>) {
    if !cfg.options.adversarial {
        return (sys.actions().clone(), None);
    }
    match sys.closed_form_adversarial() {
        Some(p) => (ActionSet::Points(p), None),
        None => (sys.actions().clone(), Some(format!("no closed-form adversarial set for `{}`; sampling from the full action set", sys.name()))),
    }
}

struct Produced {
    exit_code: i32,
    status: String,
    cover: Option<DeltaCover>,
    mask: Option<(DeltaCover, Vec<bool>)>,
    cell_count: usize,
    volume: f64,
    quantification: Option<RunReport>,
    validation: Option<ValidationRecord>,
    oracle: Option<OracleRecord>,
    trajectories: Vec<Trajectory>,
    warnings: Vec<String>,
}

fn validation_record(v: &ValidationVerdict, band: bool, policy: &str) -> ValidationRecord {
    ValidationRecord {
        result: v.result,
        n_samples: v.samples_used,
        epsilon: v.params.epsilon,
        beta: v.params.beta,
        delta: v.params.delta,
        under_sampled: v.under_sampled,
        boundary_band: band,
        policy: policy.to_string(),
        counterexample: v.counterexample.as_ref().map(|c| CounterexampleRecord {
            seed: c.seed,
            start: c.start.clone(),
            violation: serde_json::to_value(c.violation).expect("plain data"),
            trajectory: c.trajectory.clone(),
        }),
    }
}

fn validated(v: ValidationVerdict, cover: Option<DeltaCover>, volume: f64, band: bool, policy: &str, warnings: Vec<String>) -> Produced {
    let record = validation_record(&v, band, policy);
    let trajectories = v.counterexample.map(|c| vec![c.trajectory]).unwrap_or_default();
    Produced {
        exit_code: if v.result { 0 } else { 1 },
        status: v.result.to_string(),
        cell_count: cover.as_ref().map_or(0, DeltaCover::active_count),
        cover,
        mask: None,
        volume,
        quantification: None,
        validation: Some(record),
        oracle: None,
        trajectories,
        warnings,
    }
}

fn quantified(out: QuantOutcome, mut warnings: Vec<String>) -> Produced {
    warnings.extend(out.report.warnings.iter().cloned());
    Produced {
        exit_code: if out.report.converged { 0 } else { 1 },
        status: if out.report.converged { "converged" } else { "non-converged" }.to_string(),
        cell_count: out.report.cell_count,
        volume: out.report.volume,
        cover: Some(out.cover),
        mask: None,
        quantification: Some(out.report),
        validation: None,
        oracle: None,
        trajectories: out.trajectories,
        warnings,
    }
}

fn policy_name(cfg: &RunConfig) -> &'static str {
    if cfg.options.adversarial {
        "adversarial"
    } else {
        "uniform"
    }
}

fn execute(cfg: &RunConfig, sys: &ScenarioSystem) -> Result<Produced, CliError> {
    let h = cfg.hyper.to_hyper();
    let o = &cfg.options;
    let dom = to_box("system.state_box", &cfg.system.state_box)?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let n_eps = sample_size_probabilistic(h.epsilon, h.beta)?;
    let mut warnings = Vec::new();
    Ok(match cfg.algorithm {
        Algorithm::ValDelta => {
            let policy = scenario_policy(sys, cfg);
            if !policy.is_deterministic() {
                return Err(ConfigError::new(
                    Code::Domain,
                    "val-delta needs a deterministic scenario policy; set options.adversarial = true",
                )
                .into());
            }
            let cover = DeltaCover::build(&dom, h.delta_min)?;
            let v = validate_delta(sys, &cover, h.k, &policy)?;
            let vol = cover.volume();
            validated(v, Some(cover), vol, false, policy_name(cfg), warnings)
        }
        Algorithm::ValEps => {
            if o.boundary_band {
                warnings.push("boundary_band applies to cover-sampled validation only; ignored by val-eps".into());
            }
            let policy = scenario_policy(sys, cfg);
            let opts = SamplingOptions { claimed: Some((h.epsilon, h.beta)), band: None, workers: o.workers };
            let v = validate_eps(sys, Region::Box(&dom), n_eps, h.k, &policy, &mut rng, &opts)?;
            validated(v, None, dom.volume(), false, policy_name(cfg), warnings)
        }
        Algorithm::ValEpsDelta => {
            let policy = scenario_policy(sys, cfg);
            let cover = DeltaCover::build(&dom, h.delta_min)?;
            let band = if o.boundary_band { Some(boundary_band(&dom, sys.one_step_bound())?) } else { None };
            let opts = SamplingOptions { claimed: Some((h.epsilon, h.beta)), band, workers: o.workers };
            let v = validate_eps(sys, Region::Cover(&cover), n_eps, h.k, &policy, &mut rng, &opts)?;
            let vol = cover.volume();
            validated(v, Some(cover), vol, o.boundary_band, policy_name(cfg), warnings)
        }
        Algorithm::QntVs => {
            let (actions, w) = scenario_actions(sys, cfg);
            warnings.extend(w);
            quantified(quantify_vanilla(sys, &dom, &actions, &h, cfg.seed)?, warnings)
        }
        Algorithm::QntDp => {
            let (actions, w) = scenario_actions(sys, cfg);
            warnings.extend(w);
            quantified(quantify_delta_pruning(sys, &dom, &actions, &h, cfg.seed)?, warnings)
        }
        Algorithm::QntAe => {
            let (actions, w) = scenario_actions(sys, cfg);
            warnings.extend(w);
            let ao = AdaptiveOptions { forced_seed: o.forced_seed.clone(), workers: o.workers, timing: o.timing };
            quantified(quantify_adaptive(sys, &dom, &actions, &h, &ao, cfg.seed)?, warnings)
        }
        Algorithm::QntSpe => {
            let so = SpeOptions {
                prioritized: o.prioritized,
                power: o.power,
                replay: o.replay,
                replay_cap: o.replay_cap,
                adversarial: o.adversarial,
                workers: o.workers,
                min_feature_volume: o.min_feature_volume,
                keep_trajectories: o.trajectories,
                timing: o.timing,
            };
            quantified(quantify_spe(sys, &dom, sys.actions(), &h, &so, cfg.seed)?, warnings)
        }
        Algorithm::Oracle => oracle(cfg, sys, &dom)?,
    })
}

fn oracle(cfg: &RunConfig, sys: &ScenarioSystem, dom: &setquant::geometry::BoxRegion) -> Result<Produced, CliError> {
    let h = &cfg.hyper;
    let grid = DeltaCover::build(dom, h.delta_min)?;
    let actions = match (cfg.options.adversarial, sys.closed_form_adversarial()) {
        (true, Some(p)) => p,
        _ => discretize_actions(sys.actions()),
    };
    let disturbances = disturbance_samples(sys);
    let horizon = cfg.options.oracle_horizon.unwrap_or(h.k);
    let opts = OracleOptions { horizon, workers: cfg.options.workers, ..Default::default() };
    let mut record = OracleRecord {
        grid_cells: grid.len(),
        invariant_cells: 0,
        iterations: opts.max_iter,
        horizon,
        n_actions: actions.len(),
        n_disturbances: disturbances.len(),
        fixed_point: false,
    };
    let mut warnings = Vec::new();
    if cfg.options.adversarial && sys.closed_form_adversarial().is_none() {
        warnings.push(format!("no closed-form adversarial set for `{}`; using the discretized action set", sys.name()));
    }
    match brute_force_invariant(sys, &grid, &actions, &disturbances, &opts) {
        Ok(set) => {
            record.invariant_cells = set.cell_count();
            record.iterations = set.iterations;
            record.fixed_point = true;
            let centers = set.grid.centers().iter().zip(&set.mask).filter(|(_, m)| **m).map(|(c, _)| c.clone()).collect();
            let cover = DeltaCover::from_centers(dom.clone(), h.delta_min, centers)?;
            Ok(Produced {
                exit_code: 0,
                status: "converged".into(),
                cell_count: set.cell_count(),
                volume: set.volume(),
                cover: Some(cover),
                mask: Some((set.grid, set.mask)),
                quantification: None,
                validation: None,
                oracle: Some(record),
                trajectories: Vec::new(),
                warnings,
            })
        }
        Err(setquant::Error::NoFixedPoint(n)) => {
            warnings.push(format!("no fixed point within {n} sweeps"));
            Ok(Produced {
                exit_code: 1,
                status: "non-converged".into(),
                cell_count: 0,
                volume: 0.0,
                cover: None,
                mask: None,
                quantification: None,
                validation: None,
                oracle: Some(record),
                trajectories: Vec::new(),
                warnings,
            })
        }
        Err(e) => Err(e.into()),
    }
}

fn digest_line(digest: &str) -> String {
    format!("# config_digest={digest}\n")
}

fn write_file(path: &Path, f: impl FnOnce(&mut BufWriter<fs::File>) -> Result<(), CliError>) -> Result<(), CliError> {
    let file = fs::File::create(path).map_err(|e| CliError::io(path, e))?;
    let mut w = BufWriter::new(file);
    f(&mut w)?;
    w.flush().map_err(|e| CliError::io(path, e))
}

/// Lines of lattice cells parallel to each axis: for every line that meets the
/// set, the extreme member centres along that axis.
pub fn slice_rows(cover: &DeltaCover) -> Vec<(usize, Vec<f64>, f64, f64, usize)> {
    if cover.active_count() == 0 {
        return Vec::new();
    }
    let grid = match DeltaCover::build(cover.domain(), cover.radius()) {
        Ok(g) => g,
        Err(_) => return Vec::new(),
    };
    let mask = rasterize(cover, &grid);
    let dim = grid.dim();
    let mut rows = Vec::new();
    for axis in 0..dim {
        // Keyed by the bit patterns of the other coordinates, in lattice order.
        let mut lines: BTreeMap<Vec<u64>, (Vec<f64>, f64, f64, usize)> = BTreeMap::new();
        for (c, _) in grid.centers().iter().zip(&mask).filter(|(_, m)| **m) {
            let key: Vec<u64> = (0..dim).filter(|&i| i != axis).map(|i| ordered_bits(c[i])).collect();
            let e = lines.entry(key).or_insert_with(|| (c.clone(), f64::INFINITY, f64::NEG_INFINITY, 0));
            e.1 = e.1.min(c[axis]);
            e.2 = e.2.max(c[axis]);
            e.3 += 1;
        }
        for (_, (c, lo, hi, n)) in lines {
            rows.push((axis, c, lo, hi, n));
        }
    }
    rows
}

/// Bit pattern whose unsigned order matches the float order.
fn ordered_bits(x: f64) -> u64 {
    let b = x.to_bits();
    if b >> 63 == 1 {
        !b
    } else {
        b | (1 << 63)
    }
}

fn write_slices(path: &Path, digest: &str, cover: &DeltaCover, axis_names: &[String]) -> Result<(), CliError> {
    write_file(path, |w| {
        let io = |e| CliError::io(path, e);
        w.write_all(digest_line(digest).as_bytes()).map_err(io)?;
        writeln!(w, "slice_axis,{},min,max,cells", axis_names.join(",")).map_err(io)?;
        for (axis, c, lo, hi, n) in slice_rows(cover) {
            let coords: Vec<String> = c.iter().enumerate().map(|(i, x)| if i == axis { String::new() } else { x.to_string() }).collect();
            writeln!(w, "{},{},{lo},{hi},{n}", axis_names[axis], coords.join(",")).map_err(io)?;
        }
        Ok(())
    })
}

#[derive(Serialize)]
struct TrajectoryLine<'a> {
    config_digest: &'a str,
    #[serde(flatten)]
    trajectory: &'a Trajectory,
}

/// Runs `cfg` and writes its artifacts into `out_dir`.
///
/// Configuration problems surface as errors (exit code 2); a completed run
/// reports 0 (true/converged) or 1 (false/non-converged).
pub fn dispatch(cfg: &RunConfig, out_dir: &Path) -> Result<RunOutcome, CliError> {
    cfg.validate()?;
    let sys = cfg.build_system()?;
    let produced = execute(cfg, &sys)?;
    let digest = cfg.digest();

    let mut artifacts = vec![REPORT.to_string()];
    if produced.cover.is_some() {
        artifacts.push(CELLS.into());
    }
    if produced.mask.is_some() {
        artifacts.push(ORACLE.into());
    }
    let slices = produced.cover.is_some() && !cfg.algorithm.is_validation();
    if slices {
        artifacts.push(SLICES.into());
    }
    if cfg.options.trajectories {
        artifacts.push(TRAJECTORIES.into());
    }
    artifacts.sort();

    let report = Report {
        config_digest: digest.clone(),
        scope_digest: cfg.scope_digest(),
        algorithm: cfg.algorithm.name().to_string(),
        system: cfg.system.name.clone(),
        sv_policy: cfg.system.sv_policy,
        seed: cfg.seed,
        exit_code: produced.exit_code,
        status: produced.status,
        domain: cfg.system.state_box.clone(),
        resolution: produced.cover.as_ref().map(DeltaCover::radius),
        cell_count: produced.cell_count,
        volume: produced.volume,
        quantification: produced.quantification,
        validation: produced.validation,
        oracle: produced.oracle,
        warnings: produced.warnings,
        artifacts,
    };

    fs::create_dir_all(out_dir).map_err(|e| CliError::io(out_dir, e))?;
    if let Some(cover) = &produced.cover {
        let path = out_dir.join(CELLS);
        write_file(&path, |w| {
            w.write_all(digest_line(&digest).as_bytes()).map_err(|e| CliError::io(&path, e))?;
            Ok(write_cover_csv(w, cover)?)
        })?;
        if slices {
            write_slices(&out_dir.join(SLICES), &digest, cover, sys.axis_names())?;
        }
    }
    if let Some((grid, mask)) = &produced.mask {
        let path = out_dir.join(ORACLE);
        write_file(&path, |w| {
            w.write_all(digest_line(&digest).as_bytes()).map_err(|e| CliError::io(&path, e))?;
            Ok(write_mask_csv(w, grid, mask)?)
        })?;
    }
    if cfg.options.trajectories {
        let path = out_dir.join(TRAJECTORIES);
        write_file(&path, |w| {
            for t in &produced.trajectories {
                let line = serde_json::to_string(&TrajectoryLine { config_digest: &digest, trajectory: t }).expect("plain data");
                writeln!(w, "{line}").map_err(|e| CliError::io(&path, e))?;
            }
            Ok(())
        })?;
    }
    let path = out_dir.join(REPORT);
    let mut text = serde_json::to_string_pretty(&report).expect("plain data");
    text.push('\n');
    fs::write(&path, text).map_err(|e| CliError::io(&path, e))?;

    Ok(RunOutcome { exit_code: report.exit_code, report, output_dir: out_dir.to_path_buf() })
}

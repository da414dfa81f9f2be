//! Run configuration: TOML in, validated [`RunConfig`] out.

use std::fmt;
use std::path::PathBuf;

use serde::{Serialize, Serializer};
use sha2::{Digest, Sha256};
use toml::{Table, Value};

use setquant::scenario::{
    make_lead_follow, make_three_vehicle, toy_flip, toy_identity, toy_shift, toy_shrink, toy_threshold, toy_two_basins,
    ActionSet, DrivingConfig, FacetClass, ScenarioSystem, SvKind,
};
use setquant::geometry::BoxRegion;
use setquant::quantification::Hyper;

use crate::error::{Code, ConfigError};

pub const SYSTEMS: [&str; 8] =
    ["lead_follow", "three_vehicle", "toy_identity", "toy_shift", "toy_shrink", "toy_flip", "toy_threshold", "toy_two_basins"];

const TOP_KEYS: [&str; 6] = ["algorithm", "seed", "output_dir", "system", "hyper", "options"];
const SYSTEM_KEYS: [&str; 5] = ["name", "state_box", "action_box", "facets", "sv_policy"];
const HYPER_KEYS: [&str; 9] = ["epsilon", "beta", "delta0", "gamma", "delta_min", "K", "N", "omega_bar", "dt"];
const OPTION_KEYS: [&str; 12] = [
    "prioritized",
    "power",
    "replay",
    "replay_cap",
    "adversarial",
    "boundary_band",
    "trajectories",
    "timing",
    "workers",
    "min_feature_volume",
    "oracle_horizon",
    "forced_seed",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Algorithm {
    #[serde(rename = "val-delta")]
    ValDelta,
    #[serde(rename = "val-eps")]
    ValEps,
    #[serde(rename = "val-eps-delta")]
    ValEpsDelta,
    #[serde(rename = "qnt-vs")]
    QntVs,
    #[serde(rename = "qnt-dp")]
    QntDp,
    #[serde(rename = "qnt-ae")]
    QntAe,
    #[serde(rename = "qnt-spe")]
    QntSpe,
    #[serde(rename = "oracle")]
    Oracle,
}

impl Algorithm {
    pub const ALL: [Algorithm; 8] = [
        Algorithm::ValDelta,
        Algorithm::ValEps,
        Algorithm::ValEpsDelta,
        Algorithm::QntVs,
        Algorithm::QntDp,
        Algorithm::QntAe,
        Algorithm::QntSpe,
        Algorithm::Oracle,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Algorithm::ValDelta => "val-delta",
            Algorithm::ValEps => "val-eps",
            Algorithm::ValEpsDelta => "val-eps-delta",
            Algorithm::QntVs => "qnt-vs",
            Algorithm::QntDp => "qnt-dp",
            Algorithm::QntAe => "qnt-ae",
            Algorithm::QntSpe => "qnt-spe",
            Algorithm::Oracle => "oracle",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|a| a.name() == s)
    }

    pub fn is_validation(&self) -> bool {
        matches!(self, Algorithm::ValDelta | Algorithm::ValEps | Algorithm::ValEpsDelta)
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SystemConfig {
    pub name: String,
    pub state_box: Vec<[f64; 2]>,
    /// `None` for systems whose action set is a finite point set.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub action_box: Option<Vec<[f64; 2]>>,
    pub facets: Vec<[FacetClass; 2]>,
    /// Driving systems only.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sv_policy: Option<SvKind>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HyperConfig {
    pub epsilon: f64,
    pub beta: f64,
    pub delta0: f64,
    pub gamma: f64,
    pub delta_min: f64,
    #[serde(rename = "K")]
    pub k: usize,
    #[serde(rename = "N")]
    pub n: u64,
    pub omega_bar: f64,
    pub dt: f64,
}

impl HyperConfig {
    pub fn to_hyper(&self) -> Hyper {
        Hyper {
            epsilon: self.epsilon,
            beta: self.beta,
            delta0: self.delta0,
            gamma: self.gamma,
            delta_min: self.delta_min,
            k: self.k,
            n: self.n,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Options {
    pub prioritized: bool,
    pub power: f64,
    pub replay: bool,
    pub replay_cap: usize,
    /// Sample scenario actions from Γ* instead of Γ.
    pub adversarial: bool,
    /// Restrict cover-sampled validation to the boundary band.
    pub boundary_band: bool,
    /// Write trajectories.ndjson.
    pub trajectories: bool,
    /// Record wall time in the report (breaks byte reproducibility).
    pub timing: bool,
    pub workers: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub min_feature_volume: Option<f64>,
    /// Macro-step of the oracle; defaults to K.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub oracle_horizon: Option<usize>,
    /// First seed point of qnt-ae.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub forced_seed: Option<Vec<f64>>,
}

impl Default for Options {
    fn default() -> Self {
        Options {
            prioritized: true,
            power: 1.0,
            replay: true,
            replay_cap: 1 << 16,
            adversarial: false,
            boundary_band: false,
            trajectories: false,
            timing: false,
            workers: 1,
            min_feature_volume: None,
            oracle_horizon: None,
            forced_seed: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunConfig {
    pub algorithm: Algorithm,
    #[serde(serialize_with = "seed_repr")]
    pub seed: u64,
    pub output_dir: PathBuf,
    pub system: SystemConfig,
    pub hyper: HyperConfig,
    pub options: Options,
}

/// TOML integers are signed; seeds past `i64::MAX` are written as strings.
fn seed_repr<S: Serializer>(seed: &u64, s: S) -> Result<S::Ok, S::Error> {
    match i64::try_from(*seed) {
        Ok(v) => s.serialize_i64(v),
        Err(_) => s.serialize_str(&seed.to_string()),
    }
}

fn err(code: Code, msg: impl Into<String>) -> ConfigError {
    ConfigError::new(code, msg)
}

fn domain(msg: impl Into<String>) -> ConfigError {
    err(Code::Domain, msg)
}

fn bounds(b: &BoxRegion) -> Vec<[f64; 2]> {
    b.lower().iter().zip(b.upper()).map(|(l, h)| [*l, *h]).collect()
}

pub fn to_box(what: &str, b: &[[f64; 2]]) -> Result<BoxRegion, ConfigError> {
    let pairs: Vec<(f64, f64)> = b.iter().map(|p| (p[0], p[1])).collect();
    BoxRegion::from_bounds(&pairs).map_err(|e| domain(format!("{what}: {e}")))
}

/// The built-in system with its default overrides, and the default hyper-parameters.
fn builtin(name: &str) -> Option<(ScenarioSystem, HyperConfig)> {
    let driving = |sys: ScenarioSystem, delta0: f64, delta_min: f64| {
        let dt = sys.timestep();
        let h = HyperConfig { epsilon: 0.001, beta: 0.1, delta0, gamma: 0.5, delta_min, k: 40, n: 10_000_000, omega_bar: 0.0, dt };
        (sys, h)
    };
    let toy = |sys: ScenarioSystem| {
        let h = HyperConfig { epsilon: 0.01, beta: 0.1, delta0: 2.0, gamma: 0.5, delta_min: 0.25, k: 5, n: 1_000_000, omega_bar: 0.0, dt: 1.0 };
        (sys, h)
    };
    let unit_square = || BoxRegion::from_bounds(&[(0.0, 2.0), (0.0, 2.0)]).expect("valid box");
    Some(match name {
        "lead_follow" => driving(make_lead_follow(&DrivingConfig::default()).ok()?, 4.0, 1.0),
        "three_vehicle" => driving(make_three_vehicle(&DrivingConfig::default()).ok()?, 3.0, 1.5),
        "toy_identity" => toy(toy_identity(unit_square())),
        "toy_shift" => toy(toy_shift()),
        "toy_shrink" => toy(toy_shrink(0.1)),
        "toy_flip" => toy(toy_flip()),
        "toy_threshold" => toy(toy_threshold()),
        "toy_two_basins" => toy(toy_two_basins()),
        _ => return None,
    })
}

fn is_driving(name: &str) -> bool {
    matches!(name, "lead_follow" | "three_vehicle")
}

fn type_error(key: &str, want: &str) -> ConfigError {
    err(Code::Parse, format!("{key}: expected {want}"))
}

fn get_f64(v: &Value, key: &str) -> Result<f64, ConfigError> {
    match v {
        Value::Float(x) => Ok(*x),
        Value::Integer(i) => Ok(*i as f64),
        _ => Err(type_error(key, "a number")),
    }
}

fn get_bool(v: &Value, key: &str) -> Result<bool, ConfigError> {
    v.as_bool().ok_or_else(|| type_error(key, "true or false"))
}

fn get_u64(v: &Value, key: &str) -> Result<u64, ConfigError> {
    match v {
        Value::Integer(i) if *i >= 0 => Ok(*i as u64),
        Value::Integer(i) => Err(domain(format!("{key} must be non-negative, got {i}"))),
        _ => Err(type_error(key, "an integer")),
    }
}

fn get_str<'a>(v: &'a Value, key: &str) -> Result<&'a str, ConfigError> {
    v.as_str().ok_or_else(|| type_error(key, "a string"))
}

fn get_vec(v: &Value, key: &str) -> Result<Vec<f64>, ConfigError> {
    let a = v.as_array().ok_or_else(|| type_error(key, "an array of numbers"))?;
    a.iter().map(|x| get_f64(x, key)).collect()
}

fn get_box(v: &Value, key: &str) -> Result<Vec<[f64; 2]>, ConfigError> {
    let a = v.as_array().ok_or_else(|| type_error(key, "an array of [lo, hi] pairs"))?;
    a.iter()
        .map(|p| match get_vec(p, key)?.as_slice() {
            [lo, hi] => Ok([*lo, *hi]),
            _ => Err(type_error(key, "an array of [lo, hi] pairs")),
        })
        .collect()
}

fn facet_class(s: &str, key: &str) -> Result<FacetClass, ConfigError> {
    match s {
        "unsafe" => Ok(FacetClass::Unsafe),
        "truncate" => Ok(FacetClass::Truncate),
        other => Err(domain(format!("{key}: facet class must be \"unsafe\" or \"truncate\", got \"{other}\""))),
    }
}

fn get_facets(v: &Value, key: &str) -> Result<Vec<[FacetClass; 2]>, ConfigError> {
    let a = v.as_array().ok_or_else(|| type_error(key, "an array of [lower, upper] class pairs"))?;
    a.iter()
        .map(|p| {
            let pair = p.as_array().filter(|x| x.len() == 2).ok_or_else(|| type_error(key, "an array of [lower, upper] class pairs"))?;
            Ok([facet_class(get_str(&pair[0], key)?, key)?, facet_class(get_str(&pair[1], key)?, key)?])
        })
        .collect()
}

fn get_seed(v: &Value) -> Result<u64, ConfigError> {
    match v {
        Value::Integer(_) => get_u64(v, "seed"),
        Value::String(s) => s.trim().parse::<u64>().map_err(|_| domain(format!("seed must be a 64-bit unsigned integer, got \"{s}\""))),
        _ => Err(type_error("seed", "an integer")),
    }
}

fn sub_table<'a>(t: &'a Table, key: &str) -> Result<Option<&'a Table>, ConfigError> {
    match t.get(key) {
        None => Ok(None),
        Some(Value::Table(s)) => Ok(Some(s)),
        Some(_) => Err(type_error(key, "a table")),
    }
}

fn check_keys(t: &Table, prefix: &str, allowed: &[&str]) -> Result<(), ConfigError> {
    for k in t.keys() {
        if !allowed.contains(&k.as_str()) {
            let path = if prefix.is_empty() { k.clone() } else { format!("{prefix}.{k}") };
            return Err(err(Code::UnknownKey, format!("unknown key `{path}`")));
        }
    }
    Ok(())
}

/// Parses and validates a TOML run configuration. Unset values come from the
/// built-in table of the named system.
pub fn parse_config(text: &str) -> Result<RunConfig, ConfigError> {
    let doc: Table = text.parse().map_err(|e: toml::de::Error| err(Code::Parse, e.message().to_string()))?;
    check_keys(&doc, "", &TOP_KEYS)?;
    let sys_t = sub_table(&doc, "system")?;
    let hyper_t = sub_table(&doc, "hyper")?;
    let opt_t = sub_table(&doc, "options")?;
    if let Some(t) = sys_t {
        check_keys(t, "system", &SYSTEM_KEYS)?;
    }
    if let Some(t) = hyper_t {
        check_keys(t, "hyper", &HYPER_KEYS)?;
    }
    if let Some(t) = opt_t {
        check_keys(t, "options", &OPTION_KEYS)?;
    }

    let name = sys_t
        .and_then(|t| t.get("name"))
        .ok_or_else(|| err(Code::MissingKey, "`system.name` is required"))
        .and_then(|v| get_str(v, "system.name"))?;
    let (sys, mut hyper) =
        builtin(name).ok_or_else(|| err(Code::UnknownSystem, format!("unknown system `{name}` (known: {})", SYSTEMS.join(", "))))?;
    let algorithm = match doc.get("algorithm") {
        None => return Err(err(Code::MissingKey, "`algorithm` is required")),
        Some(v) => {
            let s = get_str(v, "algorithm")?;
            Algorithm::parse(s).ok_or_else(|| {
                let known: Vec<&str> = Algorithm::ALL.iter().map(|a| a.name()).collect();
                err(Code::UnknownAlgorithm, format!("unknown algorithm `{s}` (known: {})", known.join(", ")))
            })?
        }
    };
    let seed = doc.get("seed").ok_or_else(|| err(Code::MissingSeed, "`seed` is required; runs never default to a clock seed"))?;
    let seed = get_seed(seed)?;
    let output_dir = match doc.get("output_dir") {
        Some(v) => PathBuf::from(get_str(v, "output_dir")?),
        None => PathBuf::from("out"),
    };

    let mut system = SystemConfig {
        name: name.to_string(),
        state_box: bounds(sys.state_box()),
        action_box: match sys.actions() {
            ActionSet::Box(b) => Some(bounds(b)),
            ActionSet::Points(_) => None,
        },
        facets: sys.facets().to_vec(),
        sv_policy: is_driving(name).then_some(SvKind::Brake),
    };
    if let Some(t) = sys_t {
        if let Some(v) = t.get("state_box") {
            system.state_box = get_box(v, "system.state_box")?;
        }
        if let Some(v) = t.get("action_box") {
            system.action_box = Some(get_box(v, "system.action_box")?);
        }
        if let Some(v) = t.get("facets") {
            system.facets = get_facets(v, "system.facets")?;
        }
        if let Some(v) = t.get("sv_policy") {
            system.sv_policy = Some(match get_str(v, "system.sv_policy")? {
                "brake" => SvKind::Brake,
                "idm" => SvKind::Idm,
                other => return Err(domain(format!("system.sv_policy must be \"brake\" or \"idm\", got \"{other}\""))),
            });
        }
    }

    if let Some(t) = hyper_t {
        for (k, v) in t {
            let key = format!("hyper.{k}");
            match k.as_str() {
                "epsilon" => hyper.epsilon = get_f64(v, &key)?,
                "beta" => hyper.beta = get_f64(v, &key)?,
                "delta0" => hyper.delta0 = get_f64(v, &key)?,
                "gamma" => hyper.gamma = get_f64(v, &key)?,
                "delta_min" => hyper.delta_min = get_f64(v, &key)?,
                "K" => hyper.k = get_u64(v, &key)? as usize,
                "N" => hyper.n = get_u64(v, &key)?,
                "omega_bar" => hyper.omega_bar = get_f64(v, &key)?,
                "dt" => hyper.dt = get_f64(v, &key)?,
                _ => unreachable!("keys checked above"),
            }
        }
    }

    let mut options = Options::default();
    if let Some(t) = opt_t {
        for (k, v) in t {
            let key = format!("options.{k}");
            match k.as_str() {
                "prioritized" => options.prioritized = get_bool(v, &key)?,
                "power" => options.power = get_f64(v, &key)?,
                "replay" => options.replay = get_bool(v, &key)?,
                "replay_cap" => options.replay_cap = get_u64(v, &key)? as usize,
                "adversarial" => options.adversarial = get_bool(v, &key)?,
                "boundary_band" => options.boundary_band = get_bool(v, &key)?,
                "trajectories" => options.trajectories = get_bool(v, &key)?,
                "timing" => options.timing = get_bool(v, &key)?,
                "workers" => options.workers = get_u64(v, &key)? as usize,
                "min_feature_volume" => options.min_feature_volume = Some(get_f64(v, &key)?),
                "oracle_horizon" => options.oracle_horizon = Some(get_u64(v, &key)? as usize),
                "forced_seed" => options.forced_seed = Some(get_vec(v, &key)?),
                _ => unreachable!("keys checked above"),
            }
        }
    }

    let cfg = RunConfig { algorithm, seed, output_dir, system, hyper, options };
    cfg.validate()?;
    Ok(cfg)
}

fn open_unit(name: &str, v: f64) -> Result<(), ConfigError> {
    if v > 0.0 && v < 1.0 {
        Ok(())
    } else {
        Err(domain(format!("{name} must lie in (0, 1), got {v}")))
    }
}

fn positive(name: &str, v: f64) -> Result<(), ConfigError> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(domain(format!("{name} must be positive, got {v}")))
    }
}

impl RunConfig {
    /// Domain checks shared by the parser and programmatic callers.
    pub fn validate(&self) -> Result<(), ConfigError> {
        let h = &self.hyper;
        open_unit("hyper.epsilon", h.epsilon)?;
        open_unit("hyper.beta", h.beta)?;
        open_unit("hyper.gamma", h.gamma)?;
        positive("hyper.delta0", h.delta0)?;
        positive("hyper.delta_min", h.delta_min)?;
        positive("hyper.dt", h.dt)?;
        if h.delta_min > h.delta0 {
            return Err(domain(format!("hyper.delta_min ({}) exceeds hyper.delta0 ({})", h.delta_min, h.delta0)));
        }
        if h.k < 2 {
            return Err(domain(format!("hyper.K must be at least 2, got {}", h.k)));
        }
        if h.n == 0 {
            return Err(domain("hyper.N must be at least 1"));
        }
        if !(h.omega_bar >= 0.0 && h.omega_bar.is_finite()) {
            return Err(domain(format!("hyper.omega_bar must be non-negative, got {}", h.omega_bar)));
        }

        let s = &self.system;
        let Some((base, _)) = builtin(&s.name) else {
            return Err(err(Code::UnknownSystem, format!("unknown system `{}`", s.name)));
        };
        let state_box = to_box("system.state_box", &s.state_box)?;
        if s.facets.len() != state_box.dim() {
            return Err(domain(format!("system.facets has {} entries for a {}-dimensional box", s.facets.len(), state_box.dim())));
        }
        if let Some(ab) = &s.action_box {
            let ab = to_box("system.action_box", ab)?;
            if matches!(base.actions(), ActionSet::Points(_)) {
                return Err(domain(format!("system.action_box: `{}` has a fixed finite action set", s.name)));
            }
            if ab.dim() != base.actions().dim() {
                return Err(domain(format!("system.action_box must have {} axes", base.actions().dim())));
            }
        }
        if is_driving(&s.name) {
            if s.sv_policy.is_none() {
                return Err(domain("system.sv_policy is required for driving systems"));
            }
        } else {
            if s.sv_policy.is_some() {
                return Err(domain(format!("system.sv_policy does not apply to `{}`", s.name)));
            }
            if h.omega_bar != 0.0 {
                return Err(domain(format!("hyper.omega_bar must be 0 for `{}`", s.name)));
            }
            if h.dt != 1.0 {
                return Err(domain(format!("hyper.dt is fixed at 1 for `{}`", s.name)));
            }
            if s.name != "toy_identity" && state_box.dim() != 1 {
                return Err(domain(format!("system.state_box: `{}` is one-dimensional", s.name)));
            }
        }

        let o = &self.options;
        if !(o.power >= 1.0 && o.power.is_finite()) {
            return Err(domain(format!("options.power must be at least 1, got {}", o.power)));
        }
        if o.workers == 0 {
            return Err(domain("options.workers must be at least 1"));
        }
        if o.replay_cap == 0 {
            return Err(domain("options.replay_cap must be at least 1"));
        }
        if let Some(v) = o.min_feature_volume {
            positive("options.min_feature_volume", v)?;
        }
        if o.oracle_horizon == Some(0) {
            return Err(domain("options.oracle_horizon must be at least 1"));
        }
        if let Some(p) = &o.forced_seed {
            if !state_box.contains(p) {
                return Err(domain("options.forced_seed must lie inside system.state_box"));
            }
        }
        Ok(())
    }

    /// Canonical TOML; `parse_config(&cfg.to_toml())` gives back `cfg`.
    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config is representable in TOML")
    }

    /// SHA-256 of the canonical form, ignoring the output location.
    pub fn digest(&self) -> String {
        let mut c = self.clone();
        c.output_dir = PathBuf::new();
        hex::encode(Sha256::digest(c.to_toml().as_bytes()))
    }

    /// Digest of what a result measures: system geometry, action box and
    /// resolution. Runs with equal scope digests are comparable cell by cell.
    pub fn scope_digest(&self) -> String {
        #[derive(Serialize)]
        struct Scope<'a> {
            name: &'a str,
            state_box: &'a [[f64; 2]],
            action_box: &'a Option<Vec<[f64; 2]>>,
            facets: &'a [[FacetClass; 2]],
            delta_min: f64,
            k: usize,
            omega_bar: f64,
            dt: f64,
        }
        let s = Scope {
            name: &self.system.name,
            state_box: &self.system.state_box,
            action_box: &self.system.action_box,
            facets: &self.system.facets,
            delta_min: self.hyper.delta_min,
            k: self.hyper.k,
            omega_bar: self.hyper.omega_bar,
            dt: self.hyper.dt,
        };
        hex::encode(Sha256::digest(serde_json::to_vec(&s).expect("plain data").as_slice()))
    }

    /// Builds the configured system.
    pub fn build_system(&self) -> Result<ScenarioSystem, ConfigError> {
        let s = &self.system;
        let state_box = to_box("system.state_box", &s.state_box)?;
        let action_box = s.action_box.as_deref().map(|b| to_box("system.action_box", b)).transpose()?;
        let built = if is_driving(&s.name) {
            let cfg = DrivingConfig {
                state_box: Some(state_box),
                action_box,
                facets: Some(s.facets.clone()),
                sv: s.sv_policy.unwrap_or_default(),
                omega_bar: self.hyper.omega_bar,
                dt: Some(self.hyper.dt),
            };
            if s.name == "lead_follow" {
                make_lead_follow(&cfg)
            } else {
                make_three_vehicle(&cfg)
            }
        } else {
            let (base, _) = builtin(&s.name).ok_or_else(|| err(Code::UnknownSystem, format!("unknown system `{}`", s.name)))?;
            let mut spec = base.spec().clone();
            if state_box.dim() != spec.state_box.dim() {
                spec.axis_names = (0..state_box.dim()).map(|i| format!("x{i}")).collect();
            }
            spec.state_box = state_box;
            spec.facets = s.facets.clone();
            if let Some(ab) = action_box {
                if s.name == "toy_shrink" {
                    spec.one_step_bound = 0.5 + ab.lower()[0].abs().max(ab.upper()[0].abs());
                }
                spec.actions = ActionSet::Box(ab);
            }
            ScenarioSystem::new(spec)
        };
        built.map_err(|e| domain(e.to_string()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn minimal(extra: &str) -> String {
        format!("algorithm = \"qnt-spe\"\nseed = 7\n{extra}\n[system]\nname = \"lead_follow\"\n")
    }

    #[test]
    fn minimal_lead_follow_defaults() {
        let c = parse_config(&minimal("")).unwrap();
        assert_eq!(c.system.state_box, vec![[0.0, 16.0], [0.0, 16.0], [5.5, 60.0]]);
        assert_eq!(c.system.action_box, Some(vec![[-5.0, 3.0]]));
        use FacetClass::*;
        assert_eq!(c.system.facets, vec![[Truncate, Truncate], [Truncate, Truncate], [Unsafe, Truncate]]);
        assert_eq!(c.system.sv_policy, Some(SvKind::Brake));
        assert_eq!(c.hyper.epsilon, 0.001);
        assert_eq!(c.hyper.beta, 0.1);
        assert_eq!(c.hyper.delta_min, 1.0);
        assert_eq!(c.hyper.dt, 0.1);
        assert_eq!(c.hyper.omega_bar, 0.0);
        assert_eq!(c.seed, 7);
        assert_eq!(c.algorithm, Algorithm::QntSpe);
    }

    #[test]
    fn diagnostic_codes() {
        let code = |t: &str| parse_config(t).unwrap_err().code;
        assert_eq!(code(&minimal("[hyper]\nepsilon = 1.5")), Code::Domain);
        assert_eq!(code(&minimal("[hyper]\ngamma = 1.0")), Code::Domain);
        assert_eq!(code(&minimal("[hyper]\ngamma = 0.0")), Code::Domain);
        assert_eq!(code(&minimal("[hyper]\nepsilon = \"x\"")), Code::Parse);
        assert_eq!(code(&minimal("[hyper]\neps = 0.1")), Code::UnknownKey);
        assert_eq!(code(&minimal("colour = 3")), Code::UnknownKey);
        assert_eq!(code(&minimal("[options]\nfast = true")), Code::UnknownKey);
        assert_eq!(code("algorithm = \"qnt-spe\"\n[system]\nname = \"lead_follow\"\n"), Code::MissingSeed);
        assert_eq!(code("algorithm = \"qnt-spe\"\nseed = 1\n"), Code::MissingKey);
        assert_eq!(code("algorithm = \"nope\"\nseed = 1\n[system]\nname = \"lead_follow\"\n"), Code::UnknownAlgorithm);
        assert_eq!(code("algorithm = \"oracle\"\nseed = 1\n[system]\nname = \"moon\"\n"), Code::UnknownSystem);
        assert_eq!(code("seed = = 1"), Code::Parse);
        assert_eq!(code(&minimal("seed = -3").replacen("seed = 7\n", "", 1)), Code::Domain);
    }

    #[test]
    fn unknown_key_names_full_path() {
        let e = parse_config(&minimal("[hyper]\nbogus = 1")).unwrap_err();
        assert!(e.message.contains("hyper.bogus"), "{}", e.message);
    }

    #[test]
    fn overrides_apply() {
        let t = "algorithm = \"oracle\"\nseed = 1\n[system]\nname = \"three_vehicle\"\nsv_policy = \"idm\"\n\
                 state_box = [[0, 6], [0, 6], [0, 6], [5, 25], [-25, -5]]\n[hyper]\nK = 12\ndelta0 = 2.5\ndelta_min = 2.5\n";
        let c = parse_config(t).unwrap();
        assert_eq!(c.system.sv_policy, Some(SvKind::Idm));
        assert_eq!(c.hyper.k, 12);
        let sys = c.build_system().unwrap();
        assert_eq!(sys.dim(), 5);
    }

    #[test]
    fn toy_restrictions() {
        let base = "algorithm = \"val-delta\"\nseed = 1\n[system]\nname = \"toy_shift\"\n";
        assert!(parse_config(base).is_ok());
        assert_eq!(parse_config(&format!("{base}sv_policy = \"idm\"\n")).unwrap_err().code, Code::Domain);
        assert_eq!(parse_config(&format!("{base}action_box = [[0, 1]]\n")).unwrap_err().code, Code::Domain);
        assert_eq!(parse_config(&format!("{base}[hyper]\nomega_bar = 0.1\n")).unwrap_err().code, Code::Domain);
    }

    #[test]
    fn shrink_action_override_updates_step_bound() {
        let t = "algorithm = \"val-eps\"\nseed = 1\n[system]\nname = \"toy_shrink\"\naction_box = [[-0.3, 0.3]]\n";
        let sys = parse_config(t).unwrap().build_system().unwrap();
        assert!((sys.one_step_bound() - 0.8).abs() < 1e-12);
    }

    #[test]
    fn round_trip_and_digests() {
        let mut c = parse_config(&minimal("[options]\nforced_seed = [1, 2, 30]\nmin_feature_volume = 3.5")).unwrap();
        assert_eq!(parse_config(&c.to_toml()).unwrap(), c);
        let d = c.digest();
        c.output_dir = PathBuf::from("elsewhere");
        assert_eq!(c.digest(), d);
        let scope = c.scope_digest();
        c.seed = 8;
        c.system.sv_policy = Some(SvKind::Idm);
        assert_ne!(c.digest(), d);
        assert_eq!(c.scope_digest(), scope);
        c.hyper.delta_min = 0.5;
        assert_ne!(c.scope_digest(), scope);
    }

    #[test]
    fn large_seeds_survive() {
        let mut c = parse_config(&minimal("")).unwrap();
        c.seed = u64::MAX;
        assert_eq!(parse_config(&c.to_toml()).unwrap().seed, u64::MAX);
    }
}

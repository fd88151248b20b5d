//! Flat TOML run configuration.
//!
//! Keys are either dimensionless (Δ = 1) or, with `physical_units`, given in
//! MHz and ns and converted here through [`PhysicalScale`].

use std::path::PathBuf;

use thiserror::Error;
use toml::{Table, Value};

use crate::experiments::{log_grid, SweepSpec, DEFAULT_BRACKET, DEFAULT_TOL, REFERENCE_GAMMA_TILDES};
use crate::model::Dissipator;
use crate::units::PhysicalScale;

/// Ω/Δ used by `simulate` when no amplitude is configured.
pub const DEFAULT_SIMULATE_OMEGA: f64 = 0.1;
pub const DEFAULT_GRID: (f64, f64, usize) = (0.02, 1.2, 60);
pub const DEFAULT_SAMPLE_STRIDE: usize = 10;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ConfigError {
    #[error("cannot parse config: {0}")]
    Syntax(String),
    #[error("unknown key `{0}`")]
    UnknownKey(String),
    #[error("key `{key}`: {msg}")]
    Invalid { key: String, msg: String },
    #[error("{0}")]
    Conflict(String),
}

fn invalid(key: &str, msg: impl Into<String>) -> ConfigError {
    ConfigError::Invalid { key: key.to_string(), msg: msg.into() }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Mode {
    Simulate,
    Sweep,
    Optimize,
    Check,
}

impl Mode {
    pub fn name(self) -> &'static str {
        match self {
            Mode::Simulate => "simulate",
            Mode::Sweep => "sweep",
            Mode::Optimize => "optimize",
            Mode::Check => "check",
        }
    }

    fn parse(s: &str) -> Option<Mode> {
        [Mode::Simulate, Mode::Sweep, Mode::Optimize, Mode::Check]
            .into_iter()
            .find(|m| m.name() == s)
    }

    /// Default output file when none is configured.
    pub fn default_output(self) -> Option<PathBuf> {
        match self {
            Mode::Check => None,
            m => Some(PathBuf::from(format!("{}.csv", m.name()))),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub mode: Mode,
    pub physical_units: bool,
    /// Present when inputs were given in MHz/ns.
    pub scale: Option<PhysicalScale>,
    /// Shared drive and sweep parameters. For `simulate` the grid, rate list
    /// and cross list each hold exactly one entry.
    pub spec: SweepSpec,
    pub bracket: (f64, f64),
    pub tol: f64,
    pub output: Option<PathBuf>,
    pub emit_trajectory: bool,
    pub sample_stride: usize,
}

impl RunConfig {
    /// Defaults for `mode` with no keys set.
    pub fn defaults(mode: Mode) -> Self {
        let (lo, hi, n) = DEFAULT_GRID;
        let single = mode == Mode::Simulate;
        RunConfig {
            mode,
            physical_units: false,
            scale: None,
            spec: SweepSpec {
                omega_over_delta_grid: if single {
                    vec![DEFAULT_SIMULATE_OMEGA]
                } else {
                    log_grid(lo, hi, n)
                },
                gamma_tilde_list: if single { vec![0.0] } else { REFERENCE_GAMMA_TILDES.to_vec() },
                cross_variants: if mode == Mode::Sweep { vec![true, false] } else { vec![true] },
                ..SweepSpec::default()
            },
            bracket: DEFAULT_BRACKET,
            tol: DEFAULT_TOL,
            output: mode.default_output(),
            emit_trajectory: false,
            sample_stride: DEFAULT_SAMPLE_STRIDE,
        }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        self.spec
            .validate()
            .map_err(|e| ConfigError::Conflict(e.to_string()))?;
        let single = |n: usize, what: &str| -> Result<(), ConfigError> {
            if n != 1 {
                return Err(ConfigError::Conflict(format!(
                    "simulate needs exactly one {what}, got {n}"
                )));
            }
            Ok(())
        };
        match self.mode {
            Mode::Simulate => {
                single(self.spec.omega_over_delta_grid.len(), "amplitude")?;
                single(self.spec.gamma_tilde_list.len(), "gamma_tilde")?;
                single(self.spec.cross_variants.len(), "cross setting")?;
            }
            Mode::Optimize => {
                if self.spec.cross_variants != [true] {
                    return Err(invalid("cross", "the optimizer always runs with cross-coupling on"));
                }
                let (lo, hi) = self.bracket;
                if !(lo > 0.0 && lo < hi && hi <= 2.0) {
                    return Err(invalid("bracket_lo", format!("need 0 < lo < hi <= 2, got ({lo}, {hi})")));
                }
                if !(self.tol >= 1e-4) {
                    return Err(invalid("tol", format!("must be >= 1e-4, got {}", self.tol)));
                }
            }
            Mode::Sweep | Mode::Check => {}
        }
        if self.sample_stride == 0 {
            return Err(invalid("sample_stride", "must be >= 1"));
        }
        Ok(())
    }
}

fn number(key: &str, v: &Value) -> Result<f64, ConfigError> {
    match v {
        Value::Float(x) => Ok(*x),
        Value::Integer(i) => Ok(*i as f64),
        _ => Err(invalid(key, "expected a number")),
    }
}

fn number_list(key: &str, v: &Value) -> Result<Vec<f64>, ConfigError> {
    match v {
        Value::Array(a) => a.iter().map(|x| number(key, x)).collect(),
        x => Ok(vec![number(key, x)?]),
    }
}

fn flag(key: &str, v: &Value) -> Result<bool, ConfigError> {
    match v {
        Value::Boolean(b) => Ok(*b),
        Value::String(s) => parse_on_off(s).ok_or_else(|| invalid(key, format!("expected on/off, got {s:?}"))),
        _ => Err(invalid(key, "expected a boolean or \"on\"/\"off\"")),
    }
}

pub fn parse_on_off(s: &str) -> Option<bool> {
    match s {
        "on" | "true" => Some(true),
        "off" | "false" => Some(false),
        _ => None,
    }
}

fn flag_list(key: &str, v: &Value) -> Result<Vec<bool>, ConfigError> {
    match v {
        Value::Array(a) => a.iter().map(|x| flag(key, x)).collect(),
        x => Ok(vec![flag(key, x)?]),
    }
}

fn string<'a>(key: &str, v: &'a Value) -> Result<&'a str, ConfigError> {
    v.as_str().ok_or_else(|| invalid(key, "expected a string"))
}

fn positive(key: &str, x: f64) -> Result<f64, ConfigError> {
    if x > 0.0 && x.is_finite() {
        Ok(x)
    } else {
        Err(invalid(key, format!("must be > 0, got {x}")))
    }
}

const DIMENSIONLESS_KEYS: &[&str] = &[
    "mode",
    "physical_units",
    "delta_anh",
    "a",
    "t_s_over_sigma",
    "delta01_over_delta",
    "delta12_over_delta",
    "window_mult",
    "dissipator",
    "gamma_tilde",
    "cross",
    "omega_over_delta",
    "sigma_times_delta",
    "omega_grid",
    "grid_min",
    "grid_max",
    "grid_points",
    "bracket_lo",
    "bracket_hi",
    "tol",
    "output",
    "emit_trajectory",
    "sample_stride",
];

const PHYSICAL_KEYS: &[&str] = &["delta_mhz", "gamma_mhz", "omega_mhz", "sigma_ns", "omega_grid_mhz"];

/// Keys that only make sense for one mode.
fn key_mode(key: &str) -> Option<Mode> {
    match key {
        "omega_over_delta" | "omega_mhz" | "sigma_times_delta" | "sigma_ns" | "emit_trajectory"
        | "sample_stride" => Some(Mode::Simulate),
        "omega_grid" | "omega_grid_mhz" | "grid_min" | "grid_max" | "grid_points" => Some(Mode::Sweep),
        "bracket_lo" | "bracket_hi" | "tol" => Some(Mode::Optimize),
        _ => None,
    }
}

/// Parses a flat TOML document for the given mode and fills every default.
pub fn parse_config(text: &str, mode: Mode) -> Result<RunConfig, ConfigError> {
    let table: Table = text.parse().map_err(|e: toml::de::Error| ConfigError::Syntax(e.to_string()))?;
    for (k, v) in &table {
        if !DIMENSIONLESS_KEYS.contains(&k.as_str()) && !PHYSICAL_KEYS.contains(&k.as_str()) {
            return Err(ConfigError::UnknownKey(k.clone()));
        }
        if matches!(v, Value::Table(_)) || matches!(v, Value::Array(a) if a.iter().any(|x| x.is_array() || x.is_table())) {
            return Err(invalid(k, "nested values are not allowed"));
        }
        if let Some(m) = key_mode(k) {
            if m != mode {
                return Err(invalid(k, format!("only applies to mode {}", m.name())));
            }
        }
    }
    let get = |k: &str| table.get(k);

    if let Some(v) = get("mode") {
        let s = string("mode", v)?;
        match Mode::parse(s) {
            Some(m) if m == mode => {}
            Some(m) => {
                return Err(ConfigError::Conflict(format!(
                    "config is for mode {}, but {} was requested",
                    m.name(),
                    mode.name()
                )))
            }
            None => return Err(invalid("mode", format!("unknown mode {s:?}"))),
        }
    }

    let has_physical = PHYSICAL_KEYS.iter().any(|k| table.contains_key(*k));
    let physical_units = match get("physical_units") {
        Some(v) => flag("physical_units", v)?,
        None => has_physical,
    };
    if !physical_units && has_physical {
        return Err(ConfigError::Conflict(
            "MHz/ns keys need physical_units = true".into(),
        ));
    }
    if let Some(v) = get("delta_anh") {
        let x = number("delta_anh", v)?;
        if x != 1.0 {
            return Err(invalid("delta_anh", format!("dimensionless inputs require delta_anh = 1, got {x}")));
        }
    }
    let scale = if physical_units {
        let v = get("delta_mhz").ok_or_else(|| invalid("delta_mhz", "required with physical_units"))?;
        let d = number("delta_mhz", v)?;
        Some(PhysicalScale::new(d).map_err(|e| invalid("delta_mhz", e.to_string()))?)
    } else {
        None
    };

    let exclusive = |a: &str, b: &str| -> Result<(), ConfigError> {
        if table.contains_key(a) && table.contains_key(b) {
            return Err(ConfigError::Conflict(format!("`{a}` and `{b}` are mutually exclusive")));
        }
        Ok(())
    };
    exclusive("gamma_tilde", "gamma_mhz")?;
    exclusive("omega_over_delta", "omega_mhz")?;
    exclusive("sigma_times_delta", "sigma_ns")?;
    exclusive("omega_grid", "omega_grid_mhz")?;
    for k in ["a", "sigma_times_delta", "sigma_ns"] {
        for other in ["a", "sigma_times_delta", "sigma_ns"] {
            if k < other {
                exclusive(k, other)?;
            }
        }
    }
    for k in ["grid_min", "grid_max", "grid_points"] {
        exclusive("omega_grid", k)?;
        exclusive("omega_grid_mhz", k)?;
    }

    let mut cfg = RunConfig::defaults(mode);
    cfg.physical_units = physical_units;
    cfg.scale = scale;
    let spec = &mut cfg.spec;

    if let Some(v) = get("a") {
        spec.a_param = positive("a", number("a", v)?)?;
    }
    if let Some(v) = get("t_s_over_sigma") {
        spec.t_s_over_sigma = number("t_s_over_sigma", v)?;
    }
    let det = |k: &str| get(k).map(|v| number(k, v)).transpose();
    spec.detunings = (
        det("delta01_over_delta")?.unwrap_or(0.0),
        det("delta12_over_delta")?.unwrap_or(0.0),
    );
    if let Some(v) = get("window_mult") {
        spec.window_mult = number("window_mult", v)?;
        if !(spec.window_mult >= 3.0) {
            return Err(invalid("window_mult", format!("must be >= 3, got {}", spec.window_mult)));
        }
    }
    if let Some(v) = get("dissipator") {
        spec.dissipator = match string("dissipator", v)? {
            "cascade" => Dissipator::PopulationCascade,
            "lindblad" => Dissipator::LindbladCascade,
            s => return Err(invalid("dissipator", format!("expected \"cascade\" or \"lindblad\", got {s:?}"))),
        };
    }

    if let Some(v) = get("gamma_tilde") {
        spec.gamma_tilde_list = number_list("gamma_tilde", v)?;
    }
    if let (Some(v), Some(sc)) = (get("gamma_mhz"), scale) {
        spec.gamma_tilde_list = number_list("gamma_mhz", v)?
            .into_iter()
            .map(|g| sc.gamma_tilde(g))
            .collect();
    }
    if let Some(g) = spec.gamma_tilde_list.iter().find(|g| !(**g >= 0.0)) {
        return Err(invalid("gamma_tilde", format!("must be >= 0, got {g}")));
    }
    if let Some(v) = get("cross") {
        spec.cross_variants = flag_list("cross", v)?;
    }

    // Single-run amplitude and width.
    if let Some(v) = get("omega_over_delta") {
        spec.omega_over_delta_grid = vec![number("omega_over_delta", v)?];
    }
    if let (Some(v), Some(sc)) = (get("omega_mhz"), scale) {
        spec.omega_over_delta_grid = vec![sc.omega_over_delta(positive("omega_mhz", number("omega_mhz", v)?)?)];
    }
    let sigma = match (get("sigma_times_delta"), get("sigma_ns"), scale) {
        (Some(v), _, _) => Some(positive("sigma_times_delta", number("sigma_times_delta", v)?)?),
        (None, Some(v), Some(sc)) => Some(sc.time_times_delta(positive("sigma_ns", number("sigma_ns", v)?)?)),
        _ => None,
    };
    if let Some(sigma) = sigma {
        spec.a_param = spec.omega_over_delta_grid[0] * sigma;
    }

    // Sweep grid.
    if let Some(v) = get("omega_grid") {
        spec.omega_over_delta_grid = number_list("omega_grid", v)?;
    }
    if let (Some(v), Some(sc)) = (get("omega_grid_mhz"), scale) {
        spec.omega_over_delta_grid = number_list("omega_grid_mhz", v)?
            .into_iter()
            .map(|x| sc.omega_over_delta(x))
            .collect();
    }
    if ["grid_min", "grid_max", "grid_points"].iter().any(|k| table.contains_key(*k)) {
        let (lo, hi, n) = DEFAULT_GRID;
        let lo = det("grid_min")?.unwrap_or(lo);
        let hi = det("grid_max")?.unwrap_or(hi);
        let n = match get("grid_points") {
            Some(Value::Integer(i)) if *i >= 1 => *i as usize,
            Some(_) => return Err(invalid("grid_points", "must be an integer >= 1")),
            None => n,
        };
        if !(lo > 0.0 && lo < hi && hi <= 2.0) {
            return Err(invalid("grid_min", format!("need 0 < grid_min < grid_max <= 2, got ({lo}, {hi})")));
        }
        spec.omega_over_delta_grid = log_grid(lo, hi, n);
    }

    if let Some(v) = get("bracket_lo") {
        cfg.bracket.0 = number("bracket_lo", v)?;
    }
    if let Some(v) = get("bracket_hi") {
        cfg.bracket.1 = number("bracket_hi", v)?;
    }
    if let Some(v) = get("tol") {
        cfg.tol = number("tol", v)?;
    }
    if let Some(v) = get("output") {
        cfg.output = Some(PathBuf::from(string("output", v)?));
    }
    if let Some(v) = get("emit_trajectory") {
        cfg.emit_trajectory = flag("emit_trajectory", v)?;
    }
    if let Some(v) = get("sample_stride") {
        cfg.sample_stride = match v {
            Value::Integer(i) if *i >= 1 => *i as usize,
            _ => return Err(invalid("sample_stride", "must be an integer >= 1")),
        };
    }

    cfg.validate()?;
    Ok(cfg)
}

/// Command-line settings that take precedence over the document.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Overrides {
    pub output: Option<PathBuf>,
    pub cross: Option<bool>,
    pub gamma_tilde: Vec<f64>,
    pub a_param: Option<f64>,
    pub emit_trajectory: bool,
}

impl RunConfig {
    pub fn apply(&mut self, o: &Overrides) -> Result<(), ConfigError> {
        if let Some(p) = &o.output {
            self.output = Some(p.clone());
        }
        if let Some(c) = o.cross {
            self.spec.cross_variants = vec![c];
        }
        if !o.gamma_tilde.is_empty() {
            if let Some(g) = o.gamma_tilde.iter().find(|g| !(**g >= 0.0)) {
                return Err(invalid("--gamma-tilde", format!("must be >= 0, got {g}")));
            }
            let mut g = o.gamma_tilde.clone();
            g.sort_by(f64::total_cmp);
            g.dedup();
            self.spec.gamma_tilde_list = g;
        }
        if let Some(a) = o.a_param {
            self.spec.a_param = positive("--a", a)?;
        }
        if o.emit_trajectory {
            if self.mode != Mode::Simulate {
                return Err(invalid("--emit-trajectory", "only applies to mode simulate"));
            }
            self.emit_trajectory = true;
        }
        self.validate()
    }
}

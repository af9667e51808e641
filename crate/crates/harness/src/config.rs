//! Flat `key = value` configuration files.
//!
//! One assignment per line; `#` starts a comment. Keys are dotted paths
//! such as `physics.beta`. A `[section]` line prefixes the keys that follow
//! it with `section.` until the next section line. Lists are comma
//! separated, optionally wrapped in brackets.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use mhd1d_core::{InitFamily, PhysParams, StepControls};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("line {line}: expected `key = value`, got {text:?}")]
    Syntax { line: usize, text: String },
    #[error("line {line}: key {key:?} assigned twice")]
    Duplicate { key: String, line: usize },
    #[error("line {line}: unknown key {key:?}")]
    Unknown { key: String, line: usize },
    #[error("{key} = {value:?}: {reason}")]
    Invalid {
        key: String,
        value: String,
        reason: String,
    },
    #[error("missing required key {0:?}")]
    Missing(&'static str),
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
}

#[derive(Debug, Clone)]
struct Entry {
    value: String,
    line: usize,
}

/// Parsed assignments, before interpretation.
///
/// Typed getters remove the keys they read, so anything left over after a
/// config has been built is reported as unknown.
#[derive(Debug, Clone, Default)]
pub struct KeyValues {
    entries: BTreeMap<String, Entry>,
    /// Directory of the file the values came from; relative table paths are
    /// resolved against it.
    base_dir: PathBuf,
}

impl KeyValues {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut entries = BTreeMap::new();
        let mut section = String::new();
        for (index, raw) in text.lines().enumerate() {
            let line = index + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            if let Some(name) = content.strip_prefix('[').and_then(|c| c.strip_suffix(']')) {
                if !name.contains('=') {
                    section = name.trim().to_string();
                    continue;
                }
            }
            let Some((key, value)) = content.split_once('=') else {
                return Err(ConfigError::Syntax {
                    line,
                    text: raw.to_string(),
                });
            };
            let key = key.trim();
            if key.is_empty() || key.contains(char::is_whitespace) {
                return Err(ConfigError::Syntax {
                    line,
                    text: raw.to_string(),
                });
            }
            let key = if section.is_empty() {
                key.to_string()
            } else {
                format!("{section}.{key}")
            };
            let value = unquote(value.trim()).to_string();
            if entries.contains_key(&key) {
                return Err(ConfigError::Duplicate { key, line });
            }
            entries.insert(key, Entry { value, line });
        }
        Ok(Self {
            entries,
            base_dir: PathBuf::new(),
        })
    }

    pub fn from_file(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.display().to_string(),
            source,
        })?;
        let mut kv = Self::parse(&text)?;
        kv.base_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Ok(kv)
    }

    /// Sets or replaces a key, as if it had been written in the file.
    pub fn set(&mut self, key: &str, value: &str) {
        self.entries.insert(
            key.to_string(),
            Entry {
                value: value.to_string(),
                line: 0,
            },
        );
    }

    pub fn contains(&self, key: &str) -> bool {
        self.entries.contains_key(key)
    }

    fn take(&mut self, key: &str) -> Option<String> {
        self.entries.remove(key).map(|e| e.value)
    }

    fn take_parsed<T: std::str::FromStr>(&mut self, key: &str, default: T) -> Result<T, ConfigError>
    where
        T::Err: std::fmt::Display,
    {
        match self.take(key) {
            None => Ok(default),
            Some(value) => value.parse().map_err(|e: T::Err| ConfigError::Invalid {
                key: key.to_string(),
                reason: e.to_string(),
                value,
            }),
        }
    }

    fn take_f64(&mut self, key: &str, default: f64) -> Result<f64, ConfigError> {
        self.take_parsed(key, default)
    }

    fn take_bool(&mut self, key: &str, default: bool) -> Result<bool, ConfigError> {
        match self.take(key) {
            None => Ok(default),
            Some(value) => match value.to_ascii_lowercase().as_str() {
                "true" | "yes" | "on" | "1" => Ok(true),
                "false" | "no" | "off" | "0" => Ok(false),
                _ => Err(ConfigError::Invalid {
                    key: key.to_string(),
                    value,
                    reason: "expected true or false".into(),
                }),
            },
        }
    }

    fn take_list<T: std::str::FromStr>(&mut self, key: &str) -> Result<Option<Vec<T>>, ConfigError>
    where
        T::Err: std::fmt::Display,
    {
        let Some(value) = self.take(key) else {
            return Ok(None);
        };
        let inner = value.trim().trim_start_matches('[').trim_end_matches(']');
        inner
            .split(',')
            .map(str::trim)
            .filter(|item| !item.is_empty())
            .map(|item| {
                item.parse().map_err(|e: T::Err| ConfigError::Invalid {
                    key: key.to_string(),
                    value: value.clone(),
                    reason: format!("{item:?}: {e}"),
                })
            })
            .collect::<Result<Vec<T>, _>>()
            .map(Some)
    }

    /// Fails on the first key nobody consumed.
    fn finish(self) -> Result<(), ConfigError> {
        match self.entries.into_iter().min_by_key(|(_, e)| e.line) {
            Some((key, entry)) => Err(ConfigError::Unknown {
                key,
                line: entry.line,
            }),
            None => Ok(()),
        }
    }
}

fn unquote(value: &str) -> &str {
    for quote in ['"', '\''] {
        if let Some(inner) = value.strip_prefix(quote).and_then(|v| v.strip_suffix(quote)) {
            return inner;
        }
    }
    value
}

fn invalid(key: &str, value: impl ToString, reason: impl ToString) -> ConfigError {
    ConfigError::Invalid {
        key: key.to_string(),
        value: value.to_string(),
        reason: reason.to_string(),
    }
}

/// Which equilibrium `h1_dist` and `l2_dist` measure against.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TargetMode {
    /// The constant state with the current mass and total energy.
    Invariant,
    /// The constant state with the initial mass and total energy.
    Initial,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OutputConfig {
    pub directory: PathBuf,
    /// Write a diagnostics row every this many accepted steps.
    pub diag_every: usize,
    /// Write snapshots every this many accepted steps; 0 keeps only the
    /// initial and final states.
    pub snapshot_every: usize,
    pub emit_plots: bool,
}

#[derive(Debug, Clone)]
pub struct RunConfig {
    pub n_cells: usize,
    pub t_end: f64,
    pub controls: StepControls,
    pub physics: PhysParams,
    pub init: InitFamily,
    /// Unit constants and data rescaled to unit mass and energy; required
    /// for the volume-representation cross-check.
    pub normalized_mode: bool,
    pub output: OutputConfig,
    pub seed: u64,
    pub fit_window: (f64, f64),
    pub target_mode: TargetMode,
}

const PHYSICS_KEYS: [&str; 6] = ["mu", "lambda", "nu", "kappa_tilde", "R", "c_v"];
const TABLE_FIELDS: [&str; 7] = ["v", "theta", "u", "w1", "w2", "b1", "b2"];

impl RunConfig {
    pub fn from_file(path: &Path) -> Result<Self, ConfigError> {
        Self::from_key_values(KeyValues::from_file(path)?)
    }

    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        Self::from_key_values(KeyValues::parse(text)?)
    }

    pub fn from_key_values(mut kv: KeyValues) -> Result<Self, ConfigError> {
        let cfg = Self::take_from(&mut kv)?;
        kv.finish()?;
        Ok(cfg)
    }

    /// Consumes every run key present in `kv`, leaving other keys behind.
    pub(crate) fn take_from(kv: &mut KeyValues) -> Result<Self, ConfigError> {
        let n_cells = kv.take_parsed("grid.n_cells", 100usize)?;
        if n_cells < 4 {
            return Err(invalid("grid.n_cells", n_cells, "need at least 4 cells"));
        }
        let t_end = kv.take_f64("time.t_end", 1.0)?;
        if !(t_end > 0.0 && t_end.is_finite()) {
            return Err(invalid("time.t_end", t_end, "must be positive"));
        }
        let defaults = StepControls::default();
        let controls = StepControls {
            cfl: kv.take_f64("time.cfl", defaults.cfl)?,
            max_picard: kv.take_parsed("time.max_picard", defaults.max_picard)?,
            picard_tol: kv.take_f64("time.picard_tol", defaults.picard_tol)?,
            max_retries: kv.take_parsed("time.max_retries", defaults.max_retries)?,
        };
        controls
            .validate()
            .map_err(|e| invalid("time", "", e.to_string()))?;

        let normalized_mode = kv.take_bool("normalized_mode", true)?;
        let beta = kv.take_f64("physics.beta", 1.0)?;
        let mut constants = [1.0; 6];
        for (slot, name) in constants.iter_mut().zip(PHYSICS_KEYS) {
            let key = format!("physics.{name}");
            *slot = kv.take_f64(&key, 1.0)?;
            if normalized_mode && *slot != 1.0 {
                return Err(invalid(&key, *slot, "normalized_mode requires unit constants"));
            }
        }
        let [mu, lambda, nu, kappa_tilde, r_gas, c_v] = constants;
        let physics = PhysParams::new(mu, lambda, nu, kappa_tilde, beta, r_gas, c_v)
            .map_err(|e| invalid("physics", "", e.to_string()))?;

        let seed = kv.take_parsed("seed", 0u64)?;
        let init = take_init(kv, seed)?;

        let output = OutputConfig {
            directory: PathBuf::from(kv.take("output.directory").unwrap_or_else(|| "out".into())),
            diag_every: kv.take_parsed("output.diag_every", 1usize)?,
            snapshot_every: kv.take_parsed("output.snapshot_every", 0usize)?,
            emit_plots: kv.take_bool("output.emit_plots", false)?,
        };
        if output.diag_every == 0 {
            return Err(invalid("output.diag_every", 0, "must be at least 1"));
        }

        let fit_window = (kv.take_f64("fit.t_lo", 2.0)?, kv.take_f64("fit.t_hi", 10.0)?);
        if !(fit_window.0 < fit_window.1) {
            return Err(invalid(
                "fit.t_hi",
                fit_window.1,
                format!("must exceed fit.t_lo = {}", fit_window.0),
            ));
        }
        let target_mode = match kv.take("diagnostics.target").as_deref() {
            None | Some("invariant") => TargetMode::Invariant,
            Some("initial") => TargetMode::Initial,
            Some(other) => {
                return Err(invalid("diagnostics.target", other, "expected invariant or initial"))
            }
        };

        Ok(Self {
            n_cells,
            t_end,
            controls,
            physics,
            init,
            normalized_mode,
            output,
            seed,
            fit_window,
            target_mode,
        })
    }
}

fn take_init(kv: &mut KeyValues, seed: u64) -> Result<InitFamily, ConfigError> {
    let amplitude = kv.take_f64("init.amplitude", 0.0)?;
    let mut family = InitFamily::single_mode(amplitude);
    if let Some(kind) = kv.take("init.family") {
        family.kind = kind;
    }
    family.a_v = kv.take_f64("init.a_v", family.a_v)?;
    family.a_u = kv.take_f64("init.a_u", family.a_u)?;
    family.a_w[0] = kv.take_f64("init.a_w1", family.a_w[0])?;
    family.a_w[1] = kv.take_f64("init.a_w2", family.a_w[1])?;
    family.a_b[0] = kv.take_f64("init.a_b1", family.a_b[0])?;
    family.a_b[1] = kv.take_f64("init.a_b2", family.a_b[1])?;
    family.a_theta = kv.take_f64("init.a_theta", family.a_theta)?;
    family.wavenumber = kv.take_parsed("init.wavenumber", family.wavenumber)?;
    family.theta_base = kv.take_f64("init.theta_base", family.theta_base)?;
    family.modes = kv.take_parsed("init.modes", family.modes)?;
    family.floor = kv.take_f64("init.floor", family.floor)?;
    family.seed = seed;
    for field in TABLE_FIELDS {
        if let Some(path) = kv.take(&format!("init.table.{field}")) {
            let path = PathBuf::from(path);
            let path = if path.is_relative() {
                kv.base_dir.join(path)
            } else {
                path
            };
            family.tables.insert(field.to_string(), path);
        }
    }
    Ok(family)
}

/// A parameter study: the base run repeated once per axis value.
#[derive(Debug, Clone)]
pub struct SweepConfig {
    pub base: RunConfig,
    /// Dotted key of the varied parameter, e.g. `physics.beta`.
    pub axis: String,
    pub values: Vec<f64>,
    /// Upper bound on concurrently executing runs.
    pub workers: usize,
    /// One fully resolved config per value, in the order of `values`.
    pub runs: Vec<RunConfig>,
}

/// Keys whose value is a single number and can therefore be swept.
pub const SWEEPABLE_KEYS: [&str; 21] = [
    "grid.n_cells",
    "time.t_end",
    "time.cfl",
    "time.picard_tol",
    "physics.mu",
    "physics.lambda",
    "physics.nu",
    "physics.kappa_tilde",
    "physics.beta",
    "physics.R",
    "physics.c_v",
    "init.amplitude",
    "init.a_v",
    "init.a_u",
    "init.a_w1",
    "init.a_w2",
    "init.a_b1",
    "init.a_b2",
    "init.a_theta",
    "init.theta_base",
    "seed",
];

impl SweepConfig {
    pub fn from_file(path: &Path) -> Result<Self, ConfigError> {
        Self::from_key_values(KeyValues::from_file(path)?)
    }

    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        Self::from_key_values(KeyValues::parse(text)?)
    }

    pub fn from_key_values(mut kv: KeyValues) -> Result<Self, ConfigError> {
        let axis = kv.take("sweep.axis").ok_or(ConfigError::Missing("sweep.axis"))?;
        if !SWEEPABLE_KEYS.contains(&axis.as_str()) {
            return Err(invalid("sweep.axis", &axis, "not a numeric run parameter"));
        }
        let values: Vec<f64> = kv
            .take_list("sweep.values")?
            .ok_or(ConfigError::Missing("sweep.values"))?;
        if values.is_empty() {
            return Err(invalid("sweep.values", "", "need at least one value"));
        }
        let default_workers = std::thread::available_parallelism().map_or(1, |n| n.get());
        let workers = kv.take_parsed("sweep.workers", default_workers)?.max(1);

        let mut runs = Vec::with_capacity(values.len());
        for &value in &values {
            let mut variant = kv.clone();
            let text = if axis == "grid.n_cells" || axis == "seed" {
                if value.fract() != 0.0 || value < 0.0 {
                    return Err(invalid("sweep.values", value, format!("{axis} needs integers")));
                }
                format!("{}", value as u64)
            } else {
                format!("{value:?}")
            };
            variant.set(&axis, &text);
            runs.push(RunConfig::from_key_values(variant)?);
        }
        // Validate the base with the axis left as written (or defaulted).
        let base = RunConfig::from_key_values(kv)?;
        Ok(Self {
            base,
            axis,
            values,
            workers,
            runs,
        })
    }
}

/// Manufactured-solution convergence study.
#[derive(Debug, Clone)]
pub struct MmsConfig {
    /// Physics, Picard controls and output directory come from here.
    pub base: RunConfig,
    pub resolutions: Vec<usize>,
    pub t_end: f64,
    /// `dt = dt_coeff * dx^2`.
    pub dt_coeff: f64,
    /// When set, repeat the study with `dt = control_dt_coeff * dx`.
    pub control_dt_coeff: Option<f64>,
    /// Perturbation size of the manufactured fields; 0 gives the equilibrium.
    pub amplitude: f64,
}

impl MmsConfig {
    pub fn from_file(path: &Path) -> Result<Self, ConfigError> {
        Self::from_key_values(KeyValues::from_file(path)?)
    }

    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        Self::from_key_values(KeyValues::parse(text)?)
    }

    pub fn from_key_values(mut kv: KeyValues) -> Result<Self, ConfigError> {
        let resolutions = kv
            .take_list("mms.resolutions")?
            .unwrap_or_else(|| vec![50, 100, 200]);
        if resolutions.len() < 3 {
            return Err(invalid("mms.resolutions", resolutions.len(), "need at least 3 resolutions"));
        }
        if resolutions.iter().any(|&n| n < 4) {
            return Err(invalid("mms.resolutions", "", "every resolution needs at least 4 cells"));
        }
        let t_end = kv.take_f64("mms.t_end", 0.5)?;
        if !(t_end > 0.0 && t_end.is_finite()) {
            return Err(invalid("mms.t_end", t_end, "must be positive"));
        }
        let dt_coeff = kv.take_f64("mms.dt_coeff", 1.0)?;
        if !(dt_coeff > 0.0 && dt_coeff.is_finite()) {
            return Err(invalid("mms.dt_coeff", dt_coeff, "must be positive"));
        }
        let control_dt_coeff = match kv.take("mms.control_dt_coeff").as_deref() {
            None => Some(0.1),
            Some("none" | "off") => None,
            Some(value) => match value.parse::<f64>() {
                Ok(c) if c > 0.0 && c.is_finite() => Some(c),
                _ => return Err(invalid("mms.control_dt_coeff", value, "must be positive or none")),
            },
        };
        let amplitude = kv.take_f64("mms.amplitude", 0.1)?;
        if !(amplitude.abs() < 0.5) {
            return Err(invalid("mms.amplitude", amplitude, "must be below 0.5 in magnitude"));
        }
        if !kv.contains("normalized_mode") {
            kv.set("normalized_mode", "false");
        }
        let base = RunConfig::from_key_values(kv)?;
        Ok(Self {
            base,
            resolutions,
            t_end,
            dt_coeff,
            control_dt_coeff,
            amplitude,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_are_a_normalized_quiet_run() {
        let cfg = RunConfig::parse("").unwrap();
        assert_eq!(cfg.n_cells, 100);
        assert!(cfg.normalized_mode);
        assert_eq!(cfg.physics, PhysParams::normalized(1.0).unwrap());
        assert_eq!(cfg.init, InitFamily::single_mode(0.0));
        assert_eq!(cfg.output.diag_every, 1);
        assert_eq!(cfg.target_mode, TargetMode::Invariant);
    }

    #[test]
    fn sections_prefix_keys_and_comments_are_ignored() {
        let text = "
            # a comment
            grid.n_cells = 64
            [physics]
            beta = 2   # trailing
            [init]
            amplitude = 0.1
            a_theta = 0.05
            [output]
            directory = \"results/a b\"
        ";
        let cfg = RunConfig::parse(text).unwrap();
        assert_eq!(cfg.n_cells, 64);
        assert_eq!(cfg.physics.beta, 2.0);
        assert_eq!(cfg.init.a_u, 0.1);
        assert_eq!(cfg.init.a_theta, 0.05);
        assert_eq!(cfg.output.directory, PathBuf::from("results/a b"));
    }

    #[test]
    fn unknown_and_duplicate_keys_are_rejected() {
        assert!(matches!(
            RunConfig::parse("grid.n_cells = 8\nphysics.betta = 1"),
            Err(ConfigError::Unknown { line: 2, .. })
        ));
        assert!(matches!(
            RunConfig::parse("seed = 1\nseed = 2"),
            Err(ConfigError::Duplicate { line: 2, .. })
        ));
        assert!(matches!(RunConfig::parse("just words"), Err(ConfigError::Syntax { line: 1, .. })));
    }

    #[test]
    fn normalized_mode_forbids_non_unit_constants() {
        assert!(RunConfig::parse("physics.mu = 2").is_err());
        let cfg = RunConfig::parse("normalized_mode = false\nphysics.mu = 2").unwrap();
        assert_eq!(cfg.physics.mu, 2.0);
    }

    #[test]
    fn invalid_values_name_their_key() {
        let err = RunConfig::parse("time.cfl = fast").unwrap_err();
        assert!(err.to_string().contains("time.cfl"));
        assert!(RunConfig::parse("grid.n_cells = 2").is_err());
        assert!(RunConfig::parse("output.diag_every = 0").is_err());
        assert!(RunConfig::parse("diagnostics.target = moving").is_err());
        assert!(RunConfig::parse("fit.t_lo = 5\nfit.t_hi = 5").is_err());
    }

    #[test]
    fn sweep_expands_one_run_per_value() {
        let sweep = SweepConfig::parse(
            "sweep.axis = physics.beta\nsweep.values = [0, 0.5, 1, 2]\nsweep.workers = 2\ninit.amplitude = 0.1",
        )
        .unwrap();
        assert_eq!(sweep.values, vec![0.0, 0.5, 1.0, 2.0]);
        let betas: Vec<f64> = sweep.runs.iter().map(|r| r.physics.beta).collect();
        assert_eq!(betas, sweep.values);
        assert!(sweep.runs.iter().all(|r| r.init.a_u == 0.1));
        assert_eq!(sweep.workers, 2);
    }

    #[test]
    fn sweep_rejects_bad_axes() {
        assert!(SweepConfig::parse("sweep.axis = physics.gamma\nsweep.values = 1").is_err());
        assert!(SweepConfig::parse("sweep.axis = physics.beta\nsweep.values = []").is_err());
        assert!(SweepConfig::parse("sweep.axis = grid.n_cells\nsweep.values = 10.5").is_err());
        assert!(matches!(
            SweepConfig::parse("sweep.values = 1"),
            Err(ConfigError::Missing("sweep.axis"))
        ));
    }

    #[test]
    fn mms_defaults() {
        let cfg = MmsConfig::parse("").unwrap();
        assert_eq!(cfg.resolutions, vec![50, 100, 200]);
        assert_eq!(cfg.t_end, 0.5);
        assert!(!cfg.base.normalized_mode);
        assert_eq!(cfg.control_dt_coeff, Some(0.1));
        assert_eq!(MmsConfig::parse("mms.control_dt_coeff = none").unwrap().control_dt_coeff, None);
        assert!(MmsConfig::parse("mms.resolutions = 50, 100").is_err());
    }
}

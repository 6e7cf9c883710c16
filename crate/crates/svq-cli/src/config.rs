//! Flat `key = value` run configuration.
//!
//! One setting per line, `#` starts a comment line, keys are namespaced
//! (`scenario.delta`, `train.epochs`, ...). Unknown keys are hard errors so a
//! typo cannot silently fall back to a default. Every key has a default; a
//! missing config file section simply keeps them.
//!
//! Two defaults are coupled to the scenario: the codebook size pairs with the
//! jammer spread (Δ=0 → M=2, Δ=2 → M=4, Δ=4 → M=6) and the threshold θ uses
//! the calibrated per-spread value, unless the file sets them explicitly.

use std::path::PathBuf;
use svq_core::datagen::{paired_codebook_size, ScenarioConfig};
use svq_core::trainer::TrainConfig;
use svq_core::{Error, Result};

/// Default θ for a given jammer spread, pinned by the calibration sweep
/// (`svq calibrate-theta`) on the default scenarios. For a point jammer
/// (Δ=0) the sweep favours θ = 0.5; once the jammer wanders over a band the
/// threshold cap {x : ŵ·x > θ} must be narrow enough to slice the band's
/// angular fan, which pushes the calibrated value to θ = 2.
pub fn default_theta(delta: f64) -> f64 {
    if delta < 1.0 {
        0.5
    } else {
        2.0
    }
}

/// Full training profile for a `Δ = delta` scenario: the calibrated θ plus,
/// for spread jammers, a softer sigmoid (w0 = 5) with the norm constraint
/// held for the whole run (`lift_after = epochs`). Once the norm is released
/// it grows past the sigmoid's active range, the likelihoods saturate, and
/// the posterior-gradient span collapses onto starved-unit directions —
/// distortion keeps improving while the nulling projector degenerates, so
/// the spread scenarios keep the cap on.
pub fn scenario_train_config(delta: f64) -> TrainConfig {
    let mut t = TrainConfig { theta: default_theta(delta), ..TrainConfig::default() };
    if delta >= 1.0 {
        t.w0 = 5.0;
        t.lift_after = t.epochs;
    }
    t
}

/// Settings for the θ calibration sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct CalibrateSettings {
    /// Candidate thresholds.
    pub thetas: Vec<f64>,
    /// Epochs per pilot run (shorter than a full training).
    pub epochs: usize,
    /// Pilot training-set size.
    pub n: usize,
    /// Fresh evaluation points for the invariance ratio.
    pub eval_points: usize,
}

impl Default for CalibrateSettings {
    fn default() -> Self {
        CalibrateSettings {
            thetas: vec![0.25, 0.5, 0.75, 1.0, 1.5, 2.0],
            epochs: 800,
            n: 2000,
            eval_points: 64,
        }
    }
}

/// Fully resolved configuration for one CLI invocation.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub scenario: ScenarioConfig,
    pub train: TrainConfig,
    /// Number of samples `gen` writes.
    pub gen_n: usize,
    /// Relative singular-value cutoff for the jammer projector.
    pub nulling_tol: f64,
    /// Pure-jammer locations evaluated by `sweep`.
    pub sweep_locations: Vec<f64>,
    /// Pure-jammer amplitude used by `sweep`.
    pub sweep_amplitude: f64,
    /// Which held-out evaluation draw `null-example` uses.
    pub null_example_index: u64,
    /// Random instances checked by `gradcheck`.
    pub gradcheck_trials: usize,
    pub calibrate: CalibrateSettings,
    /// Where command outputs land.
    pub output_dir: PathBuf,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            scenario: ScenarioConfig::default(),
            train: TrainConfig { theta: default_theta(0.0), ..TrainConfig::default() },
            gen_n: 10_000,
            nulling_tol: svq_core::nulling::DEFAULT_PROJECTOR_TOL,
            sweep_locations: grid(30.0, 0.25, 46.0),
            sweep_amplitude: 1.0,
            null_example_index: 0,
            gradcheck_trials: 100,
            calibrate: CalibrateSettings::default(),
            output_dir: PathBuf::from("runs"),
        }
    }
}

/// Inclusive `start..=end` grid with the given step.
pub fn grid(start: f64, step: f64, end: f64) -> Vec<f64> {
    let mut out = Vec::new();
    let mut k = 0u32;
    loop {
        let v = start + f64::from(k) * step;
        if v > end + 1e-9 {
            break;
        }
        out.push(v);
        k += 1;
    }
    out
}

fn bad(lineno: usize, msg: impl std::fmt::Display) -> Error {
    Error::InvalidConfig(format!("config line {lineno}: {msg}"))
}

fn parse_f64(lineno: usize, key: &str, value: &str) -> Result<f64> {
    value
        .parse::<f64>()
        .map_err(|_| bad(lineno, format!("{key} expects a real number, got {value:?}")))
}

fn parse_usize(lineno: usize, key: &str, value: &str) -> Result<usize> {
    value
        .parse::<usize>()
        .map_err(|_| bad(lineno, format!("{key} expects a nonnegative integer, got {value:?}")))
}

fn parse_u64(lineno: usize, key: &str, value: &str) -> Result<u64> {
    value
        .parse::<u64>()
        .map_err(|_| bad(lineno, format!("{key} expects an unsigned integer, got {value:?}")))
}

fn parse_bool(lineno: usize, key: &str, value: &str) -> Result<bool> {
    match value {
        "true" => Ok(true),
        "false" => Ok(false),
        _ => Err(bad(lineno, format!("{key} expects true or false, got {value:?}"))),
    }
}

/// A list of reals, either comma-separated (`30, 38, 46`) or a
/// `start:step:end` inclusive range (`30:0.25:46`).
fn parse_real_list(lineno: usize, key: &str, value: &str) -> Result<Vec<f64>> {
    if value.contains(':') {
        let parts: Vec<&str> = value.split(':').collect();
        if parts.len() != 3 {
            return Err(bad(lineno, format!("{key} range must be start:step:end, got {value:?}")));
        }
        let start = parse_f64(lineno, key, parts[0].trim())?;
        let step = parse_f64(lineno, key, parts[1].trim())?;
        let end = parse_f64(lineno, key, parts[2].trim())?;
        if !(step > 0.0) || end < start {
            return Err(bad(lineno, format!("{key} range needs step > 0 and end ≥ start")));
        }
        return Ok(grid(start, step, end));
    }
    value
        .split(',')
        .map(|s| parse_f64(lineno, key, s.trim()))
        .collect()
}

impl RunConfig {
    /// Parses the flat text format on top of the defaults.
    pub fn parse(text: &str) -> Result<RunConfig> {
        let mut cfg = RunConfig::default();
        let mut saw_m = false;
        let mut saw_theta = false;
        for (idx, raw) in text.lines().enumerate() {
            let lineno = idx + 1;
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| bad(lineno, "expected `key = value`"))?;
            let key = key.trim();
            let value = value.trim();
            match key {
                "scenario.d" => cfg.scenario.d = parse_usize(lineno, key, value)?,
                "scenario.i_s" => cfg.scenario.i_s = parse_f64(lineno, key, value)?,
                "scenario.sigma" => cfg.scenario.sigma = parse_f64(lineno, key, value)?,
                "scenario.delta" => cfg.scenario.delta = parse_f64(lineno, key, value)?,
                "scenario.jammer_center" => {
                    cfg.scenario.jammer_center = parse_f64(lineno, key, value)?
                }
                "scenario.a_s_bound" => cfg.scenario.a_s_bound = parse_f64(lineno, key, value)?,
                "scenario.a_j_bound" => cfg.scenario.a_j_bound = parse_f64(lineno, key, value)?,
                "scenario.noise_bound" => {
                    cfg.scenario.noise_bound = parse_f64(lineno, key, value)?
                }
                "scenario.m" => {
                    cfg.scenario.m = parse_usize(lineno, key, value)?;
                    saw_m = true;
                }
                "scenario.seed" => cfg.scenario.seed = parse_u64(lineno, key, value)?,
                "train.epochs" => cfg.train.epochs = parse_usize(lineno, key, value)?,
                "train.batch_size" => cfg.train.batch_size = parse_usize(lineno, key, value)?,
                "train.learning_rate" => {
                    cfg.train.learning_rate = parse_f64(lineno, key, value)?
                }
                "train.lr_decay" => cfg.train.lr_decay = parse_f64(lineno, key, value)?,
                "train.theta" => {
                    cfg.train.theta = parse_f64(lineno, key, value)?;
                    saw_theta = true;
                }
                "train.w0" => cfg.train.w0 = parse_f64(lineno, key, value)?,
                "train.lift_after" => cfg.train.lift_after = parse_usize(lineno, key, value)?,
                "train.seed" => cfg.train.seed = parse_u64(lineno, key, value)?,
                "train.init_scale" => cfg.train.init_scale = parse_f64(lineno, key, value)?,
                "train.constraint_threshold" => {
                    cfg.train.constraints.threshold = parse_bool(lineno, key, value)?
                }
                "train.constraint_norm" => {
                    cfg.train.constraints.norm = parse_bool(lineno, key, value)?
                }
                "train.constraint_parallel" => {
                    cfg.train.constraints.parallel = parse_bool(lineno, key, value)?
                }
                "gen.n" => cfg.gen_n = parse_usize(lineno, key, value)?,
                "nulling.tol" => cfg.nulling_tol = parse_f64(lineno, key, value)?,
                "sweep.locations" => {
                    cfg.sweep_locations = parse_real_list(lineno, key, value)?
                }
                "sweep.amplitude" => cfg.sweep_amplitude = parse_f64(lineno, key, value)?,
                "null_example.index" => {
                    cfg.null_example_index = parse_u64(lineno, key, value)?
                }
                "gradcheck.trials" => cfg.gradcheck_trials = parse_usize(lineno, key, value)?,
                "calibrate.thetas" => {
                    cfg.calibrate.thetas = parse_real_list(lineno, key, value)?
                }
                "calibrate.epochs" => cfg.calibrate.epochs = parse_usize(lineno, key, value)?,
                "calibrate.n" => cfg.calibrate.n = parse_usize(lineno, key, value)?,
                "calibrate.eval_points" => {
                    cfg.calibrate.eval_points = parse_usize(lineno, key, value)?
                }
                "output_dir" => cfg.output_dir = PathBuf::from(value),
                _ => return Err(bad(lineno, format!("unknown config key `{key}`"))),
            }
        }
        if !saw_m {
            cfg.scenario.m = paired_codebook_size(cfg.scenario.delta);
        }
        if !saw_theta {
            cfg.train.theta = default_theta(cfg.scenario.delta);
        }
        Ok(cfg)
    }

    /// Applies the global CLI flags. `--seed` overrides both the scenario and
    /// training seeds so one flag controls the entire pipeline.
    pub fn apply_overrides(&mut self, seed: Option<u64>, out: Option<PathBuf>) {
        if let Some(s) = seed {
            self.scenario.seed = s;
            self.train.seed = s;
        }
        if let Some(dir) = out {
            self.output_dir = dir;
        }
    }

    /// Range checks beyond what parsing enforces.
    pub fn validate(&self) -> Result<()> {
        self.scenario.validate()?;
        self.train.validate()?;
        if !(self.nulling_tol > 0.0) {
            return Err(Error::InvalidConfig("nulling.tol must be positive".into()));
        }
        if !(self.sweep_amplitude.is_finite()) {
            return Err(Error::InvalidConfig("sweep.amplitude must be finite".into()));
        }
        Ok(())
    }

    /// Every resolved setting as `key = value` lines, in a fixed order, for
    /// embedding into output files. Paths are deliberately excluded so that
    /// runs into different directories produce byte-identical artifacts.
    pub fn echo_lines(&self) -> Vec<String> {
        let s = &self.scenario;
        let t = &self.train;
        let mut lines = vec![
            format!("scenario.d = {}", s.d),
            format!("scenario.i_s = {}", s.i_s),
            format!("scenario.sigma = {}", s.sigma),
            format!("scenario.delta = {}", s.delta),
            format!("scenario.jammer_center = {}", s.jammer_center),
            format!("scenario.a_s_bound = {}", s.a_s_bound),
            format!("scenario.a_j_bound = {}", s.a_j_bound),
            format!("scenario.noise_bound = {}", s.noise_bound),
            format!("scenario.m = {}", s.m),
            format!("scenario.seed = {}", s.seed),
            format!("train.epochs = {}", t.epochs),
            format!("train.batch_size = {}", t.batch_size),
            format!("train.learning_rate = {}", t.learning_rate),
            format!("train.lr_decay = {}", t.lr_decay),
            format!("train.theta = {}", t.theta),
            format!("train.w0 = {}", t.w0),
            format!("train.lift_after = {}", t.lift_after),
            format!("train.seed = {}", t.seed),
            format!("train.init_scale = {}", t.init_scale),
            format!("train.constraint_threshold = {}", t.constraints.threshold),
            format!("train.constraint_norm = {}", t.constraints.norm),
            format!("train.constraint_parallel = {}", t.constraints.parallel),
            format!("gen.n = {}", self.gen_n),
            format!("nulling.tol = {}", self.nulling_tol),
        ];
        let locs: Vec<String> = self.sweep_locations.iter().map(|v| v.to_string()).collect();
        lines.push(format!("sweep.locations = {}", locs.join(",")));
        lines.push(format!("sweep.amplitude = {}", self.sweep_amplitude));
        lines.push(format!("null_example.index = {}", self.null_example_index));
        lines.push(format!("gradcheck.trials = {}", self.gradcheck_trials));
        let thetas: Vec<String> = self.calibrate.thetas.iter().map(|v| v.to_string()).collect();
        lines.push(format!("calibrate.thetas = {}", thetas.join(",")));
        lines.push(format!("calibrate.epochs = {}", self.calibrate.epochs));
        lines.push(format!("calibrate.n = {}", self.calibrate.n));
        lines.push(format!("calibrate.eval_points = {}", self.calibrate.eval_points));
        lines
    }
}

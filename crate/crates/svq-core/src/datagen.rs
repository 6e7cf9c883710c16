//! Synthetic jammer-plus-weak-signal scenario.
//!
//! Every sample is a superposition of two sinc response profiles on a length-d
//! grid plus independent uniform noise:
//!
//! ```text
//! x_i = a_s·sinc((i − i_s)/σ) + a_j·sinc((i − i_j)/σ) + ε_i,   i = 1..d
//! ```
//!
//! with `a_s ~ U[±a_s_bound]` (the weak signal, −30 dB by default),
//! `a_j ~ U[±a_j_bound]` (the jammer, 0 dB), `i_j ~ U[center ± Δ]` (continuous
//! jammer location) and `ε_i ~ U[±noise_bound]` (−50 dB). The signal location
//! `i_s` is fixed; only the jammer's amplitude and location vary strongly, so
//! they are the "large" degrees of freedom an encoder should learn.
//!
//! Randomness is split per draw: sample `k` uses a dedicated ChaCha8 stream
//! (`seed_from_u64(seed)` + `set_stream(k)`) and consumes it in the fixed
//! order a_s, a_j, i_j, ε_1..ε_d. Parallel generation therefore yields exactly
//! the sequential results, and evaluation draws can be made disjoint from
//! training draws by offsetting the stream index (see [`EVAL_STREAM_OFFSET`]).

use crate::par;
use crate::{Dataset, Error, InputVector, Result};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::io::{BufRead, Write};

/// Stream-index offset for evaluation draws, keeping them disjoint from the
/// training draws (indices `0..N`) of the same seed.
pub const EVAL_STREAM_OFFSET: u64 = 1 << 40;

/// Full parameterization of the generator.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    /// Vector length (components are indexed 1..=d in the formula above).
    pub d: usize,
    /// Signal location i_s.
    pub i_s: f64,
    /// Response width σ.
    pub sigma: f64,
    /// Jammer location half-range Δ.
    pub delta: f64,
    /// Mean jammer location ⟨i_j⟩.
    pub jammer_center: f64,
    /// Signal amplitude bound (default √1e−3 ⇒ −30 dB).
    pub a_s_bound: f64,
    /// Jammer amplitude bound (default 1 ⇒ 0 dB).
    pub a_j_bound: f64,
    /// Per-component noise bound (default √1e−5 ⇒ −50 dB).
    pub noise_bound: f64,
    /// Codebook size paired with Δ for training runs.
    pub m: usize,
    /// Generator seed.
    pub seed: u64,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        ScenarioConfig {
            d: 100,
            i_s: 50.0,
            sigma: 2.0,
            delta: 0.0,
            jammer_center: 38.0,
            a_s_bound: 1e-3f64.sqrt(),
            a_j_bound: 1.0,
            noise_bound: 1e-5f64.sqrt(),
            m: 2,
            seed: 1,
        }
    }
}

impl ScenarioConfig {
    /// Default scenario for a given jammer spread, with the codebook size
    /// paired per the simulation protocol: Δ=0→M=2, Δ=2→M=4, Δ=4→M=6 (other
    /// spreads interpolate as M = 2 + round(Δ)).
    pub fn for_delta(delta: f64) -> Self {
        ScenarioConfig { delta, m: paired_codebook_size(delta), ..Default::default() }
    }

    pub fn validate(&self) -> Result<()> {
        if self.d == 0 {
            return Err(Error::InvalidConfig("scenario dimension must be ≥ 1".into()));
        }
        if self.m == 0 {
            return Err(Error::InvalidConfig("codebook size must be ≥ 1".into()));
        }
        let finite = [
            self.i_s,
            self.sigma,
            self.delta,
            self.jammer_center,
            self.a_s_bound,
            self.a_j_bound,
            self.noise_bound,
        ]
        .iter()
        .all(|v| v.is_finite());
        if !finite {
            return Err(Error::NonFinite("scenario parameter".into()));
        }
        if self.sigma <= 0.0 {
            return Err(Error::InvalidConfig(format!("σ = {} must be > 0", self.sigma)));
        }
        if self.delta < 0.0 {
            return Err(Error::InvalidConfig(format!("Δ = {} must be ≥ 0", self.delta)));
        }
        if self.a_s_bound < 0.0 || self.a_j_bound < 0.0 || self.noise_bound < 0.0 {
            return Err(Error::InvalidConfig("amplitude/noise bounds must be ≥ 0".into()));
        }
        Ok(())
    }
}

/// Codebook size paired with a jammer spread Δ.
pub fn paired_codebook_size(delta: f64) -> usize {
    (2.0 + delta.round()).max(2.0) as usize
}

/// One generated sample with the latent draws that produced it.
#[derive(Debug, Clone, PartialEq)]
pub struct SamplePoint {
    pub x: InputVector,
    pub a_s: f64,
    pub a_j: f64,
    pub i_j: f64,
}

/// `sin(u)/u` with the removable singularity expanded for small `|u|`.
pub fn sinc(u: f64) -> f64 {
    if u.abs() < 1e-8 {
        1.0 - u * u / 6.0
    } else {
        u.sin() / u
    }
}

fn profile_component(i: usize, center: f64, sigma: f64) -> f64 {
    sinc((i as f64 - center) / sigma)
}

fn sym_uniform<R: Rng>(rng: &mut R, bound: f64) -> f64 {
    if bound > 0.0 {
        rng.random_range(-bound..=bound)
    } else {
        0.0
    }
}

fn stream_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// Noiseless, signal-free jammer profile `x_i = a_j·sinc((i − i_j)/σ)`.
pub fn pure_jammer(cfg: &ScenarioConfig, i_j: f64, a_j: f64) -> Result<InputVector> {
    cfg.validate()?;
    InputVector::new(
        (1..=cfg.d)
            .map(|i| a_j * profile_component(i, i_j, cfg.sigma))
            .collect(),
    )
}

/// Noiseless, jammer-free signal profile `x_i = a_s·sinc((i − i_s)/σ)`.
pub fn signal_only(cfg: &ScenarioConfig, a_s: f64) -> Result<InputVector> {
    cfg.validate()?;
    InputVector::new(
        (1..=cfg.d)
            .map(|i| a_s * profile_component(i, cfg.i_s, cfg.sigma))
            .collect(),
    )
}

/// Draws the sample with the given stream index.
pub fn sample_at(cfg: &ScenarioConfig, draw_index: u64) -> Result<SamplePoint> {
    cfg.validate()?;
    let mut rng = stream_rng(cfg.seed, draw_index);
    let a_s = sym_uniform(&mut rng, cfg.a_s_bound);
    let a_j = sym_uniform(&mut rng, cfg.a_j_bound);
    let i_j = if cfg.delta > 0.0 {
        rng.random_range(cfg.jammer_center - cfg.delta..=cfg.jammer_center + cfg.delta)
    } else {
        cfg.jammer_center
    };
    let mut values = Vec::with_capacity(cfg.d);
    for i in 1..=cfg.d {
        let v = a_s * profile_component(i, cfg.i_s, cfg.sigma)
            + a_j * profile_component(i, i_j, cfg.sigma)
            + sym_uniform(&mut rng, cfg.noise_bound);
        values.push(v);
    }
    Ok(SamplePoint { x: InputVector::new(values)?, a_s, a_j, i_j })
}

/// Generates `n` samples with stream indices `start_index..start_index + n`.
/// Order matches the indices regardless of parallelism.
pub fn generate(cfg: &ScenarioConfig, n: usize, start_index: u64) -> Result<Vec<SamplePoint>> {
    cfg.validate()?;
    if n == 0 {
        return Err(Error::InvalidConfig("sample count must be ≥ 1".into()));
    }
    par::map_indices(n, |k| sample_at(cfg, start_index + k as u64))
        .into_iter()
        .collect()
}

/// Packs sample vectors into a training dataset (latents dropped).
pub fn dataset_from(points: &[SamplePoint]) -> Result<Dataset> {
    Dataset::from_points(points.iter().map(|p| p.x.clone()))
}

// --- CSV dump format -------------------------------------------------------
//
// One row per sample: `a_s,a_j,i_j,x_1..x_d`, header included. Floats are
// written in shortest round-trip form, so read(write(points)) reproduces the
// exact values.

pub fn write_dataset_csv<W: Write>(points: &[SamplePoint], out: &mut W) -> Result<()> {
    let d = points.first().map(|p| p.x.dim()).unwrap_or(0);
    let mut header = String::from("a_s,a_j,i_j");
    for i in 1..=d {
        header.push_str(&format!(",x_{i}"));
    }
    writeln!(out, "{header}")?;
    for p in points {
        let mut row = format!("{},{},{}", p.a_s, p.a_j, p.i_j);
        for v in p.x.iter() {
            row.push_str(&format!(",{v}"));
        }
        writeln!(out, "{row}")?;
    }
    Ok(())
}

pub fn read_dataset_csv<R: BufRead>(input: R) -> Result<Vec<SamplePoint>> {
    // `#` lines carry the embedded generation config and are skipped.
    let mut lines = input
        .lines()
        .enumerate()
        .filter(|(_, l)| !matches!(l, Ok(l) if l.starts_with('#')));
    let (_, header) = lines
        .next()
        .ok_or_else(|| Error::Format("empty dataset file".into()))?;
    let header = header?;
    if !header.starts_with("a_s,a_j,i_j") {
        return Err(Error::Format(format!("unexpected dataset header: {header}")));
    }
    let mut points = Vec::new();
    for (lineno, line) in lines {
        let line = line?;
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() < 4 {
            return Err(Error::Format(format!("dataset line {} too short", lineno + 1)));
        }
        let parse = |s: &str| -> Result<f64> {
            s.parse::<f64>()
                .map_err(|_| Error::Format(format!("bad float {s:?} on dataset line {}", lineno + 1)))
        };
        let a_s = parse(fields[0])?;
        let a_j = parse(fields[1])?;
        let i_j = parse(fields[2])?;
        let values: Result<Vec<f64>> = fields[3..].iter().map(|s| parse(s)).collect();
        points.push(SamplePoint { x: InputVector::new(values?)?, a_s, a_j, i_j });
    }
    if points.is_empty() {
        return Err(Error::Format("dataset file has no rows".into()));
    }
    Ok(points)
}

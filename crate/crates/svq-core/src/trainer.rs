//! Constrained gradient-descent training of a codebook.
//!
//! The trainer minimizes the round-trip objective by plain gradient descent
//! while maintaining three optional constraints:
//!
//! - **threshold**: the bias stays tied to the weight, `b(y) = −θ‖w(y)‖`
//!   (this is a property of the codebook mode and persists after training);
//! - **norm**: every weight is renormalized to `‖w(y)‖ = w0` after each
//!   step;
//! - **parallel**: the reconstruction is kept proportional to the weight,
//!   `x′(y) = recon_scale(y)·ŵ(y)`, and descent acts on the scalar scale.
//!
//! The norm and parallel constraints exist to speed up the early search and
//! are released together at a configured epoch (`lift_after`), after which
//! weights and reconstructions move freely in the ambient space. The
//! threshold tie is kept throughout.
//!
//! Two update regimes are provided: minibatch descent (indices reshuffled
//! each epoch from the run seed) and full-batch descent with automatic
//! halving of the learning rate whenever a candidate step would increase the
//! objective, which makes the recorded trace non-increasing.

use crate::codebook::{CodeEntry, Codebook, CodebookMode};
use crate::data::Dataset;
use crate::objective::{objective, objective_gradients, GradientBundle};
use crate::{Error, Result};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use std::io::Write;

pub use crate::io::{load_codebook, save_codebook};

/// Maximum number of learning-rate halvings attempted within one full-batch
/// epoch before the epoch is recorded as a no-op.
const MAX_HALVINGS: u32 = 60;

/// Which training constraints are enforced.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ConstraintFlags {
    /// Tie the bias to the weight norm: `b(y) = −θ‖w(y)‖`.
    pub threshold: bool,
    /// Renormalize every weight to `w0` after each step.
    pub norm: bool,
    /// Keep each reconstruction parallel to its weight.
    pub parallel: bool,
}

impl Default for ConstraintFlags {
    fn default() -> Self {
        ConstraintFlags { threshold: true, norm: true, parallel: true }
    }
}

/// Hyperparameters for a training run.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    /// Number of passes over the data.
    pub epochs: usize,
    /// Minibatch size; `0` selects full-batch descent with step rejection.
    pub batch_size: usize,
    /// Initial learning rate (`0` makes every update a no-op).
    pub learning_rate: f64,
    /// Per-epoch multiplicative learning-rate decay, in (0, 1].
    pub lr_decay: f64,
    /// Threshold θ used by the thresholded codebook mode.
    pub theta: f64,
    /// Weight-norm target while the norm constraint is active.
    pub w0: f64,
    /// Which constraints are enforced.
    pub constraints: ConstraintFlags,
    /// Epoch at which the norm and parallel constraints are released.
    pub lift_after: usize,
    /// Seed for initialization and minibatch shuffling.
    pub seed: u64,
    /// Initial reconstruction scale.
    pub init_scale: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            epochs: 3000,
            batch_size: 64,
            learning_rate: 0.05,
            lr_decay: 0.999,
            theta: 1.0,
            w0: 10.0,
            constraints: ConstraintFlags::default(),
            lift_after: 2400,
            seed: 1,
            init_scale: 0.1,
        }
    }
}

impl TrainConfig {
    /// Checks the numeric ranges. A zero learning rate is allowed (it makes
    /// training a deterministic no-op, which is useful for testing).
    pub fn validate(&self) -> Result<()> {
        if self.epochs == 0 {
            return Err(Error::InvalidConfig("epochs must be ≥ 1".into()));
        }
        if !self.learning_rate.is_finite() || self.learning_rate < 0.0 {
            return Err(Error::InvalidConfig("learning_rate must be ≥ 0".into()));
        }
        if !(self.lr_decay > 0.0 && self.lr_decay <= 1.0) {
            return Err(Error::InvalidConfig("lr_decay must lie in (0, 1]".into()));
        }
        if !self.theta.is_finite() {
            return Err(Error::InvalidConfig("theta must be finite".into()));
        }
        if !(self.w0 > 0.0) || !self.w0.is_finite() {
            return Err(Error::InvalidConfig("w0 must be positive".into()));
        }
        if self.lift_after > self.epochs {
            return Err(Error::InvalidConfig("lift_after must be ≤ epochs".into()));
        }
        if !(self.init_scale > 0.0) || !self.init_scale.is_finite() {
            return Err(Error::InvalidConfig("init_scale must be positive".into()));
        }
        Ok(())
    }
}

/// What a training run did, epoch by epoch.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainReport {
    /// Full-dataset objective after each epoch (length = `epochs_run`).
    pub objective_trace: Vec<f64>,
    /// Learning rate in effect at each epoch (after any halvings).
    pub lr_trace: Vec<f64>,
    /// Whether the norm/parallel constraints were active during each epoch.
    pub constraints_trace: Vec<bool>,
    /// Final full-dataset objective.
    pub final_objective: f64,
    /// Number of epochs executed.
    pub epochs_run: usize,
    /// Epoch index at which the norm and parallel constraints were released;
    /// equals `epochs_run` when they stayed active for the whole run, and 0
    /// when neither flag was set to begin with.
    pub constraint_lift_epoch: usize,
}

/// Writes the per-epoch trace as CSV with a one-line header.
pub fn write_trace_csv<W: Write>(report: &TrainReport, out: &mut W) -> Result<()> {
    writeln!(out, "epoch,objective,learning_rate,constraints_active")?;
    for e in 0..report.epochs_run {
        writeln!(
            out,
            "{},{},{},{}",
            e,
            report.objective_trace[e],
            report.lr_trace[e],
            u8::from(report.constraints_trace[e]),
        )?;
    }
    Ok(())
}

/// Draws a uniformly random direction on the unit sphere in `d` dimensions.
fn random_unit_vector<R: Rng>(rng: &mut R, d: usize) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..d).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
        let n = crate::linalg::norm(&v);
        if n > 1e-12 {
            return v.into_iter().map(|c| c / n).collect();
        }
    }
}

/// Builds a starting codebook: independent uniformly random weight
/// directions scaled to `w0`, bias tied to the threshold, and reconstructions
/// at `init_scale` along each weight direction.
pub fn init_codebook<R: Rng>(d: usize, m: usize, cfg: &TrainConfig, rng: &mut R) -> Result<Codebook> {
    cfg.validate()?;
    if d == 0 || m == 0 {
        return Err(Error::InvalidConfig("codebook needs d ≥ 1 and M ≥ 1".into()));
    }
    let mut entries = Vec::with_capacity(m);
    for _ in 0..m {
        let dir = random_unit_vector(rng, d);
        let weight: Vec<f64> = dir.iter().map(|c| c * cfg.w0).collect();
        // Same starting bias whether or not the tie is maintained afterwards.
        let bias = -cfg.theta * cfg.w0;
        let recon: Vec<f64> = dir.iter().map(|c| c * cfg.init_scale).collect();
        entries.push(CodeEntry { weight, bias, recon, recon_scale: cfg.init_scale });
    }
    let mode = if cfg.constraints.threshold {
        CodebookMode::Thresholded { theta: cfg.theta }
    } else {
        CodebookMode::Affine
    };
    let w0 = if cfg.constraints.norm { cfg.w0 } else { 0.0 };
    Codebook::new(mode, w0, entries)
}

/// Applies one descent step `p ← p − lr·g` to every free parameter, letting
/// the codebook mutators re-impose whatever constraints are active.
fn apply_step(
    cb: &mut Codebook,
    grads: &GradientBundle,
    lr: f64,
    parallel_active: bool,
) -> Result<()> {
    if lr == 0.0 {
        return Ok(());
    }
    let affine = matches!(cb.mode(), CodebookMode::Affine);
    for y in 0..cb.len() {
        let g = &grads.entries[y];
        let entry = cb.entry(y)?;
        let new_weight: Vec<f64> =
            entry.weight.iter().zip(&g.weight).map(|(w, gw)| w - lr * gw).collect();
        let new_bias = entry.bias - lr * g.bias;
        let new_scale = entry.recon_scale - lr * g.recon_scale;
        let new_recon: Vec<f64> =
            entry.recon.iter().zip(&g.recon).map(|(r, gr)| r - lr * gr).collect();
        cb.set_weight(y, new_weight)?;
        if affine {
            cb.set_bias(y, new_bias)?;
        }
        if parallel_active {
            cb.set_recon_scale(y, new_scale)?;
            cb.sync_parallel_recon(y)?;
        } else {
            cb.set_recon(y, new_recon)?;
        }
    }
    Ok(())
}

fn finite_gradients(grads: &GradientBundle, epoch: usize) -> Result<()> {
    if !grads.max_abs().is_finite() {
        return Err(Error::NonFinite(format!("gradient diverged at epoch {epoch}")));
    }
    Ok(())
}

fn finite_objective(d: f64, epoch: usize) -> Result<f64> {
    if !d.is_finite() {
        return Err(Error::NonFinite(format!("objective diverged at epoch {epoch}")));
    }
    Ok(d)
}

/// Runs gradient descent from an existing codebook. The caller provides the
/// RNG so that resumed runs and tests can control the minibatch order.
pub fn train_from<R: Rng>(
    data: &Dataset,
    mut cb: Codebook,
    cfg: &TrainConfig,
    rng: &mut R,
) -> Result<(Codebook, TrainReport)> {
    cfg.validate()?;
    if data.dim() != cb.dim() {
        return Err(Error::DimensionMismatch { expected: cb.dim(), got: data.dim() });
    }

    let any_liftable = cfg.constraints.norm || cfg.constraints.parallel;
    let mut lift_epoch = if any_liftable { cfg.epochs } else { 0 };
    let mut lr = cfg.learning_rate;
    let mut indices: Vec<usize> = (0..data.len()).collect();

    let mut objective_trace = Vec::with_capacity(cfg.epochs);
    let mut lr_trace = Vec::with_capacity(cfg.epochs);
    let mut constraints_trace = Vec::with_capacity(cfg.epochs);

    // Current full-dataset objective, kept for full-batch step rejection.
    let mut current = finite_objective(objective(&cb, data)?, 0)?;

    for epoch in 0..cfg.epochs {
        if any_liftable && epoch == cfg.lift_after {
            if cfg.constraints.norm {
                cb.set_w0(0.0)?;
            }
            lift_epoch = epoch;
        }
        let constraints_active = any_liftable && epoch < cfg.lift_after;
        let parallel_active = cfg.constraints.parallel && constraints_active;

        if cfg.batch_size == 0 {
            // Full batch: reject any step that increases the objective,
            // halving the learning rate until one is accepted.
            let grads = objective_gradients(&cb, data, parallel_active)?;
            finite_gradients(&grads, epoch)?;
            let mut accepted = false;
            for _ in 0..MAX_HALVINGS {
                let mut candidate = cb.clone();
                apply_step(&mut candidate, &grads, lr, parallel_active)?;
                let d = finite_objective(objective(&candidate, data)?, epoch)?;
                if d <= current {
                    cb = candidate;
                    current = d;
                    accepted = true;
                    break;
                }
                lr *= 0.5;
                if lr == 0.0 {
                    break;
                }
            }
            if !accepted {
                // Keep the codebook as-is; the trace stays flat.
            }
        } else {
            indices.shuffle(rng);
            for batch in indices.chunks(cfg.batch_size) {
                let subset = data.subset(batch)?;
                let grads = objective_gradients(&cb, &subset, parallel_active)?;
                finite_gradients(&grads, epoch)?;
                apply_step(&mut cb, &grads, lr, parallel_active)?;
            }
            current = finite_objective(objective(&cb, data)?, epoch)?;
        }

        objective_trace.push(current);
        lr_trace.push(lr);
        constraints_trace.push(constraints_active);
        lr *= cfg.lr_decay;
    }

    let report = TrainReport {
        final_objective: current,
        epochs_run: cfg.epochs,
        constraint_lift_epoch: lift_epoch,
        objective_trace,
        lr_trace,
        constraints_trace,
    };
    Ok((cb, report))
}

/// Initializes a fresh codebook from the run seed and trains it on `data`.
pub fn train(data: &Dataset, m: usize, cfg: &TrainConfig) -> Result<(Codebook, TrainReport)> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let cb = init_codebook(data.dim(), m, cfg, &mut rng)?;
    train_from(data, cb, cfg, &mut rng)
}

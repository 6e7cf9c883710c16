//! One function per CLI verb. Every artifact lands in the configured output
//! directory under a fixed name, so `gen` → `train` → `sweep` chain without
//! extra flags:
//!
//! - `gen`          → `dataset.csv`, `dataset.manifest`
//! - `train`        → `codebook.svq`, `codebook.manifest`, `trace.csv`
//! - `sweep`        → `sweep.csv`, `plot_sweep.py`
//! - `null-example` → `null_example.csv`, `plot_null_example.py`
//! - `calibrate-theta` → `calibration.csv`
//!
//! CSV outputs embed the resolved configuration as leading `#` comment lines
//! (binary codebooks get a sidecar manifest instead), so every file carries
//! what is needed to regenerate it. None of the outputs contain timestamps or
//! absolute paths: a rerun with the same seed is byte-identical.

use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use svq_core::codebook::Codebook;
use svq_core::data::Dataset;
use svq_core::datagen::{
    dataset_from, generate, pure_jammer, read_dataset_csv, sample_at, write_dataset_csv,
    ScenarioConfig, EVAL_STREAM_OFFSET,
};
use svq_core::gradcheck::{self, GradCheckReport};
use svq_core::nulling::{jammer_projector, signal_invariance_ratio};
use svq_core::oracle::{DiscreteFmc, DiscreteNoisyFmc, DiscreteProductFmc};
use svq_core::trainer::{self, load_codebook, save_codebook, train, write_trace_csv, TrainConfig};
use svq_core::{Error, Result};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::config::{grid, RunConfig};

/// Worst relative error allowed by `gradcheck`.
const GRADCHECK_TOLERANCE: f64 = 1e-6;
/// Tolerances for the `oracle` identity checks.
const ORACLE_IDENTITY_TOLERANCE: f64 = 1e-12;
const ORACLE_GAP_TOLERANCE: f64 = 1e-10;
/// Invariance-ratio bound a calibrated θ must satisfy.
const CALIBRATION_INVARIANCE_BOUND: f64 = 0.05;

fn dataset_path(cfg: &RunConfig) -> PathBuf {
    cfg.output_dir.join("dataset.csv")
}

fn codebook_path(cfg: &RunConfig) -> PathBuf {
    cfg.output_dir.join("codebook.svq")
}

/// `# `-prefixed config echo placed at the top of text outputs.
fn comment_block(command: &str, cfg: &RunConfig) -> String {
    let mut block = format!("# svq {command}\n");
    for line in cfg.echo_lines() {
        block.push_str("# ");
        block.push_str(&line);
        block.push('\n');
    }
    block
}

/// Sidecar manifest for binary outputs.
fn write_manifest(path: &Path, command: &str, cfg: &RunConfig) -> Result<()> {
    let mut text = format!("command = {command}\n");
    for line in cfg.echo_lines() {
        text.push_str(&line);
        text.push('\n');
    }
    fs::write(path, text)?;
    Ok(())
}

fn create_output(cfg: &RunConfig, name: &str) -> Result<(PathBuf, BufWriter<fs::File>)> {
    fs::create_dir_all(&cfg.output_dir)?;
    let path = cfg.output_dir.join(name);
    let file = fs::File::create(&path)?;
    Ok((path, BufWriter::new(file)))
}

/// Generates the scenario dataset and writes it with its manifest.
pub fn gen(cfg: &RunConfig) -> Result<()> {
    if cfg.gen_n == 0 {
        return Err(Error::InvalidConfig("gen.n must be ≥ 1".into()));
    }
    let points = generate(&cfg.scenario, cfg.gen_n, 0)?;
    let (path, mut out) = create_output(cfg, "dataset.csv")?;
    out.write_all(comment_block("gen", cfg).as_bytes())?;
    write_dataset_csv(&points, &mut out)?;
    out.flush()?;
    write_manifest(&cfg.output_dir.join("dataset.manifest"), "gen", cfg)?;
    println!(
        "gen: wrote {} samples (d = {}) to {}",
        points.len(),
        cfg.scenario.d,
        path.display()
    );
    Ok(())
}

fn load_dataset(cfg: &RunConfig) -> Result<Dataset> {
    let file = fs::File::open(dataset_path(cfg))?;
    let points = read_dataset_csv(std::io::BufReader::new(file))?;
    dataset_from(&points)
}

/// Trains a codebook on the generated dataset and persists it with its trace.
pub fn train_cmd(cfg: &RunConfig) -> Result<()> {
    let data = load_dataset(cfg)?;
    let started = Instant::now();
    let (cb, report) = train(&data, cfg.scenario.m, &cfg.train)?;
    let seconds = started.elapsed().as_secs_f64();

    let cb_path = codebook_path(cfg);
    fs::create_dir_all(&cfg.output_dir)?;
    save_codebook(&cb, &cb_path)?;
    write_manifest(&cfg.output_dir.join("codebook.manifest"), "train", cfg)?;

    let (_, mut out) = create_output(cfg, "trace.csv")?;
    out.write_all(comment_block("train", cfg).as_bytes())?;
    write_trace_csv(&report, &mut out)?;
    out.flush()?;

    println!(
        "train: M = {}, {} epochs in {seconds:.1} s, final objective {:.6e} \
         (constraints lifted at epoch {}); codebook -> {}",
        cfg.scenario.m,
        report.epochs_run,
        report.final_objective,
        report.constraint_lift_epoch,
        cb_path.display()
    );
    Ok(())
}

/// One sweep row: projector rank and energy ratio at a pure-jammer location.
fn sweep_row(
    cb: &Codebook,
    scenario: &ScenarioConfig,
    loc: f64,
    amplitude: f64,
    tol: f64,
) -> Result<(f64, f64, usize)> {
    let x = pure_jammer(scenario, loc, amplitude)?;
    let proj = jammer_projector(cb, &x, tol)?;
    let nulled = proj.complement_apply(&x)?;
    let before: f64 = x.iter().map(|v| v * v).sum();
    let after: f64 = nulled.iter().map(|v| v * v).sum();
    let ratio = after / before;
    Ok((svq_core::nulling::depth_db(ratio), ratio, proj.rank()))
}

/// Evaluates nulling depth on pure jammers across the configured locations.
pub fn sweep(cfg: &RunConfig) -> Result<()> {
    if cfg.sweep_locations.is_empty() {
        return Err(Error::InvalidConfig("sweep.locations must be nonempty".into()));
    }
    if cfg.sweep_amplitude == 0.0 {
        return Err(Error::InvalidConfig(
            "sweep.amplitude must be nonzero (a zero jammer has no depth)".into(),
        ));
    }
    let cb = load_codebook(codebook_path(cfg))?;
    if cb.dim() != cfg.scenario.d {
        return Err(Error::DimensionMismatch { expected: cfg.scenario.d, got: cb.dim() });
    }

    let (path, mut out) = create_output(cfg, "sweep.csv")?;
    out.write_all(comment_block("sweep", cfg).as_bytes())?;
    writeln!(out, "i_j,depth_db,raw_ratio,rank")?;
    let mut deepest = (f64::INFINITY, f64::NAN);
    for &loc in &cfg.sweep_locations {
        let (depth, ratio, rank) = sweep_row(&cb, &cfg.scenario, loc, cfg.sweep_amplitude, cfg.nulling_tol)?;
        writeln!(out, "{loc},{depth},{ratio},{rank}")?;
        if depth < deepest.0 {
            deepest = (depth, loc);
        }
    }
    out.flush()?;
    emit_plot_script(cfg, "plot_sweep.py", "sweep", PLOT_SWEEP_BODY)?;

    println!(
        "sweep: {} locations, deepest {:.2} dB at i_j = {}; csv -> {}",
        cfg.sweep_locations.len(),
        deepest.0,
        deepest.1,
        path.display()
    );
    Ok(())
}

/// Draws one held-out sample, nulls it, and dumps before/after vectors.
pub fn null_example(cfg: &RunConfig) -> Result<()> {
    let cb = load_codebook(codebook_path(cfg))?;
    if cb.dim() != cfg.scenario.d {
        return Err(Error::DimensionMismatch { expected: cfg.scenario.d, got: cb.dim() });
    }
    let sample = sample_at(&cfg.scenario, EVAL_STREAM_OFFSET + cfg.null_example_index)?;
    let report = svq_core::nulling::null_report(&cb, sample.x, cfg.nulling_tol, sample.i_j)?;

    let (path, mut out) = create_output(cfg, "null_example.csv")?;
    out.write_all(comment_block("null-example", cfg).as_bytes())?;
    writeln!(out, "i,x_before,x_after")?;
    for (i, (b, a)) in report.original.iter().zip(report.nulled.iter()).enumerate() {
        writeln!(out, "{},{},{}", i + 1, b, a)?;
    }
    out.flush()?;
    emit_plot_script(cfg, "plot_null_example.py", "null-example", PLOT_NULL_EXAMPLE_BODY)?;

    let peak = report
        .nulled
        .iter()
        .enumerate()
        .max_by(|(_, a), (_, b)| a.abs().total_cmp(&b.abs()))
        .map(|(i, _)| i + 1)
        .unwrap_or(0);
    println!(
        "null-example: jammer at i_j = {:.3}, depth {:.2} dB, residual peak at i = {peak}; csv -> {}",
        report.location,
        report.depth_db,
        path.display()
    );
    Ok(())
}

/// Validates analytic gradients against central finite differences on random
/// instances, covering all four threshold/parallel mode combinations.
pub fn gradcheck_cmd(cfg: &RunConfig) -> Result<()> {
    if cfg.gradcheck_trials == 0 {
        return Err(Error::InvalidConfig("gradcheck.trials must be ≥ 1".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.train.seed);
    let mut report = GradCheckReport::default();
    for trial in 0..cfg.gradcheck_trials {
        let thresholded = trial % 2 == 0;
        let parallel = (trial / 2) % 2 == 0;
        let (cb, data) = gradcheck::random_instance(&mut rng, thresholded, parallel);
        let one = gradcheck::check_instance(&cb, &data, parallel, gradcheck::DEFAULT_STEP)?;
        report.merge(&one);
    }
    println!("gradcheck: {} random instances", cfg.gradcheck_trials);
    println!("  weight      worst relative error {:.3e}", report.weight);
    println!("  bias        worst relative error {:.3e}", report.bias);
    println!("  recon       worst relative error {:.3e}", report.recon);
    println!("  recon_scale worst relative error {:.3e}", report.recon_scale);
    println!("  posterior   worst relative error {:.3e}", report.posterior);
    if report.worst() > GRADCHECK_TOLERANCE {
        return Err(Error::ContractViolation(format!(
            "finite-difference mismatch: worst relative error {:.3e} exceeds {GRADCHECK_TOLERANCE:.0e}",
            report.worst()
        )));
    }
    println!("gradcheck: ok (tolerance {GRADCHECK_TOLERANCE:.0e})");
    Ok(())
}

/// Runs the enumeration-oracle identity checks on randomized instances.
pub fn oracle_cmd(cfg: &RunConfig) -> Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.train.seed);

    // Full Bayes-inverse triple sum vs conditional-mean reduced form.
    let mut worst_pair = 0.0f64;
    for _ in 0..50 {
        let k = rng.random_range(2..=8);
        let m = rng.random_range(1..=4);
        let n = rng.random_range(1..=3);
        let dim = rng.random_range(1..=3);
        let fmc = DiscreteFmc::random(&mut rng, k, m, n, dim);
        let full = fmc.objective_full()?;
        let reduced = fmc.objective_reduced()?;
        worst_pair = worst_pair.max((full - reduced).abs() / full.max(1.0));
    }
    println!("oracle: round-trip identity, 50 instances, worst relative gap {worst_pair:.3e}");

    // Direct noisy-source objective vs its integrated form plus constant.
    let mut worst_noisy = 0.0f64;
    for _ in 0..50 {
        let k0 = rng.random_range(2..=5);
        let kx = rng.random_range(2..=5);
        let m = rng.random_range(1..=4);
        let noisy = DiscreteNoisyFmc::random(&mut rng, k0, kx, m, 2);
        let pair = noisy.objective_pair()?;
        worst_noisy = worst_noisy
            .max((pair.d_direct - pair.d_integrated_plus_const).abs() / pair.d_direct.max(1.0));
    }
    println!("oracle: noisy-source identity, 50 instances, worst relative gap {worst_noisy:.3e}");

    // Nuisance-invariance: the product/informative gap must not move when the
    // encoder does, and the omitted cross-term must vanish.
    let mut worst_gap_drift = 0.0f64;
    let mut worst_cross = 0.0f64;
    for _ in 0..10 {
        let k0 = rng.random_range(2..=5);
        let kp = rng.random_range(1..=4);
        let m = rng.random_range(1..=4);
        let fmc = DiscreteProductFmc::random_invariant(&mut rng, k0, kp, m, 2);
        let base = fmc.invariance_reduction_check()?;
        worst_cross = worst_cross.max(base.cross_term.abs());
        for _ in 0..10 {
            let rows = (0..k0)
                .map(|_| {
                    let mut row: Vec<f64> =
                        (0..m).map(|_| rng.random_range(0.05..1.0)).collect();
                    let s: f64 = row.iter().sum();
                    row.iter_mut().for_each(|p| *p /= s);
                    row
                })
                .collect();
            let check = fmc.with_encoder(rows)?.invariance_reduction_check()?;
            worst_gap_drift = worst_gap_drift.max((check.gap - base.gap).abs());
            worst_cross = worst_cross.max(check.cross_term.abs());
        }
    }
    println!(
        "oracle: nuisance gap constancy over 10x10 encoder re-randomizations, \
         max drift {worst_gap_drift:.3e}, max cross-term {worst_cross:.3e}"
    );

    if worst_pair > ORACLE_IDENTITY_TOLERANCE
        || worst_noisy > ORACLE_IDENTITY_TOLERANCE
        || worst_cross > ORACLE_IDENTITY_TOLERANCE
        || worst_gap_drift > ORACLE_GAP_TOLERANCE
    {
        return Err(Error::ContractViolation(
            "oracle identity tolerance exceeded (see report above)".into(),
        ));
    }
    println!("oracle: ok");
    Ok(())
}

/// Jammer locations the encoder was trained to cover: the single center for
/// Δ = 0, otherwise nine points spanning [center − Δ, center + Δ].
fn trained_locations(scenario: &ScenarioConfig) -> Vec<f64> {
    if scenario.delta == 0.0 {
        vec![scenario.jammer_center]
    } else {
        grid(
            scenario.jammer_center - scenario.delta,
            scenario.delta / 4.0,
            scenario.jammer_center + scenario.delta,
        )
    }
}

/// Trains short pilot runs over a θ grid and recommends the θ with the best
/// mean nulling depth among those whose signal-invariance ratio stays small.
pub fn calibrate_theta(cfg: &RunConfig) -> Result<()> {
    if cfg.calibrate.thetas.is_empty() {
        return Err(Error::InvalidConfig("calibrate.thetas must be nonempty".into()));
    }
    let data = load_dataset(cfg)?;
    let pilot = if cfg.calibrate.n > 0 && cfg.calibrate.n < data.len() {
        data.subset(&(0..cfg.calibrate.n).collect::<Vec<_>>())?
    } else {
        data
    };
    // Keep the constraint-lift point at the same fraction of the (shorter)
    // pilot schedule.
    let lift_fraction = cfg.train.lift_after as f64 / cfg.train.epochs as f64;
    let pilot_epochs = cfg.calibrate.epochs;
    let pilot_lift = (lift_fraction * pilot_epochs as f64).round() as usize;

    let locations = trained_locations(&cfg.scenario);
    let mut rows = Vec::new();
    for &theta in &cfg.calibrate.thetas {
        let pilot_cfg = TrainConfig {
            theta,
            epochs: pilot_epochs,
            lift_after: pilot_lift.min(pilot_epochs),
            ..cfg.train.clone()
        };
        let (cb, _) = trainer::train(&pilot, cfg.scenario.m, &pilot_cfg)?;
        let mut depth_sum = 0.0;
        for &loc in &locations {
            let (depth, _, _) =
                sweep_row(&cb, &cfg.scenario, loc, cfg.sweep_amplitude, cfg.nulling_tol)?;
            depth_sum += depth;
        }
        let mean_depth = depth_sum / locations.len() as f64;
        let ratio = signal_invariance_ratio(
            &cb,
            &cfg.scenario,
            cfg.calibrate.eval_points,
            EVAL_STREAM_OFFSET,
        )?;
        println!(
            "calibrate-theta: theta = {theta}, mean depth {mean_depth:.2} dB, \
             invariance ratio {ratio:.4}"
        );
        rows.push((theta, mean_depth, ratio));
    }

    let feasible: Vec<&(f64, f64, f64)> =
        rows.iter().filter(|(_, _, r)| *r <= CALIBRATION_INVARIANCE_BOUND).collect();
    let best = if feasible.is_empty() {
        println!(
            "calibrate-theta: warning: no candidate kept the invariance ratio \
             within {CALIBRATION_INVARIANCE_BOUND}; recommending by depth alone"
        );
        rows.iter().min_by(|a, b| a.1.total_cmp(&b.1)).unwrap()
    } else {
        feasible.into_iter().min_by(|a, b| a.1.total_cmp(&b.1)).unwrap()
    };

    let (path, mut out) = create_output(cfg, "calibration.csv")?;
    out.write_all(comment_block("calibrate-theta", cfg).as_bytes())?;
    writeln!(out, "theta,mean_depth_db,invariance_ratio,feasible")?;
    for (theta, depth, ratio) in &rows {
        writeln!(
            out,
            "{theta},{depth},{ratio},{}",
            u8::from(*ratio <= CALIBRATION_INVARIANCE_BOUND)
        )?;
    }
    out.flush()?;

    println!("calibrate-theta: recommended theta = {}; csv -> {}", best.0, path.display());
    Ok(())
}

/// Writes a plot script with the config echo embedded as comments.
fn emit_plot_script(cfg: &RunConfig, name: &str, command: &str, body: &str) -> Result<()> {
    let (_, mut out) = create_output(cfg, name)?;
    writeln!(out, "#!/usr/bin/env python3")?;
    out.write_all(comment_block(command, cfg).as_bytes())?;
    out.write_all(body.as_bytes())?;
    out.flush()?;
    Ok(())
}

const PLOT_SWEEP_BODY: &str = r##"
"""Render nulling depth against nominal jammer location from sweep.csv."""
import csv
import sys
from pathlib import Path

import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt

csv_path = Path(sys.argv[1]) if len(sys.argv) > 1 else Path(__file__).with_name("sweep.csv")
locs, depths = [], []
with open(csv_path) as fh:
    for row in csv.DictReader(line for line in fh if not line.startswith("#")):
        locs.append(float(row["i_j"]))
        depths.append(float(row["depth_db"]))

plt.figure(figsize=(7, 4))
plt.plot(locs, depths, marker=".")
plt.xlabel("nominal jammer location $i_j$")
plt.ylabel("nulling depth (dB)")
plt.grid(True, alpha=0.3)
plt.tight_layout()
out = csv_path.with_suffix(".png")
plt.savefig(out, dpi=150)
print(f"wrote {out}")
"##;

const PLOT_NULL_EXAMPLE_BODY: &str = r##"
"""Render one input vector before and after jammer nulling."""
import csv
import sys
from pathlib import Path

import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt

csv_path = (
    Path(sys.argv[1]) if len(sys.argv) > 1 else Path(__file__).with_name("null_example.csv")
)
idx, before, after = [], [], []
with open(csv_path) as fh:
    for row in csv.DictReader(line for line in fh if not line.startswith("#")):
        idx.append(int(row["i"]))
        before.append(float(row["x_before"]))
        after.append(float(row["x_after"]))

fig, (top, bottom) = plt.subplots(2, 1, figsize=(7, 6), sharex=True)
top.plot(idx, before)
top.set_ylabel("input $x_i$")
top.grid(True, alpha=0.3)
bottom.plot(idx, after)
bottom.set_ylabel("nulled $((1-J)x)_i$")
bottom.set_xlabel("component $i$")
bottom.grid(True, alpha=0.3)
plt.tight_layout()
out = csv_path.with_suffix(".png")
plt.savefig(out, dpi=150)
print(f"wrote {out}")
"##;

//! Temporary diagnostic (not part of the suite): Δ=2 / M=4 training autopsy.

use rand::SeedableRng;
use svq_core::codebook::{CodeEntry, Codebook, CodebookMode};
use svq_core::datagen::{dataset_from, generate, pure_jammer, ScenarioConfig};
use svq_core::nulling::{jammer_projector, null, nulling_depth, posterior_gradient};
use svq_core::objective::objective;
use svq_core::trainer::{init_codebook, train_from, TrainConfig};
use svq_core::Dataset;

fn unit(v: &[f64]) -> Vec<f64> {
    let n = v.iter().map(|c| c * c).sum::<f64>().sqrt();
    v.iter().map(|c| c / n).collect()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn spread_codebook(scenario: &ScenarioConfig, centers: &[f64], theta: f64, w0: f64, s: f64) -> Codebook {
    let entries = centers
        .iter()
        .flat_map(|&c| {
            let dir = unit(&pure_jammer(scenario, c, 1.0).unwrap());
            [1.0, -1.0].map(move |sign| {
                let weight: Vec<f64> = dir.iter().map(|v| sign * v * w0).collect();
                let recon: Vec<f64> = dir.iter().map(|v| sign * v * s).collect();
                CodeEntry { weight, bias: -theta * w0, recon, recon_scale: s }
            })
        })
        .collect();
    Codebook::new(CodebookMode::Thresholded { theta }, w0, entries).unwrap()
}

fn inspect(label: &str, cb: &Codebook, scenario: &ScenarioConfig, data: &Dataset) {
    let profiles: Vec<(f64, Vec<f64>)> = [36.0, 37.0, 38.0, 39.0, 40.0]
        .iter()
        .map(|&c| (c, unit(&pure_jammer(scenario, c, 1.0).unwrap())))
        .collect();
    println!("{label}: D = {:.6e}", objective(cb, data).unwrap());
    for (k, e) in cb.entries().iter().enumerate() {
        let wn = dot(&e.weight, &e.weight).sqrt();
        let w = unit(&e.weight);
        print!("  w{k}: ‖w‖ = {wn:.3}, s = {:+.4} |", e.recon_scale);
        for (c, p) in &profiles {
            print!(" c{c}={:+.3}", dot(&w, p));
        }
        println!();
    }
    for tol in [1e-6, 1e-8, 1e-12] {
        print!("  tol {tol:.0e} depth:");
        for loc in [36.0, 36.5, 37.0, 37.5, 38.0, 38.5, 39.0, 39.5, 40.0] {
            let x = pure_jammer(scenario, loc, 1.0).unwrap();
            print!(" {loc}:{:.1}", nulling_depth(cb, &x, tol).unwrap());
        }
        print!("  rank@38: {}", {
            let x = pure_jammer(scenario, 38.0, 1.0).unwrap();
            jammer_projector(cb, &x, tol).unwrap().rank()
        });
        println!();
    }
}

#[test]
#[ignore]
fn delta2_seed_scan() {
    let scenario = ScenarioConfig::for_delta(2.0);
    let data = dataset_from(&generate(&scenario, 10_000, 0).unwrap()).unwrap();
    let phi37 = unit(&pure_jammer(&scenario, 37.0, 1.0).unwrap());
    let phi39 = unit(&pure_jammer(&scenario, 39.0, 1.0).unwrap());
    for seed in 1..=16u64 {
        let mut cfg = TrainConfig { theta: 2.0, w0: 5.0, seed, epochs: 800, ..TrainConfig::default() };
        cfg.lift_after = cfg.epochs;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(cfg.seed);
        let cb0 = init_codebook(scenario.d, scenario.m, &cfg, &mut rng).unwrap();
        let (cb, rep) = train_from(&data, cb0, &cfg, &mut rng).unwrap();
        let mut live = 0;
        let mut desc = String::new();
        for e in cb.entries() {
            let c7 = dot(&unit(&e.weight), &phi37);
            let c9 = dot(&unit(&e.weight), &phi39);
            if e.recon_scale.abs() > 0.1 {
                live += 1;
            }
            desc.push_str(&format!(" (c37={c7:+.2},c39={c9:+.2},s={:+.2})", e.recon_scale));
        }
        println!("seed {seed:2}: D = {:.4} live = {live}{desc}", rep.final_objective);
    }
}

const EVAL_OFFSET: u64 = 1 << 40;

fn recovery_rate(cb: &Codebook, scenario: &ScenarioConfig, tol: f64) -> (usize, f64) {
    let samples = generate(scenario, 100, EVAL_OFFSET).unwrap();
    let mut hits = 0;
    let mut worst = 0.0f64;
    for p in &samples {
        let after = null(cb, &p.x, tol).unwrap();
        let (peak, _) = after
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.abs().total_cmp(&b.1.abs()))
            .unwrap();
        let miss = ((peak + 1) as f64 - scenario.i_s).abs();
        if miss <= std::f64::consts::PI * scenario.sigma {
            hits += 1;
        } else {
            worst = worst.max(miss);
        }
    }
    (hits, worst)
}

#[test]
#[ignore]
fn delta2_variants_post_fix() {
    let scenario = ScenarioConfig::for_delta(2.0);
    let data = dataset_from(&generate(&scenario, 10_000, 0).unwrap()).unwrap();
    for (theta, w0, lift) in [(1.0, 10.0, Some(2400)), (2.0, 10.0, Some(2400)), (2.0, 5.0, None)] {
        let mut cfg = TrainConfig { theta, w0, ..TrainConfig::default() };
        cfg.lift_after = lift.unwrap_or(cfg.epochs);
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(cfg.seed);
        let cb0 = init_codebook(scenario.d, scenario.m, &cfg, &mut rng).unwrap();
        let (cb, _) = train_from(&data, cb0, &cfg, &mut rng).unwrap();
        inspect(&format!("θ={theta} w0={w0} lift={lift:?}"), &cb, &scenario, &data);
        let (hits, worst) = recovery_rate(&cb, &scenario, 1e-6);
        println!("  recovery@1e-6: {hits}/100 (worst miss {worst:.1})");
    }
}

#[test]
#[ignore]
fn delta0_miss_autopsy() {
    let scenario = ScenarioConfig::for_delta(0.0);
    let data = dataset_from(&generate(&scenario, 10_000, 0).unwrap()).unwrap();
    let cfg = TrainConfig { theta: 0.5, ..TrainConfig::default() };
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(cfg.seed);
    let cb0 = init_codebook(scenario.d, scenario.m, &cfg, &mut rng).unwrap();
    let (cb, rep) = train_from(&data, cb0, &cfg, &mut rng).unwrap();
    println!("D = {:.4}", rep.final_objective);
    inspect("trained Δ=0", &cb, &scenario, &data);
    let phi38 = unit(&pure_jammer(&scenario, 38.0, 1.0).unwrap());
    let tol = 1e-6;
    let mut dumped = 0;
    let samples = generate(&scenario, 100, EVAL_OFFSET).unwrap();
    for (i, p) in samples.iter().enumerate() {
        let after = null(&cb, &p.x, tol).unwrap();
        let (peak, pv) = after
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.abs().total_cmp(&b.1.abs()))
            .unwrap();
        let miss = ((peak + 1) as f64 - scenario.i_s).abs() > std::f64::consts::PI * scenario.sigma;
        if miss {
            let jam = pure_jammer(&scenario, p.i_j, p.a_j).unwrap();
            let jn = dot(&jam, &jam).sqrt();
            // Jammer leak: project the pure jammer with the same x-dependent projector.
            let proj = jammer_projector(&cb, &p.x, tol).unwrap();
            let jr = proj.apply(&jam).unwrap();
            let leak = dot(&jr, &jr).sqrt();
            println!(
                "miss {i}: a_s={:+.4} a_j={:+.4} ‖jam‖={jn:.3} leak={leak:.2e} rank={} peak@{} |{pv:+.4e}|",
                p.a_s,
                p.a_j,
                proj.rank(),
                peak + 1
            );
            if dumped < 2 {
                dumped += 1;
                for (k, e) in cb.entries().iter().enumerate() {
                    let z = dot(&e.weight, &p.x) + e.bias;
                    let q = 1.0 / (1.0 + (-z).exp());
                    println!(
                        "    unit {k}: bias={:+.4} (−θ‖w‖={:+.4}) z={z:+.3} q={q:.3e} dq={:.3e} w[0]={:+.4}",
                        e.bias,
                        -0.5 * dot(&e.weight, &e.weight).sqrt(),
                        q * (1.0 - q),
                        e.weight[0]
                    );
                }
                // Reconstruct the projector's span direction: P z = z − apply(z).
                let e1: Vec<f64> = (0..scenario.d).map(|c| if c == 0 { 1.0 } else { 0.0 }).collect();
                let pe1: Vec<f64> = e1
                    .iter()
                    .zip(proj.apply(&e1).unwrap().iter())
                    .map(|(a, b)| a - b)
                    .collect();
                let b = unit(&pe1);
                println!(
                    "    span dir: c38={:+.4} b[0]={:+.4} b[37]={:+.4} ‖Pe1‖={:.3e}",
                    dot(&b, &phi38),
                    b[0],
                    b[37],
                    dot(&pe1, &pe1).sqrt()
                );
                let rows = posterior_gradient(&cb, &p.x).unwrap();
                for (r, row) in rows.iter().enumerate() {
                    let n = dot(row, row).sqrt();
                    println!(
                        "    row {r}: ‖g‖={n:.3e} c38={:+.4} g[0]/‖g‖={:+.4}",
                        dot(&unit(row), &phi38),
                        row[0] / n
                    );
                }
            }
        }
    }
}

#[test]
#[ignore]
fn recovery_ideal_ceiling() {
    // Hit rate of the peak-location test when the jammer is removed exactly,
    // i.e. the residual is signal + noise only. Upper bound for any nulling.
    for delta in [0.0, 2.0, 4.0] {
        let scenario = ScenarioConfig::for_delta(delta);
        let samples = generate(&scenario, 100, EVAL_OFFSET).unwrap();
        let mut hits = 0;
        for p in &samples {
            let jam = pure_jammer(&scenario, p.i_j, p.a_j).unwrap();
            let resid: Vec<f64> = p.x.iter().zip(jam.iter()).map(|(x, j)| x - j).collect();
            let (peak, _) = resid
                .iter()
                .enumerate()
                .max_by(|a, b| a.1.abs().total_cmp(&b.1.abs()))
                .unwrap();
            if ((peak + 1) as f64 - scenario.i_s).abs() <= std::f64::consts::PI * scenario.sigma {
                hits += 1;
            }
        }
        println!("Δ={delta}: ideal-null recovery {hits}/100");
    }
}

#[test]
#[ignore]
fn final_configs_report() {
    // Δ=0 at the shipped defaults.
    {
        let scenario = ScenarioConfig::for_delta(0.0);
        let data = dataset_from(&generate(&scenario, 10_000, 0).unwrap()).unwrap();
        let cfg = TrainConfig { theta: 0.5, ..TrainConfig::default() };
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(cfg.seed);
        let cb0 = init_codebook(scenario.d, scenario.m, &cfg, &mut rng).unwrap();
        let (cb, rep) = train_from(&data, cb0, &cfg, &mut rng).unwrap();
        println!("Δ=0 defaults: D = {:.4}", rep.final_objective);
        let tol = 1e-6;
        print!("  sweep:");
        for loc in [30.0, 34.0, 36.0, 37.0, 37.5, 38.0, 38.5, 39.0, 40.0, 42.0, 46.0] {
            let x = pure_jammer(&scenario, loc, 1.0).unwrap();
            print!(" {loc}:{:.1}", nulling_depth(&cb, &x, tol).unwrap());
        }
        println!();
        let (hits, worst) = recovery_rate(&cb, &scenario, tol);
        println!("  recovery: {hits}/100 (worst miss {worst:.1})");
    }
    // Δ=2 and Δ=4 at the soft no-lift scenario configs.
    for delta in [2.0, 4.0] {
        let scenario = ScenarioConfig::for_delta(delta);
        let data = dataset_from(&generate(&scenario, 10_000, 0).unwrap()).unwrap();
        let mut cfg = TrainConfig { theta: 2.0, w0: 5.0, ..TrainConfig::default() };
        cfg.lift_after = cfg.epochs;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(cfg.seed);
        let cb0 = init_codebook(scenario.d, scenario.m, &cfg, &mut rng).unwrap();
        let (cb, rep) = train_from(&data, cb0, &cfg, &mut rng).unwrap();
        println!("Δ={delta} soft no-lift: D = {:.4}", rep.final_objective);
        inspect("  result", &cb, &scenario, &data);
        let (hits, worst) = recovery_rate(&cb, &scenario, 1e-12);
        println!("  recovery@1e-12: {hits}/100 (worst miss {worst:.1})");
    }
}

#[test]
#[ignore]
fn delta2_soft_spread_no_training() {
    let scenario = ScenarioConfig::for_delta(2.0);
    let data = dataset_from(&generate(&scenario, 10_000, 0).unwrap()).unwrap();
    for (theta, w0) in [(2.0, 3.0), (1.5, 3.0), (1.0, 3.0), (2.0, 4.0), (1.0, 5.0)] {
        let cb = spread_codebook(&scenario, &[37.0, 39.0], theta, w0, 1.25);
        inspect(&format!("soft spread θ={theta} w0={w0}"), &cb, &scenario, &data);
    }
}

#[test]
#[ignore]
fn delta2_no_lift_training() {
    let scenario = ScenarioConfig::for_delta(2.0);
    let data = dataset_from(&generate(&scenario, 10_000, 0).unwrap()).unwrap();
    let base = TrainConfig { theta: 2.0, w0: 3.0, ..TrainConfig::default() };
    let variants: Vec<(&str, TrainConfig)> = vec![
        ("is=1.25 b=64 seed=1", TrainConfig { init_scale: 1.25, ..base.clone() }),
        ("is=1.25 b=0  seed=1", TrainConfig { init_scale: 1.25, batch_size: 0, ..base.clone() }),
        ("is=0.1  b=64 seed=2", TrainConfig { seed: 2, ..base.clone() }),
        ("is=1.25 b=64 seed=2", TrainConfig { init_scale: 1.25, seed: 2, ..base.clone() }),
        ("is=1.25 lr=0.1 seed=1", TrainConfig { init_scale: 1.25, learning_rate: 0.1, ..base.clone() }),
        ("is=1.25 θ=1.5 seed=1", TrainConfig { init_scale: 1.25, theta: 1.5, ..base.clone() }),
    ];
    for (label, mut cfg) in variants {
        cfg.lift_after = cfg.epochs;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(cfg.seed);
        let cb0 = init_codebook(scenario.d, scenario.m, &cfg, &mut rng).unwrap();
        let (cb, rep) = train_from(&data, cb0, &cfg, &mut rng).unwrap();
        println!("no-lift {label}: final D = {:.6e}", rep.final_objective);
        inspect("  result", &cb, &scenario, &data);
    }
}

#[test]
#[ignore]
fn delta2_spread_init() {
    let scenario = ScenarioConfig::for_delta(2.0);
    let data = dataset_from(&generate(&scenario, 10_000, 0).unwrap()).unwrap();

    for (theta, w0) in [(2.0, 4.0), (2.0, 5.0), (2.0, 7.0), (2.0, 10.0)] {
        let cb0 = spread_codebook(&scenario, &[37.0, 39.0], theta, w0, 1.25);
        let mut cfg = TrainConfig { theta, w0, ..TrainConfig::default() };
        cfg.lift_after = cfg.epochs;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(cfg.seed);
        let (cb, rep) = train_from(&data, cb0, &cfg, &mut rng).unwrap();
        println!("spread-init θ={theta} w0={w0}: final D = {:.6e}", rep.final_objective);
        inspect("  result", &cb, &scenario, &data);
    }
}

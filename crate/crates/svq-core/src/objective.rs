//! Empirical reconstruction distortion and its analytic gradients.
//!
//! For a dataset of `N` points the objective is
//!
//! ```text
//! D = (2/N) · Σ_x Σ_y Pr(y|x) · ‖x − recon(y)‖²
//! ```
//!
//! the mean distortion of the probabilistic encode/decode round trip. With
//! `z_k = w(k)·x + b(k)`, clamped likelihood `Q_k`, `S = Σ_k Q_k`,
//! posterior `P_k = Q_k/S`, per-index error `e_k = ‖x − recon(k)‖²` and
//! per-point cost `C = Σ_k P_k·e_k`, the gradients are
//!
//! ```text
//! ∂C/∂z_k      = Q_k'·(e_k − C)/S          Q_k' = Q_k(1−Q_k), 0 when clamped
//! ∂D/∂w(k)     = (2/N)·Σ_x ∂C/∂z_k·∂z_k/∂w(k)
//!    ∂z_k/∂w   = x                          Affine
//!    ∂z_k/∂w   = x − θ·ŵ(k)                Thresholded (b = −θ‖w‖ chained)
//! ∂D/∂b(k)     = (2/N)·Σ_x ∂C/∂z_k
//! ∂D/∂recon(k) = −(4/N)·Σ_x P_k·(x − recon(k))
//! ```
//!
//! and, when the parallel constraint `recon(k) = s(k)·ŵ(k)` is active, the
//! reconstruction gradient is pushed through that reparameterization:
//!
//! ```text
//! ∂D/∂s(k)  = ∂D/∂recon(k) · ŵ(k)
//! ∂D/∂w(k) += (s(k)/‖w(k)‖) · (∂D/∂recon(k) − (∂D/∂recon(k)·ŵ(k))·ŵ(k))
//! ```
//!
//! Point sums are reduced in fixed-size chunks merged in chunk order (see
//! [`crate::par`]), so results are identical with and without the `parallel`
//! feature.

use crate::codebook::Activation;
use crate::linalg::{dist_sq, dot, norm};
use crate::par;
use crate::{Codebook, CodebookMode, Dataset, Error, Result};

/// Gradient of the objective with respect to one code entry's parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct EntryGradient {
    pub weight: Vec<f64>,
    pub bias: f64,
    pub recon: Vec<f64>,
    pub recon_scale: f64,
}

/// Gradients for every code entry, in entry order.
#[derive(Debug, Clone, PartialEq)]
pub struct GradientBundle {
    pub entries: Vec<EntryGradient>,
}

impl GradientBundle {
    fn zeros(m: usize, d: usize) -> Self {
        GradientBundle {
            entries: (0..m)
                .map(|_| EntryGradient {
                    weight: vec![0.0; d],
                    bias: 0.0,
                    recon: vec![0.0; d],
                    recon_scale: 0.0,
                })
                .collect(),
        }
    }

    fn add(&mut self, other: GradientBundle) {
        for (a, b) in self.entries.iter_mut().zip(other.entries) {
            for (x, y) in a.weight.iter_mut().zip(&b.weight) {
                *x += y;
            }
            a.bias += b.bias;
            for (x, y) in a.recon.iter_mut().zip(&b.recon) {
                *x += y;
            }
            a.recon_scale += b.recon_scale;
        }
    }

    fn scale(&mut self, f: f64) {
        for e in &mut self.entries {
            crate::linalg::scale(f, &mut e.weight);
            e.bias *= f;
            crate::linalg::scale(f, &mut e.recon);
            e.recon_scale *= f;
        }
    }

    /// Largest absolute gradient component across all entries and classes.
    pub fn max_abs(&self) -> f64 {
        let mut m: f64 = 0.0;
        for e in &self.entries {
            for v in e.weight.iter().chain(e.recon.iter()) {
                m = m.max(v.abs());
            }
            m = m.max(e.bias.abs()).max(e.recon_scale.abs());
        }
        m
    }

    fn is_finite(&self) -> bool {
        self.entries.iter().all(|e| {
            e.weight.iter().chain(e.recon.iter()).all(|v| v.is_finite())
                && e.bias.is_finite()
                && e.recon_scale.is_finite()
        })
    }
}

fn check_dims(cb: &Codebook, data: &Dataset) -> Result<()> {
    if data.dim() != cb.dim() {
        return Err(Error::DimensionMismatch { expected: cb.dim(), got: data.dim() });
    }
    if data.is_empty() {
        return Err(Error::EmptyDataset);
    }
    Ok(())
}

/// Per-point cost `C(x) = Σ_k P_k·‖x − recon(k)‖²` given a filled activation.
fn point_cost(cb: &Codebook, x: &[f64], act: &Activation, errs: &mut [f64]) -> f64 {
    let mut c = 0.0;
    for (k, e) in cb.entries().iter().enumerate() {
        let ek = dist_sq(x, &e.recon);
        errs[k] = ek;
        c += act.probs[k] * ek;
    }
    c
}

/// Mean round-trip distortion `D` over the dataset.
pub fn objective(cb: &Codebook, data: &Dataset) -> Result<f64> {
    check_dims(cb, data)?;
    let m = cb.len();
    let total = par::fold_chunks(
        data.len(),
        0.0f64,
        |range| {
            let mut act = Activation::default();
            let mut errs = vec![0.0; m];
            let mut sum = 0.0;
            for i in range {
                let x = data.point(i);
                cb.activation_into(x, &mut act);
                sum += point_cost(cb, x, &act, &mut errs);
            }
            sum
        },
        |acc, part| *acc += part,
    );
    let d = 2.0 * total / data.len() as f64;
    if !d.is_finite() {
        return Err(Error::NonFinite("objective".into()));
    }
    Ok(d)
}

/// Analytic gradients of [`objective`]. `parallel_recon` selects whether the
/// reconstruction vectors are free parameters (gradient reported in `recon`)
/// or tied to the weights via `recon = s·ŵ` (gradient pushed into
/// `recon_scale` and `weight`; `recon` then reports the raw ∂D/∂recon for
/// reference). In `Thresholded` mode the `bias` field reports the raw
/// z-sensitivity `(2/N)·Σ ∂C/∂z_k`; the bias itself is not a free parameter
/// there and the weight gradient already includes the −θ‖w‖ chain.
pub fn objective_gradients(
    cb: &Codebook,
    data: &Dataset,
    parallel_recon: bool,
) -> Result<GradientBundle> {
    check_dims(cb, data)?;
    let m = cb.len();
    let d = cb.dim();
    let norms: Vec<f64> = cb.entries().iter().map(|e| norm(&e.weight)).collect();
    let theta = match cb.mode() {
        CodebookMode::Thresholded { theta } => {
            // Zero norms are rejected at construction in this mode.
            Some(theta)
        }
        CodebookMode::Affine => None,
    };
    if parallel_recon {
        if let Some(k) = norms.iter().position(|&n| n == 0.0) {
            return Err(Error::DegenerateWeight { index: k });
        }
    }

    let mut bundle = par::fold_chunks(
        data.len(),
        GradientBundle::zeros(m, d),
        |range| {
            let mut acc = GradientBundle::zeros(m, d);
            let mut act = Activation::default();
            let mut errs = vec![0.0; m];
            for i in range {
                let x = data.point(i);
                cb.activation_into(x, &mut act);
                let c = point_cost(cb, x, &act, &mut errs);
                for (k, entry) in cb.entries().iter().enumerate() {
                    let g = &mut acc.entries[k];
                    let dcdz = act.dq[k] * (errs[k] - c) / act.sum;
                    // Encoder path: ∂C/∂w and ∂C/∂b.
                    match theta {
                        None => {
                            for (gw, &xi) in g.weight.iter_mut().zip(x) {
                                *gw += dcdz * xi;
                            }
                        }
                        Some(theta) => {
                            let tw = theta / norms[k];
                            for ((gw, &xi), &wi) in
                                g.weight.iter_mut().zip(x).zip(&entry.weight)
                            {
                                *gw += dcdz * (xi - tw * wi);
                            }
                        }
                    }
                    g.bias += dcdz;
                    // Reconstruction path: ∂C/∂recon = −2·P_k·(x − recon).
                    let p2 = -2.0 * act.probs[k];
                    for ((gr, &xi), &ri) in g.recon.iter_mut().zip(x).zip(&entry.recon) {
                        *gr += p2 * (xi - ri);
                    }
                }
            }
            acc
        },
        |acc, part| acc.add(part),
    );

    bundle.scale(2.0 / data.len() as f64);

    // The recon gradient is linear in the per-point sums, so the parallel
    // reparameterization can be applied once to the totals.
    for (k, e) in cb.entries().iter().enumerate() {
        let g = &mut bundle.entries[k];
        if parallel_recon {
            let wn = norms[k];
            let gs = dot(&g.recon, &e.weight) / wn;
            g.recon_scale = gs;
            let f = e.recon_scale / wn;
            for (gw, (&gr, &wi)) in g.weight.iter_mut().zip(g.recon.iter().zip(&e.weight)) {
                *gw += f * (gr - gs * wi / wn);
            }
        } else {
            g.recon_scale = 0.0;
        }
    }

    if !bundle.is_finite() {
        return Err(Error::NonFinite("objective gradient".into()));
    }
    Ok(bundle)
}

/// Posterior-weighted means `Σ_x Pr(y|x)·x / Σ_x Pr(y|x)` for every entry —
/// the reconstruction vectors that minimize the objective for the current
/// encoder. Entries whose total posterior mass underflows keep their current
/// reconstruction.
pub fn optimal_recons(cb: &Codebook, data: &Dataset) -> Result<Vec<Vec<f64>>> {
    check_dims(cb, data)?;
    let m = cb.len();
    let d = cb.dim();
    let (mass, sums) = par::fold_chunks(
        data.len(),
        (vec![0.0; m], vec![0.0; m * d]),
        |range| {
            let mut act = Activation::default();
            let mut mass = vec![0.0; m];
            let mut sums = vec![0.0; m * d];
            for i in range {
                let x = data.point(i);
                cb.activation_into(x, &mut act);
                for k in 0..m {
                    let p = act.probs[k];
                    mass[k] += p;
                    for (s, &xi) in sums[k * d..(k + 1) * d].iter_mut().zip(x) {
                        *s += p * xi;
                    }
                }
            }
            (mass, sums)
        },
        |acc, part| {
            for (a, b) in acc.0.iter_mut().zip(part.0) {
                *a += b;
            }
            for (a, b) in acc.1.iter_mut().zip(part.1) {
                *a += b;
            }
        },
    );
    let mut out = Vec::with_capacity(m);
    for k in 0..m {
        if mass[k] > 0.0 {
            out.push(sums[k * d..(k + 1) * d].iter().map(|s| s / mass[k]).collect());
        } else {
            out.push(cb.entry(k)?.recon.clone());
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::codebook::{CodeEntry, CodebookMode};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn entry(weight: Vec<f64>, bias: f64, recon: Vec<f64>) -> CodeEntry {
        CodeEntry { weight, bias, recon, recon_scale: 0.0 }
    }

    fn random_affine(rng: &mut ChaCha8Rng, m: usize, d: usize) -> Codebook {
        let entries = (0..m)
            .map(|_| CodeEntry {
                weight: (0..d).map(|_| rng.random_range(-1.0..1.0)).collect(),
                bias: rng.random_range(-0.5..0.5),
                recon: (0..d).map(|_| rng.random_range(-1.0..1.0)).collect(),
                recon_scale: rng.random_range(-1.0..1.0),
            })
            .collect();
        Codebook::new(CodebookMode::Affine, 0.0, entries).unwrap()
    }

    fn random_data(rng: &mut ChaCha8Rng, n: usize, d: usize) -> Dataset {
        Dataset::from_rows((0..n * d).map(|_| rng.random_range(-2.0..2.0)).collect(), n, d)
            .unwrap()
    }

    #[test]
    fn objective_is_zero_for_perfect_reconstruction() {
        let x = vec![0.3, -1.2, 0.8];
        let cb =
            Codebook::new(CodebookMode::Affine, 0.0, vec![entry(vec![1.0; 3], 0.0, x.clone())])
                .unwrap();
        let data = Dataset::from_rows(x, 1, 3).unwrap();
        assert_eq!(objective(&cb, &data).unwrap(), 0.0);
    }

    #[test]
    fn objective_carries_the_factor_of_two() {
        // Single point, M = 1, recon = x + u with ‖u‖ = 1 → D = 2·1² = 2.
        let x = vec![0.5, -0.25];
        let recon = vec![0.5 + 0.6, -0.25 + 0.8]; // u = (0.6, 0.8), ‖u‖ = 1
        let cb = Codebook::new(CodebookMode::Affine, 0.0, vec![entry(vec![0.0; 2], 0.0, recon)])
            .unwrap();
        let data = Dataset::from_rows(x, 1, 2).unwrap();
        let d = objective(&cb, &data).unwrap();
        assert!((d - 2.0).abs() < 1e-14, "got {d}");
    }

    #[test]
    fn objective_is_nonnegative_on_random_instances() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..20 {
            let cb = random_affine(&mut rng, 3, 4);
            let data = random_data(&mut rng, 17, 4);
            assert!(objective(&cb, &data).unwrap() >= 0.0);
        }
    }

    #[test]
    fn objective_rejects_dimension_mismatch() {
        let cb = Codebook::new(CodebookMode::Affine, 0.0, vec![entry(vec![0.0; 2], 0.0, vec![0.0; 2])])
            .unwrap();
        let data = Dataset::from_rows(vec![0.0; 3], 1, 3).unwrap();
        assert!(matches!(objective(&cb, &data), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn translation_leaves_objective_unchanged_for_single_entry() {
        // With M = 1 the posterior is constant, so the literal invariant holds.
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let d = 5;
        let cb = random_affine(&mut rng, 1, d);
        let data = random_data(&mut rng, 12, d);
        let t: Vec<f64> = (0..d).map(|_| rng.random_range(-3.0..3.0)).collect();

        let mut cb2 = cb.clone();
        let shifted_recon: Vec<f64> =
            cb.entry(0).unwrap().recon.iter().zip(&t).map(|(r, ti)| r + ti).collect();
        cb2.set_recon(0, shifted_recon).unwrap();
        let shifted: Vec<f64> = data
            .iter()
            .flat_map(|x| x.iter().zip(&t).map(|(xi, ti)| xi + ti).collect::<Vec<_>>())
            .collect();
        let data2 = Dataset::from_rows(shifted, data.len(), d).unwrap();

        let d1 = objective(&cb, &data).unwrap();
        let d2 = objective(&cb2, &data2).unwrap();
        assert!((d1 - d2).abs() <= 1e-10 * d1.max(1.0), "{d1} vs {d2}");
    }

    #[test]
    fn translation_with_bias_compensation_preserves_objective() {
        // For M ≥ 2 a joint translation shifts the posteriors unless each bias
        // absorbs w·t; with that compensation D is exactly invariant.
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        let d = 4;
        let cb = random_affine(&mut rng, 3, d);
        let data = random_data(&mut rng, 9, d);
        let t: Vec<f64> = (0..d).map(|_| rng.random_range(-2.0..2.0)).collect();

        let mut cb2 = cb.clone();
        for y in 0..cb.len() {
            let e = cb.entry(y).unwrap();
            let shifted: Vec<f64> = e.recon.iter().zip(&t).map(|(r, ti)| r + ti).collect();
            cb2.set_recon(y, shifted).unwrap();
            cb2.set_bias(y, e.bias - crate::linalg::dot(&e.weight, &t)).unwrap();
        }
        let shifted: Vec<f64> = data
            .iter()
            .flat_map(|x| x.iter().zip(&t).map(|(xi, ti)| xi + ti).collect::<Vec<_>>())
            .collect();
        let data2 = Dataset::from_rows(shifted, data.len(), d).unwrap();

        let d1 = objective(&cb, &data).unwrap();
        let d2 = objective(&cb2, &data2).unwrap();
        assert!((d1 - d2).abs() <= 1e-10 * d1.max(1.0), "{d1} vs {d2}");
    }

    #[test]
    fn recon_gradient_vanishes_at_the_posterior_weighted_mean() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let (m, d, n) = (3, 4, 25);
        let mut cb = random_affine(&mut rng, m, d);
        let data = random_data(&mut rng, n, d);
        for (y, r) in optimal_recons(&cb, &data).unwrap().into_iter().enumerate() {
            cb.set_recon(y, r).unwrap();
        }
        let bundle = objective_gradients(&cb, &data, false).unwrap();
        for e in &bundle.entries {
            for g in &e.recon {
                assert!(g.abs() < 1e-12, "recon gradient {g} not stationary");
            }
        }
    }

    #[test]
    fn conditional_mean_minimizes_objective_under_perturbation() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let (m, d, n) = (3, 4, 25);
        let mut cb = random_affine(&mut rng, m, d);
        let data = random_data(&mut rng, n, d);
        for (y, r) in optimal_recons(&cb, &data).unwrap().into_iter().enumerate() {
            cb.set_recon(y, r).unwrap();
        }
        let best = objective(&cb, &data).unwrap();
        for trial in 0..20 {
            let mut cbp = cb.clone();
            let y = trial % m;
            let perturbed: Vec<f64> = cbp
                .entry(y)
                .unwrap()
                .recon
                .iter()
                .map(|r| r + rng.random_range(-0.5..0.5))
                .collect();
            cbp.set_recon(y, perturbed).unwrap();
            let worse = objective(&cbp, &data).unwrap();
            assert!(worse >= best - 1e-12, "{worse} < {best}");
        }
    }

    #[test]
    fn bias_gradients_match_under_mirror_symmetry()  {
        // Zero weights ⇒ uniform posterior; with mirrored data and mirrored
        // reconstructions the two bias gradients coincide.
        let cb = Codebook::new(
            CodebookMode::Affine,
            0.0,
            vec![
                entry(vec![0.0, 0.0], 0.3, vec![0.7, -0.1]),
                entry(vec![0.0, 0.0], 0.3, vec![-0.7, 0.1]),
            ],
        )
        .unwrap();
        let data =
            Dataset::from_rows(vec![1.25, 0.5, -1.25, -0.5], 2, 2).unwrap();
        let bundle = objective_gradients(&cb, &data, false).unwrap();
        assert_eq!(bundle.entries[0].bias.to_bits(), bundle.entries[1].bias.to_bits());
    }

    #[test]
    fn gradients_flag_parallel_constraint_with_zero_weight() {
        let cb = Codebook::new(
            CodebookMode::Affine,
            0.0,
            vec![entry(vec![0.0, 0.0], 0.1, vec![0.5, 0.5])],
        )
        .unwrap();
        let data = Dataset::from_rows(vec![1.0, 0.0], 1, 2).unwrap();
        assert!(matches!(
            objective_gradients(&cb, &data, true),
            Err(Error::DegenerateWeight { index: 0 })
        ));
        assert!(objective_gradients(&cb, &data, false).is_ok());
    }

    #[test]
    fn recon_scale_gradient_is_zero_when_parallel_inactive() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let cb = random_affine(&mut rng, 2, 3);
        let data = random_data(&mut rng, 10, 3);
        let bundle = objective_gradients(&cb, &data, false).unwrap();
        assert!(bundle.entries.iter().all(|e| e.recon_scale == 0.0));
    }
}

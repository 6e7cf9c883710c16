//! Finite-difference validation of the analytic gradients.
//!
//! Each check perturbs one parameter by ±h, re-derives every dependent
//! quantity exactly the way the trainer would (bias from θ‖w‖ in thresholded
//! mode, reconstruction from `s·ŵ` when the parallel constraint is active),
//! re-evaluates the objective, and compares the central difference against the
//! analytic gradient bundle. Posterior gradients with respect to the input are
//! checked the same way against [`crate::nulling::posterior_gradient`].
//!
//! Relative errors are measured against `max(|analytic|, |fd|)` floored at a
//! small fraction of the largest gradient in the same bundle, so components
//! that are legitimately ~0 are judged against the instance's own scale
//! rather than against finite-difference roundoff noise.

use crate::codebook::{CodeEntry, CodebookMode};
use crate::linalg::norm;
use crate::objective::{objective, objective_gradients};
use crate::{nulling, Codebook, Dataset, Result};
use rand::Rng;

/// Default central-difference step.
pub const DEFAULT_STEP: f64 = 1e-5;

/// Fraction of the bundle's largest gradient used as the relative-error
/// denominator floor.
const SCALE_FLOOR_FRACTION: f64 = 1e-3;

/// Worst relative error seen per parameter class. Classes that do not apply
/// to the checked instance (free bias in thresholded mode, free recon under
/// the parallel constraint, recon_scale without it) stay at 0.
#[derive(Debug, Clone, Copy, Default)]
pub struct GradCheckReport {
    pub weight: f64,
    pub bias: f64,
    pub recon: f64,
    pub recon_scale: f64,
    pub posterior: f64,
}

impl GradCheckReport {
    pub fn worst(&self) -> f64 {
        self.weight
            .max(self.bias)
            .max(self.recon)
            .max(self.recon_scale)
            .max(self.posterior)
    }

    /// Component-wise maximum, for aggregating across instances.
    pub fn merge(&mut self, other: &GradCheckReport) {
        self.weight = self.weight.max(other.weight);
        self.bias = self.bias.max(other.bias);
        self.recon = self.recon.max(other.recon);
        self.recon_scale = self.recon_scale.max(other.recon_scale);
        self.posterior = self.posterior.max(other.posterior);
    }
}

fn rel_err(analytic: f64, fd: f64, scale_floor: f64) -> f64 {
    let diff = (analytic - fd).abs();
    if diff == 0.0 {
        return 0.0;
    }
    diff / analytic.abs().max(fd.abs()).max(scale_floor)
}

/// Random (codebook, dataset) pair for gradient checking. Scales are chosen
/// to keep every sigmoid well away from its clamps so no gradient is
/// artificially zeroed.
pub fn random_instance<R: Rng>(
    rng: &mut R,
    thresholded: bool,
    parallel: bool,
) -> (Codebook, Dataset) {
    let d = rng.random_range(2..=6);
    let m = rng.random_range(1..=4);
    let n = rng.random_range(3..=12);
    let theta = rng.random_range(0.2..1.2);
    let entries: Vec<CodeEntry> = (0..m)
        .map(|_| {
            let weight: Vec<f64> = loop {
                let w: Vec<f64> = (0..d).map(|_| rng.random_range(-1.0..1.0)).collect();
                if norm(&w) > 0.5 {
                    break w;
                }
            };
            let bias = if thresholded {
                -theta * norm(&weight)
            } else {
                rng.random_range(-1.0..1.0)
            };
            CodeEntry {
                weight,
                bias,
                recon: (0..d).map(|_| rng.random_range(-1.0..1.0)).collect(),
                recon_scale: rng.random_range(-1.0..1.0),
            }
        })
        .collect();
    let mode = if thresholded {
        CodebookMode::Thresholded { theta }
    } else {
        CodebookMode::Affine
    };
    let mut cb = Codebook::new(mode, 0.0, entries).expect("generated codebook is valid");
    if parallel {
        for y in 0..cb.len() {
            cb.sync_parallel_recon(y).expect("nonzero weight norm");
        }
    }
    let data = Dataset::from_rows(
        (0..n * d).map(|_| rng.random_range(-2.0..2.0)).collect(),
        n,
        d,
    )
    .expect("generated dataset is valid");
    (cb, data)
}

/// Re-derives dependent parameters after a raw weight write, mirroring the
/// trainer's update order.
fn apply_weight(cb: &mut Codebook, y: usize, weight: Vec<f64>, parallel: bool) -> Result<()> {
    cb.set_weight(y, weight)?;
    if parallel {
        cb.sync_parallel_recon(y)?;
    }
    Ok(())
}

/// Checks every objective-gradient component of one instance against central
/// finite differences with step `h`. `parallel` must match how the codebook's
/// reconstructions are tied.
pub fn check_objective_gradients(
    cb: &Codebook,
    data: &Dataset,
    parallel: bool,
    h: f64,
) -> Result<GradCheckReport> {
    let bundle = objective_gradients(cb, data, parallel)?;
    let scale_floor = SCALE_FLOOR_FRACTION * bundle.max_abs().max(1e-8);
    let mut report = GradCheckReport::default();
    let affine = matches!(cb.mode(), CodebookMode::Affine);

    for y in 0..cb.len() {
        let entry = cb.entry(y)?.clone();
        for j in 0..cb.dim() {
            let mut wp = entry.weight.clone();
            wp[j] += h;
            let mut wm = entry.weight.clone();
            wm[j] -= h;
            let mut cbp = cb.clone();
            apply_weight(&mut cbp, y, wp, parallel)?;
            let mut cbm = cb.clone();
            apply_weight(&mut cbm, y, wm, parallel)?;
            let fd = (objective(&cbp, data)? - objective(&cbm, data)?) / (2.0 * h);
            let e = rel_err(bundle.entries[y].weight[j], fd, scale_floor);
            report.weight = report.weight.max(e);
        }
        if affine {
            let mut cbp = cb.clone();
            cbp.set_bias(y, entry.bias + h)?;
            let mut cbm = cb.clone();
            cbm.set_bias(y, entry.bias - h)?;
            let fd = (objective(&cbp, data)? - objective(&cbm, data)?) / (2.0 * h);
            let e = rel_err(bundle.entries[y].bias, fd, scale_floor);
            report.bias = report.bias.max(e);
        }
        if parallel {
            let mut cbp = cb.clone();
            cbp.set_recon_scale(y, entry.recon_scale + h)?;
            cbp.sync_parallel_recon(y)?;
            let mut cbm = cb.clone();
            cbm.set_recon_scale(y, entry.recon_scale - h)?;
            cbm.sync_parallel_recon(y)?;
            let fd = (objective(&cbp, data)? - objective(&cbm, data)?) / (2.0 * h);
            let e = rel_err(bundle.entries[y].recon_scale, fd, scale_floor);
            report.recon_scale = report.recon_scale.max(e);
        } else {
            for j in 0..cb.dim() {
                let mut rp = entry.recon.clone();
                rp[j] += h;
                let mut rm = entry.recon.clone();
                rm[j] -= h;
                let mut cbp = cb.clone();
                cbp.set_recon(y, rp)?;
                let mut cbm = cb.clone();
                cbm.set_recon(y, rm)?;
                let fd = (objective(&cbp, data)? - objective(&cbm, data)?) / (2.0 * h);
                let e = rel_err(bundle.entries[y].recon[j], fd, scale_floor);
                report.recon = report.recon.max(e);
            }
        }
    }
    Ok(report)
}

/// Checks `∇_x Pr(y|x)` at `x` against central finite differences of the
/// posterior with step `h`.
pub fn check_posterior_gradient(cb: &Codebook, x: &[f64], h: f64) -> Result<f64> {
    let grads = nulling::posterior_gradient(cb, x)?;
    let gmax = grads
        .iter()
        .flat_map(|row| row.iter())
        .fold(0.0f64, |m, g| m.max(g.abs()));
    let scale_floor = SCALE_FLOOR_FRACTION * gmax.max(1e-8);
    let mut worst = 0.0f64;
    for j in 0..x.len() {
        let mut xp = x.to_vec();
        xp[j] += h;
        let mut xm = x.to_vec();
        xm[j] -= h;
        let pp = cb.posterior(&xp)?.probs;
        let pm = cb.posterior(&xm)?.probs;
        for y in 0..cb.len() {
            let fd = (pp[y] - pm[y]) / (2.0 * h);
            worst = worst.max(rel_err(grads[y][j], fd, scale_floor));
        }
    }
    Ok(worst)
}

/// Full check of one instance: every objective-gradient class plus the
/// posterior gradient at each data point.
pub fn check_instance(
    cb: &Codebook,
    data: &Dataset,
    parallel: bool,
    h: f64,
) -> Result<GradCheckReport> {
    let mut report = check_objective_gradients(cb, data, parallel, h)?;
    for i in 0..data.len() {
        let worst = check_posterior_gradient(cb, data.point(i), h)?;
        report.posterior = report.posterior.max(worst);
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn gradients_match_finite_differences_in_every_mode() {
        let mut rng = ChaCha8Rng::seed_from_u64(2024);
        for trial in 0..12 {
            let thresholded = trial % 2 == 1;
            let parallel = (trial / 2) % 2 == 1;
            let (cb, data) = random_instance(&mut rng, thresholded, parallel);
            let report = check_instance(&cb, &data, parallel, DEFAULT_STEP).unwrap();
            assert!(
                report.worst() < 1e-6,
                "trial {trial} (thresholded={thresholded}, parallel={parallel}): {report:?}"
            );
        }
    }
}

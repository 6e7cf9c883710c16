//! Codebook types and the probabilistic encode/decode path.
//!
//! A codebook holds `M` entries. Entry `y` (indices are 0-based throughout
//! this crate) scores an input `x` with the sigmoid likelihood
//!
//! ```text
//! Q(y|x) = 1 / (1 + exp(-(w(y)·x + b(y))))
//! ```
//!
//! and the posterior over code indices is the normalized likelihood vector
//! `Pr(y|x) = Q(y|x) / Σ_y' Q(y'|x)`. Encoding draws indices from the
//! posterior; decoding returns the stored reconstruction vector `recon(y)`.
//!
//! Two bias conventions exist:
//!
//! - `Affine`: `bias` is a free parameter.
//! - `Thresholded(θ)`: `bias` is derived as `b(y) = -θ·‖w(y)‖`, which places
//!   the half-activation surface of each sigmoid at normalized projection
//!   `ŵ(y)·x = θ`. The bias is recomputed on every weight change and is never
//!   a free parameter.
//!
//! All mutators re-establish the codebook invariants (derived bias, fixed
//! weight norm when `w0 > 0`), so a `Codebook` is valid at every observable
//! point.

use crate::linalg::{dot, norm, sigmoid};
use crate::{Error, InputVector, Result};
use rand::Rng;

/// Lower clamp applied to every likelihood so posteriors stay defined even
/// when a sigmoid underflows for extreme inputs.
pub const LIKELIHOOD_FLOOR: f64 = 1e-30;

/// Upper clamp keeping likelihoods strictly below 1 when a sigmoid saturates.
pub const LIKELIHOOD_CEIL: f64 = 1.0 - 1e-15;

/// Bias convention of a codebook.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CodebookMode {
    /// `bias` is a free parameter.
    Affine,
    /// `bias` is derived: `b(y) = -θ·‖w(y)‖`.
    Thresholded { theta: f64 },
}

/// One code entry: scoring weight, bias, and reconstruction vector. The
/// `recon_scale` field is the scalar `s(y)` used while the parallel
/// constraint ties `recon = s(y)·ŵ(y)`; it is carried (and serialized) even
/// when the constraint is inactive so training can resume consistently.
#[derive(Debug, Clone, PartialEq)]
pub struct CodeEntry {
    pub weight: Vec<f64>,
    pub bias: f64,
    pub recon: Vec<f64>,
    pub recon_scale: f64,
}

/// Normalized posterior over code indices together with the unnormalized
/// likelihoods it came from.
#[derive(Debug, Clone, PartialEq)]
pub struct PosteriorVector {
    pub probs: Vec<f64>,
    pub likelihoods: Vec<f64>,
}

/// Code indices drawn from one posterior evaluation.
#[derive(Debug, Clone, PartialEq)]
pub struct CodeSample {
    pub indices: Vec<usize>,
}

impl CodeSample {
    pub fn n(&self) -> usize {
        self.indices.len()
    }
}

/// The full encoder/decoder parameter set.
#[derive(Debug, Clone, PartialEq)]
pub struct Codebook {
    d: usize,
    mode: CodebookMode,
    /// Weight-norm target; `> 0` means the norm constraint is active and every
    /// `‖w(y)‖` equals this value, `0` means weights are unconstrained.
    w0: f64,
    entries: Vec<CodeEntry>,
}

impl Codebook {
    /// Validates and assembles a codebook. `w0 > 0` activates the norm
    /// constraint check; in `Thresholded` mode every stored bias must equal
    /// the derived value `-θ·‖w‖`.
    pub fn new(mode: CodebookMode, w0: f64, entries: Vec<CodeEntry>) -> Result<Self> {
        if entries.is_empty() {
            return Err(Error::InvalidConfig("codebook needs at least one entry".into()));
        }
        let d = entries[0].weight.len();
        if d == 0 {
            return Err(Error::InvalidConfig("input dimension must be at least 1".into()));
        }
        if !w0.is_finite() || w0 < 0.0 {
            return Err(Error::InvalidConfig(format!("norm target w0 = {w0} must be finite and ≥ 0")));
        }
        if let CodebookMode::Thresholded { theta } = mode {
            if !theta.is_finite() {
                return Err(Error::NonFinite("threshold θ".into()));
            }
        }
        for (y, e) in entries.iter().enumerate() {
            if e.weight.len() != d {
                return Err(Error::DimensionMismatch { expected: d, got: e.weight.len() });
            }
            if e.recon.len() != d {
                return Err(Error::DimensionMismatch { expected: d, got: e.recon.len() });
            }
            let finite = e.weight.iter().chain(e.recon.iter()).all(|v| v.is_finite())
                && e.bias.is_finite()
                && e.recon_scale.is_finite();
            if !finite {
                return Err(Error::NonFinite(format!("codebook entry {y}")));
            }
            let wn = norm(&e.weight);
            if let CodebookMode::Thresholded { theta } = mode {
                if wn == 0.0 {
                    return Err(Error::DegenerateWeight { index: y });
                }
                let derived = -theta * wn;
                if (e.bias - derived).abs() > 1e-12 * derived.abs().max(1.0) {
                    return Err(Error::InvalidConfig(format!(
                        "entry {y}: bias {} is not the derived value {derived}",
                        e.bias
                    )));
                }
            }
            if w0 > 0.0 && (wn - w0).abs() > 1e-9 * w0.max(1.0) {
                return Err(Error::InvalidConfig(format!(
                    "entry {y}: ‖w‖ = {wn} violates the active norm constraint w0 = {w0}"
                )));
            }
        }
        Ok(Codebook { d, mode, w0, entries })
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    /// Number of code indices `M`.
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        false // construction requires at least one entry
    }

    pub fn mode(&self) -> CodebookMode {
        self.mode
    }

    pub fn w0(&self) -> f64 {
        self.w0
    }

    pub fn entry(&self, y: usize) -> Result<&CodeEntry> {
        self.entries.get(y).ok_or(Error::IndexOutOfRange { index: y, len: self.entries.len() })
    }

    pub fn entries(&self) -> &[CodeEntry] {
        &self.entries
    }

    fn check_dim(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.d {
            return Err(Error::DimensionMismatch { expected: self.d, got: x.len() });
        }
        Ok(())
    }

    fn check_index(&self, y: usize) -> Result<()> {
        if y >= self.entries.len() {
            return Err(Error::IndexOutOfRange { index: y, len: self.entries.len() });
        }
        Ok(())
    }

    // --- mutation (used by the trainer and perturbation harnesses) ---

    /// Replaces `w(y)`, re-deriving everything that depends on it: the weight
    /// is renormalized to `w0` when the norm constraint is active, and the
    /// bias is recomputed in `Thresholded` mode.
    pub fn set_weight(&mut self, y: usize, mut weight: Vec<f64>) -> Result<()> {
        self.check_index(y)?;
        if weight.len() != self.d {
            return Err(Error::DimensionMismatch { expected: self.d, got: weight.len() });
        }
        if weight.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite(format!("weight update for entry {y}")));
        }
        let mut wn = norm(&weight);
        if self.w0 > 0.0 {
            if wn == 0.0 {
                return Err(Error::DegenerateWeight { index: y });
            }
            crate::linalg::scale(self.w0 / wn, &mut weight);
            wn = norm(&weight);
        }
        if let CodebookMode::Thresholded { theta } = self.mode {
            if wn == 0.0 {
                return Err(Error::DegenerateWeight { index: y });
            }
            self.entries[y].bias = -theta * wn;
        }
        self.entries[y].weight = weight;
        Ok(())
    }

    /// Sets a free bias. Only legal in `Affine` mode; in `Thresholded` mode
    /// the bias is derived and cannot be assigned.
    pub fn set_bias(&mut self, y: usize, bias: f64) -> Result<()> {
        self.check_index(y)?;
        if !bias.is_finite() {
            return Err(Error::NonFinite(format!("bias update for entry {y}")));
        }
        match self.mode {
            CodebookMode::Affine => {
                self.entries[y].bias = bias;
                Ok(())
            }
            CodebookMode::Thresholded { .. } => Err(Error::InvalidConfig(
                "bias is derived from θ and ‖w‖ in Thresholded mode".into(),
            )),
        }
    }

    pub fn set_recon(&mut self, y: usize, recon: Vec<f64>) -> Result<()> {
        self.check_index(y)?;
        if recon.len() != self.d {
            return Err(Error::DimensionMismatch { expected: self.d, got: recon.len() });
        }
        if recon.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite(format!("recon update for entry {y}")));
        }
        self.entries[y].recon = recon;
        Ok(())
    }

    pub fn set_recon_scale(&mut self, y: usize, scale: f64) -> Result<()> {
        self.check_index(y)?;
        if !scale.is_finite() {
            return Err(Error::NonFinite(format!("recon_scale update for entry {y}")));
        }
        self.entries[y].recon_scale = scale;
        Ok(())
    }

    /// Re-establishes the parallel constraint `recon(y) = recon_scale(y)·ŵ(y)`.
    pub fn sync_parallel_recon(&mut self, y: usize) -> Result<()> {
        self.check_index(y)?;
        let e = &self.entries[y];
        let wn = norm(&e.weight);
        if wn == 0.0 {
            return Err(Error::DegenerateWeight { index: y });
        }
        let s = e.recon_scale / wn;
        let recon: Vec<f64> = e.weight.iter().map(|w| s * w).collect();
        self.entries[y].recon = recon;
        Ok(())
    }

    /// Changes the norm-constraint target. A positive target renormalizes
    /// every weight (re-deriving biases); zero deactivates the constraint and
    /// leaves weights untouched.
    pub fn set_w0(&mut self, w0: f64) -> Result<()> {
        if !w0.is_finite() || w0 < 0.0 {
            return Err(Error::InvalidConfig(format!("norm target w0 = {w0} must be finite and ≥ 0")));
        }
        self.w0 = w0;
        if w0 > 0.0 {
            for y in 0..self.entries.len() {
                let w = self.entries[y].weight.clone();
                self.set_weight(y, w)?;
            }
        }
        Ok(())
    }

    // --- evaluation ---

    /// Sigmoid likelihood `Q(y|x)`, clamped to `(0,1)` by
    /// [`LIKELIHOOD_FLOOR`]/[`LIKELIHOOD_CEIL`]. In `Thresholded` mode the
    /// stored bias already equals `-θ·‖w(y)‖`, so both modes evaluate the
    /// identical expression `sigmoid(w(y)·x + b(y))` — bit-for-bit.
    pub fn likelihood(&self, x: &[f64], y: usize) -> Result<f64> {
        self.check_dim(x)?;
        self.check_index(y)?;
        let e = &self.entries[y];
        let z = dot(&e.weight, x) + e.bias;
        Ok(sigmoid(z).clamp(LIKELIHOOD_FLOOR, LIKELIHOOD_CEIL))
    }

    /// Normalized posterior `Pr(y|x)` over all code indices.
    pub fn posterior(&self, x: &[f64]) -> Result<PosteriorVector> {
        self.check_dim(x)?;
        let mut act = Activation::default();
        self.activation_into(x, &mut act);
        Ok(PosteriorVector { probs: act.probs, likelihoods: act.q })
    }

    /// Draws `n` independent code indices from the posterior at `x`.
    pub fn encode_sample<R: Rng>(&self, x: &[f64], n: usize, rng: &mut R) -> Result<CodeSample> {
        if n == 0 {
            return Err(Error::InvalidConfig("encode_sample needs n ≥ 1 draws".into()));
        }
        let post = self.posterior(x)?;
        let mut indices = Vec::with_capacity(n);
        for _ in 0..n {
            let u: f64 = rng.random();
            let mut cum = 0.0;
            let mut pick = self.entries.len() - 1;
            for (y, p) in post.probs.iter().enumerate() {
                cum += p;
                if u < cum {
                    pick = y;
                    break;
                }
            }
            indices.push(pick);
        }
        Ok(CodeSample { indices })
    }

    /// Reconstruction lookup `x′(y)`.
    pub fn decode(&self, y: usize) -> Result<InputVector> {
        self.check_index(y)?;
        InputVector::new(self.entries[y].recon.clone())
    }

    /// Posterior-weighted reconstruction `Σ_y Pr(y|x)·x′(y)`.
    pub fn decode_expected(&self, x: &[f64]) -> Result<InputVector> {
        let post = self.posterior(x)?;
        let mut out = vec![0.0; self.d];
        for (p, e) in post.probs.iter().zip(&self.entries) {
            crate::linalg::axpy(*p, &e.recon, &mut out);
        }
        InputVector::new(out)
    }

    /// Evaluates likelihoods, their z-derivatives, and the posterior into a
    /// reusable scratch buffer. This is the shared kernel behind the
    /// objective, its gradients, and the posterior gradient. The derivative
    /// entry is zeroed wherever the likelihood clamp is active, keeping the
    /// analytic gradients exactly consistent with the clamped objective.
    pub(crate) fn activation_into(&self, x: &[f64], act: &mut Activation) {
        debug_assert_eq!(x.len(), self.d);
        let m = self.entries.len();
        act.resize(m);
        let mut sum = 0.0;
        for (k, e) in self.entries.iter().enumerate() {
            let z = dot(&e.weight, x) + e.bias;
            let q = sigmoid(z);
            let (q, dq) = if q < LIKELIHOOD_FLOOR {
                (LIKELIHOOD_FLOOR, 0.0)
            } else if q > LIKELIHOOD_CEIL {
                (LIKELIHOOD_CEIL, 0.0)
            } else {
                (q, q * (1.0 - q))
            };
            act.q[k] = q;
            act.dq[k] = dq;
            sum += q;
        }
        act.sum = sum;
        for k in 0..m {
            act.probs[k] = act.q[k] / sum;
        }
    }
}

/// Scratch holding one posterior evaluation: clamped likelihoods `q`, their
/// z-derivatives `dq`, the likelihood sum, and the normalized posterior.
#[derive(Debug, Default, Clone)]
pub(crate) struct Activation {
    pub q: Vec<f64>,
    pub dq: Vec<f64>,
    pub probs: Vec<f64>,
    pub sum: f64,
}

impl Activation {
    fn resize(&mut self, m: usize) {
        self.q.resize(m, 0.0);
        self.dq.resize(m, 0.0);
        self.probs.resize(m, 0.0);
    }
}

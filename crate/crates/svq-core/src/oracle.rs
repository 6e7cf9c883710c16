//! Brute-force reference computations on fully enumerable discrete instances.
//!
//! These oracles verify the distortion identities that justify the
//! continuous implementation:
//!
//! 1. the full round-trip objective (triple sum over x, code vector y, x′
//!    with the explicit Bayes inverse) equals the reduced form with
//!    conditional-mean reconstructions and a factor of 2;
//! 2. the noisy-source objective computed directly on the undistorted states
//!    equals its Bayes-integrated form plus an encoder-independent constant;
//! 3. when the encoder ignores a nuisance component that is statistically
//!    independent of the informative component, the product-space objective
//!    differs from the informative-only objective by an encoder-independent
//!    constant (so minimizing either is equivalent), and the omitted
//!    cross-term vanishes once the nuisance reconstruction is the nuisance
//!    mean.
//!
//! Everything here enumerates exact sums over tiny supports — slow and
//! simple on purpose.

use crate::linalg::dist_sq;
use crate::{Error, Result};
use rand::Rng;

/// Largest allowed code-vector space `M^n` for full enumeration.
pub const MAX_CODE_STATES: u128 = 4096;

fn validate_distribution(p: &[f64], what: &str) -> Result<()> {
    if p.is_empty() {
        return Err(Error::InvalidConfig(format!("{what} is empty")));
    }
    if p.iter().any(|&v| !v.is_finite() || v < 0.0) {
        return Err(Error::ContractViolation(format!("{what} has negative or non-finite entries")));
    }
    let sum: f64 = p.iter().sum();
    if (sum - 1.0).abs() > 1e-9 {
        return Err(Error::ContractViolation(format!("{what} sums to {sum}, expected 1")));
    }
    Ok(())
}

fn validate_support(xs: &[Vec<f64>], what: &str) -> Result<usize> {
    if xs.is_empty() {
        return Err(Error::InvalidConfig(format!("{what} support is empty")));
    }
    let dim = xs[0].len();
    for v in xs {
        if v.len() != dim {
            return Err(Error::DimensionMismatch { expected: dim, got: v.len() });
        }
        if v.iter().any(|c| !c.is_finite()) {
            return Err(Error::NonFinite(format!("{what} support vector")));
        }
    }
    Ok(dim)
}

/// Calls `f` with every code vector in `{0..m}^n`, in lexicographic order.
fn for_each_code_vector(m: usize, n: usize, mut f: impl FnMut(&[usize])) {
    let mut y = vec![0usize; n];
    loop {
        f(&y);
        let mut pos = n;
        loop {
            if pos == 0 {
                return;
            }
            pos -= 1;
            y[pos] += 1;
            if y[pos] < m {
                break;
            }
            y[pos] = 0;
        }
    }
}

fn check_enumerable(m: usize, n: usize) -> Result<()> {
    let states = (m as u128).saturating_pow(n as u32);
    if states > MAX_CODE_STATES {
        return Err(Error::OracleTooLarge { states, limit: MAX_CODE_STATES });
    }
    Ok(())
}

/// A finite-state folded Markov chain: explicit input support with prior,
/// explicit per-index encoder table, and `n` independent index draws per code
/// vector.
#[derive(Debug, Clone)]
pub struct DiscreteFmc {
    xs: Vec<Vec<f64>>,
    prior: Vec<f64>,
    encoder: Vec<Vec<f64>>,
    n: usize,
}

impl DiscreteFmc {
    pub fn new(
        xs: Vec<Vec<f64>>,
        prior: Vec<f64>,
        encoder: Vec<Vec<f64>>,
        n: usize,
    ) -> Result<Self> {
        validate_support(&xs, "input")?;
        validate_distribution(&prior, "prior")?;
        if prior.len() != xs.len() || encoder.len() != xs.len() {
            return Err(Error::DimensionMismatch { expected: xs.len(), got: encoder.len() });
        }
        let m = encoder.first().map(|r| r.len()).unwrap_or(0);
        if m == 0 {
            return Err(Error::InvalidConfig("encoder has no code indices".into()));
        }
        for row in &encoder {
            if row.len() != m {
                return Err(Error::DimensionMismatch { expected: m, got: row.len() });
            }
            validate_distribution(row, "encoder row")?;
        }
        if n == 0 {
            return Err(Error::InvalidConfig("code vectors need n ≥ 1 draws".into()));
        }
        Ok(DiscreteFmc { xs, prior, encoder, n })
    }

    pub fn code_size(&self) -> usize {
        self.encoder[0].len()
    }

    /// Random instance with strictly positive tables.
    pub fn random<R: Rng>(rng: &mut R, k: usize, m: usize, n: usize, dim: usize) -> Self {
        let xs = random_support(rng, k, dim);
        let prior = random_distribution(rng, k);
        let encoder = (0..k).map(|_| random_distribution(rng, m)).collect();
        DiscreteFmc::new(xs, prior, encoder, n).expect("random instance is valid")
    }

    /// Probability of drawing code vector `y` from input state `x`.
    fn code_prob(&self, x: usize, y: &[usize]) -> f64 {
        y.iter().map(|&t| self.encoder[x][t]).product()
    }

    /// Round-trip distortion by the full triple sum with the explicit Bayes
    /// inverse: `Σ_{x,y,x′} Pr(x)·Pr(y|x)·Pr(x′|y)·‖x − x′‖²`.
    pub fn objective_full(&self) -> Result<f64> {
        check_enumerable(self.code_size(), self.n)?;
        let k = self.xs.len();
        let mut total = 0.0;
        for_each_code_vector(self.code_size(), self.n, |y| {
            let pyx: Vec<f64> = (0..k).map(|x| self.code_prob(x, y)).collect();
            let py: f64 = (0..k).map(|x| self.prior[x] * pyx[x]).sum();
            if py <= 0.0 {
                return;
            }
            for x in 0..k {
                let mass = self.prior[x] * pyx[x];
                if mass == 0.0 {
                    continue;
                }
                for xp in 0..k {
                    let bayes = self.prior[xp] * pyx[xp] / py;
                    total += mass * bayes * dist_sq(&self.xs[x], &self.xs[xp]);
                }
            }
        });
        Ok(total)
    }

    /// Round-trip distortion in reduced form: conditional-mean
    /// reconstructions and an explicit factor of 2,
    /// `2·Σ_x Pr(x)·Σ_y Pr(y|x)·‖x − x′(y)‖²`.
    pub fn objective_reduced(&self) -> Result<f64> {
        check_enumerable(self.code_size(), self.n)?;
        let k = self.xs.len();
        let dim = self.xs[0].len();
        let mut total = 0.0;
        for_each_code_vector(self.code_size(), self.n, |y| {
            let pyx: Vec<f64> = (0..k).map(|x| self.code_prob(x, y)).collect();
            let py: f64 = (0..k).map(|x| self.prior[x] * pyx[x]).sum();
            if py <= 0.0 {
                return;
            }
            let mut mean = vec![0.0; dim];
            for x in 0..k {
                crate::linalg::axpy(self.prior[x] * pyx[x] / py, &self.xs[x], &mut mean);
            }
            for x in 0..k {
                total += 2.0 * self.prior[x] * pyx[x] * dist_sq(&self.xs[x], &mean);
            }
        });
        Ok(total)
    }

    /// Conditional means `x′(y) = Σ_x Pr(x|y)·x` for scalar codes (n = 1).
    /// Indices with zero posterior mass fall back to the prior mean.
    pub fn conditional_means(&self) -> Result<Vec<Vec<f64>>> {
        if self.n != 1 {
            return Err(Error::InvalidConfig("conditional means are defined for n = 1".into()));
        }
        let k = self.xs.len();
        let dim = self.xs[0].len();
        let mut prior_mean = vec![0.0; dim];
        for x in 0..k {
            crate::linalg::axpy(self.prior[x], &self.xs[x], &mut prior_mean);
        }
        let mut out = Vec::with_capacity(self.code_size());
        for y in 0..self.code_size() {
            let py: f64 = (0..k).map(|x| self.prior[x] * self.encoder[x][y]).sum();
            if py <= 0.0 {
                out.push(prior_mean.clone());
                continue;
            }
            let mut mean = vec![0.0; dim];
            for x in 0..k {
                crate::linalg::axpy(self.prior[x] * self.encoder[x][y] / py, &self.xs[x], &mut mean);
            }
            out.push(mean);
        }
        Ok(out)
    }
}

/// A source AND an observation channel: undistorted states `x0` with prior,
/// a distortion channel `Pr(x|x0)` over a finite observed support, and an
/// encoder over the observed support (scalar codes).
#[derive(Debug, Clone)]
pub struct DiscreteNoisyFmc {
    x0s: Vec<Vec<f64>>,
    prior0: Vec<f64>,
    channel: Vec<Vec<f64>>,
    encoder: Vec<Vec<f64>>,
}

/// Result of [`DiscreteNoisyFmc::objective_pair`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoisyObjectivePair {
    /// Distortion measured directly against the undistorted states.
    pub d_direct: f64,
    /// Bayes-integrated form plus the additive constant.
    pub d_integrated_plus_const: f64,
    /// The encoder-independent constant (expected within-posterior spread).
    pub constant: f64,
}

impl DiscreteNoisyFmc {
    pub fn new(
        x0s: Vec<Vec<f64>>,
        prior0: Vec<f64>,
        channel: Vec<Vec<f64>>,
        encoder: Vec<Vec<f64>>,
    ) -> Result<Self> {
        validate_support(&x0s, "undistorted")?;
        validate_distribution(&prior0, "prior")?;
        if prior0.len() != x0s.len() || channel.len() != x0s.len() {
            return Err(Error::DimensionMismatch { expected: x0s.len(), got: channel.len() });
        }
        let kx = channel.first().map(|r| r.len()).unwrap_or(0);
        if kx == 0 {
            return Err(Error::InvalidConfig("channel has no observed states".into()));
        }
        for row in &channel {
            if row.len() != kx {
                return Err(Error::DimensionMismatch { expected: kx, got: row.len() });
            }
            validate_distribution(row, "channel row")?;
        }
        if encoder.len() != kx {
            return Err(Error::DimensionMismatch { expected: kx, got: encoder.len() });
        }
        let m = encoder.first().map(|r| r.len()).unwrap_or(0);
        if m == 0 {
            return Err(Error::InvalidConfig("encoder has no code indices".into()));
        }
        for row in &encoder {
            if row.len() != m {
                return Err(Error::DimensionMismatch { expected: m, got: row.len() });
            }
            validate_distribution(row, "encoder row")?;
        }
        Ok(DiscreteNoisyFmc { x0s, prior0, channel, encoder })
    }

    pub fn random<R: Rng>(rng: &mut R, k0: usize, kx: usize, m: usize, dim: usize) -> Self {
        let x0s = random_support(rng, k0, dim);
        let prior0 = random_distribution(rng, k0);
        let channel = (0..k0).map(|_| random_distribution(rng, kx)).collect();
        let encoder = (0..kx).map(|_| random_distribution(rng, m)).collect();
        DiscreteNoisyFmc::new(x0s, prior0, channel, encoder).expect("random instance is valid")
    }

    /// Computes the two forms of the noisy-source distortion with the optimal
    /// (conditional-mean) reconstruction `x0′(y)`:
    ///
    /// - direct: `2·Σ_{x0,x,y} Pr(x0)Pr(x|x0)Pr(y|x)·‖x0 − x0′(y)‖²`
    /// - integrated: the same with `x0` replaced by its posterior mean
    ///   `x0(x) = Σ_{x0} Pr(x0|x)·x0`, plus the constant
    ///   `2·Σ_x Pr(x)·Σ_{x0} Pr(x0|x)·‖x0 − x0(x)‖²`.
    ///
    /// The two totals agree identically; returning both exposes the identity
    /// to tests.
    pub fn objective_pair(&self) -> Result<NoisyObjectivePair> {
        let k0 = self.x0s.len();
        let kx = self.channel[0].len();
        let m = self.encoder[0].len();
        let dim = self.x0s[0].len();

        // Observed-state marginal and posterior over undistorted states.
        let mut px = vec![0.0; kx];
        for x0 in 0..k0 {
            for x in 0..kx {
                px[x] += self.prior0[x0] * self.channel[x0][x];
            }
        }
        let mut x0_bar = vec![vec![0.0; dim]; kx];
        for x in 0..kx {
            if px[x] <= 0.0 {
                continue;
            }
            for x0 in 0..k0 {
                let w = self.prior0[x0] * self.channel[x0][x] / px[x];
                crate::linalg::axpy(w, &self.x0s[x0], &mut x0_bar[x]);
            }
        }

        // Optimal reconstructions per code index.
        let mut py = vec![0.0; m];
        let mut recon = vec![vec![0.0; dim]; m];
        for x0 in 0..k0 {
            for x in 0..kx {
                let mass = self.prior0[x0] * self.channel[x0][x];
                for y in 0..m {
                    py[y] += mass * self.encoder[x][y];
                }
            }
        }
        for y in 0..m {
            if py[y] <= 0.0 {
                continue;
            }
            for x0 in 0..k0 {
                for x in 0..kx {
                    let w = self.prior0[x0] * self.channel[x0][x] * self.encoder[x][y] / py[y];
                    crate::linalg::axpy(w, &self.x0s[x0], &mut recon[y]);
                }
            }
        }

        let mut d_direct = 0.0;
        for x0 in 0..k0 {
            for x in 0..kx {
                let mass = self.prior0[x0] * self.channel[x0][x];
                if mass == 0.0 {
                    continue;
                }
                for y in 0..m {
                    d_direct +=
                        2.0 * mass * self.encoder[x][y] * dist_sq(&self.x0s[x0], &recon[y]);
                }
            }
        }

        let mut constant = 0.0;
        for x in 0..kx {
            if px[x] <= 0.0 {
                continue;
            }
            for x0 in 0..k0 {
                constant += 2.0
                    * self.prior0[x0]
                    * self.channel[x0][x]
                    * dist_sq(&self.x0s[x0], &x0_bar[x]);
            }
        }

        let mut d_integrated = 0.0;
        for x in 0..kx {
            if px[x] <= 0.0 {
                continue;
            }
            for y in 0..m {
                d_integrated += 2.0 * px[x] * self.encoder[x][y] * dist_sq(&x0_bar[x], &recon[y]);
            }
        }

        Ok(NoisyObjectivePair {
            d_direct,
            d_integrated_plus_const: d_integrated + constant,
            constant,
        })
    }
}

/// A product-space FMC: informative component `x0` and nuisance component
/// `x⊥` living in the same ambient space, a conditional `Pr(x⊥|x0)`, an
/// encoder over the joint state, and explicit reconstruction tables for both
/// components.
#[derive(Debug, Clone)]
pub struct DiscreteProductFmc {
    x0s: Vec<Vec<f64>>,
    prior0: Vec<f64>,
    xperps: Vec<Vec<f64>>,
    /// `cond[x0][xp] = Pr(x⊥ = xperps[xp] | x0)`.
    cond: Vec<Vec<f64>>,
    /// `encoder[x0][xp][y] = Pr(y | x0, x⊥)`.
    encoder: Vec<Vec<Vec<f64>>>,
    recon0: Vec<Vec<f64>>,
    reconp: Vec<Vec<f64>>,
}

/// Result of [`DiscreteProductFmc::invariance_reduction_check`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InvarianceReduction {
    /// Product-space objective (cross-term omitted, as printed).
    pub d_product: f64,
    /// Informative-component objective.
    pub d_informative: f64,
    /// `d_product − d_informative`; encoder-independent under the
    /// independence assumptions.
    pub gap: f64,
    /// The omitted cross-term, evaluated explicitly.
    pub cross_term: f64,
}

impl DiscreteProductFmc {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        x0s: Vec<Vec<f64>>,
        prior0: Vec<f64>,
        xperps: Vec<Vec<f64>>,
        cond: Vec<Vec<f64>>,
        encoder: Vec<Vec<Vec<f64>>>,
        recon0: Vec<Vec<f64>>,
        reconp: Vec<Vec<f64>>,
    ) -> Result<Self> {
        let dim = validate_support(&x0s, "informative")?;
        let dimp = validate_support(&xperps, "nuisance")?;
        if dimp != dim {
            return Err(Error::DimensionMismatch { expected: dim, got: dimp });
        }
        validate_distribution(&prior0, "prior")?;
        let k0 = x0s.len();
        let kp = xperps.len();
        if prior0.len() != k0 || cond.len() != k0 || encoder.len() != k0 {
            return Err(Error::DimensionMismatch { expected: k0, got: cond.len() });
        }
        let mut m = 0;
        for x0 in 0..k0 {
            if cond[x0].len() != kp {
                return Err(Error::DimensionMismatch { expected: kp, got: cond[x0].len() });
            }
            validate_distribution(&cond[x0], "nuisance conditional row")?;
            if encoder[x0].len() != kp {
                return Err(Error::DimensionMismatch { expected: kp, got: encoder[x0].len() });
            }
            for row in &encoder[x0] {
                if m == 0 {
                    m = row.len();
                }
                if row.len() != m || m == 0 {
                    return Err(Error::DimensionMismatch { expected: m.max(1), got: row.len() });
                }
                validate_distribution(row, "encoder row")?;
            }
        }
        if recon0.len() != m || reconp.len() != m {
            return Err(Error::DimensionMismatch { expected: m, got: recon0.len() });
        }
        for v in recon0.iter().chain(reconp.iter()) {
            if v.len() != dim {
                return Err(Error::DimensionMismatch { expected: dim, got: v.len() });
            }
            if v.iter().any(|c| !c.is_finite()) {
                return Err(Error::NonFinite("reconstruction table".into()));
            }
        }
        Ok(DiscreteProductFmc { x0s, prior0, xperps, cond, encoder, recon0, reconp })
    }

    /// Random instance satisfying the independence assumptions exactly:
    /// `Pr(y|x0,x⊥) = Pr(y|x0)` (encoder rows broadcast over the nuisance) and
    /// `Pr(x⊥|x0) = Pr(x⊥)` (identical conditional rows), with the nuisance
    /// reconstruction pinned to the nuisance mean.
    pub fn random_invariant<R: Rng>(rng: &mut R, k0: usize, kp: usize, m: usize, dim: usize) -> Self {
        let x0s = random_support(rng, k0, dim);
        let xperps = random_support(rng, kp, dim);
        let prior0 = random_distribution(rng, k0);
        let marginal = random_distribution(rng, kp);
        let cond: Vec<Vec<f64>> = (0..k0).map(|_| marginal.clone()).collect();
        let per_x0: Vec<Vec<f64>> = (0..k0).map(|_| random_distribution(rng, m)).collect();
        let encoder: Vec<Vec<Vec<f64>>> = per_x0
            .iter()
            .map(|row| (0..kp).map(|_| row.clone()).collect())
            .collect();
        let recon0 = random_support(rng, m, dim);
        let mut perp_mean = vec![0.0; dim];
        for (p, xp) in marginal.iter().zip(&xperps) {
            crate::linalg::axpy(*p, xp, &mut perp_mean);
        }
        let reconp = vec![perp_mean; m];
        DiscreteProductFmc::new(x0s, prior0, xperps, cond, encoder, recon0, reconp)
            .expect("random invariant instance is valid")
    }

    /// Same instance with new per-`x0` encoder rows (broadcast over the
    /// nuisance, preserving the independence assumption).
    pub fn with_encoder(&self, per_x0: Vec<Vec<f64>>) -> Result<Self> {
        if per_x0.len() != self.x0s.len() {
            return Err(Error::DimensionMismatch { expected: self.x0s.len(), got: per_x0.len() });
        }
        let kp = self.xperps.len();
        let encoder = per_x0
            .iter()
            .map(|row| (0..kp).map(|_| row.clone()).collect())
            .collect();
        DiscreteProductFmc::new(
            self.x0s.clone(),
            self.prior0.clone(),
            self.xperps.clone(),
            self.cond.clone(),
            encoder,
            self.recon0.clone(),
            self.reconp.clone(),
        )
    }

    /// Same instance with a different nuisance reconstruction table.
    pub fn with_perp_recons(&self, reconp: Vec<Vec<f64>>) -> Result<Self> {
        DiscreteProductFmc::new(
            self.x0s.clone(),
            self.prior0.clone(),
            self.xperps.clone(),
            self.cond.clone(),
            self.encoder.clone(),
            self.recon0.clone(),
            reconp,
        )
    }

    /// Product-space objective with the cross-term omitted:
    /// `2·Σ Pr(x0)Pr(x⊥|x0)Pr(y|x0,x⊥)·(‖x0−x0′(y)‖² + ‖x⊥−x⊥′(y)‖²)`.
    pub fn product_objective(&self) -> f64 {
        let mut total = 0.0;
        for (x0, x0v) in self.x0s.iter().enumerate() {
            for (xp, xpv) in self.xperps.iter().enumerate() {
                let mass = self.prior0[x0] * self.cond[x0][xp];
                if mass == 0.0 {
                    continue;
                }
                for (y, ey) in self.encoder[x0][xp].iter().enumerate() {
                    total += 2.0
                        * mass
                        * ey
                        * (dist_sq(x0v, &self.recon0[y]) + dist_sq(xpv, &self.reconp[y]));
                }
            }
        }
        total
    }

    /// The omitted cross-term `Σ Pr(...)·(x0−x0′(y))·(x⊥−x⊥′(y))`.
    pub fn cross_term(&self) -> f64 {
        let mut total = 0.0;
        for (x0, x0v) in self.x0s.iter().enumerate() {
            for (xp, xpv) in self.xperps.iter().enumerate() {
                let mass = self.prior0[x0] * self.cond[x0][xp];
                if mass == 0.0 {
                    continue;
                }
                for (y, ey) in self.encoder[x0][xp].iter().enumerate() {
                    let dot: f64 = x0v
                        .iter()
                        .zip(&self.recon0[y])
                        .zip(xpv.iter().zip(&self.reconp[y]))
                        .map(|((a, ar), (b, br))| (a - ar) * (b - br))
                        .sum();
                    total += mass * ey * dot;
                }
            }
        }
        total
    }

    /// Informative-component objective `2·Σ Pr(x0)Pr(y|x0)·‖x0−x0′(y)‖²`
    /// (requires the encoder to be nuisance-independent).
    fn informative_objective(&self) -> f64 {
        let mut total = 0.0;
        for (x0, x0v) in self.x0s.iter().enumerate() {
            for (y, ey) in self.encoder[x0][0].iter().enumerate() {
                total += 2.0 * self.prior0[x0] * ey * dist_sq(x0v, &self.recon0[y]);
            }
        }
        total
    }

    /// Verifies the independence assumptions and the pinned nuisance
    /// reconstruction, then returns the two objectives, their gap, and the
    /// explicit cross-term. The gap must be independent of the encoder.
    pub fn invariance_reduction_check(&self) -> Result<InvarianceReduction> {
        let tol = 1e-12;
        // Pr(y|x0,x⊥) must not depend on x⊥.
        for (x0, rows) in self.encoder.iter().enumerate() {
            for row in rows.iter().skip(1) {
                for (a, b) in row.iter().zip(&rows[0]) {
                    if (a - b).abs() > tol {
                        return Err(Error::ContractViolation(format!(
                            "encoder depends on the nuisance state at x0 = {x0}"
                        )));
                    }
                }
            }
        }
        // Pr(x⊥|x0) must not depend on x0.
        for row in self.cond.iter().skip(1) {
            for (a, b) in row.iter().zip(&self.cond[0]) {
                if (a - b).abs() > tol {
                    return Err(Error::ContractViolation(
                        "nuisance conditional depends on the informative state".into(),
                    ));
                }
            }
        }
        // x⊥′(y) must equal the nuisance mean ⟨x⊥⟩.
        let dim = self.x0s[0].len();
        let mut perp_mean = vec![0.0; dim];
        for (p, xp) in self.cond[0].iter().zip(&self.xperps) {
            crate::linalg::axpy(*p, xp, &mut perp_mean);
        }
        for (y, r) in self.reconp.iter().enumerate() {
            for (a, b) in r.iter().zip(&perp_mean) {
                if (a - b).abs() > tol {
                    return Err(Error::ContractViolation(format!(
                        "nuisance reconstruction {y} is not the nuisance mean"
                    )));
                }
            }
        }
        let d_product = self.product_objective();
        let d_informative = self.informative_objective();
        Ok(InvarianceReduction {
            d_product,
            d_informative,
            gap: d_product - d_informative,
            cross_term: self.cross_term(),
        })
    }
}

fn random_distribution<R: Rng>(rng: &mut R, len: usize) -> Vec<f64> {
    let mut v: Vec<f64> = (0..len).map(|_| rng.random_range(0.05..1.0)).collect();
    let sum: f64 = v.iter().sum();
    for p in &mut v {
        *p /= sum;
    }
    v
}

fn random_support<R: Rng>(rng: &mut R, len: usize, dim: usize) -> Vec<Vec<f64>> {
    (0..len)
        .map(|_| (0..dim).map(|_| rng.random_range(-2.0..2.0)).collect())
        .collect()
}

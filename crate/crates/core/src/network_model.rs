//! Linear classical channel, linear combiner and their optimal design.
//!
//! The `K` cluster estimates `φ̂` pass through `c(φ̂) = Hφ̂ + n` with i.i.d.
//! `n_i ~ N(0, v)` and are fused by `φ̂_final = gᵀ c(φ̂)`. For i.i.d. unbiased
//! estimates with variance `σ²` the second-moment matrix is
//! `R = σ²I + φ²11ᵀ`, and the mean squared error is
//!
//! ```text
//! ε(g, H) = gᵀ(HRHᵀ + vI)g + φ² − 2φ² gᵀH1
//! ```
//!
//! Functions taking a `phase` argument use it for every `φ²` appearing in
//! the error or in the optimal designs. Passing a value other than the true
//! phase gives the plug-in (non-genie) design.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::linalg;
use crate::quantum_probe::{ClusterConfig, EstimateVector};

/// Tolerance on `|gᵀH1 − 1|` for flagging an unbiased design.
pub const UNBIASED_TOLERANCE: f64 = 1e-9;

/// Gain matrix `H` and per-entry noise variance `v`.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelSpec {
    gain: DMatrix<f64>,
    noise_variance: f64,
}

impl ChannelSpec {
    pub fn new(gain: DMatrix<f64>, noise_variance: f64) -> Result<Self> {
        if !gain.is_square() {
            return Err(Error::DimensionMismatch { expected: gain.nrows(), got: gain.ncols() });
        }
        if !(noise_variance.is_finite() && noise_variance >= 0.0) {
            return Err(Error::InvalidExperiment(format!(
                "noise variance must be finite and non-negative, got {noise_variance}"
            )));
        }
        if gain.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidExperiment("gain matrix has non-finite entries".into()));
        }
        Ok(Self { gain, noise_variance })
    }

    pub fn identity(k: usize, noise_variance: f64) -> Result<Self> {
        Self::new(DMatrix::identity(k, k), noise_variance)
    }

    pub fn gain(&self) -> &DMatrix<f64> {
        &self.gain
    }

    pub fn noise_variance(&self) -> f64 {
        self.noise_variance
    }

    pub fn dim(&self) -> usize {
        self.gain.nrows()
    }

    pub fn with_gain(&self, gain: DMatrix<f64>) -> Result<Self> {
        Self::new(gain, self.noise_variance)
    }
}

/// Linear fusion weights `g`.
#[derive(Debug, Clone, PartialEq)]
pub struct CombinerWeights(DVector<f64>);

impl CombinerWeights {
    pub fn new(weights: DVector<f64>) -> Result<Self> {
        if weights.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidExperiment("combiner weights must be finite".into()));
        }
        Ok(Self(weights))
    }

    pub fn from_slice(weights: &[f64]) -> Result<Self> {
        Self::new(DVector::from_column_slice(weights))
    }

    /// `(1/K)·1`.
    pub fn uniform(k: usize) -> Self {
        Self(DVector::from_element(k, 1.0 / k as f64))
    }

    pub fn as_vector(&self) -> &DVector<f64> {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn norm_squared(&self) -> f64 {
        self.0.norm_squared()
    }

    fn nonzero(&self) -> Result<()> {
        if self.0.iter().all(|&x| x == 0.0) {
            Err(Error::ZeroWeights)
        } else {
            Ok(())
        }
    }
}

/// `R = σ²I + φ²11ᵀ`, stored by its three parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AutocorrelationModel {
    k: usize,
    sigma_sq: f64,
    phase_sq: f64,
}

impl AutocorrelationModel {
    pub fn new(k: usize, sigma_sq: f64, phase: f64) -> Result<Self> {
        if k == 0 {
            return Err(Error::InvalidConfig("k must be at least 1".into()));
        }
        if !(sigma_sq.is_finite() && sigma_sq >= 0.0) || !phase.is_finite() {
            return Err(Error::InvalidConfig(format!(
                "invalid autocorrelation parameters sigma^2={sigma_sq}, phi={phase}"
            )));
        }
        Ok(Self { k, sigma_sq, phase_sq: phase * phase })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn sigma_sq(&self) -> f64 {
        self.sigma_sq
    }

    pub fn phase_sq(&self) -> f64 {
        self.phase_sq
    }

    /// Eigenvalue of the all-ones vector, `λ = σ² + Kφ²`.
    pub fn ones_eigenvalue(&self) -> f64 {
        self.sigma_sq + self.k as f64 * self.phase_sq
    }

    pub fn dense(&self) -> DMatrix<f64> {
        let mut r = DMatrix::from_element(self.k, self.k, self.phase_sq);
        for i in 0..self.k {
            r[(i, i)] += self.sigma_sq;
        }
        r
    }

    /// `R x` without materializing `R`.
    pub fn apply(&self, x: &DVector<f64>) -> DVector<f64> {
        let s = x.sum();
        x.map(|xi| self.sigma_sq * xi + self.phase_sq * s)
    }

    fn check_dim(&self, got: usize) -> Result<()> {
        if got != self.k {
            Err(Error::DimensionMismatch { expected: self.k, got })
        } else {
            Ok(())
        }
    }
}

/// Mean squared error of a design together with its bias factor `gᵀH1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ErrorReport {
    pub mse: f64,
    pub bias_factor: f64,
    pub is_unbiased: bool,
}

/// Second-moment matrix of `K` i.i.d. unbiased estimates from `config`.
pub fn build_autocorrelation(k: usize, config: &ClusterConfig) -> Result<AutocorrelationModel> {
    AutocorrelationModel::new(k, config.estimate_variance(), config.phase())
}

fn check_channel(spec: &ChannelSpec, k: usize) -> Result<()> {
    if spec.dim() != k {
        Err(Error::DimensionMismatch { expected: k, got: spec.dim() })
    } else {
        Ok(())
    }
}

/// `Hφ̂ + n` with fresh noise drawn from `rng`.
pub fn apply_channel<R: Rng + ?Sized>(
    spec: &ChannelSpec,
    estimates: &EstimateVector,
    rng: &mut R,
) -> Result<DVector<f64>> {
    check_channel(spec, estimates.len())?;
    let mut out = spec.gain() * estimates.as_vector();
    add_noise(&mut out, spec.noise_variance(), rng);
    Ok(out)
}

/// [`apply_channel`] for `H = I`; consumes the same random draws.
pub fn apply_identity_channel<R: Rng + ?Sized>(
    estimates: &EstimateVector,
    noise_variance: f64,
    rng: &mut R,
) -> Result<DVector<f64>> {
    if !(noise_variance.is_finite() && noise_variance >= 0.0) {
        return Err(Error::InvalidConfig(format!("invalid noise variance {noise_variance}")));
    }
    let mut out = estimates.as_vector().clone();
    add_noise(&mut out, noise_variance, rng);
    Ok(out)
}

fn add_noise<R: Rng + ?Sized>(out: &mut DVector<f64>, noise_variance: f64, rng: &mut R) {
    if noise_variance > 0.0 {
        let noise = Normal::new(0.0, noise_variance.sqrt()).expect("valid noise variance");
        for x in out.iter_mut() {
            *x += noise.sample(rng);
        }
    }
}

/// Final estimate `gᵀ y`.
pub fn combine(weights: &CombinerWeights, channel_output: &DVector<f64>) -> Result<f64> {
    if weights.dim() != channel_output.len() {
        return Err(Error::DimensionMismatch { expected: weights.dim(), got: channel_output.len() });
    }
    Ok(weights.as_vector().dot(channel_output))
}

fn check_all(weights: &CombinerWeights, spec: &ChannelSpec, r_model: &AutocorrelationModel) -> Result<()> {
    r_model.check_dim(weights.dim())?;
    check_channel(spec, r_model.k())
}

/// Closed-form MSE of `(g, H, v)`.
pub fn analytic_mse(
    weights: &CombinerWeights,
    spec: &ChannelSpec,
    r_model: &AutocorrelationModel,
    phase: f64,
) -> Result<ErrorReport> {
    check_all(weights, spec, r_model)?;
    let g = weights.as_vector();
    // u = Hᵀg, so gᵀHRHᵀg = uᵀRu = σ²‖u‖² + φ_R²(1ᵀu)².
    let u = spec.gain().transpose() * g;
    Ok(report_from_u(&u, g.norm_squared(), spec.noise_variance(), r_model, phase))
}

/// [`analytic_mse`] for `H = I` without forming the identity.
pub fn analytic_mse_identity(
    weights: &CombinerWeights,
    r_model: &AutocorrelationModel,
    phase: f64,
    noise_variance: f64,
) -> Result<ErrorReport> {
    r_model.check_dim(weights.dim())?;
    let g = weights.as_vector();
    Ok(report_from_u(g, g.norm_squared(), noise_variance, r_model, phase))
}

fn report_from_u(u: &DVector<f64>, g_norm_sq: f64, v: f64, r_model: &AutocorrelationModel, phase: f64) -> ErrorReport {
    let phi_sq = phase * phase;
    let bias_factor = u.sum();
    let quad = r_model.sigma_sq() * u.norm_squared() + r_model.phase_sq() * bias_factor * bias_factor + v * g_norm_sq;
    let mse = (quad + phi_sq - 2.0 * phi_sq * bias_factor).max(0.0);
    ErrorReport {
        mse,
        bias_factor,
        is_unbiased: (bias_factor - 1.0).abs() <= UNBIASED_TOLERANCE,
    }
}

/// `HRHᵀ + vI`.
pub fn channel_output_correlation(spec: &ChannelSpec, r_model: &AutocorrelationModel) -> Result<DMatrix<f64>> {
    check_channel(spec, r_model.k())?;
    let h = spec.gain();
    let h1 = h.column_sum();
    let mut a = h * h.transpose() * r_model.sigma_sq() + &h1 * h1.transpose() * r_model.phase_sq();
    for i in 0..a.nrows() {
        a[(i, i)] += spec.noise_variance();
    }
    Ok(a)
}

/// Stationary combiner for a fixed channel, `g* = φ²(HRHᵀ + vI)⁺H1`.
///
/// For `H = I` this is `φ²(R + vI)⁺1`.
pub fn optimal_g(spec: &ChannelSpec, r_model: &AutocorrelationModel, phase: f64) -> Result<CombinerWeights> {
    let a = channel_output_correlation(spec, r_model)?;
    let rhs = spec.gain().column_sum() * (phase * phase);
    CombinerWeights::new(linalg::symmetric_pseudo_solve(&a, &rhs))
}

/// [`optimal_g`] for `H = I`: `(R + vI)g = φ²1` is solved by
/// `g = φ²/(σ² + v + Kφ_R²)·1`, with `g = 0` when that system is zero.
pub fn optimal_g_identity(r_model: &AutocorrelationModel, phase: f64, noise_variance: f64) -> Result<CombinerWeights> {
    let denom = r_model.sigma_sq() + noise_variance + r_model.k() as f64 * r_model.phase_sq();
    let c = if denom > 0.0 { phase * phase / denom } else { 0.0 };
    CombinerWeights::new(DVector::from_element(r_model.k(), c))
}

/// Optimal channel for a fixed combiner, `H* = (φ²/gᵀg)·g·1ᵀR⁻¹`.
pub fn optimal_h(weights: &CombinerWeights, r_model: &AutocorrelationModel, phase: f64) -> Result<DMatrix<f64>> {
    r_model.check_dim(weights.dim())?;
    weights.nonzero()?;
    let r_inv = inverse_r_sherman_morrison(r_model)?;
    let row = r_inv.row_sum();
    let scale = phase * phase / weights.norm_squared();
    Ok(weights.as_vector() * row * scale)
}

/// Gradient of [`analytic_mse`] with respect to `g`.
pub fn mse_gradient_g(
    weights: &CombinerWeights,
    spec: &ChannelSpec,
    r_model: &AutocorrelationModel,
    phase: f64,
) -> Result<DVector<f64>> {
    check_all(weights, spec, r_model)?;
    let g = weights.as_vector();
    let h = spec.gain();
    let u = h.transpose() * g;
    let hrh_g = h * r_model.apply(&u);
    let h1 = h.column_sum();
    Ok(hrh_g * 2.0 + g * (2.0 * spec.noise_variance()) - h1 * (2.0 * phase * phase))
}

/// Gradient of [`analytic_mse`] with respect to the entries of `H`, shaped
/// like `H`: `2 g (Rᵀ Hᵀ g)ᵀ − 2φ² g 1ᵀ`.
pub fn mse_gradient_h(
    weights: &CombinerWeights,
    spec: &ChannelSpec,
    r_model: &AutocorrelationModel,
    phase: f64,
) -> Result<DMatrix<f64>> {
    check_all(weights, spec, r_model)?;
    let g = weights.as_vector();
    let u = spec.gain().transpose() * g;
    let ru = r_model.apply(&u);
    let shifted = ru.map(|x| x - phase * phase);
    Ok(g * shifted.transpose() * 2.0)
}

fn require_positive_sigma(r_model: &AutocorrelationModel) -> Result<()> {
    if r_model.sigma_sq() > 0.0 {
        Ok(())
    } else {
        Err(Error::SingularModel(r_model.sigma_sq()))
    }
}

/// Minimum MSE over `g` with `H = I`: `φ²(σ² + v)/(σ² + Kφ² + v)`.
pub fn min_mse_identity_channel(r_model: &AutocorrelationModel, phase: f64, noise_variance: f64) -> Result<f64> {
    require_positive_sigma(r_model)?;
    let phi_sq = phase * phase;
    let s = r_model.sigma_sq() + noise_variance;
    Ok(phi_sq * s / (s + r_model.k() as f64 * phi_sq))
}

/// Minimum MSE over `H` for a fixed `g ≠ 0`: `v gᵀg + φ²σ²/(σ² + Kφ²)`.
pub fn min_mse_over_h(
    weights: &CombinerWeights,
    r_model: &AutocorrelationModel,
    phase: f64,
    noise_variance: f64,
) -> Result<f64> {
    r_model.check_dim(weights.dim())?;
    weights.nonzero()?;
    require_positive_sigma(r_model)?;
    let phi_sq = phase * phase;
    let sigma_sq = r_model.sigma_sq();
    Ok(noise_variance * weights.norm_squared() + phi_sq * sigma_sq / (sigma_sq + r_model.k() as f64 * phi_sq))
}

/// Noiseless global minimum `φ²/(1 + Kφ²N_e²r)`.
pub fn global_min_noiseless(k: usize, config: &ClusterConfig) -> f64 {
    let n = config.n_entangled() as f64;
    noiseless_minimum(k, n * n * config.trials() as f64, config.phase())
}

/// `φ²/(1 + Kφ²·precision)` where `precision = 1/σ²`.
pub fn noiseless_minimum(k: usize, precision: f64, phase: f64) -> f64 {
    let phi_sq = phase * phase;
    phi_sq / (1.0 + k as f64 * phi_sq * precision)
}

/// Bias factor of the optimal pair, `Kφ²/(σ² + Kφ²)`.
pub fn bias_factor_optimal_pair(k: usize, r_model: &AutocorrelationModel, phase: f64) -> Result<f64> {
    r_model.check_dim(k)?;
    require_positive_sigma(r_model)?;
    let kphi = k as f64 * phase * phase;
    Ok(kphi / (r_model.sigma_sq() + kphi))
}

/// `g*ᵀH*1` evaluated explicitly: `H* = optimal_h(1/K)`, then
/// `g* = optimal_g(H*, v = 0)`.
pub fn pair_bias_factor_explicit(r_model: &AutocorrelationModel, phase: f64) -> Result<f64> {
    let seed = CombinerWeights::uniform(r_model.k());
    let h_star = optimal_h(&seed, r_model, phase)?;
    let spec = ChannelSpec::new(h_star, 0.0)?;
    let g_star = optimal_g(&spec, r_model, phase)?;
    Ok(g_star.as_vector().dot(&spec.gain().column_sum()))
}

/// `R⁻¹ = (1/σ²)(I − φ²/(σ² + Kφ²)·11ᵀ)`.
pub fn inverse_r_sherman_morrison(r_model: &AutocorrelationModel) -> Result<DMatrix<f64>> {
    require_positive_sigma(r_model)?;
    let k = r_model.k();
    let sigma_sq = r_model.sigma_sq();
    let off = -r_model.phase_sq() / r_model.ones_eigenvalue();
    let mut inv = DMatrix::from_element(k, k, off);
    for i in 0..k {
        inv[(i, i)] += 1.0;
    }
    Ok(inv / sigma_sq)
}

/// `(ggᵀ)⁺ = ggᵀ/(gᵀg)²`.
pub fn rank_one_pseudoinverse(weights: &CombinerWeights) -> Result<DMatrix<f64>> {
    weights.nonzero()?;
    let g = weights.as_vector();
    let n2 = weights.norm_squared();
    Ok(g * g.transpose() / (n2 * n2))
}

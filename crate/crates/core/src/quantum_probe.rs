//! Phase measurement on unentangled and GHZ-entangled qubit clusters.
//!
//! A cluster of `N_e` entangled qubits carries the phase amplified `N_e`-fold:
//! measuring the parity-like observable on `(|0…0⟩ + e^{iN_eφ}|1…1⟩)/√2`
//! yields ±1 with mean `cos(N_e φ)`. Repeating the measurement `r` times and
//! inverting the sample mean gives an estimate with variance `1/(N_e² r)`.
//!
//! The dense construction in [`dense_oracle`] is only used for verification;
//! simulation draws independent ±1 trials directly.

use std::f64::consts::PI;

use nalgebra::{Complex, DMatrix, DVector};
use rand::Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::rng::SeedStream;

/// Largest cluster the dense oracle will materialize (a 4096×4096 observable).
pub const MAX_DENSE_QUBITS: usize = 12;

/// How a cluster turns `r` measurement records into a phase estimate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum EstimationMode {
    /// Unbiased Gaussian draw with variance exactly `1/(N_e² r)`.
    #[default]
    IdealGaussian,
    /// Binomial ±1 outcomes inverted through `arccos` of the sample mean.
    PhysicalBinomial,
}

impl EstimationMode {
    pub fn as_str(&self) -> &'static str {
        match self {
            EstimationMode::IdealGaussian => "ideal",
            EstimationMode::PhysicalBinomial => "physical",
        }
    }
}

impl std::str::FromStr for EstimationMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "ideal" | "gaussian" | "idealgaussian" => Ok(EstimationMode::IdealGaussian),
            "physical" | "binomial" | "physicalbinomial" => Ok(EstimationMode::PhysicalBinomial),
            other => Err(Error::InvalidConfig(format!("unknown estimation mode '{other}'"))),
        }
    }
}

impl std::fmt::Display for EstimationMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Parameters of one entangled cluster.
///
/// The phase is restricted to the open interval `(0, π/N_e)` so that
/// `cos(N_e φ)` lies strictly inside `(−1, 1)` and the `arccos` inversion is
/// unambiguous.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClusterConfig {
    n_entangled: usize,
    trials: usize,
    phase: f64,
    mode: EstimationMode,
}

impl ClusterConfig {
    pub fn new(n_entangled: usize, trials: usize, phase: f64, mode: EstimationMode) -> Result<Self> {
        if n_entangled == 0 {
            return Err(Error::InvalidConfig("n_entangled must be at least 1".into()));
        }
        if trials == 0 {
            return Err(Error::InvalidConfig("trials must be at least 1".into()));
        }
        let upper = PI / n_entangled as f64;
        if !(phase.is_finite() && phase > 0.0 && phase < upper) {
            return Err(Error::InvalidConfig(format!(
                "phase {phase} outside the open interval (0, {upper})"
            )));
        }
        Ok(Self { n_entangled, trials, phase, mode })
    }

    pub fn n_entangled(&self) -> usize {
        self.n_entangled
    }

    pub fn trials(&self) -> usize {
        self.trials
    }

    pub fn phase(&self) -> f64 {
        self.phase
    }

    pub fn mode(&self) -> EstimationMode {
        self.mode
    }

    pub fn with_n_entangled(&self, n_entangled: usize) -> Result<Self> {
        Self::new(n_entangled, self.trials, self.phase, self.mode)
    }

    pub fn with_trials(&self, trials: usize) -> Result<Self> {
        Self::new(self.n_entangled, trials, self.phase, self.mode)
    }

    pub fn with_phase(&self, phase: f64) -> Result<Self> {
        Self::new(self.n_entangled, self.trials, phase, self.mode)
    }

    pub fn with_mode(&self, mode: EstimationMode) -> Self {
        Self { mode, ..*self }
    }

    /// Per-cluster estimate variance `1/(N_e² r)`.
    pub fn estimate_variance(&self) -> f64 {
        let n = self.n_entangled as f64;
        1.0 / (n * n * self.trials as f64)
    }

    /// Probability of a +1 outcome, `(1 + cos(N_e φ))/2`.
    pub fn plus_probability(&self) -> f64 {
        0.5 * (1.0 + (self.n_entangled as f64 * self.phase).cos())
    }
}

/// Explicit `2^{N_e}`-dimensional GHZ state and its measurement observable.
#[derive(Debug, Clone)]
pub struct DenseProbeState {
    pub amplitudes: DVector<Complex<f64>>,
    pub observable: DMatrix<f64>,
}

impl DenseProbeState {
    /// Prepares `(|0…0⟩ + |1…1⟩)/√2`, applies the single-qubit phase
    /// embedding `|0⟩⟨0| + e^{iφ}|1⟩⟨1|` to every qubit, and builds
    /// `|0…0⟩⟨1…1| + |1…1⟩⟨0…0|`.
    pub fn new(n_entangled: usize, phase: f64) -> Result<Self> {
        if n_entangled == 0 {
            return Err(Error::InvalidConfig("n_entangled must be at least 1".into()));
        }
        if n_entangled > MAX_DENSE_QUBITS {
            return Err(Error::ResourceBound { max: MAX_DENSE_QUBITS, got: n_entangled });
        }
        let dim = 1usize << n_entangled;
        let all_ones = dim - 1;
        let h = std::f64::consts::FRAC_1_SQRT_2;

        let mut amplitudes = DVector::from_element(dim, Complex::new(0.0, 0.0));
        amplitudes[0] = Complex::new(h, 0.0);
        amplitudes[all_ones] = Complex::new(h, 0.0);
        // The tensor-product phase gate is diagonal: basis state |b⟩ picks up
        // e^{iφ·popcount(b)}.
        for (b, amp) in amplitudes.iter_mut().enumerate() {
            let ones = (b as u64).count_ones() as f64;
            *amp *= Complex::from_polar(1.0, ones * phase);
        }

        let mut observable = DMatrix::zeros(dim, dim);
        observable[(0, all_ones)] = 1.0;
        observable[(all_ones, 0)] = 1.0;

        Ok(Self { amplitudes, observable })
    }

    pub fn dimension(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn norm(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
    }

    fn apply_observable(&self, v: &DVector<Complex<f64>>) -> DVector<Complex<f64>> {
        let re = &self.observable * v.map(|c| c.re);
        let im = &self.observable * v.map(|c| c.im);
        re.zip_map(&im, Complex::new)
    }

    /// `⟨ψ|𝒳|ψ⟩`.
    pub fn expectation(&self) -> f64 {
        let applied = self.apply_observable(&self.amplitudes);
        self.amplitudes.dotc(&applied).re
    }

    /// `⟨ψ|𝒳²|ψ⟩ = ‖𝒳ψ‖²` since the observable is real symmetric.
    pub fn second_moment(&self) -> f64 {
        self.apply_observable(&self.amplitudes).norm_squared()
    }

    /// `d⟨𝒳⟩/dφ = 2 Re⟨∂ψ|𝒳|ψ⟩` where `∂ψ_b = i·popcount(b)·ψ_b`.
    pub fn expectation_derivative(&self) -> f64 {
        let d_amps = DVector::from_iterator(
            self.dimension(),
            self.amplitudes
                .iter()
                .enumerate()
                .map(|(b, a)| Complex::new(0.0, (b as u64).count_ones() as f64) * a),
        );
        let applied = self.apply_observable(&self.amplitudes);
        2.0 * d_amps.dotc(&applied).re
    }
}

/// Mean, variance and phase sensitivity of a ±1 observable.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ObservableStatistics {
    pub mean: f64,
    pub variance: f64,
    pub d_mean_d_phase: f64,
}

impl ObservableStatistics {
    /// Closed-form statistics of the cluster observable: mean `cos(N_e φ)`,
    /// variance `sin²(N_e φ)`, derivative `−N_e sin(N_e φ)`.
    pub fn for_cluster(n_entangled: usize, phase: f64) -> Self {
        let n = n_entangled as f64;
        let (s, c) = (n * phase).sin_cos();
        Self { mean: c, variance: s * s, d_mean_d_phase: -n * s }
    }
}

/// `⟨X⟩ = cos φ` for a single qubit carrying phase `φ`.
pub fn expectation_single(phase: f64) -> f64 {
    phase.cos()
}

/// Builds the dense state for `config` and evaluates its statistics by
/// explicit matrix-vector products.
pub fn dense_oracle(config: &ClusterConfig) -> Result<ObservableStatistics> {
    dense_statistics(config.n_entangled(), config.phase())
}

/// [`dense_oracle`] without the phase-domain restriction of [`ClusterConfig`].
pub fn dense_statistics(n_entangled: usize, phase: f64) -> Result<ObservableStatistics> {
    let state = DenseProbeState::new(n_entangled, phase)?;
    let mean = state.expectation();
    let variance = state.second_moment() - mean * mean;
    Ok(ObservableStatistics {
        mean,
        variance,
        d_mean_d_phase: state.expectation_derivative(),
    })
}

/// Number of +1 outcomes among `r` independent measurements.
pub fn sample_outcomes<R: Rng + ?Sized>(config: &ClusterConfig, rng: &mut R) -> u64 {
    let p = config.plus_probability();
    (0..config.trials()).filter(|_| rng.random::<f64>() < p).count() as u64
}

/// Maps a sample mean of ±1 outcomes to a phase, clipping to `[−1, 1]` first.
pub fn invert_sample_mean(sample_mean: f64, n_entangled: usize) -> f64 {
    sample_mean.clamp(-1.0, 1.0).acos() / n_entangled as f64
}

/// One per-cluster phase estimate.
pub fn estimate_phase<R: Rng + ?Sized>(config: &ClusterConfig, rng: &mut R) -> f64 {
    match config.mode() {
        EstimationMode::PhysicalBinomial => {
            let r = config.trials() as f64;
            let count = sample_outcomes(config, rng) as f64;
            invert_sample_mean((2.0 * count - r) / r, config.n_entangled())
        }
        EstimationMode::IdealGaussian => {
            let sd = config.estimate_variance().sqrt();
            // sd is finite and positive for every valid config
            Normal::new(config.phase(), sd)
                .expect("valid normal parameters")
                .sample(rng)
        }
    }
}

/// Error propagation `(Δφ̂)² = ΔX² / (m · (d⟨X⟩/dφ)²)` for `m` repetitions.
pub fn phase_variance_from_observable(stats: &ObservableStatistics, repetitions: usize) -> Result<f64> {
    let d = stats.d_mean_d_phase;
    if !d.is_finite() || d.abs() < 1e-12 {
        return Err(Error::DegenerateDerivative);
    }
    let m = repetitions as f64;
    Ok((m * stats.variance) / (m * d).powi(2))
}

/// Vector of the `K` cluster estimates.
#[derive(Debug, Clone, PartialEq)]
pub struct EstimateVector(pub DVector<f64>);

impl EstimateVector {
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        self.0.as_slice()
    }

    pub fn as_vector(&self) -> &DVector<f64> {
        &self.0
    }
}

/// Draws `K` independent estimates; cluster `i` uses `stream.substream(i)`.
pub fn estimate_vector(config: &ClusterConfig, k_clusters: usize, stream: &SeedStream) -> Result<EstimateVector> {
    if k_clusters == 0 {
        return Err(Error::InvalidConfig("k_clusters must be at least 1".into()));
    }
    let v = DVector::from_iterator(
        k_clusters,
        (0..k_clusters).map(|i| estimate_phase(config, &mut stream.substream(i as u64).rng())),
    );
    Ok(EstimateVector(v))
}

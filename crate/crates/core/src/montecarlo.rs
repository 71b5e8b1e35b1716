//! End-to-end Monte Carlo runner and parameter sweeps.
//!
//! Every trial owns the substream `seed → trials → t`; cluster `i` inside a
//! trial draws from `… → t → 0 → i` and the channel noise from `… → t → 1`.
//! Per-trial results are collected in trial order and reduced sequentially,
//! so a result is bit-identical for any rayon pool size.

use nalgebra::DMatrix;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::network_model::{
    analytic_mse, analytic_mse_identity, apply_channel, apply_identity_channel, build_autocorrelation, combine,
    min_mse_identity_channel, min_mse_over_h, noiseless_minimum, optimal_g, optimal_g_identity, optimal_h,
    AutocorrelationModel, ChannelSpec, CombinerWeights, ErrorReport,
};
use crate::quantum_probe::EstimateVector;
use crate::quantum_probe::{
    dense_oracle, estimate_phase, estimate_vector, phase_variance_from_observable, ClusterConfig, EstimationMode,
    ObservableStatistics, MAX_DENSE_QUBITS,
};
use crate::rng::SeedStream;

const CHANNEL_STREAM: u64 = 0;
const TRIAL_STREAM: u64 = 1;

/// Channel gain, either explicit or resolved at run time.
#[derive(Debug, Clone, PartialEq)]
pub enum ChannelChoice {
    Matrix(DMatrix<f64>),
    Identity,
    /// `H*(g)` for the resolved combiner.
    OptimalForG,
    /// Entries i.i.d. `N(0, scale²)`, drawn once per experiment.
    RandomGaussian { scale: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub enum CombinerChoice {
    Weights(CombinerWeights),
    Optimal,
    UniformAverage,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub cluster: ClusterConfig,
    pub k_clusters: usize,
    pub channel: ChannelChoice,
    pub noise_variance: f64,
    pub combiner: CombinerChoice,
    pub trials: usize,
    pub seed: u64,
    /// Phase plugged into the optimal designs. `None` uses the true phase.
    pub design_phase: Option<f64>,
}

impl ExperimentConfig {
    /// Identity channel, optimal combiner, genie design.
    pub fn new(cluster: ClusterConfig, k_clusters: usize, noise_variance: f64, trials: usize, seed: u64) -> Self {
        Self {
            cluster,
            k_clusters,
            channel: ChannelChoice::Identity,
            noise_variance,
            combiner: CombinerChoice::Optimal,
            trials,
            seed,
            design_phase: None,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.k_clusters == 0 {
            return Err(Error::InvalidExperiment("k_clusters must be at least 1".into()));
        }
        if self.trials == 0 {
            return Err(Error::InvalidExperiment("trials must be at least 1".into()));
        }
        if !(self.noise_variance.is_finite() && self.noise_variance >= 0.0) {
            return Err(Error::InvalidExperiment(format!("invalid noise variance {}", self.noise_variance)));
        }
        if let ChannelChoice::RandomGaussian { scale } = self.channel {
            if !(scale.is_finite() && scale >= 0.0) {
                return Err(Error::InvalidExperiment(format!("invalid channel scale {scale}")));
            }
        }
        if let Some(p) = self.design_phase {
            if !p.is_finite() {
                return Err(Error::InvalidExperiment("design phase must be finite".into()));
            }
        }
        Ok(())
    }

    fn is_genie(&self) -> bool {
        self.design_phase.is_none_or(|p| p == self.cluster.phase())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentResult {
    pub axis_value: Option<f64>,
    pub k: usize,
    pub n_e: usize,
    pub r: usize,
    pub phi: f64,
    pub v: f64,
    pub mode: EstimationMode,
    pub trials: usize,
    pub seed: u64,
    pub design_phase: f64,
    pub mse_empirical: f64,
    /// Undefined (NaN) for a single trial.
    pub mse_stderr: f64,
    pub mse_analytic: f64,
    pub mse_closed_form: Option<f64>,
    pub bias_empirical: f64,
    pub bias_stderr: f64,
    pub bias_factor: f64,
    pub is_unbiased: bool,
    pub resolved_g: Vec<f64>,
    pub resolved_h_descriptor: String,
}

impl ExperimentResult {
    /// `(mse_empirical − mse_analytic)/mse_stderr`.
    pub fn standardized_deviation(&self) -> f64 {
        (self.mse_empirical - self.mse_analytic) / self.mse_stderr
    }
}

/// The identity channel is kept implicit so large `K` never forms `K×K` matrices.
enum Gain {
    Identity { noise_variance: f64 },
    Dense(ChannelSpec),
}

impl Gain {
    fn analytic(&self, w: &CombinerWeights, model: &AutocorrelationModel, phase: f64) -> Result<ErrorReport> {
        match self {
            Gain::Identity { noise_variance } => analytic_mse_identity(w, model, phase, *noise_variance),
            Gain::Dense(spec) => analytic_mse(w, spec, model, phase),
        }
    }

    fn apply(&self, est: &EstimateVector, rng: &mut crate::rng::StreamRng) -> Result<nalgebra::DVector<f64>> {
        match self {
            Gain::Identity { noise_variance } => apply_identity_channel(est, *noise_variance, rng),
            Gain::Dense(spec) => apply_channel(spec, est, rng),
        }
    }
}

struct Resolved {
    gain: Gain,
    weights: CombinerWeights,
    h_descriptor: String,
    closed_form: Option<f64>,
}

fn resolve(config: &ExperimentConfig, true_model: &AutocorrelationModel) -> Result<Resolved> {
    let k = config.k_clusters;
    let v = config.noise_variance;
    let design_phase = config.design_phase.unwrap_or(config.cluster.phase());
    let design_model = AutocorrelationModel::new(k, config.cluster.estimate_variance(), design_phase)?;

    let (gain, h_descriptor) = match &config.channel {
        ChannelChoice::Identity => (None, "identity".to_string()),
        ChannelChoice::Matrix(m) => {
            if m.nrows() != k || m.ncols() != k {
                return Err(Error::DimensionMismatch { expected: k, got: m.nrows().max(m.ncols()) });
            }
            (Some(m.clone()), "matrix".to_string())
        }
        ChannelChoice::RandomGaussian { scale } => {
            let mut rng = SeedStream::new(config.seed).substream(CHANNEL_STREAM).rng();
            let dist = Normal::new(0.0, *scale).expect("validated scale");
            (Some(DMatrix::from_fn(k, k, |_, _| dist.sample(&mut rng))), format!("gauss:{scale}"))
        }
        ChannelChoice::OptimalForG => {
            let seed_g = match &config.combiner {
                CombinerChoice::Weights(w) => w.clone(),
                CombinerChoice::UniformAverage | CombinerChoice::Optimal => CombinerWeights::uniform(k),
            };
            (Some(optimal_h(&seed_g, &design_model, design_phase)?), "optimal".to_string())
        }
    };
    let gain = match gain {
        None => Gain::Identity { noise_variance: v },
        Some(m) => Gain::Dense(ChannelSpec::new(m, v)?),
    };

    let weights = match &config.combiner {
        CombinerChoice::Weights(w) => {
            if w.dim() != k {
                return Err(Error::DimensionMismatch { expected: k, got: w.dim() });
            }
            w.clone()
        }
        CombinerChoice::UniformAverage => CombinerWeights::uniform(k),
        CombinerChoice::Optimal => match &gain {
            Gain::Identity { .. } => optimal_g_identity(&design_model, design_phase, v)?,
            Gain::Dense(spec) => optimal_g(spec, &design_model, design_phase)?,
        },
    };

    let phase = config.cluster.phase();
    let closed_form = if !config.is_genie() {
        None
    } else {
        match (&config.channel, &config.combiner) {
            (ChannelChoice::Identity, CombinerChoice::Optimal) => Some(min_mse_identity_channel(true_model, phase, v)?),
            (ChannelChoice::OptimalForG, CombinerChoice::Optimal) if v == 0.0 => {
                Some(noiseless_minimum(k, 1.0 / true_model.sigma_sq(), phase))
            }
            (ChannelChoice::OptimalForG, CombinerChoice::Optimal) => None,
            (ChannelChoice::OptimalForG, _) => Some(min_mse_over_h(&weights, true_model, phase, v)?),
            _ => None,
        }
    };

    Ok(Resolved { gain, weights, h_descriptor, closed_form })
}

struct Moments {
    mean: f64,
    stderr: f64,
}

fn moments(values: impl Iterator<Item = f64> + Clone, n: usize) -> Moments {
    let nf = n as f64;
    let mean = values.clone().sum::<f64>() / nf;
    let stderr = if n < 2 {
        f64::NAN
    } else {
        let ss: f64 = values.map(|x| (x - mean) * (x - mean)).sum();
        (ss / (nf - 1.0) / nf).sqrt()
    };
    Moments { mean, stderr }
}

/// Runs `config.trials` independent passes of estimate → channel → combine.
pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentResult> {
    config.validate()?;
    let true_model = build_autocorrelation(config.k_clusters, &config.cluster)?;
    let resolved = resolve(config, &true_model)?;
    let phase = config.cluster.phase();
    let report = resolved.gain.analytic(&resolved.weights, &true_model, phase)?;

    let trials_root = SeedStream::new(config.seed).substream(TRIAL_STREAM);
    let errors: Vec<f64> = (0..config.trials)
        .into_par_iter()
        .map(|t| {
            let stream = trials_root.substream(t as u64);
            let est = estimate_vector(&config.cluster, config.k_clusters, &stream.substream(0))?;
            let y = resolved.gain.apply(&est, &mut stream.substream(1).rng())?;
            Ok(combine(&resolved.weights, &y)? - phase)
        })
        .collect::<Result<_>>()?;

    let sq = moments(errors.iter().map(|e| e * e), errors.len());
    let bias = moments(errors.iter().copied(), errors.len());

    Ok(ExperimentResult {
        axis_value: None,
        k: config.k_clusters,
        n_e: config.cluster.n_entangled(),
        r: config.cluster.trials(),
        phi: phase,
        v: config.noise_variance,
        mode: config.cluster.mode(),
        trials: config.trials,
        seed: config.seed,
        design_phase: config.design_phase.unwrap_or(phase),
        mse_empirical: sq.mean,
        mse_stderr: sq.stderr,
        mse_analytic: report.mse,
        mse_closed_form: resolved.closed_form,
        bias_empirical: bias.mean,
        bias_stderr: bias.stderr,
        bias_factor: report.bias_factor,
        is_unbiased: report.is_unbiased,
        resolved_g: resolved.weights.as_vector().iter().copied().collect(),
        resolved_h_descriptor: resolved.h_descriptor,
    })
}

/// Runs `f` inside a dedicated rayon pool of `workers` threads.
pub fn with_workers<T: Send>(workers: usize, f: impl FnOnce() -> T + Send) -> T {
    rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .expect("thread pool")
        .install(f)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SweepAxis {
    K,
    NEntangled,
    Trials,
    NoiseVariance,
    Phase,
}

impl SweepAxis {
    pub fn as_str(&self) -> &'static str {
        match self {
            SweepAxis::K => "K",
            SweepAxis::NEntangled => "N_e",
            SweepAxis::Trials => "r",
            SweepAxis::NoiseVariance => "v",
            SweepAxis::Phase => "phi",
        }
    }
}

impl std::str::FromStr for SweepAxis {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "K" | "k" => Ok(SweepAxis::K),
            "N_e" | "Ne" | "ne" | "n_e" => Ok(SweepAxis::NEntangled),
            "r" | "R" => Ok(SweepAxis::Trials),
            "v" | "V" => Ok(SweepAxis::NoiseVariance),
            "phi" | "PHI" | "Phi" => Ok(SweepAxis::Phase),
            other => Err(Error::InvalidExperiment(format!("unknown sweep axis '{other}'"))),
        }
    }
}

fn as_count(axis: SweepAxis, value: f64) -> Result<usize> {
    if value.is_finite() && value >= 1.0 && value.fract() == 0.0 && value <= usize::MAX as f64 {
        Ok(value as usize)
    } else {
        Err(Error::InvalidAxisValue { axis: axis.as_str().into(), value })
    }
}

fn apply_axis(base: &ExperimentConfig, axis: SweepAxis, value: f64) -> Result<ExperimentConfig> {
    let invalid = || Error::InvalidAxisValue { axis: axis.as_str().into(), value };
    let mut cfg = base.clone();
    match axis {
        SweepAxis::K => cfg.k_clusters = as_count(axis, value)?,
        SweepAxis::NEntangled => {
            cfg.cluster = base.cluster.with_n_entangled(as_count(axis, value)?).map_err(|_| invalid())?
        }
        SweepAxis::Trials => cfg.cluster = base.cluster.with_trials(as_count(axis, value)?).map_err(|_| invalid())?,
        SweepAxis::NoiseVariance => {
            if !(value.is_finite() && value >= 0.0) {
                return Err(invalid());
            }
            cfg.noise_variance = value;
        }
        SweepAxis::Phase => cfg.cluster = base.cluster.with_phase(value).map_err(|_| invalid())?,
    }
    Ok(cfg)
}

/// One experiment per axis value; point `j` runs with seed
/// `SeedStream::new(base.seed).substream(j)`.
pub fn sweep(base: &ExperimentConfig, axis: SweepAxis, values: &[f64]) -> Result<Vec<ExperimentResult>> {
    if values.is_empty() {
        return Err(Error::InsufficientData { needed: 1, got: 0 });
    }
    let configs = values
        .iter()
        .map(|&v| apply_axis(base, axis, v))
        .collect::<Result<Vec<_>>>()?;
    let root = SeedStream::new(base.seed);
    configs
        .into_iter()
        .zip(values)
        .enumerate()
        .map(|(j, (mut cfg, &value))| {
            cfg.seed = root.substream(j as u64).key();
            let mut res = run_experiment(&cfg)?;
            res.axis_value = Some(value);
            Ok(res)
        })
        .collect()
}

/// Variance of averaging `N_e·r·K` independent single-qubit estimates.
pub fn classical_baseline(k: usize, config: &ClusterConfig) -> f64 {
    1.0 / (config.n_entangled() as f64 * config.trials() as f64 * k as f64)
}

/// Least-squares slope of `ln y` against `ln x`.
pub fn log_log_slope(points: &[(f64, f64)]) -> Result<f64> {
    if points.len() < 2 {
        return Err(Error::InsufficientData { needed: 2, got: points.len() });
    }
    if points.iter().any(|&(x, y)| !(x > 0.0 && y > 0.0)) {
        return Err(Error::InvalidExperiment("log-log slope needs positive coordinates".into()));
    }
    let n = points.len() as f64;
    let (lx, ly): (Vec<f64>, Vec<f64>) = points.iter().map(|&(x, y)| (x.ln(), y.ln())).unzip();
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxx: f64 = lx.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    if sxx == 0.0 {
        return Err(Error::InvalidExperiment("axis values are all equal".into()));
    }
    Ok(sxy / sxx)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepSummary {
    pub points: usize,
    pub slope_empirical: Option<f64>,
    pub slope_analytic: Option<f64>,
    pub slope_closed_form: Option<f64>,
    /// Largest `|empirical − analytic|` in units of the MSE standard error.
    pub max_abs_deviation: f64,
}

pub fn summarize(results: &[ExperimentResult]) -> Result<SweepSummary> {
    if results.len() < 2 {
        return Err(Error::InsufficientData { needed: 2, got: results.len() });
    }
    let xs = results
        .iter()
        .map(|r| r.axis_value.ok_or_else(|| Error::InvalidExperiment("result has no axis value".into())))
        .collect::<Result<Vec<_>>>()?;
    let slope = |ys: Option<Vec<f64>>| -> Option<f64> {
        let pts: Vec<(f64, f64)> = xs.iter().copied().zip(ys?).collect();
        log_log_slope(&pts).ok()
    };
    let max_abs_deviation = results
        .iter()
        .map(|r| r.standardized_deviation().abs())
        .filter(|z| z.is_finite())
        .fold(0.0, f64::max);
    Ok(SweepSummary {
        points: results.len(),
        slope_empirical: slope(Some(results.iter().map(|r| r.mse_empirical).collect())),
        slope_analytic: slope(Some(results.iter().map(|r| r.mse_analytic).collect())),
        slope_closed_form: slope(results.iter().map(|r| r.mse_closed_form).collect()),
        max_abs_deviation,
    })
}

/// Single-cluster variance experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbeResult {
    pub n_e: usize,
    pub r: usize,
    pub phi: f64,
    pub mode: EstimationMode,
    pub repetitions: usize,
    pub seed: u64,
    pub mean_estimate: f64,
    pub var_empirical: f64,
    /// `1/(N_e² r)`.
    pub var_predicted: f64,
    pub oracle: ObservableStatistics,
    /// Error propagation applied to `oracle` with `r` repetitions.
    pub var_propagated: f64,
}

/// Draws `repetitions` estimates from one cluster; repetition `i` uses
/// `SeedStream::new(seed).substream(i)`.
pub fn run_probe(config: &ClusterConfig, repetitions: usize, seed: u64) -> Result<ProbeResult> {
    if repetitions < 2 {
        return Err(Error::InsufficientData { needed: 2, got: repetitions });
    }
    let root = SeedStream::new(seed);
    let draws: Vec<f64> = (0..repetitions)
        .into_par_iter()
        .map(|i| estimate_phase(config, &mut root.substream(i as u64).rng()))
        .collect();
    let n = draws.len() as f64;
    let mean = draws.iter().sum::<f64>() / n;
    let var = draws.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    let oracle = if config.n_entangled() <= MAX_DENSE_QUBITS {
        dense_oracle(config)?
    } else {
        ObservableStatistics::for_cluster(config.n_entangled(), config.phase())
    };
    Ok(ProbeResult {
        n_e: config.n_entangled(),
        r: config.trials(),
        phi: config.phase(),
        mode: config.mode(),
        repetitions,
        seed,
        mean_estimate: mean,
        var_empirical: var,
        var_predicted: config.estimate_variance(),
        var_propagated: phase_variance_from_observable(&oracle, config.trials())?,
        oracle,
    })
}

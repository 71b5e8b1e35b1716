//! Simulation and verification of quantum-enhanced classical sensor networks.
//!
//! `K` clusters of `N_e` GHZ-entangled qubits each produce a phase estimate
//! with variance `1/(N_e² r)`. The estimates pass through a noisy linear
//! channel `Hφ̂ + n` and are fused by a linear combiner `g`. This crate
//! simulates the pipeline, evaluates its mean squared error in closed form,
//! computes the optimal `g` and `H`, and checks the closed forms against
//! Monte Carlo and numerical oracles.
//!
//! - [`quantum_probe`]: cluster measurement, dense-state oracle, error propagation.
//! - [`network_model`]: channel, combiner, MSE, optimal designs and minima.
//! - [`montecarlo`]: end-to-end experiments and parameter sweeps.
//! - [`verify`]: the invariant suite behind `qsense verify`.
//! - [`cli`]: command-line front end.

pub mod cli;
pub mod error;
pub mod linalg;
pub mod montecarlo;
pub mod network_model;
pub mod quantum_probe;
pub mod report;
pub mod rng;
pub mod verify;

pub use error::{Error, Result};
pub use montecarlo::{
    classical_baseline, run_experiment, run_probe, summarize, sweep, ChannelChoice, CombinerChoice,
    ExperimentConfig, ExperimentResult, SweepAxis, SweepSummary,
};
pub use network_model::{AutocorrelationModel, ChannelSpec, CombinerWeights, ErrorReport};
pub use quantum_probe::{ClusterConfig, EstimateVector, EstimationMode, ObservableStatistics};
pub use rng::SeedStream;

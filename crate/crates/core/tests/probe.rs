use std::f64::consts::PI;

use approx::assert_abs_diff_eq;
use nalgebra::{Complex, DMatrix, DVector};
use proptest::prelude::*;
use qsense::montecarlo::run_probe;
use qsense::quantum_probe::{
    dense_oracle, dense_statistics, estimate_phase, estimate_vector, phase_variance_from_observable, sample_outcomes,
    ClusterConfig, DenseProbeState, EstimationMode,
};
use qsense::verify::{binomial_chi_square, chi_square_critical_999};
use qsense::SeedStream;
use statrs::distribution::{ChiSquared, ContinuousCDF};

fn physical(n: usize, r: usize, phi: f64) -> ClusterConfig {
    ClusterConfig::new(n, r, phi, EstimationMode::PhysicalBinomial).unwrap()
}

fn ideal(n: usize, r: usize, phi: f64) -> ClusterConfig {
    ClusterConfig::new(n, r, phi, EstimationMode::IdealGaussian).unwrap()
}

/// Brute-force ⟨ψ|𝒳|ψ⟩ from the tensor product of single-qubit states.
fn kron_expectation(n: usize, phase: f64) -> f64 {
    // unnormalized GHZ then phase gate on each qubit, built by Kronecker products
    let gate = DMatrix::from_diagonal(&DVector::from_vec(vec![Complex::new(1.0, 0.0), Complex::from_polar(1.0, phase)]));
    let mut u = DMatrix::from_element(1, 1, Complex::new(1.0, 0.0));
    for _ in 0..n {
        u = u.kronecker(&gate);
    }
    let dim = 1 << n;
    let mut ghz = DVector::from_element(dim, Complex::new(0.0, 0.0));
    ghz[0] = Complex::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
    ghz[dim - 1] = Complex::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
    let psi = u * ghz;
    let mut x = DMatrix::from_element(dim, dim, Complex::new(0.0, 0.0));
    x[(0, dim - 1)] = Complex::new(1.0, 0.0);
    x[(dim - 1, 0)] = Complex::new(1.0, 0.0);
    psi.dotc(&(x * &psi)).re
}

#[test]
fn dense_oracle_matches_kronecker_construction() {
    for n in 1..=5 {
        for phi in [0.05, 0.3, 0.6] {
            let phi = phi / n as f64;
            let s = dense_statistics(n, phi).unwrap();
            assert_abs_diff_eq!(s.mean, kron_expectation(n, phi), epsilon = 1e-13);
        }
    }
}

#[test]
fn dense_oracle_grid_up_to_twelve_qubits() {
    for n in 1..=12 {
        let state = DenseProbeState::new(n, 0.37 / n as f64).unwrap();
        assert_abs_diff_eq!(state.norm(), 1.0, epsilon = 1e-13);
        assert_abs_diff_eq!(state.expectation(), 0.37f64.cos(), epsilon = 1e-12);
        assert_abs_diff_eq!(state.second_moment(), 1.0, epsilon = 1e-12);
    }
}

#[test]
fn dense_derivative_matches_finite_difference() {
    let (n, phi, h) = (4, 0.2, 1e-6);
    let s = dense_statistics(n, phi).unwrap();
    let fd = (dense_statistics(n, phi + h).unwrap().mean - dense_statistics(n, phi - h).unwrap().mean) / (2.0 * h);
    assert_abs_diff_eq!(s.d_mean_d_phase, fd, epsilon = 1e-8);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn oracle_statistics_propagate_to_heisenberg_variance(n in 1usize..=8, frac in 0.02f64..0.98, r in 1usize..10_000) {
        let cfg = ideal(n, r, frac * PI / n as f64);
        let stats = dense_oracle(&cfg).unwrap();
        prop_assert!((stats.mean - (n as f64 * cfg.phase()).cos()).abs() <= 1e-12);
        prop_assert!((stats.variance - (1.0 - stats.mean * stats.mean)).abs() <= 1e-12);
        let var = phase_variance_from_observable(&stats, r).unwrap();
        let expected = 1.0 / ((n * n * r) as f64);
        prop_assert!((var - expected).abs() <= 1e-12 * expected, "{} vs {}", var, expected);
    }

    #[test]
    fn seeded_draws_are_reproducible(seed in any::<u64>(), k in 1usize..40) {
        let cfg = physical(3, 17, 0.5);
        let s = SeedStream::new(seed);
        prop_assert_eq!(estimate_vector(&cfg, k, &s).unwrap(), estimate_vector(&cfg, k, &s).unwrap());
    }
}

#[test]
fn outcome_frequency_concentrates() {
    let cfg = physical(3, 100_000, 0.2);
    let p = (1.0 + 0.6f64.cos()) / 2.0;
    let count = sample_outcomes(&cfg, &mut SeedStream::new(11).rng()) as f64;
    let tol = 3.0 * (p * (1.0 - p) / 1e5).sqrt();
    assert!((count / 1e5 - p).abs() <= tol, "{} vs {p}", count / 1e5);

    let half = physical(5, 100_000, PI / 10.0);
    let count = sample_outcomes(&half, &mut SeedStream::new(12).rng()) as f64;
    assert!((count / 1e5 - 0.5).abs() <= 3.0 * (0.25f64 / 1e5).sqrt());
}

#[test]
fn wilson_hilferty_critical_values_track_exact_quantiles() {
    for dof in [3usize, 5, 10, 20, 40] {
        let exact = ChiSquared::new(dof as f64).unwrap().inverse_cdf(0.999);
        let approx = chi_square_critical_999(dof);
        let tol = if dof < 10 { 0.02 } else { 0.01 };
        assert!((approx - exact).abs() / exact < tol, "dof {dof}: {approx} vs {exact}");
    }
}

#[test]
fn outcome_counts_are_binomial() {
    let r = 25;
    let mut passing = 0;
    let mut total = 0;
    for (i, n) in [1usize, 2, 4].into_iter().enumerate() {
        for (j, frac) in [0.15, 0.4, 0.6, 0.85].into_iter().enumerate() {
            let cfg = physical(n, r, frac * PI / n as f64);
            let mut rng = SeedStream::new(500).substream((i * 4 + j) as u64).rng();
            let mut counts = vec![0u64; r + 1];
            for _ in 0..100_000 {
                counts[sample_outcomes(&cfg, &mut rng) as usize] += 1;
            }
            let (stat, dof) = binomial_chi_square(&counts, r, cfg.plus_probability());
            let crit = ChiSquared::new(dof as f64).unwrap().inverse_cdf(0.999);
            total += 1;
            if stat <= crit {
                passing += 1;
            }
        }
    }
    assert!(passing as f64 / total as f64 >= 0.95, "{passing}/{total}");
}

#[test]
fn physical_estimator_reaches_heisenberg_variance() {
    let cfg = physical(2, 10_000, PI / 6.0);
    let res = run_probe(&cfg, 10_000, 2024).unwrap();
    assert_abs_diff_eq!(res.var_predicted, 2.5e-5, epsilon = 1e-20);
    assert!((res.var_empirical / 2.5e-5 - 1.0).abs() < 0.05, "{}", res.var_empirical);
}

#[test]
fn ideal_estimator_variance_and_mean() {
    let cfg = ideal(3, 40, 0.5);
    let res = run_probe(&cfg, 100_000, 3).unwrap();
    assert!((res.var_empirical / cfg.estimate_variance() - 1.0).abs() < 0.05);

    let k = 10_000;
    let est = estimate_vector(&cfg, k, &SeedStream::new(77)).unwrap();
    let mean = est.as_slice().iter().sum::<f64>() / k as f64;
    assert!((mean - 0.5).abs() <= 3.0 * cfg.estimate_variance().sqrt() / (k as f64).sqrt());
}

#[test]
fn ideal_estimator_degenerates_for_huge_r() {
    let cfg = ideal(2, usize::MAX / 4, 0.3);
    let x = estimate_phase(&cfg, &mut SeedStream::new(1).rng());
    assert_abs_diff_eq!(x, 0.3, epsilon = 1e-8);
}

#[test]
fn physical_estimator_clips_to_domain() {
    // tiny phase with few trials: every outcome +1 gives an estimate of exactly 0
    let cfg = physical(2, 4, 1e-6);
    assert_eq!(estimate_phase(&cfg, &mut SeedStream::new(3).rng()), 0.0);
    for seed in 0..200 {
        let x = estimate_phase(&physical(3, 5, 0.9), &mut SeedStream::new(seed).rng());
        assert!((0.0..=PI / 3.0).contains(&x));
    }
}

mod common;

use common::rel;
use nalgebra::DVector;
use qsense::montecarlo::*;
use qsense::network_model::CombinerWeights;
use qsense::quantum_probe::{ClusterConfig, EstimationMode};

fn cluster(n_e: usize, r: usize, phi: f64) -> ClusterConfig {
    ClusterConfig::new(n_e, r, phi, EstimationMode::IdealGaussian).unwrap()
}

/// φ²/(1 + Kφ²N_e²r), evaluated directly.
fn noiseless_min(k: usize, n_e: usize, r: usize, phi: f64) -> f64 {
    let p = phi * phi;
    p / (1.0 + k as f64 * p * (n_e * n_e * r) as f64)
}

/// φ²(σ²+v)/(σ²+Kφ²+v), evaluated directly.
fn identity_minimum(k: usize, sigma_sq: f64, phi: f64, v: f64) -> f64 {
    let p = phi * phi;
    p * (sigma_sq + v) / (sigma_sq + k as f64 * p + v)
}

#[test]
fn huge_r_gives_vanishing_error() {
    let mut cfg = ExperimentConfig::new(cluster(2, 1_000_000_000_000, 0.3), 5, 0.0, 2000, 3);
    cfg.combiner = CombinerChoice::UniformAverage;
    let res = run_experiment(&cfg).unwrap();
    // averaging K unbiased estimates of variance σ² = 1/(4·10¹²)
    assert!(res.mse_empirical < 1e-12);
    assert!(rel(res.mse_empirical, 2.5e-13 / 5.0) < 0.1, "{}", res.mse_empirical);
}

#[test]
fn headline_noiseless_minimum() {
    let cfg = ExperimentConfig::new(cluster(4, 100, 0.1), 100, 0.0, 100_000, 2024);
    let res = run_experiment(&cfg).unwrap();
    let target = 0.01 / 1601.0;
    assert!(rel(noiseless_min(100, 4, 100, 0.1), target) < 1e-14);
    assert!(rel(res.mse_closed_form.unwrap(), target) < 1e-10);
    assert!(rel(res.mse_analytic, target) < 1e-10);
    let z = (res.mse_empirical - target) / res.mse_stderr;
    assert!(z.abs() <= 4.0, "mse {} stderr {}", res.mse_empirical, res.mse_stderr);
    assert!(res.mse_stderr > 0.0 && res.mse_empirical >= 0.0);
}

#[test]
fn results_do_not_depend_on_worker_count() {
    let mut cfg = ExperimentConfig::new(cluster(3, 20, 0.2), 6, 0.05, 3000, 77);
    cfg.channel = ChannelChoice::RandomGaussian { scale: 0.7 };
    let one = with_workers(1, || run_experiment(&cfg).unwrap());
    let three = with_workers(3, || run_experiment(&cfg).unwrap());
    assert_eq!(one, three);
    assert_eq!(one.mse_empirical.to_bits(), three.mse_empirical.to_bits());

    let mut phys = ExperimentConfig::new(
        ClusterConfig::new(2, 50, 0.4, EstimationMode::PhysicalBinomial).unwrap(),
        4,
        0.0,
        500,
        78,
    );
    phys.combiner = CombinerChoice::UniformAverage;
    assert_eq!(
        with_workers(1, || run_experiment(&phys).unwrap()),
        with_workers(2, || run_experiment(&phys).unwrap())
    );
}

#[test]
fn different_seeds_give_different_draws() {
    let a = run_experiment(&ExperimentConfig::new(cluster(2, 10, 0.3), 3, 0.0, 100, 1)).unwrap();
    let b = run_experiment(&ExperimentConfig::new(cluster(2, 10, 0.3), 3, 0.0, 100, 2)).unwrap();
    assert_ne!(a.mse_empirical, b.mse_empirical);
    assert_eq!(a.mse_analytic, b.mse_analytic);
}

#[test]
fn k_sweep_slope() {
    let base = ExperimentConfig::new(cluster(4, 100, 0.1), 1, 0.0, 2000, 11);
    let res = sweep(&base, SweepAxis::K, &[10.0, 100.0, 1000.0]).unwrap();
    assert_eq!(res.iter().map(|r| r.k).collect::<Vec<_>>(), vec![10, 100, 1000]);
    for r in &res {
        assert!(rel(r.mse_closed_form.unwrap(), noiseless_min(r.k, 4, 100, 0.1)) < 1e-10);
    }
    let s = summarize(&res).unwrap();
    assert!((s.slope_closed_form.unwrap() + 1.0).abs() <= 0.05);
    assert!((s.slope_empirical.unwrap() + 1.0).abs() <= 0.1);
    assert!(s.max_abs_deviation <= 4.0);

    // the direct formula agrees with the slope reported
    let pts: Vec<_> = [10, 100, 1000].iter().map(|&k| (k as f64, noiseless_min(k, 4, 100, 0.1))).collect();
    assert!((log_log_slope(&pts).unwrap() - s.slope_closed_form.unwrap()).abs() < 1e-12);
}

#[test]
fn n_e_and_r_sweep_slopes() {
    let base = ExperimentConfig::new(cluster(1, 100, 0.1), 100, 0.0, 500, 12);
    let res = sweep(&base, SweepAxis::NEntangled, &[1.0, 2.0, 4.0, 8.0, 10.0]).unwrap();
    let s = summarize(&res).unwrap();
    assert!((s.slope_closed_form.unwrap() + 2.0).abs() <= 0.05);

    let base = ExperimentConfig::new(cluster(4, 10, 0.1), 100, 0.0, 500, 13);
    let res = sweep(&base, SweepAxis::Trials, &[10.0, 30.0, 100.0]).unwrap();
    assert!((summarize(&res).unwrap().slope_closed_form.unwrap() + 1.0).abs() <= 0.05);
}

#[test]
fn noise_dominated_n_e_sweep_is_flat() {
    let base = ExperimentConfig::new(cluster(1, 1000, 0.1), 10_000, 0.1, 1, 14);
    let values: Vec<f64> = (1..=16).map(f64::from).collect();
    let res = sweep(&base, SweepAxis::NEntangled, &values).unwrap();
    let mins: Vec<f64> = res.iter().map(|r| r.mse_closed_form.unwrap()).collect();
    for (r, m) in res.iter().zip(&mins) {
        let s = 1.0 / (r.n_e * r.n_e * 1000) as f64;
        assert!(rel(*m, identity_minimum(10_000, s, 0.1, 0.1)) < 1e-10);
    }
    let hi = mins.iter().cloned().fold(f64::MIN, f64::max);
    let lo = mins.iter().cloned().fold(f64::MAX, f64::min);
    assert!((hi - lo) / lo < 0.05);
}

#[test]
fn k_sweep_with_noise_approaches_sigma_plus_v() {
    let base = ExperimentConfig::new(cluster(4, 100, 0.1), 1, 0.01, 200, 15);
    let res = sweep(&base, SweepAxis::K, &[10.0, 100.0, 1000.0, 10_000.0]).unwrap();
    let target = 1.0 / 1600.0 + 0.01;
    let scaled: Vec<f64> = res.iter().map(|r| r.k as f64 * r.mse_closed_form.unwrap()).collect();
    for w in scaled.windows(2) {
        assert!((w[1] - target).abs() < (w[0] - target).abs());
    }
    assert!(rel(scaled[2], target) < 0.05);
}

#[test]
fn noisy_network_loses_to_classical_baseline() {
    let c = cluster(4, 100, 0.1);
    let noisy = identity_minimum(100, 1.0 / 1600.0, 0.1, 0.01);
    assert!(noisy > classical_baseline(100, &c));
    let res = run_experiment(&ExperimentConfig::new(c, 100, 0.01, 10, 1)).unwrap();
    assert!(rel(res.mse_closed_form.unwrap(), noisy) < 1e-10);
    // without noise the entangled network beats it
    assert!(noiseless_min(100, 4, 100, 0.1) < classical_baseline(100, &c));
}

#[test]
fn sweep_rejects_invalid_axis_values() {
    let base = ExperimentConfig::new(cluster(2, 10, 0.3), 4, 0.0, 10, 1);
    for (axis, v) in [
        (SweepAxis::K, 0.0),
        (SweepAxis::K, 1.5),
        (SweepAxis::NEntangled, -1.0),
        (SweepAxis::Trials, f64::NAN),
        (SweepAxis::NoiseVariance, -0.5),
        (SweepAxis::Phase, 0.0),
    ] {
        let err = sweep(&base, axis, &[2.0, v]).unwrap_err();
        assert!(matches!(err, qsense::Error::InvalidAxisValue { .. }), "{err:?}");
    }
    assert!(matches!(summarize(&[]), Err(qsense::Error::InsufficientData { .. })));
    assert!("Q".parse::<SweepAxis>().is_err());
    assert_eq!("N_e".parse::<SweepAxis>().unwrap(), SweepAxis::NEntangled);
}

#[test]
fn sweep_points_use_distinct_substreams() {
    let base = ExperimentConfig::new(cluster(2, 10, 0.3), 4, 0.0, 50, 9);
    let res = sweep(&base, SweepAxis::K, &[4.0, 4.0]).unwrap();
    assert_ne!(res[0].seed, res[1].seed);
    assert_ne!(res[0].mse_empirical, res[1].mse_empirical);
    assert_eq!(res[0].mse_analytic, res[1].mse_analytic);
    assert_eq!(sweep(&base, SweepAxis::K, &[4.0, 4.0]).unwrap(), res);
}

#[test]
fn optimal_channel_runs() {
    let c = cluster(2, 25, 0.2);
    let sigma_sq = 1.0 / 100.0;
    let mut cfg = ExperimentConfig::new(c.clone(), 8, 0.0, 20_000, 21);
    cfg.channel = ChannelChoice::OptimalForG;
    let res = run_experiment(&cfg).unwrap();
    assert!(rel(res.mse_closed_form.unwrap(), noiseless_min(8, 2, 25, 0.2)) < 1e-10);
    assert!(rel(res.mse_analytic, noiseless_min(8, 2, 25, 0.2)) < 1e-9);
    assert!(res.standardized_deviation().abs() <= 4.0);

    // fixed g, optimal H, noisy: v·gᵀg + φ²σ²/(σ²+Kφ²)
    let g = DVector::from_vec(vec![0.5, -0.25, 1.0, 0.1, 0.3, 0.2, 0.0, 0.7]);
    let mut cfg = ExperimentConfig::new(c, 8, 0.05, 20_000, 22);
    cfg.channel = ChannelChoice::OptimalForG;
    cfg.combiner = CombinerChoice::Weights(CombinerWeights::new(g.clone()).unwrap());
    let res = run_experiment(&cfg).unwrap();
    let over_h_ref = 0.05 * g.norm_squared() + 0.04 * sigma_sq / (sigma_sq + 8.0 * 0.04);
    assert!(rel(res.mse_closed_form.unwrap(), over_h_ref) < 1e-10);
    assert!(rel(res.mse_analytic, over_h_ref) < 1e-9);
    assert!(res.standardized_deviation().abs() <= 4.0);

    let mut cfg = ExperimentConfig::new(cluster(2, 25, 0.2), 8, 0.05, 10, 23);
    cfg.channel = ChannelChoice::OptimalForG;
    assert_eq!(run_experiment(&cfg).unwrap().mse_closed_form, None);
}

#[test]
fn default_grid_is_statistically_consistent() {
    let mut z = Vec::new();
    let mut seed = 100;
    for k in [1, 10] {
        for n_e in [1, 3] {
            for v in [0.0, 0.05] {
                for h in [ChannelChoice::Identity, ChannelChoice::RandomGaussian { scale: 1.0 }] {
                    let mut cfg = ExperimentConfig::new(cluster(n_e, 10, 0.25), k, v, 5000, seed);
                    cfg.channel = h;
                    seed += 1;
                    let res = run_experiment(&cfg).unwrap();
                    assert!(res.mse_stderr > 0.0);
                    z.push(res.standardized_deviation());
                }
            }
        }
    }
    assert!(z.iter().all(|z| z.abs() <= 4.0), "{z:?}");
    let within2 = z.iter().filter(|z| z.abs() <= 2.0).count();
    // ≥ 95% expected; with 16 runs allow the binomial tail (P(≥3 outside) ≈ 4%)
    assert!(within2 >= 14, "{z:?}");
}

#[test]
fn mismatched_design_phase_reports_no_closed_form() {
    let mut cfg = ExperimentConfig::new(cluster(2, 10, 0.3), 4, 0.01, 4000, 31);
    cfg.design_phase = Some(0.35);
    let res = run_experiment(&cfg).unwrap();
    assert_eq!(res.mse_closed_form, None);
    assert_eq!(res.design_phase, 0.35);
    assert!(res.standardized_deviation().abs() <= 4.0);
    let genie = run_experiment(&ExperimentConfig::new(cluster(2, 10, 0.3), 4, 0.01, 10, 31)).unwrap();
    assert!(res.mse_analytic > genie.mse_analytic);
}

#[test]
fn probe_runs_report_both_variance_predictions() {
    let c = ClusterConfig::new(3, 400, 0.3, EstimationMode::PhysicalBinomial).unwrap();
    let p = run_probe(&c, 4000, 5).unwrap();
    assert!(rel(p.var_predicted, 1.0 / 3600.0) < 1e-14);
    assert!(rel(p.var_propagated, p.var_predicted) < 1e-10);
    assert!(rel(p.var_empirical, p.var_predicted) < 0.1);
    assert_eq!(with_workers(1, || run_probe(&c, 300, 6).unwrap()), with_workers(3, || run_probe(&c, 300, 6).unwrap()));
    assert!(run_probe(&c, 1, 0).is_err());
}

//! Invariant suite run by `qsense verify`.
//!
//! Each check records a measured value, the threshold it is compared with
//! and the verdict. Random instances are drawn from substreams of the
//! verification seed, so the report, and its CSV rendering, depends only on
//! the seed.

use std::f64::consts::PI;
use std::io::Write;

use nalgebra::{DMatrix, DVector};
use rand::Rng;

use crate::error::Result;
use crate::montecarlo::{
    classical_baseline, run_experiment, run_probe, with_workers, ChannelChoice, CombinerChoice, ExperimentConfig,
    ExperimentResult,
};
use crate::network_model::{
    analytic_mse, inverse_r_sherman_morrison, min_mse_identity_channel, min_mse_over_h, mse_gradient_g,
    mse_gradient_h, noiseless_minimum, optimal_g, optimal_h, AutocorrelationModel, ChannelSpec, CombinerWeights,
};
use crate::quantum_probe::{
    estimate_vector, phase_variance_from_observable, sample_outcomes, ClusterConfig, DenseProbeState, EstimationMode,
    ObservableStatistics, MAX_DENSE_QUBITS,
};
use crate::report::{fmt_f64, read_experiment_csv, write_experiment_csv, ExperimentRow};
use crate::rng::SeedStream;

/// Upper 0.999 quantile of the standard normal.
const Z_999: f64 = 3.090_232_306_167_814;

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub group: &'static str,
    pub name: String,
    pub value: f64,
    pub threshold: f64,
    pub passed: bool,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct VerifyReport {
    pub checks: Vec<Check>,
}

impl VerifyReport {
    fn at_most(&mut self, group: &'static str, name: impl Into<String>, value: f64, threshold: f64) {
        let passed = value <= threshold;
        self.checks.push(Check { group, name: name.into(), value, threshold, passed });
    }

    fn at_least(&mut self, group: &'static str, name: impl Into<String>, value: f64, threshold: f64) {
        let passed = value >= threshold;
        self.checks.push(Check { group, name: name.into(), value, threshold, passed });
    }

    pub fn passed(&self) -> usize {
        self.checks.iter().filter(|c| c.passed).count()
    }

    pub fn failed(&self) -> usize {
        self.checks.len() - self.passed()
    }

    pub fn all_passed(&self) -> bool {
        self.failed() == 0
    }

    pub fn write_csv<W: Write>(&self, out: W) -> csv::Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["group", "check", "value", "threshold", "passed"])?;
        for c in &self.checks {
            w.write_record([
                c.group.to_string(),
                c.name.clone(),
                fmt_f64(c.value),
                fmt_f64(c.threshold),
                c.passed.to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn table(&self) -> String {
        let mut s = String::new();
        for c in &self.checks {
            s.push_str(&format!(
                "[{}] {:<10} {:<52} value={:<12.4e} threshold={:.4e}\n",
                if c.passed { "PASS" } else { "FAIL" },
                c.group,
                c.name,
                c.value,
                c.threshold
            ));
        }
        s
    }
}

/// Wilson–Hilferty approximation of the upper 0.999 chi-square quantile.
pub fn chi_square_critical_999(dof: usize) -> f64 {
    let k = dof as f64;
    let a = 2.0 / (9.0 * k);
    k * (1.0 - a + Z_999 * a.sqrt()).powi(3)
}

fn binomial_pmf(n: usize, p: f64) -> Vec<f64> {
    let mut pmf = vec![0.0; n + 1];
    pmf[0] = (1.0 - p).powi(n as i32);
    for k in 0..n {
        pmf[k + 1] = pmf[k] * (n - k) as f64 / (k + 1) as f64 * p / (1.0 - p);
    }
    pmf
}

/// Pearson statistic for observed counts per outcome against `Bin(n, p)`,
/// pooling tail cells until every cell expects at least five.
pub fn binomial_chi_square(counts: &[u64], n: usize, p: f64) -> (f64, usize) {
    let total: u64 = counts.iter().sum();
    let expected: Vec<f64> = binomial_pmf(n, p).into_iter().map(|q| q * total as f64).collect();
    let mut cells: Vec<(f64, f64)> = Vec::new();
    let (mut obs_acc, mut exp_acc) = (0.0, 0.0);
    for (o, e) in counts.iter().zip(&expected) {
        obs_acc += *o as f64;
        exp_acc += e;
        if exp_acc >= 5.0 {
            cells.push((obs_acc, exp_acc));
            obs_acc = 0.0;
            exp_acc = 0.0;
        }
    }
    if let Some(last) = cells.last_mut() {
        last.0 += obs_acc;
        last.1 += exp_acc;
    }
    let stat = cells.iter().map(|(o, e)| (o - e) * (o - e) / e).sum();
    (stat, cells.len().saturating_sub(1))
}

/// Smallest `m` with `P(Bin(n, p) > m) ≤ alpha`.
fn binomial_upper_quantile(n: usize, p: f64, alpha: f64) -> usize {
    let mut cdf = 0.0;
    for (m, q) in binomial_pmf(n, p).into_iter().enumerate() {
        cdf += q;
        if 1.0 - cdf <= alpha {
            return m;
        }
    }
    n
}

fn random_matrix<R: Rng>(rng: &mut R, k: usize) -> DMatrix<f64> {
    DMatrix::from_fn(k, k, |_, _| rng.random_range(-1.0..1.0))
}

fn random_vector<R: Rng>(rng: &mut R, k: usize) -> DVector<f64> {
    DVector::from_fn(k, |_, _| rng.random_range(-1.0..1.0))
}

/// Random `(R, φ)` with `σ² = 1/(N_e² r)` for `N_e ≤ 4`, `r ≤ 20`.
fn random_model<R: Rng>(rng: &mut R, k: usize) -> (AutocorrelationModel, f64) {
    let n_e = rng.random_range(1..=4usize);
    let r = rng.random_range(1..=20usize);
    let phase = rng.random_range(0.05..0.95) * (PI / n_e as f64).min(1.0);
    let sigma_sq = 1.0 / ((n_e * n_e * r) as f64);
    (AutocorrelationModel::new(k, sigma_sq, phase).expect("valid model"), phase)
}

fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(f64::MIN_POSITIVE)
}

/// Central-difference gradients of `analytic_mse` with respect to `g` and `H`.
fn finite_difference_gradients(
    g: &DVector<f64>,
    h: &DMatrix<f64>,
    v: f64,
    model: &AutocorrelationModel,
    phase: f64,
    step: f64,
) -> Result<(DVector<f64>, DMatrix<f64>)> {
    let mse = |g: &DVector<f64>, h: &DMatrix<f64>| -> Result<f64> {
        Ok(analytic_mse(&CombinerWeights::new(g.clone())?, &ChannelSpec::new(h.clone(), v)?, model, phase)?.mse)
    };
    let k = g.len();
    let mut dg = DVector::zeros(k);
    for i in 0..k {
        let (mut p, mut m) = (g.clone(), g.clone());
        p[i] += step;
        m[i] -= step;
        dg[i] = (mse(&p, h)? - mse(&m, h)?) / (2.0 * step);
    }
    let mut dh = DMatrix::zeros(k, k);
    for i in 0..k {
        for j in 0..k {
            let (mut p, mut m) = (h.clone(), h.clone());
            p[(i, j)] += step;
            m[(i, j)] -= step;
            dh[(i, j)] = (mse(g, &p)? - mse(g, &m)?) / (2.0 * step);
        }
    }
    Ok((dg, dh))
}

fn probe_checks(report: &mut VerifyReport, root: &SeedStream) -> Result<()> {
    const G: &str = "probe";
    let (mut mean_err, mut moment_err, mut prop_err) = (0.0f64, 0.0f64, 0.0f64);
    for n in 1..=MAX_DENSE_QUBITS {
        let points = if n <= 8 { 20 } else { 4 };
        for j in 1..=points {
            let phase = j as f64 / (points + 1) as f64 * PI / n as f64;
            let state = DenseProbeState::new(n, phase)?;
            let mean = state.expectation();
            let second = state.second_moment();
            mean_err = mean_err.max((mean - (n as f64 * phase).cos()).abs());
            moment_err = moment_err.max((second - 1.0).abs());
            let stats = ObservableStatistics {
                mean,
                variance: second - mean * mean,
                d_mean_d_phase: state.expectation_derivative(),
            };
            for r in [1usize, 7, 100] {
                let var = phase_variance_from_observable(&stats, r)?;
                prop_err = prop_err.max(rel_err(var, 1.0 / ((n * n * r) as f64)));
            }
        }
    }
    report.at_most(G, "dense mean equals cos(N_e phi), N_e<=12", mean_err, 1e-12);
    report.at_most(G, "dense second moment equals 1, N_e<=12", moment_err, 1e-12);
    report.at_most(G, "propagated variance equals 1/(N_e^2 r)", prop_err, 1e-12);

    let mut worst = 0.0f64;
    for (i, &(n, r, frac)) in [(1usize, 10usize, 0.3), (3, 50, 0.5), (8, 4, 0.7)].iter().enumerate() {
        let cfg = ClusterConfig::new(n, r, frac * PI / n as f64, EstimationMode::IdealGaussian)?;
        let res = run_probe(&cfg, 100_000, root.substream(100 + i as u64).key())?;
        worst = worst.max(rel_err(res.var_empirical, res.var_predicted));
    }
    report.at_most(G, "ideal estimator variance within 5% (1e5 draws)", worst, 0.05);

    let trials = 30usize;
    let draws = 100_000usize;
    let mut passing = 0usize;
    let mut total = 0usize;
    for (a, n) in [1usize, 2, 3, 5].into_iter().enumerate() {
        for (b, frac) in [0.2, 0.5, 0.8].into_iter().enumerate() {
            let cfg = ClusterConfig::new(n, trials, frac * PI / n as f64, EstimationMode::PhysicalBinomial)?;
            let mut rng = root.substream(200 + (a * 3 + b) as u64).rng();
            let mut counts = vec![0u64; trials + 1];
            for _ in 0..draws {
                counts[sample_outcomes(&cfg, &mut rng) as usize] += 1;
            }
            let (stat, dof) = binomial_chi_square(&counts, trials, cfg.plus_probability());
            total += 1;
            if stat <= chi_square_critical_999(dof) {
                passing += 1;
            }
        }
    }
    report.at_least(G, "binomial chi-square at 0.001, fraction of grid passing", passing as f64 / total as f64, 0.95);

    let cfg = ClusterConfig::new(2, 25, 0.4, EstimationMode::PhysicalBinomial)?;
    let s = root.substream(300);
    let same_vec = estimate_vector(&cfg, 64, &s)? == estimate_vector(&cfg, 64, &s)?;
    let exp = ExperimentConfig::new(cfg, 6, 0.05, 2_000, s.key());
    let one = with_workers(1, || run_experiment(&exp))?;
    let many = with_workers(3, || run_experiment(&exp))?;
    report.at_least(G, "seeded streams are reproducible across worker counts", f64::from(same_vec && one == many), 1.0);
    Ok(())
}

fn network_checks(report: &mut VerifyReport, root: &SeedStream) -> Result<()> {
    const G: &str = "network";
    let mut rng = root.substream(1000).rng();

    let (mut stat_g, mut stat_h, mut probe_drop) = (0.0f64, 0.0f64, f64::INFINITY);
    for i in 0..20 {
        let k = [2, 5, 10, 20][i % 4];
        let (model, phase) = random_model(&mut rng, k);
        let v = rng.random_range(0.05..1.0);
        let spec = ChannelSpec::new(random_matrix(&mut rng, k), v)?;
        let g_star = optimal_g(&spec, &model, phase)?;
        stat_g = stat_g.max(mse_gradient_g(&g_star, &spec, &model, phase)?.norm());

        let g = CombinerWeights::new(random_vector(&mut rng, k))?;
        let h_star = spec.with_gain(optimal_h(&g, &model, phase)?)?;
        stat_h = stat_h.max(mse_gradient_h(&g, &h_star, &model, phase)?.norm());

        if i < 5 {
            let base = analytic_mse(&g_star, &spec, &model, phase)?.mse;
            for _ in 0..100 {
                let dir = random_vector(&mut rng, k);
                let delta = dir.normalize() * 1e-3;
                let moved = CombinerWeights::new(g_star.as_vector() + delta)?;
                probe_drop = probe_drop.min(analytic_mse(&moved, &spec, &model, phase)?.mse - base);
            }
        }
    }
    report.at_most(G, "gradient wrt g vanishes at optimal g (random H, v>0)", stat_g, 1e-8);
    report.at_most(G, "gradient wrt H vanishes at optimal H (random g)", stat_h, 1e-8);
    report.at_least(G, "perturbations of optimal g never lower the MSE", probe_drop, -1e-12);

    let mut identity_gap = 0.0f64;
    for &k in &[1usize, 2, 5, 10, 100] {
        for &n_e in &[1usize, 2, 4] {
            for &r in &[1usize, 10, 100] {
                for &v in &[0.0, 0.01, 0.5] {
                    for &frac in &[0.1, 0.5, 0.9] {
                        let cfg = ClusterConfig::new(n_e, r, frac * (PI / n_e as f64).min(1.0), EstimationMode::IdealGaussian)?;
                        let model = crate::network_model::build_autocorrelation(k, &cfg)?;
                        let spec = ChannelSpec::identity(k, v)?;
                        let g = optimal_g(&spec, &model, cfg.phase())?;
                        let mse = analytic_mse(&g, &spec, &model, cfg.phase())?.mse;
                        identity_gap = identity_gap.max((mse - min_mse_identity_channel(&model, cfg.phase(), v)?).abs());
                    }
                }
            }
        }
    }
    report.at_most(G, "MSE at optimal g with H=I equals closed-form minimum", identity_gap, 1e-10);

    let (mut over_h_gap, mut rank_gap, mut eig_err) = (0.0f64, 0.0f64, 0.0f64);
    for i in 0..30 {
        let k = [2, 5, 10][i % 3];
        let (model, phase) = random_model(&mut rng, k);
        let v = if i % 2 == 0 { 0.0 } else { rng.random_range(0.0..1.0) };
        let g = CombinerWeights::new(random_vector(&mut rng, k))?;
        let h_star = ChannelSpec::new(optimal_h(&g, &model, phase)?, v)?;
        let at_h_star = analytic_mse(&g, &h_star, &model, phase)?.mse;
        over_h_gap = over_h_gap.max((at_h_star - min_mse_over_h(&g, &model, phase, v)?).abs());

        let noiseless = noiseless_minimum(k, 1.0 / model.sigma_sq(), phase);
        let noiseless_h = ChannelSpec::new(h_star.gain().clone(), 0.0)?;
        let rank_one = analytic_mse(&g, &noiseless_h, &model, phase)?.mse;
        let id = ChannelSpec::identity(k, 0.0)?;
        let full_rank = analytic_mse(&optimal_g(&id, &model, phase)?, &id, &model, phase)?.mse;
        rank_gap = rank_gap.max((rank_one - full_rank).abs()).max((full_rank - noiseless).abs());

        let dense = model.dense();
        let inv = inverse_r_sherman_morrison(&model)?;
        let ones = DVector::from_element(k, 1.0);
        let lambda = model.ones_eigenvalue();
        eig_err = eig_err
            .max((&dense * &ones - &ones * lambda).amax() / lambda)
            .max((&inv * &ones - &ones / lambda).amax() * lambda)
            .max((&dense * &inv - DMatrix::identity(k, k)).amax());
    }
    report.at_most(G, "MSE at optimal H equals closed-form minimum over H", over_h_gap, 1e-10);
    report.at_most(G, "rank-1 and full-rank minima agree at v=0", rank_gap, 1e-10);
    report.at_most(G, "all-ones eigenvector of R and R^-1, R R^-1 = I", eig_err, 1e-10);

    let mut worst_rel = 0.0f64;
    for i in 0..30 {
        let k = [2, 5, 10][i % 3];
        let (model, phase) = random_model(&mut rng, k);
        let v = rng.random_range(0.0..1.0);
        let g = random_vector(&mut rng, k);
        let h = random_matrix(&mut rng, k);
        let (fd_g, fd_h) = finite_difference_gradients(&g, &h, v, &model, phase, 1e-5)?;
        let w = CombinerWeights::new(g)?;
        let spec = ChannelSpec::new(h, v)?;
        let an_g = mse_gradient_g(&w, &spec, &model, phase)?;
        let an_h = mse_gradient_h(&w, &spec, &model, phase)?;
        worst_rel = worst_rel
            .max((&an_g - &fd_g).norm() / an_g.norm().max(fd_g.norm()))
            .max((&an_h - &fd_h).norm() / an_h.norm().max(fd_h.norm()));
    }
    report.at_most(G, "analytic gradients match central differences", worst_rel, 1e-6);

    let (mut worst_z, mut worst_bias) = (0.0f64, 0.0f64);
    for i in 0..4 {
        let k = [2, 3, 5, 4][i];
        let n_e = rng.random_range(1..=3usize);
        let phase = rng.random_range(0.2..0.8) * PI / n_e as f64;
        let cluster = ClusterConfig::new(n_e, rng.random_range(2..=10usize), phase, EstimationMode::IdealGaussian)?;
        let mut cfg = ExperimentConfig::new(cluster, k, rng.random_range(0.0..0.5), 100_000, root.substream(1100 + i as u64).key());
        cfg.channel = ChannelChoice::Matrix(random_matrix(&mut rng, k));
        cfg.combiner = CombinerChoice::Weights(CombinerWeights::new(random_vector(&mut rng, k))?);
        worst_z = worst_z.max(run_experiment(&cfg)?.standardized_deviation().abs());

        // rescale g so that gᵀH1 = 1
        let h = random_matrix(&mut rng, k);
        let raw = random_vector(&mut rng, k);
        let scale = raw.dot(&h.column_sum());
        cfg.channel = ChannelChoice::Matrix(h);
        cfg.combiner = CombinerChoice::Weights(CombinerWeights::new(raw / scale)?);
        cfg.seed = root.substream(1200 + i as u64).key();
        let res = run_experiment(&cfg)?;
        if res.is_unbiased {
            worst_bias = worst_bias.max((res.bias_empirical / res.bias_stderr).abs());
        } else {
            worst_bias = f64::INFINITY;
        }
    }
    report.at_most(G, "empirical MSE within 4 stderr of analytic (1e5 trials)", worst_z, 4.0);
    report.at_most(G, "unbiased designs have empirical bias within 4 stderr", worst_bias, 4.0);
    Ok(())
}

fn default_grid(root: &SeedStream) -> Result<Vec<ExperimentConfig>> {
    let mut grid = Vec::new();
    let specs: [(usize, usize, usize, f64, f64, EstimationMode); 8] = [
        (10, 1, 10, 0.3, 0.0, EstimationMode::IdealGaussian),
        (10, 2, 10, 0.3, 0.05, EstimationMode::IdealGaussian),
        (50, 4, 100, 0.1, 0.0, EstimationMode::IdealGaussian),
        (50, 4, 100, 0.1, 0.01, EstimationMode::IdealGaussian),
        (20, 3, 500, 0.2, 0.0, EstimationMode::PhysicalBinomial),
        (5, 1, 20, 0.5, 0.2, EstimationMode::IdealGaussian),
        (8, 2, 40, 0.4, 0.0, EstimationMode::IdealGaussian),
        (8, 2, 40, 0.4, 0.1, EstimationMode::IdealGaussian),
    ];
    for (i, &(k, n_e, r, phi, v, mode)) in specs.iter().enumerate() {
        let cluster = ClusterConfig::new(n_e, r, phi, mode)?;
        let mut cfg = ExperimentConfig::new(cluster, k, v, 20_000, root.substream(2000 + i as u64).key());
        match i % 4 {
            1 => cfg.combiner = CombinerChoice::UniformAverage,
            2 => cfg.channel = ChannelChoice::OptimalForG,
            3 => {
                cfg.channel = ChannelChoice::OptimalForG;
                cfg.combiner = CombinerChoice::UniformAverage;
            }
            _ => {}
        }
        grid.push(cfg);
    }
    Ok(grid)
}

fn montecarlo_checks(report: &mut VerifyReport, root: &SeedStream) -> Result<Vec<ExperimentResult>> {
    const G: &str = "montecarlo";
    let results = default_grid(root)?
        .iter()
        .map(run_experiment)
        .collect::<Result<Vec<_>>>()?;
    let zs: Vec<f64> = results.iter().map(|r| r.standardized_deviation().abs()).collect();
    let worst = zs.iter().copied().fold(0.0, f64::max);
    let beyond_two = zs.iter().filter(|&&z| z > 2.0).count();
    // P(|Z| > 2) = 0.0455 per run
    let allowed = binomial_upper_quantile(zs.len(), 0.0455, 0.001);
    report.at_most(G, "default grid: empirical MSE within 4 stderr of analytic", worst, 4.0);
    report.at_most(G, "default grid: runs beyond 2 stderr (binomial 0.999 bound)", beyond_two as f64, allowed as f64);

    let bias = results
        .iter()
        .filter(|r| r.is_unbiased)
        .map(|r| (r.bias_empirical / r.bias_stderr).abs())
        .fold(0.0, f64::max);
    report.at_most(G, "default grid: unbiased runs have bias within 4 stderr", bias, 4.0);

    let closed = |k: usize, n_e: usize, r: usize, phi: f64, v: f64| -> Result<f64> {
        let model = AutocorrelationModel::new(k, 1.0 / ((n_e * n_e * r) as f64), phi)?;
        min_mse_identity_channel(&model, phi, v)
    };
    let slope = |pts: Vec<(f64, f64)>| crate::montecarlo::log_log_slope(&pts);
    let k_slope = slope(
        [10usize, 100, 1000]
            .iter()
            .map(|&k| Ok((k as f64, closed(k, 4, 100, 0.1, 0.0)?)))
            .collect::<Result<_>>()?,
    )?;
    let ne_slope = slope(
        [1usize, 10].iter().map(|&n| Ok((n as f64, closed(100, n, 100, 0.1, 0.0)?))).collect::<Result<_>>()?,
    )?;
    let r_slope = slope(
        [10usize, 100, 1000].iter().map(|&r| Ok((r as f64, closed(100, 4, r, 0.1, 0.0)?))).collect::<Result<_>>()?,
    )?;
    report.at_most(G, "noiseless minimum slope in K is -1 (+-0.05)", (k_slope + 1.0).abs(), 0.05);
    report.at_most(G, "noiseless minimum slope in N_e is -2 (+-0.05)", (ne_slope + 2.0).abs(), 0.05);
    report.at_most(G, "noiseless minimum slope in r is -1 (+-0.05)", (r_slope + 1.0).abs(), 0.05);

    let minima = (1..=16usize)
        .map(|n| closed(10_000, n, 1000, 0.1, 0.1))
        .collect::<Result<Vec<_>>>()?;
    let hi = minima.iter().copied().fold(f64::MIN, f64::max);
    let lo = minima.iter().copied().fold(f64::MAX, f64::min);
    report.at_most(G, "v=0.1: minima across N_e=1..16 vary by < 5%", hi / lo - 1.0, 0.05);

    let cluster = ClusterConfig::new(4, 100, 0.1, EstimationMode::IdealGaussian)?;
    let noisy = closed(100, 4, 100, 0.1, 0.01)?;
    report.at_least(G, "noisy minimum exceeds classical baseline (K=100, v=0.01)", noisy / classical_baseline(100, &cluster), 1.0);
    Ok(results)
}

fn csv_checks(report: &mut VerifyReport, results: &[ExperimentResult]) -> Result<()> {
    let mut buf = Vec::new();
    let ok = write_experiment_csv(&mut buf, results).is_ok()
        && match read_experiment_csv(buf.as_slice()) {
            Ok(rows) => {
                rows.len() == results.len()
                    && rows.iter().zip(results).all(|(a, r)| rows_bit_equal(a, &ExperimentRow::from(r)))
            }
            Err(_) => false,
        };
    report.at_least("cli", "CSV rows reparse bit-exactly", f64::from(ok), 1.0);
    Ok(())
}

/// Field-by-field equality comparing floats by bit pattern.
pub fn rows_bit_equal(a: &ExperimentRow, b: &ExperimentRow) -> bool {
    let bits = |x: f64| x.to_bits();
    let obits = |x: Option<f64>| x.map(f64::to_bits);
    obits(a.axis_value) == obits(b.axis_value)
        && a.k == b.k
        && a.n_e == b.n_e
        && a.r == b.r
        && bits(a.phi) == bits(b.phi)
        && bits(a.v) == bits(b.v)
        && a.mode == b.mode
        && a.trials == b.trials
        && a.seed == b.seed
        && bits(a.mse_empirical) == bits(b.mse_empirical)
        && bits(a.mse_stderr) == bits(b.mse_stderr)
        && bits(a.mse_analytic) == bits(b.mse_analytic)
        && obits(a.mse_closed_form) == obits(b.mse_closed_form)
        && bits(a.bias_empirical) == bits(b.bias_empirical)
        && bits(a.bias_factor) == bits(b.bias_factor)
}

/// Runs every check group.
pub fn run_verification(seed: u64) -> Result<VerifyReport> {
    let root = SeedStream::new(seed);
    let mut report = VerifyReport::default();
    probe_checks(&mut report, &root.substream(1))?;
    network_checks(&mut report, &root.substream(2))?;
    let results = montecarlo_checks(&mut report, &root.substream(3))?;
    csv_checks(&mut report, &results)?;
    Ok(report)
}

//! CSV and table output for experiment results.
//!
//! Floats are written with 17 significant digits so every value reparses to
//! the same bits. Absent values are written as empty fields.

use std::io::{Read, Write};

use crate::montecarlo::{ExperimentResult, ProbeResult};

pub const EXPERIMENT_COLUMNS: [&str; 15] = [
    "axis_value",
    "k",
    "n_e",
    "r",
    "phi",
    "v",
    "mode",
    "trials",
    "seed",
    "mse_empirical",
    "mse_stderr",
    "mse_analytic",
    "mse_closed_form",
    "bias_empirical",
    "bias_factor",
];

pub const PROBE_COLUMNS: [&str; 12] = [
    "n_e",
    "r",
    "phi",
    "mode",
    "repetitions",
    "seed",
    "mean_estimate",
    "var_empirical",
    "var_predicted",
    "var_propagated",
    "oracle_mean",
    "oracle_variance",
];

/// 17 significant digits.
pub fn fmt_f64(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else {
        format!("{x}")
    }
}

fn fmt_opt(x: Option<f64>) -> String {
    x.map(fmt_f64).unwrap_or_default()
}

/// The subset of an [`ExperimentResult`] carried by one CSV row.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentRow {
    pub axis_value: Option<f64>,
    pub k: usize,
    pub n_e: usize,
    pub r: usize,
    pub phi: f64,
    pub v: f64,
    pub mode: String,
    pub trials: usize,
    pub seed: u64,
    pub mse_empirical: f64,
    pub mse_stderr: f64,
    pub mse_analytic: f64,
    pub mse_closed_form: Option<f64>,
    pub bias_empirical: f64,
    pub bias_factor: f64,
}

impl From<&ExperimentResult> for ExperimentRow {
    fn from(r: &ExperimentResult) -> Self {
        Self {
            axis_value: r.axis_value,
            k: r.k,
            n_e: r.n_e,
            r: r.r,
            phi: r.phi,
            v: r.v,
            mode: r.mode.to_string(),
            trials: r.trials,
            seed: r.seed,
            mse_empirical: r.mse_empirical,
            mse_stderr: r.mse_stderr,
            mse_analytic: r.mse_analytic,
            mse_closed_form: r.mse_closed_form,
            bias_empirical: r.bias_empirical,
            bias_factor: r.bias_factor,
        }
    }
}

impl ExperimentRow {
    fn fields(&self) -> Vec<String> {
        vec![
            fmt_opt(self.axis_value),
            self.k.to_string(),
            self.n_e.to_string(),
            self.r.to_string(),
            fmt_f64(self.phi),
            fmt_f64(self.v),
            self.mode.clone(),
            self.trials.to_string(),
            self.seed.to_string(),
            fmt_f64(self.mse_empirical),
            fmt_f64(self.mse_stderr),
            fmt_f64(self.mse_analytic),
            fmt_opt(self.mse_closed_form),
            fmt_f64(self.bias_empirical),
            fmt_f64(self.bias_factor),
        ]
    }

    fn parse(record: &csv::StringRecord) -> Result<Self, String> {
        if record.len() != EXPERIMENT_COLUMNS.len() {
            return Err(format!("expected {} fields, got {}", EXPERIMENT_COLUMNS.len(), record.len()));
        }
        let f = |i: usize| -> Result<f64, String> {
            record[i].parse::<f64>().map_err(|e| format!("{}: {e}", EXPERIMENT_COLUMNS[i]))
        };
        let opt = |i: usize| -> Result<Option<f64>, String> {
            if record[i].is_empty() {
                Ok(None)
            } else {
                f(i).map(Some)
            }
        };
        let u = |i: usize| -> Result<u64, String> {
            record[i].parse::<u64>().map_err(|e| format!("{}: {e}", EXPERIMENT_COLUMNS[i]))
        };
        Ok(Self {
            axis_value: opt(0)?,
            k: u(1)? as usize,
            n_e: u(2)? as usize,
            r: u(3)? as usize,
            phi: f(4)?,
            v: f(5)?,
            mode: record[6].to_string(),
            trials: u(7)? as usize,
            seed: u(8)?,
            mse_empirical: f(9)?,
            mse_stderr: f(10)?,
            mse_analytic: f(11)?,
            mse_closed_form: opt(12)?,
            bias_empirical: f(13)?,
            bias_factor: f(14)?,
        })
    }
}

pub fn write_experiment_csv<W: Write>(out: W, results: &[ExperimentResult]) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(EXPERIMENT_COLUMNS)?;
    for r in results {
        w.write_record(ExperimentRow::from(r).fields())?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_experiment_csv<R: Read>(input: R) -> Result<Vec<ExperimentRow>, String> {
    let mut rd = csv::Reader::from_reader(input);
    let header = rd.headers().map_err(|e| e.to_string())?.clone();
    if header.iter().ne(EXPERIMENT_COLUMNS.iter().copied()) {
        return Err(format!("unexpected header {header:?}"));
    }
    rd.records()
        .map(|rec| ExperimentRow::parse(&rec.map_err(|e| e.to_string())?))
        .collect()
}

pub fn write_probe_csv<W: Write>(out: W, results: &[ProbeResult]) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(PROBE_COLUMNS)?;
    for p in results {
        w.write_record([
            p.n_e.to_string(),
            p.r.to_string(),
            fmt_f64(p.phi),
            p.mode.to_string(),
            p.repetitions.to_string(),
            p.seed.to_string(),
            fmt_f64(p.mean_estimate),
            fmt_f64(p.var_empirical),
            fmt_f64(p.var_predicted),
            fmt_f64(p.var_propagated),
            fmt_f64(p.oracle.mean),
            fmt_f64(p.oracle.variance),
        ])?;
    }
    w.flush()?;
    Ok(())
}

fn short(x: f64) -> String {
    format!("{x:.6e}")
}

pub fn experiment_table(results: &[ExperimentResult]) -> String {
    let mut s = format!(
        "{:>12} {:>6} {:>4} {:>6} {:>10} {:>10} {:>14} {:>14} {:>14} {:>14} {:>10}\n",
        "axis", "K", "N_e", "r", "phi", "v", "mse_emp", "stderr", "mse_analytic", "closed_form", "bias_fac"
    );
    for r in results {
        s.push_str(&format!(
            "{:>12} {:>6} {:>4} {:>6} {:>10.4} {:>10.3e} {:>14} {:>14} {:>14} {:>14} {:>10.6}\n",
            r.axis_value.map(short).unwrap_or_else(|| "-".into()),
            r.k,
            r.n_e,
            r.r,
            r.phi,
            r.v,
            short(r.mse_empirical),
            short(r.mse_stderr),
            short(r.mse_analytic),
            r.mse_closed_form.map(short).unwrap_or_else(|| "-".into()),
            r.bias_factor,
        ));
    }
    s
}

pub fn probe_table(results: &[ProbeResult]) -> String {
    let mut s = format!(
        "{:>4} {:>7} {:>10} {:>9} {:>8} {:>14} {:>14} {:>14} {:>14}\n",
        "N_e", "r", "phi", "mode", "reps", "mean_est", "var_emp", "var_pred", "oracle_mean"
    );
    for p in results {
        s.push_str(&format!(
            "{:>4} {:>7} {:>10.6} {:>9} {:>8} {:>14} {:>14} {:>14} {:>14}\n",
            p.n_e,
            p.r,
            p.phi,
            p.mode,
            p.repetitions,
            short(p.mean_estimate),
            short(p.var_empirical),
            short(p.var_predicted),
            short(p.oracle.mean),
        ));
    }
    s
}

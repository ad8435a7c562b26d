//! Cross-check of the closed-form estimators against numeric ML.
//!
//! For every grid point the audit builds spectrometer and split datasets
//! (exact expected counts or a Monte Carlo sample), fits them by ML, applies
//! the closed forms to the same data, and records `closed / ML`. ML rows
//! record `ML / truth`. A ratio that is constant across θ means the closed
//! form is correct up to a constant factor.

use std::io::Write;
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{balanced_closed_form, ml_fit, split_closed_form, Assumptions, FitOptions, SplitModel};
use crate::error::{Error, Result};
use crate::interferometer::{sample_photons, DetectionDataset, DetectionMode, ModelParams};
use crate::rng::derive_seed;
use crate::spectrum::Spectrum;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", tag = "kind")]
pub enum AuditInput {
    /// Expected counts (N → ∞).
    Exact,
    /// Monte Carlo samples of `n` photons per grid point and mode.
    Sampled { n: u64, seed: u64 },
}

#[derive(Debug, Clone)]
pub struct AuditConfig {
    pub spectrum: Arc<Spectrum>,
    /// Dimensionless delays θ = Δωτ.
    pub thetas: Vec<f64>,
    /// Carrier phases φ − ω₀τ [rad].
    pub phis: Vec<f64>,
    /// ε [rad].
    pub epsilons: Vec<f64>,
    /// Ω [rad/s].
    pub omega_noises: Vec<f64>,
    pub input: AuditInput,
    /// Options for the ML reference fits; assumed nuisance values are set
    /// to the true ones at each grid point.
    pub fit: FitOptions,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditRecord {
    pub theta_true: f64,
    pub phi_true: f64,
    pub epsilon: f64,
    pub omega_noise: f64,
    pub method: String,
    /// [s]
    pub tau_true: f64,
    /// ML reference τ̂ the ratio is taken against (absent for ML rows) [s].
    pub tau_numeric_ml: Option<f64>,
    /// [s]
    pub tau_hat: Option<f64>,
    pub ratio: Option<f64>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditSummary {
    pub method: String,
    pub phi_true: f64,
    pub epsilon: f64,
    pub omega_noise: f64,
    pub points: usize,
    pub mean_ratio: Option<f64>,
    /// Population standard deviation of the ratio over θ, relative to its mean.
    pub ratio_dispersion: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditReport {
    pub input: AuditInput,
    pub records: Vec<AuditRecord>,
    pub summaries: Vec<AuditSummary>,
}

pub const AUDIT_METHODS: [&str; 6] = [
    "ml_spectrometer",
    "balanced_closed_form",
    "ml_split",
    "split_closed_form",
    "ml_split_paper",
    "split_closed_form_paper",
];

/// Photon count used to scale exact datasets; estimates do not depend on it.
const EXACT_TOTAL: f64 = 1e6;

fn describe(e: &Error) -> String {
    format!("{}: {e}", e.name())
}

fn point(cfg: &AuditConfig, idx: u64, theta: f64, psi: f64, eps: f64, omega_noise: f64) -> Vec<AuditRecord> {
    let s = &cfg.spectrum;
    let m = ModelParams::from_carrier_phase(s.clone(), theta / s.spread(), psi)
        .with_epsilon(eps)
        .with_omega_noise(omega_noise);
    let assume = Assumptions {
        epsilon: eps,
        omega_noise,
        split_model: SplitModel::Exact,
    };
    let opts = FitOptions {
        assumptions: assume,
        nominal_phi: m.phi,
        ..cfg.fit
    };
    let paper_opts = FitOptions {
        assumptions: Assumptions {
            split_model: SplitModel::Paper,
            ..assume
        },
        ..opts
    };

    let data = |mode: DetectionMode| -> std::result::Result<DetectionDataset, String> {
        match (cfg.input, mode) {
            (AuditInput::Exact, DetectionMode::Spectrometer) => Ok(DetectionDataset::exact_spectrometer(&m, EXACT_TOTAL)),
            (AuditInput::Exact, DetectionMode::Split) => Ok(DetectionDataset::exact_split(&m, EXACT_TOTAL)),
            (AuditInput::Sampled { n, seed }, mode) => {
                let k = match mode {
                    DetectionMode::Spectrometer => 0,
                    DetectionMode::Split => 1,
                };
                sample_photons(&m, mode, n, derive_seed(seed, &[idx, k])).map_err(|e| describe(&e))
            }
        }
    };

    let record = |method: &str, reference: Option<f64>, r: std::result::Result<f64, String>| {
        let (tau_hat, error) = match r {
            Ok(t) => (Some(t), None),
            Err(e) => (None, Some(e)),
        };
        let denom = reference.unwrap_or(m.tau);
        AuditRecord {
            theta_true: theta,
            phi_true: psi,
            epsilon: eps,
            omega_noise,
            method: method.to_string(),
            tau_true: m.tau,
            tau_numeric_ml: reference,
            tau_hat,
            ratio: tau_hat.map(|t| t / denom).filter(|r| r.is_finite()),
            error,
        }
    };

    let mut out = Vec::with_capacity(AUDIT_METHODS.len());
    let mut pair = |names: [&str; 2],
                    d: std::result::Result<DetectionDataset, String>,
                    fit: &FitOptions,
                    closed: &dyn Fn(&DetectionDataset) -> Result<f64>| {
        let ml = d.as_ref().map_err(Clone::clone).and_then(|d| ml_fit(d, fit).map(|e| e.tau_hat).map_err(|e| describe(&e)));
        out.push(record(names[0], None, ml.clone()));
        let cf = d.as_ref().map_err(Clone::clone).and_then(|d| closed(d).map_err(|e| describe(&e)));
        out.push(match ml {
            Ok(t) => record(names[1], Some(t), cf),
            Err(_) => record(names[1], None, Err("reference fit failed".into())),
        });
    };
    pair(
        [AUDIT_METHODS[0], AUDIT_METHODS[1]],
        data(DetectionMode::Spectrometer),
        &opts,
        &|d| balanced_closed_form(d, eps).map(|e| e.tau_hat),
    );
    let split = |d: &DetectionDataset| split_closed_form(d, eps, omega_noise).map(|e| e.tau_hat);
    pair([AUDIT_METHODS[2], AUDIT_METHODS[3]], data(DetectionMode::Split), &opts, &split);
    // Symbolic substitution: second-order probabilities as data.
    pair(
        [AUDIT_METHODS[4], AUDIT_METHODS[5]],
        DetectionDataset::paper_split(&m, EXACT_TOTAL).map_err(|e| describe(&e)),
        &paper_opts,
        &split,
    );
    out
}

fn summarize(records: &[AuditRecord]) -> Vec<AuditSummary> {
    let mut keys: Vec<(String, f64, f64, f64)> = Vec::new();
    for r in records {
        let k = (r.method.clone(), r.phi_true, r.epsilon, r.omega_noise);
        if !keys.contains(&k) {
            keys.push(k);
        }
    }
    keys.into_iter()
        .map(|(method, phi, eps, om)| {
            let ratios: Vec<f64> = records
                .iter()
                .filter(|r| r.method == method && r.phi_true == phi && r.epsilon == eps && r.omega_noise == om)
                .filter_map(|r| r.ratio)
                .collect();
            let n = ratios.len();
            let (mean, disp) = if n == 0 {
                (None, None)
            } else {
                let mean = ratios.iter().sum::<f64>() / n as f64;
                let var = ratios.iter().map(|r| (r - mean) * (r - mean)).sum::<f64>() / n as f64;
                (Some(mean), Some(var.sqrt() / mean.abs()))
            };
            AuditSummary {
                method,
                phi_true: phi,
                epsilon: eps,
                omega_noise: om,
                points: n,
                mean_ratio: mean,
                ratio_dispersion: disp,
            }
        })
        .collect()
}

/// Runs the audit over the full grid. Estimator failures become per-record
/// error entries.
pub fn audit_formulas(cfg: &AuditConfig) -> AuditReport {
    let mut grid = Vec::new();
    for &eps in &cfg.epsilons {
        for &om in &cfg.omega_noises {
            for &psi in &cfg.phis {
                for &theta in &cfg.thetas {
                    grid.push((theta, psi, eps, om));
                }
            }
        }
    }
    let records: Vec<AuditRecord> = grid
        .par_iter()
        .enumerate()
        .map(|(i, &(t, p, e, o))| point(cfg, i as u64, t, p, e, o))
        .collect::<Vec<_>>()
        .into_iter()
        .flatten()
        .collect();
    AuditReport {
        input: cfg.input,
        summaries: summarize(&records),
        records,
    }
}

impl AuditReport {
    pub fn summary<'a>(&'a self, method: &'a str) -> impl Iterator<Item = &'a AuditSummary> + 'a {
        self.summaries.iter().filter(move |s| s.method == method)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// CSV with columns `theta_true,phi_true,epsilon,omega_noise,method,tau_hat,ratio`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let io = |e: csv::Error| Error::InvalidParameter(format!("csv output: {e}"));
        w.write_record(["theta_true", "phi_true", "epsilon", "omega_noise", "method", "tau_hat", "ratio"])
            .map_err(io)?;
        let opt = |x: Option<f64>| x.map_or(String::new(), |v| v.to_string());
        for r in &self.records {
            w.write_record([
                r.theta_true.to_string(),
                r.phi_true.to_string(),
                r.epsilon.to_string(),
                r.omega_noise.to_string(),
                r.method.clone(),
                opt(r.tau_hat),
                opt(r.ratio),
            ])
            .map_err(io)?;
        }
        w.flush().map_err(|e| Error::InvalidParameter(format!("csv output: {e}")))?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::FRAC_PI_2;

    fn config(thetas: Vec<f64>) -> AuditConfig {
        AuditConfig {
            spectrum: Arc::new(Spectrum::gaussian(1e16, 1e15).unwrap()),
            thetas,
            phis: vec![FRAC_PI_2],
            epsilons: vec![0.0],
            omega_noises: vec![0.0],
            input: AuditInput::Exact,
            fit: FitOptions::default(),
        }
    }

    #[test]
    fn empty_grid() {
        let r = audit_formulas(&config(vec![]));
        assert!(r.records.is_empty() && r.summaries.is_empty());
    }

    #[test]
    fn exact_sweep() {
        let r = audit_formulas(&config(vec![5e-4, 1e-3, 2e-3]));
        assert_eq!(r.records.len(), 18);
        for rec in r.records.iter().filter(|r| r.method == "ml_spectrometer") {
            assert!((rec.ratio.unwrap() - 1.0).abs() < 1e-6);
        }
        let paper = r.summary("split_closed_form_paper").next().unwrap();
        assert!((paper.mean_ratio.unwrap() - 0.25).abs() < 1e-9);
        assert!(paper.ratio_dispersion.unwrap() < 1e-6);
        let mut csv = Vec::new();
        r.write_csv(&mut csv).unwrap();
        let text = String::from_utf8(csv).unwrap();
        assert!(text.starts_with("theta_true,phi_true,epsilon,omega_noise,method,tau_hat,ratio\n"));
        assert_eq!(text.lines().count(), 19);
    }
}

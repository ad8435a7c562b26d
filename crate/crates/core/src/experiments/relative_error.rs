use std::io::Write;
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimation::{ml_fit, Assumptions, FitOptions};
use crate::information::{cramer_rao, fisher};
use crate::interferometer::{sample_photons, DetectionDataset, DetectionMode, ModelParams};
use crate::rng::derive_seed;
use crate::spectrum::Spectrum;

/// Photon count used to scale exact datasets.
const EXACT_TOTAL: f64 = 1e6;

/// Fits with assumed ε = Ω = 0 on data generated with the true ε, Ω.
#[derive(Debug, Clone)]
pub struct RelativeErrorConfig {
    pub spectrum: Arc<Spectrum>,
    /// True ε [rad].
    pub epsilons: Vec<f64>,
    /// True Ω [rad/s].
    pub omega_noises: Vec<f64>,
    /// [s]
    pub taus: Vec<f64>,
    /// Carrier phase φ − ω₀τ [rad].
    pub phi: f64,
    pub mode: DetectionMode,
    /// Photons per trial; `None` evaluates the estimator on exact expected data.
    pub photons: Option<u64>,
    pub trials: usize,
    pub seed: u64,
    pub fit: FitOptions,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RelativeErrorRow {
    /// [s]
    pub tau: f64,
    pub theta: f64,
    pub epsilon: f64,
    /// [rad/s]
    pub omega_noise: f64,
    pub mode: DetectionMode,
    /// Mean estimate [s].
    pub tau_hat: f64,
    /// τ̂/τ.
    pub ratio: f64,
    /// τ/τ̂, the factor that restores the true delay.
    pub correction: f64,
    /// Second-order law 1 + ½(ε/sin φ)² + ½(Ω/Δω)² (the Ω term in split mode only).
    pub predicted: f64,
    /// τ̂/τ − 1.
    pub relative_error: f64,
    /// |τ̂ − τ| [s].
    pub absolute_error: f64,
    /// Joint-scheme floor ε²|τ|/2 [s].
    pub joint_floor: f64,
    /// Statistical error of the mean over all trials [s]; zero on exact data.
    pub cr_bound: f64,
}

fn predicted(m: &ModelParams, mode: DetectionMode) -> f64 {
    let s = m.carrier_phase().sin();
    let w = match mode {
        DetectionMode::Spectrometer => 0.0,
        DetectionMode::Split => m.relative_noise(),
    };
    1.0 + 0.5 * (m.epsilon / s).powi(2) + 0.5 * w * w
}

/// Measures the multiplicative bias from ignoring ε and Ω.
///
/// With sampled data every row with a non-zero predicted excess must have
/// `(predicted − 1)·|τ|` above five times the statistical error of the mean,
/// otherwise `InsufficientPower` is returned before anything runs.
pub fn reproduce_relative_error_law(c: &RelativeErrorConfig) -> Result<Vec<RelativeErrorRow>> {
    if c.epsilons.is_empty() || c.omega_noises.is_empty() || c.taus.is_empty() {
        return Err(Error::InvalidParameter("empty grid".into()));
    }
    if c.photons.is_some() && c.trials < 1 {
        return Err(Error::InvalidParameter("trials must be at least 1".into()));
    }
    let mut points = Vec::new();
    for &eps in &c.epsilons {
        for &om in &c.omega_noises {
            for &tau in &c.taus {
                let m = ModelParams::from_carrier_phase(c.spectrum.clone(), tau, c.phi)
                    .with_epsilon(eps)
                    .with_omega_noise(om);
                m.validate()?;
                let pred = predicted(&m, c.mode);
                let cr = match c.photons {
                    None => 0.0,
                    Some(n) => {
                        let f = fisher(&m, c.mode)?;
                        cramer_rao(&f, n as f64 * c.trials as f64)?.delta_tau
                    }
                };
                if c.photons.is_some() && pred > 1.0 && !((pred - 1.0) * tau.abs() > 5.0 * cr) {
                    return Err(Error::InsufficientPower(format!(
                        "predicted excess {:.3e} s at tau = {tau:e}, eps = {eps}, omega = {om:e} \
                         is below 5x the statistical error {cr:.3e} s",
                        (pred - 1.0) * tau.abs()
                    )));
                }
                points.push((m, pred, cr));
            }
        }
    }
    let fit = FitOptions {
        assumptions: Assumptions {
            epsilon: 0.0,
            omega_noise: 0.0,
            ..c.fit.assumptions
        },
        ..c.fit
    };
    points
        .par_iter()
        .enumerate()
        .map(|(k, (m, pred, cr))| {
            let opts = FitOptions {
                nominal_phi: m.phi,
                ..fit
            };
            let tau_hat = match c.photons {
                None => {
                    let d = match c.mode {
                        DetectionMode::Spectrometer => DetectionDataset::exact_spectrometer(m, EXACT_TOTAL),
                        DetectionMode::Split => DetectionDataset::exact_split(m, EXACT_TOTAL),
                    };
                    ml_fit(&d, &opts)?.tau_hat
                }
                Some(n) => {
                    let mut sum = 0.0;
                    for t in 0..c.trials {
                        let d = sample_photons(m, c.mode, n, derive_seed(c.seed, &[k as u64, t as u64]))?;
                        sum += ml_fit(&d, &opts)?.tau_hat;
                    }
                    sum / c.trials as f64
                }
            };
            let ratio = tau_hat / m.tau;
            Ok(RelativeErrorRow {
                tau: m.tau,
                theta: m.theta(),
                epsilon: m.epsilon,
                omega_noise: m.omega_noise,
                mode: c.mode,
                tau_hat,
                ratio,
                correction: 1.0 / ratio,
                predicted: *pred,
                relative_error: ratio - 1.0,
                absolute_error: (tau_hat - m.tau).abs(),
                joint_floor: 0.5 * m.epsilon * m.epsilon * m.tau.abs(),
                cr_bound: *cr,
            })
        })
        .collect()
}

impl RelativeErrorRow {
    pub fn write_csv<W: Write>(rows: &[RelativeErrorRow], out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        for r in rows {
            w.serialize(r).map_err(|e| Error::InvalidParameter(format!("csv output: {e}")))?;
        }
        w.flush().map_err(|e| Error::io("<output>", e))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::FRAC_PI_2;

    fn config(mode: DetectionMode) -> RelativeErrorConfig {
        RelativeErrorConfig {
            spectrum: Arc::new(Spectrum::gaussian(1e16, 1e15).unwrap()),
            epsilons: vec![0.2],
            omega_noises: vec![0.0],
            taus: vec![1e-18, 2e-18],
            phi: FRAC_PI_2,
            mode,
            photons: None,
            trials: 1,
            seed: 0,
            fit: FitOptions::default(),
        }
    }

    #[test]
    fn split_law_on_exact_input() {
        let rows = reproduce_relative_error_law(&config(DetectionMode::Split)).unwrap();
        for r in &rows {
            assert!((r.correction - 1.02).abs() < 0.005, "{r:?}");
        }
        let (a, b) = (rows[0].relative_error, rows[1].relative_error);
        assert!(((a - b) / a).abs() < 0.05);

        let mut c = config(DetectionMode::Split);
        c.epsilons = vec![0.0];
        c.omega_noises = vec![0.3e15];
        let rows = reproduce_relative_error_law(&c).unwrap();
        assert!((rows[0].correction - 1.045).abs() < 0.005, "{:?}", rows[0]);
    }

    #[test]
    fn power_guard() {
        let mut c = config(DetectionMode::Spectrometer);
        c.epsilons = vec![0.01];
        c.photons = Some(1000);
        assert!(matches!(reproduce_relative_error_law(&c), Err(Error::InsufficientPower(_))));
    }
}

//! Closed-form estimators, implemented verbatim.

use std::f64::consts::{FRAC_PI_2, PI};

use super::{Estimate, Method, PhaseFrame};
use crate::error::{Error, Result};
use crate::interferometer::{wrap_angle, DetectionDataset, Sign};

/// Balanced-regime guard on |P₊ − P₋|.
pub const BALANCE_LIMIT: f64 = 0.3;

fn closed(tau_hat: f64, phi_hat: f64, method: Method, eps: f64, omega_noise: f64) -> Estimate {
    Estimate {
        tau_hat,
        phi_hat: wrap_angle(phi_hat),
        log_likelihood: None,
        method,
        converged: true,
        iterations: 0,
        stderr_tau: None,
        stderr_phi: None,
        assumed_epsilon: eps,
        assumed_omega_noise: omega_noise,
        phase_frame: PhaseFrame::Carrier,
    }
}

/// Port moments computed from the data alone.
struct PortMoments {
    /// P_q.
    frac: [f64; 2],
    /// ⟨ω⟩_q − c for a reference `c` close to the data.
    mean_shifted: [f64; 2],
    reference: f64,
    /// Pooled (Δω)² = Σ_q P_q⟨ω²⟩_q − (Σ_q P_q⟨ω⟩_q)².
    variance: f64,
}

fn port_moments(d: &DetectionDataset) -> Result<PortMoments> {
    let s = d.spectrometer_data()?;
    let n = d.total();
    if !(n > 0.0) {
        return Err(Error::Degenerate("empty dataset".into()));
    }
    // Shift by the pooled mean before forming second moments.
    let reference = s.ports.iter().flat_map(|p| p.iter()).map(|(x, w)| w * x).sum::<f64>() / n;
    let mut frac = [0.0; 2];
    let mut mean_shifted = [0.0; 2];
    let mut second = 0.0;
    for q in Sign::BOTH {
        let p = s.port(q);
        let (mut sw, mut sx) = (0.0, 0.0);
        for (x, w) in p.iter() {
            let y = x - reference;
            sw += w;
            sx += w * y;
            second += w * y * y;
        }
        frac[q.index()] = sw / n;
        mean_shifted[q.index()] = if sw > 0.0 { sx / sw } else { 0.0 };
    }
    let pooled_mean = frac[0] * mean_shifted[0] + frac[1] * mean_shifted[1];
    let variance = second / n - pooled_mean * pooled_mean;
    if !(variance > 0.0) {
        return Err(Error::Degenerate("recorded frequencies have no spread".into()));
    }
    Ok(PortMoments {
        frac,
        mean_shifted,
        reference,
        variance,
    })
}

/// Balanced-regime estimator from port fractions and mean frequencies:
///
/// ```text
/// φ̂ = π/2 − e^{ε²/2} Σ_q q P_q
/// τ̂ = e^{ε²/2}/(4Δω) · [ (1/Δω) Σ_q q P_q ⟨ω⟩_q − Σ_q q P_q ]
/// ```
///
/// with Δω the pooled spread of the data.
pub fn balanced_closed_form(d: &DetectionDataset, assumed_epsilon: f64) -> Result<Estimate> {
    let m = port_moments(d)?;
    let diff = m.frac[0] - m.frac[1];
    if diff.abs() >= BALANCE_LIMIT {
        return Err(Error::OutsideRegime(format!(
            "port imbalance |P+ - P-| = {:.4} is not below {BALANCE_LIMIT}",
            diff.abs()
        )));
    }
    let dw = m.variance.sqrt();
    let boost = (0.5 * assumed_epsilon * assumed_epsilon).exp();
    // Σ q P_q ⟨ω⟩_q, split into the exactly representable shift and the remainder.
    let weighted = m.frac[0] * m.mean_shifted[0] - m.frac[1] * m.mean_shifted[1] + m.reference * diff;
    let phi_hat = FRAC_PI_2 - boost * diff;
    let tau_hat = boost / (4.0 * dw) * (weighted / dw - diff);
    Ok(closed(tau_hat, phi_hat, Method::BalancedClosedForm, assumed_epsilon, 0.0))
}

/// Split-detector estimator:
///
/// ```text
/// φ̂ = arccos(e^{ε²/2} D),  D = P₊ − P₋
/// τ̂ = √(2π(1+Ω²/Δω²)) / (8Δω √(e^{−ε²} − D²)) · Σ_{rq} r q f_{rq} / (1 + qD)
/// ```
///
/// Split data carries no frequencies, so Δω is the spread of the attached spectrum.
pub fn split_closed_form(d: &DetectionDataset, assumed_epsilon: f64, assumed_omega_noise: f64) -> Result<Estimate> {
    let f = d.split_fractions().ok_or(Error::WrongMode { expected: "split" })?;
    if !(d.total() > 0.0) {
        return Err(Error::Degenerate("empty dataset".into()));
    }
    let dw = d.spectrum()?.spread();
    let p = d.port_fractions();
    let diff = p[0] - p[1];
    let radicand = (-assumed_epsilon * assumed_epsilon).exp() - diff * diff;
    if !(radicand > 0.0) {
        return Err(Error::UndefinedEstimator(format!(
            "e^(-eps^2) - (P+ - P-)^2 = {radicand:.3e} is not positive"
        )));
    }
    let phi_hat = ((0.5 * assumed_epsilon * assumed_epsilon).exp() * diff).clamp(-1.0, 1.0).acos();
    let mut sum = 0.0;
    for r in Sign::BOTH {
        for q in Sign::BOTH {
            sum += r.value() * q.value() * f[r.index()][q.index()] / (1.0 + q.value() * diff);
        }
    }
    let w = assumed_omega_noise / dw;
    let tau_hat = (2.0 * PI * (1.0 + w * w)).sqrt() / (8.0 * dw * radicand.sqrt()) * sum;
    Ok(closed(
        tau_hat,
        phi_hat,
        Method::SplitClosedForm,
        assumed_epsilon,
        assumed_omega_noise,
    ))
}

/// Weak-value-amplification baseline from the dark-port mean frequency,
/// `τ̂ = −α(⟨ω⟩_dark − ω₀)/(2Δω²)`, with ω₀ and Δω from the attached spectrum.
///
/// The dark port is the one that received fewer photons; `alpha` is the
/// working offset φ − ω₀τ of the post-selection [rad].
pub fn wva_estimate(d: &DetectionDataset, alpha: f64) -> Result<Estimate> {
    let s = d.spectrometer_data()?;
    let spectrum = d.spectrum()?;
    let dark = if s.ports[0].total() <= s.ports[1].total() {
        &s.ports[0]
    } else {
        &s.ports[1]
    };
    let n = dark.total();
    if !(n > 0.0) {
        return Err(Error::Degenerate("dark port is empty".into()));
    }
    let (w0, dw) = (spectrum.center(), spectrum.spread());
    let shift = dark.iter().map(|(x, w)| w * (x - w0)).sum::<f64>() / n;
    let tau_hat = -alpha * shift / (2.0 * dw * dw);
    if alpha.abs() < 10.0 * dw * tau_hat.abs() {
        return Err(Error::OutsideRegime(format!(
            "|alpha| = {:.3e} is not much larger than |dw tau| = {:.3e}",
            alpha.abs(),
            dw * tau_hat.abs()
        )));
    }
    Ok(closed(tau_hat, alpha, Method::WvaBaseline, 0.0, 0.0))
}

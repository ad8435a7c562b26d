//! Forward model of the interferometer.
//!
//! With a delay τ and alignment φ, a photon of frequency ω leaves port
//! `q = ±1` with density
//!
//! ```text
//! p_q(ω; τ, φ) = ½ p₀(ω) [1 + q e^{-ε²/2} cos(φ − ωτ)]
//! ```
//!
//! where ε is the rms of fast Gaussian alignment fluctuations. Split
//! detectors additionally threshold the (optionally noisy) frequency at ω₀.

mod dataset;
mod io;
mod sample;
mod split;

use std::f64::consts::TAU;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quadrature::Tolerance;
use crate::spectrum::Spectrum;

pub use dataset::{
    DatasetMeta, DetectionDataset, Observations, Outcome, PhotonRecord, PortSpectra, SplitCounts, TruthParams,
    WeightedFrequencies,
};
pub use io::{read_dataset, sidecar_path, write_dataset, Sidecar};
pub use sample::{sample_photons, sample_photons_with, SampleOptions};
pub use split::{split_probabilities_exact, split_probabilities_paper, SplitProbabilities};
pub(crate) use split::{CellDerivs, PaperSplitModel, SplitKernel};

/// A ±1 label: the output port `q` or the split-detector outcome `r`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Sign {
    Plus,
    Minus,
}

/// Output port of the interferometer.
pub type Port = Sign;

impl Sign {
    pub const BOTH: [Sign; 2] = [Sign::Plus, Sign::Minus];

    pub fn value(self) -> f64 {
        match self {
            Sign::Plus => 1.0,
            Sign::Minus => -1.0,
        }
    }

    pub fn as_i8(self) -> i8 {
        match self {
            Sign::Plus => 1,
            Sign::Minus => -1,
        }
    }

    pub fn from_i64(v: i64) -> Option<Sign> {
        match v {
            1 => Some(Sign::Plus),
            -1 => Some(Sign::Minus),
            _ => None,
        }
    }

    /// 0 for `Plus`, 1 for `Minus`.
    pub fn index(self) -> usize {
        match self {
            Sign::Plus => 0,
            Sign::Minus => 1,
        }
    }

    pub fn flipped(self) -> Sign {
        match self {
            Sign::Plus => Sign::Minus,
            Sign::Minus => Sign::Plus,
        }
    }
}

/// Detection configuration.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DetectionMode {
    /// Both ports resolved by spectrometers.
    Spectrometer,
    /// Both ports behind split detectors that only report ω > ω₀ or ω < ω₀.
    Split,
}

impl std::fmt::Display for DetectionMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            DetectionMode::Spectrometer => "spectrometer",
            DetectionMode::Split => "split",
        })
    }
}

impl std::str::FromStr for DetectionMode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "spectrometer" => Ok(DetectionMode::Spectrometer),
            "split" => Ok(DetectionMode::Split),
            other => Err(Error::InvalidParameter(format!("unknown mode {other:?}"))),
        }
    }
}

/// Physical and nuisance parameters that define the outcome distribution.
#[derive(Debug, Clone)]
pub struct ModelParams {
    /// Time delay τ [s].
    pub tau: f64,
    /// Alignment angle φ [rad], referenced to ω = 0.
    pub phi: f64,
    /// RMS alignment fluctuation ε [rad].
    pub epsilon: f64,
    /// Readout-noise scale Ω [rad/s].
    pub omega_noise: f64,
    pub spectrum: Arc<Spectrum>,
}

impl ModelParams {
    pub fn new(spectrum: Arc<Spectrum>, tau: f64, phi: f64) -> Self {
        ModelParams {
            tau,
            phi,
            epsilon: 0.0,
            omega_noise: 0.0,
            spectrum,
        }
    }

    /// Builds parameters from the phase at the carrier, ψ = φ − ω₀τ.
    pub fn from_carrier_phase(spectrum: Arc<Spectrum>, tau: f64, carrier_phase: f64) -> Self {
        let phi = carrier_phase + spectrum.center() * tau;
        Self::new(spectrum, tau, phi)
    }

    pub fn with_epsilon(mut self, epsilon: f64) -> Self {
        self.epsilon = epsilon;
        self
    }

    pub fn with_omega_noise(mut self, omega_noise: f64) -> Self {
        self.omega_noise = omega_noise;
        self
    }

    pub fn with_tau(mut self, tau: f64) -> Self {
        self.tau = tau;
        self
    }

    pub fn with_phi(mut self, phi: f64) -> Self {
        self.phi = phi;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.tau.is_finite() && self.phi.is_finite()) {
            return Err(Error::InvalidParameter("tau and phi must be finite".into()));
        }
        if !(self.epsilon >= 0.0 && self.epsilon.is_finite()) {
            return Err(Error::InvalidParameter(format!("epsilon {} < 0", self.epsilon)));
        }
        if !(self.omega_noise >= 0.0 && self.omega_noise.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "omega_noise {} < 0",
                self.omega_noise
            )));
        }
        Ok(())
    }

    /// Dimensionless delay θ = Δω·τ.
    pub fn theta(&self) -> f64 {
        self.spectrum.spread() * self.tau
    }

    /// Phase at the carrier frequency, ψ = φ − ω₀τ.
    pub fn carrier_phase(&self) -> f64 {
        self.phi - self.spectrum.center() * self.tau
    }

    /// Interference visibility e^{-ε²/2}.
    pub fn visibility(&self) -> f64 {
        (-0.5 * self.epsilon * self.epsilon).exp()
    }

    /// Readout noise relative to the spectral spread, Ω/Δω.
    pub fn relative_noise(&self) -> f64 {
        self.omega_noise / self.spectrum.spread()
    }

    /// Whether the delay lies in the small-delay regime the closed-form
    /// results assume (|Δω·τ| < 0.1 and ω_max·|τ| < 1). Informational only.
    pub fn in_working_range(&self) -> bool {
        self.theta().abs() < 0.1 && self.spectrum.support().1 * self.tau.abs() < 1.0
    }
}

/// Wraps an angle into [0, 2π).
pub fn wrap_angle(x: f64) -> f64 {
    let w = x.rem_euclid(TAU);
    if w >= TAU {
        0.0
    } else {
        w
    }
}

/// Outcome density p_q(ω; τ, φ) [1/(rad/s)] of the spectrometer configuration.
pub fn port_density(m: &ModelParams, q: Port, omega: f64) -> f64 {
    let p0 = m.spectrum.density(omega);
    if p0 == 0.0 {
        return 0.0;
    }
    0.5 * p0 * (1.0 + q.value() * m.visibility() * (m.phi - omega * m.tau).cos())
}

/// Integrated fraction P_q of photons leaving port `q`.
pub fn port_probability(m: &ModelParams, q: Port) -> f64 {
    let theta = m.theta();
    let psi = m.carrier_phase();
    let v = m.visibility();
    let quad = m.spectrum.integrate_u(&[], Tolerance::default(), |u, p| {
        [0.5 * p * (1.0 + q.value() * v * (psi - u * theta).cos())]
    });
    quad.value[0]
}

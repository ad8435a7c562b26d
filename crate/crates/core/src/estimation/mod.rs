//! Estimators of the delay τ and alignment φ.
//!
//! Numeric maximum likelihood is the reference. The closed-form
//! estimators and a weak-value-amplification baseline are provided verbatim
//! for comparison; [`audit_formulas`] measures how they relate to the ML
//! optimum.

mod audit;
mod closed_form;
mod likelihood;
mod ml;

use serde::{Deserialize, Serialize};

pub use audit::{audit_formulas, AuditConfig, AuditInput, AuditRecord, AuditReport, AuditSummary};
pub use closed_form::{balanced_closed_form, split_closed_form, wva_estimate};
pub use likelihood::{log_likelihood, SplitModel};
pub use ml::{ml_fit, FitOptions};

pub(crate) use likelihood::{Frame, Objective, SpectrometerObjective, SplitObjective};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Method {
    #[serde(rename = "ml")]
    NumericML,
    #[serde(rename = "balanced")]
    BalancedClosedForm,
    #[serde(rename = "split")]
    SplitClosedForm,
    #[serde(rename = "wva")]
    WvaBaseline,
}

impl Method {
    /// Short name used on the command line and in CSV output.
    pub fn label(self) -> &'static str {
        match self {
            Method::NumericML => "ml",
            Method::BalancedClosedForm => "balanced",
            Method::SplitClosedForm => "split",
            Method::WvaBaseline => "wva",
        }
    }
}

impl std::str::FromStr for Method {
    type Err = crate::Error;
    fn from_str(s: &str) -> crate::Result<Self> {
        match s {
            "ml" => Ok(Method::NumericML),
            "balanced" => Ok(Method::BalancedClosedForm),
            "split" => Ok(Method::SplitClosedForm),
            "wva" => Ok(Method::WvaBaseline),
            other => Err(crate::Error::InvalidParameter(format!("unknown estimator {other:?}"))),
        }
    }
}

/// Reference point of a reported phase.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PhaseFrame {
    /// φ as it enters cos(φ − ωτ).
    Absolute,
    /// Phase at the carrier, φ − ω₀τ; the closed forms are derived in it.
    Carrier,
}

/// Nuisance values assumed while estimating.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Assumptions {
    /// Alignment fluctuation ε [rad].
    pub epsilon: f64,
    /// Readout noise Ω [rad/s]; split mode only.
    pub omega_noise: f64,
    pub split_model: SplitModel,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    /// τ̂ [s].
    pub tau_hat: f64,
    /// φ̂ [rad] in [0, 2π).
    pub phi_hat: f64,
    pub log_likelihood: Option<f64>,
    pub method: Method,
    pub converged: bool,
    pub iterations: usize,
    /// [s]
    pub stderr_tau: Option<f64>,
    /// [rad]
    pub stderr_phi: Option<f64>,
    pub assumed_epsilon: f64,
    pub assumed_omega_noise: f64,
    pub phase_frame: PhaseFrame,
}

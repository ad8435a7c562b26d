//! Seeded Monte Carlo campaigns and reproductions of the headline comparisons.
//!
//! A campaign sweeps the Cartesian product of its grids. Each combination of
//! (τ, φ, ε, Ω, N, mode) is a *data cell*: its trials draw photons from
//! substreams keyed by `(master seed, data cell, trial)`, and every selected
//! estimator is applied to the same draws. Results are reported per
//! (data cell, estimator).

mod campaign;
mod fig2;
mod relative_error;

pub use campaign::{
    load_campaign, parse_campaign, run_campaign, CampaignConfig, CellResult, ConfigFormat, Grids, RunSettings,
    SpectrumSpec, CAMPAIGN_COLUMNS,
};
pub use fig2::{reproduce_fig2, Fig2Table};
pub use relative_error::{reproduce_relative_error_law, RelativeErrorConfig, RelativeErrorRow};

use crate::estimation::{balanced_closed_form, ml_fit, split_closed_form, wva_estimate, Estimate, FitOptions, Method};
use crate::interferometer::{DetectionDataset, DetectionMode};
use crate::Result;

/// Whether `method` can be applied to data of `mode`.
pub fn applicable(method: Method, mode: DetectionMode) -> bool {
    match method {
        Method::NumericML => true,
        Method::BalancedClosedForm | Method::WvaBaseline => mode == DetectionMode::Spectrometer,
        Method::SplitClosedForm => mode == DetectionMode::Split,
    }
}

/// Runs one estimator with the nuisance values in `fit.assumptions`.
pub fn run_estimator(method: Method, d: &DetectionDataset, fit: &FitOptions, alpha: Option<f64>) -> Result<Estimate> {
    let a = &fit.assumptions;
    match method {
        Method::NumericML => ml_fit(d, fit),
        Method::BalancedClosedForm => balanced_closed_form(d, a.epsilon),
        Method::SplitClosedForm => split_closed_form(d, a.epsilon, a.omega_noise),
        Method::WvaBaseline => match alpha {
            Some(alpha) => wva_estimate(d, alpha),
            None => Err(crate::Error::InvalidParameter("wva needs the offset alpha".into())),
        },
    }
}

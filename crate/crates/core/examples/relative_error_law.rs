//! Fit with ε and Ω assumed zero when they are not: the estimate is off by a
//! fixed fraction of τ, with no absolute floor.

use std::f64::consts::FRAC_PI_2;
use std::sync::Arc;

use joint_weak::estimation::FitOptions;
use joint_weak::experiments::{reproduce_relative_error_law, RelativeErrorConfig, RelativeErrorRow};
use joint_weak::interferometer::DetectionMode;
use joint_weak::spectrum::Spectrum;

fn main() -> joint_weak::Result<()> {
    let rows = reproduce_relative_error_law(&RelativeErrorConfig {
        spectrum: Arc::new(Spectrum::gaussian(1e16, 1e15)?),
        epsilons: vec![0.0, 0.1, 0.2, 0.3],
        omega_noises: vec![0.0, 2e14],
        taus: vec![1e-19, 1e-18, 1e-17],
        phi: FRAC_PI_2,
        mode: DetectionMode::Split,
        photons: None,
        trials: 1,
        seed: 0,
        fit: FitOptions::default(),
    })?;
    for r in &rows {
        eprintln!(
            "eps {:.1} w {:.1} tau {:.0e}: tau/tau_hat = {:.5} (law {:.5})",
            r.epsilon,
            r.omega_noise / 1e15,
            r.tau,
            r.correction,
            r.predicted
        );
    }
    RelativeErrorRow::write_csv(&rows, std::io::stdout().lock())
}

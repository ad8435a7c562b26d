//! Fit (τ, φ) with every estimator that applies to each detection mode.

use std::f64::consts::FRAC_PI_2;
use std::sync::Arc;

use joint_weak::estimation::{balanced_closed_form, ml_fit, split_closed_form, wva_estimate, FitOptions};
use joint_weak::interferometer::{sample_photons, DetectionMode, ModelParams};
use joint_weak::spectrum::Spectrum;

fn main() -> joint_weak::Result<()> {
    let spectrum = Arc::new(Spectrum::gaussian(1e16, 1e15)?);
    let m = ModelParams::from_carrier_phase(spectrum, 2e-17, FRAC_PI_2);
    let opts = FitOptions {
        nominal_phi: m.phi,
        ..Default::default()
    };

    let spec = sample_photons(&m, DetectionMode::Spectrometer, 1_000_000, 1)?;
    let split = sample_photons(&m, DetectionMode::Split, 1_000_000, 2)?;
    // weak-value post-selection works next to the dark port
    let wva = ModelParams::from_carrier_phase(m.spectrum.clone(), m.tau, 0.2);
    let wva_data = sample_photons(&wva, DetectionMode::Spectrometer, 1_000_000, 3)?;

    println!("true tau = {:e} s", m.tau);
    let rows = [
        ("ml / spectrometer", ml_fit(&spec, &opts)),
        ("balanced closed form", balanced_closed_form(&spec, 0.0)),
        ("ml / split", ml_fit(&split, &opts)),
        ("split closed form", split_closed_form(&split, 0.0, 0.0)),
        ("wva, alpha = 0.2", wva_estimate(&wva_data, 0.2)),
    ];
    for (name, est) in rows {
        match est {
            Ok(e) => println!(
                "{name:<22} tau_hat = {:+.4e} s  stderr = {}",
                e.tau_hat,
                e.stderr_tau.map_or("-".into(), |s| format!("{s:.2e} s"))
            ),
            Err(e) => println!("{name:<22} {e}"),
        }
    }
    Ok(())
}

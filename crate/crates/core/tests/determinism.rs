use std::f64::consts::FRAC_PI_2;
use std::sync::Arc;

use joint_weak::estimation::{ml_fit, FitOptions};
use joint_weak::interferometer::{sample_photons, DetectionMode, ModelParams};
use joint_weak::spectrum::Spectrum;

fn model() -> ModelParams {
    ModelParams::new(Arc::new(Spectrum::gaussian(1e16, 1e15).unwrap()), 1e-18, FRAC_PI_2)
        .with_epsilon(0.1)
        .with_omega_noise(1e14)
}

#[test]
fn same_seed_same_photons() {
    for mode in [DetectionMode::Spectrometer, DetectionMode::Split] {
        let a = sample_photons(&model(), mode, 50_000, 42).unwrap();
        let b = sample_photons(&model(), mode, 50_000, 42).unwrap();
        let c = sample_photons(&model(), mode, 50_000, 43).unwrap();
        assert_eq!(a.observations, b.observations);
        assert_ne!(a.observations, c.observations);
    }
}

#[test]
fn fit_is_thread_count_independent() {
    let d = sample_photons(&model(), DetectionMode::Spectrometer, 100_000, 5).unwrap();
    let fit = |k| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(k)
            .build()
            .unwrap()
            .install(|| ml_fit(&d, &FitOptions::default()).unwrap())
    };
    let (a, b) = (fit(1), fit(3));
    assert_eq!(a.tau_hat.to_bits(), b.tau_hat.to_bits());
    assert_eq!(a.phi_hat.to_bits(), b.phi_hat.to_bits());
}

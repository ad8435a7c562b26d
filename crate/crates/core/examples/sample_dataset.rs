//! Draw photons from both detection configurations and write them to disk.
//!
//!     cargo run --release --example sample_dataset -- /tmp/photons

use std::f64::consts::FRAC_PI_2;
use std::path::PathBuf;
use std::sync::Arc;

use joint_weak::interferometer::{sample_photons, write_dataset, DetectionMode, ModelParams};
use joint_weak::spectrum::Spectrum;

fn main() -> joint_weak::Result<()> {
    let dir = PathBuf::from(std::env::args().nth(1).unwrap_or_else(|| ".".into()));
    let spectrum = Arc::new(Spectrum::gaussian(1e16, 1e15)?);
    // 1 as delay at the balanced point, slight misalignment
    let m = ModelParams::from_carrier_phase(spectrum, 1e-18, FRAC_PI_2).with_epsilon(0.05);

    for mode in [DetectionMode::Spectrometer, DetectionMode::Split] {
        let d = sample_photons(&m, mode, 1_000_000, 2024)?;
        let path = dir.join(format!("{mode}.csv"));
        write_dataset(&path, &d)?;
        let [plus, minus] = d.port_fractions();
        println!("{mode:>12}: {} photons, ports {plus:.5}/{minus:.5} -> {}", d.total(), path.display());
        if let Some(f) = d.split_fractions() {
            println!("              split cells {f:?}");
        }
    }
    Ok(())
}

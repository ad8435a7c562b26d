//! Per-photon Fisher information and the Cramér–Rao bound of both
//! configurations as the carrier phase moves away from the balanced point.

use std::sync::Arc;

use joint_weak::estimation::SplitModel;
use joint_weak::information::{cramer_rao, fisher_spectrometer, fisher_split};
use joint_weak::interferometer::ModelParams;
use joint_weak::spectrum::Spectrum;

fn main() -> joint_weak::Result<()> {
    let spectrum = Arc::new(Spectrum::gaussian(1e16, 1e15)?);
    let n = 1e7;
    println!("{:>6} {:>14} {:>14} {:>14}", "psi", "spec dtau [s]", "split dtau [s]", "spec I_tt");
    for k in 1..=8 {
        let psi = k as f64 * std::f64::consts::PI / 16.0;
        let m = ModelParams::from_carrier_phase(spectrum.clone(), 1e-18, psi).with_epsilon(0.02);
        let fs = fisher_spectrometer(&m)?;
        let fp = fisher_split(&m, SplitModel::Exact)?;
        let spec = cramer_rao(&fs, n).map(|c| format!("{:.3e}", c.delta_tau));
        let split = cramer_rao(&fp, n).map(|c| format!("{:.3e}", c.delta_tau));
        println!(
            "{psi:>6.3} {:>14} {:>14} {:>14.4e}",
            spec.unwrap_or_else(|e| e.name().into()),
            split.unwrap_or_else(|e| e.name().into()),
            fs.tau_tau
        );
    }
    Ok(())
}

//! Closed-form precision bounds and the photon budget for a target delay.

use joint_weak::information::{paper_bounds, photon_budget};

fn main() -> joint_weak::Result<()> {
    let dw = 1e15;
    let n = 1e7;
    for eps in [0.0, 0.1, 0.3] {
        let b = paper_bounds(dw, eps, 0.1 * dw, std::f64::consts::FRAC_PI_2, n)?;
        println!("eps = {eps:.1}: spectrometer {:.4e} s, split {:.4e} s", b.eq9, b.eq13);
    }
    for tau in [1e-17, 1e-18, 1e-19] {
        println!("photons to resolve {tau:e} s: {}", photon_budget(dw, tau)?);
    }
    Ok(())
}

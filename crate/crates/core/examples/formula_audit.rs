//! Compare the closed-form estimators with numeric ML, on exact expected
//! counts and on one Monte Carlo draw per point.

use std::f64::consts::FRAC_PI_2;
use std::sync::Arc;

use joint_weak::estimation::{audit_formulas, AuditConfig, AuditInput, FitOptions};
use joint_weak::spectrum::Spectrum;

fn main() -> joint_weak::Result<()> {
    for input in [AuditInput::Exact, AuditInput::Sampled { n: 1_000_000, seed: 1 }] {
        let report = audit_formulas(&AuditConfig {
            spectrum: Arc::new(Spectrum::gaussian(1e16, 1e15)?),
            thetas: vec![1e-3, 3e-3, 1e-2],
            phis: vec![FRAC_PI_2],
            epsilons: vec![0.0, 0.1],
            omega_noises: vec![0.0],
            input,
            fit: FitOptions::default(),
        });
        println!("{input:?}");
        for s in &report.summaries {
            println!(
                "  {:<24} eps {:.1}: mean tau_cf/tau_ml = {:>8}  dispersion = {:>9}",
                s.method,
                s.epsilon,
                s.mean_ratio.map_or("-".into(), |r| format!("{r:.4}")),
                s.ratio_dispersion.map_or("-".into(), |r| format!("{r:.2e}")),
            );
        }
    }
    Ok(())
}

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::information::{crossover_delay, ultimate_curves, PrecisionCurve};

/// The three error floors on a common delay grid, with the crossover.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Fig2Table {
    /// Standard, WVA, joint.
    pub curves: [PrecisionCurve; 3],
    /// 2C/ε [s].
    pub crossover: f64,
    /// Per grid point: the joint floor lies strictly below the WVA level.
    pub joint_below_wva: Vec<bool>,
}

pub fn reproduce_fig2(epsilon: f64, c: f64, omega_ref: f64, taus: &[f64]) -> Result<Fig2Table> {
    let curves = ultimate_curves(epsilon, c, omega_ref, taus)?;
    let joint_below_wva = curves[2]
        .delta_tau_ult
        .iter()
        .zip(&curves[1].delta_tau_ult)
        .map(|(j, w)| j < w)
        .collect();
    Ok(Fig2Table {
        crossover: crossover_delay(epsilon, c),
        curves,
        joint_below_wva,
    })
}

impl Fig2Table {
    /// Wide CSV `tau,standard,wva,joint,joint_below_wva` (all in seconds).
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let err = |e: csv::Error| Error::InvalidParameter(format!("csv output: {e}"));
        w.write_record(["tau", "standard", "wva", "joint", "joint_below_wva"]).map_err(err)?;
        let [s, v, j] = &self.curves;
        for i in 0..s.tau.len() {
            w.write_record([
                format!("{:e}", s.tau[i]),
                format!("{:e}", s.delta_tau_ult[i]),
                format!("{:e}", v.delta_tau_ult[i]),
                format!("{:e}", j.delta_tau_ult[i]),
                self.joint_below_wva[i].to_string(),
            ])
            .map_err(err)?;
        }
        w.flush().map_err(|e| Error::io("<output>", e))
    }
}

use std::f64::consts::{PI, SQRT_2};

use serde::{Deserialize, Serialize};

use super::{ModelParams, Sign};
use crate::error::{Error, Result};
use crate::quadrature::Tolerance;
use crate::spectrum::Spectrum;

/// Four outcome probabilities `p_{rq}` of the split-detector configuration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitProbabilities {
    /// Indexed `[r][q]` with index 0 for +1 and 1 for −1.
    pub cells: [[f64; 2]; 2],
}

impl SplitProbabilities {
    pub fn get(&self, r: Sign, q: Sign) -> f64 {
        self.cells[r.index()][q.index()]
    }

    pub fn total(&self) -> f64 {
        self.cells.iter().flatten().sum()
    }

    /// P_q = Σ_r p_{rq}.
    pub fn port(&self, q: Sign) -> f64 {
        self.cells[0][q.index()] + self.cells[1][q.index()]
    }
}

/// Value and (θ, ψ) derivatives of one cell probability.
#[derive(Debug, Clone, Copy, Default)]
pub(crate) struct CellDerivs {
    pub p: f64,
    pub d_theta: f64,
    pub d_psi: f64,
    pub d_theta_theta: f64,
    pub d_theta_psi: f64,
    pub d_psi_psi: f64,
}

/// Readout response G_r(u): probability of reporting `r` for a photon at
/// `u` given Gaussian readout noise of relative scale `w = Ω/Δω`.
fn response(r: Sign, u: f64, w: f64) -> f64 {
    if w == 0.0 {
        let above = match u.partial_cmp(&0.0) {
            Some(std::cmp::Ordering::Greater) => 1.0,
            Some(std::cmp::Ordering::Less) => 0.0,
            _ => 0.5,
        };
        match r {
            Sign::Plus => above,
            Sign::Minus => 1.0 - above,
        }
    } else {
        let x = r.value() * u / w;
        0.5 * libm::erfc(-x / SQRT_2)
    }
}

/// Spectral integrals of the split-detector model at fixed θ.
///
/// For each `r` holds A = ∫p₀G_r, C = ∫p₀G_r cos(uθ), S = ∫p₀G_r sin(uθ)
/// and the first two θ-derivatives of C and S. Then
/// `p_{rq} = ½A_r + ½qV(cos ψ·C_r + sin ψ·S_r)` with ψ the carrier phase.
#[derive(Debug, Clone, Copy)]
pub(crate) struct SplitKernel {
    k: [[f64; 7]; 2],
}

impl SplitKernel {
    pub fn new(spectrum: &Spectrum, theta: f64, w: f64) -> Self {
        let tol = Tolerance {
            abs: 1e-14,
            rel: 1e-13,
            max_intervals: 4000,
        };
        let q = spectrum.integrate_u(&[0.0], tol, |u, p| {
            let (s, c) = (u * theta).sin_cos();
            let mut out = [0.0; 14];
            for r in Sign::BOTH {
                let g = p * response(r, u, w);
                let o = 7 * r.index();
                out[o] = g;
                out[o + 1] = g * c;
                out[o + 2] = g * s;
                out[o + 3] = -g * u * s;
                out[o + 4] = g * u * c;
                out[o + 5] = -g * u * u * c;
                out[o + 6] = -g * u * u * s;
            }
            out
        });
        let mut k = [[0.0; 7]; 2];
        for (r, row) in k.iter_mut().enumerate() {
            row.copy_from_slice(&q.value[7 * r..7 * r + 7]);
        }
        SplitKernel { k }
    }

    pub fn cells(&self, visibility: f64, psi: f64) -> [[CellDerivs; 2]; 2] {
        let (sp, cp) = psi.sin_cos();
        let mut out = [[CellDerivs::default(); 2]; 2];
        for r in Sign::BOTH {
            let [a, c, s, c1, s1, c2, s2] = self.k[r.index()];
            for q in Sign::BOTH {
                let h = 0.5 * q.value() * visibility;
                out[r.index()][q.index()] = CellDerivs {
                    p: 0.5 * a + h * (cp * c + sp * s),
                    d_theta: h * (cp * c1 + sp * s1),
                    d_psi: h * (-sp * c + cp * s),
                    d_theta_theta: h * (cp * c2 + sp * s2),
                    d_theta_psi: h * (-sp * c1 + cp * s1),
                    d_psi_psi: -h * (cp * c + sp * s),
                };
            }
        }
        out
    }
}

/// Second-order split-detector probabilities, with φ read as the
/// carrier phase ψ.
#[derive(Debug, Clone, Copy)]
pub(crate) struct PaperSplitModel {
    pub visibility: f64,
    /// Ω/Δω.
    pub relative_noise: f64,
}

impl PaperSplitModel {
    fn slope(&self) -> f64 {
        1.0 / (2.0 * (2.0 * PI * (1.0 + self.relative_noise * self.relative_noise)).sqrt())
    }

    pub fn cells(&self, theta: f64, psi: f64) -> [[CellDerivs; 2]; 2] {
        let (sp, cp) = psi.sin_cos();
        let v = self.visibility;
        let k = self.slope();
        let mut out = [[CellDerivs::default(); 2]; 2];
        for r in Sign::BOTH {
            for q in Sign::BOTH {
                let qv = q.value() * v;
                let rqv = r.value() * qv;
                let damp = 1.0 - 0.5 * theta * theta;
                out[r.index()][q.index()] = CellDerivs {
                    p: 0.25 * (1.0 + qv * damp * cp) + rqv * theta * k * sp,
                    d_theta: -0.25 * qv * theta * cp + rqv * k * sp,
                    d_psi: -0.25 * qv * damp * sp + rqv * theta * k * cp,
                    d_theta_theta: -0.25 * qv * cp,
                    d_theta_psi: 0.25 * qv * theta * sp + rqv * k * cp,
                    d_psi_psi: -0.25 * qv * damp * cp - rqv * theta * k * sp,
                };
            }
        }
        out
    }
}

fn collect(cells: [[CellDerivs; 2]; 2]) -> SplitProbabilities {
    let mut out = [[0.0; 2]; 2];
    for r in 0..2 {
        for q in 0..2 {
            out[r][q] = cells[r][q].p;
        }
    }
    SplitProbabilities { cells: out }
}

/// Exact split-detector probabilities: quadrature of the port density against
/// the smeared threshold response at ω₀.
pub fn split_probabilities_exact(m: &ModelParams) -> SplitProbabilities {
    let kernel = SplitKernel::new(&m.spectrum, m.theta(), m.relative_noise());
    collect(kernel.cells(m.visibility(), m.carrier_phase()))
}

/// The second-order closed-form split probabilities.
///
/// The formula is exact to second order when its phase is the phase
/// at the carrier, so it is evaluated at ψ = φ − ω₀τ. Fails when a cell is
/// negative, i.e. outside the validity of the expansion.
pub fn split_probabilities_paper(m: &ModelParams) -> Result<SplitProbabilities> {
    let model = PaperSplitModel {
        visibility: m.visibility(),
        relative_noise: m.relative_noise(),
    };
    let probs = collect(model.cells(m.theta(), m.carrier_phase()));
    if probs.cells.iter().flatten().any(|&p| p < 0.0) {
        return Err(Error::OutsideRegime(format!(
            "second-order split probabilities negative at theta = {}",
            m.theta()
        )));
    }
    Ok(probs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::FRAC_PI_2;
    use std::sync::Arc;

    fn spectrum() -> Arc<Spectrum> {
        Arc::new(Spectrum::gaussian(1e16, 1e15).unwrap())
    }

    #[test]
    fn balanced_zero_delay_is_uniform() {
        let m = ModelParams::new(spectrum(), 0.0, FRAC_PI_2);
        for p in [split_probabilities_exact(&m), split_probabilities_paper(&m).unwrap()] {
            for &c in p.cells.iter().flatten() {
                assert!((c - 0.25).abs() < 1e-12, "{c}");
            }
        }
    }

    #[test]
    fn dark_port_is_empty() {
        let m = ModelParams::new(spectrum(), 0.0, 0.0);
        let p = split_probabilities_exact(&m);
        for r in Sign::BOTH {
            assert!((p.get(r, Sign::Plus) - 0.5).abs() < 1e-12);
            assert!(p.get(r, Sign::Minus).abs() < 1e-12);
        }
    }

    #[test]
    fn paper_formula_arithmetic() {
        let s = spectrum();
        let m = ModelParams::from_carrier_phase(s.clone(), 1e-3 / s.spread(), FRAC_PI_2);
        let p = split_probabilities_paper(&m).unwrap();
        let delta = 1e-3 / (2.0 * (2.0 * PI).sqrt());
        assert!((delta - 1.9947e-4).abs() < 1e-8);
        for r in Sign::BOTH {
            for q in Sign::BOTH {
                let expected = 0.25 + r.value() * q.value() * delta;
                assert!((p.get(r, q) - expected).abs() < 1e-15);
            }
        }
        assert!((p.total() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn paper_sum_is_exact() {
        let s = spectrum();
        for &(theta, phi, eps, w) in &[(0.02, 0.3, 0.1, 0.2), (-0.01, 2.0, 0.0, 0.5), (0.05, 4.0, 0.3, 0.0)] {
            let m = ModelParams::new(s.clone(), theta / s.spread(), phi)
                .with_epsilon(eps)
                .with_omega_noise(w * s.spread());
            let p = split_probabilities_paper(&m).unwrap();
            assert!((p.total() - 1.0).abs() < 4.0 * f64::EPSILON);
        }
    }

    #[test]
    fn paper_rejects_negative_cells() {
        let s = spectrum();
        let m = ModelParams::from_carrier_phase(s.clone(), 3.0 / s.spread(), FRAC_PI_2);
        assert!(matches!(split_probabilities_paper(&m), Err(Error::OutsideRegime(_))));
    }

    #[test]
    fn exact_tracks_paper_at_small_delay() {
        let s = spectrum();
        let m = ModelParams::from_carrier_phase(s.clone(), 1e-3 / s.spread(), FRAC_PI_2);
        let a = split_probabilities_exact(&m);
        let b = split_probabilities_paper(&m).unwrap();
        for (x, y) in a.cells.iter().flatten().zip(b.cells.iter().flatten()) {
            assert!((x - y).abs() < 1e-8);
        }
        assert!((a.total() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn readout_noise_reduces_contrast() {
        let s = spectrum();
        let m = ModelParams::from_carrier_phase(s.clone(), 1e-3 / s.spread(), FRAC_PI_2).with_omega_noise(0.3 * s.spread());
        let a = split_probabilities_exact(&m);
        let expected = 1e-3 / (2.0 * (2.0 * PI * 1.09).sqrt());
        assert!((a.get(Sign::Plus, Sign::Plus) - 0.25 - expected).abs() < 1e-9);
    }

    #[test]
    fn kernel_derivatives_match_finite_differences() {
        let s = spectrum();
        let (theta, psi, v, w) = (0.02, 1.1, 0.97, 0.2);
        let h = 1e-5;
        let cells = SplitKernel::new(&s, theta, w).cells(v, psi);
        let at = |t: f64, p: f64| SplitKernel::new(&s, t, w).cells(v, p);
        let plus_t = at(theta + h, psi);
        let minus_t = at(theta - h, psi);
        let plus_p = at(theta, psi + h);
        let minus_p = at(theta, psi - h);
        for r in 0..2 {
            for q in 0..2 {
                let c = cells[r][q];
                let dt = (plus_t[r][q].p - minus_t[r][q].p) / (2.0 * h);
                let dp = (plus_p[r][q].p - minus_p[r][q].p) / (2.0 * h);
                let dtt = (plus_t[r][q].d_theta - minus_t[r][q].d_theta) / (2.0 * h);
                let dtp = (plus_p[r][q].d_theta - minus_p[r][q].d_theta) / (2.0 * h);
                assert!((c.d_theta - dt).abs() < 1e-8);
                assert!((c.d_psi - dp).abs() < 1e-8);
                assert!((c.d_theta_theta - dtt).abs() < 1e-7);
                assert!((c.d_theta_psi - dtp).abs() < 1e-7);
            }
        }
    }
}

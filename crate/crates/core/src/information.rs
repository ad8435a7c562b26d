//! Fisher information, Cramér–Rao bounds and ultimate-precision curves.

use std::f64::consts::PI;
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimation::{PhaseFrame, SplitModel};
use crate::interferometer::{CellDerivs, DetectionMode, ModelParams, PaperSplitModel, SplitKernel};
use crate::quadrature::Tolerance;

/// Per-photon (or per-dataset) Fisher information in (τ, φ).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FisherMatrix {
    /// [1/s²]
    pub tau_tau: f64,
    /// [1/(s·rad)]
    pub tau_phi: f64,
    /// [1/rad²]
    pub phi_phi: f64,
    pub per_photon: bool,
    /// Which phase the φ entries refer to.
    pub frame: PhaseFrame,
}

impl FisherMatrix {
    pub fn det(&self) -> f64 {
        self.tau_tau * self.phi_phi - self.tau_phi * self.tau_phi
    }

    pub fn trace(&self) -> f64 {
        self.tau_tau + self.phi_phi
    }

    /// Eigenvalues, ascending.
    pub fn eigenvalues(&self) -> [f64; 2] {
        let m = 0.5 * (self.tau_tau + self.phi_phi);
        let r = (0.25 * (self.tau_tau - self.phi_phi).powi(2) + self.tau_phi * self.tau_phi).sqrt();
        // Smaller root from the product to avoid cancellation.
        let big = m + r;
        let small = if big != 0.0 { self.det() / big } else { 0.0 };
        [small, big]
    }

    /// Information of `n` photons.
    pub fn times(&self, n: f64) -> Self {
        FisherMatrix {
            tau_tau: n * self.tau_tau,
            tau_phi: n * self.tau_phi,
            phi_phi: n * self.phi_phi,
            per_photon: false,
            frame: self.frame,
        }
    }

    /// Re-expresses the matrix in (τ, ψ) with ψ = φ − ω₀τ the carrier phase.
    pub fn to_carrier(&self, center: f64) -> Self {
        if self.frame == PhaseFrame::Carrier {
            return *self;
        }
        FisherMatrix {
            tau_tau: self.tau_tau + 2.0 * center * self.tau_phi + center * center * self.phi_phi,
            tau_phi: self.tau_phi + center * self.phi_phi,
            phi_phi: self.phi_phi,
            per_photon: self.per_photon,
            frame: PhaseFrame::Carrier,
        }
    }
}

/// Standard normal quantities of a Cramér–Rao bound.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CramerRao {
    /// [s]
    pub delta_tau: f64,
    /// [rad]
    pub delta_phi: f64,
}

/// Lower bounds `√((𝓘⁻¹)_ττ/N)`, `√((𝓘⁻¹)_φφ/N)` for `n` photons.
pub fn cramer_rao(f: &FisherMatrix, n: f64) -> Result<CramerRao> {
    if !(n >= 1.0) {
        return Err(Error::InvalidParameter(format!("photon count {n} < 1")));
    }
    let det = f.det();
    let scale = (f.tau_tau * f.phi_phi).abs();
    if !(det > 1e-13 * scale) || !(f.tau_tau > 0.0 && f.phi_phi > 0.0) {
        return Err(Error::SingularInformation(format!("det = {det:.3e}")));
    }
    Ok(CramerRao {
        delta_tau: (f.phi_phi / det / n).sqrt(),
        delta_phi: (f.tau_tau / det / n).sqrt(),
    })
}

/// Per-photon information of the spectrometer configuration, by quadrature.
///
/// Per unit frequency the Fisher weight is `p₀·h` with
/// `h = V²sin²a / (sin²a + (1−V²)cos²a)`, `a = φ − ωτ`, and
/// `𝓘 = ∫ p₀ h [ω², −ω; −ω, 1] dω`.
pub fn fisher_spectrometer(m: &ModelParams) -> Result<FisherMatrix> {
    m.validate()?;
    let s = &m.spectrum;
    let (theta, psi) = (m.theta(), m.carrier_phase());
    let v = m.visibility();
    let one_minus_v2 = -(-m.epsilon * m.epsilon).exp_m1();
    let rho = s.rho();
    if one_minus_v2 == 0.0 && theta == 0.0 && psi.sin().abs() < 1e-12 {
        return Err(Error::SingularModel(
            "dark port empty across the whole spectrum (tau = 0, sin phi = 0, epsilon = 0)".into(),
        ));
    }
    // Break at zeros of sin(ψ − uθ), where h dips when V < 1.
    let mut breaks = Vec::new();
    if theta != 0.0 && one_minus_v2 > 0.0 {
        let (lo, hi) = s.support_u();
        let (a, b) = ((psi - hi * theta) / PI, (psi - lo * theta) / PI);
        let (k0, k1) = (a.min(b).ceil() as i64, a.max(b).floor() as i64);
        if k1 - k0 < 2000 {
            for k in k0..=k1 {
                breaks.push((psi - k as f64 * PI) / theta);
            }
        }
    }
    let tol = Tolerance {
        abs: 1e-14,
        rel: 1e-13,
        max_intervals: 20_000,
    };
    let q = s.integrate_u(&breaks, tol, |u, p| {
        let (sn, cs) = (psi - u * theta).sin_cos();
        let h = if one_minus_v2 == 0.0 {
            1.0
        } else {
            let den = sn * sn + one_minus_v2 * cs * cs;
            v * v * sn * sn / den
        };
        let x = rho + u;
        let ph = p * h;
        [ph * x * x, ph * x, ph]
    });
    let dw = s.spread();
    Ok(FisherMatrix {
        tau_tau: dw * dw * q.value[0],
        tau_phi: -dw * q.value[1],
        phi_phi: q.value[2],
        per_photon: true,
        frame: PhaseFrame::Absolute,
    })
}

/// Finite-difference step in θ and ψ.
pub const SPLIT_FD_STEP: f64 = 1e-6;

fn split_cells(m: &ModelParams, model: SplitModel, theta: f64, psi: f64) -> [[CellDerivs; 2]; 2] {
    let (v, w) = (m.visibility(), m.relative_noise());
    match model {
        SplitModel::Exact => SplitKernel::new(&m.spectrum, theta, w).cells(v, psi),
        SplitModel::Paper => PaperSplitModel {
            visibility: v,
            relative_noise: w,
        }
        .cells(theta, psi),
    }
}

fn assemble(m: &ModelParams, p: [[f64; 2]; 2], dtheta: [[f64; 2]; 2], dpsi: [[f64; 2]; 2]) -> Result<FisherMatrix> {
    let (dw, w0) = (m.spectrum.spread(), m.spectrum.center());
    let (mut tt, mut tp, mut pp) = (0.0, 0.0, 0.0);
    for r in 0..2 {
        for q in 0..2 {
            if !(p[r][q] > 0.0) {
                return Err(Error::SingularModel(format!("split cell probability {:.3e} <= 0", p[r][q])));
            }
            let dt = dw * dtheta[r][q] - w0 * dpsi[r][q];
            let dp = dpsi[r][q];
            tt += dt * dt / p[r][q];
            tp += dt * dp / p[r][q];
            pp += dp * dp / p[r][q];
        }
    }
    Ok(FisherMatrix {
        tau_tau: tt,
        tau_phi: tp,
        phi_phi: pp,
        per_photon: true,
        frame: PhaseFrame::Absolute,
    })
}

/// Per-photon information of the split-detector configuration, from
/// Richardson-extrapolated central differences of the cell probabilities.
pub fn fisher_split(m: &ModelParams, model: SplitModel) -> Result<FisherMatrix> {
    m.validate()?;
    let (theta, psi) = (m.theta(), m.carrier_phase());
    let h = SPLIT_FD_STEP;
    let prob = |t: f64, s: f64| split_cells(m, model, t, s).map(|row| row.map(|c| c.p));
    let centre = prob(theta, psi);
    let diff = |f: &dyn Fn(f64) -> [[f64; 2]; 2]| {
        let d = |h: f64| {
            let (a, b) = (f(h), f(-h));
            let mut out = [[0.0; 2]; 2];
            for r in 0..2 {
                for q in 0..2 {
                    out[r][q] = (a[r][q] - b[r][q]) / (2.0 * h);
                }
            }
            out
        };
        let (coarse, fine) = (d(h), d(0.5 * h));
        let mut out = [[0.0; 2]; 2];
        for r in 0..2 {
            for q in 0..2 {
                out[r][q] = (4.0 * fine[r][q] - coarse[r][q]) / 3.0;
            }
        }
        out
    };
    let dtheta = diff(&|e| prob(theta + e, psi));
    let dpsi = diff(&|e| prob(theta, psi + e));
    assemble(m, centre, dtheta, dpsi)
}

/// The same information from analytic derivatives of the cell
/// probabilities; an independent route used to validate [`fisher_split`].
pub fn fisher_split_analytic(m: &ModelParams, model: SplitModel) -> Result<FisherMatrix> {
    m.validate()?;
    let cells = split_cells(m, model, m.theta(), m.carrier_phase());
    assemble(
        m,
        cells.map(|r| r.map(|c| c.p)),
        cells.map(|r| r.map(|c| c.d_theta)),
        cells.map(|r| r.map(|c| c.d_psi)),
    )
}

/// Fisher information for the given detection mode.
pub fn fisher(m: &ModelParams, mode: DetectionMode) -> Result<FisherMatrix> {
    match mode {
        DetectionMode::Spectrometer => fisher_spectrometer(m),
        DetectionMode::Split => fisher_split(m, SplitModel::Exact),
    }
}

/// Closed-form delay bounds for comparison with the quadrature ones.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PaperBounds {
    /// `e^{ε²/2} / (4Δω√N)` [s].
    pub eq9: f64,
    /// `√(2π)/(4Δω√N)·[1 + ½(ε/sin φ)² + ½(Ω/Δω)²]` [s].
    pub eq13: f64,
}

/// Closed-form spectrometer bound.
pub fn spectrometer_paper_bound(dw: f64, epsilon: f64, n: f64) -> Result<f64> {
    check_bound_inputs(dw, n)?;
    Ok((0.5 * epsilon * epsilon).exp() / (4.0 * dw * n.sqrt()))
}

/// Closed-form split-detector bound.
pub fn split_paper_bound(dw: f64, epsilon: f64, omega_noise: f64, phi: f64, n: f64) -> Result<f64> {
    check_bound_inputs(dw, n)?;
    let s = phi.sin();
    if s.abs() < 1e-12 {
        return Err(Error::UndefinedBound("sin(phi) = 0 in the split-detector bound".into()));
    }
    let w = omega_noise / dw;
    let factor = 1.0 + 0.5 * (epsilon / s).powi(2) + 0.5 * w * w;
    Ok((2.0 * PI).sqrt() / (4.0 * dw * n.sqrt()) * factor)
}

fn check_bound_inputs(dw: f64, n: f64) -> Result<()> {
    if !(dw > 0.0 && dw.is_finite()) {
        return Err(Error::InvalidParameter(format!("spectral spread {dw} must be positive")));
    }
    if !(n >= 1.0) {
        return Err(Error::InvalidParameter(format!("photon count {n} < 1")));
    }
    Ok(())
}

pub fn paper_bounds(dw: f64, epsilon: f64, omega_noise: f64, phi: f64, n: f64) -> Result<PaperBounds> {
    Ok(PaperBounds {
        eq9: spectrometer_paper_bound(dw, epsilon, n)?,
        eq13: split_paper_bound(dw, epsilon, omega_noise, phi, n)?,
    })
}

/// Photons needed for a good estimate, `⌈10/(Δωτ)²⌉`.
pub fn photon_budget(dw: f64, tau: f64) -> Result<u64> {
    let x = dw * tau;
    if x == 0.0 || !x.is_finite() {
        return Err(Error::UndefinedBudget(format!("dw * tau = {x}")));
    }
    let v = 10.0 / (x * x);
    if !(v < u64::MAX as f64) {
        return Err(Error::UndefinedBudget(format!("budget {v:.3e} exceeds the counter range")));
    }
    // Values within rounding of an integer (10/(1e-3)² evaluates to 1.0000000000000002e7).
    let r = v.round();
    let n = if (v - r).abs() <= 1e-9 * r { r } else { v.ceil() };
    Ok(n as u64)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Scheme {
    StandardInterferometry,
    WeakValueAmplification,
    JointWeakMeasurement,
}

impl Scheme {
    pub const ALL: [Scheme; 3] = [
        Scheme::StandardInterferometry,
        Scheme::WeakValueAmplification,
        Scheme::JointWeakMeasurement,
    ];

    pub fn label(self) -> &'static str {
        match self {
            Scheme::StandardInterferometry => "standard",
            Scheme::WeakValueAmplification => "wva",
            Scheme::JointWeakMeasurement => "joint",
        }
    }
}

/// Systematic error floor Δτ_ult of one scheme over a delay grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PrecisionCurve {
    pub scheme: Scheme,
    /// [s]
    pub tau: Vec<f64>,
    /// [s]
    pub delta_tau_ult: Vec<f64>,
    pub epsilon: f64,
    /// WVA constant C [s].
    pub c: f64,
    /// Reference frequency of standard interferometry [rad/s].
    pub omega_ref: f64,
}

/// Error floors under alignment fluctuations ε: standard interferometry ε/ω,
/// weak-value amplification C·ε, joint weak measurement ε²τ/2.
pub fn ultimate_curves(epsilon: f64, c: f64, omega_ref: f64, taus: &[f64]) -> Result<[PrecisionCurve; 3]> {
    if !(epsilon > 0.0 && c > 0.0 && omega_ref > 0.0) {
        return Err(Error::InvalidParameter("epsilon, C and omega_ref must be positive".into()));
    }
    if taus.is_empty() {
        return Err(Error::InvalidParameter("empty delay grid".into()));
    }
    if taus.iter().any(|t| !(t.is_finite() && *t >= 0.0)) {
        return Err(Error::InvalidParameter("delays must be finite and non-negative".into()));
    }
    Ok(Scheme::ALL.map(|scheme| PrecisionCurve {
        scheme,
        tau: taus.to_vec(),
        delta_tau_ult: taus
            .iter()
            .map(|&t| match scheme {
                Scheme::StandardInterferometry => epsilon / omega_ref,
                Scheme::WeakValueAmplification => c * epsilon,
                Scheme::JointWeakMeasurement => 0.5 * epsilon * epsilon * t,
            })
            .collect(),
        epsilon,
        c,
        omega_ref,
    }))
}

/// Delay below which the joint scheme beats weak-value amplification, 2C/ε [s].
pub fn crossover_delay(epsilon: f64, c: f64) -> f64 {
    2.0 * c / epsilon
}

/// Writes curves as CSV `scheme,tau,delta_tau_ult`, or with `gnuplot` as
/// whitespace-separated blocks (one per scheme, two blank lines apart so each
/// is addressable with `index`).
pub fn write_curves<W: Write>(curves: &[PrecisionCurve], mut out: W, gnuplot: bool) -> Result<()> {
    let io = |e: std::io::Error| Error::io("<output>", e);
    if gnuplot {
        for (k, c) in curves.iter().enumerate() {
            if k > 0 {
                writeln!(out, "\n").map_err(io)?;
            }
            writeln!(out, "# {} tau[s] delta_tau_ult[s]", c.scheme.label()).map_err(io)?;
            for (t, d) in c.tau.iter().zip(&c.delta_tau_ult) {
                writeln!(out, "{t:e} {d:e}").map_err(io)?;
            }
        }
    } else {
        writeln!(out, "scheme,tau,delta_tau_ult").map_err(io)?;
        for c in curves {
            for (t, d) in c.tau.iter().zip(&c.delta_tau_ult) {
                writeln!(out, "{},{t:e},{d:e}", c.scheme.label()).map_err(io)?;
            }
        }
    }
    out.flush().map_err(io)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectrum::Spectrum;
    use std::f64::consts::FRAC_PI_2;
    use std::sync::Arc;

    fn spectrum() -> Arc<Spectrum> {
        Arc::new(Spectrum::gaussian(1e16, 1e15).unwrap())
    }

    fn close(a: f64, b: f64, rel: f64) -> bool {
        (a - b).abs() <= rel * b.abs().max(a.abs())
    }

    #[test]
    fn balanced_point_matrix() {
        let s = spectrum();
        let m = ModelParams::new(s.clone(), 0.0, FRAC_PI_2);
        let f = fisher_spectrometer(&m).unwrap();
        let (w0, dw) = (s.center(), s.spread());
        assert!(close(f.tau_tau, w0 * w0 + dw * dw, 1e-10));
        assert!(close(f.tau_phi, -w0, 1e-10));
        assert!(close(f.phi_phi, 1.0, 1e-12));
        let cr = cramer_rao(&f, 1e6).unwrap();
        assert!(close(cr.delta_tau, 1.0 / (dw * 1e3), 1e-8));
        let eq9 = spectrometer_paper_bound(dw, 0.0, 1e6).unwrap();
        assert!(close(cr.delta_tau / eq9, 4.0, 1e-8));
    }

    #[test]
    fn information_vanishes_without_visibility() {
        let m = ModelParams::new(spectrum(), 1e-18, 1.0).with_epsilon(12.0);
        let f = fisher_spectrometer(&m).unwrap();
        assert!(f.tau_tau < 1e-20 * 1e32 && f.phi_phi < 1e-20);
    }

    #[test]
    fn dark_extremum() {
        let s = spectrum();
        let m = ModelParams::new(s.clone(), 0.0, 0.0);
        assert!(matches!(fisher_spectrometer(&m), Err(Error::SingularModel(_))));
        // Approached along φ at ε = 0 the information stays 1; along ε at φ = 0 it vanishes.
        let f = fisher_spectrometer(&ModelParams::new(s.clone(), 0.0, 1e-6)).unwrap();
        assert!(close(f.phi_phi, 1.0, 1e-12));
        let f = fisher_spectrometer(&ModelParams::new(s.clone(), 0.0, 0.0).with_epsilon(1e-3)).unwrap();
        assert!(f.phi_phi < 1e-12);
    }

    #[test]
    fn cramer_rao_diagonal_and_scaling() {
        let f = FisherMatrix {
            tau_tau: 4.0,
            tau_phi: 0.0,
            phi_phi: 9.0,
            per_photon: true,
            frame: PhaseFrame::Absolute,
        };
        let a = cramer_rao(&f, 100.0).unwrap();
        assert!(close(a.delta_tau, 1.0 / 20.0, 1e-15));
        assert!(close(a.delta_phi, 1.0 / 30.0, 1e-15));
        let b = cramer_rao(&f, 400.0).unwrap();
        assert!(close(a.delta_tau / b.delta_tau, 2.0, 1e-15));
        let sing = FisherMatrix { tau_phi: 6.0, ..f };
        assert!(matches!(cramer_rao(&sing, 1.0), Err(Error::SingularInformation(_))));
    }

    #[test]
    fn split_paper_model_diagonal_in_carrier_frame() {
        let s = spectrum();
        let m = ModelParams::from_carrier_phase(s.clone(), 0.0, FRAC_PI_2);
        let f = fisher_split(&m, SplitModel::Paper).unwrap().to_carrier(s.center());
        assert!(f.tau_phi.abs() < 1e-9 * (f.tau_tau * f.phi_phi).sqrt());
        let cr = cramer_rao(&f, 1e6).unwrap();
        let closed = split_paper_bound(s.spread(), 0.0, 0.0, FRAC_PI_2, 1e6).unwrap();
        // Quadrature bound is √(π/2)/(Δω√N), twice the closed form.
        assert!(close(cr.delta_tau / closed, 2.0, 1e-6));
    }

    #[test]
    fn split_exact_and_paper_agree() {
        let s = spectrum();
        let m = ModelParams::from_carrier_phase(s.clone(), 1e-3 / s.spread(), FRAC_PI_2);
        let a = fisher_split(&m, SplitModel::Exact).unwrap().to_carrier(s.center());
        let b = fisher_split(&m, SplitModel::Paper).unwrap().to_carrier(s.center());
        assert!(close(a.tau_tau, b.tau_tau, 1e-4));
        assert!(close(a.phi_phi, b.phi_phi, 1e-4));
        for model in [SplitModel::Exact, SplitModel::Paper] {
            let m = ModelParams::new(s.clone(), 3e-18, 1.1).with_epsilon(0.1).with_omega_noise(2e14);
            let fd = fisher_split(&m, model).unwrap();
            let an = fisher_split_analytic(&m, model).unwrap();
            assert!(close(fd.tau_tau, an.tau_tau, 1e-6));
            assert!(close(fd.tau_phi, an.tau_phi, 1e-6));
            assert!(close(fd.phi_phi, an.phi_phi, 1e-6));
        }
    }

    #[test]
    fn closed_form_bounds() {
        let b = paper_bounds(1e15, 0.0, 0.0, FRAC_PI_2, 1e7).unwrap();
        assert!(close(b.eq9, 7.905694150420949e-20, 1e-12));
        assert!(close(b.eq13 / b.eq9, (2.0 * PI).sqrt(), 1e-12));
        let e = spectrometer_paper_bound(1e15, 0.3, 1e7).unwrap();
        assert!(close(e / b.eq9, 0.045_f64.exp(), 1e-14));
        assert!(matches!(paper_bounds(1e15, 0.0, 0.0, 0.0, 1e7), Err(Error::UndefinedBound(_))));
    }

    #[test]
    fn budgets() {
        assert_eq!(photon_budget(1e15, 1e-18).unwrap(), 10_000_000);
        assert_eq!(photon_budget(1e15, 1e-21).unwrap(), 10_000_000_000_000);
        assert_eq!(photon_budget(1.0, 1.0).unwrap(), 10);
        assert_eq!(photon_budget(1.0, 0.3).unwrap(), 112);
        assert!(matches!(photon_budget(1e15, 0.0), Err(Error::UndefinedBudget(_))));
    }

    #[test]
    fn figure_curves() {
        let taus = [1e-19, 1e-18, 2.5e-17];
        let [std, wva, joint] = ultimate_curves(0.02, 0.25e-18, 2e15, &taus).unwrap();
        assert!(close(wva.delta_tau_ult[0], 5e-21, 1e-12));
        assert!(close(joint.delta_tau_ult[1], 2e-22, 1e-12));
        assert!(close(std.delta_tau_ult[0], 1e-17, 1e-12));
        let x = crossover_delay(0.02, 0.25e-18);
        assert!(close(x, 2.5e-17, 1e-12));
        assert!(close(joint.delta_tau_ult[2], wva.delta_tau_ult[2], 1e-12));
        let mut buf = Vec::new();
        write_curves(&[std.clone(), wva.clone(), joint.clone()], &mut buf, false).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("scheme,tau,delta_tau_ult\nstandard,"));
        assert_eq!(text.lines().count(), 10);
        let mut buf = Vec::new();
        write_curves(&[std, wva, joint], &mut buf, true).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap().matches("\n\n\n").count(), 2);
        assert!(ultimate_curves(0.0, 1.0, 1.0, &taus).is_err());
        assert!(ultimate_curves(0.1, 1.0, 1.0, &[]).is_err());
    }
}

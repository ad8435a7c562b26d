use std::f64::consts::{FRAC_PI_2, TAU};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::likelihood::Derivs;
use super::{Assumptions, Estimate, Frame, Method, Objective, PhaseFrame, SpectrometerObjective, SplitObjective};
use crate::error::{Error, Result};
use crate::interferometer::{wrap_angle, DetectionDataset, Observations};
use crate::optimize::NelderMead;

/// Bin width in `u` of the histogram used for the coarse grid scan.
const COARSE_BIN: f64 = 0.1;
/// Bin width in `u` of the histogram used for simplex refinement and in
/// histogram mode; Δω/100.
const FINE_BIN: f64 = 0.01;
/// Above this many records the grid scan runs on the coarse histogram.
const GRID_DIRECT_LIMIT: usize = 4096;
const NEWTON_MAX_ITER: usize = 60;
/// Grid local maxima refined independently.
const MAX_STARTS: usize = 6;
/// Relative log-likelihood difference below which two optima are a tie.
const TIE_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FitOptions {
    pub assumptions: Assumptions,
    /// Grid points in (θ, φ) for the global scan.
    pub grid: [usize; 2],
    /// Half-width of the τ search window [s]; `None` means 10/Δω.
    pub tau_window: Option<f64>,
    /// Simplex iteration cap.
    pub max_iter: usize,
    /// Relative parameter tolerance in the dimensionless frame.
    pub xtol: f64,
    /// Selects the representative of the (τ, φ) ≡ (−τ, −φ) pair: φ̂ is
    /// reported in the same half-plane (sign of sin φ) as this angle [rad].
    pub nominal_phi: f64,
    /// Fit on a Δω/100 histogram instead of individual records.
    pub histogram: bool,
    /// Record count up to which refinement uses records directly.
    pub direct_limit: usize,
}

impl Default for FitOptions {
    fn default() -> Self {
        FitOptions {
            assumptions: Assumptions::default(),
            grid: [64, 64],
            tau_window: None,
            max_iter: 10_000,
            xtol: 1e-10,
            nominal_phi: FRAC_PI_2,
            histogram: false,
            direct_limit: 50_000,
        }
    }
}

impl FitOptions {
    pub fn with_assumptions(mut self, a: Assumptions) -> Self {
        self.assumptions = a;
        self
    }
}

/// Weighted mean and standard deviation of all recorded frequencies.
fn data_frame(d: &DetectionDataset) -> Result<Frame> {
    let s = d.spectrometer_data()?;
    let (mut sw, mut swx) = (0.0, 0.0);
    for p in &s.ports {
        for (x, w) in p.iter() {
            sw += w;
            swx += w * x;
        }
    }
    let mean = swx / sw;
    let mut swd = 0.0;
    for p in &s.ports {
        for (x, w) in p.iter() {
            swd += w * (x - mean) * (x - mean);
        }
    }
    let sd = (swd / sw).sqrt();
    if !(sd > 0.0 && sd.is_finite()) {
        return Err(Error::Degenerate("recorded frequencies have no spread".into()));
    }
    Ok(Frame {
        center: mean,
        scale: sd,
    })
}

/// Joint maximum-likelihood estimate of (τ, φ).
///
/// Grid scan over θ ∈ [−θ_w, θ_w] × φ ∈ [0, 2π), simplex refinement, then
/// Newton iterations on the full objective, which take the estimate to the
/// requested tolerance where function-value comparisons alone cannot.
pub fn ml_fit(d: &DetectionDataset, opts: &FitOptions) -> Result<Estimate> {
    let a = &opts.assumptions;
    if !(a.epsilon >= 0.0 && a.omega_noise >= 0.0) {
        return Err(Error::InvalidParameter("assumed nuisance values must be non-negative".into()));
    }
    if d.total() < 2.0 {
        return Err(Error::Degenerate(format!("{} photons", d.total())));
    }
    let v = (-0.5 * a.epsilon * a.epsilon).exp();
    match &d.observations {
        Observations::Spectrometer(_) => {
            let frame = data_frame(d)?;
            let records = SpectrometerObjective::new(d, frame, v)?;
            let n = records.len();
            let coarse = (n > GRID_DIRECT_LIMIT).then(|| records.binned(COARSE_BIN));
            let fine = (opts.histogram || n > opts.direct_limit).then(|| records.binned(FINE_BIN));
            let coarse_ref = coarse.as_ref().unwrap_or(&records);
            let fine_ref = fine.as_ref().unwrap_or(&records);
            let polish_ref = if opts.histogram { fine_ref } else { &records };
            fit(coarse_ref, fine_ref, polish_ref, frame, opts)
        }
        Observations::Split(c) => {
            let spectrum = d.spectrum()?;
            let frame = Frame::of_spectrum(spectrum);
            let obj = SplitObjective::new(c.counts, spectrum, frame, a);
            fit(&obj, &obj, &obj, frame, opts)
        }
    }
}

fn fit(coarse: &dyn Objective, fine: &dyn Objective, polish: &dyn Objective, frame: Frame, opts: &FitOptions) -> Result<Estimate> {
    let [nt, np] = opts.grid;
    if nt < 2 || np < 1 {
        return Err(Error::InvalidParameter("grid needs at least 2 x 1 points".into()));
    }
    let window = opts.tau_window.map_or(10.0, |t| frame.theta(t).abs());
    if !(window > 0.0 && window.is_finite()) {
        return Err(Error::InvalidParameter("tau window must be positive".into()));
    }
    let dt = 2.0 * window / (nt - 1) as f64;
    let dp = TAU / np as f64;
    let psis: Vec<f64> = (0..np).map(|j| j as f64 * dp).collect();
    let rows: Vec<Vec<f64>> = (0..nt)
        .into_par_iter()
        .map(|i| coarse.row(-window + i as f64 * dt, &psis))
        .collect();
    let starts = local_maxima(&rows, MAX_STARTS);
    if starts.is_empty() {
        return Err(Error::Degenerate("likelihood vanishes on the whole search grid".into()));
    }

    let nm = NelderMead {
        max_iter: opts.max_iter,
        xtol: opts.xtol,
        ftol: 1e-15,
    };
    let mut refined = Vec::with_capacity(starts.len());
    let mut simplex_iters = 0;
    for &(_, i, j) in &starts {
        let x0 = [-window + i as f64 * dt, psis[j]];
        let m = nm.minimize(|x: &[f64; 2]| -fine.value(x[0], x[1]), x0, [0.5 * dt, 0.5 * dp]);
        simplex_iters = simplex_iters.max(m.iterations);
        refined.push((m.x, -m.f, m.converged, m.iterations));
    }
    // Stalled simplices on poor secondary maxima are dropped; one that stalls
    // while ahead of every converged start is a failure.
    let top = refined.iter().map(|r| r.1).fold(f64::NEG_INFINITY, f64::max);
    if let Some(r) = refined.iter().find(|r| !r.2 && r.1 >= top) {
        return Err(Error::NotConverged { iterations: r.3 });
    }
    refined.retain(|r| r.2);
    let mut polished: Vec<([f64; 2], Derivs, usize, bool)> = refined
        .iter()
        .filter(|r| r.1 >= top - 1e-6 * (1.0 + top.abs()))
        .map(|r| newton(polish, r.0, opts.xtol))
        .collect();
    // Distinct (θ, ψ) can reproduce the data equally well (the split model
    // has only two identifiable statistics); ties go to the smallest delay.
    let best = polished.iter().map(|p| p.1.value).fold(f64::NEG_INFINITY, f64::max);
    polished.retain(|p| p.1.value >= best - TIE_TOLERANCE * (1.0 + best.abs()));
    polished.sort_by(|a, b| a.0[0].abs().total_cmp(&b.0[0].abs()));
    let (x, d, newton_iters, newton_ok) = polished.swap_remove(0);

    let (mut theta, mut psi) = (x[0], x[1]);
    let upper = opts.nominal_phi.sin() >= 0.0;
    let phi_abs = frame.phi(theta, psi);
    if (phi_abs.sin() >= 0.0) != upper && phi_abs.sin() != 0.0 {
        theta = -theta;
        psi = -psi;
    }

    let (stderr_tau, stderr_phi) = match covariance(&d.hess) {
        Some(c) => {
            let rho = frame.rho();
            let var_tau = c[0][0] / (frame.scale * frame.scale);
            let var_phi = rho * rho * c[0][0] + 2.0 * rho * c[0][1] + c[1][1];
            (
                (var_tau > 0.0).then(|| var_tau.sqrt()),
                (var_phi > 0.0).then(|| var_phi.sqrt()),
            )
        }
        None => (None, None),
    };
    Ok(Estimate {
        tau_hat: frame.tau(theta),
        phi_hat: wrap_angle(frame.phi(theta, psi)),
        log_likelihood: Some(d.value),
        method: Method::NumericML,
        converged: newton_ok,
        iterations: simplex_iters + newton_iters,
        stderr_tau,
        stderr_phi,
        assumed_epsilon: opts.assumptions.epsilon,
        assumed_omega_noise: opts.assumptions.omega_noise,
        phase_frame: PhaseFrame::Absolute,
    })
}

/// Strict-or-equal local maxima of the grid (ψ periodic), best first.
fn local_maxima(rows: &[Vec<f64>], limit: usize) -> Vec<(f64, usize, usize)> {
    let (nt, np) = (rows.len(), rows[0].len());
    let mut out = Vec::new();
    for i in 0..nt {
        for j in 0..np {
            let v = rows[i][j];
            if v == f64::NEG_INFINITY || v.is_nan() {
                continue;
            }
            let mut is_max = true;
            for di in [-1i64, 0, 1] {
                for dj in [-1i64, 0, 1] {
                    let ii = i as i64 + di;
                    if (di == 0 && dj == 0) || ii < 0 || ii >= nt as i64 {
                        continue;
                    }
                    let jj = (j as i64 + dj).rem_euclid(np as i64) as usize;
                    if rows[ii as usize][jj] > v {
                        is_max = false;
                    }
                }
            }
            if is_max {
                out.push((v, i, j));
            }
        }
    }
    out.sort_by(|a, b| b.0.total_cmp(&a.0));
    // Ties are resolved towards small delays, so the innermost maxima are
    // always refined even when a flat far region outscores them on the grid.
    let centre = (nt - 1) as f64 / 2.0;
    let offset = |i: usize| (i as f64 - centre).abs();
    let inner = out.iter().map(|m| offset(m.1)).fold(f64::INFINITY, f64::min);
    let (mut keep, rest): (Vec<_>, Vec<_>) = out.into_iter().enumerate().partition(|(k, m)| *k < limit || offset(m.1) <= inner + 1.0);
    drop(rest);
    keep.sort_by_key(|(k, _)| *k);
    keep.into_iter().map(|(_, m)| m).collect()
}

/// Inverse of the negated Hessian, if it is positive definite.
fn covariance(h: &[[f64; 2]; 2]) -> Option<[[f64; 2]; 2]> {
    let (a, b, c) = (-h[0][0], -h[0][1], -h[1][1]);
    let det = a * c - b * b;
    if !(a > 0.0 && c > 0.0 && det > 0.0) {
        return None;
    }
    Some([[c / det, -b / det], [-b / det, a / det]])
}

/// Damped Newton ascent. Returns the final point, its derivatives, the
/// iteration count and whether the step tolerance was met.
fn newton(obj: &dyn Objective, x0: [f64; 2], xtol: f64) -> ([f64; 2], Derivs, usize, bool) {
    let mut x = x0;
    let mut d = obj.derivs(x[0], x[1]);
    for it in 0..NEWTON_MAX_ITER {
        let g = d.grad;
        let (mut a, b, mut c) = (-d.hess[0][0], -d.hess[0][1], -d.hess[1][1]);
        // Levenberg shift until the system is positive definite.
        let mut lambda = 0.0;
        let base = 1e-12 * (a.abs() + c.abs()).max(f64::MIN_POSITIVE);
        while !(a > 0.0 && c > 0.0 && a * c - b * b > 0.0) {
            lambda = if lambda == 0.0 { base } else { lambda * 10.0 };
            a = -d.hess[0][0] + lambda;
            c = -d.hess[1][1] + lambda;
            if !lambda.is_finite() {
                return (x, d, it, false);
            }
        }
        let det = a * c - b * b;
        let step = [(c * g[0] - b * g[1]) / det, (a * g[1] - b * g[0]) / det];
        let slack = 1e-14 * d.value.abs();
        let mut t = 1.0;
        let mut accepted = None;
        for _ in 0..40 {
            let xn = [x[0] + t * step[0], x[1] + t * step[1]];
            let dn = obj.derivs(xn[0], xn[1]);
            if dn.value >= d.value - slack {
                accepted = Some((xn, dn));
                break;
            }
            t *= 0.5;
        }
        let Some((xn, dn)) = accepted else {
            return (x, d, it, false);
        };
        let small = (0..2).all(|i| (t * step[i]).abs() <= xtol * x[i].abs() + 1e-14);
        x = xn;
        d = dn;
        if small {
            return (x, d, it + 1, true);
        }
    }
    (x, d, NEWTON_MAX_ITER, false)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::interferometer::{sample_photons, DetectionMode, ModelParams};
    use crate::spectrum::Spectrum;
    use std::sync::Arc;

    fn spectrum() -> Arc<Spectrum> {
        Arc::new(Spectrum::gaussian(1e16, 1e15).unwrap())
    }

    #[test]
    fn recovers_truth_on_exact_spectrometer_data() {
        let s = spectrum();
        for &(theta, phi) in &[(1e-3, 1.2), (0.05, FRAC_PI_2), (1e-4, 2.0), (0.1, 0.5)] {
            let m = ModelParams::new(s.clone(), theta / s.spread(), phi);
            let d = DetectionDataset::exact_spectrometer(&m, 1e6);
            let e = ml_fit(&d, &FitOptions::default()).unwrap();
            assert!(((e.tau_hat - m.tau) / m.tau).abs() < 1e-8, "{theta} {phi} {}", e.tau_hat / m.tau);
            assert!((e.phi_hat - phi).abs() < 1e-8);
            assert!(e.converged);
        }
    }

    #[test]
    fn recovers_truth_on_exact_split_data() {
        let s = spectrum();
        let m = ModelParams::new(s.clone(), 2e-3 / s.spread(), 1.2)
            .with_epsilon(0.1)
            .with_omega_noise(1e14);
        let d = DetectionDataset::exact_split(&m, 1e6);
        let opts = FitOptions::default().with_assumptions(Assumptions {
            epsilon: 0.1,
            omega_noise: 1e14,
            ..Default::default()
        });
        let e = ml_fit(&d, &opts).unwrap();
        assert!(((e.tau_hat - m.tau) / m.tau).abs() < 1e-7, "{}", e.tau_hat / m.tau);
        assert!((e.phi_hat - 1.2).abs() < 1e-7);
    }

    #[test]
    fn parity_representative() {
        let s = spectrum();
        let m = ModelParams::new(s.clone(), -1e-3 / s.spread(), -1.0);
        let d = DetectionDataset::exact_spectrometer(&m, 1e6);
        let e = ml_fit(&d, &FitOptions::default()).unwrap();
        assert!((e.tau_hat / -m.tau - 1.0).abs() < 1e-8);
        assert!((e.phi_hat - 1.0).abs() < 1e-8);
    }

    #[test]
    fn sampled_zero_delay_within_bound() {
        let s = spectrum();
        let m = ModelParams::new(s.clone(), 0.0, FRAC_PI_2);
        let d = sample_photons(&m, DetectionMode::Spectrometer, 1_000_000, 17).unwrap();
        let e = ml_fit(&d, &FitOptions::default()).unwrap();
        let cr = 1.0 / (s.spread() * 1e3);
        assert!(e.tau_hat.abs() < 5.0 * cr);
        let se = e.stderr_tau.unwrap();
        assert!((se / cr - 1.0).abs() < 0.05, "{}", se / cr);
    }

    #[test]
    fn histogram_mode_close_to_records() {
        let s = spectrum();
        let m = ModelParams::new(s.clone(), 5e-3 / s.spread(), 1.0);
        let d = sample_photons(&m, DetectionMode::Spectrometer, 200_000, 3).unwrap();
        let a = ml_fit(&d, &FitOptions::default()).unwrap();
        let b = ml_fit(
            &d,
            &FitOptions {
                histogram: true,
                ..Default::default()
            },
        )
        .unwrap();
        assert!((a.tau_hat - b.tau_hat).abs() < 0.05 * a.stderr_tau.unwrap());
    }

    #[test]
    fn degenerate_inputs() {
        let d = DetectionDataset::spectrometer(vec![1e16], vec![]);
        assert!(matches!(ml_fit(&d, &FitOptions::default()), Err(Error::Degenerate(_))));
        let d = DetectionDataset::spectrometer(vec![1e16; 10], vec![]);
        assert!(matches!(ml_fit(&d, &FitOptions::default()), Err(Error::Degenerate(_))));
    }

    #[test]
    fn iteration_cap() {
        let s = spectrum();
        let m = ModelParams::new(s.clone(), 1e-3 / s.spread(), 1.0);
        let d = DetectionDataset::exact_spectrometer(&m, 1e6);
        let opts = FitOptions {
            max_iter: 3,
            ..Default::default()
        };
        assert!(matches!(ml_fit(&d, &opts), Err(Error::NotConverged { iterations: 3 })));
    }
}

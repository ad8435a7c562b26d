//! Log-likelihood of a dataset and the dimensionless objectives the fitter
//! works with.
//!
//! Spectrometer likelihoods omit the parameter-independent `Σ log p₀(ω)`
//! term: each record contributes `log(½[1 + qV cos(φ − ωτ)])`. Split data
//! contributes `Σ n_{rq} log p_{rq}`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::Assumptions;
use crate::error::Result;
use crate::interferometer::{CellDerivs, DetectionDataset, Observations, PaperSplitModel, Sign, SplitKernel};
use crate::spectrum::Spectrum;

/// Which split-detector probability model a fit or bound uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SplitModel {
    /// Quadrature of the full model.
    #[default]
    Exact,
    /// The second-order closed form.
    Paper,
}

const PAR_CHUNK: usize = 1 << 14;

/// Log-likelihood of `d` at `(tau, phi)` under the assumed nuisance values.
///
/// Returns `-inf` when a record falls where the model density vanishes.
pub fn log_likelihood(d: &DetectionDataset, tau: f64, phi: f64, assume: &Assumptions) -> Result<f64> {
    let v = (-0.5 * assume.epsilon * assume.epsilon).exp();
    match &d.observations {
        Observations::Spectrometer(s) => {
            let mut total = 0.0;
            for q in Sign::BOTH {
                let port = s.port(q);
                let qv = q.value() * v;
                let parts: Vec<f64> = port
                    .omega
                    .par_chunks(PAR_CHUNK)
                    .enumerate()
                    .map(|(k, chunk)| {
                        let w = port.weight.as_deref().map(|w| &w[k * PAR_CHUNK..k * PAR_CHUNK + chunk.len()]);
                        let mut acc = 0.0;
                        for (i, &omega) in chunk.iter().enumerate() {
                            let wt = w.map_or(1.0, |w| w[i]);
                            if wt == 0.0 {
                                continue;
                            }
                            acc += wt * (0.5 * (1.0 + qv * (phi - omega * tau).cos())).ln();
                        }
                        acc
                    })
                    .collect();
                total += parts.iter().sum::<f64>();
            }
            Ok(nan_to_neg_inf(total))
        }
        Observations::Split(c) => {
            let spectrum = d.spectrum()?;
            let obj = SplitObjective::new(c.counts, spectrum, Frame::of_spectrum(spectrum), assume);
            let frame = obj.frame;
            Ok(obj.value(frame.theta(tau), frame.psi(tau, phi)))
        }
    }
}

fn nan_to_neg_inf(x: f64) -> f64 {
    if x.is_nan() {
        f64::NEG_INFINITY
    } else {
        x
    }
}

/// Affine frequency frame `ω = center + scale·u` used for fitting.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct Frame {
    pub center: f64,
    pub scale: f64,
}

impl Frame {
    pub fn of_spectrum(s: &Spectrum) -> Self {
        Frame {
            center: s.center(),
            scale: s.spread(),
        }
    }

    pub fn theta(&self, tau: f64) -> f64 {
        self.scale * tau
    }

    pub fn psi(&self, tau: f64, phi: f64) -> f64 {
        phi - self.center * tau
    }

    pub fn tau(&self, theta: f64) -> f64 {
        theta / self.scale
    }

    pub fn phi(&self, theta: f64, psi: f64) -> f64 {
        psi + self.center * (theta / self.scale)
    }

    pub fn rho(&self) -> f64 {
        self.center / self.scale
    }
}

/// Value, gradient and Hessian of a log-likelihood in `(θ, ψ)`.
#[derive(Debug, Clone, Copy, Default)]
pub(crate) struct Derivs {
    pub value: f64,
    pub grad: [f64; 2],
    pub hess: [[f64; 2]; 2],
}

impl std::ops::AddAssign for Derivs {
    fn add_assign(&mut self, o: Self) {
        self.value += o.value;
        for i in 0..2 {
            self.grad[i] += o.grad[i];
            for j in 0..2 {
                self.hess[i][j] += o.hess[i][j];
            }
        }
    }
}

pub(crate) trait Objective: Sync {
    fn value(&self, theta: f64, psi: f64) -> f64;

    fn derivs(&self, theta: f64, psi: f64) -> Derivs;

    /// Values along a row of fixed θ (overridable where θ is the expensive part).
    fn row(&self, theta: f64, psis: &[f64]) -> Vec<f64> {
        psis.iter().map(|&p| self.value(theta, p)).collect()
    }
}

/// Spectrometer records in the dimensionless frame.
#[derive(Debug, Clone)]
pub(crate) struct SpectrometerObjective {
    /// Per port: positions `u` and weights.
    pub ports: [(Vec<f64>, Vec<f64>); 2],
    pub visibility: f64,
}

impl SpectrometerObjective {
    pub fn new(d: &DetectionDataset, frame: Frame, visibility: f64) -> Result<Self> {
        let s = d.spectrometer_data()?;
        let ports = s.ports.clone().map(|p| {
            let mut u = Vec::with_capacity(p.len());
            let mut w = Vec::with_capacity(p.len());
            for (omega, wt) in p.iter() {
                if wt > 0.0 {
                    u.push((omega - frame.center) / frame.scale);
                    w.push(wt);
                }
            }
            (u, w)
        });
        Ok(SpectrometerObjective { ports, visibility })
    }

    pub fn len(&self) -> usize {
        self.ports[0].0.len() + self.ports[1].0.len()
    }

    /// Merges records into bins of width `h` in `u`, each placed at the
    /// weighted mean position of its members.
    pub fn binned(&self, h: f64) -> Self {
        let ports = self.ports.clone().map(|(u, w)| {
            if u.is_empty() {
                return (u, w);
            }
            let idx: Vec<i64> = u.iter().map(|&x| (x / h).floor() as i64).collect();
            let lo = *idx.iter().min().unwrap();
            let hi = *idx.iter().max().unwrap();
            let n = (hi - lo + 1) as usize;
            let mut sw = vec![0.0; n];
            let mut swu = vec![0.0; n];
            for ((&k, &x), &wt) in idx.iter().zip(&u).zip(&w) {
                let j = (k - lo) as usize;
                sw[j] += wt;
                swu[j] += wt * x;
            }
            let mut bu = Vec::new();
            let mut bw = Vec::new();
            for (a, b) in sw.into_iter().zip(swu) {
                if a > 0.0 {
                    bu.push(b / a);
                    bw.push(a);
                }
            }
            (bu, bw)
        });
        SpectrometerObjective {
            ports,
            visibility: self.visibility,
        }
    }

    fn fold<T, F, G>(&self, init: T, per_port: F, combine: G) -> T
    where
        T: Send + Copy,
        F: Fn(f64, &[f64], &[f64]) -> T + Sync,
        G: Fn(T, T) -> T,
    {
        let mut total = init;
        for q in Sign::BOTH {
            let (u, w) = &self.ports[q.index()];
            let parts: Vec<T> = u
                .par_chunks(PAR_CHUNK)
                .zip(w.par_chunks(PAR_CHUNK))
                .map(|(u, w)| per_port(q.value(), u, w))
                .collect();
            for p in parts {
                total = combine(total, p);
            }
        }
        total
    }
}

impl Objective for SpectrometerObjective {
    fn value(&self, theta: f64, psi: f64) -> f64 {
        let v = self.visibility;
        let total = self.fold(
            0.0,
            |q, u, w| {
                let qv = q * v;
                let mut acc = 0.0;
                for (&x, &wt) in u.iter().zip(w) {
                    acc += wt * (0.5 * (1.0 + qv * (psi - x * theta).cos())).ln();
                }
                acc
            },
            |a, b| a + b,
        );
        nan_to_neg_inf(total)
    }

    fn derivs(&self, theta: f64, psi: f64) -> Derivs {
        let v = self.visibility;
        self.fold(
            Derivs::default(),
            |q, u, w| {
                let qv = q * v;
                let mut d = Derivs::default();
                for (&x, &wt) in u.iter().zip(w) {
                    let (s, c) = (psi - x * theta).sin_cos();
                    let den = 1.0 + qv * c;
                    let r = qv * s / den;
                    let g = qv * c / den + r * r;
                    d.value += wt * (0.5 * den).ln();
                    d.grad[0] += wt * r * x;
                    d.grad[1] -= wt * r;
                    d.hess[0][0] -= wt * x * x * g;
                    d.hess[0][1] += wt * x * g;
                    d.hess[1][1] -= wt * g;
                }
                d.hess[1][0] = d.hess[0][1];
                d
            },
            |mut a, b| {
                a += b;
                a
            },
        )
    }
}

/// Split-detector counts under the exact or second-order model.
pub(crate) struct SplitObjective<'a> {
    pub counts: [[f64; 2]; 2],
    pub spectrum: &'a Spectrum,
    pub frame: Frame,
    pub visibility: f64,
    pub relative_noise: f64,
    pub model: SplitModel,
}

impl<'a> SplitObjective<'a> {
    pub fn new(counts: [[f64; 2]; 2], spectrum: &'a Spectrum, frame: Frame, assume: &Assumptions) -> Self {
        SplitObjective {
            counts,
            spectrum,
            frame,
            visibility: (-0.5 * assume.epsilon * assume.epsilon).exp(),
            relative_noise: assume.omega_noise / spectrum.spread(),
            model: assume.split_model,
        }
    }

    fn cells(&self, theta: f64, psi: f64) -> [[CellDerivs; 2]; 2] {
        match self.model {
            SplitModel::Exact => {
                SplitKernel::new(self.spectrum, theta, self.relative_noise).cells(self.visibility, psi)
            }
            SplitModel::Paper => PaperSplitModel {
                visibility: self.visibility,
                relative_noise: self.relative_noise,
            }
            .cells(theta, psi),
        }
    }

    fn sum_log(&self, cells: &[[CellDerivs; 2]; 2]) -> f64 {
        let mut acc = 0.0;
        for r in 0..2 {
            for q in 0..2 {
                let n = self.counts[r][q];
                if n > 0.0 {
                    let p = cells[r][q].p;
                    if p <= 0.0 {
                        return f64::NEG_INFINITY;
                    }
                    acc += n * p.ln();
                }
            }
        }
        acc
    }
}

impl Objective for SplitObjective<'_> {
    fn value(&self, theta: f64, psi: f64) -> f64 {
        self.sum_log(&self.cells(theta, psi))
    }

    fn derivs(&self, theta: f64, psi: f64) -> Derivs {
        let cells = self.cells(theta, psi);
        let mut d = Derivs {
            value: self.sum_log(&cells),
            ..Default::default()
        };
        for r in 0..2 {
            for q in 0..2 {
                let n = self.counts[r][q];
                let c = cells[r][q];
                if n == 0.0 || c.p <= 0.0 {
                    continue;
                }
                let g = [c.d_theta / c.p, c.d_psi / c.p];
                let h = [[c.d_theta_theta / c.p, c.d_theta_psi / c.p], [c.d_theta_psi / c.p, c.d_psi_psi / c.p]];
                for i in 0..2 {
                    d.grad[i] += n * g[i];
                    for j in 0..2 {
                        d.hess[i][j] += n * (h[i][j] - g[i] * g[j]);
                    }
                }
            }
        }
        d
    }

    fn row(&self, theta: f64, psis: &[f64]) -> Vec<f64> {
        match self.model {
            SplitModel::Exact => {
                let k = SplitKernel::new(self.spectrum, theta, self.relative_noise);
                psis.iter().map(|&p| self.sum_log(&k.cells(self.visibility, p))).collect()
            }
            SplitModel::Paper => psis.iter().map(|&p| self.value(theta, p)).collect(),
        }
    }
}

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::{split_probabilities_exact, split_probabilities_paper, DetectionMode, ModelParams, Port, Sign};
use crate::error::{Error, Result};
use crate::spectrum::Spectrum;

/// What a detector reports for one photon.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Outcome {
    /// Spectrometer reading ω [rad/s].
    Frequency(f64),
    /// Split-detector region: `Plus` for ω > ω₀.
    Band(Sign),
}

/// One detected photon.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhotonRecord {
    pub port: Port,
    pub outcome: Outcome,
}

/// Frequencies recorded at one port, optionally weighted.
///
/// Unweighted entries count one photon each. Weights allow histograms and
/// the exact (expected-count) datasets used as N → ∞ oracles.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct WeightedFrequencies {
    pub omega: Vec<f64>,
    pub weight: Option<Vec<f64>>,
}

impl WeightedFrequencies {
    pub fn unweighted(omega: Vec<f64>) -> Self {
        WeightedFrequencies { omega, weight: None }
    }

    pub fn len(&self) -> usize {
        self.omega.len()
    }

    pub fn is_empty(&self) -> bool {
        self.omega.is_empty()
    }

    /// Photon count (sum of weights).
    pub fn total(&self) -> f64 {
        match &self.weight {
            None => self.omega.len() as f64,
            Some(w) => w.iter().sum(),
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        let w = self.weight.as_deref();
        self.omega
            .iter()
            .enumerate()
            .map(move |(i, &x)| (x, w.map_or(1.0, |w| w[i])))
    }

    fn push(&mut self, omega: f64, weight: f64) {
        if let Some(w) = &mut self.weight {
            w.push(weight);
        } else if weight != 1.0 {
            let mut w = vec![1.0; self.omega.len()];
            w.push(weight);
            self.weight = Some(w);
        }
        self.omega.push(omega);
    }
}

/// Spectrometer readings for both ports, indexed by [`Sign::index`].
#[derive(Debug, Clone, Default, PartialEq)]
pub struct PortSpectra {
    pub ports: [WeightedFrequencies; 2],
}

impl PortSpectra {
    pub fn port(&self, q: Port) -> &WeightedFrequencies {
        &self.ports[q.index()]
    }
}

/// Split-detector counts `n_{rq}` indexed `[r][q]`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct SplitCounts {
    pub counts: [[f64; 2]; 2],
}

impl SplitCounts {
    pub fn get(&self, r: Sign, q: Port) -> f64 {
        self.counts[r.index()][q.index()]
    }

    pub fn total(&self) -> f64 {
        self.counts.iter().flatten().sum()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Observations {
    Spectrometer(PortSpectra),
    Split(SplitCounts),
}

/// Generating parameters of a synthetic dataset.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TruthParams {
    pub tau: f64,
    pub phi: f64,
    pub epsilon: f64,
    pub omega_noise: f64,
}

impl From<&ModelParams> for TruthParams {
    fn from(m: &ModelParams) -> Self {
        TruthParams {
            tau: m.tau,
            phi: m.phi,
            epsilon: m.epsilon,
            omega_noise: m.omega_noise,
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct DatasetMeta {
    pub seed: Option<u64>,
    pub truth: Option<TruthParams>,
    /// Reference spectrum p₀, needed by the likelihood.
    pub spectrum: Option<Arc<Spectrum>>,
}

/// Detected photons from one acquisition.
#[derive(Debug, Clone)]
pub struct DetectionDataset {
    pub observations: Observations,
    pub meta: DatasetMeta,
}

impl DetectionDataset {
    pub fn new(observations: Observations) -> Self {
        DetectionDataset {
            observations,
            meta: DatasetMeta::default(),
        }
    }

    pub fn with_spectrum(mut self, spectrum: Arc<Spectrum>) -> Self {
        self.meta.spectrum = Some(spectrum);
        self
    }

    pub fn spectrometer(plus: Vec<f64>, minus: Vec<f64>) -> Self {
        Self::new(Observations::Spectrometer(PortSpectra {
            ports: [WeightedFrequencies::unweighted(plus), WeightedFrequencies::unweighted(minus)],
        }))
    }

    pub fn split(counts: [[f64; 2]; 2]) -> Self {
        Self::new(Observations::Split(SplitCounts { counts }))
    }

    /// Collects records into a dataset. All records must match `mode`.
    pub fn from_records(mode: DetectionMode, records: &[PhotonRecord]) -> Result<Self> {
        match mode {
            DetectionMode::Spectrometer => {
                let mut spectra = PortSpectra::default();
                for rec in records {
                    match rec.outcome {
                        Outcome::Frequency(w) => spectra.ports[rec.port.index()].push(w, 1.0),
                        Outcome::Band(_) => {
                            return Err(Error::WrongMode {
                                expected: "spectrometer",
                            })
                        }
                    }
                }
                Ok(Self::new(Observations::Spectrometer(spectra)))
            }
            DetectionMode::Split => {
                let mut counts = SplitCounts::default();
                for rec in records {
                    match rec.outcome {
                        Outcome::Band(r) => counts.counts[r.index()][rec.port.index()] += 1.0,
                        Outcome::Frequency(_) => return Err(Error::WrongMode { expected: "split" }),
                    }
                }
                Ok(Self::new(Observations::Split(counts)))
            }
        }
    }

    /// Expected spectrometer data for `total` photons: Gauss–Legendre nodes in
    /// frequency weighted by `total·p_q(ω)·w`. Finite-sample noise is absent,
    /// so estimators applied to it probe the N → ∞ limit.
    pub fn exact_spectrometer(m: &ModelParams, total: f64) -> Self {
        let s = &m.spectrum;
        let (theta, psi, v) = (m.theta(), m.carrier_phase(), m.visibility());
        let mut spectra = PortSpectra::default();
        for q in Sign::BOTH {
            let port = &mut spectra.ports[q.index()];
            let mut omega = Vec::new();
            let mut weight = Vec::new();
            for (u, wp) in s.weighted_nodes_u(&[]) {
                let w = total * wp * 0.5 * (1.0 + q.value() * v * (psi - u * theta).cos());
                if w > 0.0 {
                    omega.push(s.center() + s.spread() * u);
                    weight.push(w);
                }
            }
            *port = WeightedFrequencies {
                omega,
                weight: Some(weight),
            };
        }
        let mut d = Self::new(Observations::Spectrometer(spectra)).with_spectrum(s.clone());
        d.meta.truth = Some(m.into());
        d
    }

    /// Expected split counts `total·p_{rq}` from the exact model.
    pub fn exact_split(m: &ModelParams, total: f64) -> Self {
        let p = split_probabilities_exact(m);
        Self::split_from(m, total, p.cells)
    }

    /// Expected split counts from the second-order closed-form model.
    pub fn paper_split(m: &ModelParams, total: f64) -> Result<Self> {
        let p = split_probabilities_paper(m)?;
        Ok(Self::split_from(m, total, p.cells))
    }

    fn split_from(m: &ModelParams, total: f64, cells: [[f64; 2]; 2]) -> Self {
        let counts = cells.map(|row| row.map(|p| p * total));
        let mut d = Self::split(counts).with_spectrum(m.spectrum.clone());
        d.meta.truth = Some(m.into());
        d
    }

    pub fn mode(&self) -> DetectionMode {
        match self.observations {
            Observations::Spectrometer(_) => DetectionMode::Spectrometer,
            Observations::Split(_) => DetectionMode::Split,
        }
    }

    /// Total photon count N.
    pub fn total(&self) -> f64 {
        match &self.observations {
            Observations::Spectrometer(s) => s.ports[0].total() + s.ports[1].total(),
            Observations::Split(c) => c.total(),
        }
    }

    /// Empirical port fractions f_q, indexed by [`Sign::index`]; zeros when empty.
    pub fn port_fractions(&self) -> [f64; 2] {
        let n = self.total();
        if n <= 0.0 {
            return [0.0, 0.0];
        }
        let per_port = match &self.observations {
            Observations::Spectrometer(s) => [s.ports[0].total(), s.ports[1].total()],
            Observations::Split(c) => [c.counts[0][0] + c.counts[1][0], c.counts[0][1] + c.counts[1][1]],
        };
        per_port.map(|x| x / n)
    }

    /// Empirical split fractions f_{rq}, if this is split data.
    pub fn split_fractions(&self) -> Option<[[f64; 2]; 2]> {
        match &self.observations {
            Observations::Split(c) => {
                let n = c.total();
                Some(c.counts.map(|row| row.map(|x| if n > 0.0 { x / n } else { 0.0 })))
            }
            Observations::Spectrometer(_) => None,
        }
    }

    pub fn spectrometer_data(&self) -> Result<&PortSpectra> {
        match &self.observations {
            Observations::Spectrometer(s) => Ok(s),
            Observations::Split(_) => Err(Error::WrongMode {
                expected: "spectrometer",
            }),
        }
    }

    pub fn split_counts(&self) -> Result<&SplitCounts> {
        match &self.observations {
            Observations::Split(c) => Ok(c),
            Observations::Spectrometer(_) => Err(Error::WrongMode { expected: "split" }),
        }
    }

    pub fn spectrum(&self) -> Result<&Arc<Spectrum>> {
        self.meta.spectrum.as_ref().ok_or(Error::MissingSpectrum)
    }

    /// Relabels every photon with the opposite port.
    pub fn flip_ports(&self) -> Self {
        let observations = match &self.observations {
            Observations::Spectrometer(s) => {
                let [a, b] = s.ports.clone();
                Observations::Spectrometer(PortSpectra { ports: [b, a] })
            }
            Observations::Split(c) => Observations::Split(SplitCounts {
                counts: c.counts.map(|[p, m]| [m, p]),
            }),
        };
        DetectionDataset {
            observations,
            meta: DatasetMeta {
                truth: self.meta.truth.map(|t| TruthParams {
                    phi: t.phi + std::f64::consts::PI,
                    ..t
                }),
                ..self.meta.clone()
            },
        }
    }

    /// Expresses the data in a frequency unit `lambda` times smaller: every
    /// ω becomes λω and the reference spectrum is rescaled to match.
    pub fn scale_frequencies(&self, lambda: f64) -> Result<Self> {
        let observations = match &self.observations {
            Observations::Spectrometer(s) => Observations::Spectrometer(PortSpectra {
                ports: s.ports.clone().map(|p| WeightedFrequencies {
                    omega: p.omega.iter().map(|w| w * lambda).collect(),
                    weight: p.weight,
                }),
            }),
            Observations::Split(c) => Observations::Split(*c),
        };
        let spectrum = match &self.meta.spectrum {
            Some(s) => Some(Arc::new(s.scaled(lambda)?)),
            None => None,
        };
        Ok(DetectionDataset {
            observations,
            meta: DatasetMeta {
                seed: self.meta.seed,
                truth: self.meta.truth.map(|t| TruthParams {
                    tau: t.tau / lambda,
                    omega_noise: t.omega_noise * lambda,
                    ..t
                }),
                spectrum,
            },
        })
    }
}

use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use super::{DetectionDataset, DetectionMode, ModelParams, Observations, PortSpectra, SplitCounts, WeightedFrequencies};
use crate::error::Result;
use crate::rng::substream;

/// Photons generated per independent substream.
pub const SAMPLE_CHUNK: u64 = 1 << 16;

#[derive(Debug, Clone, Copy, Default)]
pub struct SampleOptions {
    /// Smear spectrometer readings with the readout noise Ω as well.
    /// Off by default: the spectrometer model has no readout noise.
    pub smear_spectrometer: bool,
}

enum Chunk {
    Spectrometer([Vec<f64>; 2]),
    Split([[u64; 2]; 2]),
}

/// Monte Carlo photon generator with default options.
pub fn sample_photons(m: &ModelParams, mode: DetectionMode, n: u64, seed: u64) -> Result<DetectionDataset> {
    sample_photons_with(m, mode, n, seed, SampleOptions::default())
}

/// Monte Carlo photon generator.
///
/// Each photon sees an independent alignment φ′ ~ N(φ, ε²), a frequency drawn
/// from p₀, and leaves port + with probability ½[1 + cos(φ′ − ωτ)]. Work is
/// split into fixed chunks with their own substreams, so the output depends
/// only on `(seed, n, mode, params)` and not on the thread count.
pub fn sample_photons_with(
    m: &ModelParams,
    mode: DetectionMode,
    n: u64,
    seed: u64,
    opts: SampleOptions,
) -> Result<DetectionDataset> {
    m.validate()?;
    let s = &m.spectrum;
    let (psi, theta, eps, w) = (m.carrier_phase(), m.theta(), m.epsilon, m.relative_noise());
    let (c, sd) = (s.center(), s.spread());
    let chunks = n.div_ceil(SAMPLE_CHUNK);

    let run = |k: u64| -> Chunk {
        let mut rng = substream(seed, &[k]);
        let len = SAMPLE_CHUNK.min(n - k * SAMPLE_CHUNK);
        let draw = |rng: &mut crate::rng::StreamRng| {
            let phase = if eps > 0.0 {
                psi + eps * rng.sample::<f64, _>(StandardNormal)
            } else {
                psi
            };
            let u = s.sample_u(rng);
            let p_plus = 0.5 * (1.0 + (phase - u * theta).cos());
            let plus = rng.random::<f64>() < p_plus;
            (u, if plus { 0 } else { 1 })
        };
        match mode {
            DetectionMode::Spectrometer => {
                let mut out = [Vec::new(), Vec::new()];
                for _ in 0..len {
                    let (mut u, q) = draw(&mut rng);
                    if opts.smear_spectrometer && w > 0.0 {
                        u += w * rng.sample::<f64, _>(StandardNormal);
                    }
                    out[q].push(c + sd * u);
                }
                Chunk::Spectrometer(out)
            }
            DetectionMode::Split => {
                let mut out = [[0u64; 2]; 2];
                for _ in 0..len {
                    let (mut u, q) = draw(&mut rng);
                    if w > 0.0 {
                        u += w * rng.sample::<f64, _>(StandardNormal);
                    }
                    out[if u >= 0.0 { 0 } else { 1 }][q] += 1;
                }
                Chunk::Split(out)
            }
        }
    };

    let parts: Vec<Chunk> = (0..chunks).into_par_iter().map(run).collect();

    let observations = match mode {
        DetectionMode::Spectrometer => {
            let mut ports = [Vec::new(), Vec::new()];
            for part in parts {
                if let Chunk::Spectrometer([a, b]) = part {
                    ports[0].extend(a);
                    ports[1].extend(b);
                }
            }
            Observations::Spectrometer(PortSpectra {
                ports: ports.map(WeightedFrequencies::unweighted),
            })
        }
        DetectionMode::Split => {
            let mut counts = [[0u64; 2]; 2];
            for part in parts {
                if let Chunk::Split(c) = part {
                    for r in 0..2 {
                        for q in 0..2 {
                            counts[r][q] += c[r][q];
                        }
                    }
                }
            }
            Observations::Split(SplitCounts {
                counts: counts.map(|row| row.map(|x| x as f64)),
            })
        }
    };
    let mut d = DetectionDataset::new(observations).with_spectrum(m.spectrum.clone());
    d.meta.seed = Some(seed);
    d.meta.truth = Some(m.into());
    Ok(d)
}

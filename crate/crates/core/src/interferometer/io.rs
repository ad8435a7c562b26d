//! CSV datasets with a JSON metadata sidecar.
//!
//! Spectrometer data: header `q,omega` (an optional third column `weight`
//! carries non-unit photon weights). Split data: header `r,q,count`.

use std::fs::File;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::{DetectionDataset, DetectionMode, Observations, PortSpectra, Sign, SplitCounts, TruthParams, WeightedFrequencies};
use crate::error::{Error, Result};
use crate::spectrum::{Spectrum, SpectrumRecord};

/// Contents of the `<stem>.json` file written next to each dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sidecar {
    pub mode: DetectionMode,
    pub seed: Option<u64>,
    /// Total photon count.
    pub n: f64,
    pub tau: Option<f64>,
    pub phi: Option<f64>,
    pub epsilon: Option<f64>,
    pub omega_noise: Option<f64>,
    pub spectrum: Option<SpectrumRecord>,
}

impl Sidecar {
    pub fn of(d: &DetectionDataset) -> Self {
        let t = d.meta.truth;
        Sidecar {
            mode: d.mode(),
            seed: d.meta.seed,
            n: d.total(),
            tau: t.map(|t| t.tau),
            phi: t.map(|t| t.phi),
            epsilon: t.map(|t| t.epsilon),
            omega_noise: t.map(|t| t.omega_noise),
            spectrum: d.meta.spectrum.as_ref().map(|s| s.to_record()),
        }
    }
}

/// `data/run.csv` → `data/run.json`.
pub fn sidecar_path(csv_path: &Path) -> PathBuf {
    csv_path.with_extension("json")
}

fn csv_err(path: &Path, e: csv::Error) -> Error {
    let line = e.position().map_or(0, |p| p.line());
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::io(path, io),
        kind => Error::Parse {
            path: path.to_path_buf(),
            line,
            message: format!("{kind:?}"),
        },
    }
}

/// Writes the CSV and its sidecar.
pub fn write_dataset(path: &Path, d: &DetectionDataset) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = csv::Writer::from_writer(std::io::BufWriter::new(file));
    let wr = |w: &mut csv::Writer<_>, rec: &[String]| w.write_record(rec).map_err(|e| csv_err(path, e));
    match &d.observations {
        Observations::Spectrometer(s) => {
            let weighted = s.ports.iter().any(|p| p.weight.is_some());
            if weighted {
                wr(&mut w, &["q".into(), "omega".into(), "weight".into()])?;
            } else {
                wr(&mut w, &["q".into(), "omega".into()])?;
            }
            for q in Sign::BOTH {
                for (omega, weight) in s.port(q).iter() {
                    let mut rec = vec![q.as_i8().to_string(), omega.to_string()];
                    if weighted {
                        rec.push(weight.to_string());
                    }
                    wr(&mut w, &rec)?;
                }
            }
        }
        Observations::Split(c) => {
            wr(&mut w, &["r".into(), "q".into(), "count".into()])?;
            for r in Sign::BOTH {
                for q in Sign::BOTH {
                    wr(&mut w, &[r.as_i8().to_string(), q.as_i8().to_string(), c.get(r, q).to_string()])?;
                }
            }
        }
    }
    w.flush().map_err(|e| Error::io(path, e))?;
    let side = sidecar_path(path);
    let json = serde_json::to_string_pretty(&Sidecar::of(d))?;
    std::fs::write(&side, json).map_err(|e| Error::io(&side, e))?;
    Ok(())
}

fn parse_sign(path: &Path, line: u64, field: &str, name: &str) -> Result<Sign> {
    field
        .trim()
        .parse::<i64>()
        .ok()
        .and_then(Sign::from_i64)
        .ok_or_else(|| Error::Parse {
            path: path.to_path_buf(),
            line,
            message: format!("{name} must be +1 or -1, found {field:?}"),
        })
}

fn parse_f64(path: &Path, line: u64, field: &str, name: &str) -> Result<f64> {
    match field.trim().parse::<f64>() {
        Ok(v) if v.is_finite() => Ok(v),
        _ => Err(Error::Parse {
            path: path.to_path_buf(),
            line,
            message: format!("bad {name} {field:?}"),
        }),
    }
}

/// Reads a dataset and, when present, its sidecar metadata.
pub fn read_dataset(path: &Path) -> Result<DetectionDataset> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(std::io::BufReader::new(file));
    let headers: Vec<String> = rdr
        .headers()
        .map_err(|e| csv_err(path, e))?
        .iter()
        .map(str::to_owned)
        .collect();
    let header_err = |message: String| Error::Parse {
        path: path.to_path_buf(),
        line: 1,
        message,
    };
    let observations = match headers.iter().map(String::as_str).collect::<Vec<_>>().as_slice() {
        ["q", "omega"] | ["q", "omega", "weight"] => {
            let weighted = headers.len() == 3;
            let mut spectra = PortSpectra::default();
            if weighted {
                spectra.ports = [WeightedFrequencies::default(), WeightedFrequencies::default()].map(|mut p| {
                    p.weight = Some(Vec::new());
                    p
                });
            }
            for rec in rdr.records() {
                let rec = rec.map_err(|e| csv_err(path, e))?;
                let line = rec.position().map_or(0, |p| p.line());
                let q = parse_sign(path, line, &rec[0], "q")?;
                let omega = parse_f64(path, line, &rec[1], "omega")?;
                let port = &mut spectra.ports[q.index()];
                port.omega.push(omega);
                if let Some(ws) = &mut port.weight {
                    let wt = parse_f64(path, line, &rec[2], "weight")?;
                    if wt < 0.0 {
                        return Err(Error::Parse {
                            path: path.to_path_buf(),
                            line,
                            message: "negative weight".into(),
                        });
                    }
                    ws.push(wt);
                }
            }
            Observations::Spectrometer(spectra)
        }
        ["r", "q", "count"] => {
            let mut counts = SplitCounts::default();
            for rec in rdr.records() {
                let rec = rec.map_err(|e| csv_err(path, e))?;
                let line = rec.position().map_or(0, |p| p.line());
                let r = parse_sign(path, line, &rec[0], "r")?;
                let q = parse_sign(path, line, &rec[1], "q")?;
                let n = parse_f64(path, line, &rec[2], "count")?;
                if n < 0.0 {
                    return Err(Error::Parse {
                        path: path.to_path_buf(),
                        line,
                        message: "negative count".into(),
                    });
                }
                counts.counts[r.index()][q.index()] += n;
            }
            Observations::Split(counts)
        }
        other => return Err(header_err(format!("unrecognized header {other:?}; expected q,omega or r,q,count"))),
    };
    let mut d = DetectionDataset::new(observations);
    let side = sidecar_path(path);
    if side.exists() {
        let text = std::fs::read_to_string(&side).map_err(|e| Error::io(&side, e))?;
        let meta: Sidecar = serde_json::from_str(&text).map_err(|e| Error::Parse {
            path: side.clone(),
            line: e.line() as u64,
            message: e.to_string(),
        })?;
        if meta.mode != d.mode() {
            return Err(Error::ConfigInvalid(format!(
                "{}: sidecar mode {} does not match data ({})",
                side.display(),
                meta.mode,
                d.mode()
            )));
        }
        d.meta.seed = meta.seed;
        if let (Some(tau), Some(phi)) = (meta.tau, meta.phi) {
            d.meta.truth = Some(TruthParams {
                tau,
                phi,
                epsilon: meta.epsilon.unwrap_or(0.0),
                omega_noise: meta.omega_noise.unwrap_or(0.0),
            });
        }
        if let Some(rec) = &meta.spectrum {
            d.meta.spectrum = Some(Arc::new(Spectrum::from_record(rec)?));
        }
    }
    Ok(d)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::interferometer::{sample_photons, ModelParams};

    #[test]
    fn spectrometer_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("d.csv");
        let s = Arc::new(Spectrum::gaussian(1e16, 1e15).unwrap());
        let m = ModelParams::new(s, 1e-18, 1.2).with_epsilon(0.05);
        let d = sample_photons(&m, DetectionMode::Spectrometer, 1000, 7).unwrap();
        write_dataset(&path, &d).unwrap();
        let back = read_dataset(&path).unwrap();
        assert_eq!(back.observations, d.observations);
        assert_eq!(back.meta.seed, Some(7));
        assert_eq!(back.meta.truth, d.meta.truth);
        assert!(back.meta.spectrum.is_some());
    }

    #[test]
    fn weighted_and_split_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let s = Arc::new(Spectrum::gaussian(1e16, 1e15).unwrap());
        let m = ModelParams::new(s, 1e-18, 1.2);
        for d in [
            DetectionDataset::exact_spectrometer(&m, 100.0),
            DetectionDataset::exact_split(&m, 100.0),
        ] {
            let path = dir.path().join(format!("{}.csv", d.mode()));
            write_dataset(&path, &d).unwrap();
            assert_eq!(read_dataset(&path).unwrap().observations, d.observations);
        }
    }

    #[test]
    fn bad_rows_report_line() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.csv");
        std::fs::write(&path, "q,omega\n1,1e16\n2,1e16\n").unwrap();
        match read_dataset(&path) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("{other:?}"),
        }
        std::fs::write(&path, "a,b\n").unwrap();
        assert!(matches!(read_dataset(&path), Err(Error::Parse { line: 1, .. })));
        assert!(matches!(read_dataset(&dir.path().join("none.csv")), Err(Error::Io { .. })));
    }
}

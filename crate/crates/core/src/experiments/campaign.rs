use std::collections::BTreeMap;
use std::f64::consts::FRAC_PI_2;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{applicable, run_estimator};
use crate::error::{Error, Result};
use crate::estimation::{Assumptions, FitOptions, Method};
use crate::information::{cramer_rao, fisher};
use crate::interferometer::{sample_photons, DetectionMode, ModelParams};
use crate::rng::derive_seed;
use crate::spectrum::Spectrum;

/// Photon count above which trials run one after another (each trial is
/// parallel internally), bounding memory.
const PARALLEL_TRIAL_LIMIT: u64 = 2_000_000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum SpectrumSpec {
    /// Gaussian truncated to `support` (default ω₀ ± 6Δω, clipped at 0).
    Gaussian {
        /// [rad/s]
        center: f64,
        /// [rad/s]
        spread: f64,
        /// [rad/s]
        #[serde(default, skip_serializing_if = "Option::is_none")]
        support: Option<[f64; 2]>,
    },
    /// Two-column text table; relative paths are resolved against the config file.
    Table { path: PathBuf },
}

impl SpectrumSpec {
    pub fn build(&self, base: &Path) -> Result<Spectrum> {
        match self {
            SpectrumSpec::Gaussian {
                center,
                spread,
                support: None,
            } => Spectrum::gaussian(*center, *spread),
            SpectrumSpec::Gaussian {
                center,
                spread,
                support: Some([lo, hi]),
            } => Spectrum::gaussian_truncated(*center, *spread, *lo, *hi),
            SpectrumSpec::Table { path } => Spectrum::from_table_file(base.join(path)),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Grids {
    /// [s]
    pub tau: Vec<f64>,
    /// Absolute alignment angle [rad].
    #[serde(default = "default_phi")]
    pub phi: Vec<f64>,
    /// [rad]
    #[serde(default = "zero")]
    pub epsilon: Vec<f64>,
    /// [rad/s]
    #[serde(default = "zero")]
    pub omega_noise: Vec<f64>,
    /// Photons per trial.
    pub n_photons: Vec<u64>,
}

fn default_phi() -> Vec<f64> {
    vec![FRAC_PI_2]
}

fn zero() -> Vec<f64> {
    vec![0.0]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSettings {
    pub modes: Vec<DetectionMode>,
    pub estimators: Vec<Method>,
    pub trials: usize,
    pub seed: u64,
    /// ε assumed while fitting [rad]; defaults to the true value of each cell.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub assumed_epsilon: Option<f64>,
    /// Ω assumed while fitting [rad/s]; defaults to the true value of each cell.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub assumed_omega_noise: Option<f64>,
    /// Post-selection offset for the `wva` estimator [rad].
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    /// CSV output path, relative to the config file.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
    #[serde(default)]
    pub fit: FitOptions,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CampaignConfig {
    pub spectrum: SpectrumSpec,
    pub grids: Grids,
    pub run: RunSettings,
    /// Directory relative paths are resolved against.
    #[serde(skip)]
    pub base_dir: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ConfigFormat {
    Toml,
    Json,
}

pub fn parse_campaign(text: &str, format: ConfigFormat) -> Result<CampaignConfig> {
    let cfg: CampaignConfig = match format {
        ConfigFormat::Toml => toml::from_str(text).map_err(|e| Error::ConfigInvalid(e.to_string()))?,
        ConfigFormat::Json => serde_json::from_str(text).map_err(|e| Error::ConfigInvalid(e.to_string()))?,
    };
    cfg.validate()?;
    Ok(cfg)
}

/// Reads a campaign file; `.json` files are JSON, anything else TOML.
pub fn load_campaign(path: &Path) -> Result<CampaignConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let format = match path.extension().and_then(|e| e.to_str()) {
        Some("json") => ConfigFormat::Json,
        _ => ConfigFormat::Toml,
    };
    let mut cfg = parse_campaign(&text, format).map_err(|e| match e {
        Error::ConfigInvalid(m) => Error::ConfigInvalid(format!("{}: {m}", path.display())),
        other => other,
    })?;
    cfg.base_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
    Ok(cfg)
}

impl CampaignConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::ConfigInvalid(m));
        let g = &self.grids;
        for (name, empty) in [
            ("tau", g.tau.is_empty()),
            ("phi", g.phi.is_empty()),
            ("epsilon", g.epsilon.is_empty()),
            ("omega_noise", g.omega_noise.is_empty()),
            ("n_photons", g.n_photons.is_empty()),
            ("modes", self.run.modes.is_empty()),
            ("estimators", self.run.estimators.is_empty()),
        ] {
            if empty {
                return bad(format!("grid {name} is empty"));
            }
        }
        if g.tau.iter().chain(&g.phi).any(|x| !x.is_finite()) {
            return bad("tau and phi values must be finite".into());
        }
        if g.epsilon.iter().chain(&g.omega_noise).any(|x| !(x.is_finite() && *x >= 0.0)) {
            return bad("epsilon and omega_noise values must be finite and non-negative".into());
        }
        let r = &self.run;
        if r.trials < 1 {
            return bad("trials must be at least 1".into());
        }
        for a in [r.assumed_epsilon, r.assumed_omega_noise].into_iter().flatten() {
            if !(a.is_finite() && a >= 0.0) {
                return bad("assumed nuisance values must be finite and non-negative".into());
            }
        }
        for &m in &r.estimators {
            if !r.modes.iter().any(|&mode| applicable(m, mode)) {
                return bad(format!("estimator {} applies to none of the selected modes", m.label()));
            }
        }
        if r.estimators.contains(&Method::WvaBaseline) && r.alpha.is_none() {
            return bad("estimator wva needs run.alpha".into());
        }
        Ok(())
    }

    pub fn output_path(&self) -> Option<PathBuf> {
        self.run.output.as_ref().map(|p| self.base_dir.join(p))
    }
}

/// Aggregated statistics of one (data cell, estimator) pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellResult {
    /// Data cell index; trial seeds are `derive_seed(seed, [cell, trial])`.
    pub cell: usize,
    /// [s]
    pub tau_true: f64,
    /// [rad]
    pub phi_true: f64,
    pub epsilon: f64,
    pub omega_noise: f64,
    pub mode: DetectionMode,
    pub estimator: Method,
    pub n_photons: u64,
    pub trials: usize,
    /// Mean over successful trials [s].
    pub tau_hat_mean: Option<f64>,
    /// Circular mean of φ̂ [rad].
    pub phi_hat_mean: Option<f64>,
    /// [s]
    pub bias: Option<f64>,
    /// [s]
    pub rmse: Option<f64>,
    /// Standard error of the RMSE by the delta method [s].
    pub rmse_se: Option<f64>,
    /// Quadrature Cramér–Rao bound for `n_photons` [s].
    pub cr_bound: Option<f64>,
    pub rmse_over_cr: Option<f64>,
    pub failures: usize,
    /// Failure counts by error name.
    pub failure_reasons: BTreeMap<String, usize>,
    /// Master seed.
    pub seed: u64,
}

pub const CAMPAIGN_COLUMNS: [&str; 16] = [
    "tau_true",
    "phi_true",
    "epsilon",
    "omega_noise",
    "mode",
    "estimator",
    "n_photons",
    "trials",
    "tau_hat_mean",
    "bias",
    "rmse",
    "rmse_se",
    "cr_bound",
    "rmse_over_cr",
    "failures",
    "seed",
];

impl CellResult {
    /// Writes results as CSV with [`CAMPAIGN_COLUMNS`].
    pub fn write_csv<W: Write>(results: &[CellResult], out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let err = |e: csv::Error| Error::InvalidParameter(format!("csv output: {e}"));
        w.write_record(CAMPAIGN_COLUMNS).map_err(err)?;
        let opt = |x: Option<f64>| x.map_or(String::new(), |v| format!("{v:e}"));
        for r in results {
            w.write_record([
                format!("{:e}", r.tau_true),
                r.phi_true.to_string(),
                r.epsilon.to_string(),
                format!("{:e}", r.omega_noise),
                r.mode.to_string(),
                r.estimator.label().to_string(),
                r.n_photons.to_string(),
                r.trials.to_string(),
                opt(r.tau_hat_mean),
                opt(r.bias),
                opt(r.rmse),
                opt(r.rmse_se),
                opt(r.cr_bound),
                opt(r.rmse_over_cr),
                r.failures.to_string(),
                r.seed.to_string(),
            ])
            .map_err(err)?;
        }
        w.flush().map_err(|e| Error::io("<output>", e))
    }
}

struct DataCell {
    tau: f64,
    phi: f64,
    epsilon: f64,
    omega_noise: f64,
    n: u64,
    mode: DetectionMode,
}

type TrialOutcome = Vec<std::result::Result<(f64, f64), &'static str>>;

/// Runs every cell of the campaign. Failures of individual trials are
/// counted per cell; the run continues.
pub fn run_campaign(c: &CampaignConfig) -> Result<Vec<CellResult>> {
    c.validate()?;
    let spectrum = Arc::new(c.spectrum.build(&c.base_dir)?);
    let g = &c.grids;
    let mut cells = Vec::new();
    for &tau in &g.tau {
        for &phi in &g.phi {
            for &epsilon in &g.epsilon {
                for &omega_noise in &g.omega_noise {
                    for &n in &g.n_photons {
                        for &mode in &c.run.modes {
                            cells.push(DataCell {
                                tau,
                                phi,
                                epsilon,
                                omega_noise,
                                n,
                                mode,
                            });
                        }
                    }
                }
            }
        }
    }
    let mut out = Vec::new();
    for (k, cell) in cells.iter().enumerate() {
        out.extend(run_cell(c, &spectrum, k, cell));
    }
    Ok(out)
}

fn run_cell(c: &CampaignConfig, spectrum: &Arc<Spectrum>, k: usize, cell: &DataCell) -> Vec<CellResult> {
    let run = &c.run;
    let m = ModelParams::new(spectrum.clone(), cell.tau, cell.phi)
        .with_epsilon(cell.epsilon)
        .with_omega_noise(cell.omega_noise);
    let methods: Vec<Method> = run.estimators.iter().copied().filter(|&e| applicable(e, cell.mode)).collect();
    let fit = FitOptions {
        assumptions: Assumptions {
            epsilon: run.assumed_epsilon.unwrap_or(cell.epsilon),
            omega_noise: run.assumed_omega_noise.unwrap_or(cell.omega_noise),
            ..run.fit.assumptions
        },
        nominal_phi: cell.phi,
        ..run.fit
    };
    let trial = |t: usize| -> TrialOutcome {
        let seed = derive_seed(run.seed, &[k as u64, t as u64]);
        match sample_photons(&m, cell.mode, cell.n, seed) {
            Ok(d) => methods
                .iter()
                .map(|&e| {
                    run_estimator(e, &d, &fit, run.alpha)
                        .map(|est| (est.tau_hat, est.phi_hat))
                        .map_err(|e| e.name())
                })
                .collect(),
            Err(e) => vec![Err(e.name()); methods.len()],
        }
    };
    let trials: Vec<TrialOutcome> = if cell.n > PARALLEL_TRIAL_LIMIT {
        (0..run.trials).map(trial).collect()
    } else {
        (0..run.trials).into_par_iter().map(trial).collect()
    };
    let cr = (cell.n >= 1)
        .then(|| fisher(&m, cell.mode).and_then(|f| cramer_rao(&f, cell.n as f64)).ok())
        .flatten()
        .map(|b| b.delta_tau);

    methods
        .iter()
        .enumerate()
        .map(|(j, &method)| {
            let mut ok = Vec::new();
            let mut reasons = BTreeMap::new();
            for t in &trials {
                match t[j] {
                    Ok(v) => ok.push(v),
                    Err(name) => *reasons.entry(name.to_string()).or_insert(0) += 1,
                }
            }
            let stats = Stats::of(&ok, cell.tau);
            CellResult {
                cell: k,
                tau_true: cell.tau,
                phi_true: cell.phi,
                epsilon: cell.epsilon,
                omega_noise: cell.omega_noise,
                mode: cell.mode,
                estimator: method,
                n_photons: cell.n,
                trials: run.trials,
                tau_hat_mean: stats.map(|s| s.mean),
                phi_hat_mean: stats.map(|s| s.phi_mean),
                bias: stats.map(|s| s.mean - cell.tau),
                rmse: stats.map(|s| s.rmse),
                rmse_se: stats.and_then(|s| s.rmse_se),
                cr_bound: cr,
                rmse_over_cr: stats.zip(cr).map(|(s, cr)| s.rmse / cr),
                failures: run.trials - ok.len(),
                failure_reasons: reasons,
                seed: run.seed,
            }
        })
        .collect()
}

#[derive(Clone, Copy)]
struct Stats {
    mean: f64,
    phi_mean: f64,
    rmse: f64,
    rmse_se: Option<f64>,
}

impl Stats {
    fn of(v: &[(f64, f64)], truth: f64) -> Option<Stats> {
        if v.is_empty() {
            return None;
        }
        let n = v.len() as f64;
        let mean = v.iter().map(|x| x.0).sum::<f64>() / n;
        let (s, c) = v.iter().fold((0.0, 0.0), |(s, c), x| (s + x.1.sin(), c + x.1.cos()));
        let phi_mean = crate::interferometer::wrap_angle(s.atan2(c));
        let sq: Vec<f64> = v.iter().map(|x| (x.0 - truth).powi(2)).collect();
        let mse = sq.iter().sum::<f64>() / n;
        let rmse = mse.sqrt();
        let rmse_se = (v.len() > 1 && rmse > 0.0).then(|| {
            let var = sq.iter().map(|e| (e - mse).powi(2)).sum::<f64>() / (n - 1.0);
            (var / n).sqrt() / (2.0 * rmse)
        });
        Some(Stats {
            mean,
            phi_mean,
            rmse,
            rmse_se,
        })
    }
}

//! The `joint-weak` command-line front end.
//!
//! Exit status: 0 on success, 1 for usage and input errors, 2 for domain
//! errors (estimator outside its regime, singular model, ...). Errors are
//! reported on standard error as `error: <Name>: <message>`.

use std::ffi::OsString;
use std::f64::consts::FRAC_PI_2;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::estimation::{audit_formulas, Assumptions, AuditConfig, AuditInput, FitOptions, Method, SplitModel};
use crate::experiments::{load_campaign, reproduce_fig2, run_campaign, run_estimator, CellResult};
use crate::information::{cramer_rao, fisher_spectrometer, fisher_split, paper_bounds, photon_budget, write_curves};
use crate::interferometer::{read_dataset, sample_photons, write_dataset, DetectionMode, ModelParams};
use crate::spectrum::Spectrum;

#[derive(Debug, Parser)]
#[command(name = "joint-weak", version, about = "Joint weak measurement of ultrasmall time delays")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Draw a synthetic photon dataset (CSV plus JSON sidecar).
    Sample(SampleArgs),
    /// Estimate (τ, φ) from a dataset; prints an Estimate as JSON.
    Estimate(EstimateArgs),
    /// Per-photon Fisher information and, with --n, Cramér–Rao bounds (JSON).
    Fisher(FisherArgs),
    /// Closed-form bounds and the photon budget (JSON).
    Bounds(BoundsArgs),
    /// Ultimate-precision curves of the three schemes.
    Curves(CurvesArgs),
    /// Closed-form versus numeric ML audit.
    Audit(AuditArgs),
    /// Run a Monte Carlo campaign from a TOML or JSON config.
    Campaign(CampaignArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Mode {
    Spectrometer,
    Split,
}

impl From<Mode> for DetectionMode {
    fn from(m: Mode) -> Self {
        match m {
            Mode::Spectrometer => DetectionMode::Spectrometer,
            Mode::Split => DetectionMode::Split,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum MethodArg {
    Ml,
    Balanced,
    Split,
    Wva,
}

impl From<MethodArg> for Method {
    fn from(m: MethodArg) -> Self {
        match m {
            MethodArg::Ml => Method::NumericML,
            MethodArg::Balanced => Method::BalancedClosedForm,
            MethodArg::Split => Method::SplitClosedForm,
            MethodArg::Wva => Method::WvaBaseline,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum ModelArg {
    Exact,
    Paper,
}

impl From<ModelArg> for SplitModel {
    fn from(m: ModelArg) -> Self {
        match m {
            ModelArg::Exact => SplitModel::Exact,
            ModelArg::Paper => SplitModel::Paper,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum FrameArg {
    Absolute,
    Carrier,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum AuditKind {
    Exact,
    Sampled,
}

#[derive(Debug, Args)]
struct SpectrumArgs {
    /// Spectrum mean ω₀ [rad/s] (Gaussian, truncated at ±6Δω).
    #[arg(long, default_value_t = 1e16)]
    center: f64,
    /// Spectrum standard deviation Δω [rad/s].
    #[arg(long, default_value_t = 1e15)]
    spread: f64,
    /// Tabulated spectrum: two columns, frequency [rad/s] and density [arbitrary units];
    /// overrides --center/--spread.
    #[arg(long, value_name = "PATH")]
    spectrum_file: Option<PathBuf>,
}

impl SpectrumArgs {
    fn build(&self) -> Result<Arc<Spectrum>> {
        Ok(Arc::new(match &self.spectrum_file {
            Some(p) => Spectrum::from_table_file(p)?,
            None => Spectrum::gaussian(self.center, self.spread)?,
        }))
    }
}

#[derive(Debug, Args)]
struct ParamArgs {
    /// Time delay τ [s].
    #[arg(long, allow_negative_numbers = true)]
    tau: f64,
    /// Alignment angle φ [rad].
    #[arg(long, allow_negative_numbers = true)]
    phi: f64,
    /// Alignment fluctuation ε [rad].
    #[arg(long, default_value_t = 0.0)]
    eps: f64,
    /// Frequency readout noise Ω [rad/s] (split detectors).
    #[arg(long, default_value_t = 0.0)]
    omega_noise: f64,
    /// Interpret --phi as the carrier phase φ − ω₀τ instead of the absolute angle.
    #[arg(long)]
    carrier_phase: bool,
    #[command(flatten)]
    spectrum: SpectrumArgs,
}

impl ParamArgs {
    fn model(&self) -> Result<ModelParams> {
        let s = self.spectrum.build()?;
        let m = if self.carrier_phase {
            ModelParams::from_carrier_phase(s, self.tau, self.phi)
        } else {
            ModelParams::new(s, self.tau, self.phi)
        };
        let m = m.with_epsilon(self.eps).with_omega_noise(self.omega_noise);
        m.validate()?;
        Ok(m)
    }
}

#[derive(Debug, Args)]
struct SampleArgs {
    /// Detection configuration.
    #[arg(long, value_enum)]
    mode: Mode,
    /// Number of detected photons [count].
    #[arg(long)]
    n: u64,
    #[command(flatten)]
    params: ParamArgs,
    /// Master seed [integer]; required, output is a pure function of it.
    #[arg(long)]
    seed: u64,
    /// Output CSV [path]; the sidecar is written next to it with extension .json.
    #[arg(long, default_value = "dataset.csv")]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct EstimateArgs {
    /// Dataset CSV written by `sample` (or in the same format) [path].
    #[arg(long)]
    input: PathBuf,
    /// Estimator.
    #[arg(long, value_enum, default_value = "ml")]
    method: MethodArg,
    /// Assumed alignment fluctuation ε [rad].
    #[arg(long, default_value_t = 0.0)]
    assumed_eps: f64,
    /// Assumed readout noise Ω [rad/s].
    #[arg(long, default_value_t = 0.0)]
    assumed_omega_noise: f64,
    /// Split-detector likelihood model (ml only).
    #[arg(long, value_enum, default_value = "exact")]
    split_model: ModelArg,
    /// φ half-plane used to pick between the parity twins (τ, φ) and (−τ, −φ) [rad].
    #[arg(long, default_value_t = FRAC_PI_2, allow_negative_numbers = true)]
    nominal_phi: f64,
    /// Half-width of the delay search window [s] (ml only; default 10/Δω).
    #[arg(long)]
    tau_window: Option<f64>,
    /// Fit on a Δω/100 frequency histogram (ml only).
    #[arg(long)]
    histogram: bool,
    /// Post-selection offset α = φ − ω₀τ of the wva baseline [rad].
    #[arg(long, allow_negative_numbers = true)]
    alpha: Option<f64>,
    /// Reference spectrum for datasets without a sidecar; a sidecar spectrum takes precedence.
    #[command(flatten)]
    spectrum: SpectrumArgs,
    /// Write the JSON here instead of standard output [path].
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct FisherArgs {
    /// Detection configuration.
    #[arg(long, value_enum, default_value = "spectrometer")]
    mode: Mode,
    #[command(flatten)]
    params: ParamArgs,
    /// Split-detector probability model.
    #[arg(long, value_enum, default_value = "exact")]
    split_model: ModelArg,
    /// Phase coordinate of the reported matrix: absolute φ or carrier φ − ω₀τ.
    #[arg(long, value_enum, default_value = "absolute")]
    frame: FrameArg,
    /// Photon count for the Cramér–Rao bounds [count].
    #[arg(long)]
    n: Option<f64>,
}

#[derive(Debug, Args)]
struct BoundsArgs {
    /// Spectral spread Δω [rad/s].
    #[arg(long)]
    dw: f64,
    /// Alignment fluctuation ε [rad].
    #[arg(long, default_value_t = 0.0)]
    eps: f64,
    /// Readout noise Ω [rad/s].
    #[arg(long, default_value_t = 0.0)]
    omega_noise: f64,
    /// Alignment angle φ in the split-detector bound [rad].
    #[arg(long, default_value_t = FRAC_PI_2, allow_negative_numbers = true)]
    phi: f64,
    /// Detected photons N [count].
    #[arg(long)]
    n: f64,
    /// Delay for the photon budget 10/(Δωτ)² [s].
    #[arg(long, allow_negative_numbers = true)]
    tau: Option<f64>,
}

#[derive(Debug, Args)]
struct CurvesArgs {
    /// Alignment fluctuation ε [rad].
    #[arg(long, default_value_t = 0.02)]
    eps: f64,
    /// Weak-value-amplification constant C [s].
    #[arg(long, default_value_t = 0.25e-18)]
    c: f64,
    /// Reference frequency of standard interferometry ω [rad/s].
    #[arg(long, default_value_t = 2e15)]
    omega_ref: f64,
    /// Smallest delay of the logarithmic grid [s].
    #[arg(long, default_value_t = 1e-21)]
    tau_min: f64,
    /// Largest delay of the logarithmic grid [s].
    #[arg(long, default_value_t = 1e-15)]
    tau_max: f64,
    /// Grid points [count].
    #[arg(long, default_value_t = 61)]
    points: usize,
    /// Emit whitespace-separated blocks for gnuplot instead of CSV.
    #[arg(long)]
    gnuplot: bool,
    /// Output file [path]; a JSON summary with the crossover 2C/ε [s] then goes to standard output.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct AuditArgs {
    /// Exact expected counts or Monte Carlo samples.
    #[arg(long, value_enum, default_value = "exact")]
    input: AuditKind,
    /// Photons per grid point and mode for sampled input [count].
    #[arg(long, default_value_t = 10_000_000)]
    n: u64,
    /// Master seed [integer]; required for sampled input.
    #[arg(long)]
    seed: Option<u64>,
    /// Dimensionless delays θ = Δωτ [1], comma separated.
    #[arg(long, value_delimiter = ',', default_values_t = [5e-4, 1e-3, 2e-3])]
    thetas: Vec<f64>,
    /// Carrier phases φ − ω₀τ [rad], comma separated.
    #[arg(long, value_delimiter = ',', default_values_t = [FRAC_PI_2])]
    phis: Vec<f64>,
    /// Alignment fluctuations ε [rad], comma separated.
    #[arg(long, value_delimiter = ',', default_values_t = [0.0])]
    eps: Vec<f64>,
    /// Readout noises Ω [rad/s], comma separated.
    #[arg(long, value_delimiter = ',', default_values_t = [0.0])]
    omega_noises: Vec<f64>,
    #[command(flatten)]
    spectrum: SpectrumArgs,
    /// Report JSON [path]; standard output when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also write per-record CSV [path].
    #[arg(long)]
    csv: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct CampaignArgs {
    /// Campaign config, TOML (or JSON with extension .json) [path].
    #[arg(long)]
    config: PathBuf,
    /// Result CSV [path]; overrides run.output; standard output when neither is set.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Master seed [integer]; overrides run.seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Print the full per-cell results as JSON on standard output.
    #[arg(long)]
    json: bool,
}

fn json_line<T: Serialize>(out: &mut dyn Write, v: &T) -> Result<()> {
    let s = serde_json::to_string_pretty(v)?;
    writeln!(out, "{s}").map_err(|e| Error::io("<stdout>", e))
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    std::fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

fn usage(msg: impl Into<String>) -> Error {
    Error::InvalidParameter(msg.into())
}

/// Parses `args` (including the program name) and runs the subcommand.
/// Returns the process exit status.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let text = e.render().to_string();
            let _ = if e.use_stderr() {
                write!(stderr, "{text}")
            } else {
                write!(stdout, "{text}")
            };
            return code;
        }
    };
    match dispatch(cli.command, stdout) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(stderr, "error: {}: {e}", e.name());
            if e.is_input_error() {
                1
            } else {
                2
            }
        }
    }
}

fn dispatch(cmd: Command, out: &mut dyn Write) -> Result<()> {
    match cmd {
        Command::Sample(a) => {
            let m = a.params.model()?;
            let d = sample_photons(&m, a.mode.into(), a.n, a.seed)?;
            write_dataset(&a.out, &d)?;
            json_line(
                out,
                &serde_json::json!({
                    "dataset": a.out,
                    "sidecar": crate::interferometer::sidecar_path(&a.out),
                    "photons": d.total(),
                }),
            )
        }
        Command::Estimate(a) => {
            let mut d = read_dataset(&a.input)?;
            if d.meta.spectrum.is_none() {
                d = d.with_spectrum(a.spectrum.build()?);
            }
            let method: Method = a.method.into();
            let fit = FitOptions {
                assumptions: Assumptions {
                    epsilon: a.assumed_eps,
                    omega_noise: a.assumed_omega_noise,
                    split_model: a.split_model.into(),
                },
                nominal_phi: a.nominal_phi,
                tau_window: a.tau_window,
                histogram: a.histogram,
                ..FitOptions::default()
            };
            if method == Method::WvaBaseline && a.alpha.is_none() {
                return Err(usage("--method wva needs --alpha"));
            }
            let est = run_estimator(method, &d, &fit, a.alpha)?;
            match a.out {
                Some(p) => {
                    let mut s = serde_json::to_string_pretty(&est)?;
                    s.push('\n');
                    write_file(&p, s.as_bytes())
                }
                None => json_line(out, &est),
            }
        }
        Command::Fisher(a) => {
            let m = a.params.model()?;
            let f = match DetectionMode::from(a.mode) {
                DetectionMode::Spectrometer => fisher_spectrometer(&m)?,
                DetectionMode::Split => fisher_split(&m, a.split_model.into())?,
            };
            let f = match a.frame {
                FrameArg::Absolute => f,
                FrameArg::Carrier => f.to_carrier(m.spectrum.center()),
            };
            let cr = a.n.map(|n| cramer_rao(&f, n)).transpose()?;
            json_line(
                out,
                &serde_json::json!({
                    "fisher": f,
                    "eigenvalues": f.eigenvalues(),
                    "cramer_rao": cr,
                    "n": a.n,
                }),
            )
        }
        Command::Bounds(a) => {
            let b = paper_bounds(a.dw, a.eps, a.omega_noise, a.phi, a.n)?;
            let budget = a.tau.map(|t| photon_budget(a.dw, t)).transpose()?;
            json_line(
                out,
                &serde_json::json!({
                    "eq9": b.eq9,
                    "eq13": b.eq13,
                    "photon_budget": budget,
                }),
            )
        }
        Command::Curves(a) => {
            if !(a.tau_min > 0.0 && a.tau_max >= a.tau_min && a.points >= 1) {
                return Err(usage("need 0 < --tau-min <= --tau-max and --points >= 1"));
            }
            let taus: Vec<f64> = if a.points == 1 {
                vec![a.tau_min]
            } else {
                let (l0, l1) = (a.tau_min.log10(), a.tau_max.log10());
                (0..a.points)
                    .map(|i| 10f64.powf(l0 + (l1 - l0) * i as f64 / (a.points - 1) as f64))
                    .collect()
            };
            let t = reproduce_fig2(a.eps, a.c, a.omega_ref, &taus)?;
            match a.out {
                Some(p) => {
                    let mut buf = Vec::new();
                    write_curves(&t.curves, &mut buf, a.gnuplot)?;
                    write_file(&p, &buf)?;
                    json_line(
                        out,
                        &serde_json::json!({
                            "output": p,
                            "crossover": t.crossover,
                            "wva_level": t.curves[1].delta_tau_ult[0],
                            "standard_level": t.curves[0].delta_tau_ult[0],
                        }),
                    )
                }
                None => write_curves(&t.curves, out, a.gnuplot),
            }
        }
        Command::Audit(a) => {
            let input = match a.input {
                AuditKind::Exact => AuditInput::Exact,
                AuditKind::Sampled => AuditInput::Sampled {
                    n: a.n,
                    seed: a.seed.ok_or_else(|| usage("--input sampled needs --seed"))?,
                },
            };
            let cfg = AuditConfig {
                spectrum: a.spectrum.build()?,
                thetas: a.thetas,
                phis: a.phis,
                epsilons: a.eps,
                omega_noises: a.omega_noises,
                input,
                fit: FitOptions::default(),
            };
            let report = audit_formulas(&cfg);
            if let Some(p) = &a.csv {
                let mut buf = Vec::new();
                report.write_csv(&mut buf)?;
                write_file(p, &buf)?;
            }
            match a.out {
                Some(p) => write_file(&p, (report.to_json()? + "\n").as_bytes()),
                None => json_line(out, &report),
            }
        }
        Command::Campaign(a) => {
            let mut cfg = load_campaign(&a.config)?;
            if let Some(seed) = a.seed {
                cfg.run.seed = seed;
            }
            let results = run_campaign(&cfg)?;
            let mut buf = Vec::new();
            CellResult::write_csv(&results, &mut buf)?;
            let path = a.out.or_else(|| cfg.output_path());
            match &path {
                Some(p) => write_file(p, &buf)?,
                None if !a.json => out.write_all(&buf).map_err(|e| Error::io("<stdout>", e))?,
                None => {}
            }
            if a.json {
                json_line(out, &results)?;
            }
            Ok(())
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn call(args: &[&str]) -> (i32, String, String) {
        let (mut o, mut e) = (Vec::new(), Vec::new());
        let code = run(std::iter::once("joint-weak").chain(args.iter().copied()), &mut o, &mut e);
        (code, String::from_utf8(o).unwrap(), String::from_utf8(e).unwrap())
    }

    #[test]
    fn bounds_arithmetic() {
        let (code, out, _) = call(&["bounds", "--dw", "1e15", "--eps", "0", "--n", "1e7"]);
        assert_eq!(code, 0);
        let v: serde_json::Value = serde_json::from_str(&out).unwrap();
        assert!((v["eq9"].as_f64().unwrap() - 7.905694150420949e-20).abs() < 1e-30);
        assert!(out.ends_with("}\n"));
    }

    #[test]
    fn exit_codes() {
        assert_eq!(call(&["bounds", "--dw", "1e15"]).0, 1);
        assert_eq!(call(&["nonsense"]).0, 1);
        assert_eq!(call(&["--help"]).0, 0);
        let (code, _, err) = call(&["bounds", "--dw", "1e15", "--n", "10", "--phi", "0"]);
        assert_eq!(code, 2);
        assert!(err.contains("UndefinedBound"));
        let (code, _, err) = call(&["estimate", "--input", "/nonexistent/x.csv"]);
        assert_eq!(code, 1);
        assert!(err.contains("Io"));
    }

    #[test]
    fn every_flag_documents_units() {
        use clap::CommandFactory;
        let cmd = Cli::command();
        for sub in cmd.get_subcommands() {
            for arg in sub.get_arguments() {
                let id = arg.get_id().as_str();
                if matches!(id, "help" | "version") {
                    continue;
                }
                let help = arg.get_help().map(|h| h.to_string()).unwrap_or_default();
                let enumerated = !arg.get_possible_values().is_empty();
                assert!(
                    help.contains('[') || enumerated || !arg.get_action().takes_values(),
                    "{} --{id}: {help:?}",
                    sub.get_name()
                );
            }
        }
    }
}

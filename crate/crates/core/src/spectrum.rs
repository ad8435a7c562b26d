//! Input laser spectrum p₀(ω).
//!
//! A [`Spectrum`] is either a truncated Gaussian or a tabulated density with
//! linear interpolation between nodes. Its reported `center` and `spread` are
//! the mean and standard deviation of the (truncated, renormalized) density,
//! recomputed by quadrature at construction. Internally most computations run
//! in the dimensionless coordinate `u = (ω - center) / spread`.

use std::f64::consts::{PI, SQRT_2};
use std::path::Path;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quadrature::{self, Quad, Tolerance};

/// Number of nodes in the inverse-CDF sampling table.
pub const INVERSE_CDF_NODES: usize = 4096;

/// Default truncation half-width of Gaussian spectra, in units of the nominal width.
pub const GAUSSIAN_TRUNCATION_SIGMAS: f64 = 6.0;

/// Largest panel width (in `u`) used when a spectrum is discretized into
/// Gauss–Legendre nodes.
const NODE_PANEL_WIDTH: f64 = 0.125;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SpectrumKind {
    Gaussian,
    Tabulated,
}

#[derive(Debug, Clone)]
enum Shape {
    Gaussian {
        location: f64,
        scale: f64,
        /// 1 / (scale · Z · √(2π)) with Z the retained probability mass.
        norm: f64,
    },
    Tabulated {
        omega: Vec<f64>,
        density: Vec<f64>,
    },
}

/// Mean, variance and second raw moment of a spectrum [rad/s, (rad/s)², (rad/s)²].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Moments {
    pub mean: f64,
    pub variance: f64,
    pub second_raw: f64,
}

#[derive(Debug, Clone)]
struct InverseCdf {
    cdf: Vec<f64>,
    u: Vec<f64>,
    slope: Vec<f64>,
}

/// Normalized frequency distribution of the incoming light.
#[derive(Debug, Clone)]
pub struct Spectrum {
    kind: SpectrumKind,
    shape: Shape,
    support: (f64, f64),
    center: f64,
    spread: f64,
    breaks_u: Vec<f64>,
    inverse_cdf: InverseCdf,
}

/// Serializable description of a spectrum, used in dataset sidecars and configs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumRecord {
    pub kind: SpectrumKind,
    /// Mean frequency of the truncated density [rad/s].
    pub center: f64,
    /// Standard deviation of the truncated density [rad/s].
    pub spread: f64,
    /// Truncation interval [rad/s].
    pub support: [f64; 2],
    /// Nominal Gaussian location before truncation [rad/s].
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub location: Option<f64>,
    /// Nominal Gaussian width before truncation [rad/s].
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scale: Option<f64>,
    /// Tabulated nodes `[omega, density]`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub table: Option<Vec<[f64; 2]>>,
}

fn std_normal_cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x / SQRT_2)
}

fn std_normal_sf(x: f64) -> f64 {
    0.5 * libm::erfc(x / SQRT_2)
}

/// Probability mass of a standard normal between `a` and `b`.
fn normal_mass(a: f64, b: f64) -> f64 {
    if a >= 0.0 {
        std_normal_sf(a) - std_normal_sf(b)
    } else if b <= 0.0 {
        std_normal_cdf(b) - std_normal_cdf(a)
    } else {
        1.0 - std_normal_cdf(a) - std_normal_sf(b)
    }
}

fn fine_tolerance() -> Tolerance {
    Tolerance {
        abs: 1e-14,
        rel: 1e-14,
        max_intervals: 4000,
    }
}

impl Shape {
    /// Density of `ω = c + s·u` expressed per unit `u`.
    fn density_in_frame(&self, c: f64, s: f64, u: f64) -> f64 {
        match self {
            Shape::Gaussian {
                location,
                scale,
                norm,
            } => {
                let z = (c - location) / scale + (s / scale) * u;
                s * norm * (-0.5 * z * z).exp()
            }
            Shape::Tabulated { .. } => s * self.density(c + s * u),
        }
    }

    fn density(&self, omega: f64) -> f64 {
        match self {
            Shape::Gaussian {
                location,
                scale,
                norm,
            } => {
                let z = (omega - location) / scale;
                norm * (-0.5 * z * z).exp()
            }
            Shape::Tabulated { omega: w, density } => {
                let n = w.len();
                if omega < w[0] || omega > w[n - 1] {
                    return 0.0;
                }
                let j = w.partition_point(|&x| x <= omega);
                if j == n {
                    return density[n - 1];
                }
                let i = j - 1;
                let t = (omega - w[i]) / (w[j] - w[i]);
                density[i] + t * (density[j] - density[i])
            }
        }
    }
}

impl Spectrum {
    /// Gaussian spectrum with the default truncation `[max(0, ω₀ − 6Δω), ω₀ + 6Δω]`.
    pub fn gaussian(center: f64, spread: f64) -> Result<Self> {
        if !(center.is_finite() && spread.is_finite() && center > 0.0 && spread > 0.0) {
            return Err(Error::InvalidSpectrum(format!(
                "gaussian needs finite positive center and spread, got {center}, {spread}"
            )));
        }
        let lo = (center - GAUSSIAN_TRUNCATION_SIGMAS * spread).max(0.0);
        let hi = center + GAUSSIAN_TRUNCATION_SIGMAS * spread;
        Self::gaussian_truncated(center, spread, lo, hi)
    }

    /// Gaussian with nominal `location`/`scale` truncated to `[lo, hi]`.
    pub fn gaussian_truncated(location: f64, scale: f64, lo: f64, hi: f64) -> Result<Self> {
        if !(location.is_finite() && scale.is_finite() && location > 0.0 && scale > 0.0) {
            return Err(Error::InvalidSpectrum(format!(
                "gaussian needs finite positive location and scale, got {location}, {scale}"
            )));
        }
        check_support(lo, hi)?;
        let mass = normal_mass((lo - location) / scale, (hi - location) / scale);
        if !(mass > 0.0) {
            return Err(Error::InvalidSpectrum(
                "truncation interval retains no probability mass".into(),
            ));
        }
        let shape = Shape::Gaussian {
            location,
            scale,
            norm: 1.0 / (scale * mass * (2.0 * PI).sqrt()),
        };
        Self::build(SpectrumKind::Gaussian, shape, (lo, hi), (location, scale), Vec::new())
    }

    /// Tabulated spectrum from a strictly increasing frequency grid and
    /// non-negative (unnormalized) densities.
    pub fn tabulated(omega: Vec<f64>, density: Vec<f64>) -> Result<Self> {
        if omega.len() != density.len() || omega.len() < 2 {
            return Err(Error::InvalidSpectrum(
                "table needs at least two nodes with matching columns".into(),
            ));
        }
        if omega.iter().chain(density.iter()).any(|v| !v.is_finite()) {
            return Err(Error::InvalidSpectrum("table contains non-finite values".into()));
        }
        if omega.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidSpectrum(
                "frequency grid must be strictly increasing".into(),
            ));
        }
        if density.iter().any(|&d| d < 0.0) {
            return Err(Error::InvalidSpectrum("densities must be non-negative".into()));
        }
        let (lo, hi) = (omega[0], omega[omega.len() - 1]);
        check_support(lo, hi)?;
        let area: f64 = omega
            .windows(2)
            .zip(density.windows(2))
            .map(|(w, d)| 0.5 * (w[1] - w[0]) * (d[0] + d[1]))
            .sum();
        if !(area > 0.0) {
            return Err(Error::InvalidSpectrum("table has zero total density".into()));
        }
        let density: Vec<f64> = density.iter().map(|d| d / area).collect();
        let frame = (0.5 * (lo + hi), 0.5 * (hi - lo));
        let nodes = omega.clone();
        let shape = Shape::Tabulated { omega, density };
        Self::build(SpectrumKind::Tabulated, shape, (lo, hi), frame, nodes)
    }

    /// Parses a two-column table (`frequency density`, whitespace or comma
    /// separated). Lines starting with `#` and blank lines are ignored, and
    /// the first data line may be a header such as `omega,density`.
    pub fn from_table_str(text: &str, origin: &Path) -> Result<Self> {
        let mut header_allowed = true;
        let mut omega = Vec::new();
        let mut density = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let trimmed = line.trim();
            if trimmed.is_empty() || trimmed.starts_with('#') {
                continue;
            }
            let parse_err = |message: String| Error::Parse {
                path: origin.to_path_buf(),
                line: lineno as u64 + 1,
                message,
            };
            let cols: Vec<&str> = trimmed
                .split(|c: char| c.is_whitespace() || c == ',')
                .filter(|s| !s.is_empty())
                .collect();
            if cols.len() != 2 {
                return Err(parse_err(format!("expected 2 columns, found {}", cols.len())));
            }
            if std::mem::take(&mut header_allowed) && cols.iter().all(|c| c.parse::<f64>().is_err()) {
                continue;
            }
            let w: f64 = cols[0]
                .parse()
                .map_err(|_| parse_err(format!("bad frequency {:?}", cols[0])))?;
            let d: f64 = cols[1]
                .parse()
                .map_err(|_| parse_err(format!("bad density {:?}", cols[1])))?;
            omega.push(w);
            density.push(d);
        }
        Self::tabulated(omega, density)
    }

    pub fn from_table_file(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_table_str(&text, path)
    }

    fn build(
        kind: SpectrumKind,
        shape: Shape,
        support: (f64, f64),
        frame: (f64, f64),
        nodes: Vec<f64>,
    ) -> Result<Self> {
        let (c0, s0) = frame;
        let to_u0 = |w: f64| (w - c0) / s0;
        let mut breaks0: Vec<f64> = vec![to_u0(support.0), to_u0(support.1)];
        breaks0.extend(nodes.iter().map(|&w| to_u0(w)));
        sort_dedup(&mut breaks0);
        let q: Quad<3> = quadrature::integrate_pieces(
            |u| {
                let p = shape.density_in_frame(c0, s0, u);
                [p, p * u, p * u * u]
            },
            &breaks0,
            fine_tolerance(),
        );
        let [m0, m1, m2] = q.value;
        if !(m0 > 0.0) {
            return Err(Error::InvalidSpectrum("density integrates to zero".into()));
        }
        let mean_u0 = m1 / m0;
        let var_u0 = m2 / m0 - mean_u0 * mean_u0;
        if !(var_u0 > 0.0) {
            return Err(Error::InvalidSpectrum("spectrum has zero width".into()));
        }
        let center = c0 + s0 * mean_u0;
        let spread = s0 * var_u0.sqrt();

        let to_u = |w: f64| (w - center) / spread;
        let mut breaks_u: Vec<f64> = vec![to_u(support.0), to_u(support.1)];
        breaks_u.extend(nodes.iter().map(|&w| to_u(w)));
        sort_dedup(&mut breaks_u);

        let mut spectrum = Spectrum {
            kind,
            shape,
            support,
            center,
            spread,
            breaks_u,
            inverse_cdf: InverseCdf {
                cdf: Vec::new(),
                u: Vec::new(),
                slope: Vec::new(),
            },
        };
        spectrum.inverse_cdf = spectrum.build_inverse_cdf();
        Ok(spectrum)
    }

    fn build_inverse_cdf(&self) -> InverseCdf {
        let (lo, hi) = self.support_u();
        let n = INVERSE_CDF_NODES;
        let u: Vec<f64> = (0..n)
            .map(|i| {
                if i == n - 1 {
                    hi
                } else {
                    lo + (hi - lo) * i as f64 / (n - 1) as f64
                }
            })
            .collect();
        let mut cdf = Vec::with_capacity(n);
        cdf.push(0.0);
        let mut acc = 0.0;
        let mut b = 0;
        for w in u.windows(2) {
            let mut pieces = vec![w[0]];
            while b < self.breaks_u.len() && self.breaks_u[b] <= w[0] {
                b += 1;
            }
            let mut k = b;
            while k < self.breaks_u.len() && self.breaks_u[k] < w[1] {
                pieces.push(self.breaks_u[k]);
                k += 1;
            }
            pieces.push(w[1]);
            let q: Quad<1> =
                quadrature::integrate_pieces(|x| [self.density_u(x)], &pieces, fine_tolerance());
            acc += q.value[0].max(0.0);
            cdf.push(acc);
        }
        let total = acc;
        for f in cdf.iter_mut() {
            *f /= total;
        }
        cdf[n - 1] = 1.0;
        let slope = pchip_slopes(&cdf, &u);
        InverseCdf { cdf, u, slope }
    }

    pub fn kind(&self) -> SpectrumKind {
        self.kind
    }

    /// Mean frequency ω₀ of the truncated density [rad/s].
    pub fn center(&self) -> f64 {
        self.center
    }

    /// Standard deviation Δω of the truncated density [rad/s].
    pub fn spread(&self) -> f64 {
        self.spread
    }

    /// Truncation interval [rad/s].
    pub fn support(&self) -> (f64, f64) {
        self.support
    }

    /// Support in the dimensionless coordinate `u`.
    pub fn support_u(&self) -> (f64, f64) {
        (
            (self.support.0 - self.center) / self.spread,
            (self.support.1 - self.center) / self.spread,
        )
    }

    /// ρ = ω₀/Δω, the carrier frequency in units of the spread.
    pub fn rho(&self) -> f64 {
        self.center / self.spread
    }

    /// p₀(ω) [1/(rad/s)]; zero outside the support.
    pub fn density(&self, omega: f64) -> f64 {
        if omega < self.support.0 || omega > self.support.1 {
            return 0.0;
        }
        self.shape.density(omega)
    }

    /// Density per unit `u`, i.e. Δω · p₀(ω₀ + Δω·u).
    pub fn density_u(&self, u: f64) -> f64 {
        let (lo, hi) = self.support_u();
        if u < lo || u > hi {
            return 0.0;
        }
        self.shape.density_in_frame(self.center, self.spread, u)
    }

    pub fn moments(&self) -> Moments {
        let variance = self.spread * self.spread;
        Moments {
            mean: self.center,
            variance,
            second_raw: variance + self.center * self.center,
        }
    }

    /// Integrates `f(u, p(u))` over the support with additional breakpoints.
    pub(crate) fn integrate_u<const K: usize, F>(&self, extra: &[f64], tol: Tolerance, f: F) -> Quad<K>
    where
        F: Fn(f64, f64) -> [f64; K],
    {
        let (lo, hi) = self.support_u();
        let mut breaks: Vec<f64> = self.breaks_u.clone();
        breaks.extend(extra.iter().copied().filter(|&x| x > lo && x < hi));
        sort_dedup(&mut breaks);
        quadrature::integrate_pieces(|u| f(u, self.density_u(u)), &breaks, tol)
    }

    /// Gauss–Legendre nodes `(u, w·p(u))` that integrate smooth functions
    /// against the density to near machine precision.
    pub(crate) fn weighted_nodes_u(&self, extra: &[f64]) -> Vec<(f64, f64)> {
        let (lo, hi) = self.support_u();
        let mut breaks: Vec<f64> = self.breaks_u.clone();
        breaks.extend(extra.iter().copied().filter(|&x| x > lo && x < hi));
        sort_dedup(&mut breaks);
        let mut out = Vec::new();
        for w in breaks.windows(2) {
            let panels = ((w[1] - w[0]) / NODE_PANEL_WIDTH).ceil().max(1.0) as usize;
            for (u, wt) in quadrature::gauss_legendre_nodes(w, panels) {
                let p = self.density_u(u);
                if p > 0.0 {
                    out.push((u, wt * p));
                }
            }
        }
        out
    }

    /// Draws `u` by inverse-CDF lookup.
    pub fn sample_u<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let p: f64 = rng.random();
        self.quantile_u(p)
    }

    /// Draws a frequency ω [rad/s] with law p₀.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        self.center + self.spread * self.sample_u(rng)
    }

    /// Quantile function in `u`, monotone cubic interpolation of the CDF table.
    pub fn quantile_u(&self, p: f64) -> f64 {
        let t = &self.inverse_cdf;
        let n = t.cdf.len();
        let j = t.cdf.partition_point(|&f| f <= p).clamp(1, n - 1);
        let i = j - 1;
        let h = t.cdf[j] - t.cdf[i];
        if !(h > 0.0) {
            return t.u[i];
        }
        let s = ((p - t.cdf[i]) / h).clamp(0.0, 1.0);
        let s2 = s * s;
        let s3 = s2 * s;
        let h00 = 2.0 * s3 - 3.0 * s2 + 1.0;
        let h10 = s3 - 2.0 * s2 + s;
        let h01 = -2.0 * s3 + 3.0 * s2;
        let h11 = s3 - s2;
        let u = h00 * t.u[i] + h10 * h * t.slope[i] + h01 * t.u[j] + h11 * h * t.slope[j];
        u.clamp(t.u[i], t.u[j])
    }

    /// The same spectrum with every frequency multiplied by `lambda`.
    pub fn scaled(&self, lambda: f64) -> Result<Self> {
        if !(lambda.is_finite() && lambda > 0.0) {
            return Err(Error::InvalidParameter(format!("scale factor {lambda}")));
        }
        match &self.shape {
            Shape::Gaussian {
                location, scale, ..
            } => Self::gaussian_truncated(
                location * lambda,
                scale * lambda,
                self.support.0 * lambda,
                self.support.1 * lambda,
            ),
            Shape::Tabulated { omega, density } => Self::tabulated(
                omega.iter().map(|w| w * lambda).collect(),
                density.iter().map(|d| d / lambda).collect(),
            ),
        }
    }

    pub fn to_record(&self) -> SpectrumRecord {
        let (location, scale, table) = match &self.shape {
            Shape::Gaussian {
                location, scale, ..
            } => (Some(*location), Some(*scale), None),
            Shape::Tabulated { omega, density } => (
                None,
                None,
                Some(omega.iter().zip(density).map(|(&w, &d)| [w, d]).collect()),
            ),
        };
        SpectrumRecord {
            kind: self.kind,
            center: self.center,
            spread: self.spread,
            support: [self.support.0, self.support.1],
            location,
            scale,
            table,
        }
    }

    pub fn from_record(rec: &SpectrumRecord) -> Result<Self> {
        match rec.kind {
            SpectrumKind::Gaussian => {
                let location = rec.location.unwrap_or(rec.center);
                let scale = rec.scale.unwrap_or(rec.spread);
                Self::gaussian_truncated(location, scale, rec.support[0], rec.support[1])
            }
            SpectrumKind::Tabulated => {
                let table = rec.table.as_ref().ok_or_else(|| {
                    Error::InvalidSpectrum("tabulated spectrum record without table".into())
                })?;
                Self::tabulated(
                    table.iter().map(|r| r[0]).collect(),
                    table.iter().map(|r| r[1]).collect(),
                )
            }
        }
    }
}

fn check_support(lo: f64, hi: f64) -> Result<()> {
    if !(lo.is_finite() && hi.is_finite() && lo >= 0.0 && lo < hi) {
        return Err(Error::InvalidSpectrum(format!(
            "support must satisfy 0 <= min < max, got [{lo}, {hi}]"
        )));
    }
    Ok(())
}

fn sort_dedup(v: &mut Vec<f64>) {
    v.sort_by(f64::total_cmp);
    v.dedup();
}

/// Fritsch–Butland slopes for a monotone cubic Hermite interpolant of `y(x)`.
fn pchip_slopes(x: &[f64], y: &[f64]) -> Vec<f64> {
    let n = x.len();
    let secant: Vec<f64> = (0..n - 1)
        .map(|i| {
            let h = x[i + 1] - x[i];
            if h > 0.0 {
                (y[i + 1] - y[i]) / h
            } else {
                f64::INFINITY
            }
        })
        .collect();
    let mut d = vec![0.0; n];
    let finite_or_zero = |v: f64| if v.is_finite() { v } else { 0.0 };
    d[0] = finite_or_zero(secant[0]);
    d[n - 1] = finite_or_zero(secant[n - 2]);
    for i in 1..n - 1 {
        let (a, b) = (secant[i - 1], secant[i]);
        d[i] = match (a.is_finite(), b.is_finite()) {
            (false, false) => 0.0,
            (true, false) => a,
            (false, true) => b,
            (true, true) => {
                if a <= 0.0 || b <= 0.0 {
                    0.0
                } else {
                    let h0 = x[i] - x[i - 1];
                    let h1 = x[i + 1] - x[i];
                    let w1 = 2.0 * h1 + h0;
                    let w2 = h1 + 2.0 * h0;
                    (w1 + w2) / (w1 / a + w2 / b)
                }
            }
        };
    }
    d
}

//! Numerical integration.
//!
//! Adaptive 7/15-point Gauss–Kronrod with global error control for
//! vector-valued integrands, plus a fixed composite Gauss–Legendre rule that
//! is used to turn a density into a set of weighted nodes.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

/// Kronrod abscissae on [-1, 1], positive half, descending. The last entry is the centre.
const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_845_693_013,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.0,
];

const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_970,
    0.063_092_092_629_978_553_290_700_663_189_204,
    0.104_790_010_322_250_183_839_876_322_541_518,
    0.140_653_259_715_525_918_745_189_590_510_238,
    0.169_004_726_639_267_902_826_583_426_598_550,
    0.190_350_578_064_785_409_913_256_402_421_014,
    0.204_432_940_075_298_892_414_161_999_234_649,
    0.209_482_141_084_727_828_012_999_174_891_714,
];

/// Gauss weights for the embedded 7-point rule (abscissae XGK[1], XGK[3], XGK[5], 0).
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

/// 8-point Gauss–Legendre rule on [-1, 1].
const GL8_X: [f64; 4] = [
    0.183_434_642_495_649_804_939_476_142_360_184,
    0.525_532_409_916_328_985_817_739_049_189_254,
    0.796_666_477_413_626_739_591_553_936_475_830,
    0.960_289_856_497_536_231_683_560_868_569_473,
];
const GL8_W: [f64; 4] = [
    0.362_683_783_378_361_982_965_150_449_277_196,
    0.313_706_645_877_887_287_337_962_201_986_601,
    0.222_381_034_453_374_470_544_355_994_426_241,
    0.101_228_536_290_376_259_152_531_354_309_963,
];

#[derive(Debug, Clone, Copy)]
pub struct Tolerance {
    pub abs: f64,
    pub rel: f64,
    pub max_intervals: usize,
}

impl Default for Tolerance {
    fn default() -> Self {
        Tolerance {
            abs: 1e-12,
            rel: 1e-12,
            max_intervals: 4000,
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct Quad<const K: usize> {
    pub value: [f64; K],
    /// Estimated absolute error (max over components).
    pub error: f64,
    pub intervals: usize,
    pub converged: bool,
}

#[derive(Debug, Clone, Copy)]
struct Segment<const K: usize> {
    a: f64,
    b: f64,
    value: [f64; K],
    error: f64,
}

impl<const K: usize> PartialEq for Segment<K> {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl<const K: usize> Eq for Segment<K> {}
impl<const K: usize> PartialOrd for Segment<K> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl<const K: usize> Ord for Segment<K> {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

fn kronrod<const K: usize, F>(f: &F, a: f64, b: f64) -> Segment<K>
where
    F: Fn(f64) -> [f64; K],
{
    let centre = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(centre);
    let mut res_k = [0.0; K];
    let mut res_g = [0.0; K];
    for k in 0..K {
        res_k[k] = fc[k] * WGK[7];
        res_g[k] = fc[k] * WG[3];
    }
    for (j, (&x, &wk)) in XGK.iter().zip(WGK.iter()).take(7).enumerate() {
        let dx = half * x;
        let f1 = f(centre - dx);
        let f2 = f(centre + dx);
        for k in 0..K {
            let s = f1[k] + f2[k];
            res_k[k] += wk * s;
            if j % 2 == 1 {
                res_g[k] += WG[j / 2] * s;
            }
        }
    }
    let mut value = [0.0; K];
    let mut error: f64 = 0.0;
    for k in 0..K {
        value[k] = res_k[k] * half;
        error = error.max(((res_k[k] - res_g[k]) * half).abs());
    }
    Segment { a, b, value, error }
}

/// Adaptively integrates the vector-valued `f` over `[a, b]`.
pub fn integrate<const K: usize, F>(f: F, a: f64, b: f64, tol: Tolerance) -> Quad<K>
where
    F: Fn(f64) -> [f64; K],
{
    integrate_pieces(f, &[a, b], tol)
}

/// Integrates over consecutive pieces delimited by `breaks` (sorted, length ≥ 2).
///
/// Error control is global: the worst segment across all pieces is bisected
/// until the summed error estimate meets the tolerance.
pub fn integrate_pieces<const K: usize, F>(f: F, breaks: &[f64], tol: Tolerance) -> Quad<K>
where
    F: Fn(f64) -> [f64; K],
{
    let mut heap = BinaryHeap::new();
    for w in breaks.windows(2) {
        if w[1] > w[0] {
            heap.push(kronrod(&f, w[0], w[1]));
        }
    }
    let totals = |heap: &BinaryHeap<Segment<K>>| {
        let mut value = [0.0; K];
        let mut error = 0.0;
        for s in heap.iter() {
            for k in 0..K {
                value[k] += s.value[k];
            }
            error += s.error;
        }
        (value, error)
    };
    loop {
        let (value, error) = totals(&heap);
        let scale = value.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
        let target = tol.abs.max(tol.rel * scale);
        if error <= target || heap.len() >= tol.max_intervals {
            return Quad {
                value,
                error,
                intervals: heap.len(),
                converged: error <= target,
            };
        }
        let Some(worst) = heap.pop() else {
            return Quad {
                value,
                error,
                intervals: 0,
                converged: true,
            };
        };
        let mid = 0.5 * (worst.a + worst.b);
        if mid <= worst.a || mid >= worst.b {
            // Interval cannot be split further in floating point.
            heap.push(Segment { error: 0.0, ..worst });
            continue;
        }
        heap.push(kronrod(&f, worst.a, mid));
        heap.push(kronrod(&f, mid, worst.b));
    }
}

/// Scalar convenience wrapper.
pub fn integrate_scalar<F>(f: F, a: f64, b: f64, tol: Tolerance) -> f64
where
    F: Fn(f64) -> f64,
{
    integrate(|x| [f(x)], a, b, tol).value[0]
}

/// Nodes and weights of a composite 8-point Gauss–Legendre rule.
///
/// Each piece between consecutive `breaks` is split into `panels` equal panels.
pub fn gauss_legendre_nodes(breaks: &[f64], panels: usize) -> Vec<(f64, f64)> {
    let mut out = Vec::with_capacity(breaks.len().saturating_sub(1) * panels.max(1) * 8);
    for w in breaks.windows(2) {
        let (lo, hi) = (w[0], w[1]);
        if hi <= lo {
            continue;
        }
        let width = (hi - lo) / panels.max(1) as f64;
        for p in 0..panels.max(1) {
            let a = lo + width * p as f64;
            let c = a + 0.5 * width;
            let h = 0.5 * width;
            for i in (0..4).rev() {
                out.push((c - h * GL8_X[i], h * GL8_W[i]));
            }
            for i in 0..4 {
                out.push((c + h * GL8_X[i], h * GL8_W[i]));
            }
        }
    }
    out
}

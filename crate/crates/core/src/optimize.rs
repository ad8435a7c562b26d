//! Nelder–Mead simplex minimisation for small fixed-dimension problems.

#[derive(Debug, Clone, Copy)]
pub struct NelderMead {
    pub max_iter: usize,
    /// Stop when every vertex lies within `xtol·(1 + |x_best|)` of the best, per coordinate.
    pub xtol: f64,
    /// ... and the spread of function values is below `ftol·(1 + |f_best|)`.
    pub ftol: f64,
}

impl Default for NelderMead {
    fn default() -> Self {
        NelderMead {
            max_iter: 10_000,
            xtol: 1e-10,
            ftol: 1e-14,
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct Minimum<const D: usize> {
    pub x: [f64; D],
    pub f: f64,
    pub iterations: usize,
    pub converged: bool,
}

fn lerp<const D: usize>(a: &[f64; D], b: &[f64; D], t: f64) -> [f64; D] {
    let mut out = [0.0; D];
    for i in 0..D {
        out[i] = a[i] + t * (b[i] - a[i]);
    }
    out
}

impl NelderMead {
    /// Minimises `f` from `x0` with initial simplex edge lengths `step`.
    pub fn minimize<const D: usize, F>(&self, f: F, x0: [f64; D], step: [f64; D]) -> Minimum<D>
    where
        F: Fn(&[f64; D]) -> f64,
    {
        let eval = |x: &[f64; D]| {
            let v = f(x);
            if v.is_nan() {
                f64::INFINITY
            } else {
                v
            }
        };
        let mut simplex: Vec<([f64; D], f64)> = Vec::with_capacity(D + 1);
        simplex.push((x0, eval(&x0)));
        for i in 0..D {
            let mut x = x0;
            x[i] += step[i];
            simplex.push((x, eval(&x)));
        }

        let mut iterations = 0;
        loop {
            simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
            let (best, fbest) = simplex[0];
            let spread_ok = simplex.iter().all(|(x, _)| {
                (0..D).all(|i| (x[i] - best[i]).abs() <= self.xtol * (1.0 + best[i].abs()))
            });
            let fspread = simplex[D].1 - fbest;
            if spread_ok && fspread <= self.ftol * (1.0 + fbest.abs()) || (spread_ok && !fspread.is_finite()) {
                return Minimum {
                    x: best,
                    f: fbest,
                    iterations,
                    converged: true,
                };
            }
            if iterations >= self.max_iter {
                return Minimum {
                    x: best,
                    f: fbest,
                    iterations,
                    converged: false,
                };
            }
            iterations += 1;

            let mut centroid = [0.0; D];
            for (x, _) in &simplex[..D] {
                for i in 0..D {
                    centroid[i] += x[i] / D as f64;
                }
            }
            let (worst, fworst) = simplex[D];
            let reflected = lerp(&centroid, &worst, -1.0);
            let fr = eval(&reflected);
            if fr < fbest {
                let expanded = lerp(&centroid, &worst, -2.0);
                let fe = eval(&expanded);
                simplex[D] = if fe < fr { (expanded, fe) } else { (reflected, fr) };
            } else if fr < simplex[D - 1].1 {
                simplex[D] = (reflected, fr);
            } else {
                let (contracted, fc) = if fr < fworst {
                    let c = lerp(&centroid, &worst, -0.5);
                    (c, eval(&c))
                } else {
                    let c = lerp(&centroid, &worst, 0.5);
                    (c, eval(&c))
                };
                if fc < fworst.min(fr) {
                    simplex[D] = (contracted, fc);
                } else {
                    for v in simplex.iter_mut().skip(1) {
                        let x = lerp(&best, &v.0, 0.5);
                        *v = (x, eval(&x));
                    }
                }
            }
        }
    }
}

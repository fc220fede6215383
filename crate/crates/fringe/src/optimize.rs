//! Derivative-free simplex minimizer with a strict evaluation budget.
//!
//! Written in-crate rather than pulled in as a dependency because the
//! studies need two guarantees most library implementations do not make:
//! the objective is never called more than `max_fev` times, and the
//! running best value is recorded after every single call so progress
//! curves can be exported.

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

/// Nelder-Mead parameters. Reflection 1, expansion 2, contraction 1/2,
/// shrink 1/2; the classic coefficients.
#[derive(Debug, Clone)]
pub struct NelderMead {
    /// Hard cap on objective evaluations per run.
    pub max_fev: usize,
    /// Stop when the simplex collapses below this coordinate spread.
    pub xatol: f64,
    /// Stop when objective values across the simplex agree to this.
    pub fatol: f64,
}

impl Default for NelderMead {
    fn default() -> Self {
        NelderMead {
            max_fev: 20,
            xatol: 1e-6,
            fatol: 1e-8,
        }
    }
}

#[derive(Debug, Clone)]
pub struct NmResult {
    pub x: Vec<f64>,
    pub cost: f64,
    pub evals: usize,
    /// Running best cost after each evaluation; non-increasing.
    pub best_trace: Vec<f64>,
}

struct Budget<'a, F> {
    f: &'a mut F,
    left: usize,
    used: usize,
    best: f64,
    best_x: Vec<f64>,
    trace: Vec<f64>,
}

impl<'a, F: FnMut(&[f64]) -> f64> Budget<'a, F> {
    fn eval(&mut self, x: &[f64]) -> Option<f64> {
        if self.left == 0 {
            return None;
        }
        self.left -= 1;
        self.used += 1;
        let v = (self.f)(x);
        if v < self.best {
            self.best = v;
            self.best_x = x.to_vec();
        }
        self.trace.push(self.best);
        Some(v)
    }
}

impl NelderMead {
    pub fn minimize<F>(&self, f: &mut F, x0: &[f64]) -> NmResult
    where
        F: FnMut(&[f64]) -> f64,
    {
        let n = x0.len();
        assert!(n > 0, "empty parameter vector");
        let mut budget = Budget {
            f,
            left: self.max_fev,
            used: 0,
            best: f64::INFINITY,
            best_x: x0.to_vec(),
            trace: Vec::with_capacity(self.max_fev),
        };

        // Initial simplex: x0 plus one vertex per axis, displaced by 5%
        // of the coordinate (or a small absolute step at zero).
        let mut simplex: Vec<(Vec<f64>, f64)> = Vec::with_capacity(n + 1);
        'init: {
            let Some(v0) = budget.eval(x0) else {
                break 'init;
            };
            simplex.push((x0.to_vec(), v0));
            for k in 0..n {
                let mut y = x0.to_vec();
                y[k] = if y[k] != 0.0 { 1.05 * y[k] } else { 2.5e-4 };
                let Some(v) = budget.eval(&y) else {
                    break 'init;
                };
                simplex.push((y, v));
            }
        }

        if simplex.len() == n + 1 {
            self.iterate(&mut simplex, &mut budget, n);
        }

        NmResult {
            x: budget.best_x,
            cost: budget.best,
            evals: budget.used,
            best_trace: budget.trace,
        }
    }

    fn iterate<F>(&self, simplex: &mut [(Vec<f64>, f64)], budget: &mut Budget<F>, n: usize)
    where
        F: FnMut(&[f64]) -> f64,
    {
        loop {
            simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
            let fbest = simplex[0].1;
            let fworst = simplex[n].1;
            let xspread = simplex[1..]
                .iter()
                .flat_map(|(x, _)| x.iter().zip(&simplex[0].0).map(|(a, b)| (a - b).abs()))
                .fold(0.0f64, f64::max);
            if (fworst - fbest).abs() <= self.fatol && xspread <= self.xatol {
                return;
            }

            let centroid: Vec<f64> = (0..n)
                .map(|d| simplex[..n].iter().map(|(x, _)| x[d]).sum::<f64>() / n as f64)
                .collect();
            let worst = simplex[n].0.clone();
            let lerp = |t: f64| -> Vec<f64> {
                centroid
                    .iter()
                    .zip(&worst)
                    .map(|(c, w)| c + t * (c - w))
                    .collect()
            };

            let xr = lerp(1.0);
            let Some(fr) = budget.eval(&xr) else { return };

            if fr < simplex[0].1 {
                let xe = lerp(2.0);
                let Some(fe) = budget.eval(&xe) else {
                    simplex[n] = (xr, fr);
                    return;
                };
                simplex[n] = if fe < fr { (xe, fe) } else { (xr, fr) };
            } else if fr < simplex[n - 1].1 {
                simplex[n] = (xr, fr);
            } else if fr < simplex[n].1 {
                // Outside contraction.
                let xc = lerp(0.5);
                let Some(fc) = budget.eval(&xc) else { return };
                if fc <= fr {
                    simplex[n] = (xc, fc);
                } else if !self.shrink(simplex, budget, n) {
                    return;
                }
            } else {
                // Inside contraction.
                let xc = lerp(-0.5);
                let Some(fc) = budget.eval(&xc) else { return };
                if fc < simplex[n].1 {
                    simplex[n] = (xc, fc);
                } else if !self.shrink(simplex, budget, n) {
                    return;
                }
            }
        }
    }

    fn shrink<F>(&self, simplex: &mut [(Vec<f64>, f64)], budget: &mut Budget<F>, n: usize) -> bool
    where
        F: FnMut(&[f64]) -> f64,
    {
        let best = simplex[0].0.clone();
        for item in simplex.iter_mut().skip(1).take(n) {
            let y: Vec<f64> = best
                .iter()
                .zip(&item.0)
                .map(|(b, x)| b + 0.5 * (x - b))
                .collect();
            let Some(v) = budget.eval(&y) else {
                return false;
            };
            *item = (y, v);
        }
        true
    }
}

/// One restart start point: `base` plus a fresh random direction of unit
/// length. Keeps restarts on the same scale while breaking symmetry.
pub fn restart_point<R: Rng>(base: &[f64], rng: &mut R) -> Vec<f64> {
    let g: Vec<f64> = base.iter().map(|_| StandardNormal.sample(rng)).collect();
    let norm = g.iter().map(|v| v * v).sum::<f64>().sqrt().max(1e-12);
    base.iter().zip(&g).map(|(b, v)| b + v / norm).collect()
}

/// Run `restarts` independent minimizations and return the results sorted
/// by cost. Each restart gets its own RNG stream, so the set of start
/// points is reproducible and independent of execution order.
pub fn minimize_restarts<F>(
    nm: &NelderMead,
    f: &mut F,
    base: &[f64],
    restarts: usize,
    master: u64,
    stream0: u64,
) -> Vec<NmResult>
where
    F: FnMut(&[f64]) -> f64,
{
    let mut out: Vec<NmResult> = (0..restarts.max(1))
        .map(|r| {
            let mut rng = crate::sampling::rng_for(master, stream0 + r as u64);
            let x0 = restart_point(base, &mut rng);
            nm.minimize(f, &x0)
        })
        .collect();
    out.sort_by(|a, b| a.cost.total_cmp(&b.cost));
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bowl(x: &[f64]) -> f64 {
        (x[0] - 1.0).powi(2) + 2.0 * (x[1] + 0.5).powi(2) + (x[2] - 2.0).powi(2)
    }

    #[test]
    fn converges_on_quadratic() {
        let nm = NelderMead {
            max_fev: 400,
            ..NelderMead::default()
        };
        let r = nm.minimize(&mut |x: &[f64]| bowl(x), &[0.3, 0.3, 0.3]);
        assert!(r.cost < 1e-6, "cost {}", r.cost);
        assert!((r.x[0] - 1.0).abs() < 1e-3);
        assert!((r.x[1] + 0.5).abs() < 1e-3);
        assert!((r.x[2] - 2.0).abs() < 1e-3);
    }

    #[test]
    fn budget_is_never_exceeded() {
        for cap in [1, 2, 5, 20, 57] {
            let mut calls = 0usize;
            let nm = NelderMead {
                max_fev: cap,
                ..NelderMead::default()
            };
            let r = nm.minimize(
                &mut |x: &[f64]| {
                    calls += 1;
                    bowl(x)
                },
                &[4.0, -3.0, 0.0],
            );
            assert!(calls <= cap, "cap {cap} but {calls} calls");
            assert_eq!(r.evals, calls);
            assert_eq!(r.best_trace.len(), calls);
        }
    }

    #[test]
    fn best_trace_is_non_increasing() {
        let nm = NelderMead {
            max_fev: 150,
            ..NelderMead::default()
        };
        let r = nm.minimize(&mut |x: &[f64]| bowl(x), &[3.0, 3.0, 3.0]);
        for w in r.best_trace.windows(2) {
            assert!(w[1] <= w[0]);
        }
        assert_eq!(r.cost, *r.best_trace.last().unwrap());
    }

    #[test]
    fn restarts_are_deterministic_and_sorted() {
        let nm = NelderMead {
            max_fev: 60,
            ..NelderMead::default()
        };
        let base = [std::f64::consts::FRAC_PI_2; 3];
        let a = minimize_restarts(&nm, &mut |x: &[f64]| bowl(x), &base, 4, 7, 0);
        let b = minimize_restarts(&nm, &mut |x: &[f64]| bowl(x), &base, 4, 7, 0);
        assert_eq!(a.len(), 4);
        for (ra, rb) in a.iter().zip(&b) {
            assert_eq!(ra.x, rb.x);
            assert_eq!(ra.cost, rb.cost);
        }
        for w in a.windows(2) {
            assert!(w[0].cost <= w[1].cost);
        }
    }

    #[test]
    fn escapes_flat_basin_with_restarts() {
        // Two basins; the deeper one is offset. A single run from the
        // base point can stall in the shallow basin, restarts find the
        // deep one.
        let two_basins = |x: &[f64]| {
            let a = (x[0] - 2.0).powi(2) + (x[1] - 2.0).powi(2) + (x[2] - 2.0).powi(2);
            let b = x[0].powi(2) + x[1].powi(2) + x[2].powi(2) + 0.5;
            a.min(b)
        };
        let nm = NelderMead {
            max_fev: 80,
            ..NelderMead::default()
        };
        let base = [std::f64::consts::FRAC_PI_2; 3];
        let rs = minimize_restarts(&nm, &mut |x: &[f64]| two_basins(x), &base, 6, 3, 0);
        assert!(rs[0].cost < 0.05, "best cost {}", rs[0].cost);
    }
}

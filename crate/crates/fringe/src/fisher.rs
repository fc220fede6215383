//! Classical and quantum Fisher information.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::circuit::{Interferometer, Probe};
use crate::exec;
use crate::fock;
use crate::sampling;
use crate::shift::ShiftRule;

/// Outcomes with probability below this floor carry no usable score and
/// are dropped from information sums.
const PROB_FLOOR: f64 = 1e-12;

/// Cost assigned to a singular or indefinite information matrix, so that
/// optimizers steer away from degenerate settings instead of crashing.
pub const SINGULAR_COST: f64 = 1e6;

/// Classical Fisher information matrix of a categorical response model at
/// `x`, with derivatives taken by the given shift rule.
pub fn fim<F>(model: &F, x: &[f64], rule: &ShiftRule) -> DMatrix<f64>
where
    F: Fn(&[f64]) -> Vec<f64>,
{
    let p = model(x);
    let grads: Vec<Vec<f64>> = (0..x.len())
        .map(|axis| rule.derivative(model, x, axis))
        .collect();
    fim_from_parts(&p, &grads)
}

/// `F[j,k] = sum_o g_j[o] g_k[o] / p[o]` over outcomes above the floor.
pub fn fim_from_parts(p: &[f64], grads: &[Vec<f64>]) -> DMatrix<f64> {
    let dim = grads.len();
    let mut f = DMatrix::zeros(dim, dim);
    for (o, &po) in p.iter().enumerate() {
        if po <= PROB_FLOOR {
            continue;
        }
        for j in 0..dim {
            for k in j..dim {
                f[(j, k)] += grads[j][o] * grads[k][o] / po;
            }
        }
    }
    for j in 0..dim {
        for k in 0..j {
            f[(j, k)] = f[(k, j)];
        }
    }
    f
}

/// Monte Carlo estimate of the FIM: the base distribution and every
/// shifted distribution the rule needs are each replaced by the empirical
/// frequencies of `n` draws. Streams are derived per distribution, so the
/// result is independent of evaluation order and thread count.
pub fn fim_sampled<F>(
    model: &F,
    x: &[f64],
    rule: &ShiftRule,
    n: u64,
    master: u64,
    stream0: u64,
) -> DMatrix<f64>
where
    F: Fn(&[f64]) -> Vec<f64> + Sync,
{
    let dim = x.len();
    let shifts = rule.shifts();
    let per_axis = shifts.len();
    // Distribution 0 is the base point; then axis-major shifted points.
    let freqs = exec::map_indexed(1 + dim * per_axis, |i| {
        let mut xs = x.to_vec();
        if i > 0 {
            let axis = (i - 1) / per_axis;
            xs[axis] += shifts[(i - 1) % per_axis];
        }
        let p = model(&xs);
        sampling::sample_freqs(&p, n, &mut sampling::rng_for(master, stream0 + i as u64))
    });
    let grads: Vec<Vec<f64>> = (0..dim)
        .map(|axis| {
            let mut g = vec![0.0; freqs[0].len()];
            for (t, &(coeff, _)) in rule.terms.iter().enumerate() {
                let fr = &freqs[1 + axis * per_axis + t];
                for (gi, &v) in g.iter_mut().zip(fr) {
                    *gi += coeff * v;
                }
            }
            g
        })
        .collect();
    fim_from_parts(&freqs[0], &grads)
}

/// `Tr[F^-1]`, or `None` when `F` is singular.
pub fn trace_inverse(f: &DMatrix<f64>) -> Option<f64> {
    let inv = f.clone().try_inverse()?;
    let t = inv.trace();
    (t.is_finite() && t > 0.0).then_some(t)
}

/// `Tr[F^-1]` with the singular sentinel substituted, for use as an
/// optimization objective.
pub fn trace_inverse_cost(f: &DMatrix<f64>) -> f64 {
    trace_inverse(f).map_or(SINGULAR_COST, |t| t.min(SINGULAR_COST))
}

/// Eigenvalues of a symmetric matrix, ascending.
pub fn sym_eigenvalues(f: &DMatrix<f64>) -> Vec<f64> {
    let mut ev: Vec<f64> = f
        .clone()
        .symmetric_eigen()
        .eigenvalues
        .iter()
        .copied()
        .collect();
    ev.sort_by(|a, b| a.total_cmp(b));
    ev
}

/// Quantum Fisher information of the probe state over the shifter phases.
///
/// The shifters act after the fan-out section as `exp(i n_j x_j)`, with
/// `n_j` the photon number in mode `j` at the shifter plane. For a pure
/// probe the QFIM is `4 Cov(n)` in that state, independent of the phase
/// values themselves. A fully distinguishable pair is a product of two
/// single-photon states, so its information is additive. For partial
/// overlap the state is mixed and this returns the convex combination of
/// the two pure-case matrices, which upper-bounds the true value (the
/// QFIM is convex in the state), keeping the bound usable.
pub fn qfim(interf: &Interferometer, probe: Probe) -> DMatrix<f64> {
    match probe {
        Probe::Single { input } => qfim_single(interf, input),
        Probe::Pair { inputs, overlap } => {
            let dist = qfim_single(interf, inputs[0]) + qfim_single(interf, inputs[1]);
            if overlap == 0.0 {
                dist
            } else {
                let indist = qfim_pair_indist(interf, inputs);
                indist * overlap + dist * (1.0 - overlap)
            }
        }
    }
}

fn qfim_single(interf: &Interferometer, input: usize) -> DMatrix<f64> {
    let a = interf.fan_out();
    let dim = interf.phased;
    let q: Vec<f64> = (0..dim).map(|j| a[(j, input)].norm_sqr()).collect();
    DMatrix::from_fn(dim, dim, |j, k| {
        let d = if j == k { q[j] } else { 0.0 };
        4.0 * (d - q[j] * q[k])
    })
}

fn qfim_pair_indist(interf: &Interferometer, inputs: [usize; 2]) -> DMatrix<f64> {
    let a = interf.fan_out();
    let modes = interf.modes;
    let dim = interf.phased;
    let c1: Vec<Complex64> = (0..modes).map(|k| a[(k, inputs[0])]).collect();
    let c2: Vec<Complex64> = (0..modes).map(|k| a[(k, inputs[1])]).collect();
    // Two-photon state at the shifter plane in the unordered basis.
    let outcomes = fock::pair_outcomes(modes);
    let weights: Vec<f64> = outcomes
        .iter()
        .map(|&(k, l)| {
            if k == l {
                2.0 * (c1[k] * c2[k]).norm_sqr()
            } else {
                (c1[k] * c2[l] + c1[l] * c2[k]).norm_sqr()
            }
        })
        .collect();
    let occupancy =
        |j: usize, (k, l): (usize, usize)| -> f64 { (k == j) as u8 as f64 + (l == j) as u8 as f64 };
    let mean: Vec<f64> = (0..dim)
        .map(|j| {
            outcomes
                .iter()
                .zip(&weights)
                .map(|(&o, &w)| w * occupancy(j, o))
                .sum()
        })
        .collect();
    DMatrix::from_fn(dim, dim, |j, k| {
        let e: f64 = outcomes
            .iter()
            .zip(&weights)
            .map(|(&o, &w)| w * occupancy(j, o) * occupancy(k, o))
            .sum();
        4.0 * (e - mean[j] * mean[k])
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::NoiseConfig;
    use crate::fock::Response;
    use approx::assert_abs_diff_eq;

    fn pair_model(overlap: f64) -> impl Fn(&[f64]) -> Vec<f64> {
        let dev = Interferometer::four_mode();
        let r = Response::new(
            &dev,
            Probe::Pair {
                inputs: [0, 1],
                overlap,
            },
            NoiseConfig::default(),
        );
        move |x: &[f64]| r.probs_at(x)
    }

    #[test]
    fn fim_is_symmetric_and_matches_finite_difference() {
        let model = pair_model(0.37);
        let x = [0.409, -1.9039, 1.596];
        let f = fim(&model, &x, &ShiftRule::four_term());
        assert!((f.clone() - f.transpose()).norm() < 1e-12);

        let h = 1e-6;
        for j in 0..3 {
            for k in 0..3 {
                let mut num = 0.0;
                let p = model(&x);
                let mut xp = x;
                let mut xm = x;
                xp[j] += h;
                xm[j] -= h;
                let gj: Vec<f64> = model(&xp)
                    .iter()
                    .zip(model(&xm))
                    .map(|(a, b)| (a - b) / (2.0 * h))
                    .collect();
                xp = x;
                xm = x;
                xp[k] += h;
                xm[k] -= h;
                let gk: Vec<f64> = model(&xp)
                    .iter()
                    .zip(model(&xm))
                    .map(|(a, b)| (a - b) / (2.0 * h))
                    .collect();
                for o in 0..p.len() {
                    if p[o] > 1e-12 {
                        num += gj[o] * gk[o] / p[o];
                    }
                }
                assert_abs_diff_eq!(f[(j, k)], num, epsilon = 1e-4);
            }
        }
    }

    #[test]
    fn sampled_fim_is_deterministic_and_consistent() {
        let model = pair_model(1.0);
        let x = [1.0151, -1.1222, 0.7407];
        let rule = ShiftRule::four_term();
        let a = fim_sampled(&model, &x, &rule, 200_000, 11, 0);
        let b = fim_sampled(&model, &x, &rule, 200_000, 11, 0);
        assert_eq!(a, b);
        let exact = fim(&model, &x, &rule);
        assert!((a - exact).norm() < 0.15, "sampled FIM far from exact");
    }

    #[test]
    fn quantum_bound_traces_are_exact() {
        let dev = Interferometer::four_mode();
        let q1 = qfim(&dev, Probe::Single { input: 0 });
        assert_abs_diff_eq!(trace_inverse(&q1).unwrap(), 6.0, epsilon = 1e-9);

        let qp = qfim(
            &dev,
            Probe::Pair {
                inputs: [0, 1],
                overlap: 1.0,
            },
        );
        assert_abs_diff_eq!(trace_inverse(&qp).unwrap(), 2.5, epsilon = 1e-9);
        let ev = sym_eigenvalues(&qp);
        assert_abs_diff_eq!(ev[0], 2.0 - std::f64::consts::SQRT_2, epsilon = 1e-9);
        assert_abs_diff_eq!(ev[1], 2.0, epsilon = 1e-9);
        assert_abs_diff_eq!(ev[2], 2.0 + std::f64::consts::SQRT_2, epsilon = 1e-9);

        let qd = qfim(
            &dev,
            Probe::Pair {
                inputs: [0, 1],
                overlap: 0.0,
            },
        );
        assert_abs_diff_eq!(trace_inverse(&qd).unwrap(), 3.0, epsilon = 1e-9);
    }

    #[test]
    fn singular_matrix_hits_sentinel() {
        let f = DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 1.0, 1.0]);
        assert_eq!(trace_inverse(&f), None);
        assert_eq!(trace_inverse_cost(&f), SINGULAR_COST);
    }
}

//! Bayesian phase estimation on a circular grid.
//!
//! The posterior lives on a regular lattice over the torus of shifter
//! settings, optionally restricted to a window around a rough prior
//! guess. Nodes sit at bin centers of the full-circle lattice, so a
//! windowed grid is always a subset of the unwindowed one and refining
//! the window never moves existing node positions.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::exec;
use crate::fock::Response;
use crate::sampling;

/// Map an angle to `(-pi, pi]`.
pub fn wrap_angle(x: f64) -> f64 {
    let two_pi = std::f64::consts::TAU;
    let y = x.rem_euclid(two_pi);
    if y > std::f64::consts::PI {
        y - two_pi
    } else {
        y
    }
}

/// Sum of squared wrapped differences between two phase vectors.
pub fn wrapped_sq_loss(est: &[f64], truth: &[f64]) -> f64 {
    est.iter()
        .zip(truth)
        .map(|(&e, &t)| wrap_angle(e - t).powi(2))
        .sum()
}

/// Restriction of the prior to a box on the torus.
#[derive(Debug, Clone)]
pub struct Window {
    pub center: Vec<f64>,
    pub halfwidth: f64,
}

#[derive(Debug, Clone)]
pub struct GridSpec {
    /// Nodes per full circle; bin width is `2 pi / points`.
    pub points: usize,
    pub window: Option<Window>,
}

impl GridSpec {
    pub fn full(points: usize) -> Self {
        GridSpec {
            points,
            window: None,
        }
    }

    pub fn windowed(points: usize, center: &[f64], halfwidth: f64) -> Self {
        GridSpec {
            points,
            window: Some(Window {
                center: center.to_vec(),
                halfwidth,
            }),
        }
    }
}

#[derive(Debug, Clone)]
struct Axis {
    nodes: Vec<f64>,
    /// Full-lattice index of each node, same order as `nodes`.
    lattice: Vec<usize>,
    /// lattice index -> local node index.
    local: Vec<Option<u32>>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CircStats {
    pub mean: f64,
    /// Length of the mean resultant vector in [0, 1]; near zero for a
    /// spread-out posterior, near one for a concentrated one.
    pub resultant: f64,
}

#[derive(Debug, Clone)]
pub struct PointEstimate {
    pub means: Vec<f64>,
    pub resultants: Vec<f64>,
    /// Set when any axis has too little concentration for the circular
    /// mean to be meaningful (for example, no data was seen).
    pub degenerate: bool,
}

#[derive(Debug, Clone, Copy)]
pub struct Peak {
    pub location: f64,
    /// Probability density (mass per radian) at the interpolated peak.
    pub density: f64,
}

#[derive(Debug, Clone)]
pub struct PosteriorGrid {
    axes: Vec<Axis>,
    dims: Vec<usize>,
    logw: Vec<f64>,
    bin: f64,
}

impl PosteriorGrid {
    pub fn new(dim: usize, spec: &GridSpec) -> Result<Self> {
        if spec.points < 4 {
            return Err(Error::InvalidParameter(format!(
                "grid needs at least 4 points per circle, got {}",
                spec.points
            )));
        }
        if let Some(w) = &spec.window {
            if w.center.len() != dim {
                return Err(Error::InvalidParameter(format!(
                    "window center has {} entries for {dim} axes",
                    w.center.len()
                )));
            }
            if !w.halfwidth.is_finite() || w.halfwidth <= 0.0 || w.halfwidth > std::f64::consts::PI
            {
                return Err(Error::InvalidParameter(format!(
                    "window halfwidth {} outside (0, pi]",
                    w.halfwidth
                )));
            }
        }
        let g = spec.points;
        let bin = std::f64::consts::TAU / g as f64;
        let mut axes = Vec::with_capacity(dim);
        for d in 0..dim {
            let mut nodes = Vec::new();
            let mut lattice = Vec::new();
            let mut local = vec![None; g];
            for (i, slot) in local.iter_mut().enumerate() {
                let x = -std::f64::consts::PI + (i as f64 + 0.5) * bin;
                let keep = match &spec.window {
                    None => true,
                    Some(w) => wrap_angle(x - w.center[d]).abs() <= w.halfwidth + 1e-12,
                };
                if keep {
                    *slot = Some(nodes.len() as u32);
                    nodes.push(x);
                    lattice.push(i);
                }
            }
            if nodes.is_empty() {
                return Err(Error::InvalidParameter(
                    "window keeps no grid nodes; widen it or raise the point count".into(),
                ));
            }
            axes.push(Axis {
                nodes,
                lattice,
                local,
            });
        }
        let dims: Vec<usize> = axes.iter().map(|a| a.nodes.len()).collect();
        let total: usize = dims.iter().product();
        let logw = vec![-(total as f64).ln(); total];
        Ok(PosteriorGrid {
            axes,
            dims,
            logw,
            bin,
        })
    }

    pub fn dim(&self) -> usize {
        self.axes.len()
    }

    pub fn node_count(&self) -> usize {
        self.logw.len()
    }

    pub fn bin_width(&self) -> f64 {
        self.bin
    }

    pub fn axis_nodes(&self, d: usize) -> &[f64] {
        &self.axes[d].nodes
    }

    fn strides(&self) -> Vec<usize> {
        let mut s = vec![1; self.dims.len()];
        for d in (0..self.dims.len().saturating_sub(1)).rev() {
            s[d] = s[d + 1] * self.dims[d + 1];
        }
        s
    }

    /// Multiply in the likelihood of observed `counts` under `model`
    /// with measurement offsets `theta`, then renormalize. Counts are
    /// real-valued so expected-count (infinite-data) updates work too.
    pub fn update(&mut self, model: &Response, theta: &[f64], counts: &[f64]) -> Result<()> {
        let dim = self.dim();
        assert_eq!(theta.len(), dim, "theta length mismatch");
        let drift = model.phase_drift();
        // Per-axis phase factors with theta and drift folded in.
        let factors: Vec<Vec<Complex64>> = (0..dim)
            .map(|d| {
                self.axes[d]
                    .nodes
                    .iter()
                    .map(|&x| Complex64::from_polar(1.0, x + theta[d] + drift))
                    .collect()
            })
            .collect();
        let used: Vec<(usize, f64)> = counts
            .iter()
            .enumerate()
            .filter(|(_, &c)| c != 0.0)
            .map(|(o, &c)| (o, c))
            .collect();
        let strides = self.strides();
        let slab = self.node_count() / self.dims[0];
        let ll_chunks = exec::map_indexed(self.dims[0], |i0| {
            let mut scratch = model.make_scratch();
            let mut fac = vec![Complex64::ZERO; dim];
            fac[0] = factors[0][i0];
            let mut out = Vec::with_capacity(slab);
            for rest in 0..slab {
                for d in 1..dim {
                    fac[d] = factors[d][(rest / strides[d]) % self.dims[d]];
                }
                let p = model.probs_from_factors(&fac, &mut scratch);
                let mut ll = 0.0;
                for &(o, c) in &used {
                    if p[o] > 0.0 {
                        ll += c * p[o].ln();
                    } else {
                        ll = f64::NEG_INFINITY;
                        break;
                    }
                }
                out.push(ll);
            }
            out
        });
        for (flat, ll) in ll_chunks.into_iter().flatten().enumerate() {
            self.logw[flat] += ll;
        }
        self.renormalize()
    }

    fn renormalize(&mut self) -> Result<()> {
        let m = self.logw.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if !m.is_finite() {
            return Err(Error::DegeneratePosterior);
        }
        let sum: f64 = self.logw.iter().map(|&w| (w - m).exp()).sum();
        let lse = m + sum.ln();
        for w in self.logw.iter_mut() {
            *w -= lse;
        }
        Ok(())
    }

    pub fn weights(&self) -> Vec<f64> {
        self.logw.iter().map(|&w| w.exp()).collect()
    }

    pub fn entropy(&self) -> f64 {
        -self
            .logw
            .iter()
            .map(|&lw| {
                let w = lw.exp();
                if w > 0.0 {
                    w * lw
                } else {
                    0.0
                }
            })
            .sum::<f64>()
    }

    /// Per-node mass of the marginal on axis `d`.
    pub fn marginal(&self, d: usize) -> Vec<f64> {
        let strides = self.strides();
        let mut m = vec![0.0; self.dims[d]];
        for (flat, &lw) in self.logw.iter().enumerate() {
            m[(flat / strides[d]) % self.dims[d]] += lw.exp();
        }
        m
    }

    pub fn circular_stats(&self, d: usize) -> CircStats {
        let m = self.marginal(d);
        let mut z = Complex64::ZERO;
        for (&w, &x) in m.iter().zip(&self.axes[d].nodes) {
            z += w * Complex64::from_polar(1.0, x);
        }
        CircStats {
            mean: z.arg(),
            resultant: z.norm(),
        }
    }

    pub fn point_estimate(&self) -> PointEstimate {
        let stats: Vec<CircStats> = (0..self.dim()).map(|d| self.circular_stats(d)).collect();
        let degenerate = stats.iter().any(|s| s.resultant < 0.05);
        PointEstimate {
            means: stats.iter().map(|s| s.mean).collect(),
            resultants: stats.iter().map(|s| s.resultant).collect(),
            degenerate,
        }
    }

    fn node_coords(&self, flat: usize) -> Vec<f64> {
        let strides = self.strides();
        (0..self.dim())
            .map(|d| self.axes[d].nodes[(flat / strides[d]) % self.dims[d]])
            .collect()
    }

    /// Coordinates of the maximum a posteriori node.
    pub fn map_node(&self) -> Vec<f64> {
        let (flat, _) = self
            .logw
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(b.1))
            .expect("non-empty grid");
        self.node_coords(flat)
    }

    /// Total mass at nodes whose wrapped distance from `center` exceeds
    /// `radius` on at least one axis. Measures how multimodal or
    /// heavy-tailed the posterior is around a claimed peak.
    pub fn mass_outside(&self, center: &[f64], radius: f64) -> f64 {
        let strides = self.strides();
        self.logw
            .iter()
            .enumerate()
            .filter(|(flat, _)| {
                (0..self.dim()).any(|d| {
                    let x = self.axes[d].nodes[(flat / strides[d]) % self.dims[d]];
                    wrap_angle(x - center[d]).abs() > radius
                })
            })
            .map(|(_, &lw)| lw.exp())
            .sum()
    }

    /// Location and density of the marginal's maximum on axis `d`,
    /// refined by fitting a parabola through the peak node and its two
    /// lattice neighbours when both lie inside the grid.
    pub fn marginal_peak(&self, d: usize) -> Peak {
        let m = self.marginal(d);
        let axis = &self.axes[d];
        let g = axis.local.len();
        let (imax, &mc) = m
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(b.1))
            .expect("non-empty axis");
        let lat = axis.lattice[imax];
        let left = axis.local[(lat + g - 1) % g].map(|i| m[i as usize]);
        let right = axis.local[(lat + 1) % g].map(|i| m[i as usize]);
        let (location, mass) = match (left, right) {
            (Some(ml), Some(mr)) => {
                let denom = ml - 2.0 * mc + mr;
                let delta = if denom.abs() > 1e-300 {
                    (0.5 * (ml - mr) / denom).clamp(-0.5, 0.5)
                } else {
                    0.0
                };
                (
                    wrap_angle(axis.nodes[imax] + delta * self.bin),
                    mc - 0.25 * (ml - mr) * delta,
                )
            }
            _ => (axis.nodes[imax], mc),
        };
        Peak {
            location,
            density: mass / self.bin,
        }
    }
}

/// One estimation run: draw `shots` outcomes from the data distribution,
/// feed them to the posterior in batches, report the estimate and the
/// entropy after each batch.
#[derive(Debug, Clone)]
pub struct TrialConfig {
    pub shots: u64,
    pub batches: usize,
    pub theta: Vec<f64>,
    pub grid: GridSpec,
}

#[derive(Debug, Clone)]
pub struct TrialResult {
    pub estimate: PointEstimate,
    pub loss: f64,
    /// Prior entropy followed by the entropy after each batch.
    pub entropy: Vec<f64>,
    pub counts: Vec<u64>,
    /// False when `shots == 0`: the result is the prior, not an
    /// estimate, and `estimate.degenerate` should be honoured.
    pub updated: bool,
}

/// `data` generates the counts (it may carry drift or reduced
/// visibility the estimator does not know about); `model` is what the
/// posterior assumes. Pass the same response twice for the ideal case.
pub fn run_trial(
    data: &Response,
    model: &Response,
    truth: &[f64],
    cfg: &TrialConfig,
    master: u64,
    stream: u64,
) -> Result<TrialResult> {
    if cfg.batches == 0 {
        return Err(Error::InvalidParameter("batches must be at least 1".into()));
    }
    let mut grid = PosteriorGrid::new(truth.len(), &cfg.grid)?;
    let p_data = data.probs(truth, &cfg.theta);
    let mut rng = sampling::rng_for(master, stream);
    let mut entropy = vec![grid.entropy()];
    let mut total = vec![0u64; p_data.len()];
    if cfg.shots > 0 {
        let base = cfg.shots / cfg.batches as u64;
        let extra = (cfg.shots % cfg.batches as u64) as usize;
        for b in 0..cfg.batches {
            let n = base + (b < extra) as u64;
            if n == 0 {
                entropy.push(grid.entropy());
                continue;
            }
            let counts = sampling::sample_counts(&p_data, n, &mut rng);
            let counts_f: Vec<f64> = counts.iter().map(|&c| c as f64).collect();
            grid.update(model, &cfg.theta, &counts_f)?;
            entropy.push(grid.entropy());
            for (t, c) in total.iter_mut().zip(&counts) {
                *t += c;
            }
        }
    }
    let estimate = grid.point_estimate();
    let loss = wrapped_sq_loss(&estimate.means, truth);
    Ok(TrialResult {
        estimate,
        loss,
        entropy,
        counts: total,
        updated: cfg.shots > 0,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::{coupler, Interferometer, NoiseConfig, Probe};
    use approx::assert_abs_diff_eq;
    use nalgebra::DMatrix;

    #[test]
    fn wrap_covers_the_circle() {
        assert_abs_diff_eq!(wrap_angle(0.3), 0.3, epsilon = 1e-15);
        assert_abs_diff_eq!(
            wrap_angle(3.5),
            3.5 - std::f64::consts::TAU,
            epsilon = 1e-12
        );
        assert_abs_diff_eq!(
            wrap_angle(-3.5),
            std::f64::consts::TAU - 3.5,
            epsilon = 1e-12
        );
        assert_abs_diff_eq!(
            wrap_angle(std::f64::consts::PI),
            std::f64::consts::PI,
            epsilon = 1e-15
        );
        assert_abs_diff_eq!(
            wrap_angle(7.0 * std::f64::consts::TAU + 0.1),
            0.1,
            epsilon = 1e-9
        );
    }

    #[test]
    fn nodes_sit_at_bin_centers() {
        let g = PosteriorGrid::new(1, &GridSpec::full(8)).unwrap();
        let nodes = g.axis_nodes(0);
        assert_eq!(nodes.len(), 8);
        let bin = std::f64::consts::TAU / 8.0;
        assert_abs_diff_eq!(nodes[0], -std::f64::consts::PI + 0.5 * bin, epsilon = 1e-15);
        assert_abs_diff_eq!(nodes[7], std::f64::consts::PI - 0.5 * bin, epsilon = 1e-12);
    }

    #[test]
    fn window_is_a_sublattice() {
        let center = [1.856, -1.782, -0.896];
        let full = PosteriorGrid::new(3, &GridSpec::full(120)).unwrap();
        let win = PosteriorGrid::new(3, &GridSpec::windowed(120, &center, 1.0)).unwrap();
        assert!(win.node_count() < full.node_count());
        for (d, &c) in center.iter().enumerate() {
            for &x in win.axis_nodes(d) {
                assert!(full.axis_nodes(d).iter().any(|&y| (x - y).abs() < 1e-12));
                assert!(wrap_angle(x - c).abs() <= 1.0 + 1e-9);
            }
        }
        // Prior is uniform and normalized.
        let w = win.weights();
        assert_abs_diff_eq!(w.iter().sum::<f64>(), 1.0, epsilon = 1e-12);
        let spread = w
            .iter()
            .fold((1.0f64, 0.0f64), |(lo, hi), &v| (lo.min(v), hi.max(v)));
        assert!(spread.1 - spread.0 < 1e-15);
    }

    #[test]
    fn posterior_concentrates_on_truth() {
        let dev = Interferometer::four_mode();
        let truth = [0.409, -1.9039, 1.596];
        let model =
            crate::fock::Response::new(&dev, Probe::Single { input: 0 }, NoiseConfig::default());
        let theta = [0.0; 3];
        let p = model.probs(&truth, &theta);
        let counts: Vec<f64> = p.iter().map(|&x| 20_000.0 * x).collect();
        let mut grid = PosteriorGrid::new(3, &GridSpec::windowed(120, &truth, 1.0)).unwrap();
        let prior_entropy = grid.entropy();
        grid.update(&model, &theta, &counts).unwrap();
        assert!(grid.entropy() < prior_entropy);
        let est = grid.point_estimate();
        assert!(!est.degenerate);
        for (d, &t) in truth.iter().enumerate() {
            assert!(
                wrap_angle(est.means[d] - t).abs() < 0.06,
                "axis {d}: {} vs {t}",
                est.means[d]
            );
            let peak = grid.marginal_peak(d);
            assert!(wrap_angle(peak.location - t).abs() < 0.06);
            assert!(peak.density > 1.0);
        }
    }

    #[test]
    fn impossible_counts_are_reported() {
        // Two identical photons into one coupler never produce a
        // coincidence, so claiming to have seen some must fail loudly.
        let dev =
            Interferometer::from_sections(coupler(2, 0, 1), DMatrix::identity(2, 2), 1).unwrap();
        let model = crate::fock::Response::new(
            &dev,
            Probe::Pair {
                inputs: [0, 1],
                overlap: 1.0,
            },
            NoiseConfig::default(),
        );
        let mut grid = PosteriorGrid::new(1, &GridSpec::full(60)).unwrap();
        let err = grid.update(&model, &[0.0], &[0.0, 5.0, 0.0]).unwrap_err();
        assert!(matches!(err, Error::DegeneratePosterior));
    }

    #[test]
    fn trial_is_deterministic_and_flags_no_data() {
        let dev = Interferometer::four_mode();
        let truth = [1.0151, -1.1222, 0.7407];
        let resp =
            crate::fock::Response::new(&dev, Probe::Single { input: 0 }, NoiseConfig::default());
        let cfg = TrialConfig {
            shots: 400,
            batches: 4,
            theta: vec![0.0; 3],
            grid: GridSpec::windowed(120, &truth, 1.0),
        };
        let a = run_trial(&resp, &resp, &truth, &cfg, 5, 0).unwrap();
        let b = run_trial(&resp, &resp, &truth, &cfg, 5, 0).unwrap();
        assert_eq!(a.estimate.means, b.estimate.means);
        assert_eq!(a.entropy, b.entropy);
        assert_eq!(a.counts, b.counts);
        assert_eq!(a.entropy.len(), 5);
        assert!(a.updated);
        assert!(a.loss < 0.5);

        let empty = TrialConfig {
            shots: 0,
            ..cfg.clone()
        };
        let e = run_trial(&resp, &resp, &truth, &empty, 5, 0).unwrap();
        assert!(!e.updated);
        assert_eq!(e.entropy.len(), 1);
        assert_eq!(e.counts.iter().sum::<u64>(), 0);
    }

    #[test]
    fn full_circle_uniform_estimate_is_degenerate() {
        let grid = PosteriorGrid::new(2, &GridSpec::full(40)).unwrap();
        let est = grid.point_estimate();
        assert!(est.degenerate);
        for r in est.resultants {
            assert!(r < 1e-10);
        }
    }
}

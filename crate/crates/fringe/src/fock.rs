//! Photon-counting outcome distributions for one- and two-photon probes.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::circuit::{Interferometer, NoiseConfig, Probe};

type CMat = DMatrix<Complex64>;

/// Unordered two-photon outcomes `(k, l)` with `k <= l`, row-major.
/// Diagonal entries are both photons in one port (bunching).
pub fn pair_outcomes(modes: usize) -> Vec<(usize, usize)> {
    let mut v = Vec::with_capacity(modes * (modes + 1) / 2);
    for k in 0..modes {
        for l in k..modes {
            v.push((k, l));
        }
    }
    v
}

pub fn outcome_count(modes: usize, probe: Probe) -> usize {
    match probe {
        Probe::Single { .. } => modes,
        Probe::Pair { .. } => modes * (modes + 1) / 2,
    }
}

/// Detection probabilities for one photon entering `input`.
pub fn single_probs(u: &CMat, input: usize) -> Vec<f64> {
    (0..u.nrows()).map(|k| u[(k, input)].norm_sqr()).collect()
}

/// Detection probabilities for one photon in each input port.
///
/// Identical photons interfere: the amplitude for `(k, l)` is the
/// permanent of the corresponding 2x2 submatrix. Distinguishable photons
/// contribute classically through their marginal distributions. Partial
/// overlap mixes the two distributions linearly.
pub fn pair_probs(u: &CMat, inputs: [usize; 2], overlap: f64) -> Vec<f64> {
    let modes = u.nrows();
    let [a, b] = inputs;
    let c1: Vec<Complex64> = (0..modes).map(|k| u[(k, a)]).collect();
    let c2: Vec<Complex64> = (0..modes).map(|k| u[(k, b)]).collect();
    pair_probs_from_amps(&c1, &c2, overlap)
}

/// Same as [`pair_probs`] but from the per-port output amplitude vectors.
pub fn pair_probs_from_amps(c1: &[Complex64], c2: &[Complex64], overlap: f64) -> Vec<f64> {
    let modes = c1.len();
    let q1: Vec<f64> = c1.iter().map(|z| z.norm_sqr()).collect();
    let q2: Vec<f64> = c2.iter().map(|z| z.norm_sqr()).collect();
    let mut out = Vec::with_capacity(modes * (modes + 1) / 2);
    for k in 0..modes {
        for l in k..modes {
            let (pi, pd) = if k == l {
                (2.0 * (c1[k] * c2[k]).norm_sqr(), q1[k] * q2[k])
            } else {
                let amp = c1[k] * c2[l] + c1[l] * c2[k];
                (amp.norm_sqr(), q1[k] * q2[l] + q1[l] * q2[k])
            };
            out.push(overlap * pi + (1.0 - overlap) * pd);
        }
    }
    out
}

/// Mix a distribution with the uniform one: `v * p + (1 - v) / n`.
pub fn apply_visibility(p: &mut [f64], visibility: f64) {
    if visibility >= 1.0 {
        return;
    }
    let floor = (1.0 - visibility) / p.len() as f64;
    for x in p.iter_mut() {
        *x = visibility * *x + floor;
    }
}

/// Output amplitudes of one input port as a function of the shifter
/// settings, in separated form:
///
/// `amp_k(x) = base_k + sum_j w[k][j] * exp(i x_j)`
///
/// This avoids rebuilding the full mode transform per evaluation, which
/// matters when scanning a posterior grid.
#[derive(Debug, Clone)]
pub struct ModeAmps {
    base: Vec<Complex64>,
    w: Vec<Vec<Complex64>>,
}

impl ModeAmps {
    pub fn new(interf: &Interferometer, input: usize) -> Self {
        let a = interf.fan_out();
        let b = interf.recombine();
        let m = interf.modes;
        let mut base = vec![Complex64::ZERO; m];
        let mut w = vec![vec![Complex64::ZERO; interf.phased]; m];
        for k in 0..m {
            for j in 0..m {
                let t = b[(k, j)] * a[(j, input)];
                if j < interf.phased {
                    w[k][j] = t;
                } else {
                    base[k] += t;
                }
            }
        }
        ModeAmps { base, w }
    }

    /// Evaluate from precomputed per-axis phase factors `exp(i x_j)`.
    pub fn amps_from_factors(&self, factors: &[Complex64], out: &mut [Complex64]) {
        for (k, o) in out.iter_mut().enumerate() {
            let mut acc = self.base[k];
            for (j, f) in factors.iter().enumerate() {
                acc += self.w[k][j] * f;
            }
            *o = acc;
        }
    }

    pub fn amps(&self, x: &[f64]) -> Vec<Complex64> {
        let factors: Vec<Complex64> = x.iter().map(|&p| Complex64::from_polar(1.0, p)).collect();
        let mut out = vec![Complex64::ZERO; self.base.len()];
        self.amps_from_factors(&factors, &mut out);
        out
    }
}

/// Precompiled probe response: maps shifter settings directly to the
/// outcome distribution.
#[derive(Debug, Clone)]
pub struct Response {
    probe_amps: ProbeAmps,
    modes: usize,
    outcomes: usize,
    visibility: f64,
    phase_drift: f64,
}

#[derive(Debug, Clone)]
enum ProbeAmps {
    Single(ModeAmps),
    Pair(ModeAmps, ModeAmps, f64),
}

impl Response {
    pub fn new(interf: &Interferometer, probe: Probe, noise: NoiseConfig) -> Self {
        let probe_amps = match probe {
            Probe::Single { input } => ProbeAmps::Single(ModeAmps::new(interf, input)),
            Probe::Pair { inputs, overlap } => ProbeAmps::Pair(
                ModeAmps::new(interf, inputs[0]),
                ModeAmps::new(interf, inputs[1]),
                overlap,
            ),
        };
        Response {
            probe_amps,
            modes: interf.modes,
            outcomes: outcome_count(interf.modes, probe),
            visibility: noise.visibility,
            phase_drift: noise.phase_drift,
        }
    }

    pub fn outcomes(&self) -> usize {
        self.outcomes
    }

    /// Distribution at probe phases `phases` with the measurement offsets
    /// `theta` added on, plus any calibration drift from the noise model.
    pub fn probs(&self, phases: &[f64], theta: &[f64]) -> Vec<f64> {
        let x: Vec<f64> = phases
            .iter()
            .zip(theta)
            .map(|(&p, &t)| p + t + self.phase_drift)
            .collect();
        self.probs_at(&x)
    }

    /// Distribution at effective shifter settings `x` (drift already
    /// folded in by the caller). Still applies the visibility floor.
    pub fn probs_at(&self, x: &[f64]) -> Vec<f64> {
        let mut p = match &self.probe_amps {
            ProbeAmps::Single(m) => m.amps(x).iter().map(|z| z.norm_sqr()).collect(),
            ProbeAmps::Pair(m1, m2, ov) => pair_probs_from_amps(&m1.amps(x), &m2.amps(x), *ov),
        };
        apply_visibility(&mut p, self.visibility);
        p
    }

    /// As [`Response::probs_at`] with shared precomputed phase factors,
    /// writing into caller-provided scratch. Grid-scan hot path.
    pub fn probs_from_factors(&self, factors: &[Complex64], scratch: &mut AmpScratch) -> Vec<f64> {
        let mut p = match &self.probe_amps {
            ProbeAmps::Single(m) => {
                m.amps_from_factors(factors, &mut scratch.a);
                scratch.a.iter().map(|z| z.norm_sqr()).collect()
            }
            ProbeAmps::Pair(m1, m2, ov) => {
                m1.amps_from_factors(factors, &mut scratch.a);
                m2.amps_from_factors(factors, &mut scratch.b);
                pair_probs_from_amps(&scratch.a, &scratch.b, *ov)
            }
        };
        apply_visibility(&mut p, self.visibility);
        p
    }

    pub fn phase_drift(&self) -> f64 {
        self.phase_drift
    }

    pub fn make_scratch(&self) -> AmpScratch {
        AmpScratch {
            a: vec![Complex64::ZERO; self.modes],
            b: vec![Complex64::ZERO; self.modes],
        }
    }
}

pub struct AmpScratch {
    a: Vec<Complex64>,
    b: Vec<Complex64>,
}

/// One-shot convenience wrapper over [`Response`].
pub fn response_probs(
    interf: &Interferometer,
    probe: Probe,
    noise: NoiseConfig,
    phases: &[f64],
    theta: &[f64],
) -> Vec<f64> {
    Response::new(interf, probe, noise).probs(phases, theta)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn sum(v: &[f64]) -> f64 {
        v.iter().sum()
    }

    #[test]
    fn outcome_order_is_upper_triangular() {
        assert_eq!(
            pair_outcomes(4),
            vec![
                (0, 0),
                (0, 1),
                (0, 2),
                (0, 3),
                (1, 1),
                (1, 2),
                (1, 3),
                (2, 2),
                (2, 3),
                (3, 3)
            ]
        );
    }

    #[test]
    fn distributions_normalize() {
        let dev = Interferometer::four_mode();
        let u = dev.unitary(&[0.409, -1.9039, 1.596]);
        assert_abs_diff_eq!(sum(&single_probs(&u, 0)), 1.0, epsilon = 1e-12);
        for ov in [0.0, 0.37, 1.0] {
            assert_abs_diff_eq!(sum(&pair_probs(&u, [0, 1], ov)), 1.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn identical_photons_coalesce_at_a_coupler() {
        // Textbook two-photon interference: both photons into one 50/50
        // coupler never exit in different ports; distinguishable photons
        // do so half the time.
        let c = crate::circuit::coupler(2, 0, 1);
        let p_id = pair_probs(&c, [0, 1], 1.0);
        let p_dist = pair_probs(&c, [0, 1], 0.0);
        assert_abs_diff_eq!(p_id[1], 0.0, epsilon = 1e-12); // (0,1) coincidence
        assert_abs_diff_eq!(p_dist[1], 0.5, epsilon = 1e-12);
        assert_abs_diff_eq!(p_id[0], 0.5, epsilon = 1e-12); // both in port 0
    }

    #[test]
    fn visibility_mixes_toward_uniform() {
        let mut p = vec![0.7, 0.2, 0.1, 0.0];
        apply_visibility(&mut p, 0.6);
        assert_abs_diff_eq!(p[0], 0.6 * 0.7 + 0.1, epsilon = 1e-12);
        assert_abs_diff_eq!(sum(&p), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn response_matches_direct_computation() {
        let dev = Interferometer::four_mode();
        let noise = NoiseConfig {
            visibility: 0.9,
            phase_drift: 0.07,
        };
        let phases = [1.1, -0.3, 0.8];
        let theta = [0.2, 0.4, -1.0];
        let x: Vec<f64> = phases
            .iter()
            .zip(&theta)
            .map(|(p, t)| p + t + 0.07)
            .collect();
        let u = dev.unitary(&x);

        let r = Response::new(&dev, Probe::Single { input: 0 }, noise);
        let mut want = single_probs(&u, 0);
        apply_visibility(&mut want, 0.9);
        let got = r.probs(&phases, &theta);
        for (g, w) in got.iter().zip(&want) {
            assert_abs_diff_eq!(g, w, epsilon = 1e-12);
        }

        let probe = Probe::Pair {
            inputs: [0, 1],
            overlap: 0.37,
        };
        let r = Response::new(&dev, probe, noise);
        let mut want = pair_probs(&u, [0, 1], 0.37);
        apply_visibility(&mut want, 0.9);
        let got = r.probs(&phases, &theta);
        for (g, w) in got.iter().zip(&want) {
            assert_abs_diff_eq!(g, w, epsilon = 1e-12);
        }
    }

    #[test]
    fn factor_path_matches_direct_path() {
        let dev = Interferometer::four_mode();
        let probe = Probe::Pair {
            inputs: [0, 1],
            overlap: 0.5,
        };
        let r = Response::new(&dev, probe, NoiseConfig::default());
        let x = [0.3, 2.0, -2.4];
        let factors: Vec<_> = x.iter().map(|&p| Complex64::from_polar(1.0, p)).collect();
        let mut scratch = r.make_scratch();
        let a = r.probs_at(&x);
        let b = r.probs_from_factors(&factors, &mut scratch);
        assert_eq!(a, b);
    }
}

//! Exact derivative rules for phase-encoded response functions.
//!
//! Each output probability of the device is a trigonometric polynomial of
//! degree one (single photon) or two (photon pair) in every shifter. Its
//! derivative is therefore an exact finite linear combination of shifted
//! evaluations, no step-size limit involved:
//!
//! `dp/dx_j = sum_t coeff_t * p(x + shift_t * e_j)`

/// A fixed set of `(coefficient, shift)` terms.
#[derive(Debug, Clone)]
pub struct ShiftRule {
    pub terms: Vec<(f64, f64)>,
}

impl ShiftRule {
    /// Exact for responses whose spectrum in each phase is `{0, ±1}`:
    /// one photon passing each shifter at most once.
    pub fn two_term() -> Self {
        use std::f64::consts::FRAC_PI_2;
        ShiftRule {
            terms: vec![(0.5, FRAC_PI_2), (-0.5, -FRAC_PI_2)],
        }
    }

    /// Exact for spectra `{0, ±1, ±2}`: up to two photons through a
    /// shifter. The coefficients solve the 2x2 system that cancels the
    /// second harmonic while reproducing the first:
    ///   d1 * sin(pi/4) - d2 * sin(pi/2) = 1/2
    ///   d1 * sin(pi/2)                  = 1
    /// giving d1 = 1, d2 = (sqrt(2) - 1) / 2.
    pub fn four_term() -> Self {
        use std::f64::consts::{FRAC_PI_2, FRAC_PI_4};
        let d1 = 1.0;
        let d2 = (std::f64::consts::SQRT_2 - 1.0) / 2.0;
        ShiftRule {
            terms: vec![
                (d1, FRAC_PI_4),
                (-d1, -FRAC_PI_4),
                (-d2, FRAC_PI_2),
                (d2, -FRAC_PI_2),
            ],
        }
    }

    /// Derivative of a vector-valued function along axis `axis`.
    pub fn derivative<F>(&self, f: F, x: &[f64], axis: usize) -> Vec<f64>
    where
        F: Fn(&[f64]) -> Vec<f64>,
    {
        let mut out: Option<Vec<f64>> = None;
        let mut xs = x.to_vec();
        for &(coeff, shift) in &self.terms {
            xs[axis] = x[axis] + shift;
            let p = f(&xs);
            match out.as_mut() {
                None => out = Some(p.iter().map(|&v| coeff * v).collect()),
                Some(acc) => {
                    for (a, &v) in acc.iter_mut().zip(&p) {
                        *a += coeff * v;
                    }
                }
            }
        }
        out.unwrap_or_default()
    }

    /// The distinct shifted points the rule touches on one axis, in term
    /// order. Used by sampling-based estimators that need one empirical
    /// distribution per point.
    pub fn shifts(&self) -> Vec<f64> {
        self.terms.iter().map(|&(_, s)| s).collect()
    }
}

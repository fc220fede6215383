//! Reconfigurable multiport interferometer model.
//!
//! The device is two fixed splitter sections around a bank of tunable
//! phase shifters. One mode carries no shifter and serves as the phase
//! reference, so a device with `modes` ports exposes `modes - 1` phases.

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

type CMat = DMatrix<Complex64>;

/// Symmetric 50/50 coupler on ports `(a, b)`, identity elsewhere.
pub fn coupler(modes: usize, a: usize, b: usize) -> CMat {
    let s = Complex64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
    let is = Complex64::new(0.0, std::f64::consts::FRAC_1_SQRT_2);
    let mut m = CMat::identity(modes, modes);
    m[(a, a)] = s;
    m[(b, b)] = s;
    m[(a, b)] = is;
    m[(b, a)] = is;
    m
}

/// Input fan-out section of the four-mode device: a layer of couplers on
/// (0,1) and (2,3) followed by a layer on (0,2) and (1,3). Every entry has
/// modulus 1/2, so each input photon spreads evenly over all outputs.
pub fn quad_splitter() -> CMat {
    let c1 = coupler(4, 0, 1) * coupler(4, 2, 3);
    let c2 = coupler(4, 0, 2) * coupler(4, 1, 3);
    c2 * c1
}

/// Output recombiner: the same splitter preceded by a sign flip on the
/// first three modes. The flip makes the full device balanced, i.e. with
/// all shifters at zero the recombiner exactly inverts the fan-out up to
/// the permutation-free diagonal it was calibrated to.
pub fn quad_recombiner() -> CMat {
    let mut d = CMat::identity(4, 4);
    for k in 0..3 {
        d[(k, k)] = Complex64::new(-1.0, 0.0);
    }
    quad_splitter() * d
}

/// Which Fock state is launched into the device.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Probe {
    /// One photon in `input`.
    Single { input: usize },
    /// One photon in each of `inputs`. `overlap` is the wave-packet
    /// indistinguishability: 1 = identical photons, 0 = fully
    /// distinguishable, intermediate values mix the two cases.
    Pair { inputs: [usize; 2], overlap: f64 },
}

impl Probe {
    pub fn validate(&self, modes: usize) -> Result<()> {
        match *self {
            Probe::Single { input } => {
                if input >= modes {
                    return Err(Error::InvalidParameter(format!(
                        "probe input {input} out of range for {modes} modes"
                    )));
                }
            }
            Probe::Pair { inputs, overlap } => {
                if inputs[0] >= modes || inputs[1] >= modes || inputs[0] == inputs[1] {
                    return Err(Error::InvalidParameter(format!(
                        "pair inputs {inputs:?} invalid for {modes} modes"
                    )));
                }
                if !(0.0..=1.0).contains(&overlap) || !overlap.is_finite() {
                    return Err(Error::InvalidParameter(format!(
                        "overlap {overlap} outside [0, 1]"
                    )));
                }
            }
        }
        Ok(())
    }
}

/// Detection imperfections applied on top of the ideal mode transform.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseConfig {
    /// Interference visibility. The ideal outcome distribution is mixed
    /// with the uniform one: `v * p + (1 - v) / n_outcomes`.
    pub visibility: f64,
    /// Common offset added to every phase shifter, modelling a drifted
    /// calibration of the phase reference. Deterministic by design: a
    /// drift moves the operating point, it does not add shot noise.
    pub phase_drift: f64,
}

impl Default for NoiseConfig {
    fn default() -> Self {
        NoiseConfig {
            visibility: 1.0,
            phase_drift: 0.0,
        }
    }
}

impl NoiseConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.visibility) || !self.visibility.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "visibility {} outside [0, 1]",
                self.visibility
            )));
        }
        if !self.phase_drift.is_finite() {
            return Err(Error::InvalidParameter("phase drift must be finite".into()));
        }
        Ok(())
    }
}

/// A fixed pair of splitter sections with `phased` tunable shifters on the
/// first `phased` modes between them.
#[derive(Debug, Clone)]
pub struct Interferometer {
    pub modes: usize,
    pub phased: usize,
    fan_out: CMat,
    recombine: CMat,
}

impl Interferometer {
    /// The four-mode device: three phases against one reference mode.
    pub fn four_mode() -> Self {
        Interferometer {
            modes: 4,
            phased: 3,
            fan_out: quad_splitter(),
            recombine: quad_recombiner(),
        }
    }

    /// Two-mode Mach-Zehnder reference device, one phase.
    pub fn two_mode() -> Self {
        Interferometer {
            modes: 2,
            phased: 1,
            fan_out: coupler(2, 0, 1),
            recombine: coupler(2, 0, 1),
        }
    }

    pub fn from_sections(fan_out: CMat, recombine: CMat, phased: usize) -> Result<Self> {
        let modes = fan_out.nrows();
        if !fan_out.is_square() || !recombine.is_square() || recombine.nrows() != modes {
            return Err(Error::InvalidParameter(
                "sections must be square matrices of equal size".into(),
            ));
        }
        if phased == 0 || phased >= modes {
            return Err(Error::InvalidParameter(format!(
                "phased mode count {phased} must be in 1..{modes}"
            )));
        }
        for (name, m) in [("fan-out", &fan_out), ("recombiner", &recombine)] {
            let dev = (m.adjoint() * m - CMat::identity(modes, modes)).norm();
            if dev > 1e-9 {
                return Err(Error::InvalidParameter(format!(
                    "{name} section is not unitary (deviation {dev:.2e})"
                )));
            }
        }
        Ok(Interferometer {
            modes,
            phased,
            fan_out,
            recombine,
        })
    }

    pub fn fan_out(&self) -> &CMat {
        &self.fan_out
    }

    pub fn recombine(&self) -> &CMat {
        &self.recombine
    }

    /// Full mode transform with the given shifter settings.
    /// `phases.len()` must equal `self.phased`; unshifted modes get 1.
    pub fn unitary(&self, phases: &[f64]) -> CMat {
        assert_eq!(phases.len(), self.phased, "phase vector length mismatch");
        let mut mid = self.fan_out.clone();
        // Left-multiplying by the diagonal scales rows of the fan-out.
        for (j, &ph) in phases.iter().enumerate() {
            let f = Complex64::from_polar(1.0, ph);
            for c in 0..self.modes {
                mid[(j, c)] *= f;
            }
        }
        &self.recombine * mid
    }
}

/// Serializable device + probe description (JSON, row-major complex
/// entries as `[re, im]` pairs).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CircuitSpec {
    pub modes: usize,
    pub phased: usize,
    pub fan_out: Vec<[f64; 2]>,
    pub recombine: Vec<[f64; 2]>,
    pub probe: Probe,
    #[serde(default)]
    pub noise: Option<NoiseConfig>,
}

fn pack(m: &CMat) -> Vec<[f64; 2]> {
    let n = m.nrows();
    let mut out = Vec::with_capacity(n * n);
    for r in 0..n {
        for c in 0..n {
            out.push([m[(r, c)].re, m[(r, c)].im]);
        }
    }
    out
}

fn unpack(v: &[[f64; 2]], modes: usize) -> Result<CMat> {
    if v.len() != modes * modes {
        return Err(Error::InvalidParameter(format!(
            "expected {} entries for a {modes}x{modes} section, got {}",
            modes * modes,
            v.len()
        )));
    }
    Ok(CMat::from_fn(modes, modes, |r, c| {
        let [re, im] = v[r * modes + c];
        Complex64::new(re, im)
    }))
}

impl CircuitSpec {
    pub fn new(interf: &Interferometer, probe: Probe, noise: Option<NoiseConfig>) -> Self {
        CircuitSpec {
            modes: interf.modes,
            phased: interf.phased,
            fan_out: pack(&interf.fan_out),
            recombine: pack(&interf.recombine),
            probe,
            noise,
        }
    }

    /// Validate and build the device this spec describes.
    pub fn build(&self) -> Result<(Interferometer, Probe, NoiseConfig)> {
        let fan_out = unpack(&self.fan_out, self.modes)?;
        let recombine = unpack(&self.recombine, self.modes)?;
        let interf = Interferometer::from_sections(fan_out, recombine, self.phased)?;
        self.probe.validate(self.modes)?;
        let noise = self.noise.unwrap_or_default();
        noise.validate()?;
        Ok((interf, self.probe, noise))
    }
}

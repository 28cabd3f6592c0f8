//! Forcing corrections to the autonomous SSM: the non-resonant quasi-periodic
//! correction and the near-resonant single-harmonic correction with masked
//! modal rows.

use nalgebra::DVector;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::model::{first_order_form, FirstOrderSystem, ForcingDefinition, MechanicalSystem};
use crate::spectral::{compute_spectrum, forcing_projection, normalize_for_imaginary_rc, Spectrum};
use crate::ssm::{
    compute_ssm_general, diagonalize_nonlinearity, DiagonalizedNonlinearity, SSMCoefficients,
    SlowDynamics,
};

const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };

/// Detuning (in multiples of `|Re lambda|`) below which a harmonic counts as near-resonant.
pub const NEAR_RESONANCE_FACTOR: f64 = 10.0;

/// Fourier modes `sum_k h^k e^{i<k,Omega>t}` of the non-resonant forced correction,
/// without the `eps` factor.
#[derive(Clone, Debug, PartialEq)]
pub struct QuasiPeriodicCorrection {
    pub base_frequencies: Vec<f64>,
    pub harmonics: Vec<(Vec<i32>, DVector<Complex64>)>,
}

impl QuasiPeriodicCorrection {
    fn frequency(&self, k: &[i32]) -> f64 {
        k.iter()
            .zip(&self.base_frequencies)
            .map(|(&a, &w)| a as f64 * w)
            .sum()
    }

    /// Real state correction at time `t` (times `eps`).
    pub fn eval(&self, t: f64, epsilon: f64) -> DVector<f64> {
        let dim = self.harmonics.first().map_or(0, |h| h.1.len());
        let mut out = DVector::zeros(dim);
        for (k, h) in &self.harmonics {
            let ph = Complex64::new(0.0, self.frequency(k) * t).exp();
            for i in 0..dim {
                out[i] += (h[i] * ph).re;
            }
        }
        out * epsilon
    }

    /// Time derivative of [`Self::eval`].
    pub fn eval_derivative(&self, t: f64, epsilon: f64) -> DVector<f64> {
        let dim = self.harmonics.first().map_or(0, |h| h.1.len());
        let mut out = DVector::zeros(dim);
        for (k, h) in &self.harmonics {
            let w = self.frequency(k);
            let ph = Complex64::new(0.0, w * t).exp() * Complex64::new(0.0, w);
            for i in 0..dim {
                out[i] += (h[i] * ph).re;
            }
        }
        out * epsilon
    }
}

fn near_resonant_mode(spec: &Spectrum, freq: f64) -> Option<usize> {
    (0..spec.n_dof).find(|&j| {
        let l = spec.eigenvalues[j];
        (freq.abs() - l.im).abs() < NEAR_RESONANCE_FACTOR * l.re.abs()
    })
}

/// Non-resonant correction `V (i<k,Omega> I - Lambda)^-1 V^-1 g^k` for every forcing harmonic.
pub fn quasiperiodic_correction(
    spec: &Spectrum,
    fos: &FirstOrderSystem,
) -> Result<QuasiPeriodicCorrection> {
    let mut harmonics = Vec::new();
    for (k, g) in &fos.forcing_harmonics {
        let freq = fos.forcing.harmonic_frequency(k);
        if let Some(j) = near_resonant_mode(spec, freq) {
            return Err(Error::NearResonantHarmonic {
                mode: j + 1,
                frequency: freq,
            });
        }
        let mut y = spec.to_modal(g);
        for (j, yj) in y.iter_mut().enumerate() {
            *yj /= Complex64::new(0.0, freq) - spec.eigenvalues[j];
        }
        harmonics.push((k.clone(), &spec.v_matrix * y));
    }
    Ok(QuasiPeriodicCorrection {
        base_frequencies: fos.forcing.base_frequencies.clone(),
        harmonics,
    })
}

/// Near-resonant single-harmonic correction.
#[derive(Clone, Debug, PartialEq)]
pub struct ResonantCorrection {
    pub w_plus: DVector<Complex64>,
    pub w_minus: DVector<Complex64>,
    pub r_c: Complex64,
    pub r: f64,
    /// True when the forcing has no component in the master subspace.
    pub origin_is_response: bool,
}

/// `W^+- = V S^+- (+-i Omega I - Lambda)^-1 V^-1 g^{+-1}` and `r_c = t_l g^{+1}`.
///
/// The spectrum must already be normalized so that `r_c` is purely imaginary.
pub fn resonant_correction(
    spec: &Spectrum,
    fos: &FirstOrderSystem,
    l: usize,
) -> Result<ResonantCorrection> {
    let il = spec.master(l)?;
    let ic = il + spec.n_dof;
    let gp = fos.g_plus()?;
    let gm = fos.g_minus()?;
    let omega = fos.forcing.frequency();
    let r_c = forcing_projection(spec, &gp, l)?;
    let scale = spec.t_row(il).norm() * gp.norm();
    let origin_is_response = r_c.norm() <= 1e-14 * scale;
    if !origin_is_response && r_c.re.abs() > 1e-10 * r_c.norm() {
        return Err(Error::Numerical(format!(
            "spectrum not normalized for mode {l}: r_c = {r_c}"
        )));
    }

    let solve = |g: &DVector<Complex64>, w: f64, masked: usize| {
        let mut y = spec.to_modal(g);
        for (j, yj) in y.iter_mut().enumerate() {
            if j == masked {
                *yj = ZERO;
            } else {
                *yj /= Complex64::new(0.0, w) - spec.eigenvalues[j];
            }
        }
        &spec.v_matrix * y
    };
    let (r_c, r) = if origin_is_response {
        (ZERO, 0.0)
    } else {
        (r_c, r_c.im)
    };
    Ok(ResonantCorrection {
        w_plus: solve(&gp, omega, il),
        w_minus: solve(&gm, -omega, ic),
        r_c,
        r,
        origin_is_response,
    })
}

/// Autonomous SSM plus the near-resonant forced correction at one `(Omega, eps)`.
#[derive(Clone, Debug, PartialEq)]
pub struct ForcedSSM {
    pub base: SSMCoefficients,
    pub w_plus: DVector<Complex64>,
    pub w_minus: DVector<Complex64>,
    pub r: f64,
    pub r_c: Complex64,
    pub omega: f64,
    pub epsilon: f64,
    pub origin_is_response: bool,
}

impl ForcedSSM {
    pub fn slow_dynamics(&self) -> SlowDynamics {
        self.base.slow_dynamics()
    }

    /// Physical state on the time-dependent SSM at parameter `z` and time `t`.
    pub fn eval(&self, z: Complex64, t: f64) -> DVector<Complex64> {
        let ph = Complex64::new(0.0, self.omega * t).exp();
        let mut x = self.base.eval_w0(z);
        x.axpy(ph * self.epsilon, &self.w_plus, Complex64::new(1.0, 0.0));
        x.axpy(ph.conj() * self.epsilon, &self.w_minus, Complex64::new(1.0, 0.0));
        x
    }
}

/// Everything needed to evaluate forced responses of one master mode.
#[derive(Clone, Debug)]
pub struct ReducedModel {
    pub system: MechanicalSystem,
    pub fos: FirstOrderSystem,
    /// Spectrum normalized for an imaginary `r_c` (when the forcing allows it).
    pub spectrum: Spectrum,
    pub nonlinearity: DiagonalizedNonlinearity,
    pub ssm: SSMCoefficients,
    pub mode: usize,
}

impl ReducedModel {
    /// Runs the full pipeline: first-order form, spectrum, normalization, SSM of order `2M+1`.
    pub fn build(system: &MechanicalSystem, mode: usize, order_m: usize) -> Result<Self> {
        let fos = first_order_form(system)?;
        let spec = compute_spectrum(&fos)?;
        spec.master(mode)?;
        let spectrum = match fos.g_plus() {
            Ok(gp) => match normalize_for_imaginary_rc(&spec, &gp, mode) {
                Ok(s) => s,
                Err(Error::ForcingOrthogonal) => spec,
                Err(e) => return Err(e),
            },
            Err(_) => spec,
        };
        let nonlinearity = diagonalize_nonlinearity(&fos, &spectrum)?;
        let ssm = compute_ssm_general(&nonlinearity, &spectrum, mode, order_m)?;
        Ok(Self {
            system: system.clone(),
            fos,
            spectrum,
            nonlinearity,
            ssm,
            mode,
        })
    }

    pub fn slow_dynamics(&self) -> SlowDynamics {
        self.ssm.slow_dynamics()
    }

    /// Forced SSM at frequency `omega` and amplitude `epsilon`.
    pub fn forced(&self, omega: f64, epsilon: f64) -> Result<ForcedSSM> {
        let forcing: ForcingDefinition = self
            .fos
            .forcing
            .with_frequency(omega)
            .with_epsilon(epsilon);
        let mut fos = self.fos.clone();
        fos.forcing = forcing;
        let c = resonant_correction(&self.spectrum, &fos, self.mode)?;
        Ok(ForcedSSM {
            base: self.ssm.clone(),
            w_plus: c.w_plus,
            w_minus: c.w_minus,
            r: c.r,
            r_c: c.r_c,
            omega,
            epsilon,
            origin_is_response: c.origin_is_response,
        })
    }

    /// `r` for the current forcing shape (independent of `Omega` and `eps`).
    pub fn r(&self) -> Result<f64> {
        Ok(resonant_correction(&self.spectrum, &self.fos, self.mode)?.r)
    }
}

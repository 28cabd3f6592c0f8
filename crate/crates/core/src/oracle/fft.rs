//! Harmonic content of sampled periodic orbits.

use std::collections::BTreeMap;

use nalgebra::DVector;
use num_complex::Complex64;
use rustfft::FftPlanner;

use super::shooting::PeriodicOrbit;
use crate::error::Result;
use crate::response::{modal_projection, HarmonicSpectrum};
use crate::spectral::Spectrum;

/// Normalized DFT `c_j = (1/n) sum_k x_k e^{-2 pi i j k / n}` of each state coordinate.
/// Returns one row of `n` coefficients per coordinate.
pub fn fourier_coefficients(samples: &[DVector<f64>]) -> Vec<Vec<Complex64>> {
    let n = samples.len();
    if n == 0 {
        return Vec::new();
    }
    let dim = samples[0].len();
    let fft = FftPlanner::new().plan_fft_forward(n);
    (0..dim)
        .map(|i| {
            let mut buf: Vec<Complex64> = samples.iter().map(|x| Complex64::new(x[i], 0.0)).collect();
            fft.process(&mut buf);
            buf.iter().map(|c| c / n as f64).collect()
        })
        .collect()
}

/// Complex amplitudes at harmonics `-j_max..=j_max`; requires `2 j_max < n`.
pub fn harmonic_amplitudes(orbit: &PeriodicOrbit, j_max: usize) -> HarmonicSpectrum {
    let n = orbit.samples.len();
    assert!(2 * j_max < n, "need more than {} samples", 2 * j_max);
    let coeffs = fourier_coefficients(&orbit.samples);
    let dim = coeffs.len();
    let mut amplitudes = BTreeMap::new();
    for j in -(j_max as i64)..=(j_max as i64) {
        let bin = j.rem_euclid(n as i64) as usize;
        amplitudes.insert(j as i32, DVector::from_fn(dim, |i, _| coeffs[i][bin]));
    }
    HarmonicSpectrum {
        omega: orbit.omega,
        amplitudes,
    }
}

/// Relative gap between time-domain mean energy and the summed spectrum.
pub fn parseval_defect(orbit: &PeriodicOrbit) -> f64 {
    let n = orbit.samples.len() as f64;
    let time: f64 = orbit.samples.iter().map(|x| x.norm_squared()).sum::<f64>() / n;
    let freq: f64 = fourier_coefficients(&orbit.samples)
        .iter()
        .flat_map(|row| row.iter().map(|c| c.norm_sqr()))
        .sum();
    if time == 0.0 {
        freq
    } else {
        (time - freq).abs() / time
    }
}

/// Largest `|p_mode(t)|` over the samples, with `p = E^-1 q`.
pub fn max_modal_displacement(orbit: &PeriodicOrbit, spec: &Spectrum, mode: usize) -> Result<f64> {
    let k = spec.master(mode)?;
    Ok(orbit
        .samples
        .iter()
        .map(|x| modal_projection(spec, &x.map(|v| Complex64::new(v, 0.0)))[k].re.abs())
        .fold(0.0, f64::max))
}

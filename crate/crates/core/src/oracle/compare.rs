//! SSM predictions against shooting orbits on a frequency grid.

use nalgebra::DVector;
use serde::Serialize;

use super::continuation::{continue_branch, Branch, ContinuationOptions};
use super::fft::{harmonic_amplitudes, max_modal_displacement};
use super::shooting::{find_periodic_orbit, PeriodicOrbit, ShootingOptions};
use super::ssm_guess;
use crate::error::{Error, Result};
use crate::forced::ReducedModel;
use crate::model::FirstOrderSystem;
use crate::response::{
    modal_amplitude, physical_harmonics, response_points, stability_boundaries, HarmonicSpectrum,
};

/// Harmonics retained when reading amplitudes off an orbit.
pub const ORBIT_HARMONICS: usize = 11;

/// `fos` of `model` with the forcing amplitude set to `epsilon`.
pub fn forced_system(model: &ReducedModel, epsilon: f64) -> FirstOrderSystem {
    let mut fos = model.fos.clone();
    fos.forcing = fos.forcing.with_epsilon(epsilon);
    fos
}

/// Continues the oracle branch over `omega_range`, seeded by the SSM's
/// smallest-amplitude response at `omega_range.0`.
pub fn oracle_branch(
    model: &ReducedModel,
    epsilon: f64,
    omega_range: (f64, f64),
    opts: &ContinuationOptions,
) -> Result<Branch> {
    let fos = forced_system(model, epsilon);
    let omega = omega_range.0;
    let f = model.forced(omega, epsilon)?;
    let sd = f.slow_dynamics();
    let guess = match response_points(&sd, f.r, f.epsilon, omega)?.first() {
        Some(p) => ssm_guess(&f, p.rho, p.psi),
        None => DVector::zeros(fos.dim),
    };
    let seed = find_periodic_orbit(&fos, omega, &guess, &opts.shooting)?;
    continue_branch(&fos, omega_range, &seed, opts)
}

/// Orbits at `omega`, one per branch crossing, found by shooting from the
/// interpolated branch states.
pub fn orbits_at(
    fos: &FirstOrderSystem,
    branch: &Branch,
    omega: f64,
    opts: &ShootingOptions,
) -> Vec<PeriodicOrbit> {
    let mut out: Vec<PeriodicOrbit> = Vec::new();
    for w in branch.points.windows(2) {
        let (a, b) = (&w[0], &w[1]);
        let (lo, hi) = (a.omega.min(b.omega), a.omega.max(b.omega));
        if omega < lo || omega > hi || lo == hi {
            continue;
        }
        let s = (omega - a.omega) / (b.omega - a.omega);
        let guess = &a.orbit.initial_state * (1.0 - s) + &b.orbit.initial_state * s;
        let Ok(orbit) = find_periodic_orbit(fos, omega, &guess, opts) else {
            continue;
        };
        let dup = out.iter().any(|o| {
            (&o.initial_state - &orbit.initial_state).norm() < 1e-6 * (1.0 + orbit.initial_state.norm())
        });
        if !dup {
            out.push(orbit);
        }
    }
    out
}

/// Oracle orbits at every grid frequency.
pub fn orbits_on_grid(
    fos: &FirstOrderSystem,
    branch: &Branch,
    omegas: &[f64],
    opts: &ShootingOptions,
) -> Vec<Vec<PeriodicOrbit>> {
    omegas.iter().map(|&w| orbits_at(fos, branch, w, opts)).collect()
}

/// First-harmonic modal amplitude, time-domain modal peak, and harmonic spectrum of an orbit.
pub fn orbit_amplitudes(
    model: &ReducedModel,
    orbit: &PeriodicOrbit,
) -> Result<(f64, f64, HarmonicSpectrum)> {
    let h = harmonic_amplitudes(orbit, ORBIT_HARMONICS.min((orbit.samples.len() - 1) / 2));
    let amp = modal_amplitude(&model.spectrum, &h, model.mode, 1)?;
    let peak = max_modal_displacement(orbit, &model.spectrum, model.mode)?;
    Ok((amp, peak, h))
}

/// One oracle orbit with its closest SSM prediction.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct VerifyRow {
    pub omega: f64,
    /// SSM first-harmonic modal amplitude (nearest root), if any root exists.
    pub amp_ssm: Option<f64>,
    pub amp_oracle: f64,
    pub rel_error: Option<f64>,
    pub stable_ssm: Option<bool>,
    pub stable_oracle: bool,
    /// Time-domain modal peaks.
    pub peak_ssm: Option<f64>,
    pub peak_oracle: f64,
    pub max_multiplier: f64,
    /// Distance of the matched SSM root to the nearer `Omega_crit` curve.
    pub crit_distance: Option<f64>,
    /// Within the exclusion band of an oracle or SSM fold.
    pub near_fold: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct VerifyReport {
    pub rows: Vec<VerifyRow>,
    pub grid_width: f64,
    pub oracle_folds: Vec<f64>,
    pub ssm_folds: Vec<f64>,
}

impl VerifyReport {
    /// Relative errors on stable oracle orbits outside the fold bands.
    pub fn stable_errors(&self) -> Vec<f64> {
        self.rows
            .iter()
            .filter(|r| r.stable_oracle && !r.near_fold)
            .filter_map(|r| r.rel_error)
            .collect()
    }

    pub fn max_stable_error(&self) -> f64 {
        self.stable_errors().into_iter().fold(0.0, f64::max)
    }

    pub fn median_stable_error(&self) -> f64 {
        median(self.stable_errors())
    }
}

pub fn median(mut v: Vec<f64>) -> f64 {
    if v.is_empty() {
        return f64::NAN;
    }
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

fn median_spacing(omegas: &[f64]) -> f64 {
    median(omegas.windows(2).map(|w| (w[1] - w[0]).abs()).collect())
}

/// Matches every oracle orbit on the grid with the nearest SSM response.
/// Rows within `exclusion_widths` grid widths of a fold of either curve are flagged.
pub fn compare_with_ssm(
    model: &ReducedModel,
    epsilon: f64,
    omegas: &[f64],
    grid_orbits: &[Vec<PeriodicOrbit>],
    oracle_folds: &[f64],
    exclusion_widths: f64,
) -> Result<VerifyReport> {
    if omegas.len() != grid_orbits.len() {
        return Err(Error::DimensionMismatch {
            expected: omegas.len(),
            got: grid_orbits.len(),
        });
    }
    let width = median_spacing(omegas);
    let mut ssm = Vec::with_capacity(omegas.len());
    for &omega in omegas {
        let f = model.forced(omega, epsilon)?;
        let sd = f.slow_dynamics();
        let pts = response_points(&sd, f.r, f.epsilon, omega)?;
        let mut preds = Vec::with_capacity(pts.len());
        for p in pts {
            let h = physical_harmonics(&f, p.rho, p.psi);
            let amp = modal_amplitude(&model.spectrum, &h, model.mode, 1)?;
            let peak = ssm_time_peak(model, &h)?;
            let b = stability_boundaries(&sd, &[p.rho]).points[0];
            let crit = [b.omega_crit_minus, b.omega_crit_plus]
                .iter()
                .flatten()
                .map(|c| (omega - c).abs())
                .fold(f64::INFINITY, f64::min);
            preds.push((amp, peak, p.stable, crit));
        }
        ssm.push(preds);
    }
    let ssm_folds: Vec<f64> = omegas
        .windows(2)
        .zip(ssm.windows(2))
        .filter(|(_, s)| s[0].len() != s[1].len())
        .map(|(w, _)| 0.5 * (w[0] + w[1]))
        .collect();
    let band = exclusion_widths * width;
    let mut rows = Vec::new();
    for ((&omega, orbits), preds) in omegas.iter().zip(grid_orbits).zip(&ssm) {
        let near_fold = oracle_folds
            .iter()
            .chain(&ssm_folds)
            .any(|f| (omega - f).abs() < band);
        for orbit in orbits {
            let (amp, peak, _) = orbit_amplitudes(model, orbit)?;
            let best = preds
                .iter()
                .min_by(|a, b| (a.0 - amp).abs().total_cmp(&(b.0 - amp).abs()));
            rows.push(VerifyRow {
                omega,
                amp_ssm: best.map(|p| p.0),
                amp_oracle: amp,
                rel_error: best.map(|p| (p.0 - amp).abs() / amp),
                stable_ssm: best.map(|p| p.2),
                stable_oracle: orbit.stable(),
                peak_ssm: best.map(|p| p.1),
                peak_oracle: peak,
                max_multiplier: orbit.max_multiplier(),
                crit_distance: best.map(|p| p.3),
                near_fold,
            });
        }
    }
    Ok(VerifyReport {
        rows,
        grid_width: width,
        oracle_folds: oracle_folds.to_vec(),
        ssm_folds,
    })
}

fn ssm_time_peak(model: &ReducedModel, h: &HarmonicSpectrum) -> Result<f64> {
    let k = model.spectrum.master(model.mode)?;
    let period = std::f64::consts::TAU / h.omega;
    let n = 256;
    Ok((0..n)
        .map(|i| {
            let x = h.time_signal(period * i as f64 / n as f64);
            crate::response::modal_projection(&model.spectrum, &x)[k].re.abs()
        })
        .fold(0.0, f64::max))
}

/// Full pipeline: branch, grid orbits, comparison.
pub fn verify_sweep(
    model: &ReducedModel,
    epsilon: f64,
    omegas: &[f64],
    opts: &ContinuationOptions,
    exclusion_widths: f64,
) -> Result<VerifyReport> {
    let lo = omegas.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = omegas.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    // run slightly past the ends so the grid endpoints are bracketed
    let pad = 0.5 * median_spacing(omegas).max(1e-6);
    let branch = oracle_branch(model, epsilon, (lo - pad, hi + pad), opts)?;
    let fos = forced_system(model, epsilon);
    let grid = orbits_on_grid(&fos, &branch, omegas, &opts.shooting);
    let folds: Vec<f64> = branch.fold_points.iter().map(|f| f.omega).collect();
    compare_with_ssm(model, epsilon, omegas, &grid, &folds, exclusion_widths)
}

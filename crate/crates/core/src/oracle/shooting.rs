//! Single shooting for forced periodic orbits in the phase variable `tau = Omega t`.

use std::f64::consts::TAU;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::Serialize;

use super::integrate::Dopri5;
use crate::error::{Error, Result};
use crate::model::FirstOrderSystem;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ShootingOptions {
    pub tol: f64,
    pub max_iter: usize,
    pub integrator: Dopri5,
    /// Uniform samples stored per period.
    pub n_samples: usize,
}

impl Default for ShootingOptions {
    fn default() -> Self {
        Self {
            tol: 1e-9,
            max_iter: 25,
            // integration noise must sit well below the Newton tolerance
            integrator: Dopri5::default().with_rtol(1e-12),
            n_samples: 128,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PeriodicOrbit {
    pub omega: f64,
    pub period: f64,
    #[serde(skip)]
    pub initial_state: DVector<f64>,
    /// States at `t_k = k T / n`, `k = 0..n`.
    #[serde(skip)]
    pub samples: Vec<DVector<f64>>,
    pub floquet_multipliers: Vec<Complex64>,
    pub converged: bool,
    pub residual: f64,
    pub iterations: usize,
}

impl PeriodicOrbit {
    pub fn max_multiplier(&self) -> f64 {
        self.floquet_multipliers
            .iter()
            .map(|m| m.norm())
            .fold(0.0, f64::max)
    }

    pub fn stable(&self) -> bool {
        self.max_multiplier() < 1.0
    }

    pub fn sample_times(&self) -> Vec<f64> {
        let n = self.samples.len() as f64;
        (0..self.samples.len())
            .map(|k| self.period * k as f64 / n)
            .collect()
    }
}

/// Period map with its sensitivities.
#[derive(Clone, Debug)]
pub struct PeriodMap {
    pub end_state: DVector<f64>,
    /// `d x(2 pi) / d x0`.
    pub monodromy: DMatrix<f64>,
    /// `d x(2 pi) / d Omega`.
    pub d_omega: DVector<f64>,
    pub samples: Vec<DVector<f64>>,
}

/// `eps G_ext` as a function of the phase `tau`, independent of `Omega`.
fn phase_forcing(fos: &FirstOrderSystem) -> Result<Vec<(f64, DVector<Complex64>)>> {
    if fos.forcing_harmonics.is_empty() || fos.forcing.epsilon == 0.0 {
        return Ok(Vec::new());
    }
    if fos.forcing.base_frequencies.len() != 1 {
        return Err(Error::NotSingleHarmonic);
    }
    Ok(fos
        .forcing_harmonics
        .iter()
        .map(|(k, g)| (k[0] as f64, g * Complex64::new(fos.forcing.epsilon, 0.0)))
        .collect())
}

/// Integrates one forcing period with the variational equations for `x0` and `Omega`.
pub fn period_map(
    fos: &FirstOrderSystem,
    omega: f64,
    x0: &DVector<f64>,
    integrator: &Dopri5,
    n_samples: usize,
) -> Result<PeriodMap> {
    let n = fos.dim;
    let harmonics = phase_forcing(fos)?;
    let mut y0 = vec![0.0; n + n * n + n];
    y0[..n].copy_from_slice(x0.as_slice());
    for i in 0..n {
        y0[n + i * n + i] = 1.0;
    }
    let mut times: Vec<f64> = (0..n_samples).map(|k| TAU * k as f64 / n_samples as f64).collect();
    times.push(TAU);
    let mut fx = vec![0.0; n];
    let inv = 1.0 / omega;
    let rhs = |tau: f64, y: &[f64], out: &mut [f64]| {
        let x = &y[..n];
        fos.autonomous_rhs(x, &mut fx);
        for (k, g) in &harmonics {
            let ph = Complex64::new(0.0, k * tau).exp();
            for i in 0..n {
                fx[i] += (g[i] * ph).re;
            }
        }
        let jac = fos.jacobian(x);
        for i in 0..n {
            out[i] = fx[i] * inv;
        }
        // Phi is stored column-major after x
        for c in 0..n {
            let col = &y[n + c * n..n + (c + 1) * n];
            for i in 0..n {
                let mut acc = 0.0;
                for j in 0..n {
                    acc += jac[(i, j)] * col[j];
                }
                out[n + c * n + i] = acc * inv;
            }
        }
        let s = &y[n + n * n..];
        for i in 0..n {
            let mut acc = 0.0;
            for j in 0..n {
                acc += jac[(i, j)] * s[j];
            }
            out[n + n * n + i] = (acc - fx[i] * inv) * inv;
        }
    };
    let ys = integrator.solve(rhs, 0.0, &y0, &times)?;
    let last = ys.last().expect("at least one sample");
    Ok(PeriodMap {
        end_state: DVector::from_column_slice(&last[..n]),
        monodromy: DMatrix::from_column_slice(n, n, &last[n..n + n * n]),
        d_omega: DVector::from_column_slice(&last[n + n * n..]),
        samples: ys[..n_samples]
            .iter()
            .map(|y| DVector::from_column_slice(&y[..n]))
            .collect(),
    })
}

pub(crate) fn orbit_from_map(omega: f64, x0: DVector<f64>, pm: PeriodMap, residual: f64, iterations: usize) -> PeriodicOrbit {
    PeriodicOrbit {
        omega,
        period: TAU / omega,
        initial_state: x0,
        samples: pm.samples,
        floquet_multipliers: pm.monodromy.complex_eigenvalues().iter().copied().collect(),
        converged: true,
        residual,
        iterations,
    }
}

/// Newton iteration on `x(T; x0) - x0 = 0` started from `x_guess`.
pub fn find_periodic_orbit(
    fos: &FirstOrderSystem,
    omega: f64,
    x_guess: &DVector<f64>,
    opts: &ShootingOptions,
) -> Result<PeriodicOrbit> {
    let n = fos.dim;
    let mut x = x_guess.clone();
    for iter in 0..=opts.max_iter {
        let pm = period_map(fos, omega, &x, &opts.integrator, opts.n_samples)?;
        let g = &pm.end_state - &x;
        let res = g.norm();
        if !res.is_finite() {
            break;
        }
        if res < opts.tol {
            return Ok(orbit_from_map(omega, x, pm, res, iter));
        }
        if iter == opts.max_iter {
            break;
        }
        let jac = &pm.monodromy - DMatrix::identity(n, n);
        match jac.lu().solve(&(-g)) {
            Some(dx) => x += dx,
            None => break,
        }
    }
    Err(Error::NoOrbit(omega, opts.max_iter))
}

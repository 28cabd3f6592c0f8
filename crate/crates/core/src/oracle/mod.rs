//! Independent ground truth: integration, shooting, continuation, and FFT.

pub mod compare;
pub mod continuation;
pub mod fft;
pub mod integrate;
pub mod shooting;

pub use compare::{compare_with_ssm, oracle_branch, orbits_on_grid, verify_sweep, VerifyReport, VerifyRow};
pub use continuation::{continue_branch, Branch, BranchPoint, ContinuationOptions, FoldPoint};
pub use fft::{fourier_coefficients, harmonic_amplitudes, max_modal_displacement, parseval_defect};
pub use integrate::{integrate, Dopri5, Trajectory};
pub use shooting::{find_periodic_orbit, period_map, PeriodMap, PeriodicOrbit, ShootingOptions};

use nalgebra::DVector;

use crate::forced::ForcedSSM;

/// Initial state at `t = 0` of the SSM-predicted response `(rho, psi)`.
pub fn ssm_guess(fssm: &ForcedSSM, rho: f64, psi: f64) -> DVector<f64> {
    crate::response::physical_harmonics(fssm, rho, psi)
        .time_signal(0.0)
        .map(|c| c.re)
}

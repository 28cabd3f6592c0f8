//! Pseudo-arclength continuation of forced periodic orbits in `(x0, Omega)`.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use super::shooting::{orbit_from_map, period_map, PeriodMap, PeriodicOrbit, ShootingOptions};
use crate::error::Result;
use crate::model::FirstOrderSystem;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ContinuationOptions {
    pub h_init: f64,
    pub h_min: f64,
    pub h_max: f64,
    pub max_points: usize,
    /// Corrector iterations allowed before the step is halved.
    pub max_corrector: usize,
    pub shooting: ShootingOptions,
}

impl Default for ContinuationOptions {
    fn default() -> Self {
        Self {
            h_init: 1e-3,
            h_min: 1e-8,
            h_max: 0.02,
            max_points: 20_000,
            max_corrector: 4,
            shooting: ShootingOptions::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BranchPoint {
    pub omega: f64,
    pub orbit: PeriodicOrbit,
    /// `dOmega/ds` of the unit tangent.
    pub omega_tangent: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct FoldPoint {
    /// Index of the last point before the turn.
    pub index: usize,
    pub omega: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Branch {
    pub points: Vec<BranchPoint>,
    pub fold_points: Vec<FoldPoint>,
    /// Set when the corrector failed at the minimum step.
    pub terminated: bool,
}

impl Branch {
    pub fn omegas(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.omega).collect()
    }
}

fn extended_jacobian(pm: &PeriodMap) -> DMatrix<f64> {
    let n = pm.end_state.len();
    let mut j = DMatrix::zeros(n, n + 1);
    j.view_mut((0, 0), (n, n))
        .copy_from(&(&pm.monodromy - DMatrix::identity(n, n)));
    j.set_column(n, &pm.d_omega);
    j
}

fn tangent(pm: &PeriodMap, previous: &DVector<f64>) -> Option<DVector<f64>> {
    let n = pm.end_state.len();
    let mut m = DMatrix::zeros(n + 1, n + 1);
    m.view_mut((0, 0), (n, n + 1)).copy_from(&extended_jacobian(pm));
    m.set_row(n, &previous.transpose());
    let mut rhs = DVector::zeros(n + 1);
    rhs[n] = 1.0;
    let t = m.lu().solve(&rhs)?;
    let t = t.normalize();
    Some(if t.dot(previous) < 0.0 { -t } else { t })
}

/// Continues the branch through `seed` until `Omega` leaves `omega_range`.
/// The initial direction points from `seed.omega` toward `omega_range.1`.
pub fn continue_branch(
    fos: &FirstOrderSystem,
    omega_range: (f64, f64),
    seed: &PeriodicOrbit,
    opts: &ContinuationOptions,
) -> Result<Branch> {
    let n = fos.dim;
    let sh = &opts.shooting;
    let (lo, hi) = (omega_range.0.min(omega_range.1), omega_range.0.max(omega_range.1));
    let dir = if omega_range.1 >= seed.omega { 1.0 } else { -1.0 };

    let mut y = DVector::zeros(n + 1);
    y.rows_mut(0, n).copy_from(&seed.initial_state);
    y[n] = seed.omega;
    let pm = period_map(fos, seed.omega, &seed.initial_state, &sh.integrator, sh.n_samples)?;
    let mut guide = DVector::zeros(n + 1);
    guide[n] = dir;
    let mut t = tangent(&pm, &guide).unwrap_or(guide);
    let mut branch = Branch {
        points: vec![BranchPoint {
            omega: seed.omega,
            orbit: seed.clone(),
            omega_tangent: t[n],
        }],
        fold_points: Vec::new(),
        terminated: false,
    };
    let mut h = opts.h_init;

    while branch.points.len() < opts.max_points {
        let pred = &y + &t * h;
        let mut z = pred.clone();
        let mut accepted: Option<(PeriodMap, f64, usize)> = None;
        for iter in 0..=opts.max_corrector {
            let x = z.rows(0, n).clone_owned();
            let pm = match period_map(fos, z[n], &x, &sh.integrator, sh.n_samples) {
                Ok(pm) => pm,
                Err(_) => break,
            };
            let g = &pm.end_state - &x;
            let arc = t.dot(&(&z - &pred));
            let res = g.norm();
            if !res.is_finite() {
                break;
            }
            if res < sh.tol && arc.abs() < sh.tol {
                accepted = Some((pm, res, iter));
                break;
            }
            if iter == opts.max_corrector {
                break;
            }
            let mut m = DMatrix::zeros(n + 1, n + 1);
            m.view_mut((0, 0), (n, n + 1)).copy_from(&extended_jacobian(&pm));
            m.set_row(n, &t.transpose());
            let mut rhs = DVector::zeros(n + 1);
            rhs.rows_mut(0, n).copy_from(&(-g));
            rhs[n] = -arc;
            match m.lu().solve(&rhs) {
                Some(d) => z += d,
                None => break,
            }
        }
        let Some((pm, res, iters)) = accepted else {
            h *= 0.5;
            if h < opts.h_min {
                branch.terminated = true;
                break;
            }
            continue;
        };
        let t_new = tangent(&pm, &t).unwrap_or_else(|| t.clone());
        let omega = z[n];
        let x = z.rows(0, n).clone_owned();
        if t_new[n] * t[n] < 0.0 {
            let last = branch.points.len() - 1;
            let w = t[n] / (t[n] - t_new[n]);
            branch.fold_points.push(FoldPoint {
                index: last,
                omega: y[n] + w * (omega - y[n]),
            });
        }
        if omega < lo || omega > hi {
            break;
        }
        branch.points.push(BranchPoint {
            omega,
            orbit: orbit_from_map(omega, x, pm, res, iters),
            omega_tangent: t_new[n],
        });
        y = z;
        t = t_new;
        if iters <= 2 {
            h = (h * 1.5).min(opts.h_max);
        }
    }
    Ok(branch)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{builtin_model, first_order_form, BuiltinModel, ModelParams};
    use crate::oracle::find_periodic_orbit;

    #[test]
    fn linear_branch_has_no_folds() {
        let sys = builtin_model(BuiltinModel::ShawPierre, &ModelParams::new())
            .unwrap()
            .linearized();
        let fos = first_order_form(&sys).unwrap();
        let opts = ContinuationOptions {
            h_max: 0.05,
            ..Default::default()
        };
        let seed = find_periodic_orbit(&fos, 0.9, &DVector::zeros(4), &opts.shooting).unwrap();
        let br = continue_branch(&fos, (0.9, 1.1), &seed, &opts).unwrap();
        assert!(!br.terminated);
        assert!(br.fold_points.is_empty());
        let om = br.omegas();
        assert!(om.windows(2).all(|w| w[1] > w[0]));
        assert!(*om.last().unwrap() > 1.05);
    }
}

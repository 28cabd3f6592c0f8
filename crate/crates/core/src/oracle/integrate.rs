//! Adaptive Dormand-Prince 5(4) integration.

use nalgebra::DVector;

use crate::error::{Error, Result};
use crate::model::FirstOrderSystem;

const C: [f64; 7] = [0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [
        19372.0 / 6561.0,
        -25360.0 / 2187.0,
        64448.0 / 6561.0,
        -212.0 / 729.0,
        0.0,
        0.0,
    ],
    [
        9017.0 / 3168.0,
        -355.0 / 33.0,
        46732.0 / 5247.0,
        49.0 / 176.0,
        -5103.0 / 18656.0,
        0.0,
    ],
    [
        35.0 / 384.0,
        0.0,
        500.0 / 1113.0,
        125.0 / 192.0,
        -2187.0 / 6784.0,
        11.0 / 84.0,
    ],
];
// fifth-order weights minus embedded fourth-order weights
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Dopri5 {
    pub rtol: f64,
    pub atol: f64,
    /// Initial step; zero picks one from the tolerance.
    pub h_init: f64,
    pub max_steps: usize,
}

impl Default for Dopri5 {
    fn default() -> Self {
        Self {
            rtol: 1e-10,
            atol: 1e-12,
            h_init: 0.0,
            max_steps: 1_000_000,
        }
    }
}

impl Dopri5 {
    pub fn with_rtol(mut self, rtol: f64) -> Self {
        self.rtol = rtol;
        self.atol = rtol * 1e-2;
        self
    }

    /// Integrates `y' = f(t, y)` from `t0` and returns the state at each time in
    /// `samples` (non-decreasing, all `>= t0`). Steps are clipped to land on samples.
    pub fn solve<F>(&self, mut f: F, t0: f64, y0: &[f64], samples: &[f64]) -> Result<Vec<Vec<f64>>>
    where
        F: FnMut(f64, &[f64], &mut [f64]),
    {
        assert!(self.rtol > 0.0 && self.atol > 0.0, "tolerances must be positive");
        let n = y0.len();
        let mut y = y0.to_vec();
        let mut t = t0;
        let mut k: Vec<Vec<f64>> = vec![vec![0.0; n]; 7];
        let mut tmp = vec![0.0; n];
        let mut ynew = vec![0.0; n];
        f(t, &y, &mut k[0]);
        let span = samples.last().map_or(0.0, |s| s - t0);
        let mut h = if self.h_init > 0.0 {
            self.h_init
        } else {
            (span.abs() * 1e-3).max(1e-6)
        };
        let mut out = Vec::with_capacity(samples.len());
        let mut steps = 0;
        for &ts in samples {
            while t < ts {
                if steps >= self.max_steps {
                    return Err(Error::StepSizeUnderflow(t));
                }
                steps += 1;
                let clipped = ts - t <= h;
                let hs = if clipped { ts - t } else { h };
                for s in 1..7 {
                    for i in 0..n {
                        let mut acc = 0.0;
                        for (j, kj) in k.iter().enumerate().take(s) {
                            acc += A[s][j] * kj[i];
                        }
                        tmp[i] = y[i] + hs * acc;
                    }
                    let (_, rest) = k.split_at_mut(s);
                    f(t + C[s] * hs, &tmp, &mut rest[0]);
                    if s == 6 {
                        ynew.copy_from_slice(&tmp);
                    }
                }
                let mut err = 0.0;
                for i in 0..n {
                    let mut e = 0.0;
                    for (j, kj) in k.iter().enumerate() {
                        e += E[j] * kj[i];
                    }
                    let sc = self.atol + self.rtol * y[i].abs().max(ynew[i].abs());
                    err += (hs * e / sc).powi(2);
                }
                let err = (err / n.max(1) as f64).sqrt();
                if !err.is_finite() {
                    h = hs * 0.2;
                } else if err <= 1.0 {
                    t = if clipped { ts } else { t + hs };
                    y.copy_from_slice(&ynew);
                    k.swap(0, 6);
                    let fac = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
                    // a clipped step says nothing about the natural step size
                    if !clipped || fac < 1.0 {
                        h = hs * fac;
                    }
                } else {
                    h = hs * (0.9 * err.powf(-0.2)).clamp(0.2, 1.0);
                }
                if h < 1e-14 * t.abs().max(1.0) {
                    return Err(Error::StepSizeUnderflow(t));
                }
            }
            out.push(y.clone());
        }
        Ok(out)
    }
}

/// State samples of a trajectory.
#[derive(Clone, Debug, PartialEq)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<DVector<f64>>,
}

/// Integrates the full forced system `x' = A x + G(x) + eps G_ext(t)` from `t_span.0`
/// and samples it at `n_samples` uniform times including both ends.
pub fn integrate(
    fos: &FirstOrderSystem,
    x0: &DVector<f64>,
    t_span: (f64, f64),
    n_samples: usize,
    opts: &Dopri5,
) -> Result<Trajectory> {
    let n = n_samples.max(2);
    let times: Vec<f64> = (0..n)
        .map(|i| t_span.0 + (t_span.1 - t_span.0) * i as f64 / (n - 1) as f64)
        .collect();
    let states = opts.solve(|t, x, out| fos.rhs(t, x, out), t_span.0, x0.as_slice(), &times)?;
    Ok(Trajectory {
        times,
        states: states.into_iter().map(DVector::from_vec).collect(),
    })
}

//! Closed-form forced response on the SSM: amplitudes, phase, stability,
//! backbone, stability boundaries, and harmonic reconstruction.

use std::collections::BTreeMap;
use std::f64::consts::{FRAC_PI_2, PI};

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::forced::ForcedSSM;
use crate::spectral::Spectrum;
use crate::ssm::SlowDynamics;

/// Relative imaginary-part tolerance for accepting a polynomial root as real.
pub const ROOT_IMAG_TOLERANCE: f64 = 1e-9;
/// Roots with relative imaginary part below this (but above the acceptance tolerance) are flagged.
pub const ROOT_BORDERLINE_TOLERANCE: f64 = 1e-6;
/// Clamping window for the arccos argument of the phase.
pub const PHASE_CLAMP: f64 = 1e-9;
/// Relative shortfall of `(eps r)^2 - a^2` still read as the peak itself.
pub const PEAK_ROUNDING: f64 = 1e-10;

fn poly_mul(a: &[f64], b: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; a.len() + b.len() - 1];
    for (i, x) in a.iter().enumerate() {
        for (j, y) in b.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    out
}

fn poly_add(a: &[f64], b: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; a.len().max(b.len())];
    for (i, x) in a.iter().enumerate() {
        out[i] += x;
    }
    for (i, x) in b.iter().enumerate() {
        out[i] += x;
    }
    out
}

fn horner(c: &[f64], x: Complex64) -> Complex64 {
    c.iter()
        .rev()
        .fold(Complex64::new(0.0, 0.0), |acc, v| acc * x + v)
}

fn horner_d(c: &[f64], x: Complex64) -> Complex64 {
    c.iter()
        .enumerate()
        .skip(1)
        .rev()
        .fold(Complex64::new(0.0, 0.0), |acc, (k, v)| acc * x + v * k as f64)
}

/// Real positive roots of a polynomial (ascending coefficients), plus roots whose
/// imaginary part is too large to accept but small enough to be suspicious.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct PositiveRoots {
    pub roots: Vec<f64>,
    pub borderline: Vec<f64>,
}

/// Companion-matrix root finder restricted to real positive roots.
pub fn positive_real_roots(coeffs: &[f64]) -> PositiveRoots {
    let mut c: Vec<f64> = coeffs.to_vec();
    while c.len() > 1 && c.last() == Some(&0.0) {
        c.pop();
    }
    let n = c.len() - 1;
    if n == 0 {
        return PositiveRoots::default();
    }
    let lead = c[n];
    // scale u = s v so the monic polynomial in v has roots of order one
    let s = (0..n)
        .filter(|&k| c[k] != 0.0)
        .map(|k| (c[k] / lead).abs().powf(1.0 / (n - k) as f64))
        .fold(0.0, f64::max);
    let s = if s > 0.0 { s } else { 1.0 };
    let d: Vec<f64> = (0..=n)
        .map(|k| c[k] * s.powi(k as i32) / (lead * s.powi(n as i32)))
        .collect();
    let mut comp = DMatrix::<f64>::zeros(n, n);
    for i in 1..n {
        comp[(i, i - 1)] = 1.0;
    }
    for i in 0..n {
        comp[(i, n - 1)] = -d[i];
    }
    let eig = comp.complex_eigenvalues();
    let mut out = PositiveRoots::default();
    for v0 in eig.iter() {
        let mut v = *v0;
        for _ in 0..3 {
            let p = horner(&d, v);
            let dp = horner_d(&d, v);
            if dp.norm() == 0.0 {
                break;
            }
            let next = v - p / dp;
            if horner(&d, next).norm() < p.norm() {
                v = next;
            } else {
                break;
            }
        }
        let tol = v.re.abs().max(1.0);
        if v.re <= 0.0 {
            continue;
        }
        if v.im.abs() <= ROOT_IMAG_TOLERANCE * tol {
            out.roots.push(v.re * s);
        } else if v.im.abs() <= ROOT_BORDERLINE_TOLERANCE * tol {
            out.borderline.push(v.re * s);
        }
    }
    out.roots.sort_by(f64::total_cmp);
    out.roots.dedup_by(|a, b| (*a - *b).abs() <= 1e-14 * a.abs().max(b.abs()));
    out.borderline.sort_by(f64::total_cmp);
    out
}

/// `f(rho, Omega) = a^2 + (b - Omega)^2 rho^2 - (eps r)^2`.
pub fn amplitude_function(sd: &SlowDynamics, r: f64, epsilon: f64, omega: f64, rho: f64) -> f64 {
    let a = sd.a(rho);
    let d = sd.b(rho) - omega;
    a * a + d * d * rho * rho - (epsilon * r).powi(2)
}

fn amplitude_function_d(sd: &SlowDynamics, omega: f64, rho: f64) -> f64 {
    let a = sd.a(rho);
    let d = sd.b(rho) - omega;
    2.0 * a * sd.da(rho) + 2.0 * d * sd.db(rho) * rho * rho + 2.0 * d * d * rho
}

/// Coefficients (in `u = rho^2`) of `u (A(u)^2 + B(u)^2) - (eps r)^2`.
pub fn amplitude_polynomial(sd: &SlowDynamics, r: f64, epsilon: f64, omega: f64) -> Vec<f64> {
    let a = sd.a_coeffs.clone();
    let mut b = sd.b_coeffs.clone();
    b[0] -= omega;
    let sq = poly_add(&poly_mul(&a, &a), &poly_mul(&b, &b));
    let mut p = vec![-(epsilon * r).powi(2)];
    p.extend(sq);
    p
}

fn polish(sd: &SlowDynamics, r: f64, epsilon: f64, omega: f64, rho0: f64) -> f64 {
    let mut rho = rho0;
    let mut f = amplitude_function(sd, r, epsilon, omega, rho).abs();
    for _ in 0..2 {
        let df = amplitude_function_d(sd, omega, rho);
        if df == 0.0 || f == 0.0 {
            break;
        }
        let next = rho - amplitude_function(sd, r, epsilon, omega, rho) / df;
        let fnext = amplitude_function(sd, r, epsilon, omega, next).abs();
        if next > 0.0 && fnext < f {
            rho = next;
            f = fnext;
        } else {
            break;
        }
    }
    rho
}

/// All positive amplitudes `rho` of periodic responses at frequency `omega`.
pub fn response_amplitudes(sd: &SlowDynamics, r: f64, epsilon: f64, omega: f64) -> Result<Vec<f64>> {
    Ok(response_amplitudes_detailed(sd, r, epsilon, omega)?.roots)
}

/// Like [`response_amplitudes`] but also returns flagged near-real roots.
pub fn response_amplitudes_detailed(
    sd: &SlowDynamics,
    r: f64,
    epsilon: f64,
    omega: f64,
) -> Result<PositiveRoots> {
    if r == 0.0 || epsilon == 0.0 {
        return Err(Error::DegenerateForcing);
    }
    let p = amplitude_polynomial(sd, r, epsilon, omega);
    let u = positive_real_roots(&p);
    let fix = |v: &Vec<f64>| -> Vec<f64> {
        v.iter()
            .map(|u| polish(sd, r, epsilon, omega, u.sqrt()))
            .collect()
    };
    Ok(PositiveRoots {
        roots: fix(&u.roots),
        borderline: fix(&u.borderline),
    })
}

/// Phase `psi = arccos((Omega - b) rho / (eps r))` in `[0, pi]`.
pub fn phase_shift(sd: &SlowDynamics, rho: f64, r: f64, epsilon: f64, omega: f64) -> Result<f64> {
    let arg = (omega - sd.b(rho)) * rho / (epsilon * r);
    if !arg.is_finite() || arg.abs() > 1.0 + PHASE_CLAMP {
        return Err(Error::InconsistentResponsePoint(arg));
    }
    Ok(arg.clamp(-1.0, 1.0).acos())
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct StabilityInfo {
    pub stable: bool,
    pub trace: f64,
    pub det: f64,
    pub jac_eigs: [Complex64; 2],
}

/// Jacobian of the polar reduced dynamics `(rho, psi)` at a response point.
pub fn jacobian(sd: &SlowDynamics, rho: f64, omega: f64) -> [[f64; 2]; 2] {
    let d = omega - sd.b(rho);
    [
        [sd.da(rho), d * rho],
        [sd.db(rho) - d / rho, sd.a(rho) / rho],
    ]
}

/// Routh-Hurwitz classification of a response point.
pub fn stability(sd: &SlowDynamics, rho: f64, omega: f64) -> StabilityInfo {
    let j = jacobian(sd, rho, omega);
    let trace = j[0][0] + j[1][1];
    let det = j[0][0] * j[1][1] - j[0][1] * j[1][0];
    let disc = Complex64::new(trace * trace - 4.0 * det, 0.0).sqrt();
    let e1 = (Complex64::new(trace, 0.0) + disc) * 0.5;
    let e2 = (Complex64::new(trace, 0.0) - disc) * 0.5;
    StabilityInfo {
        stable: trace < 0.0 && det > 0.0,
        trace,
        det,
        jac_eigs: [e1, e2],
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ResponsePoint {
    pub omega: f64,
    pub rho: f64,
    pub psi: f64,
    pub stable: bool,
    pub jac_eigs: [Complex64; 2],
}

impl ResponsePoint {
    pub fn new(sd: &SlowDynamics, r: f64, epsilon: f64, omega: f64, rho: f64) -> Result<Self> {
        let psi = phase_shift(sd, rho, r, epsilon, omega)?;
        let st = stability(sd, rho, omega);
        Ok(Self {
            omega,
            rho,
            psi,
            stable: st.stable,
            jac_eigs: st.jac_eigs,
        })
    }
}

/// All response points at one frequency, ordered by amplitude.
pub fn response_points(
    sd: &SlowDynamics,
    r: f64,
    epsilon: f64,
    omega: f64,
) -> Result<Vec<ResponsePoint>> {
    response_amplitudes(sd, r, epsilon, omega)?
        .into_iter()
        .map(|rho| ResponsePoint::new(sd, r, epsilon, omega, rho))
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct BackbonePoint {
    pub rho_max: f64,
    pub omega_max: f64,
    pub psi: f64,
}

/// `Omega_max(rho) = b(rho)` with the phase fixed at `pi/2`.
pub fn backbone_curve(sd: &SlowDynamics, rho_grid: &[f64]) -> Vec<BackbonePoint> {
    rho_grid
        .iter()
        .map(|&rho| BackbonePoint {
            rho_max: rho,
            omega_max: sd.b(rho),
            psi: FRAC_PI_2,
        })
        .collect()
}

/// Peak amplitudes: positive roots of `a(rho)^2 = (eps r)^2`.
pub fn max_amplitude(sd: &SlowDynamics, r: f64, epsilon: f64) -> Result<Vec<f64>> {
    if r == 0.0 || epsilon == 0.0 {
        return Err(Error::DegenerateForcing);
    }
    let a = &sd.a_coeffs;
    let mut p = vec![-(epsilon * r).powi(2)];
    p.extend(poly_mul(a, a));
    let roots = positive_real_roots(&p);
    Ok(roots
        .roots
        .into_iter()
        .map(|u| {
            let mut rho = u.sqrt();
            // Newton on a(rho)^2 - (eps r)^2
            for _ in 0..2 {
                let g = sd.a(rho).powi(2) - (epsilon * r).powi(2);
                let dg = 2.0 * sd.a(rho) * sd.da(rho);
                if dg == 0.0 {
                    break;
                }
                let next = rho - g / dg;
                if next > 0.0
                    && (sd.a(next).powi(2) - (epsilon * r).powi(2)).abs() < g.abs()
                {
                    rho = next;
                }
            }
            rho
        })
        .collect())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum BranchSide {
    Plus,
    Minus,
}

/// A connected piece of a frequency-response curve.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FRFBranch {
    pub side: BranchSide,
    pub label: String,
    pub points: Vec<ResponsePoint>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FrfSweep {
    pub plus: Vec<FRFBranch>,
    pub minus: Vec<FRFBranch>,
}

impl FrfSweep {
    pub fn points(&self) -> impl Iterator<Item = &ResponsePoint> {
        self.plus
            .iter()
            .chain(&self.minus)
            .flat_map(|b| b.points.iter())
    }

    pub fn is_empty(&self) -> bool {
        self.plus.is_empty() && self.minus.is_empty()
    }
}

fn median_step(grid: &[f64]) -> f64 {
    let mut steps: Vec<f64> = grid.windows(2).map(|w| (w[1] - w[0]).abs()).collect();
    if steps.is_empty() {
        return 0.0;
    }
    steps.sort_by(f64::total_cmp);
    steps[steps.len() / 2]
}

/// The two branches `Omega+-(rho) = b(rho) +- sqrt((eps r)^2 - a(rho)^2) / rho`.
pub fn frf_sweep(sd: &SlowDynamics, r: f64, epsilon: f64, rho_grid: &[f64]) -> Result<FrfSweep> {
    if r == 0.0 || epsilon == 0.0 {
        return Err(Error::DegenerateForcing);
    }
    let er = epsilon * r;
    let split = 10.0 * median_step(rho_grid);
    let mut sweep = FrfSweep {
        plus: Vec::new(),
        minus: Vec::new(),
    };
    for side in [BranchSide::Plus, BranchSide::Minus] {
        let sign = if side == BranchSide::Plus { 1.0 } else { -1.0 };
        let branches = if side == BranchSide::Plus {
            &mut sweep.plus
        } else {
            &mut sweep.minus
        };
        let mut current: Vec<ResponsePoint> = Vec::new();
        let mut prev_rho: Option<f64> = None;
        let mut gap = false;
        for &rho in rho_grid {
            if rho <= 0.0 {
                continue;
            }
            let a = sd.a(rho);
            let mut rad = er * er - a * a;
            if rad < 0.0 {
                // a grid point placed on the peak amplitude lands here through rounding
                if rad > -PEAK_ROUNDING * er * er {
                    rad = 0.0;
                } else {
                    gap = true;
                    continue;
                }
            }
            let b = sd.b(rho);
            let root = rad.sqrt();
            let omega = b + sign * root / rho;
            // Omega - b is known exactly here, so build the phase from it directly.
            let arg = (sign * root / er).clamp(-1.0, 1.0);
            let st = stability(sd, rho, omega);
            let pt = ResponsePoint {
                omega,
                rho,
                psi: arg.acos(),
                stable: st.stable,
                jac_eigs: st.jac_eigs,
            };
            let jump = prev_rho.map_or(false, |p| split > 0.0 && (rho - p).abs() > split);
            if (gap || jump) && !current.is_empty() {
                branches.push(FRFBranch {
                    side,
                    label: String::new(),
                    points: std::mem::take(&mut current),
                });
            }
            gap = false;
            current.push(pt);
            prev_rho = Some(rho);
        }
        if !current.is_empty() {
            branches.push(FRFBranch {
                side,
                label: String::new(),
                points: current,
            });
        }
    }
    Ok(sweep)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct BoundaryPoint {
    pub rho: f64,
    pub omega_crit_minus: Option<f64>,
    pub omega_crit_plus: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct StabilityBoundaries {
    pub points: Vec<BoundaryPoint>,
    /// Amplitudes where the trace condition `a' + a/rho < 0` changes sign.
    pub critical_amplitudes: Vec<f64>,
}

/// `S(rho) = sum_m m Im(beta_m) rho^{2m}`.
fn s_term(sd: &SlowDynamics, rho: f64) -> f64 {
    sd.b_coeffs
        .iter()
        .enumerate()
        .skip(1)
        .map(|(m, c)| m as f64 * c * rho.powi(2 * m as i32))
        .sum()
}

/// Curves `Omega_crit+-(rho)` where the Jacobian determinant vanishes.
pub fn stability_boundaries(sd: &SlowDynamics, rho_grid: &[f64]) -> StabilityBoundaries {
    let points = rho_grid
        .iter()
        .map(|&rho| {
            let s = s_term(sd, rho);
            let rad = s * s - sd.a(rho) * sd.da(rho) / rho;
            if rad >= 0.0 && rho > 0.0 {
                let b = sd.b(rho);
                BoundaryPoint {
                    rho,
                    omega_crit_minus: Some(b + s - rad.sqrt()),
                    omega_crit_plus: Some(b + s + rad.sqrt()),
                }
            } else {
                BoundaryPoint {
                    rho,
                    omega_crit_minus: None,
                    omega_crit_plus: None,
                }
            }
        })
        .collect();
    // a' + a/rho = 2 sum (m+1) Re(beta_m) u^m with beta_0 = lambda
    let trace_poly: Vec<f64> = sd
        .a_coeffs
        .iter()
        .enumerate()
        .map(|(m, c)| (m + 1) as f64 * c)
        .collect();
    let critical_amplitudes = positive_real_roots(&trace_poly)
        .roots
        .into_iter()
        .map(f64::sqrt)
        .collect();
    StabilityBoundaries {
        points,
        critical_amplitudes,
    }
}

/// Complex amplitudes `x_{j Omega}` of the physical response, `|j| <= 2M+1`.
#[derive(Clone, Debug, PartialEq)]
pub struct HarmonicSpectrum {
    pub omega: f64,
    pub amplitudes: BTreeMap<i32, DVector<Complex64>>,
}

impl HarmonicSpectrum {
    pub fn get(&self, j: i32) -> Option<&DVector<Complex64>> {
        self.amplitudes.get(&j)
    }

    pub fn max_harmonic(&self) -> i32 {
        self.amplitudes.keys().copied().max().unwrap_or(0)
    }

    /// `sum_j x_j e^{i j Omega t}`.
    pub fn time_signal(&self, t: f64) -> DVector<Complex64> {
        let dim = self.amplitudes.values().next().map_or(0, |v| v.len());
        let mut out = DVector::zeros(dim);
        for (&j, x) in &self.amplitudes {
            let ph = Complex64::new(0.0, j as f64 * self.omega * t).exp();
            out.axpy(ph, x, Complex64::new(1.0, 0.0));
        }
        out
    }
}

/// Harmonic content of the response `(rho, psi)` on the forced SSM.
pub fn physical_harmonics(fssm: &ForcedSSM, rho: f64, psi: f64) -> HarmonicSpectrum {
    let max_deg = fssm.base.w0.keys().map(|k| k.0 + k.1).max().unwrap_or(1);
    let dim = fssm.w_plus.len();
    let mut amplitudes = BTreeMap::new();
    for j in 0..=(max_deg as i32) {
        let ju = j as usize;
        let mut pos = DVector::<Complex64>::zeros(dim);
        let mut neg = DVector::<Complex64>::zeros(dim);
        let mut m = 0;
        while 2 * m + ju <= max_deg {
            let scale = rho.powi((2 * m + ju) as i32);
            let ph = Complex64::from_polar(scale, j as f64 * psi);
            if let Some(w) = fssm.base.w0.get(&(m + ju, m)) {
                pos.axpy(ph, w, Complex64::new(1.0, 0.0));
            }
            if j > 0 {
                if let Some(w) = fssm.base.w0.get(&(m, m + ju)) {
                    neg.axpy(ph.conj(), w, Complex64::new(1.0, 0.0));
                }
            }
            m += 1;
        }
        if j == 1 {
            pos.axpy(
                Complex64::new(fssm.epsilon, 0.0),
                &fssm.w_plus,
                Complex64::new(1.0, 0.0),
            );
            neg.axpy(
                Complex64::new(fssm.epsilon, 0.0),
                &fssm.w_minus,
                Complex64::new(1.0, 0.0),
            );
        }
        amplitudes.insert(j, pos);
        if j > 0 {
            amplitudes.insert(-j, neg);
        }
    }
    HarmonicSpectrum {
        omega: fssm.omega,
        amplitudes,
    }
}

/// Complex modal coordinate `p = E^-1 q_j` (displacement part) of harmonic `j`.
pub fn modal_projection(spec: &Spectrum, x: &DVector<Complex64>) -> DVector<Complex64> {
    let n = spec.n_dof;
    let q = x.rows(0, n).clone_owned();
    spec.modal_basis_inverse.map(|v| Complex64::new(v, 0.0)) * q
}

/// Amplitude of harmonic `j` of modal coordinate `mode` (1-based):
/// `2 |p_{mode, j}|` for `j != 0` and `|p_{mode, 0}|` for the static part.
pub fn modal_amplitude(spec: &Spectrum, harmonics: &HarmonicSpectrum, mode: usize, j: i32) -> Result<f64> {
    let k = spec.master(mode)?;
    let Some(x) = harmonics.get(j) else {
        return Ok(0.0);
    };
    let p = modal_projection(spec, x)[k];
    Ok(if j == 0 { p.norm() } else { 2.0 * p.norm() })
}

/// Modal projection `E^-1 M^-1 f` of a physical force vector.
pub fn modal_force(spec: &Spectrum, mass_inverse: &DMatrix<f64>, f: &DVector<f64>) -> DVector<f64> {
    &spec.modal_basis_inverse * (mass_inverse * f)
}

/// Lag of a modal first-harmonic amplitude `p1` behind a modal force with
/// complex amplitude `force`, wrapped to `(-pi, pi]`.
pub fn phase_lag(p1: Complex64, force: Complex64) -> f64 {
    let mut d = force.arg() - p1.arg();
    while d <= -PI {
        d += 2.0 * PI;
    }
    while d > PI {
        d -= 2.0 * PI;
    }
    d
}

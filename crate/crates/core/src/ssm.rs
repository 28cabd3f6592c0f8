//! Autonomous two-dimensional SSM: diagonalized nonlinearity, closed-form
//! cubic coefficients, and an order-by-order homological solver.

use std::collections::BTreeMap;

use nalgebra::DVector;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::model::FirstOrderSystem;
use crate::poly::{compose_field, BiPoly, BiPolyVec, MultiIndex, PolynomialField, ScalarPoly};
use crate::spectral::Spectrum;

const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };
const ONE: Complex64 = Complex64 { re: 1.0, im: 0.0 };

/// Default small-denominator threshold relative to `|Im lambda_l|`.
pub const SMALL_DENOMINATOR_FACTOR: f64 = 1e-3;

/// `G(y) = V^-1 G_nlin(V y)` in multi-index form.
#[derive(Clone, Debug, PartialEq)]
pub struct DiagonalizedNonlinearity {
    pub field: PolynomialField<Complex64>,
}

impl DiagonalizedNonlinearity {
    pub fn coefficient(&self, m: &[u32]) -> DVector<Complex64> {
        self.field
            .get(m)
            .cloned()
            .unwrap_or_else(|| DVector::zeros(self.field.n_out()))
    }
}

/// Expands the nonlinearity in the eigenbasis by exact polynomial composition.
pub fn diagonalize_nonlinearity(
    fos: &FirstOrderSystem,
    spec: &Spectrum,
) -> Result<DiagonalizedNonlinearity> {
    let dim = fos.dim;
    if spec.dim() != dim {
        return Err(Error::DimensionMismatch {
            expected: dim,
            got: spec.dim(),
        });
    }
    // x_i = sum_j V_ij y_j, with cached powers
    let forms: Vec<ScalarPoly> = (0..dim)
        .map(|i| {
            let row: Vec<Complex64> = spec.v_matrix.row(i).iter().copied().collect();
            ScalarPoly::linear(&row)
        })
        .collect();
    let mut powers: Vec<Vec<ScalarPoly>> = (0..dim)
        .map(|_| vec![ScalarPoly::constant(dim, ONE)])
        .collect();

    let mut field = PolynomialField::new(dim, dim);
    for (m, c) in fos.nonlinearity.terms() {
        let cc = c.map(|x| Complex64::new(x, 0.0));
        let projected = &spec.v_inverse * cc;
        let mut prod = ScalarPoly::constant(dim, ONE);
        for (i, &e) in m.iter().enumerate() {
            if e == 0 {
                continue;
            }
            while powers[i].len() <= e as usize {
                let next = powers[i].last().expect("non-empty").mul(&forms[i]);
                powers[i].push(next);
            }
            prod = prod.mul(&powers[i][e as usize]);
        }
        for (mi, s) in prod.terms {
            field.add_term(mi, projected.map(|p| p * s))?;
        }
    }
    Ok(DiagonalizedNonlinearity { field })
}

/// Coefficients of `W_0(z, zbar)` and the reduced dynamics
/// `R_0(z) = lambda_l z + sum_m beta_m z^{m+1} zbar^m`.
#[derive(Clone, Debug, PartialEq)]
pub struct SSMCoefficients {
    /// 1-based master mode.
    pub master_index: usize,
    pub order_m: usize,
    pub lambda_l: Complex64,
    pub beta: Vec<Complex64>,
    /// Physical-coordinate coefficients `w_0^{(m,n)} = V w^{(m,n)}`.
    pub w0: BTreeMap<(usize, usize), DVector<Complex64>>,
    /// Coefficients in the eigenbasis coordinates `y`.
    pub w0_modal: BiPolyVec,
}

impl SSMCoefficients {
    /// Physical state on the SSM at parameter `z`.
    pub fn eval_w0(&self, z: Complex64) -> DVector<Complex64> {
        let dim = self.w0_modal.dim;
        let mut out = DVector::zeros(dim);
        for (&(m, n), v) in &self.w0 {
            out.axpy(z.powu(m as u32) * z.conj().powu(n as u32), v, ONE);
        }
        out
    }

    /// First component of the reduced dynamics.
    pub fn eval_r0(&self, z: Complex64) -> Complex64 {
        let zz = z * z.conj();
        let mut out = self.lambda_l * z;
        for (k, b) in self.beta.iter().enumerate() {
            out += b * z * zz.powu(k as u32 + 1);
        }
        out
    }

    pub fn w0_coefficient(&self, m: usize, n: usize) -> DVector<Complex64> {
        self.w0
            .get(&(m, n))
            .cloned()
            .unwrap_or_else(|| DVector::zeros(self.w0_modal.dim))
    }

    pub fn slow_dynamics(&self) -> SlowDynamics {
        slow_dynamics(self)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SolverOptions {
    /// Denominators below `factor * |Im lambda_l|` are rejected.
    pub small_denominator_factor: f64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            small_denominator_factor: SMALL_DENOMINATOR_FACTOR,
        }
    }
}

fn unit(dim: usize, j: usize) -> DVector<Complex64> {
    let mut v = DVector::zeros(dim);
    v[j] = ONE;
    v
}

fn finish(
    spec: &Spectrum,
    l: usize,
    order_m: usize,
    beta: Vec<Complex64>,
    w0_modal: BiPolyVec,
) -> SSMCoefficients {
    let w0 = w0_modal
        .terms
        .iter()
        .map(|(k, v)| (*k, &spec.v_matrix * v))
        .collect();
    SSMCoefficients {
        master_index: l,
        order_m,
        lambda_l: spec.eigenvalues[l - 1],
        beta,
        w0,
        w0_modal,
    }
}

fn check_denominator(
    den: Complex64,
    threshold: f64,
    key: (usize, usize),
    j: usize,
) -> Result<Complex64> {
    if den.norm() < threshold {
        Err(Error::NearResonantDenominator {
            m: key.0,
            n: key.1,
            component: j + 1,
            magnitude: den.norm(),
        })
    } else {
        Ok(den)
    }
}

/// Closed-form cubic SSM coefficients and `beta_1`.
pub fn compute_ssm_order3(
    g: &DiagonalizedNonlinearity,
    spec: &Spectrum,
    l: usize,
) -> Result<SSMCoefficients> {
    compute_ssm_order3_with(g, spec, l, SolverOptions::default())
}

pub fn compute_ssm_order3_with(
    g: &DiagonalizedNonlinearity,
    spec: &Spectrum,
    l: usize,
    opts: SolverOptions,
) -> Result<SSMCoefficients> {
    let il = spec.master(l)?;
    let n = spec.n_dof;
    let dim = 2 * n;
    let ic = il + n;
    let lam = &spec.eigenvalues;
    let ll = lam[il];
    let lc = ll.conj();
    let threshold = opts.small_denominator_factor * ll.im.abs();

    let at = |pairs: &[(u32, usize)]| -> MultiIndex {
        let mut m = vec![0u32; dim];
        for &(p, j) in pairs {
            m[j] += p;
        }
        m
    };
    // sum_q (1 + delta_pq) g^{(1@p, 1@q)} w_q
    let contract = |p: usize, w: &DVector<Complex64>| -> DVector<Complex64> {
        let mut out = DVector::zeros(dim);
        for q in 0..dim {
            if w[q] == ZERO {
                continue;
            }
            let factor = if p == q { 2.0 } else { 1.0 };
            out.axpy(w[q] * factor, &g.coefficient(&at(&[(1, p), (1, q)])), ONE);
        }
        out
    };
    let solve = |num: &DVector<Complex64>,
                 shift: Complex64,
                 key: (usize, usize),
                 skip: Option<usize>|
     -> Result<DVector<Complex64>> {
        let mut w = DVector::zeros(dim);
        for j in 0..dim {
            if Some(j) == skip {
                continue;
            }
            let den = check_denominator(shift - lam[j], threshold, key, j)?;
            w[j] = num[j] / den;
        }
        Ok(w)
    };

    let w20 = solve(&g.coefficient(&at(&[(2, il)])), ll * 2.0, (2, 0), None)?;
    let w11 = solve(&g.coefficient(&at(&[(1, il), (1, ic)])), ll + lc, (1, 1), None)?;
    let w02 = solve(&g.coefficient(&at(&[(2, ic)])), lc * 2.0, (0, 2), None)?;

    let num30 = contract(il, &w20) + g.coefficient(&at(&[(3, il)]));
    let w30 = solve(&num30, ll * 3.0, (3, 0), None)?;
    let num03 = contract(ic, &w02) + g.coefficient(&at(&[(3, ic)]));
    let w03 = solve(&num03, lc * 3.0, (0, 3), None)?;
    let num21 =
        contract(il, &w11) + contract(ic, &w20) + g.coefficient(&at(&[(2, il), (1, ic)]));
    let beta1 = num21[il];
    let w21 = solve(&num21, ll * 2.0 + lc, (2, 1), Some(il))?;
    let num12 =
        contract(il, &w02) + contract(ic, &w11) + g.coefficient(&at(&[(1, il), (2, ic)]));
    let w12 = solve(&num12, ll + lc * 2.0, (1, 2), Some(ic))?;

    let mut w = BiPolyVec::new(dim);
    w.add((1, 0), &unit(dim, il));
    w.add((0, 1), &unit(dim, ic));
    for (k, v) in [
        ((2, 0), w20),
        ((1, 1), w11),
        ((0, 2), w02),
        ((3, 0), w30),
        ((2, 1), w21),
        ((1, 2), w12),
        ((0, 3), w03),
    ] {
        if v.iter().any(|c| *c != ZERO) {
            w.add(k, &v);
        }
    }
    Ok(finish(spec, l, 1, vec![beta1], w))
}

/// Adds the contribution of `DW(z) R_0(z)` for `W = w`, restricted to terms from
/// `w`-coefficients of degree `< below` (or all when `None`), to `out` with sign `sign`.
fn add_dw_times_r(
    w: &BiPolyVec,
    lambda: Complex64,
    beta: &[Complex64],
    below: Option<usize>,
    linear_part: bool,
    out: &mut BiPolyVec,
    sign: f64,
) {
    for (&(a, b), v) in &w.terms {
        if let Some(d) = below {
            if a + b >= d {
                continue;
            }
        }
        if linear_part {
            let s = lambda * a as f64 + lambda.conj() * b as f64;
            out.add((a, b), &(v * (s * sign)));
        }
        for (k0, bk) in beta.iter().enumerate() {
            let k = k0 + 1;
            let s = bk * a as f64 + bk.conj() * b as f64;
            if s != ZERO {
                out.add((a + k, b + k), &(v * (s * sign)));
            }
        }
    }
}

/// Order-by-order homological solver up to degree `2M + 1`.
pub fn compute_ssm_general(
    g: &DiagonalizedNonlinearity,
    spec: &Spectrum,
    l: usize,
    order_m: usize,
) -> Result<SSMCoefficients> {
    compute_ssm_general_with(g, spec, l, order_m, SolverOptions::default())
}

pub fn compute_ssm_general_with(
    g: &DiagonalizedNonlinearity,
    spec: &Spectrum,
    l: usize,
    order_m: usize,
    opts: SolverOptions,
) -> Result<SSMCoefficients> {
    if order_m == 0 {
        return Err(Error::Numerical("SSM order M must be at least 1".into()));
    }
    let il = spec.master(l)?;
    let n = spec.n_dof;
    let dim = 2 * n;
    let ic = il + n;
    let lam = &spec.eigenvalues;
    let ll = lam[il];
    let lc = ll.conj();
    let threshold = opts.small_denominator_factor * ll.im.abs();
    let max_deg = 2 * order_m + 1;

    let mut w = BiPolyVec::new(dim);
    w.add((1, 0), &unit(dim, il));
    w.add((0, 1), &unit(dim, ic));
    let mut beta: Vec<Complex64> = Vec::new();

    for d in 2..=max_deg {
        let comps: Vec<BiPoly> = (0..dim).map(|j| w.component(j)).collect();
        let composed = compose_field(&g.field, &comps, Some(d))?;
        let mut rhs = BiPolyVec::new(dim);
        for (k, v) in composed.terms {
            if k.0 + k.1 == d {
                rhs.add(k, &v);
            }
        }
        // known part of DW R_0: beta terms acting on nonlinear w-coefficients
        let mut known = BiPolyVec::new(dim);
        let nonlinear_w = BiPolyVec {
            dim,
            terms: w
                .terms
                .iter()
                .filter(|(k, _)| k.0 + k.1 >= 2)
                .map(|(k, v)| (*k, v.clone()))
                .collect(),
        };
        add_dw_times_r(&nonlinear_w, ll, &beta, None, false, &mut known, 1.0);

        let new_beta_k = if d % 2 == 1 { Some((d - 1) / 2) } else { None };
        let mut beta_d = ZERO;
        for m in 0..=d {
            let key = (m, d - m);
            let mut r = rhs
                .terms
                .get(&key)
                .cloned()
                .unwrap_or_else(|| DVector::zeros(dim));
            if let Some(kv) = known.terms.get(&key) {
                r -= kv;
            }
            let shift = ll * m as f64 + lc * (d - m) as f64;
            let mut coef = DVector::zeros(dim);
            for j in 0..dim {
                if let Some(k) = new_beta_k {
                    if j == il && key == (k + 1, k) {
                        beta_d = r[j];
                        continue;
                    }
                    if j == ic && key == (k, k + 1) {
                        continue;
                    }
                }
                let den = check_denominator(shift - lam[j], threshold, key, j)?;
                coef[j] = r[j] / den;
            }
            if coef.iter().any(|c| *c != ZERO) {
                w.add(key, &coef);
            }
        }
        if new_beta_k.is_some() {
            beta.push(beta_d);
        }
    }
    Ok(finish(spec, l, order_m, beta, w))
}

/// Relative size below which homological defects count as roundoff.
pub const DEFECT_TOLERANCE: f64 = 1e-12;

/// Exact residual polynomial of the invariance equation, kept for repeated evaluation.
///
/// Coefficients of total degree `<= 2M+1` vanish identically once the homological
/// equations are solved, so what remains there is rounding in the stored
/// coefficients. When that defect is below [`DEFECT_TOLERANCE`] (relative to the
/// largest SSM coefficient) those terms are dropped from [`InvarianceResidual::eval`];
/// otherwise they are kept so a faulty solve shows up in the residual.
#[derive(Clone, Debug)]
pub struct InvarianceResidual {
    /// Physical-coordinate coefficients of `A W + G_nlin(W) - DW R_0`.
    pub poly: BiPolyVec,
    pub solved_degree: usize,
    pub defect: f64,
    truncation: BiPolyVec,
}

impl InvarianceResidual {
    pub fn new(
        ssm: &SSMCoefficients,
        g: &DiagonalizedNonlinearity,
        spec: &Spectrum,
    ) -> Result<Self> {
        let dim = ssm.w0_modal.dim;
        let w = &ssm.w0_modal;
        let comps: Vec<BiPoly> = (0..dim).map(|j| w.component(j)).collect();
        // modal frame: Lambda w + G(w) - Dw R
        let mut res = compose_field(&g.field, &comps, None)?;
        for (k, v) in &w.terms {
            let lv = DVector::from_iterator(
                dim,
                v.iter().zip(&spec.eigenvalues).map(|(a, b)| a * b),
            );
            res.add(*k, &lv);
        }
        add_dw_times_r(w, ssm.lambda_l, &ssm.beta, None, true, &mut res, -1.0);
        let poly = BiPolyVec {
            dim,
            terms: res
                .terms
                .into_iter()
                .map(|(k, v)| (k, &spec.v_matrix * v))
                .collect(),
        };
        let solved_degree = 2 * ssm.order_m + 1;
        let defect = poly
            .terms
            .iter()
            .filter(|(k, _)| k.0 + k.1 <= solved_degree)
            .map(|(_, v)| v.norm())
            .fold(0.0, f64::max);
        let scale = ssm.w0.values().map(|v| v.norm()).fold(1.0, f64::max);
        let truncation = if defect <= DEFECT_TOLERANCE * scale {
            BiPolyVec {
                dim,
                terms: poly
                    .terms
                    .iter()
                    .filter(|(k, _)| k.0 + k.1 > solved_degree)
                    .map(|(k, v)| (*k, v.clone()))
                    .collect(),
            }
        } else {
            poly.clone()
        };
        Ok(Self {
            poly,
            solved_degree,
            defect,
            truncation,
        })
    }

    /// Residual norm at `z` with roundoff-level homological defects removed.
    pub fn eval(&self, z: Complex64) -> f64 {
        self.truncation.eval(z, z.conj()).norm()
    }

    /// Residual norm at `z` including every stored coefficient.
    pub fn eval_full(&self, z: Complex64) -> f64 {
        self.poly.eval(z, z.conj()).norm()
    }

    /// Largest coefficient magnitude among terms of total degree `<= d`.
    pub fn low_order_defect(&self, d: usize) -> f64 {
        self.poly
            .terms
            .iter()
            .filter(|(k, _)| k.0 + k.1 <= d)
            .map(|(_, v)| v.norm())
            .fold(0.0, f64::max)
    }
}

/// Norm of the invariance residual at `z`.
pub fn invariance_residual(
    ssm: &SSMCoefficients,
    g: &DiagonalizedNonlinearity,
    spec: &Spectrum,
    z: Complex64,
) -> Result<f64> {
    Ok(InvarianceResidual::new(ssm, g, spec)?.eval(z))
}

/// Largest `s` (from a geometric scan) such that the residual stays below 1% of
/// `|R_0(z)|` for all `|z| <= s` sampled on 16 angles.
pub fn validity_radius(ssm: &SSMCoefficients, residual: &InvarianceResidual, s_max: f64) -> f64 {
    let mut s = 1e-6;
    let mut last_ok = 0.0;
    while s <= s_max {
        let ok = (0..16).all(|k| {
            let z = Complex64::from_polar(s, std::f64::consts::TAU * k as f64 / 16.0);
            residual.eval(z) < 0.01 * ssm.eval_r0(z).norm()
        });
        if !ok {
            break;
        }
        last_ok = s;
        s *= 1.05;
    }
    last_ok
}

/// Least-squares slope of `log residual` against `log s` over `s_values`,
/// averaging the residual over 8 angles.
pub fn residual_slope(residual: &InvarianceResidual, s_values: &[f64]) -> f64 {
    let pts: Vec<(f64, f64)> = s_values
        .iter()
        .map(|&s| {
            let mean = (0..8)
                .map(|k| residual.eval(Complex64::from_polar(s, 0.3 + 0.7 * k as f64)))
                .sum::<f64>()
                / 8.0;
            (s.ln(), mean.ln())
        })
        .collect();
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    sxy / sxx
}

/// Polar form of the reduced dynamics: radial rate `a(rho)` and frequency `b(rho)`.
#[derive(Clone, Debug, PartialEq)]
pub struct SlowDynamics {
    /// `Re lambda_l, Re beta_1, ..., Re beta_M`.
    pub a_coeffs: Vec<f64>,
    /// `Im lambda_l, Im beta_1, ..., Im beta_M`.
    pub b_coeffs: Vec<f64>,
}

impl SlowDynamics {
    pub fn new(lambda: Complex64, beta: &[Complex64]) -> Self {
        let mut a = vec![lambda.re];
        let mut b = vec![lambda.im];
        a.extend(beta.iter().map(|x| x.re));
        b.extend(beta.iter().map(|x| x.im));
        Self {
            a_coeffs: a,
            b_coeffs: b,
        }
    }

    pub fn order_m(&self) -> usize {
        self.a_coeffs.len() - 1
    }

    pub fn a(&self, rho: f64) -> f64 {
        let r2 = rho * rho;
        rho * self.a_coeffs.iter().rev().fold(0.0, |acc, c| acc * r2 + c)
    }

    pub fn b(&self, rho: f64) -> f64 {
        let r2 = rho * rho;
        self.b_coeffs.iter().rev().fold(0.0, |acc, c| acc * r2 + c)
    }

    pub fn da(&self, rho: f64) -> f64 {
        self.a_coeffs
            .iter()
            .enumerate()
            .map(|(m, c)| (2 * m + 1) as f64 * c * rho.powi(2 * m as i32))
            .sum()
    }

    pub fn db(&self, rho: f64) -> f64 {
        self.b_coeffs
            .iter()
            .enumerate()
            .skip(1)
            .map(|(m, c)| 2.0 * m as f64 * c * rho.powi(2 * m as i32 - 1))
            .sum()
    }
}

pub fn slow_dynamics(ssm: &SSMCoefficients) -> SlowDynamics {
    SlowDynamics::new(ssm.lambda_l, &ssm.beta)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{
        builtin_model, first_order_form, BuiltinModel, ForcingDefinition, MechanicalSystem,
        ModelParams,
    };
    use crate::spectral::{compute_spectrum, normalize_for_imaginary_rc};
    use approx::assert_abs_diff_eq;
    use nalgebra::DMatrix;
    use rand::{Rng, SeedableRng};

    struct Setup {
        fos: FirstOrderSystem,
        spec: Spectrum,
        g: DiagonalizedNonlinearity,
    }

    fn setup_sys(sys: &MechanicalSystem) -> Setup {
        let fos = first_order_form(sys).unwrap();
        let spec = compute_spectrum(&fos).unwrap();
        let spec = match fos.g_plus() {
            Ok(gp) => normalize_for_imaginary_rc(&spec, &gp, 1).unwrap_or(spec),
            Err(_) => spec,
        };
        let g = diagonalize_nonlinearity(&fos, &spec).unwrap();
        Setup { fos, spec, g }
    }

    fn setup(m: BuiltinModel) -> Setup {
        setup_sys(&builtin_model(m, &ModelParams::new()).unwrap())
    }

    fn max_diff(a: &SSMCoefficients, b: &SSMCoefficients, max_deg: usize) -> f64 {
        let mut worst: f64 = 0.0;
        for d in 1..=max_deg {
            for m in 0..=d {
                let k = (m, d - m);
                worst = worst.max((a.w0_coefficient(k.0, k.1) - b.w0_coefficient(k.0, k.1)).norm());
            }
        }
        worst
    }

    #[test]
    fn zero_nonlinearity_gives_empty_field() {
        let s = setup_sys(
            &builtin_model(BuiltinModel::ShawPierre, &ModelParams::new())
                .unwrap()
                .linearized(),
        );
        assert!(s.g.field.is_empty());
        let c3 = compute_ssm_order3(&s.g, &s.spec, 1).unwrap();
        assert_eq!(c3.beta, vec![ZERO]);
        assert_eq!(c3.w0.len(), 2);
        let c5 = compute_ssm_general(&s.g, &s.spec, 1, 2).unwrap();
        assert_eq!(c5.beta, vec![ZERO, ZERO]);
        assert_eq!(c5.w0.len(), 2);
    }

    #[test]
    fn diagonalized_field_matches_pointwise() {
        let mut rng = rand::rngs::StdRng::seed_from_u64(7);
        for m in BuiltinModel::ALL {
            let s = setup(m);
            let dim = s.fos.dim;
            for _ in 0..100 {
                // y with conjugate structure so that x = V y is real
                let half: Vec<Complex64> = (0..dim / 2)
                    .map(|_| Complex64::new(rng.gen_range(-0.5..0.5), rng.gen_range(-0.5..0.5)))
                    .collect();
                let y: Vec<Complex64> = half
                    .iter()
                    .copied()
                    .chain(half.iter().map(|c| c.conj()))
                    .collect();
                let yv = DVector::from_vec(y.clone());
                let x = &s.spec.v_matrix * &yv;
                let xr: Vec<f64> = x.iter().map(|c| c.re).collect();
                let gx = s.fos.nonlinearity.evaluate(&xr).unwrap();
                let expected = &s.spec.v_inverse * gx.map(|v| Complex64::new(v, 0.0));
                let got = s.g.field.evaluate(&y).unwrap();
                assert!((got - expected).norm() < 1e-12, "{m}");
            }
        }
    }

    #[test]
    fn shaw_pierre_cubic_expansion() {
        // kappa (sum_j V_1j y_j)^3 projected onto row t_k: check the y_1^3 coefficient
        let s = setup(BuiltinModel::ShawPierre);
        let v10 = s.spec.v_matrix[(0, 0)];
        for k in 0..4 {
            let got = s.g.coefficient(&[3, 0, 0, 0])[k];
            // G_nlin = (0, -M^-1 f_nlin): the lower block only
            let t = s.spec.v_inverse[(k, 2)];
            let expected = -t * 0.5 * v10.powu(3);
            assert_abs_diff_eq!(got.re, expected.re, epsilon = 1e-14);
            assert_abs_diff_eq!(got.im, expected.im, epsilon = 1e-14);
            // mixed term 3 kappa V_10^2 V_11 y_1^2 y_2
            let got = s.g.coefficient(&[2, 1, 0, 0])[k];
            let expected = -t * 1.5 * v10 * v10 * s.spec.v_matrix[(0, 1)];
            assert!((got - expected).norm() < 1e-14);
        }
    }

    #[test]
    fn diagonalized_conjugate_structure() {
        for m in BuiltinModel::ALL {
            let s = setup(m);
            let n = s.spec.n_dof;
            for (mi, c) in s.g.field.terms() {
                let swapped: Vec<u32> = mi[n..].iter().chain(&mi[..n]).copied().collect();
                let partner = s.g.coefficient(&swapped);
                for j in 0..2 * n {
                    let jj = (j + n) % (2 * n);
                    assert!((partner[jj] - c[j].conj()).norm() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn closed_form_matches_generic_solver() {
        for m in BuiltinModel::ALL {
            let s = setup(m);
            let c3 = compute_ssm_order3(&s.g, &s.spec, 1).unwrap();
            let cg = compute_ssm_general(&s.g, &s.spec, 1, 1).unwrap();
            assert!((c3.beta[0] - cg.beta[0]).norm() < 1e-12, "{m}");
            assert!(max_diff(&c3, &cg, 3) < 1e-12, "{m}");
        }
    }

    #[test]
    fn synthetic_quadratic_term() {
        let s = setup(BuiltinModel::ShawPierre);
        let dim = 4;
        let mut field = PolynomialField::new(dim, dim);
        let coeff = DVector::from_vec(vec![
            Complex64::new(0.3, 0.1),
            Complex64::new(-0.2, 0.4),
            Complex64::new(0.5, 0.0),
            Complex64::new(0.0, -0.7),
        ]);
        field.add_term(vec![2, 0, 0, 0], coeff.clone()).unwrap();
        let g = DiagonalizedNonlinearity { field };
        let c3 = compute_ssm_order3(&g, &s.spec, 1).unwrap();
        let cg = compute_ssm_general(&g, &s.spec, 1, 1).unwrap();
        let w20 = &c3.w0_modal.terms[&(2, 0)];
        for j in 0..dim {
            let expected = coeff[j] / (s.spec.eigenvalues[0] * 2.0 - s.spec.eigenvalues[j]);
            assert!((w20[j] - expected).norm() < 1e-15);
            assert!((cg.w0_modal.terms[&(2, 0)][j] - expected).norm() < 1e-15);
        }
    }

    #[test]
    fn tangency_and_reality() {
        for m in BuiltinModel::ALL {
            let s = setup(m);
            let c = compute_ssm_general(&s.g, &s.spec, 1, 2).unwrap();
            let n = s.spec.n_dof;
            let vl = s.spec.v_matrix.column(0).clone_owned();
            let vc = s.spec.v_matrix.column(n).clone_owned();
            assert!((c.w0_coefficient(1, 0) - vl).norm() < 1e-15);
            assert!((c.w0_coefficient(0, 1) - vc).norm() < 1e-15);
            assert!(!c.w0.contains_key(&(0, 0)));
            for (&(a, b), v) in &c.w0 {
                let partner = c.w0_coefficient(b, a);
                assert!((partner - v.map(|x| x.conj())).norm() < 1e-12 * (1.0 + v.norm()));
            }
            for (&(a, b), v) in &c.w0_modal.terms {
                let p = &c.w0_modal.terms[&(b, a)];
                for j in 0..2 * n {
                    assert!((p[(j + n) % (2 * n)] - v[j].conj()).norm() < 1e-12 * (1.0 + v.norm()));
                }
            }
            for k in 0..64 {
                let z = Complex64::from_polar(0.05, std::f64::consts::TAU * k as f64 / 64.0);
                let x = c.eval_w0(z);
                assert!(x.iter().all(|v| v.im.abs() < 1e-12), "{m}");
            }
        }
    }

    #[test]
    fn order_consistency_between_m1_and_m2() {
        for m in BuiltinModel::ALL {
            let s = setup(m);
            let c1 = compute_ssm_general(&s.g, &s.spec, 1, 1).unwrap();
            let c2 = compute_ssm_general(&s.g, &s.spec, 1, 2).unwrap();
            assert!(max_diff(&c1, &c2, 3) < 1e-12);
            assert!((c1.beta[0] - c2.beta[0]).norm() < 1e-12);
        }
    }

    #[test]
    fn residual_vanishes_for_linear_and_at_origin() {
        let lin = setup_sys(
            &builtin_model(BuiltinModel::SpringSystem, &ModelParams::new())
                .unwrap()
                .linearized(),
        );
        let c = compute_ssm_general(&lin.g, &lin.spec, 1, 2).unwrap();
        let r = InvarianceResidual::new(&c, &lin.g, &lin.spec).unwrap();
        for s in [0.01, 0.3, 2.0] {
            assert!(r.eval(Complex64::new(s, 0.4 * s)) < 1e-13);
        }
        let s = setup(BuiltinModel::ShawPierre);
        let c = compute_ssm_general(&s.g, &s.spec, 1, 1).unwrap();
        assert_eq!(invariance_residual(&c, &s.g, &s.spec, ZERO).unwrap(), 0.0);
        assert!(invariance_residual(&c, &s.g, &s.spec, Complex64::new(0.01, 0.0)).unwrap() < 1e-8);
    }

    #[test]
    fn residual_low_order_terms_cancel() {
        for m in BuiltinModel::ALL {
            let s = setup(m);
            for order in 1..=2 {
                let c = compute_ssm_general(&s.g, &s.spec, 1, order).unwrap();
                let r = InvarianceResidual::new(&c, &s.g, &s.spec).unwrap();
                assert!(r.low_order_defect(2 * order + 1) < 1e-12, "{m} M={order}");
            }
        }
    }

    #[test]
    fn validity_radius_is_positive() {
        let s = setup(BuiltinModel::ShawPierre);
        let c = compute_ssm_general(&s.g, &s.spec, 1, 2).unwrap();
        let r = InvarianceResidual::new(&c, &s.g, &s.spec).unwrap();
        let rad = validity_radius(&c, &r, 10.0);
        assert!(rad > 0.01 && rad < 10.0, "{rad}");
    }

    #[test]
    fn near_resonant_denominator_reported() {
        // omega_2 = 2 omega_1 with light damping: 2 lambda_1 - lambda_2 is tiny
        let mut field = PolynomialField::new(4, 2);
        field.add_component(vec![2, 0, 0, 0], 1, 1.0).unwrap();
        let sys = MechanicalSystem::new(
            DMatrix::identity(2, 2),
            DMatrix::from_row_slice(2, 2, &[1e-4, 0.0, 0.0, 1e-4]),
            DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 4.0]),
            field,
            ForcingDefinition::none(),
        )
        .unwrap();
        let s = setup_sys(&sys);
        let e = compute_ssm_general(&s.g, &s.spec, 1, 1).unwrap_err();
        assert!(
            matches!(e, Error::NearResonantDenominator { m, n, .. } if m + n == 2),
            "{e}"
        );
        assert!(e.to_string().contains("increase SSM dimension"));
        assert!(compute_ssm_order3(&s.g, &s.spec, 1).is_err());
    }

    #[test]
    fn slow_dynamics_polynomials() {
        let sd = SlowDynamics::new(Complex64::new(-0.01, 1.0), &[Complex64::new(0.1, 0.2)]);
        for rho in [0.0, 0.3, 1.7] {
            assert_abs_diff_eq!(sd.a(rho), -0.01 * rho + 0.1 * rho.powi(3), epsilon = 1e-15);
            assert_abs_diff_eq!(sd.b(rho), 1.0 + 0.2 * rho * rho, epsilon = 1e-15);
            assert_abs_diff_eq!(sd.da(rho), -0.01 + 0.3 * rho * rho, epsilon = 1e-15);
            assert_abs_diff_eq!(sd.db(rho), 0.4 * rho, epsilon = 1e-15);
        }
        let lin = SlowDynamics::new(Complex64::new(-0.02, 2.0), &[]);
        assert_eq!(lin.a(0.5), -0.01);
        assert_eq!(lin.b(3.0), 2.0);
    }

    #[test]
    fn shaw_pierre_stiffening() {
        let s = setup(BuiltinModel::ShawPierre);
        let c = compute_ssm_general(&s.g, &s.spec, 1, 1).unwrap();
        assert!(c.beta[0].im > 0.0);
        let sd = c.slow_dynamics();
        assert!(sd.a(1e-3) < 0.0);
        assert_eq!(sd.a(0.0), 0.0);
    }
}

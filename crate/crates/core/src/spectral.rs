//! Eigen-analysis of the first-order system matrix and the non-resonance checks
//! that gate the existence of a two-dimensional SSM.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::FirstOrderSystem;

/// Relative tolerance for conjugate pairing and the semisimplicity rank test.
pub const PAIRING_TOLERANCE: f64 = 1e-8;
/// Default absolute tolerance for the inner and outer conditions.
pub const DEFAULT_TOL_ABS: f64 = 1e-6;
/// Default relative tolerance (times `|Im lambda_l|`) for the near-resonance check.
pub const DEFAULT_TOL_NEAR_FACTOR: f64 = 0.05;
/// Default cap on the spectral quotient.
pub const SPECTRAL_QUOTIENT_CAP: usize = 20;

const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };

/// Ordered eigen-decomposition `A = V Lambda V^-1`.
///
/// Indices are 0-based internally; public functions taking a master mode use
/// 1-based indices `l = 1..N`.
#[derive(Clone, Debug, PartialEq)]
pub struct Spectrum {
    pub n_dof: usize,
    pub eigenvalues: Vec<Complex64>,
    pub v_matrix: DMatrix<Complex64>,
    pub v_inverse: DMatrix<Complex64>,
    pub mode_shapes: Vec<DVector<Complex64>>,
    pub lambda_min_index: usize,
    /// Real unit-norm mode shapes (columns), used to define modal amplitudes.
    pub modal_basis: DMatrix<f64>,
    pub modal_basis_inverse: DMatrix<f64>,
}

impl Spectrum {
    pub fn dim(&self) -> usize {
        2 * self.n_dof
    }

    /// Validates a 1-based master index and returns it 0-based.
    pub fn master(&self, l: usize) -> Result<usize> {
        if l == 0 || l > self.n_dof {
            Err(Error::InvalidMode {
                index: l,
                n_dof: self.n_dof,
            })
        } else {
            Ok(l - 1)
        }
    }

    /// Eigenvalue of mode `l` (1-based) with positive imaginary part.
    pub fn lambda(&self, l: usize) -> Result<Complex64> {
        Ok(self.eigenvalues[self.master(l)?])
    }

    /// Row `t_j` of `V^-1` (0-based `j`).
    pub fn t_row(&self, j: usize) -> DVector<Complex64> {
        self.v_inverse.row(j).transpose()
    }

    pub fn natural_frequency(&self, j: usize) -> f64 {
        self.eigenvalues[j].norm()
    }

    /// Damping ratio `-Re lambda / |lambda|`.
    pub fn damping_ratio(&self, j: usize) -> f64 {
        -self.eigenvalues[j].re / self.eigenvalues[j].norm()
    }

    /// `V Lambda V^-1`.
    pub fn reconstruct(&self) -> DMatrix<Complex64> {
        let lam = DMatrix::from_diagonal(&DVector::from_vec(self.eigenvalues.clone()));
        &self.v_matrix * lam * &self.v_inverse
    }

    /// Returns `t_j g` for all `j`, i.e. `V^-1 g`.
    pub fn to_modal(&self, g: &DVector<Complex64>) -> DVector<Complex64> {
        &self.v_inverse * g
    }

    /// Rotates mode `j` (0-based, `j < N`) by `e^{i phi}` keeping conjugate symmetry.
    pub fn rotate_mode(&mut self, j: usize, phi: f64) {
        let n = self.n_dof;
        let rot = Complex64::from_polar(1.0, phi);
        let mut c = self.v_matrix.column_mut(j);
        c *= rot;
        let mut c = self.v_matrix.column_mut(j + n);
        c *= rot.conj();
        let mut r = self.v_inverse.row_mut(j);
        r *= rot.conj();
        let mut r = self.v_inverse.row_mut(j + n);
        r *= rot;
        self.mode_shapes[j] *= rot;
        self.mode_shapes[j + n] *= rot.conj();
    }
}

fn complexify(a: &DMatrix<f64>) -> DMatrix<Complex64> {
    a.map(|x| Complex64::new(x, 0.0))
}

/// Null space of `B` (square) from its SVD: columns whose singular values are below `tol`.
fn null_space(b: DMatrix<Complex64>, tol: f64) -> (Vec<DVector<Complex64>>, f64) {
    let svd = b.svd(false, true);
    let vt = svd.v_t.expect("requested v_t");
    let mut out = Vec::new();
    let mut smallest_rejected = f64::INFINITY;
    for (i, s) in svd.singular_values.iter().enumerate() {
        if *s < tol {
            out.push(vt.row(i).adjoint());
        } else {
            smallest_rejected = smallest_rejected.min(*s);
        }
    }
    // Guarantee at least the smallest singular direction is returned.
    if out.is_empty() {
        let (imin, _) = svd
            .singular_values
            .iter()
            .enumerate()
            .min_by(|a, b| a.1.total_cmp(b.1))
            .expect("non-empty matrix");
        return (vec![vt.row(imin).adjoint()], svd.singular_values[imin]);
    }
    (out, smallest_rejected)
}

/// Scales `e` to unit norm with its largest-modulus entry real and positive.
fn normalize_shape(e: &DVector<Complex64>) -> DVector<Complex64> {
    let (imax, _) = e
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.norm().total_cmp(&b.1.norm()))
        .expect("non-empty vector");
    let phase = e[imax] / e[imax].norm();
    let scale = phase * e.norm();
    e.map(|c| c / scale)
}

/// Real unit vector closest in direction to the complex shape `e`.
fn real_shape(e: &DVector<Complex64>) -> DVector<f64> {
    let s: Complex64 = e.iter().map(|c| c * c).sum();
    let rot = Complex64::from_polar(1.0, -0.5 * s.arg());
    let mut r = e.map(|c| (c * rot).re);
    let (imax, _) = r
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.abs().total_cmp(&b.1.abs()))
        .expect("non-empty vector");
    if r[imax] < 0.0 {
        r = -r;
    }
    let n = r.norm();
    r / n
}

/// Computes the ordered spectrum of `A`.
pub fn compute_spectrum(fos: &FirstOrderSystem) -> Result<Spectrum> {
    let a = &fos.a_matrix;
    let n = fos.n_dof;
    let dim = 2 * n;
    let anorm = a.norm().max(f64::MIN_POSITIVE);
    let tol = PAIRING_TOLERANCE * anorm;

    let eigs: Vec<Complex64> = a.complex_eigenvalues().iter().copied().collect();
    if let Some(bad) = eigs.iter().find(|l| l.re >= -1e-14 * anorm) {
        return Err(Error::UnstableOrigin(bad.re));
    }
    if let Some(bad) = eigs.iter().find(|l| l.im.abs() <= tol) {
        return Err(Error::OverdampedMode(bad.re));
    }

    let mut upper: Vec<Complex64> = eigs.iter().copied().filter(|l| l.im > 0.0).collect();
    let mut lower: Vec<Complex64> = eigs.iter().copied().filter(|l| l.im < 0.0).collect();
    if upper.len() != n || lower.len() != n {
        return Err(Error::Numerical(
            "eigenvalues do not form conjugate pairs".into(),
        ));
    }
    // Greedy conjugate matching.
    for l in &upper {
        let (k, d) = lower
            .iter()
            .enumerate()
            .map(|(k, m)| (k, (m - l.conj()).norm()))
            .min_by(|a, b| a.1.total_cmp(&b.1))
            .expect("lower half non-empty");
        if d > tol.max(PAIRING_TOLERANCE * l.norm()) {
            return Err(Error::Numerical(format!(
                "eigenvalue {l} has no conjugate partner"
            )));
        }
        lower.swap_remove(k);
    }
    upper.sort_by(|x, y| x.im.total_cmp(&y.im).then(x.re.total_cmp(&y.re)));

    // Cluster (numerically) repeated eigenvalues and extract eigenvectors.
    let ac = complexify(a);
    let mut shapes: Vec<DVector<Complex64>> = Vec::with_capacity(n);
    let mut lambdas: Vec<Complex64> = Vec::with_capacity(n);
    let mut i = 0;
    while i < n {
        let mut j = i + 1;
        while j < n && (upper[j] - upper[i]).norm() <= tol {
            j += 1;
        }
        let mult = j - i;
        let lam: Complex64 = upper[i..j].iter().sum::<Complex64>() / mult as f64;
        let shifted = &ac - DMatrix::from_diagonal_element(dim, dim, lam);
        let (basis, _) = null_space(shifted, tol);
        if basis.len() < mult {
            return Err(Error::NotSemisimple);
        }
        for (k, v) in basis.into_iter().take(mult).enumerate() {
            let e = v.rows(0, n).clone_owned();
            if e.norm() == 0.0 {
                return Err(Error::NotSemisimple);
            }
            shapes.push(normalize_shape(&e));
            lambdas.push(upper[i + k]);
        }
        i = j;
    }

    let mut eigenvalues = lambdas.clone();
    eigenvalues.extend(lambdas.iter().map(|l| l.conj()));
    let mut mode_shapes = shapes.clone();
    mode_shapes.extend(shapes.iter().map(|e| e.map(|c| c.conj())));

    let mut v = DMatrix::zeros(dim, dim);
    for (j, (e, l)) in mode_shapes.iter().zip(&eigenvalues).enumerate() {
        v.view_mut((0, j), (n, 1)).copy_from(e);
        v.view_mut((n, j), (n, 1)).copy_from(&(e * *l));
    }
    let v_inverse = v.clone().try_inverse().ok_or(Error::NotSemisimple)?;
    let eye = DMatrix::<Complex64>::identity(dim, dim);
    if (&v * &v_inverse - eye).norm() > 1e-9 * (dim as f64) {
        return Err(Error::NotSemisimple);
    }

    let lambda_min_index = (0..n)
        .min_by(|&a, &b| eigenvalues[a].re.total_cmp(&eigenvalues[b].re))
        .expect("n >= 1");

    let mut modal_basis = DMatrix::zeros(n, n);
    for (j, e) in shapes.iter().enumerate() {
        modal_basis.set_column(j, &real_shape(e));
    }
    let modal_basis_inverse = modal_basis
        .clone()
        .try_inverse()
        .ok_or_else(|| Error::Numerical("real mode shapes are linearly dependent".into()))?;

    let spec = Spectrum {
        n_dof: n,
        eigenvalues,
        v_matrix: v,
        v_inverse,
        mode_shapes,
        lambda_min_index,
        modal_basis,
        modal_basis_inverse,
    };
    let recon = (spec.reconstruct() - &ac).norm() / anorm;
    if recon > 1e-9 {
        return Err(Error::NotSemisimple);
    }
    Ok(spec)
}

/// `r_c = t_l g` for the lifted forcing `g = g^{+1}`.
pub fn forcing_projection(spec: &Spectrum, g: &DVector<Complex64>, l: usize) -> Result<Complex64> {
    let j = spec.master(l)?;
    Ok((spec.v_inverse.row(j) * g)[(0, 0)])
}

/// Rotates modes `l` and `l+N` so that `r_c = t_l g` equals `i r` with `r > 0`.
///
/// The positive sign keeps the phase `psi` of the forced response in `[0, pi]`.
pub fn normalize_for_imaginary_rc(
    spec: &Spectrum,
    g: &DVector<Complex64>,
    l: usize,
) -> Result<Spectrum> {
    let j = spec.master(l)?;
    let rc = forcing_projection(spec, g, l)?;
    let scale = spec.t_row(j).norm() * g.norm();
    if rc.norm() <= 1e-14 * scale || rc == ZERO {
        return Err(Error::ForcingOrthogonal);
    }
    // t_l picks up e^{-i phi}; choose phi so that e^{-i phi} r_c = i |r_c|.
    let phi = rc.arg() - std::f64::consts::FRAC_PI_2;
    let mut out = spec.clone();
    if phi.abs() > 0.0 {
        out.rotate_mode(j, phi);
    }
    Ok(out)
}

/// Integer spectral quotient and whether it hit the cap.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct SpectralQuotient {
    pub value: usize,
    pub capped: bool,
}

pub fn spectral_quotient(spec: &Spectrum, l: usize) -> Result<SpectralQuotient> {
    spectral_quotient_capped(spec, l, SPECTRAL_QUOTIENT_CAP)
}

pub fn spectral_quotient_capped(spec: &Spectrum, l: usize, cap: usize) -> Result<SpectralQuotient> {
    let j = spec.master(l)?;
    let ratio = spec.eigenvalues[spec.lambda_min_index].re / spec.eigenvalues[j].re;
    // guard against 1.9999999999 from roundoff
    let value = ((ratio + 1e-9).floor() as usize).max(1);
    Ok(if value > cap {
        SpectralQuotient {
            value: cap,
            capped: true,
        }
    } else {
        SpectralQuotient {
            value,
            capped: false,
        }
    })
}

/// A resonance tuple: coefficients on the master pair and the eigenvalue it meets.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Violation {
    /// Powers of `(lambda_l, conj lambda_l)`; for the inner check `m2` is unused.
    pub m1: usize,
    pub m2: usize,
    /// 1-based eigenvalue index `1..2N`.
    pub eigenvalue: usize,
    pub distance: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ResonanceReport {
    pub master_index: usize,
    pub spectral_quotient: SpectralQuotient,
    pub tol_abs: f64,
    pub tol_near: f64,
    pub inner_ok: bool,
    pub inner_violations: Vec<Violation>,
    pub outer_ok: bool,
    pub outer_violations: Vec<Violation>,
    pub near_ok: bool,
    pub near_violations: Vec<Violation>,
    pub inner_margin: f64,
    pub outer_margin: f64,
    pub near_margin: f64,
}

impl ResonanceReport {
    pub fn passes(&self) -> bool {
        self.inner_ok && self.outer_ok && self.near_ok
    }
}

/// Default near-resonance tolerance `0.05 |Im lambda_l|`.
pub fn default_tol_near(spec: &Spectrum, l: usize) -> Result<f64> {
    Ok(DEFAULT_TOL_NEAR_FACTOR * spec.lambda(l)?.im.abs())
}

/// Enumerates the inner, outer, and near-resonance conditions for master mode `l`.
pub fn check_nonresonance(
    spec: &Spectrum,
    l: usize,
    tol_abs: f64,
    tol_near: f64,
) -> Result<ResonanceReport> {
    let jl = spec.master(l)?;
    let n = spec.n_dof;
    let sq = spectral_quotient(spec, l)?;
    let sigma = sq.value;
    let lam = spec.eigenvalues[jl];

    let mut inner = Vec::new();
    let mut inner_margin = f64::INFINITY;
    for m in 2..=sigma.max(1) {
        for k in 0..n {
            if k == jl {
                continue;
            }
            let d = (m as f64 * lam.re - spec.eigenvalues[k].re).abs();
            inner_margin = inner_margin.min(d);
            if d < tol_abs {
                inner.push(Violation {
                    m1: m,
                    m2: 0,
                    eigenvalue: k + 1,
                    distance: d,
                });
            }
        }
    }

    let mut outer = Vec::new();
    let mut outer_margin = f64::INFINITY;
    let mut near = Vec::new();
    let mut near_margin = f64::INFINITY;
    for total in 1..=sigma {
        for m1 in 0..=total {
            let m2 = total - m1;
            let combo = lam * m1 as f64 + lam.conj() * m2 as f64;
            for k in 0..2 * n {
                let d = (combo - spec.eigenvalues[k]).norm();
                let on_master = k == jl || k == jl + n;
                if on_master {
                    if total >= 2 {
                        outer_margin = outer_margin.min(d);
                        if d < tol_abs {
                            outer.push(Violation {
                                m1,
                                m2,
                                eigenvalue: k + 1,
                                distance: d,
                            });
                        }
                    }
                } else {
                    near_margin = near_margin.min(d);
                    if d < tol_near {
                        near.push(Violation {
                            m1,
                            m2,
                            eigenvalue: k + 1,
                            distance: d,
                        });
                    }
                }
            }
        }
    }

    Ok(ResonanceReport {
        master_index: l,
        spectral_quotient: sq,
        tol_abs,
        tol_near,
        inner_ok: inner.is_empty(),
        inner_violations: inner,
        outer_ok: outer.is_empty(),
        outer_violations: outer,
        near_ok: near.is_empty(),
        near_violations: near,
        inner_margin,
        outer_margin,
        near_margin,
    })
}

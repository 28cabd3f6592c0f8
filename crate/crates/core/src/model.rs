//! Second-order mechanical systems, their first-order form, and the built-in
//! example systems.

use std::collections::BTreeMap;
use std::f64::consts::SQRT_2;
use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::poly::PolynomialField;

/// Largest accepted condition number of the mass matrix.
pub const MASS_CONDITION_CAP: f64 = 1e12;

/// Absolute tolerance used by [`validate_model`].
pub const MODEL_TOLERANCE: f64 = 1e-10;

/// One Fourier component `f^k e^{i<k, Omega> t}` of the external forcing.
#[derive(Clone, Debug, PartialEq)]
pub struct ForcingHarmonic {
    pub wave: Vec<i32>,
    pub amplitude: DVector<Complex64>,
}

/// External forcing `eps * sum_k f^k e^{i<k,Omega>t}`.
#[derive(Clone, Debug, PartialEq)]
pub struct ForcingDefinition {
    pub base_frequencies: Vec<f64>,
    pub harmonics: Vec<ForcingHarmonic>,
    pub epsilon: f64,
}

impl ForcingDefinition {
    /// No forcing at all.
    pub fn none() -> Self {
        Self {
            base_frequencies: vec![1.0],
            harmonics: Vec::new(),
            epsilon: 0.0,
        }
    }

    /// Canonical `eps * f cos(Omega t)`, stored as the pair `k = +-1` with amplitude `f/2`.
    pub fn single_harmonic(f: DVector<f64>, epsilon: f64, omega: f64) -> Self {
        let half = f.map(|x| Complex64::new(0.5 * x, 0.0));
        Self {
            base_frequencies: vec![omega],
            harmonics: vec![
                ForcingHarmonic {
                    wave: vec![1],
                    amplitude: half.clone(),
                },
                ForcingHarmonic {
                    wave: vec![-1],
                    amplitude: half,
                },
            ],
            epsilon,
        }
    }

    pub fn is_single_harmonic(&self) -> bool {
        self.base_frequencies.len() == 1
            && self.harmonics.len() == 2
            && self.harmonics.iter().any(|h| h.wave == [1])
            && self.harmonics.iter().any(|h| h.wave == [-1])
    }

    /// The complex amplitude `f^{+1}` of a single-harmonic forcing.
    pub fn plus_one(&self) -> Option<&DVector<Complex64>> {
        if !self.is_single_harmonic() {
            return None;
        }
        self.harmonics
            .iter()
            .find(|h| h.wave == [1])
            .map(|h| &h.amplitude)
    }

    /// Physical vector `f` of `f cos(Omega t)`; only meaningful for a real `f^{+1}`.
    pub fn cosine_vector(&self) -> Option<DVector<f64>> {
        self.plus_one().map(|a| a.map(|c| 2.0 * c.re))
    }

    pub fn frequency(&self) -> f64 {
        self.base_frequencies[0]
    }

    pub fn with_frequency(&self, omega: f64) -> Self {
        let mut out = self.clone();
        out.base_frequencies = vec![omega];
        out
    }

    pub fn with_epsilon(&self, epsilon: f64) -> Self {
        let mut out = self.clone();
        out.epsilon = epsilon;
        out
    }

    pub fn harmonic_frequency(&self, wave: &[i32]) -> f64 {
        wave.iter()
            .zip(&self.base_frequencies)
            .map(|(&k, &w)| k as f64 * w)
            .sum()
    }

    /// `f_ext(t) = sum_k f^k e^{i<k,Omega>t}` without the `eps` factor.
    pub fn signal(&self, t: f64) -> DVector<Complex64> {
        let n = self.harmonics.first().map_or(0, |h| h.amplitude.len());
        let mut out = DVector::zeros(n);
        for h in &self.harmonics {
            let ph = Complex64::new(0.0, self.harmonic_frequency(&h.wave) * t).exp();
            out.axpy(ph, &h.amplitude, Complex64::new(1.0, 0.0));
        }
        out
    }

    /// Checks that every harmonic `k` has a partner `-k` with conjugate amplitude.
    pub fn conjugate_pairing_defect(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for h in &self.harmonics {
            let neg: Vec<i32> = h.wave.iter().map(|k| -k).collect();
            match self.harmonics.iter().find(|g| g.wave == neg) {
                Some(g) => {
                    let d = (&g.amplitude - h.amplitude.map(|c| c.conj())).norm();
                    worst = worst.max(d);
                }
                None => return f64::INFINITY,
            }
        }
        worst
    }
}

/// `M q'' + (C + G) q' + (K + N) q + f_nlin(q, q') = eps f_ext(t)`.
#[derive(Clone, Debug, PartialEq)]
pub struct MechanicalSystem {
    pub n_dof: usize,
    pub mass: DMatrix<f64>,
    pub damping: DMatrix<f64>,
    pub gyroscopic: DMatrix<f64>,
    pub stiffness: DMatrix<f64>,
    pub follower: DMatrix<f64>,
    /// Polynomial in the `2N` variables `(q, q')` with `N` outputs.
    pub nonlinearity: PolynomialField<f64>,
    pub forcing: ForcingDefinition,
}

impl MechanicalSystem {
    /// Builds a system with zero gyroscopic and follower matrices.
    pub fn new(
        mass: DMatrix<f64>,
        damping: DMatrix<f64>,
        stiffness: DMatrix<f64>,
        nonlinearity: PolynomialField<f64>,
        forcing: ForcingDefinition,
    ) -> Result<Self> {
        let n = mass.nrows();
        Self::with_all(
            mass,
            damping,
            DMatrix::zeros(n, n),
            stiffness,
            DMatrix::zeros(n, n),
            nonlinearity,
            forcing,
        )
    }

    pub fn with_all(
        mass: DMatrix<f64>,
        damping: DMatrix<f64>,
        gyroscopic: DMatrix<f64>,
        stiffness: DMatrix<f64>,
        follower: DMatrix<f64>,
        nonlinearity: PolynomialField<f64>,
        forcing: ForcingDefinition,
    ) -> Result<Self> {
        let n = mass.nrows();
        for m in [&mass, &damping, &gyroscopic, &stiffness, &follower] {
            if m.nrows() != n || m.ncols() != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    got: if m.nrows() != n { m.nrows() } else { m.ncols() },
                });
            }
        }
        if nonlinearity.n_vars() != 2 * n || nonlinearity.n_out() != n {
            return Err(Error::DimensionMismatch {
                expected: 2 * n,
                got: nonlinearity.n_vars(),
            });
        }
        for h in &forcing.harmonics {
            if h.amplitude.len() != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    got: h.amplitude.len(),
                });
            }
        }
        Ok(Self {
            n_dof: n,
            mass,
            damping,
            gyroscopic,
            stiffness,
            follower,
            nonlinearity,
            forcing,
        })
    }

    pub fn with_forcing(&self, forcing: ForcingDefinition) -> Self {
        let mut out = self.clone();
        out.forcing = forcing;
        out
    }

    /// The same system with the nonlinearity removed.
    pub fn linearized(&self) -> Self {
        let mut out = self.clone();
        out.nonlinearity = PolynomialField::new(2 * self.n_dof, self.n_dof);
        out
    }
}

/// `x' = A x + G_nlin(x) + eps G_ext(t)` with `x = (q, q')`.
#[derive(Clone, Debug, PartialEq)]
pub struct FirstOrderSystem {
    pub n_dof: usize,
    pub dim: usize,
    pub a_matrix: DMatrix<f64>,
    pub mass_inverse: DMatrix<f64>,
    pub nonlinearity: PolynomialField<f64>,
    /// `(k, g^k)` with `g^k = (0, M^-1 f^k)`.
    pub forcing_harmonics: Vec<(Vec<i32>, DVector<Complex64>)>,
    pub forcing: ForcingDefinition,
}

impl FirstOrderSystem {
    /// Lifts a physical force vector to `(0, M^-1 f)`.
    pub fn lift_force(&self, f: &DVector<Complex64>) -> DVector<Complex64> {
        let mc = self.mass_inverse.map(|x| Complex64::new(x, 0.0));
        let lower = mc * f;
        let mut out = DVector::zeros(self.dim);
        out.rows_mut(self.n_dof, self.n_dof).copy_from(&lower);
        out
    }

    /// `g^{+1}` for a single-harmonic forcing.
    pub fn g_plus(&self) -> Result<DVector<Complex64>> {
        self.forcing_harmonics
            .iter()
            .find(|(k, _)| k.as_slice() == [1])
            .filter(|_| self.forcing.is_single_harmonic())
            .map(|(_, g)| g.clone())
            .ok_or(Error::NotSingleHarmonic)
    }

    pub fn g_minus(&self) -> Result<DVector<Complex64>> {
        self.forcing_harmonics
            .iter()
            .find(|(k, _)| k.as_slice() == [-1])
            .filter(|_| self.forcing.is_single_harmonic())
            .map(|(_, g)| g.clone())
            .ok_or(Error::NotSingleHarmonic)
    }

    /// Autonomous part `A x + G_nlin(x)`.
    pub fn autonomous_rhs(&self, x: &[f64], out: &mut [f64]) {
        let n = self.dim;
        for i in 0..n {
            let mut s = 0.0;
            for j in 0..n {
                s += self.a_matrix[(i, j)] * x[j];
            }
            out[i] = s;
        }
        if !self.nonlinearity.is_empty() {
            let g = self
                .nonlinearity
                .evaluate(x)
                .expect("state dimension checked by caller");
            for i in 0..n {
                out[i] += g[i];
            }
        }
    }

    /// `eps G_ext(t)` as a real vector.
    pub fn external(&self, t: f64) -> DVector<f64> {
        let mut out = DVector::zeros(self.dim);
        for (k, g) in &self.forcing_harmonics {
            let ph = Complex64::new(0.0, self.forcing.harmonic_frequency(k) * t).exp();
            for i in 0..self.dim {
                out[i] += (g[i] * ph).re;
            }
        }
        out * self.forcing.epsilon
    }

    /// Full right-hand side at time `t`.
    pub fn rhs(&self, t: f64, x: &[f64], out: &mut [f64]) {
        self.autonomous_rhs(x, out);
        if self.forcing.epsilon != 0.0 {
            let e = self.external(t);
            for i in 0..self.dim {
                out[i] += e[i];
            }
        }
    }

    /// Jacobian of the autonomous part at `x`.
    pub fn jacobian(&self, x: &[f64]) -> DMatrix<f64> {
        let mut j = self.a_matrix.clone();
        if !self.nonlinearity.is_empty() {
            j += self
                .nonlinearity
                .jacobian(x)
                .expect("state dimension checked by caller");
        }
        j
    }
}

/// Converts a mechanical system to first-order form.
pub fn first_order_form(sys: &MechanicalSystem) -> Result<FirstOrderSystem> {
    let n = sys.n_dof;
    let svd = sys.mass.clone().svd(false, false);
    let smax = svd.singular_values.max();
    let smin = svd.singular_values.min();
    if !(smin > 0.0) || smax / smin > MASS_CONDITION_CAP {
        return Err(Error::MassNotInvertible);
    }
    let minv = sys
        .mass
        .clone()
        .try_inverse()
        .ok_or(Error::MassNotInvertible)?;

    let mut a = DMatrix::zeros(2 * n, 2 * n);
    a.view_mut((0, n), (n, n)).fill_with_identity();
    let lower_left = -(&minv * (&sys.stiffness + &sys.follower));
    let lower_right = -(&minv * (&sys.damping + &sys.gyroscopic));
    a.view_mut((n, 0), (n, n)).copy_from(&lower_left);
    a.view_mut((n, n), (n, n)).copy_from(&lower_right);

    // f_nlin sits on the left-hand side of the equations of motion.
    let nonlinearity = sys.nonlinearity.map_coefficients(2 * n, |c| {
        let lower = -(&minv * c);
        let mut out = DVector::zeros(2 * n);
        out.rows_mut(n, n).copy_from(&lower);
        out
    });

    let mc = minv.map(|x| Complex64::new(x, 0.0));
    let forcing_harmonics = sys
        .forcing
        .harmonics
        .iter()
        .map(|h| {
            let mut g = DVector::zeros(2 * n);
            g.rows_mut(n, n).copy_from(&(&mc * &h.amplitude));
            (h.wave.clone(), g)
        })
        .collect();

    Ok(FirstOrderSystem {
        n_dof: n,
        dim: 2 * n,
        a_matrix: a,
        mass_inverse: minv,
        nonlinearity,
        forcing_harmonics,
        forcing: sys.forcing.clone(),
    })
}

/// A violated modelling assumption.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Diagnostic {
    NotSymmetric(&'static str),
    NotSkewSymmetric(&'static str),
    NotPositiveDefinite(&'static str),
    NotPositiveSemiDefinite(&'static str),
    LowDegreeNonlinearity { equation: usize, degree: u32 },
    UnpairedForcing,
    NonPositiveFrequency,
    NegativeEpsilon,
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Diagnostic::NotSymmetric(name) => write!(f, "{name} not symmetric"),
            Diagnostic::NotSkewSymmetric(name) => write!(f, "{name} not skew-symmetric"),
            Diagnostic::NotPositiveDefinite(name) => write!(f, "{name} not positive definite"),
            Diagnostic::NotPositiveSemiDefinite(name) => {
                write!(f, "{name} not positive semi-definite")
            }
            Diagnostic::LowDegreeNonlinearity { equation, degree } => write!(
                f,
                "nonlinearity in equation {equation} has a monomial of degree {degree} < 2"
            ),
            Diagnostic::UnpairedForcing => {
                write!(f, "forcing harmonics are not conjugate pairs")
            }
            Diagnostic::NonPositiveFrequency => write!(f, "forcing frequency not positive"),
            Diagnostic::NegativeEpsilon => write!(f, "forcing amplitude epsilon negative"),
        }
    }
}

fn asymmetry(m: &DMatrix<f64>) -> f64 {
    (m - m.transpose()).abs().max()
}

fn skew_defect(m: &DMatrix<f64>) -> f64 {
    (m + m.transpose()).abs().max()
}

fn min_sym_eigenvalue(m: &DMatrix<f64>) -> f64 {
    let sym = (m + m.transpose()) * 0.5;
    SymmetricEigen::new(sym).eigenvalues.min()
}

/// Checks symmetry and definiteness assumptions; an empty list means all hold.
pub fn validate_model(sys: &MechanicalSystem) -> Vec<Diagnostic> {
    let tol = MODEL_TOLERANCE;
    let mut out = Vec::new();
    if asymmetry(&sys.mass) > tol {
        out.push(Diagnostic::NotSymmetric("mass"));
    }
    if min_sym_eigenvalue(&sys.mass) <= tol {
        out.push(Diagnostic::NotPositiveDefinite("mass"));
    }
    for (name, m) in [("stiffness", &sys.stiffness), ("damping", &sys.damping)] {
        if asymmetry(m) > tol {
            out.push(Diagnostic::NotSymmetric(name));
        }
        if min_sym_eigenvalue(m) < -tol {
            out.push(Diagnostic::NotPositiveSemiDefinite(name));
        }
    }
    for (name, m) in [("gyroscopic", &sys.gyroscopic), ("follower", &sys.follower)] {
        if skew_defect(m) > tol {
            out.push(Diagnostic::NotSkewSymmetric(name));
        }
    }
    for (m, c) in sys.nonlinearity.terms() {
        let degree: u32 = m.iter().sum();
        if degree < 2 {
            for (i, ci) in c.iter().enumerate() {
                if *ci != 0.0 {
                    out.push(Diagnostic::LowDegreeNonlinearity {
                        equation: i + 1,
                        degree,
                    });
                }
            }
        }
    }
    if sys.forcing.conjugate_pairing_defect() > 1e-12 {
        out.push(Diagnostic::UnpairedForcing);
    }
    if !sys.forcing.harmonics.is_empty() && sys.forcing.base_frequencies.iter().any(|w| *w <= 0.0) {
        out.push(Diagnostic::NonPositiveFrequency);
    }
    if sys.forcing.epsilon < 0.0 {
        out.push(Diagnostic::NegativeEpsilon);
    }
    out
}

/// Evaluates a polynomial field at `x`.
pub fn evaluate_field(field: &PolynomialField<f64>, x: &[f64]) -> Result<DVector<f64>> {
    field.evaluate(x)
}

/// The example systems shipped with the crate.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BuiltinModel {
    ShawPierre,
    SpringSystem,
    OscillatorChain,
}

impl FromStr for BuiltinModel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "shaw_pierre" => Ok(BuiltinModel::ShawPierre),
            "spring_system" => Ok(BuiltinModel::SpringSystem),
            "oscillator_chain" => Ok(BuiltinModel::OscillatorChain),
            other => Err(Error::UnknownModel(other.to_string())),
        }
    }
}

impl fmt::Display for BuiltinModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            BuiltinModel::ShawPierre => "shaw_pierre",
            BuiltinModel::SpringSystem => "spring_system",
            BuiltinModel::OscillatorChain => "oscillator_chain",
        })
    }
}

pub type ModelParams = BTreeMap<String, f64>;

impl BuiltinModel {
    pub const ALL: [BuiltinModel; 3] = [
        BuiltinModel::ShawPierre,
        BuiltinModel::SpringSystem,
        BuiltinModel::OscillatorChain,
    ];

    /// Default parameter values.
    ///
    /// `forcing_mode` selects `f1 = f2` (1) or `f1 = -f2` (2) for the Shaw-Pierre system.
    pub fn defaults(&self) -> ModelParams {
        let pairs: Vec<(&str, f64)> = match self {
            BuiltinModel::ShawPierre => vec![
                ("m", 1.0),
                ("k", 1.0),
                ("c1", 0.003),
                ("c2", 0.003 / 3f64.sqrt()),
                ("kappa", 0.5),
                ("epsilon", 0.003),
                ("omega", 1.0),
                ("forcing_mode", 1.0),
            ],
            BuiltinModel::SpringSystem => vec![
                ("omega1", 2.0),
                ("omega2", 4.5),
                ("d1", 0.01),
                ("d2", 0.2),
                ("f1", 0.02),
                ("omega", 2.0),
            ],
            BuiltinModel::OscillatorChain => vec![
                ("n", 5.0),
                ("m", 1.0),
                ("c", 0.005),
                ("k", 1.0),
                ("kappa", 0.5),
                ("epsilon", 0.004),
                ("omega", 0.518),
            ],
        };
        pairs.into_iter().map(|(k, v)| (k.to_string(), v)).collect()
    }
}

fn param(p: &ModelParams, name: &str) -> Result<f64> {
    p.get(name)
        .copied()
        .ok_or_else(|| Error::MissingParameter(name.to_string()))
}

/// Builds a built-in model; `params` override the defaults.
pub fn builtin_model(model: BuiltinModel, params: &ModelParams) -> Result<MechanicalSystem> {
    let mut merged = model.defaults();
    for (k, v) in params {
        if !merged.contains_key(k) {
            return Err(Error::InvalidModel(format!(
                "unknown parameter '{k}' for model {model}"
            )));
        }
        merged.insert(k.clone(), *v);
    }
    builtin_model_exact(model, &merged)
}

/// Builds a built-in model from a complete parameter map (no defaults applied).
pub fn builtin_model_exact(model: BuiltinModel, p: &ModelParams) -> Result<MechanicalSystem> {
    match model {
        BuiltinModel::ShawPierre => shaw_pierre(p),
        BuiltinModel::SpringSystem => spring_system(p),
        BuiltinModel::OscillatorChain => oscillator_chain(p),
    }
}

fn shaw_pierre(p: &ModelParams) -> Result<MechanicalSystem> {
    let m = param(p, "m")?;
    let k = param(p, "k")?;
    let c1 = param(p, "c1")?;
    let c2 = param(p, "c2")?;
    let kappa = param(p, "kappa")?;
    let eps = param(p, "epsilon")?;
    let omega = param(p, "omega")?;
    let mode = param(p, "forcing_mode")?;

    let mass = DMatrix::from_row_slice(2, 2, &[m, 0.0, 0.0, m]);
    let damping = DMatrix::from_row_slice(2, 2, &[c1 + c2, -c2, -c2, c1 + c2]);
    let stiffness = DMatrix::from_row_slice(2, 2, &[2.0 * k, -k, -k, 2.0 * k]);
    let mut nl = PolynomialField::new(4, 2);
    nl.add_component(vec![3, 0, 0, 0], 0, kappa)?;
    let sign = if mode == 2.0 { -1.0 } else { 1.0 };
    let f = DVector::from_vec(vec![1.0 / SQRT_2, sign / SQRT_2]);
    MechanicalSystem::new(
        mass,
        damping,
        stiffness,
        nl,
        ForcingDefinition::single_harmonic(f, eps, omega),
    )
}

fn spring_system(p: &ModelParams) -> Result<MechanicalSystem> {
    let w1 = param(p, "omega1")?;
    let w2 = param(p, "omega2")?;
    let d1 = param(p, "d1")?;
    let d2 = param(p, "d2")?;
    let f1 = param(p, "f1")?;
    let omega = param(p, "omega")?;
    let (w1s, w2s) = (w1 * w1, w2 * w2);
    let cubic = 0.5 * (w1s + w2s);

    let mass = DMatrix::identity(2, 2);
    let damping = DMatrix::from_row_slice(2, 2, &[2.0 * d1 * w1, 0.0, 0.0, 2.0 * d2 * w2]);
    let stiffness = DMatrix::from_row_slice(2, 2, &[w1s, 0.0, 0.0, w2s]);
    let mut nl = PolynomialField::new(4, 2);
    // first equation
    nl.add_component(vec![2, 0, 0, 0], 0, 1.5 * w1s)?;
    nl.add_component(vec![0, 2, 0, 0], 0, 0.5 * w1s)?;
    nl.add_component(vec![1, 1, 0, 0], 0, w2s)?;
    nl.add_component(vec![3, 0, 0, 0], 0, cubic)?;
    nl.add_component(vec![1, 2, 0, 0], 0, cubic)?;
    // second equation
    nl.add_component(vec![0, 2, 0, 0], 1, 1.5 * w2s)?;
    nl.add_component(vec![2, 0, 0, 0], 1, 0.5 * w2s)?;
    nl.add_component(vec![1, 1, 0, 0], 1, w1s)?;
    nl.add_component(vec![0, 3, 0, 0], 1, cubic)?;
    nl.add_component(vec![2, 1, 0, 0], 1, cubic)?;
    let f = DVector::from_vec(vec![1.0, 0.0]);
    MechanicalSystem::new(
        mass,
        damping,
        stiffness,
        nl,
        ForcingDefinition::single_harmonic(f, f1, omega),
    )
}

fn oscillator_chain(p: &ModelParams) -> Result<MechanicalSystem> {
    let nf = param(p, "n")?;
    if nf < 2.0 || nf.fract() != 0.0 {
        return Err(Error::InvalidModel(format!(
            "oscillator chain needs an integer n >= 2, got {nf}"
        )));
    }
    let n = nf as usize;
    let m = param(p, "m")?;
    let c = param(p, "c")?;
    let k = param(p, "k")?;
    let kappa = param(p, "kappa")?;
    let eps = param(p, "epsilon")?;
    let omega = param(p, "omega")?;

    let tri = DMatrix::from_fn(n, n, |i, j| {
        if i == j {
            2.0
        } else if i.abs_diff(j) == 1 {
            -1.0
        } else {
            0.0
        }
    });
    let mass = DMatrix::identity(n, n) * m;
    let damping = &tri * c;
    let stiffness = &tri * k;
    let mut nl = PolynomialField::new(2 * n, n);
    let mut e = vec![0u32; 2 * n];
    e[0] = 3;
    nl.add_component(e, 0, kappa)?;
    let mut f = DVector::zeros(n);
    f[0] = 1.0;
    MechanicalSystem::new(
        mass,
        damping,
        stiffness,
        nl,
        ForcingDefinition::single_harmonic(f, eps, omega),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn sp() -> MechanicalSystem {
        builtin_model(BuiltinModel::ShawPierre, &ModelParams::new()).unwrap()
    }

    #[test]
    fn one_dof_first_order_matrix() {
        let sys = MechanicalSystem::new(
            DMatrix::from_element(1, 1, 1.0),
            DMatrix::from_element(1, 1, 0.1),
            DMatrix::from_element(1, 1, 1.0),
            PolynomialField::new(2, 1),
            ForcingDefinition::none(),
        )
        .unwrap();
        let fos = first_order_form(&sys).unwrap();
        let expected = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, -1.0, -0.1]);
        assert_eq!(fos.a_matrix, expected);
    }

    #[test]
    fn shaw_pierre_lower_left_block() {
        let fos = first_order_form(&sp()).unwrap();
        let ll = fos.a_matrix.view((2, 0), (2, 2)).clone_owned();
        let expected = DMatrix::from_row_slice(2, 2, &[-2.0, 1.0, 1.0, -2.0]);
        assert_abs_diff_eq!(ll, expected, epsilon = 1e-15);
    }

    #[test]
    fn singular_mass_rejected() {
        let sys = MechanicalSystem::new(
            DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 0.0]),
            DMatrix::zeros(2, 2),
            DMatrix::identity(2, 2),
            PolynomialField::new(4, 2),
            ForcingDefinition::none(),
        )
        .unwrap();
        let err = first_order_form(&sys).unwrap_err();
        assert_eq!(err.to_string(), "mass matrix not invertible");
    }

    #[test]
    fn shaw_pierre_defaults_and_validation() {
        let d = BuiltinModel::ShawPierre.defaults();
        assert_eq!(d["m"], 1.0);
        assert_eq!(d["k"], 1.0);
        assert_abs_diff_eq!(d["c1"], 3f64.sqrt() * d["c2"], epsilon = 1e-18);
        assert_eq!(d["c1"], 0.003);
        assert_eq!(d["kappa"], 0.5);
        assert!(validate_model(&sp()).is_empty());
    }

    #[test]
    fn spring_and_chain_defaults() {
        let d = BuiltinModel::SpringSystem.defaults();
        assert_eq!(
            (d["omega1"], d["omega2"], d["d1"], d["d2"], d["f1"]),
            (2.0, 4.5, 0.01, 0.2, 0.02)
        );
        let d = BuiltinModel::OscillatorChain.defaults();
        assert_eq!(
            (d["n"], d["m"], d["c"], d["k"], d["kappa"]),
            (5.0, 1.0, 0.005, 1.0, 0.5)
        );
        for m in BuiltinModel::ALL {
            let sys = builtin_model(m, &ModelParams::new()).unwrap();
            assert!(validate_model(&sys).is_empty(), "{m}");
        }
    }

    #[test]
    fn chain_accepts_any_size() {
        let mut p = ModelParams::new();
        p.insert("n".into(), 8.0);
        let sys = builtin_model(BuiltinModel::OscillatorChain, &p).unwrap();
        assert_eq!(sys.n_dof, 8);
        assert_eq!(sys.nonlinearity.len(), 1);
        p.insert("n".into(), 1.0);
        assert!(builtin_model(BuiltinModel::OscillatorChain, &p).is_err());
    }

    #[test]
    fn unknown_and_missing_parameters() {
        assert!(matches!(
            "duffing".parse::<BuiltinModel>(),
            Err(Error::UnknownModel(_))
        ));
        let mut p = BuiltinModel::ShawPierre.defaults();
        p.remove("kappa");
        assert_eq!(
            builtin_model_exact(BuiltinModel::ShawPierre, &p).unwrap_err(),
            Error::MissingParameter("kappa".into())
        );
    }

    #[test]
    fn asymmetric_mass_and_indefinite_stiffness_diagnosed() {
        let mut sys = sp();
        sys.mass[(0, 1)] = 0.1;
        let d = validate_model(&sys);
        assert!(d.iter().any(|x| x.to_string() == "mass not symmetric"));

        let mut sys = sp();
        sys.stiffness = DMatrix::from_row_slice(2, 2, &[-1.0, 0.0, 0.0, 1.0]);
        let d = validate_model(&sys);
        assert!(d
            .iter()
            .any(|x| x.to_string() == "stiffness not positive semi-definite"));
    }

    #[test]
    fn shaw_pierre_nonlinearity_value() {
        let sys = sp();
        let y = evaluate_field(&sys.nonlinearity, &[2.0, 0.0, 0.0, 0.0]).unwrap();
        assert_eq!(y.as_slice(), &[4.0, 0.0]);
    }

    #[test]
    fn forcing_signal_is_real() {
        let sys = sp();
        let w = sys.forcing.frequency();
        let period = 2.0 * std::f64::consts::PI / w;
        let mut worst: f64 = 0.0;
        for i in 0..200 {
            let t = period * i as f64 / 200.0;
            let s = sys.forcing.signal(t);
            worst = worst.max(s.iter().map(|c| c.im.abs()).fold(0.0, f64::max));
            assert_abs_diff_eq!(s[0].re, (w * t).cos() / SQRT_2, epsilon = 1e-14);
        }
        assert!(worst < 1e-12);
    }
}

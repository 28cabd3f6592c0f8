//! Sparse multivariate polynomials in multi-index form.
//!
//! [`PolynomialField`] maps exponent vectors to coefficient vectors and is the
//! representation used for every nonlinearity in the crate. [`ScalarPoly`] is a
//! scalar-valued helper used when substituting linear changes of variables, and
//! [`BiPoly`] holds polynomials in the pair `(z, conj(z))` that parameterize a
//! two-dimensional invariant manifold.

use std::collections::BTreeMap;

use nalgebra::{ComplexField, DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};

/// Exponent vector of a monomial.
pub type MultiIndex = Vec<u32>;

/// A vector-valued polynomial `sum_m c_m x^m` stored sparsely.
#[derive(Clone, Debug, PartialEq)]
pub struct PolynomialField<T: ComplexField<RealField = f64> + Copy> {
    n_vars: usize,
    n_out: usize,
    terms: BTreeMap<MultiIndex, DVector<T>>,
}

impl<T: ComplexField<RealField = f64> + Copy> PolynomialField<T> {
    pub fn new(n_vars: usize, n_out: usize) -> Self {
        Self {
            n_vars,
            n_out,
            terms: BTreeMap::new(),
        }
    }

    pub fn n_vars(&self) -> usize {
        self.n_vars
    }

    pub fn n_out(&self) -> usize {
        self.n_out
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&MultiIndex, &DVector<T>)> {
        self.terms.iter()
    }

    pub fn get(&self, exponent: &[u32]) -> Option<&DVector<T>> {
        self.terms.get(exponent)
    }

    /// Adds `coeff * x^exponent`, merging with an existing term. Terms whose
    /// coefficient vector becomes exactly zero are removed.
    pub fn add_term(&mut self, exponent: MultiIndex, coeff: DVector<T>) -> Result<()> {
        if exponent.len() != self.n_vars {
            return Err(Error::DimensionMismatch {
                expected: self.n_vars,
                got: exponent.len(),
            });
        }
        if coeff.len() != self.n_out {
            return Err(Error::DimensionMismatch {
                expected: self.n_out,
                got: coeff.len(),
            });
        }
        let entry = self
            .terms
            .entry(exponent)
            .or_insert_with(|| DVector::zeros(coeff.len()));
        *entry += coeff;
        if entry.iter().all(|c| *c == T::zero()) {
            self.terms.retain(|_, v| v.iter().any(|c| *c != T::zero()));
        }
        Ok(())
    }

    /// Adds `value` to a single output component of the term `x^exponent`.
    pub fn add_component(&mut self, exponent: MultiIndex, component: usize, value: T) -> Result<()> {
        if component >= self.n_out {
            return Err(Error::DimensionMismatch {
                expected: self.n_out,
                got: component + 1,
            });
        }
        let mut c = DVector::zeros(self.n_out);
        c[component] = value;
        self.add_term(exponent, c)
    }

    pub fn min_degree(&self) -> Option<u32> {
        self.terms.keys().map(|m| m.iter().sum()).min()
    }

    pub fn max_degree(&self) -> Option<u32> {
        self.terms.keys().map(|m| m.iter().sum()).max()
    }

    pub fn evaluate(&self, x: &[T]) -> Result<DVector<T>> {
        if x.len() != self.n_vars {
            return Err(Error::DimensionMismatch {
                expected: self.n_vars,
                got: x.len(),
            });
        }
        let mut out = DVector::zeros(self.n_out);
        for (m, c) in &self.terms {
            out.axpy(monomial(x, m), c, T::one());
        }
        Ok(out)
    }

    /// Jacobian matrix `d out_i / d x_k` at `x`.
    pub fn jacobian(&self, x: &[T]) -> Result<DMatrix<T>> {
        if x.len() != self.n_vars {
            return Err(Error::DimensionMismatch {
                expected: self.n_vars,
                got: x.len(),
            });
        }
        let mut jac = DMatrix::zeros(self.n_out, self.n_vars);
        let mut dm = vec![0u32; self.n_vars];
        for (m, c) in &self.terms {
            for k in 0..self.n_vars {
                if m[k] == 0 {
                    continue;
                }
                dm.copy_from_slice(m);
                dm[k] -= 1;
                let d = monomial(x, &dm) * T::from_real(m[k] as f64);
                let mut col = jac.column_mut(k);
                col.axpy(d, c, T::one());
            }
        }
        Ok(jac)
    }

    /// Applies `f` to every coefficient vector, dropping terms that vanish.
    pub fn map_coefficients<U, F>(&self, n_out: usize, mut f: F) -> PolynomialField<U>
    where
        U: ComplexField<RealField = f64> + Copy,
        F: FnMut(&DVector<T>) -> DVector<U>,
    {
        let mut out = PolynomialField::new(self.n_vars, n_out);
        for (m, c) in &self.terms {
            let v = f(c);
            if v.iter().any(|x| *x != U::zero()) {
                out.terms.insert(m.clone(), v);
            }
        }
        out
    }
}

impl PolynomialField<f64> {
    pub fn to_complex(&self) -> PolynomialField<Complex64> {
        self.map_coefficients(self.n_out, |c| c.map(|x| Complex64::new(x, 0.0)))
    }
}

/// Evaluates the monomial `x^m`.
pub fn monomial<T: ComplexField<RealField = f64> + Copy>(x: &[T], m: &[u32]) -> T {
    let mut p = T::one();
    for (xi, &e) in x.iter().zip(m) {
        for _ in 0..e {
            p *= *xi;
        }
    }
    p
}

/// Scalar sparse polynomial, used for expanding products of linear forms.
#[derive(Clone, Debug, PartialEq)]
pub struct ScalarPoly {
    pub n_vars: usize,
    pub terms: BTreeMap<MultiIndex, Complex64>,
}

impl ScalarPoly {
    pub fn constant(n_vars: usize, c: Complex64) -> Self {
        let mut terms = BTreeMap::new();
        if c != Complex64::new(0.0, 0.0) {
            terms.insert(vec![0; n_vars], c);
        }
        Self { n_vars, terms }
    }

    /// The linear form `sum_j coeffs[j] * y_j`.
    pub fn linear(coeffs: &[Complex64]) -> Self {
        let n = coeffs.len();
        let mut terms = BTreeMap::new();
        for (j, c) in coeffs.iter().enumerate() {
            if *c != Complex64::new(0.0, 0.0) {
                let mut m = vec![0; n];
                m[j] = 1;
                terms.insert(m, *c);
            }
        }
        Self { n_vars: n, terms }
    }

    pub fn mul(&self, other: &ScalarPoly) -> ScalarPoly {
        let mut terms: BTreeMap<MultiIndex, Complex64> = BTreeMap::new();
        for (ma, ca) in &self.terms {
            for (mb, cb) in &other.terms {
                let m: MultiIndex = ma.iter().zip(mb).map(|(a, b)| a + b).collect();
                *terms.entry(m).or_insert(Complex64::new(0.0, 0.0)) += ca * cb;
            }
        }
        terms.retain(|_, c| *c != Complex64::new(0.0, 0.0));
        ScalarPoly {
            n_vars: self.n_vars,
            terms,
        }
    }
}

/// Polynomial in `(z, zbar)`: the key `(m, n)` stands for `z^m zbar^n`.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct BiPoly {
    pub terms: BTreeMap<(usize, usize), Complex64>,
}

impl BiPoly {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn one() -> Self {
        let mut p = Self::default();
        p.terms.insert((0, 0), Complex64::new(1.0, 0.0));
        p
    }

    pub fn add(&mut self, key: (usize, usize), c: Complex64) {
        *self.terms.entry(key).or_insert(Complex64::new(0.0, 0.0)) += c;
    }

    /// Product truncated to total degree `max_degree` (`None` keeps all terms).
    pub fn mul_truncated(&self, other: &BiPoly, max_degree: Option<usize>) -> BiPoly {
        let mut out = BiPoly::zero();
        for (&(a, b), ca) in &self.terms {
            for (&(c, d), cb) in &other.terms {
                if let Some(dmax) = max_degree {
                    if a + b + c + d > dmax {
                        continue;
                    }
                }
                out.add((a + c, b + d), ca * cb);
            }
        }
        out
    }

    pub fn eval(&self, z: Complex64, zbar: Complex64) -> Complex64 {
        self.terms
            .iter()
            .map(|(&(m, n), c)| c * z.powu(m as u32) * zbar.powu(n as u32))
            .sum()
    }
}

/// Vector-valued polynomial in `(z, zbar)` with coefficients in `C^dim`.
#[derive(Clone, Debug, PartialEq)]
pub struct BiPolyVec {
    pub dim: usize,
    pub terms: BTreeMap<(usize, usize), DVector<Complex64>>,
}

impl BiPolyVec {
    pub fn new(dim: usize) -> Self {
        Self {
            dim,
            terms: BTreeMap::new(),
        }
    }

    pub fn add(&mut self, key: (usize, usize), v: &DVector<Complex64>) {
        let e = self
            .terms
            .entry(key)
            .or_insert_with(|| DVector::zeros(v.len()));
        *e += v;
    }

    /// Scalar polynomial of one component.
    pub fn component(&self, j: usize) -> BiPoly {
        let mut p = BiPoly::zero();
        for (k, v) in &self.terms {
            if v[j] != Complex64::new(0.0, 0.0) {
                p.terms.insert(*k, v[j]);
            }
        }
        p
    }

    pub fn eval(&self, z: Complex64, zbar: Complex64) -> DVector<Complex64> {
        let mut out = DVector::zeros(self.dim);
        for (&(m, n), v) in &self.terms {
            let s = z.powu(m as u32) * zbar.powu(n as u32);
            out.axpy(s, v, Complex64::new(1.0, 0.0));
        }
        out
    }

    pub fn max_degree(&self) -> usize {
        self.terms.keys().map(|(m, n)| m + n).max().unwrap_or(0)
    }
}

/// Composes `field` with the vector polynomial `w` (one `BiPoly` per variable of
/// `field`), keeping all terms up to `max_degree` (`None` keeps everything).
pub fn compose_field(
    field: &PolynomialField<Complex64>,
    w: &[BiPoly],
    max_degree: Option<usize>,
) -> Result<BiPolyVec> {
    if w.len() != field.n_vars() {
        return Err(Error::DimensionMismatch {
            expected: field.n_vars(),
            got: w.len(),
        });
    }
    // powers[j][p] = w_j^p, filled lazily
    let mut powers: Vec<Vec<BiPoly>> = w.iter().map(|_| vec![BiPoly::one()]).collect();
    let mut out = BiPolyVec::new(field.n_out());
    for (m, c) in field.terms() {
        let mut prod = BiPoly::one();
        for (j, &e) in m.iter().enumerate() {
            if e == 0 {
                continue;
            }
            while powers[j].len() <= e as usize {
                let next = powers[j]
                    .last()
                    .expect("non-empty")
                    .mul_truncated(&w[j], max_degree);
                powers[j].push(next);
            }
            prod = prod.mul_truncated(&powers[j][e as usize], max_degree);
            if prod.terms.is_empty() {
                break;
            }
        }
        for (k, s) in &prod.terms {
            out.add(*k, &(c * *s));
        }
    }
    Ok(out)
}

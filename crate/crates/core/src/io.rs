//! JSON model files.
//!
//! ```json
//! {
//!   "dof": 2,
//!   "mass": [[1, 0], [0, 1]],
//!   "damping": [[0.004, -0.001], [-0.001, 0.004]],
//!   "stiffness": [[2, -1], [-1, 2]],
//!   "nonlinear": [
//!     {"equation": 1, "q_exponents": [3, 0], "qdot_exponents": [0, 0], "coefficient": 0.5}
//!   ],
//!   "forcing": {"vector": [0.7071, 0.7071], "epsilon": 0.003, "frequency": 1.0}
//! }
//! ```
//!
//! `gyroscopic` and `follower` are optional and default to zero. Quasi-periodic
//! forcing is written as `{"base_frequencies": [..], "epsilon": e, "harmonics":
//! [{"wave": [..], "re": [..], "im": [..]}]}`.

use std::path::Path;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{ForcingDefinition, ForcingHarmonic, MechanicalSystem};
use crate::poly::PolynomialField;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NonlinearTerm {
    /// 1-based equation (row) index.
    pub equation: usize,
    pub q_exponents: Vec<u32>,
    pub qdot_exponents: Vec<u32>,
    pub coefficient: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HarmonicFile {
    pub wave: Vec<i32>,
    pub re: Vec<f64>,
    pub im: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ForcingFile {
    Single {
        vector: Vec<f64>,
        epsilon: f64,
        frequency: f64,
    },
    Harmonics {
        base_frequencies: Vec<f64>,
        epsilon: f64,
        harmonics: Vec<HarmonicFile>,
    },
}

/// On-disk layout of a model; matrices are row-major nested arrays.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelFile {
    pub dof: usize,
    pub mass: Vec<Vec<f64>>,
    pub damping: Vec<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gyroscopic: Option<Vec<Vec<f64>>>,
    pub stiffness: Vec<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub follower: Option<Vec<Vec<f64>>>,
    #[serde(default)]
    pub nonlinear: Vec<NonlinearTerm>,
    pub forcing: ForcingFile,
}

/// A parsed model together with non-fatal findings.
#[derive(Clone, Debug)]
pub struct ParsedModel {
    pub system: MechanicalSystem,
    pub warnings: Vec<String>,
}

fn field_error(field: &str, msg: impl std::fmt::Display) -> Error {
    Error::InvalidModel(format!("{field}: {msg}"))
}

fn matrix(field: &str, rows: &[Vec<f64>], n: usize) -> Result<DMatrix<f64>> {
    let ncols = rows.first().map_or(0, Vec::len);
    if rows.len() != n || rows.iter().any(|r| r.len() != n) {
        let shape = if rows.iter().all(|r| r.len() == ncols) {
            format!("{}x{}", rows.len(), ncols)
        } else {
            "ragged".to_string()
        };
        return Err(field_error(
            field,
            format!("expected a {n}x{n} matrix, got {shape}"),
        ));
    }
    if rows.iter().flatten().any(|x| !x.is_finite()) {
        return Err(field_error(field, "non-finite entry"));
    }
    Ok(DMatrix::from_fn(n, n, |i, j| rows[i][j]))
}

fn vector(field: &str, v: &[f64], n: usize) -> Result<DVector<f64>> {
    if v.len() != n {
        return Err(field_error(
            field,
            format!("expected {n} entries, got {}", v.len()),
        ));
    }
    Ok(DVector::from_column_slice(v))
}

impl ModelFile {
    /// Converts to a [`MechanicalSystem`]. Repeated nonlinear terms are summed
    /// and reported as warnings.
    pub fn to_system(&self) -> Result<ParsedModel> {
        let n = self.dof;
        if n == 0 {
            return Err(field_error("dof", "must be positive"));
        }
        let mass = matrix("mass", &self.mass, n)?;
        let damping = matrix("damping", &self.damping, n)?;
        let stiffness = matrix("stiffness", &self.stiffness, n)?;
        let gyroscopic = match &self.gyroscopic {
            Some(g) => matrix("gyroscopic", g, n)?,
            None => DMatrix::zeros(n, n),
        };
        let follower = match &self.follower {
            Some(f) => matrix("follower", f, n)?,
            None => DMatrix::zeros(n, n),
        };

        let mut warnings = Vec::new();
        let mut nl = PolynomialField::new(2 * n, n);
        let mut seen: Vec<(usize, Vec<u32>, usize)> = Vec::new();
        for (i, t) in self.nonlinear.iter().enumerate() {
            let at = |what: &str| format!("nonlinear[{i}].{what}");
            if t.equation == 0 || t.equation > n {
                return Err(field_error(
                    &at("equation"),
                    format!("must be in 1..={n}, got {}", t.equation),
                ));
            }
            if t.q_exponents.len() != n {
                return Err(field_error(
                    &at("q_exponents"),
                    format!("expected {n} entries, got {}", t.q_exponents.len()),
                ));
            }
            if t.qdot_exponents.len() != n {
                return Err(field_error(
                    &at("qdot_exponents"),
                    format!("expected {n} entries, got {}", t.qdot_exponents.len()),
                ));
            }
            if !t.coefficient.is_finite() {
                return Err(field_error(&at("coefficient"), "non-finite value"));
            }
            let mut exp = t.q_exponents.clone();
            exp.extend_from_slice(&t.qdot_exponents);
            if let Some((_, _, first)) = seen.iter().find(|(e, x, _)| *e == t.equation && *x == exp) {
                warnings.push(format!(
                    "nonlinear[{i}] repeats nonlinear[{first}] (equation {}, same exponents); coefficients summed",
                    t.equation
                ));
            } else {
                seen.push((t.equation, exp.clone(), i));
            }
            nl.add_component(exp, t.equation - 1, t.coefficient)?;
        }

        let forcing = match &self.forcing {
            ForcingFile::Single {
                vector: v,
                epsilon,
                frequency,
            } => ForcingDefinition::single_harmonic(
                vector("forcing.vector", v, n)?,
                *epsilon,
                *frequency,
            ),
            ForcingFile::Harmonics {
                base_frequencies,
                epsilon,
                harmonics,
            } => {
                let mut hs = Vec::with_capacity(harmonics.len());
                for (i, h) in harmonics.iter().enumerate() {
                    if h.wave.len() != base_frequencies.len() {
                        return Err(field_error(
                            &format!("forcing.harmonics[{i}].wave"),
                            format!(
                                "expected {} entries, got {}",
                                base_frequencies.len(),
                                h.wave.len()
                            ),
                        ));
                    }
                    let re = vector(&format!("forcing.harmonics[{i}].re"), &h.re, n)?;
                    let im = vector(&format!("forcing.harmonics[{i}].im"), &h.im, n)?;
                    hs.push(ForcingHarmonic {
                        wave: h.wave.clone(),
                        amplitude: re.zip_map(&im, Complex64::new),
                    });
                }
                ForcingDefinition {
                    base_frequencies: base_frequencies.clone(),
                    harmonics: hs,
                    epsilon: *epsilon,
                }
            }
        };

        let system = MechanicalSystem::with_all(
            mass, damping, gyroscopic, stiffness, follower, nl, forcing,
        )?;
        Ok(ParsedModel { system, warnings })
    }

    pub fn from_system(sys: &MechanicalSystem) -> Self {
        let n = sys.n_dof;
        let rows = |m: &DMatrix<f64>| -> Vec<Vec<f64>> {
            (0..n).map(|i| (0..n).map(|j| m[(i, j)]).collect()).collect()
        };
        let optional = |m: &DMatrix<f64>| {
            if m.iter().all(|x| *x == 0.0) {
                None
            } else {
                Some(rows(m))
            }
        };
        let mut nonlinear = Vec::new();
        for eq in 0..n {
            for (exp, c) in sys.nonlinearity.terms() {
                if c[eq] != 0.0 {
                    nonlinear.push(NonlinearTerm {
                        equation: eq + 1,
                        q_exponents: exp[..n].to_vec(),
                        qdot_exponents: exp[n..].to_vec(),
                        coefficient: c[eq],
                    });
                }
            }
        }
        let f = &sys.forcing;
        let forcing = match f.plus_one() {
            Some(p) if p.iter().all(|c| c.im == 0.0) => ForcingFile::Single {
                vector: p.iter().map(|c| 2.0 * c.re).collect(),
                epsilon: f.epsilon,
                frequency: f.frequency(),
            },
            _ => ForcingFile::Harmonics {
                base_frequencies: f.base_frequencies.clone(),
                epsilon: f.epsilon,
                harmonics: f
                    .harmonics
                    .iter()
                    .map(|h| HarmonicFile {
                        wave: h.wave.clone(),
                        re: h.amplitude.iter().map(|c| c.re).collect(),
                        im: h.amplitude.iter().map(|c| c.im).collect(),
                    })
                    .collect(),
            },
        };
        ModelFile {
            dof: n,
            mass: rows(&sys.mass),
            damping: rows(&sys.damping),
            gyroscopic: optional(&sys.gyroscopic),
            stiffness: rows(&sys.stiffness),
            follower: optional(&sys.follower),
            nonlinear,
            forcing,
        }
    }
}

pub fn parse_model_str(text: &str) -> Result<ParsedModel> {
    let file: ModelFile = serde_json::from_str(text)
        .map_err(|e| Error::InvalidModel(format!("schema: {e}")))?;
    file.to_system()
}

pub fn parse_model(path: &Path) -> Result<ParsedModel> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::InvalidModel(format!("{}: {e}", path.display())))?;
    parse_model_str(&text)
}

pub fn serialize_model(sys: &MechanicalSystem) -> String {
    let mut s = serde_json::to_string_pretty(&ModelFile::from_system(sys))
        .expect("model file serializes");
    s.push('\n');
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{builtin_model, BuiltinModel, ModelParams};

    const SHAW: &str = r#"{
        "dof": 2,
        "mass": [[1, 0], [0, 1]],
        "damping": [[0.004, -0.001], [-0.001, 0.004]],
        "stiffness": [[2, -1], [-1, 2]],
        "nonlinear": [
            {"equation": 1, "q_exponents": [3, 0], "qdot_exponents": [0, 0], "coefficient": 0.5}
        ],
        "forcing": {"vector": [1, 0], "epsilon": 0.003, "frequency": 1.0}
    }"#;

    #[test]
    fn parses_minimal_file() {
        let p = parse_model_str(SHAW).unwrap();
        assert!(p.warnings.is_empty());
        assert_eq!(p.system.n_dof, 2);
        assert_eq!(p.system.stiffness[(0, 1)], -1.0);
        assert_eq!(p.system.nonlinearity.get(&[3, 0, 0, 0]).unwrap()[0], 0.5);
        assert_eq!(p.system.forcing.cosine_vector().unwrap()[0], 1.0);
    }

    #[test]
    fn builtins_round_trip_bit_exact() {
        for model in BuiltinModel::ALL {
            let sys = builtin_model(model, &ModelParams::new()).unwrap();
            let text = serialize_model(&sys);
            let back = parse_model_str(&text).unwrap();
            assert_eq!(back.system, sys, "{model}");
            assert_eq!(serialize_model(&back.system), text);
        }
    }

    #[test]
    fn wrong_shape_names_field() {
        let bad = SHAW.replace(
            r#""stiffness": [[2, -1], [-1, 2]]"#,
            r#""stiffness": [[2, -1], [-1, 2], [0, 0]]"#,
        );
        let err = parse_model_str(&bad).unwrap_err().to_string();
        assert!(err.contains("stiffness"), "{err}");
        assert!(err.contains("3x2"), "{err}");
    }

    #[test]
    fn duplicate_terms_are_summed() {
        let dup = SHAW.replace(
            r#""coefficient": 0.5}"#,
            r#""coefficient": 0.5},
            {"equation": 1, "q_exponents": [3, 0], "qdot_exponents": [0, 0], "coefficient": 0.25}"#,
        );
        let p = parse_model_str(&dup).unwrap();
        assert_eq!(p.warnings.len(), 1);
        assert_eq!(p.system.nonlinearity.get(&[3, 0, 0, 0]).unwrap()[0], 0.75);
    }

    #[test]
    fn unknown_field_rejected_with_location() {
        let bad = SHAW.replace(r#""dof": 2,"#, r#""dof": 2, "masss": 1,"#);
        let err = parse_model_str(&bad).unwrap_err().to_string();
        assert!(err.contains("masss") && err.contains("line"), "{err}");
    }

    #[test]
    fn bad_exponent_length() {
        let bad = SHAW.replace(r#""q_exponents": [3, 0]"#, r#""q_exponents": [3]"#);
        let err = parse_model_str(&bad).unwrap_err().to_string();
        assert!(err.contains("nonlinear[0].q_exponents"), "{err}");
    }

    #[test]
    fn quasi_periodic_forcing_round_trip() {
        let sys = parse_model_str(SHAW).unwrap().system;
        let amp = DVector::from_vec(vec![Complex64::new(0.1, 0.2), Complex64::new(0.0, -0.3)]);
        let forcing = ForcingDefinition {
            base_frequencies: vec![1.0, 2.5],
            harmonics: vec![
                ForcingHarmonic {
                    wave: vec![1, -1],
                    amplitude: amp.clone(),
                },
                ForcingHarmonic {
                    wave: vec![-1, 1],
                    amplitude: amp.map(|c| c.conj()),
                },
            ],
            epsilon: 0.01,
        };
        let sys = sys.with_forcing(forcing);
        let back = parse_model_str(&serialize_model(&sys)).unwrap().system;
        assert_eq!(back, sys);
    }
}

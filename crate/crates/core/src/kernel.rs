//! Kernel functions and Gram-matrix construction.
//!
//! Three classic families are supported; all produce positive semidefinite
//! Gram matrices for valid parameters, which the SVM and MKL solvers rely
//! on. The RBF exponent is negative (`exp(−γ‖x−y‖²)`) — the positive-sign
//! variant sometimes seen in print is unbounded and not a kernel.

use crate::error::{Error, Result};
use ndarray::Array2;
use serde::{Deserialize, Serialize};
use std::fmt;

/// A kernel family with its parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum KernelSpec {
    /// k(x, y) = exp(−γ‖x−y‖²), γ > 0.
    Rbf { gamma: f64 },
    /// k(x, y) = x·y + c, c ≥ 0.
    Linear { c: f64 },
    /// k(x, y) = (x·y + c)^degree, c ≥ 0, degree ≥ 1.
    Polynomial { c: f64, degree: u32 },
}

impl KernelSpec {
    pub fn validate(&self) -> Result<()> {
        match *self {
            KernelSpec::Rbf { gamma } => {
                if !(gamma > 0.0 && gamma.is_finite()) {
                    return Err(Error::InvalidParams(format!(
                        "RBF gamma must be positive and finite, got {gamma}"
                    )));
                }
            }
            KernelSpec::Linear { c } => {
                if !(c >= 0.0 && c.is_finite()) {
                    return Err(Error::InvalidParams(format!(
                        "linear kernel offset must be ≥ 0, got {c}"
                    )));
                }
            }
            KernelSpec::Polynomial { c, degree } => {
                if !(c >= 0.0 && c.is_finite()) {
                    return Err(Error::InvalidParams(format!(
                        "polynomial kernel offset must be ≥ 0, got {c}"
                    )));
                }
                if degree < 1 {
                    return Err(Error::InvalidParams(
                        "polynomial degree must be ≥ 1".into(),
                    ));
                }
            }
        }
        Ok(())
    }

    /// Evaluate k(x, y). Inputs must have equal length (checked by callers).
    pub fn eval(&self, x: &[f64], y: &[f64]) -> f64 {
        match *self {
            KernelSpec::Rbf { gamma } => {
                let d2: f64 = x
                    .iter()
                    .zip(y)
                    .map(|(a, b)| (a - b) * (a - b))
                    .sum();
                (-gamma * d2).exp()
            }
            KernelSpec::Linear { c } => dot(x, y) + c,
            KernelSpec::Polynomial { c, degree } => (dot(x, y) + c).powi(degree as i32),
        }
    }
}

impl fmt::Display for KernelSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            KernelSpec::Rbf { gamma } => write!(f, "rbf(gamma={gamma})"),
            KernelSpec::Linear { c } => write!(f, "linear(c={c})"),
            KernelSpec::Polynomial { c, degree } => {
                write!(f, "poly(c={c},degree={degree})")
            }
        }
    }
}

fn dot(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(a, b)| a * b).sum()
}

/// A Gram matrix together with how it was built.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct KernelMatrix {
    pub values: Array2<f64>,
    pub spec: KernelSpec,
    /// Which feature view fed this kernel (e.g. "Left", "Right").
    pub view: String,
}

impl KernelMatrix {
    pub fn size(&self) -> usize {
        self.values.nrows()
    }
}

fn check_equal_lengths(vectors: &[Vec<f64>]) -> Result<usize> {
    let dim = vectors.first().map_or(0, |v| v.len());
    for v in vectors {
        if v.len() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                got: v.len(),
            });
        }
    }
    Ok(dim)
}

/// Build the symmetric Gram matrix `values[i][j] = k(xᵢ, xⱼ)`.
///
/// Symmetry holds by construction (each pair is evaluated once); the RBF
/// diagonal is exactly 1.
pub fn gram(vectors: &[Vec<f64>], spec: &KernelSpec, view: &str) -> Result<KernelMatrix> {
    spec.validate()?;
    check_equal_lengths(vectors)?;
    let n = vectors.len();
    let mut values = Array2::<f64>::zeros((n, n));
    for i in 0..n {
        for j in i..n {
            let v = if i == j {
                match spec {
                    KernelSpec::Rbf { .. } => 1.0,
                    _ => spec.eval(&vectors[i], &vectors[j]),
                }
            } else {
                spec.eval(&vectors[i], &vectors[j])
            };
            values[[i, j]] = v;
            values[[j, i]] = v;
        }
    }
    Ok(KernelMatrix {
        values,
        spec: *spec,
        view: view.to_string(),
    })
}

/// Rectangular kernel evaluations: `out[i][j] = k(testᵢ, trainⱼ)`.
pub fn gram_cross(
    test: &[Vec<f64>],
    train: &[Vec<f64>],
    spec: &KernelSpec,
) -> Result<Array2<f64>> {
    spec.validate()?;
    let dim = check_equal_lengths(train)?;
    for v in test {
        if v.len() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                got: v.len(),
            });
        }
    }
    let mut out = Array2::<f64>::zeros((test.len(), train.len()));
    for (i, t) in test.iter().enumerate() {
        for (j, r) in train.iter().enumerate() {
            out[[i, j]] = spec.eval(t, r);
        }
    }
    Ok(out)
}

//! Sample covariance estimation and (pseudo-)inversion for Mahalanobis distance.

use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::data::Vector;
use crate::error::{Error, Result};

/// Largest condition number accepted by [`CovarianceMethod::ExactInverse`].
pub const MAX_CONDITION_NUMBER: f64 = 1e12;

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CovarianceMethod {
    ExactInverse,
    #[default]
    /// Eigen-decomposition inverse with eigenvalues below `dim·ε·λ_max`
    /// treated as zero.
    PseudoInverse,
    /// Exact inverse of `(1−λ)Σ + λ·(tr Σ / dim)·I`.
    Shrinkage { lambda: f64 },
}

impl CovarianceMethod {
    pub fn validate(&self) -> Result<()> {
        if let CovarianceMethod::Shrinkage { lambda } = *self {
            if !(lambda > 0.0 && lambda <= 1.0) {
                return Err(Error::Param(format!("shrinkage lambda must be in (0, 1], got {lambda}")));
            }
        }
        Ok(())
    }
}

impl fmt::Display for CovarianceMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CovarianceMethod::ExactInverse => f.write_str("exact_inverse"),
            CovarianceMethod::PseudoInverse => f.write_str("pseudo_inverse"),
            CovarianceMethod::Shrinkage { lambda } => write!(f, "shrinkage:{lambda}"),
        }
    }
}

impl FromStr for CovarianceMethod {
    type Err = Error;

    /// Accepts `exact_inverse`, `pseudo_inverse` and `shrinkage:<lambda>`.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim().to_lowercase().replace('-', "_");
        let method = match s.split_once(':') {
            Some(("shrinkage", lambda)) => CovarianceMethod::Shrinkage {
                lambda: lambda
                    .parse()
                    .map_err(|_| Error::Param(format!("invalid shrinkage lambda '{lambda}'")))?,
            },
            None if s == "exact_inverse" || s == "exact" => CovarianceMethod::ExactInverse,
            None if s == "pseudo_inverse" || s == "pinv" => CovarianceMethod::PseudoInverse,
            _ => return Err(Error::Param(format!("unknown covariance method '{s}'"))),
        };
        method.validate()?;
        Ok(method)
    }
}

/// Mean and inverse covariance of a vector sample.
#[derive(Debug, Clone, PartialEq)]
pub struct CovarianceModel {
    mean: Vector,
    covariance: DMatrix<f64>,
    inverse: DMatrix<f64>,
    source_count: usize,
    method: CovarianceMethod,
}

impl CovarianceModel {
    /// Estimates mean and covariance (denominator `n − 1`) from `sample` and
    /// inverts the covariance with `method`.
    pub fn estimate(sample: &[&Vector], method: CovarianceMethod) -> Result<Self> {
        method.validate()?;
        let n = sample.len();
        if n < 2 {
            return Err(Error::Param(format!(
                "covariance estimation needs at least 2 vectors, got {n}"
            )));
        }
        let dim = sample[0].dim();
        if let Some(bad) = sample.iter().find(|v| v.dim() != dim) {
            return Err(Error::Dim {
                expected: dim,
                actual: bad.dim(),
            });
        }

        let mut mean = vec![0.0; dim];
        for v in sample {
            for (m, x) in mean.iter_mut().zip(v.as_slice()) {
                *m += x;
            }
        }
        for m in &mut mean {
            *m /= n as f64;
        }

        let mut cov = DMatrix::<f64>::zeros(dim, dim);
        let mut centered = vec![0.0; dim];
        for v in sample {
            for ((c, x), m) in centered.iter_mut().zip(v.as_slice()).zip(&mean) {
                *c = x - m;
            }
            for i in 0..dim {
                for j in i..dim {
                    cov[(i, j)] += centered[i] * centered[j];
                }
            }
        }
        let denom = (n - 1) as f64;
        for i in 0..dim {
            for j in i..dim {
                let value = cov[(i, j)] / denom;
                cov[(i, j)] = value;
                cov[(j, i)] = value;
            }
        }

        let inverse = match method {
            CovarianceMethod::ExactInverse => exact_symmetric_inverse(&cov)?,
            CovarianceMethod::PseudoInverse => symmetric_pseudo_inverse(&cov),
            CovarianceMethod::Shrinkage { lambda } => {
                let target = cov.trace() / dim as f64;
                let mut shrunk = cov.scale(1.0 - lambda);
                for i in 0..dim {
                    shrunk[(i, i)] += lambda * target;
                }
                exact_symmetric_inverse(&shrunk)?
            }
        };

        Ok(CovarianceModel {
            mean: Vector::new(mean)?,
            covariance: cov,
            inverse,
            source_count: n,
            method,
        })
    }

    /// Builds a model from a known mean and inverse covariance. The inverse
    /// must be square, match the mean and be symmetric positive
    /// semi-definite.
    pub fn from_inverse(mean: Vector, inverse: DMatrix<f64>) -> Result<Self> {
        let dim = mean.dim();
        if inverse.nrows() != dim || inverse.ncols() != dim {
            return Err(Error::Dim {
                expected: dim,
                actual: inverse.nrows(),
            });
        }
        check_symmetric_psd(&inverse)?;
        let covariance = symmetric_pseudo_inverse(&inverse);
        Ok(CovarianceModel {
            mean,
            covariance,
            inverse,
            source_count: 0,
            method: CovarianceMethod::ExactInverse,
        })
    }

    pub fn mean(&self) -> &Vector {
        &self.mean
    }

    pub fn covariance(&self) -> &DMatrix<f64> {
        &self.covariance
    }

    pub fn inverse(&self) -> &DMatrix<f64> {
        &self.inverse
    }

    pub fn source_count(&self) -> usize {
        self.source_count
    }

    pub fn method(&self) -> CovarianceMethod {
        self.method
    }

    pub fn dim(&self) -> usize {
        self.mean.dim()
    }

    /// `sqrt((a − b)ᵀ Σ⁻¹ (a − b))`, with the quadratic form clamped at zero.
    pub fn distance_between(&self, a: &[f64], b: &[f64]) -> Result<f64> {
        let dim = self.dim();
        for len in [a.len(), b.len()] {
            if len != dim {
                return Err(Error::Dim {
                    expected: dim,
                    actual: len,
                });
            }
        }
        let diff: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
        let mut q = 0.0;
        for i in 0..dim {
            let row: f64 = diff.iter().enumerate().map(|(j, d)| self.inverse[(i, j)] * d).sum();
            q += diff[i] * row;
        }
        Ok(q.max(0.0).sqrt())
    }
}

fn check_symmetric_psd(m: &DMatrix<f64>) -> Result<()> {
    let scale = m.amax().max(f64::MIN_POSITIVE);
    for i in 0..m.nrows() {
        for j in (i + 1)..m.ncols() {
            if (m[(i, j)] - m[(j, i)]).abs() > 1e-9 * scale {
                return Err(Error::Param(format!("inverse covariance is not symmetric at ({i}, {j})")));
            }
        }
    }
    let eig = SymmetricEigen::new(m.clone());
    let max = eig.eigenvalues.amax();
    if eig.eigenvalues.iter().any(|&l| l < -1e-9 * max) {
        return Err(Error::Param("inverse covariance is not positive semi-definite".into()));
    }
    Ok(())
}

fn symmetrize(m: &mut DMatrix<f64>) {
    let n = m.nrows();
    for i in 0..n {
        for j in (i + 1)..n {
            let avg = 0.5 * (m[(i, j)] + m[(j, i)]);
            m[(i, j)] = avg;
            m[(j, i)] = avg;
        }
    }
}

fn reconstruct(eig: &SymmetricEigen<f64, nalgebra::Dyn>, inv_values: &[f64]) -> DMatrix<f64> {
    let n = inv_values.len();
    let v = &eig.eigenvectors;
    let mut scaled = v.clone();
    for (k, &w) in inv_values.iter().enumerate() {
        scaled.column_mut(k).scale_mut(w);
    }
    let mut out = &scaled * v.transpose();
    debug_assert_eq!(out.nrows(), n);
    symmetrize(&mut out);
    out
}

/// Moore–Penrose pseudo-inverse of a symmetric matrix.
///
/// Eigenvalues with magnitude at most `dim·ε·|λ|_max` are treated as zero.
pub fn symmetric_pseudo_inverse(m: &DMatrix<f64>) -> DMatrix<f64> {
    let n = m.nrows();
    let eig = SymmetricEigen::new(m.clone());
    let max = eig.eigenvalues.amax();
    let tol = n as f64 * f64::EPSILON * max;
    let inv: Vec<f64> = eig
        .eigenvalues
        .iter()
        .map(|&l| if l.abs() <= tol { 0.0 } else { 1.0 / l })
        .collect();
    reconstruct(&eig, &inv)
}

/// Moore–Penrose pseudo-inverse of any real matrix via SVD.
///
/// Singular values at most `max(rows, cols)·ε·σ_max` are treated as zero.
pub fn pseudo_inverse(m: &DMatrix<f64>) -> DMatrix<f64> {
    if m.is_empty() {
        return m.transpose();
    }
    let svd = m
        .clone()
        .try_svd(true, true, f64::EPSILON, 0)
        .expect("svd without an iteration limit converges");
    let tol = m.nrows().max(m.ncols()) as f64 * f64::EPSILON * svd.singular_values.max();
    svd.pseudo_inverse(tol).expect("both singular vector sets were computed")
}

/// Inverse of a symmetric positive-definite matrix, rejecting condition
/// numbers above [`MAX_CONDITION_NUMBER`].
pub fn exact_symmetric_inverse(m: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let eig = SymmetricEigen::new(m.clone());
    let max = eig.eigenvalues.max();
    let min = eig.eigenvalues.min();
    if max <= 0.0 || min <= 0.0 {
        return Err(Error::Singular(format!(
            "smallest eigenvalue {min:e} is not positive"
        )));
    }
    let cond = max / min;
    if cond > MAX_CONDITION_NUMBER {
        return Err(Error::Singular(format!(
            "condition number {cond:e} exceeds {MAX_CONDITION_NUMBER:e}"
        )));
    }
    let inv: Vec<f64> = eig.eigenvalues.iter().map(|l| 1.0 / l).collect();
    Ok(reconstruct(&eig, &inv))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn v(x: &[f64]) -> Vector {
        Vector::new(x.to_vec()).unwrap()
    }

    #[test]
    fn two_point_sample() {
        let a = v(&[0.0, 0.0]);
        let b = v(&[2.0, 2.0]);
        let model = CovarianceModel::estimate(&[&a, &b], CovarianceMethod::PseudoInverse).unwrap();
        assert_eq!(model.mean().as_slice(), &[1.0, 1.0]);
        assert_eq!(model.covariance(), &DMatrix::from_row_slice(2, 2, &[2.0, 2.0, 2.0, 2.0]));
        assert_eq!(model.source_count(), 2);

        let err = CovarianceModel::estimate(&[&a, &b], CovarianceMethod::ExactInverse).unwrap_err();
        assert!(matches!(err, Error::Singular(_)), "{err}");
    }

    #[test]
    fn too_few_vectors() {
        let a = v(&[1.0, 2.0]);
        assert!(matches!(
            CovarianceModel::estimate(&[&a], CovarianceMethod::PseudoInverse),
            Err(Error::Param(_))
        ));
    }

    #[test]
    fn rank_one_pseudo_inverse() {
        // Σ = [[2,2],[2,2]] = 4·uuᵀ with u = (1,1)/√2, so Σ⁺ = uuᵀ/4.
        let a = v(&[0.0, 0.0]);
        let b = v(&[2.0, 2.0]);
        let model = CovarianceModel::estimate(&[&a, &b], CovarianceMethod::PseudoInverse).unwrap();
        for x in model.inverse().iter() {
            assert_relative_eq!(*x, 0.125, epsilon = 1e-14);
        }
    }

    #[test]
    fn shrinkage_makes_singular_invertible() {
        let a = v(&[0.0, 0.0]);
        let b = v(&[2.0, 2.0]);
        let model =
            CovarianceModel::estimate(&[&a, &b], CovarianceMethod::Shrinkage { lambda: 0.5 }).unwrap();
        // (1-λ)Σ + λ·2·I = [[2,1],[1,2]]
        let expected = DMatrix::from_row_slice(2, 2, &[2.0, -1.0, -1.0, 2.0]) / 3.0;
        assert_relative_eq!(model.inverse().clone(), expected, epsilon = 1e-14);
        assert!(CovarianceMethod::Shrinkage { lambda: 0.0 }.validate().is_err());
        assert!(CovarianceMethod::Shrinkage { lambda: 1.5 }.validate().is_err());
    }

    #[test]
    fn mahalanobis_examples() {
        let identity = CovarianceModel::from_inverse(v(&[0.0, 0.0]), DMatrix::identity(2, 2)).unwrap();
        assert_eq!(crate::metrics::mahalanobis(&[3.0, 4.0], &identity).unwrap(), 5.0);

        let diag = CovarianceModel::from_inverse(
            v(&[0.0, 0.0]),
            DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![0.25, 1.0])),
        )
        .unwrap();
        assert_eq!(crate::metrics::mahalanobis(&[2.0, 0.0], &diag).unwrap(), 1.0);
        assert_eq!(crate::metrics::mahalanobis(&[0.0, 0.0], &diag).unwrap(), 0.0);
        assert!(matches!(
            crate::metrics::mahalanobis(&[0.0, 0.0, 1.0], &diag),
            Err(Error::Dim { .. })
        ));
    }

    #[test]
    fn from_inverse_rejects_indefinite() {
        let bad = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, -1.0]);
        assert!(CovarianceModel::from_inverse(v(&[0.0, 0.0]), bad).is_err());
        let asym = DMatrix::from_row_slice(2, 2, &[1.0, 0.5, 0.0, 1.0]);
        assert!(CovarianceModel::from_inverse(v(&[0.0, 0.0]), asym).is_err());
    }

    #[test]
    fn method_parsing() {
        assert_eq!("pinv".parse::<CovarianceMethod>().unwrap(), CovarianceMethod::PseudoInverse);
        assert_eq!("exact_inverse".parse::<CovarianceMethod>().unwrap(), CovarianceMethod::ExactInverse);
        assert_eq!(
            "shrinkage:0.25".parse::<CovarianceMethod>().unwrap(),
            CovarianceMethod::Shrinkage { lambda: 0.25 }
        );
        assert!("shrinkage:2".parse::<CovarianceMethod>().is_err());
        assert!("ledoit".parse::<CovarianceMethod>().is_err());
    }
}

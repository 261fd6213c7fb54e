//! Kernel functions, Gram assembly and the centering algebra for kernel
//! matrices and kernel vectors.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matcore::{self, SampleMatrix};

/// Relative tolerance of the positive semidefiniteness check in [`gram`].
pub const PSD_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum KernelSpec {
    /// `exp(-beta * |x - y|^2)`
    Gaussian { beta: f64 },
    /// `x . y`
    Linear,
    /// `(x . y + offset)^degree`
    Polynomial { degree: u32, offset: f64 },
}

impl KernelSpec {
    pub fn gaussian(beta: f64) -> Result<Self> {
        let spec = KernelSpec::Gaussian { beta };
        spec.validate()?;
        Ok(spec)
    }

    pub fn polynomial(degree: u32, offset: f64) -> Result<Self> {
        let spec = KernelSpec::Polynomial { degree, offset };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            KernelSpec::Gaussian { beta } if !(beta > 0.0 && beta.is_finite()) => Err(
                Error::InvalidArgument(format!("gaussian beta must be positive, got {beta}")),
            ),
            KernelSpec::Polynomial { degree, .. } if degree < 1 => Err(Error::InvalidArgument(
                "polynomial degree must be at least 1".into(),
            )),
            KernelSpec::Polynomial { offset, .. } if !(offset >= 0.0 && offset.is_finite()) => {
                Err(Error::InvalidArgument(format!(
                    "polynomial offset must be nonnegative, got {offset}"
                )))
            }
            _ => Ok(()),
        }
    }

    pub fn is_gaussian(&self) -> bool {
        matches!(self, KernelSpec::Gaussian { .. })
    }

    pub fn name(&self) -> &'static str {
        match self {
            KernelSpec::Gaussian { .. } => "gaussian",
            KernelSpec::Linear => "linear",
            KernelSpec::Polynomial { .. } => "polynomial",
        }
    }

    /// Kernel value from the squared distance and inner product of a pair.
    #[inline]
    fn eval_parts(&self, sq_dist: f64, dot: f64) -> f64 {
        match *self {
            KernelSpec::Gaussian { beta } => (-beta * sq_dist).exp(),
            KernelSpec::Linear => dot,
            KernelSpec::Polynomial { degree, offset } => (dot + offset).powi(degree as i32),
        }
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// `kappa(x, y)`.
pub fn kernel_eval(spec: &KernelSpec, x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::DimensionMismatch {
            expected: x.len(),
            actual: y.len(),
        });
    }
    matcore::ensure_finite_slice(x)?;
    matcore::ensure_finite_slice(y)?;
    Ok(match spec {
        KernelSpec::Gaussian { .. } => spec.eval_parts(squared_distance(x, y), 0.0),
        _ => spec.eval_parts(0.0, dot(x, y)),
    })
}

/// Pairwise squared distances through `|x|^2 - 2 x.y + |y|^2`, with negative
/// round-off clamped to zero and an exactly zero diagonal.
pub fn pairwise_sq_distances(x: &SampleMatrix) -> DMatrix<f64> {
    let inner = x.as_matrix().tr_mul(x.as_matrix());
    let n = x.n_samples();
    let mut out = DMatrix::zeros(n, n);
    for j in 0..n {
        for i in 0..j {
            let v = (inner[(i, i)] - 2.0 * inner[(i, j)] + inner[(j, j)]).max(0.0);
            out[(i, j)] = v;
            out[(j, i)] = v;
        }
    }
    out
}

/// `beta = 1 / (2 * median pairwise squared distance)`.
pub fn median_heuristic_beta(x: &SampleMatrix) -> Result<f64> {
    let n = x.n_samples();
    if n < 2 {
        return Err(Error::InvalidArgument(
            "median heuristic needs at least 2 samples".into(),
        ));
    }
    let d2 = pairwise_sq_distances(x);
    let mut values: Vec<f64> = (0..n)
        .flat_map(|j| (0..j).map(move |i| (i, j)))
        .map(|(i, j)| d2[(i, j)])
        .collect();
    values.sort_by(f64::total_cmp);
    let m = values.len();
    let median = if m % 2 == 1 {
        values[m / 2]
    } else {
        0.5 * (values[m / 2 - 1] + values[m / 2])
    };
    if median <= 0.0 {
        return Err(Error::InvalidArgument(
            "median pairwise distance is zero; set beta explicitly".into(),
        ));
    }
    Ok(1.0 / (2.0 * median))
}

/// Kernel Gram matrix without the semidefiniteness check.
pub fn gram_unchecked(spec: &KernelSpec, x: &SampleMatrix) -> Result<DMatrix<f64>> {
    spec.validate()?;
    let n = x.n_samples();
    let inner = x.as_matrix().tr_mul(x.as_matrix());
    let mut g = DMatrix::zeros(n, n);
    for j in 0..n {
        for i in 0..=j {
            let sq = if i == j {
                0.0
            } else {
                (inner[(i, i)] - 2.0 * inner[(i, j)] + inner[(j, j)]).max(0.0)
            };
            let v = spec.eval_parts(sq, inner[(i, j)]);
            g[(i, j)] = v;
            g[(j, i)] = v;
        }
    }
    Ok(g)
}

/// Kernel Gram matrix `[G]_ij = kappa(x^i, x^j)`, rejected if its smallest
/// eigenvalue is below `-PSD_TOL * lambda_max`.
pub fn gram(spec: &KernelSpec, x: &SampleMatrix) -> Result<DMatrix<f64>> {
    let g = gram_unchecked(spec, x)?;
    check_psd(&g)?;
    Ok(g)
}

pub fn check_psd(g: &DMatrix<f64>) -> Result<()> {
    let spectral = matcore::eig_sym(g)?;
    let max = spectral.eigenvalues.first().copied().unwrap_or(0.0);
    let min = spectral.eigenvalues.last().copied().unwrap_or(0.0);
    if min < -PSD_TOL * max.abs() || (max <= 0.0 && min < 0.0) {
        return Err(Error::NotPositiveSemidefinite {
            min_eigenvalue: min,
            max_eigenvalue: max,
            tolerance: PSD_TOL,
        });
    }
    Ok(())
}

/// Row means and grand mean of the training Gram, kept so that kernel vectors
/// of new points can be centered consistently.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CenteringAggregates {
    /// `(1/n_s) G 1`
    pub col_means: Vec<f64>,
    /// `(1/n_s^2) 1^T G 1`
    pub total_mean: f64,
}

impl CenteringAggregates {
    pub fn from_gram(g: &DMatrix<f64>) -> Self {
        let n = g.nrows() as f64;
        let col_means: Vec<f64> = g.row_iter().map(|r| r.sum() / n).collect();
        let total_mean = col_means.iter().sum::<f64>() / n;
        CenteringAggregates {
            col_means,
            total_mean,
        }
    }
}

/// `G - (1/n) G 1 - (1/n) 1 G + (1/n^2) 1 G 1`, where `1` is the all-ones matrix.
pub fn center_gram(g: &DMatrix<f64>) -> Result<(DMatrix<f64>, CenteringAggregates)> {
    if g.nrows() != g.ncols() {
        return Err(Error::NotSquare {
            rows: g.nrows(),
            cols: g.ncols(),
        });
    }
    if g.nrows() == 0 {
        return Err(Error::EmptyMatrix { rows: 0, cols: 0 });
    }
    let agg = CenteringAggregates::from_gram(g);
    let n = g.nrows();
    let mut out = DMatrix::zeros(n, n);
    for j in 0..n {
        for i in 0..=j {
            let v = g[(i, j)] - agg.col_means[i] - agg.col_means[j] + agg.total_mean;
            out[(i, j)] = v;
            out[(j, i)] = v;
        }
    }
    Ok((out, agg))
}

/// Centers a kernel vector `g` (kernel values against the training samples)
/// with the aggregates of the training Gram:
/// `g - col_means - mean(g) 1 + total_mean 1`.
pub fn center_gram_vector(g: &[f64], agg: &CenteringAggregates) -> Result<DVector<f64>> {
    let n = agg.col_means.len();
    if g.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            actual: g.len(),
        });
    }
    let mean = g.iter().sum::<f64>() / n as f64;
    Ok(DVector::from_iterator(
        n,
        g.iter()
            .zip(&agg.col_means)
            .map(|(gi, ci)| gi - ci - mean + agg.total_mean),
    ))
}

/// Kernel values of `x` against every training sample.
pub fn kernel_vector(spec: &KernelSpec, training: &SampleMatrix, x: &[f64]) -> Result<DVector<f64>> {
    if x.len() != training.dim() {
        return Err(Error::DimensionMismatch {
            expected: training.dim(),
            actual: x.len(),
        });
    }
    matcore::ensure_finite_slice(x)?;
    Ok(DVector::from_iterator(
        training.n_samples(),
        training.columns().map(|xi| match spec {
            KernelSpec::Gaussian { .. } => spec.eval_parts(squared_distance(xi, x), 0.0),
            _ => spec.eval_parts(0.0, dot(xi, x)),
        }),
    ))
}

//! Kernel PCA: diagonalize the (optionally centered) kernel Gram matrix,
//! keep the leading `k` eigenvectors, and map points into `R^k` through
//! their kernel vectors.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernels::{self, CenteringAggregates, KernelSpec};
use crate::matcore::{self, SampleMatrix};
use crate::pca;

/// How reduced coordinates are scaled.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Normalization {
    /// `z = V*^T g`, unit-norm Gram eigenvectors.
    #[default]
    Unit,
    /// `z = diag(lambda)^(-1/2) V*^T g`, unit-norm principal axes in feature space.
    Feature,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KpcaOptions {
    pub epsilon: f64,
    /// Explicit reduced dimension; overrides `epsilon` when set.
    pub k: Option<usize>,
    pub centered: bool,
    pub normalization: Normalization,
}

impl Default for KpcaOptions {
    fn default() -> Self {
        KpcaOptions {
            epsilon: pca::DEFAULT_EPSILON,
            k: None,
            centered: true,
            normalization: Normalization::Unit,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct KpcaModel {
    pub training: SampleMatrix,
    pub kernel: KernelSpec,
    pub centered: bool,
    pub normalization: Normalization,
    /// `n_s x k`, orthonormal columns.
    pub basis: DMatrix<f64>,
    /// All eigenvalues of the (centered) Gram, descending.
    pub eigenvalues: Vec<f64>,
    pub k: usize,
    pub aggregates: CenteringAggregates,
    /// `k x n_s` images of the training samples.
    pub z_train: DMatrix<f64>,
    /// `X^T X` of the training samples in input space.
    input_gram: DMatrix<f64>,
}

impl KpcaModel {
    /// Assembles a model from stored parts (e.g. after loading from disk).
    #[allow(clippy::too_many_arguments)]
    pub fn from_parts(
        training: SampleMatrix,
        kernel: KernelSpec,
        centered: bool,
        normalization: Normalization,
        basis: DMatrix<f64>,
        eigenvalues: Vec<f64>,
        aggregates: CenteringAggregates,
        z_train: DMatrix<f64>,
    ) -> Result<Self> {
        kernel.validate()?;
        let n = training.n_samples();
        let k = basis.ncols();
        if basis.nrows() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                actual: basis.nrows(),
            });
        }
        if k == 0 || eigenvalues.len() != n || eigenvalues[..k].iter().any(|l| *l <= 0.0) {
            return Err(Error::InvalidArgument(
                "model needs k >= 1 positive eigenvalues and one eigenvalue per sample".into(),
            ));
        }
        if aggregates.col_means.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                actual: aggregates.col_means.len(),
            });
        }
        if z_train.shape() != (k, n) {
            return Err(Error::DimensionMismatch {
                expected: k * n,
                actual: z_train.len(),
            });
        }
        let input_gram = training.as_matrix().tr_mul(training.as_matrix());
        Ok(KpcaModel {
            training,
            kernel,
            centered,
            normalization,
            basis,
            eigenvalues,
            k,
            aggregates,
            z_train,
            input_gram,
        })
    }

    pub fn dim(&self) -> usize {
        self.training.dim()
    }

    pub fn n_samples(&self) -> usize {
        self.training.n_samples()
    }

    /// Gram matrix of the training samples in input space, `X^T X`.
    pub fn input_gram(&self) -> &DMatrix<f64> {
        &self.input_gram
    }

    pub fn total_variance(&self) -> f64 {
        self.eigenvalues.iter().sum()
    }

    pub fn captured_variance(&self) -> f64 {
        self.eigenvalues[..self.k].iter().sum::<f64>() / self.total_variance()
    }

    /// Per-component factor applied after projecting on the basis.
    fn component_scale(&self, i: usize) -> f64 {
        match self.normalization {
            Normalization::Unit => 1.0,
            Normalization::Feature => 1.0 / self.eigenvalues[i].sqrt(),
        }
    }

    /// Training image `z^j`.
    pub fn z_column(&self, j: usize) -> DVector<f64> {
        self.z_train.column(j).into_owned()
    }

    /// Raw (uncentered) kernel vector `[kappa(x^i, x)]_i`.
    pub fn kernel_vector(&self, x: &[f64]) -> Result<DVector<f64>> {
        kernels::kernel_vector(&self.kernel, &self.training, x)
    }

    /// Reduced coordinates of a kernel vector already built against the
    /// training samples; centers it first when the model is centered.
    pub fn project_kernel_vector(&self, g: &DVector<f64>) -> Result<DVector<f64>> {
        let g = if self.centered {
            kernels::center_gram_vector(g.as_slice(), &self.aggregates)?
        } else {
            if g.len() != self.n_samples() {
                return Err(Error::DimensionMismatch {
                    expected: self.n_samples(),
                    actual: g.len(),
                });
            }
            g.clone()
        };
        let mut z = self.basis.tr_mul(&g);
        for (i, zi) in z.iter_mut().enumerate() {
            *zi *= self.component_scale(i);
        }
        Ok(z)
    }

    /// Kernel vector predicted by reduced coordinates `z`: the inverse of the
    /// projection restricted to the span of the basis (`V* z` in the unit
    /// convention).
    pub fn lift(&self, z: &[f64]) -> Result<DVector<f64>> {
        if z.len() != self.k {
            return Err(Error::DimensionMismatch {
                expected: self.k,
                actual: z.len(),
            });
        }
        let scaled = DVector::from_fn(self.k, |i, _| z[i] / self.component_scale(i));
        Ok(&self.basis * scaled)
    }
}

/// Fits kernel PCA on the samples in `x`.
pub fn kpca_fit(x: &SampleMatrix, kernel: KernelSpec, opts: &KpcaOptions) -> Result<KpcaModel> {
    kernel.validate()?;
    let n = x.n_samples();
    if n < 2 {
        return Err(Error::InvalidArgument(format!(
            "kernel PCA needs at least 2 samples, got {n}"
        )));
    }
    let raw = kernels::gram(&kernel, x)?;
    let (g, aggregates) = if opts.centered {
        kernels::center_gram(&raw)?
    } else {
        let agg = CenteringAggregates::from_gram(&raw);
        (raw, agg)
    };
    let spectral = matcore::eig_sym(&g)?;
    let eigenvalues: Vec<f64> = spectral.eigenvalues.iter().map(|l| l.max(0.0)).collect();
    let selected = pca::select_dimension(&eigenvalues, opts.epsilon)?;
    let positive = eigenvalues.iter().take_while(|l| **l > 0.0).count();
    let k = match opts.k {
        Some(0) => return Err(Error::InvalidArgument("k must be at least 1".into())),
        Some(k) if k > positive => {
            return Err(Error::InvalidArgument(format!(
                "k = {k} exceeds the {positive} positive Gram eigenvalues"
            )))
        }
        Some(k) => k,
        None => selected,
    };
    let basis = spectral.basis.columns(0, k).into_owned();
    let mut z_train = basis.tr_mul(&g);
    if opts.normalization == Normalization::Feature {
        for (i, mut row) in z_train.row_iter_mut().enumerate() {
            row /= eigenvalues[i].sqrt();
        }
    }
    KpcaModel::from_parts(
        x.clone(),
        kernel,
        opts.centered,
        opts.normalization,
        basis,
        eigenvalues,
        aggregates,
        z_train,
    )
}

/// Maps a new point into the reduced space.
pub fn kpca_transform(model: &KpcaModel, x_new: &[f64]) -> Result<DVector<f64>> {
    let g = model.kernel_vector(x_new)?;
    model.project_kernel_vector(&g)
}

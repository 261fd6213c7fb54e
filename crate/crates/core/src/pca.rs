//! Linear PCA, fitted either on the `d x d` covariance `X X^T` or on the
//! `n_s x n_s` Gram matrix `X^T X` (POD), plus the operations relating the
//! two eigenbases.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::matcore::{self, SampleMatrix};

pub const DEFAULT_EPSILON: f64 = 1e-4;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PcaOptions {
    /// Fraction of the total variance that may be discarded, in `[0, 1)`.
    pub epsilon: f64,
    /// Subtract the sample mean before diagonalizing.
    pub center: bool,
}

impl Default for PcaOptions {
    fn default() -> Self {
        PcaOptions {
            epsilon: DEFAULT_EPSILON,
            center: true,
        }
    }
}

impl PcaOptions {
    pub fn with_epsilon(epsilon: f64) -> Self {
        PcaOptions {
            epsilon,
            ..Default::default()
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PcaModel {
    /// Training column mean (zero when fitted with `center = false`).
    pub mean: DVector<f64>,
    /// `d x k` orthonormal reduced basis `U*`.
    pub basis: DMatrix<f64>,
    /// Full descending eigenvalue list.
    pub eigenvalues: Vec<f64>,
    pub k: usize,
    pub total_variance: f64,
}

impl PcaModel {
    pub fn dim(&self) -> usize {
        self.basis.nrows()
    }

    /// Fraction of the total variance captured by the first `k` eigenvalues.
    pub fn captured_variance(&self) -> f64 {
        self.eigenvalues[..self.k].iter().sum::<f64>() / self.total_variance
    }
}

/// Subtracts the column mean from every sample.
pub fn center_samples(x: &SampleMatrix) -> Result<(SampleMatrix, DVector<f64>)> {
    let mean = x.as_matrix().column_mean();
    let mut centered = x.as_matrix().clone();
    for mut col in centered.column_iter_mut() {
        col -= &mean;
    }
    Ok((SampleMatrix::from_matrix(centered)?, mean))
}

fn validate_epsilon(epsilon: f64) -> Result<()> {
    if !(0.0..1.0).contains(&epsilon) {
        return Err(Error::InvalidArgument(format!(
            "epsilon must lie in [0, 1), got {epsilon}"
        )));
    }
    Ok(())
}

/// Smallest `k` with `sum(eigenvalues[..k]) >= (1 - epsilon) * sum(eigenvalues)`.
pub fn select_dimension(eigenvalues: &[f64], epsilon: f64) -> Result<usize> {
    validate_epsilon(epsilon)?;
    if eigenvalues.is_empty() {
        return Err(Error::AllZeroVariance);
    }
    if let Some(bad) = eigenvalues.iter().find(|v| !v.is_finite() || **v < 0.0) {
        return Err(Error::InvalidArgument(format!(
            "eigenvalues must be finite and nonnegative, got {bad}"
        )));
    }
    if eigenvalues.windows(2).any(|w| w[0] < w[1]) {
        return Err(Error::InvalidArgument(
            "eigenvalues must be sorted in descending order".into(),
        ));
    }
    let total: f64 = eigenvalues.iter().sum();
    if total == 0.0 {
        return Err(Error::AllZeroVariance);
    }
    let target = (1.0 - epsilon) * total;
    let mut partial = 0.0;
    for (i, lambda) in eigenvalues.iter().enumerate() {
        partial += lambda;
        if partial >= target {
            return Ok(i + 1);
        }
    }
    // Unreachable in exact arithmetic; guards against the running sum
    // falling one ulp short of the precomputed total.
    Ok(eigenvalues.len())
}

fn prepare(x: &SampleMatrix, opts: &PcaOptions) -> Result<(DMatrix<f64>, DVector<f64>)> {
    validate_epsilon(opts.epsilon)?;
    if x.n_samples() < 2 {
        return Err(Error::InvalidArgument(format!(
            "PCA needs at least 2 samples, got {}",
            x.n_samples()
        )));
    }
    if opts.center {
        let (c, mean) = center_samples(x)?;
        Ok((c.into_matrix(), mean))
    } else {
        Ok((x.as_matrix().clone(), DVector::zeros(x.dim())))
    }
}

fn clamp_nonnegative(eigenvalues: &[f64]) -> Vec<f64> {
    eigenvalues.iter().map(|v| v.max(0.0)).collect()
}

/// PCA by diagonalizing the covariance `C = X X^T` of the (centered) samples.
pub fn fit_covariance(x: &SampleMatrix, opts: &PcaOptions) -> Result<PcaModel> {
    let (xc, mean) = prepare(x, opts)?;
    let cov = matcore::outer_accumulate(&xc)?;
    let spectral = matcore::eig_sym(&cov)?;
    let eigenvalues = clamp_nonnegative(&spectral.eigenvalues);
    let k = select_dimension(&eigenvalues, opts.epsilon)?;
    let basis = spectral.basis.columns(0, k).into_owned();
    let total_variance = eigenvalues.iter().sum();
    Ok(PcaModel {
        mean,
        basis,
        eigenvalues,
        k,
        total_variance,
    })
}

/// PCA through the Gram matrix `G = X^T X`.
///
/// Returns the model together with the `n_s x k` reduced Gram eigenbasis
/// `V*`. The columns of `U*` are recovered as `X v^i` scaled to unit length.
pub fn fit_gram(x: &SampleMatrix, opts: &PcaOptions) -> Result<(PcaModel, DMatrix<f64>)> {
    let (xc, mean) = prepare(x, opts)?;
    let gram = xc.transpose() * &xc;
    let gram = (&gram + gram.transpose()) * 0.5;
    let spectral = matcore::eig_sym(&gram)?;
    let eigenvalues = clamp_nonnegative(&spectral.eigenvalues);
    let rank_cap = xc.nrows().min(xc.ncols());
    let k = select_dimension(&eigenvalues, opts.epsilon)?.min(rank_cap);
    let v_reduced = spectral.basis.columns(0, k).into_owned();

    let mut basis = &xc * &v_reduced;
    for (i, mut col) in basis.column_iter_mut().enumerate() {
        let norm = col.norm();
        if norm == 0.0 {
            return Err(Error::InvalidArgument(format!(
                "Gram eigenvector {i} maps to the zero vector"
            )));
        }
        col /= norm;
    }
    let total_variance = eigenvalues.iter().sum();
    Ok((
        PcaModel {
            mean,
            basis,
            eigenvalues,
            k,
            total_variance,
        },
        v_reduced,
    ))
}

/// Reduced coordinates `U*^T (x - mean)`.
pub fn forward(model: &PcaModel, x: &[f64]) -> Result<DVector<f64>> {
    if x.len() != model.dim() {
        return Err(Error::DimensionMismatch {
            expected: model.dim(),
            actual: x.len(),
        });
    }
    let shifted = DVector::from_column_slice(x) - &model.mean;
    Ok(model.basis.tr_mul(&shifted))
}

/// Linear reconstruction `mean + U* z`.
pub fn backward(model: &PcaModel, z: &[f64]) -> Result<DVector<f64>> {
    if z.len() != model.k {
        return Err(Error::DimensionMismatch {
            expected: model.k,
            actual: z.len(),
        });
    }
    Ok(&model.mean + &model.basis * DVector::from_column_slice(z))
}

/// `Z* = U*^T (X - mean)` for every sample at once, `k x n_s`.
pub fn forward_all(model: &PcaModel, x: &SampleMatrix) -> Result<DMatrix<f64>> {
    if x.dim() != model.dim() {
        return Err(Error::DimensionMismatch {
            expected: model.dim(),
            actual: x.dim(),
        });
    }
    let mut shifted = x.as_matrix().clone();
    for mut col in shifted.column_iter_mut() {
        col -= &model.mean;
    }
    Ok(model.basis.tr_mul(&shifted))
}

/// Frobenius norm of `X - (mean + U* Z*)` over the given samples.
pub fn reconstruction_error(model: &PcaModel, x: &SampleMatrix) -> Result<f64> {
    let z = forward_all(model, x)?;
    let mut rec = &model.basis * z;
    for mut col in rec.column_iter_mut() {
        col += &model.mean;
    }
    Ok((x.as_matrix() - rec).norm())
}

/// Returns a copy of `model` truncated (or extended) to `k` components using
/// the full covariance eigenbasis of `x`. Used to study the error as `k` varies.
pub fn with_dimension(x: &SampleMatrix, opts: &PcaOptions, k: usize) -> Result<PcaModel> {
    let (xc, mean) = prepare(x, opts)?;
    let spectral = matcore::eig_sym(&matcore::outer_accumulate(&xc)?)?;
    if k == 0 || k > spectral.eigenvalues.len() {
        return Err(Error::InvalidArgument(format!(
            "k must lie in 1..={}, got {k}",
            spectral.eigenvalues.len()
        )));
    }
    let eigenvalues = clamp_nonnegative(&spectral.eigenvalues);
    Ok(PcaModel {
        mean,
        basis: spectral.basis.columns(0, k).into_owned(),
        total_variance: eigenvalues.iter().sum(),
        eigenvalues,
        k,
    })
}

/// The `n_s x r` matrix with entries `B[l, j] = x^l . u^j / lambda_j`, for
/// the `r` leading eigenpairs with nonzero eigenvalue. Its columns are
/// eigenvectors of `X^T X` with the same eigenvalues.
pub fn duality_matrix(
    samples: &DMatrix<f64>,
    basis: &DMatrix<f64>,
    eigenvalues: &[f64],
) -> Result<DMatrix<f64>> {
    if basis.nrows() != samples.nrows() {
        return Err(Error::DimensionMismatch {
            expected: samples.nrows(),
            actual: basis.nrows(),
        });
    }
    let r = eigenvalues
        .iter()
        .take(basis.ncols())
        .take_while(|l| **l > 0.0)
        .count();
    let mut b = samples.transpose() * basis.columns(0, r);
    for (j, mut col) in b.column_iter_mut().enumerate() {
        col /= eigenvalues[j];
    }
    Ok(b)
}

/// `Z* = V*^T G`, the reduced samples expressed through the Gram eigenbasis.
pub fn reduced_from_gram(v_reduced: &DMatrix<f64>, gram: &DMatrix<f64>) -> DMatrix<f64> {
    v_reduced.tr_mul(gram)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matcore::{abs_cosine, orthonormality_defect};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::StandardNormal;

    fn random_samples(seed: u64, d: usize, n: usize) -> SampleMatrix {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        SampleMatrix::from_matrix(DMatrix::from_fn(d, n, |_, _| rng.random_range(-2.0..2.0)))
            .unwrap()
    }

    #[test]
    fn center_two_samples() {
        let x = SampleMatrix::from_columns(&[[1.0, 1.0], [3.0, 1.0]]).unwrap();
        let (c, mean) = center_samples(&x).unwrap();
        assert_eq!(mean.as_slice(), &[2.0, 1.0]);
        assert_eq!(c.column(0), &[-1.0, 0.0]);
        assert_eq!(c.column(1), &[1.0, 0.0]);
    }

    #[test]
    fn centering_is_idempotent() {
        let x = SampleMatrix::from_columns(&[[-1.0, 2.0], [1.0, -2.0]]).unwrap();
        let (c, mean) = center_samples(&x).unwrap();
        assert_eq!(c, x);
        assert!(mean.amax() < 1e-15);
    }

    #[test]
    fn centering_round_trip() {
        let x = random_samples(1, 5, 20);
        let (c, mean) = center_samples(&x).unwrap();
        assert!(c.as_matrix().column_mean().amax() <= 1e-12 * 2.0);
        let mut back = c.into_matrix();
        for mut col in back.column_iter_mut() {
            col += &mean;
        }
        assert!((back - x.as_matrix()).amax() <= 1e-12);
    }

    #[test]
    fn select_dimension_examples() {
        assert_eq!(select_dimension(&[4.0, 3.0, 2.0, 1.0], 0.25).unwrap(), 3);
        assert_eq!(select_dimension(&[1.0, 0.0, 0.0], 0.3).unwrap(), 1);
        assert_eq!(select_dimension(&[1.0, 0.0, 0.0], 0.0).unwrap(), 1);
        assert_eq!(select_dimension(&[5.0, 2.0, 1.0, 0.0, 0.0], 0.0).unwrap(), 3);
        // exact equality resolves to the smaller k
        assert_eq!(select_dimension(&[1.0, 1.0, 1.0, 1.0], 0.5).unwrap(), 2);
    }

    #[test]
    fn select_dimension_errors() {
        assert!(matches!(
            select_dimension(&[0.0, 0.0], 0.1),
            Err(Error::AllZeroVariance)
        ));
        assert!(matches!(
            select_dimension(&[1.0], 1.0),
            Err(Error::InvalidArgument(_))
        ));
        assert!(matches!(
            select_dimension(&[1.0, 2.0], 0.1),
            Err(Error::InvalidArgument(_))
        ));
    }

    #[test]
    fn line_data_is_rank_one() {
        let dir = [1.0, 2.0, -2.0];
        let cols: Vec<Vec<f64>> = (0..7)
            .map(|i| dir.iter().map(|c| c * (i as f64 - 2.5)).collect())
            .collect();
        let x = SampleMatrix::from_columns(&cols).unwrap();
        let model = fit_covariance(&x, &PcaOptions::with_epsilon(1e-6)).unwrap();
        assert_eq!(model.k, 1);
        assert!(abs_cosine(model.basis.column(0).as_slice(), &dir) >= 1.0 - 1e-10);
    }

    #[test]
    fn isotropic_cloud_has_balanced_spectrum() {
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        let x = SampleMatrix::from_matrix(DMatrix::from_fn(2, 1000, |_, _| {
            rng.sample::<f64, _>(StandardNormal)
        }))
        .unwrap();
        let model = fit_covariance(&x, &PcaOptions::default()).unwrap();
        // naive sample covariance as oracle
        let mean = x.as_matrix().column_mean();
        let mut cov = [[0.0; 2]; 2];
        for c in x.columns() {
            for i in 0..2 {
                for j in 0..2 {
                    cov[i][j] += (c[i] - mean[i]) * (c[j] - mean[j]);
                }
            }
        }
        let tr = cov[0][0] + cov[1][1];
        let det = cov[0][0] * cov[1][1] - cov[0][1] * cov[1][0];
        let disc = (tr * tr / 4.0 - det).sqrt();
        let (l1, l2) = (tr / 2.0 + disc, tr / 2.0 - disc);
        assert!((model.eigenvalues[0] - l1).abs() <= 1e-8 * l1);
        assert!((model.eigenvalues[1] - l2).abs() <= 1e-8 * l1);
        let ratio = l1 / l2;
        assert!((0.8..=1.25).contains(&ratio), "ratio {ratio}");
    }

    #[test]
    fn duplicating_samples_doubles_eigenvalues() {
        let x = random_samples(4, 3, 9);
        let mut cols: Vec<Vec<f64>> = x.columns().map(|c| c.to_vec()).collect();
        cols.extend(x.columns().map(|c| c.to_vec()));
        let doubled = SampleMatrix::from_columns(&cols).unwrap();
        let a = fit_covariance(&x, &PcaOptions::default()).unwrap();
        let b = fit_covariance(&doubled, &PcaOptions::default()).unwrap();
        assert_eq!(a.k, b.k);
        for (la, lb) in a.eigenvalues.iter().zip(&b.eigenvalues) {
            assert!((2.0 * la - lb).abs() <= 1e-10 * lb.max(1.0));
        }
        assert!((&a.basis - &b.basis).amax() <= 1e-8);
    }

    #[test]
    fn forward_and_backward_examples() {
        let x = random_samples(8, 4, 15);
        let model = fit_covariance(&x, &PcaOptions::with_epsilon(0.2)).unwrap();
        let z0 = forward(&model, model.mean.as_slice()).unwrap();
        assert!(z0.amax() < 1e-14);

        let shifted = &model.mean + model.basis.column(0);
        let z1 = forward(&model, shifted.as_slice()).unwrap();
        assert!((z1[0] - 1.0).abs() < 1e-12);
        assert!(z1.rows(1, model.k - 1).amax() < 1e-12);

        let back = backward(&model, &vec![0.0; model.k]).unwrap();
        assert_eq!(back, model.mean);

        let in_span = &model.mean + &model.basis * DVector::from_fn(model.k, |i, _| i as f64 - 0.7);
        let z = forward(&model, in_span.as_slice()).unwrap();
        let rec = backward(&model, z.as_slice()).unwrap();
        assert!((rec - in_span).amax() <= 1e-10);
    }

    #[test]
    fn forward_training_column_matches_matrix_product() {
        let x = random_samples(12, 5, 11);
        let model = fit_covariance(&x, &PcaOptions::with_epsilon(0.1)).unwrap();
        let (xc, _) = center_samples(&x).unwrap();
        let z_all = model.basis.transpose() * xc.as_matrix();
        for j in 0..x.n_samples() {
            let z = forward(&model, x.column(j)).unwrap();
            assert!((z - z_all.column(j)).amax() <= 1e-12);
        }
    }

    #[test]
    fn dimension_errors() {
        let x = random_samples(2, 3, 5);
        let model = fit_covariance(&x, &PcaOptions::default()).unwrap();
        assert!(matches!(
            forward(&model, &[1.0]),
            Err(Error::DimensionMismatch { .. })
        ));
        assert!(matches!(
            backward(&model, &[1.0; 9]),
            Err(Error::DimensionMismatch { .. })
        ));
        let one = SampleMatrix::from_columns(&[[1.0, 2.0]]).unwrap();
        assert!(fit_covariance(&one, &PcaOptions::default()).is_err());
    }

    #[test]
    fn reconstruction_error_decreases_with_k() {
        let x = random_samples(31, 6, 25);
        let opts = PcaOptions::default();
        let errors: Vec<f64> = (1..=6)
            .map(|k| reconstruction_error(&with_dimension(&x, &opts, k).unwrap(), &x).unwrap())
            .collect();
        for w in errors.windows(2) {
            assert!(w[1] <= w[0] + 1e-12, "{errors:?}");
        }
        assert!(errors[5] < 1e-10);
    }

    #[test]
    fn gram_fit_agrees_with_covariance_fit() {
        let x = random_samples(41, 4, 12);
        let opts = PcaOptions::with_epsilon(1e-12);
        let cov = fit_covariance(&x, &opts).unwrap();
        let (gram, v) = fit_gram(&x, &opts).unwrap();
        assert_eq!(v.shape(), (12, gram.k));
        assert_eq!(gram.k, cov.k);
        for i in 0..4 {
            let (a, b) = (cov.eigenvalues[i], gram.eigenvalues[i]);
            assert!((a - b).abs() <= 1e-8 * a);
        }
        for i in 0..cov.k {
            let c = abs_cosine(
                cov.basis.column(i).as_slice(),
                gram.basis.column(i).as_slice(),
            );
            assert!(c >= 1.0 - 1e-8);
        }
        assert!(orthonormality_defect(&gram.basis) <= 1e-10);
        // rank bound: centered 4 x 12 data has at most 4 nonzero Gram eigenvalues
        let l1 = gram.eigenvalues[0];
        assert!(gram.eigenvalues[4..].iter().all(|l| *l <= 1e-10 * l1));
    }

    #[test]
    fn duality_matrix_spans_gram_eigenvectors() {
        let x = random_samples(43, 4, 12);
        let opts = PcaOptions::with_epsilon(0.0);
        let (xc, _) = center_samples(&x).unwrap();
        let full = with_dimension(&x, &opts, 4).unwrap();
        let b = duality_matrix(xc.as_matrix(), &full.basis, &full.eigenvalues).unwrap();
        let (_, v) = fit_gram(&x, &opts).unwrap();
        assert_eq!(b.ncols(), 4);
        for j in 0..4 {
            let c = abs_cosine(b.column(j).as_slice(), v.column(j).as_slice());
            assert!(c >= 1.0 - 1e-8, "column {j}: {c}");
        }
    }

    #[test]
    fn reduced_from_gram_rows_scale_by_singular_values() {
        let x = random_samples(47, 3, 10);
        let opts = PcaOptions::with_epsilon(0.0);
        let (model, v) = fit_gram(&x, &opts).unwrap();
        let (xc, _) = center_samples(&x).unwrap();
        let g = xc.as_matrix().transpose() * xc.as_matrix();
        let from_gram = reduced_from_gram(&v, &g);
        let direct = model.basis.transpose() * xc.as_matrix();
        for i in 0..model.k {
            let (a, b) = (from_gram.row(i).transpose(), direct.row(i).transpose());
            assert!(abs_cosine(a.as_slice(), b.as_slice()) >= 1.0 - 1e-8);
            let sigma = model.eigenvalues[i].sqrt();
            assert!((a.norm() / b.norm() - sigma).abs() <= 1e-8 * sigma);
        }
    }

    #[test]
    fn trace_equals_eigenvalue_sum() {
        let x = random_samples(53, 6, 14);
        let model = fit_covariance(&x, &PcaOptions::default()).unwrap();
        let (xc, _) = center_samples(&x).unwrap();
        let trace = matcore::outer_accumulate(xc.as_matrix()).unwrap().trace();
        assert!((trace - model.total_variance).abs() <= 1e-10 * trace);
    }
}

//! Dense sample container and the symmetric spectral primitives the rest of
//! the crate is built on.
//!
//! Samples are stored one per column (`d x n_s`), which is also nalgebra's
//! native column-major layout, so a sample is a contiguous slice.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Relative symmetry tolerance accepted by [`eig_sym`].
pub const SYMMETRY_TOL: f64 = 1e-12;

/// Eigenvalues whose magnitude falls below this fraction of the largest
/// magnitude are reported as exactly zero.
pub const ZERO_EIGENVALUE_RTOL: f64 = 1e-12;

/// Components smaller than this are skipped when fixing eigenvector signs.
const SIGN_THRESHOLD: f64 = 1e-12;

const MAX_JACOBI_SWEEPS: usize = 100;

/// A `d x n_s` matrix whose column `j` is the sample `x^j`.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleMatrix(DMatrix<f64>);

impl SampleMatrix {
    /// Builds a sample matrix from column-major values.
    pub fn new(rows: usize, cols: usize, column_major: Vec<f64>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::EmptyMatrix { rows, cols });
        }
        if column_major.len() != rows * cols {
            return Err(Error::DimensionMismatch {
                expected: rows * cols,
                actual: column_major.len(),
            });
        }
        Self::from_matrix(DMatrix::from_vec(rows, cols, column_major))
    }

    /// Builds a sample matrix from a list of samples of equal length.
    pub fn from_columns<C: AsRef<[f64]>>(columns: &[C]) -> Result<Self> {
        let cols = columns.len();
        let rows = columns.first().map_or(0, |c| c.as_ref().len());
        let mut data = Vec::with_capacity(rows * cols);
        for c in columns {
            let c = c.as_ref();
            if c.len() != rows {
                return Err(Error::DimensionMismatch {
                    expected: rows,
                    actual: c.len(),
                });
            }
            data.extend_from_slice(c);
        }
        Self::new(rows, cols, data)
    }

    pub fn from_matrix(m: DMatrix<f64>) -> Result<Self> {
        if m.nrows() == 0 || m.ncols() == 0 {
            return Err(Error::EmptyMatrix {
                rows: m.nrows(),
                cols: m.ncols(),
            });
        }
        ensure_finite(&m)?;
        Ok(SampleMatrix(m))
    }

    /// Feature dimension `d`.
    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    /// Sample count `n_s`.
    pub fn n_samples(&self) -> usize {
        self.0.ncols()
    }

    /// Sample `j` as a contiguous slice of length [`dim`](Self::dim).
    pub fn column(&self, j: usize) -> &[f64] {
        let d = self.dim();
        &self.0.as_slice()[j * d..(j + 1) * d]
    }

    pub fn columns(&self) -> impl Iterator<Item = &[f64]> + '_ {
        self.0.as_slice().chunks_exact(self.dim())
    }

    pub fn as_matrix(&self) -> &DMatrix<f64> {
        &self.0
    }

    pub fn into_matrix(self) -> DMatrix<f64> {
        self.0
    }

    /// Column-major values.
    pub fn as_slice(&self) -> &[f64] {
        self.0.as_slice()
    }
}

/// Eigen-decomposition of a symmetric matrix, eigenvalues descending.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralDecomp {
    pub eigenvalues: Vec<f64>,
    /// Orthonormal eigenvectors, one per column, in eigenvalue order.
    pub basis: DMatrix<f64>,
}

impl SpectralDecomp {
    /// `basis * diag(eigenvalues) * basis^T`.
    pub fn reconstruct(&self) -> DMatrix<f64> {
        let scaled = DMatrix::from_fn(self.basis.nrows(), self.basis.ncols(), |i, j| {
            self.basis[(i, j)] * self.eigenvalues[j]
        });
        &scaled * self.basis.transpose()
    }
}

/// Full singular value decomposition `X = left * diag(singulars) * right^T`.
#[derive(Debug, Clone, PartialEq)]
pub struct SvdFactors {
    /// Orthonormal `d x d`.
    pub left: DMatrix<f64>,
    /// `min(d, n_s)` values, descending and nonnegative.
    pub singulars: Vec<f64>,
    /// Orthonormal `n_s x n_s`.
    pub right: DMatrix<f64>,
}

impl SvdFactors {
    pub fn reconstruct(&self) -> DMatrix<f64> {
        let (d, n) = (self.left.nrows(), self.right.nrows());
        let mut out = DMatrix::zeros(d, n);
        for (r, &s) in self.singulars.iter().enumerate() {
            out += (self.left.column(r) * s) * self.right.column(r).transpose();
        }
        out
    }
}

pub(crate) fn ensure_finite(m: &DMatrix<f64>) -> Result<()> {
    match m.iter().position(|v| !v.is_finite()) {
        Some(idx) => Err(Error::NonFinite {
            row: idx % m.nrows(),
            col: idx / m.nrows(),
        }),
        None => Ok(()),
    }
}

pub(crate) fn ensure_finite_slice(v: &[f64]) -> Result<()> {
    match v.iter().position(|x| !x.is_finite()) {
        Some(idx) => Err(Error::NonFinite { row: idx, col: 0 }),
        None => Ok(()),
    }
}

fn max_abs(m: &DMatrix<f64>) -> f64 {
    m.iter().fold(0.0_f64, |acc, v| acc.max(v.abs()))
}

/// Checks shape, finiteness and symmetry of `m` within [`SYMMETRY_TOL`]
/// relative to its largest entry.
pub fn check_symmetric(m: &DMatrix<f64>) -> Result<()> {
    if m.nrows() != m.ncols() {
        return Err(Error::NotSquare {
            rows: m.nrows(),
            cols: m.ncols(),
        });
    }
    if m.nrows() == 0 {
        return Err(Error::EmptyMatrix { rows: 0, cols: 0 });
    }
    ensure_finite(m)?;
    let tol = SYMMETRY_TOL * max_abs(m);
    let n = m.nrows();
    for j in 0..n {
        for i in (j + 1)..n {
            let deviation = (m[(i, j)] - m[(j, i)]).abs();
            if deviation > tol {
                return Err(Error::NonSymmetric {
                    row: i,
                    col: j,
                    deviation,
                });
            }
        }
    }
    Ok(())
}

/// Flips each column so that its first component with magnitude above the
/// sign threshold is positive.
fn fix_signs(basis: &mut DMatrix<f64>) {
    for mut col in basis.column_iter_mut() {
        if let Some(first) = col.iter().copied().find(|v| v.abs() > SIGN_THRESHOLD) {
            if first < 0.0 {
                col.neg_mut();
            }
        }
    }
}

/// Symmetric eigen-decomposition by cyclic Jacobi rotations.
///
/// The result has descending eigenvalues, eigenvalues with magnitude below
/// `1e-12 * max|lambda|` set to zero, and each eigenvector's first
/// significant component positive.
pub fn eig_sym(m: &DMatrix<f64>) -> Result<SpectralDecomp> {
    check_symmetric(m)?;
    let n = m.nrows();

    // Row-major working copy of the symmetrized input.
    let mut a = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            a[i * n + j] = 0.5 * (m[(i, j)] + m[(j, i)]);
        }
    }
    let mut v = vec![0.0; n * n];
    for i in 0..n {
        v[i * n + i] = 1.0;
    }
    let mut d: Vec<f64> = (0..n).map(|i| a[i * n + i]).collect();
    let mut b = d.clone();
    let mut z = vec![0.0; n];

    for sweep in 1..=MAX_JACOBI_SWEEPS {
        let off: f64 = (0..n)
            .flat_map(|p| ((p + 1)..n).map(move |q| (p, q)))
            .map(|(p, q)| a[p * n + q].abs())
            .sum();
        if off == 0.0 {
            break;
        }
        let thresh = if sweep < 4 {
            0.2 * off / (n * n) as f64
        } else {
            0.0
        };
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[p * n + q];
                let g = 100.0 * apq.abs();
                if sweep > 4 && d[p].abs() + g == d[p].abs() && d[q].abs() + g == d[q].abs() {
                    a[p * n + q] = 0.0;
                    continue;
                }
                if apq.abs() <= thresh {
                    continue;
                }
                let h = d[q] - d[p];
                let t = if h.abs() + g == h.abs() {
                    apq / h
                } else {
                    let theta = 0.5 * h / apq;
                    let t = 1.0 / (theta.abs() + (1.0 + theta * theta).sqrt());
                    if theta < 0.0 {
                        -t
                    } else {
                        t
                    }
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;
                let tau = s / (1.0 + c);
                let h = t * apq;
                z[p] -= h;
                z[q] += h;
                d[p] -= h;
                d[q] += h;
                a[p * n + q] = 0.0;

                // Only the upper triangle is referenced.
                let rotate = |a: &mut [f64], i: usize, j: usize, k: usize, l: usize| {
                    let g = a[i * n + j];
                    let h = a[k * n + l];
                    a[i * n + j] = g - s * (h + g * tau);
                    a[k * n + l] = h + s * (g - h * tau);
                };
                for r in 0..p {
                    rotate(&mut a, r, p, r, q);
                }
                for r in (p + 1)..q {
                    rotate(&mut a, p, r, r, q);
                }
                for r in (q + 1)..n {
                    rotate(&mut a, p, r, q, r);
                }
                for r in 0..n {
                    let g = v[r * n + p];
                    let h = v[r * n + q];
                    v[r * n + p] = g - s * (h + g * tau);
                    v[r * n + q] = h + s * (g - h * tau);
                }
            }
        }
        for i in 0..n {
            b[i] += z[i];
            d[i] = b[i];
            z[i] = 0.0;
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| d[j].total_cmp(&d[i]).then(i.cmp(&j)));
    let scale = d.iter().fold(0.0_f64, |acc, x| acc.max(x.abs()));
    let eigenvalues: Vec<f64> = order
        .iter()
        .map(|&i| {
            if d[i].abs() < ZERO_EIGENVALUE_RTOL * scale {
                0.0
            } else {
                d[i]
            }
        })
        .collect();
    let mut basis = DMatrix::from_fn(n, n, |r, c| v[r * n + order[c]]);
    fix_signs(&mut basis);
    Ok(SpectralDecomp { eigenvalues, basis })
}

/// Full SVD by one-sided (Hestenes) Jacobi orthogonalization of the columns
/// of `x`.
///
/// This does not go through [`eig_sym`], so the two can be checked against
/// each other.
pub fn svd(x: &DMatrix<f64>) -> Result<SvdFactors> {
    let (d, n) = (x.nrows(), x.ncols());
    if d == 0 || n == 0 {
        return Err(Error::EmptyMatrix { rows: d, cols: n });
    }
    ensure_finite(x)?;

    let mut w = x.clone();
    let mut v = DMatrix::<f64>::identity(n, n);
    let eps = f64::EPSILON;
    for _ in 0..MAX_JACOBI_SWEEPS {
        let mut rotated = false;
        for i in 0..n {
            for j in (i + 1)..n {
                let alpha = w.column(i).norm_squared();
                let beta = w.column(j).norm_squared();
                let gamma = w.column(i).dot(&w.column(j));
                if gamma == 0.0 || gamma.abs() <= eps * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                for r in 0..d {
                    let (wi, wj) = (w[(r, i)], w[(r, j)]);
                    w[(r, i)] = c * wi - s * wj;
                    w[(r, j)] = s * wi + c * wj;
                }
                for r in 0..n {
                    let (vi, vj) = (v[(r, i)], v[(r, j)]);
                    v[(r, i)] = c * vi - s * vj;
                    v[(r, j)] = s * vi + c * vj;
                }
            }
        }
        if !rotated {
            break;
        }
    }

    let norms: Vec<f64> = w.column_iter().map(|c| c.norm()).collect();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| norms[j].total_cmp(&norms[i]).then(i.cmp(&j)));

    let rank_cap = d.min(n);
    let singulars: Vec<f64> = order[..rank_cap].iter().map(|&i| norms[i]).collect();
    let right = DMatrix::from_fn(n, n, |r, c| v[(r, order[c])]);

    let cutoff = singulars[0] * eps * d.max(n) as f64;
    let mut left_cols: Vec<DVector<f64>> = Vec::with_capacity(d);
    for (&i, &sigma) in order[..rank_cap].iter().zip(&singulars) {
        if sigma > cutoff && sigma > 0.0 {
            left_cols.push(w.column(i) / sigma);
        }
    }
    complete_orthonormal(&mut left_cols, d);
    let left = DMatrix::from_columns(&left_cols);
    Ok(SvdFactors {
        left,
        singulars,
        right,
    })
}

/// Extends an orthonormal set to a full basis of `R^dim` by Gram-Schmidt
/// (applied twice) against the canonical vectors.
fn complete_orthonormal(cols: &mut Vec<DVector<f64>>, dim: usize) {
    for e in 0..dim {
        if cols.len() == dim {
            break;
        }
        let mut cand = DVector::from_fn(dim, |i, _| if i == e { 1.0 } else { 0.0 });
        for _ in 0..2 {
            for c in cols.iter() {
                let proj = c.dot(&cand);
                cand.axpy(-proj, c, 1.0);
            }
        }
        let norm = cand.norm();
        if norm > 1e-8 {
            cols.push(cand / norm);
        }
    }
}

/// `X * X^T` as a sum of per-sample outer products, symmetric by construction.
pub fn outer_accumulate(x: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    ensure_finite(x)?;
    let d = x.nrows();
    let mut c = DMatrix::zeros(d, d);
    for sample in x.column_iter() {
        for j in 0..d {
            let sj = sample[j];
            for i in 0..=j {
                c[(i, j)] += sample[i] * sj;
            }
        }
    }
    for j in 0..d {
        for i in (j + 1)..d {
            c[(i, j)] = c[(j, i)];
        }
    }
    Ok(c)
}

/// Frobenius norm of `a - b` divided by the Frobenius norm of `b`
/// (absolute when `b` is zero).
pub fn relative_frobenius(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    let diff = (a - b).norm();
    let base = b.norm();
    if base == 0.0 {
        diff
    } else {
        diff / base
    }
}

/// Largest absolute entry of `q^T q - I`.
pub fn orthonormality_defect(q: &DMatrix<f64>) -> f64 {
    let gram = q.transpose() * q;
    let mut worst = 0.0_f64;
    for j in 0..gram.ncols() {
        for i in 0..gram.nrows() {
            let target = if i == j { 1.0 } else { 0.0 };
            worst = worst.max((gram[(i, j)] - target).abs());
        }
    }
    worst
}

/// `|cos|` of the angle between two vectors; 0 if either is zero.
pub fn abs_cosine(a: &[f64], b: &[f64]) -> f64 {
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let na = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    if na == 0.0 || nb == 0.0 {
        0.0
    } else {
        (dot / (na * nb)).abs()
    }
}

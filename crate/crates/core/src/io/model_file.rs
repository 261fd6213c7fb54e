//! JSON model files.
//!
//! Schema (version 1):
//!
//! ```text
//! {
//!   "format_version": 1,
//!   "kind": "pca" | "kpca",
//!   "model": { ... }
//! }
//! ```
//!
//! A `kpca` model holds `kernel` (`{"family": "gaussian", "beta": ..}`,
//! `{"family": "linear"}` or `{"family": "polynomial", "degree": .., "offset": ..}`),
//! `centered`, `normalization` (`unit` | `feature`), `k`, `eigenvalues`,
//! `aggregates` (`col_means`, `total_mean`) and the matrices `training`,
//! `basis` and `z_train`. A `pca` model holds `mean`, `basis`, `eigenvalues`,
//! `k` and `total_variance`. Matrices are `{"rows", "cols", "data"}` with
//! `data` in column-major order. Reals are written as the shortest decimal
//! that reads back to the same `f64`, so a save/load cycle is bit-exact.

use std::fs;
use std::path::Path;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{Error, Result};
use crate::kernels::{CenteringAggregates, KernelSpec};
use crate::kpca::{KpcaModel, Normalization};
use crate::matcore::SampleMatrix;
use crate::pca::PcaModel;

pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq)]
pub enum ModelFile {
    Pca(PcaModel),
    Kpca(KpcaModel),
}

impl ModelFile {
    pub fn kind(&self) -> &'static str {
        match self {
            ModelFile::Pca(_) => "pca",
            ModelFile::Kpca(_) => "kpca",
        }
    }
}

#[derive(Serialize, Deserialize)]
struct MatrixRecord {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl MatrixRecord {
    fn from_matrix(m: &DMatrix<f64>) -> Self {
        MatrixRecord {
            rows: m.nrows(),
            cols: m.ncols(),
            data: m.as_slice().to_vec(),
        }
    }

    fn into_matrix(self, field: &str) -> Result<DMatrix<f64>> {
        if self.rows.checked_mul(self.cols) != Some(self.data.len()) {
            return Err(corrupt(
                field,
                format!(
                    "{}x{} matrix with {} entries",
                    self.rows,
                    self.cols,
                    self.data.len()
                ),
            ));
        }
        Ok(DMatrix::from_vec(self.rows, self.cols, self.data))
    }
}

#[derive(Serialize, Deserialize)]
struct KpcaRecord {
    kernel: KernelSpec,
    centered: bool,
    normalization: Normalization,
    k: usize,
    eigenvalues: Vec<f64>,
    aggregates: CenteringAggregates,
    training: MatrixRecord,
    basis: MatrixRecord,
    z_train: MatrixRecord,
}

#[derive(Serialize, Deserialize)]
struct PcaRecord {
    mean: Vec<f64>,
    basis: MatrixRecord,
    eigenvalues: Vec<f64>,
    k: usize,
    total_variance: f64,
}

fn corrupt(field: &str, reason: impl Into<String>) -> Error {
    Error::CorruptField {
        field: field.to_string(),
        reason: reason.into(),
    }
}

pub fn to_json(model: &ModelFile) -> String {
    let body = match model {
        ModelFile::Kpca(m) => serde_json::to_value(KpcaRecord {
            kernel: m.kernel,
            centered: m.centered,
            normalization: m.normalization,
            k: m.k,
            eigenvalues: m.eigenvalues.clone(),
            aggregates: m.aggregates.clone(),
            training: MatrixRecord::from_matrix(m.training.as_matrix()),
            basis: MatrixRecord::from_matrix(&m.basis),
            z_train: MatrixRecord::from_matrix(&m.z_train),
        }),
        ModelFile::Pca(m) => serde_json::to_value(PcaRecord {
            mean: m.mean.as_slice().to_vec(),
            basis: MatrixRecord::from_matrix(&m.basis),
            eigenvalues: m.eigenvalues.clone(),
            k: m.k,
            total_variance: m.total_variance,
        }),
    }
    .expect("model records always serialize");
    let doc = serde_json::json!({
        "format_version": FORMAT_VERSION,
        "kind": model.kind(),
        "model": body,
    });
    serde_json::to_string_pretty(&doc).expect("json value always serializes")
}

pub fn from_json(text: &str) -> Result<ModelFile> {
    let doc: Value = serde_json::from_str(text).map_err(|e| corrupt("<document>", e.to_string()))?;
    let version = doc
        .get("format_version")
        .ok_or_else(|| corrupt("format_version", "missing"))?;
    if version.as_u64() != Some(u64::from(FORMAT_VERSION)) {
        return Err(Error::SchemaVersionMismatch {
            found: version.to_string(),
            expected: FORMAT_VERSION,
        });
    }
    let body = doc
        .get("model")
        .cloned()
        .ok_or_else(|| corrupt("model", "missing"))?;
    match doc.get("kind").and_then(Value::as_str) {
        Some("kpca") => {
            let r: KpcaRecord =
                serde_json::from_value(body).map_err(|e| corrupt("model", e.to_string()))?;
            let training = SampleMatrix::from_matrix(r.training.into_matrix("training")?)
                .map_err(|e| corrupt("training", e.to_string()))?;
            let basis = r.basis.into_matrix("basis")?;
            let z_train = r.z_train.into_matrix("z_train")?;
            if basis.ncols() != r.k {
                return Err(corrupt("k", format!("{} but basis has {} columns", r.k, basis.ncols())));
            }
            let model = KpcaModel::from_parts(
                training,
                r.kernel,
                r.centered,
                r.normalization,
                basis,
                r.eigenvalues,
                r.aggregates,
                z_train,
            )
            .map_err(|e| corrupt("model", e.to_string()))?;
            Ok(ModelFile::Kpca(model))
        }
        Some("pca") => {
            let r: PcaRecord =
                serde_json::from_value(body).map_err(|e| corrupt("model", e.to_string()))?;
            let basis = r.basis.into_matrix("basis")?;
            if basis.nrows() != r.mean.len() {
                return Err(corrupt("mean", "length differs from basis rows"));
            }
            if basis.ncols() != r.k || r.k == 0 || r.k > r.eigenvalues.len() {
                return Err(corrupt("k", format!("{} inconsistent with basis and eigenvalues", r.k)));
            }
            Ok(ModelFile::Pca(PcaModel {
                mean: DVector::from_vec(r.mean),
                basis,
                eigenvalues: r.eigenvalues,
                k: r.k,
                total_variance: r.total_variance,
            }))
        }
        Some(other) => Err(corrupt("kind", format!("unknown kind {other:?}"))),
        None => Err(corrupt("kind", "missing")),
    }
}

pub fn save_model(path: impl AsRef<Path>, model: &ModelFile) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, to_json(model)).map_err(|e| Error::io(path, e))
}

pub fn load_model(path: impl AsRef<Path>) -> Result<ModelFile> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    from_json(&text)
}

//! Principal component analysis, kernel PCA, and reconstruction of input-space
//! pre-images from reduced coordinates.
//!
//! Samples are stored one per column (`d x n_s`). See the crate README for the
//! on-disk formats.

pub mod datasets;
pub mod error;
pub mod io;
pub mod kernels;
pub mod kpca;
pub mod matcore;
pub mod optimize;
pub mod pca;
pub mod preimage;

pub use error::{Error, ErrorClass, Result};
pub use kernels::KernelSpec;
pub use kpca::{kpca_fit, kpca_transform, KpcaModel, KpcaOptions, Normalization};
pub use matcore::SampleMatrix;
pub use pca::{PcaModel, PcaOptions};
pub use preimage::{solve_preimage, Objective, PreimageOptions, PreimageResult, WeightScheme};

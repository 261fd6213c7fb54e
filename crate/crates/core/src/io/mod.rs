//! File formats: CSV tables, PGM image sequences and model files.

pub mod csv;
pub mod model_file;
pub mod pgm;

pub use self::csv::{load_csv, load_rows, save_csv, save_matrix_rows, save_rows};
pub use model_file::{load_model, save_model, ModelFile, FORMAT_VERSION};
pub use pgm::{load_pgm, load_pgm_sequence, PgmImage};

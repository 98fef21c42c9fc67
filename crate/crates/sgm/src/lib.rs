//! File formats and helpers around [`sgm_core`]: IDX digit images, numeric
//! CSV matrices, the `SGM1` model container, result tables and run
//! configuration files. The `sgm` binary is built on top of these.

pub mod config;
pub mod error;
pub mod idx;
pub mod matrix_csv;
pub mod model_file;
pub mod results;

pub use error::{Error, Result};

use sgm_core::{Matrix, ModalityData};

/// CSV rows are samples; the core stores samples as columns.
pub fn rows_to_modality(m: &Matrix) -> sgm_core::Result<ModalityData> {
    ModalityData::new(m.transpose())
}

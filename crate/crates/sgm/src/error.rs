use std::path::{Path, PathBuf};

use crate::idx::IdxError;
use crate::matrix_csv::CsvError;
use crate::model_file::ModelFileError;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{}: {source}", path.display())]
    Idx { path: PathBuf, source: IdxError },
    #[error("{}: {source}", path.display())]
    Csv { path: PathBuf, source: CsvError },
    #[error("{}: {source}", path.display())]
    Model { path: PathBuf, source: ModelFileError },
    #[error("{}: line {line}: {message}", path.display())]
    Config { path: PathBuf, line: usize, message: String },
    #[error(transparent)]
    Core(#[from] sgm_core::Error),
    #[error("{0}")]
    Invalid(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn io(path: &Path, source: std::io::Error) -> Self {
        Error::Io { path: path.to_path_buf(), source }
    }

    pub fn idx(path: &Path, source: IdxError) -> Self {
        Error::Idx { path: path.to_path_buf(), source }
    }

    pub fn csv(path: &Path, source: CsvError) -> Self {
        Error::Csv { path: path.to_path_buf(), source }
    }

    pub fn model(path: &Path, source: ModelFileError) -> Self {
        Error::Model { path: path.to_path_buf(), source }
    }
}

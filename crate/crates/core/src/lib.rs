//! Star-graph multimodal matching component analysis (SGM).
//!
//! SGM learns one affine map per data modality into a shared `k`-dimensional
//! domain. Modality 0 is the *central* modality; every other modality is tied
//! to it through a weighted matching objective, and each mapped modality is
//! constrained to exhibit a prescribed covariance (or its best low-rank
//! approximation when the data cannot support the full rank).
//!
//! The crate is `no_std` and only needs `alloc`. File formats, the IDX reader
//! and the command-line tool live in the companion `sgm` crate.
//!
//! Layout:
//!
//! * [`linalg`]: dense matrices, thin/full SVD with a deterministic sign
//!   convention, best rank-`l` approximation.
//! * [`stats`]: sample means and scaled, centered data matrices.
//! * [`procrustes`]: the closed-form feasible point of the weighted
//!   semi-orthogonal trace maximization and its sign-flip refinement.
//! * [`sgm`]: training, map assembly, trace ratio, model application.
//! * [`tiles`]: digit images and the three-tile modality construction.
//! * [`knn`] and [`experiment`]: the transfer-learning evaluation harness.

#![cfg_attr(not(test), no_std)]

extern crate alloc;

pub mod error;
pub mod experiment;
pub mod knn;
pub mod linalg;
pub mod procrustes;
pub mod sgm;
pub mod stats;
pub mod tiles;

pub use error::{Error, Result};
pub use experiment::{run_experiment, sweep, ExperimentResult, ExperimentSpec, Method};
pub use knn::KnnModel;
pub use linalg::{FullSvd, Matrix, ThinSvd};
pub use procrustes::{FeasibleTuple, ProcrustesInstance, Refinement};
pub use sgm::{LinearMap, PrescribedCovariance, SgmConfig, SgmModel};
pub use stats::{CenteredStats, ModalityData};
pub use tiles::{ImageSet, TiledModalities};

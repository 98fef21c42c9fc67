//! Transfer-learning evaluation on tiled digit images.
//!
//! A kNN classifier is trained on central-modality points mapped into the
//! common domain and tested on the images of the non-central modalities.
//! The images are split once per seed: after a seeded shuffle the first
//! `n_knn_train` indices are the kNN training set (its first `n` also train
//! the maps) and the next `n_knn_test` indices are the test set.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{dim_err, Error, Result};
use crate::knn::{KnnModel, DEFAULT_NEIGHBORS};
use crate::linalg::Matrix;
use crate::sgm::{train, PrescribedCovariance, SgmConfig, SgmModel};
use crate::stats::ModalityData;
use crate::tiles::TiledModalities;

pub const DEFAULT_WEIGHTS: [f64; 2] = [0.2, 0.8];

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Method {
    /// Raw modality-0 points against raw modality-1 points.
    Alone01,
    Alone02,
    /// Two-modality matching of 0 and 1.
    Mca01,
    Mca02,
    /// Modalities 1 and 2 concatenated into one.
    Stacked,
    Sgm,
}

impl Method {
    pub const ALL: [Method; 6] = [
        Method::Alone01,
        Method::Alone02,
        Method::Mca01,
        Method::Mca02,
        Method::Stacked,
        Method::Sgm,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Method::Alone01 => "alone01",
            Method::Alone02 => "alone02",
            Method::Mca01 => "mca01",
            Method::Mca02 => "mca02",
            Method::Stacked => "stacked",
            Method::Sgm => "sgm",
        }
    }

    pub fn is_alone(self) -> bool {
        matches!(self, Method::Alone01 | Method::Alone02)
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| {
                let names: Vec<&str> = Method::ALL.iter().map(|m| m.name()).collect();
                Error::InvalidArgument(format!(
                    "unknown method '{s}' (expected one of {})",
                    names.join(", ")
                ))
            })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentSpec {
    pub method: Method,
    /// Matched points used to train the maps.
    pub n: usize,
    /// Common-domain dimension; unused by the alone methods.
    pub k: usize,
    pub n_knn_train: usize,
    pub n_knn_test: usize,
    /// SGM weights for modalities 1 and 2.
    pub weights: Vec<f64>,
    pub neighbors: usize,
    pub seed: u64,
}

impl Default for ExperimentSpec {
    fn default() -> Self {
        Self {
            method: Method::Sgm,
            n: 20,
            k: 10,
            n_knn_train: 1000,
            n_knn_test: 500,
            weights: DEFAULT_WEIGHTS.to_vec(),
            neighbors: DEFAULT_NEIGHBORS,
            seed: 0,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentResult {
    pub method: Method,
    pub k: usize,
    pub n: usize,
    pub seed: u64,
    pub accuracy: f64,
    /// Only for [`Method::Sgm`].
    pub trace_ratio: Option<f64>,
}

/// Disjoint kNN training and test index sets.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Split {
    train: Vec<usize>,
    test: Vec<usize>,
}

impl Split {
    pub fn new(train: Vec<usize>, test: Vec<usize>) -> Result<Self> {
        let size = train.iter().chain(&test).max().map_or(0, |m| m + 1);
        let mut in_train = vec![false; size];
        for &j in &train {
            in_train[j] = true;
        }
        if let Some(&j) = test.iter().find(|&&j| in_train[j]) {
            return Err(Error::IndexOverlap(j));
        }
        Ok(Self { train, test })
    }

    /// Seeded shuffle of `0..count`, then the leading index ranges.
    pub fn seeded(count: usize, n_train: usize, n_test: usize, seed: u64) -> Result<Self> {
        if n_train + n_test > count {
            return Err(Error::InsufficientData {
                needed: n_train + n_test,
                available: count,
            });
        }
        let mut perm: Vec<usize> = (0..count).collect();
        perm.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
        let test = perm[n_train..n_train + n_test].to_vec();
        perm.truncate(n_train);
        Self::new(perm, test)
    }

    pub fn train(&self) -> &[usize] {
        &self.train
    }

    pub fn test(&self) -> &[usize] {
        &self.test
    }
}

/// `sum_i lambda_i g_i(x_i)` per test point; `tests[i - 1]` holds the test
/// samples (columns) of modality `i`.
pub fn centroid_testset(model: &SgmModel, tests: &[Matrix]) -> Result<Matrix> {
    if tests.len() != model.m() {
        return Err(Error::InvalidArgument(format!(
            "{} test sets for {} non-central modalities",
            tests.len(),
            model.m()
        )));
    }
    let count = tests[0].cols();
    let mut out = Matrix::zeros(model.k, count);
    for (i, x) in tests.iter().enumerate() {
        if x.cols() != count {
            return Err(dim_err(
                "centroid_testset",
                format!("test set {} has {} points, expected {count}", i + 1, x.cols()),
            ));
        }
        let mapped = model.maps[i + 1].apply_columns(x)?;
        out = &out + &mapped.scale(model.weights[i]);
    }
    Ok(out)
}

fn validate(spec: &ExperimentSpec, tiles: &TiledModalities) -> Result<()> {
    if spec.n_knn_test == 0 {
        return Err(Error::EmptyTestSet);
    }
    let needed = spec.n_knn_train + spec.n_knn_test;
    if tiles.count() < needed {
        return Err(Error::InsufficientData {
            needed,
            available: tiles.count(),
        });
    }
    if spec.n > spec.n_knn_train {
        return Err(Error::InvalidArgument(format!(
            "n = {} exceeds n_knn_train = {}",
            spec.n, spec.n_knn_train
        )));
    }
    if !spec.method.is_alone() && spec.n < 2 {
        return Err(Error::InvalidArgument("n must be at least 2".into()));
    }
    Ok(())
}

/// Trains the maps for `spec.method` on the matched points (columns) of the
/// central modality and of the non-central modalities.
fn train_maps(spec: &ExperimentSpec, central: &Matrix, others: &[Matrix]) -> Result<SgmModel> {
    let datasets = core::iter::once(central)
        .chain(others)
        .map(|x| ModalityData::new(x.clone()))
        .collect::<Result<Vec<_>>>()?;
    let covariances = vec![PrescribedCovariance::identity(spec.k); datasets.len()];
    let weights = if others.len() == 1 {
        vec![1.0]
    } else {
        spec.weights.clone()
    };
    train(&datasets, &covariances, &SgmConfig::new(spec.k, weights))
}

pub fn run_experiment(spec: &ExperimentSpec, tiles: &TiledModalities) -> Result<ExperimentResult> {
    validate(spec, tiles)?;
    let split = Split::seeded(tiles.count(), spec.n_knn_train, spec.n_knn_test, spec.seed)?;
    run_on_split(spec, tiles, &split)
}

/// [`run_experiment`] on an explicit split.
pub fn run_on_split(
    spec: &ExperimentSpec,
    tiles: &TiledModalities,
    split: &Split,
) -> Result<ExperimentResult> {
    let train_idx = split.train();
    let test_idx = split.test();
    if test_idx.is_empty() {
        return Err(Error::EmptyTestSet);
    }
    let matched = &train_idx[..spec.n.min(train_idx.len())];
    let x = |i: usize, idx: &[usize]| tiles.modality(i).select_columns(idx);
    let train_labels: Vec<u8> = train_idx.iter().map(|&j| tiles.labels()[j]).collect();
    let test_labels: Vec<u8> = test_idx.iter().map(|&j| tiles.labels()[j]).collect();

    let (knn_points, queries, trace_ratio) = match spec.method {
        Method::Alone01 | Method::Alone02 => {
            let i = if spec.method == Method::Alone01 { 1 } else { 2 };
            (x(0, train_idx), x(i, test_idx), None)
        }
        method => {
            let (others, tests): (Vec<Matrix>, Vec<Matrix>) = match method {
                Method::Mca01 => (vec![x(1, matched)], vec![x(1, test_idx)]),
                Method::Mca02 => (vec![x(2, matched)], vec![x(2, test_idx)]),
                Method::Stacked => (
                    vec![x(1, matched).vstack(&x(2, matched))?],
                    vec![x(1, test_idx).vstack(&x(2, test_idx))?],
                ),
                _ => (
                    vec![x(1, matched), x(2, matched)],
                    vec![x(1, test_idx), x(2, test_idx)],
                ),
            };
            let model = train_maps(spec, &x(0, matched), &others)?;
            let points = model.maps[0].apply_columns(&x(0, train_idx))?;
            let queries = centroid_testset(&model, &tests)?;
            let t = (method == Method::Sgm).then_some(model.trace_ratio);
            (points, queries, t)
        }
    };

    let knn = KnnModel::train(&knn_points, &train_labels, spec.neighbors)?;
    let accuracy = knn.accuracy(&queries, &test_labels)?;
    Ok(ExperimentResult {
        method: spec.method,
        k: spec.k,
        n: spec.n,
        seed: spec.seed,
        accuracy,
        trace_ratio,
    })
}

/// One result per `(method, k)`, sorted by method then `k`.
pub fn sweep(
    base: &ExperimentSpec,
    ks: &[usize],
    methods: &[Method],
    tiles: &TiledModalities,
) -> Result<Vec<ExperimentResult>> {
    let mut cells: Vec<(Method, usize)> = methods
        .iter()
        .flat_map(|&m| ks.iter().map(move |&k| (m, k)))
        .collect();
    cells.sort_unstable();
    cells.dedup();
    validate(base, tiles)?;
    let split = Split::seeded(tiles.count(), base.n_knn_train, base.n_knn_test, base.seed)?;
    cells
        .into_iter()
        .map(|(method, k)| {
            let spec = ExperimentSpec {
                method,
                k,
                ..base.clone()
            };
            run_on_split(&spec, tiles, &split)
        })
        .collect()
}

/// Method names joined by commas, for messages.
pub fn method_list(methods: &[Method]) -> String {
    let names: Vec<&str> = methods.iter().map(|m| m.name()).collect();
    names.join(",")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn method_names_round_trip() {
        for m in Method::ALL {
            assert_eq!(m.name().parse::<Method>().unwrap(), m);
        }
        let err = "cca".parse::<Method>().unwrap_err();
        assert!(format!("{err}").contains("alone01"));
    }

    #[test]
    fn split_is_disjoint_and_seeded() {
        let a = Split::seeded(50, 30, 20, 4).unwrap();
        let b = Split::seeded(50, 30, 20, 4).unwrap();
        assert_eq!(a, b);
        let mut all: Vec<usize> = a.train().iter().chain(a.test()).copied().collect();
        all.sort_unstable();
        assert_eq!(all, (0..50).collect::<Vec<_>>());
        assert_eq!(Split::new(vec![0, 1], vec![1, 2]), Err(Error::IndexOverlap(1)));
        assert!(matches!(
            Split::seeded(10, 8, 3, 0),
            Err(Error::InsufficientData { needed: 11, available: 10 })
        ));
    }
}

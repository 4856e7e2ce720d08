//! Two-dimensional projection of the patient feature matrix.
//!
//! The nonlinear route follows the usual neighbor-graph recipe: an exact
//! k-nearest-neighbor graph, per-point fuzzy membership weights, and a
//! stochastic-gradient layout that matches low-dimensional similarities
//! to the graph. PCA is exposed alongside as a deterministic alternative.

mod curve;
mod fuzzy;
mod knn;
mod optimize;
mod pca;
mod spectral;

use ndarray::Array2;

use crate::error::{Error, Result};
use crate::scalar::Scalar;

pub use curve::fit_curve_params;
pub use fuzzy::{fuzzify, SparseGraph};
pub use knn::build_knn_graph;
pub use optimize::optimize_embedding;
pub use pca::pca_project;

/// N patients by D standardized features.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix<T> {
    pub values: Array2<T>,
    pub patient_ids: Vec<String>,
    pub feature_names: Vec<String>,
}

impl<T: Scalar> FeatureMatrix<T> {
    pub fn new(values: Array2<T>, patient_ids: Vec<String>, feature_names: Vec<String>) -> Result<Self> {
        let (n, d) = values.dim();
        if n < 2 {
            return Err(Error::TooFewPatients { needed: 2, found: n });
        }
        if d == 0 {
            return Err(Error::NoUsableFeatures);
        }
        if patient_ids.len() != n {
            return Err(Error::LengthMismatch {
                left: patient_ids.len(),
                right: n,
            });
        }
        if feature_names.len() != d {
            return Err(Error::LengthMismatch {
                left: feature_names.len(),
                right: d,
            });
        }
        if let Some(((i, j), _)) = values.indexed_iter().find(|(_, v)| !v.is_finite()) {
            return Err(Error::NonFinite(format!("feature matrix entry ({i}, {j})")));
        }
        Ok(Self {
            values,
            patient_ids,
            feature_names,
        })
    }

    /// Matrix with generated feature names, mostly for tests and synthetic data.
    pub fn from_values(values: Array2<T>, patient_ids: Vec<String>) -> Result<Self> {
        let names = (0..values.ncols()).map(|j| format!("f{j}")).collect();
        Self::new(values, patient_ids, names)
    }

    pub fn n_patients(&self) -> usize {
        self.values.nrows()
    }

    pub fn n_features(&self) -> usize {
        self.values.ncols()
    }

    fn permuted(&self, order: &[usize]) -> Self {
        Self {
            values: self.values.select(ndarray::Axis(0), order),
            patient_ids: order.iter().map(|&i| self.patient_ids[i].clone()).collect(),
            feature_names: self.feature_names.clone(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EmbedParams {
    pub n_neighbors: usize,
    pub min_dist: f64,
    pub n_epochs: usize,
    pub negative_sample_rate: usize,
    pub learning_rate: f64,
    pub seed: u64,
}

impl Default for EmbedParams {
    fn default() -> Self {
        Self {
            n_neighbors: 15,
            min_dist: 0.1,
            n_epochs: 200,
            negative_sample_rate: 5,
            learning_rate: 1.0,
            seed: 42,
        }
    }
}

impl EmbedParams {
    pub fn validate(&self, n_points: usize) -> Result<()> {
        if self.n_neighbors < 2 || self.n_neighbors >= n_points {
            return Err(Error::InvalidParameter(format!(
                "n_neighbors = {} must satisfy 2 <= k < N = {n_points}",
                self.n_neighbors
            )));
        }
        if !(self.min_dist > 0.0) {
            return Err(Error::InvalidParameter("min_dist must be positive".into()));
        }
        if self.n_epochs == 0 {
            return Err(Error::InvalidParameter("n_epochs must be >= 1".into()));
        }
        if !(self.learning_rate > 0.0) {
            return Err(Error::InvalidParameter("learning_rate must be positive".into()));
        }
        Ok(())
    }
}

/// k nearest neighbors of every point, optionally with fuzzy weights.
#[derive(Debug, Clone, PartialEq)]
pub struct NeighborGraph<T> {
    pub n_neighbors: usize,
    /// N x k, nearest first.
    pub neighbor_indices: Array2<usize>,
    /// N x k Euclidean distances matching `neighbor_indices`.
    pub neighbor_distances: Array2<T>,
    /// Symmetric membership weights; `None` until [`fuzzify`] runs.
    pub membership: Option<SparseGraph<T>>,
    pub rhos: Vec<T>,
    pub sigmas: Vec<T>,
    /// Points whose bandwidth search ended at the positive floor.
    pub sigma_floor_hits: Vec<usize>,
}

impl<T> NeighborGraph<T> {
    pub fn n_points(&self) -> usize {
        self.neighbor_indices.nrows()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EmbedMethod {
    Nonlinear,
    Pca,
}

impl std::fmt::Display for EmbedMethod {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::Nonlinear => "umap",
            Self::Pca => "pca",
        })
    }
}

/// How the nonlinear layout was seeded.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InitKind {
    /// Spectral layout of the neighbor graph; `components` connected
    /// components were laid out separately.
    Spectral { components: usize },
    /// Seeded uniform noise.
    Noise,
    /// Not applicable (PCA).
    None,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Embedding2D<T> {
    /// N x 2, rows aligned with `patient_ids`.
    pub coords: Array2<T>,
    pub patient_ids: Vec<String>,
    pub params: Option<EmbedParams>,
    pub method: EmbedMethod,
    pub init: InitKind,
    pub sigma_floor_hits: usize,
    /// Fitted low-dimensional similarity curve `(a, b)`.
    pub curve: Option<(f64, f64)>,
}

/// Full nonlinear embedding.
///
/// Rows are processed in patient-id order internally and mapped back, and
/// every per-point random stream is keyed by patient id, so the result does
/// not depend on the input row order.
pub fn umap_embed<T: Scalar>(matrix: &FeatureMatrix<T>, params: &EmbedParams) -> Result<Embedding2D<T>> {
    params.validate(matrix.n_patients())?;
    let n = matrix.n_patients();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| matrix.patient_ids[a].cmp(&matrix.patient_ids[b]).then(a.cmp(&b)));
    let canonical = matrix.permuted(&order);

    let graph = build_knn_graph(&canonical, params.n_neighbors)?;
    let graph = fuzzify(graph, params);
    let embedded = optimize_embedding(&graph, params, &canonical.patient_ids)?;

    let mut coords = Array2::<T>::zeros((n, 2));
    for (canon_row, &orig_row) in order.iter().enumerate() {
        coords.row_mut(orig_row).assign(&embedded.coords.row(canon_row));
    }
    Ok(Embedding2D {
        coords,
        patient_ids: matrix.patient_ids.clone(),
        ..embedded
    })
}

/// Nonlinear embedding with `n_neighbors` clamped to `N - 1` for small cohorts.
pub fn embed_auto<T: Scalar>(
    matrix: &FeatureMatrix<T>,
    method: EmbedMethod,
    params: &EmbedParams,
) -> Result<Embedding2D<T>> {
    match method {
        EmbedMethod::Pca => pca_project(matrix),
        EmbedMethod::Nonlinear => {
            let n = matrix.n_patients();
            if n < 3 {
                return Err(Error::TooFewPatients { needed: 3, found: n });
            }
            let mut p = *params;
            p.n_neighbors = p.n_neighbors.min(n - 1).max(2);
            umap_embed(matrix, &p)
        }
    }
}

use ndarray::Array2;

use super::{FeatureMatrix, NeighborGraph};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Exact k-nearest-neighbor graph by brute force. Ties in distance go to
/// the lower row index; a point is never its own neighbor.
pub fn build_knn_graph<T: Scalar>(matrix: &FeatureMatrix<T>, k: usize) -> Result<NeighborGraph<T>> {
    let n = matrix.n_patients();
    if k < 1 || k >= n {
        return Err(Error::InvalidParameter(format!(
            "neighbor count {k} must satisfy 1 <= k < N = {n}"
        )));
    }
    let x = &matrix.values;
    let mut indices = Array2::<usize>::zeros((n, k));
    let mut distances = Array2::<T>::zeros((n, k));
    let mut candidates: Vec<(T, usize)> = Vec::with_capacity(n - 1);
    for i in 0..n {
        candidates.clear();
        let xi = x.row(i);
        for j in (0..n).filter(|&j| j != i) {
            let d2 = xi
                .iter()
                .zip(x.row(j).iter())
                .map(|(a, b)| (*a - *b) * (*a - *b))
                .sum::<T>();
            candidates.push((d2, j));
        }
        let cmp = |a: &(T, usize), b: &(T, usize)| {
            a.0.partial_cmp(&b.0)
                .unwrap_or(std::cmp::Ordering::Equal)
                .then(a.1.cmp(&b.1))
        };
        if k < candidates.len() {
            candidates.select_nth_unstable_by(k - 1, cmp);
        }
        candidates[..k].sort_by(cmp);
        for (slot, &(d2, j)) in candidates[..k].iter().enumerate() {
            indices[[i, slot]] = j;
            distances[[i, slot]] = d2.sqrt();
        }
    }
    Ok(NeighborGraph {
        n_neighbors: k,
        neighbor_indices: indices,
        neighbor_distances: distances,
        membership: None,
        rhos: Vec::new(),
        sigmas: Vec::new(),
        sigma_floor_hits: Vec::new(),
    })
}

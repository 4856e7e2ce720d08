use std::collections::BTreeMap;

use super::{EmbedParams, NeighborGraph};
use crate::scalar::Scalar;

pub(crate) const SIGMA_FLOOR: f64 = 1e-12;
const SIGMA_TOLERANCE: f64 = 1e-5;
const SIGMA_MAX_ITERS: usize = 64;

/// Symmetric sparse weight matrix stored as sorted adjacency rows.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseGraph<T> {
    pub rows: Vec<Vec<(usize, T)>>,
}

impl<T: Scalar> SparseGraph<T> {
    pub fn n(&self) -> usize {
        self.rows.len()
    }

    pub fn weight(&self, i: usize, j: usize) -> T {
        self.rows[i]
            .binary_search_by_key(&j, |&(c, _)| c)
            .map_or(T::zero(), |pos| self.rows[i][pos].1)
    }

    pub fn edges(&self) -> impl Iterator<Item = (usize, usize, T)> + '_ {
        self.rows
            .iter()
            .enumerate()
            .flat_map(|(i, row)| row.iter().map(move |&(j, w)| (i, j, w)))
    }
}

fn directed_weight<T: Scalar>(d: T, rho: T, sigma: T) -> T {
    (-((d - rho).max(T::zero()) / sigma)).exp()
}

/// Bandwidth for one point: the sigma whose summed directed weights equal
/// `target`. Returns the sigma and whether it was clamped to the floor.
pub(crate) fn search_sigma<T: Scalar>(distances: &[T], rho: T, target: T) -> (T, bool) {
    let tol = T::c(SIGMA_TOLERANCE);
    let mut lo = T::zero();
    let mut hi = T::infinity();
    let mut mid = T::one();
    for _ in 0..SIGMA_MAX_ITERS {
        let psum = distances
            .iter()
            .map(|&d| directed_weight(d, rho, mid))
            .sum::<T>();
        if (psum - target).abs() < tol {
            break;
        }
        if psum > target {
            hi = mid;
            mid = (lo + hi) / T::c(2.0);
        } else {
            lo = mid;
            mid = if hi.is_infinite() { mid * T::c(2.0) } else { (lo + hi) / T::c(2.0) };
        }
    }
    let floor = T::c(SIGMA_FLOOR);
    if mid <= floor {
        (floor, true)
    } else {
        (mid, false)
    }
}

/// Turns raw neighbor distances into symmetric fuzzy membership weights:
/// per-point bandwidths calibrated to `log2(k)` total weight, then the
/// probabilistic union `A + Aᵀ - A∘Aᵀ`.
pub fn fuzzify<T: Scalar>(mut graph: NeighborGraph<T>, _params: &EmbedParams) -> NeighborGraph<T> {
    let n = graph.n_points();
    let k = graph.n_neighbors;
    let target = T::c((k as f64).log2());
    let mut rhos = Vec::with_capacity(n);
    let mut sigmas = Vec::with_capacity(n);
    let mut floor_hits = Vec::new();
    let mut directed: Vec<BTreeMap<usize, T>> = vec![BTreeMap::new(); n];

    for i in 0..n {
        let dists: Vec<T> = graph.neighbor_distances.row(i).to_vec();
        let rho = dists.iter().copied().fold(T::infinity(), T::min);
        let (sigma, hit) = search_sigma(&dists, rho, target);
        if hit {
            floor_hits.push(i);
        }
        for (slot, &d) in dists.iter().enumerate() {
            let j = graph.neighbor_indices[[i, slot]];
            directed[i].insert(j, directed_weight(d, rho, sigma));
        }
        rhos.push(rho);
        sigmas.push(sigma);
    }

    let mut sym: Vec<BTreeMap<usize, T>> = vec![BTreeMap::new(); n];
    for i in 0..n {
        for (&j, &a) in &directed[i] {
            let b = directed[j].get(&i).copied().unwrap_or(T::zero());
            let w = a + b - a * b;
            sym[i].insert(j, w);
            sym[j].insert(i, w);
        }
    }
    graph.membership = Some(SparseGraph {
        rows: sym.into_iter().map(|row| row.into_iter().collect()).collect(),
    });
    graph.rhos = rhos;
    graph.sigmas = sigmas;
    graph.sigma_floor_hits = floor_hits;
    graph
}

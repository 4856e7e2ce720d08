//! Batch-effect group detection by replicated k-means in the embedded space.

use ndarray::{Array2, ArrayView1};
use rand::Rng;

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::seed::{derive_seed, rng, Rng as SeedRng};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClusterParams {
    pub k: usize,
    pub n_replicates: usize,
    pub max_iters: usize,
    pub tol: f64,
    pub seed: u64,
}

impl ClusterParams {
    pub fn new(k: usize, seed: u64) -> Self {
        Self {
            k,
            n_replicates: 25,
            max_iters: 300,
            tol: 1e-4,
            seed,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClusterModel<T> {
    /// k x dims.
    pub centroids: Array2<T>,
    pub assignments: Vec<usize>,
    pub sse: T,
    /// SSE of every replicate, in replicate order.
    pub replicate_sses: Vec<T>,
    /// Empty clusters reseeded while fitting the returned model.
    pub empty_repairs: usize,
    pub iterations: usize,
}

impl<T: Scalar> ClusterModel<T> {
    pub fn k(&self) -> usize {
        self.centroids.nrows()
    }

    pub fn sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.k()];
        for &a in &self.assignments {
            sizes[a] += 1;
        }
        sizes
    }
}

/// `ceil(n / 3)`: three patients per group, so that each group can feed
/// one patient to each of three folds.
pub fn default_cluster_count(n_patients: usize) -> Result<usize> {
    if n_patients < 3 {
        return Err(Error::TooFewPatients {
            needed: 3,
            found: n_patients,
        });
    }
    Ok(n_patients.div_ceil(3))
}

fn sq_dist<T: Scalar>(a: ArrayView1<T>, b: ArrayView1<T>) -> T {
    a.iter().zip(b.iter()).map(|(x, y)| (*x - *y) * (*x - *y)).sum()
}

/// Index and squared distance of the nearest centroid; ties go to the lower index.
fn nearest<T: Scalar>(point: ArrayView1<T>, centroids: &Array2<T>) -> (usize, T) {
    let mut best = (0, T::infinity());
    for (c, row) in centroids.rows().into_iter().enumerate() {
        let d = sq_dist(point, row);
        if d < best.1 {
            best = (c, d);
        }
    }
    best
}

fn check_input<T: Scalar>(coords: &Array2<T>, k: usize) -> Result<()> {
    let n = coords.nrows();
    if k == 0 {
        return Err(Error::InvalidParameter("k must be >= 1".into()));
    }
    if k > n {
        return Err(Error::InvalidParameter(format!("k = {k} exceeds N = {n}")));
    }
    if coords.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("clustering input".into()));
    }
    Ok(())
}

fn kmeans_plus_plus<T: Scalar>(coords: &Array2<T>, k: usize, rng: &mut SeedRng) -> Array2<T> {
    let n = coords.nrows();
    let mut chosen = Vec::with_capacity(k);
    chosen.push(rng.random_range(0..n));
    let mut d2: Vec<T> = coords
        .rows()
        .into_iter()
        .map(|p| sq_dist(p, coords.row(chosen[0])))
        .collect();
    while chosen.len() < k {
        let total = d2.iter().copied().sum::<T>();
        let next = if total > T::zero() {
            let target = T::c(rng.random::<f64>()) * total;
            let mut acc = T::zero();
            let mut pick = None;
            for (i, &w) in d2.iter().enumerate() {
                acc += w;
                if w > T::zero() && acc >= target {
                    pick = Some(i);
                    break;
                }
            }
            pick.unwrap_or_else(|| d2.iter().rposition(|w| *w > T::zero()).expect("positive mass"))
        } else {
            // All remaining points coincide with a centroid.
            let free: Vec<usize> = (0..n).filter(|i| !chosen.contains(i)).collect();
            free[rng.random_range(0..free.len())]
        };
        chosen.push(next);
        for (i, p) in coords.rows().into_iter().enumerate() {
            let d = sq_dist(p, coords.row(next));
            if d < d2[i] {
                d2[i] = d;
            }
        }
    }
    coords.select(ndarray::Axis(0), &chosen)
}

fn assign<T: Scalar>(coords: &Array2<T>, centroids: &Array2<T>, assignments: &mut [usize]) -> T {
    let mut sse = T::zero();
    for (i, p) in coords.rows().into_iter().enumerate() {
        let (c, d) = nearest(p, centroids);
        assignments[i] = c;
        sse += d;
    }
    sse
}

/// Moves the point farthest from its centroid (taken from a cluster with
/// more than one member) into each empty cluster.
fn repair_empty<T: Scalar>(coords: &Array2<T>, centroids: &mut Array2<T>, assignments: &mut [usize]) -> usize {
    let k = centroids.nrows();
    let mut repairs = 0;
    loop {
        let mut sizes = vec![0usize; k];
        assignments.iter().for_each(|&a| sizes[a] += 1);
        let Some(empty) = sizes.iter().position(|&s| s == 0) else {
            return repairs;
        };
        let donor = (0..coords.nrows())
            .filter(|&i| sizes[assignments[i]] > 1)
            .map(|i| (i, sq_dist(coords.row(i), centroids.row(assignments[i]))))
            .fold(None, |best: Option<(usize, T)>, (i, d)| match best {
                Some((_, bd)) if bd >= d => best,
                _ => Some((i, d)),
            })
            .map(|(i, _)| i)
            .expect("k <= N leaves a cluster with a spare member");
        centroids.row_mut(empty).assign(&coords.row(donor));
        assignments[donor] = empty;
        repairs += 1;
    }
}

fn sse_of<T: Scalar>(coords: &Array2<T>, centroids: &Array2<T>, assignments: &[usize]) -> T {
    assignments
        .iter()
        .enumerate()
        .map(|(i, &c)| sq_dist(coords.row(i), centroids.row(c)))
        .sum()
}

fn update_centroids<T: Scalar>(coords: &Array2<T>, assignments: &[usize], k: usize) -> Array2<T> {
    let mut sums = Array2::<T>::zeros((k, coords.ncols()));
    let mut counts = vec![0usize; k];
    for (i, &c) in assignments.iter().enumerate() {
        let mut row = sums.row_mut(c);
        row += &coords.row(i);
        counts[c] += 1;
    }
    for (c, &count) in counts.iter().enumerate() {
        if count > 0 {
            let cnt = T::from_usize_lossy(count);
            sums.row_mut(c).mapv_inplace(|v| v / cnt);
        }
    }
    sums
}

/// One k-means run: k-means++ seeding, then Lloyd iterations until the
/// largest centroid move drops below `tol` or `max_iters` is reached.
///
/// The returned assignment is always the nearest-centroid assignment for
/// the returned centroids, apart from points moved into otherwise empty
/// clusters.
pub fn kmeans_once<T: Scalar>(
    coords: &Array2<T>,
    k: usize,
    seed: u64,
    max_iters: usize,
    tol: f64,
) -> Result<ClusterModel<T>> {
    check_input(coords, k)?;
    let n = coords.nrows();
    let mut rng = rng(seed);
    let mut centroids = kmeans_plus_plus(coords, k, &mut rng);
    let mut assignments = vec![0usize; n];
    let mut repairs = 0;
    let mut prev_sse = T::infinity();
    let mut iterations = 0;
    let tol = T::c(tol);

    loop {
        iterations += 1;
        assign(coords, &centroids, &mut assignments);
        repairs += repair_empty(coords, &mut centroids, &mut assignments);
        let sse = sse_of(coords, &centroids, &assignments);
        debug_assert!(
            sse <= prev_sse + prev_sse.abs() * T::c(1e-12),
            "SSE increased: {prev_sse} -> {sse}"
        );
        prev_sse = sse;
        if iterations >= max_iters.max(1) {
            break;
        }
        let updated = update_centroids(coords, &assignments, k);
        let shift = centroids
            .rows()
            .into_iter()
            .zip(updated.rows())
            .map(|(a, b)| sq_dist(a, b).sqrt())
            .fold(T::zero(), T::max);
        centroids = updated;
        if shift < tol {
            iterations += 1;
            assign(coords, &centroids, &mut assignments);
            repairs += repair_empty(coords, &mut centroids, &mut assignments);
            break;
        }
    }

    let sse = sse_of(coords, &centroids, &assignments);
    Ok(ClusterModel {
        centroids,
        assignments,
        sse,
        replicate_sses: vec![sse],
        empty_repairs: repairs,
        iterations,
    })
}

/// Best of `n_replicates` independent runs by SSE; ties keep the earlier replicate.
pub fn kmeans_replicated<T: Scalar>(coords: &Array2<T>, params: &ClusterParams) -> Result<ClusterModel<T>> {
    if params.n_replicates == 0 {
        return Err(Error::InvalidParameter("n_replicates must be >= 1".into()));
    }
    let mut best: Option<ClusterModel<T>> = None;
    let mut sses = Vec::with_capacity(params.n_replicates);
    for r in 0..params.n_replicates {
        let model = kmeans_once(
            coords,
            params.k,
            derive_seed(params.seed, r as u64),
            params.max_iters,
            params.tol,
        )?;
        sses.push(model.sse);
        if best.as_ref().is_none_or(|b| model.sse < b.sse) {
            best = Some(model);
        }
    }
    let mut best = best.expect("at least one replicate");
    best.replicate_sses = sses;
    Ok(best)
}

/// k-means with group sizes forced to `floor(N/k)` or `ceil(N/k)`.
///
/// Starts from the replicated unconstrained solution, then alternates a
/// greedy capacitated assignment (closest point–centroid pairs first) with
/// centroid updates until the assignment is stable. Larger capacities go to
/// the clusters that were larger before balancing, and groups are relabeled
/// by decreasing size.
pub fn balanced_kmeans<T: Scalar>(coords: &Array2<T>, params: &ClusterParams) -> Result<ClusterModel<T>> {
    let base = kmeans_replicated(coords, params)?;
    let n = coords.nrows();
    let k = params.k;

    let sizes = base.sizes();
    let mut by_size: Vec<usize> = (0..k).collect();
    by_size.sort_by(|&a, &b| sizes[b].cmp(&sizes[a]).then(a.cmp(&b)));
    let mut capacity = vec![n / k; k];
    for &c in by_size.iter().take(n % k) {
        capacity[c] += 1;
    }

    let mut centroids = base.centroids.clone();
    let mut assignments = base.assignments.clone();
    let mut iterations = 0;
    for _ in 0..params.max_iters.max(1) {
        iterations += 1;
        let mut pairs: Vec<(T, usize, usize)> = Vec::with_capacity(n * k);
        for (i, p) in coords.rows().into_iter().enumerate() {
            for (c, centroid) in centroids.rows().into_iter().enumerate() {
                pairs.push((sq_dist(p, centroid), i, c));
            }
        }
        pairs.sort_by(|x, y| {
            x.0.partial_cmp(&y.0)
                .unwrap_or(std::cmp::Ordering::Equal)
                .then(x.1.cmp(&y.1))
                .then(x.2.cmp(&y.2))
        });
        let mut left = capacity.clone();
        let mut next = vec![usize::MAX; n];
        for (_, i, c) in pairs {
            if next[i] == usize::MAX && left[c] > 0 {
                next[i] = c;
                left[c] -= 1;
            }
        }
        let stable = next == assignments;
        assignments = next;
        centroids = update_centroids(coords, &assignments, k);
        if stable {
            break;
        }
    }

    // Relabel: group 0 is the largest, ties by lowest member index.
    let mut first_member = vec![usize::MAX; k];
    for (i, &c) in assignments.iter().enumerate() {
        first_member[c] = first_member[c].min(i);
    }
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&a, &b| capacity[b].cmp(&capacity[a]).then(first_member[a].cmp(&first_member[b])));
    let mut relabel = vec![0; k];
    for (new, &old) in order.iter().enumerate() {
        relabel[old] = new;
    }
    let assignments: Vec<usize> = assignments.iter().map(|&c| relabel[c]).collect();
    let centroids = centroids.select(ndarray::Axis(0), &order);
    let sse = sse_of(coords, &centroids, &assignments);
    Ok(ClusterModel {
        centroids,
        assignments,
        sse,
        replicate_sses: base.replicate_sses,
        empty_repairs: base.empty_repairs,
        iterations,
    })
}

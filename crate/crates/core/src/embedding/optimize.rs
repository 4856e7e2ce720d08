use ndarray::Array2;
use rand::Rng;
use rand_distr::{Distribution, Normal};

use super::curve::fit_curve_params;
use super::spectral::spectral_layout;
use super::{EmbedMethod, EmbedParams, Embedding2D, InitKind, NeighborGraph};
use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::seed::{derive_seed_str, rng, Rng as SeedRng};

const GRAD_CLIP: f64 = 4.0;
const INIT_JITTER_SD: f64 = 1e-4;

fn clip<T: Scalar>(v: T) -> T {
    let c = T::c(GRAD_CLIP);
    v.max(-c).min(c)
}

/// Stochastic-gradient layout of the fuzzy graph in two dimensions.
///
/// Edges are sampled in proportion to their weight; each attractive update
/// is followed by `negative_sample_rate` repulsive updates against points
/// drawn from the head point's own random stream. The learning rate decays
/// linearly to zero.
pub fn optimize_embedding<T: Scalar>(
    graph: &NeighborGraph<T>,
    params: &EmbedParams,
    patient_ids: &[String],
) -> Result<Embedding2D<T>> {
    let n = graph.n_points();
    let weights = graph
        .membership
        .as_ref()
        .ok_or_else(|| Error::InvalidParameter("neighbor graph has no membership weights".into()))?;
    if patient_ids.len() != n {
        return Err(Error::LengthMismatch {
            left: patient_ids.len(),
            right: n,
        });
    }
    let mut rngs: Vec<SeedRng> = patient_ids
        .iter()
        .map(|id| rng(derive_seed_str(params.seed, id)))
        .collect();

    let (mut coords, init) = match spectral_layout(weights, &mut rngs) {
        Some((mut c, components)) => {
            let jitter = Normal::new(0.0, INIT_JITTER_SD).expect("valid normal");
            for (i, r) in rngs.iter_mut().enumerate() {
                c[[i, 0]] += T::c(jitter.sample(r));
                c[[i, 1]] += T::c(jitter.sample(r));
            }
            (c, InitKind::Spectral { components })
        }
        None => {
            let mut c = Array2::<T>::zeros((n, 2));
            for (i, r) in rngs.iter_mut().enumerate() {
                c[[i, 0]] = T::c(r.random_range(-10.0..10.0));
                c[[i, 1]] = T::c(r.random_range(-10.0..10.0));
            }
            (c, InitKind::Noise)
        }
    };

    let (a64, b64) = fit_curve_params(params.min_dist);
    let (a, b) = (T::c(a64), T::c(b64));
    let two = T::c(2.0);

    let max_w = weights.edges().map(|e| e.2).fold(T::zero(), T::max);
    let cutoff = max_w / T::from_usize_lossy(params.n_epochs);
    let edges: Vec<(usize, usize, T)> = weights.edges().filter(|e| e.2 >= cutoff && e.2 > T::zero()).collect();
    let epochs_per_sample: Vec<T> = edges.iter().map(|e| max_w / e.2).collect();
    let mut next_sample = epochs_per_sample.clone();
    let n_epochs = T::from_usize_lossy(params.n_epochs);
    let lr = T::c(params.learning_rate);

    for epoch in 0..params.n_epochs {
        let e = T::from_usize_lossy(epoch);
        let alpha = lr * (T::one() - e / n_epochs);
        for (idx, &(i, j, _)) in edges.iter().enumerate() {
            if next_sample[idx] > e + T::one() {
                continue;
            }
            let dx = coords[[i, 0]] - coords[[j, 0]];
            let dy = coords[[i, 1]] - coords[[j, 1]];
            let d2 = dx * dx + dy * dy;
            if d2 > T::zero() {
                let coeff = -two * a * b * d2.powf(b - T::one()) / (a * d2.powf(b) + T::one());
                let gx = clip(coeff * dx) * alpha;
                let gy = clip(coeff * dy) * alpha;
                coords[[i, 0]] += gx;
                coords[[i, 1]] += gy;
                coords[[j, 0]] -= gx;
                coords[[j, 1]] -= gy;
            }
            next_sample[idx] += epochs_per_sample[idx];

            for _ in 0..params.negative_sample_rate {
                let k = rngs[i].random_range(0..n);
                if k == i {
                    continue;
                }
                let dx = coords[[i, 0]] - coords[[k, 0]];
                let dy = coords[[i, 1]] - coords[[k, 1]];
                let d2 = dx * dx + dy * dy;
                let (gx, gy) = if d2 > T::zero() {
                    let coeff = two * b / ((T::c(0.001) + d2) * (a * d2.powf(b) + T::one()));
                    (clip(coeff * dx), clip(coeff * dy))
                } else {
                    (T::c(GRAD_CLIP), T::c(GRAD_CLIP))
                };
                coords[[i, 0]] += gx * alpha;
                coords[[i, 1]] += gy * alpha;
            }
        }
        if let Some(((row, col), v)) = coords.indexed_iter().find(|(_, v)| !v.is_finite()) {
            return Err(Error::NonFinite(format!(
                "embedding coordinate ({row}, {col}) = {v} at epoch {epoch}"
            )));
        }
    }

    Ok(Embedding2D {
        coords,
        patient_ids: patient_ids.to_vec(),
        params: Some(*params),
        method: EmbedMethod::Nonlinear,
        init,
        sigma_floor_hits: graph.sigma_floor_hits.len(),
        curve: Some((a64, b64)),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::embedding::{build_knn_graph, fuzzify, FeatureMatrix};

    #[test]
    fn requires_membership() {
        let m = FeatureMatrix::from_values(
            ndarray::array![[0.0f64], [1.0], [2.0], [3.0]],
            vec!["a".into(), "b".into(), "c".into(), "d".into()],
        )
        .unwrap();
        let g = build_knn_graph(&m, 2).unwrap();
        assert!(optimize_embedding(&g, &EmbedParams::default(), &m.patient_ids).is_err());
        let g = fuzzify(g, &EmbedParams::default());
        let e = optimize_embedding(&g, &EmbedParams { n_neighbors: 2, ..Default::default() }, &m.patient_ids).unwrap();
        assert!(e.coords.iter().all(|v| v.is_finite()));
    }

    #[test]
    fn duplicate_points_stay_finite() {
        let m = FeatureMatrix::from_values(
            ndarray::Array2::from_shape_fn((10, 2), |(i, j)| ((i / 5) * 3 + j) as f64),
            (0..10).map(|i| format!("p{i}")).collect(),
        )
        .unwrap();
        let p = EmbedParams { n_neighbors: 4, ..Default::default() };
        let e = super::super::umap_embed(&m, &p).unwrap();
        assert!(e.coords.iter().all(|v| v.is_finite()));
        assert!(e.sigma_floor_hits > 0);
    }
}

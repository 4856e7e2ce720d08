use ndarray::{Array2, Axis};

use super::{EmbedMethod, Embedding2D, FeatureMatrix, InitKind};
use crate::error::Result;
use crate::linalg::symmetric_eigen;
use crate::scalar::Scalar;

/// Projection onto the top two principal components. Each component is
/// oriented so that its largest-magnitude loading is positive.
pub fn pca_project<T: Scalar>(matrix: &FeatureMatrix<T>) -> Result<Embedding2D<T>> {
    let n = matrix.n_patients();
    let d = matrix.n_features();
    let mean = matrix
        .values
        .mean_axis(Axis(0))
        .expect("feature matrix has rows");
    let centered = &matrix.values - &mean.insert_axis(Axis(0));
    let denom = T::from_usize_lossy(n - 1);
    let cov = centered.t().dot(&centered).mapv(|v| v / denom);
    let (_, vectors) = symmetric_eigen(&cov);

    let mut loadings = Array2::<T>::zeros((d, 2));
    for c in 0..d.min(2) {
        let mut v = vectors.column(c).to_owned();
        let lead = v
            .iter()
            .copied()
            .enumerate()
            .fold((0, T::zero()), |best, (i, x)| if x.abs() > best.1.abs() { (i, x) } else { best });
        if lead.1 < T::zero() {
            v.mapv_inplace(|x| -x);
        }
        loadings.column_mut(c).assign(&v);
    }
    Ok(Embedding2D {
        coords: centered.dot(&loadings),
        patient_ids: matrix.patient_ids.clone(),
        params: None,
        method: EmbedMethod::Pca,
        init: InitKind::None,
        sigma_floor_hits: 0,
        curve: None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    fn matrix(values: Array2<f64>) -> FeatureMatrix<f64> {
        let ids = (0..values.nrows()).map(|i| format!("p{i}")).collect();
        FeatureMatrix::from_values(values, ids).unwrap()
    }

    fn dist(m: &Array2<f64>, i: usize, j: usize) -> f64 {
        (&m.row(i) - &m.row(j)).mapv(|v| v * v).sum().sqrt()
    }

    #[test]
    fn planar_data_keeps_pairwise_distances() {
        let x = array![[0.0, 0.0], [1.0, 2.0], [3.0, -1.0], [-2.0, 0.5], [4.0, 4.0]];
        let e = pca_project(&matrix(x.clone())).unwrap();
        for i in 0..5 {
            for j in 0..5 {
                assert!((dist(&x, i, j) - dist(&e.coords, i, j)).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn rank_one_data_has_flat_second_component() {
        let x = Array2::from_shape_fn((6, 3), |(i, j)| i as f64 * [1.0, -2.0, 0.5][j]);
        let e = pca_project(&matrix(x)).unwrap();
        assert!(e.coords.column(1).iter().all(|v| v.abs() < 1e-9));
        assert!(e.coords.column(0).iter().any(|v| v.abs() > 1.0));
    }

    #[test]
    fn sign_convention_and_determinism() {
        let x = array![[1.0, 0.1], [2.0, -0.1], [3.0, 0.05], [4.0, 0.0]];
        let a = pca_project(&matrix(x.clone())).unwrap();
        let b = pca_project(&matrix(-x)).unwrap();
        assert_eq!(a.coords, pca_project(&matrix(array![[1.0, 0.1], [2.0, -0.1], [3.0, 0.05], [4.0, 0.0]])).unwrap().coords);
        // Negating the data flips scores, not loadings.
        for (p, q) in a.coords.column(0).iter().zip(b.coords.column(0)) {
            assert!((p + q).abs() < 1e-12);
        }
    }

    #[test]
    fn single_feature_projects_to_a_line() {
        let e = pca_project(&matrix(array![[1.0], [2.0], [4.0]])).unwrap();
        assert_eq!(e.coords.ncols(), 2);
        assert!(e.coords.column(1).iter().all(|v| *v == 0.0));
    }
}

//! Spectral initialization from the fuzzy neighbor graph.
//!
//! Each connected component is laid out with the two leading non-trivial
//! eigenvectors of its normalized adjacency, found by orthogonal power
//! iteration. Components are then spread around a circle.

use ndarray::Array2;
use rand::Rng;

use super::SparseGraph;
use crate::scalar::Scalar;
use crate::seed::Rng as SeedRng;

const MAX_ITERS: usize = 2000;
const CONVERGENCE: f64 = 1e-10;

fn components<T: Scalar>(graph: &SparseGraph<T>) -> Vec<Vec<usize>> {
    let n = graph.n();
    let mut label = vec![usize::MAX; n];
    let mut out = Vec::new();
    for start in 0..n {
        if label[start] != usize::MAX {
            continue;
        }
        let id = out.len();
        let mut members = vec![start];
        label[start] = id;
        let mut head = 0;
        while head < members.len() {
            let i = members[head];
            head += 1;
            for &(j, w) in &graph.rows[i] {
                if w > T::zero() && label[j] == usize::MAX {
                    label[j] = id;
                    members.push(j);
                }
            }
        }
        members.sort_unstable();
        out.push(members);
    }
    out
}

fn normalize<T: Scalar>(v: &mut [T]) -> bool {
    let norm = v.iter().map(|x| *x * *x).sum::<T>().sqrt();
    if !(norm > T::zero()) || !norm.is_finite() {
        return false;
    }
    v.iter_mut().for_each(|x| *x /= norm);
    true
}

fn remove_component<T: Scalar>(v: &mut [T], u: &[T]) {
    let dot = v.iter().zip(u).map(|(a, b)| *a * *b).sum::<T>();
    v.iter_mut().zip(u).for_each(|(a, b)| *a -= dot * *b);
}

/// Two-column layout of one component, centered and scaled into [-1, 1].
fn component_layout<T: Scalar>(
    graph: &SparseGraph<T>,
    members: &[usize],
    rngs: &mut [SeedRng],
) -> Option<Vec<[T; 2]>> {
    let m = members.len();
    if m < 3 {
        return None;
    }
    let local: std::collections::HashMap<usize, usize> =
        members.iter().enumerate().map(|(l, &g)| (g, l)).collect();
    let degree: Vec<T> = members
        .iter()
        .map(|&g| graph.rows[g].iter().map(|&(_, w)| w).sum::<T>())
        .collect();
    if degree.iter().any(|d| !(*d > T::zero())) {
        return None;
    }
    let inv_sqrt: Vec<T> = degree.iter().map(|d| T::one() / d.sqrt()).collect();
    let mut trivial: Vec<T> = degree.iter().map(|d| d.sqrt()).collect();
    normalize(&mut trivial);

    // x -> (x + D^-1/2 W D^-1/2 x) / 2, eigenvalues in [0, 1].
    let apply = |x: &[T]| -> Vec<T> {
        (0..m)
            .map(|l| {
                let g = members[l];
                let s = graph.rows[g]
                    .iter()
                    .map(|&(j, w)| w * inv_sqrt[local[&j]] * x[local[&j]])
                    .sum::<T>();
                (x[l] + s * inv_sqrt[l]) / T::c(2.0)
            })
            .collect()
    };

    let mut basis: Vec<Vec<T>> = (0..2)
        .map(|_| {
            members
                .iter()
                .map(|&g| T::c(rngs[g].random_range(-1.0..1.0)))
                .collect()
        })
        .collect();
    for v in basis.iter_mut() {
        remove_component(v, &trivial);
    }
    let orthonormalize = |basis: &mut Vec<Vec<T>>| -> bool {
        remove_component(&mut basis[0], &trivial);
        if !normalize(&mut basis[0]) {
            return false;
        }
        let first = basis[0].clone();
        remove_component(&mut basis[1], &trivial);
        remove_component(&mut basis[1], &first);
        normalize(&mut basis[1])
    };
    if !orthonormalize(&mut basis) {
        return None;
    }
    for _ in 0..MAX_ITERS {
        let mut next: Vec<Vec<T>> = basis.iter().map(|v| apply(v)).collect();
        if !orthonormalize(&mut next) {
            return None;
        }
        let change = next
            .iter()
            .zip(&basis)
            .map(|(a, b)| {
                let dot = a.iter().zip(b).map(|(x, y)| *x * *y).sum::<T>();
                T::one() - dot.abs()
            })
            .fold(T::zero(), T::max);
        basis = next;
        if change < T::c(CONVERGENCE) {
            break;
        }
    }

    let mut coords: Vec<[T; 2]> = (0..m).map(|l| [basis[0][l], basis[1][l]]).collect();
    for dim in 0..2 {
        let mean = coords.iter().map(|c| c[dim]).sum::<T>() / T::from_usize_lossy(m);
        coords.iter_mut().for_each(|c| c[dim] -= mean);
    }
    let max_abs = coords
        .iter()
        .flat_map(|c| c.iter().map(|v| v.abs()))
        .fold(T::zero(), T::max);
    if !(max_abs > T::zero()) || !max_abs.is_finite() {
        return None;
    }
    coords.iter_mut().for_each(|c| {
        c[0] /= max_abs;
        c[1] /= max_abs;
    });
    Some(coords)
}

/// Spectral layout scaled into [-10, 10]², or `None` when no component
/// admits one. Returns the layout and the number of components.
pub(crate) fn spectral_layout<T: Scalar>(
    graph: &SparseGraph<T>,
    rngs: &mut [SeedRng],
) -> Option<(Array2<T>, usize)> {
    let comps = components(graph);
    let n_comp = comps.len();
    let mut coords = Array2::<T>::zeros((graph.n(), 2));
    let mut any_spectral = false;
    let radius = if n_comp == 1 { 0.0 } else { (1.5 * n_comp as f64 / std::f64::consts::PI).max(3.0) };
    for (c, members) in comps.iter().enumerate() {
        let angle = 2.0 * std::f64::consts::PI * c as f64 / n_comp as f64;
        let center = [T::c(radius * angle.cos()), T::c(radius * angle.sin())];
        let layout = component_layout(graph, members, rngs);
        any_spectral |= layout.is_some();
        for (l, &g) in members.iter().enumerate() {
            let local = match &layout {
                Some(layout) => layout[l],
                None => [
                    T::c(rngs[g].random_range(-1.0..1.0)),
                    T::c(rngs[g].random_range(-1.0..1.0)),
                ],
            };
            coords[[g, 0]] = center[0] + local[0];
            coords[[g, 1]] = center[1] + local[1];
        }
    }
    if !any_spectral {
        return None;
    }
    let max_abs = coords.iter().map(|v| v.abs()).fold(T::zero(), T::max);
    if !(max_abs > T::zero()) || !max_abs.is_finite() {
        return None;
    }
    let scale = T::c(10.0) / max_abs;
    coords.mapv_inplace(|v| v * scale);
    Some((coords, n_comp))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ring(n: usize) -> SparseGraph<f64> {
        let rows = (0..n)
            .map(|i| {
                let mut r = vec![((i + n - 1) % n, 1.0), ((i + 1) % n, 1.0)];
                r.sort_by_key(|e| e.0);
                r
            })
            .collect();
        SparseGraph { rows }
    }

    #[test]
    fn ring_lays_out_as_circle() {
        let g = ring(12);
        let mut rngs: Vec<_> = (0..12).map(|i| crate::seed::rng(i)).collect();
        let (coords, comps) = spectral_layout(&g, &mut rngs).unwrap();
        assert_eq!(comps, 1);
        let radii: Vec<f64> = coords.rows().into_iter().map(|r| r[0].hypot(r[1])).collect();
        let mean = radii.iter().sum::<f64>() / 12.0;
        for r in radii {
            assert!((r - mean).abs() < 1e-3 * mean, "{r} vs {mean}");
        }
    }

    #[test]
    fn components_are_separated() {
        let mut rows = ring(6).rows;
        rows.extend(ring(6).rows.into_iter().map(|r| r.into_iter().map(|(j, w)| (j + 6, w)).collect()));
        let g = SparseGraph { rows };
        let mut rngs: Vec<_> = (0..12).map(|i| crate::seed::rng(i)).collect();
        let (coords, comps) = spectral_layout(&g, &mut rngs).unwrap();
        assert_eq!(comps, 2);
        let mean = |rng: std::ops::Range<usize>| rng.map(|i| coords[[i, 0]]).sum::<f64>() / 6.0;
        assert!((mean(0..6) - mean(6..12)).abs() > 5.0);
    }
}

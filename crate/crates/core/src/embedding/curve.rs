//! Least-squares fit of the low-dimensional similarity curve
//! `1 / (1 + a·d^(2b))` to the offset exponential implied by `min_dist`.

const SPREAD: f64 = 1.0;
const SAMPLES: usize = 300;
const STEP_TOLERANCE: f64 = 1e-10;

pub(crate) fn target_curve(min_dist: f64) -> (Vec<f64>, Vec<f64>) {
    let xs: Vec<f64> = (0..SAMPLES)
        .map(|i| 3.0 * SPREAD * i as f64 / (SAMPLES - 1) as f64)
        .collect();
    let ys = xs
        .iter()
        .map(|&x| if x < min_dist { 1.0 } else { (-(x - min_dist) / SPREAD).exp() })
        .collect();
    (xs, ys)
}

fn model(x: f64, a: f64, b: f64) -> f64 {
    1.0 / (1.0 + a * x.powf(2.0 * b))
}

fn sse(xs: &[f64], ys: &[f64], a: f64, b: f64) -> f64 {
    xs.iter().zip(ys).map(|(&x, &y)| (model(x, a, b) - y).powi(2)).sum()
}

/// Levenberg–Marquardt from `(1, 1)`; stops once both parameters move by
/// less than `1e-10` (relative), well inside the `1e-6` fit tolerance.
pub fn fit_curve_params(min_dist: f64) -> (f64, f64) {
    let (xs, ys) = target_curve(min_dist);
    let (mut a, mut b) = (1.0f64, 1.0f64);
    let mut lambda = 1e-3;
    let mut cost = sse(&xs, &ys, a, b);
    for _ in 0..500 {
        // Normal equations J^T J and J^T r for the two parameters.
        let (mut jaa, mut jab, mut jbb, mut ga, mut gb) = (0.0, 0.0, 0.0, 0.0, 0.0);
        for (&x, &y) in xs.iter().zip(&ys) {
            let p = x.powf(2.0 * b);
            let denom = 1.0 + a * p;
            let r = 1.0 / denom - y;
            let da = -p / (denom * denom);
            let db = if x > 0.0 { -a * p * 2.0 * x.ln() / (denom * denom) } else { 0.0 };
            jaa += da * da;
            jab += da * db;
            jbb += db * db;
            ga += da * r;
            gb += db * r;
        }
        let mut improved = false;
        for _ in 0..50 {
            let (m_aa, m_bb) = (jaa * (1.0 + lambda), jbb * (1.0 + lambda));
            let det = m_aa * m_bb - jab * jab;
            if det == 0.0 {
                lambda *= 10.0;
                continue;
            }
            let step_a = -(m_bb * ga - jab * gb) / det;
            let step_b = -(m_aa * gb - jab * ga) / det;
            let (na, nb) = (a + step_a, b + step_b);
            let new_cost = if na > 0.0 && nb > 0.0 { sse(&xs, &ys, na, nb) } else { f64::INFINITY };
            if new_cost <= cost {
                let converged = step_a.abs() <= STEP_TOLERANCE * a.abs().max(1.0)
                    && step_b.abs() <= STEP_TOLERANCE * b.abs().max(1.0);
                a = na;
                b = nb;
                cost = new_cost;
                lambda = (lambda / 10.0).max(1e-12);
                improved = true;
                if converged {
                    return (a, b);
                }
                break;
            }
            lambda *= 10.0;
        }
        if !improved {
            break;
        }
    }
    (a, b)
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Coarse-to-fine grid search over (a, b); shares nothing with the
    /// Levenberg–Marquardt path except the target curve.
    fn grid_fit(min_dist: f64) -> (f64, f64) {
        let (xs, ys) = target_curve(min_dist);
        let (mut ca, mut cb, mut half) = (1.5, 1.0, 1.0);
        for _ in 0..40 {
            let mut best = (f64::INFINITY, ca, cb);
            for i in -10..=10 {
                for j in -10..=10 {
                    let a = ca + half * i as f64 / 10.0;
                    let b = cb + half * j as f64 / 10.0;
                    if a <= 0.0 || b <= 0.0 {
                        continue;
                    }
                    let c = sse(&xs, &ys, a, b);
                    if c < best.0 {
                        best = (c, a, b);
                    }
                }
            }
            ca = best.1;
            cb = best.2;
            half /= 4.0;
        }
        (ca, cb)
    }

    #[test]
    fn default_min_dist_matches_reference_fit() {
        let (a, b) = fit_curve_params(0.1);
        // Reference values from an independent Levenberg–Marquardt fit (scipy).
        assert!((a - 1.576_943_46).abs() < 1e-3, "a = {a}");
        assert!((b - 0.895_060_88).abs() < 1e-3, "b = {b}");
        let (ga, gb) = grid_fit(0.1);
        assert!((a - ga).abs() < 1e-3 && (b - gb).abs() < 1e-3, "grid ({ga}, {gb})");
    }

    #[test]
    fn other_min_dists_match_grid_oracle() {
        for (md, ra, rb) in [(0.25, 1.121_436_4, 1.057_499_9), (0.5, 0.583_030_0, 1.334_167_0)] {
            let (a, b) = fit_curve_params(md);
            assert!((a - ra).abs() < 1e-3 && (b - rb).abs() < 1e-3, "{md}: ({a}, {b})");
            let (ga, gb) = grid_fit(md);
            assert!((a - ga).abs() < 1e-3 && (b - gb).abs() < 1e-3);
        }
    }
}

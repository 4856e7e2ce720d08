//! Per-metric association tests and multiplicity correction.

use std::fmt;

use super::special::{f_upper_tail, student_t_two_sided};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TestKind {
    WelchT,
    AnovaF,
}

impl fmt::Display for TestKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::WelchT => "welch_t",
            Self::AnovaF => "anova_f",
        })
    }
}

/// Statistic and p-value of one test.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TestOutcome<T> {
    pub kind: TestKind,
    pub statistic: T,
    /// Welch–Satterthwaite df for t; `(between, within)` df for F.
    pub df: (T, T),
    pub p_value: T,
    /// Set when every sample has zero variance.
    pub degenerate: bool,
}

fn mean_var<T: Scalar>(x: &[T]) -> (T, T) {
    let n = T::from_usize_lossy(x.len());
    let mean = x.iter().copied().sum::<T>() / n;
    let ss = x.iter().map(|&v| (v - mean) * (v - mean)).sum::<T>();
    (mean, ss / (n - T::one()))
}

/// Two-sided Welch t-test (unequal variances).
pub fn welch_t_test<T: Scalar>(x: &[T], y: &[T]) -> Result<TestOutcome<T>> {
    if x.len() < 2 || y.len() < 2 {
        return Err(Error::InvalidParameter(format!(
            "Welch test needs two samples of size >= 2, got {} and {}",
            x.len(),
            y.len()
        )));
    }
    let (mx, vx) = mean_var(x);
    let (my, vy) = mean_var(y);
    let (nx, ny) = (T::from_usize_lossy(x.len()), T::from_usize_lossy(y.len()));
    let (sx, sy) = (vx / nx, vy / ny);
    let se2 = sx + sy;
    if !(se2 > T::zero()) {
        let differ = mx != my;
        return Ok(TestOutcome {
            kind: TestKind::WelchT,
            statistic: if differ { (mx - my).signum() * T::infinity() } else { T::zero() },
            df: (nx + ny - T::c(2.0), T::zero()),
            p_value: if differ { T::zero() } else { T::one() },
            degenerate: true,
        });
    }
    let t = (mx - my) / se2.sqrt();
    let df = se2 * se2 / (sx * sx / (nx - T::one()) + sy * sy / (ny - T::one()));
    Ok(TestOutcome {
        kind: TestKind::WelchT,
        statistic: t,
        df: (df, T::zero()),
        p_value: student_t_two_sided(t, df),
        degenerate: false,
    })
}

/// One-way ANOVA F-test across groups.
pub fn anova_f_test<T: Scalar>(groups: &[&[T]]) -> Result<TestOutcome<T>> {
    if groups.len() < 2 || groups.iter().any(|g| g.len() < 2) {
        return Err(Error::InvalidParameter(
            "ANOVA needs at least two groups of size >= 2".into(),
        ));
    }
    let n: usize = groups.iter().map(|g| g.len()).sum();
    let k = groups.len();
    let grand = groups.iter().flat_map(|g| g.iter().copied()).sum::<T>() / T::from_usize_lossy(n);
    let mut ssb = T::zero();
    let mut ssw = T::zero();
    for g in groups {
        let (m, v) = mean_var(g);
        ssb += T::from_usize_lossy(g.len()) * (m - grand) * (m - grand);
        ssw += v * T::from_usize_lossy(g.len() - 1);
    }
    let d1 = T::from_usize_lossy(k - 1);
    let d2 = T::from_usize_lossy(n - k);
    if !(ssw > T::zero()) {
        let differ = ssb > T::zero();
        return Ok(TestOutcome {
            kind: TestKind::AnovaF,
            statistic: if differ { T::infinity() } else { T::zero() },
            df: (d1, d2),
            p_value: if differ { T::zero() } else { T::one() },
            degenerate: true,
        });
    }
    let f = (ssb / d1) / (ssw / d2);
    Ok(TestOutcome {
        kind: TestKind::AnovaF,
        statistic: f,
        df: (d1, d2),
        p_value: f_upper_tail(f, d1, d2),
        degenerate: false,
    })
}

/// Benjamini–Hochberg adjusted p-values, returned in input order.
pub fn bh_adjust<T: Scalar>(p_values: &[T]) -> Result<Vec<T>> {
    if let Some(p) = p_values.iter().find(|p| !(**p >= T::zero() && **p <= T::one())) {
        return Err(Error::InvalidParameter(format!("p-value {p} outside [0, 1]")));
    }
    let m = p_values.len();
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&a, &b| p_values[a].partial_cmp(&p_values[b]).expect("p-values are finite").then(a.cmp(&b)));
    let mt = T::from_usize_lossy(m);
    let mut adjusted = vec![T::zero(); m];
    let mut running = T::one();
    for (rank, &i) in order.iter().enumerate().rev() {
        // m / rank is exactly 1 at the top rank, so the largest p is never adjusted below itself.
        let q = p_values[i] * (mt / T::from_usize_lossy(rank + 1));
        running = running.min(q);
        adjusted[i] = running;
    }
    Ok(adjusted)
}

//! Tests for whether QC metrics confound a user-supplied label.
//!
//! Two complementary views: per-metric Welch t / one-way ANOVA tests with
//! Benjamini–Hochberg correction, and a random-forest permutation test whose
//! statistic is stratified cross-validated accuracy. The forest also ranks
//! metrics by mean decrease in Gini impurity.

mod forest;
mod hypothesis;
pub mod special;

use ndarray::Array2;
use rand::seq::SliceRandom;

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::seed::{derive_seed, rng};

pub use forest::{gini, DecisionTree, ForestParams, RandomForest};
pub use hypothesis::{anova_f_test, bh_adjust, welch_t_test, TestKind, TestOutcome};

use forest::{columns_of, encode_labels, fit_trees, vote, TrainingSet};

/// Salt separating the fold-assignment stream from the per-fold forests.
const FOLD_STREAM: u64 = 0xF01D;

#[derive(Debug, Clone, PartialEq)]
pub struct LabeledCohort<T> {
    pub features: Array2<T>,
    pub labels: Vec<String>,
    pub feature_names: Vec<String>,
}

impl<T: Scalar> LabeledCohort<T> {
    pub fn new(features: Array2<T>, labels: Vec<String>, feature_names: Vec<String>) -> Result<Self> {
        if features.nrows() != labels.len() {
            return Err(Error::LengthMismatch {
                left: features.nrows(),
                right: labels.len(),
            });
        }
        if features.ncols() != feature_names.len() {
            return Err(Error::LengthMismatch {
                left: features.ncols(),
                right: feature_names.len(),
            });
        }
        let (classes, _) = encode_labels(&labels);
        if classes.len() < 2 {
            return Err(Error::InvalidParameter(format!(
                "need at least two distinct labels, found {}",
                classes.len()
            )));
        }
        Ok(Self {
            features,
            labels,
            feature_names,
        })
    }

    /// Sorted class names with their member counts.
    pub fn class_sizes(&self) -> Vec<(String, usize)> {
        let (classes, codes) = encode_labels(&self.labels);
        let mut counts = vec![0; classes.len()];
        codes.iter().for_each(|&c| counts[c] += 1);
        classes.into_iter().zip(counts).collect()
    }

    fn require_class_size(&self, needed: usize) -> Result<()> {
        match self.class_sizes().into_iter().find(|(_, n)| *n < needed) {
            Some((label, found)) => Err(Error::ClassTooSmall { label, found, needed }),
            None => Ok(()),
        }
    }
}

/// Result of one per-metric test after multiplicity correction.
#[derive(Debug, Clone, PartialEq)]
pub struct TTestResult {
    pub feature_name: String,
    pub statistic: f64,
    pub degrees_of_freedom: f64,
    /// Within-group df for ANOVA; 0 for Welch.
    pub degrees_of_freedom_within: f64,
    pub p_value: f64,
    pub adjusted_p: f64,
    pub test_kind: TestKind,
    pub degenerate: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PermutationTestResult {
    pub observed_accuracy: f64,
    pub null_accuracies: Vec<f64>,
    pub p_value: f64,
    pub n_permutations: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureRanking {
    /// `(feature, importance)`, descending; ties by name.
    pub entries: Vec<(String, f64)>,
}

impl FeatureRanking {
    pub fn rank_of(&self, feature: &str) -> Option<usize> {
        self.entries.iter().position(|(f, _)| f == feature)
    }

    pub fn importance_of(&self, feature: &str) -> Option<f64> {
        self.entries.iter().find(|(f, _)| f == feature).map(|e| e.1)
    }
}

/// Trains a forest on the whole cohort.
pub fn train_random_forest<T: Scalar>(cohort: &LabeledCohort<T>, params: &ForestParams) -> Result<RandomForest<T>> {
    if cohort.labels.len() < 4 {
        return Err(Error::TooFewPatients {
            needed: 4,
            found: cohort.labels.len(),
        });
    }
    RandomForest::fit(&cohort.features, &cohort.labels, &cohort.feature_names, params)
}

/// Stratified fold index per row: each class is shuffled and dealt
/// round-robin, continuing the deal across classes.
fn stratified_folds(codes: &[usize], n_classes: usize, n_folds: usize, seed: u64) -> Vec<usize> {
    let mut r = rng(seed);
    let mut fold = vec![0; codes.len()];
    let mut next = 0;
    for class in 0..n_classes {
        let mut members: Vec<usize> = (0..codes.len()).filter(|&i| codes[i] == class).collect();
        members.shuffle(&mut r);
        for i in members {
            fold[i] = next % n_folds;
            next += 1;
        }
    }
    fold
}

fn cv_accuracy_coded<T: Scalar>(
    columns: &[Vec<T>],
    codes: &[usize],
    n_classes: usize,
    params: &ForestParams,
    n_folds: usize,
) -> f64 {
    let folds = stratified_folds(codes, n_classes, n_folds, derive_seed(params.seed, FOLD_STREAM));
    let data = TrainingSet {
        columns,
        labels: codes,
        n_classes,
    };
    let mut total = 0.0;
    for f in 0..n_folds {
        let train: Vec<usize> = (0..codes.len()).filter(|&i| folds[i] != f).collect();
        let test: Vec<usize> = (0..codes.len()).filter(|&i| folds[i] == f).collect();
        let fold_params = ForestParams {
            seed: derive_seed(params.seed, f as u64 + 1),
            ..*params
        };
        let (trees, _) = fit_trees(&data, &train, &fold_params);
        let correct = test
            .iter()
            .filter(|&&i| vote(&trees, n_classes, |j| columns[j][i]) == codes[i])
            .count();
        total += correct as f64 / test.len() as f64;
    }
    total / n_folds as f64
}

/// Mean accuracy over stratified cross-validation folds.
pub fn cv_accuracy<T: Scalar>(cohort: &LabeledCohort<T>, params: &ForestParams, n_folds: usize) -> Result<f64> {
    if n_folds < 2 {
        return Err(Error::InvalidParameter("cross-validation needs at least 2 folds".into()));
    }
    cohort.require_class_size(n_folds)?;
    let (classes, codes) = encode_labels(&cohort.labels);
    let columns = columns_of(&cohort.features);
    Ok(cv_accuracy_coded(&columns, &codes, classes.len(), params, n_folds))
}

/// Compares cross-validated accuracy on the true labels with its
/// distribution under label permutation.
///
/// `p = (1 + #{null >= observed}) / (1 + n_permutations)`.
pub fn permutation_test<T: Scalar>(
    cohort: &LabeledCohort<T>,
    params: &ForestParams,
    n_permutations: usize,
    n_folds: usize,
    seed: u64,
) -> Result<PermutationTestResult> {
    if n_permutations == 0 {
        return Err(Error::InvalidParameter("need at least one permutation".into()));
    }
    if n_folds < 2 {
        return Err(Error::InvalidParameter("cross-validation needs at least 2 folds".into()));
    }
    cohort.require_class_size(n_folds)?;
    let (classes, codes) = encode_labels(&cohort.labels);
    let columns = columns_of(&cohort.features);
    let observed = cv_accuracy_coded(&columns, &codes, classes.len(), params, n_folds);
    let null_accuracies: Vec<f64> = (0..n_permutations)
        .map(|p| {
            let mut shuffled = codes.clone();
            shuffled.shuffle(&mut rng(derive_seed(seed, p as u64)));
            cv_accuracy_coded(&columns, &shuffled, classes.len(), params, n_folds)
        })
        .collect();
    let exceed = null_accuracies.iter().filter(|&&a| a >= observed).count();
    Ok(PermutationTestResult {
        observed_accuracy: observed,
        p_value: (1 + exceed) as f64 / (1 + n_permutations) as f64,
        null_accuracies,
        n_permutations,
        seed,
    })
}

/// Features ordered by normalized mean decrease in impurity.
pub fn rank_features<T: Scalar>(forest: &RandomForest<T>) -> FeatureRanking {
    let total: f64 = forest.raw_importances.iter().sum();
    let mut entries: Vec<(String, f64)> = forest
        .feature_names
        .iter()
        .cloned()
        .zip(forest.raw_importances.iter().map(|&v| if total > 0.0 { v / total } else { 0.0 }))
        .collect();
    entries.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap_or(std::cmp::Ordering::Equal).then(a.0.cmp(&b.0)));
    FeatureRanking { entries }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BeTestParams {
    pub forest: ForestParams,
    pub n_permutations: usize,
    pub n_folds: usize,
    pub seed: u64,
}

impl Default for BeTestParams {
    fn default() -> Self {
        Self {
            forest: ForestParams::default(),
            n_permutations: 200,
            n_folds: 3,
            seed: 42,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BeReport {
    pub classes: Vec<(String, usize)>,
    pub tests: Vec<TTestResult>,
    pub permutation: PermutationTestResult,
    pub ranking: FeatureRanking,
}

/// Per-metric association tests, permutation test and feature ranking.
pub fn be_report<T: Scalar>(cohort: &LabeledCohort<T>, params: &BeTestParams) -> Result<BeReport> {
    cohort.require_class_size(2)?;
    let (classes, codes) = encode_labels(&cohort.labels);
    let mut outcomes = Vec::with_capacity(cohort.feature_names.len());
    for column in cohort.features.columns() {
        let mut samples: Vec<Vec<T>> = vec![Vec::new(); classes.len()];
        for (v, &c) in column.iter().zip(&codes) {
            samples[c].push(*v);
        }
        let outcome = if classes.len() == 2 {
            welch_t_test(&samples[0], &samples[1])?
        } else {
            let refs: Vec<&[T]> = samples.iter().map(Vec::as_slice).collect();
            anova_f_test(&refs)?
        };
        outcomes.push(outcome);
    }
    let raw: Vec<f64> = outcomes.iter().map(|o| o.p_value.as_f64()).collect();
    let adjusted = bh_adjust(&raw)?;
    let tests = outcomes
        .iter()
        .zip(&cohort.feature_names)
        .zip(adjusted)
        .map(|((o, name), adj)| TTestResult {
            feature_name: name.clone(),
            statistic: o.statistic.as_f64(),
            degrees_of_freedom: o.df.0.as_f64(),
            degrees_of_freedom_within: o.df.1.as_f64(),
            p_value: o.p_value.as_f64(),
            adjusted_p: adj,
            test_kind: o.kind,
            degenerate: o.degenerate,
        })
        .collect();

    let forest_params = ForestParams {
        seed: params.seed,
        ..params.forest
    };
    let permutation = permutation_test(cohort, &forest_params, params.n_permutations, params.n_folds, params.seed)?;
    let forest = train_random_forest(cohort, &forest_params)?;
    Ok(BeReport {
        classes: cohort.class_sizes(),
        tests,
        permutation,
        ranking: rank_features(&forest),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand_distr::{Distribution, StandardNormal};

    fn names(d: usize) -> Vec<String> {
        (0..d).map(|j| format!("m{j}")).collect()
    }

    /// Column 0 carries the label, the rest are noise.
    fn signal_cohort(n: usize, d: usize, shift: f64, seed: u64) -> LabeledCohort<f64> {
        let mut r = rng(seed);
        let labels: Vec<String> = (0..n).map(|i| if i % 2 == 0 { "A".into() } else { "B".into() }).collect();
        let features = Array2::from_shape_fn((n, d), |(i, j)| {
            let noise: f64 = StandardNormal.sample(&mut r);
            if j == 0 && i % 2 == 1 {
                noise + shift
            } else {
                noise
            }
        });
        LabeledCohort::new(features, labels, names(d)).unwrap()
    }

    fn null_cohort(n: usize, d: usize, seed: u64) -> LabeledCohort<f64> {
        signal_cohort(n, d, 0.0, seed)
    }

    #[test]
    fn separable_cv_accuracy_is_perfect() {
        let c = signal_cohort(60, 3, 50.0, 2);
        let p = ForestParams { n_trees: 20, ..Default::default() };
        assert_eq!(cv_accuracy(&c, &p, 3).unwrap(), 1.0);
        assert_eq!(cv_accuracy(&c, &p, 3).unwrap(), cv_accuracy(&c, &p, 3).unwrap());
    }

    #[test]
    fn random_labels_give_chance_accuracy() {
        let c = null_cohort(200, 4, 17);
        let acc = cv_accuracy(&c, &ForestParams::default(), 3).unwrap();
        assert!((acc - 0.5).abs() <= 0.15, "accuracy {acc}");
    }

    #[test]
    fn perfectly_predictable_labels_reach_minimum_p() {
        let c = signal_cohort(30, 3, 50.0, 5);
        let p = ForestParams { n_trees: 10, features_per_split: Some(3), ..Default::default() };
        let r = permutation_test(&c, &p, 200, 3, 9).unwrap();
        assert_eq!(r.observed_accuracy, 1.0);
        assert!(r.null_accuracies.iter().all(|&a| a < 1.0));
        assert_eq!(r.p_value, 1.0 / 201.0);
    }

    #[test]
    fn zero_permutations_rejected() {
        let c = null_cohort(12, 2, 1);
        assert!(permutation_test(&c, &ForestParams::default(), 0, 3, 0).is_err());
    }

    #[test]
    fn too_small_class_rejected() {
        let features = Array2::from_shape_fn((5, 1), |(i, _)| i as f64);
        let labels = ["a", "a", "a", "b", "b"].map(String::from).to_vec();
        let c = LabeledCohort::new(features, labels, names(1)).unwrap();
        assert!(matches!(
            cv_accuracy(&c, &ForestParams::default(), 3),
            Err(Error::ClassTooSmall { found: 2, needed: 3, .. })
        ));
    }

    #[test]
    fn single_label_rejected() {
        let features = Array2::from_shape_fn((4, 1), |(i, _)| i as f64);
        assert!(LabeledCohort::new(features, vec!["a".into(); 4], names(1)).is_err());
    }

    #[test]
    fn informative_feature_ranked_first() {
        let c = signal_cohort(200, 5, 3.0, 23);
        let forest = train_random_forest(&c, &ForestParams::default()).unwrap();
        let ranking = rank_features(&forest);
        assert_eq!(ranking.entries[0].0, "m0");
        assert!(ranking.entries[0].1 > 0.5, "{:?}", ranking.entries);
        let sum: f64 = ranking.entries.iter().map(|e| e.1).sum();
        assert!((sum - 1.0).abs() < 1e-9);
    }

    #[test]
    fn stumps_have_zero_importance_sorted_by_name() {
        let c = signal_cohort(40, 3, 3.0, 1);
        let forest = train_random_forest(&c, &ForestParams { max_depth: Some(0), n_trees: 5, ..Default::default() }).unwrap();
        let ranking = rank_features(&forest);
        assert_eq!(
            ranking.entries,
            vec![("m0".into(), 0.0), ("m1".into(), 0.0), ("m2".into(), 0.0)]
        );
    }

    #[test]
    fn report_dispatches_on_class_count() {
        let params = BeTestParams {
            forest: ForestParams { n_trees: 10, ..Default::default() },
            n_permutations: 5,
            ..Default::default()
        };
        let two = signal_cohort(30, 3, 2.0, 4);
        let r = be_report(&two, &params).unwrap();
        assert_eq!(r.tests.len(), 3);
        assert!(r.tests.iter().all(|t| t.test_kind == TestKind::WelchT && t.adjusted_p >= t.p_value));
        assert_eq!(r.permutation.n_permutations, 5);
        assert_eq!(r.ranking.entries.len(), 3);

        let mut three = signal_cohort(30, 3, 2.0, 4);
        three.labels = (0..30).map(|i| ["x", "y", "z"][i % 3].to_string()).collect();
        let r = be_report(&three, &params).unwrap();
        assert!(r.tests.iter().all(|t| t.test_kind == TestKind::AnovaF));
    }
}

//! Random forest of CART classification trees with Gini splits.

use ndarray::Array2;
use rand::seq::index::sample;
use rand::Rng;

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::seed::{derive_seed, rng, Rng as SeedRng};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ForestParams {
    pub n_trees: usize,
    pub max_depth: Option<usize>,
    /// Candidate features per split; `None` means `floor(sqrt(D))`, at least 1.
    pub features_per_split: Option<usize>,
    pub min_samples_leaf: usize,
    pub seed: u64,
}

impl Default for ForestParams {
    fn default() -> Self {
        Self {
            n_trees: 100,
            max_depth: None,
            features_per_split: None,
            min_samples_leaf: 1,
            seed: 42,
        }
    }
}

impl ForestParams {
    pub(crate) fn resolved_features(&self, n_features: usize) -> usize {
        self.features_per_split
            .unwrap_or_else(|| (n_features as f64).sqrt().floor() as usize)
            .clamp(1, n_features.max(1))
    }

    fn validate(&self) -> Result<()> {
        if self.n_trees == 0 {
            return Err(Error::InvalidParameter("forest needs at least one tree".into()));
        }
        if self.min_samples_leaf == 0 {
            return Err(Error::InvalidParameter("min_samples_leaf must be >= 1".into()));
        }
        Ok(())
    }
}

/// Gini impurity of a class-count vector.
pub fn gini(counts: &[usize]) -> f64 {
    let n: usize = counts.iter().sum();
    if n == 0 {
        return 0.0;
    }
    let n = n as f64;
    1.0 - counts.iter().map(|&c| (c as f64 / n).powi(2)).sum::<f64>()
}

fn majority(counts: &[usize]) -> usize {
    counts
        .iter()
        .enumerate()
        .fold((0, 0), |best, (c, &n)| if n > best.1 { (c, n) } else { best })
        .0
}

#[derive(Debug, Clone, PartialEq)]
enum Node<T> {
    Leaf {
        class: usize,
    },
    Split {
        feature: usize,
        threshold: T,
        left: usize,
        right: usize,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct DecisionTree<T> {
    nodes: Vec<Node<T>>,
}

impl<T: Scalar> DecisionTree<T> {
    fn predict_row(&self, row: impl Fn(usize) -> T) -> usize {
        let mut at = 0;
        loop {
            match &self.nodes[at] {
                Node::Leaf { class } => return *class,
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => at = if row(*feature) <= *threshold { *left } else { *right },
            }
        }
    }

    pub fn n_splits(&self) -> usize {
        self.nodes.iter().filter(|n| matches!(n, Node::Split { .. })).count()
    }
}

/// Column-major training data with integer-coded classes.
pub(crate) struct TrainingSet<'a, T> {
    pub columns: &'a [Vec<T>],
    pub labels: &'a [usize],
    pub n_classes: usize,
}

struct BestSplit<T> {
    feature: usize,
    threshold: T,
    position: usize,
    score: f64,
}

fn build_tree<T: Scalar>(
    data: &TrainingSet<'_, T>,
    rows: Vec<usize>,
    params: &ForestParams,
    rng: &mut SeedRng,
    importances: &mut [f64],
) -> DecisionTree<T> {
    let n_features = data.columns.len();
    let per_split = params.resolved_features(n_features);
    let root_n = rows.len() as f64;
    let mut nodes: Vec<Node<T>> = Vec::new();
    // (node slot, rows, depth)
    let mut stack = vec![(0usize, rows, 0usize)];
    nodes.push(Node::Leaf { class: 0 });
    let mut sorted: Vec<(T, usize)> = Vec::new();

    while let Some((slot, rows, depth)) = stack.pop() {
        let mut counts = vec![0usize; data.n_classes];
        rows.iter().for_each(|&r| counts[data.labels[r]] += 1);
        let n = rows.len();
        let leaf = Node::Leaf { class: majority(&counts) };
        let parent_gini = gini(&counts);
        let depth_capped = params.max_depth.is_some_and(|d| depth >= d);
        if parent_gini == 0.0 || depth_capped || n < 2 * params.min_samples_leaf {
            nodes[slot] = leaf;
            continue;
        }

        let mut features = sample(rng, n_features, per_split).into_vec();
        features.sort_unstable();
        let parent_sq: f64 = counts.iter().map(|&c| (c * c) as f64).sum();
        let mut best: Option<BestSplit<T>> = None;
        for &f in &features {
            sorted.clear();
            sorted.extend(rows.iter().map(|&r| (data.columns[f][r], r)));
            sorted.sort_unstable_by(|a, b| a.0.partial_cmp(&b.0).expect("finite features").then(a.1.cmp(&b.1)));
            let mut left = vec![0usize; data.n_classes];
            let mut right = counts.clone();
            let (mut sq_left, mut sq_right) = (0.0f64, parent_sq);
            for i in 0..n - 1 {
                let c = data.labels[sorted[i].1];
                sq_left += (2 * left[c] + 1) as f64;
                sq_right -= (2 * right[c] - 1) as f64;
                left[c] += 1;
                right[c] -= 1;
                let n_left = i + 1;
                let n_right = n - n_left;
                if n_left < params.min_samples_leaf || n_right < params.min_samples_leaf {
                    continue;
                }
                let (lo, hi) = (sorted[i].0, sorted[i + 1].0);
                if !(lo < hi) {
                    continue;
                }
                // Maximizing this minimizes the weighted child Gini.
                let score = sq_left / n_left as f64 + sq_right / n_right as f64;
                if best.as_ref().is_none_or(|b| score > b.score) {
                    let mid = (lo + hi) / T::c(2.0);
                    best = Some(BestSplit {
                        feature: f,
                        threshold: if mid < hi { mid } else { lo },
                        position: n_left,
                        score,
                    });
                }
            }
        }

        let Some(best) = best else {
            nodes[slot] = leaf;
            continue;
        };
        let weighted_child = (n as f64 - best.score) / n as f64;
        let decrease = parent_gini - weighted_child;
        if decrease <= 1e-12 {
            nodes[slot] = leaf;
            continue;
        }
        importances[best.feature] += n as f64 / root_n * decrease;

        let (left_rows, right_rows): (Vec<usize>, Vec<usize>) = rows
            .iter()
            .partition(|&&r| data.columns[best.feature][r] <= best.threshold);
        debug_assert_eq!(left_rows.len(), best.position);
        let left = nodes.len();
        nodes.push(Node::Leaf { class: 0 });
        let right = nodes.len();
        nodes.push(Node::Leaf { class: 0 });
        nodes[slot] = Node::Split {
            feature: best.feature,
            threshold: best.threshold,
            left,
            right,
        };
        stack.push((right, right_rows, depth + 1));
        stack.push((left, left_rows, depth + 1));
    }
    DecisionTree { nodes }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RandomForest<T> {
    /// Class names, sorted; predictions are indices into this list.
    pub classes: Vec<String>,
    pub trees: Vec<DecisionTree<T>>,
    pub feature_names: Vec<String>,
    /// Mean decrease in Gini impurity per feature, averaged over trees,
    /// before normalization.
    pub raw_importances: Vec<f64>,
}

pub(crate) fn columns_of<T: Scalar>(features: &Array2<T>) -> Vec<Vec<T>> {
    features.columns().into_iter().map(|c| c.to_vec()).collect()
}

pub(crate) fn fit_trees<T: Scalar>(
    data: &TrainingSet<'_, T>,
    rows: &[usize],
    params: &ForestParams,
) -> (Vec<DecisionTree<T>>, Vec<f64>) {
    let mut importances = vec![0.0; data.columns.len()];
    let mut per_tree = vec![0.0; data.columns.len()];
    let trees = (0..params.n_trees)
        .map(|t| {
            let mut r = rng(derive_seed(params.seed, t as u64));
            let boot: Vec<usize> = (0..rows.len()).map(|_| rows[r.random_range(0..rows.len())]).collect();
            per_tree.iter_mut().for_each(|v| *v = 0.0);
            let tree = build_tree(data, boot, params, &mut r, &mut per_tree);
            importances.iter_mut().zip(&per_tree).for_each(|(a, b)| *a += b);
            tree
        })
        .collect();
    importances.iter_mut().for_each(|v| *v /= params.n_trees as f64);
    (trees, importances)
}

pub(crate) fn vote<T: Scalar>(trees: &[DecisionTree<T>], n_classes: usize, row: impl Fn(usize) -> T + Copy) -> usize {
    let mut votes = vec![0usize; n_classes];
    for tree in trees {
        votes[tree.predict_row(row)] += 1;
    }
    majority(&votes)
}

/// Sorted distinct labels and the integer code of every label.
pub(crate) fn encode_labels(labels: &[String]) -> (Vec<String>, Vec<usize>) {
    let mut classes: Vec<String> = labels.to_vec();
    classes.sort();
    classes.dedup();
    let codes = labels
        .iter()
        .map(|l| classes.binary_search(l).expect("label present"))
        .collect();
    (classes, codes)
}

impl<T: Scalar> RandomForest<T> {
    pub fn fit(features: &Array2<T>, labels: &[String], feature_names: &[String], params: &ForestParams) -> Result<Self> {
        params.validate()?;
        if features.nrows() != labels.len() {
            return Err(Error::LengthMismatch {
                left: features.nrows(),
                right: labels.len(),
            });
        }
        let (classes, codes) = encode_labels(labels);
        if classes.len() < 2 {
            return Err(Error::InvalidParameter("random forest needs at least two classes".into()));
        }
        let columns = columns_of(features);
        let data = TrainingSet {
            columns: &columns,
            labels: &codes,
            n_classes: classes.len(),
        };
        let rows: Vec<usize> = (0..labels.len()).collect();
        let (trees, raw_importances) = fit_trees(&data, &rows, params);
        Ok(Self {
            classes,
            trees,
            feature_names: feature_names.to_vec(),
            raw_importances,
        })
    }

    /// Majority vote over trees; ties go to the lexicographically smaller class.
    pub fn predict(&self, features: &Array2<T>) -> Vec<&str> {
        features
            .rows()
            .into_iter()
            .map(|row| self.classes[vote(&self.trees, self.classes.len(), |f| row[f])].as_str())
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand_distr::{Distribution, StandardNormal};

    fn separable(n: usize, seed: u64) -> (Array2<f64>, Vec<String>) {
        let mut r = rng(seed);
        let x = Array2::from_shape_fn((n, 3), |_| StandardNormal.sample(&mut r));
        let y = x
            .column(0)
            .iter()
            .map(|v: &f64| if *v > 0.0 { "pos".to_string() } else { "neg".to_string() })
            .collect();
        (x, y)
    }

    fn names(d: usize) -> Vec<String> {
        (0..d).map(|j| format!("m{j}")).collect()
    }

    #[test]
    fn gini_values() {
        assert_eq!(gini(&[5, 0]), 0.0);
        assert_eq!(gini(&[2, 2]), 0.5);
        assert!((gini(&[1, 1, 1]) - 2.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn perfectly_separable_training_accuracy() {
        let (x, y) = separable(50, 3);
        let forest = RandomForest::fit(&x, &y, &names(3), &ForestParams::default()).unwrap();
        let pred = forest.predict(&x);
        assert!(pred.iter().zip(&y).all(|(p, t)| *p == t));
    }

    #[test]
    fn pure_node_becomes_leaf() {
        let x = Array2::from_shape_fn((6, 2), |(i, j)| (i * 3 + j) as f64);
        let labels = vec!["a".to_string(); 6];
        let columns = columns_of(&x);
        let codes = vec![0usize; 6];
        let data = TrainingSet { columns: &columns, labels: &codes, n_classes: 2 };
        let mut imp = vec![0.0; 2];
        let tree = build_tree(&data, (0..6).collect(), &ForestParams::default(), &mut rng(0), &mut imp);
        assert_eq!(tree.nodes, vec![Node::Leaf { class: 0 }]);
        assert!(RandomForest::fit(&x, &labels, &names(2), &ForestParams::default()).is_err());
    }

    #[test]
    fn deterministic_given_seed() {
        let (x, y) = separable(40, 9);
        let p = ForestParams { n_trees: 10, ..Default::default() };
        assert_eq!(
            RandomForest::fit(&x, &y, &names(3), &p).unwrap(),
            RandomForest::fit(&x, &y, &names(3), &p).unwrap()
        );
    }

    #[test]
    fn vote_ties_prefer_smaller_class() {
        let trees = vec![
            DecisionTree::<f64> { nodes: vec![Node::Leaf { class: 1 }] },
            DecisionTree::<f64> { nodes: vec![Node::Leaf { class: 0 }] },
        ];
        assert_eq!(vote(&trees, 2, |_| 0.0), 0);
    }

    #[test]
    fn invalid_params() {
        let (x, y) = separable(10, 1);
        let p = ForestParams { n_trees: 0, ..Default::default() };
        assert!(RandomForest::fit(&x, &y, &names(3), &p).is_err());
        assert!(RandomForest::fit(&x, &y[..5], &names(3), &ForestParams::default()).is_err());
    }
}

//! Patient-level train/test splits and cross-validation folds built from
//! batch-effect groups.
//!
//! * best case: every group is split at the requested ratio, so each
//!   partition sees every batch-effect signature;
//! * average case: a plain random split that ignores groups;
//! * worst case: whole groups are sent to a single fold.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use rand::seq::SliceRandom;
use rand::Rng;

use crate::error::{Error, Result};
use crate::ingest::PatientRecord;
use crate::seed::{derive_seed, rng};

/// Patients grouped by batch-effect signature.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BeGroups {
    pub group_of: BTreeMap<String, usize>,
    /// Members of group `g` at index `g`, in input order.
    pub groups: Vec<Vec<String>>,
}

impl BeGroups {
    /// Builds groups from aligned patient ids and group indices. Group
    /// indices must be dense: every index below the maximum is used.
    pub fn from_assignments(patient_ids: &[String], assignments: &[usize]) -> Result<Self> {
        if patient_ids.len() != assignments.len() {
            return Err(Error::LengthMismatch {
                left: patient_ids.len(),
                right: assignments.len(),
            });
        }
        let k = assignments.iter().max().map_or(0, |m| m + 1);
        let mut groups = vec![Vec::new(); k];
        let mut group_of = BTreeMap::new();
        for (id, &g) in patient_ids.iter().zip(assignments) {
            if group_of.insert(id.clone(), g).is_some() {
                return Err(Error::InvalidGroups(format!("patient {id:?} listed twice")));
            }
            groups[g].push(id.clone());
        }
        if let Some(g) = groups.iter().position(Vec::is_empty) {
            return Err(Error::InvalidGroups(format!("group {g} is empty")));
        }
        Ok(Self { group_of, groups })
    }

    pub fn n_patients(&self) -> usize {
        self.group_of.len()
    }

    pub fn n_groups(&self) -> usize {
        self.groups.len()
    }

    pub fn sizes(&self) -> Vec<usize> {
        self.groups.iter().map(Vec::len).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Strategy {
    BestCase,
    AverageCase,
    WorstCase,
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::BestCase => "bestcase",
            Self::AverageCase => "averagecase",
            Self::WorstCase => "worstcase",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Side {
    Train,
    Test,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PartitionAssignment {
    pub strategy: Strategy,
    pub assignment: BTreeMap<String, Side>,
    pub seed: u64,
    pub requested_ratio: f64,
}

impl PartitionAssignment {
    pub fn n_test(&self) -> usize {
        self.assignment.values().filter(|s| **s == Side::Test).count()
    }

    pub fn n_train(&self) -> usize {
        self.assignment.len() - self.n_test()
    }

    pub fn is_test(&self, patient_id: &str) -> Option<bool> {
        self.assignment.get(patient_id).map(|s| *s == Side::Test)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FoldAssignment {
    pub strategy: Strategy,
    pub n_folds: usize,
    pub fold_of: BTreeMap<String, usize>,
    pub seed: u64,
}

impl FoldAssignment {
    pub fn fold_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.n_folds];
        self.fold_of.values().for_each(|&f| sizes[f] += 1);
        sizes
    }

    /// Train/test view with `fold` held out as the test side.
    pub fn held_out(&self, fold: usize) -> PartitionAssignment {
        PartitionAssignment {
            strategy: self.strategy,
            assignment: self
                .fold_of
                .iter()
                .map(|(id, &f)| (id.clone(), if f == fold { Side::Test } else { Side::Train }))
                .collect(),
            seed: self.seed,
            requested_ratio: 1.0 / self.n_folds as f64,
        }
    }
}

/// Either kind of partition, as consumed by validation and reporting.
#[derive(Debug, Clone, PartialEq)]
pub enum Partition {
    Split(PartitionAssignment),
    Folds(FoldAssignment),
}

impl Partition {
    pub fn strategy(&self) -> Strategy {
        match self {
            Self::Split(s) => s.strategy,
            Self::Folds(f) => f.strategy,
        }
    }

    /// Label of a patient: 0/1 (train/test) for splits, fold index for folds.
    pub fn label_of(&self, patient_id: &str) -> Option<usize> {
        match self {
            Self::Split(s) => s.is_test(patient_id).map(usize::from),
            Self::Folds(f) => f.fold_of.get(patient_id).copied(),
        }
    }

    /// Number of distinct labels the partition should use.
    pub fn n_labels(&self) -> usize {
        match self {
            Self::Split(_) => 2,
            Self::Folds(f) => f.n_folds,
        }
    }

    pub fn len(&self) -> usize {
        match self {
            Self::Split(s) => s.assignment.len(),
            Self::Folds(f) => f.fold_of.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn labels(&self) -> BTreeMap<&str, usize> {
        match self {
            Self::Split(s) => s
                .assignment
                .iter()
                .map(|(k, v)| (k.as_str(), usize::from(*v == Side::Test)))
                .collect(),
            Self::Folds(f) => f.fold_of.iter().map(|(k, v)| (k.as_str(), *v)).collect(),
        }
    }
}

fn check_ratio(ratio: f64) -> Result<()> {
    if ratio > 0.0 && ratio < 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("test ratio {ratio} outside (0, 1)")))
    }
}

fn global_test_count(ratio: f64, n: usize) -> Result<usize> {
    check_ratio(ratio)?;
    if n < 2 {
        return Err(Error::TooFewPatients { needed: 2, found: n });
    }
    let t = (ratio * n as f64).round() as usize;
    if t == 0 || t == n {
        return Err(Error::DegeneratePartition(format!(
            "ratio {ratio} on {n} patients leaves {} side empty",
            if t == 0 { "the test" } else { "the train" }
        )));
    }
    Ok(t)
}

/// Per-group test counts: `floor(ratio * size)` each, with the remaining
/// global quota handed out by largest fractional remainder (ties to the
/// lower group index).
pub fn best_case_quotas(sizes: &[usize], ratio: f64) -> Result<Vec<usize>> {
    let n: usize = sizes.iter().sum();
    let total = global_test_count(ratio, n)?;
    let mut quotas: Vec<usize> = sizes.iter().map(|&s| (ratio * s as f64).floor() as usize).collect();
    let assigned: usize = quotas.iter().sum();
    let mut order: Vec<(f64, usize)> = sizes
        .iter()
        .enumerate()
        .map(|(g, &s)| (ratio * s as f64 - quotas[g] as f64, g))
        .collect();
    order.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap_or(std::cmp::Ordering::Equal).then(a.1.cmp(&b.1)));
    for &(_, g) in order.iter().take(total - assigned) {
        quotas[g] += 1;
    }
    Ok(quotas)
}

/// Splits every batch-effect group at the requested ratio.
pub fn split_best_case(groups: &BeGroups, ratio: f64, seed: u64) -> Result<PartitionAssignment> {
    let quotas = best_case_quotas(&groups.sizes(), ratio)?;
    let mut assignment = BTreeMap::new();
    for (g, members) in groups.groups.iter().enumerate() {
        let mut shuffled = members.clone();
        shuffled.shuffle(&mut rng(derive_seed(seed, g as u64)));
        for (i, id) in shuffled.into_iter().enumerate() {
            assignment.insert(id, if i < quotas[g] { Side::Test } else { Side::Train });
        }
    }
    Ok(PartitionAssignment {
        strategy: Strategy::BestCase,
        assignment,
        seed,
        requested_ratio: ratio,
    })
}

/// Random split that ignores groups.
pub fn split_average_case(patient_ids: &[String], ratio: f64, seed: u64) -> Result<PartitionAssignment> {
    let total = global_test_count(ratio, patient_ids.len())?;
    let mut shuffled = patient_ids.to_vec();
    shuffled.shuffle(&mut rng(seed));
    let assignment = shuffled
        .into_iter()
        .enumerate()
        .map(|(i, id)| (id, if i < total { Side::Test } else { Side::Train }))
        .collect::<BTreeMap<_, _>>();
    if assignment.len() != patient_ids.len() {
        return Err(Error::InvalidGroups("duplicate patient ids".into()));
    }
    Ok(PartitionAssignment {
        strategy: Strategy::AverageCase,
        assignment,
        seed,
        requested_ratio: ratio,
    })
}

fn check_folds(n_folds: usize, n: usize) -> Result<()> {
    if n_folds < 2 {
        return Err(Error::InvalidParameter("need at least 2 folds".into()));
    }
    if n_folds > n {
        return Err(Error::InvalidParameter(format!("{n_folds} folds for {n} patients")));
    }
    Ok(())
}

/// Deals each group's shuffled members round-robin over the folds, starting
/// with the currently least-filled folds (ties in a seeded order). Each fold
/// gets within one member of every group's even share.
pub fn folds_best_case(groups: &BeGroups, n_folds: usize, seed: u64) -> Result<FoldAssignment> {
    check_folds(n_folds, groups.n_patients())?;
    let mut counts = vec![0usize; n_folds];
    let mut fold_of = BTreeMap::new();
    for (g, members) in groups.groups.iter().enumerate() {
        let mut r = rng(derive_seed(seed, g as u64));
        let mut shuffled = members.clone();
        shuffled.shuffle(&mut r);
        let tiebreak: Vec<u64> = (0..n_folds).map(|_| r.random()).collect();
        let mut order: Vec<usize> = (0..n_folds).collect();
        order.sort_by_key(|&f| (counts[f], tiebreak[f]));
        for (i, id) in shuffled.into_iter().enumerate() {
            let f = order[i % n_folds];
            counts[f] += 1;
            fold_of.insert(id, f);
        }
    }
    Ok(FoldAssignment {
        strategy: Strategy::BestCase,
        n_folds,
        fold_of,
        seed,
    })
}

/// Random folds of near-equal size that ignore groups.
pub fn folds_average_case(patient_ids: &[String], n_folds: usize, seed: u64) -> Result<FoldAssignment> {
    check_folds(n_folds, patient_ids.len())?;
    let mut shuffled = patient_ids.to_vec();
    shuffled.shuffle(&mut rng(seed));
    let fold_of = shuffled
        .into_iter()
        .enumerate()
        .map(|(i, id)| (id, i % n_folds))
        .collect();
    Ok(FoldAssignment {
        strategy: Strategy::AverageCase,
        n_folds,
        fold_of,
        seed,
    })
}

/// Group `i` becomes fold `i`, wholesale.
pub fn folds_worst_case(groups: &BeGroups, n_folds: usize) -> Result<FoldAssignment> {
    if groups.n_groups() != n_folds {
        return Err(Error::InvalidGroups(format!(
            "worst case needs exactly {n_folds} groups, found {}",
            groups.n_groups()
        )));
    }
    check_folds(n_folds, groups.n_patients())?;
    Ok(FoldAssignment {
        strategy: Strategy::WorstCase,
        n_folds,
        fold_of: groups.group_of.clone(),
        seed: 0,
    })
}

/// Per-group balance of a partition.
#[derive(Debug, Clone, PartialEq)]
pub struct GroupBalance {
    pub group: usize,
    pub size: usize,
    /// Members per label (train/test or fold).
    pub label_counts: Vec<usize>,
    /// Fraction of members on the test side (splits) or in the most
    /// populated fold (folds).
    pub test_fraction: f64,
    pub deviation: f64,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Violation {
    MissingPatient(String),
    UnknownPatient(String),
    EmptyLabel(usize),
    /// A patient's images carry different labels.
    SplitPatient(String),
    /// Image listed under a different patient than its record.
    ForeignImage { image: String, patient: String },
    /// Worst-case group whose members landed in several folds.
    GroupAcrossFolds(usize),
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::MissingPatient(p) => write!(f, "patient {p} has no assignment"),
            Self::UnknownPatient(p) => write!(f, "assignment for unknown patient {p}"),
            Self::EmptyLabel(l) => write!(f, "label {l} is empty"),
            Self::SplitPatient(p) => write!(f, "images of patient {p} carry different labels"),
            Self::ForeignImage { image, patient } => write!(f, "image {image} is not a member of patient {patient}"),
            Self::GroupAcrossFolds(g) => write!(f, "group {g} split across folds"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ValidationReport {
    pub strategy: Strategy,
    pub n_patients: usize,
    pub n_images: usize,
    pub label_sizes: Vec<usize>,
    pub groups: Vec<GroupBalance>,
    pub max_deviation: f64,
    pub groups_across_folds: usize,
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }

    /// `key=value` lines for the run log.
    pub fn summary_lines(&self) -> Vec<String> {
        let mut lines = vec![format!(
            "partition strategy={} patients={} images={} label_sizes={:?} max_group_deviation={:.6} groups_across_folds={} violations={}",
            self.strategy,
            self.n_patients,
            self.n_images,
            self.label_sizes,
            self.max_deviation,
            self.groups_across_folds,
            self.violations.len()
        )];
        lines.extend(self.violations.iter().map(|v| format!("violation: {v}")));
        lines
    }
}

/// One image-level row of an expanded partition.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ImageLabel {
    pub image_id: String,
    pub patient_id: String,
    pub label: usize,
}

/// Spreads each patient's label onto its images.
pub fn expand_to_images<T>(partition: &Partition, records: &[PatientRecord<T>]) -> Vec<ImageLabel> {
    records
        .iter()
        .filter_map(|r| partition.label_of(&r.patient_id).map(|l| (r, l)))
        .flat_map(|(r, label)| {
            r.image_ids.iter().map(move |img| ImageLabel {
                image_id: img.clone(),
                patient_id: r.patient_id.clone(),
                label,
            })
        })
        .collect()
}

/// Checks a partition against the cohort. Problems are reported, not raised.
///
/// `images` is the image-level view to audit for patient atomicity; pass
/// `None` to audit the expansion of `partition` itself.
pub fn validate_partition<T>(
    partition: &Partition,
    records: &[PatientRecord<T>],
    groups: &BeGroups,
    images: Option<&[ImageLabel]>,
) -> ValidationReport {
    let labels = partition.labels();
    let known: BTreeSet<&str> = records.iter().map(|r| r.patient_id.as_str()).collect();
    let mut violations = Vec::new();

    for r in records {
        if !labels.contains_key(r.patient_id.as_str()) {
            violations.push(Violation::MissingPatient(r.patient_id.clone()));
        }
    }
    for id in labels.keys() {
        if !known.contains(id) {
            violations.push(Violation::UnknownPatient(id.to_string()));
        }
    }
    let n_labels = partition.n_labels();
    let mut label_sizes = vec![0usize; n_labels];
    for &l in labels.values() {
        if l < n_labels {
            label_sizes[l] += 1;
        }
    }
    for (l, &s) in label_sizes.iter().enumerate() {
        if s == 0 {
            violations.push(Violation::EmptyLabel(l));
        }
    }

    let expanded;
    let images = match images {
        Some(i) => i,
        None => {
            expanded = expand_to_images(partition, records);
            &expanded
        }
    };
    let members: BTreeMap<&str, BTreeSet<&str>> = records
        .iter()
        .map(|r| (r.patient_id.as_str(), r.image_ids.iter().map(String::as_str).collect()))
        .collect();
    let mut image_labels: BTreeMap<&str, BTreeSet<usize>> = BTreeMap::new();
    for img in images {
        if !members.get(img.patient_id.as_str()).is_some_and(|m| m.contains(img.image_id.as_str())) {
            violations.push(Violation::ForeignImage {
                image: img.image_id.clone(),
                patient: img.patient_id.clone(),
            });
        }
        let set = image_labels.entry(img.patient_id.as_str()).or_default();
        set.insert(img.label);
        if let Some(&l) = labels.get(img.patient_id.as_str()) {
            set.insert(l);
        }
    }
    for (p, set) in &image_labels {
        if set.len() > 1 {
            violations.push(Violation::SplitPatient(p.to_string()));
        }
    }

    let mut balances = Vec::new();
    let mut groups_across_folds = 0;
    for (g, group_members) in groups.groups.iter().enumerate() {
        let mut counts = vec![0usize; n_labels];
        for id in group_members {
            if let Some(&l) = labels.get(id.as_str()) {
                if l < n_labels {
                    counts[l] += 1;
                }
            }
        }
        let size = group_members.len();
        let (fraction, target) = match partition {
            Partition::Split(s) => (counts[1] as f64 / size as f64, s.requested_ratio),
            Partition::Folds(f) => (
                *counts.iter().max().unwrap_or(&0) as f64 / size as f64,
                1.0 / f.n_folds as f64,
            ),
        };
        if matches!(partition, Partition::Folds(_)) && counts.iter().filter(|&&c| c > 0).count() > 1 {
            groups_across_folds += 1;
            if partition.strategy() == Strategy::WorstCase {
                violations.push(Violation::GroupAcrossFolds(g));
            }
        }
        balances.push(GroupBalance {
            group: g,
            size,
            label_counts: counts,
            test_fraction: fraction,
            deviation: (fraction - target).abs(),
        });
    }
    let max_deviation = balances.iter().map(|b| b.deviation).fold(0.0, f64::max);

    ValidationReport {
        strategy: partition.strategy(),
        n_patients: records.len(),
        n_images: images.len(),
        label_sizes,
        groups: balances,
        max_deviation,
        groups_across_folds,
        violations,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use super::Strategy;

    fn ids(n: usize) -> Vec<String> {
        (0..n).map(|i| format!("P{i:03}")).collect()
    }

    fn groups_of(sizes: &[usize]) -> BeGroups {
        let assignments: Vec<usize> = sizes.iter().enumerate().flat_map(|(g, &s)| std::iter::repeat_n(g, s)).collect();
        BeGroups::from_assignments(&ids(assignments.len()), &assignments).unwrap()
    }

    fn records(groups: &BeGroups) -> Vec<PatientRecord<f64>> {
        groups
            .group_of
            .keys()
            .map(|id| PatientRecord {
                patient_id: id.clone(),
                image_ids: vec![format!("{id}_a"), format!("{id}_b")],
                features: vec![0.0],
                thumbnail_path: None,
                label: None,
                site: None,
            })
            .collect()
    }

    fn test_counts(groups: &BeGroups, split: &PartitionAssignment) -> Vec<usize> {
        groups
            .groups
            .iter()
            .map(|m| m.iter().filter(|id| split.is_test(id) == Some(true)).count())
            .collect()
    }

    #[test]
    fn one_test_patient_per_three_patient_group() {
        let g = groups_of(&[3, 3, 3]);
        let s = split_best_case(&g, 1.0 / 3.0, 4).unwrap();
        assert_eq!(test_counts(&g, &s), vec![1, 1, 1]);
        let report = validate_partition(&Partition::Split(s), &records(&g), &g, None);
        assert_eq!(report.max_deviation, 0.0);
        assert!(report.is_valid());
    }

    #[test]
    fn single_group_of_five() {
        let g = groups_of(&[5]);
        let s = split_best_case(&g, 0.2, 1).unwrap();
        assert_eq!((s.n_test(), s.n_train()), (1, 4));
    }

    /// Exhaustive oracle: among all per-group test counts that hit the global
    /// total, the largest-remainder quotas minimize the worst deviation.
    #[test]
    fn remainder_goes_to_singleton() {
        let sizes = [2usize, 1];
        let quotas = best_case_quotas(&sizes, 0.5).unwrap();
        assert_eq!(quotas, vec![1, 1]);
        let total = (0.5f64 * 3.0).round() as usize;
        let dev = |q: &[usize]| {
            q.iter().zip(&sizes).map(|(&t, &s)| (t as f64 / s as f64 - 0.5).abs()).fold(0.0, f64::max)
        };
        let best = (0..=2)
            .flat_map(|a| (0..=1).map(move |b| vec![a, b]))
            .filter(|q| q.iter().sum::<usize>() == total)
            .map(|q| dev(&q))
            .fold(f64::INFINITY, f64::min);
        assert_eq!(dev(&quotas), best);
    }

    #[test]
    fn degenerate_ratios_rejected() {
        let g = groups_of(&[2]);
        assert!(matches!(split_best_case(&g, 0.1, 0), Err(Error::DegeneratePartition(_))));
        assert!(matches!(split_best_case(&g, 0.9, 0), Err(Error::DegeneratePartition(_))));
        assert!(split_best_case(&g, 1.5, 0).is_err());
        assert!(split_average_case(&ids(4), 0.0, 0).is_err());
    }

    #[test]
    fn average_case_counts_and_determinism() {
        let s = split_average_case(&ids(10), 0.3, 8).unwrap();
        assert_eq!((s.n_test(), s.n_train()), (3, 7));
        assert_eq!(s, split_average_case(&ids(10), 0.3, 8).unwrap());
        assert_eq!(s.strategy, Strategy::AverageCase);
    }

    #[test]
    fn average_case_varies_per_group_where_best_case_does_not() {
        let g = groups_of(&[30, 30, 30]);
        let all = ids(90);
        let (mut ac, mut bc) = (Vec::new(), Vec::new());
        for seed in 0..200 {
            let a = split_average_case(&all, 1.0 / 3.0, seed).unwrap();
            let b = split_best_case(&g, 1.0 / 3.0, seed).unwrap();
            ac.push(test_counts(&g, &a)[0] as f64 / 30.0);
            bc.push(test_counts(&g, &b)[0] as f64 / 30.0);
        }
        let var = |v: &[f64]| {
            let m = v.iter().sum::<f64>() / v.len() as f64;
            v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / v.len() as f64
        };
        assert!(var(&ac) > 0.0);
        assert!(bc.iter().all(|&f| f == bc[0]));
    }

    #[test]
    fn best_case_folds_take_one_per_triplet() {
        let mut sizes = vec![3; 30];
        sizes.push(1);
        let g = groups_of(&sizes);
        let f = folds_best_case(&g, 3, 2).unwrap();
        for members in g.groups.iter().filter(|m| m.len() == 3) {
            let mut folds: Vec<usize> = members.iter().map(|id| f.fold_of[id]).collect();
            folds.sort_unstable();
            assert_eq!(folds, vec![0, 1, 2]);
        }
        assert_eq!(f.fold_sizes().iter().sum::<usize>(), 91);
    }

    #[test]
    fn group_of_four_over_three_folds() {
        let g = groups_of(&[4]);
        let f = folds_best_case(&g, 3, 6).unwrap();
        let mut sizes = f.fold_sizes();
        sizes.sort_unstable();
        assert_eq!(sizes, vec![1, 1, 2]);
    }

    #[test]
    fn singleton_groups_one_per_fold() {
        let g = groups_of(&[1; 5]);
        let f = folds_best_case(&g, 5, 0).unwrap();
        assert_eq!(f.fold_sizes(), vec![1; 5]);
        assert!(folds_best_case(&g, 6, 0).is_err());
        assert!(folds_best_case(&g, 1, 0).is_err());
    }

    #[test]
    fn worst_case_is_wholesale() {
        let g = groups_of(&[31, 30, 30]);
        let f = folds_worst_case(&g, 3).unwrap();
        assert_eq!(f.fold_sizes(), vec![31, 30, 30]);
        let report = validate_partition(&Partition::Folds(f), &records(&g), &g, None);
        assert_eq!(report.groups_across_folds, 0);
        assert!(report.is_valid());
        assert!(folds_worst_case(&groups_of(&[4, 4]), 3).is_err());
    }

    #[test]
    fn missing_patient_flagged() {
        let g = groups_of(&[3, 3]);
        let mut s = split_best_case(&g, 0.5, 0).unwrap();
        s.assignment.remove("P000");
        let report = validate_partition(&Partition::Split(s), &records(&g), &g, None);
        assert!(report.violations.contains(&Violation::MissingPatient("P000".into())));
    }

    #[test]
    fn image_level_split_patient_flagged() {
        let g = groups_of(&[2, 2]);
        let recs = records(&g);
        let part = Partition::Split(split_best_case(&g, 0.5, 0).unwrap());
        let mut images = expand_to_images(&part, &recs);
        assert_eq!(images.len(), 8);
        images[0].label = 1 - images[0].label;
        let report = validate_partition(&part, &recs, &g, Some(&images));
        assert!(matches!(report.violations[0], Violation::SplitPatient(_)));
    }

    #[test]
    fn groups_reject_bad_input() {
        assert!(BeGroups::from_assignments(&ids(3), &[0, 2, 2]).is_err());
        assert!(BeGroups::from_assignments(&ids(3), &[0, 1]).is_err());
        let dup = vec!["a".to_string(), "a".to_string()];
        assert!(BeGroups::from_assignments(&dup, &[0, 0]).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(256))]
        #[test]
        fn best_case_bounds(sizes in prop::collection::vec(1usize..12, 1..15), ratio in 0.05f64..0.95, seed in any::<u64>()) {
            let g = groups_of(&sizes);
            let n = g.n_patients();
            let t = (ratio * n as f64).round() as usize;
            prop_assume!(t > 0 && t < n);
            let s = split_best_case(&g, ratio, seed).unwrap();
            prop_assert_eq!(s.assignment.len(), n);
            prop_assert_eq!(s.n_test(), t);
            for (count, size) in test_counts(&g, &s).into_iter().zip(&sizes) {
                prop_assert!((count as f64 / *size as f64 - ratio).abs() <= 1.0 / *size as f64 + 1e-12);
            }
            prop_assert_eq!(split_best_case(&g, ratio, seed).unwrap(), s);
        }

        #[test]
        fn best_case_folds_balance(sizes in prop::collection::vec(1usize..10, 1..12), n_folds in 2usize..5, seed in any::<u64>()) {
            let g = groups_of(&sizes);
            prop_assume!(n_folds <= g.n_patients());
            let f = folds_best_case(&g, n_folds, seed).unwrap();
            prop_assert_eq!(f.fold_of.len(), g.n_patients());
            let fs = f.fold_sizes();
            prop_assert!(fs.iter().all(|&s| s > 0));
            prop_assert!(fs.iter().max().unwrap() - fs.iter().min().unwrap() <= g.n_groups());
            for members in &g.groups {
                let mut counts = vec![0usize; n_folds];
                members.iter().for_each(|id| counts[f.fold_of[id]] += 1);
                let lo = members.len() / n_folds;
                prop_assert!(counts.iter().all(|&c| c == lo || c == lo + 1));
            }
        }
    }
}

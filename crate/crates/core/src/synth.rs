//! Synthetic multi-site cohorts with a controllable site shift, plus the
//! scores used to judge how well groups are recovered and how evenly a
//! partition spreads them.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;

use rand::seq::SliceRandom;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::ingest::PatientRecord;
use crate::partition::PartitionAssignment;
use crate::report::write_atomic;
use crate::seed::{derive_seed, rng};

/// Sub-stream indices of the master seed.
const MEANS_STREAM: u64 = 1;
const PATIENT_STREAM: u64 = 2;
const LABEL_STREAM: u64 = 3;

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticCohortSpec {
    pub n_sites: usize,
    /// Patients per site; a single entry is reused for every site.
    pub patients_per_site: Vec<usize>,
    pub n_metrics: usize,
    /// Minimum distance between site means, in within-site standard deviations.
    pub site_separation: f64,
    /// Label each patient with its site name instead of a random A/B label.
    pub confound_label: bool,
    pub seed: u64,
    /// Only the first `m` metrics carry the site shift; the rest are pure
    /// noise. `None` shifts every metric.
    pub informative_metrics: Option<usize>,
}

impl SyntheticCohortSpec {
    pub fn new(n_sites: usize, patients_per_site: usize, n_metrics: usize, site_separation: f64, seed: u64) -> Self {
        Self {
            n_sites,
            patients_per_site: vec![patients_per_site],
            n_metrics,
            site_separation,
            confound_label: false,
            seed,
            informative_metrics: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_sites == 0 || self.n_metrics == 0 {
            return Err(Error::InvalidParameter("need at least one site and one metric".into()));
        }
        if self.patients_per_site.is_empty() || self.patients_per_site.iter().any(|&n| n == 0) {
            return Err(Error::InvalidParameter("every site needs at least one patient".into()));
        }
        if self.patients_per_site.len() != 1 && self.patients_per_site.len() != self.n_sites {
            return Err(Error::LengthMismatch {
                left: self.patients_per_site.len(),
                right: self.n_sites,
            });
        }
        if !(self.site_separation >= 0.0 && self.site_separation.is_finite()) {
            return Err(Error::InvalidParameter("site separation must be finite and >= 0".into()));
        }
        if matches!(self.informative_metrics, Some(m) if m == 0 || m > self.n_metrics) {
            return Err(Error::InvalidParameter("informative metrics must be in 1..=n_metrics".into()));
        }
        Ok(())
    }

    fn site_size(&self, site: usize) -> usize {
        self.patients_per_site[site.min(self.patients_per_site.len() - 1)]
    }

    pub fn n_patients(&self) -> usize {
        (0..self.n_sites).map(|s| self.site_size(s)).sum()
    }

    pub fn metric_names(&self) -> Vec<String> {
        let width = self.n_metrics.saturating_sub(1).to_string().len();
        (0..self.n_metrics).map(|j| format!("metric{j:0width$}")).collect()
    }
}

/// Site means in the informative subspace.
///
/// Every informative metric gets the same evenly spaced site levels
/// `0, s, 2s, ...` with `s = separation / sqrt(m)`, in an independently
/// shuffled order. Any two sites then differ by at least `s` in each of the
/// `m` metrics, so they are at least `separation` apart, and every metric
/// carries the same between-site variance (z-scoring cannot favor one).
fn site_means(spec: &SyntheticCohortSpec) -> Vec<Vec<f64>> {
    let dims = spec.informative_metrics.unwrap_or(spec.n_metrics);
    let step = spec.site_separation / (dims as f64).sqrt();
    let mut r = rng(derive_seed(spec.seed, MEANS_STREAM));
    let mut means = vec![vec![0.0; dims]; spec.n_sites];
    for j in 0..dims {
        let mut levels: Vec<usize> = (0..spec.n_sites).collect();
        levels.shuffle(&mut r);
        for (site, level) in levels.into_iter().enumerate() {
            means[site][j] = level as f64 * step;
        }
    }
    means
}

/// Draws the cohort. Returns the records (site order, ids `P0001`, ...) and
/// the true site index of each record.
pub fn generate_synthetic_cohort(spec: &SyntheticCohortSpec) -> Result<(Vec<PatientRecord<f64>>, Vec<usize>)> {
    spec.validate()?;
    let means = site_means(spec);
    let mut r = rng(derive_seed(spec.seed, PATIENT_STREAM));
    let n = spec.n_patients();
    let width = n.to_string().len().max(4);

    let mut labels: Vec<String> = (0..n).map(|i| if i % 2 == 0 { "A" } else { "B" }.to_string()).collect();
    labels.shuffle(&mut rng(derive_seed(spec.seed, LABEL_STREAM)));

    let mut records = Vec::with_capacity(n);
    let mut truth = Vec::with_capacity(n);
    for (site, mean) in means.iter().enumerate() {
        for _ in 0..spec.site_size(site) {
            let i = records.len();
            let id = format!("P{:0width$}", i + 1);
            let features = (0..spec.n_metrics)
                .map(|j| {
                    let z: f64 = StandardNormal.sample(&mut r);
                    mean.get(j).copied().unwrap_or(0.0) + z
                })
                .collect();
            let site_name = format!("site{site}");
            records.push(PatientRecord {
                image_ids: vec![id.clone()],
                thumbnail_path: Some(format!("thumbs/{id}.png")),
                label: Some(if spec.confound_label { site_name.clone() } else { labels[i].clone() }),
                site: Some(site_name),
                features,
                patient_id: id,
            });
            truth.push(site);
        }
    }
    Ok((records, truth))
}

/// Writes records as a delimited metric table with columns
/// `image_id, patient_id, site, label, thumbnail, <metrics...>`.
///
/// With `images_per_patient > 1` each patient gets that many image rows
/// (`<id>_img<k>`) carrying identical values, so the patient mean is exact.
pub fn write_synthetic_table(
    records: &[PatientRecord<f64>],
    metric_names: &[String],
    path: &Path,
    delimiter: u8,
    images_per_patient: usize,
) -> Result<()> {
    if images_per_patient == 0 {
        return Err(Error::InvalidParameter("images_per_patient must be >= 1".into()));
    }
    let sep = char::from(delimiter);
    let mut out = Vec::new();
    let header: Vec<&str> = ["image_id", "patient_id", "site", "label", "thumbnail"]
        .into_iter()
        .chain(metric_names.iter().map(String::as_str))
        .collect();
    writeln!(out, "{}", header.join(&sep.to_string())).expect("write to memory");
    for rec in records {
        if rec.features.len() != metric_names.len() {
            return Err(Error::LengthMismatch {
                left: rec.features.len(),
                right: metric_names.len(),
            });
        }
        for k in 0..images_per_patient {
            let image_id = if images_per_patient == 1 {
                rec.patient_id.clone()
            } else {
                format!("{}_img{k}", rec.patient_id)
            };
            let mut fields = vec![
                image_id,
                rec.patient_id.clone(),
                rec.site.clone().unwrap_or_default(),
                rec.label.clone().unwrap_or_default(),
                rec.thumbnail_path.clone().unwrap_or_default(),
            ];
            fields.extend(rec.features.iter().map(|v| v.to_string()));
            writeln!(out, "{}", fields.join(&sep.to_string())).expect("write to memory");
        }
    }
    write_atomic(path, &out)
}

fn pairs(n: u64) -> f64 {
    (n * n.saturating_sub(1) / 2) as f64
}

/// Chance-corrected pair-counting agreement between two labelings.
pub fn adjusted_rand_index(a: &[usize], b: &[usize]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::LengthMismatch {
            left: a.len(),
            right: b.len(),
        });
    }
    let mut table: BTreeMap<(usize, usize), u64> = BTreeMap::new();
    let mut rows: BTreeMap<usize, u64> = BTreeMap::new();
    let mut cols: BTreeMap<usize, u64> = BTreeMap::new();
    for (&x, &y) in a.iter().zip(b) {
        *table.entry((x, y)).or_default() += 1;
        *rows.entry(x).or_default() += 1;
        *cols.entry(y).or_default() += 1;
    }
    let index: f64 = table.values().map(|&n| pairs(n)).sum();
    let sum_a: f64 = rows.values().map(|&n| pairs(n)).sum();
    let sum_b: f64 = cols.values().map(|&n| pairs(n)).sum();
    let total = pairs(a.len() as u64);
    let expected = if total > 0.0 { sum_a * sum_b / total } else { 0.0 };
    let max_index = (sum_a + sum_b) / 2.0;
    if max_index == expected {
        // Both labelings trivial (one cluster, or all singletons): perfect agreement.
        return Ok(1.0);
    }
    Ok((index - expected) / (max_index - expected))
}

#[derive(Debug, Clone, PartialEq)]
pub struct BalanceReport {
    /// Test fraction of each site, indexed by site.
    pub test_fractions: Vec<f64>,
    pub max_deviation: f64,
}

/// Per-site test fractions of a split and the largest deviation from `ratio`.
pub fn partition_balance_report(
    assignment: &PartitionAssignment,
    patient_ids: &[String],
    sites: &[usize],
    ratio: f64,
) -> Result<BalanceReport> {
    if patient_ids.len() != sites.len() {
        return Err(Error::LengthMismatch {
            left: patient_ids.len(),
            right: sites.len(),
        });
    }
    let n_sites = sites.iter().max().map_or(0, |&s| s + 1);
    let mut tests = vec![0usize; n_sites];
    let mut totals = vec![0usize; n_sites];
    for (id, &s) in patient_ids.iter().zip(sites) {
        let is_test = assignment
            .is_test(id)
            .ok_or_else(|| Error::InvalidGroups(format!("patient {id:?} has no assignment")))?;
        totals[s] += 1;
        tests[s] += usize::from(is_test);
    }
    let test_fractions: Vec<f64> = tests
        .iter()
        .zip(&totals)
        .map(|(&t, &n)| if n == 0 { 0.0 } else { t as f64 / n as f64 })
        .collect();
    let max_deviation = test_fractions
        .iter()
        .zip(&totals)
        .filter(|(_, &n)| n > 0)
        .map(|(f, _)| (f - ratio).abs())
        .fold(0.0, f64::max);
    Ok(BalanceReport {
        test_fractions,
        max_deviation,
    })
}

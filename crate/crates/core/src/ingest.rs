//! Loading QC-metric tables and reducing them to one standardized feature
//! vector per patient.
//!
//! Input files are delimited text (tab by default). Lines starting with `#`
//! are metadata and skipped; the first remaining line is the header and the
//! first column holds the image identifier.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::path::{Path, PathBuf};

use ndarray::Array2;
use regex::Regex;

use crate::embedding::FeatureMatrix;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

const MISSING_TOKENS: &[&str] = &["", "nan", "na", "n/a", "none", "null"];

/// One row of a metric table.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricRow {
    pub image_id: String,
    /// Raw text of every cell, including the id column.
    pub cells: Vec<String>,
    /// Parsed numeric value of every cell; `None` when missing or non-numeric.
    pub values: Vec<Option<f64>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MetricTable {
    pub column_names: Vec<String>,
    pub rows: Vec<MetricRow>,
    /// Whether each column parses as numeric (every non-missing cell is a number).
    pub numeric: Vec<bool>,
    pub delimiter: u8,
    pub source_path: PathBuf,
}

impl MetricTable {
    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.column_names.iter().position(|c| c == name)
    }

    fn require_column(&self, name: &str) -> Result<usize> {
        self.column_index(name)
            .ok_or_else(|| Error::UnknownColumn(name.to_string()))
    }

    /// Name of the image identifier column (always the first).
    pub fn id_column(&self) -> &str {
        &self.column_names[0]
    }
}

fn parse_cell(raw: &str) -> Option<f64> {
    let t = raw.trim();
    if MISSING_TOKENS.contains(&t.to_ascii_lowercase().as_str()) {
        return None;
    }
    t.parse::<f64>().ok().filter(|v| v.is_finite())
}

fn is_missing_token(raw: &str) -> bool {
    MISSING_TOKENS.contains(&raw.trim().to_ascii_lowercase().as_str())
}

/// Reads a delimited metric table.
pub fn load_metrics_table(path: impl AsRef<Path>, delimiter: u8) -> Result<MetricTable> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_metrics_table(&text, delimiter, path)
}

pub fn parse_metrics_table(text: &str, delimiter: u8, source: &Path) -> Result<MetricTable> {
    let mut reader = csv::ReaderBuilder::new()
        .delimiter(delimiter)
        .comment(Some(b'#'))
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());

    let mut header: Option<Vec<String>> = None;
    let mut rows = Vec::new();
    let mut seen = HashSet::new();
    for record in reader.records() {
        let record = record.map_err(|e| Error::Io {
            path: source.to_path_buf(),
            source: std::io::Error::new(std::io::ErrorKind::InvalidData, e),
        })?;
        let line = record.position().map_or(0, |p| p.line() as usize);
        if record.iter().all(str::is_empty) {
            continue;
        }
        let Some(columns) = &header else {
            header = Some(record.iter().map(str::to_string).collect());
            continue;
        };
        if record.len() != columns.len() {
            return Err(Error::WidthMismatch {
                path: source.to_path_buf(),
                line,
                expected: columns.len(),
                found: record.len(),
            });
        }
        let cells: Vec<String> = record.iter().map(str::to_string).collect();
        let image_id = cells[0].clone();
        if !seen.insert(image_id.clone()) {
            return Err(Error::DuplicateImage(image_id));
        }
        let values = cells.iter().map(|c| parse_cell(c)).collect();
        rows.push(MetricRow {
            image_id,
            cells,
            values,
        });
    }
    let column_names = header.ok_or_else(|| Error::MissingHeader {
        path: source.to_path_buf(),
    })?;

    let numeric = (0..column_names.len())
        .map(|j| {
            j > 0
                && rows.iter().any(|r: &MetricRow| r.values[j].is_some())
                && rows
                    .iter()
                    .all(|r| r.values[j].is_some() || is_missing_token(&r.cells[j]))
        })
        .collect();

    Ok(MetricTable {
        column_names,
        rows,
        numeric,
        delimiter,
        source_path: source.to_path_buf(),
    })
}

/// How an image row is mapped to its patient.
#[derive(Debug, Clone)]
pub enum PatientIdRule {
    /// Every image is its own patient.
    PerImage,
    /// Patient id read from a named column.
    Column(String),
    /// First capture group of a pattern applied to the image id.
    FilenameRegex(Regex),
}

impl PatientIdRule {
    pub fn regex(pattern: &str) -> Result<Self> {
        let re = Regex::new(pattern)
            .map_err(|e| Error::InvalidParameter(format!("patient id pattern: {e}")))?;
        if re.captures_len() != 2 {
            return Err(Error::InvalidParameter(format!(
                "patient id pattern {pattern:?} must have exactly one capture group"
            )));
        }
        Ok(Self::FilenameRegex(re))
    }

    fn column(&self) -> Option<&str> {
        match self {
            Self::Column(c) => Some(c),
            _ => None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct CohortConfig {
    pub test_ratio: f64,
    pub n_clusters: Option<usize>,
    pub seed: u64,
    pub included_columns: Option<Vec<String>>,
    pub excluded_columns: Vec<String>,
    pub patient_id_rule: PatientIdRule,
    pub label_column: Option<String>,
    pub site_column: Option<String>,
    pub thumbnail_column: Option<String>,
    pub output_dir: PathBuf,
    /// Median-impute patient features with no observed value.
    pub impute: bool,
}

impl Default for CohortConfig {
    fn default() -> Self {
        Self {
            test_ratio: 0.2,
            n_clusters: None,
            seed: 42,
            included_columns: None,
            excluded_columns: Vec::new(),
            patient_id_rule: PatientIdRule::PerImage,
            label_column: None,
            site_column: None,
            thumbnail_column: None,
            output_dir: PathBuf::from("."),
            impute: true,
        }
    }
}

impl CohortConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.test_ratio > 0.0 && self.test_ratio < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "test ratio {} outside (0, 1)",
                self.test_ratio
            )));
        }
        if self.n_clusters == Some(0) {
            return Err(Error::InvalidParameter("cluster count must be >= 1".into()));
        }
        if let Some(included) = &self.included_columns {
            if let Some(c) = included.iter().find(|c| self.excluded_columns.contains(c)) {
                return Err(Error::OverlappingColumns(c.clone()));
            }
        }
        Ok(())
    }

    /// Columns holding identifiers or annotations, never features.
    fn reserved_columns(&self) -> Vec<&str> {
        [
            self.patient_id_rule.column(),
            self.label_column.as_deref(),
            self.site_column.as_deref(),
            self.thumbnail_column.as_deref(),
        ]
        .into_iter()
        .flatten()
        .collect()
    }
}

/// Outcome of feature selection, kept for the run log.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct FeatureSelection {
    pub selected: Vec<String>,
    pub excluded: Vec<String>,
    pub non_numeric: Vec<String>,
    pub constant: Vec<String>,
}

/// Chooses the metric columns used as features.
///
/// Starts from the explicit inclusion list (or every column), removes
/// excluded, reserved and non-numeric columns, then drops columns that are
/// constant across patients.
pub fn select_feature_columns(table: &MetricTable, config: &CohortConfig) -> Result<FeatureSelection> {
    config.validate()?;
    let reserved = config.reserved_columns();
    for c in &reserved {
        table.require_column(c)?;
    }
    let candidates: Vec<String> = match &config.included_columns {
        Some(included) => {
            for c in included {
                table.require_column(c)?;
            }
            included.clone()
        }
        None => table.column_names[1..].to_vec(),
    };

    let mut selection = FeatureSelection::default();
    let mut numeric = Vec::new();
    for name in candidates {
        let idx = table.require_column(&name)?;
        if config.excluded_columns.contains(&name) || reserved.contains(&name.as_str()) || idx == 0 {
            selection.excluded.push(name);
        } else if !table.numeric[idx] {
            selection.non_numeric.push(name);
        } else {
            numeric.push(name);
        }
    }

    let patients = aggregate_to_patients::<f64>(table, &numeric, config)?;
    for (j, name) in numeric.into_iter().enumerate() {
        let observed = patients.iter().filter_map(|p| p.features[j]);
        let (lo, hi) = observed.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| {
            (lo.min(v), hi.max(v))
        });
        if lo < hi {
            selection.selected.push(name);
        } else {
            selection.constant.push(name);
        }
    }
    if selection.selected.is_empty() {
        return Err(Error::NoUsableFeatures);
    }
    Ok(selection)
}

/// Patient-level features before imputation.
#[derive(Debug, Clone, PartialEq)]
pub struct RawPatient<T> {
    pub patient_id: String,
    pub image_ids: Vec<String>,
    pub features: Vec<Option<T>>,
    pub thumbnail_path: Option<String>,
    pub label: Option<String>,
    pub site: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PatientRecord<T> {
    pub patient_id: String,
    /// Member image ids, sorted.
    pub image_ids: Vec<String>,
    pub features: Vec<T>,
    pub thumbnail_path: Option<String>,
    pub label: Option<String>,
    pub site: Option<String>,
}

fn derive_patient_id(table: &MetricTable, row: &MetricRow, rule: &PatientIdRule) -> Result<String> {
    let id = match rule {
        PatientIdRule::PerImage => row.image_id.clone(),
        PatientIdRule::Column(c) => row.cells[table.require_column(c)?].clone(),
        PatientIdRule::FilenameRegex(re) => re
            .captures(&row.image_id)
            .and_then(|caps| caps.get(1))
            .map(|m| m.as_str().to_string())
            .ok_or_else(|| Error::PatientIdUnmatched(row.image_id.clone()))?,
    };
    if id.is_empty() {
        return Err(Error::EmptyPatientId(row.image_id.clone()));
    }
    Ok(id)
}

/// Reduces image rows to one record per patient, averaging each feature
/// over the patient's non-missing image values. Patients appear in order of
/// first occurrence; within a patient, images are summed in id order so the
/// result does not depend on row order.
pub fn aggregate_to_patients<T: Scalar>(
    table: &MetricTable,
    cols: &[String],
    config: &CohortConfig,
) -> Result<Vec<RawPatient<T>>> {
    let col_idx = cols
        .iter()
        .map(|c| table.require_column(c))
        .collect::<Result<Vec<_>>>()?;
    let text_col = |name: &Option<String>| -> Result<Option<usize>> {
        name.as_deref().map(|c| table.require_column(c)).transpose()
    };
    let label_idx = text_col(&config.label_column)?;
    let site_idx = text_col(&config.site_column)?;
    let thumb_idx = text_col(&config.thumbnail_column)?;

    let mut order: Vec<String> = Vec::new();
    let mut members: HashMap<String, Vec<&MetricRow>> = HashMap::new();
    for row in &table.rows {
        let pid = derive_patient_id(table, row, &config.patient_id_rule)?;
        members
            .entry(pid.clone())
            .or_insert_with(|| {
                order.push(pid);
                Vec::new()
            })
            .push(row);
    }

    let first_text = |rows: &[&MetricRow], idx: Option<usize>| -> Option<String> {
        let idx = idx?;
        rows.iter()
            .map(|r| r.cells[idx].trim())
            .find(|c| !is_missing_token(c))
            .map(str::to_string)
    };

    Ok(order
        .into_iter()
        .map(|pid| {
            let mut rows = members.remove(&pid).unwrap_or_default();
            rows.sort_by(|a, b| a.image_id.cmp(&b.image_id));
            let features = col_idx
                .iter()
                .map(|&j| {
                    let (sum, n) = rows
                        .iter()
                        .filter_map(|r| r.values[j])
                        .fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
                    (n > 0).then(|| T::c(sum / n as f64))
                })
                .collect();
            RawPatient {
                image_ids: rows.iter().map(|r| r.image_id.clone()).collect(),
                features,
                thumbnail_path: first_text(&rows, thumb_idx),
                label: first_text(&rows, label_idx),
                site: first_text(&rows, site_idx),
                patient_id: pid,
            }
        })
        .collect())
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ImputationSummary {
    /// Total number of imputed patient features.
    pub count: usize,
    /// `(feature, imputed count, median used)` for every feature touched.
    pub per_feature: Vec<(String, usize, f64)>,
}

fn median<T: Scalar>(values: &mut [T]) -> T {
    values.sort_by(|a, b| a.partial_cmp(b).expect("finite feature values"));
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2]
    } else {
        (values[n / 2 - 1] + values[n / 2]) / T::c(2.0)
    }
}

fn into_record<T>(raw: RawPatient<T>, features: Vec<T>) -> PatientRecord<T> {
    PatientRecord {
        patient_id: raw.patient_id,
        image_ids: raw.image_ids,
        features,
        thumbnail_path: raw.thumbnail_path,
        label: raw.label,
        site: raw.site,
    }
}

/// Fills patient features that have no observed value with the cohort median.
pub fn impute_missing<T: Scalar>(
    raw: Vec<RawPatient<T>>,
    feature_names: &[String],
) -> Result<(Vec<PatientRecord<T>>, ImputationSummary)> {
    let mut summary = ImputationSummary::default();
    let mut medians = Vec::with_capacity(feature_names.len());
    for (j, name) in feature_names.iter().enumerate() {
        let mut observed: Vec<T> = raw.iter().filter_map(|p| p.features[j]).collect();
        let missing = raw.len() - observed.len();
        if observed.is_empty() {
            return Err(Error::FeatureAllMissing(name.clone()));
        }
        let m = median(&mut observed);
        if missing > 0 {
            summary.count += missing;
            summary.per_feature.push((name.clone(), missing, m.as_f64()));
        }
        medians.push(m);
    }
    let records = raw
        .into_iter()
        .map(|p| {
            let features = p
                .features
                .iter()
                .zip(&medians)
                .map(|(v, m)| v.unwrap_or(*m))
                .collect();
            into_record(p, features)
        })
        .collect();
    Ok((records, summary))
}

/// Converts raw patients without imputation, failing on the first gap.
pub fn complete_records<T: Scalar>(
    raw: Vec<RawPatient<T>>,
    feature_names: &[String],
) -> Result<Vec<PatientRecord<T>>> {
    raw.into_iter()
        .map(|p| {
            let features = p
                .features
                .iter()
                .enumerate()
                .map(|(j, v)| {
                    v.ok_or_else(|| Error::MissingValue {
                        patient: p.patient_id.clone(),
                        feature: feature_names[j].clone(),
                    })
                })
                .collect::<Result<Vec<T>>>()?;
            Ok(into_record(p, features))
        })
        .collect()
}

/// Per-feature z-score parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct Standardization<T> {
    pub feature_names: Vec<String>,
    pub means: Vec<T>,
    pub sds: Vec<T>,
}

/// Z-scores every feature with the cohort mean and sample standard deviation.
pub fn standardize_features<T: Scalar>(
    records: &[PatientRecord<T>],
    feature_names: &[String],
) -> Result<(FeatureMatrix<T>, Standardization<T>)> {
    let n = records.len();
    if n < 2 {
        return Err(Error::TooFewPatients { needed: 2, found: n });
    }
    let d = feature_names.len();
    let mut values = Array2::<T>::zeros((n, d));
    for (i, r) in records.iter().enumerate() {
        if r.features.len() != d {
            return Err(Error::LengthMismatch {
                left: r.features.len(),
                right: d,
            });
        }
        for (j, v) in r.features.iter().enumerate() {
            if !v.is_finite() {
                return Err(Error::NonFinite(format!(
                    "{} / {}",
                    r.patient_id, feature_names[j]
                )));
            }
            values[[i, j]] = *v;
        }
    }
    let nt = T::from_usize_lossy(n);
    let mut means = Vec::with_capacity(d);
    let mut sds = Vec::with_capacity(d);
    for (j, name) in feature_names.iter().enumerate() {
        let mut col = values.column_mut(j);
        let mean = col.iter().copied().sum::<T>() / nt;
        let ss = col.iter().map(|&v| (v - mean) * (v - mean)).sum::<T>();
        let sd = (ss / (nt - T::one())).sqrt();
        if !(sd > T::zero()) {
            return Err(Error::ZeroVariance(name.clone()));
        }
        col.mapv_inplace(|v| (v - mean) / sd);
        means.push(mean);
        sds.push(sd);
    }
    let matrix = FeatureMatrix::new(
        values,
        records.iter().map(|r| r.patient_id.clone()).collect(),
        feature_names.to_vec(),
    )?;
    Ok((
        matrix,
        Standardization {
            feature_names: feature_names.to_vec(),
            means,
            sds,
        },
    ))
}

/// Counts image rows per patient, for the run log.
pub fn images_per_patient<T>(records: &[PatientRecord<T>]) -> BTreeMap<usize, usize> {
    let mut hist = BTreeMap::new();
    for r in records {
        *hist.entry(r.image_ids.len()).or_insert(0) += 1;
    }
    hist
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;
    use rand::seq::SliceRandom;

    fn table(text: &str) -> MetricTable {
        parse_metrics_table(text, b'\t', Path::new("mem.tsv")).unwrap()
    }

    fn cols(names: &[&str]) -> Vec<String> {
        names.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn parses_header_and_rows() {
        let t = table("filename\ta\tb\tc\td\nx1\t1\t2\t3\t4\nx2\t5\t6\t7\t8\n");
        assert_eq!(t.rows.len(), 2);
        assert_eq!(t.column_names, cols(&["filename", "a", "b", "c", "d"]));
        assert_eq!(t.numeric, vec![false, true, true, true, true]);
        assert_eq!(t.rows[1].values[3], Some(7.0));
    }

    #[test]
    fn skips_comment_preamble() {
        let t = table("#dataset:foo\n#dataset:bar\nfilename\ta\nx1\t1\n");
        assert_eq!(t.column_names, cols(&["filename", "a"]));
        assert_eq!(t.rows.len(), 1);
    }

    #[test]
    fn nan_cell_is_missing_and_row_kept() {
        let t = table("filename\ta\tb\nx1\tNaN\t2\nx2\t3\t4\n");
        assert_eq!(t.rows.len(), 2);
        assert_eq!(t.rows[0].values[1], None);
        assert!(t.numeric[1]);
    }

    #[test]
    fn width_mismatch_and_duplicates_are_errors() {
        let err = parse_metrics_table("f\ta\nx\t1\t2\n", b'\t', Path::new("m")).unwrap_err();
        assert!(matches!(err, Error::WidthMismatch { line: 2, expected: 2, found: 3, .. }));
        let err = parse_metrics_table("f\ta\nx\t1\nx\t2\n", b'\t', Path::new("m")).unwrap_err();
        assert!(matches!(err, Error::DuplicateImage(id) if id == "x"));
        let err = load_metrics_table("/nonexistent/metrics.tsv", b'\t').unwrap_err();
        assert!(matches!(err, Error::Io { .. }));
    }

    #[test]
    fn text_columns_are_not_numeric() {
        let t = table("filename\tcomment\ta\nx1\tblurry\t1\nx2\t\t2\n");
        assert!(!t.numeric[1]);
    }

    #[test]
    fn selection_drops_excluded_and_constant() {
        let t = table(
            "filename\tname\ta\tb\tc\tk\nx1\tp\t1\t2\t3\t7\nx2\tq\t2\t3\t1\t7\nx3\tr\t5\t1\t1\t7\n",
        );
        let config = CohortConfig {
            excluded_columns: cols(&["name"]),
            ..Default::default()
        };
        let s = select_feature_columns(&t, &config).unwrap();
        assert_eq!(s.selected, cols(&["a", "b", "c"]));
        assert_eq!(s.constant, cols(&["k"]));
        assert_eq!(s.excluded, cols(&["name"]));
    }

    #[test]
    fn five_numeric_columns_one_constant_and_excluded_filename() {
        let t = table(
            "image\tfilename\tm1\tm2\tm3\tm4\tm5\n\
             i1\tf1\t1\t2\t3\t4\t9\n\
             i2\tf2\t2\t1\t5\t3\t9\n",
        );
        let config = CohortConfig {
            excluded_columns: cols(&["filename"]),
            ..Default::default()
        };
        let s = select_feature_columns(&t, &config).unwrap();
        assert_eq!(s.selected.len(), 4);
    }

    #[test]
    fn explicit_inclusion_preserves_order() {
        let t = table("filename\tcontrast\tbrightness\tx\nx1\t1\t2\t3\nx2\t2\t3\t4\n");
        let config = CohortConfig {
            included_columns: Some(cols(&["brightness", "contrast"])),
            ..Default::default()
        };
        let s = select_feature_columns(&t, &config).unwrap();
        assert_eq!(s.selected, cols(&["brightness", "contrast"]));
    }

    #[test]
    fn all_constant_is_an_error() {
        let t = table("filename\ta\tb\nx1\t1\t2\nx2\t1\t2\n");
        let err = select_feature_columns(&t, &CohortConfig::default()).unwrap_err();
        assert!(matches!(err, Error::NoUsableFeatures));
        assert_eq!(err.to_string(), "no usable features");
    }

    #[test]
    fn overlapping_include_exclude_rejected() {
        let config = CohortConfig {
            included_columns: Some(cols(&["a"])),
            excluded_columns: cols(&["a"]),
            ..Default::default()
        };
        assert!(matches!(config.validate(), Err(Error::OverlappingColumns(_))));
    }

    #[test]
    fn aggregation_means_per_patient() {
        let t = table("filename\tpatient\tbrightness\nimg1\tP1\t0.2\nimg2\tP1\t0.4\nimg3\tP2\t1.0\n");
        let config = CohortConfig {
            patient_id_rule: PatientIdRule::Column("patient".into()),
            ..Default::default()
        };
        let p = aggregate_to_patients::<f64>(&t, &cols(&["brightness"]), &config).unwrap();
        assert_eq!(p.len(), 2);
        assert_abs_diff_eq!(p[0].features[0].unwrap(), 0.3, epsilon = 1e-15);
        assert_eq!(p[0].image_ids, cols(&["img1", "img2"]));
    }

    #[test]
    fn aggregation_skips_missing() {
        let t = table("filename\tpatient\ta\nimg1\tP1\t1.0\nimg2\tP1\tNaN\n");
        let config = CohortConfig {
            patient_id_rule: PatientIdRule::Column("patient".into()),
            ..Default::default()
        };
        let p = aggregate_to_patients::<f64>(&t, &cols(&["a"]), &config).unwrap();
        assert_eq!(p[0].features[0], Some(1.0));
    }

    #[test]
    fn one_image_per_patient_keeps_raw_rows() {
        let mut text = String::from("filename\ta\tb\n");
        for i in 0..116 {
            text.push_str(&format!("S{i:03}.svs\t{}\t{}\n", i as f64 * 0.5, 100 - i));
        }
        let t = table(&text);
        let p = aggregate_to_patients::<f64>(&t, &cols(&["a", "b"]), &CohortConfig::default()).unwrap();
        assert_eq!(p.len(), 116);
        for (rec, row) in p.iter().zip(&t.rows) {
            assert_eq!(rec.features[0], row.values[1]);
            assert_eq!(rec.features[1], row.values[2]);
        }
    }

    #[test]
    fn regex_rule_extracts_patient() {
        let t = table("filename\ta\nTCGA-01_s1.svs\t1\nTCGA-01_s2.svs\t3\nTCGA-02_s1.svs\t5\n");
        let config = CohortConfig {
            patient_id_rule: PatientIdRule::regex(r"^(TCGA-\d+)_").unwrap(),
            ..Default::default()
        };
        let p = aggregate_to_patients::<f64>(&t, &cols(&["a"]), &config).unwrap();
        assert_eq!(p.len(), 2);
        assert_eq!(p[0].patient_id, "TCGA-01");
        assert_eq!(p[0].features[0], Some(2.0));

        let bad = table("filename\ta\nother.svs\t1\n");
        let err = aggregate_to_patients::<f64>(&bad, &cols(&["a"]), &config).unwrap_err();
        assert!(matches!(err, Error::PatientIdUnmatched(_)));
        assert!(PatientIdRule::regex("no-groups").is_err());
    }

    fn raw(id: &str, v: Option<f64>) -> RawPatient<f64> {
        RawPatient {
            patient_id: id.into(),
            image_ids: vec![id.into()],
            features: vec![v],
            thumbnail_path: None,
            label: None,
            site: None,
        }
    }

    #[test]
    fn median_imputation() {
        let raws = vec![raw("a", Some(1.0)), raw("b", Some(2.0)), raw("c", None), raw("d", Some(3.0))];
        let (recs, summary) = impute_missing(raws, &cols(&["f"])).unwrap();
        assert_eq!(recs[2].features[0], 2.0);
        assert_eq!(summary.count, 1);
    }

    #[test]
    fn imputation_identity_without_gaps() {
        let raws = vec![raw("a", Some(1.0)), raw("b", Some(5.0))];
        let (recs, summary) = impute_missing(raws.clone(), &cols(&["f"])).unwrap();
        assert_eq!(summary.count, 0);
        let direct = complete_records(raws, &cols(&["f"])).unwrap();
        assert_eq!(recs, direct);
    }

    #[test]
    fn all_missing_feature_fails() {
        let raws = vec![raw("a", None), raw("b", None)];
        assert!(matches!(
            impute_missing(raws.clone(), &cols(&["f"])),
            Err(Error::FeatureAllMissing(_))
        ));
        assert!(matches!(
            complete_records(raws, &cols(&["f"])),
            Err(Error::MissingValue { .. })
        ));
    }

    fn record(id: &str, f: Vec<f64>) -> PatientRecord<f64> {
        PatientRecord {
            patient_id: id.into(),
            image_ids: vec![id.into()],
            features: f,
            thumbnail_path: None,
            label: None,
            site: None,
        }
    }

    #[test]
    fn standardizes_simple_column() {
        let recs = vec![record("a", vec![1.0]), record("b", vec![2.0]), record("c", vec![3.0])];
        let (m, s) = standardize_features(&recs, &cols(&["f"])).unwrap();
        assert_eq!(m.values.column(0).to_vec(), vec![-1.0, 0.0, 1.0]);
        assert_eq!(s.means, vec![2.0]);
        assert_eq!(s.sds, vec![1.0]);
    }

    #[test]
    fn standardization_is_idempotent() {
        let recs: Vec<_> = [0.3, -1.2, 2.2, 0.7, -0.1]
            .iter()
            .enumerate()
            .map(|(i, v)| record(&i.to_string(), vec![*v]))
            .collect();
        let (m1, _) = standardize_features(&recs, &cols(&["f"])).unwrap();
        let again: Vec<_> = m1
            .values
            .column(0)
            .iter()
            .enumerate()
            .map(|(i, v)| record(&i.to_string(), vec![*v]))
            .collect();
        let (m2, _) = standardize_features(&again, &cols(&["f"])).unwrap();
        for (a, b) in m1.values.iter().zip(m2.values.iter()) {
            assert_abs_diff_eq!(a, b, epsilon = 1e-12);
        }
    }

    #[test]
    fn standardization_degenerate_inputs() {
        let recs = vec![record("a", vec![5.0]), record("b", vec![5.0]), record("c", vec![5.0])];
        let err = standardize_features(&recs, &cols(&["f"])).unwrap_err();
        assert_eq!(err.to_string(), "zero variance in feature \"f\"");
        assert!(matches!(
            standardize_features(&recs[..1], &cols(&["f"])),
            Err(Error::TooFewPatients { .. })
        ));
    }

    #[test]
    fn works_in_single_precision() {
        let recs = vec![
            PatientRecord {
                patient_id: "a".into(),
                image_ids: vec!["a".into()],
                features: vec![1.0f32],
                thumbnail_path: None,
                label: None,
                site: None,
            },
            PatientRecord {
                patient_id: "b".into(),
                image_ids: vec!["b".into()],
                features: vec![3.0f32],
                thumbnail_path: None,
                label: None,
                site: None,
            },
        ];
        let (m, _) = standardize_features(&recs, &cols(&["f"])).unwrap();
        assert!((m.values[[1, 0]] - 0.707_106_77).abs() < 1e-6);
    }

    proptest! {
        #[test]
        fn standardized_columns_have_zero_mean_unit_sd(
            data in prop::collection::vec(prop::collection::vec(-1e3f64..1e3, 3), 3..40)
        ) {
            let recs: Vec<_> = data.iter().enumerate().map(|(i, f)| record(&i.to_string(), f.clone())).collect();
            let names = cols(&["a", "b", "c"]);
            match standardize_features(&recs, &names) {
                Ok((m, _)) => {
                    let n = m.values.nrows() as f64;
                    for col in m.values.columns() {
                        let mean = col.sum() / n;
                        let sd = (col.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt();
                        prop_assert!(mean.abs() < 1e-9);
                        prop_assert!((sd - 1.0).abs() < 1e-9);
                    }
                    prop_assert_eq!(m.values.nrows(), recs.len());
                }
                Err(Error::ZeroVariance(_)) => {}
                Err(e) => prop_assert!(false, "{e}"),
            }
        }

        #[test]
        fn aggregation_is_row_order_invariant(
            values in prop::collection::vec((0usize..6, -100.0f64..100.0), 1..30),
            shuffle_seed in any::<u64>(),
        ) {
            let mut lines: Vec<String> = values
                .iter()
                .enumerate()
                .map(|(i, (p, v))| format!("img{i}\tP{p}\t{v}"))
                .collect();
            let config = CohortConfig {
                patient_id_rule: PatientIdRule::Column("patient".into()),
                ..Default::default()
            };
            let build = |lines: &[String]| {
                let text = format!("filename\tpatient\tm\n{}\n", lines.join("\n"));
                let t = table(&text);
                let mut p = aggregate_to_patients::<f64>(&t, &cols(&["m"]), &config).unwrap();
                p.sort_by(|a, b| a.patient_id.cmp(&b.patient_id));
                p
            };
            let before = build(&lines);
            lines.shuffle(&mut crate::seed::rng(shuffle_seed));
            let after = build(&lines);
            prop_assert_eq!(before, after);
        }
    }
}

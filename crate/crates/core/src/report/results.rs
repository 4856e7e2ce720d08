use std::path::Path;

use crate::betest::BeReport;
use crate::embedding::{Embedding2D, FeatureMatrix};
use crate::error::{Error, Result};
use crate::ingest::PatientRecord;
use crate::partition::Partition;
use crate::scalar::Scalar;

use super::{format_sig6, write_atomic};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ResultsLayout {
    /// One row per patient.
    #[default]
    PerPatient,
    /// One row per image, repeating the patient's values.
    PerImage,
}

/// The fields of a results row that downstream tools consume.
#[derive(Debug, Clone, PartialEq)]
pub struct ResultRow {
    pub patient_id: String,
    pub image_ids: Vec<String>,
    pub embed_x: f64,
    pub embed_y: f64,
    pub groupid: usize,
    /// Value of the `testind` or `fold` column.
    pub label: usize,
}

fn csv_err(path: &Path, e: csv::Error) -> Error {
    Error::Write {
        path: path.to_path_buf(),
        source: std::io::Error::other(e.to_string()),
    }
}

/// Writes the per-patient results table.
///
/// Columns: `patient_id, image_ids, <metric>..., <metric>_z..., embed_x,
/// embed_y, groupid`, then `testind` (0 train, 1 test) for a split or `fold`
/// for folds. Rows follow `records` order; numbers carry 6 significant digits.
pub fn write_results_csv<T: Scalar>(
    records: &[PatientRecord<T>],
    standardized: &FeatureMatrix<T>,
    embedding: &Embedding2D<T>,
    groups: &[usize],
    partition: &Partition,
    layout: ResultsLayout,
    path: &Path,
) -> Result<()> {
    let n = records.len();
    for len in [standardized.n_patients(), embedding.coords.nrows(), groups.len()] {
        if len != n {
            return Err(Error::LengthMismatch { left: n, right: len });
        }
    }
    let names = &standardized.feature_names;
    let label_column = match partition {
        Partition::Split(_) => "testind",
        Partition::Folds(_) => "fold",
    };
    let mut header = vec!["patient_id".to_string(), "image_ids".to_string()];
    header.extend(names.iter().cloned());
    header.extend(names.iter().map(|m| format!("{m}_z")));
    header.extend(["embed_x", "embed_y", "groupid", label_column].map(String::from));

    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
    w.write_record(&header).map_err(|e| csv_err(path, e))?;
    for (i, rec) in records.iter().enumerate() {
        if standardized.patient_ids[i] != rec.patient_id || embedding.patient_ids[i] != rec.patient_id {
            return Err(Error::InvalidGroups(format!(
                "row {i}: inputs not aligned on patient {:?}",
                rec.patient_id
            )));
        }
        let label = partition
            .label_of(&rec.patient_id)
            .ok_or_else(|| Error::InvalidGroups(format!("patient {:?} has no assignment", rec.patient_id)))?;
        let mut values: Vec<String> = rec.features.iter().map(|v| format_sig6(v.as_f64())).collect();
        values.extend(standardized.values.row(i).iter().map(|v| format_sig6(v.as_f64())));
        values.push(format_sig6(embedding.coords[[i, 0]].as_f64()));
        values.push(format_sig6(embedding.coords[[i, 1]].as_f64()));
        values.push(groups[i].to_string());
        values.push(label.to_string());

        let image_lists: Vec<String> = match layout {
            ResultsLayout::PerPatient => vec![rec.image_ids.join(";")],
            ResultsLayout::PerImage => rec.image_ids.clone(),
        };
        for images in image_lists {
            let row = [rec.patient_id.clone(), images].into_iter().chain(values.iter().cloned());
            w.write_record(row).map_err(|e| csv_err(path, e))?;
        }
    }
    let bytes = w.into_inner().map_err(|e| Error::Write {
        path: path.to_path_buf(),
        source: e.into_error(),
    })?;
    write_atomic(path, &bytes)
}

/// Parses the identity, embedding, group and assignment columns back.
pub fn read_results_csv(path: &Path) -> Result<Vec<ResultRow>> {
    let read_err = |e: csv::Error| Error::Io {
        path: path.to_path_buf(),
        source: std::io::Error::other(e.to_string()),
    };
    let mut r = csv::Reader::from_path(path).map_err(read_err)?;
    let header = r.headers().map_err(read_err)?.clone();
    let col = |name: &str| header.iter().position(|h| h == name).ok_or_else(|| Error::UnknownColumn(name.into()));
    let (id, images, x, y, group) = (col("patient_id")?, col("image_ids")?, col("embed_x")?, col("embed_y")?, col("groupid")?);
    let label = col("testind").or_else(|_| col("fold"))?;
    let bad = |what: &str, v: &str| Error::InvalidParameter(format!("{}: bad {what} value {v:?}", path.display()));
    let mut rows = Vec::new();
    for rec in r.records() {
        let rec = rec.map_err(read_err)?;
        let num = |i: usize, what: &str| rec[i].parse::<f64>().map_err(|_| bad(what, &rec[i]));
        let int = |i: usize, what: &str| rec[i].parse::<usize>().map_err(|_| bad(what, &rec[i]));
        rows.push(ResultRow {
            patient_id: rec[id].to_string(),
            image_ids: rec[images].split(';').map(String::from).collect(),
            embed_x: num(x, "embed_x")?,
            embed_y: num(y, "embed_y")?,
            groupid: int(group, "groupid")?,
            label: int(label, "assignment")?,
        });
    }
    Ok(rows)
}

/// Per-metric association tests and forest importances, preceded by
/// `#`-comment lines summarizing the permutation test.
pub fn write_be_report(report: &BeReport, path: &Path) -> Result<()> {
    let mut out = String::new();
    let perm = &report.permutation;
    out.push_str(&format!(
        "# permutation_test observed_accuracy={} p_value={} n_permutations={} seed={}\n",
        format_sig6(perm.observed_accuracy),
        format_sig6(perm.p_value),
        perm.n_permutations,
        perm.seed
    ));
    let classes: Vec<String> = report.classes.iter().map(|(c, n)| format!("{c}:{n}")).collect();
    out.push_str(&format!("# classes {}\n", classes.join(" ")));

    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
    w.write_record([
        "feature", "test", "statistic", "df1", "df2", "p_value", "adjusted_p", "degenerate", "importance", "importance_rank",
    ])
    .map_err(|e| csv_err(path, e))?;
    for t in &report.tests {
        let rank = report.ranking.rank_of(&t.feature_name).map_or(String::new(), |r| (r + 1).to_string());
        let importance = report.ranking.importance_of(&t.feature_name).unwrap_or(0.0);
        w.write_record([
            t.feature_name.clone(),
            t.test_kind.to_string(),
            format_sig6(t.statistic),
            format_sig6(t.degrees_of_freedom),
            format_sig6(t.degrees_of_freedom_within),
            format_sig6(t.p_value),
            format_sig6(t.adjusted_p),
            u8::from(t.degenerate).to_string(),
            format_sig6(importance),
            rank,
        ])
        .map_err(|e| csv_err(path, e))?;
    }
    let body = w.into_inner().map_err(|e| Error::Write {
        path: path.to_path_buf(),
        source: e.into_error(),
    })?;
    out.push_str(&String::from_utf8(body).expect("csv output is utf-8"));
    write_atomic(path, out.as_bytes())
}

#[cfg(test)]
mod tests {
    use std::collections::BTreeMap;

    use ndarray::array;

    use super::*;
    use crate::embedding::{EmbedMethod, InitKind};
    use crate::partition::{FoldAssignment, PartitionAssignment, Side, Strategy};
    use crate::report::quantize_sig6;

    fn fixture() -> (Vec<PatientRecord<f64>>, FeatureMatrix<f64>, Embedding2D<f64>, Vec<usize>, Partition) {
        let ids: Vec<String> = ["p1", "p2", "p3", "p4"].map(String::from).to_vec();
        let records: Vec<PatientRecord<f64>> = ids
            .iter()
            .enumerate()
            .map(|(i, id)| PatientRecord {
                patient_id: id.clone(),
                image_ids: vec![format!("{id}_a"), format!("{id}_b")],
                features: vec![i as f64 * 1.5, 100.0 / (i as f64 + 3.0)],
                thumbnail_path: None,
                label: None,
                site: None,
            })
            .collect();
        let z = FeatureMatrix::new(
            array![[-1.2, 1.1], [-0.4, 0.2], [0.4, -0.5], [1.2, -0.8]],
            ids.clone(),
            vec!["bright".into(), "contrast".into()],
        )
        .unwrap();
        let embedding = Embedding2D {
            coords: array![[0.123456789, -7.0], [1.0 / 3.0, 2.0], [5.5, 1e-7], [-2.0, 123456.789]],
            patient_ids: ids.clone(),
            params: None,
            method: EmbedMethod::Pca,
            init: InitKind::None,
            sigma_floor_hits: 0,
            curve: None,
        };
        let split = PartitionAssignment {
            strategy: Strategy::BestCase,
            assignment: ids
                .iter()
                .enumerate()
                .map(|(i, id)| (id.clone(), if i == 2 { Side::Test } else { Side::Train }))
                .collect(),
            seed: 1,
            requested_ratio: 0.25,
        };
        (records, z, embedding, vec![0, 0, 1, 1], Partition::Split(split))
    }

    #[test]
    fn shape_and_encoding() {
        let (records, z, e, groups, partition) = fixture();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("results.csv");
        write_results_csv(&records, &z, &e, &groups, &partition, ResultsLayout::PerPatient, &path).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 5);
        assert_eq!(
            lines[0],
            "patient_id,image_ids,bright,contrast,bright_z,contrast_z,embed_x,embed_y,groupid,testind"
        );
        assert_eq!(lines[1], "p1,p1_a;p1_b,0,33.3333,-1.2,1.1,0.123457,-7,0,0");
        let rows = read_results_csv(&path).unwrap();
        let testind: Vec<usize> = rows.iter().map(|r| r.label).collect();
        assert_eq!(testind, vec![0, 0, 1, 0]);
    }

    #[test]
    fn round_trip_reproduces_quantized_values() {
        let (records, z, e, groups, partition) = fixture();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("results.csv");
        write_results_csv(&records, &z, &e, &groups, &partition, ResultsLayout::PerPatient, &path).unwrap();
        for (i, row) in read_results_csv(&path).unwrap().iter().enumerate() {
            assert_eq!(row.patient_id, records[i].patient_id);
            assert_eq!(row.image_ids, records[i].image_ids);
            assert_eq!(row.embed_x, quantize_sig6(e.coords[[i, 0]]));
            assert_eq!(row.embed_y, quantize_sig6(e.coords[[i, 1]]));
            assert_eq!(row.groupid, groups[i]);
        }
    }

    #[test]
    fn per_image_rows_and_folds() {
        let (records, z, e, groups, _) = fixture();
        let folds = Partition::Folds(FoldAssignment {
            strategy: Strategy::WorstCase,
            n_folds: 2,
            fold_of: records.iter().zip(&groups).map(|(r, &g)| (r.patient_id.clone(), g)).collect::<BTreeMap<_, _>>(),
            seed: 0,
        });
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("results.csv");
        write_results_csv(&records, &z, &e, &groups, &folds, ResultsLayout::PerImage, &path).unwrap();
        let rows = read_results_csv(&path).unwrap();
        assert_eq!(rows.len(), 8);
        assert_eq!(rows[1].image_ids, vec!["p1_b".to_string()]);
        assert!(std::fs::read_to_string(&path).unwrap().starts_with("patient_id,image_ids,bright"));
        assert!(rows.iter().all(|r| r.label == r.groupid));
    }

    #[test]
    fn misaligned_inputs_rejected() {
        let (records, z, e, _, partition) = fixture();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("r.csv");
        assert!(write_results_csv(&records, &z, &e, &[0, 1], &partition, ResultsLayout::PerPatient, &path).is_err());
        let mut shuffled = records.clone();
        shuffled.swap(0, 1);
        assert!(write_results_csv(&shuffled, &z, &e, &[0, 0, 1, 1], &partition, ResultsLayout::PerPatient, &path).is_err());
    }
}

//! End-to-end execution of a parsed invocation.

use std::fs;
use std::path::Path;

use cohortsplit::betest::{be_report, BeReport, BeTestParams, LabeledCohort};
use cohortsplit::clustering::{balanced_kmeans, default_cluster_count, kmeans_replicated, ClusterModel, ClusterParams};
use cohortsplit::embedding::{embed_auto, EmbedParams, Embedding2D, FeatureMatrix};
use cohortsplit::error::{Error, Result};
use cohortsplit::ingest::{
    aggregate_to_patients, complete_records, images_per_patient, impute_missing, load_metrics_table,
    select_feature_columns, standardize_features, PatientRecord,
};
use cohortsplit::partition::{
    folds_average_case, folds_best_case, folds_worst_case, split_average_case, split_best_case, validate_partition,
    BeGroups, Partition, Strategy,
};
use cohortsplit::report::{
    render_assignment_plot, render_contact_sheet, render_embedding_plot, write_be_report, write_results_csv,
    ResultsLayout, RunLog, RunOutputs,
};
use cohortsplit::synth::{generate_synthetic_cohort, partition_balance_report, write_synthetic_table};

use crate::{BetestJob, InputSpec, Invocation, PartitionJob, SynthJob, EXIT_RUNTIME};

pub const RESULTS_FILE: &str = "results.csv";
pub const EMBEDDING_PLOT_FILE: &str = "embedding.svg";
pub const ASSIGNMENT_PLOT_FILE: &str = "assignment.svg";
pub const CONTACT_SHEET_FILE: &str = "contact_sheet.html";
pub const LOG_FILE: &str = "run.log";
pub const BE_REPORT_FILE: &str = "be_report.csv";

/// Runs the invocation and returns the exit code. Runtime errors are written
/// to the log (as its last line) and to standard error.
pub fn run_pipeline(invocation: &Invocation) -> i32 {
    let mut log = RunLog::new();
    match execute(invocation, &mut log) {
        Ok(outputs) => {
            if let Some(p) = outputs {
                for path in p.all_paths() {
                    println!("{}", path.display());
                }
            }
            0
        }
        Err(e) => {
            log.error(e.to_string());
            if let Some(dir) = output_dir(invocation) {
                if fs::create_dir_all(dir).is_ok() {
                    let _ = log.write(&dir.join(LOG_FILE));
                }
            }
            eprintln!("error: {e}");
            EXIT_RUNTIME
        }
    }
}

fn output_dir(invocation: &Invocation) -> Option<&Path> {
    match invocation {
        Invocation::Partition(j) => Some(&j.input.cohort.output_dir),
        Invocation::Betest(j) => Some(&j.input.cohort.output_dir),
        Invocation::Synth(_) => None,
    }
}

/// Executes the invocation, appending events to `log`. Returns the written
/// outputs (`None` for `synth`, which writes a single table).
pub fn execute(invocation: &Invocation, log: &mut RunLog) -> Result<Option<RunOutputs>> {
    match invocation {
        Invocation::Partition(job) => run_partition(job, log).map(Some),
        Invocation::Betest(job) => run_betest(job, log).map(Some),
        Invocation::Synth(job) => run_synth(job).map(|()| None),
    }
}

fn create_outdir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|source| Error::Write {
        path: dir.to_path_buf(),
        source,
    })
}

fn echo_input(spec: &InputSpec, log: &mut RunLog) {
    let c = &spec.cohort;
    log.info(format!(
        "config input={} delimiter={:?} seed={} outdir={} impute={}",
        spec.input.display(),
        char::from(spec.delimiter),
        c.seed,
        c.output_dir.display(),
        c.impute
    ));
    log.info(format!(
        "config cols={} exclude_cols={:?} patient_id={:?} label_column={:?} site_column={:?} thumbnail_column={:?}",
        c.included_columns.as_ref().map_or("all".to_string(), |v| v.join(",")),
        c.excluded_columns,
        c.patient_id_rule,
        c.label_column,
        c.site_column,
        c.thumbnail_column
    ));
}

/// Load → select → aggregate → impute. Returns records and feature names.
fn load_cohort(spec: &InputSpec, log: &mut RunLog) -> Result<(Vec<PatientRecord<f64>>, Vec<String>)> {
    let table = load_metrics_table(&spec.input, spec.delimiter)?;
    log.info(format!("rows={} columns={}", table.rows.len(), table.column_names.len()));
    let selection = select_feature_columns(&table, &spec.cohort)?;
    log.info(format!("features selected={} [{}]", selection.selected.len(), selection.selected.join(",")));
    if !selection.excluded.is_empty() {
        log.info(format!("features excluded=[{}]", selection.excluded.join(",")));
    }
    if !selection.non_numeric.is_empty() {
        log.warn(format!("dropped non-numeric columns=[{}]", selection.non_numeric.join(",")));
    }
    if !selection.constant.is_empty() {
        log.warn(format!("dropped constant columns=[{}]", selection.constant.join(",")));
    }
    let names = selection.selected;
    let raw = aggregate_to_patients::<f64>(&table, &names, &spec.cohort)?;
    let records = if spec.cohort.impute {
        let (records, summary) = impute_missing(raw, &names)?;
        log.info(format!("imputed={}", summary.count));
        for (feature, count, median) in &summary.per_feature {
            log.info(format!("imputed feature={feature} count={count} median={median}"));
        }
        records
    } else {
        let records = complete_records(raw, &names)?;
        log.info("imputed=0");
        records
    };
    let hist: Vec<String> = images_per_patient(&records).iter().map(|(k, v)| format!("{k}:{v}")).collect();
    log.info(format!("patients={} images_per_patient={{{}}}", records.len(), hist.join(",")));
    Ok((records, names))
}

fn log_clusters(model: &ClusterModel<f64>, what: &str, log: &mut RunLog) {
    let sses: Vec<String> = model.replicate_sses.iter().map(|s| format!("{s:.6}")).collect();
    log.info(format!(
        "{what} k={} sse={:.6} sizes={:?} iterations={} empty_cluster_repairs={}",
        model.k(),
        model.sse,
        model.sizes(),
        model.iterations,
        model.empty_repairs
    ));
    log.info(format!("{what} replicate_sses=[{}]", sses.join(",")));
}

fn log_embedding(e: &Embedding2D<f64>, log: &mut RunLog) {
    match &e.params {
        Some(p) => log.info(format!(
            "embedding method={} n_neighbors={} min_dist={} n_epochs={} init={:?} curve={:?} sigma_floor_hits={}",
            e.method, p.n_neighbors, p.min_dist, p.n_epochs, e.init, e.curve, e.sigma_floor_hits
        )),
        None => log.info(format!("embedding method={}", e.method)),
    }
    if e.sigma_floor_hits > 0 {
        log.warn(format!("sigma floor reached for {} patients (duplicate metric profiles)", e.sigma_floor_hits));
    }
}

fn labeled_cohort(records: &[PatientRecord<f64>], names: &[String], column: &str) -> Result<LabeledCohort<f64>> {
    let labels = records
        .iter()
        .map(|r| {
            r.label
                .clone()
                .filter(|l| !l.is_empty())
                .ok_or_else(|| Error::InvalidParameter(format!("patient {:?} has no value in {column:?}", r.patient_id)))
        })
        .collect::<Result<Vec<_>>>()?;
    let features = ndarray::Array2::from_shape_fn((records.len(), names.len()), |(i, j)| records[i].features[j]);
    LabeledCohort::new(features, labels, names.to_vec())
}

fn run_be_test(
    records: &[PatientRecord<f64>],
    names: &[String],
    column: &str,
    seed: u64,
    permutations: usize,
    log: &mut RunLog,
) -> Result<BeReport> {
    let cohort = labeled_cohort(records, names, column)?;
    let params = BeTestParams {
        n_permutations: permutations,
        seed,
        ..BeTestParams::default()
    };
    log.info(format!(
        "betest label_column={column} classes={:?} permutations={} trees={} cv_folds={}",
        cohort.class_sizes(),
        params.n_permutations,
        params.forest.n_trees,
        params.n_folds
    ));
    let report = be_report(&cohort, &params)?;
    log.info(format!(
        "betest observed_accuracy={:.6} p_value={:.6}",
        report.permutation.observed_accuracy, report.permutation.p_value
    ));
    if let Some((top, importance)) = report.ranking.entries.first() {
        log.info(format!("betest top_feature={top} importance={importance:.6}"));
    }
    let significant = report.tests.iter().filter(|t| t.adjusted_p < 0.05).count();
    log.info(format!("betest metrics_with_adjusted_p_below_0.05={significant}/{}", report.tests.len()));
    Ok(report)
}

fn partition(job: &PartitionJob, ids: &[String], groups: &BeGroups, seed: u64) -> Result<Partition> {
    let ratio = job.input.cohort.test_ratio;
    Ok(match (job.strategy, job.n_folds) {
        (Strategy::BestCase, None) => Partition::Split(split_best_case(groups, ratio, seed)?),
        (Strategy::BestCase, Some(f)) => Partition::Folds(folds_best_case(groups, f, seed)?),
        (Strategy::AverageCase, None) => Partition::Split(split_average_case(ids, ratio, seed)?),
        (Strategy::AverageCase, Some(f)) => Partition::Folds(folds_average_case(ids, f, seed)?),
        (Strategy::WorstCase, f) => Partition::Folds(folds_worst_case(groups, f.unwrap_or(3))?),
    })
}

fn run_partition(job: &PartitionJob, log: &mut RunLog) -> Result<RunOutputs> {
    let cohort = &job.input.cohort;
    echo_input(&job.input, log);
    log.info(format!(
        "config strategy={} testpercent={} nclusters={} nfolds={} embed={} permutations={}",
        job.strategy,
        cohort.test_ratio,
        cohort.n_clusters.map_or("auto".to_string(), |k| k.to_string()),
        job.n_folds.map_or("-".to_string(), |f| f.to_string()),
        job.embed,
        job.permutations
    ));
    create_outdir(&cohort.output_dir)?;

    let (records, names) = load_cohort(&job.input, log)?;
    let (standardized, _) = standardize_features(&records, &names)?;
    let embedding = embed(&standardized, job, log)?;

    let n = records.len();
    let k = match cohort.n_clusters {
        Some(k) if k > n => {
            return Err(Error::InvalidParameter(format!("--nclusters {k} exceeds the {n} patients")));
        }
        Some(k) => k,
        None => default_cluster_count(n)?,
    };
    log.info(format!("seed={} k={k}", cohort.seed));
    let model = kmeans_replicated(&embedding.coords, &ClusterParams::new(k, cohort.seed))?;
    log_clusters(&model, "clusters", log);

    // Worst case keeps whole groups together, so it re-clusters into as many
    // size-balanced groups as there are folds.
    let model = if job.strategy == Strategy::WorstCase {
        let folds = job.n_folds.unwrap_or(3);
        if cohort.n_clusters.is_some_and(|k| k != folds) {
            log.warn(format!("worst case uses {folds} balanced groups (one per fold), not nclusters={k}"));
        }
        let balanced = balanced_kmeans(&embedding.coords, &ClusterParams::new(folds, cohort.seed))?;
        log_clusters(&balanced, "worstcase_groups", log);
        balanced
    } else {
        model
    };

    let ids: Vec<String> = records.iter().map(|r| r.patient_id.clone()).collect();
    let groups = BeGroups::from_assignments(&ids, &model.assignments)?;
    let partition = partition(job, &ids, &groups, cohort.seed)?;
    let validation = validate_partition(&partition, &records, &groups, None);
    for line in validation.summary_lines() {
        log.info(line);
    }
    if !validation.is_valid() {
        return Err(Error::DegeneratePartition(format!("{} violations", validation.violations.len())));
    }
    if let (Some(column), Partition::Split(split)) = (&cohort.site_column, &partition) {
        let mut site_names: Vec<String> = records.iter().filter_map(|r| r.site.clone()).collect();
        site_names.sort();
        site_names.dedup();
        let sites: Vec<usize> = records
            .iter()
            .map(|r| r.site.as_ref().and_then(|s| site_names.binary_search(s).ok()).unwrap_or(0))
            .collect();
        let balance = partition_balance_report(split, &ids, &sites, cohort.test_ratio)?;
        let fractions: Vec<String> = site_names
            .iter()
            .zip(&balance.test_fractions)
            .map(|(s, f)| format!("{s}:{f:.4}"))
            .collect();
        log.info(format!(
            "site balance column={column} test_fractions=[{}] max_deviation={:.6}",
            fractions.join(","),
            balance.max_deviation
        ));
    }

    let dir = &cohort.output_dir;
    let mut outputs = RunOutputs {
        results_csv_path: dir.join(RESULTS_FILE),
        embedding_plot_path: dir.join(EMBEDDING_PLOT_FILE),
        assignment_plot_path: dir.join(ASSIGNMENT_PLOT_FILE),
        log_path: dir.join(LOG_FILE),
        ..RunOutputs::default()
    };
    let layout = if job.per_image { ResultsLayout::PerImage } else { ResultsLayout::PerPatient };
    write_results_csv(&records, &standardized, &embedding, &model.assignments, &partition, layout, &outputs.results_csv_path)?;
    render_embedding_plot(&embedding, &model.assignments, &outputs.embedding_plot_path)?;
    render_assignment_plot(&embedding, &model.assignments, &partition, &outputs.assignment_plot_path)?;

    match &cohort.thumbnail_column {
        Some(_) if records.iter().any(|r| r.thumbnail_path.is_some()) => {
            let path = dir.join(CONTACT_SHEET_FILE);
            render_contact_sheet(&records, &model.assignments, cohort.seed, &path)?;
            outputs.contact_sheet_path = Some(path);
        }
        Some(c) => log.warn(format!("contact sheet skipped: column {c:?} has no thumbnail paths")),
        None => log.info("contact sheet skipped: no thumbnail column configured"),
    }
    if let Some(column) = &cohort.label_column {
        let report = run_be_test(&records, &names, column, cohort.seed, job.permutations, log)?;
        let path = dir.join(BE_REPORT_FILE);
        write_be_report(&report, &path)?;
        outputs.be_report_path = Some(path);
    }

    log.info(format!("outputs written to {}", dir.display()));
    log.write(&outputs.log_path)?;
    Ok(outputs)
}

fn embed(standardized: &FeatureMatrix<f64>, job: &PartitionJob, log: &mut RunLog) -> Result<Embedding2D<f64>> {
    let params = EmbedParams {
        seed: job.input.cohort.seed,
        ..EmbedParams::default()
    };
    let embedding = embed_auto(standardized, job.embed, &params)?;
    log_embedding(&embedding, log);
    Ok(embedding)
}

fn run_betest(job: &BetestJob, log: &mut RunLog) -> Result<RunOutputs> {
    let cohort = &job.input.cohort;
    echo_input(&job.input, log);
    create_outdir(&cohort.output_dir)?;
    let (records, names) = load_cohort(&job.input, log)?;
    let column = cohort.label_column.as_deref().expect("validated at parse time");
    let report = run_be_test(&records, &names, column, cohort.seed, job.permutations, log)?;
    let dir = &cohort.output_dir;
    let outputs = RunOutputs {
        log_path: dir.join(LOG_FILE),
        be_report_path: Some(dir.join(BE_REPORT_FILE)),
        ..RunOutputs::default()
    };
    write_be_report(&report, outputs.be_report_path.as_deref().expect("set above"))?;
    log.write(&outputs.log_path)?;
    Ok(outputs)
}

fn run_synth(job: &SynthJob) -> Result<()> {
    let (records, _) = generate_synthetic_cohort(&job.spec)?;
    if let Some(parent) = job.output.parent().filter(|p| !p.as_os_str().is_empty()) {
        create_outdir(parent)?;
    }
    write_synthetic_table(&records, &job.spec.metric_names(), &job.output, job.delimiter, job.images_per_patient)
}

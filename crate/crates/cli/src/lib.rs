//! Argument parsing and validation for the `cohortsplit` command.
//!
//! `parse_args` turns process arguments (plus an optional TOML config file)
//! into a validated [`Invocation`]; `run_pipeline` executes it and returns
//! the process exit code: 0 on success, 1 on runtime failure, 2 on invalid
//! usage.

mod config;
pub mod pipeline;

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use cohortsplit::embedding::EmbedMethod;
use cohortsplit::ingest::{CohortConfig, PatientIdRule};
use cohortsplit::partition::Strategy;
use cohortsplit::synth::SyntheticCohortSpec;

pub use config::FileConfig;
pub use pipeline::{execute, run_pipeline};

pub const EXIT_RUNTIME: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "cohortsplit", version, about = "Batch-effect-aware train/test partitioning from QC metrics")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Detect BE groups and partition the cohort.
    Partition(PartitionArgs),
    /// Test whether the metrics predict a label column.
    Betest(BetestArgs),
    /// Write a synthetic multi-site metric table.
    Synth(SynthArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum StrategyArg {
    Bestcase,
    Averagecase,
    Worstcase,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum EmbedArg {
    Umap,
    Pca,
}

#[derive(Debug, Args)]
struct InputArgs {
    /// Per-image metric table (first column is the image id).
    #[arg(long)]
    input: Option<PathBuf>,
    /// Field delimiter: a single character, `tab` or `comma` [default: by extension].
    #[arg(long)]
    delimiter: Option<String>,
    /// Master random seed [default: 42].
    #[arg(long)]
    seed: Option<u64>,
    /// Comma-separated metric columns to use [default: all numeric].
    #[arg(long, value_delimiter = ',')]
    cols: Option<Vec<String>>,
    /// Comma-separated metric columns to ignore.
    #[arg(long = "exclude-cols", value_delimiter = ',')]
    exclude_cols: Option<Vec<String>>,
    /// `column=NAME` or `regex=PATTERN` (one capture group) [default: one patient per image].
    #[arg(long = "patient-id")]
    patient_id: Option<String>,
    #[arg(long = "label-column")]
    label_column: Option<String>,
    #[arg(long = "site-column")]
    site_column: Option<String>,
    #[arg(long = "thumbnail-column")]
    thumbnail_column: Option<String>,
    /// Output directory [default: .].
    #[arg(long)]
    outdir: Option<PathBuf>,
    /// TOML file with defaults for any of these flags.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Fail on missing values instead of median-imputing them.
    #[arg(long = "no-impute")]
    no_impute: bool,
}

#[derive(Debug, Args)]
struct PartitionArgs {
    #[command(flatten)]
    input: InputArgs,
    /// Fraction of patients placed in the test set [default: 0.2].
    #[arg(long)]
    testpercent: Option<f64>,
    /// Number of BE groups [default: ceil(N / 3)].
    #[arg(long)]
    nclusters: Option<usize>,
    /// Produce this many folds instead of a train/test split (worst case: default 3).
    #[arg(long)]
    nfolds: Option<usize>,
    #[arg(long, value_enum)]
    strategy: Option<StrategyArg>,
    /// Embedding method [default: umap].
    #[arg(long, value_enum)]
    embed: Option<EmbedArg>,
    /// Permutations for the BE test run when a label column is given [default: 200].
    #[arg(long)]
    permutations: Option<usize>,
    /// Write one results row per image instead of per patient.
    #[arg(long = "per-image")]
    per_image: bool,
}

#[derive(Debug, Args)]
struct BetestArgs {
    #[command(flatten)]
    input: InputArgs,
    /// Label permutations [default: 200].
    #[arg(long)]
    permutations: Option<usize>,
}

#[derive(Debug, Args)]
struct SynthArgs {
    /// Path of the table to write.
    #[arg(long)]
    output: PathBuf,
    #[arg(long, default_value_t = 3)]
    sites: usize,
    /// Patients per site; one value for all sites or one per site.
    #[arg(long = "patients-per-site", value_delimiter = ',', default_value = "30")]
    patients_per_site: Vec<usize>,
    #[arg(long, default_value_t = 5)]
    metrics: usize,
    /// Distance between site means in within-site standard deviations.
    #[arg(long, default_value_t = 5.0)]
    separation: f64,
    /// Only the first N metrics carry the site shift.
    #[arg(long)]
    informative: Option<usize>,
    /// Use the site name as the label.
    #[arg(long)]
    confound: bool,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    #[arg(long = "images-per-patient", default_value_t = 1)]
    images_per_patient: usize,
    #[arg(long)]
    delimiter: Option<String>,
}

/// Ingest settings shared by the analysis subcommands.
#[derive(Debug, Clone)]
pub struct InputSpec {
    pub input: PathBuf,
    pub delimiter: u8,
    pub cohort: CohortConfig,
}

#[derive(Debug, Clone)]
pub struct PartitionJob {
    pub input: InputSpec,
    /// `None` for a train/test split.
    pub n_folds: Option<usize>,
    pub strategy: Strategy,
    pub embed: EmbedMethod,
    pub permutations: usize,
    pub per_image: bool,
}

#[derive(Debug, Clone)]
pub struct BetestJob {
    pub input: InputSpec,
    pub permutations: usize,
}

#[derive(Debug, Clone)]
pub struct SynthJob {
    pub spec: SyntheticCohortSpec,
    pub output: PathBuf,
    pub delimiter: u8,
    pub images_per_patient: usize,
}

#[derive(Debug, Clone)]
pub enum Invocation {
    Partition(PartitionJob),
    Betest(BetestJob),
    Synth(SynthJob),
}

/// Parse outcome that ends the process before any computation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Exit {
    pub code: i32,
    pub message: String,
}

impl Exit {
    fn usage(message: impl Into<String>) -> Self {
        Self {
            code: EXIT_USAGE,
            message: message.into(),
        }
    }
}

fn parse_delimiter(text: &str) -> Result<u8, Exit> {
    match text {
        "tab" | "\\t" | "\t" => Ok(b'\t'),
        "comma" => Ok(b','),
        s if s.len() == 1 && s.is_ascii() => Ok(s.as_bytes()[0]),
        s => Err(Exit::usage(format!("invalid delimiter {s:?}: use one character, `tab` or `comma`"))),
    }
}

fn default_delimiter(path: &Path) -> u8 {
    match path.extension().and_then(|e| e.to_str()) {
        Some(e) if e.eq_ignore_ascii_case("csv") => b',',
        _ => b'\t',
    }
}

fn parse_patient_rule(text: &str) -> Result<PatientIdRule, Exit> {
    if let Some(name) = text.strip_prefix("column=") {
        if name.is_empty() {
            return Err(Exit::usage("--patient-id column= needs a column name"));
        }
        Ok(PatientIdRule::Column(name.to_string()))
    } else if let Some(pattern) = text.strip_prefix("regex=") {
        PatientIdRule::regex(pattern).map_err(|e| Exit::usage(e.to_string()))
    } else {
        Err(Exit::usage(format!("invalid --patient-id {text:?}: expected column=NAME or regex=PATTERN")))
    }
}

fn choice<E: ValueEnum>(flag: Option<E>, file: Option<&str>, name: &str) -> Result<Option<E>, Exit> {
    match (flag, file) {
        (Some(v), _) => Ok(Some(v)),
        (None, Some(s)) => E::from_str(s, true).map(Some).map_err(|_| Exit::usage(format!("invalid {name} {s:?} in config"))),
        (None, None) => Ok(None),
    }
}

fn load_file_config(path: Option<&Path>) -> Result<FileConfig, Exit> {
    path.map_or(Ok(FileConfig::default()), |p| FileConfig::load(p).map_err(Exit::usage))
}

fn input_spec(args: InputArgs, file: &FileConfig) -> Result<InputSpec, Exit> {
    let input = args
        .input
        .or_else(|| file.input.clone())
        .ok_or_else(|| Exit::usage("missing input path: pass --input FILE"))?;
    let delimiter = match args.delimiter.or_else(|| file.delimiter.clone()) {
        Some(d) => parse_delimiter(&d)?,
        None => default_delimiter(&input),
    };
    let patient_id_rule = match args.patient_id.or_else(|| file.patient_id.clone()) {
        Some(rule) => parse_patient_rule(&rule)?,
        None => PatientIdRule::PerImage,
    };
    let defaults = CohortConfig::default();
    let cohort = CohortConfig {
        seed: args.seed.or(file.seed).unwrap_or(defaults.seed),
        included_columns: args.cols.or_else(|| file.cols.clone()),
        excluded_columns: args.exclude_cols.or_else(|| file.exclude_cols.clone()).unwrap_or_default(),
        patient_id_rule,
        label_column: args.label_column.or_else(|| file.label_column.clone()),
        site_column: args.site_column.or_else(|| file.site_column.clone()),
        thumbnail_column: args.thumbnail_column.or_else(|| file.thumbnail_column.clone()),
        output_dir: args.outdir.or_else(|| file.outdir.clone()).unwrap_or(defaults.output_dir),
        impute: !args.no_impute && file.impute.unwrap_or(true),
        ..defaults
    };
    Ok(InputSpec {
        input,
        delimiter,
        cohort,
    })
}

fn positive_permutations(n: usize) -> Result<usize, Exit> {
    if n == 0 {
        return Err(Exit::usage("--permutations must be >= 1"));
    }
    Ok(n)
}

fn partition_job(args: PartitionArgs) -> Result<PartitionJob, Exit> {
    let file = load_file_config(args.input.config.as_deref())?;
    let mut input = input_spec(args.input, &file)?;
    let ratio = args.testpercent.or(file.testpercent).unwrap_or(input.cohort.test_ratio);
    if !(ratio > 0.0 && ratio < 1.0) {
        return Err(Exit::usage(format!("--testpercent {ratio} outside (0, 1)")));
    }
    input.cohort.test_ratio = ratio;
    input.cohort.n_clusters = args.nclusters.or(file.nclusters);
    if input.cohort.n_clusters == Some(0) {
        return Err(Exit::usage("--nclusters must be >= 1"));
    }
    let strategy = match choice(args.strategy, file.strategy.as_deref(), "strategy")?.unwrap_or(StrategyArg::Bestcase) {
        StrategyArg::Bestcase => Strategy::BestCase,
        StrategyArg::Averagecase => Strategy::AverageCase,
        StrategyArg::Worstcase => Strategy::WorstCase,
    };
    let mut n_folds = args.nfolds.or(file.nfolds);
    if strategy == Strategy::WorstCase {
        n_folds = Some(n_folds.unwrap_or(3));
    }
    if matches!(n_folds, Some(f) if f < 2) {
        return Err(Exit::usage("--nfolds must be >= 2"));
    }
    let embed = match choice(args.embed, file.embed.as_deref(), "embed")?.unwrap_or(EmbedArg::Umap) {
        EmbedArg::Umap => EmbedMethod::Nonlinear,
        EmbedArg::Pca => EmbedMethod::Pca,
    };
    Ok(PartitionJob {
        input,
        n_folds,
        strategy,
        embed,
        permutations: positive_permutations(args.permutations.or(file.permutations).unwrap_or(200))?,
        per_image: args.per_image || file.per_image.unwrap_or(false),
    })
}

fn betest_job(args: BetestArgs) -> Result<BetestJob, Exit> {
    let file = load_file_config(args.input.config.as_deref())?;
    let input = input_spec(args.input, &file)?;
    if input.cohort.label_column.is_none() {
        return Err(Exit::usage("betest needs --label-column"));
    }
    Ok(BetestJob {
        input,
        permutations: positive_permutations(args.permutations.or(file.permutations).unwrap_or(200))?,
    })
}

fn synth_job(args: SynthArgs) -> Result<SynthJob, Exit> {
    let spec = SyntheticCohortSpec {
        n_sites: args.sites,
        patients_per_site: args.patients_per_site,
        n_metrics: args.metrics,
        site_separation: args.separation,
        confound_label: args.confound,
        seed: args.seed,
        informative_metrics: args.informative,
    };
    spec.validate().map_err(|e| Exit::usage(e.to_string()))?;
    if args.images_per_patient == 0 {
        return Err(Exit::usage("--images-per-patient must be >= 1"));
    }
    let delimiter = match args.delimiter {
        Some(d) => parse_delimiter(&d)?,
        None => default_delimiter(&args.output),
    };
    Ok(SynthJob {
        spec,
        output: args.output,
        delimiter,
        images_per_patient: args.images_per_patient,
    })
}

/// Parses and validates process arguments (including the program name).
///
/// `--help` / `--version` come back as an [`Exit`] with code 0.
pub fn parse_args<I, T>(argv: I) -> Result<Invocation, Exit>
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = Cli::try_parse_from(argv).map_err(|e| Exit {
        code: if e.use_stderr() { EXIT_USAGE } else { 0 },
        message: e.render().to_string(),
    })?;
    match cli.command {
        Command::Partition(a) => partition_job(a).map(Invocation::Partition),
        Command::Betest(a) => betest_job(a).map(Invocation::Betest),
        Command::Synth(a) => synth_job(a).map(Invocation::Synth),
    }
}

/// Parses, runs and reports; returns the process exit code.
pub fn main_with_args<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    match parse_args(argv) {
        Ok(invocation) => run_pipeline(&invocation),
        Err(exit) => {
            if exit.code == 0 {
                print!("{}", exit.message);
            } else {
                eprintln!("{}", exit.message.trim_end());
            }
            exit.code
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(args: &[&str]) -> Result<Invocation, Exit> {
        parse_args(std::iter::once("cohortsplit").chain(args.iter().copied()))
    }

    fn partition(args: &[&str]) -> PartitionJob {
        match parse(args).unwrap() {
            Invocation::Partition(p) => p,
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn defaults_resolve() {
        let p = partition(&["partition", "--input", "m.tsv", "--testpercent", "0.2", "--seed", "7", "--outdir", "out/"]);
        assert_eq!(p.input.cohort.test_ratio, 0.2);
        assert_eq!(p.input.cohort.seed, 7);
        assert_eq!(p.input.cohort.n_clusters, None);
        assert_eq!(p.input.delimiter, b'\t');
        assert_eq!(p.strategy, Strategy::BestCase);
        assert_eq!(p.embed, EmbedMethod::Nonlinear);
        assert_eq!(p.n_folds, None);
        assert_eq!(p.input.cohort.output_dir, PathBuf::from("out/"));
    }

    #[test]
    fn explicit_flags() {
        let p = partition(&[
            "partition", "--input", "m.csv", "--nclusters", "31", "--strategy", "worstcase", "--embed", "pca",
            "--cols", "a,b", "--patient-id", "regex=^(P\\d+)_",
        ]);
        assert_eq!(p.input.cohort.n_clusters, Some(31));
        assert_eq!(p.input.delimiter, b',');
        assert_eq!(p.strategy, Strategy::WorstCase);
        assert_eq!(p.n_folds, Some(3));
        assert_eq!(p.embed, EmbedMethod::Pca);
        assert_eq!(p.input.cohort.included_columns, Some(vec!["a".into(), "b".into()]));
        assert!(matches!(p.input.cohort.patient_id_rule, PatientIdRule::FilenameRegex(_)));
    }

    #[test]
    fn validation_errors_exit_2() {
        for args in [
            &["partition", "--input", "m.tsv", "--testpercent", "1.5"][..],
            &["partition", "--input", "m.tsv", "--nclusters", "0"],
            &["partition", "--testpercent", "0.2"],
            &["partition", "--input", "m.tsv", "--bogus"],
            &["partition", "--input", "m.tsv", "--patient-id", "regex=nogroup"],
            &["partition", "--input", "m.tsv", "--strategy", "median"],
            &["betest", "--input", "m.tsv"],
        ] {
            let e = parse(args).unwrap_err();
            assert_eq!(e.code, EXIT_USAGE, "{args:?}");
        }
        let e = parse(&["partition", "--input", "m.tsv", "--testpercent", "1.5"]).unwrap_err();
        assert_eq!(e.message, "--testpercent 1.5 outside (0, 1)");
    }

    #[test]
    fn help_exits_zero() {
        let e = parse(&["--help"]).unwrap_err();
        assert_eq!(e.code, 0);
        assert!(e.message.contains("partition"));
    }

    #[test]
    fn flags_override_config_file() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = dir.path().join("c.toml");
        std::fs::write(&cfg, "input = \"from_file.tsv\"\ntestpercent = 0.3\nseed = 5\nstrategy = \"averagecase\"\n").unwrap();
        let p = partition(&["partition", "--config", cfg.to_str().unwrap(), "--seed", "9"]);
        assert_eq!(p.input.input, PathBuf::from("from_file.tsv"));
        assert_eq!(p.input.cohort.test_ratio, 0.3);
        assert_eq!(p.input.cohort.seed, 9);
        assert_eq!(p.strategy, Strategy::AverageCase);

        std::fs::write(&cfg, "testpercent = 2.0\ninput = \"x\"\n").unwrap();
        assert_eq!(parse(&["partition", "--config", cfg.to_str().unwrap()]).unwrap_err().code, EXIT_USAGE);
    }

    #[test]
    fn delimiters() {
        assert_eq!(parse_delimiter("tab").unwrap(), b'\t');
        assert_eq!(parse_delimiter(";").unwrap(), b';');
        assert!(parse_delimiter("::").is_err());
    }
}

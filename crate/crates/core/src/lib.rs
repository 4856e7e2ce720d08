//! Batch-effect-aware cohort partitioning.
//!
//! Per-image QC metrics are aggregated to patients, standardized, embedded in
//! two dimensions and clustered into batch-effect (BE) groups. The groups then
//! drive train/test or fold assignment under three strategies: spread every
//! group across both sides (best case), ignore groups (average case), or keep
//! each group whole (worst case). A separate test checks whether the metrics
//! predict a user label.
//!
//! The numeric core is generic over [`Scalar`] (`f32` or `f64`); the `*64`
//! aliases below name the `f64` instantiations used by the CLI.

pub mod betest;
pub mod clustering;
pub mod embedding;
pub mod error;
pub mod ingest;
pub mod linalg;
pub mod partition;
pub mod report;
pub mod scalar;
pub mod seed;
pub mod synth;

pub use betest::{
    anova_f_test, be_report, bh_adjust, cv_accuracy, permutation_test, rank_features, train_random_forest,
    welch_t_test, BeReport, BeTestParams, FeatureRanking, ForestParams, LabeledCohort, PermutationTestResult,
    RandomForest, TTestResult, TestKind,
};
pub use clustering::{balanced_kmeans, default_cluster_count, kmeans_replicated, ClusterModel, ClusterParams};
pub use embedding::{
    embed_auto, pca_project, umap_embed, EmbedMethod, EmbedParams, Embedding2D, FeatureMatrix, InitKind,
    NeighborGraph,
};
pub use error::{Error, Result};
pub use ingest::{CohortConfig, PatientIdRule, PatientRecord};
pub use partition::{
    folds_average_case, folds_best_case, folds_worst_case, split_average_case, split_best_case, validate_partition,
    BeGroups, FoldAssignment, Partition, PartitionAssignment, Side, Strategy, ValidationReport,
};
pub use scalar::Scalar;
pub use synth::{adjusted_rand_index, generate_synthetic_cohort, SyntheticCohortSpec};

pub type FeatureMatrix64 = FeatureMatrix<f64>;
pub type Embedding64 = Embedding2D<f64>;
pub type ClusterModel64 = ClusterModel<f64>;
pub type PatientRecord64 = PatientRecord<f64>;
pub type LabeledCohort64 = LabeledCohort<f64>;
pub type RandomForest64 = RandomForest<f64>;
pub type FeatureMatrix32 = FeatureMatrix<f32>;
pub type Embedding32 = Embedding2D<f32>;

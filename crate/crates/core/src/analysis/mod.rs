//! Post-hoc statistics over snapshot streams.

mod artifacts;
mod cca;
mod diagnose;
mod features;
mod pca;
mod similarity;

pub use artifacts::{analyze_streams, AnalysisOutput, AnalysisSummary, CcaArtifact};
pub use cca::{
    canonical_products, cca, score_stats, score_stats_csv, CcaResult, ScoreStats, CCA_RIDGE, DEFAULT_CCA_K,
};
pub use diagnose::{diagnose, DiagnosticThresholds, DiagnosticsReport, Flag, FlagKind, LayerTrend};
pub use features::{
    correlation_matrix, extract_features, log10_condition, CorrelationMatrix, FeatureGroups,
    CLASSIFICATION_METRICS, LAYER_FEATURES, LOG10_CONDITION_CAP, REGRESSION_METRICS,
};
pub use pca::{
    architecture_features, pca_architectures, silhouette, ArchitecturePca, PcaPoint, ARCHITECTURE_FEATURES,
};
pub use similarity::{adjacent_layer_similarity, network_weights, profile_similarity, snapshot_weights};

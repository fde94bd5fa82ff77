use std::fs;
use std::path::{Path, PathBuf};

use log::info;
use serde::Serialize;

use super::cca::{canonical_products, cca, score_stats, score_stats_csv, ScoreStats, DEFAULT_CCA_K};
use super::features::{correlation_matrix, extract_features};
use super::pca::{pca_architectures, silhouette};
use crate::error::{Error, Result};
use crate::numerics::DenseMatrix;
use crate::snapshot::Snapshot;

/// CCA artifact for one stream.
#[derive(Debug, Clone, Serialize)]
pub struct CcaArtifact {
    pub run_id: String,
    pub a_names: Vec<String>,
    pub b_names: Vec<String>,
    pub dropped: Vec<String>,
    pub correlations: Vec<f64>,
    pub x_weights: DenseMatrix,
    pub y_weights: DenseMatrix,
    pub scores_x: DenseMatrix,
    pub scores_y: DenseMatrix,
    pub sample_keys: Vec<(String, usize)>,
}

#[derive(Debug, Clone, Serialize)]
pub struct AnalysisSummary {
    pub streams: Vec<String>,
    pub score_stats: Vec<(String, ScoreStats)>,
    pub pca_explained_ratio: Option<Vec<f64>>,
    pub silhouette: Option<f64>,
    pub notices: Vec<String>,
}

#[derive(Debug, Clone)]
pub struct AnalysisOutput {
    pub files: Vec<PathBuf>,
    pub summary: AnalysisSummary,
}

fn write(path: PathBuf, text: &str, files: &mut Vec<PathBuf>) -> Result<()> {
    fs::write(&path, text).map_err(|e| Error::io(&path, e))?;
    info!("wrote {}", path.display());
    files.push(path);
    Ok(())
}

/// CCA artifact plus the per-sample canonical products.
fn stream_cca(stream: &[Snapshot]) -> Result<(CcaArtifact, Vec<f64>)> {
    let full = extract_features(stream)?;
    let (f, dropped) = full.drop_constant();
    let k = DEFAULT_CCA_K.min(f.a.cols()).min(f.b.cols());
    if k == 0 {
        return Err(Error::Degenerate("no non-constant columns left for CCA".into()));
    }
    let r = cca(&f.a, &f.b, k)?;
    let products = canonical_products(&r);
    let art = CcaArtifact {
        run_id: stream[0].run_id.clone(),
        a_names: f.a_names,
        b_names: f.b_names,
        dropped,
        correlations: r.correlations.clone(),
        scores_x: r.scores_x.clone(),
        scores_y: r.scores_y.clone(),
        x_weights: r.x_weights,
        y_weights: r.y_weights,
        sample_keys: f.sample_keys,
    };
    Ok((art, products))
}

/// Writes every analysis artifact for the given streams into `outdir`.
///
/// Per stream: `<run_id>.correlation.csv` and `<run_id>.cca.json`. Across
/// streams: `<prefix>.score_stats.csv`, `<prefix>.pca.csv` (two or more
/// streams) and `<prefix>.summary.json`.
pub fn analyze_streams(streams: &[Vec<Snapshot>], outdir: &Path, prefix: &str) -> Result<AnalysisOutput> {
    if streams.iter().any(|s| s.is_empty()) || streams.is_empty() {
        return Err(Error::InvalidArgument("analysis needs non-empty streams".into()));
    }
    fs::create_dir_all(outdir).map_err(|e| Error::io(outdir, e))?;
    let mut files = Vec::new();
    let mut notices = Vec::new();
    let mut stats = Vec::new();
    let labels: Vec<String> = streams.iter().map(|s| s[0].variant.to_string()).collect();
    let unique_labels = (1..labels.len()).all(|i| !labels[..i].contains(&labels[i]));

    for (stream, label) in streams.iter().zip(&labels) {
        let run_id = &stream[0].run_id;
        let features = extract_features(stream)?;
        match correlation_matrix(&features) {
            Ok(c) => write(outdir.join(format!("{run_id}.correlation.csv")), &c.to_csv(), &mut files)?,
            Err(e) => notices.push(format!("{run_id}: correlation skipped: {e}")),
        }
        match stream_cca(stream) {
            Ok((art, products)) => {
                let json = serde_json::to_string_pretty(&art)?;
                write(outdir.join(format!("{run_id}.cca.json")), &json, &mut files)?;
                let column = if unique_labels { label.clone() } else { run_id.clone() };
                stats.push((column, score_stats(&products)?));
            }
            Err(e) => notices.push(format!("{run_id}: CCA skipped: {e}")),
        }
    }

    if !stats.is_empty() {
        write(outdir.join(format!("{prefix}.score_stats.csv")), &score_stats_csv(&stats), &mut files)?;
    }

    let (mut explained, mut sil) = (None, None);
    if streams.len() >= 2 {
        let refs: Vec<&[Snapshot]> = streams.iter().map(Vec::as_slice).collect();
        match pca_architectures(&refs) {
            Ok(p) => {
                write(outdir.join(format!("{prefix}.pca.csv")), &p.to_csv(), &mut files)?;
                match silhouette(&p.coordinates(), &p.labels()) {
                    Ok(s) => sil = Some(s),
                    Err(e) => notices.push(format!("silhouette skipped: {e}")),
                }
                explained = Some(p.explained_ratio);
            }
            Err(e) => notices.push(format!("PCA skipped: {e}")),
        }
    } else {
        notices.push("PCA skipped: needs at least 2 streams".into());
    }

    let summary = AnalysisSummary {
        streams: streams.iter().map(|s| s[0].run_id.clone()).collect(),
        score_stats: stats,
        pca_explained_ratio: explained,
        silhouette: sil,
        notices,
    };
    write(
        outdir.join(format!("{prefix}.summary.json")),
        &serde_json::to_string_pretty(&summary)?,
        &mut files,
    )?;
    Ok(AnalysisOutput { files, summary })
}

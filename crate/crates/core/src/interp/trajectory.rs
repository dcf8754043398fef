//! Progress measures over a directory of checkpoints.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{
    analyze_params, element_major_embeddings, embedding_fve_with, find_key_reps, progress_losses,
    report_metadata, similarities, Ablator, AnalysisOptions, AnalysisReport, CatalogBases, EmbeddingFve,
    ModelView,
};
use crate::error::{Error, Result};
use crate::group::Group;
use crate::nn::{load_checkpoint, split_dataset};
use crate::rep::IrrepCatalog;

pub const LOGIT_SIMILARITY_CSV: &str = "logit_similarity_over_time.csv";
pub const EMBEDDING_FVE_CSV: &str = "embedding_fve_over_time.csv";
pub const PROGRESS_CSV: &str = "progress_measures.csv";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryPoint {
    pub epoch: usize,
    pub restricted_loss: f64,
    pub excluded_loss: f64,
    pub test_loss: f64,
    pub train_loss: f64,
    pub sum_sq_weights: f64,
    pub logit_similarity: BTreeMap<String, f64>,
    pub embedding_fve: BTreeMap<String, EmbeddingFve>,
}

fn analyze_point(
    path: &Path,
    group: &Group,
    bases: &CatalogBases,
    keys: &[String],
) -> Result<TrajectoryPoint> {
    let ckpt = load_checkpoint(path)?;
    let split = split_dataset(group, ckpt.config.train_frac, ckpt.config.seed)?;
    let view = ModelView::new(group, &ckpt.params)?;
    let (stats, logit_stats) = view.summarize();
    let ablator = Ablator::new(
        &view,
        &stats,
        &logit_stats,
        bases.catalog.irreps(),
        &bases.hidden,
        &bases.output,
    );
    let (restricted_loss, excluded_loss) = progress_losses(&ablator, keys, &split)?;
    let mut embedding_fve = BTreeMap::new();
    for (name, m) in element_major_embeddings(&ckpt.params) {
        embedding_fve.insert(name.to_string(), embedding_fve_with(&m, &bases.nontrivial)?);
    }
    Ok(TrajectoryPoint {
        epoch: ckpt.epoch,
        restricted_loss,
        excluded_loss,
        test_loss: view.loss(&split.test)?.0,
        train_loss: view.loss(&split.train)?.0,
        sum_sq_weights: ckpt.params.sum_sq_weights(),
        logit_similarity: similarities(&logit_stats, group, bases.catalog)?,
        embedding_fve,
    })
}

/// Analyses the last checkpoint in full, then evaluates the progress
/// measures at every checkpoint using the final key irreps.
///
/// `checkpoints` must be sorted by epoch. The final report's key irreps are
/// reordered by the epoch at which their similarity first exceeded the
/// threshold.
pub fn analyze_trajectory(
    checkpoints: &[(usize, PathBuf)],
    group: &Group,
    catalog: &IrrepCatalog,
    opts: &AnalysisOptions,
) -> Result<(AnalysisReport, Vec<TrajectoryPoint>)> {
    let (_, last) = checkpoints
        .last()
        .ok_or_else(|| Error::InvalidArgument("no checkpoints to analyze".into()))?;
    let bases = CatalogBases::new(group, catalog)?;
    let ckpt = load_checkpoint(last)?;
    let split = split_dataset(group, ckpt.config.train_frac, ckpt.config.seed)?;
    let meta = report_metadata(group, catalog, opts, Some(ckpt.epoch), Some(&ckpt.config));
    let mut report = analyze_params(group, &ckpt.params, &bases, &split, opts, meta)?;

    let points = checkpoints
        .par_iter()
        .map(|(_, path)| analyze_point(path, group, &bases, &report.key_reps))
        .collect::<Result<Vec<_>>>()?;

    let mut first_crossing = BTreeMap::new();
    for p in &points {
        for (name, &s) in &p.logit_similarity {
            if s > opts.similarity_threshold {
                first_crossing.entry(name.clone()).or_insert(p.epoch);
            }
        }
    }
    report.key_reps = find_key_reps(
        &report.logit_similarity,
        opts.similarity_threshold,
        Some(&first_crossing),
    );
    Ok((report, points))
}

fn csv_err(path: &Path) -> impl Fn(csv::Error) -> Error + '_ {
    move |e| Error::Format {
        path: path.to_path_buf(),
        reason: e.to_string(),
    }
}

/// Writes the three trajectory CSVs into `dir`. `names` fixes the irrep
/// column order.
pub fn write_trajectory_csvs(dir: &Path, points: &[TrajectoryPoint], names: &[String]) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|source| Error::Io {
        path: dir.to_path_buf(),
        source,
    })?;

    let path = dir.join(PROGRESS_CSV);
    let mut w = csv::Writer::from_path(&path).map_err(csv_err(&path))?;
    w.write_record([
        "epoch",
        "restricted_loss",
        "excluded_loss",
        "test_loss",
        "train_loss",
        "sum_sq_weights",
    ])
    .map_err(csv_err(&path))?;
    for p in points {
        w.write_record([
            p.epoch.to_string(),
            p.restricted_loss.to_string(),
            p.excluded_loss.to_string(),
            p.test_loss.to_string(),
            p.train_loss.to_string(),
            p.sum_sq_weights.to_string(),
        ])
        .map_err(csv_err(&path))?;
    }
    w.flush().map_err(|source| Error::Io {
        path: path.clone(),
        source,
    })?;

    let path = dir.join(LOGIT_SIMILARITY_CSV);
    let mut w = csv::Writer::from_path(&path).map_err(csv_err(&path))?;
    let mut header = vec!["epoch".to_string()];
    header.extend(names.iter().cloned());
    w.write_record(&header).map_err(csv_err(&path))?;
    for p in points {
        let mut row = vec![p.epoch.to_string()];
        row.extend(
            names
                .iter()
                .map(|n| p.logit_similarity.get(n).map_or(String::new(), |v| v.to_string())),
        );
        w.write_record(&row).map_err(csv_err(&path))?;
    }
    w.flush().map_err(|source| Error::Io {
        path: path.clone(),
        source,
    })?;

    let path = dir.join(EMBEDDING_FVE_CSV);
    let mut w = csv::Writer::from_path(&path).map_err(csv_err(&path))?;
    let mut header = vec!["epoch".to_string(), "matrix".to_string()];
    header.extend(names.iter().cloned());
    header.push("residual".into());
    header.push("trivial".into());
    w.write_record(&header).map_err(csv_err(&path))?;
    for p in points {
        for (matrix, fve) in &p.embedding_fve {
            let mut row = vec![p.epoch.to_string(), matrix.clone()];
            row.extend(
                names
                    .iter()
                    .map(|n| fve.fractions.get(n).map_or(String::new(), |v| v.to_string())),
            );
            row.push(fve.residual.to_string());
            row.push(fve.trivial.to_string());
            w.write_record(&row).map_err(csv_err(&path))?;
        }
    }
    w.flush().map_err(|source| Error::Io { path, source })?;
    Ok(())
}

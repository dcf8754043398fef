//! Multi-group, multi-seed sweeps and their aggregate tables.
//!
//! Each cell `(group, seed)` trains into `<out>/<group>_seed<seed>/`, then
//! analyses its checkpoint trajectory. A cell is complete once its
//! `report.json` exists; re-running a sweep skips complete cells. Summaries
//! are always rebuilt from the files on disk, so a resumed sweep and a fresh
//! one write identical bytes.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{Error, IoContext, Result};
use crate::group::{Group, GroupSpec};
use crate::interp::{
    analyze_trajectory, write_trajectory_csvs, AnalysisOptions, AnalysisReport, TrajectoryPoint,
};
use crate::nn::{checkpoint_epochs, train, TrainConfig};
use crate::rep::{CatalogMode, CatalogOptions, IrrepCatalog};

pub const REPORT_FILE: &str = "report.json";
pub const TRAJECTORY_FILE: &str = "trajectory.json";
pub const ERROR_FILE: &str = "error.txt";
pub const SUMMARY_CSV: &str = "summary.csv";
pub const SUMMARY_JSON: &str = "summary.json";

/// Consecutive evaluations above threshold needed to count as learned.
pub const SUSTAIN_EVALS: usize = 3;

/// Groups above this order get a sparser default eval cadence.
const LARGE_ORDER: usize = 256;
const LARGE_EVAL_EVERY: usize = 1000;

fn default_architecture() -> String {
    "mlp".into()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepEntry {
    pub group: GroupSpec,
    #[serde(default = "default_architecture")]
    pub architecture: String,
    pub seeds: Vec<u64>,
    /// Partial [`TrainConfig`] applied on top of the defaults.
    #[serde(default)]
    pub overrides: serde_json::Map<String, Value>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    pub entries: Vec<SweepEntry>,
    #[serde(default)]
    pub out_dir: Option<PathBuf>,
    #[serde(default = "one")]
    pub threads: usize,
    #[serde(default)]
    pub catalog_mode: CatalogMode,
    #[serde(default)]
    pub analysis: AnalysisOptions,
}

fn one() -> usize {
    1
}

/// One training run of a sweep.
#[derive(Clone, Debug, PartialEq)]
pub struct Cell {
    pub group: GroupSpec,
    pub seed: u64,
    pub config: TrainConfig,
}

impl Cell {
    pub fn dir_name(&self) -> String {
        format!("{}_seed{}", self.group, self.seed)
    }
}

impl SweepSpec {
    pub fn from_json_str(s: &str) -> Result<SweepSpec> {
        Ok(serde_json::from_str(s)?)
    }

    pub fn load(path: &Path) -> Result<SweepSpec> {
        SweepSpec::from_json_str(&fs::read_to_string(path).at(path)?)
    }

    /// Validates the sweep and expands it into cells, in entry then seed
    /// order.
    pub fn cells(&self) -> Result<Vec<Cell>> {
        if self.entries.is_empty() {
            return Err(Error::InvalidArgument("sweep has no entries".into()));
        }
        if self.threads == 0 {
            return Err(Error::InvalidArgument("threads must be at least 1".into()));
        }
        let mut seen = BTreeSet::new();
        let mut cells = Vec::new();
        for entry in &self.entries {
            if entry.architecture != "mlp" {
                return Err(Error::InvalidArgument(format!(
                    "unsupported architecture `{}`",
                    entry.architecture
                )));
            }
            if entry.seeds.is_empty() {
                return Err(Error::InvalidArgument(format!(
                    "entry for {} has an empty seed list",
                    entry.group
                )));
            }
            for key in ["group_spec", "seed"] {
                if entry.overrides.contains_key(key) {
                    return Err(Error::InvalidArgument(format!(
                        "`{key}` is set by the sweep and cannot be overridden"
                    )));
                }
            }
            for &seed in &entry.seeds {
                if !seen.insert((entry.group, seed)) {
                    return Err(Error::InvalidArgument(format!(
                        "duplicate cell {} seed {seed}",
                        entry.group
                    )));
                }
                let mut base = TrainConfig::for_group(entry.group, seed);
                if entry.group.order() > LARGE_ORDER {
                    base.eval_every = LARGE_EVAL_EVERY;
                }
                let mut value = serde_json::to_value(base)?;
                let obj = value.as_object_mut().expect("config serializes to an object");
                for (k, v) in &entry.overrides {
                    obj.insert(k.clone(), v.clone());
                }
                let config: TrainConfig = serde_json::from_value(value)?;
                config.validate()?;
                cells.push(Cell {
                    group: entry.group,
                    seed,
                    config,
                });
            }
        }
        Ok(cells)
    }
}

/// First epoch at which each irrep's similarity exceeds `threshold` and
/// stays above it for `sustain` consecutive evaluations (or until the end of
/// a shorter trajectory). `None` means never.
pub fn rep_learning_order(
    series: &[(usize, BTreeMap<String, f64>)],
    threshold: f64,
    sustain: usize,
) -> BTreeMap<String, Option<usize>> {
    let names: BTreeSet<&String> = series.iter().flat_map(|(_, m)| m.keys()).collect();
    names
        .into_iter()
        .map(|name| {
            let above: Vec<bool> = series
                .iter()
                .map(|(_, m)| m.get(name).is_some_and(|&s| s > threshold))
                .collect();
            let first = (0..above.len()).find(|&i| {
                let end = (i + sustain).min(above.len());
                above[i..end].iter().all(|&x| x)
            });
            (name.clone(), first.map(|i| series[i].0))
        })
        .collect()
}

/// Per-cell numbers that feed the aggregate table.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CellDigest {
    pub group: String,
    pub seed: u64,
    pub dir: String,
    /// Key irreps ordered by sustained learning epoch.
    pub key_reps: Vec<String>,
    pub learning_order: BTreeMap<String, Option<usize>>,
    pub test_acc: f64,
    pub logit_fve: f64,
    /// Mean over `w_a` and `w_b` of the combined key-irrep fraction.
    pub embed_fve_key: f64,
    pub unembed_fve_key: f64,
    pub mlp_ab_fve_key: f64,
    pub restricted_loss: f64,
    pub excluded_loss: f64,
}

impl CellDigest {
    pub fn from_report(
        cell_dir: &str,
        seed: u64,
        report: &AnalysisReport,
        trajectory: &[TrajectoryPoint],
        threshold: f64,
    ) -> CellDigest {
        let series: Vec<(usize, BTreeMap<String, f64>)> = trajectory
            .iter()
            .map(|p| (p.epoch, p.logit_similarity.clone()))
            .collect();
        let learning_order = rep_learning_order(&series, threshold, SUSTAIN_EVALS);
        let mut key_reps = report.key_reps.clone();
        key_reps.sort_by_key(|k| learning_order.get(k).copied().flatten().unwrap_or(usize::MAX));
        let fve = |m: &str| {
            report
                .embedding_fve
                .get(m)
                .map_or(0.0, |f| f.combined(&report.key_reps))
        };
        CellDigest {
            group: report.metadata.group.clone(),
            seed,
            dir: cell_dir.to_string(),
            key_reps,
            learning_order,
            test_acc: report.test_acc,
            logit_fve: report.logit_fve,
            embed_fve_key: 0.5 * (fve("w_a") + fve("w_b")),
            unembed_fve_key: fve("w_unembed"),
            mlp_ab_fve_key: report.mlp_ab_fve_key,
            restricted_loss: report.restricted_loss,
            excluded_loss: report.excluded_loss,
        }
    }
}

/// One row of `summary.csv`: mean and population standard deviation per
/// group over its completed cells.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AggregateRow {
    pub group: String,
    pub n_seeds: usize,
    /// Seeds joined by `;`.
    pub seeds: String,
    pub test_acc_mean: f64,
    pub test_acc_std: f64,
    pub logit_fve_mean: f64,
    pub logit_fve_std: f64,
    pub embed_fve_key_mean: f64,
    pub embed_fve_key_std: f64,
    pub unembed_fve_key_mean: f64,
    pub unembed_fve_key_std: f64,
    pub mlp_ab_fve_mean: f64,
    pub mlp_ab_fve_std: f64,
    pub restricted_loss_mean: f64,
    pub restricted_loss_std: f64,
    pub excluded_loss_mean: f64,
    pub excluded_loss_std: f64,
    /// Per-seed key irreps in learned order: names joined by `>`, seeds by
    /// `;`.
    pub key_reps: String,
    /// `name:count` joined by `;`.
    pub key_rep_counts: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CellFailure {
    pub group: String,
    pub seed: u64,
    pub error: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepSummary {
    pub aggregates: Vec<AggregateRow>,
    pub cells: Vec<CellDigest>,
    pub failures: Vec<CellFailure>,
}

fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    (mean, var.sqrt())
}

/// Groups cells in first-appearance order and aggregates each group.
pub fn aggregate_report(cells: &[CellDigest]) -> Vec<AggregateRow> {
    let mut order: Vec<&str> = Vec::new();
    for c in cells {
        if !order.contains(&c.group.as_str()) {
            order.push(&c.group);
        }
    }
    order
        .into_iter()
        .map(|group| {
            let members: Vec<&CellDigest> = cells.iter().filter(|c| c.group == group).collect();
            let stat =
                |f: fn(&CellDigest) -> f64| mean_std(&members.iter().map(|c| f(c)).collect::<Vec<_>>());
            let (test_acc_mean, test_acc_std) = stat(|c| c.test_acc);
            let (logit_fve_mean, logit_fve_std) = stat(|c| c.logit_fve);
            let (embed_fve_key_mean, embed_fve_key_std) = stat(|c| c.embed_fve_key);
            let (unembed_fve_key_mean, unembed_fve_key_std) = stat(|c| c.unembed_fve_key);
            let (mlp_ab_fve_mean, mlp_ab_fve_std) = stat(|c| c.mlp_ab_fve_key);
            let (restricted_loss_mean, restricted_loss_std) = stat(|c| c.restricted_loss);
            let (excluded_loss_mean, excluded_loss_std) = stat(|c| c.excluded_loss);
            let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
            for c in &members {
                for k in &c.key_reps {
                    *counts.entry(k).or_insert(0) += 1;
                }
            }
            AggregateRow {
                group: group.to_string(),
                n_seeds: members.len(),
                seeds: members
                    .iter()
                    .map(|c| c.seed.to_string())
                    .collect::<Vec<_>>()
                    .join(";"),
                test_acc_mean,
                test_acc_std,
                logit_fve_mean,
                logit_fve_std,
                embed_fve_key_mean,
                embed_fve_key_std,
                unembed_fve_key_mean,
                unembed_fve_key_std,
                mlp_ab_fve_mean,
                mlp_ab_fve_std,
                restricted_loss_mean,
                restricted_loss_std,
                excluded_loss_mean,
                excluded_loss_std,
                key_reps: members
                    .iter()
                    .map(|c| c.key_reps.join(">"))
                    .collect::<Vec<_>>()
                    .join(";"),
                key_rep_counts: counts
                    .iter()
                    .map(|(k, v)| format!("{k}:{v}"))
                    .collect::<Vec<_>>()
                    .join(";"),
            }
        })
        .collect()
}

fn csv_error(path: &Path, e: csv::Error) -> Error {
    Error::Format {
        path: path.to_path_buf(),
        reason: e.to_string(),
    }
}

pub fn write_summary_csv(path: &Path, rows: &[AggregateRow]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| csv_error(path, e))?;
    for row in rows {
        w.serialize(row).map_err(|e| csv_error(path, e))?;
    }
    w.flush().at(path)
}

pub fn read_summary_csv(path: &Path) -> Result<Vec<AggregateRow>> {
    let mut r = csv::Reader::from_path(path).map_err(|e| csv_error(path, e))?;
    r.deserialize()
        .collect::<std::result::Result<Vec<AggregateRow>, _>>()
        .map_err(|e| csv_error(path, e))
}

/// Trains and analyses one cell into `dir`.
fn run_cell(cell: &Cell, dir: &Path, catalog: &IrrepCatalog, opts: &AnalysisOptions) -> Result<()> {
    let group = cell.group.build()?;
    log::info!("cell {}: training", cell.dir_name());
    train(&cell.config, Some(dir))?;
    let ckpts = checkpoint_epochs(dir)?;
    log::info!("cell {}: analyzing {} checkpoints", cell.dir_name(), ckpts.len());
    let (report, points) = analyze_trajectory(&ckpts, &group, catalog, opts)?;
    let names: Vec<String> = catalog.nontrivial().map(|i| i.name().to_string()).collect();
    write_trajectory_csvs(dir, &points, &names)?;
    let traj = dir.join(TRAJECTORY_FILE);
    fs::write(&traj, serde_json::to_string(&points)? + "\n").at(&traj)?;
    report.save(&dir.join(REPORT_FILE))
}

/// Reads a completed cell back from disk.
pub fn load_cell(out: &Path, cell_dir: &str, seed: u64, threshold: f64) -> Result<CellDigest> {
    let dir = out.join(cell_dir);
    let report = AnalysisReport::load(&dir.join(REPORT_FILE))?;
    let traj_path = dir.join(TRAJECTORY_FILE);
    let points: Vec<TrajectoryPoint> = serde_json::from_str(&fs::read_to_string(&traj_path).at(&traj_path)?)?;
    Ok(CellDigest::from_report(
        cell_dir, seed, &report, &points, threshold,
    ))
}

pub fn is_complete(out: &Path, cell: &Cell) -> bool {
    out.join(cell.dir_name()).join(REPORT_FILE).is_file()
}

/// Builds and writes the summary from whatever cells are complete on disk.
pub fn summarize(
    out: &Path,
    cells: &[Cell],
    opts: &AnalysisOptions,
    failures: Vec<CellFailure>,
) -> Result<SweepSummary> {
    let digests = cells
        .iter()
        .filter(|c| is_complete(out, c))
        .map(|c| load_cell(out, &c.dir_name(), c.seed, opts.similarity_threshold))
        .collect::<Result<Vec<_>>>()?;
    let summary = SweepSummary {
        aggregates: aggregate_report(&digests),
        cells: digests,
        failures,
    };
    write_summary_csv(&out.join(SUMMARY_CSV), &summary.aggregates)?;
    let json_path = out.join(SUMMARY_JSON);
    fs::write(&json_path, serde_json::to_string_pretty(&summary)? + "\n").at(&json_path)?;
    Ok(summary)
}

/// Runs every incomplete cell on a pool of `spec.threads` workers, then
/// writes the summary. Cell failures are recorded, not propagated.
pub fn run_sweep(spec: &SweepSpec, out: &Path) -> Result<SweepSummary> {
    let cells = spec.cells()?;
    fs::create_dir_all(out).at(out)?;
    let catalog_opts = CatalogOptions {
        mode: spec.catalog_mode,
        ..CatalogOptions::default()
    };
    let mut catalogs: BTreeMap<GroupSpec, (Group, IrrepCatalog)> = BTreeMap::new();
    for cell in &cells {
        if let std::collections::btree_map::Entry::Vacant(e) = catalogs.entry(cell.group) {
            let group = cell.group.build()?;
            let catalog = IrrepCatalog::build(&group, &catalog_opts)?;
            e.insert((group, catalog));
        }
    }

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(spec.threads)
        .build()
        .map_err(|e| Error::InvalidArgument(format!("thread pool: {e}")))?;
    let pending: Vec<&Cell> = cells.iter().filter(|c| !is_complete(out, c)).collect();
    log::info!("sweep: {} cells, {} to run", cells.len(), pending.len());
    let failures: Vec<CellFailure> = pool.install(|| {
        pending
            .par_iter()
            .filter_map(|cell| {
                let dir = out.join(cell.dir_name());
                let (_, catalog) = &catalogs[&cell.group];
                match run_cell(cell, &dir, catalog, &spec.analysis) {
                    Ok(()) => {
                        let _ = fs::remove_file(dir.join(ERROR_FILE));
                        None
                    }
                    Err(e) => {
                        log::error!("cell {} failed: {e}", cell.dir_name());
                        let _ = fs::create_dir_all(&dir);
                        let _ = fs::write(dir.join(ERROR_FILE), format!("{e}\n"));
                        Some(CellFailure {
                            group: cell.group.to_string(),
                            seed: cell.seed,
                            error: e.to_string(),
                        })
                    }
                }
            })
            .collect()
    });
    summarize(out, &cells, &spec.analysis, failures)
}

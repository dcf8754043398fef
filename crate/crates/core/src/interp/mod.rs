//! Reverse-engineering a trained network in terms of group representations.
//!
//! Every analysis works on centered quantities: logits lose their mean over
//! the output `c` for each input pair, activations lose each neuron's mean
//! over all `n²` pairs. Ablations project the centered quantity and then add
//! the removed mean back before the softmax.

mod embed;
mod logits;
mod model;
mod neurons;
mod trajectory;

use std::collections::BTreeMap;
use std::path::Path;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

pub use embed::{embedding_fve, embedding_fve_with, nontrivial_bases, EmbeddingFve};
pub use logits::{center_logits, find_key_reps, logit_fve, logit_similarity, LogitStats, KEY_THRESHOLD};
pub use model::{AblationMode, AblationSpec, AblationTarget, Ablator, LogitEdit, ModelView};
pub use neurons::{
    center_activations, mlp_fve, neuron_clusters, recover_rep_matrices, trace_pattern, unembed_in_rep_basis,
    ActivationStats, ClusterOptions, MlpFve, NeuronClustering, RepRecovery, UnembedPattern, MIXED,
    MLP_FVE_ORDER, OFF, RECOVERY_CUTOFF, RECOVERY_MSE,
};
pub use trajectory::{
    analyze_trajectory, write_trajectory_csvs, TrajectoryPoint, EMBEDDING_FVE_CSV, LOGIT_SIMILARITY_CSV,
    PROGRESS_CSV,
};

use crate::container::Container;
use crate::error::{Error, Result};
use crate::group::Group;
use crate::nn::{
    effective_embeddings, split_dataset, training_metadata, Checkpoint, DataSplit, MlpParams, TrainConfig,
};
use crate::rep::{rep_space_basis, Irrep, IrrepCatalog, PairBlock, RepBasis};

pub const EMBEDDINGS_FORMAT: &str = "gcr-embeddings";

/// Embedding matrices analysed, each with the element axis first.
pub const EMBEDDING_MATRICES: [&str; 3] = ["w_a", "w_b", "w_unembed"];

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AnalysisOptions {
    pub similarity_threshold: f64,
    pub clusters: ClusterOptions,
    /// Relative singular-value cutoff for representation recovery.
    pub recovery_cutoff: f64,
}

impl Default for AnalysisOptions {
    fn default() -> Self {
        AnalysisOptions {
            similarity_threshold: KEY_THRESHOLD,
            clusters: ClusterOptions::default(),
            recovery_cutoff: RECOVERY_CUTOFF,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RecoverySummary {
    pub rank: usize,
    pub expected_rank: usize,
    pub mse: f64,
    pub recovered: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReportMetadata {
    pub group: String,
    pub order: usize,
    pub epoch: Option<usize>,
    pub seed: Option<u64>,
    pub config: Option<TrainConfig>,
    pub catalog_mode: crate::rep::CatalogMode,
    pub options: AnalysisOptions,
    pub conventions: Value,
    pub training: Value,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AnalysisReport {
    pub metadata: ReportMetadata,
    /// Non-trivial irreps only; the centered trivial direction is zero.
    pub logit_similarity: BTreeMap<String, f64>,
    pub key_reps: Vec<String>,
    pub logit_fve: f64,
    pub embedding_fve: BTreeMap<String, EmbeddingFve>,
    pub neuron_clusters: BTreeMap<usize, String>,
    pub cluster_sizes: BTreeMap<String, usize>,
    pub mlp_fve: BTreeMap<String, MlpFve>,
    /// Share of all centered activation variance in the `ρ(ab)` blocks of
    /// the key irreps.
    pub mlp_ab_fve_key: f64,
    pub rep_recovery: BTreeMap<String, RecoverySummary>,
    pub unembed_correlation: BTreeMap<String, f64>,
    pub ablation_losses: BTreeMap<String, f64>,
    pub restricted_loss: f64,
    pub excluded_loss: f64,
    pub train_loss: f64,
    pub test_loss: f64,
    pub train_acc: f64,
    pub test_acc: f64,
    pub sum_sq_weights: f64,
}

impl AnalysisReport {
    pub fn to_json_pretty(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json_str(s: &str) -> Result<AnalysisReport> {
        Ok(serde_json::from_str(s)?)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json_pretty()? + "\n").map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })
    }

    pub fn load(path: &Path) -> Result<AnalysisReport> {
        let s = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        AnalysisReport::from_json_str(&s)
    }
}

/// Analysis conventions written into every report.
pub fn analysis_conventions() -> Value {
    json!({
        "logit_centering": "mean over c removed for every (a, b)",
        "activation_centering": "per-neuron mean over all n^2 pairs removed",
        "mlp_fve_order": MLP_FVE_ORDER.iter().map(|b| b.label()).collect::<Vec<_>>(),
        "mean_restored_after_projection": true,
        "restricted_loss": "test pairs, acts projected onto the ab blocks of the key irreps",
        "excluded_loss": "train pairs, ab blocks of the key irreps removed from the acts",
        "unembed_ablation": "neuron-space projection onto the row space of U_key^T W_U",
        "key_rep_order": "first crossing epoch over a trajectory, else descending similarity",
        "embedding_fve": "element-axis mean removed, trivial share reported separately",
    })
}

/// Catalog-derived bases shared by every checkpoint of one group.
pub struct CatalogBases<'a> {
    pub catalog: &'a IrrepCatalog,
    pub hidden: Vec<crate::rep::HiddenRepBasis>,
    pub output: Vec<RepBasis>,
    pub nontrivial: Vec<RepBasis>,
}

impl<'a> CatalogBases<'a> {
    pub fn new(group: &Group, catalog: &'a IrrepCatalog) -> Result<CatalogBases<'a>> {
        if catalog.order() != group.order() || catalog.group_spec() != group.spec() {
            return Err(Error::InvalidArgument(format!(
                "catalog is for {}, model group is {}",
                catalog.group_spec(),
                group.name()
            )));
        }
        if !catalog.complete() {
            return Err(Error::InvalidArgument(format!(
                "irrep catalog for {} is missing irreps (rank total {} of {})",
                group.name(),
                catalog.rank_total(),
                group.order()
            )));
        }
        let output = catalog
            .irreps()
            .iter()
            .map(rep_space_basis)
            .collect::<Result<Vec<_>>>()?;
        let nontrivial = catalog
            .irreps()
            .iter()
            .zip(&output)
            .filter(|(i, _)| !i.is_trivial())
            .map(|(_, b)| b.clone())
            .collect();
        Ok(CatalogBases {
            catalog,
            hidden: catalog.hidden_bases(group)?,
            output,
            nontrivial,
        })
    }

    fn index(&self, name: &str) -> Result<usize> {
        self.catalog
            .irreps()
            .iter()
            .position(|i| i.name() == name)
            .ok_or_else(|| Error::UnknownIrrep(name.to_string()))
    }
}

/// The three embedding matrices with the element axis as rows.
pub fn element_major_embeddings(params: &MlpParams) -> [(&'static str, DMatrix<f64>); 3] {
    let (w_a, w_b) = effective_embeddings(params);
    [
        ("w_a", w_a.transpose()),
        ("w_b", w_b.transpose()),
        ("w_unembed", params.w_unembed.clone()),
    ]
}

/// Writes `w_a`, `w_b` and `w_unembed` (each `n × h`) in the container
/// format.
pub fn dump_embeddings(path: &Path, params: &MlpParams, meta: Value) -> Result<()> {
    let mut c = Container::new(EMBEDDINGS_FORMAT, meta);
    for (name, m) in element_major_embeddings(params) {
        c.push_matrix(name, &m);
    }
    c.write(path)
}

fn similarities(stats: &LogitStats, group: &Group, catalog: &IrrepCatalog) -> Result<BTreeMap<String, f64>> {
    catalog
        .nontrivial()
        .map(|irrep| {
            let s = match stats.similarity(group, irrep) {
                Err(Error::ZeroNorm(_)) => 0.0,
                other => other?,
            };
            Ok((irrep.name().to_string(), s))
        })
        .collect()
}

fn key_irreps<'c>(catalog: &'c IrrepCatalog, keys: &[String]) -> Result<Vec<&'c Irrep>> {
    keys.iter().map(|k| catalog.get(k)).collect()
}

/// Losses of the `ρ(ab)`-restricted model on `test` and the
/// `ρ(ab)`-excluded model on `train`, for the given key irreps.
pub fn progress_losses(ablator: &Ablator, keys: &[String], split: &DataSplit) -> Result<(f64, f64)> {
    let restricted = ablator.loss(
        &AblationSpec::new(AblationMode::Restrict, AblationTarget::MlpActs, keys),
        &split.test,
    )?;
    let excluded = ablator.loss(
        &AblationSpec::new(AblationMode::Exclude, AblationTarget::MlpActs, keys),
        &split.train,
    )?;
    Ok((restricted, excluded))
}

/// Full analysis of one parameter set.
pub fn analyze_params(
    group: &Group,
    params: &MlpParams,
    bases: &CatalogBases,
    split: &DataSplit,
    opts: &AnalysisOptions,
    metadata: ReportMetadata,
) -> Result<AnalysisReport> {
    let catalog = bases.catalog;
    let view = ModelView::new(group, params)?;
    let (stats, logit_stats) = view.summarize();

    let logit_similarity = similarities(&logit_stats, group, catalog)?;
    let key_reps = find_key_reps(&logit_similarity, opts.similarity_threshold, None);
    let keys = key_irreps(catalog, &key_reps)?;
    let logit_fve = if keys.is_empty() || logit_stats.norm2() == 0.0 {
        0.0
    } else {
        logit_stats.fve(group, &keys)?
    };

    let mut embedding = BTreeMap::new();
    for (name, m) in element_major_embeddings(params) {
        embedding.insert(name.to_string(), embedding_fve_with(&m, &bases.nontrivial)?);
    }

    let clustering = neuron_clusters(&stats, &bases.hidden, &opts.clusters);
    let mut mlp = BTreeMap::new();
    for label in clustering.sizes().keys() {
        if label == OFF || label == MIXED {
            continue;
        }
        let members = clustering.members(label);
        mlp.insert(
            label.clone(),
            mlp_fve(&stats, &members, &bases.hidden[bases.index(label)?])?,
        );
    }

    let total_variance = stats.total_variance();
    let mut mlp_ab_fve_key = 0.0;
    if total_variance > 0.0 {
        for name in &key_reps {
            let energy = stats.block_energy(&bases.hidden[bases.index(name)?], PairBlock::Ab);
            mlp_ab_fve_key += energy.iter().sum::<f64>() / total_variance;
        }
    }

    let mut rep_recovery = BTreeMap::new();
    for (i, irrep) in catalog.irreps().iter().enumerate() {
        if irrep.is_trivial() {
            continue;
        }
        let rec = recover_rep_matrices(&stats, &bases.hidden[i], irrep, opts.recovery_cutoff)?;
        rep_recovery.insert(
            irrep.name().to_string(),
            RecoverySummary {
                rank: rec.rank,
                expected_rank: rec.expected_rank,
                mse: rec.mse,
                recovered: rec.recovered(),
            },
        );
    }

    let mut unembed_correlation = BTreeMap::new();
    for name in &key_reps {
        let i = bases.index(name)?;
        match unembed_in_rep_basis(
            group,
            &stats,
            &params.w_unembed,
            &bases.hidden[i],
            &bases.output[i],
            &catalog.irreps()[i],
        ) {
            Ok(p) => {
                unembed_correlation.insert(name.clone(), p.correlation);
            }
            Err(Error::ZeroNorm(_)) => {}
            Err(e) => return Err(e),
        }
    }

    let ablator = Ablator::new(
        &view,
        &stats,
        &logit_stats,
        catalog.irreps(),
        &bases.hidden,
        &bases.output,
    );
    let (train_loss, train_acc) = view.loss(&split.train)?;
    let (test_loss, test_acc) = view.loss(&split.test)?;
    let (restricted_loss, excluded_loss) = progress_losses(&ablator, &key_reps, split)?;

    let mut ablation_losses = BTreeMap::new();
    ablation_losses.insert("baseline_test".to_string(), test_loss);
    ablation_losses.insert("baseline_train".to_string(), train_loss);
    if !key_reps.is_empty() {
        use AblationMode::*;
        use AblationTarget::*;
        for (mode, target, label) in [
            (Restrict, Logits, "restrict_logits_key"),
            (Exclude, Logits, "exclude_logits_key"),
            (Restrict, MlpActs, "restrict_mlp_ab_key"),
            (Exclude, MlpActs, "exclude_mlp_ab_key"),
            (Restrict, Unembed, "restrict_unembed_key"),
            (Exclude, Unembed, "exclude_unembed_key"),
        ] {
            let loss = ablator.loss(&AblationSpec::new(mode, target, &key_reps), &split.test)?;
            ablation_losses.insert(label.to_string(), loss);
        }
        for name in &key_reps {
            let spec = AblationSpec::new(Exclude, MlpActs, std::slice::from_ref(name));
            ablation_losses.insert(
                format!("exclude_mlp_ab_{name}"),
                ablator.loss(&spec, &split.test)?,
            );
        }
    }

    Ok(AnalysisReport {
        metadata,
        logit_similarity,
        key_reps,
        logit_fve,
        embedding_fve: embedding,
        neuron_clusters: clustering.labels.iter().cloned().enumerate().collect(),
        cluster_sizes: clustering.sizes(),
        mlp_fve: mlp,
        mlp_ab_fve_key: mlp_ab_fve_key.clamp(0.0, 1.0),
        rep_recovery,
        unembed_correlation,
        ablation_losses,
        restricted_loss,
        excluded_loss,
        train_loss,
        test_loss,
        train_acc,
        test_acc,
        sum_sq_weights: params.sum_sq_weights(),
    })
}

pub fn report_metadata(
    group: &Group,
    catalog: &IrrepCatalog,
    opts: &AnalysisOptions,
    epoch: Option<usize>,
    config: Option<&TrainConfig>,
) -> ReportMetadata {
    ReportMetadata {
        group: group.name(),
        order: group.order(),
        epoch,
        seed: config.map(|c| c.seed),
        config: config.cloned(),
        catalog_mode: catalog.mode(),
        options: *opts,
        conventions: analysis_conventions(),
        training: training_metadata(),
    }
}

/// Analysis of a training checkpoint, using the split its config implies.
pub fn analyze_checkpoint(
    ckpt: &Checkpoint,
    group: &Group,
    catalog: &IrrepCatalog,
    opts: &AnalysisOptions,
) -> Result<AnalysisReport> {
    let bases = CatalogBases::new(group, catalog)?;
    let split = split_dataset(group, ckpt.config.train_frac, ckpt.config.seed)?;
    let meta = report_metadata(group, catalog, opts, Some(ckpt.epoch), Some(&ckpt.config));
    analyze_params(group, &ckpt.params, &bases, &split, opts, meta)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::group::{make_cyclic, make_symmetric};
    use crate::nn::{hand_built_gcr, init_params};
    use crate::rep::{natural_permutation_matrices, regular_matrices, CatalogOptions};

    fn catalog(g: &Group) -> IrrepCatalog {
        IrrepCatalog::build(g, &CatalogOptions::default()).unwrap()
    }

    fn analyze_hand_built(g: &Group, mats: &[DMatrix<f64>]) -> AnalysisReport {
        let cat = catalog(g);
        let net = hand_built_gcr(g, mats, 3.0).unwrap();
        let bases = CatalogBases::new(g, &cat).unwrap();
        let split = split_dataset(g, 0.4, 0).unwrap();
        let opts = AnalysisOptions::default();
        let meta = report_metadata(g, &cat, &opts, None, None);
        analyze_params(g, &net.params, &bases, &split, &opts, meta).unwrap()
    }

    #[test]
    fn hand_built_s3_closes_the_loop() {
        let g = make_symmetric(3).unwrap();
        let report = analyze_hand_built(&g, &natural_permutation_matrices(&g).unwrap());
        assert_eq!(report.key_reps, vec!["standard"]);
        assert!((report.logit_fve - 1.0).abs() < 1e-9);
        let base = report.ablation_losses["baseline_test"];
        assert!((report.ablation_losses["restrict_logits_key"] - base).abs() < 1e-9);
        assert!((report.restricted_loss - base).abs() < 1e-9);
        assert!((report.unembed_correlation["standard"] - 1.0).abs() < 1e-9);
        let ln_n = 6f64.ln();
        assert!(
            (report.excluded_loss - ln_n).abs() < 1e-9,
            "{}",
            report.excluded_loss
        );
        assert!(report.rep_recovery["standard"].recovered);
    }

    #[test]
    fn hand_built_c5_uses_both_frequencies() {
        let g = make_cyclic(5).unwrap();
        let report = analyze_hand_built(&g, &regular_matrices(&g));
        assert_eq!(report.key_reps.len(), 2);
        assert!(report.key_reps.contains(&"2d_k=1".to_string()));
        assert!(report.key_reps.contains(&"2d_k=2".to_string()));
        assert!((report.logit_fve - 1.0).abs() < 1e-9);
        let base = report.ablation_losses["baseline_test"];
        assert!((report.restricted_loss - base).abs() < 1e-9);
        for k in &report.key_reps {
            assert!((report.unembed_correlation[k] - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn untrained_network_has_no_key_reps() {
        let g = make_symmetric(4).unwrap();
        let cat = catalog(&g);
        let cfg = TrainConfig {
            d_embed: 64,
            hidden: 64,
            ..TrainConfig::for_group(g.spec(), 0)
        };
        let ckpt = Checkpoint {
            epoch: 0,
            params: init_params(24, &cfg),
            config: cfg,
        };
        let report = analyze_checkpoint(&ckpt, &g, &cat, &AnalysisOptions::default()).unwrap();
        assert!(report.key_reps.is_empty(), "{:?}", report.logit_similarity);
        let ln_n = 24f64.ln();
        assert!(
            (report.restricted_loss - ln_n).abs() < 0.25 * ln_n,
            "{}",
            report.restricted_loss
        );

        let back = AnalysisReport::from_json_str(&report.to_json_pretty().unwrap()).unwrap();
        assert_eq!(back, report);
        for fve in report.embedding_fve.values() {
            assert!((fve.total() - 1.0).abs() < 1e-6);
        }
    }

    #[test]
    fn incomplete_catalog_rejected() {
        let g = make_cyclic(5).unwrap();
        let other = catalog(&make_cyclic(7).unwrap());
        assert!(CatalogBases::new(&g, &other).is_err());
    }

    #[test]
    fn ablation_spec_parsing() {
        let s: AblationSpec = "exclude:mlp_acts:standard,sign:a,ab".parse().unwrap();
        assert_eq!(s.mode, AblationMode::Exclude);
        assert_eq!(s.irreps, vec!["standard", "sign"]);
        assert_eq!(s.to_string(), "exclude:mlp_acts:standard,sign:a,ab");
        assert!("shrink:logits:sign".parse::<AblationSpec>().is_err());
        assert!("exclude:logits:sign:ab".parse::<AblationSpec>().is_err());
        assert!("exclude:mlp_acts:sign:abc".parse::<AblationSpec>().is_err());
    }

    #[test]
    fn restrict_and_exclude_are_complementary() {
        // Restricting and excluding the same blocks splits the centered
        // activations exactly, so the two logit edits add up to the model.
        let g = make_symmetric(3).unwrap();
        let cat = catalog(&g);
        let cfg = TrainConfig {
            d_embed: 16,
            hidden: 16,
            ..TrainConfig::for_group(g.spec(), 0)
        };
        let params = init_params(6, &cfg);
        let bases = CatalogBases::new(&g, &cat).unwrap();
        let view = ModelView::new(&g, &params).unwrap();
        let (stats, _) = view.summarize();
        let i = bases.index("standard").unwrap();
        let hb = &bases.hidden[i];
        let pairs = crate::nn::all_pairs(6);
        let acts = view.activations(&pairs);
        let (centered, _) = center_activations(&acts);
        let coef = hb.coefficients(&stats.sums, crate::rep::PairBlock::Ab);
        let field = hb.element_field(&coef);
        let mut kept = DMatrix::zeros(16, 36);
        for (p, &(a, b)) in pairs.iter().enumerate() {
            kept.set_column(p, &field.row(g.mul(a, b)).transpose());
        }
        let removed = &centered - &kept;
        let re_kept = hb.coefficients(
            &crate::rep::PairSums::new(&g, &removed).unwrap(),
            crate::rep::PairBlock::Ab,
        );
        assert!(re_kept.iter().all(|v| v.abs() < 1e-12));
    }
}

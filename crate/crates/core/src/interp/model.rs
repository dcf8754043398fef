//! Chunked evaluation of a trained network over all pairs, and the
//! ablations built on top of it.
//!
//! Nothing here holds an `n × n²` logit matrix, so S₆ (n = 720) analyses run
//! in bounded memory.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::logits::LogitStats;
use super::neurons::ActivationStats;
use crate::error::{Error, Result};
use crate::group::Group;
use crate::linalg::{matmul, orthonormal_columns};
use crate::nn::{effective_embeddings, per_example_loss, preactivations, MlpParams};
use crate::rep::{HiddenRepBasis, Irrep, PairBlock, PairSums, RepBasis};

/// Pairs evaluated per forward chunk.
const CHUNK: usize = 4096;

/// Rewrites a chunk of logits given its pairs and hidden activations.
pub type LogitEdit<'f> = dyn Fn(&[(usize, usize)], &DMatrix<f64>, &mut DMatrix<f64>) + 'f;

pub struct ModelView<'a> {
    group: &'a Group,
    params: &'a MlpParams,
    w_a: DMatrix<f64>,
    w_b: DMatrix<f64>,
}

impl<'a> ModelView<'a> {
    pub fn new(group: &'a Group, params: &'a MlpParams) -> Result<ModelView<'a>> {
        params.validate()?;
        if params.order() != group.order() {
            return Err(Error::Shape(format!(
                "parameters are for order {}, group has order {}",
                params.order(),
                group.order()
            )));
        }
        let (w_a, w_b) = effective_embeddings(params);
        Ok(ModelView {
            group,
            params,
            w_a,
            w_b,
        })
    }

    pub fn group(&self) -> &Group {
        self.group
    }

    pub fn params(&self) -> &MlpParams {
        self.params
    }

    /// `h × N` post-activations.
    pub fn activations(&self, pairs: &[(usize, usize)]) -> DMatrix<f64> {
        preactivations(&self.w_a, &self.w_b, pairs).map(|v| v.max(0.0))
    }

    fn all_pair_chunks(&self) -> impl Iterator<Item = (usize, Vec<(usize, usize)>)> {
        let n = self.group.order();
        (0..n * n).step_by(CHUNK).map(move |start| {
            let end = (start + CHUNK).min(n * n);
            (start, (start..end).map(|p| (p / n, p % n)).collect())
        })
    }

    /// Activation statistics and centered-logit statistics over all pairs.
    pub fn summarize(&self) -> (ActivationStats, LogitStats) {
        let n = self.group.order();
        let h = self.params.hidden();
        let mut mean = DVector::zeros(h);
        for (_, pairs) in self.all_pair_chunks() {
            for col in self.activations(&pairs).column_iter() {
                mean += col;
            }
        }
        mean /= (n * n) as f64;

        let mut sums = PairSums::zeros(n, h);
        let mut sq_norms = vec![0.0; h];
        let mut logit_stats = LogitStats::zeros(n);
        for (start, pairs) in self.all_pair_chunks() {
            let acts = self.activations(&pairs);
            let logits = matmul(&self.params.w_unembed, false, &acts, false);
            for (col, &(a, b)) in logits.column_iter().zip(&pairs) {
                logit_stats.add_row(self.group.mul(a, b), col.as_slice());
            }
            let mut centered = acts;
            for mut col in centered.column_iter_mut() {
                col -= &mean;
            }
            for (j, row) in centered.row_iter().enumerate() {
                sq_norms[j] += row.norm_squared();
            }
            sums.add_chunk(self.group, start, &centered);
        }
        let stats = ActivationStats {
            mean,
            sums,
            sq_norms,
            pairs: n * n,
        };
        (stats, logit_stats)
    }

    /// Mean cross-entropy and accuracy over `pairs` after `edit` rewrites
    /// each chunk of logits. `edit` sees the pairs, their activations and
    /// the unmodified logits.
    pub fn loss_with(&self, pairs: &[(usize, usize)], edit: &LogitEdit<'_>) -> Result<(f64, f64)> {
        if pairs.is_empty() {
            return Err(Error::InvalidArgument("empty evaluation set".into()));
        }
        let mut total = 0.0;
        let mut correct = 0usize;
        for chunk in pairs.chunks(CHUNK) {
            let acts = self.activations(chunk);
            let mut logits = matmul(&self.params.w_unembed, false, &acts, false);
            edit(chunk, &acts, &mut logits);
            let targets: Vec<usize> = chunk.iter().map(|&(a, b)| self.group.mul(a, b)).collect();
            total += per_example_loss(&logits, &targets).iter().sum::<f64>();
            correct += logits
                .column_iter()
                .zip(&targets)
                .filter(|(col, &t)| crate::nn::argmax(col.iter().copied()) == t)
                .count();
        }
        Ok((total / pairs.len() as f64, correct as f64 / pairs.len() as f64))
    }

    pub fn loss(&self, pairs: &[(usize, usize)]) -> Result<(f64, f64)> {
        self.loss_with(pairs, &|_, _, _| {})
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AblationMode {
    /// Remove the selected directions.
    Exclude,
    /// Keep only the selected directions.
    Restrict,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AblationTarget {
    /// Character directions `χ_ρ(abc⁻¹)` of the centered logits.
    Logits,
    /// Hidden blocks of the centered MLP activations.
    MlpActs,
    /// Neuron-space directions the unembedding maps into the irreps'
    /// output subspaces.
    Unembed,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AblationSpec {
    pub mode: AblationMode,
    pub target: AblationTarget,
    pub irreps: Vec<String>,
    /// Hidden blocks for [`AblationTarget::MlpActs`]; ignored otherwise.
    pub blocks: Vec<String>,
}

impl AblationSpec {
    pub fn new(mode: AblationMode, target: AblationTarget, irreps: &[String]) -> AblationSpec {
        AblationSpec {
            mode,
            target,
            irreps: irreps.to_vec(),
            blocks: vec!["ab".into()],
        }
    }

    fn pair_blocks(&self) -> Result<Vec<PairBlock>> {
        self.blocks
            .iter()
            .map(|b| {
                PairBlock::ALL
                    .into_iter()
                    .find(|p| p.label() == b)
                    .ok_or_else(|| Error::UnknownAblation(format!("block `{b}`")))
            })
            .collect()
    }
}

impl fmt::Display for AblationSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mode = match self.mode {
            AblationMode::Exclude => "exclude",
            AblationMode::Restrict => "restrict",
        };
        let target = match self.target {
            AblationTarget::Logits => "logits",
            AblationTarget::MlpActs => "mlp_acts",
            AblationTarget::Unembed => "unembed",
        };
        write!(f, "{mode}:{target}:{}", self.irreps.join(","))?;
        if self.target == AblationTarget::MlpActs {
            write!(f, ":{}", self.blocks.join(","))?;
        }
        Ok(())
    }
}

/// Parses `mode:target:irrep[,irrep...][:block[,block...]]`, for example
/// `exclude:mlp_acts:standard:ab`.
impl FromStr for AblationSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<AblationSpec> {
        let unknown = || Error::UnknownAblation(s.to_string());
        let parts: Vec<&str> = s.split(':').collect();
        if !(3..=4).contains(&parts.len()) {
            return Err(unknown());
        }
        let mode = match parts[0] {
            "exclude" => AblationMode::Exclude,
            "restrict" => AblationMode::Restrict,
            _ => return Err(unknown()),
        };
        let target = match parts[1] {
            "logits" => AblationTarget::Logits,
            "mlp_acts" => AblationTarget::MlpActs,
            "unembed" => AblationTarget::Unembed,
            _ => return Err(unknown()),
        };
        let irreps: Vec<String> = parts[2]
            .split(',')
            .filter(|x| !x.is_empty())
            .map(String::from)
            .collect();
        let blocks = match parts.get(3) {
            Some(b) if target == AblationTarget::MlpActs => b.split(',').map(String::from).collect(),
            Some(_) => return Err(unknown()),
            None => vec!["ab".into()],
        };
        let spec = AblationSpec {
            mode,
            target,
            irreps,
            blocks,
        };
        spec.pair_blocks()?;
        Ok(spec)
    }
}

/// Everything an ablation needs about one trained model.
pub struct Ablator<'a> {
    view: &'a ModelView<'a>,
    stats: &'a ActivationStats,
    logit_stats: &'a LogitStats,
    irreps: BTreeMap<&'a str, (&'a Irrep, &'a HiddenRepBasis, &'a RepBasis)>,
}

impl<'a> Ablator<'a> {
    /// `irreps`, `hidden` and `output` are parallel slices over the catalog.
    pub fn new(
        view: &'a ModelView<'a>,
        stats: &'a ActivationStats,
        logit_stats: &'a LogitStats,
        irreps: &'a [Irrep],
        hidden: &'a [HiddenRepBasis],
        output: &'a [RepBasis],
    ) -> Ablator<'a> {
        let irreps = irreps
            .iter()
            .zip(hidden)
            .zip(output)
            .map(|((i, h), o)| (i.name(), (i, h, o)))
            .collect();
        Ablator {
            view,
            stats,
            logit_stats,
            irreps,
        }
    }

    fn lookup(&self, name: &str) -> Result<(&'a Irrep, &'a HiddenRepBasis, &'a RepBasis)> {
        self.irreps
            .get(name)
            .copied()
            .ok_or_else(|| Error::UnknownIrrep(name.to_string()))
    }

    /// Loss of the ablated model on `pairs`.
    pub fn loss(&self, spec: &AblationSpec, pairs: &[(usize, usize)]) -> Result<f64> {
        let selected = spec
            .irreps
            .iter()
            .map(|s| self.lookup(s))
            .collect::<Result<Vec<_>>>()?;
        match spec.target {
            AblationTarget::Logits => self.logit_ablation(spec.mode, &selected, pairs),
            AblationTarget::MlpActs => self.mlp_ablation(spec.mode, &selected, &spec.pair_blocks()?, pairs),
            AblationTarget::Unembed => self.unembed_ablation(spec.mode, &selected, pairs),
        }
    }

    fn logit_ablation(
        &self,
        mode: AblationMode,
        selected: &[(&Irrep, &HiddenRepBasis, &RepBasis)],
        pairs: &[(usize, usize)],
    ) -> Result<f64> {
        let group = self.view.group();
        let n = group.order();
        let irreps: Vec<&Irrep> = selected.iter().map(|s| s.0).collect();
        let (q, coefs) = self.logit_stats.key_projection(group, &irreps);
        // Projection of the centered logits: g(abc⁻¹) with g a class function.
        let mut g = vec![0.0; n];
        for (k, coef) in coefs.iter().enumerate() {
            for (x, gx) in g.iter_mut().enumerate() {
                *gx += coef * q[(x, k)] / n as f64;
            }
        }
        let edit = |chunk: &[(usize, usize)], _: &DMatrix<f64>, logits: &mut DMatrix<f64>| {
            for (mut col, &(a, b)) in logits.column_iter_mut().zip(chunk) {
                let x = group.mul(a, b);
                let mean = col.mean();
                for c in 0..n {
                    let proj = g[group.mul(x, group.inv(c))];
                    col[c] = match mode {
                        AblationMode::Restrict => mean + proj,
                        AblationMode::Exclude => col[c] - proj,
                    };
                }
            }
        };
        Ok(self.view.loss_with(pairs, &edit)?.0)
    }

    fn mlp_ablation(
        &self,
        mode: AblationMode,
        selected: &[(&Irrep, &HiddenRepBasis, &RepBasis)],
        blocks: &[PairBlock],
        pairs: &[(usize, usize)],
    ) -> Result<f64> {
        let w_u = &self.view.params().w_unembed;
        // Logit contribution of each selected block, one column per element.
        let mut terms: Vec<(&HiddenRepBasis, PairBlock, DMatrix<f64>)> = Vec::new();
        for &(_, hidden, _) in selected {
            if hidden.is_trivial() {
                continue;
            }
            for &which in blocks {
                let field = hidden.element_field(&hidden.coefficients(&self.stats.sums, which));
                terms.push((hidden, which, matmul(w_u, false, &field, true)));
            }
        }
        let base = w_u * &self.stats.mean;
        let edit = |chunk: &[(usize, usize)], _: &DMatrix<f64>, logits: &mut DMatrix<f64>| {
            for (mut col, &(a, b)) in logits.column_iter_mut().zip(chunk) {
                if mode == AblationMode::Restrict {
                    col.copy_from(&base);
                }
                for (hidden, which, y) in &terms {
                    let e = hidden.element_of(*which, a, b);
                    match mode {
                        AblationMode::Restrict => col += y.column(e),
                        AblationMode::Exclude => col -= y.column(e),
                    }
                }
            }
        };
        Ok(self.view.loss_with(pairs, &edit)?.0)
    }

    fn unembed_ablation(
        &self,
        mode: AblationMode,
        selected: &[(&Irrep, &HiddenRepBasis, &RepBasis)],
        pairs: &[(usize, usize)],
    ) -> Result<f64> {
        let w_u = &self.view.params().w_unembed;
        let h = w_u.ncols();
        // Rows of Ũᵀ W_U over the selected irreps span the neuron directions
        // that reach their output subspaces.
        let rows: Vec<DMatrix<f64>> = selected.iter().map(|s| s.2.coefficients(w_u)).collect();
        let total: usize = rows.iter().map(|r| r.nrows()).sum();
        let mut stacked = DMatrix::zeros(h, total);
        let mut at = 0;
        for r in &rows {
            stacked.columns_mut(at, r.nrows()).copy_from(&r.transpose());
            at += r.nrows();
        }
        let q = orthonormal_columns(&stacked, 1e-10);
        let p_v = matmul(&q, false, &q, true);
        let keep = match mode {
            AblationMode::Restrict => p_v,
            AblationMode::Exclude => DMatrix::identity(h, h) - p_v,
        };
        let w_keep = matmul(w_u, false, &keep, false);
        let bias = w_u * &self.stats.mean - &w_keep * &self.stats.mean;
        let edit = |_: &[(usize, usize)], acts: &DMatrix<f64>, logits: &mut DMatrix<f64>| {
            *logits = matmul(&w_keep, false, acts, false);
            for mut col in logits.column_iter_mut() {
                col += &bias;
            }
        };
        Ok(self.view.loss_with(pairs, &edit)?.0)
    }
}

//! One-hidden-layer ReLU MLP over pairs of group elements.
//!
//! `logits = W_U · ReLU(W_mlp · [W_left e_a ; W_right e_b])`, no biases.
//! Batches are stored with one column per pair, so activations are `h × N`
//! and logits are `n × N`.

mod config;
mod data;
mod gadget;
mod optim;
mod train;

pub use config::{LossKind, TrainConfig};
pub use data::{all_pairs, split_dataset, targets, DataSplit};
pub use gadget::{hand_built_gcr, relu_multiply, HandBuilt};
pub use optim::AdamW;
pub use train::{
    checkpoint_epochs, load_checkpoint, read_metrics_csv, save_checkpoint, train, train_with,
    training_metadata, Checkpoint, MetricRecord, TrainMetrics, TrainOutcome, CHECKPOINT_FORMAT,
    METRICS_HEADER, SUMMARY_FILE,
};

use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::linalg::{frob2, gemm, matmul};

#[derive(Clone, Debug, PartialEq)]
pub struct MlpParams {
    /// `d_embed × n`
    pub w_left: DMatrix<f64>,
    /// `d_embed × n`
    pub w_right: DMatrix<f64>,
    /// `h × 2·d_embed`
    pub w_mlp: DMatrix<f64>,
    /// `n × h`
    pub w_unembed: DMatrix<f64>,
}

pub const PARAM_NAMES: [&str; 4] = ["w_left", "w_right", "w_mlp", "w_unembed"];

impl MlpParams {
    pub fn zeros(n: usize, d_embed: usize, hidden: usize) -> MlpParams {
        MlpParams {
            w_left: DMatrix::zeros(d_embed, n),
            w_right: DMatrix::zeros(d_embed, n),
            w_mlp: DMatrix::zeros(hidden, 2 * d_embed),
            w_unembed: DMatrix::zeros(n, hidden),
        }
    }

    pub fn order(&self) -> usize {
        self.w_left.ncols()
    }

    pub fn d_embed(&self) -> usize {
        self.w_left.nrows()
    }

    pub fn hidden(&self) -> usize {
        self.w_mlp.nrows()
    }

    pub fn validate(&self) -> Result<()> {
        let (n, d, h) = (self.order(), self.d_embed(), self.hidden());
        let ok = self.w_right.shape() == (d, n)
            && self.w_mlp.shape() == (h, 2 * d)
            && self.w_unembed.shape() == (n, h);
        if !ok {
            return Err(Error::Shape(format!(
                "inconsistent parameter shapes: w_left {:?}, w_right {:?}, w_mlp {:?}, w_unembed {:?}",
                self.w_left.shape(),
                self.w_right.shape(),
                self.w_mlp.shape(),
                self.w_unembed.shape()
            )));
        }
        if self.iter().any(|m| m.iter().any(|v| !v.is_finite())) {
            return Err(Error::InvalidArgument(
                "parameters contain non-finite entries".into(),
            ));
        }
        Ok(())
    }

    pub fn iter(&self) -> impl Iterator<Item = &DMatrix<f64>> {
        [&self.w_left, &self.w_right, &self.w_mlp, &self.w_unembed].into_iter()
    }

    pub fn iter_mut(&mut self) -> impl Iterator<Item = &mut DMatrix<f64>> {
        [
            &mut self.w_left,
            &mut self.w_right,
            &mut self.w_mlp,
            &mut self.w_unembed,
        ]
        .into_iter()
    }

    pub fn sum_sq_weights(&self) -> f64 {
        self.iter().map(frob2).sum()
    }
}

/// Independent `N(0, 1/fan_in)` entries, one ChaCha stream per matrix.
///
/// Fan-in is `n` for the one-hot embeddings, `2·d_embed` for `w_mlp` and
/// `h` for `w_unembed`.
pub fn init_params(n: usize, cfg: &TrainConfig) -> MlpParams {
    let (d, h) = (cfg.d_embed, cfg.hidden);
    let draw = |stream: u64, rows: usize, cols: usize, fan_in: usize| {
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        rng.set_stream(stream + 1);
        let normal = Normal::new(0.0, 1.0 / (fan_in as f64).sqrt()).expect("valid std");
        DMatrix::from_fn(rows, cols, |_, _| normal.sample(&mut rng))
    };
    MlpParams {
        w_left: draw(0, d, n, n),
        w_right: draw(1, d, n, n),
        w_mlp: draw(2, h, 2 * d, 2 * d),
        w_unembed: draw(3, n, h, h),
    }
}

/// `(w_a, w_b) = (W_mlp[:, :d] W_left, W_mlp[:, d:] W_right)`, each `h × n`.
pub fn effective_embeddings(params: &MlpParams) -> (DMatrix<f64>, DMatrix<f64>) {
    let d = params.d_embed();
    let left = params.w_mlp.columns(0, d).into_owned();
    let right = params.w_mlp.columns(d, d).into_owned();
    (
        matmul(&left, false, &params.w_left, false),
        matmul(&right, false, &params.w_right, false),
    )
}

/// Full forward record for a batch; column `p` belongs to `pairs[p]`.
#[derive(Clone, Debug)]
pub struct ActivationCache {
    /// `h × N`
    pub preact: DMatrix<f64>,
    /// `h × N`, `max(preact, 0)`
    pub postact: DMatrix<f64>,
    /// `n × N`
    pub logits: DMatrix<f64>,
}

fn check_pairs(n: usize, pairs: &[(usize, usize)]) -> Result<()> {
    if let Some(&(a, b)) = pairs.iter().find(|&&(a, b)| a >= n || b >= n) {
        return Err(Error::InvalidArgument(format!(
            "pair ({a}, {b}) out of range for a group of order {n}"
        )));
    }
    Ok(())
}

/// `preact[:, p] = w_a[:, a_p] + w_b[:, b_p]`.
pub(crate) fn preactivations(
    w_a: &DMatrix<f64>,
    w_b: &DMatrix<f64>,
    pairs: &[(usize, usize)],
) -> DMatrix<f64> {
    let h = w_a.nrows();
    let mut pre = DMatrix::zeros(h, pairs.len());
    for (p, &(a, b)) in pairs.iter().enumerate() {
        let ca = w_a.column(a);
        let cb = w_b.column(b);
        for (i, v) in pre.column_mut(p).iter_mut().enumerate() {
            *v = ca[i] + cb[i];
        }
    }
    pre
}

pub fn forward(params: &MlpParams, pairs: &[(usize, usize)]) -> Result<ActivationCache> {
    check_pairs(params.order(), pairs)?;
    let (w_a, w_b) = effective_embeddings(params);
    let preact = preactivations(&w_a, &w_b, pairs);
    let postact = preact.map(|v| v.max(0.0));
    let logits = matmul(&params.w_unembed, false, &postact, false);
    Ok(ActivationCache {
        preact,
        postact,
        logits,
    })
}

/// Cross-entropy of every column with a stable log-sum-exp.
pub fn per_example_loss(logits: &DMatrix<f64>, targets: &[usize]) -> Vec<f64> {
    logits
        .column_iter()
        .zip(targets)
        .map(|(col, &t)| {
            let m = col.max();
            let lse = m + col.iter().map(|v| (v - m).exp()).sum::<f64>().ln();
            lse - col[t]
        })
        .collect()
}

/// Index of the largest entry, lowest index on ties.
pub fn argmax(values: impl IntoIterator<Item = f64>) -> usize {
    let mut best = (0, f64::NEG_INFINITY);
    for (i, v) in values.into_iter().enumerate() {
        if v > best.1 {
            best = (i, v);
        }
    }
    best.0
}

/// Mean cross-entropy and argmax accuracy.
pub fn loss_and_accuracy(logits: &DMatrix<f64>, targets: &[usize]) -> Result<(f64, f64)> {
    if logits.ncols() != targets.len() {
        return Err(Error::Shape(format!(
            "{} logit columns for {} targets",
            logits.ncols(),
            targets.len()
        )));
    }
    if let Some(&t) = targets.iter().find(|&&t| t >= logits.nrows()) {
        return Err(Error::InvalidArgument(format!("target {t} out of range")));
    }
    if targets.is_empty() {
        return Err(Error::InvalidArgument("empty batch".into()));
    }
    let losses = per_example_loss(logits, targets);
    let correct = logits
        .column_iter()
        .zip(targets)
        .filter(|(col, &t)| argmax(col.iter().copied()) == t)
        .count();
    let n = targets.len() as f64;
    Ok((losses.iter().sum::<f64>() / n, correct as f64 / n))
}

/// Reusable buffers for repeated loss/gradient evaluations on one batch.
pub(crate) struct Workspace {
    pairs: Vec<(usize, usize)>,
    targets: Vec<usize>,
    pre: DMatrix<f64>,
    post: DMatrix<f64>,
    logits: DMatrix<f64>,
    dpost: DMatrix<f64>,
    g_wa: DMatrix<f64>,
    g_wb: DMatrix<f64>,
    g_half: DMatrix<f64>,
}

impl Workspace {
    pub(crate) fn new(params: &MlpParams, pairs: &[(usize, usize)], targets: &[usize]) -> Workspace {
        let (n, h, d, nb) = (params.order(), params.hidden(), params.d_embed(), pairs.len());
        Workspace {
            pairs: pairs.to_vec(),
            targets: targets.to_vec(),
            pre: DMatrix::zeros(h, nb),
            post: DMatrix::zeros(h, nb),
            logits: DMatrix::zeros(n, nb),
            dpost: DMatrix::zeros(h, nb),
            g_wa: DMatrix::zeros(h, n),
            g_wb: DMatrix::zeros(h, n),
            g_half: DMatrix::zeros(h, d),
        }
    }

    /// Mean loss and its gradient, written into `grads`.
    pub(crate) fn loss_and_grad(&mut self, params: &MlpParams, grads: &mut MlpParams) -> f64 {
        let d = params.d_embed();
        let nb = self.pairs.len();
        let left = params.w_mlp.columns(0, d).into_owned();
        let right = params.w_mlp.columns(d, d).into_owned();
        let w_a = matmul(&left, false, &params.w_left, false);
        let w_b = matmul(&right, false, &params.w_right, false);

        for (p, &(a, b)) in self.pairs.iter().enumerate() {
            let ca = w_a.column(a);
            let cb = w_b.column(b);
            let mut pre = self.pre.column_mut(p);
            for i in 0..pre.len() {
                pre[i] = ca[i] + cb[i];
            }
        }
        self.post.zip_apply(&self.pre, |o, v| *o = v.max(0.0));
        gemm(
            1.0,
            &params.w_unembed,
            false,
            &self.post,
            false,
            0.0,
            &mut self.logits,
        );

        // logits become dL/dlogits in place
        let mut loss = 0.0;
        let scale = 1.0 / nb as f64;
        for (mut col, &t) in self.logits.column_iter_mut().zip(&self.targets) {
            let m = col.max();
            let shifted_target = col[t] - m;
            let mut sum = 0.0;
            for v in col.iter_mut() {
                *v = (*v - m).exp();
                sum += *v;
            }
            loss += sum.ln() - shifted_target;
            for v in col.iter_mut() {
                *v *= scale / sum;
            }
            col[t] -= scale;
        }
        let loss = loss * scale;

        gemm(
            1.0,
            &self.logits,
            false,
            &self.post,
            true,
            0.0,
            &mut grads.w_unembed,
        );
        gemm(
            1.0,
            &params.w_unembed,
            true,
            &self.logits,
            false,
            0.0,
            &mut self.dpost,
        );
        self.dpost.zip_apply(&self.pre, |g, v| {
            if v <= 0.0 {
                *g = 0.0
            }
        });

        self.g_wa.fill(0.0);
        self.g_wb.fill(0.0);
        for (p, &(a, b)) in self.pairs.iter().enumerate() {
            let g = self.dpost.column(p);
            let mut ga = self.g_wa.column_mut(a);
            ga += &g;
            let mut gb = self.g_wb.column_mut(b);
            gb += &g;
        }

        gemm(1.0, &left, true, &self.g_wa, false, 0.0, &mut grads.w_left);
        gemm(1.0, &right, true, &self.g_wb, false, 0.0, &mut grads.w_right);
        gemm(
            1.0,
            &self.g_wa,
            false,
            &params.w_left,
            true,
            0.0,
            &mut self.g_half,
        );
        grads.w_mlp.columns_mut(0, d).copy_from(&self.g_half);
        gemm(
            1.0,
            &self.g_wb,
            false,
            &params.w_right,
            true,
            0.0,
            &mut self.g_half,
        );
        grads.w_mlp.columns_mut(d, d).copy_from(&self.g_half);
        loss
    }
}

/// Mean cross-entropy and its exact gradient with respect to every
/// parameter. The ReLU derivative at 0 is taken to be 0.
pub fn loss_and_grad(
    params: &MlpParams,
    pairs: &[(usize, usize)],
    targets: &[usize],
) -> Result<(f64, MlpParams)> {
    params.validate()?;
    check_pairs(params.order(), pairs)?;
    if pairs.len() != targets.len() || pairs.is_empty() {
        return Err(Error::Shape(format!(
            "{} pairs for {} targets",
            pairs.len(),
            targets.len()
        )));
    }
    let mut grads = MlpParams::zeros(params.order(), params.d_embed(), params.hidden());
    let mut ws = Workspace::new(params, pairs, targets);
    let loss = ws.loss_and_grad(params, &mut grads);
    Ok((loss, grads))
}

pub fn backward(params: &MlpParams, pairs: &[(usize, usize)], targets: &[usize]) -> Result<MlpParams> {
    loss_and_grad(params, pairs, targets).map(|(_, g)| g)
}

use std::fs;
use std::path::{Path, PathBuf};

use log::info;
use serde::{Deserialize, Serialize};
use serde_json::json;

use super::data::{split_dataset, targets};
use super::optim::{AdamW, ADAM_EPS};
use super::{forward, init_params, loss_and_accuracy, MlpParams, TrainConfig, Workspace};
use crate::container::Container;
use crate::error::{Error, IoContext, Result};
use crate::group::Group;

pub const CHECKPOINT_FORMAT: &str = "gcr-checkpoint";
pub const METRICS_HEADER: &str = "epoch,train_loss,test_loss,train_acc,test_acc,sum_sq_weights";
pub const SUMMARY_FILE: &str = "train_summary.json";

/// One evaluation on the full train and test sets, taken after `epoch`
/// optimizer steps.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricRecord {
    pub epoch: usize,
    pub train_loss: f64,
    pub test_loss: f64,
    pub train_acc: f64,
    pub test_acc: f64,
    pub sum_sq_weights: f64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct TrainMetrics {
    pub records: Vec<MetricRecord>,
}

impl TrainMetrics {
    pub fn last(&self) -> Option<&MetricRecord> {
        self.records.last()
    }

    pub fn first_epoch(&self, pred: impl Fn(&MetricRecord) -> bool) -> Option<usize> {
        self.records.iter().find(|r| pred(r)).map(|r| r.epoch)
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = MetricsWriter::create(path)?;
        for r in &self.records {
            w.push(r)?;
        }
        Ok(())
    }
}

struct MetricsWriter {
    path: PathBuf,
    inner: csv::Writer<fs::File>,
}

impl MetricsWriter {
    fn create(path: &Path) -> Result<MetricsWriter> {
        let file = fs::File::create(path).at(path)?;
        let inner = csv::WriterBuilder::new().has_headers(true).from_writer(file);
        Ok(MetricsWriter {
            path: path.to_path_buf(),
            inner,
        })
    }

    fn push(&mut self, r: &MetricRecord) -> Result<()> {
        self.inner.serialize(r).map_err(|e| self.csv_error(e))?;
        self.inner.flush().at(&self.path)
    }

    fn csv_error(&self, e: csv::Error) -> Error {
        Error::Format {
            path: self.path.clone(),
            reason: e.to_string(),
        }
    }
}

pub fn read_metrics_csv(path: &Path) -> Result<TrainMetrics> {
    let mut rdr = csv::Reader::from_path(path).map_err(|e| Error::Format {
        path: path.to_path_buf(),
        reason: e.to_string(),
    })?;
    let records = rdr
        .deserialize()
        .collect::<std::result::Result<Vec<MetricRecord>, _>>()
        .map_err(|e| Error::Format {
            path: path.to_path_buf(),
            reason: e.to_string(),
        })?;
    Ok(TrainMetrics { records })
}

#[derive(Clone, Debug, PartialEq)]
pub struct Checkpoint {
    pub epoch: usize,
    pub config: TrainConfig,
    pub params: MlpParams,
}

/// Choices the training setup makes on its own, stamped into every
/// checkpoint and report.
pub fn training_metadata() -> serde_json::Value {
    json!({
        "loss": "mean cross-entropy",
        "init": "normal(0, 1/sqrt(fan_in)) per matrix, ChaCha8 stream per matrix",
        "adam_eps": ADAM_EPS,
        "relu_grad_at_zero": 0.0,
        "warmup": "none",
        "dtype": "f64",
    })
}

pub fn save_checkpoint(path: &Path, ckpt: &Checkpoint) -> Result<()> {
    let meta = json!({
        "epoch": ckpt.epoch,
        "config": ckpt.config,
        "training": training_metadata(),
    });
    let mut c = Container::new(CHECKPOINT_FORMAT, meta);
    let p = &ckpt.params;
    c.push_matrix("w_left", &p.w_left);
    c.push_matrix("w_right", &p.w_right);
    c.push_matrix("w_mlp", &p.w_mlp);
    c.push_matrix("w_unembed", &p.w_unembed);
    c.write(path)
}

pub fn load_checkpoint(path: &Path) -> Result<Checkpoint> {
    let c = Container::read_format(path, CHECKPOINT_FORMAT)?;
    let epoch = c.meta["epoch"].as_u64().ok_or_else(|| Error::Format {
        path: path.to_path_buf(),
        reason: "missing epoch".into(),
    })? as usize;
    let config: TrainConfig = serde_json::from_value(c.meta["config"].clone())?;
    let params = MlpParams {
        w_left: c.require_matrix("w_left", path)?,
        w_right: c.require_matrix("w_right", path)?,
        w_mlp: c.require_matrix("w_mlp", path)?,
        w_unembed: c.require_matrix("w_unembed", path)?,
    };
    params.validate()?;
    Ok(Checkpoint {
        epoch,
        config,
        params,
    })
}

/// `ckpt_<epoch>.bin` files in `dir`, sorted by epoch.
pub fn checkpoint_epochs(dir: &Path) -> Result<Vec<(usize, PathBuf)>> {
    let mut out = Vec::new();
    for entry in fs::read_dir(dir).at(dir)? {
        let path = entry.at(dir)?.path();
        let epoch = path
            .file_name()
            .and_then(|f| f.to_str())
            .and_then(|f| f.strip_prefix("ckpt_"))
            .and_then(|f| f.strip_suffix(".bin"))
            .and_then(|e| e.parse::<usize>().ok());
        if let Some(e) = epoch {
            out.push((e, path));
        }
    }
    out.sort();
    Ok(out)
}

#[derive(Clone, Debug)]
pub struct TrainOutcome {
    pub params: MlpParams,
    pub metrics: TrainMetrics,
    pub checkpoints: Vec<PathBuf>,
}

pub fn train(cfg: &TrainConfig, out_dir: Option<&Path>) -> Result<TrainOutcome> {
    let group = cfg.group_spec.build()?;
    train_with(cfg, &group, out_dir, |_| {})
}

/// Full-batch training. Evaluates after 0 steps, every `eval_every` steps
/// and after the last step; checkpoints likewise on `checkpoint_every`.
///
/// With `out_dir` set, writes `config.json`, a streaming `metrics.csv`,
/// `ckpt_<epoch>.bin` files and finally `train_summary.json`.
pub fn train_with(
    cfg: &TrainConfig,
    group: &Group,
    out_dir: Option<&Path>,
    mut on_eval: impl FnMut(&MetricRecord),
) -> Result<TrainOutcome> {
    cfg.validate()?;
    if group.spec() != cfg.group_spec {
        return Err(Error::InvalidArgument(format!(
            "config is for {}, group is {}",
            cfg.group_spec,
            group.spec()
        )));
    }
    let n = group.order();
    let split = split_dataset(group, cfg.train_frac, cfg.seed)?;
    let train_targets = targets(group, &split.train);
    let test_targets = targets(group, &split.test);

    let mut params = init_params(n, cfg);
    let mut grads = MlpParams::zeros(n, cfg.d_embed, cfg.hidden);
    let mut opt = AdamW::new(&params, cfg.lr, cfg.beta1, cfg.beta2, cfg.weight_decay);
    let mut ws = Workspace::new(&params, &split.train, &train_targets);

    let mut writer = None;
    if let Some(dir) = out_dir {
        fs::create_dir_all(dir).at(dir)?;
        let cfg_path = dir.join("config.json");
        fs::write(&cfg_path, cfg.to_json_pretty()).at(&cfg_path)?;
        writer = Some(MetricsWriter::create(&dir.join("metrics.csv"))?);
    }

    let evaluate = |params: &MlpParams, epoch: usize| -> Result<MetricRecord> {
        let tr = forward(params, &split.train)?;
        let te = forward(params, &split.test)?;
        let (train_loss, train_acc) = loss_and_accuracy(&tr.logits, &train_targets)?;
        let (test_loss, test_acc) = loss_and_accuracy(&te.logits, &test_targets)?;
        Ok(MetricRecord {
            epoch,
            train_loss,
            test_loss,
            train_acc,
            test_acc,
            sum_sq_weights: params.sum_sq_weights(),
        })
    };

    let mut metrics = TrainMetrics::default();
    let mut checkpoints = Vec::new();
    let mut record = |params: &MlpParams,
                      epoch: usize,
                      metrics: &mut TrainMetrics,
                      writer: &mut Option<MetricsWriter>|
     -> Result<()> {
        let r = evaluate(params, epoch)?;
        if !r.train_loss.is_finite() {
            return Err(Error::NonFinite {
                epoch,
                loss: r.train_loss,
            });
        }
        if let Some(w) = writer.as_mut() {
            w.push(&r)?;
        }
        on_eval(&r);
        metrics.records.push(r);
        Ok(())
    };
    let mut save = |params: &MlpParams, epoch: usize| -> Result<()> {
        if let Some(dir) = out_dir {
            let path = dir.join(format!("ckpt_{epoch}.bin"));
            save_checkpoint(
                &path,
                &Checkpoint {
                    epoch,
                    config: cfg.clone(),
                    params: params.clone(),
                },
            )?;
            checkpoints.push(path);
        }
        Ok(())
    };

    record(&params, 0, &mut metrics, &mut writer)?;
    save(&params, 0)?;
    for epoch in 1..=cfg.epochs {
        let loss = ws.loss_and_grad(&params, &mut grads);
        if !loss.is_finite() {
            return Err(Error::NonFinite {
                epoch: epoch - 1,
                loss,
            });
        }
        opt.step(&mut params, &grads);
        let last = epoch == cfg.epochs;
        if epoch % cfg.eval_every == 0 || last {
            record(&params, epoch, &mut metrics, &mut writer)?;
            if epoch % (cfg.eval_every * 50) == 0 {
                let r = metrics.last().unwrap();
                info!(
                    "{} seed {} epoch {epoch}: train {:.3e} test {:.3e} acc {:.3}/{:.3}",
                    cfg.group_spec, cfg.seed, r.train_loss, r.test_loss, r.train_acc, r.test_acc
                );
            }
        }
        if epoch % cfg.checkpoint_every == 0 || last {
            save(&params, epoch)?;
        }
    }

    if let Some(dir) = out_dir {
        let path = dir.join(SUMMARY_FILE);
        let summary = json!({
            "config": cfg,
            "final": metrics.last(),
            "training": training_metadata(),
        });
        fs::write(&path, serde_json::to_string_pretty(&summary)?).at(&path)?;
    }
    Ok(TrainOutcome {
        params,
        metrics,
        checkpoints,
    })
}

use std::io::Write;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::adam::{adam_step, AdamConfig, AdamState};
use super::checkpoint::{Checkpoint, RngState};
use super::loss::{LossBreakdown, LossConfig, LossMode};
use super::network::{BatchItem, Network, NetworkSpec, Sample};
use super::tensor::Real;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub batch_size: usize,
    pub epochs: usize,
    pub loss: LossConfig,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        let adam = AdamConfig::default();
        Self {
            lr: adam.lr,
            beta1: adam.beta1,
            beta2: adam.beta2,
            eps: adam.eps,
            batch_size: 16,
            epochs: 50,
            loss: LossConfig::new(LossMode::CentroidTheta),
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn adam(&self) -> AdamConfig {
        AdamConfig {
            lr: self.lr,
            beta1: self.beta1,
            beta2: self.beta2,
            eps: self.eps,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.lr > 0.0) {
            return Err(Error::Config("learning rate must be positive".into()));
        }
        if self.batch_size == 0 {
            return Err(Error::Config("batch size must be at least 1".into()));
        }
        if !(self.loss.theta_weight >= 0.0) {
            return Err(Error::Config("theta weight must be non-negative".into()));
        }
        Ok(())
    }
}

/// One row of the loss curve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpochLog {
    pub epoch: usize,
    /// Mean mini-batch loss over the epoch.
    pub train: LossBreakdown,
    /// Loss on the held-out set after the epoch, when there is one.
    pub test: Option<LossBreakdown>,
}

impl EpochLog {
    pub fn train_loss(&self) -> f64 {
        self.train.total
    }

    pub fn test_loss(&self) -> Option<f64> {
        self.test.map(|t| t.total)
    }

    /// Held-out loss when available, otherwise the training loss.
    fn selection_loss(&self) -> f64 {
        self.test_loss().unwrap_or(self.train.total)
    }
}

/// Writes `epoch,train_loss,test_loss`; `test_loss` is empty without a held-out set.
pub fn write_loss_csv(path: &Path, log: &[EpochLog]) -> Result<()> {
    let io = |e| Error::Io {
        path: path.to_path_buf(),
        source: e,
    };
    let mut out = String::from("epoch,train_loss,test_loss\n");
    for row in log {
        let test = row.test_loss().map(|v| v.to_string()).unwrap_or_default();
        out.push_str(&format!("{},{},{}\n", row.epoch, row.train_loss(), test));
    }
    std::fs::File::create(path)
        .and_then(|mut f| f.write_all(out.as_bytes()))
        .map_err(io)
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    /// Parameters of the epoch with the lowest held-out loss.
    pub best: Checkpoint,
    pub last: Checkpoint,
    pub log: Vec<EpochLog>,
}

/// Seeded mini-batch Adam training loop.
pub struct Trainer<R> {
    pub net: Network<R>,
    adam: AdamState<R>,
    cfg: TrainConfig,
    rng: ChaCha8Rng,
    epoch: usize,
    log: Vec<EpochLog>,
    best: Option<Checkpoint>,
}

impl<R: Real> Trainer<R> {
    pub fn new(spec: NetworkSpec, cfg: TrainConfig) -> Result<Self> {
        cfg.validate()?;
        let net = Network::init(spec, cfg.seed)?;
        let n = net.param_count();
        Ok(Self {
            net,
            adam: AdamState::new(n),
            cfg,
            rng: ChaCha8Rng::seed_from_u64(cfg.seed.wrapping_add(1)),
            epoch: 0,
            log: Vec::new(),
            best: None,
        })
    }

    /// Continues from a saved state; `cfg.epochs` counts additional epochs.
    pub fn resume(ck: &Checkpoint, cfg: TrainConfig) -> Result<Self> {
        cfg.validate()?;
        let net = ck.network::<R>()?;
        let adam = AdamState {
            m: ck.adam_m.iter().map(|&v| R::of(f64::from(v))).collect(),
            v: ck.adam_v.iter().map(|&v| R::of(f64::from(v))).collect(),
            step: ck.adam_step,
        };
        Ok(Self {
            net,
            adam,
            cfg,
            rng: ck.rng.restore(),
            epoch: ck.epoch,
            log: Vec::new(),
            best: None,
        })
    }

    pub fn config(&self) -> &TrainConfig {
        &self.cfg
    }

    pub fn log(&self) -> &[EpochLog] {
        &self.log
    }

    /// Best checkpoint seen so far. Kept when a later epoch diverges.
    pub fn best(&self) -> Option<&Checkpoint> {
        self.best.as_ref()
    }

    pub fn checkpoint(&self) -> Checkpoint {
        Checkpoint::capture(&self.net, &self.adam, &self.cfg, self.epoch, RngState::capture(&self.rng), self.log.last().map(|l| l.selection_loss()))
    }

    pub fn run_epoch(&mut self, train: &[Sample<R>], test: &[Sample<R>]) -> Result<EpochLog> {
        if train.is_empty() {
            return Err(Error::EmptyInput("training set".into()));
        }
        let epoch = self.epoch;
        let mut order: Vec<usize> = (0..train.len()).collect();
        order.shuffle(&mut self.rng);
        let mut epoch_loss = LossBreakdown::default();
        let adam = self.cfg.adam();
        for chunk in order.chunks(self.cfg.batch_size) {
            let batch: Vec<BatchItem<'_, R>> = chunk.iter().map(|&i| train[i].item()).collect();
            let (loss, grads) = self.net.loss_and_grad(&batch, &self.cfg.loss)?;
            if !loss.is_finite() {
                return Err(Error::Diverged {
                    epoch,
                    reason: format!("batch loss {loss:?}"),
                });
            }
            adam_step(&mut self.net.params, &grads, &mut self.adam, &adam).map_err(|e| Error::Diverged {
                epoch,
                reason: e.to_string(),
            })?;
            epoch_loss.accumulate(&loss, chunk.len() as f64 / train.len() as f64);
        }
        if self.net.params.iter().any(|p| !p.is_finite()) {
            return Err(Error::Diverged {
                epoch,
                reason: "non-finite parameter after update".into(),
            });
        }
        let test_loss = if test.is_empty() {
            None
        } else {
            let items: Vec<_> = test.iter().map(Sample::item).collect();
            Some(self.net.loss(&items, &self.cfg.loss)?)
        };
        self.epoch += 1;
        let row = EpochLog {
            epoch,
            train: epoch_loss,
            test: test_loss,
        };
        self.log.push(row);
        let better = self
            .best
            .as_ref()
            .and_then(|b| b.best_loss)
            .is_none_or(|b| row.selection_loss() < b);
        if better {
            self.best = Some(self.checkpoint());
        }
        Ok(row)
    }

    /// Runs `cfg.epochs` epochs.
    pub fn run(&mut self, train: &[Sample<R>], test: &[Sample<R>]) -> Result<TrainOutcome> {
        for _ in 0..self.cfg.epochs {
            let row = self.run_epoch(train, test)?;
            log::info!(
                "epoch {:>3}  train {:.6}  test {}",
                row.epoch,
                row.train_loss(),
                row.test_loss().map(|v| format!("{v:.6}")).unwrap_or_else(|| "-".into())
            );
        }
        let last = self.checkpoint();
        Ok(TrainOutcome {
            best: self.best.clone().unwrap_or_else(|| last.clone()),
            last,
            log: self.log.clone(),
        })
    }
}

/// Trains a freshly initialized network.
pub fn train<R: Real>(train: &[Sample<R>], test: &[Sample<R>], spec: NetworkSpec, cfg: TrainConfig) -> Result<TrainOutcome> {
    Trainer::<R>::new(spec, cfg)?.run(train, test)
}

use std::time::Instant;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::config::{derive_seed, TrainConfig};
use super::optim::OptimState;
use crate::data::{make_partitions, NormPolicy, PartitionedData};
use crate::domain::{Checkpoint, Regime, SplitRatio, TimeSeries, WindowSample};
use crate::error::{Error, Result};
use crate::models::{self, check_params, ForecasterSpec};

/// One line of the training log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub run_id: String,
    pub epoch: usize,
    pub train_mse: f64,
    pub val_mse: Option<f64>,
    pub wall_ms: u64,
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub checkpoint: Checkpoint,
    pub log: Vec<EpochRecord>,
}

/// Runs exactly `cfg.epochs` epochs of mini-batch training from `start`.
///
/// `shuffle_seed` drives the per-epoch permutation. Validation windows are only
/// scored for the log.
pub fn train_windows(
    start: &Checkpoint,
    train: &[&WindowSample],
    val: &[&WindowSample],
    cfg: &TrainConfig,
    shuffle_seed: u64,
    run_id: &str,
) -> Result<TrainOutcome> {
    cfg.validate()?;
    if !start.is_trainable() {
        return Err(Error::NotTrainable);
    }
    check_params(&start.spec, &start.params)?;
    if train.is_empty() {
        return Err(Error::NoWindows(format!("{run_id}: zero training windows")));
    }

    let spec = &start.spec;
    let mut params = start.params.clone();
    let mut state = OptimState::new(&params, cfg.lr, cfg.optimizer);
    let mut grads: Vec<Vec<f64>> = params.iter().map(|p| vec![0.0; p.values.len()]).collect();
    let mut order: Vec<usize> = (0..train.len()).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(shuffle_seed);
    let mut log = Vec::with_capacity(cfg.epochs);
    let val_owned: Vec<WindowSample> = val.iter().map(|w| (*w).clone()).collect();

    for epoch in 0..cfg.epochs {
        let clock = Instant::now();
        if cfg.shuffle {
            order.shuffle(&mut rng);
        }
        let mut weighted = 0.0;
        for chunk in order.chunks(cfg.batch_size) {
            let batch: Vec<&WindowSample> = chunk.iter().map(|&i| train[i]).collect();
            grads.iter_mut().for_each(|g| g.iter_mut().for_each(|v| *v = 0.0));
            let loss = models::accumulate_grad(spec, &params, &batch, &mut grads)?;
            weighted += loss * batch.len() as f64;
            state.step(&mut params, &grads)?;
        }
        let val_mse = if val_owned.is_empty() {
            None
        } else {
            Some(models::batch_loss(spec, &params, &val_owned)?)
        };
        log.push(EpochRecord {
            run_id: run_id.to_string(),
            epoch,
            train_mse: weighted / train.len() as f64,
            val_mse,
            wall_ms: clock.elapsed().as_millis() as u64,
        });
    }

    let mut checkpoint = start.clone();
    checkpoint.params = params;
    checkpoint.provenance.epochs += cfg.epochs;
    Ok(TrainOutcome { checkpoint, log })
}

/// One round of incremental fine-tuning: continue from `old` on partition `p`'s
/// train windows only. Optimizer state starts fresh.
pub fn incremental_finetune(
    old: &Checkpoint,
    data: &PartitionedData,
    p: usize,
    cfg: &TrainConfig,
    run_id: &str,
) -> Result<TrainOutcome> {
    if !old.is_trainable() {
        return Err(Error::NotTrainable);
    }
    let train: Vec<&WindowSample> = data.train(p)?.iter().collect();
    let val: Vec<&WindowSample> = data.val(p)?.iter().collect();
    let mut outcome = train_windows(old, &train, &val, cfg, derive_seed(cfg.seed, p as u64), run_id)?;
    let prov = &mut outcome.checkpoint.provenance;
    prov.regime = Regime::Incremental;
    prov.partitions_seen.push(p);
    prov.seed = cfg.seed;
    Ok(outcome)
}

/// Starting point of full training.
#[derive(Debug, Clone)]
pub enum FullStart<'a> {
    /// Native small model: fresh seeded initialization.
    Fresh(&'a ForecasterSpec),
    /// Pretrained model: begin from its pretrained checkpoint.
    Pretrained(&'a Checkpoint),
}

/// Trains on the union of the train windows of partitions `0..=p`.
pub fn full_train(
    start: FullStart<'_>,
    data: &PartitionedData,
    p: usize,
    cfg: &TrainConfig,
    run_id: &str,
) -> Result<TrainOutcome> {
    let initial = match start {
        FullStart::Fresh(spec) => {
            if !spec.is_trainable() {
                return Err(Error::NotTrainable);
            }
            models::init_params(spec, cfg.seed)?
        }
        FullStart::Pretrained(ckpt) => ckpt.clone(),
    };
    let mut train: Vec<&WindowSample> = Vec::new();
    let mut val: Vec<&WindowSample> = Vec::new();
    for q in 0..=p {
        train.extend(data.train(q)?);
        val.extend(data.val(q)?);
    }
    let mut outcome = train_windows(&initial, &train, &val, cfg, derive_seed(cfg.seed, p as u64), run_id)?;
    let prov = &mut outcome.checkpoint.provenance;
    prov.regime = Regime::Full;
    prov.partitions_seen = (0..=p).collect();
    prov.seed = cfg.seed;
    Ok(outcome)
}

/// Trains a fresh model on windows pooled from every corpus series.
///
/// Each series is treated as a single partition split by `ratio` and normalized with
/// its own train-range statistics; its train windows feed the optimizer and its val
/// windows feed the log.
pub fn pretrain(
    spec: &ForecasterSpec,
    corpus: &[TimeSeries],
    ratio: SplitRatio,
    cfg: &TrainConfig,
    run_id: &str,
) -> Result<TrainOutcome> {
    if corpus.is_empty() {
        return Err(Error::NoWindows("pretraining corpus is empty".into()));
    }
    let parts = corpus
        .iter()
        .map(|series| {
            let plan = make_partitions(series.len(), 1, ratio)?;
            PartitionedData::build(series, &plan, spec.context, spec.horizon, NormPolicy::PerPartition)
        })
        .collect::<Result<Vec<_>>>()?;
    let mut train: Vec<&WindowSample> = Vec::new();
    let mut val: Vec<&WindowSample> = Vec::new();
    for data in &parts {
        train.extend(data.train(0)?);
        val.extend(data.val(0)?);
    }
    if train.is_empty() {
        return Err(Error::NoWindows("pretraining corpus yields no windows".into()));
    }
    let initial = models::init_params(spec, cfg.seed)?;
    let mut outcome = train_windows(&initial, &train, &val, cfg, derive_seed(cfg.seed, 0), run_id)?;
    let prov = &mut outcome.checkpoint.provenance;
    prov.regime = Regime::Pretrain;
    prov.partitions_seen.clear();
    prov.seed = cfg.seed;
    Ok(outcome)
}

//! Optimizers and the three training regimes: pretraining, incremental
//! fine-tuning and full retraining.

mod config;
mod optim;
mod regimes;

pub use config::{derive_seed, OptimizerKind, TrainConfig};
pub use optim::{adamw_step, OptimState};
pub use regimes::{
    full_train, incremental_finetune, pretrain, train_windows, EpochRecord, FullStart, TrainOutcome,
};

//! MSE evaluation, regime ratios, the MSE moment expansion, forgetting matrices and
//! plasticity trends.

mod forgetting;
mod moments;
mod mse;
mod ratios;
mod trend;

pub use forgetting::{forgetting_matrix, ForgettingMatrix};
pub use moments::{moment_decomposition, MomentReport};
pub use mse::{evaluate, mse_eval, Evaluation};
pub use ratios::ratio_metrics;
pub use trend::{plasticity_trend, PlasticityTrend, DEFAULT_SPIKE_FACTOR};

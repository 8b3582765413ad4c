use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::data::{load_csv, make_partitions, window_count, CsvSchema, NormPolicy, ShiftScript};
use crate::domain::{Regime, SplitRatio, TimeSeries};
use crate::error::{Error, Result};
use crate::metrics::DEFAULT_SPIKE_FACTOR;
use crate::models::{ForecasterSpec, ModelKind, DEFAULT_HIDDEN, DEFAULT_KERNEL};
use crate::plugin::PluginDescriptor;
use crate::training::{derive_seed, TrainConfig};

/// Where the evaluated series comes from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DatasetConfig {
    Csv {
        path: PathBuf,
        #[serde(flatten)]
        schema: CsvSchema,
    },
    Synthetic {
        script: ShiftScript,
        length: usize,
        #[serde(default = "one")]
        channels: usize,
        /// Fixed generator seed; when absent each run seed generates its own stream.
        #[serde(default)]
        seed: Option<u64>,
    },
}

impl DatasetConfig {
    /// Loads or generates the series for run seed `run_seed`. Synthetic event steps are
    /// laid out for `partitions` partitions.
    pub fn materialize(&self, base_dir: &Path, partitions: usize, run_seed: u64) -> Result<TimeSeries> {
        match self {
            DatasetConfig::Csv { path, schema } => load_csv(resolve(base_dir, path), schema),
            DatasetConfig::Synthetic {
                script,
                length,
                channels,
                seed,
            } => Ok(crate::data::gen_synthetic(
                script,
                *length,
                *channels,
                partitions,
                seed.unwrap_or(run_seed),
            )?
            .series),
        }
    }

    /// Whether the series is the same for every run seed.
    pub fn is_seed_independent(&self) -> bool {
        !matches!(self, DatasetConfig::Synthetic { seed: None, .. })
    }
}

/// What a model entry runs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ModelSource {
    NaiveSeasonal {
        #[serde(default = "one")]
        season: usize,
    },
    LinearDirect {
        #[serde(default = "default_kernel")]
        kernel: usize,
    },
    Mlp {
        #[serde(default = "default_hidden")]
        hidden: Vec<usize>,
    },
    Plugin(PluginDescriptor),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelEntry {
    pub id: String,
    #[serde(flatten)]
    pub source: ModelSource,
    /// Overrides the experiment horizon for this model.
    #[serde(default)]
    pub horizon: Option<usize>,
    /// Pretrained checkpoint to use instead of pretraining on the corpus.
    #[serde(default)]
    pub checkpoint: Option<PathBuf>,
}

impl ModelEntry {
    pub fn native_kind(&self) -> Option<ModelKind> {
        match &self.source {
            ModelSource::NaiveSeasonal { season } => Some(ModelKind::NaiveSeasonal { season: *season }),
            ModelSource::LinearDirect { kernel } => Some(ModelKind::LinearDirect { kernel: *kernel }),
            ModelSource::Mlp { hidden } => Some(ModelKind::Mlp { hidden: hidden.clone() }),
            ModelSource::Plugin(_) => None,
        }
    }

    pub fn is_plugin(&self) -> bool {
        matches!(self.source, ModelSource::Plugin(_))
    }

    pub fn horizon(&self, default: usize) -> usize {
        self.horizon.unwrap_or(default)
    }
}

/// Pretraining corpus shared by every trainable native model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PretrainConfig {
    pub corpus: Vec<DatasetConfig>,
    /// Training settings for pretraining; defaults to the experiment's.
    #[serde(default)]
    pub train: Option<TrainConfig>,
}

/// Starting point of each incremental round.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IncrementalStart {
    /// Round `p` continues from round `p - 1`'s checkpoint.
    #[default]
    Chained,
    /// Every round restarts from the initial (pretrained or fresh) checkpoint.
    Pristine,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default = "default_name")]
    pub name: String,
    pub dataset: DatasetConfig,
    #[serde(default = "default_partitions")]
    pub partitions: usize,
    #[serde(default)]
    pub ratio: SplitRatio,
    #[serde(default = "default_length")]
    pub context: usize,
    #[serde(default = "default_length")]
    pub horizon: usize,
    #[serde(default)]
    pub normalization: NormPolicy,
    pub models: Vec<ModelEntry>,
    #[serde(default = "default_regimes")]
    pub regimes: Vec<Regime>,
    #[serde(default)]
    pub train: TrainConfig,
    #[serde(default)]
    pub pretrain: Option<PretrainConfig>,
    #[serde(default)]
    pub incremental_start: IncrementalStart,
    #[serde(default = "default_seeds")]
    pub seeds: Vec<u64>,
    #[serde(default = "default_output")]
    pub output: PathBuf,
    #[serde(default = "default_spike_factor")]
    pub spike_factor: f64,
}

fn one() -> usize {
    1
}
fn default_kernel() -> usize {
    DEFAULT_KERNEL
}
fn default_hidden() -> Vec<usize> {
    DEFAULT_HIDDEN.to_vec()
}
fn default_name() -> String {
    "experiment".into()
}
fn default_partitions() -> usize {
    10
}
fn default_length() -> usize {
    96
}
fn default_regimes() -> Vec<Regime> {
    vec![Regime::Zero, Regime::Incremental, Regime::Full]
}
fn default_seeds() -> Vec<u64> {
    vec![0]
}
fn default_output() -> PathBuf {
    PathBuf::from("results")
}
fn default_spike_factor() -> f64 {
    DEFAULT_SPIKE_FACTOR
}

pub(crate) fn resolve(base_dir: &Path, path: &Path) -> PathBuf {
    if path.is_absolute() {
        path.to_path_buf()
    } else {
        base_dir.join(path)
    }
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    /// Reads a config file. Relative paths inside it resolve against its directory.
    pub fn load(path: &Path) -> Result<(Self, PathBuf)> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Ok((Self::from_json(&text)?, base))
    }

    pub fn wants(&self, regime: Regime) -> bool {
        self.regimes.contains(&regime)
    }

    /// Native spec of `entry` for `channels` channels, or `None` for plugins.
    pub fn spec_for(&self, entry: &ModelEntry, channels: usize) -> Option<ForecasterSpec> {
        entry.native_kind().map(|kind| ForecasterSpec {
            kind,
            context: self.context,
            horizon: entry.horizon(self.horizon),
            channels,
        })
    }

    /// Whether `entry` has a pretrained starting point.
    pub fn has_pretrain_source(&self, entry: &ModelEntry) -> bool {
        entry.checkpoint.is_some() || self.pretrain.as_ref().is_some_and(|p| !p.corpus.is_empty())
    }

    /// Series of the pretraining corpus for run seed `run_seed`.
    pub fn corpus(&self, base_dir: &Path, run_seed: u64) -> Result<Vec<TimeSeries>> {
        let Some(pretrain) = &self.pretrain else {
            return Ok(Vec::new());
        };
        pretrain
            .corpus
            .iter()
            .enumerate()
            .map(|(i, d)| d.materialize(base_dir, self.partitions.max(1), derive_seed(run_seed, 1_000 + i as u64)))
            .collect()
    }

    /// Schema, cross-field and filesystem checks. Empty iff the config is runnable.
    pub fn findings(&self, base_dir: &Path) -> Vec<String> {
        let mut out = Vec::new();
        if self.partitions == 0 {
            out.push("partition count P must be at least 1".into());
        }
        if self.ratio.train == 0 || self.ratio.test == 0 {
            out.push("split ratio needs non-zero train and test parts".into());
        }
        if self.context == 0 || self.horizon == 0 {
            out.push("context length l and horizon h must be at least 1".into());
        }
        if self.models.is_empty() {
            out.push("no models configured".into());
        }
        if self.regimes.is_empty() {
            out.push("no regimes configured".into());
        }
        if self.regimes.contains(&Regime::Pretrain) {
            out.push("regime pretrain is not an evaluation regime; use zero, incremental, full".into());
        }
        if self.regimes.iter().collect::<BTreeSet<_>>().len() != self.regimes.len() {
            out.push("regimes listed more than once".into());
        }
        if self.seeds.is_empty() {
            out.push("no seeds configured".into());
        }
        if self.seeds.iter().collect::<BTreeSet<_>>().len() != self.seeds.len() {
            out.push("seeds listed more than once".into());
        }
        if !(self.spike_factor > 0.0) {
            out.push(format!("spike_factor must be positive, got {}", self.spike_factor));
        }
        out.extend(self.train.findings().into_iter().map(|f| format!("train: {f}")));
        if self.output.is_file() {
            out.push(format!("output {} is an existing file", self.output.display()));
        }

        let (length, channels) = self.dataset_findings(&self.dataset, base_dir, "dataset", &mut out);

        if let (Some(t), true) = (length, self.partitions > 0) {
            if self.partitions > t {
                out.push(format!(
                    "partition count P={} exceeds series length T={t}",
                    self.partitions
                ));
            } else if self.ratio.train > 0 && self.ratio.test > 0 {
                match make_partitions(t, self.partitions, self.ratio) {
                    Ok(plan) => {
                        for model in &self.models {
                            let h = model.horizon(self.horizon);
                            let short: Vec<String> = plan
                                .partitions
                                .iter()
                                .filter(|p| window_count(p.test.len(), self.context, h) == 0)
                                .map(|p| p.index.to_string())
                                .collect();
                            if !short.is_empty() {
                                out.push(format!(
                                    "model {}: test range of partitions {} shorter than l+h={}",
                                    model.id,
                                    short.join(","),
                                    self.context + h
                                ));
                            }
                        }
                    }
                    Err(e) => out.push(e.to_string()),
                }
            }
        }

        let mut ids = BTreeSet::new();
        for model in &self.models {
            if model.id.is_empty() || model.id.contains([',', '/', '\n']) {
                out.push(format!("model id {:?} must be non-empty without ',', '/' or newlines", model.id));
            }
            if !ids.insert(model.id.as_str()) {
                out.push(format!("model id {} used more than once", model.id));
            }
            if model.horizon == Some(0) {
                out.push(format!("model {}: horizon must be at least 1", model.id));
            }
            let h = model.horizon(self.horizon);
            match &model.source {
                ModelSource::Plugin(desc) => {
                    if model.checkpoint.is_some() {
                        out.push(format!("model {}: plugins do not take a checkpoint", model.id));
                    }
                    if desc.command.is_empty() {
                        out.push(format!("model {}: plugin command is empty", model.id));
                    }
                    if let (Some(caps), Some(c)) = (&desc.capabilities, channels) {
                        out.extend(
                            caps.violations(self.context, h, c)
                                .into_iter()
                                .map(|v| format!("model {}: {v}", model.id)),
                        );
                    }
                }
                _ => {
                    let spec = self.spec_for(model, channels.unwrap_or(1)).expect("native");
                    out.extend(spec.findings().into_iter().map(|f| format!("model {}: {f}", model.id)));
                    if spec.is_trainable() && self.wants(Regime::Zero) && !self.has_pretrain_source(model) {
                        out.push(format!(
                            "model {}: regime zero for a trainable model needs a pretrain corpus or pretrained checkpoint",
                            model.id
                        ));
                    }
                    if let Some(path) = &model.checkpoint {
                        let path = resolve(base_dir, path);
                        match crate::models::load(&path) {
                            Ok(ckpt) if ckpt.spec != spec => out.push(format!(
                                "model {}: checkpoint {} was built for a different spec",
                                model.id,
                                path.display()
                            )),
                            Ok(_) => {}
                            Err(e) => out.push(format!("model {}: {e}", model.id)),
                        }
                    }
                }
            }
        }

        if let Some(pretrain) = &self.pretrain {
            if let Some(train) = &pretrain.train {
                out.extend(train.findings().into_iter().map(|f| format!("pretrain.train: {f}")));
            }
            for (i, d) in pretrain.corpus.iter().enumerate() {
                let (_, c) = self.dataset_findings(d, base_dir, &format!("pretrain.corpus[{i}]"), &mut out);
                if let (Some(c), Some(want)) = (c, channels) {
                    if c != want {
                        out.push(format!(
                            "pretrain.corpus[{i}]: {c} channels, evaluated series has {want}"
                        ));
                    }
                }
            }
        }
        out
    }

    /// Checks one dataset entry; returns its length and channel count when known.
    fn dataset_findings(
        &self,
        dataset: &DatasetConfig,
        base_dir: &Path,
        label: &str,
        out: &mut Vec<String>,
    ) -> (Option<usize>, Option<usize>) {
        match dataset {
            DatasetConfig::Csv { path, schema } => {
                let path = resolve(base_dir, path);
                match load_csv(&path, schema) {
                    Ok(series) => (Some(series.len()), Some(series.channels())),
                    Err(e) => {
                        out.push(format!("{label}: {e}"));
                        (None, None)
                    }
                }
            }
            DatasetConfig::Synthetic {
                script,
                length,
                channels,
                ..
            } => {
                let partitions = self.partitions.max(1);
                if label != "dataset" && *length < partitions {
                    out.push(format!("{label}: length {length} is shorter than P={partitions}"));
                }
                if *channels == 0 {
                    out.push(format!("{label}: channels must be at least 1"));
                }
                out.extend(
                    script
                        .validate((*channels).max(1), partitions)
                        .into_iter()
                        .map(|f| format!("{label}: {f}")),
                );
                (Some(*length), Some(*channels))
            }
        }
    }
}

/// Findings for the config file at `path`; unreadable or unparseable files yield one finding.
pub fn validate_config(path: &Path) -> Vec<String> {
    match ExperimentConfig::load(path) {
        Ok((config, base)) => config.findings(&base),
        Err(e) => vec![format!("{}: {e}", path.display())],
    }
}

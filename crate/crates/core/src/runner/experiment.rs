use std::collections::{BTreeMap, HashMap};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::config::{resolve, ExperimentConfig, IncrementalStart, ModelEntry, ModelSource};
use super::io::{metrics_csv, write_atomic};
use crate::data::{make_partitions, PartitionedData};
use crate::domain::{Checkpoint, MetricRow, MetricsTable, RatioRow, Regime, WindowSample};
use crate::error::{Error, Result};
use crate::metrics::{
    evaluate, moment_decomposition, plasticity_trend, ratio_metrics, Evaluation, ForgettingMatrix, MomentReport,
    PlasticityTrend,
};
use crate::models::{self, Forecaster, ForecasterSpec, NativeForecaster};
use crate::plugin::{PluginDescriptor, PluginSession, RemoteForecaster};
use crate::training::{self, EpochRecord, FullStart, TrainConfig};

/// Overrides applied on top of the config file.
#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    pub output: Option<PathBuf>,
    pub seeds: Option<Vec<u64>>,
    /// Worker threads; `None` uses every core.
    pub jobs: Option<usize>,
}

/// Why one (model, seed) lineage produced no rows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FailureRecord {
    pub model_id: String,
    pub model: String,
    pub seed: u64,
    pub error: String,
}

/// Checksums around one incremental round.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LineageStep {
    pub p: usize,
    pub input_sha256: String,
    pub output_sha256: String,
    pub checkpoint: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MomentEntry {
    pub regime: Regime,
    pub p: usize,
    pub report: MomentReport,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSummary {
    pub model_id: String,
    pub model: String,
    pub seed: u64,
    /// Keyed by ratio name; present when at least three values are defined.
    pub trends: BTreeMap<String, PlasticityTrend>,
    pub forgetting: Option<ForgettingMatrix>,
    pub lineage: Vec<LineageStep>,
    pub moments: Vec<MomentEntry>,
}

/// Contents of `summary.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub name: String,
    pub config_sha256: String,
    pub partitions: usize,
    pub seeds: Vec<u64>,
    pub spike_factor: f64,
    pub models: Vec<ModelSummary>,
    pub ratios: Vec<RatioRow>,
    pub failures: Vec<FailureRecord>,
    pub warnings: Vec<String>,
}

#[derive(Debug)]
pub struct RunResult {
    pub dir: PathBuf,
    pub table: MetricsTable,
    pub summary: RunSummary,
}

impl RunResult {
    pub fn failed(&self) -> bool {
        !self.summary.failures.is_empty()
    }
}

pub const RATIO_NAMES: [&str; 3] = ["r_zero", "r_full", "r_fz"];

pub fn ratio_picker(name: &str) -> fn(&RatioRow) -> Option<crate::domain::Ratio> {
    match name {
        "r_zero" => |r| r.r_zero,
        "r_full" => |r| r.r_full,
        _ => |r| r.r_fz,
    }
}

/// `<model id>/s<seed>`, the id used in every output table.
pub fn seeded_id(model: &str, seed: u64) -> String {
    format!("{model}/s{seed}")
}

fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

fn checkpoint_sha(ckpt: &Checkpoint) -> Result<String> {
    Ok(sha256_hex(models::to_file_string(ckpt)?.as_bytes()))
}

/// Everything one task produced.
#[derive(Default)]
struct CellOutput {
    rows: Vec<MetricRow>,
    moments: Vec<MomentEntry>,
    logs: Vec<EpochRecord>,
    lineage: Vec<LineageStep>,
    forgetting: Option<ForgettingMatrix>,
}

impl CellOutput {
    fn record(&mut self, model_id: &str, regime: Regime, p: usize, eval: &Evaluation) {
        self.rows.push(MetricRow {
            model_id: model_id.to_string(),
            regime,
            p,
            mse: eval.mse,
            mse_raw: Some(eval.mse_raw),
        });
        if let Ok(report) = moment_decomposition(&eval.forecasts, &eval.targets) {
            self.moments.push(MomentEntry { regime, p, report });
        }
    }

    fn merge(&mut self, other: CellOutput) {
        self.rows.extend(other.rows);
        self.moments.extend(other.moments);
        self.logs.extend(other.logs);
        self.lineage.extend(other.lineage);
        if other.forgetting.is_some() {
            self.forgetting = other.forgetting;
        }
    }
}

#[derive(Clone, Copy)]
enum Task {
    /// Pretraining, zero-shot, the incremental fold and forgetting for one native model.
    Lineage { model: usize, seed: usize },
    /// One full-training cell of a trainable native model.
    Full { model: usize, seed: usize, p: usize },
    /// Every regime of one plugin model (one process, strictly sequential).
    Plugin { model: usize, seed: usize },
}

impl Task {
    fn group(&self) -> (usize, usize) {
        match *self {
            Task::Lineage { model, seed } | Task::Full { model, seed, .. } | Task::Plugin { model, seed } => {
                (model, seed)
            }
        }
    }
}

struct Context<'a> {
    config: &'a ExperimentConfig,
    base_dir: &'a Path,
    dir: &'a Path,
    seeds: &'a [u64],
    /// Keyed by (seed index, horizon).
    data: HashMap<(usize, usize), Arc<PartitionedData>>,
}

impl Context<'_> {
    fn data(&self, seed: usize, entry: &ModelEntry) -> &PartitionedData {
        let h = entry.horizon(self.config.horizon);
        &self.data[&(seed, h)]
    }

    fn train_config(&self, seed: u64) -> TrainConfig {
        TrainConfig {
            seed,
            ..self.config.train.clone()
        }
    }

    fn persist(&self, model_id: &str, file: &str, ckpt: &Checkpoint) -> Result<(String, String)> {
        let rel = format!("checkpoints/{}/{file}", model_id.replace('/', "-"));
        let text = models::to_file_string(ckpt)?;
        write_atomic(&self.dir.join(&rel), text.as_bytes())?;
        Ok((rel, sha256_hex(text.as_bytes())))
    }

    fn run(&self, task: Task) -> Result<CellOutput> {
        let (m, s) = task.group();
        let entry = &self.config.models[m];
        match task {
            Task::Lineage { .. } => self.native_lineage(entry, s),
            Task::Full { p, .. } => self.native_full(entry, s, p),
            Task::Plugin { .. } => match &entry.source {
                ModelSource::Plugin(desc) => self.plugin_all(entry, desc, s),
                _ => unreachable!("plugin task for a native model"),
            },
        }
    }

    fn native_spec(&self, entry: &ModelEntry, data: &PartitionedData) -> ForecasterSpec {
        self.config
            .spec_for(entry, data.channels())
            .expect("native task for a plugin model")
    }

    fn initial_checkpoint(&self, entry: &ModelEntry, spec: &ForecasterSpec, seed: u64, out: &mut CellOutput) -> Result<Checkpoint> {
        let model_id = seeded_id(&entry.id, seed);
        if let Some(path) = &entry.checkpoint {
            let ckpt = models::load(resolve(self.base_dir, path))?;
            if &ckpt.spec != spec {
                return Err(Error::Checkpoint(format!(
                    "{} was built for a different spec",
                    path.display()
                )));
            }
            return Ok(ckpt);
        }
        let corpus = self.config.corpus(self.base_dir, seed)?;
        if spec.is_trainable() && !corpus.is_empty() {
            let mut cfg = self
                .config
                .pretrain
                .as_ref()
                .and_then(|p| p.train.clone())
                .unwrap_or_else(|| self.config.train.clone());
            cfg.seed = seed;
            let outcome = training::pretrain(spec, &corpus, self.config.ratio, &cfg, &format!("{model_id}/pretrain"))?;
            self.persist(&model_id, "pretrain.ckpt", &outcome.checkpoint)?;
            out.logs.extend(outcome.log);
            return Ok(outcome.checkpoint);
        }
        models::init_params(spec, seed)
    }

    fn native_lineage(&self, entry: &ModelEntry, s: usize) -> Result<CellOutput> {
        let seed = self.seeds[s];
        let model_id = seeded_id(&entry.id, seed);
        let data = self.data(s, entry);
        let spec = self.native_spec(entry, data);
        let mut out = CellOutput::default();
        let initial = self.initial_checkpoint(entry, &spec, seed, &mut out)?;
        let partitions = data.partitions();
        let eval = |ckpt: &Checkpoint, p: usize| -> Result<Evaluation> {
            evaluate(&mut NativeForecaster::new(ckpt), data.test(p)?, data.stats(p))
        };

        if self.config.wants(Regime::Zero) {
            for p in 0..partitions {
                out.record(&model_id, Regime::Zero, p, &eval(&initial, p)?);
            }
        }
        if !spec.is_trainable() {
            // nothing to fit: the same checkpoint stands in for every trained regime
            for regime in [Regime::Incremental, Regime::Full] {
                if self.config.wants(regime) {
                    for p in 0..partitions {
                        out.record(&model_id, regime, p, &eval(&initial, p)?);
                    }
                }
            }
            return Ok(out);
        }
        if self.config.wants(Regime::Incremental) {
            let cfg = self.train_config(seed);
            let mut current = initial.clone();
            let mut rounds = Vec::with_capacity(partitions);
            for p in 0..partitions {
                let start = match self.config.incremental_start {
                    IncrementalStart::Chained => &current,
                    IncrementalStart::Pristine => &initial,
                };
                let input_sha256 = checkpoint_sha(start)?;
                let run_id = format!("{model_id}/incremental/p{p}");
                let outcome = training::incremental_finetune(start, data, p, &cfg, &run_id)?;
                let (checkpoint, output_sha256) =
                    self.persist(&model_id, &format!("incremental-p{p}.ckpt"), &outcome.checkpoint)?;
                out.lineage.push(LineageStep {
                    p,
                    input_sha256,
                    output_sha256,
                    checkpoint,
                });
                out.logs.extend(outcome.log);
                out.record(&model_id, Regime::Incremental, p, &eval(&outcome.checkpoint, p)?);
                current = outcome.checkpoint;
                rounds.push(current.clone());
            }
            out.forgetting = Some(crate::metrics::forgetting_matrix(&rounds, data)?);
        }
        Ok(out)
    }

    fn native_full(&self, entry: &ModelEntry, s: usize, p: usize) -> Result<CellOutput> {
        let seed = self.seeds[s];
        let model_id = seeded_id(&entry.id, seed);
        let data = self.data(s, entry);
        let spec = self.native_spec(entry, data);
        let run_id = format!("{model_id}/full/p{p}");
        let outcome = training::full_train(FullStart::Fresh(&spec), data, p, &self.train_config(seed), &run_id)?;
        self.persist(&model_id, &format!("full-p{p}.ckpt"), &outcome.checkpoint)?;
        let mut out = CellOutput::default();
        let eval = evaluate(&mut NativeForecaster::new(&outcome.checkpoint), data.test(p)?, data.stats(p))?;
        out.record(&model_id, Regime::Full, p, &eval);
        out.logs.extend(outcome.log);
        Ok(out)
    }

    fn plugin_all(&self, entry: &ModelEntry, desc: &PluginDescriptor, s: usize) -> Result<CellOutput> {
        let seed = self.seeds[s];
        let model_id = seeded_id(&entry.id, seed);
        let data = self.data(s, entry);
        let horizon = data.horizon();
        let mut session = PluginSession::open(desc)?;
        session.check_dispatch(data.context(), horizon, data.channels())?;
        let trainable = session.capabilities().trainable;
        let pristine = session.snapshot("pristine")?;
        let cfg = self.train_config(seed);
        let partitions = data.partitions();
        let mut out = CellOutput::default();

        fn eval(session: &mut PluginSession, horizon: usize, data: &PartitionedData, p: usize) -> Result<Evaluation> {
            let mut remote = RemoteForecaster { session, horizon };
            evaluate(&mut remote as &mut dyn Forecaster, data.test(p)?, data.stats(p))
        }

        if self.config.wants(Regime::Zero) {
            for p in 0..partitions {
                out.record(&model_id, Regime::Zero, p, &eval(&mut session, horizon, data, p)?);
            }
        }
        if !trainable {
            for regime in [Regime::Incremental, Regime::Full] {
                if self.config.wants(regime) {
                    for p in 0..partitions {
                        out.record(&model_id, regime, p, &eval(&mut session, horizon, data, p)?);
                    }
                }
            }
            session.shutdown()?;
            return Ok(out);
        }
        if self.config.wants(Regime::Incremental) {
            let mut rounds = Vec::with_capacity(partitions);
            for p in 0..partitions {
                if self.config.incremental_start == IncrementalStart::Pristine {
                    session.restore(&pristine)?;
                }
                let train: Vec<&WindowSample> = data.train(p)?.iter().collect();
                session.finetune(&train, &TrainConfig { seed: training::derive_seed(seed, p as u64), ..cfg.clone() })?;
                out.record(&model_id, Regime::Incremental, p, &eval(&mut session, horizon, data, p)?);
                rounds.push(session.snapshot(&format!("incremental-p{p}"))?);
            }
            let mut entries = Vec::with_capacity(partitions);
            for (p, token) in rounds.iter().enumerate() {
                session.restore(token)?;
                let row = (0..=p)
                    .map(|q| Ok(eval(&mut session, horizon, data, q)?.mse))
                    .collect::<Result<Vec<f64>>>()?;
                entries.push(row);
            }
            out.forgetting = Some(ForgettingMatrix::from_rows(entries)?);
        }
        if self.config.wants(Regime::Full) {
            for p in 0..partitions {
                session.restore(&pristine)?;
                let mut train: Vec<&WindowSample> = Vec::new();
                for q in 0..=p {
                    train.extend(data.train(q)?);
                }
                session.finetune(&train, &TrainConfig { seed: training::derive_seed(seed, p as u64), ..cfg.clone() })?;
                out.record(&model_id, Regime::Full, p, &eval(&mut session, horizon, data, p)?);
            }
        }
        session.shutdown()?;
        Ok(out)
    }
}

fn model_label(entry: &ModelEntry) -> String {
    match &entry.source {
        ModelSource::NaiveSeasonal { .. } => "naive_seasonal".into(),
        ModelSource::LinearDirect { .. } => "linear_direct".into(),
        ModelSource::Mlp { .. } => "mlp".into(),
        ModelSource::Plugin(desc) => format!("plugin:{}", desc.command),
    }
}

/// Stable digest of the effective config; names the run directory.
pub fn config_digest(config: &ExperimentConfig) -> Result<String> {
    Ok(sha256_hex(serde_json::to_string(config)?.as_bytes()))
}

/// Runs the full (model x seed x regime x partition) matrix and writes every artifact
/// under `<output>/run-<config digest>/`.
///
/// Failures inside one (model, seed) lineage drop that lineage's rows and are recorded;
/// other lineages are unaffected.
pub fn run_experiment(config: &ExperimentConfig, base_dir: &Path, options: &RunOptions) -> Result<RunResult> {
    let mut config = config.clone();
    if let Some(seeds) = &options.seeds {
        config.seeds = seeds.clone();
    }
    if let Some(output) = &options.output {
        config.output = output.clone();
    }
    let findings = config.findings(base_dir);
    if !findings.is_empty() {
        return Err(Error::Config(findings));
    }

    let digest = config_digest(&config)?;
    let dir = resolve(base_dir, &config.output).join(format!("run-{}", &digest[..12]));
    std::fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
    write_atomic(&dir.join("config.json"), serde_json::to_string_pretty(&config)?.as_bytes())?;

    let seeds = config.seeds.clone();
    let mut warnings = Vec::new();
    let mut data = HashMap::new();
    let mut shared_series = None;
    for (s, &seed) in seeds.iter().enumerate() {
        let series = match (&shared_series, config.dataset.is_seed_independent()) {
            (Some(series), true) => Arc::clone(series),
            _ => {
                let series = Arc::new(config.dataset.materialize(base_dir, config.partitions, seed)?);
                shared_series = Some(Arc::clone(&series));
                series
            }
        };
        let plan = make_partitions(series.len(), config.partitions, config.ratio)?;
        for entry in &config.models {
            let h = entry.horizon(config.horizon);
            if data.contains_key(&(s, h)) {
                continue;
            }
            let built = PartitionedData::build(&series, &plan, config.context, h, config.normalization)?;
            for p in 0..built.partitions() {
                if built.train(p)?.is_empty() {
                    warnings.push(format!("seed {seed}, h={h}: partition {p} has no train windows"));
                }
                if built.val(p)?.is_empty() {
                    warnings.push(format!("seed {seed}, h={h}: partition {p} has no val windows"));
                }
            }
            data.insert((s, h), Arc::new(built));
        }
    }
    for w in &warnings {
        log::warn!("{w}");
    }

    let mut tasks = Vec::new();
    for (m, entry) in config.models.iter().enumerate() {
        for s in 0..seeds.len() {
            if entry.is_plugin() {
                tasks.push(Task::Plugin { model: m, seed: s });
                continue;
            }
            tasks.push(Task::Lineage { model: m, seed: s });
            let trainable = entry.native_kind().is_some_and(|k| !matches!(k, crate::models::ModelKind::NaiveSeasonal { .. }));
            if trainable && config.wants(Regime::Full) {
                tasks.extend((0..config.partitions).map(|p| Task::Full { model: m, seed: s, p }));
            }
        }
    }

    let ctx = Context {
        config: &config,
        base_dir,
        dir: &dir,
        seeds: &seeds,
        data,
    };
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(jobs) = options.jobs {
        pool = pool.num_threads(jobs.max(1));
    }
    let pool = pool
        .build()
        .map_err(|e| Error::Invalid(format!("cannot start worker pool: {e}")))?;
    let outputs: Vec<Result<CellOutput>> = pool.install(|| tasks.par_iter().map(|&t| ctx.run(t)).collect());

    let mut groups: BTreeMap<(usize, usize), Result<CellOutput>> = BTreeMap::new();
    for (task, output) in tasks.iter().zip(outputs) {
        let slot = groups.entry(task.group()).or_insert_with(|| Ok(CellOutput::default()));
        match (slot.as_mut(), output) {
            (Ok(acc), Ok(cell)) => acc.merge(cell),
            (Ok(_), Err(e)) => *slot = Err(e),
            (Err(_), _) => {}
        }
    }

    let mut table = MetricsTable::default();
    let mut failures = Vec::new();
    let mut model_summaries = Vec::new();
    let mut logs = Vec::new();
    for ((m, s), result) in groups {
        let entry = &config.models[m];
        let seed = seeds[s];
        let model_id = seeded_id(&entry.id, seed);
        match result {
            Ok(mut cell) => {
                table.rows.append(&mut cell.rows);
                logs.append(&mut cell.logs);
                cell.moments.sort_by_key(|e| (e.regime, e.p));
                cell.lineage.sort_by_key(|l| l.p);
                model_summaries.push(ModelSummary {
                    model_id,
                    model: model_label(entry),
                    seed,
                    trends: BTreeMap::new(),
                    forgetting: cell.forgetting,
                    lineage: cell.lineage,
                    moments: cell.moments,
                });
            }
            Err(e) => {
                log::error!("{model_id} failed: {e}");
                failures.push(FailureRecord {
                    model_id,
                    model: model_label(entry),
                    seed,
                    error: e.to_string(),
                });
            }
        }
    }
    table.sort();
    let table = ratio_metrics(&table);
    for summary in &mut model_summaries {
        for name in RATIO_NAMES {
            let series = table.ratio_series(&summary.model_id, ratio_picker(name));
            if let Ok(trend) = plasticity_trend(&series, config.spike_factor) {
                summary.trends.insert(name.to_string(), trend);
            }
        }
    }

    let summary = RunSummary {
        name: config.name.clone(),
        config_sha256: digest,
        partitions: config.partitions,
        seeds: seeds.clone(),
        spike_factor: config.spike_factor,
        models: model_summaries,
        ratios: table.ratios.clone(),
        failures,
        warnings,
    };

    write_atomic(&dir.join("metrics.csv"), metrics_csv(&table).as_bytes())?;
    write_atomic(&dir.join("summary.json"), serde_json::to_string_pretty(&summary)?.as_bytes())?;
    let mut jsonl = String::new();
    for record in &logs {
        jsonl.push_str(&serde_json::to_string(record)?);
        jsonl.push('\n');
    }
    write_atomic(&dir.join("logs/train.jsonl"), jsonl.as_bytes())?;
    write_atomic(&dir.join("failures.json"), serde_json::to_string_pretty(&summary.failures)?.as_bytes())?;

    Ok(RunResult { dir, table, summary })
}

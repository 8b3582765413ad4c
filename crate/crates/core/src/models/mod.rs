//! Native forecasters: seasonal-naive, decomposition-linear and MLP.
//!
//! All three map an `l x C` context to an `h x C` forecast one channel at a time with
//! weights shared across channels. A model is fully described by its [`Checkpoint`].

mod io;
mod linear;
mod mlp;
mod naive;
mod spec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub use io::{load, save, to_file_string};
pub use spec::{ForecasterSpec, ModelKind, ParamLayout, DEFAULT_HIDDEN, DEFAULT_KERNEL};

use crate::domain::{Checkpoint, Matrix, Param, Provenance, Regime, WindowSample, FORMAT_VERSION};
use crate::error::{Error, Result};

/// Fresh checkpoint: weights ~ U(-1/sqrt(fan_in), 1/sqrt(fan_in)), biases zero.
pub fn init_params(spec: &ForecasterSpec, seed: u64) -> Result<Checkpoint> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let params = spec
        .layout()
        .into_iter()
        .map(|layout| {
            let n = layout.len();
            let values = match layout.fan_in {
                Some(fan_in) => {
                    let bound = 1.0 / (fan_in as f64).sqrt();
                    (0..n).map(|_| rng.random_range(-bound..bound)).collect()
                }
                None => vec![0.0; n],
            };
            Param {
                name: layout.name,
                shape: layout.shape,
                values,
            }
        })
        .collect();
    Ok(Checkpoint {
        format_version: FORMAT_VERSION,
        spec: spec.clone(),
        provenance: Provenance {
            regime: Regime::Zero,
            partitions_seen: Vec::new(),
            seed,
            epochs: 0,
        },
        params,
    })
}

/// Checks that `params` match the layout implied by `spec`.
pub fn check_params(spec: &ForecasterSpec, params: &[Param]) -> Result<()> {
    let layout = spec.layout();
    if layout.len() != params.len() {
        return Err(Error::Checkpoint(format!(
            "{} parameter arrays, {} expected for {}",
            params.len(),
            layout.len(),
            spec.kind.name()
        )));
    }
    for (want, have) in layout.iter().zip(params) {
        if want.name != have.name || want.shape != have.shape {
            return Err(Error::Checkpoint(format!(
                "array {:?} {:?} does not match expected {:?} {:?}",
                have.name, have.shape, want.name, want.shape
            )));
        }
        if have.values.len() != want.len() {
            return Err(Error::Checkpoint(format!(
                "corrupted length: array {:?} has {} values, expected {}",
                have.name,
                have.values.len(),
                want.len()
            )));
        }
    }
    Ok(())
}

enum Scratch {
    Naive,
    Linear(linear::Scratch),
    Mlp(mlp::Scratch),
}

impl Scratch {
    fn new(spec: &ForecasterSpec, params: &[Param]) -> Self {
        match spec.kind {
            ModelKind::NaiveSeasonal { .. } => Scratch::Naive,
            ModelKind::LinearDirect { .. } => {
                Scratch::Linear(linear::Scratch::new(spec.context, spec.horizon))
            }
            ModelKind::Mlp { .. } => Scratch::Mlp(mlp::Scratch::new(params)),
        }
    }
}

fn forecast_series(spec: &ForecasterSpec, params: &[Param], x: &[f64], scratch: &mut Scratch, out: &mut [f64]) {
    match (&spec.kind, scratch) {
        (ModelKind::NaiveSeasonal { season }, _) => naive::forecast(x, *season, out),
        (ModelKind::LinearDirect { kernel }, Scratch::Linear(s)) => {
            linear::forecast(params, *kernel, x, s, out)
        }
        (ModelKind::Mlp { .. }, Scratch::Mlp(s)) => mlp::forecast(params, x, s, out),
        _ => unreachable!("scratch built for a different model kind"),
    }
}

fn check_context(spec: &ForecasterSpec, x: &Matrix) -> Result<()> {
    if x.shape() != (spec.context, spec.channels) {
        return Err(Error::Shape(format!(
            "context is {}x{}, model expects {}x{}",
            x.rows(),
            x.cols(),
            spec.context,
            spec.channels
        )));
    }
    Ok(())
}

/// Reusable forward pass over many contexts of one checkpoint.
pub struct Predictor<'a> {
    spec: &'a ForecasterSpec,
    params: &'a [Param],
    scratch: Scratch,
    column: Vec<f64>,
    out: Vec<f64>,
}

impl<'a> Predictor<'a> {
    pub fn new(spec: &'a ForecasterSpec, params: &'a [Param]) -> Self {
        Self {
            spec,
            params,
            scratch: Scratch::new(spec, params),
            column: vec![0.0; spec.context],
            out: vec![0.0; spec.horizon],
        }
    }

    pub fn predict(&mut self, x: &Matrix) -> Result<Matrix> {
        check_context(self.spec, x)?;
        let (h, channels) = (self.spec.horizon, self.spec.channels);
        let mut forecast = Matrix::zeros(h, channels);
        for c in 0..channels {
            for (t, v) in self.column.iter_mut().enumerate() {
                *v = x.get(t, c);
            }
            forecast_series(self.spec, self.params, &self.column, &mut self.scratch, &mut self.out);
            for (j, v) in self.out.iter().enumerate() {
                forecast.set(j, c, *v);
            }
        }
        Ok(forecast)
    }
}

/// Forecasts `h x C` from an `l x C` context.
pub fn predict(ckpt: &Checkpoint, x: &Matrix) -> Result<Matrix> {
    Predictor::new(&ckpt.spec, &ckpt.params).predict(x)
}

/// Adds the batch-mean MSE gradient into `grads` (which must be zeroed and congruent)
/// and returns the batch loss.
pub(crate) fn accumulate_grad(
    spec: &ForecasterSpec,
    params: &[Param],
    batch: &[&WindowSample],
    grads: &mut [Vec<f64>],
) -> Result<f64> {
    if !spec.is_trainable() {
        return Err(Error::NotTrainable);
    }
    if batch.is_empty() {
        return Err(Error::NoWindows("gradient of an empty batch".into()));
    }
    let (l, h, channels) = (spec.context, spec.horizon, spec.channels);
    let scale = 1.0 / (batch.len() * h * channels) as f64;
    let mut scratch = Scratch::new(spec, params);
    let mut x = vec![0.0; l];
    let mut y = vec![0.0; h];
    let mut sq = 0.0;
    for sample in batch {
        check_context(spec, &sample.context)?;
        if sample.target.shape() != (h, channels) {
            return Err(Error::Shape(format!(
                "target is {}x{}, model expects {h}x{channels}",
                sample.target.rows(),
                sample.target.cols()
            )));
        }
        for c in 0..channels {
            for (t, v) in x.iter_mut().enumerate() {
                *v = sample.context.get(t, c);
            }
            for (t, v) in y.iter_mut().enumerate() {
                *v = sample.target.get(t, c);
            }
            sq += match (&spec.kind, &mut scratch) {
                (ModelKind::LinearDirect { kernel }, Scratch::Linear(s)) => {
                    linear::accumulate(params, *kernel, &x, &y, scale, s, grads)
                }
                (ModelKind::Mlp { .. }, Scratch::Mlp(s)) => {
                    mlp::accumulate(params, &x, &y, scale, s, grads)
                }
                _ => unreachable!("trainability checked above"),
            };
        }
    }
    Ok(sq * scale)
}

/// Gradient of the batch loss (mean over samples of the MSE over all `h * C` outputs)
/// with respect to every parameter, plus the loss itself.
pub fn grad(ckpt: &Checkpoint, batch: &[WindowSample]) -> Result<(Vec<Param>, f64)> {
    let mut grads: Vec<Vec<f64>> = ckpt.params.iter().map(|p| vec![0.0; p.values.len()]).collect();
    let refs: Vec<&WindowSample> = batch.iter().collect();
    let loss = accumulate_grad(&ckpt.spec, &ckpt.params, &refs, &mut grads)?;
    let named = ckpt
        .params
        .iter()
        .zip(grads)
        .map(|(p, values)| Param {
            name: p.name.clone(),
            shape: p.shape.clone(),
            values,
        })
        .collect();
    Ok((named, loss))
}

/// Batch MSE of `params` on `batch` without computing gradients.
pub fn batch_loss(spec: &ForecasterSpec, params: &[Param], batch: &[WindowSample]) -> Result<f64> {
    if batch.is_empty() {
        return Err(Error::NoWindows("loss of an empty batch".into()));
    }
    let mut predictor = Predictor::new(spec, params);
    let mut sq = 0.0;
    let mut n = 0usize;
    for sample in batch {
        let yhat = predictor.predict(&sample.context)?;
        if yhat.shape() != sample.target.shape() {
            return Err(Error::Shape("target does not match forecast shape".into()));
        }
        for (a, b) in yhat.as_slice().iter().zip(sample.target.as_slice()) {
            sq += (a - b) * (a - b);
        }
        n += yhat.as_slice().len();
    }
    Ok(sq / n as f64)
}

/// Anything that maps normalized contexts to normalized forecasts.
pub trait Forecaster {
    fn forecast(&mut self, contexts: &[&Matrix]) -> Result<Vec<Matrix>>;
}

/// In-process forecaster backed by a checkpoint.
pub struct NativeForecaster<'a> {
    predictor: Predictor<'a>,
}

impl<'a> NativeForecaster<'a> {
    pub fn new(ckpt: &'a Checkpoint) -> Self {
        Self {
            predictor: Predictor::new(&ckpt.spec, &ckpt.params),
        }
    }
}

impl Forecaster for NativeForecaster<'_> {
    fn forecast(&mut self, contexts: &[&Matrix]) -> Result<Vec<Matrix>> {
        contexts.iter().map(|x| self.predictor.predict(x)).collect()
    }
}

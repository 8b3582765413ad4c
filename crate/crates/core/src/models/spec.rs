use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default moving-average kernel of the decomposition-linear model.
pub const DEFAULT_KERNEL: usize = 25;

/// Default hidden widths of the MLP.
pub const DEFAULT_HIDDEN: [usize; 2] = [128, 128];

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ModelKind {
    /// Repeats the last `season` context steps across the horizon.
    NaiveSeasonal { season: usize },
    /// Trend/remainder decomposition, one linear map per component.
    LinearDirect { kernel: usize },
    /// ReLU MLP from the context window straight to the horizon.
    Mlp { hidden: Vec<usize> },
}

impl ModelKind {
    pub fn name(&self) -> &'static str {
        match self {
            ModelKind::NaiveSeasonal { .. } => "naive_seasonal",
            ModelKind::LinearDirect { .. } => "linear_direct",
            ModelKind::Mlp { .. } => "mlp",
        }
    }
}

/// Architecture and shape of a native forecaster. Weights are shared across
/// channels, so parameter counts depend on `context` and `horizon` only.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ForecasterSpec {
    #[serde(flatten)]
    pub kind: ModelKind,
    pub context: usize,
    pub horizon: usize,
    pub channels: usize,
}

impl ForecasterSpec {
    pub fn new(kind: ModelKind, context: usize, horizon: usize, channels: usize) -> Result<Self> {
        let spec = Self {
            kind,
            context,
            horizon,
            channels,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn naive(season: usize, context: usize, horizon: usize, channels: usize) -> Result<Self> {
        Self::new(ModelKind::NaiveSeasonal { season }, context, horizon, channels)
    }

    pub fn linear(kernel: usize, context: usize, horizon: usize, channels: usize) -> Result<Self> {
        Self::new(ModelKind::LinearDirect { kernel }, context, horizon, channels)
    }

    pub fn mlp(hidden: Vec<usize>, context: usize, horizon: usize, channels: usize) -> Result<Self> {
        Self::new(ModelKind::Mlp { hidden }, context, horizon, channels)
    }

    pub fn findings(&self) -> Vec<String> {
        let mut out = Vec::new();
        if self.context == 0 || self.horizon == 0 || self.channels == 0 {
            out.push(format!(
                "context, horizon and channels must be >= 1 (got l={}, h={}, C={})",
                self.context, self.horizon, self.channels
            ));
        }
        match &self.kind {
            ModelKind::NaiveSeasonal { season } => {
                if *season == 0 || *season > self.context {
                    out.push(format!(
                        "season length {season} must be in 1..={}",
                        self.context
                    ));
                }
            }
            ModelKind::LinearDirect { kernel } => {
                if kernel % 2 == 0 || *kernel > self.context {
                    out.push(format!(
                        "kernel size {kernel} must be odd and <= context {}",
                        self.context
                    ));
                }
            }
            ModelKind::Mlp { hidden } => {
                if hidden.contains(&0) {
                    out.push(format!("hidden widths {hidden:?} must all be >= 1"));
                }
            }
        }
        out
    }

    pub fn validate(&self) -> Result<()> {
        let findings = self.findings();
        if findings.is_empty() {
            Ok(())
        } else {
            Err(Error::Invalid(findings.join("; ")))
        }
    }

    pub fn is_trainable(&self) -> bool {
        !matches!(self.kind, ModelKind::NaiveSeasonal { .. })
    }

    /// Names, shapes and fan-in of every parameter array, in checkpoint order.
    pub fn layout(&self) -> Vec<ParamLayout> {
        let (l, h) = (self.context, self.horizon);
        match &self.kind {
            ModelKind::NaiveSeasonal { .. } => Vec::new(),
            ModelKind::LinearDirect { .. } => vec![
                ParamLayout::weight("trend.weight", h, l),
                ParamLayout::bias("trend.bias", h),
                ParamLayout::weight("remainder.weight", h, l),
                ParamLayout::bias("remainder.bias", h),
            ],
            ModelKind::Mlp { hidden } => {
                let dims: Vec<usize> = std::iter::once(l)
                    .chain(hidden.iter().copied())
                    .chain(std::iter::once(h))
                    .collect();
                dims.windows(2)
                    .enumerate()
                    .flat_map(|(i, d)| {
                        [
                            ParamLayout::weight(&format!("layers.{i}.weight"), d[1], d[0]),
                            ParamLayout::bias(&format!("layers.{i}.bias"), d[1]),
                        ]
                    })
                    .collect()
            }
        }
    }
}

/// Shape of one parameter array. Weights are `[out, in]`, row-major.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParamLayout {
    pub name: String,
    pub shape: Vec<usize>,
    /// `Some(fan_in)` for weights, `None` for biases.
    pub fan_in: Option<usize>,
}

impl ParamLayout {
    fn weight(name: &str, out: usize, fan_in: usize) -> Self {
        Self {
            name: name.to_string(),
            shape: vec![out, fan_in],
            fan_in: Some(fan_in),
        }
    }

    fn bias(name: &str, out: usize) -> Self {
        Self {
            name: name.to_string(),
            shape: vec![out],
            fan_in: None,
        }
    }

    pub fn len(&self) -> usize {
        self.shape.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

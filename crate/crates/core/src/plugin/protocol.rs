//! Newline-delimited JSON messages exchanged with external forecasters.
//!
//! ```text
//! request: {"id":1,"cmd":"predict","payload":{...}}
//! reply:   {"id":1,"ok":true,"payload":{...}}
//!          {"id":1,"ok":false,"payload":{},"error":"..."}
//! ```
//!
//! Numeric arrays travel as `{"shape":[...],"data":[...]}` with row-major `data`.

use std::fmt;

use serde::de::{self, Deserializer};
use serde::ser::Serializer;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::domain::Matrix;
use crate::error::{Error, Result};

pub const PROTOCOL_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Command {
    Handshake,
    Predict,
    Finetune,
    Snapshot,
    Restore,
    Shutdown,
}

impl fmt::Display for Command {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = serde_json::to_value(self).ok();
        f.write_str(s.as_ref().and_then(Value::as_str).unwrap_or("?"))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Request {
    pub id: u64,
    pub cmd: Command,
    pub payload: Value,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Reply {
    pub id: u64,
    pub ok: bool,
    #[serde(default)]
    pub payload: Value,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

impl Reply {
    pub fn success(id: u64, payload: Value) -> Self {
        Self {
            id,
            ok: true,
            payload,
            error: None,
        }
    }

    pub fn failure(id: u64, error: impl Into<String>) -> Self {
        Self {
            id,
            ok: false,
            payload: Value::Object(Default::default()),
            error: Some(error.into()),
        }
    }
}

/// A dense array with explicit shape.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArrayPayload {
    pub shape: Vec<usize>,
    pub data: Vec<f64>,
}

impl ArrayPayload {
    /// Stacks equally shaped matrices into a `[n, rows, cols]` array.
    pub fn stack<'a>(matrices: impl IntoIterator<Item = &'a Matrix>) -> Result<Self> {
        let mut data = Vec::new();
        let mut shape: Option<(usize, usize)> = None;
        let mut n = 0;
        for m in matrices {
            match shape {
                None => shape = Some(m.shape()),
                Some(s) if s != m.shape() => {
                    return Err(Error::Shape(format!("cannot stack {:?} with {s:?}", m.shape())))
                }
                _ => {}
            }
            data.extend_from_slice(m.as_slice());
            n += 1;
        }
        let (rows, cols) = shape.unwrap_or((0, 0));
        Ok(Self {
            shape: vec![n, rows, cols],
            data,
        })
    }

    /// Splits a `[n, rows, cols]` array back into matrices.
    pub fn unstack(&self) -> Result<Vec<Matrix>> {
        let &[n, rows, cols] = self.shape.as_slice() else {
            return Err(Error::Plugin(format!("expected a rank-3 array, got shape {:?}", self.shape)));
        };
        if self.data.len() != n * rows * cols {
            return Err(Error::Plugin(format!(
                "array shape {:?} needs {} values, got {}",
                self.shape,
                n * rows * cols,
                self.data.len()
            )));
        }
        if self.data.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("plugin array contains non-finite values".into()));
        }
        if n == 0 {
            return Ok(Vec::new());
        }
        self.data
            .chunks(rows * cols)
            .map(|chunk| Matrix::from_vec(rows, cols, chunk.to_vec()))
            .collect()
    }
}

/// Channel counts a plugin accepts.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ChannelSupport {
    Any,
    Fixed(usize),
}

impl Serialize for ChannelSupport {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            ChannelSupport::Any => s.serialize_str("any"),
            ChannelSupport::Fixed(c) => s.serialize_u64(*c as u64),
        }
    }
}

impl<'de> Deserialize<'de> for ChannelSupport {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        match Value::deserialize(d)? {
            Value::String(s) if s == "any" => Ok(ChannelSupport::Any),
            Value::Number(n) => n
                .as_u64()
                .map(|c| ChannelSupport::Fixed(c as usize))
                .ok_or_else(|| de::Error::custom("channel count must be a non-negative integer")),
            other => Err(de::Error::custom(format!("expected \"any\" or an integer, got {other}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Capabilities {
    pub trainable: bool,
    pub max_horizon: usize,
    pub max_context: usize,
    pub channels: ChannelSupport,
}

impl Capabilities {
    /// Reasons the plugin cannot serve an `(l, h, C)` task; empty when it can.
    pub fn violations(&self, context: usize, horizon: usize, channels: usize) -> Vec<String> {
        let mut out = Vec::new();
        if horizon > self.max_horizon {
            out.push(format!(
                "horizon exceeds plugin limit ({horizon} > max_horizon {})",
                self.max_horizon
            ));
        }
        if context > self.max_context {
            out.push(format!(
                "context exceeds plugin limit ({context} > max_context {})",
                self.max_context
            ));
        }
        if let ChannelSupport::Fixed(c) = self.channels {
            if c != channels {
                out.push(format!("plugin serves exactly {c} channels, data has {channels}"));
            }
        }
        out
    }
}

/// Parses one reply line.
pub fn parse_reply(line: &str) -> Result<Reply> {
    serde_json::from_str(line).map_err(|e| Error::Plugin(format!("malformed reply {line:?}: {e}")))
}

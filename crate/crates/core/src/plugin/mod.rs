//! Subprocess protocol through which external forecasters take part in every regime.

pub mod protocol;
mod session;

use serde::{Deserialize, Serialize};

pub use protocol::{ArrayPayload, Capabilities, ChannelSupport, Command, Reply, Request, PROTOCOL_VERSION};
pub use session::{PluginSession, RemoteForecaster};

/// How to launch a plugin, plus the capabilities it is expected to declare.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PluginDescriptor {
    pub command: String,
    #[serde(default)]
    pub args: Vec<String>,
    /// Capabilities known ahead of launch; checked by `validate` without spawning.
    #[serde(default)]
    pub capabilities: Option<Capabilities>,
    #[serde(default = "default_protocol_version")]
    pub protocol_version: u32,
    /// Per-message reply timeout.
    #[serde(default = "default_timeout_ms")]
    pub timeout_ms: u64,
}

fn default_protocol_version() -> u32 {
    PROTOCOL_VERSION
}

fn default_timeout_ms() -> u64 {
    10_000
}

impl PluginDescriptor {
    pub fn new(command: impl Into<String>, args: Vec<String>) -> Self {
        Self {
            command: command.into(),
            args,
            capabilities: None,
            protocol_version: PROTOCOL_VERSION,
            timeout_ms: default_timeout_ms(),
        }
    }
}

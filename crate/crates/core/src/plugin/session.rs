use std::io::{BufRead, BufReader, Read, Write};
use std::process::{Child, ChildStdin, Command as Process, Stdio};
use std::sync::mpsc::{self, Receiver, RecvTimeoutError};
use std::sync::{Arc, Mutex};
use std::thread;
use std::time::Duration;

use serde_json::{json, Value};

use super::protocol::{parse_reply, ArrayPayload, Capabilities, Command, Request, PROTOCOL_VERSION};
use super::PluginDescriptor;
use crate::domain::{Matrix, WindowSample};
use crate::error::{Error, Result};
use crate::models::Forecaster;
use crate::training::TrainConfig;

/// Windows per `finetune` message.
const FINETUNE_CHUNK: usize = 256;

/// An open, handshaken connection to one plugin process.
///
/// Strictly one request in flight. Any protocol violation poisons the session and
/// kills the process; later calls fail immediately.
pub struct PluginSession {
    child: Child,
    stdin: Option<ChildStdin>,
    lines: Receiver<std::io::Result<String>>,
    stderr: Arc<Mutex<String>>,
    timeout: Duration,
    next_id: u64,
    poisoned: Option<String>,
    capabilities: Capabilities,
}

impl PluginSession {
    /// Spawns the plugin and negotiates the protocol version. Fails closed on mismatch.
    pub fn open(descriptor: &PluginDescriptor) -> Result<Self> {
        let mut child = Process::new(&descriptor.command)
            .args(&descriptor.args)
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .stderr(Stdio::piped())
            .spawn()
            .map_err(|e| Error::Plugin(format!("cannot spawn {:?}: {e}", descriptor.command)))?;

        let stdout = child.stdout.take().expect("piped stdout");
        let (tx, lines) = mpsc::channel();
        thread::spawn(move || {
            for line in BufReader::new(stdout).lines() {
                if tx.send(line).is_err() {
                    break;
                }
            }
        });
        let stderr = Arc::new(Mutex::new(String::new()));
        let mut err_pipe = child.stderr.take().expect("piped stderr");
        let sink = Arc::clone(&stderr);
        thread::spawn(move || {
            let mut buf = String::new();
            let _ = err_pipe.read_to_string(&mut buf);
            sink.lock().expect("stderr lock").push_str(&buf);
        });

        let mut session = Self {
            stdin: child.stdin.take(),
            child,
            lines,
            stderr,
            timeout: Duration::from_millis(descriptor.timeout_ms),
            next_id: 0,
            poisoned: None,
            capabilities: Capabilities {
                trainable: false,
                max_horizon: 0,
                max_context: 0,
                channels: super::ChannelSupport::Any,
            },
        };

        let reply = session.request(
            Command::Handshake,
            json!({ "protocol_version": descriptor.protocol_version }),
        )?;
        let version = reply.get("protocol_version").and_then(Value::as_u64);
        if version != Some(PROTOCOL_VERSION as u64) {
            return Err(session.poison(format!(
                "handshake: plugin speaks protocol version {}, harness speaks {PROTOCOL_VERSION}",
                version.map_or("?".to_string(), |v| v.to_string())
            )));
        }
        let caps = reply
            .get("capabilities")
            .cloned()
            .ok_or_else(|| session.poison("handshake reply lacks capabilities".to_string()))?;
        session.capabilities = serde_json::from_value(caps)
            .map_err(|e| session.poison(format!("handshake capabilities malformed: {e}")))?;
        Ok(session)
    }

    pub fn capabilities(&self) -> &Capabilities {
        &self.capabilities
    }

    pub fn is_poisoned(&self) -> bool {
        self.poisoned.is_some()
    }

    /// Refuses an `(l, h, C)` task the plugin did not declare support for.
    pub fn check_dispatch(&self, context: usize, horizon: usize, channels: usize) -> Result<()> {
        let violations = self.capabilities.violations(context, horizon, channels);
        if violations.is_empty() {
            Ok(())
        } else {
            Err(Error::Plugin(violations.join("; ")))
        }
    }

    fn captured_stderr(&self) -> String {
        self.stderr.lock().map(|s| s.trim().to_string()).unwrap_or_default()
    }

    fn poison(&mut self, reason: String) -> Error {
        let _ = self.child.kill();
        let _ = self.child.wait();
        self.stdin = None;
        self.poisoned = Some(reason.clone());
        Error::Plugin(reason)
    }

    /// Sends one request and waits for its reply payload.
    pub fn request(&mut self, cmd: Command, payload: Value) -> Result<Value> {
        if let Some(reason) = &self.poisoned {
            return Err(Error::Plugin(format!("session poisoned: {reason}")));
        }
        self.next_id += 1;
        let id = self.next_id;
        let mut line = serde_json::to_string(&Request { id, cmd, payload })?;
        line.push('\n');
        let write = match self.stdin.as_mut() {
            Some(stdin) => stdin.write_all(line.as_bytes()).and_then(|_| stdin.flush()),
            None => Err(std::io::Error::other("stdin closed")),
        };
        if let Err(e) = write {
            thread::sleep(Duration::from_millis(50));
            let stderr = self.captured_stderr();
            return Err(self.poison(format!("{cmd}: cannot write to plugin ({e}); stderr: {stderr}")));
        }

        let text = match self.lines.recv_timeout(self.timeout) {
            Ok(Ok(text)) => text,
            Ok(Err(e)) => return Err(self.poison(format!("{cmd}: reading reply failed: {e}"))),
            Err(RecvTimeoutError::Timeout) => {
                let err = Error::PluginTimeout(self.timeout, cmd.to_string());
                self.poison(err.to_string());
                return Err(err);
            }
            Err(RecvTimeoutError::Disconnected) => {
                let status = self.child.wait().map(|s| s.to_string()).unwrap_or_default();
                thread::sleep(Duration::from_millis(50));
                let stderr = self.captured_stderr();
                return Err(self.poison(format!(
                    "{cmd}: plugin process died ({status}); stderr: {stderr}"
                )));
            }
        };
        let reply = match parse_reply(&text) {
            Ok(reply) => reply,
            Err(e) => return Err(self.poison(e.to_string())),
        };
        if reply.id != id {
            return Err(self.poison(format!(
                "{cmd}: reply id {} does not answer request id {id}",
                reply.id
            )));
        }
        if !reply.ok {
            return Err(Error::Plugin(format!(
                "{cmd} rejected by plugin: {}",
                reply.error.unwrap_or_else(|| "no error message".into())
            )));
        }
        Ok(reply.payload)
    }

    /// Forecasts for a batch of normalized contexts.
    pub fn predict(&mut self, contexts: &[&Matrix], horizon: usize) -> Result<Vec<Matrix>> {
        let Some(first) = contexts.first() else {
            return Ok(Vec::new());
        };
        let (context_len, channels) = first.shape();
        self.check_dispatch(context_len, horizon, channels)?;
        let stacked = ArrayPayload::stack(contexts.iter().copied())?;
        let reply = self.request(Command::Predict, json!({ "context": stacked, "horizon": horizon }))?;
        let forecast: ArrayPayload = reply
            .get("forecast")
            .cloned()
            .ok_or_else(|| self.poison("predict reply lacks forecast".into()))
            .and_then(|v| {
                serde_json::from_value(v).map_err(|e| self.poison(format!("forecast malformed: {e}")))
            })?;
        if forecast.shape != [contexts.len(), horizon, channels] {
            return Err(self.poison(format!(
                "forecast shape {:?}, expected {:?}",
                forecast.shape,
                [contexts.len(), horizon, channels]
            )));
        }
        forecast.unstack().map_err(|e| self.poison(e.to_string()))
    }

    /// Streams train windows to the plugin in chunks.
    pub fn finetune(&mut self, windows: &[&WindowSample], cfg: &TrainConfig) -> Result<()> {
        if !self.capabilities.trainable {
            return Err(Error::NotTrainable);
        }
        let config = json!({
            "epochs": cfg.epochs,
            "batch_size": cfg.batch_size,
            "lr": cfg.lr,
            "seed": cfg.seed,
        });
        for chunk in windows.chunks(FINETUNE_CHUNK) {
            let context = ArrayPayload::stack(chunk.iter().map(|w| &w.context))?;
            let target = ArrayPayload::stack(chunk.iter().map(|w| &w.target))?;
            self.request(
                Command::Finetune,
                json!({ "context": context, "target": target, "config": config }),
            )?;
        }
        Ok(())
    }

    /// Asks the plugin to save its state; returns the opaque token.
    pub fn snapshot(&mut self, label: &str) -> Result<String> {
        let reply = self.request(Command::Snapshot, json!({ "label": label }))?;
        match reply.get("token").and_then(Value::as_str) {
            Some(token) => Ok(token.to_string()),
            None => Err(self.poison("snapshot reply lacks a token".into())),
        }
    }

    pub fn restore(&mut self, token: &str) -> Result<()> {
        self.request(Command::Restore, json!({ "token": token }))?;
        Ok(())
    }

    /// Requests a clean exit and reaps the process.
    pub fn shutdown(mut self) -> Result<()> {
        let result = self.request(Command::Shutdown, json!({}));
        self.stdin = None;
        for _ in 0..100 {
            if let Ok(Some(_)) = self.child.try_wait() {
                return result.map(|_| ());
            }
            thread::sleep(Duration::from_millis(10));
        }
        let _ = self.child.kill();
        let _ = self.child.wait();
        result.map(|_| ())
    }
}

impl Drop for PluginSession {
    fn drop(&mut self) {
        if let Ok(None) = self.child.try_wait() {
            let _ = self.child.kill();
            let _ = self.child.wait();
        }
    }
}

/// A session bound to one horizon, usable wherever a [`Forecaster`] is expected.
pub struct RemoteForecaster<'a> {
    pub session: &'a mut PluginSession,
    pub horizon: usize,
}

impl Forecaster for RemoteForecaster<'_> {
    fn forecast(&mut self, contexts: &[&Matrix]) -> Result<Vec<Matrix>> {
        self.session.predict(contexts, self.horizon)
    }
}

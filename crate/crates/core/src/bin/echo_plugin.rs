//! Reference plugin speaking the harness protocol on stdin/stdout.
//!
//! `--kind naive` repeats the last context value (not trainable). `--kind bias` adds a
//! learned per-step offset, fitted as the running mean of `target[j] - last context value`
//! over every window received by `finetune`.
//!
//! `--version`, `--max-horizon` and `--misbehave` exist so the harness can exercise its
//! failure paths.

use std::collections::HashMap;
use std::io::{self, BufRead, Write};

use clap::{Parser, ValueEnum};
use serde_json::{json, Value};

use plasticity_harness::plugin::{ArrayPayload, Command, Reply, Request};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Kind {
    Naive,
    Bias,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Misbehave {
    None,
    /// Answer predict with a line that is not JSON.
    Malformed,
    /// Answer predict with the wrong request id.
    WrongId,
    /// Never answer predict.
    Hang,
    /// Exit with an error while handling predict.
    Die,
    /// Answer predict with NaN values.
    Nan,
}

#[derive(Parser, Debug)]
struct Args {
    #[arg(long, value_enum, default_value = "naive")]
    kind: Kind,
    #[arg(long, default_value_t = 1)]
    version: u32,
    #[arg(long, default_value_t = 96)]
    max_horizon: usize,
    #[arg(long, default_value_t = 4096)]
    max_context: usize,
    #[arg(long, value_enum, default_value = "none")]
    misbehave: Misbehave,
}

#[derive(Debug, Clone, Default)]
struct State {
    /// Per horizon step: sum of residuals and count.
    sums: Vec<f64>,
    count: f64,
}

impl State {
    fn offset(&self, j: usize) -> f64 {
        match self.sums.get(j) {
            Some(s) if self.count > 0.0 => s / self.count,
            _ => 0.0,
        }
    }
}

struct Server {
    args: Args,
    state: State,
    snapshots: HashMap<String, State>,
}

impl Server {
    fn handle(&mut self, req: &Request) -> Result<Value, String> {
        match req.cmd {
            Command::Handshake => Ok(json!({
                "protocol_version": self.args.version,
                "capabilities": {
                    "trainable": self.args.kind == Kind::Bias,
                    "max_horizon": self.args.max_horizon,
                    "max_context": self.args.max_context,
                    "channels": "any",
                }
            })),
            Command::Predict => self.predict(&req.payload),
            Command::Finetune => self.finetune(&req.payload),
            Command::Snapshot => {
                let token = format!("snap-{}", self.snapshots.len());
                self.snapshots.insert(token.clone(), self.state.clone());
                Ok(json!({ "token": token }))
            }
            Command::Restore => {
                let token = req.payload.get("token").and_then(Value::as_str).unwrap_or_default();
                let state = self.snapshots.get(token).ok_or(format!("unknown token {token:?}"))?;
                self.state = state.clone();
                Ok(json!({}))
            }
            Command::Shutdown => Ok(json!({})),
        }
    }

    fn array(payload: &Value, key: &str) -> Result<ArrayPayload, String> {
        let value = payload.get(key).cloned().ok_or(format!("missing {key}"))?;
        serde_json::from_value(value).map_err(|e| e.to_string())
    }

    fn predict(&self, payload: &Value) -> Result<Value, String> {
        let context = Self::array(payload, "context")?;
        let horizon = payload
            .get("horizon")
            .and_then(Value::as_u64)
            .ok_or("missing horizon")? as usize;
        if horizon > self.args.max_horizon {
            return Err(format!("horizon {horizon} exceeds max_horizon {}", self.args.max_horizon));
        }
        let windows = context.unstack().map_err(|e| e.to_string())?;
        let channels = context.shape[2];
        let mut data = Vec::with_capacity(windows.len() * horizon * channels);
        for w in &windows {
            let last = w.row(w.rows() - 1);
            for j in 0..horizon {
                for v in last {
                    data.push(v + self.state.offset(j));
                }
            }
        }
        if self.args.misbehave == Misbehave::Nan {
            data.iter_mut().for_each(|v| *v = f64::NAN);
        }
        Ok(json!({ "forecast": { "shape": [windows.len(), horizon, channels], "data": data } }))
    }

    fn finetune(&mut self, payload: &Value) -> Result<Value, String> {
        if self.args.kind != Kind::Bias {
            return Err("model not trainable".into());
        }
        let contexts = Self::array(payload, "context")?.unstack().map_err(|e| e.to_string())?;
        let targets = Self::array(payload, "target")?.unstack().map_err(|e| e.to_string())?;
        if contexts.len() != targets.len() {
            return Err("context and target counts differ".into());
        }
        for (x, y) in contexts.iter().zip(&targets) {
            if self.state.sums.len() < y.rows() {
                self.state.sums.resize(y.rows(), 0.0);
            }
            let last = x.row(x.rows() - 1);
            for c in 0..y.cols() {
                for j in 0..y.rows() {
                    self.state.sums[j] += y.get(j, c) - last[c];
                }
                self.state.count += 1.0;
            }
        }
        Ok(json!({}))
    }
}

fn main() {
    let args = Args::parse();
    let misbehave = args.misbehave;
    let mut server = Server {
        args,
        state: State::default(),
        snapshots: HashMap::new(),
    };
    let stdin = io::stdin();
    let mut stdout = io::stdout().lock();
    for line in stdin.lock().lines() {
        let Ok(line) = line else { break };
        if line.trim().is_empty() {
            continue;
        }
        let req: Request = match serde_json::from_str(&line) {
            Ok(req) => req,
            Err(e) => {
                let id = serde_json::from_str::<Value>(&line)
                    .ok()
                    .and_then(|v| v.get("id").and_then(Value::as_u64))
                    .unwrap_or(0);
                let reply = Reply::failure(id, format!("malformed request: {e}"));
                let _ = writeln!(stdout, "{}", serde_json::to_string(&reply).unwrap());
                let _ = stdout.flush();
                continue;
            }
        };
        if req.cmd == Command::Predict {
            match misbehave {
                Misbehave::Malformed => {
                    let _ = writeln!(stdout, "this is not json");
                    let _ = stdout.flush();
                    continue;
                }
                Misbehave::Hang => loop {
                    std::thread::sleep(std::time::Duration::from_secs(60));
                },
                Misbehave::Die => {
                    eprintln!("echo plugin: simulated crash");
                    std::process::exit(3);
                }
                _ => {}
            }
        }
        let mut reply = match server.handle(&req) {
            Ok(payload) => Reply::success(req.id, payload),
            Err(e) => Reply::failure(req.id, e),
        };
        if misbehave == Misbehave::WrongId && req.cmd == Command::Predict {
            reply.id += 7;
        }
        let _ = writeln!(stdout, "{}", serde_json::to_string(&reply).unwrap());
        let _ = stdout.flush();
        if req.cmd == Command::Shutdown {
            break;
        }
    }
}

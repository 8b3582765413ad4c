//! Checkpoint files: a pretty-printed JSON body followed by one trailer line
//! `sha256:<hex>` computed over the compact serialization of that body.

use std::path::Path;

use sha2::{Digest, Sha256};

use super::check_params;
use crate::domain::{Checkpoint, FORMAT_VERSION};
use crate::error::{Error, Result};

const TRAILER: &str = "sha256:";

fn body_digest(ckpt: &Checkpoint) -> Result<String> {
    let canonical = serde_json::to_string(ckpt)?;
    Ok(hex::encode(Sha256::digest(canonical.as_bytes())))
}

/// Serializes `ckpt` to the on-disk text form.
pub fn to_file_string(ckpt: &Checkpoint) -> Result<String> {
    let mut text = serde_json::to_string_pretty(ckpt)?;
    text.push('\n');
    text.push_str(TRAILER);
    text.push_str(&body_digest(ckpt)?);
    text.push('\n');
    Ok(text)
}

pub fn save(ckpt: &Checkpoint, path: impl AsRef<Path>) -> Result<()> {
    check_params(&ckpt.spec, &ckpt.params)?;
    crate::runner::write_atomic(path.as_ref(), to_file_string(ckpt)?.as_bytes())
}

pub fn load(path: impl AsRef<Path>) -> Result<Checkpoint> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse(&text)
}

/// Name of the last parameter array that starts before the end of `text`.
fn last_array_name(text: &str) -> Option<&str> {
    let at = text.rfind("\"name\":")?;
    let rest = text[at + 7..].trim_start().strip_prefix('"')?;
    rest.split('"').next()
}

pub(crate) fn parse(text: &str) -> Result<Checkpoint> {
    let trimmed = text.trim_end();
    let (body, digest) = match trimmed.rfind('\n') {
        Some(at) if trimmed[at + 1..].starts_with(TRAILER) => {
            (&trimmed[..at], Some(&trimmed[at + 1 + TRAILER.len()..]))
        }
        _ => (trimmed, None),
    };

    let value: serde_json::Value = serde_json::from_str(body).map_err(|e| {
        match (digest, last_array_name(body)) {
            (None, Some(name)) => Error::Checkpoint(format!(
                "truncated file: body ends inside or after array {name:?} ({e})"
            )),
            _ => Error::Checkpoint(format!("malformed checkpoint body: {e}")),
        }
    })?;
    let version = value
        .get("format_version")
        .and_then(serde_json::Value::as_u64)
        .ok_or_else(|| Error::Checkpoint("missing format_version".into()))?;
    if version != FORMAT_VERSION as u64 {
        return Err(Error::Checkpoint(format!(
            "version mismatch: file has format_version {version}, expected {FORMAT_VERSION}"
        )));
    }
    let ckpt: Checkpoint = serde_json::from_value(value)
        .map_err(|e| Error::Checkpoint(format!("checkpoint schema: {e}")))?;
    check_params(&ckpt.spec, &ckpt.params)?;

    let digest = digest.ok_or_else(|| Error::Checkpoint("missing checksum trailer".into()))?;
    let actual = body_digest(&ckpt)?;
    if digest != actual {
        return Err(Error::Checkpoint(format!(
            "checksum failure: trailer {digest} but body hashes to {actual}"
        )));
    }
    Ok(ckpt)
}

//! Frame-level run transcript for reproducibility and the privacy audit.

use std::io::Write;
use std::path::Path;
use std::sync::{Arc, Mutex};

use serde::{Deserialize, Serialize};

use crate::codec::decode;

/// Pseudo-peer id used for the frame carrying the final verdict, which goes
/// to the invoking analyst rather than to any client.
pub const ANALYST_PEER: u64 = u64::MAX;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Direction {
    Sent,
    Received,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FrameRecord {
    pub direction: Direction,
    pub peer: u64,
    /// The exact frame payload as sent on the wire (UTF-8 JSON).
    pub payload: String,
}

/// Shared recorder; the coordinator logs every frame it sends or receives.
#[derive(Debug, Clone, Default)]
pub struct Transcript {
    frames: Arc<Mutex<Vec<FrameRecord>>>,
}

impl Transcript {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn record(&self, direction: Direction, peer: u64, payload: &[u8]) {
        let payload = String::from_utf8_lossy(payload).into_owned();
        self.frames.lock().unwrap().push(FrameRecord { direction, peer, payload });
    }

    pub fn frames(&self) -> Vec<FrameRecord> {
        self.frames.lock().unwrap().clone()
    }

    pub fn len(&self) -> usize {
        self.frames.lock().unwrap().len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// One JSON object per line, in exchange order.
    pub fn write_to(&self, path: &Path) -> std::io::Result<()> {
        let mut file = std::fs::File::create(path)?;
        for frame in self.frames().iter() {
            serde_json::to_writer(&mut file, frame)?;
            file.write_all(b"\n")?;
        }
        Ok(())
    }

    /// Schema inspection of every recorded frame: each must decode to a known
    /// message (unknown fields are rejected by the codec) and must not contain
    /// nested arrays anywhere in its JSON tree. Raw point lists serialize as
    /// arrays of per-point arrays, so any coordinate leak trips the check;
    /// legitimate payloads only carry flat lists of ids or scalars.
    pub fn audit(&self) -> Result<(), String> {
        for (i, frame) in self.frames().iter().enumerate() {
            decode(frame.payload.as_bytes())
                .map_err(|e| format!("frame {i} failed schema decode: {e}"))?;
            let value: serde_json::Value = serde_json::from_str(&frame.payload)
                .map_err(|e| format!("frame {i} is not valid JSON: {e}"))?;
            if has_nested_array(&value, false) {
                return Err(format!("frame {i} contains a nested array payload"));
            }
        }
        Ok(())
    }
}

fn has_nested_array(value: &serde_json::Value, inside_array: bool) -> bool {
    match value {
        serde_json::Value::Array(items) => {
            inside_array || items.iter().any(|v| has_nested_array(v, true))
        }
        serde_json::Value::Object(map) => {
            map.values().any(|v| has_nested_array(v, inside_array))
        }
        _ => false,
    }
}

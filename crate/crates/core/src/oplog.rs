//! Per-operation log records shared by both engines, stored as JSON lines
//! behind a header that names the engine and the trace it came from.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::workload::{EngineKind, TraceOp};

pub const OPLOG_FORMAT: &str = "nstore-oplog";
pub const OPLOG_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogHeader {
    pub format: String,
    pub version: u32,
    pub engine: EngineKind,
    pub trace_digest: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub capacity_bytes: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OpLogRecord {
    pub seq: u64,
    pub op: TraceOp,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub item_id: Option<String>,
    pub cues: Vec<String>,
    /// `merged`, `new_neuron`, `hit`, `miss`, `stored`, `overwritten`,
    /// `rejected` or `retention`.
    pub outcome: String,
    pub cost: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dn_id: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub strength: Option<f64>,
    pub total_bytes: u64,
    pub hit: bool,
    pub priority: bool,
    /// Normalized PSNR of the returned payload against its own original.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fidelity: Option<f64>,
    /// Feature similarity of the returned payload to the requested item.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub similarity: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub returned_quality: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OpLog {
    pub header: LogHeader,
    pub records: Vec<OpLogRecord>,
}

impl OpLog {
    pub fn new(engine: EngineKind, trace_digest: String, capacity_bytes: Option<u64>) -> Self {
        OpLog {
            header: LogHeader {
                format: OPLOG_FORMAT.into(),
                version: OPLOG_VERSION,
                engine,
                trace_digest,
                capacity_bytes,
            },
            records: Vec::new(),
        }
    }

    pub fn engine(&self) -> EngineKind {
        self.header.engine
    }

    pub fn to_jsonl(&self) -> String {
        let mut out = serde_json::to_string(&self.header).expect("log header");
        out.push('\n');
        for r in &self.records {
            out.push_str(&serde_json::to_string(r).expect("log record"));
            out.push('\n');
        }
        out
    }

    pub fn from_jsonl(text: &str) -> Result<Self> {
        let mut lines = text.lines();
        let header: LogHeader = serde_json::from_str(lines.next().unwrap_or(""))
            .map_err(|e| Error::Parse(format!("bad op-log header: {e}")))?;
        if header.format != OPLOG_FORMAT {
            return Err(Error::Parse(format!("not an op log: `{}`", header.format)));
        }
        if header.version != OPLOG_VERSION {
            return Err(Error::Version {
                found: header.version,
                expected: OPLOG_VERSION,
            });
        }
        let records = lines
            .filter(|l| !l.trim().is_empty())
            .enumerate()
            .map(|(i, l)| {
                serde_json::from_str(l).map_err(|e| Error::MalformedRecord {
                    seq: i as u64,
                    reason: e.to_string(),
                })
            })
            .collect::<Result<_>>()?;
        Ok(OpLog { header, records })
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_jsonl()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        OpLog::from_jsonl(&text)
    }

    pub fn retrieves(&self) -> impl Iterator<Item = &OpLogRecord> {
        self.records.iter().filter(|r| r.op == TraceOp::Retrieve)
    }
}

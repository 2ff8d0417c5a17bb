//! Deterministic snapshot documents and their DOT / text renderings.

use std::fmt::Write as _;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::{CueKey, GraphMode, Memory, NeuronId, SearchEntry};
use crate::error::{Error, Result};

pub const SNAPSHOT_FORMAT: &str = "nstore-snapshot";
pub const SNAPSHOT_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExportFormat {
    Dot,
    StructuredSnapshot,
}

impl FromStr for ExportFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "dot" => Ok(ExportFormat::Dot),
            "structured-snapshot" | "json" => Ok(ExportFormat::StructuredSnapshot),
            other => Err(Error::UnknownFormat(other.to_string())),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SnapshotDoc {
    pub format: String,
    pub version: u32,
    pub op_counter: u64,
    pub hives: Vec<HiveDoc>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HiveDoc {
    pub modality: String,
    pub graph_mode: GraphMode,
    pub epsilon: f64,
    pub phi: f64,
    pub localities: Vec<LocalityDoc>,
    pub cues: Vec<CueDoc>,
    pub data: Vec<DataDoc>,
    pub edges: Vec<EdgeDoc>,
    pub search_orders: Vec<SearchOrderDoc>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LocalityDoc {
    pub index: usize,
    pub memory_decay_rate: f64,
    pub association_decay_rate: f64,
    pub default_cue: NeuronId,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CueDoc {
    pub id: NeuronId,
    pub key: CueKey,
    pub is_default: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DataDoc {
    pub id: NeuronId,
    pub locality: usize,
    pub strength: f64,
    pub quality: f64,
    pub size_bytes: u64,
    pub original_size: u64,
    pub origin: String,
    pub last_access_op: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EdgeDoc {
    pub a: NeuronId,
    pub b: NeuronId,
    pub weight: f64,
    pub last_access: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchOrderDoc {
    pub cue: NeuronId,
    pub entries: Vec<SearchEntry>,
}

impl SnapshotDoc {
    pub fn from_json(text: &str) -> Result<Self> {
        let doc: SnapshotDoc = serde_json::from_str(text)?;
        if doc.format != SNAPSHOT_FORMAT {
            return Err(Error::Parse(format!("not a snapshot document: `{}`", doc.format)));
        }
        if doc.version != SNAPSHOT_VERSION {
            return Err(Error::Version {
                found: doc.version,
                expected: SNAPSHOT_VERSION,
            });
        }
        Ok(doc)
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("snapshot serializes");
        s.push('\n');
        s
    }
}

impl Memory {
    pub fn snapshot_doc(&self) -> SnapshotDoc {
        let hives = self
            .hives
            .iter()
            .map(|h| HiveDoc {
                modality: h.modality.clone(),
                graph_mode: h.graph.mode(),
                epsilon: h.params.epsilon,
                phi: h.params.phi,
                localities: h
                    .localities
                    .iter()
                    .map(|l| LocalityDoc {
                        index: l.index,
                        memory_decay_rate: l.memory_decay_rate,
                        association_decay_rate: l.association_decay_rate,
                        default_cue: l.default_cue,
                    })
                    .collect(),
                cues: h
                    .cues
                    .values()
                    .map(|c| CueDoc {
                        id: c.id,
                        key: c.key.clone(),
                        is_default: c.is_default(),
                    })
                    .collect(),
                data: h
                    .data
                    .values()
                    .map(|d| DataDoc {
                        id: d.id,
                        locality: d.locality,
                        strength: d.strength,
                        quality: d.payload.quality,
                        size_bytes: d.size_bytes(),
                        original_size: d.payload.original_size,
                        origin: d.payload.origin.clone(),
                        last_access_op: d.last_access_op,
                    })
                    .collect(),
                edges: h
                    .graph
                    .edges()
                    .map(|(a, b, e)| EdgeDoc {
                        a,
                        b,
                        weight: e.weight,
                        last_access: e.last_access,
                    })
                    .collect(),
                search_orders: h
                    .search_order
                    .iter()
                    .map(|(&cue, entries)| SearchOrderDoc {
                        cue,
                        entries: entries.clone(),
                    })
                    .collect(),
            })
            .collect();
        SnapshotDoc {
            format: SNAPSHOT_FORMAT.to_string(),
            version: SNAPSHOT_VERSION,
            op_counter: self.op,
            hives,
        }
    }

    pub fn export(&self, format: ExportFormat) -> String {
        let doc = self.snapshot_doc();
        match format {
            ExportFormat::Dot => render_dot(&doc),
            ExportFormat::StructuredSnapshot => doc.to_json(),
        }
    }
}

fn cue_name(c: &CueDoc) -> String {
    match &c.key {
        CueKey::Label(l) => l.replace('"', "'"),
        other => other.to_string(),
    }
}

pub fn render_dot(doc: &SnapshotDoc) -> String {
    let mut out = String::from("graph nmn {\n");
    for (hi, h) in doc.hives.iter().enumerate() {
        let _ = writeln!(out, "  subgraph cluster_{hi} {{");
        let _ = writeln!(out, "    label=\"{}\";", h.modality);
        for c in &h.cues {
            let style = if c.is_default { ", style=dashed" } else { "" };
            let _ = writeln!(
                out,
                "    {} [shape=ellipse, label=\"{}\"{style}];",
                c.id,
                cue_name(c)
            );
        }
        for d in &h.data {
            let _ = writeln!(
                out,
                "    {} [shape=box, label=\"{} L{}\\ns={} q={}\\n{}B\"];",
                d.id, d.id, d.locality, d.strength, d.quality, d.size_bytes
            );
        }
        out.push_str("  }\n");
        for e in &h.edges {
            let _ = writeln!(out, "  {} -- {} [label=\"{}\"];", e.a, e.b, e.weight);
        }
    }
    out.push_str("}\n");
    out
}

/// Human-readable listing used by `inspect`.
pub fn render_text(doc: &SnapshotDoc) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "snapshot v{} at op {}", doc.version, doc.op_counter);
    if doc.hives.is_empty() {
        out.push_str("(empty memory)\n");
    }
    for h in &doc.hives {
        let _ = writeln!(
            out,
            "hive {} [{:?}] eps={} phi={}: {} cues, {} data neurons, {} edges",
            h.modality,
            h.graph_mode,
            h.epsilon,
            h.phi,
            h.cues.len(),
            h.data.len(),
            h.edges.len()
        );
        for l in &h.localities {
            let members: Vec<String> = h
                .data
                .iter()
                .filter(|d| d.locality == l.index)
                .map(|d| d.id.to_string())
                .collect();
            let _ = writeln!(
                out,
                "  locality {} (decay {}, assoc decay {}, default {}): [{}]",
                l.index,
                l.memory_decay_rate,
                l.association_decay_rate,
                l.default_cue,
                members.join(", ")
            );
        }
        for d in &h.data {
            let _ = writeln!(
                out,
                "  {} L{} strength={} quality={} size={}/{} origin={}",
                d.id, d.locality, d.strength, d.quality, d.size_bytes, d.original_size, d.origin
            );
        }
        for e in &h.edges {
            let _ = writeln!(out, "  {} -- {} w={}", e.a, e.b, e.weight);
        }
        for so in &h.search_orders {
            let name = h
                .cues
                .iter()
                .find(|c| c.id == so.cue)
                .map(cue_name)
                .unwrap_or_default();
            let list: Vec<String> = so
                .entries
                .iter()
                .map(|e| format!("{}({})", e.dn_id, e.avg_weight))
                .collect();
            let _ = writeln!(out, "  order {} {}: {}", so.cue, name, list.join(" "));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nmn::HiveParams;

    #[test]
    fn empty_memory_dot_is_header_only() {
        let m = Memory::new();
        assert_eq!(m.export(ExportFormat::Dot), "graph nmn {\n}\n");
        assert!(render_text(&m.snapshot_doc()).contains("(empty memory)"));
    }

    #[test]
    fn unknown_format_rejected() {
        assert!(matches!("svg".parse::<ExportFormat>(), Err(Error::UnknownFormat(_))));
    }

    #[test]
    fn version_mismatch_rejected() {
        let m = Memory::with_hive("image", HiveParams::case_study(&["deer"])).unwrap();
        let mut doc = m.snapshot_doc();
        doc.version = 99;
        let text = serde_json::to_string(&doc).unwrap();
        assert!(matches!(
            SnapshotDoc::from_json(&text),
            Err(Error::Version { found: 99, .. })
        ));
        let good = m.export(ExportFormat::StructuredSnapshot);
        assert_eq!(SnapshotDoc::from_json(&good).unwrap(), m.snapshot_doc());
    }
}

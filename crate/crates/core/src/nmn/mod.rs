//! The neural memory network: cue and data neurons, their weighted
//! associations, hives with localities, and per-cue search orders.

mod export;
mod graph;
mod hive;
mod memory;
mod state;

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::codec::{FeatureVector, Payload};

pub use export::{
    render_dot, render_text, CueDoc, DataDoc, EdgeDoc, ExportFormat, HiveDoc, LocalityDoc,
    SearchOrderDoc, SnapshotDoc, SNAPSHOT_FORMAT, SNAPSHOT_VERSION,
};
pub use graph::{clamp_weight, AssociationGraph, Edge, GraphMode};
pub use hive::{
    compute_search_order, ElasticityMode, FeaturePredicate, Hive, HiveParams, Locality,
    SearchEntry,
};
pub use memory::Memory;
pub use state::{apply_state_update, clamp_strength, MemoryState, StateDelta};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct NeuronId(pub u32);

impl fmt::Display for NeuronId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "n{}", self.0)
    }
}

/// What a cue neuron matches on.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "value", rename_all = "kebab-case")]
pub enum CueKey {
    Label(String),
    Vector(Vec<f64>),
    /// Per-locality default cue. Never collides with user cues.
    Default(usize),
}

impl CueKey {
    pub fn label(s: impl Into<String>) -> Self {
        CueKey::Label(s.into())
    }

    pub fn as_label(&self) -> Option<&str> {
        match self {
            CueKey::Label(s) => Some(s),
            _ => None,
        }
    }
}

impl fmt::Display for CueKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CueKey::Label(s) => f.write_str(s),
            CueKey::Vector(v) => write!(f, "vec[{}]", v.len()),
            CueKey::Default(l) => write!(f, "default:L{l}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CueNeuron {
    pub id: NeuronId,
    pub key: CueKey,
    pub hive: usize,
}

impl CueNeuron {
    pub fn is_default(&self) -> bool {
        matches!(self.key, CueKey::Default(_))
    }

    pub fn label(&self) -> Option<&str> {
        self.key.as_label()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DataNeuron {
    pub id: NeuronId,
    pub payload: Payload,
    pub feature: FeatureVector,
    /// Memory strength, a percentage in [phi, 100].
    pub strength: f64,
    pub locality: usize,
    pub last_access_op: u64,
}

impl DataNeuron {
    pub fn size_bytes(&self) -> u64 {
        self.payload.size()
    }
}

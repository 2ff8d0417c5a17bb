//! Scripted six-operation walkthrough on a three-neuron fixture: two
//! `wolf` images in locality 0, one `tree` image in locality 1, retention
//! after every op. Small enough to follow by hand.

use serde::Serialize;

use crate::codec::{FeatureVector, Payload};
use crate::error::Result;
use crate::nmn::{CueKey, FeaturePredicate, HiveParams, Memory, NeuronId, SnapshotDoc};
use crate::ops::{OpControls, OutcomeKind, SearchParams};

pub const ASSOC_THRESH: f64 = 0.0;
pub const MATCH_THRESH: f64 = 0.95;

pub fn params() -> HiveParams {
    let mut p = HiveParams::case_study(&[]);
    p.locality_mapping = vec![
        ["wolf", "fox", "canis"]
            .iter()
            .map(|l| FeaturePredicate::Label(l.to_string()))
            .collect(),
        Vec::new(),
    ];
    p.memory_decay_rates = vec![10.0, 20.0];
    p.eta = 10.0;
    p.epsilon = 1.0;
    p.phi = 1.0;
    p.retention_period = 1;
    p
}

pub fn controls() -> OpControls {
    OpControls {
        search_limit: None,
        up: true,
        k: false,
    }
}

/// Bytes spread over `[lo, hi]` in a fixed scrambled order.
pub fn blob(lo: u8, hi: u8, len: usize, salt: u32) -> Vec<u8> {
    let span = u32::from(hi - lo) + 1;
    (0..len as u32)
        .map(|i| lo + (i.wrapping_mul(7919).wrapping_add(salt) % span) as u8)
        .collect()
}

pub struct Fixture {
    pub memory: Memory,
    /// DN0, DN1 (wolf, locality 0) and DN2 (tree, locality 1).
    pub data: [NeuronId; 3],
    pub blobs: [Vec<u8>; 3],
}

pub fn fixture() -> Result<Fixture> {
    let mut m = Memory::with_hive("image", params())?;
    let blobs = [blob(0, 40, 400, 1), blob(200, 255, 400, 2), blob(90, 130, 400, 3)];
    let mut data = [NeuronId(0); 3];
    for (i, loc) in [0, 0, 1].into_iter().enumerate() {
        let f = m.hive(0).extractor().extract(&blobs[i]);
        let p = Payload::new("image", blobs[i].clone(), format!("dn{i}"));
        data[i] = m.add_data_neuron(0, loc, p, f)?;
    }
    let wolf = m.add_cue_neuron(0, CueKey::label("wolf"))?;
    let tree = m.add_cue_neuron(0, CueKey::label("tree"))?;
    m.adjust_association(0, wolf, data[0], -10.0)?;
    m.adjust_association(0, wolf, data[1], -10.0)?;
    m.adjust_association(0, tree, data[2], -10.0)?;
    m.update_memory_search_order(0)?;
    Ok(Fixture { memory: m, data, blobs })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StepLog {
    pub op: u64,
    pub action: String,
    pub outcome: OutcomeKind,
    pub examined: Vec<NeuronId>,
    pub cost: u64,
    pub dn_id: Option<NeuronId>,
    /// (data neuron, strength) after the op, in id order.
    pub strengths: Vec<(NeuronId, f64)>,
}

pub struct Walkthrough {
    pub steps: Vec<StepLog>,
    /// Snapshot before the first op, then one after each op.
    pub snapshots: Vec<SnapshotDoc>,
}

enum Action {
    Retrieve { cue: &'static str, fine: FeatureVector },
    Store { cue: &'static str, blob: Vec<u8>, origin: &'static str },
}

/// Runs the six scripted operations.
pub fn run() -> Result<Walkthrough> {
    let Fixture { mut memory, blobs, .. } = fixture()?;
    let c = controls();
    let f0 = memory.hive(0).extractor().extract(&blobs[0]);
    let f1 = memory.hive(0).extractor().extract(&blobs[1]);
    let mut near_dn0 = blobs[0].clone();
    near_dn0[7] ^= 1;
    let script = [
        ("retrieve wolf, fine cue DN1", Action::Retrieve { cue: "wolf", fine: f1.clone() }),
        (
            "store novel wolf image",
            Action::Store { cue: "wolf", blob: blob(60, 80, 400, 4), origin: "dn3" },
        ),
        ("retrieve canis, fine cue DN1", Action::Retrieve { cue: "canis", fine: f1 }),
        ("retrieve wolf, fine cue DN0", Action::Retrieve { cue: "wolf", fine: f0.clone() }),
        ("retrieve wolf, fine cue DN0", Action::Retrieve { cue: "wolf", fine: f0 }),
        (
            "store near copy of DN0",
            Action::Store { cue: "wolf", blob: near_dn0, origin: "dn0-again" },
        ),
    ];

    let mut steps = Vec::new();
    let mut snapshots = vec![memory.snapshot_doc()];
    for (action, a) in script {
        let out = match a {
            Action::Retrieve { cue, fine } => {
                let q = SearchParams::labels(&[cue], ASSOC_THRESH, MATCH_THRESH).with_fine_cue(fine);
                memory.retrieve(0, &q, &c)?
            }
            Action::Store { cue, blob, origin } => {
                let q = SearchParams::labels(&[cue], ASSOC_THRESH, MATCH_THRESH);
                memory.store(Payload::new("image", blob, origin), &q, &c)?
            }
        };
        let strengths = memory
            .hive(0)
            .data_neurons()
            .map(|d| (d.id, d.strength))
            .collect();
        steps.push(StepLog {
            op: memory.op_counter(),
            action: action.to_string(),
            outcome: out.kind,
            examined: out.examined,
            cost: out.cost,
            dn_id: out.dn_id,
            strengths,
        });
        snapshots.push(memory.snapshot_doc());
    }
    Ok(Walkthrough { steps, snapshots })
}

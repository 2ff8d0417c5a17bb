use std::collections::HashMap;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::{Corpus, Trace, TraceOp, TraceRecord};
use crate::cam::{Cam, ReplacementPolicy};
use crate::codec::{fidelity, normalized_fidelity, similarity, Codec, FeatureExtractor, FeatureVector, Payload};
use crate::error::{Error, Result};
use crate::nmn::{CueKey, HiveParams, Memory};
use crate::ops::{OpControls, OutcomeKind, SearchParams};
use crate::oplog::{OpLog, OpLogRecord};

pub const MODALITY: &str = "image";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EngineKind {
    Ns,
    Cam,
}

impl EngineKind {
    pub fn as_str(self) -> &'static str {
        match self {
            EngineKind::Ns => "ns",
            EngineKind::Cam => "cam",
        }
    }
}

impl std::str::FromStr for EngineKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "ns" => Ok(EngineKind::Ns),
            "cam" => Ok(EngineKind::Cam),
            other => Err(Error::Config(format!("unknown engine `{other}` (expected ns or cam)"))),
        }
    }
}

/// What CAM entries are tagged with.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CamKeying {
    #[default]
    Item,
    Label,
}

pub trait Engine {
    fn kind(&self) -> EngineKind;
    fn capacity(&self) -> Option<u64>;
    fn execute(&mut self, rec: &TraceRecord, corpus: &Corpus) -> Result<OpLogRecord>;
}

/// Scores a returned payload: normalized PSNR against the original it was
/// derived from, and feature similarity to the item that was asked for.
struct Scorer {
    codec: Arc<dyn Codec>,
    extractor: Arc<dyn FeatureExtractor>,
    psnr_ref: f64,
    features: HashMap<String, FeatureVector>,
}

impl Scorer {
    fn original_feature(&mut self, item_id: &str, blob: &[u8]) -> FeatureVector {
        let ex = &self.extractor;
        self.features
            .entry(item_id.to_string())
            .or_insert_with(|| ex.extract(blob))
            .clone()
    }

    fn score(&mut self, returned: &Payload, requested: &str, corpus: &Corpus) -> Result<(f64, f64)> {
        let (_, original) = corpus
            .item(&returned.origin)
            .ok_or_else(|| Error::Consistency(format!("returned payload has unknown origin `{}`", returned.origin)))?;
        let psnr = fidelity(self.codec.as_ref(), original, returned)?;
        let (_, want) = corpus
            .item(requested)
            .ok_or_else(|| Error::Consistency(format!("unknown item `{requested}`")))?;
        let want = self.original_feature(requested, want);
        let got = self.extractor.extract(&returned.blob);
        Ok((normalized_fidelity(psnr, self.psnr_ref), similarity(got.as_slice(), want.as_slice())))
    }
}

fn base_record(rec: &TraceRecord, corpus: &Corpus) -> OpLogRecord {
    let priority = rec
        .item_id
        .as_deref()
        .and_then(|id| corpus.item(id))
        .is_some_and(|(it, _)| it.priority);
    OpLogRecord {
        seq: rec.seq,
        op: rec.op,
        item_id: rec.item_id.clone(),
        cues: rec.coarse_cues.clone(),
        outcome: String::new(),
        cost: 0,
        dn_id: None,
        strength: None,
        total_bytes: 0,
        hit: false,
        priority,
        fidelity: None,
        similarity: None,
        returned_quality: None,
    }
}

fn item_of<'a>(rec: &TraceRecord, corpus: &'a Corpus) -> Result<(&'a str, &'a [u8])> {
    let id = rec.item_id.as_deref().ok_or_else(|| Error::MalformedRecord {
        seq: rec.seq,
        reason: "missing item_id".into(),
    })?;
    let (item, blob) = corpus.item(id).ok_or_else(|| Error::MalformedRecord {
        seq: rec.seq,
        reason: format!("unknown item `{id}`"),
    })?;
    Ok((item.item_id.as_str(), blob))
}

/// The learning memory behind the simulator.
pub struct NsEngine {
    memory: Memory,
    hive: usize,
    controls: OpControls,
    assoc_thresh: f64,
    match_thresh: f64,
    scorer: Scorer,
}

impl NsEngine {
    pub fn new(
        params: HiveParams,
        controls: OpControls,
        assoc_thresh: f64,
        match_thresh: f64,
        psnr_ref: f64,
    ) -> Result<Self> {
        let memory = Memory::with_hive(MODALITY, params)?;
        let h = memory.hive(0);
        let scorer = Scorer {
            codec: Arc::clone(&h.codec),
            extractor: Arc::clone(&h.extractor),
            psnr_ref,
            features: HashMap::new(),
        };
        Ok(NsEngine {
            memory,
            hive: 0,
            controls,
            assoc_thresh,
            match_thresh,
            scorer,
        })
    }

    pub fn memory(&self) -> &Memory {
        &self.memory
    }

    fn params(&self, rec: &TraceRecord) -> SearchParams {
        let cues = rec.coarse_cues.iter().map(|c| CueKey::label(c.as_str())).collect();
        SearchParams::new(cues, self.assoc_thresh, self.match_thresh)
    }

    fn fill(&self, out: &mut OpLogRecord, dn: Option<crate::nmn::NeuronId>) {
        out.dn_id = dn.map(|d| d.0);
        out.strength = dn.and_then(|d| self.memory.hive(self.hive).data_neuron(d)).map(|d| d.strength);
        out.total_bytes = self.memory.total_bytes();
    }
}

fn outcome_str(k: OutcomeKind) -> &'static str {
    match k {
        OutcomeKind::Merged => "merged",
        OutcomeKind::NewNeuron => "new_neuron",
        OutcomeKind::Hit => "hit",
        OutcomeKind::Miss => "miss",
    }
}

impl Engine for NsEngine {
    fn kind(&self) -> EngineKind {
        EngineKind::Ns
    }

    fn capacity(&self) -> Option<u64> {
        self.memory.hive(self.hive).capacity()
    }

    fn execute(&mut self, rec: &TraceRecord, corpus: &Corpus) -> Result<OpLogRecord> {
        let mut out = base_record(rec, corpus);
        match rec.op {
            TraceOp::Retention => {
                let period = self.memory.hive(self.hive).params.retention_period;
                self.memory.retention(self.hive, period, self.controls.k)?;
                out.outcome = "retention".into();
                self.fill(&mut out, None);
            }
            TraceOp::Store => {
                let (id, blob) = item_of(rec, corpus)?;
                let payload = Payload::new(MODALITY, blob.to_vec(), id);
                let params = self.params(rec);
                let o = self.memory.store(payload, &params, &self.controls)?;
                out.outcome = outcome_str(o.kind).into();
                out.cost = o.cost;
                self.fill(&mut out, o.dn_id);
            }
            TraceOp::Retrieve => {
                let (id, blob) = item_of(rec, corpus)?;
                let mut params = self.params(rec);
                if rec.use_fine_cue {
                    params.fine_cues.push(self.scorer.original_feature(id, blob));
                }
                let o = self.memory.retrieve(self.hive, &params, &self.controls)?;
                out.outcome = outcome_str(o.kind).into();
                out.cost = o.cost;
                out.hit = o.is_hit();
                out.returned_quality = o.returned_quality;
                if let Some(p) = &o.returned_payload {
                    let (f, s) = self.scorer.score(p, id, corpus)?;
                    out.fidelity = Some(f);
                    out.similarity = Some(s);
                }
                self.fill(&mut out, o.dn_id);
            }
        }
        Ok(out)
    }
}

/// Conventional CAM baseline.
pub struct CamEngine {
    cam: Cam,
    keying: CamKeying,
    scorer: Scorer,
}

impl CamEngine {
    pub fn new(
        capacity: Option<u64>,
        policy: ReplacementPolicy,
        keying: CamKeying,
        codec: Arc<dyn Codec>,
        extractor: Arc<dyn FeatureExtractor>,
        psnr_ref: f64,
    ) -> Self {
        CamEngine {
            cam: Cam::new(capacity, policy),
            keying,
            scorer: Scorer {
                codec,
                extractor,
                psnr_ref,
                features: HashMap::new(),
            },
        }
    }

    /// Builds the codec and extractor the same way a hive with `params` would.
    pub fn for_params(
        params: &HiveParams,
        capacity: Option<u64>,
        policy: ReplacementPolicy,
        keying: CamKeying,
        psnr_ref: f64,
    ) -> Result<Self> {
        let reg = crate::codec::Registry::default();
        let codec = reg.codec(&params.codec, &params.codec_options)?;
        let extractor = reg.extractor(&params.extractor, params.feature_dim, params.extractor_seed)?;
        Ok(CamEngine::new(capacity, policy, keying, codec, extractor, psnr_ref))
    }

    pub fn cam(&self) -> &Cam {
        &self.cam
    }

    fn tag(&self, rec: &TraceRecord, id: &str) -> String {
        match self.keying {
            CamKeying::Item => id.to_string(),
            CamKeying::Label => rec.coarse_cues.join("+"),
        }
    }
}

impl Engine for CamEngine {
    fn kind(&self) -> EngineKind {
        EngineKind::Cam
    }

    fn capacity(&self) -> Option<u64> {
        self.cam.capacity()
    }

    fn execute(&mut self, rec: &TraceRecord, corpus: &Corpus) -> Result<OpLogRecord> {
        let mut out = base_record(rec, corpus);
        match rec.op {
            TraceOp::Retention => out.outcome = "retention".into(),
            TraceOp::Store => {
                let (id, blob) = item_of(rec, corpus)?;
                let tag = self.tag(rec, id);
                let o = self.cam.store(&tag, Payload::new(MODALITY, blob.to_vec(), id));
                out.cost = o.cost;
                out.outcome = match (o.stored, o.overwritten) {
                    (false, _) => "rejected",
                    (true, true) => "overwritten",
                    (true, false) => "stored",
                }
                .into();
            }
            TraceOp::Retrieve => {
                let (id, _) = item_of(rec, corpus)?;
                let tag = self.tag(rec, id);
                let (found, cost) = self.cam.retrieve(&tag);
                let found = found.cloned();
                out.cost = cost;
                out.hit = found.is_some();
                out.outcome = if out.hit { "hit" } else { "miss" }.into();
                if let Some(p) = found {
                    let (f, s) = self.scorer.score(&p, id, corpus)?;
                    out.fidelity = Some(f);
                    out.similarity = Some(s);
                    out.returned_quality = Some(p.quality);
                }
            }
        }
        out.total_bytes = self.cam.used_bytes();
        Ok(out)
    }
}

/// Runs every record in order. A record the engine cannot execute aborts
/// the replay with that record's seq.
pub fn replay(trace: &Trace, corpus: &Corpus, engine: &mut dyn Engine) -> Result<OpLog> {
    let mut log = OpLog::new(engine.kind(), trace.digest(), engine.capacity());
    for rec in &trace.records {
        let r = engine.execute(rec, corpus).map_err(|e| match e {
            Error::MalformedRecord { .. } => e,
            other => Error::Replay {
                seq: rec.seq,
                source: Box::new(other),
            },
        })?;
        log.records.push(r);
    }
    Ok(log)
}

//! Store, retrieve and update on top of the memory network, with cost
//! accounting. The learning steps (reaction, retention) live in `learning`
//! and space management (elasticity, capacity) in `capacity`.

mod capacity;
mod learning;

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::codec::{similarity, FeatureVector, Payload};
use crate::error::{Error, Result};
use crate::nmn::{CueKey, Memory, NeuronId, SearchEntry};

pub use learning::RetentionSummary;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchParams {
    /// Coarse cues used to navigate the network.
    pub cues: Vec<CueKey>,
    /// Optional fine cues matched against data features.
    #[serde(default)]
    pub fine_cues: Vec<FeatureVector>,
    /// Candidates need an average path weight strictly above this.
    pub assoc_thresh: f64,
    /// Similarity needed for a match, in [-1, 1].
    pub match_thresh: f64,
}

impl SearchParams {
    pub fn new(cues: Vec<CueKey>, assoc_thresh: f64, match_thresh: f64) -> Self {
        SearchParams {
            cues,
            fine_cues: Vec::new(),
            assoc_thresh,
            match_thresh,
        }
    }

    pub fn labels(labels: &[&str], assoc_thresh: f64, match_thresh: f64) -> Self {
        SearchParams::new(
            labels.iter().map(|l| CueKey::label(*l)).collect(),
            assoc_thresh,
            match_thresh,
        )
    }

    pub fn with_fine_cue(mut self, f: FeatureVector) -> Self {
        self.fine_cues.push(f);
        self
    }

    fn validate(&self, dim: usize) -> Result<()> {
        if self.cues.is_empty() {
            return Err(Error::Config("at least one coarse cue is required".into()));
        }
        if !(-1.0..=1.0).contains(&self.match_thresh) {
            return Err(Error::Config(format!(
                "match threshold {} outside [-1, 1]",
                self.match_thresh
            )));
        }
        if let Some(f) = self.fine_cues.iter().find(|f| f.dim() != dim) {
            return Err(Error::Config(format!(
                "fine cue has {} dims, hive expects {dim}",
                f.dim()
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct OpControls {
    /// Maximum candidates examined; `None` is unbounded.
    pub search_limit: Option<u64>,
    /// Allow search-order updates.
    pub up: bool,
    /// Allow association decay (failure penalties and idle weakening).
    pub k: bool,
}

impl Default for OpControls {
    fn default() -> Self {
        OpControls {
            search_limit: None,
            up: true,
            k: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutcomeKind {
    Merged,
    NewNeuron,
    Hit,
    Miss,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OpOutcome {
    pub kind: OutcomeKind,
    pub dn_id: Option<NeuronId>,
    /// Number of candidate examinations.
    pub cost: u64,
    /// Candidates in the order they were examined.
    pub examined: Vec<NeuronId>,
    pub returned_payload: Option<Payload>,
    /// Codec quality of the returned payload.
    pub returned_quality: Option<f64>,
}

impl OpOutcome {
    fn new(kind: OutcomeKind, cost: u64, examined: Vec<NeuronId>) -> Self {
        OpOutcome {
            kind,
            dn_id: None,
            cost,
            examined,
            returned_payload: None,
            returned_quality: None,
        }
    }

    pub fn is_hit(&self) -> bool {
        matches!(self.kind, OutcomeKind::Hit)
    }
}

impl Memory {
    /// Candidate list for a search: per-cue orders concatenated in cue
    /// order, unknown cues resolved through every locality's default cue,
    /// filtered on `avg_weight > assoc_thresh`, de-duplicated and truncated.
    pub fn get_search_order(
        &self,
        hive: usize,
        cues: &[CueKey],
        assoc_thresh: f64,
        search_limit: Option<u64>,
    ) -> Result<Vec<SearchEntry>> {
        let h = self.hive_checked(hive)?;
        let mut sources: Vec<NeuronId> = Vec::new();
        for cue in cues {
            match h.find_cue(cue) {
                Some(id) => sources.push(id),
                None => sources.extend(h.default_cues()),
            }
        }
        let limit = search_limit.map_or(usize::MAX, |l| l as usize);
        let mut seen_src = BTreeSet::new();
        let mut seen_dn = BTreeSet::new();
        let mut out = Vec::new();
        for src in sources {
            if !seen_src.insert(src) {
                continue;
            }
            for entry in h.search_order(src) {
                if out.len() >= limit {
                    return Ok(out);
                }
                if entry.avg_weight > assoc_thresh && seen_dn.insert(entry.dn_id) {
                    out.push(entry.clone());
                }
            }
        }
        out.truncate(limit);
        Ok(out)
    }

    /// Recomputes every cue's search order from the current weights.
    pub fn update_memory_search_order(&mut self, hive: usize) -> Result<()> {
        self.hive_mut(hive)?.refresh_search_order();
        Ok(())
    }

    pub fn select_locality(&self, hive: usize, labels: &[&str], feature: &FeatureVector) -> Result<usize> {
        Ok(self.hive_checked(hive)?.select_locality(labels, feature))
    }

    /// Store with a merge attempt against existing data neurons.
    pub fn store(&mut self, payload: Payload, params: &SearchParams, controls: &OpControls) -> Result<OpOutcome> {
        let hive = self
            .hive_index(&payload.modality)
            .ok_or_else(|| Error::Config(format!("no hive for modality `{}`", payload.modality)))?;
        let (feature, eta, dim) = {
            let h = self.hive(hive);
            (h.extractor.extract(&payload.blob), h.params.eta, h.params.feature_dim)
        };
        params.validate(dim)?;
        let op = self.begin_op();

        self.ensure_capacity(hive, payload.size())?;

        let labels: Vec<&str> = params.cues.iter().filter_map(CueKey::as_label).collect();
        let locality = self.hive(hive).select_locality(&labels, &feature);
        let candidates = self.get_search_order(hive, &params.cues, params.assoc_thresh, controls.search_limit)?;

        let mut cost = 0u64;
        let mut examined = Vec::new();
        let mut matched = None;
        for cand in candidates {
            cost += 1;
            examined.push(cand.dn_id);
            let sim = {
                let dn = self
                    .hive(hive)
                    .data_neuron(cand.dn_id)
                    .ok_or(Error::UnknownNeuron(cand.dn_id))?;
                similarity(feature.as_slice(), dn.feature.as_slice())
            };
            if sim >= params.match_thresh {
                matched = Some(cand);
                break;
            }
            self.reaction(hive, cand.dn_id, &cand.path, false, &[], controls)?;
        }

        let outcome = match matched {
            Some(cand) => {
                self.reaction(hive, cand.dn_id, &cand.path, true, &params.cues, controls)?;
                let h = self.hive_mut(hive)?;
                let dn = h.data.get_mut(&cand.dn_id).ok_or(Error::UnknownNeuron(cand.dn_id))?;
                if payload.quality > dn.payload.quality {
                    dn.payload = payload;
                    dn.feature = feature;
                }
                let mut out = OpOutcome::new(OutcomeKind::Merged, cost, examined);
                out.dn_id = Some(cand.dn_id);
                out
            }
            None => {
                let dn = self.add_data_neuron(hive, locality, payload, feature)?;
                for cue in &params.cues {
                    let cn = self.add_cue_neuron(hive, cue.clone())?;
                    let h = self.hive_mut(hive)?;
                    h.graph.connect(cn, dn, op)?;
                    h.graph.adjust(cn, dn, -eta, op)?;
                }
                if controls.up {
                    self.hive_mut(hive)?.refresh_search_order();
                }
                let mut out = OpOutcome::new(OutcomeKind::NewNeuron, cost, examined);
                out.dn_id = Some(dn);
                out
            }
        };
        self.finish_op(controls)?;
        Ok(outcome)
    }

    /// Retrieve one data neuron by coarse and optional fine cues.
    pub fn retrieve(&mut self, hive: usize, params: &SearchParams, controls: &OpControls) -> Result<OpOutcome> {
        self.retrieve_inner(hive, params, controls, false)
    }

    /// Re-cues existing data: a retrieve of `target` with `new_cue` that
    /// also walks the default cues, so a hit associates the new cue.
    pub fn apply_update_semantics(
        &mut self,
        hive: usize,
        target: FeatureVector,
        new_cue: CueKey,
        assoc_thresh: f64,
        match_thresh: f64,
        controls: &OpControls,
    ) -> Result<OpOutcome> {
        let params = SearchParams::new(vec![new_cue], assoc_thresh, match_thresh).with_fine_cue(target);
        self.retrieve_inner(hive, &params, controls, true)
    }

    fn retrieve_inner(
        &mut self,
        hive: usize,
        params: &SearchParams,
        controls: &OpControls,
        fallback_to_defaults: bool,
    ) -> Result<OpOutcome> {
        params.validate(self.hive_checked(hive)?.params.feature_dim)?;
        self.begin_op();
        let mut candidates =
            self.get_search_order(hive, &params.cues, params.assoc_thresh, controls.search_limit)?;
        if fallback_to_defaults {
            let defaults: Vec<CueKey> = (0..self.hive(hive).localities.len()).map(CueKey::Default).collect();
            let extra = self.get_search_order(hive, &defaults, params.assoc_thresh, None)?;
            let limit = controls.search_limit.map_or(usize::MAX, |l| l as usize);
            for e in extra {
                if candidates.len() >= limit {
                    break;
                }
                if !candidates.iter().any(|c| c.dn_id == e.dn_id) {
                    candidates.push(e);
                }
            }
        }

        let mut cost = 0u64;
        let mut examined = Vec::new();
        let mut hit = None;
        for cand in candidates {
            cost += 1;
            examined.push(cand.dn_id);
            let matches = {
                let dn = self
                    .hive(hive)
                    .data_neuron(cand.dn_id)
                    .ok_or(Error::UnknownNeuron(cand.dn_id))?;
                params.fine_cues.is_empty()
                    || params
                        .fine_cues
                        .iter()
                        .any(|f| similarity(f.as_slice(), dn.feature.as_slice()) >= params.match_thresh)
            };
            if matches {
                hit = Some(cand);
                break;
            }
            self.reaction(hive, cand.dn_id, &cand.path, false, &[], controls)?;
        }

        let outcome = match hit {
            Some(cand) => {
                self.reaction(hive, cand.dn_id, &cand.path, true, &params.cues, controls)?;
                let dn = self.hive(hive).data_neuron(cand.dn_id).ok_or(Error::UnknownNeuron(cand.dn_id))?;
                let mut out = OpOutcome::new(OutcomeKind::Hit, cost, examined);
                out.dn_id = Some(cand.dn_id);
                out.returned_quality = Some(dn.payload.quality);
                out.returned_payload = Some(dn.payload.clone());
                out
            }
            None => OpOutcome::new(OutcomeKind::Miss, cost, examined),
        };
        self.finish_op(controls)?;
        Ok(outcome)
    }

    /// Runs retention on every hive whose period divides the op counter.
    fn finish_op(&mut self, controls: &OpControls) -> Result<()> {
        let op = self.op;
        for hive in 0..self.hives.len() {
            let period = self.hives[hive].params.retention_period;
            if op.is_multiple_of(period) {
                self.retention(hive, period, controls.k)?;
            }
        }
        Ok(())
    }
}

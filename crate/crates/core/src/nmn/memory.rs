use super::{
    apply_state_update, clamp_strength, CueKey, CueNeuron, DataNeuron, GraphMode, Hive,
    HiveParams, Locality, MemoryState, NeuronId, StateDelta,
};
use crate::codec::{FeatureVector, Payload, Registry};
use crate::error::{Error, Result};

/// A learning content-addressable memory: one or more hives sharing a
/// neuron id space and a global operation counter.
#[derive(Debug, Clone, Default)]
pub struct Memory {
    pub(crate) hives: Vec<Hive>,
    next_id: u32,
    pub(crate) op: u64,
}

impl Memory {
    pub fn new() -> Self {
        Memory::default()
    }

    /// Convenience constructor for a single-hive memory.
    pub fn with_hive(modality: &str, params: HiveParams) -> Result<Self> {
        let mut m = Memory::new();
        m.add_hive(modality, params, &Registry::default())?;
        Ok(m)
    }

    /// Adds a hive and one default cue per locality.
    pub fn add_hive(&mut self, modality: &str, params: HiveParams, registry: &Registry) -> Result<usize> {
        if self.hive_index(modality).is_some() {
            return Err(Error::Config(format!("hive `{modality}` already exists")));
        }
        let mut hive = Hive::new(modality, params, registry)?;
        let idx = self.hives.len();
        for l in 0..hive.params.num_localities {
            let id = self.alloc_id();
            hive.graph.add_node(id);
            hive.cues.insert(
                id,
                CueNeuron {
                    id,
                    key: CueKey::Default(l),
                    hive: idx,
                },
            );
            hive.localities.push(Locality {
                index: l,
                memory_decay_rate: hive.params.memory_decay_rates[l],
                association_decay_rate: hive.params.association_decay_rates[l],
                feature_mapping: hive.params.locality_mapping[l].clone(),
                elasticity_schedule: hive.params.elasticity_schedule[l].clone(),
                default_cue: id,
            });
        }
        hive.refresh_search_order();
        self.hives.push(hive);
        Ok(idx)
    }

    pub fn hive_index(&self, modality: &str) -> Option<usize> {
        self.hives.iter().position(|h| h.modality == modality)
    }

    pub fn hives(&self) -> &[Hive] {
        &self.hives
    }

    pub fn hive(&self, idx: usize) -> &Hive {
        &self.hives[idx]
    }

    pub(crate) fn hive_checked(&self, idx: usize) -> Result<&Hive> {
        self.hives
            .get(idx)
            .ok_or_else(|| Error::Config(format!("no hive at index {idx}")))
    }

    pub(crate) fn hive_mut(&mut self, idx: usize) -> Result<&mut Hive> {
        self.hives
            .get_mut(idx)
            .ok_or_else(|| Error::Config(format!("no hive at index {idx}")))
    }

    pub fn op_counter(&self) -> u64 {
        self.op
    }

    pub(crate) fn begin_op(&mut self) -> u64 {
        self.op += 1;
        self.op
    }

    fn alloc_id(&mut self) -> NeuronId {
        let id = NeuronId(self.next_id);
        self.next_id += 1;
        id
    }

    pub fn set_capacity(&mut self, hive: usize, cap: Option<u64>) -> Result<()> {
        self.hive_mut(hive)?.set_capacity(cap);
        Ok(())
    }

    pub fn total_bytes(&self) -> u64 {
        self.hives.iter().map(Hive::used_bytes).sum()
    }

    /// Returns the existing id when an identical cue is already in the bank.
    /// Does not touch the search order.
    pub fn add_cue_neuron(&mut self, hive: usize, key: CueKey) -> Result<NeuronId> {
        let h = self.hive_checked(hive)?;
        if let Some(id) = h.find_cue(&key) {
            return Ok(id);
        }
        match &key {
            CueKey::Default(l) => {
                return Err(Error::Config(format!("locality {l} does not exist")));
            }
            CueKey::Vector(v) if v.len() != h.params.feature_dim => {
                return Err(Error::Config(format!(
                    "cue vector has {} dims, hive expects {}",
                    v.len(),
                    h.params.feature_dim
                )));
            }
            _ => {}
        }
        let id = self.alloc_id();
        let h = self.hive_mut(hive)?;
        if let CueKey::Label(l) = &key {
            h.label_index.insert(l.clone(), id);
        }
        h.cues.insert(id, CueNeuron { id, key, hive });
        h.graph.add_node(id);
        Ok(id)
    }

    /// New data neuron at strength 100, wired to its locality's default cue
    /// (or to everything in full-graph mode).
    pub fn add_data_neuron(
        &mut self,
        hive: usize,
        locality: usize,
        payload: Payload,
        feature: FeatureVector,
    ) -> Result<NeuronId> {
        let op = self.op;
        let h = self.hive_checked(hive)?;
        let default_cue = h
            .localities
            .get(locality)
            .map(|l| l.default_cue)
            .ok_or_else(|| Error::Config(format!("unknown locality {locality}")))?;
        if feature.dim() != h.params.feature_dim || !feature.is_finite() {
            return Err(Error::Config(format!(
                "feature has {} dims (finite: {}), hive expects {}",
                feature.dim(),
                feature.is_finite(),
                h.params.feature_dim
            )));
        }
        let id = self.alloc_id();
        let h = self.hive_mut(hive)?;
        h.graph.add_node(id);
        if h.graph.mode() == GraphMode::Sparse {
            h.graph.connect(default_cue, id, op)?;
        }
        h.data.insert(
            id,
            DataNeuron {
                id,
                payload,
                feature,
                strength: 100.0,
                locality,
                last_access_op: op,
            },
        );
        Ok(id)
    }

    /// `max(eps, old - delta)` on one association.
    pub fn adjust_association(&mut self, hive: usize, a: NeuronId, b: NeuronId, delta: f64) -> Result<f64> {
        let op = self.op;
        self.hive_mut(hive)?.graph.adjust(a, b, delta, op)
    }

    /// `min(100, max(phi, old - delta))` on one data neuron, recompressing
    /// the payload when its quality must drop.
    pub fn adjust_strength(&mut self, hive: usize, dn: NeuronId, delta: f64) -> Result<f64> {
        let h = self.hive_mut(hive)?;
        let phi = h.params.phi;
        let neuron = h.data.get_mut(&dn).ok_or(Error::UnknownNeuron(dn))?;
        neuron.strength = clamp_strength(neuron.strength, delta, phi);
        let s = neuron.strength;
        h.recompress(dn)?;
        Ok(s)
    }

    /// Deep copy of a hive's learnable state.
    pub fn snapshot(&self, hive: usize) -> MemoryState {
        let Some(h) = self.hives.get(hive) else {
            return MemoryState::empty();
        };
        let neurons: Vec<NeuronId> = h.graph.nodes().collect();
        let adjacency = neurons
            .iter()
            .map(|&a| neurons.iter().map(|&b| h.graph.weight(a, b)).collect())
            .collect();
        let data_neurons: Vec<NeuronId> = h.data.keys().copied().collect();
        let strengths = h.data.values().map(|d| d.strength).collect();
        MemoryState {
            neurons,
            adjacency,
            data_neurons,
            strengths,
        }
    }

    /// Applies a state delta through the clamped update and installs the
    /// result. The adjacency delta must be symmetric with a zero diagonal.
    pub fn apply_state_delta(&mut self, hive: usize, delta: &StateDelta) -> Result<MemoryState> {
        let before = self.snapshot(hive);
        let n = before.neurons.len();
        if delta.adjacency.len() == n && delta.adjacency.iter().all(|r| r.len() == n) {
            for i in 0..n {
                if delta.adjacency[i][i] != 0.0 {
                    return Err(Error::SelfEdge(before.neurons[i]));
                }
                for j in i + 1..n {
                    if delta.adjacency[i][j] != delta.adjacency[j][i] {
                        return Err(Error::Consistency(format!(
                            "asymmetric delta between {} and {}",
                            before.neurons[i], before.neurons[j]
                        )));
                    }
                }
            }
        }
        let (eps, phi) = {
            let h = self.hive_checked(hive)?;
            (h.params.epsilon, h.params.phi)
        };
        let after = apply_state_update(&before, delta, eps, phi)?;
        let op = self.op;
        let h = self.hive_mut(hive)?;
        for i in 0..n {
            for j in i + 1..n {
                if after.adjacency[i][j] != before.adjacency[i][j] {
                    if let Some(w) = after.adjacency[i][j] {
                        h.graph.set_weight(after.neurons[i], after.neurons[j], w, op)?;
                    }
                }
            }
        }
        for (k, &dn) in after.data_neurons.iter().enumerate() {
            if let Some(neuron) = h.data.get_mut(&dn) {
                neuron.strength = after.strengths[k];
            }
            h.recompress(dn)?;
        }
        h.refresh_search_order();
        Ok(after)
    }

    /// Structural invariants: weights at or above epsilon, strengths within
    /// [phi, 100], symmetric adjacency, no self-edges, search-order entries
    /// pointing at live data neurons with weights that match the graph.
    pub fn check_invariants(&self) -> Result<()> {
        for h in &self.hives {
            let eps = h.params.epsilon;
            let phi = h.params.phi;
            if !h.graph.is_symmetric() {
                return Err(Error::Consistency(format!("hive {} graph asymmetric", h.modality)));
            }
            for (a, b, e) in h.graph.edges() {
                if e.weight < eps || !e.weight.is_finite() {
                    return Err(Error::Consistency(format!("edge {a}-{b} weight {} < eps {eps}", e.weight)));
                }
            }
            for dn in h.data.values() {
                if dn.strength < phi || dn.strength > 100.0 {
                    return Err(Error::Consistency(format!("{} strength {} outside [{phi}, 100]", dn.id, dn.strength)));
                }
                if dn.payload.size() > dn.payload.original_size {
                    return Err(Error::Consistency(format!("{} grew past its original size", dn.id)));
                }
            }
            for (cue, entries) in &h.search_order {
                for e in entries {
                    if !h.data.contains_key(&e.dn_id) {
                        return Err(Error::Consistency(format!("search order of {cue} references dead {}", e.dn_id)));
                    }
                    if e.path.first() != Some(cue) || e.path.last() != Some(&e.dn_id) {
                        return Err(Error::Consistency(format!("malformed path {:?}", e.path)));
                    }
                }
            }
        }
        Ok(())
    }
}

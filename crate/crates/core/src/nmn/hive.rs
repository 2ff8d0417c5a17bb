use std::collections::BTreeMap;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::{AssociationGraph, CueKey, CueNeuron, DataNeuron, GraphMode, NeuronId};
use crate::codec::{similarity, Codec, FeatureExtractor, FeatureVector, QualityMap, Registry};
use crate::error::{Error, Result};

/// Predicate admitting data into a locality.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeaturePredicate {
    /// Case-insensitive match against any insertion cue label.
    Label(String),
    /// Cosine similarity of the data feature against a prototype vector.
    Prototype {
        vector: Vec<f64>,
        min_similarity: f64,
    },
}

impl FeaturePredicate {
    pub fn matches(&self, labels: &[&str], feature: &FeatureVector) -> bool {
        match self {
            FeaturePredicate::Label(want) => labels.iter().any(|l| l.eq_ignore_ascii_case(want)),
            FeaturePredicate::Prototype {
                vector,
                min_similarity,
            } => vector.len() == feature.dim() && similarity(vector, feature.as_slice()) >= *min_similarity,
        }
    }
}

/// How an elasticity schedule value is applied to a strength.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum ElasticityMode {
    /// strength <- min(strength, value)
    #[default]
    Ceiling,
    /// strength <- strength * value / 100
    Multiplicative,
}

fn default_metric() -> String {
    "cosine".into()
}
fn default_codec() -> String {
    "truncate".into()
}
fn default_extractor() -> String {
    "histogram-projection".into()
}
fn default_dim() -> usize {
    64
}
fn default_path_len() -> usize {
    1
}

/// Per-hive hyperparameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HiveParams {
    pub num_localities: usize,
    /// Strength percent lost per retention pass, per locality.
    pub memory_decay_rates: Vec<f64>,
    /// Weight units lost per retention pass, per locality.
    pub association_decay_rates: Vec<f64>,
    /// Predicates per locality; first match wins, the last locality is the
    /// catch-all.
    pub locality_mapping: Vec<Vec<FeaturePredicate>>,
    #[serde(default = "default_metric")]
    pub matching_metric: String,
    /// Strength ceilings per locality, strictly decreasing.
    pub elasticity_schedule: Vec<Vec<f64>>,
    #[serde(default)]
    pub elasticity_mode: ElasticityMode,
    pub eta: f64,
    pub epsilon: f64,
    pub phi: f64,
    pub retention_period: u64,
    #[serde(default = "default_codec")]
    pub codec: String,
    #[serde(default)]
    pub codec_options: BTreeMap<String, f64>,
    #[serde(default = "default_extractor")]
    pub extractor: String,
    #[serde(default = "default_dim")]
    pub feature_dim: usize,
    #[serde(default)]
    pub extractor_seed: u64,
    #[serde(default)]
    pub quality_map: QualityMap,
    #[serde(default)]
    pub graph_mode: GraphMode,
    #[serde(default = "default_path_len")]
    pub max_path_len: usize,
    /// Byte budget for stored payloads; unbounded when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub capacity_bytes: Option<u64>,
}

impl HiveParams {
    /// Case-study defaults with two localities: labels in `priority_labels`
    /// go to locality 0, everything else to locality 1.
    pub fn case_study(priority_labels: &[&str]) -> Self {
        let schedule = vec![80.0, 70.0, 60.0, 50.0, 40.0, 30.0, 20.0, 10.0, 1.0];
        HiveParams {
            num_localities: 2,
            memory_decay_rates: vec![0.5, 1.0],
            association_decay_rates: vec![0.0, 0.0],
            locality_mapping: vec![
                priority_labels
                    .iter()
                    .map(|l| FeaturePredicate::Label((*l).to_string()))
                    .collect(),
                Vec::new(),
            ],
            matching_metric: default_metric(),
            elasticity_schedule: vec![schedule.clone(), schedule],
            elasticity_mode: ElasticityMode::Ceiling,
            eta: 20.0,
            epsilon: 1.0,
            phi: 1.0,
            retention_period: 500,
            codec: default_codec(),
            codec_options: BTreeMap::new(),
            extractor: default_extractor(),
            feature_dim: default_dim(),
            extractor_seed: 0,
            quality_map: QualityMap::Identity,
            graph_mode: GraphMode::Sparse,
            max_path_len: 1,
            capacity_bytes: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.num_localities;
        let v = |field: &str, reason: String| Err(Error::validation(format!("hive.{field}"), reason));
        if n == 0 {
            return v("num_localities", "must be at least 1".into());
        }
        let lens = [
            ("memory_decay_rates", self.memory_decay_rates.len()),
            ("association_decay_rates", self.association_decay_rates.len()),
            ("locality_mapping", self.locality_mapping.len()),
            ("elasticity_schedule", self.elasticity_schedule.len()),
        ];
        for (field, len) in lens {
            if len != n {
                return v(field, format!("has {len} entries, expected {n}"));
            }
        }
        for (field, rates) in [
            ("memory_decay_rates", &self.memory_decay_rates),
            ("association_decay_rates", &self.association_decay_rates),
        ] {
            if let Some(r) = rates.iter().find(|r| !r.is_finite() || **r < 0.0) {
                return v(field, format!("rate {r} must be finite and >= 0"));
            }
        }
        if !(self.eta.is_finite() && self.eta > 0.0) {
            return v("eta", format!("{} must be > 0", self.eta));
        }
        if !(self.epsilon.is_finite() && self.epsilon >= 0.0) {
            return v("epsilon", format!("{} must be >= 0", self.epsilon));
        }
        if !(0.0..=100.0).contains(&self.phi) {
            return v("phi", format!("{} must lie in [0, 100]", self.phi));
        }
        if self.retention_period == 0 {
            return v("retention_period", "must be >= 1".into());
        }
        let floor = if self.phi > 0.0 { self.phi.max(1.0) } else { 0.0 };
        for (i, sched) in self.elasticity_schedule.iter().enumerate() {
            if sched.is_empty() {
                return v("elasticity_schedule", format!("locality {i} schedule is empty"));
            }
            if sched.windows(2).any(|w| w[1] >= w[0]) {
                return v(
                    "elasticity_schedule",
                    format!("locality {i} schedule must be strictly decreasing"),
                );
            }
            let last = *sched.last().unwrap();
            if last < floor || sched[0] > 100.0 {
                return v(
                    "elasticity_schedule",
                    format!("locality {i} values must lie in [{floor}, 100]"),
                );
            }
        }
        if self.matching_metric != "cosine" {
            return v(
                "matching_metric",
                format!("unsupported metric `{}`", self.matching_metric),
            );
        }
        if self.feature_dim == 0 {
            return v("feature_dim", "must be >= 1".into());
        }
        if self.max_path_len == 0 {
            return v("max_path_len", "must be >= 1".into());
        }
        if let QualityMap::Power { exponent } = self.quality_map {
            if !(exponent.is_finite() && exponent > 0.0) {
                return v("quality_map", format!("exponent {exponent} must be > 0"));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Locality {
    pub index: usize,
    pub memory_decay_rate: f64,
    pub association_decay_rate: f64,
    pub feature_mapping: Vec<FeaturePredicate>,
    pub elasticity_schedule: Vec<f64>,
    pub default_cue: NeuronId,
}

/// One ranked candidate in a cue's search order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchEntry {
    pub path: Vec<NeuronId>,
    pub dn_id: NeuronId,
    pub avg_weight: f64,
}

impl SearchEntry {
    pub fn edges(&self) -> impl Iterator<Item = (NeuronId, NeuronId)> + '_ {
        self.path.windows(2).map(|w| (w[0], w[1]))
    }
}

/// A per-modality partition of the memory.
#[derive(Clone)]
pub struct Hive {
    pub(crate) modality: String,
    pub(crate) params: HiveParams,
    pub(crate) localities: Vec<Locality>,
    pub(crate) cues: BTreeMap<NeuronId, CueNeuron>,
    pub(crate) label_index: BTreeMap<String, NeuronId>,
    pub(crate) data: BTreeMap<NeuronId, DataNeuron>,
    pub(crate) graph: AssociationGraph,
    pub(crate) search_order: BTreeMap<NeuronId, Vec<SearchEntry>>,
    pub(crate) codec: Arc<dyn Codec>,
    pub(crate) extractor: Arc<dyn FeatureExtractor>,
}

impl std::fmt::Debug for Hive {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Hive")
            .field("modality", &self.modality)
            .field("cues", &self.cues.len())
            .field("data", &self.data.len())
            .field("edges", &self.graph.edge_count())
            .finish()
    }
}

impl Hive {
    pub(crate) fn new(modality: &str, params: HiveParams, registry: &Registry) -> Result<Self> {
        params.validate()?;
        let codec = registry.codec(&params.codec, &params.codec_options)?;
        let extractor =
            registry.extractor(&params.extractor, params.feature_dim, params.extractor_seed)?;
        if extractor.dim() != params.feature_dim {
            return Err(Error::Config(format!(
                "extractor `{}` yields {} dims, config says {}",
                params.extractor,
                extractor.dim(),
                params.feature_dim
            )));
        }
        Ok(Hive {
            modality: modality.to_string(),
            graph: AssociationGraph::new(params.graph_mode, params.epsilon),
            params,
            localities: Vec::new(),
            cues: BTreeMap::new(),
            label_index: BTreeMap::new(),
            data: BTreeMap::new(),
            search_order: BTreeMap::new(),
            codec,
            extractor,
        })
    }

    pub fn modality(&self) -> &str {
        &self.modality
    }

    pub fn params(&self) -> &HiveParams {
        &self.params
    }

    pub fn localities(&self) -> &[Locality] {
        &self.localities
    }

    pub fn graph(&self) -> &AssociationGraph {
        &self.graph
    }

    pub fn codec(&self) -> &dyn Codec {
        self.codec.as_ref()
    }

    pub fn extractor(&self) -> &dyn FeatureExtractor {
        self.extractor.as_ref()
    }

    pub fn cues(&self) -> impl Iterator<Item = &CueNeuron> {
        self.cues.values()
    }

    pub fn data_neurons(&self) -> impl Iterator<Item = &DataNeuron> {
        self.data.values()
    }

    pub fn data_neuron(&self, id: NeuronId) -> Option<&DataNeuron> {
        self.data.get(&id)
    }

    pub fn cue_neuron(&self, id: NeuronId) -> Option<&CueNeuron> {
        self.cues.get(&id)
    }

    pub fn is_data(&self, id: NeuronId) -> bool {
        self.data.contains_key(&id)
    }

    pub fn search_order(&self, cue: NeuronId) -> &[SearchEntry] {
        self.search_order.get(&cue).map_or(&[], Vec::as_slice)
    }

    pub fn search_orders(&self) -> &BTreeMap<NeuronId, Vec<SearchEntry>> {
        &self.search_order
    }

    pub fn used_bytes(&self) -> u64 {
        self.data.values().map(DataNeuron::size_bytes).sum()
    }

    pub fn capacity(&self) -> Option<u64> {
        self.params.capacity_bytes
    }

    pub fn set_capacity(&mut self, cap: Option<u64>) {
        self.params.capacity_bytes = cap;
    }

    /// Cue lookup by key.
    pub fn find_cue(&self, key: &CueKey) -> Option<NeuronId> {
        match key {
            CueKey::Label(l) => self.label_index.get(l).copied(),
            CueKey::Default(l) => self.localities.get(*l).map(|loc| loc.default_cue),
            CueKey::Vector(v) => self
                .cues
                .values()
                .find(|c| matches!(&c.key, CueKey::Vector(w) if w == v))
                .map(|c| c.id),
        }
    }

    pub fn default_cues(&self) -> impl Iterator<Item = NeuronId> + '_ {
        self.localities.iter().map(|l| l.default_cue)
    }

    /// First locality whose predicates match; otherwise the last one.
    pub fn select_locality(&self, labels: &[&str], feature: &FeatureVector) -> usize {
        self.localities
            .iter()
            .position(|loc| loc.feature_mapping.iter().any(|p| p.matches(labels, feature)))
            .unwrap_or(self.localities.len() - 1)
    }

    /// Codec quality that a given strength calls for.
    pub fn quality_for(&self, strength: f64) -> f64 {
        self.params.quality_map.quality(strength)
    }

    /// Brings a data neuron's payload down to the quality its strength calls
    /// for. Never raises quality. Returns bytes freed.
    pub(crate) fn recompress(&mut self, id: NeuronId) -> Result<u64> {
        let target = {
            let dn = self.data.get(&id).ok_or(Error::UnknownNeuron(id))?;
            self.quality_for(dn.strength)
        };
        let codec = Arc::clone(&self.codec);
        let dn = self.data.get_mut(&id).ok_or(Error::UnknownNeuron(id))?;
        if target + 1e-12 >= dn.payload.quality {
            return Ok(0);
        }
        let before = dn.payload.size();
        dn.payload = codec.compress(&dn.payload, target)?;
        Ok(before - dn.payload.size())
    }

    pub fn refresh_search_order(&mut self) {
        let cue_ids: Vec<NeuronId> = self.cues.keys().copied().collect();
        self.search_order = compute_search_order(
            &self.graph,
            &cue_ids,
            |id| self.data.contains_key(&id),
            self.params.max_path_len,
        );
    }
}

/// Ranked best paths from each cue to every reachable data neuron.
///
/// A path's score is the mean weight of its edges. Per data neuron the best
/// path wins, ties going to the shorter path and then the smaller id
/// sequence. Entries are sorted by descending score, ties by ascending data
/// neuron id.
pub fn compute_search_order(
    graph: &AssociationGraph,
    cues: &[NeuronId],
    is_data: impl Fn(NeuronId) -> bool,
    max_path_len: usize,
) -> BTreeMap<NeuronId, Vec<SearchEntry>> {
    let mut out = BTreeMap::new();
    for &cue in cues {
        let mut best: BTreeMap<NeuronId, SearchEntry> = BTreeMap::new();
        if max_path_len <= 1 {
            for (nb, w) in graph.neighbors(cue) {
                if is_data(nb) {
                    best.insert(
                        nb,
                        SearchEntry {
                            path: vec![cue, nb],
                            dn_id: nb,
                            avg_weight: w,
                        },
                    );
                }
            }
        } else {
            let mut path = vec![cue];
            walk(graph, &is_data, max_path_len, &mut path, 0.0, &mut best);
        }
        let mut entries: Vec<SearchEntry> = best.into_values().collect();
        entries.sort_by(|a, b| {
            b.avg_weight
                .total_cmp(&a.avg_weight)
                .then(a.dn_id.cmp(&b.dn_id))
        });
        out.insert(cue, entries);
    }
    out
}

fn walk(
    graph: &AssociationGraph,
    is_data: &impl Fn(NeuronId) -> bool,
    max_len: usize,
    path: &mut Vec<NeuronId>,
    sum: f64,
    best: &mut BTreeMap<NeuronId, SearchEntry>,
) {
    let last = *path.last().unwrap();
    for (nb, w) in graph.neighbors(last) {
        if path.contains(&nb) {
            continue;
        }
        path.push(nb);
        let total = sum + w;
        let len = path.len() - 1;
        if is_data(nb) {
            let avg = total / len as f64;
            let better = match best.get(&nb) {
                None => true,
                Some(cur) => match avg.total_cmp(&cur.avg_weight) {
                    std::cmp::Ordering::Greater => true,
                    std::cmp::Ordering::Less => false,
                    std::cmp::Ordering::Equal => {
                        (path.len(), path.as_slice()) < (cur.path.len(), cur.path.as_slice())
                    }
                },
            };
            if better {
                best.insert(
                    nb,
                    SearchEntry {
                        path: path.clone(),
                        dn_id: nb,
                        avg_weight: avg,
                    },
                );
            }
        }
        if len < max_len {
            walk(graph, is_data, max_len, path, total, best);
        }
        path.pop();
    }
}

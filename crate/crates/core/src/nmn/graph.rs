use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::NeuronId;
use crate::error::{Error, Result};

/// Connection policy for new neurons.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum GraphMode {
    /// No cue-cue edges; data neurons hang off their locality's default cue
    /// and gain cue edges only as associations demand.
    #[default]
    Sparse,
    /// Every pair of neurons is connected. Absent edges read as epsilon and
    /// only edges above epsilon are materialized.
    Full,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Edge {
    pub weight: f64,
    pub last_access: u64,
}

/// Sparse symmetric weighted adjacency.
#[derive(Debug, Clone)]
pub struct AssociationGraph {
    mode: GraphMode,
    epsilon: f64,
    nodes: BTreeSet<NeuronId>,
    adj: BTreeMap<NeuronId, BTreeMap<NeuronId, Edge>>,
}

impl AssociationGraph {
    pub fn new(mode: GraphMode, epsilon: f64) -> Self {
        AssociationGraph {
            mode,
            epsilon,
            nodes: BTreeSet::new(),
            adj: BTreeMap::new(),
        }
    }

    pub fn mode(&self) -> GraphMode {
        self.mode
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn add_node(&mut self, id: NeuronId) {
        self.nodes.insert(id);
    }

    pub fn contains(&self, id: NeuronId) -> bool {
        self.nodes.contains(&id)
    }

    pub fn nodes(&self) -> impl Iterator<Item = NeuronId> + '_ {
        self.nodes.iter().copied()
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn edge(&self, a: NeuronId, b: NeuronId) -> Option<&Edge> {
        self.adj.get(&a).and_then(|m| m.get(&b))
    }

    /// Current weight, including implicit epsilon edges in full mode.
    pub fn weight(&self, a: NeuronId, b: NeuronId) -> Option<f64> {
        if a == b {
            return None;
        }
        match self.edge(a, b) {
            Some(e) => Some(e.weight),
            None if self.mode == GraphMode::Full && self.contains(a) && self.contains(b) => {
                Some(self.epsilon)
            }
            None => None,
        }
    }

    /// Neighbors of `a` with their weights, ordered by id.
    pub fn neighbors(&self, a: NeuronId) -> Vec<(NeuronId, f64)> {
        match self.mode {
            GraphMode::Sparse => self
                .adj
                .get(&a)
                .map(|m| m.iter().map(|(&b, e)| (b, e.weight)).collect())
                .unwrap_or_default(),
            GraphMode::Full => {
                if !self.contains(a) {
                    return Vec::new();
                }
                let stored = self.adj.get(&a);
                self.nodes
                    .iter()
                    .filter(|&&b| b != a)
                    .map(|&b| {
                        let w = stored
                            .and_then(|m| m.get(&b))
                            .map_or(self.epsilon, |e| e.weight);
                        (b, w)
                    })
                    .collect()
            }
        }
    }

    fn check_pair(&self, a: NeuronId, b: NeuronId) -> Result<()> {
        if a == b {
            return Err(Error::SelfEdge(a));
        }
        for id in [a, b] {
            if !self.contains(id) {
                return Err(Error::UnknownNeuron(id));
            }
        }
        Ok(())
    }

    fn store(&mut self, a: NeuronId, b: NeuronId, edge: Edge) {
        if self.mode == GraphMode::Full && edge.weight <= self.epsilon {
            self.remove(a, b);
            return;
        }
        self.adj.entry(a).or_default().insert(b, edge);
        self.adj.entry(b).or_default().insert(a, edge);
    }

    fn remove(&mut self, a: NeuronId, b: NeuronId) {
        for (x, y) in [(a, b), (b, a)] {
            if let Some(m) = self.adj.get_mut(&x) {
                m.remove(&y);
                if m.is_empty() {
                    self.adj.remove(&x);
                }
            }
        }
    }

    /// Creates the edge at epsilon if it does not exist yet. Returns the
    /// resulting weight.
    pub fn connect(&mut self, a: NeuronId, b: NeuronId, op: u64) -> Result<f64> {
        self.check_pair(a, b)?;
        if let Some(w) = self.weight(a, b) {
            return Ok(w);
        }
        let eps = self.epsilon;
        self.store(
            a,
            b,
            Edge {
                weight: eps,
                last_access: op,
            },
        );
        Ok(eps)
    }

    /// `max(eps, old - delta)`; positive delta decays, negative strengthens.
    /// An absent edge is created from epsilon. Marks the edge accessed.
    pub fn adjust(&mut self, a: NeuronId, b: NeuronId, delta: f64, op: u64) -> Result<f64> {
        self.check_pair(a, b)?;
        let old = self.weight(a, b).unwrap_or(self.epsilon);
        let new = clamp_weight(old, delta, self.epsilon);
        self.store(
            a,
            b,
            Edge {
                weight: new,
                last_access: op,
            },
        );
        Ok(new)
    }

    /// Same clamp as `adjust`, without touching the access stamp. Used by
    /// retention on idle edges.
    pub fn decay(&mut self, a: NeuronId, b: NeuronId, delta: f64) -> Result<f64> {
        self.check_pair(a, b)?;
        let Some(edge) = self.edge(a, b).copied() else {
            return Ok(self.weight(a, b).unwrap_or(self.epsilon));
        };
        let new = clamp_weight(edge.weight, delta, self.epsilon);
        self.store(
            a,
            b,
            Edge {
                weight: new,
                last_access: edge.last_access,
            },
        );
        Ok(new)
    }

    /// Overwrite a weight, clamped at epsilon from below.
    pub fn set_weight(&mut self, a: NeuronId, b: NeuronId, weight: f64, op: u64) -> Result<()> {
        self.check_pair(a, b)?;
        self.store(
            a,
            b,
            Edge {
                weight: weight.max(self.epsilon),
                last_access: op,
            },
        );
        Ok(())
    }

    /// Materialized edges, each pair once with `a < b`.
    pub fn edges(&self) -> impl Iterator<Item = (NeuronId, NeuronId, &Edge)> + '_ {
        self.adj.iter().flat_map(|(&a, m)| {
            m.iter()
                .filter(move |(&b, _)| a < b)
                .map(move |(&b, e)| (a, b, e))
        })
    }

    pub fn edge_count(&self) -> usize {
        self.edges().count()
    }

    pub fn is_symmetric(&self) -> bool {
        self.adj.iter().all(|(a, m)| {
            m.iter()
                .all(|(b, e)| a != b && self.edge(*b, *a).is_some_and(|r| r == e))
        })
    }

    pub fn min_weight(&self) -> Option<f64> {
        self.edges().map(|(_, _, e)| e.weight).reduce(f64::min)
    }
}

pub fn clamp_weight(old: f64, delta: f64, epsilon: f64) -> f64 {
    (old - delta).max(epsilon)
}

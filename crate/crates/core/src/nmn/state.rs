use serde::{Deserialize, Serialize};

use super::NeuronId;
use crate::error::{Error, Result};

/// Learnable parameters of one hive: the adjacency over every neuron and the
/// strength vector over data neurons.
///
/// `adjacency[i][j]` is `None` where the neurons are not connected.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MemoryState {
    pub neurons: Vec<NeuronId>,
    pub adjacency: Vec<Vec<Option<f64>>>,
    pub data_neurons: Vec<NeuronId>,
    pub strengths: Vec<f64>,
}

impl MemoryState {
    pub fn empty() -> Self {
        MemoryState {
            neurons: Vec::new(),
            adjacency: Vec::new(),
            data_neurons: Vec::new(),
            strengths: Vec::new(),
        }
    }

    pub fn index_of(&self, id: NeuronId) -> Option<usize> {
        self.neurons.binary_search(&id).ok()
    }

    pub fn weight(&self, a: NeuronId, b: NeuronId) -> Option<f64> {
        let (i, j) = (self.index_of(a)?, self.index_of(b)?);
        self.adjacency[i][j]
    }

    pub fn strength(&self, dn: NeuronId) -> Option<f64> {
        let i = self.data_neurons.binary_search(&dn).ok()?;
        Some(self.strengths[i])
    }
}

/// Signed adjustments matching a `MemoryState`'s layout. Positive entries
/// decay, negative entries strengthen.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StateDelta {
    pub adjacency: Vec<Vec<f64>>,
    pub strengths: Vec<f64>,
}

impl StateDelta {
    pub fn zeros(state: &MemoryState) -> Self {
        let n = state.neurons.len();
        StateDelta {
            adjacency: vec![vec![0.0; n]; n],
            strengths: vec![0.0; state.strengths.len()],
        }
    }
}

pub fn clamp_strength(old: f64, delta: f64, phi: f64) -> f64 {
    (old - delta).max(phi).min(100.0)
}

/// `a' = max(eps, a - da)` per edge and `s' = min(100, max(phi, s - ds))` per
/// data neuron.
///
/// An unconnected pair stays unconnected under a non-negative delta; a
/// negative delta connects it starting from `epsilon`.
pub fn apply_state_update(
    state: &MemoryState,
    delta: &StateDelta,
    epsilon: f64,
    phi: f64,
) -> Result<MemoryState> {
    let n = state.neurons.len();
    let dims_ok = state.adjacency.len() == n
        && state.adjacency.iter().all(|r| r.len() == n)
        && delta.adjacency.len() == n
        && delta.adjacency.iter().all(|r| r.len() == n)
        && delta.strengths.len() == state.strengths.len()
        && state.data_neurons.len() == state.strengths.len();
    if !dims_ok {
        return Err(Error::Consistency(format!(
            "state/delta dimension mismatch ({n} neurons, {} strengths)",
            state.strengths.len()
        )));
    }
    let adjacency = state
        .adjacency
        .iter()
        .zip(&delta.adjacency)
        .enumerate()
        .map(|(i, (row, drow))| {
            row.iter()
                .zip(drow)
                .enumerate()
                .map(|(j, (a, &da))| {
                    if i == j {
                        return None;
                    }
                    match *a {
                        Some(w) => Some((w - da).max(epsilon)),
                        None if da < 0.0 => Some((epsilon - da).max(epsilon)),
                        None => None,
                    }
                })
                .collect()
        })
        .collect();
    let strengths = state
        .strengths
        .iter()
        .zip(&delta.strengths)
        .map(|(&s, &ds)| clamp_strength(s, ds, phi))
        .collect();
    Ok(MemoryState {
        neurons: state.neurons.clone(),
        adjacency,
        data_neurons: state.data_neurons.clone(),
        strengths,
    })
}

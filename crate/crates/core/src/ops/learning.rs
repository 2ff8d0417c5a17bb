use serde::{Deserialize, Serialize};

use super::OpControls;
use crate::error::{Error, Result};
use crate::nmn::{CueKey, Memory, NeuronId};

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RetentionSummary {
    pub edges_weakened: usize,
    pub neurons_decayed: usize,
    pub bytes_freed: u64,
}

impl Memory {
    /// Rewards (`flag = true`) or penalizes a candidate reached over `path`.
    ///
    /// On reward every path edge gains `eta`, the target returns to full
    /// strength and each cue in `cues` gets associated with the target.
    /// Cues whose edge is already on the path are not strengthened twice.
    pub fn reaction(
        &mut self,
        hive: usize,
        target: NeuronId,
        path: &[NeuronId],
        flag: bool,
        cues: &[CueKey],
        controls: &OpControls,
    ) -> Result<()> {
        let op = self.op;
        {
            let h = self.hive_checked(hive)?;
            if path.last() != Some(&target) || !h.is_data(target) {
                return Err(Error::Consistency(format!("path does not end at data neuron {target}")));
            }
            if let Some(w) = path.windows(2).find(|w| h.graph.weight(w[0], w[1]).is_none()) {
                return Err(Error::Consistency(format!("dangling path edge {} -- {}", w[0], w[1])));
            }
        }
        let eta = self.hive(hive).params.eta;

        if !flag {
            if !controls.k {
                return Ok(());
            }
            let h = self.hive_mut(hive)?;
            for w in path.windows(2) {
                h.graph.adjust(w[0], w[1], eta, op)?;
            }
            if controls.up {
                h.refresh_search_order();
            }
            return Ok(());
        }

        {
            let h = self.hive_mut(hive)?;
            for w in path.windows(2) {
                h.graph.adjust(w[0], w[1], -eta, op)?;
            }
            let dn = h.data.get_mut(&target).ok_or(Error::UnknownNeuron(target))?;
            dn.strength = 100.0;
            dn.last_access_op = op;
        }
        for cue in cues {
            let cn = self.add_cue_neuron(hive, cue.clone())?;
            let on_path = path
                .windows(2)
                .any(|w| (w[0] == cn && w[1] == target) || (w[1] == cn && w[0] == target));
            if !on_path {
                self.hive_mut(hive)?.graph.adjust(cn, target, -eta, op)?;
            }
        }
        if controls.up {
            self.hive_mut(hive)?.refresh_search_order();
        }
        Ok(())
    }

    /// Weakens whatever has not been accessed in the last `period` ops.
    ///
    /// Edges decay only when `k` is set, by the association rate of the
    /// locality of their data endpoint. Data neurons lose their locality's
    /// memory decay rate and are recompressed.
    pub fn retention(&mut self, hive: usize, period: u64, k: bool) -> Result<RetentionSummary> {
        if period == 0 {
            return Err(Error::Config("retention period must be at least 1".into()));
        }
        let op = self.op;
        let h = self.hive_mut(hive)?;
        let mut summary = RetentionSummary::default();
        let idle = |last: u64| op.saturating_sub(last) >= period;

        if k {
            let victims: Vec<(NeuronId, NeuronId, f64)> = h
                .graph
                .edges()
                .filter(|(_, _, e)| idle(e.last_access))
                .filter_map(|(a, b, _)| {
                    let rate = [a, b]
                        .iter()
                        .filter_map(|id| h.data.get(id))
                        .map(|dn| h.localities[dn.locality].association_decay_rate)
                        .reduce(f64::max)?;
                    (rate > 0.0).then_some((a, b, rate))
                })
                .collect();
            for (a, b, rate) in victims {
                let before = h.graph.weight(a, b);
                let after = h.graph.decay(a, b, rate)?;
                if before != Some(after) {
                    summary.edges_weakened += 1;
                }
            }
        }

        let phi = h.params.phi;
        let idle_dns: Vec<NeuronId> = h
            .data
            .values()
            .filter(|dn| idle(dn.last_access_op))
            .map(|dn| dn.id)
            .collect();
        for id in idle_dns {
            let dn = h.data.get_mut(&id).ok_or(Error::UnknownNeuron(id))?;
            let rate = h.localities[dn.locality].memory_decay_rate;
            let new = crate::nmn::clamp_strength(dn.strength, rate, phi);
            if new < dn.strength {
                dn.strength = new;
                summary.neurons_decayed += 1;
                summary.bytes_freed += h.recompress(id)?;
            }
        }
        h.refresh_search_order();
        Ok(summary)
    }
}

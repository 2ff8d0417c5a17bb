use crate::error::{Error, Result};
use crate::nmn::{ElasticityMode, Memory, NeuronId};

impl Memory {
    /// Applies step `iteration` of a locality's elasticity schedule and
    /// returns the bytes freed.
    pub fn elasticity(&mut self, hive: usize, locality: usize, iteration: usize) -> Result<u64> {
        let h = self.hive_mut(hive)?;
        let loc = h
            .localities
            .get(locality)
            .ok_or_else(|| Error::Config(format!("unknown locality {locality}")))?;
        let Some(&ef) = loc.elasticity_schedule.get(iteration) else {
            return Err(Error::ElasticityExhausted { locality, iteration });
        };
        let phi = h.params.phi;
        let mode = h.params.elasticity_mode;
        let members: Vec<NeuronId> = h
            .data
            .values()
            .filter(|d| d.locality == locality)
            .map(|d| d.id)
            .collect();
        let mut freed = 0;
        for id in members {
            let dn = h.data.get_mut(&id).ok_or(Error::UnknownNeuron(id))?;
            let target = match mode {
                ElasticityMode::Ceiling => dn.strength.min(ef),
                ElasticityMode::Multiplicative => dn.strength * ef / 100.0,
            }
            .max(phi);
            if target < dn.strength {
                dn.strength = target;
                freed += h.recompress(id)?;
            }
        }
        Ok(freed)
    }

    /// Frees space until `needed` more bytes fit under the hive's capacity.
    ///
    /// Localities are squeezed least important first (highest decay rate,
    /// ties to the higher index), each through its whole schedule before
    /// the next one is touched.
    pub fn ensure_capacity(&mut self, hive: usize, needed: u64) -> Result<()> {
        let h = self.hive_checked(hive)?;
        let Some(cap) = h.capacity() else {
            return Ok(());
        };
        let fits = |m: &Memory| m.hive(hive).used_bytes() + needed <= cap;
        if fits(self) {
            return Ok(());
        }
        let mut order: Vec<usize> = (0..h.localities.len()).collect();
        order.sort_by(|&a, &b| {
            let (la, lb) = (&h.localities[a], &h.localities[b]);
            lb.memory_decay_rate.total_cmp(&la.memory_decay_rate).then(b.cmp(&a))
        });
        'outer: for loc in order {
            let steps = self.hive(hive).localities[loc].elasticity_schedule.len();
            for it in 0..steps {
                self.elasticity(hive, loc, it)?;
                if fits(self) {
                    break 'outer;
                }
            }
        }
        if fits(self) {
            return Ok(());
        }
        let h = self.hive(hive);
        Err(Error::StorageFull {
            hive: h.modality.clone(),
            needed,
            available: cap.saturating_sub(h.used_bytes()),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::codec::Payload;
    use crate::nmn::HiveParams;

    /// Two DNs of 100 bytes in each locality of the case-study hive.
    fn fixture(cap: Option<u64>) -> (Memory, Vec<NeuronId>) {
        let mut p = HiveParams::case_study(&["deer"]);
        p.capacity_bytes = cap;
        let mut m = Memory::with_hive("image", p).unwrap();
        let mut ids = Vec::new();
        for (i, loc) in [0, 0, 1, 1].into_iter().enumerate() {
            let blob = vec![i as u8 * 10; 100];
            let f = m.hive(0).extractor().extract(&blob);
            ids.push(
                m.add_data_neuron(0, loc, Payload::new("image", blob, format!("i{i}")), f)
                    .unwrap(),
            );
        }
        (m, ids)
    }

    #[test]
    fn ceiling_caps_only_above() {
        let (mut m, ids) = fixture(None);
        m.adjust_strength(0, ids[3], 50.0).unwrap();
        let freed = m.elasticity(0, 1, 0).unwrap();
        assert_eq!(freed, 20);
        assert_eq!(m.hive(0).data_neuron(ids[2]).unwrap().strength, 80.0);
        assert_eq!(m.hive(0).data_neuron(ids[3]).unwrap().strength, 50.0);
        assert_eq!(m.hive(0).data_neuron(ids[0]).unwrap().strength, 100.0);
    }

    #[test]
    fn last_step_hits_phi() {
        let (mut m, ids) = fixture(None);
        m.elasticity(0, 0, 8).unwrap();
        assert_eq!(m.hive(0).data_neuron(ids[0]).unwrap().strength, 1.0);
        assert_eq!(m.hive(0).data_neuron(ids[0]).unwrap().size_bytes(), 1);
        assert!(matches!(
            m.elasticity(0, 0, 9),
            Err(Error::ElasticityExhausted { locality: 0, iteration: 9 })
        ));
    }

    #[test]
    fn multiplicative_reading() {
        let (mut m, ids) = fixture(None);
        m.hive_mut(0).unwrap().params.elasticity_mode = ElasticityMode::Multiplicative;
        m.adjust_strength(0, ids[1], 50.0).unwrap();
        m.elasticity(0, 0, 0).unwrap();
        assert_eq!(m.hive(0).data_neuron(ids[0]).unwrap().strength, 80.0);
        assert_eq!(m.hive(0).data_neuron(ids[1]).unwrap().strength, 40.0);
    }

    #[test]
    fn squeezes_least_important_locality_first() {
        // 400 used, cap 400, need 30: locality 1 (rate 1) drops to 80 each
        // at step 0, freeing 40; locality 0 is left alone.
        let (mut m, ids) = fixture(Some(400));
        m.ensure_capacity(0, 30).unwrap();
        let s: Vec<f64> = ids
            .iter()
            .map(|id| m.hive(0).data_neuron(*id).unwrap().strength)
            .collect();
        assert_eq!(s, vec![100.0, 100.0, 80.0, 80.0]);
        assert_eq!(m.hive(0).used_bytes(), 360);
    }

    #[test]
    fn exhausting_locality_one_moves_to_zero() {
        // locality 1 can give 2 * 99 bytes; needing 250 forces locality 0
        let (mut m, ids) = fixture(Some(400));
        m.ensure_capacity(0, 250).unwrap();
        assert_eq!(m.hive(0).data_neuron(ids[2]).unwrap().strength, 1.0);
        assert!(m.hive(0).data_neuron(ids[0]).unwrap().strength < 100.0);
        assert!(m.hive(0).used_bytes() + 250 <= 400);
    }

    #[test]
    fn infeasible_request_reports_storage_full() {
        let (mut m, _) = fixture(Some(400));
        let err = m.ensure_capacity(0, 399).unwrap_err();
        assert!(err.is_storage_full());
        assert_eq!(m.hive(0).used_bytes(), 4);
    }

    #[test]
    fn zero_phi_allows_complete_removal() {
        let (mut m, ids) = fixture(Some(400));
        {
            let h = m.hive_mut(0).unwrap();
            h.params.phi = 0.0;
            for l in &mut h.localities {
                *l.elasticity_schedule.last_mut().unwrap() = 0.0;
            }
        }
        m.ensure_capacity(0, 400).unwrap();
        assert_eq!(m.hive(0).used_bytes(), 0);
        assert_eq!(m.hive(0).data_neuron(ids[0]).unwrap().strength, 0.0);
    }

    #[test]
    fn unbounded_is_noop() {
        let (mut m, _) = fixture(None);
        m.ensure_capacity(0, u64::MAX / 2).unwrap();
        assert_eq!(m.hive(0).used_bytes(), 400);
    }
}

//! Conventional content-addressable memory: exact tag match, linear scan,
//! data kept at full quality, fixed-policy eviction under a byte budget.

use serde::{Deserialize, Serialize};

use crate::codec::Payload;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ReplacementPolicy {
    #[default]
    Fifo,
    Lru,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CamEntry {
    pub tag: String,
    pub data: Payload,
    pub insert_seq: u64,
    pub last_use: u64,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CamStoreOutcome {
    pub cost: u64,
    /// False when the payload alone exceeds the capacity.
    pub stored: bool,
    pub overwritten: bool,
    pub evicted: Vec<String>,
}

#[derive(Debug, Clone, Default)]
pub struct Cam {
    entries: Vec<CamEntry>,
    capacity_bytes: Option<u64>,
    policy: ReplacementPolicy,
    clock: u64,
}

impl Cam {
    pub fn new(capacity_bytes: Option<u64>, policy: ReplacementPolicy) -> Self {
        Cam {
            entries: Vec::new(),
            capacity_bytes,
            policy,
            clock: 0,
        }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entries(&self) -> &[CamEntry] {
        &self.entries
    }

    pub fn capacity(&self) -> Option<u64> {
        self.capacity_bytes
    }

    pub fn used_bytes(&self) -> u64 {
        self.entries.iter().map(|e| e.data.size()).sum()
    }

    fn tick(&mut self) -> u64 {
        self.clock += 1;
        self.clock
    }

    /// Position of `tag` (0-based) and the number of entries scanned.
    fn scan(&self, tag: &str) -> (Option<usize>, u64) {
        match self.entries.iter().position(|e| e.tag == tag) {
            Some(i) => (Some(i), i as u64 + 1),
            None => (None, self.entries.len() as u64),
        }
    }

    pub fn store(&mut self, tag: &str, data: Payload) -> CamStoreOutcome {
        let now = self.tick();
        let (pos, cost) = self.scan(tag);
        let mut out = CamStoreOutcome {
            cost,
            stored: true,
            overwritten: pos.is_some(),
            evicted: Vec::new(),
        };
        let size = data.size();
        if self.capacity_bytes.is_some_and(|cap| size > cap) {
            out.stored = false;
            return out;
        }
        if let Some(i) = pos {
            // the old copy leaves before eviction is considered
            self.entries.remove(i);
        }
        if let Some(cap) = self.capacity_bytes {
            while self.used_bytes() + size > cap {
                let victim = self.victim().expect("non-empty while over budget");
                out.evicted.push(self.entries.remove(victim).tag);
            }
        }
        self.entries.push(CamEntry {
            tag: tag.to_string(),
            data,
            insert_seq: now,
            last_use: now,
        });
        out
    }

    fn victim(&self) -> Option<usize> {
        let key = |e: &CamEntry| match self.policy {
            ReplacementPolicy::Fifo => e.insert_seq,
            ReplacementPolicy::Lru => e.last_use,
        };
        self.entries
            .iter()
            .enumerate()
            .min_by_key(|(_, e)| key(e))
            .map(|(i, _)| i)
    }

    pub fn retrieve(&mut self, tag: &str) -> (Option<&Payload>, u64) {
        let now = self.tick();
        let (pos, cost) = self.scan(tag);
        match pos {
            Some(i) => {
                self.entries[i].last_use = now;
                (Some(&self.entries[i].data), cost)
            }
            None => (None, cost),
        }
    }
}

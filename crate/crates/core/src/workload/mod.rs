//! Corpus manifests, synthetic corpus generation, access traces and replay.
//!
//! The synthetic corpus models camera-trap captures: each sighting of an
//! animal produces a short burst of near-identical frames, and every class
//! has its own byte-value profile that sightings jitter around.

pub mod dynamism;
mod replay;

use std::collections::{BTreeSet, HashMap};
use std::fs;
use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, Zipf};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

pub use replay::{replay, CamEngine, CamKeying, Engine, EngineKind, NsEngine};

pub const MANIFEST_FORMAT: &str = "nstore-manifest";
pub const TRACE_FORMAT: &str = "nstore-trace";
pub const FORMAT_VERSION: u32 = 1;

const DEFAULT_LABELS: [&str; 8] = ["deer", "background", "fox", "boar", "hare", "owl", "lynx", "badger"];

fn default_frames() -> usize {
    5
}

fn default_true() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WorkloadSpec {
    pub n_items: usize,
    pub n_classes: usize,
    /// Class names; defaults to a built-in list when empty.
    #[serde(default)]
    pub class_labels: Vec<String>,
    pub priority_class: String,
    /// Probability that a retrieve targets the priority class.
    pub priority_bias: f64,
    pub n_retrievals: usize,
    /// Inclusive byte-size range of generated payloads.
    pub payload_size_range: [usize; 2],
    /// Frames captured per sighting. Frames of one sighting are near
    /// duplicates of each other.
    #[serde(default = "default_frames")]
    pub frames_per_sighting: usize,
    /// Zipf exponent for picking items within a group; uniform when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub item_skew: Option<f64>,
    #[serde(default = "default_true")]
    pub use_fine_cue: bool,
    /// Retention-only records appended after the retrievals.
    #[serde(default)]
    pub tail_retentions: usize,
    /// Taken from the run configuration.
    #[serde(skip)]
    pub seed: u64,
}

impl WorkloadSpec {
    /// Two-class wildlife workload with `deer` as the priority class.
    pub fn wildlife(seed: u64) -> Self {
        WorkloadSpec {
            n_items: 200,
            n_classes: 2,
            class_labels: Vec::new(),
            priority_class: "deer".into(),
            priority_bias: 0.9,
            n_retrievals: 10_000,
            payload_size_range: [2048, 4096],
            frames_per_sighting: default_frames(),
            item_skew: None,
            use_fine_cue: true,
            tail_retentions: 0,
            seed,
        }
    }

    pub fn labels(&self) -> Vec<String> {
        (0..self.n_classes)
            .map(|i| {
                self.class_labels
                    .get(i)
                    .cloned()
                    .or_else(|| DEFAULT_LABELS.get(i).map(|s| s.to_string()))
                    .unwrap_or_else(|| format!("class{i}"))
            })
            .collect()
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.priority_bias) {
            return Err(Error::validation("workload.priority_bias", "must be within [0, 1]"));
        }
        if self.n_items > 0 && self.n_classes == 0 {
            return Err(Error::validation("workload.n_classes", "must be at least 1"));
        }
        let [lo, hi] = self.payload_size_range;
        if lo == 0 || lo > hi {
            return Err(Error::validation(
                "workload.payload_size_range",
                "needs 1 <= min <= max",
            ));
        }
        if self.frames_per_sighting == 0 {
            return Err(Error::validation("workload.frames_per_sighting", "must be at least 1"));
        }
        if let Some(s) = self.item_skew {
            if !(s.is_finite() && s >= 0.0) {
                return Err(Error::validation("workload.item_skew", "must be a finite exponent >= 0"));
            }
        }
        if self.n_classes > 0 && !self.labels().contains(&self.priority_class) {
            return Err(Error::validation(
                "workload.priority_class",
                format!("`{}` is not one of the class labels", self.priority_class),
            ));
        }
        let labels: BTreeSet<String> = self.labels().into_iter().collect();
        if labels.len() != self.n_classes || labels.iter().any(|l| l.is_empty()) {
            return Err(Error::validation("workload.class_labels", "labels must be unique and non-empty"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PayloadRef {
    /// Relative to the manifest's directory.
    Path(String),
    /// Hex-encoded bytes.
    Inline(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ManifestItem {
    pub item_id: String,
    pub payload: PayloadRef,
    pub label: String,
    pub priority: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
struct Header {
    format: String,
    version: u32,
}

impl Header {
    fn new(format: &str) -> Self {
        Header {
            format: format.into(),
            version: FORMAT_VERSION,
        }
    }

    fn check(&self, format: &str) -> Result<()> {
        if self.format != format {
            return Err(Error::Parse(format!("expected a `{format}` file, found `{}`", self.format)));
        }
        if self.version != FORMAT_VERSION {
            return Err(Error::Version {
                found: self.version,
                expected: FORMAT_VERSION,
            });
        }
        Ok(())
    }
}

/// Manifest plus the payload bytes it refers to, in manifest order.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Corpus {
    pub items: Vec<ManifestItem>,
    pub blobs: Vec<Vec<u8>>,
    index: HashMap<String, usize>,
}

impl Corpus {
    pub fn new(items: Vec<ManifestItem>, blobs: Vec<Vec<u8>>) -> Result<Self> {
        if items.len() != blobs.len() {
            return Err(Error::Consistency("manifest and payload counts differ".into()));
        }
        let mut index = HashMap::new();
        for (i, it) in items.iter().enumerate() {
            if it.label.is_empty() {
                return Err(Error::MalformedRecord {
                    seq: i as u64,
                    reason: format!("item `{}` has an empty label", it.item_id),
                });
            }
            if index.insert(it.item_id.clone(), i).is_some() {
                return Err(Error::MalformedRecord {
                    seq: i as u64,
                    reason: format!("duplicate item id `{}`", it.item_id),
                });
            }
        }
        Ok(Corpus { items, blobs, index })
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn position(&self, item_id: &str) -> Option<usize> {
        self.index.get(item_id).copied()
    }

    pub fn item(&self, item_id: &str) -> Option<(&ManifestItem, &[u8])> {
        let i = self.position(item_id)?;
        Some((&self.items[i], &self.blobs[i]))
    }

    pub fn total_bytes(&self) -> u64 {
        self.blobs.iter().map(|b| b.len() as u64).sum()
    }

    pub fn manifest_jsonl(&self) -> String {
        let mut out = serde_json::to_string(&Header::new(MANIFEST_FORMAT)).expect("header");
        out.push('\n');
        for it in &self.items {
            out.push_str(&serde_json::to_string(it).expect("manifest item"));
            out.push('\n');
        }
        out
    }

    /// Writes `manifest.jsonl` and one file per payload under `payloads/`.
    /// Inline payload refs are kept inline.
    pub fn write(&self, dir: &Path) -> Result<PathBuf> {
        let pdir = dir.join("payloads");
        fs::create_dir_all(&pdir).map_err(|e| Error::io(&pdir, e))?;
        for (it, blob) in self.items.iter().zip(&self.blobs) {
            if let PayloadRef::Path(rel) = &it.payload {
                let p = dir.join(rel);
                fs::write(&p, blob).map_err(|e| Error::io(&p, e))?;
            }
        }
        let manifest = dir.join("manifest.jsonl");
        fs::write(&manifest, self.manifest_jsonl()).map_err(|e| Error::io(&manifest, e))?;
        Ok(manifest)
    }

    pub fn load(manifest: &Path) -> Result<Self> {
        let text = fs::read_to_string(manifest).map_err(|e| Error::io(manifest, e))?;
        let base = manifest.parent().unwrap_or(Path::new("."));
        let mut lines = text.lines();
        let header: Header = serde_json::from_str(lines.next().unwrap_or(""))
            .map_err(|e| Error::Parse(format!("{}: bad header: {e}", manifest.display())))?;
        header.check(MANIFEST_FORMAT)?;
        let mut items = Vec::new();
        let mut blobs = Vec::new();
        for (i, line) in lines.filter(|l| !l.trim().is_empty()).enumerate() {
            let item: ManifestItem = serde_json::from_str(line).map_err(|e| Error::MalformedRecord {
                seq: i as u64,
                reason: e.to_string(),
            })?;
            let blob = match &item.payload {
                PayloadRef::Path(rel) => {
                    let p = base.join(rel);
                    fs::read(&p).map_err(|e| Error::io(&p, e))?
                }
                PayloadRef::Inline(h) => hex::decode(h).map_err(|e| Error::MalformedRecord {
                    seq: i as u64,
                    reason: format!("inline payload: {e}"),
                })?,
            };
            items.push(item);
            blobs.push(blob);
        }
        Corpus::new(items, blobs)
    }
}

/// Byte-value profile: a mixture of rounded Gaussians.
#[derive(Debug, Clone)]
struct Profile {
    peaks: Vec<(f64, f64, f64)>, // (center, sigma, weight)
}

impl Profile {
    fn for_class(rng: &mut ChaCha8Rng) -> Self {
        let peaks = (0..3)
            .map(|_| {
                (
                    rng.random_range(24.0..232.0),
                    rng.random_range(5.0..10.0),
                    rng.random_range(0.5..1.5),
                )
            })
            .collect();
        Profile { peaks }
    }

    fn jitter(&self, rng: &mut ChaCha8Rng) -> Self {
        let peaks = self
            .peaks
            .iter()
            .map(|&(c, s, w)| {
                (
                    (c + rng.random_range(-16.0..16.0)).clamp(0.0, 255.0),
                    s * rng.random_range(0.8..1.25),
                    w * rng.random_range(0.6..1.6),
                )
            })
            .collect();
        Profile { peaks }
    }

    fn sample(&self, rng: &mut ChaCha8Rng, len: usize) -> Vec<u8> {
        let total: f64 = self.peaks.iter().map(|p| p.2).sum();
        let normals: Vec<Normal<f64>> = self
            .peaks
            .iter()
            .map(|&(c, s, _)| Normal::new(c, s).expect("finite sigma"))
            .collect();
        (0..len)
            .map(|_| {
                let mut u = rng.random_range(0.0..total);
                let mut k = 0;
                while k + 1 < self.peaks.len() && u >= self.peaks[k].2 {
                    u -= self.peaks[k].2;
                    k += 1;
                }
                normals[k].sample(rng).round().clamp(0.0, 255.0) as u8
            })
            .collect()
    }
}

fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Deterministic synthetic corpus. Sightings are assigned to classes round
/// robin, shuffled, and emitted as bursts of consecutive frames.
pub fn generate_corpus(spec: &WorkloadSpec) -> Result<Corpus> {
    spec.validate()?;
    if spec.n_items == 0 {
        return Corpus::new(Vec::new(), Vec::new());
    }
    let labels = spec.labels();
    let profiles: Vec<Profile> = (0..spec.n_classes)
        .map(|c| Profile::for_class(&mut stream_rng(spec.seed, 1_000 + c as u64)))
        .collect();
    let n_sightings = spec.n_items.div_ceil(spec.frames_per_sighting);
    let mut sightings: Vec<usize> = (0..n_sightings).collect();
    sightings.shuffle(&mut stream_rng(spec.seed, 1));

    let [lo, hi] = spec.payload_size_range;
    let mut items = Vec::with_capacity(spec.n_items);
    let mut blobs = Vec::with_capacity(spec.n_items);
    for s in sightings {
        let class = s % spec.n_classes;
        let mut rng = stream_rng(spec.seed, 10_000 + s as u64);
        let profile = profiles[class].jitter(&mut rng);
        let first = s * spec.frames_per_sighting;
        let last = (first + spec.frames_per_sighting).min(spec.n_items);
        for frame in first..last {
            let len = rng.random_range(lo..=hi);
            let id = format!("img-{frame:05}");
            items.push(ManifestItem {
                payload: PayloadRef::Path(format!("payloads/{id}.bin")),
                item_id: id,
                label: labels[class].clone(),
                priority: labels[class] == spec.priority_class,
            });
            blobs.push(profile.sample(&mut rng, len));
        }
    }
    Corpus::new(items, blobs)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TraceOp {
    Store,
    Retrieve,
    Retention,
}

impl TraceOp {
    pub fn as_str(self) -> &'static str {
        match self {
            TraceOp::Store => "store",
            TraceOp::Retrieve => "retrieve",
            TraceOp::Retention => "retention",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub seq: u64,
    pub op: TraceOp,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub item_id: Option<String>,
    #[serde(default)]
    pub coarse_cues: Vec<String>,
    #[serde(default)]
    pub use_fine_cue: bool,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Trace {
    pub records: Vec<TraceRecord>,
}

impl Trace {
    pub fn to_jsonl(&self) -> String {
        let mut out = serde_json::to_string(&Header::new(TRACE_FORMAT)).expect("header");
        out.push('\n');
        for r in &self.records {
            out.push_str(&serde_json::to_string(r).expect("trace record"));
            out.push('\n');
        }
        out
    }

    /// SHA-256 of the serialized trace; identifies the trace in op logs.
    pub fn digest(&self) -> String {
        hex::encode(Sha256::digest(self.to_jsonl().as_bytes()))
    }

    pub fn from_jsonl(text: &str) -> Result<Self> {
        let mut lines = text.lines();
        let header: Header = serde_json::from_str(lines.next().unwrap_or(""))
            .map_err(|e| Error::Parse(format!("bad trace header: {e}")))?;
        header.check(TRACE_FORMAT)?;
        let mut records = Vec::new();
        for (i, line) in lines.filter(|l| !l.trim().is_empty()).enumerate() {
            let rec: TraceRecord = serde_json::from_str(line).map_err(|e| Error::MalformedRecord {
                seq: i as u64,
                reason: e.to_string(),
            })?;
            records.push(rec);
        }
        Ok(Trace { records })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Trace::from_jsonl(&text)
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_jsonl()).map_err(|e| Error::io(path, e))
    }

    pub fn count(&self, op: TraceOp) -> usize {
        self.records.iter().filter(|r| r.op == op).count()
    }

    /// Structural checks: sequential seq numbers, item ids known to the
    /// corpus, and every retrieve preceded by a store of the same item.
    pub fn validate(&self, corpus: &Corpus) -> Result<()> {
        let mut stored = BTreeSet::new();
        for (i, r) in self.records.iter().enumerate() {
            let bad = |reason: String| Error::MalformedRecord { seq: r.seq, reason };
            if r.seq != i as u64 {
                return Err(bad(format!("expected seq {i}")));
            }
            match r.op {
                TraceOp::Retention => {}
                TraceOp::Store | TraceOp::Retrieve => {
                    let id = r.item_id.as_deref().ok_or_else(|| bad("missing item_id".into()))?;
                    if corpus.position(id).is_none() {
                        return Err(bad(format!("unknown item `{id}`")));
                    }
                    if r.coarse_cues.is_empty() {
                        return Err(bad("no coarse cues".into()));
                    }
                    if r.op == TraceOp::Store {
                        stored.insert(id);
                    } else if !stored.contains(id) {
                        return Err(bad(format!("retrieve of `{id}` before its store")));
                    }
                }
            }
        }
        Ok(())
    }
}

/// Store phase over the whole corpus in manifest order, then biased
/// retrieves, then an optional retention-only tail.
pub fn generate_trace(corpus: &Corpus, spec: &WorkloadSpec) -> Result<Trace> {
    spec.validate()?;
    if corpus.is_empty() {
        return Err(Error::Config("cannot build a trace over an empty manifest".into()));
    }
    let mut records = Vec::new();
    let mut push = |op, item: Option<&ManifestItem>, fine| {
        records.push(TraceRecord {
            seq: records.len() as u64,
            op,
            item_id: item.map(|i| i.item_id.clone()),
            coarse_cues: item.map(|i| vec![i.label.clone()]).unwrap_or_default(),
            use_fine_cue: fine,
        })
    };
    for it in &corpus.items {
        push(TraceOp::Store, Some(it), false);
    }

    let priority: Vec<&ManifestItem> = corpus.items.iter().filter(|i| i.priority).collect();
    let other: Vec<&ManifestItem> = corpus.items.iter().filter(|i| !i.priority).collect();
    let mut rng = stream_rng(spec.seed, 2);
    let zipf = |n: usize| spec.item_skew.filter(|&s| s > 0.0 && n > 1).map(|s| Zipf::new(n as f64, s).expect("valid zipf"));
    let (zp, zo) = (zipf(priority.len()), zipf(other.len()));
    for _ in 0..spec.n_retrievals {
        let want_priority = rng.random_bool(spec.priority_bias);
        let (group, z) = match (want_priority, priority.is_empty(), other.is_empty()) {
            (true, false, _) | (false, false, true) => (&priority, &zp),
            _ => (&other, &zo),
        };
        let idx = match z {
            Some(z) => (z.sample(&mut rng) as usize - 1).min(group.len() - 1),
            None => rng.random_range(0..group.len()),
        };
        push(TraceOp::Retrieve, Some(group[idx]), spec.use_fine_cue);
    }
    for _ in 0..spec.tail_retentions {
        push(TraceOp::Retention, None, false);
    }
    Ok(Trace { records })
}

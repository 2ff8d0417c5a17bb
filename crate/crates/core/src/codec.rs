//! Payloads, the quality-parametrized lossy codec, feature extraction and
//! the similarity/fidelity metrics used by both engines.
//!
//! Everything here is a pure function of its inputs plus configuration. The
//! default codec keeps a prefix of the original bytes whose length is
//! proportional to the requested quality; reconstruction pads the dropped
//! tail with the payload's mean byte. The default extractor projects the
//! centered byte histogram through a seeded Gaussian matrix.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tolerance used when comparing quality percentages.
const QUALITY_EPS: f64 = 1e-9;

#[derive(Clone, PartialEq, Serialize, Deserialize)]
pub struct Payload {
    pub modality: String,
    #[serde(with = "hex_bytes")]
    pub blob: Vec<u8>,
    pub original_size: u64,
    /// Percentage in [0, 100] at which `blob` currently stands.
    pub quality: f64,
    /// Rounded mean of the original bytes, used as reconstruction fill.
    pub fill_byte: u8,
    /// Lineage tag of the original this blob was derived from.
    pub origin: String,
}

impl fmt::Debug for Payload {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Payload")
            .field("modality", &self.modality)
            .field("size", &self.blob.len())
            .field("original_size", &self.original_size)
            .field("quality", &self.quality)
            .field("origin", &self.origin)
            .finish()
    }
}

impl Payload {
    pub fn new(modality: impl Into<String>, blob: Vec<u8>, origin: impl Into<String>) -> Self {
        let fill_byte = mean_byte(&blob);
        Payload {
            modality: modality.into(),
            original_size: blob.len() as u64,
            blob,
            quality: 100.0,
            fill_byte,
            origin: origin.into(),
        }
    }

    pub fn size(&self) -> u64 {
        self.blob.len() as u64
    }
}

fn mean_byte(bytes: &[u8]) -> u8 {
    if bytes.is_empty() {
        return 0;
    }
    let sum: u64 = bytes.iter().map(|&b| u64::from(b)).sum();
    ((sum as f64) / (bytes.len() as f64)).round() as u8
}

/// Real-valued feature vector of configured dimension.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct FeatureVector(pub Vec<f64>);

impl FeatureVector {
    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|v| v.is_finite())
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }
}

impl From<Vec<f64>> for FeatureVector {
    fn from(v: Vec<f64>) -> Self {
        FeatureVector(v)
    }
}

pub trait Codec: Send + Sync {
    fn id(&self) -> &str;

    /// Recompress `payload` down to `target_quality`. Up-compression is an
    /// error.
    fn compress(&self, payload: &Payload, target_quality: f64) -> Result<Payload>;

    /// Full-length byte reconstruction of a possibly degraded payload.
    fn reconstruct(&self, payload: &Payload) -> Vec<u8>;

    /// Size in bytes that `compress` would produce for an original of
    /// `original_size` bytes at `quality`.
    fn size_at(&self, original_size: u64, quality: f64) -> u64;
}

/// Prefix-truncation codec, rounded up to whole blocks.
#[derive(Debug, Clone)]
pub struct TruncationCodec {
    block: u64,
}

impl TruncationCodec {
    pub fn new(block: u64) -> Self {
        TruncationCodec {
            block: block.max(1),
        }
    }
}

impl Default for TruncationCodec {
    fn default() -> Self {
        TruncationCodec::new(1)
    }
}

impl Codec for TruncationCodec {
    fn id(&self) -> &str {
        "truncate"
    }

    fn compress(&self, payload: &Payload, target_quality: f64) -> Result<Payload> {
        if !(0.0..=100.0).contains(&target_quality) || target_quality.is_nan() {
            return Err(Error::Codec(format!(
                "target quality {target_quality} outside [0, 100]"
            )));
        }
        if target_quality > payload.quality + QUALITY_EPS {
            return Err(Error::Codec(format!(
                "cannot raise quality from {} to {target_quality}",
                payload.quality
            )));
        }
        let keep = self.size_at(payload.original_size, target_quality) as usize;
        let keep = keep.min(payload.blob.len());
        Ok(Payload {
            blob: payload.blob[..keep].to_vec(),
            quality: target_quality,
            ..payload.clone()
        })
    }

    fn reconstruct(&self, payload: &Payload) -> Vec<u8> {
        let mut out = payload.blob.clone();
        out.resize(payload.original_size as usize, payload.fill_byte);
        out
    }

    fn size_at(&self, original_size: u64, quality: f64) -> u64 {
        if quality >= 100.0 {
            return original_size;
        }
        if quality <= 0.0 {
            return 0;
        }
        // guard against 1000 * 0.07 style representation noise
        let exact = original_size as f64 * quality / 100.0;
        let bytes = (exact - 1e-9).ceil().max(0.0) as u64;
        let blocks = bytes.div_ceil(self.block);
        (blocks * self.block).min(original_size)
    }
}

pub trait FeatureExtractor: Send + Sync {
    fn id(&self) -> &str;
    fn dim(&self) -> usize;
    fn extract(&self, blob: &[u8]) -> FeatureVector;
}

/// Centered 256-bin byte histogram, projected to `dim` dimensions by a
/// seeded Gaussian matrix and normalized to unit length.
#[derive(Debug, Clone)]
pub struct HistogramProjection {
    dim: usize,
    seed: u64,
    // row-major dim x 256
    matrix: Vec<f64>,
}

impl HistogramProjection {
    pub fn new(dim: usize, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let matrix = (0..dim * 256)
            .map(|_| StandardNormal.sample(&mut rng))
            .collect();
        HistogramProjection { dim, seed, matrix }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }
}

impl FeatureExtractor for HistogramProjection {
    fn id(&self) -> &str {
        "histogram-projection"
    }

    fn dim(&self) -> usize {
        self.dim
    }

    fn extract(&self, blob: &[u8]) -> FeatureVector {
        if blob.is_empty() {
            return FeatureVector(vec![0.0; self.dim]);
        }
        let mut hist = [0f64; 256];
        for &b in blob {
            hist[b as usize] += 1.0;
        }
        let n = blob.len() as f64;
        for h in hist.iter_mut() {
            *h = *h / n - 1.0 / 256.0;
        }
        let mut out: Vec<f64> = self
            .matrix
            .chunks_exact(256)
            .map(|row| row.iter().zip(hist.iter()).map(|(a, b)| a * b).sum())
            .collect();
        let norm = out.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm > 0.0 {
            for v in out.iter_mut() {
                *v /= norm;
            }
        }
        FeatureVector(out)
    }
}

/// Cosine similarity. A zero vector on either side yields 0.
pub fn similarity(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len(), "feature dimension mismatch");
    let mut dot = 0.0;
    let mut na = 0.0;
    let mut nb = 0.0;
    for (x, y) in a.iter().zip(b) {
        dot += x * y;
        na += x * x;
        nb += y * y;
    }
    if na == 0.0 || nb == 0.0 {
        return 0.0;
    }
    (dot / (na.sqrt() * nb.sqrt())).clamp(-1.0, 1.0)
}

/// PSNR of the codec's reconstruction of `degraded` against `original`,
/// `f64::INFINITY` when they are identical.
pub fn fidelity(codec: &dyn Codec, original: &[u8], degraded: &Payload) -> Result<f64> {
    let recon = codec.reconstruct(degraded);
    if recon.len() != original.len() {
        return Err(Error::Consistency(format!(
            "reconstruction has {} bytes, original has {}",
            recon.len(),
            original.len()
        )));
    }
    Ok(psnr(original, &recon))
}

pub fn psnr(a: &[u8], b: &[u8]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    if a.is_empty() {
        return f64::INFINITY;
    }
    let sse: f64 = a
        .iter()
        .zip(b)
        .map(|(&x, &y)| {
            let d = f64::from(x) - f64::from(y);
            d * d
        })
        .sum();
    if sse == 0.0 {
        return f64::INFINITY;
    }
    let mse = sse / a.len() as f64;
    10.0 * (255.0f64 * 255.0 / mse).log10()
}

/// PSNR at unit MSE for 8-bit data; the default normalization ceiling.
pub fn default_psnr_ref() -> f64 {
    20.0 * 255f64.log10()
}

/// Maps PSNR onto [0, 1] against a reference ceiling.
pub fn normalized_fidelity(psnr_db: f64, psnr_ref: f64) -> f64 {
    if psnr_db.is_infinite() && psnr_db > 0.0 {
        return 1.0;
    }
    (psnr_db / psnr_ref).clamp(0.0, 1.0)
}

/// How memory strength translates into codec quality.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum QualityMap {
    #[default]
    Identity,
    /// quality = 100 * (strength / 100) ^ exponent
    Power { exponent: f64 },
}

impl QualityMap {
    pub fn quality(&self, strength: f64) -> f64 {
        let s = strength.clamp(0.0, 100.0);
        match *self {
            QualityMap::Identity => s,
            QualityMap::Power { exponent } => 100.0 * (s / 100.0).powf(exponent),
        }
    }
}

type CodecFactory = fn(&BTreeMap<String, f64>) -> Arc<dyn Codec>;
type ExtractorFactory = fn(usize, u64) -> Arc<dyn FeatureExtractor>;

/// Id-string registry for codecs and extractors.
///
/// Built-ins: codec `truncate` (option `block`, default 1) and extractor
/// `histogram-projection`. Additional implementations can be registered
/// before configs are resolved.
#[derive(Clone)]
pub struct Registry {
    codecs: BTreeMap<String, CodecFactory>,
    extractors: BTreeMap<String, ExtractorFactory>,
}

impl Default for Registry {
    fn default() -> Self {
        let mut r = Registry {
            codecs: BTreeMap::new(),
            extractors: BTreeMap::new(),
        };
        r.register_codec("truncate", |opts| {
            let block = opts.get("block").copied().unwrap_or(1.0).max(1.0) as u64;
            Arc::new(TruncationCodec::new(block))
        });
        r.register_extractor("histogram-projection", |dim, seed| {
            Arc::new(HistogramProjection::new(dim, seed))
        });
        r
    }
}

impl Registry {
    pub fn register_codec(&mut self, id: &str, factory: CodecFactory) {
        self.codecs.insert(id.to_string(), factory);
    }

    pub fn register_extractor(&mut self, id: &str, factory: ExtractorFactory) {
        self.extractors.insert(id.to_string(), factory);
    }

    pub fn codec(&self, id: &str, opts: &BTreeMap<String, f64>) -> Result<Arc<dyn Codec>> {
        self.codecs
            .get(id)
            .map(|f| f(opts))
            .ok_or_else(|| Error::Config(format!("unknown codec `{id}`")))
    }

    pub fn extractor(&self, id: &str, dim: usize, seed: u64) -> Result<Arc<dyn FeatureExtractor>> {
        self.extractors
            .get(id)
            .map(|f| f(dim, seed))
            .ok_or_else(|| Error::Config(format!("unknown feature extractor `{id}`")))
    }

    pub fn has_codec(&self, id: &str) -> bool {
        self.codecs.contains_key(id)
    }

    pub fn has_extractor(&self, id: &str) -> bool {
        self.extractors.contains_key(id)
    }
}

mod hex_bytes {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(bytes: &[u8], s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&hex::encode(bytes))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<u8>, D::Error> {
        let s = String::deserialize(d)?;
        hex::decode(s).map_err(serde::de::Error::custom)
    }
}

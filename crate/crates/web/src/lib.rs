//! wasm-bindgen entry points for the static demo page. Every export returns
//! a JSON string; failures come back as `{"error": "..."}`.

use serde_json::{json, Value};
use wasm_bindgen::prelude::*;

use nstore_core::config::RunConfig;
use nstore_core::experiment::{generate, make_engine, run_engine};
use nstore_core::metrics::{cap_grid, quality_factor_curve, space_timeline};
use nstore_core::nmn::render_text;
use nstore_core::workload::{dynamism, EngineKind};
use nstore_core::Result;

fn respond(r: Result<Value>) -> String {
    match r {
        Ok(v) => v.to_string(),
        Err(e) => json!({ "error": e.to_string() }).to_string(),
    }
}

fn scenario(seed: u64, n_items: usize, n_retrievals: usize, priority_bias: f64) -> Result<RunConfig> {
    let mut cfg = RunConfig::preset("wildlife-deer", seed)?;
    cfg.workload.n_items = n_items;
    cfg.workload.n_retrievals = n_retrievals;
    cfg.workload.priority_bias = priority_bias;
    cfg.workload.payload_size_range = [1024, 2048];
    cfg.validate()?;
    Ok(cfg)
}

pub fn walkthrough_value() -> Result<Value> {
    let w = dynamism::run()?;
    let states: Vec<String> = w.snapshots.iter().map(render_text).collect();
    Ok(json!({ "steps": w.steps, "states": states, "snapshots": w.snapshots }))
}

pub fn qf_curve_value(seed: u64, n_items: usize, n_retrievals: usize, priority_bias: f64) -> Result<Value> {
    let cfg = scenario(seed, n_items, n_retrievals, priority_bias)?;
    let (corpus, trace) = generate(&cfg)?;
    let caps = cap_grid(corpus.total_bytes(), &cfg.report.cap_fractions);
    let mut curves = serde_json::Map::new();
    for kind in [EngineKind::Ns, EngineKind::Cam] {
        let pts = quality_factor_curve(&trace, &corpus, &caps, |cap| make_engine(&cfg, kind, Some(cap)))?;
        curves.insert(kind.as_str().into(), serde_json::to_value(pts)?);
    }
    Ok(json!({ "full_bytes": corpus.total_bytes(), "curves": curves }))
}

pub fn space_timeline_value(
    seed: u64,
    n_items: usize,
    n_retrievals: usize,
    tail_retentions: usize,
) -> Result<Value> {
    let mut cfg = scenario(seed, n_items, n_retrievals, 0.9)?;
    cfg.workload.tail_retentions = tail_retentions;
    let (corpus, trace) = generate(&cfg)?;
    let mut out = serde_json::Map::new();
    for kind in [EngineKind::Ns, EngineKind::Cam] {
        let run = run_engine(&cfg, kind, &corpus, &trace, None)?;
        out.insert(kind.as_str().into(), serde_json::to_value(space_timeline(&run.log))?);
    }
    Ok(Value::Object(out))
}

/// The scripted six-op walkthrough: per-step logs and a text rendering of
/// every state.
#[wasm_bindgen]
pub fn dynamism_walkthrough() -> String {
    respond(walkthrough_value())
}

/// Quality factor of both engines over caps from 10% to 120% of the corpus.
#[wasm_bindgen]
pub fn qf_curve(seed: u32, n_items: u32, n_retrievals: u32, priority_bias: f64) -> String {
    respond(qf_curve_value(u64::from(seed), n_items as usize, n_retrievals as usize, priority_bias))
}

/// Bytes held after every op, for both engines.
#[wasm_bindgen]
pub fn space_timeline_json(seed: u32, n_items: u32, n_retrievals: u32, tail_retentions: u32) -> String {
    respond(space_timeline_value(
        u64::from(seed),
        n_items as usize,
        n_retrievals as usize,
        tail_retentions as usize,
    ))
}

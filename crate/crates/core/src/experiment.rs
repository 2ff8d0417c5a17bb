//! End-to-end runs driven by a [`RunConfig`]: corpus and trace generation,
//! single-engine replays and the NS/CAM comparison with its cap sweep.

use crate::config::RunConfig;
use crate::error::Result;
use crate::metrics::{cap_grid, compare, quality_factor_curve, space_timeline, summarize, ReportBundle};
use crate::nmn::SnapshotDoc;
use crate::oplog::OpLog;
use crate::workload::{generate_corpus, generate_trace, replay, Corpus, Engine, EngineKind, Trace};

pub fn generate(cfg: &RunConfig) -> Result<(Corpus, Trace)> {
    let spec = cfg.workload_spec();
    let corpus = generate_corpus(&spec)?;
    let trace = generate_trace(&corpus, &spec)?;
    Ok((corpus, trace))
}

pub fn make_engine(cfg: &RunConfig, kind: EngineKind, cap: Option<u64>) -> Result<Box<dyn Engine>> {
    Ok(match kind {
        EngineKind::Ns => Box::new(cfg.ns_engine(cap)?),
        EngineKind::Cam => Box::new(cfg.cam_engine(cap)?),
    })
}

pub struct EngineRun {
    pub log: OpLog,
    /// Final NS state; `None` for CAM.
    pub snapshot: Option<SnapshotDoc>,
}

/// Replays the trace on one engine at the configured capacity, or at `cap`
/// when given.
pub fn run_engine(
    cfg: &RunConfig,
    kind: EngineKind,
    corpus: &Corpus,
    trace: &Trace,
    cap: Option<u64>,
) -> Result<EngineRun> {
    let cap = cap.or(cfg.hive.capacity_bytes);
    match kind {
        EngineKind::Ns => {
            let mut e = cfg.ns_engine(cap)?;
            let log = replay(trace, corpus, &mut e)?;
            Ok(EngineRun {
                log,
                snapshot: Some(e.memory().snapshot_doc()),
            })
        }
        EngineKind::Cam => {
            let mut e = cfg.cam_engine(cap)?;
            let log = replay(trace, corpus, &mut e)?;
            Ok(EngineRun { log, snapshot: None })
        }
    }
}

pub fn single_report(cfg: &RunConfig, log: &OpLog) -> Result<ReportBundle> {
    Ok(ReportBundle {
        scenario: cfg.scenario.clone(),
        summaries: vec![summarize(log, cfg.report.warmup_retrieves)?],
        comparison: None,
        timelines: vec![(log.engine(), space_timeline(log))],
        qf_curves: Vec::new(),
    })
}

pub struct CompareRun {
    pub ns: EngineRun,
    pub cam: OpLog,
    pub bundle: ReportBundle,
}

/// Both engines on the same trace, then the quality-factor sweep over the
/// configured fractions of the corpus size.
pub fn compare_engines(cfg: &RunConfig, corpus: &Corpus, trace: &Trace) -> Result<CompareRun> {
    let ns = run_engine(cfg, EngineKind::Ns, corpus, trace, None)?;
    let cam = run_engine(cfg, EngineKind::Cam, corpus, trace, None)?.log;
    let comparison = compare(&ns.log, &cam, cfg.report.warmup_retrieves)?;

    let mut caps = cap_grid(corpus.total_bytes(), &cfg.report.cap_fractions);
    caps.sort_unstable();
    let mut qf_curves = Vec::new();
    for kind in [EngineKind::Ns, EngineKind::Cam] {
        let curve = quality_factor_curve(trace, corpus, &caps, |cap| make_engine(cfg, kind, Some(cap)))?;
        qf_curves.push((kind, curve));
    }
    let bundle = ReportBundle {
        scenario: cfg.scenario.clone(),
        summaries: Vec::new(),
        comparison: Some(comparison),
        timelines: vec![
            (EngineKind::Ns, space_timeline(&ns.log)),
            (EngineKind::Cam, space_timeline(&cam)),
        ],
        qf_curves,
    };
    Ok(CompareRun { ns, cam, bundle })
}

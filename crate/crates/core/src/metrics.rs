//! Aggregation of op logs into cost, space, fidelity and quality-factor
//! figures, plus deterministic CSV and SVG output.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::oplog::{OpLog, OpLogRecord};
use crate::workload::{replay, Corpus, Engine, EngineKind, Trace, TraceOp};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CostStats {
    pub count: usize,
    pub mean: f64,
    pub p50: u64,
    pub p90: u64,
    pub p99: u64,
    pub max: u64,
}

impl CostStats {
    pub fn from_costs(costs: &[u64]) -> Self {
        if costs.is_empty() {
            return CostStats {
                count: 0,
                mean: 0.0,
                p50: 0,
                p90: 0,
                p99: 0,
                max: 0,
            };
        }
        let mut sorted = costs.to_vec();
        sorted.sort_unstable();
        // nearest-rank percentile
        let rank = |p: f64| sorted[((p * sorted.len() as f64).ceil() as usize).clamp(1, sorted.len()) - 1];
        CostStats {
            count: costs.len(),
            mean: costs.iter().sum::<u64>() as f64 / costs.len() as f64,
            p50: rank(0.50),
            p90: rank(0.90),
            p99: rank(0.99),
            max: *sorted.last().unwrap(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Summary {
    pub engine: EngineKind,
    pub store: CostStats,
    /// Retrieves after the warmup window.
    pub retrieve: CostStats,
    /// Stores and post-warmup retrieves together.
    pub combined: CostStats,
    pub warmup_retrieves: usize,
    pub hit_rate: f64,
    pub mean_fidelity: f64,
    /// Mean feature similarity of returned priority payloads to what was
    /// asked for; `None` when no priority retrieve hit.
    pub priority_similarity: Option<f64>,
    pub final_bytes: u64,
    pub peak_bytes: u64,
}

fn mean(xs: impl Iterator<Item = f64>) -> Option<f64> {
    let (sum, n) = xs.fold((0.0, 0usize), |(s, n), x| (s + x, n + 1));
    (n > 0).then(|| sum / n as f64)
}

/// Summary of one log. The first `warmup` retrieves are left out of the
/// retrieve cost figures.
pub fn summarize(log: &OpLog, warmup: usize) -> Result<Summary> {
    if log.records.is_empty() {
        return Err(Error::Config("cannot summarize an empty log".into()));
    }
    let stores: Vec<u64> = log.records.iter().filter(|r| r.op == TraceOp::Store).map(|r| r.cost).collect();
    let retrieves: Vec<&OpLogRecord> = log.retrieves().collect();
    let measured: Vec<u64> = retrieves.iter().skip(warmup).map(|r| r.cost).collect();
    let mut combined = stores.clone();
    combined.extend(&measured);
    let hits = retrieves.iter().filter(|r| r.hit).count();
    Ok(Summary {
        engine: log.engine(),
        store: CostStats::from_costs(&stores),
        retrieve: CostStats::from_costs(&measured),
        combined: CostStats::from_costs(&combined),
        warmup_retrieves: warmup.min(retrieves.len()),
        hit_rate: if retrieves.is_empty() { 0.0 } else { hits as f64 / retrieves.len() as f64 },
        mean_fidelity: mean(retrieves.iter().filter_map(|r| r.fidelity)).unwrap_or(0.0),
        priority_similarity: mean(retrieves.iter().filter(|r| r.priority).filter_map(|r| r.similarity)),
        final_bytes: log.records.last().map_or(0, |r| r.total_bytes),
        peak_bytes: log.records.iter().map(|r| r.total_bytes).max().unwrap_or(0),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Comparison {
    pub ns: Summary,
    pub cam: Summary,
    /// NS over CAM mean retrieve cost.
    pub retrieve_cost_ratio: f64,
    pub combined_cost_ratio: f64,
    pub space_ratio: f64,
    pub fidelity_delta: f64,
}

fn ratio(a: f64, b: f64) -> f64 {
    if b == 0.0 {
        if a == 0.0 {
            1.0
        } else {
            f64::INFINITY
        }
    } else {
        a / b
    }
}

/// Joins an NS and a CAM log of the same trace.
pub fn compare(ns: &OpLog, cam: &OpLog, warmup: usize) -> Result<Comparison> {
    if ns.header.trace_digest != cam.header.trace_digest {
        return Err(Error::MixedTrace(ns.header.trace_digest.clone(), cam.header.trace_digest.clone()));
    }
    let (ns, cam) = (summarize(ns, warmup)?, summarize(cam, warmup)?);
    Ok(Comparison {
        retrieve_cost_ratio: ratio(ns.retrieve.mean, cam.retrieve.mean),
        combined_cost_ratio: ratio(ns.combined.mean, cam.combined.mean),
        space_ratio: ratio(ns.final_bytes as f64, cam.final_bytes as f64),
        fidelity_delta: ns.mean_fidelity - cam.mean_fidelity,
        ns,
        cam,
    })
}

/// (seq, total bytes after the op).
pub fn space_timeline(log: &OpLog) -> Vec<(u64, u64)> {
    log.records.iter().map(|r| (r.seq, r.total_bytes)).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct QualityFactorPoint {
    pub cap_bytes: u64,
    pub quality_factor: f64,
    pub hit_rate: f64,
    pub fidelity: f64,
    /// The replay aborted at this cap; the point scores 0.
    pub failed: bool,
}

/// Hit rate times mean normalized fidelity of the returned payloads.
pub fn quality_factor(log: &OpLog) -> (f64, f64, f64) {
    let retrieves: Vec<&OpLogRecord> = log.retrieves().collect();
    if retrieves.is_empty() {
        return (0.0, 0.0, 0.0);
    }
    let hits: Vec<f64> = retrieves.iter().filter(|r| r.hit).map(|r| r.fidelity.unwrap_or(0.0)).collect();
    let hit_rate = hits.len() as f64 / retrieves.len() as f64;
    let fid = mean(hits.iter().copied()).unwrap_or(0.0);
    (hit_rate * fid, hit_rate, fid)
}

/// Byte caps at the given fractions of `full_bytes`, rounded up.
pub fn cap_grid(full_bytes: u64, fractions: &[f64]) -> Vec<u64> {
    fractions
        .iter()
        .map(|f| (full_bytes as f64 * f).ceil() as u64)
        .collect()
}

/// Replays `trace` once per cap on a fresh engine from `make`. Caps run on
/// separate threads where available; the result order follows `caps`.
pub fn quality_factor_curve<F>(trace: &Trace, corpus: &Corpus, caps: &[u64], make: F) -> Result<Vec<QualityFactorPoint>>
where
    F: Fn(u64) -> Result<Box<dyn Engine>> + Sync,
{
    if caps.windows(2).any(|w| w[0] > w[1]) {
        return Err(Error::Config("cap grid must be sorted ascending".into()));
    }
    let point = |cap: u64| -> Result<QualityFactorPoint> {
        let mut engine = make(cap)?;
        match replay(trace, corpus, engine.as_mut()) {
            Ok(log) => {
                let (qf, h, f) = quality_factor(&log);
                Ok(QualityFactorPoint {
                    cap_bytes: cap,
                    quality_factor: qf,
                    hit_rate: h,
                    fidelity: f,
                    failed: false,
                })
            }
            Err(Error::Replay { .. }) => Ok(QualityFactorPoint {
                cap_bytes: cap,
                quality_factor: 0.0,
                hit_rate: 0.0,
                fidelity: 0.0,
                failed: true,
            }),
            Err(e) => Err(e),
        }
    };
    // no threads on wasm32-unknown-unknown
    if cfg!(target_arch = "wasm32") {
        return caps.iter().map(|&cap| point(cap)).collect();
    }
    std::thread::scope(|s| {
        let handles: Vec<_> = caps.iter().map(|&cap| s.spawn(move || point(cap))).collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("cap replay thread panicked"))
            .collect()
    })
}

fn f6(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.6}")
    } else {
        "inf".into()
    }
}

fn write_csv(path: &Path, header: &[&str], rows: &[Vec<String>]) -> Result<()> {
    let io = |e: csv::Error| match e.into_kind() {
        csv::ErrorKind::Io(err) => Error::io(path, err),
        other => Error::Parse(format!("{}: {other:?}", path.display())),
    };
    let mut w = csv::Writer::from_path(path).map_err(io)?;
    w.write_record(header).map_err(io)?;
    for r in rows {
        w.write_record(r).map_err(io)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub const SUMMARY_HEADER: [&str; 13] = [
    "scenario", "engine", "op", "count", "mean_cost", "p50_cost", "p90_cost", "p99_cost", "max_cost",
    "hit_rate", "mean_fidelity", "priority_similarity", "final_bytes",
];

fn summary_rows(scenario: &str, s: &Summary) -> Vec<Vec<String>> {
    [("store", &s.store), ("retrieve", &s.retrieve), ("combined", &s.combined)]
        .into_iter()
        .map(|(op, c)| {
            vec![
                scenario.to_string(),
                s.engine.as_str().to_string(),
                op.to_string(),
                c.count.to_string(),
                f6(c.mean),
                c.p50.to_string(),
                c.p90.to_string(),
                c.p99.to_string(),
                c.max.to_string(),
                f6(s.hit_rate),
                f6(s.mean_fidelity),
                s.priority_similarity.map(f6).unwrap_or_default(),
                s.final_bytes.to_string(),
            ]
        })
        .collect()
}

pub const COMPARISON_HEADER: [&str; 12] = [
    "scenario",
    "ns_retrieve_cost",
    "cam_retrieve_cost",
    "retrieve_cost_ratio",
    "ns_combined_cost",
    "cam_combined_cost",
    "combined_cost_ratio",
    "ns_final_bytes",
    "cam_final_bytes",
    "space_ratio",
    "ns_fidelity",
    "fidelity_delta",
];

pub const QF_HEADER: [&str; 7] = ["scenario", "engine", "cap_bytes", "quality_factor", "hit_rate", "fidelity", "failed"];

/// Everything `emit_reports` can write. Empty parts produce no file,
/// except timelines, which always get a header.
#[derive(Debug, Clone, Default)]
pub struct ReportBundle {
    pub scenario: String,
    pub summaries: Vec<Summary>,
    pub comparison: Option<Comparison>,
    pub timelines: Vec<(EngineKind, Vec<(u64, u64)>)>,
    pub qf_curves: Vec<(EngineKind, Vec<QualityFactorPoint>)>,
}

/// Writes CSV files and SVG charts into `dir`; returns the paths in
/// write order.
pub fn emit_reports(dir: &Path, b: &ReportBundle) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut written = Vec::new();

    let mut summaries: Vec<&Summary> = b.summaries.iter().collect();
    if let Some(c) = &b.comparison {
        summaries.extend([&c.ns, &c.cam]);
    }
    if !summaries.is_empty() {
        let rows: Vec<Vec<String>> = summaries.iter().flat_map(|s| summary_rows(&b.scenario, s)).collect();
        let p = dir.join("summary.csv");
        write_csv(&p, &SUMMARY_HEADER, &rows)?;
        written.push(p);
    }
    if let Some(c) = &b.comparison {
        let row = vec![
            b.scenario.clone(),
            f6(c.ns.retrieve.mean),
            f6(c.cam.retrieve.mean),
            f6(c.retrieve_cost_ratio),
            f6(c.ns.combined.mean),
            f6(c.cam.combined.mean),
            f6(c.combined_cost_ratio),
            c.ns.final_bytes.to_string(),
            c.cam.final_bytes.to_string(),
            f6(c.space_ratio),
            f6(c.ns.mean_fidelity),
            f6(c.fidelity_delta),
        ];
        let p = dir.join("comparison.csv");
        write_csv(&p, &COMPARISON_HEADER, &[row])?;
        written.push(p);
    }

    let rows: Vec<Vec<String>> = b
        .timelines
        .iter()
        .flat_map(|(e, series)| {
            series
                .iter()
                .map(move |(seq, bytes)| vec![e.as_str().to_string(), seq.to_string(), bytes.to_string()])
        })
        .collect();
    let p = dir.join("space_timeline.csv");
    write_csv(&p, &["engine", "seq", "total_bytes"], &rows)?;
    written.push(p);
    if !b.timelines.is_empty() {
        let series: Vec<(String, Vec<(f64, f64)>)> = b
            .timelines
            .iter()
            .map(|(e, s)| (e.as_str().to_string(), s.iter().map(|&(x, y)| (x as f64, y as f64)).collect()))
            .collect();
        let p = dir.join("space_timeline.svg");
        fs::write(&p, svg_chart("Total space", "op seq", "bytes", &series)).map_err(|e| Error::io(&p, e))?;
        written.push(p);
    }

    if !b.qf_curves.is_empty() {
        let rows: Vec<Vec<String>> = b
            .qf_curves
            .iter()
            .flat_map(|(e, pts)| {
                pts.iter().map(move |q| {
                    vec![
                        b.scenario.clone(),
                        e.as_str().to_string(),
                        q.cap_bytes.to_string(),
                        f6(q.quality_factor),
                        f6(q.hit_rate),
                        f6(q.fidelity),
                        q.failed.to_string(),
                    ]
                })
            })
            .collect();
        let p = dir.join("quality_factor.csv");
        write_csv(&p, &QF_HEADER, &rows)?;
        written.push(p);
        let series: Vec<(String, Vec<(f64, f64)>)> = b
            .qf_curves
            .iter()
            .map(|(e, pts)| {
                (
                    e.as_str().to_string(),
                    pts.iter().map(|q| (q.cap_bytes as f64, q.quality_factor)).collect(),
                )
            })
            .collect();
        let p = dir.join("quality_factor.svg");
        fs::write(&p, svg_chart("Quality factor", "memory cap (bytes)", "QF", &series))
            .map_err(|e| Error::io(&p, e))?;
        written.push(p);
    }
    Ok(written)
}

const COLORS: [&str; 4] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd"];

/// Fixed-layout line chart. Output depends only on the inputs.
pub fn svg_chart(title: &str, x_label: &str, y_label: &str, series: &[(String, Vec<(f64, f64)>)]) -> String {
    let (w, h, ml, mr, mt, mb) = (640.0, 400.0, 70.0, 20.0, 40.0, 50.0);
    let pts = series.iter().flat_map(|(_, s)| s.iter());
    let (mut x0, mut x1, mut y1) = (f64::INFINITY, f64::NEG_INFINITY, f64::NEG_INFINITY);
    for &(x, y) in pts {
        x0 = x0.min(x);
        x1 = x1.max(x);
        y1 = y1.max(y);
    }
    if !x0.is_finite() {
        (x0, x1, y1) = (0.0, 1.0, 1.0);
    }
    if x1 <= x0 {
        x1 = x0 + 1.0;
    }
    if y1 <= 0.0 {
        y1 = 1.0;
    }
    let sx = |x: f64| ml + (x - x0) / (x1 - x0) * (w - ml - mr);
    let sy = |y: f64| h - mb - y / y1 * (h - mt - mb);

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, r#"<rect width="{w}" height="{h}" fill="white"/>"#);
    let _ = writeln!(s, r#"<text x="{}" y="22" text-anchor="middle" font-size="15">{title}</text>"#, w / 2.0);
    let _ = writeln!(
        s,
        r#"<line x1="{ml}" y1="{}" x2="{}" y2="{}" stroke="black"/>"#,
        h - mb,
        w - mr,
        h - mb
    );
    let _ = writeln!(s, r#"<line x1="{ml}" y1="{mt}" x2="{ml}" y2="{}" stroke="black"/>"#, h - mb);
    for i in 0..=4 {
        let fy = y1 * i as f64 / 4.0;
        let fx = x0 + (x1 - x0) * i as f64 / 4.0;
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{:.1}" text-anchor="end">{}</text>"#,
            ml - 6.0,
            sy(fy) + 4.0,
            tick(fy)
        );
        let _ = writeln!(
            s,
            r#"<text x="{:.1}" y="{}" text-anchor="middle">{}</text>"#,
            sx(fx),
            h - mb + 16.0,
            tick(fx)
        );
    }
    let _ = writeln!(s, r#"<text x="{}" y="{}" text-anchor="middle">{x_label}</text>"#, (ml + w - mr) / 2.0, h - 10.0);
    let _ = writeln!(
        s,
        r#"<text x="16" y="{}" text-anchor="middle" transform="rotate(-90 16 {})">{y_label}</text>"#,
        (mt + h - mb) / 2.0,
        (mt + h - mb) / 2.0
    );
    for (i, (name, pts)) in series.iter().enumerate() {
        let color = COLORS[i % COLORS.len()];
        let path: Vec<String> = pts.iter().map(|&(x, y)| format!("{:.1},{:.1}", sx(x), sy(y))).collect();
        let _ = writeln!(
            s,
            r#"<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{}"/>"#,
            path.join(" ")
        );
        let ly = mt + 14.0 * i as f64;
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{ly}" fill="{color}" text-anchor="end">{name}</text>"#,
            w - mr - 4.0
        );
    }
    s.push_str("</svg>\n");
    s
}

fn tick(v: f64) -> String {
    if v.abs() >= 1000.0 {
        format!("{:.0}", v)
    } else if v.fract() == 0.0 {
        format!("{v:.0}")
    } else {
        format!("{v:.2}")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oplog::OpLog;

    fn rec(seq: u64, op: TraceOp, cost: u64, bytes: u64, hit: bool) -> OpLogRecord {
        OpLogRecord {
            seq,
            op,
            item_id: Some(format!("i{seq}")),
            cues: vec!["deer".into()],
            outcome: if hit { "hit" } else { "miss" }.into(),
            cost,
            dn_id: None,
            strength: None,
            total_bytes: bytes,
            hit,
            priority: true,
            fidelity: hit.then_some(0.5),
            similarity: hit.then_some(1.0),
            returned_quality: None,
        }
    }

    fn cam_like(n: u64) -> OpLog {
        let mut log = OpLog::new(EngineKind::Cam, "d".into(), None);
        for i in 0..n {
            log.records.push(rec(i, TraceOp::Retrieve, i + 1, 100, true));
        }
        log
    }

    #[test]
    fn uniform_scan_mean() {
        let s = summarize(&cam_like(9), 0).unwrap();
        assert_eq!(s.retrieve.mean, 5.0);
        assert_eq!(s.retrieve.p50, 5);
        assert_eq!(s.retrieve.p90, 9);
        assert_eq!(summarize(&cam_like(9), 4).unwrap().retrieve.mean, 7.0);
    }

    #[test]
    fn identical_logs_have_unit_ratio() {
        let a = cam_like(5);
        let mut b = a.clone();
        b.header.engine = EngineKind::Ns;
        let c = compare(&b, &a, 0).unwrap();
        assert_eq!(c.retrieve_cost_ratio, 1.0);
        assert_eq!(c.space_ratio, 1.0);
    }

    #[test]
    fn mixed_traces_rejected() {
        let a = cam_like(3);
        let mut b = a.clone();
        b.header.trace_digest = "other".into();
        assert!(matches!(compare(&b, &a, 0), Err(Error::MixedTrace(_, _))));
        let empty = OpLog::new(EngineKind::Ns, "d".into(), None);
        assert!(summarize(&empty, 0).is_err());
    }

    #[test]
    fn quality_factor_multiplies_components() {
        let mut log = cam_like(4);
        log.records[0].hit = false;
        log.records[0].fidelity = None;
        let (qf, h, f) = quality_factor(&log);
        assert_eq!((h, f), (0.75, 0.5));
        assert_eq!(qf, 0.375);
    }

    #[test]
    fn reports_are_byte_stable() {
        let log = cam_like(6);
        let bundle = ReportBundle {
            scenario: "t".into(),
            summaries: vec![summarize(&log, 0).unwrap()],
            comparison: None,
            timelines: vec![(EngineKind::Cam, space_timeline(&log))],
            qf_curves: vec![(
                EngineKind::Cam,
                vec![QualityFactorPoint {
                    cap_bytes: 10,
                    quality_factor: 0.5,
                    hit_rate: 1.0,
                    fidelity: 0.5,
                    failed: false,
                }],
            )],
        };
        let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
        let wa = emit_reports(a.path(), &bundle).unwrap();
        emit_reports(b.path(), &bundle).unwrap();
        assert_eq!(wa.len(), 5);
        for p in &wa {
            let name = p.file_name().unwrap();
            assert_eq!(fs::read(p).unwrap(), fs::read(b.path().join(name)).unwrap());
        }
    }

    #[test]
    fn empty_timeline_is_header_only() {
        let d = tempfile::tempdir().unwrap();
        emit_reports(d.path(), &ReportBundle::default()).unwrap();
        let text = fs::read_to_string(d.path().join("space_timeline.csv")).unwrap();
        assert_eq!(text, "engine,seq,total_bytes\n");
    }

    #[test]
    fn unsorted_caps_rejected() {
        let err = quality_factor_curve(&Trace::default(), &Corpus::default(), &[5, 3], |_| unreachable!());
        assert!(err.is_err());
    }
}

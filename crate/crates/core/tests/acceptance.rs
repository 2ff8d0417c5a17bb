//! Acceptance gates. Runs without the libtest harness so every gate prints
//! exactly one PASS/FAIL line; the process fails if any gate fails.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use nstore_core::codec::{similarity, Payload};
use nstore_core::config::RunConfig;
use nstore_core::experiment::{compare_engines, generate, CompareRun};
use nstore_core::metrics::emit_reports;
use nstore_core::nmn::{
    CueKey, ElasticityMode, FeaturePredicate, GraphMode, HiveParams, Memory, NeuronId,
};
use nstore_core::ops::{OpControls, OutcomeKind, SearchParams};
use nstore_core::workload::{dynamism, Corpus, EngineKind, Trace, TraceOp};

type Gate = Result<String, String>;

fn check(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

// ---------------------------------------------------------------- 1

struct Expected {
    outcome: OutcomeKind,
    examined: &'static [u32],
    cost: u64,
    dn: u32,
    strengths: &'static [(u32, f64)],
}

// Ids: n0/n1 default cues, n2 n3 wolf images, n4 tree image, n5 wolf cue,
// n6 tree cue, n7 the stored novel image, n8 the canis cue.
const EXPECTED: [Expected; 6] = [
    Expected {
        outcome: OutcomeKind::Hit,
        examined: &[2, 3],
        cost: 2,
        dn: 3,
        strengths: &[(2, 90.0), (3, 100.0), (4, 80.0)],
    },
    Expected {
        outcome: OutcomeKind::NewNeuron,
        examined: &[3, 2],
        cost: 2,
        dn: 7,
        strengths: &[(2, 80.0), (3, 90.0), (4, 60.0), (7, 100.0)],
    },
    Expected {
        outcome: OutcomeKind::Hit,
        examined: &[2, 3],
        cost: 2,
        dn: 3,
        strengths: &[(2, 70.0), (3, 100.0), (4, 40.0), (7, 90.0)],
    },
    Expected {
        outcome: OutcomeKind::Hit,
        examined: &[3, 2],
        cost: 2,
        dn: 2,
        strengths: &[(2, 100.0), (3, 90.0), (4, 20.0), (7, 80.0)],
    },
    Expected {
        outcome: OutcomeKind::Hit,
        examined: &[2],
        cost: 1,
        dn: 2,
        strengths: &[(2, 100.0), (3, 80.0), (4, 1.0), (7, 70.0)],
    },
    Expected {
        outcome: OutcomeKind::Merged,
        examined: &[2],
        cost: 1,
        dn: 2,
        strengths: &[(2, 100.0), (3, 70.0), (4, 1.0), (7, 60.0)],
    },
];

fn golden_walkthrough() -> Gate {
    let start = Instant::now();
    let w = dynamism::run().map_err(|e| e.to_string())?;
    let elapsed = start.elapsed();
    check(w.steps.len() == EXPECTED.len(), || format!("{} steps", w.steps.len()))?;
    check(w.snapshots.len() == EXPECTED.len() + 1, || format!("{} snapshots", w.snapshots.len()))?;
    for (i, (got, want)) in w.steps.iter().zip(&EXPECTED).enumerate() {
        let op = i + 1;
        let examined: Vec<u32> = got.examined.iter().map(|n| n.0).collect();
        let strengths: Vec<(u32, f64)> = got.strengths.iter().map(|(n, s)| (n.0, *s)).collect();
        check(got.outcome == want.outcome, || format!("op {op}: outcome {:?}", got.outcome))?;
        check(examined == want.examined, || format!("op {op}: visited {examined:?}"))?;
        check(got.cost == want.cost, || format!("op {op}: cost {}", got.cost))?;
        check(got.dn_id == Some(NeuronId(want.dn)), || format!("op {op}: dn {:?}", got.dn_id))?;
        check(strengths == want.strengths, || format!("op {op}: strengths {strengths:?}"))?;
    }
    let has_canis = |i: usize| {
        w.snapshots[i].hives[0]
            .cues
            .iter()
            .any(|c| c.key == CueKey::label("canis"))
    };
    check(!has_canis(2) && has_canis(3), || "canis cue not created by op 3".into())?;
    let dn_count = |i: usize| w.snapshots[i].hives[0].data.len();
    check(dn_count(0) == 3 && dn_count(1) == 3 && dn_count(2) == 4 && dn_count(6) == 4, || {
        "data neuron counts across snapshots".into()
    })?;
    check(elapsed < Duration::from_secs(1), || format!("took {elapsed:?}"))?;
    Ok(format!("6 ops, 7 snapshots match in {elapsed:?}"))
}

// ---------------------------------------------------------------- 2-5, 7

fn scenario_config() -> RunConfig {
    let mut cfg = RunConfig::preset("wildlife-deer", 7).unwrap();
    cfg.workload.n_items = 200;
    cfg.workload.n_classes = 2;
    cfg.workload.priority_bias = 0.9;
    cfg.workload.n_retrievals = 5000;
    cfg.workload.tail_retentions = 20;
    cfg.report.warmup_retrieves = 500;
    cfg.validate().unwrap();
    cfg
}

struct Scenario {
    cfg: RunConfig,
    corpus: Corpus,
    trace: Trace,
    run: CompareRun,
    elapsed: Duration,
}

fn scenario() -> Result<Scenario, String> {
    let cfg = scenario_config();
    let start = Instant::now();
    let (corpus, trace) = generate(&cfg).map_err(|e| e.to_string())?;
    let run = compare_engines(&cfg, &corpus, &trace).map_err(|e| e.to_string())?;
    Ok(Scenario {
        cfg,
        corpus,
        trace,
        run,
        elapsed: start.elapsed(),
    })
}

fn cost_advantage(s: &Scenario) -> Gate {
    let c = s.run.bundle.comparison.as_ref().ok_or("no comparison")?;
    let detail = format!(
        "NS {:.2} vs CAM {:.2} mean retrieve cost after {} warmup, ratio {:.4} ({:.1}x), {:?} for both engines and the cap sweep",
        c.ns.retrieve.mean,
        c.cam.retrieve.mean,
        c.ns.warmup_retrieves,
        c.retrieve_cost_ratio,
        1.0 / c.retrieve_cost_ratio,
        s.elapsed
    );
    check(c.ns.retrieve.count == 4500, || format!("{} measured retrieves", c.ns.retrieve.count))?;
    check(c.retrieve_cost_ratio <= 0.2, || detail.clone())?;
    check(s.elapsed < Duration::from_secs(60), || detail.clone())?;
    Ok(detail)
}

fn space_behavior(s: &Scenario) -> Gate {
    let c = s.run.bundle.comparison.as_ref().ok_or("no comparison")?;
    let log = &s.run.ns.log;
    let tail_start = log
        .records
        .iter()
        .rposition(|r| r.op != TraceOp::Retention)
        .ok_or("no store or retrieve records")?;
    let tail: Vec<u64> = log.records[tail_start..].iter().map(|r| r.total_bytes).collect();
    check(tail.len() == 21, || format!("tail of {} records", tail.len()))?;
    let detail = format!(
        "NS {} vs CAM {} bytes, ratio {:.4}; tail {} -> {} over {} retentions",
        c.ns.final_bytes,
        c.cam.final_bytes,
        c.space_ratio,
        tail[0],
        tail[tail.len() - 1],
        tail.len() - 1
    );
    check(c.space_ratio <= 0.8, || detail.clone())?;
    check(tail.windows(2).all(|w| w[1] <= w[0]), || format!("tail not monotone: {tail:?}"))?;
    Ok(detail)
}

fn priority_fidelity(s: &Scenario) -> Gate {
    let sims: Vec<f64> = s
        .run
        .ns
        .log
        .retrieves()
        .filter(|r| r.priority)
        .map(|r| r.similarity.unwrap_or(-1.0))
        .collect();
    check(!sims.is_empty(), || "no priority retrieves".into())?;
    let mean = sims.iter().sum::<f64>() / sims.len() as f64;
    let min = sims.iter().copied().fold(f64::INFINITY, f64::min);
    let t2 = s.cfg.controls.match_thresh;
    let detail = format!("mean {mean:.4} (min {min:.4}) over {} priority retrieves, gate {t2}", sims.len());
    check(mean >= t2, || detail.clone())?;
    Ok(detail)
}

fn quality_factor_curve(s: &Scenario) -> Gate {
    let full = s.corpus.total_bytes();
    let curves: BTreeMap<EngineKind, Vec<(u64, f64)>> = s
        .run
        .bundle
        .qf_curves
        .iter()
        .map(|(k, pts)| (*k, pts.iter().map(|p| (p.cap_bytes, p.quality_factor)).collect()))
        .collect();
    let ns = &curves[&EngineKind::Ns];
    let cam = &curves[&EngineKind::Cam];
    check(ns.len() == 12 && cam.len() == 12, || "cap grid size".into())?;
    for (kind, curve) in [("NS", ns), ("CAM", cam)] {
        check(curve.windows(2).all(|w| w[1].1 >= w[0].1), || format!("{kind} not monotone: {curve:?}"))?;
    }
    let sub: Vec<(f64, f64)> = ns
        .iter()
        .zip(cam)
        .filter(|((cap, _), _)| *cap < full)
        .map(|((_, a), (_, b))| (*a, *b))
        .collect();
    check(sub.iter().all(|(a, b)| a >= b), || format!("NS below CAM: {sub:?}"))?;
    let strict = sub.iter().filter(|(a, b)| a > b).count();
    let mut detail = format!("NS > CAM at {strict}/{} sub-full caps; NS/CAM:", sub.len());
    for (a, b) in &sub {
        write!(detail, " {a:.3}/{b:.3}").unwrap();
    }
    check(strict as f64 >= 0.8 * sub.len() as f64, || detail.clone())?;
    Ok(detail)
}

fn determinism(s: &Scenario) -> Gate {
    let again = compare_engines(&s.cfg, &s.corpus, &s.trace).map_err(|e| e.to_string())?;
    let (corpus2, trace2) = generate(&s.cfg).map_err(|e| e.to_string())?;
    check(trace2.digest() == s.trace.digest(), || "trace differs between generations".into())?;
    check(corpus2.manifest_jsonl() == s.corpus.manifest_jsonl(), || "manifest differs".into())?;
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let a = emit_reports(&dir.path().join("a"), &s.run.bundle).map_err(|e| e.to_string())?;
    let b = emit_reports(&dir.path().join("b"), &again.bundle).map_err(|e| e.to_string())?;
    let mut csvs = 0;
    for (pa, pb) in a.iter().zip(&b) {
        if pa.extension().is_some_and(|e| e == "csv") {
            csvs += 1;
            let (x, y) = (std::fs::read(pa).unwrap(), std::fs::read(pb).unwrap());
            check(x == y, || format!("{} differs", pa.display()))?;
        }
    }
    check(csvs == 4, || format!("{csvs} csv files"))?;
    check(s.run.ns.log.to_jsonl() == again.ns.log.to_jsonl(), || "NS op log differs".into())?;
    Ok(format!("{csvs} CSV files byte-identical across two compare runs"))
}

// ---------------------------------------------------------------- 6

const LABELS: [&str; 4] = ["a", "b", "c", "d"];

fn fuzz_params(rng: &mut ChaCha8Rng) -> HiveParams {
    let n = rng.random_range(1..=3);
    let mut p = HiveParams::case_study(&[]);
    p.num_localities = n;
    p.epsilon = [0.0, 0.5, 1.0, 3.0][rng.random_range(0..4)];
    p.phi = [0.0, 1.0, 5.0, 30.0][rng.random_range(0..4)];
    p.eta = rng.random_range(1.0..40.0);
    p.retention_period = rng.random_range(1..8);
    p.memory_decay_rates = (0..n).map(|_| rng.random_range(0.0..25.0)).collect();
    p.association_decay_rates = (0..n).map(|_| rng.random_range(0.0..15.0)).collect();
    p.locality_mapping = (0..n)
        .map(|i| {
            if i + 1 == n {
                Vec::new()
            } else {
                vec![FeaturePredicate::Label(LABELS[i].to_string())]
            }
        })
        .collect();
    let floor = if p.phi > 0.0 { p.phi.max(1.0) } else { 0.0 };
    p.elasticity_schedule = (0..n)
        .map(|_| {
            let mut s: Vec<f64> = vec![90.0, 60.0, 40.0, 20.0, 10.0, 1.0]
                .into_iter()
                .filter(|v| *v >= floor)
                .collect();
            if s.last() != Some(&floor) && floor < 10.0 {
                s.push(floor);
            }
            s.dedup();
            s
        })
        .collect();
    p.elasticity_mode = if rng.random_bool(0.5) {
        ElasticityMode::Ceiling
    } else {
        ElasticityMode::Multiplicative
    };
    if rng.random_bool(0.3) {
        p.graph_mode = GraphMode::Full;
        p.max_path_len = rng.random_range(1..=2);
    }
    p
}

fn fuzz_blobs(rng: &mut ChaCha8Rng) -> Vec<Vec<u8>> {
    let bases = rng.random_range(2..6);
    let mut out = Vec::new();
    for _ in 0..bases {
        let len = rng.random_range(200..600);
        let lo: u8 = rng.random_range(0..150);
        let span: u8 = rng.random_range(10..100);
        let base: Vec<u8> = (0..len).map(|_| lo + rng.random_range(0..span)).collect();
        for _ in 0..rng.random_range(1..4) {
            let mut v = base.clone();
            for _ in 0..rng.random_range(0..len / 4) {
                let i = rng.random_range(0..len);
                v[i] = v[i].wrapping_add(rng.random_range(0..40));
            }
            out.push(v);
        }
    }
    out
}

/// Ranked (data neuron, mean weight) per cue by enumerating every simple
/// path of at most `max_len` edges through pairwise weight lookups.
fn brute_force_order(m: &Memory, max_len: usize) -> BTreeMap<NeuronId, Vec<(NeuronId, f64)>> {
    let h = m.hive(0);
    let g = h.graph();
    let nodes: Vec<NeuronId> = g.nodes().collect();
    let mut out = BTreeMap::new();
    for cue in h.cues().map(|c| c.id) {
        let mut best: BTreeMap<NeuronId, f64> = BTreeMap::new();
        let mut stack = vec![(vec![cue], 0.0f64)];
        while let Some((path, sum)) = stack.pop() {
            let last = *path.last().unwrap();
            for &nb in &nodes {
                if path.contains(&nb) {
                    continue;
                }
                let Some(w) = g.weight(last, nb) else { continue };
                let total = sum + w;
                let len = path.len();
                if h.is_data(nb) {
                    let avg = total / len as f64;
                    let e = best.entry(nb).or_insert(f64::NEG_INFINITY);
                    if avg > *e {
                        *e = avg;
                    }
                }
                if len < max_len {
                    let mut next = path.clone();
                    next.push(nb);
                    stack.push((next, total));
                }
            }
        }
        let mut ranked: Vec<(NeuronId, f64)> = best.into_iter().collect();
        ranked.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
        out.insert(cue, ranked);
    }
    out
}

struct FuzzStats {
    ops: usize,
    oracle_checks: usize,
    storage_full: usize,
    merges: usize,
    hits: usize,
}

fn check_state(m: &Memory, stats: &mut FuzzStats, ctx: &str) -> Result<(), String> {
    let h = m.hive(0);
    let p = h.params();
    let g = h.graph();
    for (a, b, e) in g.edges() {
        check(e.weight >= p.epsilon, || format!("{ctx}: weight {} < eps {} on {a}-{b}", e.weight, p.epsilon))?;
        check(g.weight(b, a) == Some(e.weight), || format!("{ctx}: asymmetric edge {a}-{b}"))?;
    }
    for dn in h.data_neurons() {
        check(dn.strength >= p.phi && dn.strength <= 100.0, || {
            format!("{ctx}: strength {} outside [{}, 100]", dn.strength, p.phi)
        })?;
    }
    if let Some(cap) = h.capacity() {
        check(h.used_bytes() <= cap, || format!("{ctx}: {} bytes over cap {cap}", h.used_bytes()))?;
    }
    if g.node_count() <= 50 {
        let oracle = brute_force_order(m, p.max_path_len);
        for (cue, want) in &oracle {
            let got: Vec<(NeuronId, f64)> = h.search_order(*cue).iter().map(|e| (e.dn_id, e.avg_weight)).collect();
            check(&got == want, || format!("{ctx}: order of cue {cue}: {got:?} vs oracle {want:?}"))?;
            for e in h.search_order(*cue) {
                let ws: Vec<f64> = e.edges().map(|(a, b)| g.weight(a, b).unwrap()).collect();
                let avg = ws.iter().sum::<f64>() / ws.len() as f64;
                check(e.path[0] == *cue && *e.path.last().unwrap() == e.dn_id && avg == e.avg_weight, || {
                    format!("{ctx}: bad path {:?}", e.path)
                })?;
            }
        }
        stats.oracle_checks += 1;
    }
    Ok(())
}

fn fuzz_instance(seed: u64, n_ops: usize, stats: &mut FuzzStats) -> Result<(), String> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut params = fuzz_params(&mut rng);
    let blobs = fuzz_blobs(&mut rng);
    let total: usize = blobs.iter().map(Vec::len).sum();
    if rng.random_bool(0.4) {
        params.capacity_bytes = Some(rng.random_range(total as u64 / 4..=total as u64));
    }
    let mut m = Memory::with_hive("image", params.clone()).map_err(|e| e.to_string())?;
    let t2 = rng.random_range(0.8..0.99);
    for step in 0..n_ops {
        let ctx = format!("seed {seed} op {step}");
        let controls = OpControls {
            search_limit: if rng.random_bool(0.2) { Some(rng.random_range(1..4)) } else { None },
            up: true,
            k: rng.random_bool(0.5),
        };
        let n_labels = rng.random_range(1..=2);
        let labels: Vec<&str> = (0..n_labels).map(|_| ["a", "b", "c", "d", "z"][rng.random_range(0..5)]).collect();
        let item = rng.random_range(0..blobs.len());
        // stores stop once the instance nears the oracle's 50-neuron bound
        let kind = match rng.random_range(0..10) {
            0..=3 if m.hive(0).graph().node_count() > 46 => 4,
            k => k,
        };
        let res = match kind {
            0..=3 => {
                let q = SearchParams::labels(&labels, 0.0, t2);
                m.store(Payload::new("image", blobs[item].clone(), format!("i{item}")), &q, &controls)
            }
            4..=8 => {
                let f = m.hive(0).extractor().extract(&blobs[item]);
                let mut q = SearchParams::labels(&labels, rng.random_range(0.0..2.0), t2);
                if rng.random_bool(0.8) {
                    q = q.with_fine_cue(f);
                }
                m.retrieve(0, &q, &controls)
            }
            _ => {
                m.retention(0, params.retention_period, controls.k)
                    .map_err(|e| format!("{ctx}: {e}"))?;
                m.update_memory_search_order(0).map_err(|e| e.to_string())?;
                check_state(&m, stats, &ctx)?;
                stats.ops += 1;
                continue;
            }
        };
        match res {
            Ok(out) => {
                stats.merges += usize::from(out.kind == OutcomeKind::Merged);
                stats.hits += usize::from(out.kind == OutcomeKind::Hit);
            }
            Err(e) if e.is_storage_full() => stats.storage_full += 1,
            Err(e) => return Err(format!("{ctx}: {e}")),
        }
        check_state(&m, stats, &ctx)?;
        stats.ops += 1;
    }
    m.check_invariants().map_err(|e| format!("seed {seed}: {e}"))
}

fn clamp_invariants() -> Gate {
    let mut stats = FuzzStats {
        ops: 0,
        oracle_checks: 0,
        storage_full: 0,
        merges: 0,
        hits: 0,
    };
    let start = Instant::now();
    let mut seed = 0;
    while stats.ops < 100_000 {
        fuzz_instance(seed, 500, &mut stats)?;
        seed += 1;
    }
    check(stats.oracle_checks == stats.ops, || format!("oracle ran on {} of {} ops", stats.oracle_checks, stats.ops))?;
    Ok(format!(
        "{} ops over {seed} configs ({} hits, {} merges, {} storage-full), oracle after every op, {:?}",
        stats.ops,
        stats.hits,
        stats.merges,
        stats.storage_full,
        start.elapsed()
    ))
}

// ---------------------------------------------------------------- 8

fn primed_memory(blobs: &[Vec<u8>]) -> Result<Memory, String> {
    let mut p = HiveParams::case_study(&["deer"]);
    p.retention_period = 3;
    let mut m = Memory::with_hive("image", p).map_err(|e| e.to_string())?;
    for (i, b) in blobs.iter().enumerate() {
        let q = SearchParams::labels(&["deer"], 0.0, 0.95);
        let out = m
            .store(Payload::new("image", b.clone(), format!("p{i}")), &q, &OpControls::default())
            .map_err(|e| e.to_string())?;
        check(out.kind == OutcomeKind::NewNeuron, || format!("item {i} merged"))?;
    }
    Ok(m)
}

fn priming() -> Gate {
    let blobs: Vec<Vec<u8>> = (0..8u8)
        .map(|i| (0..512u32).map(|j| (j * (u32::from(i) + 3) % 97) as u8 + i * 20).collect())
        .collect();
    let mut lines = Vec::new();
    for target in [0, 7, 3] {
        let mut m = primed_memory(&blobs)?;
        let f = m.hive(0).extractor().extract(&blobs[target]);
        let q = SearchParams::labels(&["deer"], 0.0, 0.95).with_fine_cue(f);
        let mut costs = Vec::new();
        for _ in 0..10 {
            let out = m.retrieve(0, &q, &OpControls::default()).map_err(|e| e.to_string())?;
            check(out.is_hit(), || format!("target {target} missed"))?;
            costs.push(out.cost);
        }
        check(costs.windows(2).all(|w| w[1] <= w[0]) && costs[9] == 1, || {
            format!("target {target}: costs {costs:?}")
        })?;
        lines.push(format!("target {target}: {costs:?}"));
    }
    let m = primed_memory(&blobs)?;
    let sim = similarity(
        m.hive(0).extractor().extract(&blobs[0]).as_slice(),
        m.hive(0).extractor().extract(&blobs[1]).as_slice(),
    );
    check(sim < 0.95, || format!("fixture items too similar ({sim})"))?;
    Ok(lines.join("; "))
}

fn main() {
    let mut failed = 0;
    let mut report = |n: u32, name: &str, r: Gate| {
        match &r {
            Ok(d) => println!("criterion {n} [{name}]: PASS ({d})"),
            Err(d) => {
                failed += 1;
                println!("criterion {n} [{name}]: FAIL ({d})");
            }
        }
    };
    report(1, "golden walkthrough", golden_walkthrough());
    match scenario() {
        Ok(s) => {
            report(2, "cost advantage", cost_advantage(&s));
            report(3, "space behavior", space_behavior(&s));
            report(4, "priority fidelity", priority_fidelity(&s));
            report(5, "quality-factor curve", quality_factor_curve(&s));
            report(6, "clamp invariants", clamp_invariants());
            report(7, "determinism", determinism(&s));
        }
        Err(e) => {
            for (n, name) in [(2, "cost advantage"), (3, "space behavior"), (4, "priority fidelity"), (5, "quality-factor curve")] {
                report(n, name, Err(format!("scenario failed: {e}")));
            }
            report(6, "clamp invariants", clamp_invariants());
            report(7, "determinism", Err(format!("scenario failed: {e}")));
        }
    }
    report(8, "priming", priming());
    if failed > 0 {
        eprintln!("{failed} criteria failed");
        std::process::exit(1);
    }
}

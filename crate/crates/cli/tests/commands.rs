use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn nstore(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_nstore"))
        .args(args)
        .output()
        .expect("spawn nstore")
}

fn ok(args: &[&str]) -> String {
    let out = nstore(args);
    assert!(
        out.status.success(),
        "nstore {args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

const SMALL: &str = r#"
seed = 11
preset = "wildlife-deer"

[workload]
n_items = 30
n_retrievals = 400
payload_size_range = [512, 1024]

[report]
warmup_retrieves = 50
cap_fractions = [0.25, 0.5, 1.0]
"#;

fn small_config(dir: &Path) -> std::path::PathBuf {
    let path = dir.join("small.toml");
    fs::write(&path, SMALL).unwrap();
    path
}

fn hashes(stdout: &str) -> Vec<&str> {
    stdout.lines().map(|l| l.split_whitespace().next().unwrap()).collect()
}

#[test]
fn generate_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(dir.path());
    let a = ok(&["generate", "--config", p(&cfg), "--out", p(&dir.path().join("a"))]);
    let b = ok(&["generate", "--config", p(&cfg), "--out", p(&dir.path().join("b"))]);
    assert_eq!(hashes(&a).len(), 3);
    assert_eq!(hashes(&a), hashes(&b));
    let c = ok(&["generate", "--config", p(&cfg), "--seed", "12", "--out", p(&dir.path().join("c"))]);
    assert_ne!(hashes(&a)[1], hashes(&c)[1]);
}

#[test]
fn missing_seed_names_the_field() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("noseed.toml");
    fs::write(&cfg, "preset = \"wildlife-deer\"\n").unwrap();
    let out = nstore(&["generate", "--config", p(&cfg), "--out", p(dir.path())]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("`seed`"));

    let out = nstore(&["generate", "--out", p(dir.path())]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn unknown_keys_and_bad_params_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.toml");
    fs::write(&cfg, "seed = 1\npreset = \"wildlife-deer\"\n[hive]\nbogus = 3\n").unwrap();
    let out = nstore(&["generate", "--config", p(&cfg), "--out", p(dir.path())]);
    assert_eq!(out.status.code(), Some(2));

    fs::write(&cfg, "seed = 1\npreset = \"wildlife-deer\"\n[hive]\neta = 0.0\n").unwrap();
    let out = nstore(&["generate", "--config", p(&cfg), "--out", p(dir.path())]);
    assert_eq!(out.status.code(), Some(2), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn deer_preset_routes_deer_to_locality_zero() {
    let dir = tempfile::tempdir().unwrap();
    ok(&["generate", "--preset", "wildlife-deer", "--seed", "1", "--out", p(dir.path())]);
    let text = fs::read_to_string(dir.path().join("config.toml")).unwrap();
    let table: toml::Table = text.parse().unwrap();
    let mapping = table["hive"]["locality_mapping"].as_array().unwrap();
    assert_eq!(mapping[0].as_array().unwrap()[0]["label"].as_str(), Some("deer"));
    assert!(mapping[1].as_array().unwrap().is_empty());
}

#[test]
fn run_from_generated_files_matches_run_from_config() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(dir.path());
    let gen = dir.path().join("gen");
    ok(&["generate", "--config", p(&cfg), "--out", p(&gen)]);
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    ok(&["run", "--config", p(&cfg), "--trace", p(&gen.join("trace.jsonl")), "--out", p(&a)]);
    ok(&["run", "--config", p(&cfg), "--out", p(&b)]);
    for f in ["oplog.jsonl", "snapshot.json", "summary.csv", "space_timeline.csv"] {
        assert_eq!(fs::read(a.join(f)).unwrap(), fs::read(b.join(f)).unwrap(), "{f}");
    }
}

#[test]
fn cam_run_has_full_quality_and_scan_costs() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(dir.path());
    let out = dir.path().join("cam");
    ok(&["run", "--config", p(&cfg), "--engine", "cam", "--out", p(&out)]);
    assert!(!out.join("snapshot.json").exists());
    let text = fs::read_to_string(out.join("oplog.jsonl")).unwrap();
    let mut stores = 0u64;
    for line in text.lines().skip(1) {
        let r: serde_json::Value = serde_json::from_str(line).unwrap();
        match r["op"].as_str().unwrap() {
            "store" => {
                assert_eq!(r["cost"].as_u64().unwrap(), stores);
                stores += 1;
            }
            "retrieve" => {
                assert!(r["hit"].as_bool().unwrap());
                assert_eq!(r["fidelity"].as_f64().unwrap(), 1.0);
                assert!(r["cost"].as_u64().unwrap() >= 1 && r["cost"].as_u64().unwrap() <= stores);
            }
            _ => {}
        }
    }
    assert_eq!(stores, 30);
}

#[test]
fn storage_full_exits_three_with_seq() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(dir.path());
    let out = nstore(&["run", "--config", p(&cfg), "--cap", "100", "--out", p(&dir.path().join("r"))]);
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("at seq 0"));
}

#[test]
fn missing_trace_exits_four() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(dir.path());
    let out = nstore(&[
        "run",
        "--config",
        p(&cfg),
        "--trace",
        p(&dir.path().join("none.jsonl")),
        "--out",
        p(dir.path()),
    ]);
    assert_eq!(out.status.code(), Some(4));
}

#[test]
fn compare_twice_gives_identical_csv() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(dir.path());
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    ok(&["compare", "--config", p(&cfg), "--out", p(&a)]);
    ok(&["compare", "--config", p(&cfg), "--out", p(&b)]);
    let mut csvs = 0;
    for entry in fs::read_dir(&a).unwrap() {
        let name = entry.unwrap().file_name();
        let name = name.to_str().unwrap();
        if name.ends_with(".csv") || name.ends_with(".svg") || name.ends_with(".jsonl") {
            assert_eq!(fs::read(a.join(name)).unwrap(), fs::read(b.join(name)).unwrap(), "{name}");
            csvs += usize::from(name.ends_with(".csv"));
        }
    }
    assert_eq!(csvs, 4);
    let qf = fs::read_to_string(a.join("quality_factor.csv")).unwrap();
    assert_eq!(qf.lines().count(), 1 + 2 * 3);
}

#[test]
fn tiny_unbiased_compare_reports_a_ratio() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("tiny.toml");
    fs::write(
        &cfg,
        "seed = 3\npreset = \"wildlife-deer\"\n[workload]\nn_items = 4\nframes_per_sighting = 1\n\
         priority_bias = 0.5\nn_retrievals = 20\npayload_size_range = [256, 256]\n\
         [report]\nwarmup_retrieves = 0\ncap_fractions = [1.0]\n",
    )
    .unwrap();
    let out = dir.path().join("out");
    let stdout = ok(&["compare", "--config", p(&cfg), "--out", p(&out)]);
    assert!(stdout.contains("retrieve cost ratio"));
    let cmp = fs::read_to_string(out.join("comparison.csv")).unwrap();
    assert_eq!(cmp.lines().count(), 2);
    assert!(cmp.lines().nth(1).unwrap().starts_with("wildlife-deer,"));
}

#[test]
fn dynamism_script_and_inspect() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("dyn");
    ok(&["run", "--script", "dynamism", "--out", p(&out)]);
    let steps = fs::read_to_string(out.join("steps.jsonl")).unwrap();
    let costs: Vec<u64> = steps
        .lines()
        .map(|l| serde_json::from_str::<serde_json::Value>(l).unwrap()["cost"].as_u64().unwrap())
        .collect();
    assert_eq!(costs, [2, 2, 2, 2, 1, 1]);

    let state = out.join("snapshots").join("state-0.json");
    let text = ok(&["inspect", p(&state)]);
    assert!(text.contains("3 data neurons"));
    assert_eq!(text.matches(" L0 strength=").count(), 2);
    assert_eq!(text.matches(" L1 strength=").count(), 1);

    let dot = ok(&["inspect", p(&state), "--format", "dot"]);
    assert!(dot.starts_with("graph nmn {"));
    assert_eq!(dot, ok(&["inspect", p(&state), "--format", "dot"]));
    let json = ok(&["inspect", p(&state), "--format", "json"]);
    assert_eq!(json, fs::read_to_string(&state).unwrap());
}

#[test]
fn inspect_rejects_newer_snapshots() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("s.json");
    fs::write(&path, r#"{"format":"nstore-snapshot","version":9,"op_counter":0,"hives":[]}"#).unwrap();
    let out = nstore(&["inspect", p(&path)]);
    assert_eq!(out.status.code(), Some(2));

    fs::write(&path, r#"{"format":"nstore-snapshot","version":1,"op_counter":0,"hives":[]}"#).unwrap();
    let text = ok(&["inspect", p(&path)]);
    assert_eq!(text, ok(&["inspect", p(&path)]));
}

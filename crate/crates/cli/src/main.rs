use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use sha2::{Digest, Sha256};

use nstore_core::config::RunConfig;
use nstore_core::experiment::{compare_engines, generate, run_engine, single_report};
use nstore_core::metrics::emit_reports;
use nstore_core::nmn::{render_dot, render_text, SnapshotDoc};
use nstore_core::workload::{dynamism, Corpus, EngineKind, Trace};
use nstore_core::{Error, Result};

#[derive(Parser)]
#[command(name = "nstore", version, about = "Learning CAM simulator and CAM baseline comparison")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Write a synthetic corpus and trace.
    Generate {
        #[command(flatten)]
        cfg: ConfigArgs,
        #[arg(long)]
        out: PathBuf,
    },
    /// Replay a trace on one engine.
    Run {
        #[command(flatten)]
        cfg: ConfigArgs,
        #[command(flatten)]
        input: InputArgs,
        #[arg(long, value_enum, default_value = "ns")]
        engine: EngineArg,
        /// Byte cap, overriding the config.
        #[arg(long)]
        cap: Option<u64>,
        /// Run a scripted scenario instead of a trace.
        #[arg(long, value_enum, conflicts_with_all = ["trace", "corpus"])]
        script: Option<Script>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Replay on both engines and sweep the quality factor over byte caps.
    Compare {
        #[command(flatten)]
        cfg: ConfigArgs,
        #[command(flatten)]
        input: InputArgs,
        #[arg(long)]
        out: PathBuf,
    },
    /// Render a snapshot file.
    Inspect {
        snapshot: PathBuf,
        #[arg(long, value_enum, default_value = "text")]
        format: InspectFormat,
    },
}

#[derive(Args)]
struct ConfigArgs {
    /// TOML run config.
    #[arg(long, conflicts_with = "preset")]
    config: Option<PathBuf>,
    /// Built-in scenario, used when no config file is given.
    #[arg(long)]
    preset: Option<String>,
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args)]
struct InputArgs {
    /// Trace file; generated from the config when absent.
    #[arg(long)]
    trace: Option<PathBuf>,
    /// Corpus manifest; defaults to corpus/manifest.jsonl next to the trace.
    #[arg(long, requires = "trace")]
    corpus: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum EngineArg {
    Ns,
    Cam,
}

#[derive(Clone, Copy, ValueEnum)]
enum Script {
    Dynamism,
}

#[derive(Clone, Copy, ValueEnum)]
enum InspectFormat {
    Text,
    Dot,
    Json,
}

impl ConfigArgs {
    fn load(&self) -> Result<RunConfig> {
        match (&self.config, &self.preset) {
            (Some(p), _) => RunConfig::load(p, self.seed),
            (None, preset) => {
                let name = preset.as_deref().unwrap_or("wildlife-deer");
                let seed = self
                    .seed
                    .ok_or_else(|| Error::validation("seed", "required; pass --seed or set it in the config"))?;
                let cfg = RunConfig::preset(name, seed)?;
                cfg.validate()?;
                Ok(cfg)
            }
        }
    }
}

impl InputArgs {
    fn load(&self, cfg: &RunConfig) -> Result<(Corpus, Trace)> {
        let Some(trace_path) = &self.trace else {
            return generate(cfg);
        };
        let manifest = match &self.corpus {
            Some(m) => m.clone(),
            None => trace_path
                .parent()
                .unwrap_or(Path::new("."))
                .join("corpus")
                .join("manifest.jsonl"),
        };
        let corpus = Corpus::load(&manifest)?;
        let trace = Trace::load(trace_path)?;
        trace.validate(&corpus)?;
        Ok((corpus, trace))
    }
}

fn sha256_file(path: &Path) -> Result<String> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    Ok(hex::encode(Sha256::digest(&bytes)))
}

fn write(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn mkdir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

fn cmd_generate(cfg: &RunConfig, out: &Path) -> Result<()> {
    let (corpus, trace) = generate(cfg)?;
    mkdir(out)?;
    let manifest = corpus.write(&out.join("corpus"))?;
    let trace_path = out.join("trace.jsonl");
    trace.write(&trace_path)?;
    let cfg_path = out.join("config.toml");
    write(&cfg_path, &cfg.to_toml())?;
    for p in [&manifest, &trace_path, &cfg_path] {
        println!("{}  {}", sha256_file(p)?, p.display());
    }
    Ok(())
}

fn cmd_run(cfg: &RunConfig, input: &InputArgs, engine: EngineArg, cap: Option<u64>, out: &Path) -> Result<()> {
    let (corpus, trace) = input.load(cfg)?;
    let kind = match engine {
        EngineArg::Ns => EngineKind::Ns,
        EngineArg::Cam => EngineKind::Cam,
    };
    let run = run_engine(cfg, kind, &corpus, &trace, cap)?;
    mkdir(out)?;
    let log_path = out.join("oplog.jsonl");
    run.log.write(&log_path)?;
    println!("{}", log_path.display());
    if let Some(snap) = &run.snapshot {
        let p = out.join("snapshot.json");
        write(&p, &snap.to_json())?;
        println!("{}", p.display());
    }
    for p in emit_reports(out, &single_report(cfg, &run.log)?)? {
        println!("{}", p.display());
    }
    Ok(())
}

fn cmd_script(out: &Path) -> Result<()> {
    let w = dynamism::run()?;
    mkdir(&out.join("snapshots"))?;
    let mut steps = String::new();
    for s in &w.steps {
        steps.push_str(&serde_json::to_string(s).expect("step log"));
        steps.push('\n');
    }
    let p = out.join("steps.jsonl");
    write(&p, &steps)?;
    println!("{}", p.display());
    for (i, snap) in w.snapshots.iter().enumerate() {
        let p = out.join("snapshots").join(format!("state-{i}.json"));
        write(&p, &snap.to_json())?;
        println!("{}", p.display());
    }
    Ok(())
}

fn cmd_compare(cfg: &RunConfig, input: &InputArgs, out: &Path) -> Result<()> {
    let (corpus, trace) = input.load(cfg)?;
    let run = compare_engines(cfg, &corpus, &trace)?;
    mkdir(out)?;
    let mut written = vec![out.join("ns.oplog.jsonl"), out.join("cam.oplog.jsonl")];
    run.ns.log.write(&written[0])?;
    run.cam.write(&written[1])?;
    if let Some(snap) = &run.ns.snapshot {
        let p = out.join("snapshot.json");
        write(&p, &snap.to_json())?;
        written.push(p);
    }
    written.extend(emit_reports(out, &run.bundle)?);
    for p in written {
        println!("{}", p.display());
    }
    if let Some(c) = &run.bundle.comparison {
        println!(
            "retrieve cost ratio {:.4}, space ratio {:.4}, fidelity delta {:.4}",
            c.retrieve_cost_ratio, c.space_ratio, c.fidelity_delta
        );
    }
    Ok(())
}

fn cmd_inspect(path: &Path, format: InspectFormat) -> Result<()> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let doc = SnapshotDoc::from_json(&text)?;
    let rendered = match format {
        InspectFormat::Text => render_text(&doc),
        InspectFormat::Dot => render_dot(&doc),
        InspectFormat::Json => doc.to_json(),
    };
    print!("{rendered}");
    Ok(())
}

fn dispatch(cli: Cli) -> Result<()> {
    match cli.cmd {
        Cmd::Generate { cfg, out } => cmd_generate(&cfg.load()?, &out),
        Cmd::Run { script: Some(Script::Dynamism), out, .. } => cmd_script(&out),
        Cmd::Run { cfg, input, engine, cap, out, .. } => cmd_run(&cfg.load()?, &input, engine, cap, &out),
        Cmd::Compare { cfg, input, out } => cmd_compare(&cfg.load()?, &input, &out),
        Cmd::Inspect { snapshot, format } => cmd_inspect(&snapshot, format),
    }
}

fn exit_code(e: &Error) -> u8 {
    match e.root() {
        Error::StorageFull { .. } | Error::ElasticityExhausted { .. } => 3,
        Error::Io { .. } => 4,
        Error::SelfEdge(_) | Error::UnknownNeuron(_) | Error::Consistency(_) | Error::Codec(_) => 1,
        _ => 2,
    }
}

fn main() -> ExitCode {
    match dispatch(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

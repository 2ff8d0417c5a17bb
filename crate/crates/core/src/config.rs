//! TOML run configuration and the built-in scenario presets.
//!
//! A config file may name a `preset`; its own keys are then layered over
//! the preset's tables. `seed` is always required, either in the file or as
//! an override.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::cam::ReplacementPolicy;
use crate::codec::default_psnr_ref;
use crate::error::{Error, Result};
use crate::nmn::HiveParams;
use crate::ops::OpControls;
use crate::workload::{dynamism, CamEngine, CamKeying, NsEngine, WorkloadSpec};

pub const PRESETS: [&str; 4] = ["wildlife-deer", "wildlife-fox", "uav-car", "dynamism"];

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EngineSelection {
    Ns,
    Cam,
    #[default]
    Both,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ControlsConfig {
    pub assoc_thresh: f64,
    pub match_thresh: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub search_limit: Option<u64>,
    pub up: bool,
    pub k: bool,
}

impl Default for ControlsConfig {
    fn default() -> Self {
        ControlsConfig {
            assoc_thresh: 0.0,
            match_thresh: 0.95,
            search_limit: None,
            up: true,
            k: false,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CamConfig {
    #[serde(default)]
    pub policy: ReplacementPolicy,
    #[serde(default)]
    pub keying: CamKeying,
}

fn default_warmup() -> usize {
    500
}

fn default_fractions() -> Vec<f64> {
    (1..=12).map(|i| f64::from(i) / 10.0).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReportConfig {
    /// Retrieves excluded from cost figures.
    #[serde(default = "default_warmup")]
    pub warmup_retrieves: usize,
    /// Quality-factor cap grid as fractions of the corpus size.
    #[serde(default = "default_fractions")]
    pub cap_fractions: Vec<f64>,
    /// PSNR that counts as perfect; 20*log10(255) when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub psnr_ref: Option<f64>,
}

impl Default for ReportConfig {
    fn default() -> Self {
        ReportConfig {
            warmup_retrieves: default_warmup(),
            cap_fractions: default_fractions(),
            psnr_ref: None,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PathsConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub corpus_dir: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out_dir: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub preset: Option<String>,
    /// Name used in report rows.
    pub scenario: String,
    #[serde(default)]
    pub engine: EngineSelection,
    pub hive: HiveParams,
    #[serde(default)]
    pub controls: ControlsConfig,
    pub workload: WorkloadSpec,
    #[serde(default)]
    pub cam: CamConfig,
    #[serde(default)]
    pub report: ReportConfig,
    #[serde(default)]
    pub paths: PathsConfig,
}

impl RunConfig {
    /// Built-in scenario with every field filled in.
    pub fn preset(name: &str, seed: u64) -> Result<Self> {
        let mut workload = WorkloadSpec::wildlife(seed);
        let hive = match name {
            "wildlife-deer" => HiveParams::case_study(&["deer"]),
            "wildlife-fox" => {
                workload.n_classes = 3;
                workload.class_labels = vec!["fox".into(), "wolf".into(), "background".into()];
                workload.priority_class = "fox".into();
                workload.n_items = 300;
                HiveParams::case_study(&["wolf", "fox"])
            }
            "uav-car" => {
                workload.class_labels = vec!["car".into(), "background".into()];
                workload.priority_class = "car".into();
                HiveParams::case_study(&["car"])
            }
            "dynamism" => {
                workload.n_items = 12;
                workload.n_classes = 2;
                workload.class_labels = vec!["wolf".into(), "tree".into()];
                workload.priority_class = "wolf".into();
                workload.n_retrievals = 40;
                workload.payload_size_range = [256, 512];
                workload.frames_per_sighting = 2;
                dynamism::params()
            }
            other => {
                return Err(Error::validation(
                    "preset",
                    format!("unknown preset `{other}` (known: {})", PRESETS.join(", ")),
                ))
            }
        };
        Ok(RunConfig {
            seed,
            preset: Some(name.to_string()),
            scenario: name.to_string(),
            engine: EngineSelection::Both,
            hive,
            controls: ControlsConfig::default(),
            workload,
            cam: CamConfig::default(),
            report: ReportConfig::default(),
            paths: PathsConfig::default(),
        })
    }

    /// Parses TOML text, layering it over its preset when one is named.
    pub fn parse(text: &str, seed_override: Option<u64>) -> Result<Self> {
        let mut table: toml::Table = text.parse().map_err(|e: toml::de::Error| Error::Parse(e.to_string()))?;
        if let Some(seed) = seed_override {
            table.insert("seed".into(), toml::Value::Integer(seed as i64));
        }
        let seed = match table.get("seed") {
            None => return Err(Error::validation("seed", "is required (set it in the file or pass --seed)")),
            Some(toml::Value::Integer(s)) if *s >= 0 => *s as u64,
            Some(_) => return Err(Error::validation("seed", "must be a non-negative integer")),
        };
        if let Some(name) = table.get("preset") {
            let name = name
                .as_str()
                .ok_or_else(|| Error::validation("preset", "must be a string"))?;
            let base = RunConfig::preset(name, seed)?;
            let mut merged = toml::Table::try_from(&base).map_err(|e| Error::Parse(e.to_string()))?;
            merge(&mut merged, table);
            table = merged;
        }
        let mut cfg: RunConfig = toml::Value::Table(table)
            .try_into()
            .map_err(|e: toml::de::Error| Error::validation("config", e.message().to_string()))?;
        cfg.workload.seed = cfg.seed;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path, seed_override: Option<u64>) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        RunConfig::parse(&text, seed_override)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        self.hive.validate()?;
        let mut w = self.workload.clone();
        w.seed = self.seed;
        w.validate()?;
        let c = &self.controls;
        if !c.assoc_thresh.is_finite() {
            return Err(Error::validation("controls.assoc_thresh", "must be finite"));
        }
        if !(-1.0..=1.0).contains(&c.match_thresh) {
            return Err(Error::validation("controls.match_thresh", "must lie in [-1, 1]"));
        }
        if c.search_limit == Some(0) {
            return Err(Error::validation("controls.search_limit", "must be positive when set"));
        }
        let f = &self.report.cap_fractions;
        if f.iter().any(|x| !(x.is_finite() && *x > 0.0)) || f.windows(2).any(|w| w[0] > w[1]) {
            return Err(Error::validation("report.cap_fractions", "must be positive and ascending"));
        }
        if let Some(r) = self.report.psnr_ref {
            if !(r.is_finite() && r > 0.0) {
                return Err(Error::validation("report.psnr_ref", "must be > 0"));
            }
        }
        Ok(())
    }

    pub fn workload_spec(&self) -> WorkloadSpec {
        let mut w = self.workload.clone();
        w.seed = self.seed;
        w
    }

    pub fn op_controls(&self) -> OpControls {
        OpControls {
            search_limit: self.controls.search_limit,
            up: self.controls.up,
            k: self.controls.k,
        }
    }

    pub fn psnr_ref(&self) -> f64 {
        self.report.psnr_ref.unwrap_or_else(default_psnr_ref)
    }

    /// `cap` replaces the configured hive capacity.
    pub fn ns_engine(&self, cap: Option<u64>) -> Result<NsEngine> {
        let mut p = self.hive.clone();
        p.capacity_bytes = cap;
        NsEngine::new(
            p,
            self.op_controls(),
            self.controls.assoc_thresh,
            self.controls.match_thresh,
            self.psnr_ref(),
        )
    }

    pub fn cam_engine(&self, cap: Option<u64>) -> Result<CamEngine> {
        CamEngine::for_params(&self.hive, cap, self.cam.policy, self.cam.keying, self.psnr_ref())
    }
}

fn merge(base: &mut toml::Table, over: toml::Table) {
    for (k, v) in over {
        match (base.get_mut(&k), v) {
            (Some(toml::Value::Table(b)), toml::Value::Table(o)) => merge(b, o),
            (_, v) => {
                base.insert(k, v);
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn presets_round_trip_through_toml() {
        for name in PRESETS {
            let cfg = RunConfig::preset(name, 3).unwrap();
            cfg.validate().unwrap();
            assert_eq!(RunConfig::parse(&cfg.to_toml(), None).unwrap(), cfg);
        }
    }

    #[test]
    fn missing_seed_names_the_field() {
        match RunConfig::parse("preset = \"wildlife-deer\"\n", None) {
            Err(Error::Validation { field, .. }) => assert_eq!(field, "seed"),
            other => panic!("{other:?}"),
        }
        assert!(RunConfig::parse("preset = \"wildlife-deer\"\n", Some(4)).is_ok());
    }

    #[test]
    fn file_keys_override_preset() {
        let cfg = RunConfig::parse(
            "seed = 1\npreset = \"wildlife-deer\"\n[hive]\neta = 5.0\n[workload]\nn_retrievals = 77\n",
            None,
        )
        .unwrap();
        assert_eq!(cfg.hive.eta, 5.0);
        assert_eq!(cfg.hive.phi, 1.0);
        assert_eq!(cfg.workload.n_retrievals, 77);
    }

    #[test]
    fn unknown_keys_rejected() {
        let err = RunConfig::parse("seed = 1\npreset = \"wildlife-deer\"\n[hive]\nbogus = 1\n", None);
        assert!(matches!(err, Err(Error::Validation { .. })));
        let err = RunConfig::parse("seed = 1\npreset = \"wildlife-deer\"\nwhatever = 2\n", None);
        assert!(matches!(err, Err(Error::Validation { .. })));
    }

    #[test]
    fn hive_invariants_checked_before_use() {
        let err = RunConfig::parse("seed = 1\npreset = \"wildlife-deer\"\n[hive]\nphi = 120.0\n", None);
        match err {
            Err(Error::Validation { field, .. }) => assert_eq!(field, "hive.phi"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn deer_preset_routes_deer_to_locality_zero() {
        let cfg = RunConfig::preset("wildlife-deer", 1).unwrap();
        let e = cfg.ns_engine(None).unwrap();
        let h = e.memory().hive(0);
        let f = h.extractor().extract(&[1, 2, 3]);
        assert_eq!(h.select_locality(&["deer"], &f), 0);
        assert_eq!(h.select_locality(&["background"], &f), 1);
    }

    #[test]
    fn case_study_values() {
        let cfg = RunConfig::preset("wildlife-deer", 1).unwrap();
        assert_eq!(cfg.hive.eta, 20.0);
        assert_eq!(cfg.controls.match_thresh, 0.95);
        assert_eq!(cfg.hive.retention_period, 500);
        assert_eq!(cfg.hive.memory_decay_rates, vec![0.5, 1.0]);
        assert_eq!(cfg.op_controls(), OpControls::default());
        assert_eq!(cfg.controls.assoc_thresh, 0.0);
    }
}

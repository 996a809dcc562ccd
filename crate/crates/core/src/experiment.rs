//! Fragmentation sweeps: simulate (or load) a dataset, estimate its ranks,
//! then for each fragmentation level delete cells, reconstruct them with
//! both engines, and score the results.

use std::path::PathBuf;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::hda::{self, MlpArchitecture, MlpParams, TrainConfig};
use crate::lmc::{self, LmcConfig, TraceRow};
use crate::rank::{self, RankFlavor, RankReport};
use crate::trajectory::{self, IndicatorMask, NormalizationRecord, RmseMode, TrajectorySet};
use crate::vicsek::{self, ObstacleShape, ScheduleKind, SimConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scenario {
    Spiral,
    Obstacle,
    Classic,
    File,
}

impl Scenario {
    pub fn schedule_kind(self) -> Option<ScheduleKind> {
        match self {
            Scenario::Spiral => Some(ScheduleKind::Spiral),
            Scenario::Obstacle => Some(ScheduleKind::Obstacle),
            Scenario::Classic => Some(ScheduleKind::Classic),
            Scenario::File => None,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct HdaSettings {
    /// `None` uses [`MlpArchitecture::default_for`].
    pub architecture: Option<MlpArchitecture>,
    /// Its `seed` is replaced by a level-derived seed inside sweeps.
    pub train: TrainConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RankSettings {
    pub alpha: usize,
    pub prominence_threshold: f64,
}

impl Default for RankSettings {
    fn default() -> Self {
        RankSettings { alpha: rank::DEFAULT_ALPHA, prominence_threshold: rank::DEFAULT_PROMINENCE }
    }
}

/// One JSON document; omitted fields take their defaults and unknown fields
/// are rejected.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    pub scenario: Scenario,
    /// Trajectory CSV for the `file` scenario.
    pub input: Option<PathBuf>,
    pub sim: SimConfig,
    pub obstacle: ObstacleShape,
    /// Fragmentation percentages.
    pub levels: Vec<f64>,
    pub hda: HdaSettings,
    pub lmc: LmcConfig,
    pub rank: RankSettings,
    pub output_dir: PathBuf,
    /// Master seed; per-stage seeds are derived from it.
    pub seed: u64,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            scenario: Scenario::Spiral,
            input: None,
            sim: SimConfig::default(),
            obstacle: ObstacleShape::default(),
            levels: (1..=9).map(|k| f64::from(k) * 10.0).collect(),
            hda: HdaSettings::default(),
            lmc: LmcConfig::default(),
            rank: RankSettings::default(),
            output_dir: PathBuf::from("out"),
            seed: 0,
        }
    }
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig = serde_json::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if let Some(bad) = self.levels.iter().find(|p| !(0.0..=100.0).contains(*p)) {
            return Err(Error::invalid(format!("fragmentation level {bad} outside [0, 100]")));
        }
        if self.scenario == Scenario::File && self.input.is_none() {
            return Err(Error::invalid("the file scenario needs `input`"));
        }
        if self.scenario != Scenario::File {
            self.sim.validate()?;
        }
        self.hda.train.validate()?;
        self.lmc.validate()?;
        if self.rank.alpha < 1 {
            return Err(Error::invalid("rank alpha must be >= 1"));
        }
        Ok(())
    }

    /// First 16 hex digits of the SHA-256 of the canonical JSON encoding.
    pub fn config_hash(&self) -> String {
        let json = serde_json::to_string(self).expect("config serializes");
        hex_prefix(&Sha256::digest(json.as_bytes()), 8)
    }

    pub fn architecture_for(&self, agents: usize) -> MlpArchitecture {
        self.hda.architecture.clone().unwrap_or_else(|| MlpArchitecture::default_for(agents))
    }
}

fn hex_prefix(bytes: &[u8], n: usize) -> String {
    bytes.iter().take(n).map(|b| format!("{b:02x}")).collect()
}

/// Seed for one pipeline stage at one level. Each (stage, level) pair hashes
/// to its own stream, so adding or removing levels leaves the others intact.
pub fn derive_seed(master: u64, stage: &str, level: f64) -> u64 {
    let mut h = Sha256::new();
    h.update(master.to_le_bytes());
    h.update(stage.as_bytes());
    h.update([0u8]);
    h.update(level.to_bits().to_le_bytes());
    let digest = h.finalize();
    u64::from_le_bytes(digest[..8].try_into().expect("8 bytes"))
}

/// Simulates the configured scenario or loads the input file.
pub fn load_dataset(cfg: &ExperimentConfig) -> Result<TrajectorySet> {
    match cfg.scenario.schedule_kind() {
        Some(kind) => {
            let sched = vicsek::build_rotation_schedule_with(kind, cfg.sim.n, cfg.sim.steps, &cfg.obstacle)?;
            vicsek::simulate(&cfg.sim, &sched)
        }
        None => {
            let path = cfg.input.as_ref().ok_or_else(|| Error::invalid("no input file"))?;
            let (x, mask) = trajectory::load_trajectories(path)?;
            if mask.missing_cells() > 0 {
                return Err(Error::invalid("ground-truth input must be fully observed"));
            }
            Ok(x)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Hda,
    Lmc,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::Hda => "hda",
            Method::Lmc => "lmc",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Scores {
    pub rmse_all: f64,
    /// `None` when nothing was deleted.
    pub rmse_missing: Option<f64>,
    pub rmse_per_step: f64,
}

impl Scores {
    pub fn compute(truth: &TrajectorySet, recon: &TrajectorySet, mask: &IndicatorMask) -> Result<Self> {
        let rmse_missing = match trajectory::rmse(truth, recon, RmseMode::MissingOnly, Some(mask)) {
            Ok(v) => Some(v),
            Err(Error::EmptySelection(_)) => None,
            Err(e) => return Err(e),
        };
        Ok(Scores {
            rmse_all: trajectory::rmse(truth, recon, RmseMode::All, None)?,
            rmse_missing,
            rmse_per_step: trajectory::rmse(truth, recon, RmseMode::PerStep, None)?,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct HdaRun {
    pub params: MlpParams,
    pub normalization: NormalizationRecord,
    pub train_config: TrainConfig,
    pub epochs: usize,
    pub history: Vec<f64>,
    pub reconstruction: TrajectorySet,
    pub scores: Scores,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LmcRun {
    pub converged: bool,
    pub iterations: usize,
    pub final_residual: f64,
    pub trace: Vec<TraceRow>,
    pub residual_increases: Vec<usize>,
    pub reconstruction: TrajectorySet,
    pub scores: Scores,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LevelRun {
    pub level: f64,
    pub fragment_seed: u64,
    pub fragmented: TrajectorySet,
    pub mask: IndicatorMask,
    pub hda: std::result::Result<HdaRun, String>,
    pub lmc: std::result::Result<LmcRun, String>,
}

impl LevelRun {
    pub fn scores(&self, method: Method) -> std::result::Result<&Scores, &str> {
        match method {
            Method::Hda => self.hda.as_ref().map(|r| &r.scores).map_err(String::as_str),
            Method::Lmc => self.lmc.as_ref().map(|r| &r.scores).map_err(String::as_str),
        }
    }
}

pub fn run_hda(
    truth: &TrajectorySet,
    fragmented: &TrajectorySet,
    mask: &IndicatorMask,
    arch: &MlpArchitecture,
    train_cfg: &TrainConfig,
) -> Result<HdaRun> {
    let (norm, rec) = trajectory::normalize(fragmented, mask)?;
    let outcome = hda::train(&norm, mask, arch, train_cfg)?;
    let reconstruction = hda::reconstruct(&outcome.params, &norm, &rec)?;
    let scores = Scores::compute(truth, &reconstruction, mask)?;
    Ok(HdaRun {
        params: outcome.params,
        normalization: rec,
        train_config: train_cfg.clone(),
        epochs: outcome.epochs,
        history: outcome.history,
        reconstruction,
        scores,
    })
}

pub fn run_lmc(truth: &TrajectorySet, fragmented: &TrajectorySet, mask: &IndicatorMask, cfg: &LmcConfig) -> Result<LmcRun> {
    let outcome = lmc::complete(fragmented, mask, cfg)?;
    let reconstruction = TrajectorySet::new(outcome.completed)?;
    let scores = Scores::compute(truth, &reconstruction, mask)?;
    Ok(LmcRun {
        converged: outcome.converged,
        iterations: outcome.iterations,
        final_residual: outcome.final_residual,
        trace: outcome.trace,
        residual_increases: outcome.residual_increases,
        reconstruction,
        scores,
    })
}

/// Fragments `truth` at `level` and reconstructs with both methods. Method
/// failures are captured in the result; only a fragmentation failure aborts.
pub fn run_level(truth: &TrajectorySet, level: f64, cfg: &ExperimentConfig) -> Result<LevelRun> {
    let fragment_seed = derive_seed(cfg.seed, "fragment", level);
    let (fragmented, mask) = trajectory::fragment(truth, level, fragment_seed)?;
    let arch = cfg.architecture_for(truth.agent_count());
    let train_cfg = TrainConfig { seed: derive_seed(cfg.seed, "hda", level), ..cfg.hda.train.clone() };
    let hda = run_hda(truth, &fragmented, &mask, &arch, &train_cfg).map_err(|e| e.to_string());
    let lmc = run_lmc(truth, &fragmented, &mask, &cfg.lmc).map_err(|e| e.to_string());
    Ok(LevelRun { level, fragment_seed, fragmented, mask, hda, lmc })
}

#[derive(Debug, Clone, PartialEq)]
pub struct RmseRow {
    pub level: f64,
    pub method: Method,
    pub result: std::result::Result<Scores, String>,
}

#[derive(Debug, Clone)]
pub struct ExperimentReport {
    pub config_hash: String,
    pub master_seed: u64,
    pub version: &'static str,
    pub truth: TrajectorySet,
    pub rank_linear: std::result::Result<RankReport, String>,
    pub rank_nonlinear: std::result::Result<RankReport, String>,
    pub levels: Vec<std::result::Result<LevelRun, (f64, String)>>,
}

impl ExperimentReport {
    /// One row per (level, method), in level order then `hda`, `lmc`.
    pub fn rmse_rows(&self) -> Vec<RmseRow> {
        let mut rows = Vec::new();
        for entry in &self.levels {
            for method in [Method::Hda, Method::Lmc] {
                let (level, result) = match entry {
                    Ok(run) => (run.level, run.scores(method).cloned().map_err(str::to_owned)),
                    Err((level, e)) => (*level, Err(e.clone())),
                };
                rows.push(RmseRow { level, method, result });
            }
        }
        rows
    }

    /// `level,method,rmse_all,rmse_missing,rmse_per_step,status`.
    pub fn rmse_csv(&self) -> String {
        let mut s = format!("# config_hash={} seed={}\n", self.config_hash, self.master_seed);
        s.push_str("level,method,rmse_all,rmse_missing,rmse_per_step,status\n");
        for row in self.rmse_rows() {
            match &row.result {
                Ok(sc) => s.push_str(&format!(
                    "{},{},{:.16e},{},{:.16e},ok\n",
                    row.level,
                    row.method.name(),
                    sc.rmse_all,
                    sc.rmse_missing.map_or(String::new(), |v| format!("{v:.16e}")),
                    sc.rmse_per_step
                )),
                Err(e) => s.push_str(&format!(
                    "{},{},,,,\"error: {}\"\n",
                    row.level,
                    row.method.name(),
                    e.replace('"', "'")
                )),
            }
        }
        s
    }
}

pub fn rank_reports(truth: &TrajectorySet, settings: &RankSettings) -> (Result<RankReport>, Result<RankReport>) {
    (
        rank::rank_report(truth, RankFlavor::Linear, settings.alpha, settings.prominence_threshold),
        rank::rank_report(truth, RankFlavor::Nonlinear, settings.alpha, settings.prominence_threshold),
    )
}

/// Full sweep on an already built dataset. Levels run in parallel; results
/// come back in configuration order.
pub fn run_on(truth: TrajectorySet, cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    cfg.validate()?;
    let (linear, nonlinear) = rank_reports(&truth, &cfg.rank);
    let levels = cfg
        .levels
        .par_iter()
        .map(|&level| run_level(&truth, level, cfg).map_err(|e| (level, e.to_string())))
        .collect();
    Ok(ExperimentReport {
        config_hash: cfg.config_hash(),
        master_seed: cfg.seed,
        version: env!("CARGO_PKG_VERSION"),
        truth,
        rank_linear: linear.map_err(|e| e.to_string()),
        rank_nonlinear: nonlinear.map_err(|e| e.to_string()),
        levels,
    })
}

pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    cfg.validate()?;
    run_on(load_dataset(cfg)?, cfg)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_defaults_and_unknown_fields() {
        let cfg = ExperimentConfig::from_json("{}").unwrap();
        assert_eq!(cfg, ExperimentConfig::default());
        assert_eq!(cfg.levels.len(), 9);
        let err = ExperimentConfig::from_json(r#"{"levles": [10]}"#).unwrap_err();
        assert!(err.to_string().contains("unknown field"));
        let err = ExperimentConfig::from_json(r#"{"sim": {"radius": 1, "nosie": 0.1}}"#).unwrap_err();
        assert!(err.to_string().contains("unknown field"));
        assert!(ExperimentConfig::from_json(r#"{"levels": [120]}"#).is_err());
        assert!(ExperimentConfig::from_json(r#"{"scenario": "file"}"#).is_err());
    }

    #[test]
    fn seeds_are_stable_per_stage_and_level() {
        let a = derive_seed(7, "fragment", 10.0);
        assert_eq!(a, derive_seed(7, "fragment", 10.0));
        assert_ne!(a, derive_seed(7, "fragment", 20.0));
        assert_ne!(a, derive_seed(7, "hda", 10.0));
        assert_ne!(a, derive_seed(8, "fragment", 10.0));
    }

    #[test]
    fn config_hash_tracks_content() {
        let a = ExperimentConfig::default();
        let mut b = a.clone();
        assert_eq!(a.config_hash(), b.config_hash());
        b.seed = 1;
        assert_ne!(a.config_hash(), b.config_hash());
        assert_eq!(a.config_hash().len(), 16);
    }

    #[test]
    fn empty_level_list_reports_ranks_only() {
        let cfg = ExperimentConfig {
            levels: vec![],
            sim: SimConfig { n: 4, steps: 40, ..SimConfig::default() },
            rank: RankSettings { alpha: 5, prominence_threshold: 5.0 },
            ..ExperimentConfig::default()
        };
        let report = run_experiment(&cfg).unwrap();
        assert!(report.rmse_rows().is_empty());
        assert!(report.rank_linear.is_ok());
        assert_eq!(report.rmse_csv().lines().count(), 2);
    }

    #[test]
    fn small_sweep_produces_two_rows_per_level() {
        let cfg = ExperimentConfig {
            levels: vec![0.0, 30.0, 100.0],
            sim: SimConfig { n: 3, steps: 30, ..SimConfig::default() },
            hda: HdaSettings { architecture: None, train: TrainConfig { max_epochs: 5, ..TrainConfig::default() } },
            lmc: LmcConfig { max_iters: 50, ..LmcConfig::default() },
            rank: RankSettings { alpha: 5, prominence_threshold: 5.0 },
            ..ExperimentConfig::default()
        };
        let report = run_experiment(&cfg).unwrap();
        let rows = report.rmse_rows();
        assert_eq!(rows.len(), 6);
        // 100% deletion: every row is unobserved, both methods fail cleanly.
        assert!(rows[4].result.is_err() && rows[5].result.is_err());
        assert!(rows[2].result.is_ok() && rows[3].result.is_ok());
        assert!(rows[0].result.as_ref().unwrap().rmse_missing.is_none());
        assert!(report.rmse_csv().contains("error: "));
    }
}

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, Context};
use serde_json::{json, Value};
use trajrec_core::experiment::{self, derive_seed, HdaRun, LevelRun, LmcRun, Method, Scores};
use trajrec_core::hda::HdaModel;
use trajrec_core::lmc;
use trajrec_core::rank::{self, RankReport};
use trajrec_core::trajectory::{self, IndicatorMask, RmseMode, TrajectorySet};
use trajrec_core::{Error, ExperimentConfig, ExperimentReport, RankFlavor, Scenario};

use crate::svg::{self, Layer, Series};
use crate::{Command, FlavorArg, MethodArg, ModeArg, ScenarioArg, Settings};

/// A failed command and the exit code it maps to.
pub enum Failure {
    Usage(anyhow::Error),
    Runtime(anyhow::Error),
}

impl Failure {
    pub fn code(&self) -> u8 {
        match self {
            Failure::Usage(_) => 2,
            Failure::Runtime(_) => 1,
        }
    }

    pub fn error(&self) -> &anyhow::Error {
        match self {
            Failure::Usage(e) | Failure::Runtime(e) => e,
        }
    }
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        Failure::Runtime(e)
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Runtime(e.into())
    }
}

type CmdResult = Result<(), Failure>;

pub fn dispatch(command: Command) -> CmdResult {
    match command {
        Command::Simulate { settings, output } => simulate(&settings, output),
        Command::Fragment { settings, input, percent, output, mask_output } => {
            fragment(&settings, &input, percent, output, mask_output)
        }
        Command::Rank { settings, input, flavor, output } => rank_cmd(&settings, &input, flavor, output),
        Command::Reconstruct { settings, method, input, level, output } => {
            reconstruct(&settings, method, &input, level, output)
        }
        Command::Evaluate { truth, reconstructed, mask, mode } => evaluate(&truth, &reconstructed, mask.as_deref(), mode),
        Command::Run { settings } => run(&settings),
    }
}

fn resolve(settings: &Settings) -> Result<ExperimentConfig, Failure> {
    let mut cfg = match &settings.config {
        Some(path) => {
            let text = fs::read_to_string(path)
                .with_context(|| format!("reading config {}", path.display()))
                .map_err(Failure::Usage)?;
            serde_json::from_str::<ExperimentConfig>(&text)
                .with_context(|| format!("parsing config {}", path.display()))
                .map_err(Failure::Usage)?
        }
        None => ExperimentConfig::default(),
    };
    let s = settings;
    if let Some(v) = s.seed {
        cfg.seed = v;
    }
    if let Some(v) = s.scenario {
        cfg.scenario = match v {
            ScenarioArg::Spiral => Scenario::Spiral,
            ScenarioArg::Obstacle => Scenario::Obstacle,
            ScenarioArg::Classic => Scenario::Classic,
            ScenarioArg::File => Scenario::File,
        };
    }
    if let Some(v) = &s.data {
        cfg.input = Some(v.clone());
    }
    if let Some(v) = &s.output_dir {
        cfg.output_dir = v.clone();
    }
    macro_rules! set {
        ($($flag:ident => $($field:ident).+),* $(,)?) => {
            $(if let Some(v) = s.$flag.clone() { cfg.$($field).+ = v; })*
        };
    }
    set!(
        agents => sim.n,
        steps => sim.steps,
        radius => sim.radius,
        speed => sim.speed,
        delta => sim.delta,
        noise => sim.noise,
        sim_seed => sim.seed,
        levels => levels,
        epochs => hda.train.max_epochs,
        learning_rate => hda.train.learning_rate,
        hda_tolerance => hda.train.tolerance,
        lmc_iters => lmc.max_iters,
        lmc_tolerance => lmc.tolerance,
        alpha => rank.alpha,
        threshold => rank.prominence_threshold,
    );
    cfg.validate().map_err(|e| Failure::Usage(anyhow!(e)))?;
    Ok(cfg)
}

fn provenance(cfg: &ExperimentConfig) -> String {
    format!("config_hash={} seed={} version={}", cfg.config_hash(), cfg.seed, env!("CARGO_PKG_VERSION"))
}

fn same_file(a: &Path, b: &Path) -> bool {
    match (fs::canonicalize(a), fs::canonicalize(b)) {
        (Ok(x), Ok(y)) => x == y,
        _ => false,
    }
}

/// Refuses to write over any input file.
fn check_output(output: &Path, inputs: &[&Path]) -> Result<(), Failure> {
    if let Some(input) = inputs.iter().find(|i| same_file(output, i)) {
        return Err(Failure::Usage(anyhow!("output {} would overwrite input {}", output.display(), input.display())));
    }
    Ok(())
}

fn prepare_parent(path: &Path) -> anyhow::Result<()> {
    match path.parent() {
        Some(dir) if !dir.as_os_str().is_empty() => {
            fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))
        }
        _ => Ok(()),
    }
}

fn write_text(path: &Path, text: &str) -> anyhow::Result<()> {
    prepare_parent(path)?;
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

fn write_set(path: &Path, x: &TrajectorySet, mask: &IndicatorMask, comment: &str) -> anyhow::Result<()> {
    prepare_parent(path)?;
    trajectory::save_trajectories_with_comment(path, x, mask, Some(comment)).with_context(|| format!("writing {}", path.display()))
}

fn write_mask_file(path: &Path, mask: &IndicatorMask, comment: &str) -> anyhow::Result<()> {
    prepare_parent(path)?;
    let file = fs::File::create(path).with_context(|| format!("writing {}", path.display()))?;
    trajectory::write_mask(std::io::BufWriter::new(file), mask, Some(comment))?;
    Ok(())
}

fn load(path: &Path) -> anyhow::Result<(TrajectorySet, IndicatorMask)> {
    trajectory::load_trajectories(path).with_context(|| format!("reading {}", path.display()))
}

fn load_complete(path: &Path) -> anyhow::Result<TrajectorySet> {
    let (x, mask) = load(path)?;
    if mask.missing_cells() > 0 {
        return Err(anyhow!("{} has {} missing cells; a fully observed file is required", path.display(), mask.missing_cells()));
    }
    Ok(x)
}

fn simulate(settings: &Settings, output: Option<PathBuf>) -> CmdResult {
    let cfg = resolve(settings)?;
    if cfg.scenario == Scenario::File {
        return Err(Failure::Usage(anyhow!("simulate needs a simulated scenario, not `file`")));
    }
    let x = experiment::load_dataset(&cfg)?;
    let path = output.unwrap_or_else(|| cfg.output_dir.join("trajectories.csv"));
    write_set(&path, &x, &IndicatorMask::for_set(&x), &provenance(&cfg))?;
    println!("wrote {} ({} agents x {} steps)", path.display(), x.agent_count(), x.step_count());
    Ok(())
}

fn fragment(settings: &Settings, input: &Path, percent: f64, output: Option<PathBuf>, mask_output: Option<PathBuf>) -> CmdResult {
    let cfg = resolve(settings)?;
    if !(0.0..=100.0).contains(&percent) {
        return Err(Failure::Usage(anyhow!("--percent must lie in [0, 100]")));
    }
    let path = output.unwrap_or_else(|| cfg.output_dir.join("fragmented.csv"));
    check_output(&path, &[input])?;
    if let Some(m) = &mask_output {
        check_output(m, &[input])?;
    }
    let x = load_complete(input)?;
    let seed = derive_seed(cfg.seed, "fragment", percent);
    let (frag, mask) = trajectory::fragment(&x, percent, seed)?;
    let comment = format!("{} fragment_seed={seed}", provenance(&cfg));
    write_set(&path, &frag, &mask, &comment)?;
    if let Some(m) = mask_output {
        write_mask_file(&m, &mask, &comment)?;
    }
    println!("wrote {} ({} of {} cells missing)", path.display(), mask.missing_cells(), x.agent_count() * x.step_count());
    Ok(())
}

fn flavor_of(flavor: FlavorArg) -> RankFlavor {
    match flavor {
        FlavorArg::Linear => RankFlavor::Linear,
        FlavorArg::Nonlinear => RankFlavor::Nonlinear,
    }
}

fn flavor_name(flavor: RankFlavor) -> &'static str {
    match flavor {
        RankFlavor::Linear => "linear",
        RankFlavor::Nonlinear => "nonlinear",
    }
}

fn rank_svg(report: &RankReport) -> String {
    let title = format!("{} rank estimate: {}", flavor_name(report.flavor), report.estimated_rank);
    svg::bar_chart(&title, "singular value (%)", &report.percentages, 20, Some(report.prominence_threshold))
}

fn write_rank(dir_or_csv: &Path, report: &RankReport, comment: &str) -> anyhow::Result<()> {
    write_text(dir_or_csv, &report.to_csv(Some(comment)))?;
    write_text(&dir_or_csv.with_extension("svg"), &rank_svg(report))
}

fn rank_cmd(settings: &Settings, input: &Path, flavor: FlavorArg, output: Option<PathBuf>) -> CmdResult {
    let cfg = resolve(settings)?;
    let flavor = flavor_of(flavor);
    let path = output.unwrap_or_else(|| cfg.output_dir.join(format!("rank_{}.csv", flavor_name(flavor))));
    check_output(&path, &[input])?;
    check_output(&path.with_extension("svg"), &[input])?;
    let x = load_complete(input)?;
    let report = rank::rank_report(&x, flavor, cfg.rank.alpha, cfg.rank.prominence_threshold)?;
    write_rank(&path, &report, &provenance(&cfg))?;
    println!("{} rank: {}", flavor_name(flavor), report.estimated_rank);
    Ok(())
}

fn reconstruct(settings: &Settings, method: MethodArg, input: &Path, level: f64, output: Option<PathBuf>) -> CmdResult {
    let cfg = resolve(settings)?;
    let name = match method {
        MethodArg::Hda => "hda",
        MethodArg::Lmc => "lmc",
    };
    let path = output.unwrap_or_else(|| cfg.output_dir.join(format!("{name}_reconstruction.csv")));
    let side = |suffix: &str| path.with_file_name(format!("{}_{suffix}", path.file_stem().unwrap_or_default().to_string_lossy()));
    check_output(&path, &[input])?;
    let (frag, mask) = load(input)?;
    let comment = provenance(&cfg);
    match method {
        MethodArg::Hda => {
            let arch = cfg.architecture_for(frag.agent_count());
            let train = trajrec_core::hda::TrainConfig { seed: derive_seed(cfg.seed, "hda", level), ..cfg.hda.train.clone() };
            let (norm, rec) = trajectory::normalize(&frag, &mask)?;
            let outcome = trajrec_core::hda::train(&norm, &mask, &arch, &train)?;
            let out = trajrec_core::hda::reconstruct(&outcome.params, &norm, &rec)?;
            write_set(&path, &out, &IndicatorMask::for_set(&out), &comment)?;
            let mut model = HdaModel::new(&outcome, rec, train);
            model.config_hash = Some(cfg.config_hash());
            let model_path = side("model.json");
            check_output(&model_path, &[input])?;
            write_text(&model_path, &model.to_json()?)?;
            let history_path = side("history.csv");
            check_output(&history_path, &[input])?;
            write_text(&history_path, &history_csv(&outcome.history, &comment))?;
            println!("wrote {} ({} epochs, final error {:.3e})", path.display(), outcome.epochs, outcome.final_error);
        }
        MethodArg::Lmc => {
            let outcome = lmc::complete(&frag, &mask, &cfg.lmc)?;
            let out = TrajectorySet::new(outcome.completed.clone())?;
            write_set(&path, &out, &IndicatorMask::for_set(&out), &comment)?;
            let trace_path = side("trace.csv");
            check_output(&trace_path, &[input])?;
            write_text(&trace_path, &outcome.trace_csv(Some(&comment)))?;
            if !outcome.residual_increases.is_empty() {
                eprintln!("warning: observed-entry residual grew at {} iterations", outcome.residual_increases.len());
            }
            if !outcome.converged {
                eprintln!("warning: no convergence after {} iterations (residual {:.3e})", outcome.iterations, outcome.final_residual);
            }
            println!("wrote {} ({} iterations, residual {:.3e})", path.display(), outcome.iterations, outcome.final_residual);
        }
    }
    Ok(())
}

fn history_csv(history: &[f64], comment: &str) -> String {
    let mut s = format!("# {comment}\nepoch,masked_error\n");
    for (k, e) in history.iter().enumerate() {
        s.push_str(&format!("{},{e:.16e}\n", k + 1));
    }
    s
}

fn evaluate(truth: &Path, reconstructed: &Path, mask: Option<&Path>, mode: Option<ModeArg>) -> CmdResult {
    let x = load_complete(truth)?;
    let r = load_complete(reconstructed)?;
    let mask = match mask {
        Some(p) => Some(load(p)?.1),
        None => None,
    };
    let modes: Vec<(RmseMode, &str)> = match mode {
        Some(ModeArg::All) => vec![(RmseMode::All, "all")],
        Some(ModeArg::MissingOnly) => vec![(RmseMode::MissingOnly, "missing-only")],
        Some(ModeArg::PerStep) => vec![(RmseMode::PerStep, "per-step")],
        None => {
            let mut v = vec![(RmseMode::All, "all"), (RmseMode::PerStep, "per-step")];
            if mask.is_some() {
                v.insert(1, (RmseMode::MissingOnly, "missing-only"));
            }
            v
        }
    };
    if matches!(mode, Some(ModeArg::MissingOnly)) && mask.is_none() {
        return Err(Failure::Usage(anyhow!("missing-only needs --mask")));
    }
    println!("mode,rmse");
    for (m, name) in modes {
        let v = trajectory::rmse(&x, &r, m, mask.as_ref())?;
        println!("{name},{v:.16e}");
    }
    Ok(())
}

fn level_dir(cfg: &ExperimentConfig, level: f64) -> PathBuf {
    cfg.output_dir.join(format!("level_{level}"))
}

fn scores_json(s: &Scores) -> Value {
    json!({
        "rmse_all": s.rmse_all,
        "rmse_missing": s.rmse_missing,
        "rmse_per_step": s.rmse_per_step,
    })
}

fn hda_json(run: &Result<HdaRun, String>) -> Value {
    match run {
        Ok(h) => json!({
            "scores": scores_json(&h.scores),
            "epochs": h.epochs,
            "final_error": h.history.last(),
            "seed": h.train_config.seed,
        }),
        Err(e) => json!({ "error": e }),
    }
}

fn lmc_json(run: &Result<LmcRun, String>) -> Value {
    match run {
        Ok(l) => json!({
            "scores": scores_json(&l.scores),
            "iterations": l.iterations,
            "converged": l.converged,
            "final_residual": l.final_residual,
            "residual_increases": l.residual_increases.len(),
        }),
        Err(e) => json!({ "error": e }),
    }
}

fn rank_json(r: &Result<RankReport, String>) -> Value {
    match r {
        Ok(r) => json!({
            "estimated_rank": r.estimated_rank,
            "prominence_threshold": r.prominence_threshold,
            "percentages": r.percentages.iter().take(10).collect::<Vec<_>>(),
        }),
        Err(e) => json!({ "error": e }),
    }
}

fn write_level(cfg: &ExperimentConfig, run: &LevelRun, truth: &TrajectorySet, comment: &str) -> anyhow::Result<()> {
    let dir = level_dir(cfg, run.level);
    let comment = format!("{comment} level={} fragment_seed={}", run.level, run.fragment_seed);
    write_set(&dir.join("fragmented.csv"), &run.fragmented, &run.mask, &comment)?;
    write_mask_file(&dir.join("mask.csv"), &run.mask, &comment)?;
    let full = IndicatorMask::for_set(truth);
    let overlay = |name: &str, recon: &TrajectorySet| {
        svg::trajectory_overlay(
            &format!("{name} reconstruction at p = {}%", run.level),
            &[
                Layer { name: "truth", data: truth, mask: None, dashed: false },
                Layer { name: "fragmented", data: &run.fragmented, mask: Some(&run.mask), dashed: false },
                Layer { name, data: recon, mask: None, dashed: true },
            ],
        )
    };
    match &run.hda {
        Ok(h) => {
            write_set(&dir.join("hda_reconstruction.csv"), &h.reconstruction, &full, &comment)?;
            write_text(&dir.join("hda_history.csv"), &history_csv(&h.history, &comment))?;
            let model = HdaModel {
                config_hash: Some(cfg.config_hash()),
                ..HdaModel::new(
                    &trajrec_core::hda::TrainOutcome {
                        params: h.params.clone(),
                        epochs: h.epochs,
                        final_error: h.history.last().copied().unwrap_or(f64::NAN),
                        converged: h.history.last().is_some_and(|e| *e < h.train_config.tolerance),
                        history: Vec::new(),
                    },
                    h.normalization.clone(),
                    h.train_config.clone(),
                )
            };
            write_text(&dir.join("hda_model.json"), &model.to_json()?)?;
            write_text(&dir.join("overlay_hda.svg"), &overlay("hda", &h.reconstruction))?;
        }
        Err(e) => write_text(&dir.join("hda_error.txt"), &format!("{e}\n"))?,
    }
    match &run.lmc {
        Ok(l) => {
            write_set(&dir.join("lmc_reconstruction.csv"), &l.reconstruction, &full, &comment)?;
            let mut trace = format!("# {comment}\niter,residual,nuclear_norm,mu\n");
            for r in &l.trace {
                trace.push_str(&format!("{},{:.16e},{:.16e},{:.16e}\n", r.iter, r.residual, r.nuclear_norm, r.mu));
            }
            write_text(&dir.join("lmc_trace.csv"), &trace)?;
            write_text(&dir.join("overlay_lmc.svg"), &overlay("lmc", &l.reconstruction))?;
        }
        Err(e) => write_text(&dir.join("lmc_error.txt"), &format!("{e}\n"))?,
    }
    Ok(())
}

fn rmse_svg(report: &ExperimentReport) -> String {
    let rows = report.rmse_rows();
    let series: Vec<Series> = [Method::Hda, Method::Lmc]
        .iter()
        .map(|&m| Series {
            name: m.name(),
            points: rows
                .iter()
                .filter(|r| r.method == m)
                .map(|r| (r.level, r.result.as_ref().ok().map(|s| s.rmse_all)))
                .collect(),
        })
        .collect();
    svg::line_chart("Reconstruction error", "fragmentation p (%)", "RMSE", &series)
}

fn run(settings: &Settings) -> CmdResult {
    let cfg = resolve(settings)?;
    let truth = experiment::load_dataset(&cfg)?;
    let report = experiment::run_on(truth, &cfg)?;
    let comment = provenance(&cfg);
    let out = &cfg.output_dir;
    if let Some(input) = &cfg.input {
        check_output(&out.join("trajectories.csv"), &[input])?;
    }
    write_set(&out.join("trajectories.csv"), &report.truth, &IndicatorMask::for_set(&report.truth), &comment)?;
    write_text(&out.join("rmse.csv"), &report.rmse_csv())?;
    write_text(&out.join("rmse.svg"), &rmse_svg(&report))?;
    for (name, rank) in [("rank_linear", &report.rank_linear), ("rank_nonlinear", &report.rank_nonlinear)] {
        match rank {
            Ok(r) => write_rank(&out.join(format!("{name}.csv")), r, &comment)?,
            Err(e) => {
                eprintln!("warning: {name}: {e}");
                write_text(&out.join(format!("{name}_error.txt")), &format!("{e}\n"))?;
            }
        }
    }
    let mut levels = Vec::new();
    for entry in &report.levels {
        match entry {
            Ok(run) => {
                write_level(&cfg, run, &report.truth, &comment)?;
                for (name, err) in [("hda", run.hda.as_ref().err()), ("lmc", run.lmc.as_ref().err())] {
                    if let Some(e) = err {
                        eprintln!("warning: level {} {name}: {e}", run.level);
                    }
                }
                if let Ok(l) = &run.lmc {
                    if !l.residual_increases.is_empty() {
                        eprintln!("warning: level {} lmc residual grew at {} iterations", run.level, l.residual_increases.len());
                    }
                }
                levels.push(json!({
                    "level": run.level,
                    "fragment_seed": run.fragment_seed,
                    "missing_cells": run.mask.missing_cells(),
                    "hda": hda_json(&run.hda),
                    "lmc": lmc_json(&run.lmc),
                }));
            }
            Err((level, e)) => {
                eprintln!("warning: level {level}: {e}");
                levels.push(json!({ "level": level, "error": e }));
            }
        }
    }
    let summary = json!({
        "provenance": {
            "config_hash": report.config_hash,
            "master_seed": report.master_seed,
            "version": report.version,
        },
        "config": cfg,
        "dataset": { "agents": report.truth.agent_count(), "steps": report.truth.step_count(), "entry_std": report.truth.entry_std() },
        "rank": { "linear": rank_json(&report.rank_linear), "nonlinear": rank_json(&report.rank_nonlinear) },
        "levels": levels,
    });
    write_text(&out.join("report.json"), &(serde_json::to_string_pretty(&summary).map_err(anyhow::Error::from)? + "\n"))?;
    print!("{}", report.rmse_csv());
    println!("wrote results to {}", out.display());
    Ok(())
}

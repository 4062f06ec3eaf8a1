//! Experiment runner: single runs, processing-target sweeps, energy-profile
//! calibration and scenario generation, with CSV/JSON/text reports.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::{load_dataset, write_scenario, SequenceData};
use crate::energy::reference::default_profile;
use crate::energy::{compute_yield, fit_profile, simulate_draw, EnergyProfile, FitMethod, FitResult, ModelId, YieldInput};
use crate::error::{Error, Result};
use crate::kitti::write_tracking_output;
use crate::metrics::{evaluate, prepare_sequence, MatchingConfig, TrackingMetrics};
use crate::pipeline::{run_sequence, SequenceRun};
use crate::scenario::{generate, Scenario, ScenarioSpec};
use crate::scheduler::{ScheduleStats, SchedulerConfig};
use crate::tracker::TrackerConfig;

/// Directory searched for `<model>.json` profiles before the built-in ones.
pub const PROFILE_DIR_ENV: &str = "FRAMEDROP_PROFILE_DIR";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// Dataset directory; exclusive with `scenario`.
    pub dataset: Option<PathBuf>,
    /// Scenario spec (JSON or TOML); exclusive with `dataset`.
    pub scenario: Option<PathBuf>,
    pub output_dir: Option<PathBuf>,
    /// Model id (`pv-rcnn`, ...) or path to a profile JSON file.
    pub profile: String,
    pub camera_always_on: bool,
    /// Worker threads; 0 uses all cores.
    pub workers: usize,
    pub tracker: TrackerConfig,
    pub scheduler: SchedulerConfig,
    pub matching: MatchingConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            dataset: None,
            scenario: None,
            output_dir: None,
            profile: ModelId::PvRcnn.to_string(),
            camera_always_on: true,
            workers: 0,
            tracker: TrackerConfig::default(),
            scheduler: SchedulerConfig::default(),
            matching: MatchingConfig::default(),
        }
    }
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Toml(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml(&text)
    }

    pub fn validate(&self) -> Result<()> {
        match (&self.dataset, &self.scenario) {
            (Some(_), Some(_)) => return Err(Error::config("dataset", "give either dataset or scenario, not both")),
            (None, None) => return Err(Error::config("dataset", "no input: set dataset or scenario")),
            (Some(p), None) if !p.is_dir() => {
                return Err(Error::config("dataset", format!("{} is not a directory", p.display())))
            }
            (None, Some(p)) if !p.is_file() => {
                return Err(Error::config("scenario", format!("{} does not exist", p.display())))
            }
            _ => {}
        }
        self.tracker.validate()?;
        self.scheduler.validate()?;
        self.matching.validate()?;
        Ok(())
    }

    /// The configuration in force, for reproducibility logs.
    pub fn banner(&self) -> String {
        let body = toml::to_string(self).unwrap_or_else(|e| format!("# unserializable: {e}\n"));
        let mut out = String::from("# effective configuration\n");
        for line in body.lines() {
            let _ = writeln!(out, "#   {line}");
        }
        out
    }
}

pub fn load_scenario_spec(path: &Path) -> Result<ScenarioSpec> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    match path.extension().and_then(|e| e.to_str()) {
        Some("json") => ScenarioSpec::from_json(&text),
        _ => ScenarioSpec::from_toml(&text),
    }
}

pub fn load_input(config: &RunConfig) -> Result<Vec<SequenceData>> {
    config.validate()?;
    if let Some(dir) = &config.dataset {
        return load_dataset(dir);
    }
    let spec = load_scenario_spec(config.scenario.as_deref().expect("validated"))?;
    Ok(vec![generate(&spec)?.into()])
}

/// Resolves a model id or a profile path. Model ids are looked up in
/// `$FRAMEDROP_PROFILE_DIR/<id>.json` first, then fall back to the built-in
/// fit.
pub fn resolve_profile(profile: &str) -> Result<EnergyProfile> {
    let read = |p: &Path| -> Result<EnergyProfile> {
        let text = fs::read_to_string(p).map_err(|e| Error::io(p, e))?;
        EnergyProfile::from_json(&text)
    };
    let as_path = Path::new(profile);
    if profile.ends_with(".json") || as_path.is_file() {
        return read(as_path);
    }
    let model: ModelId = profile.parse().map_err(|_| {
        Error::config("profile", format!("`{profile}` is neither a model id nor a profile file"))
    })?;
    if let Some(dir) = std::env::var_os(PROFILE_DIR_ENV) {
        let p = Path::new(&dir).join(format!("{model}.json"));
        if p.is_file() {
            return read(&p);
        }
    }
    Ok(default_profile(model))
}

/// One row of a report table. Percent values except `eff_target`, which is
/// a fraction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub label: String,
    pub n: u32,
    pub m: u32,
    pub trigger: bool,
    pub hota: f64,
    pub det_a: f64,
    pub ass_a: f64,
    pub mota: Option<f64>,
    pub motp: f64,
    pub fp: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
    pub idsw: u64,
    pub gt_count: u64,
    pub eff_target: f64,
    pub sys_draw_w: f64,
    pub yield_w_per_hota: Option<f64>,
    pub frames_processed: u64,
    pub frames_triggered: u64,
    pub numerical_failures: u64,
}

/// Everything produced for one scheduler setting.
#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub report: MetricsReport,
    pub runs: Vec<SequenceRun>,
    pub metrics: TrackingMetrics,
}

fn pool(workers: usize) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::config("workers", e.to_string()))
}

pub fn evaluate_runs(seqs: &[SequenceData], runs: &[SequenceRun], matching: &MatchingConfig) -> Result<TrackingMetrics> {
    let mut prepared = Vec::new();
    for (seq, run) in seqs.iter().zip(runs) {
        let gt = seq
            .ground_truth
            .as_ref()
            .ok_or_else(|| Error::config("dataset", format!("sequence {} has no ground-truth labels", seq.name)))?;
        for &class in &matching.classes {
            prepared.push(prepare_sequence(&seq.name, gt, &run.outputs, seq.frames, class, matching));
        }
    }
    Ok(evaluate(&prepared, matching))
}

fn label(s: &SchedulerConfig) -> String {
    let pct = (100.0 * s.baseline_target()).round();
    if s.n == s.m || !s.event_trigger_enabled {
        format!("{pct}%")
    } else {
        format!("{pct}%+trigger")
    }
}

/// Runs every sequence under one scheduler setting, sequences in parallel
/// and folded in input order.
pub fn run_setting(
    seqs: &[SequenceData],
    tracker: &TrackerConfig,
    scheduler: &SchedulerConfig,
    matching: &MatchingConfig,
    profile: &EnergyProfile,
    camera_always_on: bool,
) -> Result<RunOutcome> {
    let runs: Vec<SequenceRun> = seqs
        .par_iter()
        .map(|s| run_sequence(s, tracker, scheduler))
        .collect::<Result<_>>()?;
    let mut stats = ScheduleStats::default();
    for r in &runs {
        stats.merge(&r.stats);
    }
    let metrics = evaluate_runs(seqs, &runs, matching)?;
    let report = MetricsReport {
        label: label(scheduler),
        n: scheduler.n,
        m: scheduler.m,
        trigger: scheduler.event_trigger_enabled && scheduler.n != scheduler.m,
        hota: metrics.hota,
        det_a: metrics.det_a,
        ass_a: metrics.ass_a,
        mota: metrics.mota,
        motp: metrics.motp,
        fp: metrics.fp,
        fn_: metrics.fn_,
        idsw: metrics.idsw,
        gt_count: metrics.gt_count,
        eff_target: stats.effective_target(),
        sys_draw_w: simulate_draw(&stats, profile, camera_always_on),
        yield_w_per_hota: None,
        frames_processed: stats.frames_processed,
        frames_triggered: stats.frames_event_triggered,
        numerical_failures: runs.iter().map(|r| r.numerical_failures).sum(),
    };
    Ok(RunOutcome { report, runs, metrics })
}

/// Fills `yield_w_per_hota` of `row` against the full-rate `reference`;
/// left empty when the HOTA difference is zero.
pub fn attach_yield(row: &mut MetricsReport, reference: &MetricsReport) {
    if row.n == row.m {
        row.yield_w_per_hota = None;
        return;
    }
    row.yield_w_per_hota = compute_yield(YieldInput {
        draw_100: reference.sys_draw_w,
        hota_100: reference.hota,
        draw_target: row.sys_draw_w,
        hota_target: row.hota,
    })
    .ok();
}

/// Writes tracker outputs and per-frame decisions for post-hoc checks.
pub fn write_artifacts(dir: &Path, outcome: &RunOutcome) -> Result<()> {
    let tracks = dir.join("tracks");
    let schedule = dir.join("schedule");
    for d in [&tracks, &schedule] {
        fs::create_dir_all(d).map_err(|e| Error::io(d, e))?;
    }
    for run in &outcome.runs {
        let p = tracks.join(format!("{}.txt", run.name));
        let mut buf = Vec::new();
        write_tracking_output(&run.outputs, &mut buf)?;
        fs::write(&p, buf).map_err(|e| Error::io(&p, e))?;

        let p = schedule.join(format!("{}.csv", run.name));
        let mut w = csv::Writer::from_writer(Vec::new());
        for d in &run.decisions {
            w.serialize(d).map_err(csv_err)?;
        }
        let bytes = w.into_inner().map_err(|e| Error::config("output_dir", e.to_string()))?;
        fs::write(&p, bytes).map_err(|e| Error::io(&p, e))?;
    }
    write_reports(dir, std::slice::from_ref(&outcome.report))
}

fn csv_err(e: csv::Error) -> Error {
    Error::config("output_dir", format!("csv: {e}"))
}

pub fn reports_csv(rows: &[MetricsReport]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r).map_err(csv_err)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::config("output_dir", e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

pub fn reports_json(rows: &[MetricsReport]) -> String {
    serde_json::to_string_pretty(rows).expect("reports serialize")
}

pub fn write_reports(dir: &Path, rows: &[MetricsReport]) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let p = dir.join("report.csv");
    fs::write(&p, reports_csv(rows)?).map_err(|e| Error::io(&p, e))?;
    let p = dir.join("report.json");
    fs::write(&p, reports_json(rows) + "\n").map_err(|e| Error::io(&p, e))?;
    let p = dir.join("report.txt");
    fs::write(&p, format_table(rows)).map_err(|e| Error::io(&p, e))
}

fn opt(v: Option<f64>, prec: usize) -> String {
    v.map_or_else(|| "-".into(), |v| format!("{v:.prec$}"))
}

/// Aligned text table in the layout of the published results.
pub fn format_table(rows: &[MetricsReport]) -> String {
    let mut out = format!(
        "{:<14} {:>7} {:>7} {:>7} {:>7} {:>7} {:>7} {:>5} {:>6} {:>5} {:>8} {:>7}\n",
        "setting", "eff%", "MOTA", "MOTP", "HOTA", "DetA", "AssA", "IDSW", "FP", "FN", "draw_W", "yield"
    );
    for r in rows {
        let _ = writeln!(
            out,
            "{:<14} {:>7.1} {:>7} {:>7.1} {:>7.1} {:>7.1} {:>7.1} {:>5} {:>6} {:>5} {:>8.1} {:>7}",
            r.label,
            100.0 * r.eff_target,
            opt(r.mota, 1),
            r.motp,
            r.hota,
            r.det_a,
            r.ass_a,
            r.idsw,
            r.fp,
            r.fn_,
            r.sys_draw_w,
            opt(r.yield_w_per_hota, 1),
        );
    }
    out
}

/// A single configuration, with yield against a full-rate reference run.
pub fn cmd_run(config: &RunConfig) -> Result<RunOutcome> {
    let seqs = load_input(config)?;
    let profile = resolve_profile(&config.profile)?;
    pool(config.workers)?.install(|| {
        let mut outcome = run_setting(
            &seqs,
            &config.tracker,
            &config.scheduler,
            &config.matching,
            &profile,
            config.camera_always_on,
        )?;
        if config.scheduler.n != config.scheduler.m {
            let full = SchedulerConfig {
                n: 1,
                m: 1,
                ..config.scheduler.clone()
            };
            let reference = run_setting(&seqs, &config.tracker, &full, &config.matching, &profile, config.camera_always_on)?;
            attach_yield(&mut outcome.report, &reference.report);
        }
        if let Some(dir) = &config.output_dir {
            write_artifacts(dir, &outcome)?;
        }
        Ok(outcome)
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TriggerMode {
    On,
    Off,
    Both,
}

impl std::str::FromStr for TriggerMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "on" => Ok(Self::On),
            "off" => Ok(Self::Off),
            "both" => Ok(Self::Both),
            _ => Err(Error::config("trigger", format!("expected on, off or both, got `{s}`"))),
        }
    }
}

/// Scheduler settings a sweep evaluates, in table order. The full-rate
/// target appears once since the trigger cannot add frames to it.
pub fn sweep_settings(base: &SchedulerConfig, targets: &[(u32, u32)], trigger: TriggerMode) -> Vec<SchedulerConfig> {
    let modes: &[bool] = match trigger {
        TriggerMode::On => &[true],
        TriggerMode::Off => &[false],
        TriggerMode::Both => &[false, true],
    };
    let mut out = Vec::new();
    for &(n, m) in targets {
        let per_target: &[bool] = if n == m { &modes[..1] } else { modes };
        for &on in per_target {
            out.push(SchedulerConfig {
                n,
                m,
                event_trigger_enabled: on,
                ..base.clone()
            });
        }
    }
    out
}

/// One report row per (target, trigger mode), with yield against the
/// full-rate row.
pub fn sweep(
    seqs: &[SequenceData],
    config: &RunConfig,
    profile: &EnergyProfile,
    targets: &[(u32, u32)],
    trigger: TriggerMode,
) -> Result<Vec<RunOutcome>> {
    if targets.is_empty() {
        return Err(Error::config("targets", "need at least one processing target"));
    }
    let settings = sweep_settings(&config.scheduler, targets, trigger);
    for s in &settings {
        s.validate()?;
    }
    let has_full = settings.iter().any(|s| s.n == s.m);
    let mut all = settings.clone();
    if !has_full {
        all.push(SchedulerConfig {
            n: 1,
            m: 1,
            ..config.scheduler.clone()
        });
    }
    let mut outcomes: Vec<RunOutcome> = all
        .par_iter()
        .map(|s| run_setting(seqs, &config.tracker, s, &config.matching, profile, config.camera_always_on))
        .collect::<Result<_>>()?;
    let reference = outcomes
        .iter()
        .find(|o| o.report.n == o.report.m)
        .map(|o| o.report.clone())
        .expect("full-rate run present");
    if !has_full {
        outcomes.pop();
    }
    for o in &mut outcomes {
        attach_yield(&mut o.report, &reference);
    }
    Ok(outcomes)
}

pub fn cmd_sweep(config: &RunConfig, targets: &[(u32, u32)], trigger: TriggerMode) -> Result<Vec<MetricsReport>> {
    let seqs = load_input(config)?;
    let profile = resolve_profile(&config.profile)?;
    let outcomes = pool(config.workers)?.install(|| sweep(&seqs, config, &profile, targets, trigger))?;
    if let Some(dir) = &config.output_dir {
        for o in &outcomes {
            write_artifacts(&dir.join(o.report.label.replace('%', "pct").replace('+', "_")), o)?;
        }
    }
    let rows: Vec<MetricsReport> = outcomes.into_iter().map(|o| o.report).collect();
    if let Some(dir) = &config.output_dir {
        write_reports(dir, &rows)?;
    }
    Ok(rows)
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
struct Observation {
    effective_target: f64,
    watts: f64,
}

/// Reads `effective_target,watts` CSV rows (with header).
pub fn read_observations(path: &Path) -> Result<Vec<(f64, f64)>> {
    let mut r = csv::Reader::from_path(path).map_err(|e| Error::config("observations", format!("{}: {e}", path.display())))?;
    r.deserialize::<Observation>()
        .enumerate()
        .map(|(i, row)| {
            row.map(|o| (o.effective_target, o.watts))
                .map_err(|e| Error::parse(i + 2, "observations", e.to_string()))
        })
        .collect()
}

/// Human-readable fit summary.
pub fn format_fit(fit: &FitResult, observations: &[(f64, f64)]) -> String {
    let mut out = format!(
        "model {}: draw = {:.3} W + {:.3} W x target ({:?})\n",
        fit.profile.model_id, fit.intercept, fit.slope, fit.method
    );
    for (&(t, w), r) in observations.iter().zip(&fit.residuals) {
        let _ = writeln!(out, "  target {t:.3}: observed {w:.1} W, residual {r:+.2} W");
    }
    let _ = writeln!(out, "  max |residual| {:.2} W", fit.max_abs_residual());
    out
}

/// Fits a profile to an observations file; writes `<out>` (profile JSON)
/// and `<out>.residuals.txt`.
pub fn cmd_calibrate(observations: &Path, model: ModelId, method: FitMethod, out: &Path) -> Result<FitResult> {
    let obs = read_observations(observations)?;
    let fit = fit_profile(model, &obs, method)?;
    if let Some(parent) = out.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    fs::write(out, fit.profile.to_json() + "\n").map_err(|e| Error::io(out, e))?;
    let mut report = out.as_os_str().to_owned();
    report.push(".residuals.txt");
    let report = PathBuf::from(report);
    fs::write(&report, format_fit(&fit, &obs)).map_err(|e| Error::io(&report, e))?;
    Ok(fit)
}

/// Generates a scenario and writes it as a dataset directory.
pub fn cmd_gen(spec_path: &Path, out_dir: &Path) -> Result<Scenario> {
    let spec = load_scenario_spec(spec_path)?;
    let scenario = generate(&spec)?;
    write_scenario(out_dir, &scenario)?;
    Ok(scenario)
}

/// Published baseline processing targets.
pub const BASELINE_TARGETS: [(u32, u32); 5] = crate::energy::reference::BASELINE_TARGETS;

//! Command-line front end. Flags override the config file, which overrides
//! defaults; the effective configuration is printed before any results.
//! Exit status: 0 clean, 1 on warnings, 2 on errors.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use framedrop::energy::{FitMethod, ModelId};
use framedrop::experiment::{
    cmd_calibrate, cmd_gen, cmd_run, cmd_sweep, format_fit, format_table, read_observations, RunConfig, TriggerMode,
    BASELINE_TARGETS,
};
use framedrop::tracker::TrackerVariant;
use framedrop::Result;

#[derive(Parser)]
#[command(name = "framedrop", version, about = "Energy-aware frame dropping for tracking-by-detection")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one scheduler configuration and report metrics, draw and yield.
    Run {
        #[command(flatten)]
        common: CommonArgs,
        /// Event trigger override.
        #[arg(long, value_parser = ["on", "off"])]
        trigger: Option<String>,
    },
    /// Sweep processing targets with and/or without the event trigger.
    Sweep {
        #[command(flatten)]
        common: CommonArgs,
        /// Comma-separated n/m targets; defaults to 1/1,1/2,1/3,1/5,1/10.
        #[arg(long, value_delimiter = ',', value_parser = parse_target)]
        targets: Vec<(u32, u32)>,
        #[arg(long, default_value = "both")]
        trigger: TriggerMode,
    },
    /// Fit an energy profile to `effective_target,watts` observations.
    Calibrate {
        observations: PathBuf,
        #[arg(long)]
        model: ModelId,
        #[arg(long, default_value = "least-squares")]
        method: FitMethod,
        /// Profile JSON to write; residuals go next to it.
        #[arg(long)]
        out: PathBuf,
    },
    /// Generate a synthetic scenario as a dataset directory.
    Gen {
        spec: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Args)]
struct CommonArgs {
    /// TOML run configuration.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, conflicts_with = "scenario")]
    dataset: Option<PathBuf>,
    #[arg(long)]
    scenario: Option<PathBuf>,
    #[arg(long)]
    output_dir: Option<PathBuf>,
    /// Model id or profile JSON path.
    #[arg(long)]
    profile: Option<String>,
    #[arg(long)]
    variant: Option<TrackerVariant>,
    #[arg(long)]
    n: Option<u32>,
    #[arg(long)]
    m: Option<u32>,
    #[arg(long)]
    d_max: Option<f64>,
    #[arg(long)]
    iou_min: Option<f64>,
    #[arg(long)]
    camera_latency: Option<u32>,
    #[arg(long)]
    workers: Option<usize>,
}

fn parse_target(s: &str) -> std::result::Result<(u32, u32), String> {
    let (n, m) = s.split_once('/').ok_or_else(|| format!("expected n/m, got `{s}`"))?;
    let parse = |v: &str| v.trim().parse::<u32>().map_err(|e| format!("`{v}`: {e}"));
    Ok((parse(n)?, parse(m)?))
}

impl CommonArgs {
    fn resolve(self) -> Result<RunConfig> {
        let mut c = match &self.config {
            Some(p) => RunConfig::load(p)?,
            None => RunConfig::default(),
        };
        if self.dataset.is_some() {
            c.dataset = self.dataset;
            c.scenario = None;
        }
        if self.scenario.is_some() {
            c.scenario = self.scenario;
            c.dataset = None;
        }
        c.output_dir = self.output_dir.or(c.output_dir);
        if let Some(p) = self.profile {
            c.profile = p;
        }
        if let Some(v) = self.variant {
            c.tracker.variant = v;
        }
        if let Some(n) = self.n {
            c.scheduler.n = n;
        }
        if let Some(m) = self.m {
            c.scheduler.m = m;
        }
        if let Some(d) = self.d_max {
            c.scheduler.d_max = d;
        }
        if let Some(i) = self.iou_min {
            c.scheduler.iou_min = i;
        }
        if let Some(l) = self.camera_latency {
            c.scheduler.camera_latency_frames = l;
        }
        if let Some(w) = self.workers {
            c.workers = w;
        }
        c.validate()?;
        Ok(c)
    }
}

/// Runs a command; returns warnings to report.
fn execute(command: Command) -> Result<Vec<String>> {
    let mut warnings = Vec::new();
    match command {
        Command::Run { common, trigger } => {
            let mut config = common.resolve()?;
            if let Some(t) = trigger {
                config.scheduler.event_trigger_enabled = t == "on";
            }
            print!("{}", config.banner());
            let outcome = cmd_run(&config)?;
            print!("{}", format_table(std::slice::from_ref(&outcome.report)));
            if outcome.report.numerical_failures > 0 {
                warnings.push(format!(
                    "{} Kalman updates failed numerically and kept their predicted state",
                    outcome.report.numerical_failures
                ));
            }
        }
        Command::Sweep { common, targets, trigger } => {
            let config = common.resolve()?;
            let targets = if targets.is_empty() { BASELINE_TARGETS.to_vec() } else { targets };
            print!("{}", config.banner());
            let rows = cmd_sweep(&config, &targets, trigger)?;
            print!("{}", format_table(&rows));
            for r in rows.iter().filter(|r| r.numerical_failures > 0) {
                warnings.push(format!("{}: {} numerical failures", r.label, r.numerical_failures));
            }
            for r in rows.iter().filter(|r| r.n != r.m && r.yield_w_per_hota.is_none()) {
                warnings.push(format!("{}: yield undefined (HOTA equals the full-rate run)", r.label));
            }
        }
        Command::Calibrate {
            observations,
            model,
            method,
            out,
        } => {
            let fit = cmd_calibrate(&observations, model, method, &out)?;
            print!("{}", format_fit(&fit, &read_observations(&observations)?));
            println!("wrote {}", out.display());
        }
        Command::Gen { spec, out } => {
            let s = cmd_gen(&spec, &out)?;
            println!(
                "wrote {} ({} frames, {} label rows) to {}",
                s.name,
                s.frames,
                s.labels.len(),
                out.display()
            );
        }
    }
    Ok(warnings)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli.command) {
        Ok(w) if w.is_empty() => ExitCode::SUCCESS,
        Ok(w) => {
            for msg in w {
                eprintln!("warning: {msg}");
            }
            ExitCode::from(1)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}

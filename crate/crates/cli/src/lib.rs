//! Command implementations behind the `memsched` binary.
//!
//! Data goes to stdout (or `--out`), diagnostics go to the log on stderr. Report bodies carry no
//! timestamps, so a given input always produces byte-identical output.

use std::fmt::Write as _;
use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use thiserror::Error;

use memsched::model::{self, Policy};
use memsched::profiles::{self, PlatformProfile, Workload};
use memsched::sim::{self, Mode, PairingRule, SimReport, Timeline};
use memsched::{ProfileError, SimError};

#[derive(Debug, Parser)]
#[command(name = "memsched", version, about = "GPU memory-management policy prediction and co-scheduling simulation")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Per-task overheads under each policy and the best policy.
    Predict(ModelArgs),
    /// Guideline-driven policy assignment table.
    Assign(ModelArgs),
    /// Simulate a workload and write the report and timeline.
    Simulate(SimulateArgs),
    /// Fit copy startup time and per-byte rate from `bytes,ms` samples.
    Fit(FitArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Structured,
}

impl Format {
    fn extension(self) -> &'static str {
        match self {
            Format::Csv => "csv",
            Format::Structured => "json",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    Default,
    Mo,
    Co,
}

impl From<ModeArg> for Mode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Default => Mode::Default,
            ModeArg::Mo => Mode::MemoryOptimized,
            ModeArg::Co => Mode::CoOptimized,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum PairingArg {
    ExecOnly,
    FullResponse,
}

impl From<PairingArg> for PairingRule {
    fn from(p: PairingArg) -> Self {
        match p {
            PairingArg::ExecOnly => PairingRule::ExecOnly,
            PairingArg::FullResponse => PairingRule::FullResponse,
        }
    }
}

#[derive(Debug, Args)]
pub struct ModelArgs {
    #[arg(long)]
    pub platform: PathBuf,
    #[arg(long)]
    pub workload: PathBuf,
    #[arg(long, value_enum, default_value = "csv")]
    pub format: Format,
    /// Write to this file instead of stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[arg(long)]
    pub platform: PathBuf,
    #[arg(long)]
    pub workload: PathBuf,
    #[arg(long, value_enum, required_unless_present = "compare")]
    pub mode: Option<ModeArg>,
    #[arg(long, value_enum, default_value = "full-response")]
    pub pairing: PairingArg,
    #[arg(long, value_enum, default_value = "csv")]
    pub format: Format,
    /// Directory receiving `report.<ext>` and `timeline.<ext>`; the report goes to stdout
    /// when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Run all three modes and print a side-by-side table.
    #[arg(long)]
    pub compare: bool,
}

#[derive(Debug, Args)]
pub struct FitArgs {
    #[arg(long = "fit-input")]
    pub fit_input: PathBuf,
    #[arg(long, value_enum, default_value = "csv")]
    pub format: Format,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error(transparent)]
    Profile(#[from] ProfileError),
    #[error(transparent)]
    Sim(#[from] SimError),
}

impl CliError {
    fn io(path: &Path, source: io::Error) -> Self {
        CliError::Io { path: path.to_path_buf(), source }
    }

    /// Short machine-readable category.
    pub fn kind(&self) -> &'static str {
        match self {
            CliError::Io { .. } => "io",
            CliError::Profile(e) if e.is_parse_error() => "parse",
            CliError::Profile(_) | CliError::Sim(_) => "invariant",
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self.kind() {
            "parse" => exit::PARSE,
            "invariant" => exit::INVARIANT,
            _ => exit::IO,
        }
    }
}

/// Process exit statuses. Usage errors use clap's status 2.
pub mod exit {
    pub const OK: i32 = 0;
    pub const PARSE: i32 = 3;
    pub const INVARIANT: i32 = 4;
    pub const OOM: i32 = 5;
    pub const IO: i32 = 6;
}

/// Outcome of a command that completed and wrote its artifact.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    Ok,
    /// A simulation exceeded the memory pool; the report was still written.
    OutOfMemory,
}

impl Outcome {
    pub fn exit_code(self) -> i32 {
        match self {
            Outcome::Ok => exit::OK,
            Outcome::OutOfMemory => exit::OOM,
        }
    }
}

fn read(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|e| CliError::io(path, e))
}

fn write_file(path: &Path, body: &str) -> Result<(), CliError> {
    fs::write(path, body).map_err(|e| CliError::io(path, e))
}

fn emit(out: Option<&Path>, body: &str, stdout: &mut dyn Write) -> Result<(), CliError> {
    match out {
        Some(path) => write_file(path, body),
        None => stdout.write_all(body.as_bytes()).map_err(|e| CliError::io(Path::new("<stdout>"), e)),
    }
}

fn load_inputs(platform: &Path, workload: &Path) -> Result<(PlatformProfile, Workload), CliError> {
    let p = profiles::load_platform_profile(&read(platform)?)?;
    let w = profiles::load_workload(&read(workload)?)?;
    Ok((p, w))
}

fn json(value: &impl serde::Serialize) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("serializable output");
    s.push('\n');
    s
}

pub fn run(cli: &Cli, stdout: &mut dyn Write) -> Result<Outcome, CliError> {
    match &cli.command {
        Command::Predict(args) => predict(args, stdout),
        Command::Assign(args) => assign(args, stdout),
        Command::Simulate(args) => simulate(args, stdout),
        Command::Fit(args) => fit(args, stdout),
    }
}

fn predict(args: &ModelArgs, stdout: &mut dyn Write) -> Result<Outcome, CliError> {
    let (p, w) = load_inputs(&args.platform, &args.workload)?;
    let rows: Vec<(String, Policy, model::PolicyOverheads)> = w
        .tasks
        .iter()
        .map(|t| {
            let (best, ov) = model::best_policy(t, &p);
            (t.name.clone(), best, ov)
        })
        .collect();
    let body = match args.format {
        Format::Csv => {
            let mut s = String::from("task,o_d_ms,o_m_ms,o_h_ms,idle_ms,best\n");
            for (name, best, ov) in &rows {
                let _ = writeln!(s, "{name},{},{},{},{},{best}", ov.o_d, ov.o_m, ov.o_h, ov.idle);
            }
            s
        }
        Format::Structured => {
            let items: Vec<serde_json::Value> = rows
                .iter()
                .map(|(name, best, ov)| {
                    serde_json::json!({
                        "task": name,
                        "o_d_ms": ov.o_d,
                        "o_m_ms": ov.o_m,
                        "o_h_ms": ov.o_h,
                        "idle_ms": ov.idle,
                        "best": best.short_name(),
                    })
                })
                .collect();
            json(&items)
        }
    };
    emit(args.out.as_deref(), &body, stdout)?;
    Ok(Outcome::Ok)
}

fn assign(args: &ModelArgs, stdout: &mut dyn Write) -> Result<Outcome, CliError> {
    let (p, w) = load_inputs(&args.platform, &args.workload)?;
    let assignment = memsched::assign_policies(&w.tasks, &p);
    let body = match args.format {
        Format::Csv => assignment.to_csv(),
        Format::Structured => json(&assignment),
    };
    emit(args.out.as_deref(), &body, stdout)?;
    Ok(Outcome::Ok)
}

fn render_report(report: &SimReport, format: Format) -> String {
    match format {
        Format::Csv => report.to_csv(),
        Format::Structured => {
            let mut s = report.to_json();
            s.push('\n');
            s
        }
    }
}

fn render_timeline(timeline: &Timeline, format: Format) -> String {
    match format {
        Format::Csv => timeline.to_csv(),
        Format::Structured => {
            let mut s = timeline.to_json();
            s.push('\n');
            s
        }
    }
}

fn create_dir(dir: &Path) -> Result<(), CliError> {
    fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))
}

fn simulate(args: &SimulateArgs, stdout: &mut dyn Write) -> Result<Outcome, CliError> {
    let (p, w) = load_inputs(&args.platform, &args.workload)?;
    let pairing = PairingRule::from(args.pairing);
    let ext = args.format.extension();

    if args.compare {
        let runs: Vec<Result<(Timeline, SimReport), SimError>> = std::thread::scope(|scope| {
            let handles: Vec<_> = Mode::ALL
                .iter()
                .map(|&mode| {
                    let (p, w) = (&p, &w);
                    scope.spawn(move || sim::simulate(&w.tasks, &w.trace, p, mode, pairing))
                })
                .collect();
            handles.into_iter().map(|h| h.join().expect("simulation thread panicked")).collect()
        });
        let runs = runs.into_iter().collect::<Result<Vec<_>, _>>()?;
        let table = compare_table(&runs, args.format);
        if let Some(dir) = &args.out {
            create_dir(dir)?;
            for (timeline, report) in &runs {
                let mode = report.mode.name();
                write_file(&dir.join(format!("report_{mode}.{ext}")), &render_report(report, args.format))?;
                write_file(
                    &dir.join(format!("timeline_{mode}.{ext}")),
                    &render_timeline(timeline, args.format),
                )?;
            }
            write_file(&dir.join(format!("compare.{ext}")), &table)?;
        } else {
            emit(None, &table, stdout)?;
        }
        for (_, r) in &runs {
            log::info!("mode={} makespan_ms={} oom={}", r.mode, r.makespan, r.oom);
        }
        let oom = runs.iter().any(|(_, r)| r.oom);
        return Ok(if oom { Outcome::OutOfMemory } else { Outcome::Ok });
    }

    let mode = Mode::from(args.mode.expect("clap enforces --mode without --compare"));
    let (timeline, report) = sim::simulate(&w.tasks, &w.trace, &p, mode, pairing)?;
    log::info!(
        "simulated {} jobs in mode {mode}: makespan_ms={} segments={}",
        report.responses.len(),
        report.makespan,
        timeline.segments.len()
    );
    let violations = sim::validate_timeline(&timeline);
    for v in &violations {
        log::error!("timeline violation: {v}");
    }
    match &args.out {
        Some(dir) => {
            create_dir(dir)?;
            write_file(&dir.join(format!("report.{ext}")), &render_report(&report, args.format))?;
            write_file(&dir.join(format!("timeline.{ext}")), &render_timeline(&timeline, args.format))?;
        }
        None => emit(None, &render_report(&report, args.format), stdout)?,
    }
    if let Some(at) = report.oom_at {
        log::warn!("shared memory exceeded at t={at} ms (peak {} bytes)", report.peak_memory);
        return Ok(Outcome::OutOfMemory);
    }
    Ok(Outcome::Ok)
}

fn compare_table(runs: &[(Timeline, SimReport)], format: Format) -> String {
    match format {
        Format::Csv => {
            let mut s = String::from("mode,makespan_ms,peak_memory_bytes,gpu_utilization,oom\n");
            for (_, r) in runs {
                let _ = writeln!(
                    s,
                    "{},{},{},{},{}",
                    r.mode, r.makespan, r.peak_memory, r.gpu_utilization, r.oom
                );
            }
            s
        }
        Format::Structured => {
            let rows: Vec<serde_json::Value> = runs
                .iter()
                .map(|(_, r)| {
                    serde_json::json!({
                        "mode": r.mode.name(),
                        "makespan_ms": r.makespan,
                        "peak_memory_bytes": r.peak_memory,
                        "gpu_utilization": r.gpu_utilization,
                        "oom": r.oom,
                    })
                })
                .collect();
            json(&rows)
        }
    }
}

fn fit(args: &FitArgs, stdout: &mut dyn Write) -> Result<Outcome, CliError> {
    let samples = profiles::load_samples_csv(&read(&args.fit_input)?)?;
    let fit = profiles::fit_transfer_params(&samples)?;
    let body = match args.format {
        Format::Csv => format!(
            "tr_ini_ms,rate_ms_per_byte,clamped\n{},{},{}\n",
            fit.tr_ini, fit.rate, fit.clamped
        ),
        Format::Structured => json(&serde_json::json!({
            "tr_ini_ms": fit.tr_ini,
            "rate_ms_per_byte": fit.rate,
            "clamped": fit.clamped,
        })),
    };
    emit(args.out.as_deref(), &body, stdout)?;
    Ok(Outcome::Ok)
}

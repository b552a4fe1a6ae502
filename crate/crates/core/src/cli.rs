//! The `unwind-sim` command line.
//!
//! JSON goes to standard output, diagnostics to standard error. Exit codes:
//! 0 success, 1 usage or I/O error, 2 no path, 3 stuck or timed out,
//! 4 verification failure.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::analysis::{audit_logged, audit_run, mean_head_deviation, HeadDeviation};
use crate::export::ViewerBundle;
use crate::geometry::ViewMode;
use crate::io::to_json_line;
use crate::planner::{plan_theta_star, PlanError};
use crate::simulator::{
    apply_head_trace, replay_verify, run_scenario, view_samples_json, HeadTrace, ReplayLog, RunConfig,
    TerminationKind,
};
use crate::stats::{
    clopper_pearson_ci, exact_binomial_test, mann_whitney_u, paired_t_test, wilcoxon_signed_rank, TestKind,
    TestResult,
};
use crate::world::{OccupancyGrid, Point2, Scenario, GRID_FORMAT, SCENARIO_FORMAT};

pub const EXIT_OK: u8 = 0;
pub const EXIT_USAGE: u8 = 1;
pub const EXIT_NO_PATH: u8 = 2;
pub const EXIT_NOT_REACHED: u8 = 3;
pub const EXIT_VERIFY: u8 = 4;

#[derive(Debug, Parser)]
#[command(name = "unwind-sim", version, about = "Telepresence robot rotation-unwinding simulator")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Plan an any-angle path on a grid or scenario map.
    Plan {
        #[arg(long)]
        map: PathBuf,
        #[arg(long, value_parser = parse_point)]
        start: Point2,
        #[arg(long, value_parser = parse_point)]
        goal: Point2,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run scenarios and write replay logs. Repeat --scenario/--out for a
    /// batch.
    Simulate {
        #[arg(long, required = true)]
        scenario: Vec<PathBuf>,
        #[arg(long)]
        config: PathBuf,
        #[arg(long, value_parser = parse_mode)]
        mode: ViewMode,
        #[arg(long, required = true)]
        out: Vec<PathBuf>,
        /// Runs executed in parallel.
        #[arg(long, default_value_t = 1)]
        jobs: usize,
    },
    /// Audit a replay and compute head deviation under a head trace.
    Analyze {
        #[arg(long)]
        replay: PathBuf,
        /// still[:YAW] | follow[:TAU] | sin:AMP,PERIOD | trace:PATH
        #[arg(long, default_value = "still")]
        head: String,
        #[arg(long)]
        out: PathBuf,
        /// Recompute clearances from this scenario instead of trusting the log.
        #[arg(long)]
        scenario: Option<PathBuf>,
        /// With --scenario, re-run the simulation and require identical bytes.
        #[arg(long, requires = "scenario")]
        config: Option<PathBuf>,
        /// Also write the viewsamples/1 comparison file.
        #[arg(long)]
        views: Option<PathBuf>,
    },
    /// Run a statistical test on CSV columns.
    Stats {
        #[arg(long, value_enum)]
        test: StatTest,
        #[arg(long)]
        input: Option<PathBuf>,
        #[arg(long)]
        k: Option<u64>,
        #[arg(long)]
        n: Option<u64>,
        #[arg(long, default_value_t = 0.5)]
        p0: f64,
        #[arg(long, default_value_t = 0.95)]
        confidence: f64,
    },
    /// Write the viewer bundle for a replay.
    Export {
        #[arg(long)]
        replay: PathBuf,
        #[arg(long)]
        scenario: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum StatTest {
    Binomial,
    Cp,
    Wilcoxon,
    Mwu,
    Ttest,
}

fn parse_point(s: &str) -> Result<Point2, String> {
    let (x, y) = s.split_once(',').ok_or_else(|| format!("expected X,Y, got '{s}'"))?;
    let num = |v: &str| v.trim().parse::<f64>().map_err(|_| format!("bad coordinate '{v}'"));
    Ok(Point2::new(num(x)?, num(y)?))
}

fn parse_mode(s: &str) -> Result<ViewMode, String> {
    s.parse::<ViewMode>().map_err(|e| e.to_string())
}

/// A command that did not succeed: exit code plus message for stderr.
#[derive(Debug)]
pub struct Failure {
    pub code: u8,
    pub message: String,
}

impl Failure {
    fn new(code: u8, message: impl Into<String>) -> Self {
        Self { code, message: message.into() }
    }

    fn usage(message: impl std::fmt::Display) -> Self {
        Self::new(EXIT_USAGE, message.to_string())
    }
}

fn read(path: &Path) -> Result<String, Failure> {
    std::fs::read_to_string(path).map_err(|e| Failure::usage(format!("{}: {e}", path.display())))
}

fn write(path: &Path, text: &str) -> Result<(), Failure> {
    std::fs::write(path, text).map_err(|e| Failure::usage(format!("{}: {e}", path.display())))
}

fn load_scenario(path: &Path) -> Result<Scenario, Failure> {
    Scenario::from_json(&read(path)?).map_err(|e| Failure::usage(format!("{}: {e}", path.display())))
}

fn load_config(path: &Path) -> Result<RunConfig, Failure> {
    RunConfig::from_json(&read(path)?).map_err(|e| Failure::usage(format!("{}: {e}", path.display())))
}

/// A `grid/1` file or the grid of a `scenario/1` file.
fn load_map(path: &Path) -> Result<OccupancyGrid, Failure> {
    let text = read(path)?;
    let err = |e: crate::Error| Failure::usage(format!("{}: {e}", path.display()));
    let value: serde_json::Value = serde_json::from_str(&text).map_err(|e| err(e.into()))?;
    match value.get("format").and_then(|f| f.as_str()) {
        Some(SCENARIO_FORMAT) => Ok(Scenario::from_json(&text).map_err(err)?.grid),
        Some(GRID_FORMAT) => OccupancyGrid::from_json(&text).map_err(err),
        other => Err(Failure::usage(format!(
            "{}: expected a {GRID_FORMAT} or {SCENARIO_FORMAT} document, found {other:?}",
            path.display()
        ))),
    }
}

/// Parses arguments and runs the command, writing JSON to `out` and
/// diagnostics to `err`. Returns the process exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = write!(err, "{e}");
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    match execute(cli.command, out) {
        Ok(code) => code,
        Err(f) => {
            let _ = writeln!(err, "unwind-sim: {}", f.message);
            f.code
        }
    }
}

pub fn execute(command: Command, out: &mut dyn Write) -> Result<u8, Failure> {
    match command {
        Command::Plan { map, start, goal, out: path } => cmd_plan(&map, start, goal, &path, out),
        Command::Simulate { scenario, config, mode, out: paths, jobs } => {
            cmd_simulate(&scenario, &config, mode, &paths, jobs, out)
        }
        Command::Analyze { replay, head, out: path, scenario, config, views } => cmd_analyze(
            &replay,
            &head,
            &path,
            scenario.as_deref(),
            config.as_deref(),
            views.as_deref(),
            out,
        ),
        Command::Stats { test, input, k, n, p0, confidence } => {
            cmd_stats(test, input.as_deref(), k, n, p0, confidence, out)
        }
        Command::Export { replay, scenario, out: path } => cmd_export(&replay, &scenario, &path, out),
    }
}

fn emit(out: &mut dyn Write, text: &str) -> Result<(), Failure> {
    out.write_all(text.as_bytes()).map_err(Failure::usage)
}

pub fn cmd_plan(map: &Path, start: Point2, goal: Point2, path: &Path, out: &mut dyn Write) -> Result<u8, Failure> {
    let grid = load_map(map)?;
    match plan_theta_star(&grid, start, goal) {
        Ok(p) => {
            let text = p.to_json();
            write(path, &text)?;
            emit(out, &text)?;
            Ok(EXIT_OK)
        }
        Err(PlanError::NoPath) => Err(Failure::new(EXIT_NO_PATH, "no path between start and goal")),
        Err(e) => Err(Failure::usage(e)),
    }
}

fn exit_code_for(kind: TerminationKind) -> u8 {
    match kind {
        TerminationKind::GoalReached => EXIT_OK,
        TerminationKind::NoPath => EXIT_NO_PATH,
        TerminationKind::Stuck | TerminationKind::Timeout => EXIT_NOT_REACHED,
    }
}

pub fn cmd_simulate(
    scenarios: &[PathBuf],
    config: &Path,
    mode: ViewMode,
    paths: &[PathBuf],
    jobs: usize,
    out: &mut dyn Write,
) -> Result<u8, Failure> {
    if scenarios.len() != paths.len() {
        return Err(Failure::usage(format!(
            "{} --scenario but {} --out arguments",
            scenarios.len(),
            paths.len()
        )));
    }
    let config = load_config(config)?;
    let loaded = scenarios.iter().map(|p| load_scenario(p)).collect::<Result<Vec<_>, _>>()?;

    // runs are independent; results are reported in argument order
    let next = AtomicUsize::new(0);
    let results: Mutex<Vec<Option<Result<ReplayLog, Failure>>>> =
        Mutex::new((0..loaded.len()).map(|_| None).collect());
    std::thread::scope(|scope| {
        for _ in 0..jobs.clamp(1, loaded.len().max(1)) {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                let Some(s) = loaded.get(i) else { break };
                let r = run_scenario(s, &config, mode).map_err(Failure::usage);
                results.lock().expect("no panics while holding the lock")[i] = Some(r);
            });
        }
    });

    let mut code = EXIT_OK;
    let mut diagnostics = Vec::new();
    for (result, path) in results.into_inner().expect("threads joined").into_iter().zip(paths) {
        let log = result.expect("every run completes")?;
        write(path, &log.to_json())?;
        emit(out, &to_json_line(&log.footer))?;
        let c = exit_code_for(log.footer.termination.kind);
        if c != EXIT_OK {
            diagnostics.push(format!(
                "{}: run ended with {:?} after {} steps",
                path.display(),
                log.footer.termination.kind,
                log.footer.termination.step
            ));
        }
        code = code.max(c);
    }
    if code == EXIT_OK {
        Ok(code)
    } else {
        Err(Failure::new(code, diagnostics.join("\n")))
    }
}

fn parse_head(spec: &str) -> Result<HeadTrace, Failure> {
    match spec.strip_prefix("trace:") {
        Some(file) => {
            let path = Path::new(file);
            HeadTrace::from_json(&read(path)?).map_err(|e| Failure::usage(format!("{}: {e}", path.display())))
        }
        None => HeadTrace::parse_spec(spec).map_err(Failure::usage),
    }
}

pub fn cmd_analyze(
    replay: &Path,
    head: &str,
    path: &Path,
    scenario: Option<&Path>,
    config: Option<&Path>,
    views: Option<&Path>,
    out: &mut dyn Write,
) -> Result<u8, Failure> {
    let head_trace = parse_head(head)?;
    let text = read(replay)?;
    let verify = |m: String| Failure::new(EXIT_VERIFY, format!("{}: {m}", replay.display()));
    let log = ReplayLog::from_json(&text).map_err(|e| verify(e.to_string()))?;
    log.check_consistency().map_err(|e| verify(e.to_string()))?;

    let mut audit = match scenario {
        Some(sp) => {
            let s = load_scenario(sp)?;
            if log.header.scenario_hash != s.hash() {
                return Err(verify("scenario hash does not match the replay header".into()));
            }
            if let Some(cp) = config {
                let report = replay_verify(&log, &s, &load_config(cp)?).map_err(|e| verify(e.to_string()))?;
                if !report.identical {
                    return Err(verify(format!(
                        "re-run diverges at step {:?}",
                        report.first_divergent_step
                    )));
                }
            }
            audit_run(&log, &s)
        }
        None => audit_logged(&log),
    };

    let mut all_samples = Vec::new();
    let mut dev = [0.0; 2];
    for (slot, mode) in dev.iter_mut().zip(ViewMode::BOTH) {
        let samples = apply_head_trace(&log, &head_trace, mode).map_err(Failure::usage)?;
        let robot: Vec<f64> = samples.iter().map(|s| s.robot_yaw).collect();
        let view: Vec<f64> = samples.iter().map(|s| s.world_view_yaw).collect();
        *slot = if samples.is_empty() { 0.0 } else { mean_head_deviation(&robot, &view).map_err(Failure::usage)? };
        all_samples.extend(samples);
    }
    audit.head_trace = Some(head.to_string());
    audit.mean_head_deviation = Some(HeadDeviation { unwound: dev[0], coupled: dev[1] });

    let text = audit.to_json();
    write(path, &text)?;
    if let Some(vp) = views {
        write(vp, &view_samples_json(&all_samples))?;
    }
    emit(out, &text)?;
    Ok(EXIT_OK)
}

/// Numeric columns of a CSV with a header row. Empty cells are skipped so
/// columns may differ in length.
pub fn read_columns(text: &str) -> Result<Vec<(String, Vec<f64>)>, crate::Error> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(text.as_bytes());
    let mut cols: Vec<(String, Vec<f64>)> = rdr.headers()?.iter().map(|h| (h.to_string(), Vec::new())).collect();
    for (row, rec) in rdr.records().enumerate() {
        let rec = rec?;
        for (c, cell) in rec.iter().enumerate() {
            if cell.is_empty() {
                continue;
            }
            let v = match cell {
                "true" | "TRUE" => 1.0,
                "false" | "FALSE" => 0.0,
                _ => cell.parse::<f64>().map_err(|_| {
                    crate::stats::StatsError::InvalidInput(format!("row {}: '{cell}' is not a number", row + 2))
                })?,
            };
            cols[c].1.push(v);
        }
    }
    Ok(cols)
}

fn two_columns(cols: &[(String, Vec<f64>)]) -> Result<(&[f64], &[f64]), Failure> {
    match cols {
        [(_, a), (_, b), ..] => Ok((a, b)),
        _ => Err(Failure::usage("the input needs two columns")),
    }
}

pub fn cmd_stats(
    test: StatTest,
    input: Option<&Path>,
    k: Option<u64>,
    n: Option<u64>,
    p0: f64,
    confidence: f64,
    out: &mut dyn Write,
) -> Result<u8, Failure> {
    let cols = match input {
        Some(p) => Some(read_columns(&read(p)?).map_err(|e| Failure::usage(format!("{}: {e}", p.display())))?),
        None => None,
    };
    let counts = || -> Result<(u64, u64), Failure> {
        if let (Some(k), Some(n)) = (k, n) {
            return Ok((k, n));
        }
        let cols = cols.as_ref().ok_or_else(|| Failure::usage("binomial tests need --k and --n or --input"))?;
        let (_, outcomes) = cols.first().ok_or_else(|| Failure::usage("the input has no columns"))?;
        if outcomes.iter().any(|&v| v != 0.0 && v != 1.0) {
            return Err(Failure::usage("binomial outcomes must be 0/1"));
        }
        Ok((outcomes.iter().filter(|&&v| v == 1.0).count() as u64, outcomes.len() as u64))
    };
    let pair = || -> Result<(&[f64], &[f64]), Failure> {
        two_columns(cols.as_deref().ok_or_else(|| Failure::usage("this test needs --input"))?)
    };
    let result: TestResult = match test {
        StatTest::Binomial => {
            let (k, n) = counts()?;
            exact_binomial_test(k, n, p0).map_err(Failure::usage)?
        }
        StatTest::Cp => {
            let (k, n) = counts()?;
            let mut r = exact_binomial_test(k, n, p0).map_err(Failure::usage)?;
            let (lo, hi) = clopper_pearson_ci(k, n, confidence).map_err(Failure::usage)?;
            r.test = TestKind::ClopperPearson;
            r.ci_low = Some(lo);
            r.ci_high = Some(hi);
            r
        }
        StatTest::Wilcoxon => {
            let (a, b) = pair()?;
            wilcoxon_signed_rank(a, b).map_err(Failure::usage)?
        }
        StatTest::Mwu => {
            let (a, b) = pair()?;
            mann_whitney_u(a, b).map_err(Failure::usage)?
        }
        StatTest::Ttest => {
            let (a, b) = pair()?;
            paired_t_test(a, b).map_err(Failure::usage)?
        }
    };
    emit(out, &result.to_json())?;
    Ok(EXIT_OK)
}

#[derive(Serialize)]
struct ExportSummary<'a> {
    format: &'a str,
    walls: usize,
    pedestrians: usize,
    samples: usize,
}

pub fn cmd_export(replay: &Path, scenario: &Path, path: &Path, out: &mut dyn Write) -> Result<u8, Failure> {
    let log = ReplayLog::from_json(&read(replay)?).map_err(|e| Failure::usage(format!("{}: {e}", replay.display())))?;
    let s = load_scenario(scenario)?;
    let bundle = ViewerBundle::build(&log, &s).map_err(Failure::usage)?;
    write(path, &bundle.to_json())?;
    let summary = ExportSummary {
        format: &bundle.format,
        walls: bundle.walls.len(),
        pedestrians: bundle.pedestrians.len(),
        samples: bundle.robot.x.len(),
    };
    emit(out, &to_json_line(&summary))?;
    Ok(EXIT_OK)
}

//! `visgrade`: grade D3/SVG visualization submissions against a rubric.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use visgrade_core::harness::{
    grade_batch, instructor_sidecar, render_report, write_batch_outputs, BatchOptions,
    ReportFormat, RunStatus,
};
use visgrade_core::interaction::DEFAULT_WEBDRIVER_URL;
use visgrade_core::rubric::RubricError;
use visgrade_core::{grade, load_rubric, GradeMode, GradeOptions, GradeReport, Submission};

/// Exit code for a rubric that does not load.
const EXIT_INVALID_RUBRIC: u8 = 1;
/// Exit code when the grader itself failed on at least one submission.
const EXIT_MALFUNCTION: u8 = 3;

#[derive(Parser)]
#[command(
    name = "visgrade",
    version,
    about = "Rubric-driven auto-grader for D3/SVG visualizations"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Grade one submission directory.
    Grade(GradeArgs),
    /// Grade every submission directory matching a glob.
    Batch(BatchArgs),
    /// Check that a rubric loads, without grading anything.
    Validate {
        #[arg(long)]
        rubric: PathBuf,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    Live,
    Static,
}

#[derive(Args)]
struct Common {
    #[arg(long)]
    rubric: PathBuf,
    #[arg(long, value_enum, default_value = "live")]
    mode: Mode,
    /// WebDriver endpoint used in live mode.
    #[arg(long, env = "VISGRADE_WEBDRIVER_URL", default_value = DEFAULT_WEBDRIVER_URL)]
    webdriver: String,
    /// Directory served beneath each submission (library copies, datasets).
    #[arg(long)]
    shared_assets: Option<PathBuf>,
    /// Page to grade, relative to the submission; defaults to the rubric's entry file.
    #[arg(long)]
    entry: Option<String>,
}

#[derive(Args)]
struct GradeArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long)]
    submission: PathBuf,
    /// Write the JSON report here (and instructor notes beside it).
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    screenshot: Option<PathBuf>,
    /// Print the JSON report instead of the text summary.
    #[arg(long)]
    json: bool,
}

#[derive(Args)]
struct BatchArgs {
    #[command(flatten)]
    common: Common,
    /// Glob matching submission directories, e.g. 'subs/*'.
    #[arg(long)]
    submissions: String,
    #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u16).range(1..))]
    parallelism: u16,
    #[arg(long)]
    out_dir: PathBuf,
    #[arg(long)]
    csv: PathBuf,
    /// Save live-mode screenshots here as `{id}.png`.
    #[arg(long)]
    screenshots: Option<PathBuf>,
}

fn options(common: &Common) -> GradeOptions {
    GradeOptions {
        mode: match common.mode {
            Mode::Live => GradeMode::Live,
            Mode::Static => GradeMode::Static,
        },
        webdriver_url: common.webdriver.clone(),
        shared_assets: common.shared_assets.clone(),
        ..GradeOptions::default()
    }
}

fn rubric_failure(path: &Path, e: &RubricError) -> ExitCode {
    eprintln!("{}: invalid rubric ({}): {e}", path.display(), e.class());
    ExitCode::from(EXIT_INVALID_RUBRIC)
}

fn sidecar_path(out: &Path) -> PathBuf {
    out.with_extension("instructor.txt")
}

fn run_grade(args: GradeArgs) -> Result<ExitCode> {
    let spec = match load_rubric(&args.common.rubric) {
        Ok(r) => r,
        Err(e) => return Ok(rubric_failure(&args.common.rubric, &e)),
    };
    let entry = args
        .common
        .entry
        .clone()
        .unwrap_or_else(|| spec.meta.entry_file.clone());
    let sub = Submission::open(&args.submission, &entry)
        .with_context(|| format!("cannot grade {}", args.submission.display()))?;
    let mut opts = options(&args.common);
    opts.screenshot_path = args.screenshot.clone();
    let report = grade(&sub, &spec, &opts);
    if let Some(out) = &args.out {
        fs::write(out, render_report(&report, ReportFormat::Json))
            .with_context(|| format!("cannot write {}", out.display()))?;
        fs::write(sidecar_path(out), instructor_sidecar(&report))
            .with_context(|| format!("cannot write {}", sidecar_path(out).display()))?;
    }
    let format = if args.json {
        ReportFormat::Json
    } else {
        ReportFormat::Text
    };
    std::io::stdout().write_all(&render_report(&report, format))?;
    Ok(exit_for(std::slice::from_ref(&report)))
}

fn exit_for(reports: &[GradeReport]) -> ExitCode {
    let aborted: Vec<&str> = reports
        .iter()
        .filter(|r| r.status == RunStatus::Aborted)
        .map(|r| r.submission_id.as_str())
        .collect();
    if aborted.is_empty() {
        return ExitCode::SUCCESS;
    }
    for r in reports.iter().filter(|r| r.status == RunStatus::Aborted) {
        for d in &r.diagnostics {
            log::error!("{}: {d}", r.submission_id);
        }
    }
    eprintln!("grader malfunction on: {}", aborted.join(", "));
    ExitCode::from(EXIT_MALFUNCTION)
}

/// Directories matching `pattern`, sorted, as submissions named after
/// the directory. A missing entry file is left for grading to report.
fn submissions(pattern: &str, entry: &str) -> Result<Vec<Submission>> {
    let mut dirs: Vec<PathBuf> = glob::glob(pattern)
        .with_context(|| format!("bad glob {pattern:?}"))?
        .filter_map(|p| p.map_err(|e| log::warn!("skipping {e}")).ok())
        .filter(|p| p.is_dir())
        .collect();
    dirs.sort();
    if dirs.is_empty() {
        bail!("no submission directories match {pattern:?}");
    }
    Ok(dirs
        .into_iter()
        .map(|d| match Submission::open(&d, entry) {
            Ok(s) => s,
            Err(e) => {
                log::warn!("{e}");
                let id = d
                    .file_name()
                    .map_or_else(String::new, |n| n.to_string_lossy().into_owned());
                Submission {
                    root_dir: d,
                    entry_file: entry.to_string(),
                    id,
                }
            }
        })
        .collect())
}

fn run_batch(args: BatchArgs) -> Result<ExitCode> {
    let spec = match load_rubric(&args.common.rubric) {
        Ok(r) => r,
        Err(e) => return Ok(rubric_failure(&args.common.rubric, &e)),
    };
    let entry = args
        .common
        .entry
        .clone()
        .unwrap_or_else(|| spec.meta.entry_file.clone());
    let subs = submissions(&args.submissions, &entry)?;
    if let Some(dir) = &args.screenshots {
        fs::create_dir_all(dir).with_context(|| format!("cannot create {}", dir.display()))?;
    }
    let batch = BatchOptions {
        parallelism: usize::from(args.parallelism),
        screenshot_dir: args.screenshots.clone(),
    };
    let reports = grade_batch(&subs, &spec, &options(&args.common), &batch);
    write_batch_outputs(&reports, &args.out_dir, &args.csv)
        .with_context(|| format!("cannot write reports to {}", args.out_dir.display()))?;
    let total: f64 = reports.iter().map(|r| r.score).sum();
    println!(
        "graded {} submissions; mean score {:.2} / {}",
        reports.len(),
        total / reports.len() as f64,
        spec.meta.total_points
    );
    Ok(exit_for(&reports))
}

fn run_validate(path: &Path) -> ExitCode {
    match load_rubric(path) {
        Ok(r) => {
            println!(
                "{}: ok ({} tests, {} scales, {} points)",
                path.display(),
                r.tests.len(),
                r.scales.len(),
                r.meta.total_points
            );
            ExitCode::SUCCESS
        }
        Err(e) => rubric_failure(path, &e),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Grade(args) => run_grade(args),
        Command::Batch(args) => run_batch(args),
        Command::Validate { rubric } => Ok(run_validate(&rubric)),
    };
    result.unwrap_or_else(|e| {
        eprintln!("visgrade: {e:#}");
        ExitCode::from(2)
    })
}

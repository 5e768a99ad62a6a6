use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use crate::rubric::RubricSpec;

use super::report::{instructor_sidecar, render_report, ReportFormat};
use super::run::grade;
use super::{GradeOptions, GradeReport, Submission};

#[derive(Debug, Clone, PartialEq)]
pub struct BatchOptions {
    /// Submissions graded at once; each gets its own server and session.
    pub parallelism: usize,
    /// When set, live screenshots are saved here as `{id}.png`.
    pub screenshot_dir: Option<PathBuf>,
}

impl Default for BatchOptions {
    fn default() -> Self {
        BatchOptions {
            parallelism: 1,
            screenshot_dir: None,
        }
    }
}

fn grade_one(
    sub: &Submission,
    rubric: &RubricSpec,
    options: &GradeOptions,
    batch: &BatchOptions,
) -> GradeReport {
    let mut options = options.clone();
    if let Some(dir) = &batch.screenshot_dir {
        options.screenshot_path = Some(dir.join(format!("{}.png", sub.id)));
    }
    grade(sub, rubric, &options)
}

#[cfg(feature = "parallel")]
fn grade_all(
    subs: &[Submission],
    rubric: &RubricSpec,
    options: &GradeOptions,
    batch: &BatchOptions,
) -> Vec<GradeReport> {
    use rayon::prelude::*;

    let run = || {
        subs.par_iter()
            .map(|s| grade_one(s, rubric, options, batch))
            .collect()
    };
    match rayon::ThreadPoolBuilder::new()
        .num_threads(batch.parallelism.max(1))
        .build()
    {
        Ok(pool) => pool.install(run),
        Err(e) => {
            log::warn!("worker pool unavailable ({e}); grading sequentially");
            subs.iter()
                .map(|s| grade_one(s, rubric, options, batch))
                .collect()
        }
    }
}

#[cfg(not(feature = "parallel"))]
fn grade_all(
    subs: &[Submission],
    rubric: &RubricSpec,
    options: &GradeOptions,
    batch: &BatchOptions,
) -> Vec<GradeReport> {
    subs.iter()
        .map(|s| grade_one(s, rubric, options, batch))
        .collect()
}

/// Grade every submission, returning reports in input order. A failing
/// submission yields its own zero-score report and never stops the batch.
pub fn grade_batch(
    subs: &[Submission],
    rubric: &RubricSpec,
    options: &GradeOptions,
    batch: &BatchOptions,
) -> Vec<GradeReport> {
    grade_all(subs, rubric, options, batch)
}

/// One CSV row per report: `id,score,max_score,duration_ms,status`.
pub fn summary_csv(reports: &[GradeReport]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["id", "score", "max_score", "duration_ms", "status"])
        .expect("in-memory write");
    for r in reports {
        w.write_record([
            r.submission_id.clone(),
            r.score.to_string(),
            r.max_score.to_string(),
            r.duration_ms.to_string(),
            r.status.as_str().to_string(),
        ])
        .expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("csv is utf-8")
}

/// Write `{id}.json` and `{id}.instructor.txt` per report into `out_dir`,
/// plus the summary CSV.
pub fn write_batch_outputs(
    reports: &[GradeReport],
    out_dir: &Path,
    csv_path: &Path,
) -> io::Result<()> {
    fs::create_dir_all(out_dir)?;
    for r in reports {
        fs::write(
            out_dir.join(format!("{}.json", r.submission_id)),
            render_report(r, ReportFormat::Json),
        )?;
        fs::write(
            out_dir.join(format!("{}.instructor.txt", r.submission_id)),
            instructor_sidecar(r),
        )?;
    }
    if let Some(parent) = csv_path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent)?;
    }
    fs::write(csv_path, summary_csv(reports))
}

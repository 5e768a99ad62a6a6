//! Grading orchestration: serve a submission, run the rubric's tests,
//! tally points and render reports, one submission or a whole batch.

mod batch;
mod report;
mod run;
mod server;

use std::path::{Component, Path, PathBuf};
use std::time::Duration;

use serde::Serialize;
use thiserror::Error;

use crate::interaction::DEFAULT_WEBDRIVER_URL;
use crate::rubric::{Category, RubricError};

pub use batch::{grade_batch, summary_csv, write_batch_outputs, BatchOptions};
pub use report::{
    canonical_report, instructor_sidecar, render_report, ReportFormat, REPORT_SCHEMA,
};
pub use run::grade;
pub use server::{serve_submission, ServedSubmission};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum HarnessError {
    #[error(transparent)]
    RubricInvalid(#[from] RubricError),
    #[error("no free loopback port: {0}")]
    PortExhausted(String),
    #[error("path escapes the submission directory: {0}")]
    PathTraversalAttempt(String),
    #[error("entry file not found: {0}")]
    MissingEntry(String),
    #[error("browser session failed: {0}")]
    SessionFailure(String),
}

/// One student's files.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Submission {
    pub root_dir: PathBuf,
    /// Path of the page to grade, relative to `root_dir`.
    pub entry_file: String,
    pub id: String,
}

impl Submission {
    /// A submission whose entry file exists inside `root_dir`. The id is
    /// the directory name.
    pub fn open(
        root_dir: impl Into<PathBuf>,
        entry_file: &str,
    ) -> Result<Submission, HarnessError> {
        let root_dir = root_dir.into();
        let rel = Path::new(entry_file);
        if rel.is_absolute()
            || rel
                .components()
                .any(|c| !matches!(c, Component::Normal(_) | Component::CurDir))
        {
            return Err(HarnessError::PathTraversalAttempt(entry_file.to_string()));
        }
        let entry = root_dir.join(rel);
        if !entry.is_file() {
            return Err(HarnessError::MissingEntry(entry.display().to_string()));
        }
        let id = root_dir
            .file_name()
            .map(|n| n.to_string_lossy().into_owned())
            .unwrap_or_else(|| "submission".to_string());
        Ok(Submission {
            root_dir,
            entry_file: entry_file.to_string(),
            id,
        })
    }

    pub fn with_id(mut self, id: impl Into<String>) -> Self {
        self.id = id.into();
        self
    }

    pub fn entry_path(&self) -> PathBuf {
        self.root_dir.join(&self.entry_file)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum GradeMode {
    /// The entry file is a pre-rendered snapshot; no browser is involved.
    Static,
    /// Render the entry page in a browser driven over WebDriver.
    Live,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GradeOptions {
    pub mode: GradeMode,
    pub webdriver_url: String,
    /// Directory layered under the submission (library copies, datasets).
    pub shared_assets: Option<PathBuf>,
    /// Where to save the live-mode screenshot.
    pub screenshot_path: Option<PathBuf>,
    /// Fresh sessions tried after an infrastructure failure.
    pub retries: usize,
    pub page_load_timeout: Duration,
    pub implicit_wait_ms: u64,
}

impl Default for GradeOptions {
    fn default() -> Self {
        GradeOptions {
            mode: GradeMode::Static,
            webdriver_url: DEFAULT_WEBDRIVER_URL.to_string(),
            shared_assets: None,
            screenshot_path: None,
            retries: 2,
            page_load_timeout: Duration::from_secs(20),
            implicit_wait_ms: 2_000,
        }
    }
}

impl GradeOptions {
    pub fn live(webdriver_url: impl Into<String>) -> Self {
        GradeOptions {
            mode: GradeMode::Live,
            webdriver_url: webdriver_url.into(),
            ..Default::default()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Pass,
    Fail,
    Error,
    Advisory,
}

impl Status {
    pub fn as_str(&self) -> &'static str {
        match self {
            Status::Pass => "pass",
            Status::Fail => "fail",
            Status::Error => "error",
            Status::Advisory => "advisory",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TestOutcome {
    pub test_id: String,
    pub category: Category,
    pub points_awarded: f64,
    pub points_possible: f64,
    pub status: Status,
    /// Student-facing lines.
    pub feedback: Vec<String>,
    /// Instructor-only diagnostics; never rendered into the report.
    #[serde(skip)]
    pub detail: Option<String>,
}

/// How far grading got.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum RunStatus {
    Graded,
    /// The submission itself could not be graded (unreadable entry, page
    /// error on load) and scored zero.
    Failed,
    /// The grader's own machinery failed (no port, no browser session).
    Aborted,
}

impl RunStatus {
    pub fn as_str(&self) -> &'static str {
        match self {
            RunStatus::Graded => "graded",
            RunStatus::Failed => "failed",
            RunStatus::Aborted => "aborted",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GradeReport {
    pub submission_id: String,
    pub score: f64,
    pub max_score: f64,
    /// In rubric order.
    pub outcomes: Vec<TestOutcome>,
    pub screenshot_path: Option<String>,
    pub duration_ms: u64,
    pub grader_version: String,
    pub status: RunStatus,
    /// Instructor-only notes: protocol errors, retries, refused requests.
    #[serde(skip)]
    pub diagnostics: Vec<String>,
}

impl GradeReport {
    /// Points awarded across outcomes, summed in rubric order.
    pub fn awarded_total(&self) -> f64 {
        self.outcomes.iter().map(|o| o.points_awarded).sum()
    }
}

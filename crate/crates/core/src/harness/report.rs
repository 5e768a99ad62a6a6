use std::fmt::Write as _;

use serde::Serialize;

use crate::checks::num;
use crate::rubric::Category;

use super::{GradeReport, Status};

/// Version of the report JSON layout.
pub const REPORT_SCHEMA: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Json,
    Text,
}

#[derive(Serialize)]
struct JsonTest<'a> {
    id: &'a str,
    category: &'static str,
    status: &'static str,
    score: f64,
    max_score: f64,
    output: String,
}

#[derive(Serialize)]
struct JsonReport<'a> {
    schema: u32,
    submission_id: &'a str,
    score: f64,
    max_score: f64,
    duration_ms: u64,
    grader_version: &'a str,
    screenshot: Option<&'a str>,
    tests: Vec<JsonTest<'a>>,
}

fn json(report: &GradeReport, duration_ms: u64) -> Vec<u8> {
    let doc = JsonReport {
        schema: REPORT_SCHEMA,
        submission_id: &report.submission_id,
        score: report.score,
        max_score: report.max_score,
        duration_ms,
        grader_version: &report.grader_version,
        screenshot: report.screenshot_path.as_deref(),
        tests: report
            .outcomes
            .iter()
            .map(|o| JsonTest {
                id: &o.test_id,
                category: o.category.as_str(),
                status: o.status.as_str(),
                score: o.points_awarded,
                max_score: o.points_possible,
                output: o.feedback.join("\n"),
            })
            .collect(),
    };
    let mut out = serde_json::to_vec_pretty(&doc).expect("report serializes");
    out.push(b'\n');
    out
}

const CATEGORY_ORDER: [Category; 4] = [
    Category::Advisory,
    Category::Appearance,
    Category::Positioning,
    Category::Interaction,
];

fn text(report: &GradeReport) -> Vec<u8> {
    let mut out = String::new();
    let _ = writeln!(out, "Submission {}", report.submission_id);
    let _ = writeln!(
        out,
        "Score: {} / {}",
        num(report.score),
        num(report.max_score)
    );
    for category in CATEGORY_ORDER {
        let outcomes: Vec<_> = report
            .outcomes
            .iter()
            .filter(|o| o.category == category)
            .collect();
        if outcomes.is_empty() {
            continue;
        }
        let _ = writeln!(out, "\n{}", category.title());
        for o in outcomes {
            match o.status {
                Status::Advisory => {
                    let _ = writeln!(out, "  • {}", o.test_id);
                }
                status => {
                    let glyph = match status {
                        Status::Pass => "✓",
                        Status::Fail => "✗",
                        _ => "!",
                    };
                    let _ = writeln!(
                        out,
                        "  {glyph} {} ({} / {} points)",
                        o.test_id,
                        num(o.points_awarded),
                        num(o.points_possible)
                    );
                }
            }
            for line in &o.feedback {
                let _ = writeln!(out, "      {line}");
            }
        }
    }
    out.into_bytes()
}

/// Serialize a report as JSON or as grouped, human-readable text.
pub fn render_report(report: &GradeReport, format: ReportFormat) -> Vec<u8> {
    match format {
        ReportFormat::Json => json(report, report.duration_ms),
        ReportFormat::Text => text(report),
    }
}

/// JSON with the duration zeroed, so equal gradings give equal bytes.
pub fn canonical_report(report: &GradeReport) -> Vec<u8> {
    json(report, 0)
}

/// Instructor-only diagnostics hidden from the student report.
pub fn instructor_sidecar(report: &GradeReport) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "submission: {}", report.submission_id);
    let _ = writeln!(out, "status: {}", report.status.as_str());
    let _ = writeln!(out, "grader: {}", report.grader_version);
    let _ = writeln!(out, "duration_ms: {}", report.duration_ms);
    for d in &report.diagnostics {
        let _ = writeln!(out, "diagnostic: {d}");
    }
    for o in report.outcomes.iter().filter(|o| o.detail.is_some()) {
        let _ = writeln!(
            out,
            "{}: {}",
            o.test_id,
            o.detail.as_deref().unwrap_or_default()
        );
    }
    out
}

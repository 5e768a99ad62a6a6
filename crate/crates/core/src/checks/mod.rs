//! Graded predicates over a snapshot: mark appearance, axis ticks and
//! scale-aware data positioning.
//!
//! Expected mark positions are computed by pushing the ground-truth data
//! through the scales recovered from the student's own axes, so any chart
//! size or orientation the student chose grades the same way.

mod appearance;
mod axis;
mod positions;

use serde::Serialize;
use thiserror::Error;

use crate::dom::{DomError, NodeId, ResolvedGeometry};
use crate::scale::ScaleError;

pub use appearance::{
    bar_orientation, check_color_grouping, check_constant, check_sorted, mark_measure,
};
pub use axis::{
    check_axis_ticks, check_quantile_colors, check_scale_domain, data_reading, format_values,
    TickExpectation,
};
pub use positions::{check_positions, mark_points, DatumMatch, MarkPoint, PositionOptions};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CheckError {
    #[error("{selector} matched {found} marks; at least {needed} are needed")]
    InsufficientMarks {
        selector: String,
        found: usize,
        needed: usize,
    },
    #[error(transparent)]
    Dom(#[from] DomError),
    #[error("datum {index} ({datum}): {source}")]
    Datum {
        index: usize,
        datum: String,
        source: ScaleError,
    },
    #[error("{0}")]
    Config(String),
}

/// Verdict of one check, with the evidence behind it.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckResult {
    pub passed: bool,
    pub expected: String,
    pub actual: String,
    /// Assumptions made and observations, one per line.
    pub detail_lines: Vec<String>,
    pub offenders: Vec<NodeId>,
    /// Share of the points earned, in `[0, 1]`.
    pub credit: f64,
    #[serde(skip)]
    pub matches: Vec<DatumMatch>,
}

impl CheckResult {
    pub fn pass(expected: impl Into<String>, actual: impl Into<String>) -> Self {
        CheckResult {
            passed: true,
            expected: expected.into(),
            actual: actual.into(),
            detail_lines: Vec::new(),
            offenders: Vec::new(),
            credit: 1.0,
            matches: Vec::new(),
        }
    }

    pub fn fail(expected: impl Into<String>, actual: impl Into<String>) -> Self {
        CheckResult {
            passed: false,
            credit: 0.0,
            ..CheckResult::pass(expected, actual)
        }
    }

    pub fn verdict(passed: bool, expected: impl Into<String>, actual: impl Into<String>) -> Self {
        if passed {
            Self::pass(expected, actual)
        } else {
            Self::fail(expected, actual)
        }
    }

    pub fn with_line(mut self, line: impl Into<String>) -> Self {
        self.detail_lines.push(line.into());
        self
    }

    pub fn with_offenders(mut self, offenders: impl IntoIterator<Item = NodeId>) -> Self {
        self.offenders.extend(offenders);
        self
    }
}

/// Normalized bounding box `(x0, y0, x1, y1)` of a resolved box element.
pub(crate) fn bbox(geom: &ResolvedGeometry) -> Option<(f64, f64, f64, f64)> {
    let (x, y, w, h) = (geom.x?, geom.y?, geom.width?, geom.height?);
    Some((x.min(x + w), y.min(y + h), x.max(x + w), y.max(y + h)))
}

/// Shortest decimal rendering of a number for feedback text.
pub(crate) fn num(v: f64) -> String {
    if v.fract() == 0.0 && v.abs() < 1e15 {
        format!("{}", v as i64)
    } else {
        let s = format!("{:.3}", v);
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    }
}

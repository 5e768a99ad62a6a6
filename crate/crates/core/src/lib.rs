//! Rubric-driven auto-grading for rendered D3/SVG visualizations.
//!
//! The grader never looks at a student's JavaScript. It works from the
//! rendered element tree: [`dom`] parses the markup, [`layout`] and
//! [`scale`] recover the chart's dimensions and data mappings, [`checks`]
//! compares marks against a solution tailored to those mappings, and
//! [`interaction`] drives a live browser over the WebDriver protocol to test
//! hover/click/drag behaviour. [`harness`] ties it together per [`rubric`].

pub mod checks;
pub mod dom;
pub mod harness;
pub mod interaction;
pub mod layout;
pub mod rubric;
pub mod scale;

pub use checks::CheckResult;
pub use dom::{parse_snapshot, ElementNode, NodeId, Rgba, Selector, Snapshot, Transform2D};
pub use harness::{grade, grade_batch, GradeMode, GradeOptions, GradeReport, Submission};
pub use rubric::{load_rubric, RubricSpec};

/// Version string stamped into every report.
pub const GRADER_VERSION: &str = concat!("visgrade ", env!("CARGO_PKG_VERSION"));

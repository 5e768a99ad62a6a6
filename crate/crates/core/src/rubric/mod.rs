//! Rubric files: the declarative grading configuration.
//!
//! A rubric is YAML with a `schema: 1` header. Loading runs in three
//! passes: YAML syntax, document shape (with the failing path reported),
//! then cross-field rules such as point totals and references between
//! tests, scales and datasets.

mod check;
mod dataset;

use std::collections::HashSet;
use std::path::{Path, PathBuf};

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dom::{select, ElementNode, Selector};
use crate::scale::{FitThresholds, Orientation, ScaleKind};

pub use check::*;
pub use dataset::Dataset;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RubricError {
    #[error("cannot read rubric {path}: {message}")]
    Io { path: String, message: String },
    #[error("YAML syntax error at line {line}: {message}")]
    YamlSyntax { line: usize, message: String },
    #[error("schema violation at {path}: {message}")]
    SchemaViolation { path: String, message: String },
    #[error("{owner} refers to undeclared {missing}")]
    DanglingReference { owner: String, missing: String },
}

impl RubricError {
    /// Short class name used in reports and the acceptance corpus.
    pub fn class(&self) -> &'static str {
        match self {
            RubricError::Io { .. } => "Io",
            RubricError::YamlSyntax { .. } => "YamlSyntax",
            RubricError::SchemaViolation { .. } => "SchemaViolation",
            RubricError::DanglingReference { .. } => "DanglingReference",
        }
    }
}

fn violation(path: impl Into<String>, message: impl Into<String>) -> RubricError {
    RubricError::SchemaViolation {
        path: path.into(),
        message: message.into(),
    }
}

fn dangling(owner: impl Into<String>, missing: impl Into<String>) -> RubricError {
    RubricError::DanglingReference {
        owner: owner.into(),
        missing: missing.into(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Viewport {
    pub width: u32,
    pub height: u32,
}

impl Default for Viewport {
    fn default() -> Self {
        Viewport {
            width: 1280,
            height: 800,
        }
    }
}

fn default_settle_ms() -> u64 {
    300
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Meta {
    pub name: String,
    pub entry_file: String,
    pub total_points: f64,
    /// Must match in the live page before any test runs.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ready_selector: Option<Selector>,
    /// Wait after the last step of an action chain, in ms.
    #[serde(default = "default_settle_ms")]
    pub settle_ms: u64,
    #[serde(default)]
    pub viewport: Viewport,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Tolerances {
    pub position_px: f64,
    pub size_px: f64,
    pub fit_r2: f64,
    pub residual_px: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            position_px: 2.0,
            size_px: 1.0,
            fit_r2: 0.999,
            residual_px: 2.0,
        }
    }
}

fn one() -> usize {
    1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Requirement {
    pub selector: Selector,
    #[serde(default = "one")]
    pub min_count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StructureSpec {
    pub svg_selector: Selector,
    /// Ids of `g` elements the chart must contain.
    #[serde(default)]
    pub groups: Vec<String>,
    #[serde(default)]
    pub required: Vec<Requirement>,
}

impl StructureSpec {
    /// Every requirement in declaration order: groups first, then the
    /// explicit list.
    pub fn requirements(&self) -> Vec<Requirement> {
        self.groups
            .iter()
            .map(|g| Requirement {
                selector: Selector::parse(&format!("g#{g}")).unwrap_or_else(|_| Selector::id(g)),
                min_count: 1,
            })
            .chain(self.required.iter().cloned())
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FieldRef {
    pub from_dataset: String,
    pub field: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ExpectedDomain {
    Dataset(FieldRef),
    Literal([crate::scale::DataValue; 2]),
}

fn is_auto(o: &Orientation) -> bool {
    *o == Orientation::Auto
}

fn fill() -> String {
    "fill".into()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScaleSpec {
    pub id: String,
    /// Tick container. A comma union lists candidates; the first unclaimed
    /// group that fits the declared kind is used.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub axis_group: Option<Selector>,
    pub kind: ScaleKind,
    #[serde(default = "Orientation::auto", skip_serializing_if = "is_auto")]
    pub orientation: Orientation,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub expected_domain: Option<ExpectedDomain>,
    /// Color-encoded marks, for quantile-color scales.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub marks: Option<Selector>,
    /// Data values aligned with `marks` in document order.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub values: Option<FieldRef>,
    /// Number of quantile buckets.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k: Option<usize>,
    #[serde(default = "fill")]
    pub color_property: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fit_r2: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub residual_px: Option<f64>,
}

impl Orientation {
    fn auto() -> Self {
        Orientation::Auto
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TestSpec {
    pub id: String,
    pub category: Category,
    pub points: f64,
    pub check: Check,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub feedback_hint: Option<String>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct TestDoc {
    id: String,
    category: Category,
    #[serde(default)]
    points: Option<f64>,
    check: Check,
    #[serde(default)]
    feedback_hint: Option<String>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RubricDoc {
    schema: u32,
    meta: Meta,
    #[serde(default)]
    tolerances: Tolerances,
    structure: StructureSpec,
    #[serde(default)]
    datasets: IndexMap<String, String>,
    #[serde(default)]
    scales: Vec<ScaleSpec>,
    tests: Vec<TestDoc>,
}

/// A validated rubric.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RubricSpec {
    pub schema: u32,
    pub meta: Meta,
    pub tolerances: Tolerances,
    pub structure: StructureSpec,
    /// Dataset name → CSV path as written, relative to the rubric file.
    pub datasets: IndexMap<String, String>,
    pub scales: Vec<ScaleSpec>,
    pub tests: Vec<TestSpec>,
    /// Directory dataset paths resolve against.
    #[serde(skip)]
    pub base_dir: PathBuf,
    #[serde(skip)]
    pub tables: IndexMap<String, Dataset>,
}

impl RubricSpec {
    pub fn scale(&self, id: &str) -> Option<&ScaleSpec> {
        self.scales.iter().find(|s| s.id == id)
    }

    pub fn test(&self, id: &str) -> Option<&TestSpec> {
        self.tests.iter().find(|t| t.id == id)
    }

    pub fn dataset(&self, name: &str) -> Option<&Dataset> {
        self.tables.get(name)
    }

    pub fn thresholds_for(&self, scale: &ScaleSpec) -> FitThresholds {
        FitThresholds {
            min_r2: scale.fit_r2.unwrap_or(self.tolerances.fit_r2),
            max_residual_px: scale.residual_px.unwrap_or(self.tolerances.residual_px),
            band_spacing_px: self.tolerances.size_px,
        }
    }

    pub fn to_yaml(&self) -> String {
        serde_yaml::to_string(self).expect("rubric serializes")
    }
}

/// Load and validate a rubric file. Dataset paths resolve against the
/// rubric's directory.
pub fn load_rubric(path: &Path) -> Result<RubricSpec, RubricError> {
    let text = std::fs::read_to_string(path).map_err(|e| RubricError::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    })?;
    let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
    load_rubric_str(&text, &base)
}

pub fn load_rubric_str(text: &str, base_dir: &Path) -> Result<RubricSpec, RubricError> {
    let value: serde_yaml::Value =
        serde_yaml::from_str(text).map_err(|e| RubricError::YamlSyntax {
            line: e.location().map_or(0, |l| l.line()),
            message: e.to_string(),
        })?;
    if !value.is_mapping() {
        return Err(violation(".", "rubric must be a mapping"));
    }
    let doc: RubricDoc = serde_path_to_error::deserialize(value).map_err(|e| {
        let path = e.path().to_string();
        violation(path, e.into_inner().to_string())
    })?;
    validate(doc, base_dir)
}

fn validate(doc: RubricDoc, base_dir: &Path) -> Result<RubricSpec, RubricError> {
    if doc.schema != SCHEMA_VERSION {
        return Err(violation(
            "schema",
            format!("unsupported schema version {}", doc.schema),
        ));
    }
    validate_meta(&doc.meta, &doc.tolerances)?;
    validate_structure_spec(&doc.structure)?;

    let mut tables = IndexMap::new();
    for (name, file) in &doc.datasets {
        let resolved = base_dir.join(file);
        if !resolved.is_file() {
            return Err(violation(
                format!("datasets.{name}"),
                format!("file not found: {}", resolved.display()),
            ));
        }
        let table =
            Dataset::load(&resolved).map_err(|e| violation(format!("datasets.{name}"), e))?;
        tables.insert(name.clone(), table);
    }
    let field_exists = |owner: &str, r: &FieldRef| -> Result<(), RubricError> {
        let table = tables
            .get(&r.from_dataset)
            .ok_or_else(|| dangling(owner, format!("dataset {}", r.from_dataset)))?;
        if !table.has_field(&r.field) {
            return Err(dangling(
                owner,
                format!("field {}.{}", r.from_dataset, r.field),
            ));
        }
        Ok(())
    };

    let mut scale_ids = HashSet::new();
    for (i, s) in doc.scales.iter().enumerate() {
        let at = |field: &str| format!("scales[{i}].{field}");
        if s.id.trim().is_empty() {
            return Err(violation(at("id"), "scale id must be non-empty"));
        }
        if !scale_ids.insert(s.id.as_str()) {
            return Err(violation(
                at("id"),
                format!("duplicate scale id {:?}", s.id),
            ));
        }
        let owner = format!("scale {}", s.id);
        if s.kind == ScaleKind::QuantileColor {
            if !matches!(s.orientation, Orientation::Color | Orientation::Auto) {
                return Err(violation(
                    at("orientation"),
                    "quantile-color scales have orientation color",
                ));
            }
            if s.marks.is_none() {
                return Err(violation(
                    at("marks"),
                    "quantile-color scales need the colored marks",
                ));
            }
            let values = s
                .values
                .as_ref()
                .ok_or_else(|| violation(at("values"), "quantile-color scales need data values"))?;
            field_exists(&owner, values)?;
            match s.k {
                Some(k) if k >= 1 => {}
                _ => return Err(violation(at("k"), "quantile-color scales need k ≥ 1")),
            }
        } else {
            if s.orientation == Orientation::Color {
                return Err(violation(
                    at("orientation"),
                    "orientation color requires kind quantile-color",
                ));
            }
            if s.axis_group.is_none() {
                return Err(violation(
                    at("axis_group"),
                    format!("{} scales need an axis group", s.kind),
                ));
            }
        }
        if let Some(ExpectedDomain::Dataset(r)) = &s.expected_domain {
            field_exists(&owner, r)?;
        }
        for (field, v) in [("fit_r2", s.fit_r2), ("residual_px", s.residual_px)] {
            if v.is_some_and(|v| !(v.is_finite() && v >= 0.0)) {
                return Err(violation(at(field), "must be a finite non-negative number"));
            }
        }
    }
    let scales: Vec<ScaleSpec> = doc
        .scales
        .into_iter()
        .map(|mut s| {
            if s.kind == ScaleKind::QuantileColor {
                s.orientation = Orientation::Color;
            }
            s
        })
        .collect();
    let scale_kind = |id: &str| scales.iter().find(|s| s.id == id).map(|s| s.kind);

    let mut test_ids = HashSet::new();
    let mut tests = Vec::with_capacity(doc.tests.len());
    if doc.tests.is_empty() {
        return Err(violation("tests", "a rubric needs at least one test"));
    }
    for (i, t) in doc.tests.into_iter().enumerate() {
        let at = |field: &str| format!("tests[{i}].{field}");
        if t.id.trim().is_empty() {
            return Err(violation(at("id"), "test id must be non-empty"));
        }
        if !test_ids.insert(t.id.clone()) {
            return Err(violation(at("id"), format!("duplicate test id {:?}", t.id)));
        }
        let points = match (t.category, t.points) {
            (Category::Advisory, None) => 0.0,
            (Category::Advisory, Some(p)) if p != 0.0 => {
                return Err(violation(at("points"), "advisory tests carry 0 points"));
            }
            (_, None) => return Err(violation(at("points"), "points must be given explicitly")),
            (_, Some(p)) if !(p.is_finite() && p >= 0.0) => {
                return Err(violation(
                    at("points"),
                    "points must be a finite number ≥ 0",
                ));
            }
            (_, Some(p)) => p,
        };
        let owner = format!("test {}", t.id);
        for id in t.check.scale_refs() {
            if scale_kind(id).is_none() {
                return Err(dangling(&owner, format!("scale {id}")));
            }
        }
        validate_check(
            &t.check,
            t.category,
            &at,
            &owner,
            &scale_kind,
            &field_exists,
        )?;
        tests.push(TestSpec {
            id: t.id,
            category: t.category,
            points,
            check: t.check,
            feedback_hint: t.feedback_hint,
        });
    }

    let sum: f64 = tests.iter().map(|t| t.points).sum();
    if (sum - doc.meta.total_points).abs() > 1e-9 {
        return Err(violation(
            "meta.total_points",
            format!(
                "total_points {} does not equal the sum of test points {}",
                doc.meta.total_points, sum
            ),
        ));
    }

    Ok(RubricSpec {
        schema: doc.schema,
        meta: doc.meta,
        tolerances: doc.tolerances,
        structure: doc.structure,
        datasets: doc.datasets,
        scales,
        tests,
        base_dir: base_dir.to_path_buf(),
        tables,
    })
}

fn validate_meta(meta: &Meta, tol: &Tolerances) -> Result<(), RubricError> {
    if meta.name.trim().is_empty() {
        return Err(violation("meta.name", "name must be non-empty"));
    }
    let entry = Path::new(&meta.entry_file);
    if meta.entry_file.trim().is_empty()
        || entry.is_absolute()
        || entry
            .components()
            .any(|c| matches!(c, std::path::Component::ParentDir))
    {
        return Err(violation(
            "meta.entry_file",
            "entry_file must be a relative path inside the submission",
        ));
    }
    if !(meta.total_points.is_finite() && meta.total_points >= 0.0) {
        return Err(violation(
            "meta.total_points",
            "total_points must be a finite number ≥ 0",
        ));
    }
    if meta.settle_ms > crate::interaction::MAX_PAUSE_MS {
        return Err(violation(
            "meta.settle_ms",
            format!("settle_ms exceeds {} ms", crate::interaction::MAX_PAUSE_MS),
        ));
    }
    if meta.viewport.width == 0 || meta.viewport.height == 0 {
        return Err(violation(
            "meta.viewport",
            "viewport dimensions must be positive",
        ));
    }
    for (field, v) in [
        ("position_px", tol.position_px),
        ("size_px", tol.size_px),
        ("fit_r2", tol.fit_r2),
        ("residual_px", tol.residual_px),
    ] {
        if !(v.is_finite() && v >= 0.0) {
            return Err(violation(
                format!("tolerances.{field}"),
                "must be a finite non-negative number",
            ));
        }
    }
    if tol.fit_r2 > 1.0 {
        return Err(violation(
            "tolerances.fit_r2",
            "r² threshold cannot exceed 1",
        ));
    }
    Ok(())
}

fn validate_structure_spec(s: &StructureSpec) -> Result<(), RubricError> {
    let mut seen = HashSet::new();
    for (i, g) in s.groups.iter().enumerate() {
        if g.trim().is_empty() || g.contains(char::is_whitespace) {
            return Err(violation(
                format!("structure.groups[{i}]"),
                format!("invalid group id {g:?}"),
            ));
        }
        if Selector::parse(&format!("g#{g}")).is_err() {
            return Err(violation(
                format!("structure.groups[{i}]"),
                format!("invalid group id {g:?}"),
            ));
        }
        if !seen.insert(g) {
            return Err(violation(
                format!("structure.groups[{i}]"),
                format!("duplicate group id {g:?}"),
            ));
        }
    }
    for (i, r) in s.required.iter().enumerate() {
        if r.min_count < 1 {
            return Err(violation(
                format!("structure.required[{i}].min_count"),
                "min_count must be ≥ 1",
            ));
        }
    }
    Ok(())
}

fn validate_check(
    check: &Check,
    category: Category,
    at: &dyn Fn(&str) -> String,
    owner: &str,
    scale_kind: &dyn Fn(&str) -> Option<ScaleKind>,
    field_exists: &dyn Fn(&str, &FieldRef) -> Result<(), RubricError>,
) -> Result<(), RubricError> {
    let non_negative = |path: &str, v: Option<f64>| match v {
        Some(v) if !(v.is_finite() && v >= 0.0) => {
            Err(violation(at(path), "must be a finite non-negative number"))
        }
        _ => Ok(()),
    };
    if (category == Category::Interaction) != matches!(check, Check::Interaction(_)) {
        return Err(violation(
            at("check"),
            "interaction tests, and only they, run action chains",
        ));
    }
    match check {
        Check::Positions(p) => {
            for (field, id) in [("x_scale", &p.x_scale), ("y_scale", &p.y_scale)] {
                if matches!(scale_kind(id), Some(ScaleKind::QuantileColor)) {
                    return Err(violation(
                        at(&format!("check.positions.{field}")),
                        "positions need a positional scale",
                    ));
                }
            }
            if p.x_scale == p.y_scale {
                return Err(violation(
                    at("check.positions.y_scale"),
                    "x_scale and y_scale must differ",
                ));
            }
            for field in [&p.x_field, &p.y_field] {
                field_exists(
                    owner,
                    &FieldRef {
                        from_dataset: p.dataset.clone(),
                        field: field.clone(),
                    },
                )?;
            }
            non_negative("check.positions.tolerance_px", p.tolerance_px)?;
        }
        Check::AxisTicks(a) => {
            match (&a.interval, &a.values) {
                (Some(_), Some(_)) | (None, None) => {
                    return Err(violation(
                        at("check.axis_ticks"),
                        "give exactly one of interval or values",
                    ));
                }
                (Some(iv), None) if !(iv.is_finite() && *iv > 0.0) => {
                    return Err(violation(
                        at("check.axis_ticks.interval"),
                        "interval must be positive",
                    ));
                }
                _ => {}
            }
            if matches!(scale_kind(&a.scale), Some(ScaleKind::QuantileColor)) {
                return Err(violation(
                    at("check.axis_ticks.scale"),
                    "quantile-color scales have no ticks",
                ));
            }
        }
        Check::QuantileColors(q) => {
            if scale_kind(&q.scale) != Some(ScaleKind::QuantileColor) {
                return Err(violation(
                    at("check.quantile_colors.scale"),
                    "scale must be of kind quantile-color",
                ));
            }
        }
        Check::Constant(c) => non_negative("check.constant.tolerance", c.tolerance)?,
        Check::ColorGrouping(g) => {
            if g.groups.is_empty() {
                return Err(violation(
                    at("check.color_grouping.groups"),
                    "at least one group is needed",
                ));
            }
        }
        Check::Interaction(i) => {
            if i.actions.is_empty() {
                return Err(violation(
                    at("check.actions"),
                    "an interaction test needs at least one action",
                ));
            }
            if i.assert.is_empty() {
                return Err(violation(
                    at("check.assert"),
                    "an interaction test needs at least one assertion",
                ));
            }
            for (j, step) in i.actions.iter().enumerate() {
                step.validate()
                    .map_err(|m| violation(at(&format!("check.actions[{j}]")), m))?;
            }
            for (j, a) in i.assert.iter().enumerate() {
                a.validate()
                    .map_err(|m| violation(at(&format!("check.assert[{j}]")), m))?;
            }
            if i.settle_ms
                .is_some_and(|ms| ms > crate::interaction::MAX_PAUSE_MS)
            {
                return Err(violation(
                    at("check.settle_ms"),
                    "settle_ms exceeds the pause limit",
                ));
            }
        }
        Check::Structure | Check::Layout | Check::Scale(_) | Check::Sorted(_) => {}
    }
    Ok(())
}

/// Outcome of one structural requirement.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "finding", rename_all = "snake_case")]
pub enum StructureFinding {
    Found {
        selector: Selector,
        count: usize,
    },
    Missing {
        selector: Selector,
        count: usize,
        expected_min: usize,
    },
}

impl StructureFinding {
    pub fn selector(&self) -> &Selector {
        match self {
            StructureFinding::Found { selector, .. }
            | StructureFinding::Missing { selector, .. } => selector,
        }
    }

    pub fn is_missing(&self) -> bool {
        matches!(self, StructureFinding::Missing { .. })
    }

    pub fn describe(&self) -> String {
        match self {
            StructureFinding::Found { selector, count } => format!("Found {count} × {selector}"),
            StructureFinding::Missing {
                selector, count: 0, ..
            } => format!("Missing required element {selector}"),
            StructureFinding::Missing {
                selector,
                count,
                expected_min,
            } => {
                format!("Found only {count} × {selector}, expected at least {expected_min}")
            }
        }
    }
}

/// One finding per requirement, in declaration order.
pub fn validate_structure(spec: &StructureSpec, root: ElementNode<'_>) -> Vec<StructureFinding> {
    spec.requirements()
        .into_iter()
        .map(|req| {
            let count = select(root, &req.selector).len();
            if count >= req.min_count {
                StructureFinding::Found {
                    selector: req.selector,
                    count,
                }
            } else {
                StructureFinding::Missing {
                    selector: req.selector,
                    count,
                    expected_min: req.min_count,
                }
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dom::parse_snapshot;

    fn rubric(tests: &str, total: f64) -> String {
        format!(
            "schema: 1\nmeta: {{name: t, entry_file: index.html, total_points: {total}}}\n\
             structure: {{svg_selector: svg, groups: [bars]}}\n\
             scales:\n  - {{id: x, axis_group: 'g#x-axis', kind: linear}}\n\
             tests:\n{tests}"
        )
    }

    #[test]
    fn points_must_sum_to_total() {
        let tests = [
            "  - {id: a, category: appearance, points: 2, check: {constant: {marks: rect, attribute: width}}}",
            "  - {id: b, category: positioning, points: 2, check: {scale: {scale: x}}}",
            "  - {id: c, category: appearance, points: 1, check: {constant: {marks: rect, attribute: height}}}",
        ]
        .join("\n");
        assert!(load_rubric_str(&rubric(&tests, 5.0), Path::new(".")).is_ok());
        match load_rubric_str(&rubric(&tests, 6.0), Path::new(".")) {
            Err(RubricError::SchemaViolation { path, .. }) => assert_eq!(path, "meta.total_points"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn undeclared_scale_is_dangling() {
        let tests = "  - {id: a, category: positioning, points: 1, check: {scale: {scale: y}}}\n";
        assert_eq!(
            load_rubric_str(&rubric(tests, 1.0), Path::new(".")).unwrap_err(),
            RubricError::DanglingReference {
                owner: "test a".into(),
                missing: "scale y".into()
            }
        );
    }

    #[test]
    fn advisory_points_default_and_graded_points_required() {
        let ok = "  - {id: a, category: advisory, check: {structure: true}}\n";
        assert_eq!(
            load_rubric_str(&rubric(ok, 0.0), Path::new("."))
                .unwrap()
                .tests[0]
                .points,
            0.0
        );
        let bad = "  - {id: a, category: appearance, check: {structure: true}}\n";
        assert!(matches!(
            load_rubric_str(&rubric(bad, 0.0), Path::new(".")),
            Err(RubricError::SchemaViolation { .. })
        ));
        let bad = "  - {id: a, category: advisory, points: 1, check: {structure: true}}\n";
        assert!(matches!(
            load_rubric_str(&rubric(bad, 1.0), Path::new(".")),
            Err(RubricError::SchemaViolation { .. })
        ));
    }

    #[test]
    fn syntax_errors_carry_a_line() {
        let err = load_rubric_str("schema: 1\nmeta: {name: x\n", Path::new(".")).unwrap_err();
        assert!(
            matches!(err, RubricError::YamlSyntax { line, .. } if line >= 2),
            "{err:?}"
        );
    }

    #[test]
    fn shape_errors_carry_a_path() {
        let tests = "  - {id: a, category: advisory, check: {structure: true}, colour: red}\n";
        match load_rubric_str(&rubric(tests, 0.0), Path::new(".")).unwrap_err() {
            RubricError::SchemaViolation { path, message } => {
                assert_eq!(path, "tests[0].colour");
                assert!(message.contains("colour"), "{message}");
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn structure_findings_in_declared_order() {
        let spec: StructureSpec = serde_yaml::from_str(
            "{svg_selector: svg, groups: [lines, legend], required: [{selector: 'g#circles circle', min_count: 10}]}",
        )
        .unwrap();
        let circles: String = (0..9).map(|i| format!("<circle cx='{i}'/>")).collect();
        let doc = format!("<svg><g id='lines'></g><g id='circles'>{circles}</g></svg>");
        let snap = parse_snapshot(doc.as_bytes()).unwrap();
        let findings = validate_structure(&spec, snap.root());
        assert_eq!(findings.len(), 3);
        assert_eq!(
            findings[0],
            StructureFinding::Found {
                selector: "g#lines".parse().unwrap(),
                count: 1
            }
        );
        assert_eq!(
            findings[1],
            StructureFinding::Missing {
                selector: "g#legend".parse().unwrap(),
                count: 0,
                expected_min: 1
            }
        );
        assert_eq!(
            findings[2],
            StructureFinding::Missing {
                selector: "g#circles circle".parse().unwrap(),
                count: 9,
                expected_min: 10
            }
        );
        assert_eq!(findings[1].describe(), "Missing required element g#legend");
    }
}

use std::collections::HashSet;
use std::fs;
use std::time::Instant;

use indexmap::IndexMap;

use crate::checks::{
    check_axis_ticks, check_color_grouping, check_constant, check_positions, check_quantile_colors,
    check_scale_domain, check_sorted, data_reading, CheckError, CheckResult, PositionOptions,
    TickExpectation,
};
use crate::dom::{parse_snapshot, select, ElementNode, NodeId, Selector, Snapshot};
use crate::interaction::{
    assert_state, capture_screenshot, run_chain, BrowserSession, InteractionError, SessionOptions,
};
use crate::layout::{detect_layout, format_layout_advisory, Confidence, LayoutReport};
use crate::rubric::{
    validate_structure, Category, Check, ExpectedDomain, InteractionCheck, RubricSpec, ScaleSpec,
    TestSpec,
};
use crate::scale::extract::extract_from_group;
use crate::scale::{best_kind, fit_scale, InferredScale, ScaleError, ScaleKind};
use crate::GRADER_VERSION;

use super::{
    serve_submission, GradeMode, GradeOptions, GradeReport, RunStatus, Status, Submission,
    TestOutcome,
};

/// Offender paths listed in feedback before eliding the rest.
const MAX_OFFENDERS_SHOWN: usize = 5;

/// Why a test could not be evaluated.
struct Unevaluable {
    message: String,
    detail: Option<String>,
}

impl Unevaluable {
    fn new(message: impl Into<String>) -> Self {
        Unevaluable {
            message: message.into(),
            detail: None,
        }
    }
}

/// What the advisory pass found, shared by every later test.
struct Findings {
    missing: Vec<Selector>,
    svg_problem: Option<String>,
    layout: Option<LayoutReport>,
}

struct Context<'a> {
    rubric: &'a RubricSpec,
    root: ElementNode<'a>,
    findings: Findings,
    scales: IndexMap<String, Result<InferredScale, String>>,
}

fn explain_fit_failure(
    e: &ScaleError,
    spec: &ScaleSpec,
    ticks: &[crate::scale::TickSample],
) -> String {
    let mut msg = format!(
        "the {} axis ({}) is not a {} scale: {e}",
        spec.id,
        axis_name(spec),
        spec.kind
    );
    if matches!(e, ScaleError::PoorFit { .. }) {
        if let Some((kind, r2)) = best_kind(ticks).filter(|(k, _)| *k != spec.kind) {
            msg.push_str(&format!(
                "; its ticks fit a {kind} scale better (r² = {r2:.4})"
            ));
        }
    }
    msg
}

fn axis_name(spec: &ScaleSpec) -> String {
    spec.axis_group
        .as_ref()
        .map_or_else(|| "no axis group".to_string(), |s| s.to_string())
}

/// Infer every positional scale. Continuous kinds claim axis groups before
/// band kinds, so an evenly spaced numeric axis never satisfies a band
/// scale meant for another group.
fn resolve_scales(
    rubric: &RubricSpec,
    root: ElementNode<'_>,
) -> IndexMap<String, Result<InferredScale, String>> {
    let mut order: Vec<&ScaleSpec> = rubric
        .scales
        .iter()
        .filter(|s| s.kind != ScaleKind::QuantileColor)
        .collect();
    order.sort_by_key(|s| s.kind == ScaleKind::Band);
    let mut claimed: HashSet<NodeId> = HashSet::new();
    let mut out = IndexMap::new();
    for spec in order {
        let Some(sel) = &spec.axis_group else {
            continue;
        };
        let groups = select(root, sel);
        let mut result = Err(format!(
            "no element matches {sel}, so the {} scale cannot be inferred",
            spec.id
        ));
        for g in groups.into_iter().filter(|g| !claimed.contains(&g.id())) {
            let axis = match extract_from_group(g, spec.orientation) {
                Ok(a) => a,
                Err(e) => {
                    result = Err(format!(
                        "cannot read ticks of the {} axis ({sel}): {e}",
                        spec.id
                    ));
                    continue;
                }
            };
            match fit_scale(&axis.ticks, spec.kind, rubric.thresholds_for(spec)) {
                Ok(s) => {
                    let mut s = s.with_orientation(axis.orientation);
                    if let (true, Some(extent)) = (spec.kind.is_continuous(), axis.extent) {
                        s = s.with_axis_extent(extent);
                    }
                    claimed.insert(g.id());
                    result = Ok(s);
                    break;
                }
                Err(e) => result = Err(explain_fit_failure(&e, spec, &axis.ticks)),
            }
        }
        out.insert(spec.id.clone(), result);
    }
    out
}

fn advisory_findings(rubric: &RubricSpec, root: ElementNode<'_>) -> Findings {
    let missing = validate_structure(&rubric.structure, root)
        .into_iter()
        .filter(|f| f.is_missing())
        .map(|f| f.selector().clone())
        .collect();
    let (layout, svg_problem) = match detect_layout(root, &rubric.structure) {
        Ok(l) => (Some(l), None),
        Err(e) => (None, Some(e.to_string())),
    };
    Findings {
        missing,
        svg_problem,
        layout,
    }
}

fn is_ident_char(c: char) -> bool {
    c.is_ascii_alphanumeric() || c == '-' || c == '_'
}

/// Whether matching `sel` presupposes an element matching `req`: some
/// alternative of `sel` begins with `req`'s compound.
fn depends_on(sel: &Selector, req: &Selector) -> bool {
    let r = req.expression().trim();
    sel.expression().split(',').map(str::trim).any(|a| {
        a.strip_prefix(r)
            .is_some_and(|rest| rest.chars().next().is_none_or(|c| !is_ident_char(c)))
    })
}

fn test_selectors<'a>(test: &'a TestSpec, rubric: &'a RubricSpec) -> Vec<&'a Selector> {
    let mut out = test.check.selectors();
    for id in test.check.scale_refs() {
        if let Some(s) = rubric.scale(id) {
            out.extend(s.axis_group.iter().chain(s.marks.iter()));
        }
    }
    out
}

fn offender_lines(snapshot: &Snapshot, offenders: &[NodeId]) -> Option<String> {
    if offenders.is_empty() {
        return None;
    }
    let mut paths: Vec<String> = offenders
        .iter()
        .take(MAX_OFFENDERS_SHOWN)
        .filter_map(|id| snapshot.node(*id).map(|n| n.path()))
        .collect();
    if offenders.len() > MAX_OFFENDERS_SHOWN {
        paths.push(format!(
            "and {} more",
            offenders.len() - MAX_OFFENDERS_SHOWN
        ));
    }
    Some(format!("Offending elements: {}", paths.join(", ")))
}

fn scored(test: &TestSpec, result: &CheckResult, snapshot: &Snapshot) -> TestOutcome {
    let mut feedback = Vec::new();
    if result.passed {
        feedback.push(format!("Passed: {}", result.expected));
    } else {
        feedback.push(format!("Expected: {}", result.expected));
        feedback.push(format!("Found: {}", result.actual));
    }
    feedback.extend(result.detail_lines.iter().cloned());
    if !result.passed {
        feedback.extend(offender_lines(snapshot, &result.offenders));
        if let Some(hint) = &test.feedback_hint {
            feedback.push(format!("Hint: {hint}"));
        }
    }
    let credit = if result.passed {
        1.0
    } else {
        result.credit.clamp(0.0, 1.0)
    };
    TestOutcome {
        test_id: test.id.clone(),
        category: test.category,
        points_awarded: test.points * credit,
        points_possible: test.points,
        status: if result.passed {
            Status::Pass
        } else {
            Status::Fail
        },
        feedback,
        detail: None,
    }
}

fn errored(test: &TestSpec, why: Unevaluable) -> TestOutcome {
    let mut feedback = vec![why.message];
    if let Some(hint) = &test.feedback_hint {
        feedback.push(format!("Hint: {hint}"));
    }
    TestOutcome {
        test_id: test.id.clone(),
        category: test.category,
        points_awarded: 0.0,
        points_possible: test.points,
        status: if test.category == Category::Advisory {
            Status::Advisory
        } else {
            Status::Error
        },
        feedback,
        detail: why.detail,
    }
}

fn advisory(test: &TestSpec, lines: Vec<String>) -> TestOutcome {
    TestOutcome {
        test_id: test.id.clone(),
        category: test.category,
        points_awarded: 0.0,
        points_possible: 0.0,
        status: Status::Advisory,
        feedback: lines,
        detail: None,
    }
}

fn structure_result(ctx: &Context<'_>) -> (CheckResult, Vec<String>) {
    let findings = validate_structure(&ctx.rubric.structure, ctx.root);
    let lines: Vec<String> = findings.iter().map(|f| f.describe()).collect();
    let missing = findings.iter().filter(|f| f.is_missing()).count();
    let result = CheckResult::verdict(
        missing == 0,
        format!("{} required elements", findings.len()),
        format!("{} of {} present", findings.len() - missing, findings.len()),
    );
    (result, lines)
}

fn layout_lines(ctx: &Context<'_>) -> Vec<String> {
    match (&ctx.findings.layout, &ctx.findings.svg_problem) {
        (Some(l), _) => format_layout_advisory(l),
        (None, Some(p)) => vec![format!("Could not analyse the chart layout: {p}")],
        (None, None) => Vec::new(),
    }
}

fn check_failure(e: CheckError) -> Result<CheckResult, Unevaluable> {
    match e {
        CheckError::Config(m) => Err(Unevaluable {
            message: "This test could not be evaluated.".into(),
            detail: Some(m),
        }),
        CheckError::InsufficientMarks {
            selector,
            found,
            needed,
        } => Ok(CheckResult::fail(
            format!("at least {needed} elements matching {selector}"),
            format!("{found} found"),
        )),
        CheckError::Datum {
            index,
            datum,
            source,
        } => Ok(CheckResult::fail(
            "every datum inside the chart's axes",
            format!("datum {index} {datum} cannot be placed: {source}"),
        )
        .with_line("The axis does not cover this value; check the scale domain".to_string())),
        CheckError::Dom(e) => Ok(CheckResult::fail("measurable marks", e.to_string())),
    }
}

impl Context<'_> {
    fn scale(&self, id: &str) -> Result<&InferredScale, Unevaluable> {
        match self.scales.get(id) {
            Some(Ok(s)) => Ok(s),
            Some(Err(m)) => Err(Unevaluable::new(format!("skipped: {m}"))),
            None => Err(Unevaluable::new(format!(
                "skipped: scale {id} has no axis to infer from"
            ))),
        }
    }

    fn column(
        &self,
        dataset: &str,
        field: &str,
    ) -> Result<Vec<crate::scale::DataValue>, Unevaluable> {
        self.rubric
            .dataset(dataset)
            .and_then(|t| t.column(field))
            .ok_or_else(|| Unevaluable {
                message: "This test could not be evaluated.".into(),
                detail: Some(format!("missing column {dataset}.{field}")),
            })
    }

    /// The first missing prerequisite of a test, if any.
    fn gate(&self, test: &TestSpec) -> Option<String> {
        if matches!(
            test.check,
            Check::Interaction(_) | Check::Structure | Check::Layout
        ) {
            return None;
        }
        if self.findings.svg_problem.is_some() {
            return Some(self.rubric.structure.svg_selector.to_string());
        }
        let sels = test_selectors(test, self.rubric);
        self.findings
            .missing
            .iter()
            .find(|req| sels.iter().any(|s| depends_on(s, req)))
            .map(|r| r.to_string())
    }

    fn run_static(&self, test: &TestSpec) -> Result<CheckResult, Unevaluable> {
        let tol = &self.rubric.tolerances;
        let root = self.root;
        let result = match &test.check {
            Check::Structure => Ok(structure_result(self).0),
            Check::Layout => {
                let ok = self
                    .findings
                    .layout
                    .as_ref()
                    .is_some_and(|l| l.confidence != Confidence::Unknown);
                Ok(CheckResult::verdict(
                    ok,
                    "a detectable chart layout",
                    if ok { "detected" } else { "undetected" },
                ))
            }
            Check::Positions(p) => {
                let (xs, ys) = (self.scale(&p.x_scale)?, self.scale(&p.y_scale)?);
                let data = self
                    .rubric
                    .dataset(&p.dataset)
                    .and_then(|t| t.pairs(&p.x_field, &p.y_field))
                    .ok_or_else(|| Unevaluable::new("This test could not be evaluated."))?;
                let opts = PositionOptions {
                    tolerance_px: p.tolerance_px.unwrap_or(tol.position_px),
                    exact_count: p.exact_count,
                    partial: p.partial,
                };
                check_positions(root, &p.marks, xs, ys, &data, opts)
            }
            Check::Scale(c) => {
                let spec = self
                    .rubric
                    .scale(&c.scale)
                    .ok_or_else(|| Unevaluable::new("unknown scale"))?;
                let s = match self.scales.get(&c.scale) {
                    Some(Ok(s)) => s,
                    Some(Err(m)) => {
                        return Ok(CheckResult::fail(
                            format!("a {} scale on {}", spec.kind, axis_name(spec)),
                            m.clone(),
                        ))
                    }
                    None => {
                        return Err(Unevaluable::new(format!(
                            "skipped: scale {} has no axis",
                            c.scale
                        )))
                    }
                };
                let fit_line = format!(
                    "Fitted a {} {} scale to {} ticks (r² = {:.5})",
                    s.orientation,
                    s.kind,
                    s.ticks.len(),
                    s.fit_r2
                );
                let expected = match &spec.expected_domain {
                    Some(ExpectedDomain::Dataset(f)) => {
                        Some(self.column(&f.from_dataset, &f.field)?)
                    }
                    Some(ExpectedDomain::Literal(pair)) => Some(pair.to_vec()),
                    None => None,
                };
                Ok(match expected {
                    Some(values) => check_scale_domain(s, &values, c.domain_match, tol.position_px)
                        .with_line(fit_line),
                    None => CheckResult::pass(
                        format!("a {} scale", spec.kind),
                        format!("a {} scale", s.kind),
                    )
                    .with_line(fit_line),
                })
            }
            Check::AxisTicks(a) => {
                let s = self.scale(&a.scale)?;
                let expectation = match (&a.interval, &a.values) {
                    (Some(step), _) => TickExpectation::Interval(*step),
                    (None, Some(values)) => {
                        let read: Option<Vec<f64>> = values.iter().map(data_reading).collect();
                        TickExpectation::Values(read.ok_or_else(|| Unevaluable {
                            message: "This test could not be evaluated.".into(),
                            detail: Some("expected tick values are not numbers or dates".into()),
                        })?)
                    }
                    (None, None) => {
                        return Err(Unevaluable::new("This test could not be evaluated."))
                    }
                };
                Ok(check_axis_ticks(s, &expectation))
            }
            Check::Sorted(c) => check_sorted(root, &c.marks, &c.key, c.order, c.along),
            Check::Constant(c) => check_constant(
                root,
                &c.marks,
                &c.attribute,
                c.tolerance.unwrap_or(tol.size_px),
                c.along,
            ),
            Check::ColorGrouping(c) => {
                let groups: Vec<Selector> = c.groups.iter().map(|g| g.marks.clone()).collect();
                check_color_grouping(root, &groups, &c.property)
            }
            Check::QuantileColors(q) => {
                let spec = self
                    .rubric
                    .scale(&q.scale)
                    .ok_or_else(|| Unevaluable::new("unknown scale"))?;
                let (Some(marks), Some(field), Some(k)) = (&spec.marks, &spec.values, spec.k)
                else {
                    return Err(Unevaluable::new("This test could not be evaluated."));
                };
                let values: Option<Vec<f64>> = self
                    .column(&field.from_dataset, &field.field)?
                    .iter()
                    .map(data_reading)
                    .collect();
                let values = values.ok_or_else(|| Unevaluable {
                    message: "This test could not be evaluated.".into(),
                    detail: Some(format!(
                        "{}.{} holds non-numeric values",
                        field.from_dataset, field.field
                    )),
                })?;
                check_quantile_colors(root, marks, &spec.color_property, &values, k)
            }
            Check::Interaction(_) => {
                return Err(Unevaluable::new(
                    "Interaction tests need a live browser; this submission was graded statically.",
                ))
            }
        };
        result.or_else(check_failure)
    }
}

/// Evaluate every test against `snapshot`, advisory tests first, and
/// return outcomes in rubric order. `interact` runs interaction tests.
fn evaluate<E>(
    rubric: &RubricSpec,
    snapshot: &Snapshot,
    mut interact: impl FnMut(&TestSpec, &InteractionCheck) -> Result<TestOutcome, E>,
) -> Result<Vec<TestOutcome>, E> {
    let root = snapshot.root();
    let ctx = Context {
        rubric,
        root,
        findings: advisory_findings(rubric, root),
        scales: resolve_scales(rubric, root),
    };
    let mut outcomes: Vec<Option<TestOutcome>> = vec![None; rubric.tests.len()];
    let advisory_first = rubric
        .tests
        .iter()
        .enumerate()
        .filter(|(_, t)| t.category == Category::Advisory)
        .chain(
            rubric
                .tests
                .iter()
                .enumerate()
                .filter(|(_, t)| t.category != Category::Advisory),
        );
    for (i, test) in advisory_first {
        let outcome = if test.category == Category::Advisory {
            let lines = match &test.check {
                Check::Structure => structure_result(&ctx).1,
                Check::Layout => layout_lines(&ctx),
                _ => match ctx.run_static(test) {
                    Ok(r) => std::iter::once(format!(
                        "{}: {}",
                        if r.passed { "OK" } else { "Note" },
                        r.actual
                    ))
                    .chain(r.detail_lines)
                    .collect(),
                    Err(u) => vec![u.message],
                },
            };
            advisory(test, lines)
        } else if let Some(missing) = ctx.gate(test) {
            errored(
                test,
                Unevaluable::new(format!("skipped: prerequisite missing {missing}")),
            )
        } else if let Check::Interaction(ic) = &test.check {
            interact(test, ic)?
        } else {
            match ctx.run_static(test) {
                Ok(r) => scored(test, &r, snapshot),
                Err(u) => errored(test, u),
            }
        };
        outcomes[i] = Some(outcome);
    }
    Ok(outcomes
        .into_iter()
        .map(|o| o.expect("every test evaluated"))
        .collect())
}

fn report(
    sub: &Submission,
    rubric: &RubricSpec,
    outcomes: Vec<TestOutcome>,
    status: RunStatus,
    started: Instant,
) -> GradeReport {
    let mut r = GradeReport {
        submission_id: sub.id.clone(),
        score: 0.0,
        max_score: rubric.meta.total_points,
        outcomes,
        screenshot_path: None,
        duration_ms: started.elapsed().as_millis() as u64,
        grader_version: GRADER_VERSION.to_string(),
        status,
        diagnostics: Vec::new(),
    };
    r.score = r.awarded_total();
    r
}

fn zero_score(rubric: &RubricSpec, message: &str, detail: Option<String>) -> Vec<TestOutcome> {
    rubric
        .tests
        .iter()
        .map(|t| {
            errored(
                t,
                Unevaluable {
                    message: message.to_string(),
                    detail: detail.clone(),
                },
            )
        })
        .collect()
}

/// Grade one submission. Failures of the page or the grading
/// infrastructure yield a zero-score report, never an error.
pub fn grade(sub: &Submission, rubric: &RubricSpec, options: &GradeOptions) -> GradeReport {
    let started = Instant::now();
    match options.mode {
        GradeMode::Static => grade_static(sub, rubric, started),
        GradeMode::Live => grade_live(sub, rubric, options, started),
    }
}

fn grade_static(sub: &Submission, rubric: &RubricSpec, started: Instant) -> GradeReport {
    let failed = |message: String, detail: String| {
        let mut r = report(
            sub,
            rubric,
            zero_score(rubric, &message, Some(detail.clone())),
            RunStatus::Failed,
            started,
        );
        r.diagnostics.push(detail);
        r
    };
    let bytes = match fs::read(sub.entry_path()) {
        Ok(b) => b,
        Err(e) => {
            return failed(
                format!("Could not read {}.", sub.entry_file),
                format!("{}: {e}", sub.entry_path().display()),
            )
        }
    };
    let snapshot = match parse_snapshot(&bytes) {
        Ok(s) => s,
        Err(e) => {
            return failed(
                format!("{} is not a readable HTML/SVG document.", sub.entry_file),
                e.to_string(),
            )
        }
    };
    let outcomes = evaluate(rubric, &snapshot, |test, _| -> Result<TestOutcome, ()> {
        Ok(errored(
            test,
            Unevaluable::new(
                "Interaction tests need a live browser; this submission was graded statically.",
            ),
        ))
    })
    .unwrap_or_default();
    report(sub, rubric, outcomes, RunStatus::Graded, started)
}

/// How a live attempt ended short of a full grading.
enum LiveFailure {
    /// The page itself is at fault; retrying will not help.
    Page { message: String, detail: String },
    /// Browser or driver trouble; worth a fresh session.
    Infrastructure(String),
}

fn classify(e: InteractionError) -> LiveFailure {
    let detail = e.to_string();
    match e {
        InteractionError::JavascriptFatal(m) => LiveFailure::Page {
            message: format!("Your page threw an error while loading: {m}. Open the browser console to find and fix it."),
            detail,
        },
        InteractionError::PageNotFound { .. } => LiveFailure::Page {
            message: "The page to grade was not found. Check the file name of your submission.".into(),
            detail,
        },
        InteractionError::PageLoadTimeout(s) => LiveFailure::Page {
            message: format!("Your page did not finish loading within {s} seconds."),
            detail,
        },
        InteractionError::Dom(_) => LiveFailure::Page { message: "The rendered page could not be read.".into(), detail },
        _ => LiveFailure::Infrastructure(detail),
    }
}

fn save_screenshot(
    session: &BrowserSession,
    options: &GradeOptions,
    report_path: &mut Option<String>,
    diagnostics: &mut Vec<String>,
) {
    let Some(path) = &options.screenshot_path else {
        return;
    };
    let saved = capture_screenshot(session)
        .map_err(|e| e.to_string())
        .and_then(|png| fs::write(path, png).map_err(|e| format!("{}: {e}", path.display())));
    match saved {
        Ok(()) => *report_path = Some(path.display().to_string()),
        Err(e) => diagnostics.push(format!("screenshot not saved: {e}")),
    }
}

fn interaction_outcome(
    session: &mut BrowserSession,
    pristine: &mut bool,
    rubric: &RubricSpec,
    test: &TestSpec,
    ic: &InteractionCheck,
) -> Result<TestOutcome, LiveFailure> {
    if ic.fresh_page && !*pristine {
        session.reload().map_err(classify)?;
    }
    *pristine = false;
    let delta = match run_chain(
        session,
        &ic.actions,
        ic.settle_ms.unwrap_or(rubric.meta.settle_ms),
    ) {
        Ok(d) => d,
        Err(InteractionError::TargetNotFound { selector, step }) => {
            let r = CheckResult::fail(format!("an element matching {selector}"), "none found")
                .with_line(format!(
                    "The action chain stopped at step {} ({}): nothing matches {selector}",
                    step + 1,
                    ic.actions[step].kind()
                ));
            return Ok(scored(test, &r, &session.snapshot().map_err(classify)?));
        }
        Err(InteractionError::ChainInterrupted { step, cause }) => {
            let r = CheckResult::fail(
                "the action chain to complete",
                format!("step {} ({}) failed", step + 1, ic.actions[step].kind()),
            );
            let mut o = scored(test, &r, &session.snapshot().map_err(classify)?);
            o.detail = Some(cause);
            return Ok(o);
        }
        Err(e) => return Err(classify(e)),
    };
    let results: Vec<CheckResult> = ic.assert.iter().map(|a| assert_state(&delta, a)).collect();
    let passed = results.iter().all(|r| r.passed);
    let join = |f: fn(&CheckResult) -> &str| results.iter().map(f).collect::<Vec<_>>().join("; ");
    let mut combined = CheckResult::verdict(passed, join(|r| &r.expected), join(|r| &r.actual));
    for r in &results {
        let mark = if r.passed { "✓" } else { "✗" };
        combined = combined.with_line(format!("{mark} {}: {}", r.expected, r.actual));
        if !r.passed {
            combined.detail_lines.extend(r.detail_lines.iter().cloned());
            combined.offenders.extend(r.offenders.iter().copied());
        }
    }
    Ok(scored(test, &combined, &delta.after))
}

fn live_attempt(
    entry_url: &str,
    rubric: &RubricSpec,
    options: &GradeOptions,
    screenshot: &mut Option<String>,
    diagnostics: &mut Vec<String>,
) -> Result<Vec<TestOutcome>, LiveFailure> {
    let session_options = SessionOptions {
        page_load_timeout: options.page_load_timeout,
        implicit_wait_ms: options.implicit_wait_ms,
        ready_selector: rubric.meta.ready_selector.clone(),
        headless: true,
    };
    let mut session = BrowserSession::start(
        &options.webdriver_url,
        rubric.meta.viewport,
        &session_options,
    )
    .map_err(classify)?;
    let loaded = session.navigate(entry_url);
    save_screenshot(&session, options, screenshot, diagnostics);
    loaded.map_err(classify)?;
    let snapshot = session.snapshot().map_err(classify)?;
    let mut pristine = true;
    let outcomes = evaluate(rubric, &snapshot, |test, ic| {
        interaction_outcome(&mut session, &mut pristine, rubric, test, ic)
    });
    session.close();
    outcomes
}

fn grade_live(
    sub: &Submission,
    rubric: &RubricSpec,
    options: &GradeOptions,
    started: Instant,
) -> GradeReport {
    let served = match serve_submission(sub, options.shared_assets.as_deref()) {
        Ok(s) => s,
        Err(e) => {
            let mut r = report(
                sub,
                rubric,
                zero_score(
                    rubric,
                    "The grader could not serve your files. Please resubmit.",
                    Some(e.to_string()),
                ),
                RunStatus::Aborted,
                started,
            );
            r.diagnostics.push(e.to_string());
            return r;
        }
    };
    let entry_url = served.entry_url();
    let mut diagnostics = Vec::new();
    let mut screenshot = None;
    let mut outcome = None;
    for attempt in 0..=options.retries {
        match live_attempt(
            &entry_url,
            rubric,
            options,
            &mut screenshot,
            &mut diagnostics,
        ) {
            Ok(outcomes) => {
                outcome = Some(Ok(outcomes));
                break;
            }
            Err(LiveFailure::Page { message, detail }) => {
                diagnostics.push(detail.clone());
                outcome = Some(Err((message, detail)));
                break;
            }
            Err(LiveFailure::Infrastructure(detail)) => {
                diagnostics.push(format!(
                    "attempt {} of {}: {detail}",
                    attempt + 1,
                    options.retries + 1
                ));
            }
        }
    }
    diagnostics.extend(
        served
            .traversal_attempts()
            .into_iter()
            .map(|u| format!("refused request outside the submission: {u}")),
    );
    let mut r = match outcome {
        Some(Ok(outcomes)) => report(sub, rubric, outcomes, RunStatus::Graded, started),
        Some(Err((message, detail))) => report(
            sub,
            rubric,
            zero_score(rubric, &message, Some(detail)),
            RunStatus::Failed,
            started,
        ),
        None => {
            let message = "The grader could not run your page in a browser. This is not your fault; please resubmit.";
            report(
                sub,
                rubric,
                zero_score(rubric, message, diagnostics.last().cloned()),
                RunStatus::Aborted,
                started,
            )
        }
    };
    r.screenshot_path = screenshot;
    r.diagnostics = diagnostics;
    r
}

use crate::dom::{parse_color, select, ElementNode, Rgba, Selector};
use crate::rubric::DomainMatch;
use crate::scale::{
    forward, infer_quantile_colors, parse_date_label, parse_numeric_label, DataValue, Domain,
    InferredScale, Range, ScaleError,
};

use super::{num, CheckError, CheckResult};

#[derive(Debug, Clone, PartialEq)]
pub enum TickExpectation {
    /// Uniform spacing between consecutive tick values.
    Interval(f64),
    Values(Vec<f64>),
}

/// A tick label's value: a number when it reads as one, else a date.
pub(crate) fn reading(label: &str) -> Option<f64> {
    parse_numeric_label(label).or_else(|| parse_date_label(label))
}

/// Reading of a data value given in a rubric (number, numeric text or date).
pub fn data_reading(v: &DataValue) -> Option<f64> {
    match v {
        DataValue::Number(n) => Some(*n),
        DataValue::Text(s) => reading(s),
    }
}

/// `[a, b, c]`, shortened to the first three values when long.
pub fn format_values(values: &[f64]) -> String {
    if values.len() <= 6 {
        format!(
            "[{}]",
            values
                .iter()
                .map(|v| num(*v))
                .collect::<Vec<_>>()
                .join(", ")
        )
    } else {
        format!(
            "[{}, …]",
            values[..3]
                .iter()
                .map(|v| num(*v))
                .collect::<Vec<_>>()
                .join(", ")
        )
    }
}

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-6 * a.abs().max(b.abs()).max(1.0)
}

/// Compare an axis's tick values with an expected interval or list.
pub fn check_axis_ticks(scale: &InferredScale, expected: &TickExpectation) -> CheckResult {
    let mut found: Vec<f64> = scale
        .ticks
        .iter()
        .filter_map(|t| reading(&t.label))
        .collect();
    found.sort_by(f64::total_cmp);
    let want: Vec<f64> = match expected {
        TickExpectation::Values(v) => {
            let mut v = v.clone();
            v.sort_by(f64::total_cmp);
            v
        }
        TickExpectation::Interval(step) => {
            let mut v = Vec::new();
            if let (Some(first), Some(last)) = (found.first(), found.last()) {
                let mut x = *first;
                while x <= last + step * 1e-6 && v.len() < 10_000 {
                    v.push(x);
                    x += step;
                }
            }
            v
        }
    };
    let line = format!("Read {} tick labels from the axis", found.len());
    if found.len() < 2 {
        return CheckResult::fail(format_values(&want), format_values(&found))
            .with_line(line)
            .with_line("Found fewer than 2 readable ticks".to_string());
    }
    let ok = match expected {
        TickExpectation::Interval(step) => found.windows(2).all(|w| close(w[1] - w[0], *step)),
        TickExpectation::Values(_) => {
            found.len() == want.len() && found.iter().zip(&want).all(|(a, b)| close(*a, *b))
        }
    };
    let (f, w) = (format_values(&found), format_values(&want));
    let result = CheckResult::verdict(ok, w.clone(), f.clone()).with_line(line);
    if ok {
        result
    } else {
        let why = match expected {
            TickExpectation::Interval(step) => {
                format!(" (ticks are not spaced at an interval of {})", num(*step))
            }
            TickExpectation::Values(_) => String::new(),
        };
        result.with_line(format!("Found ticks {f}, but expected {w}{why}"))
    }
}

/// Check that an axis covers (or exactly spans) the expected data domain.
/// Continuous scales compare in pixels; band scales compare categories.
pub fn check_scale_domain(
    scale: &InferredScale,
    expected: &[DataValue],
    mode: DomainMatch,
    tolerance_px: f64,
) -> CheckResult {
    match (&scale.domain, &scale.range) {
        (Domain::Categories(cats), _) => {
            let mut want: Vec<String> = Vec::new();
            for v in expected {
                let s = v.to_string().trim().to_string();
                if !want.contains(&s) {
                    want.push(s);
                }
            }
            let absent: Vec<&String> = want
                .iter()
                .filter(|w| forward(scale, &DataValue::Text((*w).clone())).is_err())
                .collect();
            let extra = cats.len().saturating_sub(want.len() - absent.len());
            let ok = absent.is_empty() && (mode == DomainMatch::Contains || extra == 0);
            let mut r = CheckResult::verdict(
                ok,
                format!("categories {}", want.join(", ")),
                format!("categories {}", cats.join(", ")),
            );
            if !absent.is_empty() {
                r = r.with_line(format!(
                    "Missing categories: {}",
                    absent
                        .iter()
                        .map(|s| s.as_str())
                        .collect::<Vec<_>>()
                        .join(", ")
                ));
            }
            if mode == DomainMatch::Exact && extra > 0 {
                r = r.with_line(format!(
                    "{extra} categories on the axis are not in the data"
                ));
            }
            r
        }
        (Domain::Continuous([d0, d1]), Range::Pixels([r0, r1])) => {
            let values: Vec<f64> = expected
                .iter()
                .filter_map(|v| scale.coerce(v).ok())
                .collect();
            if values.is_empty() {
                return CheckResult::fail("a data domain", "no readable data values").with_line(
                    format!(
                        "Read {} data values; none parse as {}",
                        expected.len(),
                        scale.kind
                    ),
                );
            }
            let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
            let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let expected_text = format!("domain covering [{}, {}]", num(lo), num(hi));
            let actual_text = format!("axis domain [{}, {}]", num(*d0), num(*d1));
            let at = |v: f64| {
                forward(scale, &DataValue::Number(v))
                    .ok()
                    .and_then(|m| m.px())
            };
            let (Some(p_lo), Some(p_hi)) = (at(lo), at(hi)) else {
                return CheckResult::fail(expected_text, actual_text)
                    .with_line("The data extends beyond what the axis shows".to_string());
            };
            let (min_px, max_px) = (r0.min(*r1) - tolerance_px, r0.max(*r1) + tolerance_px);
            let inside = |p: f64| p >= min_px && p <= max_px;
            let ok = match mode {
                DomainMatch::Contains => inside(p_lo) && inside(p_hi),
                DomainMatch::Exact => {
                    (p_lo - r0).abs() <= tolerance_px && (p_hi - r1).abs() <= tolerance_px
                }
            };
            let line = format!(
                "Data extent maps to {}..{}px; axis spans {}..{}px",
                num(p_lo),
                num(p_hi),
                num(*r0),
                num(*r1)
            );
            CheckResult::verdict(ok, expected_text, actual_text).with_line(line)
        }
        _ => CheckResult::fail("a positional scale", format!("a {} scale", scale.kind))
            .with_line("Domain checks apply to axis scales only".to_string()),
    }
}

fn mark_color(n: &ElementNode<'_>, property: &str) -> Option<Rgba> {
    parse_color(
        &n.inherited_style_value(property)
            .unwrap_or_else(|| "black".into()),
    )
    .ok()
}

/// Mark colors, in document order, must follow a k-quantile partition of
/// the aligned data values.
pub fn check_quantile_colors(
    root: ElementNode<'_>,
    marks: &Selector,
    property: &str,
    values: &[f64],
    k: usize,
) -> Result<CheckResult, CheckError> {
    let nodes = select(root, marks);
    if nodes.is_empty() {
        return Err(CheckError::InsufficientMarks {
            selector: marks.to_string(),
            found: 0,
            needed: 1,
        });
    }
    let expected = format!(
        "{k} colors assigned by {k}-quantiles of {} values",
        values.len()
    );
    let mut colors = Vec::with_capacity(nodes.len());
    for n in &nodes {
        match mark_color(n, property) {
            Some(c) => colors.push(c),
            None => {
                return Ok(CheckResult::fail(
                    expected,
                    format!("{} has an unreadable {property}", n.describe()),
                )
                .with_line(format!("Read {property} of marks matching {marks}"))
                .with_offenders([n.id()]))
            }
        }
    }
    let line = format!("Read {property} of {} marks matching {marks}", nodes.len());
    Ok(match infer_quantile_colors(values, &colors, k) {
        Ok(s) => {
            let thresholds = match &s.domain {
                Domain::Thresholds(t) => format_values(t),
                _ => String::new(),
            };
            CheckResult::pass(expected, format!("thresholds {thresholds}")).with_line(line)
        }
        Err(ScaleError::QuantileMismatch {
            index,
            value,
            expected: want,
            found,
        }) => CheckResult::fail(
            expected,
            format!("datum {index} (value {}) is {found}", num(value)),
        )
        .with_line(line)
        .with_line(format!(
            "Value {} belongs to the bucket colored {want}, but its mark is {found}",
            num(value)
        ))
        .with_offenders([nodes[index].id()]),
        Err(e) => CheckResult::fail(expected, e.to_string()).with_line(line),
    })
}

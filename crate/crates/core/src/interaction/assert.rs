use crate::checks::CheckResult;
use crate::dom::{
    parse_color, parse_length, resolve_geometry, select, ElementNode, Rgba, Snapshot,
};

use super::{DomDelta, Relation, StateAssertion};

/// An attribute value reduced to something comparable across formats.
#[derive(Debug, Clone, PartialEq)]
enum Canonical {
    Number(f64),
    Color(Rgba),
    Text(String),
}

impl Canonical {
    fn of(raw: &str) -> Canonical {
        let t = raw.trim();
        if let Ok(n) = parse_length("value", t) {
            return Canonical::Number(n);
        }
        if let Ok(c) = parse_color(t) {
            return Canonical::Color(c);
        }
        Canonical::Text(t.to_string())
    }

    fn same(&self, other: &Canonical) -> bool {
        match (self, other) {
            (Canonical::Number(a), Canonical::Number(b)) => {
                (a - b).abs() <= 1e-6 * a.abs().max(b.abs()).max(1.0)
            }
            _ => self == other,
        }
    }

    fn show(&self) -> String {
        match self {
            Canonical::Number(n) => crate::checks::num(*n),
            Canonical::Color(c) => c.to_hex(),
            Canonical::Text(s) => format!("{s:?}"),
        }
    }
}

fn show(v: &Option<Canonical>) -> String {
    v.as_ref()
        .map_or_else(|| "(unset)".to_string(), Canonical::show)
}

fn target<'a>(s: &'a Snapshot, a: &StateAssertion) -> Option<ElementNode<'a>> {
    select(s.root(), &a.target).into_iter().next()
}

fn value(n: &ElementNode<'_>, attribute: &str) -> Option<Canonical> {
    n.style_value(attribute).map(|v| Canonical::of(&v))
}

/// Page position of an element: its geometric center, or the origin of its
/// coordinate system for groups.
fn position(n: &ElementNode<'_>) -> Option<(f64, f64)> {
    if let Some(c) = resolve_geometry(n).ok().and_then(|g| g.center()) {
        return Some(c);
    }
    n.ctm().ok().map(|m| m.apply(0.0, 0.0))
}

fn rendered_count(s: &Snapshot, a: &StateAssertion) -> usize {
    select(s.root(), &a.target)
        .iter()
        .filter(|n| n.is_rendered())
        .count()
}

/// Evaluate an assertion against a delta. Colors compare as RGBA and
/// numbers as reals, so `#1f77b4` equals `rgb(31, 119, 180)`.
pub fn assert_state(delta: &DomDelta, a: &StateAssertion) -> CheckResult {
    let sel = &a.target;
    match a.relation {
        Relation::ElementAppears | Relation::ElementDisappears => {
            let (before, after) = (
                rendered_count(&delta.before, a),
                rendered_count(&delta.after, a),
            );
            let appears = a.relation == Relation::ElementAppears;
            let ok = if appears {
                after > before
            } else {
                after < before
            };
            let expected = if appears {
                format!("{sel} appears")
            } else {
                format!("{sel} disappears")
            };
            CheckResult::verdict(
                ok,
                expected,
                format!("{before} visible before, {after} after"),
            )
            .with_line(format!(
                "Counted visible elements matching {sel} before and after the actions"
            ))
        }
        Relation::PositionChanged => {
            let expected = format!("{sel} moves");
            let (Some(b), Some(n)) = (target(&delta.before, a), target(&delta.after, a)) else {
                return CheckResult::fail(
                    expected,
                    format!("no element matches {sel} before and after the actions"),
                );
            };
            match (position(&b), position(&n)) {
                (Some(p), Some(q)) => {
                    let d = ((q.0 - p.0).powi(2) + (q.1 - p.1).powi(2)).sqrt();
                    let num = crate::checks::num;
                    CheckResult::verdict(d > 0.5, expected, format!("moved {}px", num(d)))
                        .with_line(format!(
                            "{} went from ({}, {}) to ({}, {})",
                            n.describe(),
                            num(p.0),
                            num(p.1),
                            num(q.0),
                            num(q.1)
                        ))
                }
                _ => CheckResult::fail(
                    expected,
                    format!("the position of {sel} cannot be determined"),
                ),
            }
        }
        relation => {
            let attr = a.attribute.as_deref().unwrap_or_default();
            let expected = match relation {
                Relation::Equal => format!(
                    "{attr} of {sel} is {}",
                    show(&a.literal.as_deref().map(Canonical::of))
                ),
                Relation::Changed => format!("{attr} of {sel} changes"),
                Relation::Unchanged => format!("{attr} of {sel} stays the same"),
                Relation::GreaterThanBefore => format!("{attr} of {sel} increases"),
                _ => format!("{attr} of {sel} decreases"),
            };
            let Some(after_node) = target(&delta.after, a) else {
                return CheckResult::fail(
                    expected,
                    format!("no element matches {sel} after the actions"),
                );
            };
            let after = value(&after_node, attr);
            let before = target(&delta.before, a).and_then(|n| value(&n, attr));
            let actual = format!("{attr} {} → {}", show(&before), show(&after));
            let same = match (&before, &after) {
                (Some(x), Some(y)) => x.same(y),
                (None, None) => true,
                _ => false,
            };
            let result = match relation {
                Relation::Equal => {
                    let want = a.literal.as_deref().map(Canonical::of);
                    let ok = matches!((&after, &want), (Some(x), Some(y)) if x.same(y));
                    CheckResult::verdict(ok, expected, actual)
                }
                Relation::Changed => {
                    let r = CheckResult::verdict(!same, expected, actual);
                    if same {
                        r.with_line(format!(
                            "No change detected: {attr} stayed {}",
                            show(&after)
                        ))
                    } else {
                        r
                    }
                }
                Relation::Unchanged => CheckResult::verdict(same, expected, actual),
                _ => match (&before, &after) {
                    (Some(Canonical::Number(x)), Some(Canonical::Number(y))) => {
                        let ok = if relation == Relation::GreaterThanBefore {
                            y > x
                        } else {
                            y < x
                        };
                        CheckResult::verdict(ok, expected, actual)
                    }
                    _ => CheckResult::fail(expected, actual)
                        .with_line(format!("{attr} is not numeric before and after")),
                },
            };
            result.with_offenders([after_node.id()])
        }
    }
}

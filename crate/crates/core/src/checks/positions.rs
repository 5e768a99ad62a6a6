use serde::Serialize;

use crate::dom::{resolve_geometry, select, ElementNode, NodeId, Selector};
use crate::rubric::Partial;
use crate::scale::{forward, DataValue, Domain, InferredScale, Orientation, Range, ScaleKind};

use super::{bbox, num, CheckError, CheckResult};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PositionOptions {
    pub tolerance_px: f64,
    /// Fail when marks are left over after matching.
    pub exact_count: bool,
    pub partial: Partial,
}

impl Default for PositionOptions {
    fn default() -> Self {
        PositionOptions {
            tolerance_px: 2.0,
            exact_count: false,
            partial: Partial::None,
        }
    }
}

/// Where one datum should be drawn and what, if anything, sits there.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DatumMatch {
    pub datum: (String, String),
    pub expected_px: (f64, f64),
    pub matched_node: Option<NodeId>,
    /// Distance to the matched mark, or to the nearest mark when unmatched.
    pub distance_px: f64,
}

#[derive(Clone, Copy, PartialEq)]
enum Axis {
    X,
    Y,
}

fn axis_of(scale: &InferredScale, fallback: Axis) -> Axis {
    match scale.orientation {
        Orientation::Horizontal => Axis::X,
        Orientation::Vertical => Axis::Y,
        _ => fallback,
    }
}

/// Pixel where a bar along this scale starts: zero when the domain holds
/// it, otherwise the low end of the domain.
fn baseline_px(scale: &InferredScale) -> Option<f64> {
    let (Domain::Continuous([d0, d1]), Range::Pixels([r0, _])) = (&scale.domain, &scale.range)
    else {
        return None;
    };
    match scale.zero_px() {
        Some(z) if *d0 <= 0.0 && 0.0 <= *d1 => Some(z),
        _ => Some(*r0),
    }
}

/// Coordinate a box mark encodes along one axis: its center for a band
/// scale, its edge away from the baseline for a continuous one.
fn box_coordinate(lo: f64, hi: f64, scale: &InferredScale) -> f64 {
    if scale.kind == ScaleKind::Band {
        return (lo + hi) / 2.0;
    }
    match baseline_px(scale) {
        Some(base) if (lo - base).abs() > (hi - base).abs() => lo,
        Some(_) => hi,
        None => (lo + hi) / 2.0,
    }
}

/// A mark and the point it offers for matching.
pub type MarkPoint = (NodeId, (f64, f64));

/// The candidate points a set of marks offers for matching. A single
/// path or polyline offers its vertices; anything else offers one point
/// per mark.
pub fn mark_points<'a>(
    marks: &[ElementNode<'a>],
    x_scale: &InferredScale,
    y_scale: &InferredScale,
) -> Result<Vec<MarkPoint>, CheckError> {
    let x_axis = axis_of(x_scale, Axis::X);
    let (h_scale, v_scale) = if x_axis == Axis::X {
        (x_scale, y_scale)
    } else {
        (y_scale, x_scale)
    };
    if let [only] = marks {
        if matches!(only.tag(), "path" | "polyline" | "polygon" | "line") {
            let geom = resolve_geometry(only)?;
            if let Some(points) = geom.path_points {
                return Ok(points.into_iter().map(|p| (only.id(), p)).collect());
            }
        }
    }
    let mut out = Vec::with_capacity(marks.len());
    for m in marks {
        let geom = resolve_geometry(m)?;
        let point = match (m.tag(), bbox(&geom)) {
            ("rect", Some((x0, y0, x1, y1))) => (
                box_coordinate(x0, x1, h_scale),
                box_coordinate(y0, y1, v_scale),
            ),
            _ => match geom.center() {
                Some(c) => c,
                None => continue,
            },
        };
        out.push((m.id(), point));
    }
    Ok(out)
}

fn describe_scale(name: &str, s: &InferredScale) -> String {
    let domain = match &s.domain {
        Domain::Continuous([a, b]) => format!("[{}, {}]", num(*a), num(*b)),
        Domain::Categories(c) => format!("{} categories", c.len()),
        Domain::Thresholds(t) => format!("{} thresholds", t.len()),
    };
    let range = match &s.range {
        Range::Pixels([a, b]) => format!("[{}, {}]px", num(*a), num(*b)),
        Range::Colors(c) => format!("{} colors", c.len()),
    };
    format!(
        "Assumed {name} scale: {} {}, domain {domain} → range {range}",
        s.orientation, s.kind
    )
}

/// Compare marks with the positions the data should occupy under the
/// given scales. Expected points are matched greedily to the nearest
/// unclaimed mark within tolerance, closest pairs first.
pub fn check_positions(
    root: ElementNode<'_>,
    marks: &Selector,
    x_scale: &InferredScale,
    y_scale: &InferredScale,
    data: &[(DataValue, DataValue)],
    opts: PositionOptions,
) -> Result<CheckResult, CheckError> {
    let x_axis = axis_of(x_scale, Axis::X);
    let y_axis = axis_of(y_scale, if x_axis == Axis::X { Axis::Y } else { Axis::X });
    if x_axis == y_axis {
        return Err(CheckError::Config(
            "both scales run along the same axis".into(),
        ));
    }
    let nodes = select(root, marks);
    let candidates = mark_points(&nodes, x_scale, y_scale)?;

    let mut expected = Vec::with_capacity(data.len());
    for (i, (a, b)) in data.iter().enumerate() {
        let datum = format!("({a}, {b})");
        let pa = forward(x_scale, a).map_err(|source| CheckError::Datum {
            index: i,
            datum: datum.clone(),
            source,
        })?;
        let pb = forward(y_scale, b).map_err(|source| CheckError::Datum {
            index: i,
            datum: datum.clone(),
            source,
        })?;
        let (pa, pb) = (pa.px().unwrap_or(f64::NAN), pb.px().unwrap_or(f64::NAN));
        expected.push(if x_axis == Axis::X {
            (pa, pb)
        } else {
            (pb, pa)
        });
    }

    let dist = |p: (f64, f64), q: (f64, f64)| (p.0 - q.0).hypot(p.1 - q.1);
    let mut pairs: Vec<(f64, usize, usize)> = Vec::new();
    for (i, e) in expected.iter().enumerate() {
        for (j, (_, c)) in candidates.iter().enumerate() {
            let d = dist(*e, *c);
            if d <= opts.tolerance_px {
                pairs.push((d, i, j));
            }
        }
    }
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));
    let mut datum_to: Vec<Option<(usize, f64)>> = vec![None; expected.len()];
    let mut taken = vec![false; candidates.len()];
    for (d, i, j) in pairs {
        if datum_to[i].is_none() && !taken[j] {
            datum_to[i] = Some((j, d));
            taken[j] = true;
        }
    }

    let matches: Vec<DatumMatch> = expected
        .iter()
        .zip(data)
        .zip(&datum_to)
        .map(|((e, (a, b)), m)| {
            let (matched_node, distance_px) = match m {
                Some((j, d)) => (Some(candidates[*j].0), *d),
                None => (
                    None,
                    candidates
                        .iter()
                        .map(|(_, c)| dist(*e, *c))
                        .fold(f64::INFINITY, f64::min),
                ),
            };
            DatumMatch {
                datum: (a.to_string(), b.to_string()),
                expected_px: *e,
                matched_node,
                distance_px,
            }
        })
        .collect();

    let matched = matches.iter().filter(|m| m.matched_node.is_some()).count();
    let missing: Vec<&DatumMatch> = matches
        .iter()
        .filter(|m| m.matched_node.is_none())
        .collect();
    let point_marks = if nodes.len() == 1 && candidates.len() > 1 {
        0
    } else {
        candidates.len()
    };
    let extra = point_marks.saturating_sub(matched);

    let all = missing.is_empty() && !(opts.exact_count && extra > 0);
    let expected_text = format!(
        "{} data points within {}px of their expected positions",
        data.len(),
        num(opts.tolerance_px)
    );
    let actual_text = format!("{matched} of {} matched", data.len());
    let mut result = CheckResult::verdict(all, expected_text, actual_text)
        .with_line(describe_scale("x", x_scale))
        .with_line(describe_scale("y", y_scale))
        .with_line(format!("Found {} marks matching {marks}", nodes.len()));
    for m in &missing {
        let nearest = if m.distance_px.is_finite() {
            format!("nearest mark is {}px away", num(m.distance_px))
        } else {
            "no marks found".into()
        };
        result = result.with_line(format!(
            "Missing datum {{{}, {}}} expected at ({}, {}); {nearest}",
            m.datum.0,
            m.datum.1,
            num(m.expected_px.0),
            num(m.expected_px.1)
        ));
    }
    if extra > 0 {
        let verb = if opts.exact_count { "Error" } else { "Warning" };
        result = result.with_line(format!("{verb}: {extra} marks did not match any datum"));
        let unmatched = candidates
            .iter()
            .zip(&taken)
            .filter(|(_, t)| !**t)
            .map(|((n, _), _)| *n);
        if opts.exact_count {
            result = result.with_offenders(unmatched);
        }
    }
    if opts.partial == Partial::Linear && !data.is_empty() && !(opts.exact_count && extra > 0) {
        result.credit = matched as f64 / data.len() as f64;
    }
    result.matches = matches;
    Ok(result)
}

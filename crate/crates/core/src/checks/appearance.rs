use std::collections::HashMap;

use crate::dom::{
    parse_color, parse_length, resolve_geometry, select, DomError, ElementNode, ResolvedGeometry,
    Rgba, Selector,
};
use crate::rubric::{Along, SortOrder};

use super::{bbox, num, CheckError, CheckResult};

/// Spread below which a bar dimension counts as constant when deciding
/// the bar orientation.
const ORIENTATION_SLACK_PX: f64 = 0.5;

fn spread(values: impl Iterator<Item = f64>) -> f64 {
    let (lo, hi) = values.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| {
        (lo.min(v), hi.max(v))
    });
    if lo.is_finite() {
        hi - lo
    } else {
        0.0
    }
}

/// The axis marks are laid out along. Bars of constant width are
/// vertical and sit along x; bars of constant height sit along y.
pub fn bar_orientation(geoms: &[ResolvedGeometry]) -> Along {
    let boxes: Vec<_> = geoms.iter().filter_map(bbox).collect();
    if boxes.len() != geoms.len() || boxes.is_empty() {
        return Along::X;
    }
    let widths = spread(boxes.iter().map(|b| b.2 - b.0));
    let heights = spread(boxes.iter().map(|b| b.3 - b.1));
    if heights <= ORIENTATION_SLACK_PX && widths > ORIENTATION_SLACK_PX {
        Along::Y
    } else {
        Along::X
    }
}

fn missing(attribute: &str) -> DomError {
    DomError::NonNumericAttribute {
        attribute: attribute.to_string(),
        value: String::new(),
    }
}

/// Numeric value of `key` on a mark. `length` is a bar's extent across
/// the layout axis and `thickness` its extent along it; geometric
/// attributes are read after transforms, anything else raw.
pub fn mark_measure(
    node: &ElementNode<'_>,
    geom: &ResolvedGeometry,
    key: &str,
    along: Along,
) -> Result<f64, DomError> {
    let b = bbox(geom);
    let dim = |w: bool| {
        b.map(|(x0, y0, x1, y1)| if w { x1 - x0 } else { y1 - y0 })
            .ok_or_else(|| missing(key))
    };
    match (key, along) {
        ("length", Along::Y) | ("thickness", Along::X | Along::Auto) => dim(true),
        ("length", _) | ("thickness", Along::Y) => dim(false),
        ("width", _) if geom.width.is_some() => dim(true),
        ("height", _) if geom.height.is_some() => dim(false),
        ("x", _) if geom.x.is_some() => Ok(geom.x.unwrap_or_default()),
        ("y", _) if geom.y.is_some() => Ok(geom.y.unwrap_or_default()),
        ("cx", _) if geom.cx.is_some() => Ok(geom.cx.unwrap_or_default()),
        ("cy", _) if geom.cy.is_some() => Ok(geom.cy.unwrap_or_default()),
        ("r", _) if geom.r.is_some() => Ok(geom.r.unwrap_or_default()),
        _ => match node.style_value(key) {
            Some(v) => parse_length(key, &v),
            None => Err(missing(key)),
        },
    }
}

fn layout_position(geom: &ResolvedGeometry, along: Along) -> f64 {
    let p = match bbox(geom) {
        Some((x0, y0, _, _)) => (x0, y0),
        None => geom.center().unwrap_or((0.0, 0.0)),
    };
    if along == Along::Y {
        p.1
    } else {
        p.0
    }
}

struct Measured<'a> {
    node: ElementNode<'a>,
    geom: ResolvedGeometry,
}

fn measure_marks<'a>(
    root: ElementNode<'a>,
    marks: &Selector,
    needed: usize,
) -> Result<Vec<Measured<'a>>, CheckError> {
    let nodes = select(root, marks);
    if nodes.len() < needed {
        return Err(CheckError::InsufficientMarks {
            selector: marks.to_string(),
            found: nodes.len(),
            needed,
        });
    }
    nodes
        .into_iter()
        .map(|node| {
            Ok(Measured {
                geom: resolve_geometry(&node)?,
                node,
            })
        })
        .collect()
}

fn resolve_along(along: Along, marks: &[Measured<'_>]) -> Along {
    match along {
        Along::Auto => bar_orientation(&marks.iter().map(|m| m.geom.clone()).collect::<Vec<_>>()),
        other => other,
    }
}

fn along_name(along: Along) -> &'static str {
    if along == Along::Y {
        "top to bottom"
    } else {
        "left to right"
    }
}

/// Marks ordered by position along the layout axis must have `key` values
/// in the given order.
pub fn check_sorted(
    root: ElementNode<'_>,
    marks: &Selector,
    key: &str,
    order: SortOrder,
    along: Along,
) -> Result<CheckResult, CheckError> {
    let mut measured = measure_marks(root, marks, 2)?;
    let along = resolve_along(along, &measured);
    measured.sort_by(|a, b| {
        layout_position(&a.geom, along).total_cmp(&layout_position(&b.geom, along))
    });
    let values: Vec<f64> = measured
        .iter()
        .map(|m| mark_measure(&m.node, &m.geom, key, along))
        .collect::<Result<_, _>>()?;

    let order_name = match order {
        SortOrder::Ascending => "ascending",
        SortOrder::Descending => "descending",
    };
    let listing = values
        .iter()
        .map(|v| num(*v))
        .collect::<Vec<_>>()
        .join(", ");
    let expected = format!("{key} values {order_name} from {}", along_name(along));
    let inversion = values.windows(2).position(|w| match order {
        SortOrder::Ascending => w[0] > w[1] + 1e-9,
        SortOrder::Descending => w[0] + 1e-9 < w[1],
    });
    let assumption = format!(
        "Read {} marks matching {marks} {}",
        values.len(),
        along_name(along)
    );
    Ok(match inversion {
        None => CheckResult::pass(expected, format!("[{listing}]")).with_line(assumption),
        Some(i) => {
            let (a, b) = (values[i], values[i + 1]);
            let cmp = if a > b { ">" } else { "<" };
            CheckResult::fail(expected, format!("[{listing}]"))
                .with_line(assumption)
                .with_line(format!(
                    "Out of order at index {}: {} {cmp} {} ({} then {})",
                    i + 1,
                    num(a),
                    num(b),
                    measured[i].node.describe(),
                    measured[i + 1].node.describe()
                ))
                .with_offenders([measured[i].node.id(), measured[i + 1].node.id()])
        }
    })
}

/// All marks must agree on `attribute` to within `tolerance`.
pub fn check_constant(
    root: ElementNode<'_>,
    marks: &Selector,
    attribute: &str,
    tolerance: f64,
    along: Along,
) -> Result<CheckResult, CheckError> {
    let measured = measure_marks(root, marks, 1)?;
    let along = resolve_along(along, &measured);
    let values: Vec<f64> = measured
        .iter()
        .map(|m| mark_measure(&m.node, &m.geom, attribute, along))
        .collect::<Result<_, _>>()?;
    let (mut lo, mut hi) = (0, 0);
    for (i, v) in values.iter().enumerate() {
        if *v < values[lo] {
            lo = i;
        }
        if *v > values[hi] {
            hi = i;
        }
    }
    let range = values[hi] - values[lo];
    let expected = format!(
        "all {attribute} values within {} of each other",
        num(tolerance)
    );
    let assumption = format!(
        "Read {attribute} of {} marks matching {marks}",
        values.len()
    );
    if range <= tolerance + 1e-9 {
        Ok(CheckResult::pass(
            expected,
            format!(
                "all {attribute} values in [{}, {}]",
                num(values[lo]),
                num(values[hi])
            ),
        )
        .with_line(assumption))
    } else {
        Ok(CheckResult::fail(
            expected,
            format!(
                "{attribute} ranges from {} to {}",
                num(values[lo]),
                num(values[hi])
            ),
        )
        .with_line(assumption)
        .with_line(format!(
            "Smallest: {} ({}); largest: {} ({})",
            num(values[lo]),
            measured[lo].node.describe(),
            num(values[hi]),
            measured[hi].node.describe()
        ))
        .with_offenders([measured[lo].node.id(), measured[hi].node.id()]))
    }
}

/// SVG's initial value for a paint property.
fn initial_paint(property: &str) -> &'static str {
    if property == "fill" {
        "black"
    } else {
        "none"
    }
}

/// Marks within each group share one color; different groups use
/// different colors. No palette is prescribed.
pub fn check_color_grouping(
    root: ElementNode<'_>,
    groups: &[Selector],
    property: &str,
) -> Result<CheckResult, CheckError> {
    let mut result_lines = Vec::new();
    let mut offenders = Vec::new();
    let mut group_colors: Vec<Option<Rgba>> = Vec::new();
    let mut problems = Vec::new();

    for sel in groups {
        let nodes = select(root, sel);
        if nodes.is_empty() {
            return Err(CheckError::InsufficientMarks {
                selector: sel.to_string(),
                found: 0,
                needed: 1,
            });
        }
        let mut colors = Vec::with_capacity(nodes.len());
        for n in &nodes {
            let raw = n
                .inherited_style_value(property)
                .unwrap_or_else(|| initial_paint(property).to_string());
            match parse_color(&raw) {
                Ok(c) => colors.push(Some(c)),
                Err(_) => {
                    problems.push(format!(
                        "{} has an unreadable {property} {raw:?}",
                        n.describe()
                    ));
                    offenders.push(n.id());
                    colors.push(None);
                }
            }
        }
        // the group's color is its most common one, earliest on ties
        let mut counts: HashMap<Rgba, (usize, usize)> = HashMap::new();
        for (i, c) in colors.iter().enumerate() {
            if let Some(c) = c {
                counts.entry(*c).or_insert((0, i)).0 += 1;
            }
        }
        let main = counts
            .iter()
            .max_by(|a, b| a.1 .0.cmp(&b.1 .0).then(b.1 .1.cmp(&a.1 .1)))
            .map(|(c, _)| *c);
        if let Some(main) = main {
            let odd: Vec<_> = nodes
                .iter()
                .zip(&colors)
                .filter(|(_, c)| c.is_some_and(|c| c != main))
                .collect();
            if !odd.is_empty() {
                problems.push(format!(
                    "{sel}: {} of {} marks are not {main}, e.g. {} is {}",
                    odd.len(),
                    nodes.len(),
                    odd[0].0.describe(),
                    odd[0].1.expect("filtered")
                ));
                offenders.extend(odd.iter().map(|(n, _)| n.id()));
            }
            result_lines.push(format!("{sel}: {} marks, {property} {main}", nodes.len()));
        }
        group_colors.push(main);
    }

    for i in 0..groups.len() {
        for j in i + 1..groups.len() {
            if let (Some(a), Some(b)) = (group_colors[i], group_colors[j]) {
                if a == b {
                    problems.push(format!(
                        "{} and {} share the color {a}",
                        groups[i], groups[j]
                    ));
                }
            }
        }
    }

    let expected = format!(
        "one {property} color per group, distinct across {} groups",
        groups.len()
    );
    let mut result = if problems.is_empty() {
        CheckResult::pass(expected, "consistent and distinct colors")
    } else {
        CheckResult::fail(expected, format!("{} color problems", problems.len()))
    };
    result.detail_lines = result_lines;
    result.detail_lines.extend(problems);
    Ok(result.with_offenders(offenders))
}

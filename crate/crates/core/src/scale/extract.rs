use crate::dom::{resolve_geometry, select, ElementNode, NodeId, Selector};

use super::{Orientation, ScaleError, TickSample};

/// Ticks recovered from one rendered axis group.
#[derive(Debug, Clone, PartialEq)]
pub struct AxisTicks {
    pub group: NodeId,
    /// Resolved orientation (never `Auto`).
    pub orientation: Orientation,
    pub ticks: Vec<TickSample>,
    /// Pixel extent of the axis domain line along the orientation.
    pub extent: Option<(f64, f64)>,
}

/// Extract tick samples from the first group matching `axis_group`.
pub fn extract_ticks(
    root: ElementNode<'_>,
    axis_group: &Selector,
    orientation: Orientation,
) -> Result<Vec<TickSample>, ScaleError> {
    extract_axis(root, axis_group, orientation).map(|a| a.ticks)
}

/// Like [`extract_ticks`] but also reports the resolved orientation and
/// the axis line extent.
pub fn extract_axis(
    root: ElementNode<'_>,
    axis_group: &Selector,
    orientation: Orientation,
) -> Result<AxisTicks, ScaleError> {
    let group = select(root, axis_group)
        .into_iter()
        .next()
        .ok_or_else(|| ScaleError::AxisNotFound(axis_group.to_string()))?;
    extract_from_group(group, orientation).map_err(|e| match e {
        ScaleError::NoTicks(_) => ScaleError::NoTicks(axis_group.to_string()),
        other => other,
    })
}

/// Tick extraction from an already-located axis group.
pub(crate) fn extract_from_group(
    group: ElementNode<'_>,
    orientation: Orientation,
) -> Result<AxisTicks, ScaleError> {
    let mut tick_groups: Vec<ElementNode<'_>> = group
        .descendants()
        .filter(|n| n.tag() == "g" && n.has_class("tick"))
        .collect();
    if tick_groups.is_empty() {
        tick_groups = group
            .children()
            .filter(|n| n.tag() == "g" && n.attr("transform").is_some())
            .collect();
    }

    // (x, y, label, node) per tick
    let mut raw: Vec<(f64, f64, String, NodeId)> = Vec::new();
    if !tick_groups.is_empty() {
        for tick in tick_groups {
            let (x, y) = tick.ctm()?.apply(0.0, 0.0);
            let label = tick
                .descendants()
                .find(|n| n.tag() == "text")
                .map(|t| t.text_content().trim().to_string())
                .unwrap_or_default();
            raw.push((x, y, label, tick.id()));
        }
    } else {
        for text in group.descendants().filter(|n| n.tag() == "text") {
            let geom = resolve_geometry(&text)?;
            let (x, y) = (geom.x.unwrap_or(0.0), geom.y.unwrap_or(0.0));
            raw.push((x, y, text.text_content().trim().to_string(), text.id()));
        }
    }
    if raw.is_empty() {
        return Err(ScaleError::NoTicks(group.describe()));
    }

    let orientation = match orientation {
        Orientation::Auto | Orientation::Color => {
            let spread = |f: fn(&(f64, f64, String, NodeId)) -> f64| {
                let (lo, hi) = raw
                    .iter()
                    .map(f)
                    .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| {
                        (lo.min(v), hi.max(v))
                    });
                hi - lo
            };
            if spread(|r| r.1) > spread(|r| r.0) {
                Orientation::Vertical
            } else {
                Orientation::Horizontal
            }
        }
        o => o,
    };
    let along = |x: f64, y: f64| {
        if orientation == Orientation::Vertical {
            y
        } else {
            x
        }
    };

    let ticks = raw
        .into_iter()
        .map(|(x, y, label, node)| {
            let mut t = TickSample::new(along(x, y), label);
            t.node = Some(node);
            t
        })
        .collect();

    let domain_path = group
        .descendants()
        .find(|n| n.tag() == "path" && n.has_class("domain"))
        .or_else(|| group.children().find(|n| n.tag() == "path"));
    let extent = match domain_path {
        Some(path) => resolve_geometry(&path)?.path_points.and_then(|pts| {
            let vals: Vec<f64> = pts.iter().map(|(x, y)| along(*x, *y)).collect();
            let lo = vals.iter().copied().fold(f64::INFINITY, f64::min);
            let hi = vals.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            (lo.is_finite() && hi.is_finite()).then_some((lo, hi))
        }),
        None => None,
    };

    Ok(AxisTicks {
        group: group.id(),
        orientation,
        ticks,
        extent,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dom::parse_snapshot;

    const X_AXIS: &[u8] = br#"<svg><g transform="translate(40,20)">
      <g id="x-axis" transform="translate(0,360)">
        <path class="domain" d="M0.5,6V0.5H100.5V6"/>
        <g class="tick" transform="translate(0,0)"><line y2="6"/><text y="9">0</text></g>
        <g class="tick" transform="translate(50,0)"><line y2="6"/><text y="9">25</text></g>
        <g class="tick" transform="translate(100,0)"><line y2="6"/><text y="9">50</text></g>
      </g></g></svg>"#;

    #[test]
    fn tick_groups_with_translate() {
        let snap = parse_snapshot(X_AXIS).unwrap();
        let axis = extract_axis(
            snap.root(),
            &"g#x-axis".parse().unwrap(),
            Orientation::Horizontal,
        )
        .unwrap();
        let values: Vec<_> = axis.ticks.iter().map(|t| t.value.unwrap()).collect();
        let positions: Vec<_> = axis.ticks.iter().map(|t| t.position_px).collect();
        assert_eq!(values, [0.0, 25.0, 50.0]);
        assert_eq!(positions, [40.0, 90.0, 140.0]);
        assert_eq!(axis.extent, Some((40.5, 140.5)));
    }

    #[test]
    fn auto_orientation_detects_vertical() {
        let doc = br#"<svg><g id="y-axis"><g class="tick" transform="translate(0,200)"><text>0</text></g>
            <g class="tick" transform="translate(0,100)"><text>10</text></g><g class="tick" transform="translate(0,0)"><text>20</text></g></g></svg>"#;
        let snap = parse_snapshot(doc).unwrap();
        let axis =
            extract_axis(snap.root(), &"g#y-axis".parse().unwrap(), Orientation::Auto).unwrap();
        assert_eq!(axis.orientation, Orientation::Vertical);
        assert_eq!(axis.ticks[0].position_px, 200.0);
        let snap = parse_snapshot(X_AXIS).unwrap();
        let axis =
            extract_axis(snap.root(), &"g#x-axis".parse().unwrap(), Orientation::Auto).unwrap();
        assert_eq!(axis.orientation, Orientation::Horizontal);
    }

    #[test]
    fn text_labels_without_tick_groups() {
        let doc = br#"<svg><g id="x-axis"><text x="10" y="5">1,000</text><text x="60" y="5">5k</text></g></svg>"#;
        let snap = parse_snapshot(doc).unwrap();
        let ticks = extract_ticks(
            snap.root(),
            &"g#x-axis".parse().unwrap(),
            Orientation::Horizontal,
        )
        .unwrap();
        assert_eq!(
            ticks.iter().map(|t| t.value.unwrap()).collect::<Vec<_>>(),
            [1000.0, 5000.0]
        );
        assert_eq!(
            ticks.iter().map(|t| t.position_px).collect::<Vec<_>>(),
            [10.0, 60.0]
        );
    }

    #[test]
    fn missing_axis_and_empty_axis() {
        let snap =
            parse_snapshot(br#"<svg><g id="x-axis"><path class="domain" d="M0,0H100"/></g></svg>"#)
                .unwrap();
        assert!(matches!(
            extract_ticks(
                snap.root(),
                &"g#y-axis".parse().unwrap(),
                Orientation::Vertical
            ),
            Err(ScaleError::AxisNotFound(_))
        ));
        assert_eq!(
            extract_ticks(
                snap.root(),
                &"g#x-axis".parse().unwrap(),
                Orientation::Horizontal
            ),
            Err(ScaleError::NoTicks("g#x-axis".into()))
        );
    }
}

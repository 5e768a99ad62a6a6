//! Chart dimensions, margins and the inner plotting area.
//!
//! Margins come from the first translated child `<g>` of the chart's svg
//! when there is one, otherwise from where the axis ticks sit, otherwise
//! they are unknown. The findings are reported to the student as advisory
//! lines and never score.

use serde::Serialize;
use thiserror::Error;

use crate::dom::{parse_length, select, ElementNode, Transform2D};
use crate::rubric::StructureSpec;
use crate::scale::{extract::extract_from_group, Orientation};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LayoutError {
    #[error("no element matches the svg selector {0}")]
    NoSvgFound(String),
    #[error("the svg selector {selector} matches {count} elements; expected one")]
    MultipleSvg { selector: String, count: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Confidence {
    Explicit,
    Inferred,
    Unknown,
}

/// Where one margin value came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum MarginSource {
    Translate,
    AxisExtent,
    /// Taken to equal the opposite margin.
    Mirrored,
    TickExtent,
    Undetected,
}

impl MarginSource {
    fn phrase(&self) -> &'static str {
        match self {
            MarginSource::Translate => "from <g> translate",
            MarginSource::AxisExtent => "from axis extent",
            MarginSource::Mirrored => "assumed equal to the opposite margin",
            MarginSource::TickExtent => "inferred from tick positions",
            MarginSource::Undetected => "not detected",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Margins {
    pub top: f64,
    pub right: f64,
    pub bottom: f64,
    pub left: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SizeSource {
    Attributes,
    ViewBox,
    Undetected,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LayoutReport {
    pub svg_width: f64,
    pub svg_height: f64,
    pub size_source: SizeSource,
    pub margins: Margins,
    /// Sources in top, right, bottom, left order.
    pub margin_sources: [MarginSource; 4],
    pub inner_width: f64,
    pub inner_height: f64,
    #[serde(skip)]
    pub origin_transform: Transform2D,
    pub confidence: Confidence,
    pub notes: Vec<String>,
}

fn dimension(svg: &ElementNode<'_>, name: &str) -> Option<f64> {
    svg.attr(name)
        .and_then(|v| parse_length(name, v).ok())
        .filter(|v| *v > 0.0)
}

fn view_box(svg: &ElementNode<'_>) -> Option<[f64; 4]> {
    let raw = svg.attr("viewBox").or_else(|| svg.attr("viewbox"))?;
    let nums: Vec<f64> = raw
        .split(|c: char| c == ',' || c.is_whitespace())
        .filter(|s| !s.is_empty())
        .map(|s| s.parse().ok())
        .collect::<Option<_>>()?;
    <[f64; 4]>::try_from(nums)
        .ok()
        .filter(|v| v.iter().all(|x| x.is_finite()))
}

/// Horizontal and vertical pixel extents of the rendered axes: the domain
/// line when there is one, else the spread of tick positions.
struct AxisExtents {
    horizontal: Option<(f64, f64)>,
    vertical: Option<(f64, f64)>,
    from_domain_line: bool,
}

fn axis_extents(svg: ElementNode<'_>) -> AxisExtents {
    let mut out = AxisExtents {
        horizontal: None,
        vertical: None,
        from_domain_line: false,
    };
    let axis_like = |g: &ElementNode<'_>| {
        g.tag() == "g"
            && !g.has_class("tick")
            && g.children().any(|c| {
                (c.tag() == "g" && c.has_class("tick"))
                    || (c.tag() == "path" && c.has_class("domain"))
            })
    };
    let merge = |slot: &mut Option<(f64, f64)>, (lo, hi): (f64, f64)| {
        *slot = Some(match *slot {
            Some((a, b)) => (a.min(lo), b.max(hi)),
            None => (lo, hi),
        });
    };
    for group in svg.descendants().filter(axis_like) {
        let Ok(axis) = extract_from_group(group, Orientation::Auto) else {
            continue;
        };
        let span = match axis.extent {
            Some(e) => {
                out.from_domain_line = true;
                e
            }
            None => axis
                .ticks
                .iter()
                .map(|t| t.position_px)
                .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), p| {
                    (lo.min(p), hi.max(p))
                }),
        };
        if !(span.0.is_finite() && span.1.is_finite()) {
            continue;
        }
        match axis.orientation {
            Orientation::Vertical => merge(&mut out.vertical, span),
            _ => merge(&mut out.horizontal, span),
        }
    }
    out
}

/// Detect the chart's size, margins and plotting area.
pub fn detect_layout(
    root: ElementNode<'_>,
    spec: &StructureSpec,
) -> Result<LayoutReport, LayoutError> {
    let svgs = select(root, &spec.svg_selector);
    let svg = match svgs.as_slice() {
        [] => return Err(LayoutError::NoSvgFound(spec.svg_selector.to_string())),
        [one] => *one,
        many => {
            return Err(LayoutError::MultipleSvg {
                selector: spec.svg_selector.to_string(),
                count: many.len(),
            })
        }
    };
    let mut notes = Vec::new();

    let vb = view_box(&svg);
    let (w_attr, h_attr) = (dimension(&svg, "width"), dimension(&svg, "height"));
    let (svg_width, svg_height, size_source) = match (w_attr, h_attr, vb) {
        (Some(w), Some(h), vb) => {
            if let Some([_, _, vw, vh]) = vb {
                if (vw - w).abs() > 0.5 || (vh - h).abs() > 0.5 {
                    notes.push(format!("width/height ({w}×{h}) disagree with the viewBox ({vw}×{vh}); using width/height"));
                }
            }
            (w, h, SizeSource::Attributes)
        }
        (w, h, Some([_, _, vw, vh])) => (w.unwrap_or(vw), h.unwrap_or(vh), SizeSource::ViewBox),
        (w, h, None) => (w.unwrap_or(0.0), h.unwrap_or(0.0), SizeSource::Undetected),
    };

    let inner_g = svg.children().find(|c| c.tag() == "g").and_then(|g| {
        let t = crate::dom::parse_transform(g.attr("transform")?).ok()?;
        let (tx, ty) = t.translation();
        (tx != 0.0 || ty != 0.0).then_some((g, t))
    });

    let extents = axis_extents(svg);
    let extent_source = if extents.from_domain_line {
        MarginSource::AxisExtent
    } else {
        MarginSource::TickExtent
    };
    let (mut margins, mut sources, mut confidence, origin_transform);
    match inner_g {
        Some((g, t)) => {
            let (left, top) = t.translation();
            let (right, rs) = match extents.horizontal {
                Some((lo, hi)) => (svg_width - left - (hi - lo), extent_source),
                None => (left, MarginSource::Mirrored),
            };
            let (bottom, bs) = match extents.vertical {
                Some((lo, hi)) => (svg_height - top - (hi - lo), extent_source),
                None => (top, MarginSource::Mirrored),
            };
            margins = Margins {
                top,
                right,
                bottom,
                left,
            };
            sources = [MarginSource::Translate, rs, bs, MarginSource::Translate];
            confidence = Confidence::Explicit;
            origin_transform = t;
            let nested = g
                .descendants()
                .filter(|d| d.tag() == "g" && !d.has_class("tick"))
                .any(|d| {
                    d.attr("transform")
                        .and_then(|v| crate::dom::parse_transform(v).ok())
                        .is_some_and(|t| !t.is_identity())
                        && d.children()
                            .all(|c| !(c.tag() == "path" && c.has_class("domain")))
                        && !d.children().any(|c| c.tag() == "g" && c.has_class("tick"))
                });
            if nested {
                notes.push("nested translated groups found; only the outermost translate is reported as the margin".into());
            }
        }
        None if extents.horizontal.is_some() || extents.vertical.is_some() => {
            margins = Margins {
                top: 0.0,
                right: 0.0,
                bottom: 0.0,
                left: 0.0,
            };
            sources = [MarginSource::Undetected; 4];
            if let Some((lo, hi)) = extents.horizontal {
                margins.left = lo;
                margins.right = svg_width - hi;
                sources[1] = extent_source;
                sources[3] = extent_source;
            }
            if let Some((lo, hi)) = extents.vertical {
                margins.top = lo;
                margins.bottom = svg_height - hi;
                sources[0] = extent_source;
                sources[2] = extent_source;
            }
            confidence = Confidence::Inferred;
            origin_transform = Transform2D::IDENTITY;
        }
        None => {
            margins = Margins {
                top: 0.0,
                right: 0.0,
                bottom: 0.0,
                left: 0.0,
            };
            sources = [MarginSource::Undetected; 4];
            confidence = Confidence::Unknown;
            origin_transform = Transform2D::IDENTITY;
        }
    }

    let names = ["top", "right", "bottom", "left"];
    for (i, m) in [
        &mut margins.top,
        &mut margins.right,
        &mut margins.bottom,
        &mut margins.left,
    ]
    .into_iter()
    .enumerate()
    {
        if *m < 0.0 {
            notes.push(format!(
                "computed {} margin was negative ({:.1}px); clamped to 0",
                names[i], m
            ));
            *m = 0.0;
            if confidence == Confidence::Explicit {
                confidence = Confidence::Inferred;
            }
        }
    }
    let inner_width = (svg_width - margins.left - margins.right).max(0.0);
    let inner_height = (svg_height - margins.top - margins.bottom).max(0.0);
    if size_source == SizeSource::Undetected {
        notes.push("the svg has neither width/height attributes nor a viewBox".into());
    }

    Ok(LayoutReport {
        svg_width,
        svg_height,
        size_source,
        margins,
        margin_sources: sources,
        inner_width,
        inner_height,
        origin_transform,
        confidence,
        notes,
    })
}

pub const MARGIN_CONVENTION_URL: &str = "https://observablehq.com/@d3/margin-convention";

fn px(v: f64) -> String {
    let r = (v * 100.0).round() / 100.0;
    if r.fract() == 0.0 {
        format!("{}", r as i64)
    } else {
        format!("{r}")
    }
}

/// Human-readable advisory lines describing a layout report.
pub fn format_layout_advisory(report: &LayoutReport) -> Vec<String> {
    let mut lines = Vec::new();
    let size_from = match report.size_source {
        SizeSource::Attributes => "from width/height attributes",
        SizeSource::ViewBox => "from viewBox",
        SizeSource::Undetected => "not detected",
    };
    lines.push(format!(
        "Detected chart size: {}×{}px ({size_from})",
        px(report.svg_width),
        px(report.svg_height)
    ));
    if report.confidence == Confidence::Unknown {
        lines.push(format!(
            "Could not detect margins (confidence: unknown). Consider the margin convention: translate an inner <g> by the left and top margins and draw inside it. See {MARGIN_CONVENTION_URL}"
        ));
    } else {
        let m = &report.margins;
        for ((name, value), source) in [
            ("top", m.top),
            ("right", m.right),
            ("bottom", m.bottom),
            ("left", m.left),
        ]
        .into_iter()
        .zip(report.margin_sources)
        {
            lines.push(format!(
                "Detected {name} margin: {}px ({})",
                px(value),
                source.phrase()
            ));
        }
        lines.push(format!(
            "Layout confidence: {}",
            match report.confidence {
                Confidence::Explicit => "explicit",
                Confidence::Inferred => "inferred",
                Confidence::Unknown => "unknown",
            }
        ));
    }
    lines.push(format!(
        "Plottable area: {}×{}px",
        px(report.inner_width),
        px(report.inner_height)
    ));
    lines.extend(report.notes.iter().map(|n| format!("Note: {n}")));
    lines
}

use super::{DomError, ElementNode};

/// Element geometry in page pixels, after every ancestor transform.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ResolvedGeometry {
    pub x: Option<f64>,
    pub y: Option<f64>,
    pub width: Option<f64>,
    pub height: Option<f64>,
    pub cx: Option<f64>,
    pub cy: Option<f64>,
    pub r: Option<f64>,
    pub path_points: Option<Vec<(f64, f64)>>,
}

impl ResolvedGeometry {
    /// A representative point: circle center, box center, or first vertex.
    pub fn center(&self) -> Option<(f64, f64)> {
        if let (Some(cx), Some(cy)) = (self.cx, self.cy) {
            return Some((cx, cy));
        }
        if let (Some(x), Some(y)) = (self.x, self.y) {
            let w = self.width.unwrap_or(0.0);
            let h = self.height.unwrap_or(0.0);
            return Some((x + w / 2.0, y + h / 2.0));
        }
        self.path_points.as_ref().and_then(|p| p.first().copied())
    }
}

/// Parse a numeric attribute, accepting an optional `px` unit.
pub fn parse_length(attribute: &str, value: &str) -> Result<f64, DomError> {
    let v = value.trim();
    let v = v.strip_suffix("px").unwrap_or(v).trim();
    match v.parse::<f64>() {
        Ok(n) if n.is_finite() => Ok(n),
        _ => Err(DomError::NonNumericAttribute {
            attribute: attribute.to_string(),
            value: value.to_string(),
        }),
    }
}

fn numeric(node: &ElementNode<'_>, name: &str) -> Result<Option<f64>, DomError> {
    node.attr(name).map(|v| parse_length(name, v)).transpose()
}

const BOX_TAGS: &[&str] = &["rect", "image", "text", "use", "foreignObject", "tspan"];

/// Resolve an element's raw geometric attributes through its transform
/// chain. `path`, `line`, `polyline` and `polygon` yield `path_points`.
pub fn resolve_geometry(node: &ElementNode<'_>) -> Result<ResolvedGeometry, DomError> {
    let ctm = node.ctm()?;
    let (sx, sy) = ctm.scale_factors();
    let mut geom = ResolvedGeometry::default();

    let x = numeric(node, "x")?;
    let y = numeric(node, "y")?;
    if x.is_some() || y.is_some() || BOX_TAGS.contains(&node.tag()) {
        let (px, py) = ctm.apply(x.unwrap_or(0.0), y.unwrap_or(0.0));
        geom.x = Some(px);
        geom.y = Some(py);
    }
    geom.width = numeric(node, "width")?.map(|w| w * sx);
    geom.height = numeric(node, "height")?.map(|h| h * sy);

    let cx = numeric(node, "cx")?;
    let cy = numeric(node, "cy")?;
    if cx.is_some() || cy.is_some() || matches!(node.tag(), "circle" | "ellipse") {
        let (px, py) = ctm.apply(cx.unwrap_or(0.0), cy.unwrap_or(0.0));
        geom.cx = Some(px);
        geom.cy = Some(py);
    }
    geom.r = numeric(node, "r")?.map(|r| r * (sx * sy).sqrt());

    let local_points = match node.tag() {
        "path" => node.attr("d").map(sample_path).transpose()?,
        "line" => {
            let get = |n| numeric(node, n).map(|v| v.unwrap_or(0.0));
            Some(vec![(get("x1")?, get("y1")?), (get("x2")?, get("y2")?)])
        }
        "polyline" | "polygon" => node.attr("points").map(parse_points).transpose()?,
        _ => None,
    };
    geom.path_points =
        local_points.map(|pts| pts.into_iter().map(|(x, y)| ctm.apply(x, y)).collect());
    Ok(geom)
}

fn parse_points(points: &str) -> Result<Vec<(f64, f64)>, DomError> {
    let err = || DomError::NonNumericAttribute {
        attribute: "points".into(),
        value: points.to_string(),
    };
    let nums: Vec<f64> = points
        .split(|c: char| c == ',' || c.is_whitespace())
        .filter(|t| !t.is_empty())
        .map(|t| t.parse::<f64>().map_err(|_| err()))
        .collect::<Result<_, _>>()?;
    if !nums.len().is_multiple_of(2) {
        return Err(err());
    }
    Ok(nums.chunks(2).map(|c| (c[0], c[1])).collect())
}

/// Curves and arcs are sampled at parameter steps of 0.1.
const CURVE_STEPS: usize = 10;

enum Token {
    Command(char),
    Number(f64),
}

fn tokenize(d: &str) -> Result<Vec<Token>, DomError> {
    let err = || DomError::NonNumericAttribute {
        attribute: "d".into(),
        value: d.to_string(),
    };
    let bytes = d.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i] as char;
        if c.is_ascii_whitespace() || c == ',' {
            i += 1;
        } else if c.is_ascii_alphabetic() && c != 'e' && c != 'E' {
            out.push(Token::Command(c));
            i += 1;
        } else if c == '-' || c == '+' || c == '.' || c.is_ascii_digit() {
            let start = i;
            i += 1;
            let mut seen_dot = c == '.';
            let mut seen_exp = false;
            while i < bytes.len() {
                let ch = bytes[i] as char;
                if ch.is_ascii_digit() {
                    i += 1;
                } else if ch == '.' && !seen_dot && !seen_exp {
                    seen_dot = true;
                    i += 1;
                } else if (ch == 'e' || ch == 'E') && !seen_exp {
                    seen_exp = true;
                    i += 1;
                    if i < bytes.len() && (bytes[i] == b'-' || bytes[i] == b'+') {
                        i += 1;
                    }
                } else {
                    break;
                }
            }
            let n: f64 = d[start..i].parse().map_err(|_| err())?;
            out.push(Token::Number(n));
        } else {
            return Err(err());
        }
    }
    Ok(out)
}

/// Flatten SVG path data into a polyline of vertices.
pub(crate) fn sample_path(d: &str) -> Result<Vec<(f64, f64)>, DomError> {
    let err = || DomError::NonNumericAttribute {
        attribute: "d".into(),
        value: d.to_string(),
    };
    let tokens = tokenize(d)?;
    let mut points = Vec::new();
    let mut cur = (0.0, 0.0);
    let mut start = (0.0, 0.0);
    let mut last_ctrl: Option<(char, (f64, f64))> = None;
    let mut i = 0;
    let mut cmd = ' ';

    let take = |i: &mut usize, n: usize| -> Result<Vec<f64>, DomError> {
        let mut vals = Vec::with_capacity(n);
        for _ in 0..n {
            match tokens.get(*i) {
                Some(Token::Number(v)) => vals.push(*v),
                _ => return Err(err()),
            }
            *i += 1;
        }
        Ok(vals)
    };

    while i < tokens.len() {
        match tokens[i] {
            Token::Command(c) => {
                cmd = c;
                i += 1;
                if c == 'Z' || c == 'z' {
                    cur = start;
                    points.push(cur);
                    last_ctrl = None;
                    continue;
                }
            }
            Token::Number(_) if cmd == ' ' || cmd == 'Z' || cmd == 'z' => return Err(err()),
            Token::Number(_) => {}
        }
        if i >= tokens.len() {
            // a trailing command letter with no arguments
            if !matches!(cmd, 'Z' | 'z') {
                return Err(err());
            }
            break;
        }
        let rel = cmd.is_ascii_lowercase();
        let off =
            |p: (f64, f64), base: (f64, f64)| if rel { (p.0 + base.0, p.1 + base.1) } else { p };
        match cmd.to_ascii_uppercase() {
            'M' => {
                let v = take(&mut i, 2)?;
                cur = off((v[0], v[1]), cur);
                start = cur;
                points.push(cur);
                // subsequent pairs are implicit line-tos
                cmd = if rel { 'l' } else { 'L' };
                last_ctrl = None;
            }
            'L' => {
                let v = take(&mut i, 2)?;
                cur = off((v[0], v[1]), cur);
                points.push(cur);
                last_ctrl = None;
            }
            'H' => {
                let v = take(&mut i, 1)?;
                cur.0 = if rel { cur.0 + v[0] } else { v[0] };
                points.push(cur);
                last_ctrl = None;
            }
            'V' => {
                let v = take(&mut i, 1)?;
                cur.1 = if rel { cur.1 + v[0] } else { v[0] };
                points.push(cur);
                last_ctrl = None;
            }
            'C' | 'S' => {
                let (c1, c2, end) = if cmd.eq_ignore_ascii_case(&'C') {
                    let v = take(&mut i, 6)?;
                    (
                        off((v[0], v[1]), cur),
                        off((v[2], v[3]), cur),
                        off((v[4], v[5]), cur),
                    )
                } else {
                    let v = take(&mut i, 4)?;
                    let c1 = match last_ctrl {
                        Some(('C', p)) => (2.0 * cur.0 - p.0, 2.0 * cur.1 - p.1),
                        _ => cur,
                    };
                    (c1, off((v[0], v[1]), cur), off((v[2], v[3]), cur))
                };
                for step in 1..=CURVE_STEPS {
                    let t = step as f64 / CURVE_STEPS as f64;
                    let mt = 1.0 - t;
                    let x = mt.powi(3) * cur.0
                        + 3.0 * mt * mt * t * c1.0
                        + 3.0 * mt * t * t * c2.0
                        + t.powi(3) * end.0;
                    let y = mt.powi(3) * cur.1
                        + 3.0 * mt * mt * t * c1.1
                        + 3.0 * mt * t * t * c2.1
                        + t.powi(3) * end.1;
                    points.push((x, y));
                }
                last_ctrl = Some(('C', c2));
                cur = end;
            }
            'Q' | 'T' => {
                let (c, end) = if cmd.eq_ignore_ascii_case(&'Q') {
                    let v = take(&mut i, 4)?;
                    (off((v[0], v[1]), cur), off((v[2], v[3]), cur))
                } else {
                    let v = take(&mut i, 2)?;
                    let c = match last_ctrl {
                        Some(('Q', p)) => (2.0 * cur.0 - p.0, 2.0 * cur.1 - p.1),
                        _ => cur,
                    };
                    (c, off((v[0], v[1]), cur))
                };
                for step in 1..=CURVE_STEPS {
                    let t = step as f64 / CURVE_STEPS as f64;
                    let mt = 1.0 - t;
                    let x = mt * mt * cur.0 + 2.0 * mt * t * c.0 + t * t * end.0;
                    let y = mt * mt * cur.1 + 2.0 * mt * t * c.1 + t * t * end.1;
                    points.push((x, y));
                }
                last_ctrl = Some(('Q', c));
                cur = end;
            }
            'A' => {
                let v = take(&mut i, 7)?;
                let end = off((v[5], v[6]), cur);
                arc_points(
                    cur,
                    v[0],
                    v[1],
                    v[2],
                    v[3] != 0.0,
                    v[4] != 0.0,
                    end,
                    &mut points,
                );
                cur = end;
                last_ctrl = None;
            }
            _ => return Err(err()),
        }
    }
    Ok(points)
}

/// Endpoint-parameterized elliptical arc, sampled into `out`.
#[allow(clippy::too_many_arguments)]
fn arc_points(
    from: (f64, f64),
    rx: f64,
    ry: f64,
    rotation_deg: f64,
    large_arc: bool,
    sweep: bool,
    to: (f64, f64),
    out: &mut Vec<(f64, f64)>,
) {
    let (mut rx, mut ry) = (rx.abs(), ry.abs());
    if rx == 0.0 || ry == 0.0 || from == to {
        out.push(to);
        return;
    }
    let (sin_phi, cos_phi) = rotation_deg.to_radians().sin_cos();
    let dx = (from.0 - to.0) / 2.0;
    let dy = (from.1 - to.1) / 2.0;
    let x1p = cos_phi * dx + sin_phi * dy;
    let y1p = -sin_phi * dx + cos_phi * dy;
    let lambda = (x1p * x1p) / (rx * rx) + (y1p * y1p) / (ry * ry);
    if lambda > 1.0 {
        rx *= lambda.sqrt();
        ry *= lambda.sqrt();
    }
    let num = rx * rx * ry * ry - rx * rx * y1p * y1p - ry * ry * x1p * x1p;
    let den = rx * rx * y1p * y1p + ry * ry * x1p * x1p;
    let mut coef = (num / den).max(0.0).sqrt();
    if large_arc == sweep {
        coef = -coef;
    }
    let cxp = coef * rx * y1p / ry;
    let cyp = -coef * ry * x1p / rx;
    let cx = cos_phi * cxp - sin_phi * cyp + (from.0 + to.0) / 2.0;
    let cy = sin_phi * cxp + cos_phi * cyp + (from.1 + to.1) / 2.0;

    let angle = |ux: f64, uy: f64, vx: f64, vy: f64| (ux * vy - uy * vx).atan2(ux * vx + uy * vy);
    let theta1 = angle(1.0, 0.0, (x1p - cxp) / rx, (y1p - cyp) / ry);
    let mut delta = angle(
        (x1p - cxp) / rx,
        (y1p - cyp) / ry,
        (-x1p - cxp) / rx,
        (-y1p - cyp) / ry,
    );
    if !sweep && delta > 0.0 {
        delta -= std::f64::consts::TAU;
    } else if sweep && delta < 0.0 {
        delta += std::f64::consts::TAU;
    }
    for step in 1..=CURVE_STEPS {
        let t = step as f64 / CURVE_STEPS as f64;
        if step == CURVE_STEPS {
            out.push(to);
            break;
        }
        let theta = theta1 + delta * t;
        let (s, c) = theta.sin_cos();
        out.push((
            cx + rx * c * cos_phi - ry * s * sin_phi,
            cy + rx * c * sin_phi + ry * s * cos_phi,
        ));
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dom::parse_snapshot;

    fn first<'a>(snap: &'a crate::dom::Snapshot, tag: &str) -> ElementNode<'a> {
        snap.iter().find(|n| n.tag() == tag).unwrap()
    }

    #[test]
    fn circle_under_translate() {
        let snap = parse_snapshot(
            br#"<svg><g transform="translate(40,20)"><circle cx="10" cy="10" r="3"/></g></svg>"#,
        )
        .unwrap();
        let g = resolve_geometry(&first(&snap, "circle")).unwrap();
        assert_eq!((g.cx, g.cy, g.r), (Some(50.0), Some(30.0), Some(3.0)));
    }

    #[test]
    fn rect_without_ancestors_is_unchanged() {
        let snap =
            parse_snapshot(br#"<svg><rect x="0" y="0" width="5" height="6"/></svg>"#).unwrap();
        let g = resolve_geometry(&first(&snap, "rect")).unwrap();
        assert_eq!(
            (g.x, g.y, g.width, g.height),
            (Some(0.0), Some(0.0), Some(5.0), Some(6.0))
        );
    }

    #[test]
    fn nested_translates_sum() {
        let snap = parse_snapshot(
            br#"<svg><g transform="translate(10,0)"><g transform="translate(0,5)"><circle cx="1" cy="2"/></g></g></svg>"#,
        )
        .unwrap();
        let g = resolve_geometry(&first(&snap, "circle")).unwrap();
        assert_eq!((g.cx, g.cy), (Some(11.0), Some(7.0)));
    }

    #[test]
    fn scale_applies_to_sizes() {
        let snap = parse_snapshot(
            br#"<svg><g transform="scale(2,3)"><rect x="1" y="1" width="4" height="5"/></g></svg>"#,
        )
        .unwrap();
        let g = resolve_geometry(&first(&snap, "rect")).unwrap();
        assert_eq!(
            (g.x, g.y, g.width, g.height),
            (Some(2.0), Some(3.0), Some(8.0), Some(15.0))
        );
    }

    #[test]
    fn non_numeric_attribute_is_named() {
        let snap = parse_snapshot(br#"<svg><rect x="abc"/></svg>"#).unwrap();
        match resolve_geometry(&first(&snap, "rect")) {
            Err(DomError::NonNumericAttribute { attribute, .. }) => assert_eq!(attribute, "x"),
            other => panic!("unexpected {other:?}"),
        }
        assert_eq!(parse_length("w", "12px").unwrap(), 12.0);
        assert!(parse_length("w", "50%").is_err());
    }

    #[test]
    fn path_line_commands() {
        let pts = sample_path("M10,20L30,40H50V60l5,5h-5v-5Z").unwrap();
        assert_eq!(
            pts,
            vec![
                (10.0, 20.0),
                (30.0, 40.0),
                (50.0, 40.0),
                (50.0, 60.0),
                (55.0, 65.0),
                (50.0, 65.0),
                (50.0, 60.0),
                (10.0, 20.0)
            ]
        );
        // implicit lineto after moveto, and d3-style compact numbers
        let pts = sample_path("M0,0 10,10m5-5 1.5.5").unwrap();
        assert_eq!(
            pts,
            vec![(0.0, 0.0), (10.0, 10.0), (15.0, 5.0), (16.5, 5.5)]
        );
    }

    #[test]
    fn curves_sampled_at_tenths() {
        let pts = sample_path("M0,0C0,10,10,10,10,0").unwrap();
        assert_eq!(pts.len(), 11);
        assert_eq!(pts[10], (10.0, 0.0));
        // midpoint of this symmetric cubic: y = 3·0.125·10 + 3·0.125·10 = 7.5
        assert!((pts[5].0 - 5.0).abs() < 1e-12 && (pts[5].1 - 7.5).abs() < 1e-12);
        let q = sample_path("M0,0Q5,10,10,0").unwrap();
        assert!((q[5].1 - 5.0).abs() < 1e-12);
    }

    #[test]
    fn arc_stays_on_circle() {
        // d3 symbolCircle-style semicircle of radius 5 centred at the origin
        let pts = sample_path("M5,0A5,5,0,1,1,-5,0").unwrap();
        for (x, y) in &pts {
            assert!(((x * x + y * y).sqrt() - 5.0).abs() < 1e-9, "{x},{y}");
        }
        assert_eq!(*pts.last().unwrap(), (-5.0, 0.0));
    }

    #[test]
    fn path_points_transformed() {
        let snap = parse_snapshot(
            br#"<svg><g transform="translate(40,20)"><path d="M0,0L10,10"/></g></svg>"#,
        )
        .unwrap();
        let g = resolve_geometry(&first(&snap, "path")).unwrap();
        assert_eq!(g.path_points, Some(vec![(40.0, 20.0), (50.0, 30.0)]));
    }

    #[test]
    fn garbage_path_rejected() {
        assert!(sample_path("M0,0L#").is_err());
        assert!(sample_path("10,10").is_err());
        assert!(sample_path("M0").is_err());
    }
}

//! Recovering a chart's data→pixel and data→color mappings from what was
//! rendered: tick positions and labels, or mark colors.
//!
//! The rubric declares which kind of scale a chart must use; inference
//! verifies the student's rendering conforms to that kind rather than
//! classifying blindly.

pub(crate) mod extract;
mod labels;
mod quantile;

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dom::{DomError, NodeId, Rgba};

pub use extract::{extract_axis, extract_ticks, AxisTicks};
pub use labels::{parse_date_label, parse_numeric_label};
pub use quantile::{infer_quantile_colors, quantile_thresholds};

/// Fraction of the domain span a value may lie outside it before
/// [`forward`] refuses to extrapolate.
pub const EXTRAPOLATION_ALLOWANCE: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ScaleKind {
    Linear,
    Log,
    Sqrt,
    Time,
    Band,
    QuantileColor,
}

impl ScaleKind {
    pub fn is_continuous(&self) -> bool {
        matches!(
            self,
            ScaleKind::Linear | ScaleKind::Log | ScaleKind::Sqrt | ScaleKind::Time
        )
    }

    pub const CONTINUOUS: [ScaleKind; 4] = [
        ScaleKind::Linear,
        ScaleKind::Log,
        ScaleKind::Sqrt,
        ScaleKind::Time,
    ];
}

impl fmt::Display for ScaleKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ScaleKind::Linear => "linear",
            ScaleKind::Log => "log",
            ScaleKind::Sqrt => "sqrt",
            ScaleKind::Time => "time",
            ScaleKind::Band => "band",
            ScaleKind::QuantileColor => "quantile-color",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Orientation {
    Horizontal,
    Vertical,
    Color,
    /// Decide from the rendered tick layout.
    Auto,
}

impl fmt::Display for Orientation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Orientation::Horizontal => "horizontal",
            Orientation::Vertical => "vertical",
            Orientation::Color => "color",
            Orientation::Auto => "auto",
        })
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ScaleError {
    #[error("no axis group matches {0}")]
    AxisNotFound(String),
    #[error("axis group {0} has no ticks")]
    NoTicks(String),
    #[error("only {count} usable ticks; at least {needed} are needed")]
    InsufficientTicks { count: usize, needed: usize },
    #[error(
        "ticks do not follow a {kind} scale (r² = {r2:.4}, max residual {residual_max_px:.2}px)"
    )]
    PoorFit {
        r2: f64,
        kind: ScaleKind,
        residual_max_px: f64,
    },
    #[error("value {0} lies outside the scale domain")]
    DomainViolation(String),
    #[error("category {0:?} is not on the axis")]
    UnknownCategory(String),
    #[error("found {found} distinct colors, expected {expected}")]
    WrongColorCount { found: usize, expected: usize },
    #[error(
        "datum {index} (value {value}) is colored {found} but its quantile bucket is {expected}"
    )]
    QuantileMismatch {
        index: usize,
        value: f64,
        expected: Rgba,
        found: Rgba,
    },
    #[error("{values} values but {colors} colors")]
    MismatchedLengths { values: usize, colors: usize },
    #[error(transparent)]
    Dom(#[from] DomError),
}

/// One axis tick: where it sits and what it says.
#[derive(Debug, Clone, PartialEq)]
pub struct TickSample {
    pub position_px: f64,
    pub label: String,
    /// Numeric reading of the label, when it follows the label grammar.
    pub value: Option<f64>,
    pub node: Option<NodeId>,
}

impl TickSample {
    pub fn new(position_px: f64, label: impl Into<String>) -> Self {
        let label = label.into();
        let value = parse_numeric_label(&label);
        TickSample {
            position_px,
            label,
            value,
            node: None,
        }
    }

    /// The label's value as the given kind consumes it.
    pub fn value_as(&self, kind: ScaleKind) -> Option<f64> {
        match kind {
            ScaleKind::Time => parse_date_label(&self.label),
            _ => self.value,
        }
    }
}

/// Acceptance thresholds for a fit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitThresholds {
    pub min_r2: f64,
    pub max_residual_px: f64,
    /// Allowed deviation of band spacing from the median step.
    pub band_spacing_px: f64,
}

impl Default for FitThresholds {
    fn default() -> Self {
        FitThresholds {
            min_r2: 0.999,
            max_residual_px: 2.0,
            band_spacing_px: 1.0,
        }
    }
}

/// Least-squares `position = slope · g(value) + intercept`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScaleFit {
    pub slope: f64,
    pub intercept: f64,
    pub r2: f64,
    pub residual_max_px: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Domain {
    Continuous([f64; 2]),
    Categories(Vec<String>),
    Thresholds(Vec<f64>),
}

#[derive(Debug, Clone, PartialEq)]
pub enum Range {
    Pixels([f64; 2]),
    Colors(Vec<Rgba>),
}

/// A recovered mapping.
#[derive(Debug, Clone, PartialEq)]
pub struct InferredScale {
    pub kind: ScaleKind,
    pub orientation: Orientation,
    pub domain: Domain,
    pub range: Range,
    pub fit_r2: f64,
    pub tick_count: usize,
    pub fit: Option<ScaleFit>,
    /// Band step (median adjacent tick spacing).
    pub bandwidth: Option<f64>,
    pub ticks: Vec<TickSample>,
    /// Labels excluded from the fit because they did not parse.
    pub unparsed_labels: usize,
}

/// A data value to push through a scale.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum DataValue {
    Number(f64),
    Text(String),
}

impl fmt::Display for DataValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DataValue::Number(n) => write!(f, "{}", n),
            DataValue::Text(s) => f.write_str(s),
        }
    }
}

impl From<f64> for DataValue {
    fn from(v: f64) -> Self {
        DataValue::Number(v)
    }
}

impl From<&str> for DataValue {
    fn from(v: &str) -> Self {
        DataValue::Text(v.to_string())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Mapped {
    Px { px: f64, extrapolated: bool },
    Color(Rgba),
}

impl Mapped {
    pub fn px(&self) -> Option<f64> {
        match self {
            Mapped::Px { px, .. } => Some(*px),
            Mapped::Color(_) => None,
        }
    }
}

/// The transform applied to values before the linear fit, or `None` when
/// the value is outside what the kind accepts (e.g. non-positive for log).
fn transform_values(kind: ScaleKind, values: &[f64]) -> Option<Vec<f64>> {
    match kind {
        ScaleKind::Linear | ScaleKind::Time => Some(values.to_vec()),
        ScaleKind::Sqrt => Some(values.iter().map(|v| v.signum() * v.abs().sqrt()).collect()),
        ScaleKind::Log => {
            if values.iter().all(|v| *v > 0.0) {
                Some(values.iter().map(|v| v.log10()).collect())
            } else if values.iter().all(|v| *v < 0.0) {
                Some(values.iter().map(|v| -(-v).log10()).collect())
            } else {
                None
            }
        }
        ScaleKind::Band | ScaleKind::QuantileColor => None,
    }
}

/// Ordinary least squares of `ys` on `xs` with centered sums.
pub fn least_squares(xs: &[f64], ys: &[f64]) -> Option<ScaleFit> {
    let n = xs.len() as f64;
    if xs.len() < 2 || xs.len() != ys.len() {
        return None;
    }
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let (mut sxx, mut sxy, mut syy) = (0.0, 0.0, 0.0);
    for (x, y) in xs.iter().zip(ys) {
        let (dx, dy) = (x - mx, y - my);
        sxx += dx * dx;
        sxy += dx * dy;
        syy += dy * dy;
    }
    if sxx == 0.0 || !sxx.is_finite() {
        return None;
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let mut ss_res = 0.0;
    let mut residual_max_px: f64 = 0.0;
    for (x, y) in xs.iter().zip(ys) {
        let r = y - (slope * x + intercept);
        ss_res += r * r;
        residual_max_px = residual_max_px.max(r.abs());
    }
    let r2 = if syy == 0.0 {
        0.0
    } else {
        (1.0 - ss_res / syy).clamp(0.0, 1.0)
    };
    Some(ScaleFit {
        slope,
        intercept,
        r2,
        residual_max_px,
    })
}

/// Fit tick samples to the declared kind of scale.
pub fn fit_scale(
    samples: &[TickSample],
    kind: ScaleKind,
    thresholds: FitThresholds,
) -> Result<InferredScale, ScaleError> {
    match kind {
        ScaleKind::Band => fit_band(samples, thresholds),
        ScaleKind::QuantileColor => Err(ScaleError::InsufficientTicks {
            count: 0,
            needed: 1,
        }),
        _ => fit_continuous(samples, kind, thresholds),
    }
}

fn fit_continuous(
    samples: &[TickSample],
    kind: ScaleKind,
    thresholds: FitThresholds,
) -> Result<InferredScale, ScaleError> {
    let usable: Vec<(f64, f64, &TickSample)> = samples
        .iter()
        .filter_map(|s| s.value_as(kind).map(|v| (v, s.position_px, s)))
        .collect();
    let unparsed = samples.len() - usable.len();
    if usable.len() < 3 || unparsed * 2 > samples.len() {
        return Err(ScaleError::InsufficientTicks {
            count: usable.len(),
            needed: 3,
        });
    }
    let values: Vec<f64> = usable.iter().map(|u| u.0).collect();
    let positions: Vec<f64> = usable.iter().map(|u| u.1).collect();
    let poor = |r2, residual_max_px| ScaleError::PoorFit {
        r2,
        kind,
        residual_max_px,
    };
    let transformed = transform_values(kind, &values).ok_or_else(|| poor(0.0, f64::INFINITY))?;
    let fit = least_squares(&transformed, &positions).ok_or_else(|| poor(0.0, f64::INFINITY))?;
    if fit.slope == 0.0
        || fit.r2 < thresholds.min_r2
        || fit.residual_max_px > thresholds.max_residual_px
    {
        return Err(poor(fit.r2, fit.residual_max_px));
    }
    let (lo_i, hi_i) = extreme_indices(&values);
    Ok(InferredScale {
        kind,
        orientation: Orientation::Auto,
        domain: Domain::Continuous([values[lo_i], values[hi_i]]),
        range: Range::Pixels([positions[lo_i], positions[hi_i]]),
        fit_r2: fit.r2,
        tick_count: samples.len(),
        fit: Some(fit),
        bandwidth: None,
        ticks: samples.to_vec(),
        unparsed_labels: unparsed,
    })
}

fn extreme_indices(values: &[f64]) -> (usize, usize) {
    let mut lo = 0;
    let mut hi = 0;
    for (i, v) in values.iter().enumerate() {
        if *v < values[lo] {
            lo = i;
        }
        if *v > values[hi] {
            hi = i;
        }
    }
    (lo, hi)
}

fn median(mut xs: Vec<f64>) -> f64 {
    xs.sort_by(|a, b| a.total_cmp(b));
    let n = xs.len();
    if n % 2 == 1 {
        xs[n / 2]
    } else {
        (xs[n / 2 - 1] + xs[n / 2]) / 2.0
    }
}

fn fit_band(
    samples: &[TickSample],
    thresholds: FitThresholds,
) -> Result<InferredScale, ScaleError> {
    if samples.len() < 2 {
        return Err(ScaleError::InsufficientTicks {
            count: samples.len(),
            needed: 2,
        });
    }
    let positions: Vec<f64> = samples.iter().map(|s| s.position_px).collect();
    let steps: Vec<f64> = positions.windows(2).map(|w| w[1] - w[0]).collect();
    let step = median(steps.clone());
    let index: Vec<f64> = (0..samples.len()).map(|i| i as f64).collect();
    let fit = least_squares(&index, &positions);
    let r2 = fit.map_or(0.0, |f| f.r2);
    let uniform = steps
        .iter()
        .all(|s| (s - step).abs() <= thresholds.band_spacing_px);
    if step == 0.0 || !uniform {
        let residual = steps.iter().map(|s| (s - step).abs()).fold(0.0, f64::max);
        return Err(ScaleError::PoorFit {
            r2,
            kind: ScaleKind::Band,
            residual_max_px: residual,
        });
    }
    let half = step.abs() / 2.0;
    let (first, last) = (positions[0], positions[positions.len() - 1]);
    let range = if step > 0.0 {
        [first - half, last + half]
    } else {
        [first + half, last - half]
    };
    Ok(InferredScale {
        kind: ScaleKind::Band,
        orientation: Orientation::Auto,
        domain: Domain::Categories(samples.iter().map(|s| s.label.clone()).collect()),
        range: Range::Pixels(range),
        fit_r2: r2,
        tick_count: samples.len(),
        fit,
        bandwidth: Some(step.abs()),
        ticks: samples.to_vec(),
        unparsed_labels: 0,
    })
}

/// Fit every continuous kind and report the best by r², for feedback when
/// the declared kind is rejected.
pub fn best_kind(samples: &[TickSample]) -> Option<(ScaleKind, f64)> {
    ScaleKind::CONTINUOUS
        .iter()
        .filter_map(|&kind| {
            let usable: Vec<(f64, f64)> = samples
                .iter()
                .filter_map(|s| s.value_as(kind).map(|v| (v, s.position_px)))
                .collect();
            if usable.len() < 3 {
                return None;
            }
            let (vs, ps): (Vec<f64>, Vec<f64>) = usable.into_iter().unzip();
            let fit = least_squares(&transform_values(kind, &vs)?, &ps)?;
            Some((kind, fit.r2))
        })
        .max_by(|a, b| a.1.total_cmp(&b.1))
}

impl InferredScale {
    pub fn with_orientation(mut self, orientation: Orientation) -> Self {
        self.orientation = orientation;
        self
    }

    /// Widen a continuous scale's domain and range to a rendered axis extent
    /// (the axis `path.domain`), inverting the fitted mapping.
    pub fn with_axis_extent(mut self, extent: (f64, f64)) -> Self {
        let (Some(_), Domain::Continuous([d0, d1]), Range::Pixels([r0, r1])) =
            (self.fit, &self.domain, &self.range)
        else {
            return self;
        };
        let mut ends = [(*d0, *r0), (*d1, *r1)];
        for px in [extent.0, extent.1] {
            let Some(v) = self.invert(px) else { continue };
            if v < ends[0].0 {
                ends[0] = (v, px);
            }
            if v > ends[1].0 {
                ends[1] = (v, px);
            }
        }
        self.domain = Domain::Continuous([ends[0].0, ends[1].0]);
        self.range = Range::Pixels([ends[0].1, ends[1].1]);
        self
    }

    /// Pixel → data value for continuous fits.
    pub fn invert(&self, px: f64) -> Option<f64> {
        let fit = self.fit?;
        let g = (px - fit.intercept) / fit.slope;
        let v = match self.kind {
            ScaleKind::Linear | ScaleKind::Time => g,
            ScaleKind::Sqrt => g.signum() * g * g,
            ScaleKind::Log => {
                let positive = matches!(self.domain, Domain::Continuous([d, _]) if d > 0.0);
                if positive {
                    10f64.powf(g)
                } else {
                    -(10f64.powf(-g))
                }
            }
            _ => return None,
        };
        v.is_finite().then_some(v)
    }

    pub fn range_px(&self) -> Option<[f64; 2]> {
        match self.range {
            Range::Pixels(r) => Some(r),
            Range::Colors(_) => None,
        }
    }

    /// Pixel position of the value zero, where a bar's baseline sits.
    pub fn zero_px(&self) -> Option<f64> {
        let fit = self.fit?;
        match self.kind {
            ScaleKind::Linear | ScaleKind::Sqrt => Some(fit.intercept),
            _ => None,
        }
    }

    /// Numeric tick values in tick order (dates as epoch ms).
    pub fn tick_values(&self) -> Vec<f64> {
        self.ticks
            .iter()
            .filter_map(|t| t.value_as(self.kind))
            .collect()
    }

    /// Interpret a data value for this scale's kind.
    pub fn coerce(&self, value: &DataValue) -> Result<f64, ScaleError> {
        match (self.kind, value) {
            (ScaleKind::Time, DataValue::Text(s)) => parse_date_label(s)
                .or_else(|| {
                    parse_numeric_label(s)
                        .filter(|v| v.fract() == 0.0)
                        .and_then(|y| parse_date_label(&format!("{:04}", y as i64)))
                })
                .ok_or_else(|| ScaleError::DomainViolation(s.clone())),
            (_, DataValue::Number(n)) => Ok(*n),
            (_, DataValue::Text(s)) => s
                .trim()
                .parse::<f64>()
                .ok()
                .or_else(|| parse_numeric_label(s))
                .ok_or_else(|| ScaleError::DomainViolation(s.clone())),
        }
    }
}

/// Map a data value through an inferred scale.
pub fn forward(scale: &InferredScale, value: &DataValue) -> Result<Mapped, ScaleError> {
    match (&scale.domain, &scale.range) {
        (Domain::Categories(categories), _) => {
            let idx = category_index(categories, value)
                .ok_or_else(|| ScaleError::UnknownCategory(value.to_string()))?;
            Ok(Mapped::Px {
                px: scale.ticks[idx].position_px,
                extrapolated: false,
            })
        }
        (Domain::Thresholds(thresholds), Range::Colors(colors)) => {
            let v = scale.coerce(value)?;
            let bucket = thresholds.partition_point(|t| *t <= v);
            Ok(Mapped::Color(colors[bucket]))
        }
        (Domain::Continuous([d0, d1]), _) => {
            let fit = scale
                .fit
                .ok_or_else(|| ScaleError::DomainViolation(value.to_string()))?;
            let v = scale.coerce(value)?;
            let tv = |x: f64| transform_values(scale.kind, &[x]).map(|t| t[0]);
            let (g0, g1, gv) = match (tv(*d0), tv(*d1), tv(v)) {
                (Some(a), Some(b), Some(c)) => (a, b, c),
                _ => return Err(ScaleError::DomainViolation(value.to_string())),
            };
            // d0/d1 of a negative log domain are both negative; same transform
            let (lo, hi) = (g0.min(g1), g0.max(g1));
            let slack = (hi - lo) * EXTRAPOLATION_ALLOWANCE;
            if gv < lo - slack || gv > hi + slack {
                return Err(ScaleError::DomainViolation(value.to_string()));
            }
            let extrapolated = gv < lo || gv > hi;
            Ok(Mapped::Px {
                px: fit.slope * gv + fit.intercept,
                extrapolated,
            })
        }
        _ => Err(ScaleError::DomainViolation(value.to_string())),
    }
}

fn category_index(categories: &[String], value: &DataValue) -> Option<usize> {
    let text = value.to_string();
    let text = text.trim();
    categories
        .iter()
        .position(|c| c.trim() == text)
        .or_else(|| {
            let v = match value {
                DataValue::Number(n) => Some(*n),
                DataValue::Text(s) => s.trim().parse::<f64>().ok(),
            }?;
            categories
                .iter()
                .position(|c| parse_numeric_label(c) == Some(v))
        })
}

/// Build a continuous scale directly from a known mapping; used for
/// synthetic charts and tests.
pub fn continuous_from_fit(kind: ScaleKind, domain: [f64; 2], range: [f64; 2]) -> InferredScale {
    let g = |v: f64| {
        transform_values(kind, &[v])
            .map(|t| t[0])
            .unwrap_or(f64::NAN)
    };
    let slope = (range[1] - range[0]) / (g(domain[1]) - g(domain[0]));
    let intercept = range[0] - slope * g(domain[0]);
    let (domain, range) = if domain[0] <= domain[1] {
        (domain, range)
    } else {
        ([domain[1], domain[0]], [range[1], range[0]])
    };
    InferredScale {
        kind,
        orientation: Orientation::Auto,
        domain: Domain::Continuous(domain),
        range: Range::Pixels(range),
        fit_r2: 1.0,
        tick_count: 0,
        fit: Some(ScaleFit {
            slope,
            intercept,
            r2: 1.0,
            residual_max_px: 0.0,
        }),
        bandwidth: None,
        ticks: Vec::new(),
        unparsed_labels: 0,
    }
}

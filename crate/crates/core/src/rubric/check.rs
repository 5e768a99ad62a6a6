use serde::{Deserialize, Serialize};

use crate::dom::Selector;
use crate::interaction::{ActionStep, StateAssertion};
use crate::scale::DataValue;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Category {
    Advisory,
    Appearance,
    Positioning,
    Interaction,
}

impl Category {
    pub fn as_str(&self) -> &'static str {
        match self {
            Category::Advisory => "advisory",
            Category::Appearance => "appearance",
            Category::Positioning => "positioning",
            Category::Interaction => "interaction",
        }
    }

    pub fn title(&self) -> &'static str {
        match self {
            Category::Advisory => "Advisory",
            Category::Appearance => "Mark appearance",
            Category::Positioning => "Scales and positioning",
            Category::Interaction => "Interactivity",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SortOrder {
    Ascending,
    Descending,
}

/// Axis along which marks are laid out. `Auto` reads it off the marks:
/// bars of constant width stand on the x axis, bars of constant height on y.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Along {
    X,
    Y,
    #[default]
    Auto,
}

/// Credit policy for positioning tests.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Partial {
    #[default]
    None,
    /// Award the matched fraction of the data.
    Linear,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DomainMatch {
    /// The expected domain must lie within the rendered axis.
    #[default]
    Contains,
    /// The axis must start and end at the expected domain.
    Exact,
}

fn is_default<T: Default + PartialEq>(v: &T) -> bool {
    *v == T::default()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PositionsCheck {
    pub marks: Selector,
    pub x_scale: String,
    pub y_scale: String,
    pub dataset: String,
    pub x_field: String,
    pub y_field: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tolerance_px: Option<f64>,
    #[serde(default, skip_serializing_if = "is_default")]
    pub exact_count: bool,
    #[serde(default, skip_serializing_if = "is_default")]
    pub partial: Partial,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScaleCheck {
    pub scale: String,
    #[serde(default, skip_serializing_if = "is_default")]
    pub domain_match: DomainMatch,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AxisTicksCheck {
    pub scale: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub interval: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub values: Option<Vec<DataValue>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SortedCheck {
    pub marks: Selector,
    /// Attribute name, or the pseudo-attributes `length` / `thickness`.
    pub key: String,
    pub order: SortOrder,
    #[serde(default, skip_serializing_if = "is_default")]
    pub along: Along,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConstantCheck {
    pub marks: Selector,
    pub attribute: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tolerance: Option<f64>,
    #[serde(default, skip_serializing_if = "is_default")]
    pub along: Along,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MarkGroup {
    pub marks: Selector,
}

fn fill() -> String {
    "fill".into()
}

fn is_fill(s: &String) -> bool {
    s == "fill"
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ColorGroupingCheck {
    pub groups: Vec<MarkGroup>,
    #[serde(default = "fill", skip_serializing_if = "is_fill")]
    pub property: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QuantileColorsCheck {
    pub scale: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct InteractionCheck {
    pub actions: Vec<ActionStep>,
    pub assert: Vec<StateAssertion>,
    pub fresh_page: bool,
    pub settle_ms: Option<u64>,
}

/// What a test checks: exactly one checker, or an interaction sequence.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "CheckDoc", into = "CheckDoc")]
pub enum Check {
    Structure,
    Layout,
    Positions(PositionsCheck),
    Scale(ScaleCheck),
    AxisTicks(AxisTicksCheck),
    Sorted(SortedCheck),
    Constant(ConstantCheck),
    ColorGrouping(ColorGroupingCheck),
    QuantileColors(QuantileColorsCheck),
    Interaction(InteractionCheck),
}

impl Check {
    pub fn kind(&self) -> &'static str {
        match self {
            Check::Structure => "structure",
            Check::Layout => "layout",
            Check::Positions(_) => "positions",
            Check::Scale(_) => "scale",
            Check::AxisTicks(_) => "axis_ticks",
            Check::Sorted(_) => "sorted",
            Check::Constant(_) => "constant",
            Check::ColorGrouping(_) => "color_grouping",
            Check::QuantileColors(_) => "quantile_colors",
            Check::Interaction(_) => "actions",
        }
    }

    /// Scale ids the check depends on.
    pub fn scale_refs(&self) -> Vec<&str> {
        match self {
            Check::Positions(p) => vec![&p.x_scale, &p.y_scale],
            Check::Scale(s) => vec![&s.scale],
            Check::AxisTicks(a) => vec![&a.scale],
            Check::QuantileColors(q) => vec![&q.scale],
            _ => Vec::new(),
        }
    }

    /// Selectors the check reads from the page.
    pub fn selectors(&self) -> Vec<&Selector> {
        match self {
            Check::Positions(p) => vec![&p.marks],
            Check::Sorted(s) => vec![&s.marks],
            Check::Constant(c) => vec![&c.marks],
            Check::ColorGrouping(g) => g.groups.iter().map(|g| &g.marks).collect(),
            Check::Interaction(i) => i
                .actions
                .iter()
                .flat_map(ActionStep::selectors)
                .chain(i.assert.iter().map(|a| &a.target))
                .collect(),
            _ => Vec::new(),
        }
    }
}

fn yes() -> bool {
    true
}

fn is_true(v: &bool) -> bool {
    *v
}

/// The on-disk shape of a check: one optional key per checker.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CheckDoc {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    structure: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    layout: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    positions: Option<PositionsCheck>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    scale: Option<ScaleCheck>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    axis_ticks: Option<AxisTicksCheck>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    sorted: Option<SortedCheck>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    constant: Option<ConstantCheck>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    color_grouping: Option<ColorGroupingCheck>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    quantile_colors: Option<QuantileColorsCheck>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    actions: Option<Vec<ActionStep>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    assert: Option<Vec<StateAssertion>>,
    #[serde(default = "yes", skip_serializing_if = "is_true")]
    fresh_page: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    settle_ms: Option<u64>,
}

impl TryFrom<CheckDoc> for Check {
    type Error = String;

    fn try_from(doc: CheckDoc) -> Result<Self, String> {
        let mut found: Vec<Check> = Vec::new();
        let flag = |name: &str, v: Option<bool>, check: Check, found: &mut Vec<Check>| match v {
            Some(true) => {
                found.push(check);
                Ok(())
            }
            Some(false) => Err(format!(
                "`{name}: false` is not a check; remove the test instead"
            )),
            None => Ok(()),
        };
        flag("structure", doc.structure, Check::Structure, &mut found)?;
        flag("layout", doc.layout, Check::Layout, &mut found)?;
        found.extend(doc.positions.map(Check::Positions));
        found.extend(doc.scale.map(Check::Scale));
        found.extend(doc.axis_ticks.map(Check::AxisTicks));
        found.extend(doc.sorted.map(Check::Sorted));
        found.extend(doc.constant.map(Check::Constant));
        found.extend(doc.color_grouping.map(Check::ColorGrouping));
        found.extend(doc.quantile_colors.map(Check::QuantileColors));
        let interactive = doc.actions.is_some()
            || doc.assert.is_some()
            || doc.settle_ms.is_some()
            || !doc.fresh_page;
        if interactive {
            found.push(Check::Interaction(InteractionCheck {
                actions: doc.actions.unwrap_or_default(),
                assert: doc.assert.unwrap_or_default(),
                fresh_page: doc.fresh_page,
                settle_ms: doc.settle_ms,
            }));
        }
        match found.len() {
            1 => Ok(found.pop().expect("one check")),
            0 => Err("check names no checker".into()),
            _ => Err(format!(
                "check names several checkers ({})",
                found.iter().map(Check::kind).collect::<Vec<_>>().join(", ")
            )),
        }
    }
}

impl From<Check> for CheckDoc {
    fn from(check: Check) -> Self {
        let mut doc = CheckDoc {
            fresh_page: true,
            ..CheckDoc::default()
        };
        match check {
            Check::Structure => doc.structure = Some(true),
            Check::Layout => doc.layout = Some(true),
            Check::Positions(c) => doc.positions = Some(c),
            Check::Scale(c) => doc.scale = Some(c),
            Check::AxisTicks(c) => doc.axis_ticks = Some(c),
            Check::Sorted(c) => doc.sorted = Some(c),
            Check::Constant(c) => doc.constant = Some(c),
            Check::ColorGrouping(c) => doc.color_grouping = Some(c),
            Check::QuantileColors(c) => doc.quantile_colors = Some(c),
            Check::Interaction(i) => {
                doc.actions = Some(i.actions);
                doc.assert = Some(i.assert);
                doc.fresh_page = i.fresh_page;
                doc.settle_ms = i.settle_ms;
            }
        }
        doc
    }
}

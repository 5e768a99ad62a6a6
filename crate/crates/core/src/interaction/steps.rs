use serde::{Deserialize, Serialize};

use crate::dom::Selector;

/// Longest pause a chain may request.
pub const MAX_PAUSE_MS: u64 = 10_000;

/// Where a pointer move lands: an element's center or a viewport point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PointerTarget {
    Element(Selector),
    Point { x: f64, y: f64 },
}

/// One interaction primitive. In rubric YAML each step is a single-key map,
/// e.g. `{move_to: "g#circles circle:nth(3)"}` or `{drag_by: {target: ..., dx: 30, dy: 0}}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(remote = "Self", rename_all = "snake_case", deny_unknown_fields)]
pub enum ActionStep {
    MoveTo(PointerTarget),
    /// Click the target, or at the current pointer position when `null`.
    Click(Option<Selector>),
    DoubleClick(Option<Selector>),
    DragBy {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        target: Option<Selector>,
        dx: f64,
        dy: f64,
    },
    DragTo {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        target: Option<Selector>,
        to: Selector,
    },
    SelectOption {
        target: Selector,
        value: String,
    },
    Pause(u64),
    ScrollTo(Selector),
}

// serde_yaml renders externally tagged enums as `!tag` values; the rubric
// format uses single-key maps instead, for YAML and JSON alike.
struct Tagged(ActionStep);

impl<'de> Deserialize<'de> for Tagged {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        ActionStep::deserialize(d).map(Tagged)
    }
}

struct TaggedRef<'a>(&'a ActionStep);

impl Serialize for TaggedRef<'_> {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        ActionStep::serialize(self.0, s)
    }
}

impl<'de> Deserialize<'de> for ActionStep {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        serde_yaml::with::singleton_map::deserialize(d).map(|t: Tagged| t.0)
    }
}

impl Serialize for ActionStep {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        serde_yaml::with::singleton_map::serialize(&TaggedRef(self), s)
    }
}

impl ActionStep {
    pub fn kind(&self) -> &'static str {
        match self {
            ActionStep::MoveTo(_) => "move_to",
            ActionStep::Click(_) => "click",
            ActionStep::DoubleClick(_) => "double_click",
            ActionStep::DragBy { .. } => "drag_by",
            ActionStep::DragTo { .. } => "drag_to",
            ActionStep::SelectOption { .. } => "select_option",
            ActionStep::Pause(_) => "pause",
            ActionStep::ScrollTo(_) => "scroll_to",
        }
    }

    /// The element this step acts on, if any.
    pub fn target(&self) -> Option<&Selector> {
        match self {
            ActionStep::MoveTo(PointerTarget::Element(s)) => Some(s),
            ActionStep::Click(s) | ActionStep::DoubleClick(s) => s.as_ref(),
            ActionStep::DragBy { target, .. } | ActionStep::DragTo { target, .. } => {
                target.as_ref()
            }
            ActionStep::SelectOption { target, .. } => Some(target),
            ActionStep::ScrollTo(s) => Some(s),
            ActionStep::MoveTo(PointerTarget::Point { .. }) | ActionStep::Pause(_) => None,
        }
    }

    /// Every selector the step mentions.
    pub fn selectors(&self) -> Vec<&Selector> {
        let mut out: Vec<&Selector> = self.target().into_iter().collect();
        if let ActionStep::DragTo { to, .. } = self {
            out.push(to);
        }
        out
    }

    /// Check the static invariants: finite drag offsets, bounded pauses.
    pub fn validate(&self) -> Result<(), String> {
        match self {
            ActionStep::DragBy { dx, dy, .. } if !(dx.is_finite() && dy.is_finite()) => {
                Err("drag_by offsets must be finite".into())
            }
            ActionStep::Pause(ms) if *ms > MAX_PAUSE_MS => {
                Err(format!("pause of {ms} ms exceeds {MAX_PAUSE_MS} ms"))
            }
            ActionStep::MoveTo(PointerTarget::Point { x, y })
                if !(x.is_finite() && y.is_finite()) =>
            {
                Err("move_to point must be finite".into())
            }
            _ => Ok(()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Relation {
    Equal,
    Changed,
    Unchanged,
    GreaterThanBefore,
    LessThanBefore,
    ElementAppears,
    ElementDisappears,
    PositionChanged,
}

impl Relation {
    pub fn needs_attribute(&self) -> bool {
        !matches!(
            self,
            Relation::ElementAppears | Relation::ElementDisappears | Relation::PositionChanged
        )
    }

    pub fn is_numeric(&self) -> bool {
        matches!(self, Relation::GreaterThanBefore | Relation::LessThanBefore)
    }
}

/// A predicate over the before/after snapshots of an action chain.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StateAssertion {
    pub target: Selector,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub attribute: Option<String>,
    pub relation: Relation,
    #[serde(
        default,
        skip_serializing_if = "Option::is_none",
        deserialize_with = "scalar_string"
    )]
    pub literal: Option<String>,
}

impl StateAssertion {
    pub fn validate(&self) -> Result<(), String> {
        if self.relation.needs_attribute() && self.attribute.as_deref().is_none_or(str::is_empty) {
            return Err(format!(
                "relation {:?} requires an attribute",
                self.relation
            ));
        }
        if self.relation == Relation::Equal && self.literal.is_none() {
            return Err("relation equal requires a literal".into());
        }
        Ok(())
    }
}

/// Accept a YAML string, number or bool as a literal string.
fn scalar_string<'de, D: serde::Deserializer<'de>>(d: D) -> Result<Option<String>, D::Error> {
    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Scalar {
        Str(String),
        Int(i64),
        Float(f64),
        Bool(bool),
    }
    Ok(Option::<Scalar>::deserialize(d)?.map(|s| match s {
        Scalar::Str(s) => s,
        Scalar::Int(i) => i.to_string(),
        Scalar::Float(f) => f.to_string(),
        Scalar::Bool(b) => b.to_string(),
    }))
}

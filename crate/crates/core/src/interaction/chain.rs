use std::thread;
use std::time::Duration;

use indexmap::IndexMap;
use serde::Serialize;
use serde_json::{json, Value};

use crate::dom::{ElementNode, Selector, Snapshot};

use super::session::BrowserSession;
use super::webdriver::{element_ref, WireError};
use super::{ActionStep, InteractionError, PointerTarget};

/// Stepped moves used by drags; some drag handlers ignore single jumps.
const DRAG_STEPS: i64 = 5;
const DRAG_STEP_MS: u64 = 16;

const CENTER_SCRIPT: &str =
    "var r = arguments[0].getBoundingClientRect(); return [r.left + r.width / 2, r.top + r.height / 2];";

const SELECT_SCRIPT: &str = "var el = arguments[0], want = arguments[1];\
var opts = Array.prototype.slice.call(el.options || []);\
var opt = opts.filter(function (o) { return o.value === want || o.text === want; })[0];\
if (!opt) return false;\
el.value = opt.value;\
el.dispatchEvent(new Event('input', {bubbles: true}));\
el.dispatchEvent(new Event('change', {bubbles: true}));\
return true;";

const SCROLL_SCRIPT: &str =
    "arguments[0].scrollIntoView({block: 'center', inline: 'center'}); return true;";

/// One attribute (or computed property, or text) that differs between the
/// two snapshots. Added and removed elements appear under `#element`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AttributeChange {
    pub path: String,
    pub attribute: String,
    pub before: Option<String>,
    pub after: Option<String>,
}

/// Serialized DOM before and after an action chain.
#[derive(Debug, Clone, PartialEq)]
pub struct DomDelta {
    pub before: Snapshot,
    pub after: Snapshot,
    pub changed_nodes: Vec<AttributeChange>,
}

fn by_path(s: &Snapshot) -> IndexMap<String, ElementNode<'_>> {
    let mut out = IndexMap::new();
    for n in s.iter() {
        out.entry(n.path()).or_insert(n);
    }
    out
}

fn properties(n: &ElementNode<'_>) -> IndexMap<String, String> {
    let mut out: IndexMap<String, String> = n.attributes().clone();
    for (k, v) in n.computed_style() {
        out.insert(format!("computed:{k}"), v.clone());
    }
    let text = n.text().trim();
    if !text.is_empty() {
        out.insert("#text".into(), text.to_string());
    }
    out
}

impl DomDelta {
    /// Diff two snapshots, pairing elements by their tag/id path.
    pub fn between(before: Snapshot, after: Snapshot) -> DomDelta {
        let mut changed = Vec::new();
        {
            let (b, a) = (by_path(&before), by_path(&after));
            for (path, bn) in &b {
                let Some(an) = a.get(path) else {
                    changed.push(AttributeChange {
                        path: path.clone(),
                        attribute: "#element".into(),
                        before: Some(bn.tag().to_string()),
                        after: None,
                    });
                    continue;
                };
                let (bp, ap) = (properties(bn), properties(an));
                for (k, bv) in &bp {
                    if ap.get(k) != Some(bv) {
                        changed.push(AttributeChange {
                            path: path.clone(),
                            attribute: k.clone(),
                            before: Some(bv.clone()),
                            after: ap.get(k).cloned(),
                        });
                    }
                }
                for (k, av) in ap.iter().filter(|(k, _)| !bp.contains_key(*k)) {
                    changed.push(AttributeChange {
                        path: path.clone(),
                        attribute: k.clone(),
                        before: None,
                        after: Some(av.clone()),
                    });
                }
            }
            for (path, an) in a.iter().filter(|(p, _)| !b.contains_key(*p)) {
                changed.push(AttributeChange {
                    path: path.clone(),
                    attribute: "#element".into(),
                    before: None,
                    after: Some(an.tag().to_string()),
                });
            }
        }
        DomDelta {
            before,
            after,
            changed_nodes: changed,
        }
    }

    /// Changes recorded for one attribute name.
    pub fn changes_to<'a>(
        &'a self,
        attribute: &'a str,
    ) -> impl Iterator<Item = &'a AttributeChange> + 'a {
        self.changed_nodes
            .iter()
            .filter(move |c| c.attribute == attribute)
    }
}

fn pointer_move(origin: Value, x: f64, y: f64, duration: u64) -> Value {
    json!({ "type": "pointerMove", "origin": origin, "x": x.round() as i64, "y": y.round() as i64, "duration": duration })
}

fn button(kind: &str) -> Value {
    json!({ "type": kind, "button": 0 })
}

struct Runner<'s> {
    session: &'s BrowserSession,
    /// Pointer position in viewport pixels; input sources start at the origin.
    cursor: (f64, f64),
}

impl Runner<'_> {
    fn target(&self, sel: &Selector, step: usize) -> Result<String, InteractionError> {
        self.session
            .find(sel)?
            .ok_or_else(|| InteractionError::TargetNotFound {
                selector: sel.to_string(),
                step,
            })
    }

    fn center(&self, element: &str) -> Result<(f64, f64), WireError> {
        let (client, sid) = self
            .session
            .wire()
            .map_err(|e| WireError::Malformed(e.to_string()))?;
        let v = client.execute(sid, CENTER_SCRIPT, vec![element_ref(element)])?;
        match (v[0].as_f64(), v[1].as_f64()) {
            (Some(x), Some(y)) => Ok((x, y)),
            _ => Err(WireError::Malformed(format!("element center is {v}"))),
        }
    }

    /// Pointer moves onto `element` (its center), tracking the cursor.
    fn move_onto(&mut self, element: &str) -> Result<Vec<Value>, WireError> {
        self.cursor = self.center(element)?;
        Ok(vec![pointer_move(element_ref(element), 0.0, 0.0, 0)])
    }

    fn stepped(&mut self, to: (f64, f64)) -> Vec<Value> {
        let from = self.cursor;
        let mut moves = Vec::new();
        for i in 1..=DRAG_STEPS {
            let t = i as f64 / DRAG_STEPS as f64;
            let p = (from.0 + (to.0 - from.0) * t, from.1 + (to.1 - from.1) * t);
            moves.push(pointer_move(json!("viewport"), p.0, p.1, DRAG_STEP_MS));
        }
        self.cursor = to;
        moves
    }

    fn run(&mut self, step: usize, action: &ActionStep) -> Result<(), InteractionError> {
        let interrupted = |e: WireError| InteractionError::ChainInterrupted {
            step,
            cause: e.to_string(),
        };
        let (client, sid) = self.session.wire()?;
        let mut ticks = Vec::new();
        match action {
            ActionStep::MoveTo(PointerTarget::Element(sel)) => {
                let el = self.target(sel, step)?;
                ticks.extend(self.move_onto(&el).map_err(interrupted)?);
            }
            ActionStep::MoveTo(PointerTarget::Point { x, y }) => {
                self.cursor = (*x, *y);
                ticks.push(pointer_move(json!("viewport"), *x, *y, 0));
            }
            ActionStep::Click(sel) | ActionStep::DoubleClick(sel) => {
                if let Some(sel) = sel {
                    let el = self.target(sel, step)?;
                    ticks.extend(self.move_onto(&el).map_err(interrupted)?);
                }
                let clicks = if matches!(action, ActionStep::DoubleClick(_)) {
                    2
                } else {
                    1
                };
                for _ in 0..clicks {
                    ticks.push(button("pointerDown"));
                    ticks.push(button("pointerUp"));
                }
            }
            ActionStep::DragBy { target, dx, dy } => {
                if let Some(sel) = target {
                    let el = self.target(sel, step)?;
                    ticks.extend(self.move_onto(&el).map_err(interrupted)?);
                }
                ticks.push(button("pointerDown"));
                let to = (self.cursor.0 + dx, self.cursor.1 + dy);
                ticks.extend(self.stepped(to));
                ticks.push(button("pointerUp"));
            }
            ActionStep::DragTo { target, to } => {
                if let Some(sel) = target {
                    let el = self.target(sel, step)?;
                    ticks.extend(self.move_onto(&el).map_err(interrupted)?);
                }
                let dest = self.target(to, step)?;
                let dest_center = self.center(&dest).map_err(interrupted)?;
                ticks.push(button("pointerDown"));
                ticks.extend(self.stepped(dest_center));
                ticks.push(button("pointerUp"));
            }
            ActionStep::Pause(ms) => ticks.push(json!({ "type": "pause", "duration": ms })),
            ActionStep::SelectOption { target, value } => {
                let el = self.target(target, step)?;
                let found = client
                    .execute(sid, SELECT_SCRIPT, vec![element_ref(&el), json!(value)])
                    .map_err(interrupted)?;
                if found != Value::Bool(true) {
                    return Err(InteractionError::ChainInterrupted {
                        step,
                        cause: format!("{target} has no option {value:?}"),
                    });
                }
            }
            ActionStep::ScrollTo(sel) => {
                let el = self.target(sel, step)?;
                client
                    .execute(sid, SCROLL_SCRIPT, vec![element_ref(&el)])
                    .map_err(interrupted)?;
            }
        }
        if !ticks.is_empty() {
            client
                .perform_pointer_actions(sid, ticks)
                .map_err(interrupted)?;
        }
        Ok(())
    }
}

/// Snapshot, run `steps` in order with one persistent mouse, wait
/// `settle_ms`, snapshot again. A failing step aborts the chain.
pub fn run_chain(
    session: &BrowserSession,
    steps: &[ActionStep],
    settle_ms: u64,
) -> Result<DomDelta, InteractionError> {
    let before = session.snapshot()?;
    if steps.is_empty() {
        let after = before.clone();
        return Ok(DomDelta::between(before, after));
    }
    let mut runner = Runner {
        session,
        cursor: (0.0, 0.0),
    };
    let outcome = steps
        .iter()
        .enumerate()
        .try_for_each(|(i, s)| runner.run(i, s));
    let (client, sid) = session.wire()?;
    if let Err(e) = client.release_actions(sid) {
        log::debug!("releasing input state: {e}");
    }
    outcome?;
    thread::sleep(Duration::from_millis(settle_ms));
    let after = session.snapshot()?;
    Ok(DomDelta::between(before, after))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dom::parse_snapshot;

    fn snap(s: &str) -> Snapshot {
        parse_snapshot(s.as_bytes()).unwrap()
    }

    #[test]
    fn identical_snapshots_have_no_changes() {
        let s = snap("<svg><circle r='3' fill='blue'/></svg>");
        assert!(DomDelta::between(s.clone(), s).changed_nodes.is_empty());
    }

    #[test]
    fn attribute_and_element_changes() {
        let before = snap("<svg><circle r='3' fill='blue'/></svg>");
        let after = snap("<svg><circle r='6'/><text>hi</text></svg>");
        let d = DomDelta::between(before, after);
        let r: Vec<_> = d.changes_to("r").collect();
        assert_eq!(r.len(), 1);
        assert_eq!(r[0].path, "svg > circle[0]");
        assert_eq!(
            (r[0].before.as_deref(), r[0].after.as_deref()),
            (Some("3"), Some("6"))
        );
        assert_eq!(d.changes_to("fill").next().unwrap().after, None);
        let added = d.changes_to("#element").next().unwrap();
        assert_eq!(
            (added.path.as_str(), added.after.as_deref()),
            ("svg > text[0]", Some("text"))
        );
    }
}

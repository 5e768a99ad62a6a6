//! A small CSS selector subset.
//!
//! Supported: type selectors, `*`, `#id`, `.class`, the descendant (space)
//! and child (`>`) combinators, comma-separated alternatives, and a trailing
//! `:nth(k)` pseudo-index that picks the zero-based k-th element of the
//! final document-ordered match list.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::{DomError, ElementNode};

#[derive(Debug, Clone, PartialEq, Eq, Default)]
struct Compound {
    tag: Option<String>,
    id: Option<String>,
    classes: Vec<String>,
}

impl Compound {
    fn matches(&self, node: &ElementNode<'_>) -> bool {
        if let Some(tag) = &self.tag {
            if !tag.eq_ignore_ascii_case(node.tag()) {
                return false;
            }
        }
        if let Some(id) = &self.id {
            if node.element_id() != Some(id.as_str()) {
                return false;
            }
        }
        self.classes.iter().all(|c| node.has_class(c))
    }

    fn to_css(&self) -> String {
        let mut s = self.tag.clone().unwrap_or_default();
        if let Some(id) = &self.id {
            s.push('#');
            s.push_str(id);
        }
        for c in &self.classes {
            s.push('.');
            s.push_str(c);
        }
        if s.is_empty() {
            s.push('*');
        }
        s
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Combinator {
    Descendant,
    Child,
}

/// One comma-separated alternative: compounds joined by combinators.
/// `combinators[i]` sits between `compounds[i]` and `compounds[i + 1]`.
#[derive(Debug, Clone, PartialEq, Eq)]
struct Complex {
    compounds: Vec<Compound>,
    combinators: Vec<Combinator>,
}

impl Complex {
    fn matches(&self, node: &ElementNode<'_>) -> bool {
        let last = self.compounds.len() - 1;
        self.compounds[last].matches(node) && self.matches_ancestors(node, last)
    }

    /// Whether compounds `[..idx]` match the ancestors of `node`, which
    /// already matched `compounds[idx]`.
    fn matches_ancestors(&self, node: &ElementNode<'_>, idx: usize) -> bool {
        if idx == 0 {
            return true;
        }
        let want = &self.compounds[idx - 1];
        match self.combinators[idx - 1] {
            Combinator::Child => node
                .parent()
                .is_some_and(|p| want.matches(&p) && self.matches_ancestors(&p, idx - 1)),
            Combinator::Descendant => node
                .ancestors()
                .any(|a| want.matches(&a) && self.matches_ancestors(&a, idx - 1)),
        }
    }

    fn to_css(&self) -> String {
        let mut s = self.compounds[0].to_css();
        for (comb, compound) in self.combinators.iter().zip(&self.compounds[1..]) {
            s.push_str(match comb {
                Combinator::Descendant => " ",
                Combinator::Child => " > ",
            });
            s.push_str(&compound.to_css());
        }
        s
    }
}

/// A parsed selector. Construct with [`Selector::parse`] or `str::parse`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Selector {
    expression: String,
    alternatives: Vec<Complex>,
    nth: Option<usize>,
}

impl Selector {
    pub fn parse(expression: &str) -> Result<Self, DomError> {
        let invalid = |reason: &str| DomError::InvalidSelector {
            expression: expression.to_string(),
            reason: reason.to_string(),
        };
        let mut body = expression.trim();
        if body.is_empty() {
            return Err(invalid("empty selector"));
        }
        let mut nth = None;
        if let Some(pos) = body.rfind(":nth(") {
            let tail = &body[pos + 5..];
            let close = tail.find(')').ok_or_else(|| invalid("unclosed :nth("))?;
            if !tail[close + 1..].trim().is_empty() {
                return Err(invalid(":nth(k) must end the selector"));
            }
            let k: i64 = tail[..close]
                .trim()
                .parse()
                .map_err(|_| invalid(":nth(k) needs an integer"))?;
            if k < 0 {
                return Err(invalid(":nth(k) requires k >= 0"));
            }
            nth = Some(k as usize);
            body = &body[..pos];
            if body.trim().is_empty() || body.ends_with(char::is_whitespace) {
                return Err(invalid(":nth(k) must follow a compound selector"));
            }
        }
        let alternatives = body
            .split(',')
            .map(|alt| parse_complex(alt).map_err(|r| invalid(&r)))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Selector {
            expression: expression.trim().to_string(),
            alternatives,
            nth,
        })
    }

    /// Build a `#id` selector for a literal element id.
    pub fn id(id: &str) -> Self {
        Selector {
            expression: format!("#{id}"),
            alternatives: vec![Complex {
                compounds: vec![Compound {
                    id: Some(id.to_string()),
                    ..Default::default()
                }],
                combinators: vec![],
            }],
            nth: None,
        }
    }

    pub fn expression(&self) -> &str {
        &self.expression
    }

    pub fn nth(&self) -> Option<usize> {
        self.nth
    }

    /// The selector as standard CSS, without the `:nth(k)` extension.
    pub fn to_css(&self) -> String {
        self.alternatives
            .iter()
            .map(Complex::to_css)
            .collect::<Vec<_>>()
            .join(", ")
    }

    /// The same selector with `:nth(k)` dropped.
    pub fn without_nth(&self) -> Selector {
        Selector {
            expression: self.to_css(),
            alternatives: self.alternatives.clone(),
            nth: None,
        }
    }

    pub fn matches(&self, node: &ElementNode<'_>) -> bool {
        self.alternatives.iter().any(|alt| alt.matches(node))
    }
}

fn is_ident_char(c: char) -> bool {
    c.is_alphanumeric() || c == '-' || c == '_'
}

fn parse_complex(s: &str) -> Result<Complex, String> {
    let mut compounds = Vec::new();
    let mut combinators = Vec::new();
    let mut pending: Option<Combinator> = None;
    let mut chars = s.trim().chars().peekable();
    if s.trim().is_empty() {
        return Err("empty alternative".into());
    }
    while let Some(&c) = chars.peek() {
        if c.is_whitespace() {
            chars.next();
            if compounds.len() > combinators.len() && pending.is_none() {
                pending = Some(Combinator::Descendant);
            }
            continue;
        }
        if c == '>' {
            chars.next();
            if compounds.len() == combinators.len() || pending == Some(Combinator::Child) {
                return Err("dangling '>' combinator".into());
            }
            pending = Some(Combinator::Child);
            continue;
        }
        if compounds.len() > combinators.len() {
            combinators.push(pending.take().ok_or("missing combinator")?);
        }
        pending = None;
        let mut compound = Compound::default();
        let mut started = false;
        loop {
            match chars.peek().copied() {
                Some('*') if !started => {
                    chars.next();
                }
                Some(ch) if is_ident_char(ch) && !started => {
                    compound.tag = Some(take_ident(&mut chars));
                }
                Some('#') => {
                    chars.next();
                    let ident = take_ident(&mut chars);
                    if ident.is_empty() || compound.id.is_some() {
                        return Err("bad #id".into());
                    }
                    compound.id = Some(ident);
                }
                Some('.') => {
                    chars.next();
                    let ident = take_ident(&mut chars);
                    if ident.is_empty() {
                        return Err("bad .class".into());
                    }
                    compound.classes.push(ident);
                }
                Some(ch) if ch.is_whitespace() || ch == '>' => break,
                None => break,
                Some(ch) => return Err(format!("unsupported character {ch:?}")),
            }
            started = true;
        }
        compounds.push(compound);
    }
    if pending == Some(Combinator::Child) || compounds.is_empty() {
        return Err("dangling combinator".into());
    }
    Ok(Complex {
        compounds,
        combinators,
    })
}

fn take_ident(chars: &mut std::iter::Peekable<std::str::Chars<'_>>) -> String {
    let mut out = String::new();
    while let Some(&c) = chars.peek() {
        if is_ident_char(c) {
            out.push(c);
            chars.next();
        } else {
            break;
        }
    }
    out
}

impl FromStr for Selector {
    type Err = DomError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Selector::parse(s)
    }
}

impl fmt::Display for Selector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.expression)
    }
}

impl Serialize for Selector {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.expression)
    }
}

impl<'de> Deserialize<'de> for Selector {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        Selector::parse(&s).map_err(serde::de::Error::custom)
    }
}

/// All elements under (and including) `root` matching `sel`, in document
/// order. With `:nth(k)` the result has at most one element.
pub fn select<'a>(root: ElementNode<'a>, sel: &Selector) -> Vec<ElementNode<'a>> {
    let matches = std::iter::once(root)
        .chain(root.descendants())
        .filter(|n| sel.matches(n));
    match sel.nth {
        Some(k) => matches.skip(k).take(1).collect(),
        None => matches.collect(),
    }
}

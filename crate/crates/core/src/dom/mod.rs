//! Parsed element trees of rendered HTML/SVG documents.
//!
//! A [`Snapshot`] is an immutable arena of element nodes in document order.
//! [`ElementNode`] is a cheap borrowed handle into it.

mod color;
mod geometry;
mod selector;
mod transform;

use std::fmt;

use indexmap::IndexMap;
use scraper::{Html, Node};
use thiserror::Error;

pub use color::{parse_color, Rgba};
pub use geometry::{parse_length, resolve_geometry, ResolvedGeometry};
pub use selector::{select, Selector};
pub use transform::{parse_transform, Transform2D};

/// Attribute a live-session serializer uses to smuggle computed style into
/// the markup. It is lifted into [`ElementNode::computed_style`] on parse.
pub const COMPUTED_STYLE_ATTR: &str = "data-visgrade-computed";

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DomError {
    #[error("no root element could be recovered from the document")]
    UnparseableDocument,
    #[error("invalid selector {expression:?}: {reason}")]
    InvalidSelector { expression: String, reason: String },
    #[error("malformed transform near {token:?}")]
    MalformedTransform { token: String },
    #[error("unknown color {0:?}")]
    UnknownColor(String),
    #[error("attribute {attribute} is not numeric: {value:?}")]
    NonNumericAttribute { attribute: String, value: String },
}

/// Stable identifier of a node within one snapshot. Identifiers follow
/// document (pre-)order, so sorting by id sorts by document position.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, serde::Serialize)]
pub struct NodeId(pub usize);

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "n{}", self.0)
    }
}

#[derive(Debug, Clone, PartialEq)]
struct NodeData {
    tag: String,
    attributes: IndexMap<String, String>,
    computed_style: IndexMap<String, String>,
    text: String,
    children: Vec<NodeId>,
    parent: Option<NodeId>,
}

/// An immutable parsed document.
#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    nodes: Vec<NodeData>,
}

impl Snapshot {
    pub fn root(&self) -> ElementNode<'_> {
        ElementNode {
            snapshot: self,
            id: NodeId(0),
        }
    }

    pub fn node(&self, id: NodeId) -> Option<ElementNode<'_>> {
        (id.0 < self.nodes.len()).then_some(ElementNode { snapshot: self, id })
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// All elements in document order, root first.
    pub fn iter(&self) -> impl Iterator<Item = ElementNode<'_>> + '_ {
        (0..self.nodes.len()).map(move |i| ElementNode {
            snapshot: self,
            id: NodeId(i),
        })
    }

    pub fn select(&self, selector: &Selector) -> Vec<ElementNode<'_>> {
        select(self.root(), selector)
    }
}

/// Borrowed handle to one element of a [`Snapshot`].
#[derive(Clone, Copy)]
pub struct ElementNode<'a> {
    snapshot: &'a Snapshot,
    id: NodeId,
}

impl PartialEq for ElementNode<'_> {
    fn eq(&self, other: &Self) -> bool {
        std::ptr::eq(self.snapshot, other.snapshot) && self.id == other.id
    }
}

impl fmt::Debug for ElementNode<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "<{}", self.tag())?;
        if let Some(id) = self.element_id() {
            write!(f, " id={id:?}")?;
        }
        write!(f, "> ({})", self.id)
    }
}

impl<'a> ElementNode<'a> {
    fn data(&self) -> &'a NodeData {
        &self.snapshot.nodes[self.id.0]
    }

    pub fn id(&self) -> NodeId {
        self.id
    }

    pub fn snapshot(&self) -> &'a Snapshot {
        self.snapshot
    }

    pub fn tag(&self) -> &'a str {
        &self.data().tag
    }

    pub fn attr(&self, name: &str) -> Option<&'a str> {
        self.data().attributes.get(name).map(String::as_str)
    }

    pub fn attributes(&self) -> &'a IndexMap<String, String> {
        &self.data().attributes
    }

    /// Computed style captured from a live browser. Empty for static markup.
    pub fn computed_style(&self) -> &'a IndexMap<String, String> {
        &self.data().computed_style
    }

    /// Text directly owned by this element (not its descendants).
    pub fn text(&self) -> &'a str {
        &self.data().text
    }

    /// Concatenated text of this element and all descendants.
    pub fn text_content(&self) -> String {
        let mut out = self.text().to_string();
        for child in self.children() {
            out.push_str(&child.text_content());
        }
        out
    }

    pub fn element_id(&self) -> Option<&'a str> {
        self.attr("id")
    }

    pub fn classes(&self) -> impl Iterator<Item = &'a str> {
        self.attr("class").unwrap_or("").split_ascii_whitespace()
    }

    pub fn has_class(&self, class: &str) -> bool {
        self.classes().any(|c| c == class)
    }

    pub fn parent(&self) -> Option<ElementNode<'a>> {
        self.data().parent.map(|id| ElementNode {
            snapshot: self.snapshot,
            id,
        })
    }

    pub fn children(&self) -> impl Iterator<Item = ElementNode<'a>> + 'a {
        let snapshot = self.snapshot;
        self.data()
            .children
            .iter()
            .map(move |&id| ElementNode { snapshot, id })
    }

    /// Ancestors from the parent up to the root.
    pub fn ancestors(&self) -> impl Iterator<Item = ElementNode<'a>> + 'a {
        std::iter::successors(self.parent(), |n| n.parent())
    }

    /// Strict descendants in document order.
    pub fn descendants(&self) -> impl Iterator<Item = ElementNode<'a>> + 'a {
        let end = self.subtree_end();
        let snapshot = self.snapshot;
        (self.id.0 + 1..end).map(move |i| ElementNode {
            snapshot,
            id: NodeId(i),
        })
    }

    /// One past the last node id in this element's subtree.
    fn subtree_end(&self) -> usize {
        let mut node = *self;
        loop {
            match node.data().children.last() {
                Some(&last) => {
                    node = ElementNode {
                        snapshot: self.snapshot,
                        id: last,
                    }
                }
                None => return node.id.0 + 1,
            }
        }
    }

    pub fn is_ancestor_of(&self, other: &ElementNode<'_>) -> bool {
        other.id.0 > self.id.0 && other.id.0 < self.subtree_end()
    }

    /// Value of a presentation property: computed style, then inline
    /// `style`, then the presentation attribute.
    pub fn style_value(&self, property: &str) -> Option<String> {
        if let Some(v) = self.computed_style().get(property) {
            return Some(v.clone());
        }
        if let Some(v) = self
            .attr("style")
            .and_then(|s| inline_style_value(s, property))
        {
            return Some(v);
        }
        self.attr(property).map(|v| v.trim().to_string())
    }

    /// Like [`style_value`](Self::style_value) but falls back to ancestors,
    /// as `fill`, `stroke` and friends inherit in SVG.
    pub fn inherited_style_value(&self, property: &str) -> Option<String> {
        std::iter::once(*self)
            .chain(self.ancestors())
            .find_map(|n| n.style_value(property).filter(|v| v != "inherit"))
    }

    /// Whether this element would render: not `display:none`,
    /// `visibility:hidden` or fully transparent, itself or via ancestors.
    pub fn is_rendered(&self) -> bool {
        let hidden = |n: &ElementNode<'_>| {
            n.style_value("display").is_some_and(|v| v == "none")
                || n.style_value("opacity").and_then(|v| v.parse::<f64>().ok()) == Some(0.0)
        };
        if std::iter::once(*self)
            .chain(self.ancestors())
            .any(|n| hidden(&n))
        {
            return false;
        }
        !matches!(
            self.inherited_style_value("visibility").as_deref(),
            Some("hidden") | Some("collapse")
        )
    }

    /// The element's current transformation matrix: every ancestor
    /// `transform` composed root-first, followed by the element's own.
    pub fn ctm(&self) -> Result<Transform2D, DomError> {
        let mut chain: Vec<ElementNode<'_>> =
            std::iter::once(*self).chain(self.ancestors()).collect();
        chain.reverse();
        let mut m = Transform2D::IDENTITY;
        for node in chain {
            if let Some(t) = node.attr("transform") {
                m = m.then(&parse_transform(t)?);
            }
        }
        Ok(m)
    }

    /// A short path like `svg#chart > g#circles > circle[3]` naming this
    /// node by tag, id and index among same-tag siblings.
    pub fn path(&self) -> String {
        let mut parts: Vec<String> = std::iter::once(*self)
            .chain(self.ancestors())
            .map(|n| n.path_segment())
            .collect();
        parts.reverse();
        parts.join(" > ")
    }

    fn path_segment(&self) -> String {
        if let Some(id) = self.element_id() {
            return format!("{}#{}", self.tag(), id);
        }
        match self.parent() {
            Some(parent) => {
                let index = parent
                    .children()
                    .filter(|c| c.tag() == self.tag())
                    .position(|c| c.id == self.id)
                    .unwrap_or(0);
                format!("{}[{}]", self.tag(), index)
            }
            None => self.tag().to_string(),
        }
    }

    /// Descriptive label used in feedback, e.g. `<g id="x-axis">`.
    pub fn describe(&self) -> String {
        match self.element_id() {
            Some(id) => format!("<{}> element with id {}", self.tag(), id),
            None => format!("<{}> element", self.tag()),
        }
    }
}

pub(crate) fn inline_style_value(style: &str, property: &str) -> Option<String> {
    style
        .split(';')
        .filter_map(|decl| decl.split_once(':'))
        .filter(|(name, _)| name.trim().eq_ignore_ascii_case(property))
        .map(|(_, value)| {
            value
                .trim()
                .trim_end_matches("!important")
                .trim()
                .to_string()
        })
        .next_back()
}

fn parse_declarations(s: &str) -> IndexMap<String, String> {
    s.split(';')
        .filter_map(|decl| decl.split_once(':'))
        .map(|(k, v)| (k.trim().to_string(), v.trim().to_string()))
        .filter(|(k, _)| !k.is_empty())
        .collect()
}

/// Parse a serialized HTML/SVG document with browser-style error recovery.
///
/// A bare fragment with a single top-level element (no `html`, `head` or
/// `body` tags in the source) is rooted at that element; anything else is
/// rooted at the `html` document element.
pub fn parse_snapshot(document: &[u8]) -> Result<Snapshot, DomError> {
    let source = String::from_utf8_lossy(document);
    if source.trim().is_empty() {
        return Err(DomError::UnparseableDocument);
    }
    let html = Html::parse_document(&source);
    let doc_element = html
        .tree
        .root()
        .children()
        .find(|n| n.value().is_element())
        .ok_or(DomError::UnparseableDocument)?;

    let lower = source.to_ascii_lowercase();
    let is_fragment = !["<html", "<head", "<body"]
        .iter()
        .any(|t| lower.contains(t));
    let mut root = doc_element;
    if is_fragment {
        let body = doc_element
            .children()
            .find(|n| n.value().as_element().is_some_and(|e| e.name() == "body"));
        if let Some(body) = body {
            let elements: Vec<_> = body.children().filter(|n| n.value().is_element()).collect();
            match elements.as_slice() {
                [only] => root = *only,
                [] => return Err(DomError::UnparseableDocument),
                _ => {}
            }
        }
    }

    let mut nodes = Vec::new();
    build(root, None, &mut nodes);
    Ok(Snapshot { nodes })
}

fn build(
    node: ego_tree::NodeRef<'_, Node>,
    parent: Option<NodeId>,
    out: &mut Vec<NodeData>,
) -> NodeId {
    let element = node
        .value()
        .as_element()
        .expect("build is only called on elements");
    let id = NodeId(out.len());
    let mut attributes = IndexMap::new();
    let mut computed_style = IndexMap::new();
    for (name, value) in element.attrs() {
        if name == COMPUTED_STYLE_ATTR {
            computed_style = parse_declarations(value);
        } else {
            attributes.insert(name.to_string(), value.to_string());
        }
    }
    out.push(NodeData {
        tag: element.name().to_string(),
        attributes,
        computed_style,
        text: String::new(),
        children: Vec::new(),
        parent,
    });
    let mut text = String::new();
    for child in node.children() {
        match child.value() {
            Node::Element(_) => {
                let child_id = build(child, Some(id), out);
                out[id.0].children.push(child_id);
            }
            Node::Text(t) => text.push_str(t),
            _ => {}
        }
    }
    out[id.0].text = text;
    id
}

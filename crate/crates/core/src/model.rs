//! The equation tree: operators as internal nodes, editable input fields as
//! leaves.
//!
//! Trees are kept in a normal form so that every edit, every LaTeX import and
//! every loaded document produce the same shape for the same math:
//!
//! * the root and every structure slot hold either an [`InputField`] or an
//!   operator row;
//! * an operator row alternates fields (even positions) with structures or
//!   operator symbols (odd positions), has odd length of at least three, and
//!   never directly contains another row.
//!
//! Empty fields inside a row are "spacers": they give the caret somewhere to
//! land between two structures but render and speak as nothing.

use alloc::collections::BTreeMap;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(
    Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize,
)]
#[serde(transparent)]
pub struct NodeId(pub u32);

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "#{}", self.0)
    }
}

/// One caret position worth of content. Symbols such as `δ` are a single
/// glyph even though their LaTeX source is several characters.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Glyph {
    pub display: String,
    pub latex: String,
    pub spoken: String,
}

impl Glyph {
    pub fn new(display: &str, latex: &str, spoken: &str) -> Glyph {
        Glyph {
            display: display.to_string(),
            latex: latex.to_string(),
            spoken: spoken.to_string(),
        }
    }

    /// ASCII letter or digit. Other characters are not glyphs.
    pub fn from_ascii(c: char) -> Option<Glyph> {
        if !c.is_ascii_alphanumeric() {
            return None;
        }
        let mut buf = [0u8; 4];
        let s: &str = c.encode_utf8(&mut buf);
        let spoken = if c.is_ascii_uppercase() {
            alloc::format!("upper {}", c)
        } else {
            s.to_string()
        };
        Some(Glyph {
            display: s.to_string(),
            latex: s.to_string(),
            spoken,
        })
    }
}

/// Named symbols that behave as a single glyph, keyed by control word
/// (without the backslash).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SymbolTable {
    by_name: BTreeMap<String, Glyph>,
}

impl Default for SymbolTable {
    fn default() -> Self {
        let mut table = SymbolTable {
            by_name: BTreeMap::new(),
        };
        for (name, display) in [
            ("alpha", "α"),
            ("beta", "β"),
            ("delta", "δ"),
            ("theta", "θ"),
            ("pi", "π"),
        ] {
            table.insert(name, display, name);
        }
        table
    }
}

impl SymbolTable {
    pub fn empty() -> SymbolTable {
        SymbolTable {
            by_name: BTreeMap::new(),
        }
    }

    pub fn insert(&mut self, name: &str, display: &str, spoken: &str) {
        let latex = alloc::format!("\\{}", name);
        self.by_name
            .insert(name.to_string(), Glyph::new(display, &latex, spoken));
    }

    pub fn by_command(&self, name: &str) -> Option<&Glyph> {
        self.by_name.get(name)
    }

    pub fn by_display(&self, display: &str) -> Option<&Glyph> {
        self.by_name.values().find(|g| g.display == display)
    }

    /// Resolve a typed key: an ASCII letter/digit, a symbol's display
    /// character, or a control word such as `\delta`.
    pub fn glyph_for_key(&self, key: &str) -> Option<Glyph> {
        let mut chars = key.chars();
        if let (Some(c), None) = (chars.next(), chars.next()) {
            if let Some(g) = Glyph::from_ascii(c) {
                return Some(g);
            }
        }
        if let Some(name) = key.strip_prefix('\\') {
            return self.by_command(name).cloned();
        }
        self.by_display(key).cloned()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &Glyph)> {
        self.by_name.iter().map(|(k, v)| (k.as_str(), v))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OperatorSymbol {
    Plus,
    Minus,
    Equals,
    Times,
}

impl OperatorSymbol {
    pub const ALL: [OperatorSymbol; 4] = [
        OperatorSymbol::Plus,
        OperatorSymbol::Minus,
        OperatorSymbol::Equals,
        OperatorSymbol::Times,
    ];

    pub fn spoken(self) -> &'static str {
        match self {
            OperatorSymbol::Plus => "plus",
            OperatorSymbol::Minus => "minus",
            OperatorSymbol::Equals => "equals",
            OperatorSymbol::Times => "times",
        }
    }

    pub fn latex(self) -> &'static str {
        match self {
            OperatorSymbol::Plus => "+",
            OperatorSymbol::Minus => "-",
            OperatorSymbol::Equals => "=",
            OperatorSymbol::Times => "\\times",
        }
    }

    pub fn display(self) -> &'static str {
        match self {
            OperatorSymbol::Plus => "+",
            OperatorSymbol::Minus => "−",
            OperatorSymbol::Equals => "=",
            OperatorSymbol::Times => "×",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StructureKind {
    Fraction,
    Root,
    /// `[base, exponent]`
    Power,
    /// `[base, subscript]`
    Subscript,
    /// Parentheses.
    Group,
}

impl StructureKind {
    pub const ALL: [StructureKind; 5] = [
        StructureKind::Fraction,
        StructureKind::Root,
        StructureKind::Power,
        StructureKind::Subscript,
        StructureKind::Group,
    ];

    pub fn arity(self) -> usize {
        match self {
            StructureKind::Fraction | StructureKind::Power | StructureKind::Subscript => 2,
            StructureKind::Root | StructureKind::Group => 1,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            StructureKind::Fraction => "fraction",
            StructureKind::Root => "root",
            StructureKind::Power => "power",
            StructureKind::Subscript => "subscript",
            StructureKind::Group => "group",
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct InputField {
    pub glyphs: Vec<Glyph>,
    pub caret: usize,
}

impl InputField {
    pub fn len(&self) -> usize {
        self.glyphs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.glyphs.is_empty()
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum NodeKind {
    Field(InputField),
    Structure(StructureKind),
    Row,
    Symbol(OperatorSymbol),
}

impl NodeKind {
    pub fn is_internal(&self) -> bool {
        matches!(self, NodeKind::Structure(_) | NodeKind::Row)
    }

    /// Spoken operator name, used for folded placeholders and node entry.
    pub fn name(&self) -> &'static str {
        match self {
            NodeKind::Field(_) => "field",
            NodeKind::Structure(k) => k.name(),
            NodeKind::Row => "expression",
            NodeKind::Symbol(s) => s.spoken(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Node {
    pub kind: NodeKind,
    pub children: Vec<NodeId>,
    pub parent: Option<NodeId>,
    pub folded: bool,
}

impl Node {
    fn new(kind: NodeKind, parent: Option<NodeId>) -> Node {
        Node {
            kind,
            children: Vec::new(),
            parent,
            folded: false,
        }
    }

    pub fn field(&self) -> Option<&InputField> {
        match &self.kind {
            NodeKind::Field(f) => Some(f),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EditError {
    #[error("unknown node {0}")]
    UnknownNode(NodeId),
    #[error("node {0} is not an input field")]
    NotAField(NodeId),
    #[error("offset {offset} out of range for field of length {len}")]
    OffsetOutOfRange { offset: usize, len: usize },
    #[error("node {0} is not an operator")]
    NotAnOperator(NodeId),
    #[error("node {0} cannot be removed")]
    NotRemovable(NodeId),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("invalid tree at {node}: {reason}")]
pub struct TreeError {
    pub node: NodeId,
    pub reason: &'static str,
}

/// What to splice into a field at the caret.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InsertKind {
    Structure(StructureKind),
    Symbol(OperatorSymbol),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Inserted {
    pub node: NodeId,
    /// Field the caret should move to.
    pub focus: NodeId,
}

/// Role of a node in traversal order.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TokenRole {
    Row,
    Structure(StructureKind),
    /// Folded internal node; its descendants are not listed.
    Folded,
    Field,
    /// Empty field directly inside a row.
    Spacer,
    Symbol(OperatorSymbol),
}

/// Id-free structural view of a tree. Two trees are structurally equal when
/// their shapes are equal; fold flags and carets are not part of the shape.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Shape {
    Field(Vec<Glyph>),
    Row(Vec<Shape>),
    Structure(StructureKind, Vec<Shape>),
    Symbol(OperatorSymbol),
}

impl Shape {
    pub fn empty() -> Shape {
        Shape::Field(Vec::new())
    }

    /// Shape from a string of ASCII letters and digits.
    pub fn text(s: &str) -> Shape {
        Shape::Field(s.chars().filter_map(Glyph::from_ascii).collect())
    }

    pub fn structure(kind: StructureKind, children: Vec<Shape>) -> Shape {
        Shape::Structure(kind, children)
    }

    /// Bring the shape into normal form (see module docs).
    pub fn normalized(self) -> Shape {
        match self.normalize_inner() {
            s @ (Shape::Structure(..) | Shape::Symbol(_)) => Shape::Row(vec![Shape::empty(), s, Shape::empty()]),
            s => s,
        }
    }

    fn normalize_inner(self) -> Shape {
        match self {
            Shape::Field(g) => Shape::Field(g),
            Shape::Symbol(s) => Shape::Symbol(s),
            Shape::Structure(kind, children) => Shape::Structure(
                kind,
                children.into_iter().map(Shape::normalized).collect(),
            ),
            Shape::Row(items) => {
                let mut flat = Vec::new();
                for item in items {
                    match item.normalize_inner() {
                        Shape::Row(inner) => flat.extend(inner),
                        other => flat.push(other),
                    }
                }
                let mut out: Vec<Shape> = Vec::new();
                for item in flat {
                    match (out.last_mut(), item) {
                        (Some(Shape::Field(prev)), Shape::Field(g)) => prev.extend(g),
                        (Some(Shape::Field(_)), other) => out.push(other),
                        (_, Shape::Field(g)) => out.push(Shape::Field(g)),
                        (_, other) => {
                            out.push(Shape::empty());
                            out.push(other);
                        }
                    }
                }
                if !matches!(out.last(), Some(Shape::Field(_))) {
                    out.push(Shape::empty());
                }
                if out.len() == 1 {
                    out.pop().unwrap()
                } else {
                    Shape::Row(out)
                }
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EquationTree {
    root: NodeId,
    nodes: BTreeMap<NodeId, Node>,
    next_id: u32,
}

impl Default for EquationTree {
    fn default() -> Self {
        EquationTree::new()
    }
}

impl EquationTree {
    /// A single empty field.
    pub fn new() -> EquationTree {
        let mut tree = EquationTree {
            root: NodeId(0),
            nodes: BTreeMap::new(),
            next_id: 0,
        };
        tree.root = tree.alloc(NodeKind::Field(InputField::default()), None);
        tree
    }

    /// Build a tree from a shape, normalizing it first. Ids are assigned in
    /// preorder starting at 0.
    pub fn from_shape(shape: &Shape) -> EquationTree {
        let shape = shape.clone().normalized();
        let mut tree = EquationTree {
            root: NodeId(0),
            nodes: BTreeMap::new(),
            next_id: 0,
        };
        tree.root = tree.build(&shape, None);
        tree
    }

    /// Reassemble a tree from raw parts. The result is validated.
    pub fn from_parts(
        root: NodeId,
        nodes: BTreeMap<NodeId, Node>,
        next_id: u32,
    ) -> Result<EquationTree, TreeError> {
        let tree = EquationTree {
            root,
            nodes,
            next_id,
        };
        tree.validate()?;
        Ok(tree)
    }

    fn build(&mut self, shape: &Shape, parent: Option<NodeId>) -> NodeId {
        match shape {
            Shape::Field(glyphs) => self.alloc(
                NodeKind::Field(InputField {
                    glyphs: glyphs.clone(),
                    caret: 0,
                }),
                parent,
            ),
            Shape::Symbol(s) => self.alloc(NodeKind::Symbol(*s), parent),
            Shape::Row(items) => {
                let id = self.alloc(NodeKind::Row, parent);
                let children = items.iter().map(|s| self.build(s, Some(id))).collect();
                self.node_mut_unchecked(id).children = children;
                id
            }
            Shape::Structure(kind, items) => {
                let id = self.alloc(NodeKind::Structure(*kind), parent);
                let children = items.iter().map(|s| self.build(s, Some(id))).collect();
                self.node_mut_unchecked(id).children = children;
                id
            }
        }
    }

    fn alloc(&mut self, kind: NodeKind, parent: Option<NodeId>) -> NodeId {
        let id = NodeId(self.next_id);
        self.next_id += 1;
        self.nodes.insert(id, Node::new(kind, parent));
        id
    }

    fn node_mut_unchecked(&mut self, id: NodeId) -> &mut Node {
        self.nodes.get_mut(&id).expect("node exists")
    }

    pub fn root(&self) -> NodeId {
        self.root
    }

    pub fn next_id(&self) -> u32 {
        self.next_id
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        matches!(self.field(self.root), Ok(f) if f.is_empty())
    }

    pub fn nodes(&self) -> impl Iterator<Item = (NodeId, &Node)> {
        self.nodes.iter().map(|(k, v)| (*k, v))
    }

    pub fn get(&self, id: NodeId) -> Result<&Node, EditError> {
        self.nodes.get(&id).ok_or(EditError::UnknownNode(id))
    }

    pub fn contains(&self, id: NodeId) -> bool {
        self.nodes.contains_key(&id)
    }

    pub fn field(&self, id: NodeId) -> Result<&InputField, EditError> {
        self.get(id)?.field().ok_or(EditError::NotAField(id))
    }

    fn field_mut(&mut self, id: NodeId) -> Result<&mut InputField, EditError> {
        match self.nodes.get_mut(&id) {
            None => Err(EditError::UnknownNode(id)),
            Some(Node {
                kind: NodeKind::Field(f),
                ..
            }) => Ok(f),
            Some(_) => Err(EditError::NotAField(id)),
        }
    }

    pub fn parent(&self, id: NodeId) -> Option<NodeId> {
        self.nodes.get(&id).and_then(|n| n.parent)
    }

    pub fn children(&self, id: NodeId) -> &[NodeId] {
        self.nodes
            .get(&id)
            .map(|n| n.children.as_slice())
            .unwrap_or(&[])
    }

    /// Empty field directly inside a row.
    pub fn is_spacer(&self, id: NodeId) -> bool {
        match self.nodes.get(&id) {
            Some(Node {
                kind: NodeKind::Field(f),
                parent: Some(p),
                ..
            }) => f.is_empty() && matches!(self.nodes[p].kind, NodeKind::Row),
            _ => false,
        }
    }

    /// True if `id` or any ancestor strictly above it is folded.
    pub fn is_hidden(&self, id: NodeId) -> bool {
        let mut cur = self.parent(id);
        while let Some(p) = cur {
            if self.nodes[&p].folded {
                return true;
            }
            cur = self.parent(p);
        }
        false
    }

    /// Nearest ancestor (or self) that is a structure, skipping rows.
    pub fn enclosing_structure(&self, id: NodeId) -> Option<NodeId> {
        let mut cur = Some(id);
        while let Some(c) = cur {
            if matches!(self.nodes.get(&c)?.kind, NodeKind::Structure(_)) {
                return Some(c);
            }
            cur = self.parent(c);
        }
        None
    }

    pub fn depth(&self, id: NodeId) -> usize {
        let mut d = 0;
        let mut cur = self.parent(id);
        while let Some(p) = cur {
            d += 1;
            cur = self.parent(p);
        }
        d
    }

    pub fn insert_glyph(&mut self, field: NodeId, offset: usize, glyph: Glyph) -> Result<(), EditError> {
        let f = self.field_mut(field)?;
        if offset > f.glyphs.len() {
            return Err(EditError::OffsetOutOfRange {
                offset,
                len: f.glyphs.len(),
            });
        }
        f.glyphs.insert(offset, glyph);
        f.caret = offset + 1;
        Ok(())
    }

    pub fn delete_glyph(&mut self, field: NodeId, offset: usize) -> Result<Glyph, EditError> {
        let f = self.field_mut(field)?;
        if offset >= f.glyphs.len() {
            return Err(EditError::OffsetOutOfRange {
                offset,
                len: f.glyphs.len(),
            });
        }
        let g = f.glyphs.remove(offset);
        f.caret = offset;
        Ok(g)
    }

    /// Split `field` at `offset` and splice a new structure or operator
    /// symbol between the two halves. The field keeps its id and the left
    /// half; a new sibling field receives the right half.
    pub fn insert_structure(
        &mut self,
        field: NodeId,
        offset: usize,
        kind: InsertKind,
    ) -> Result<Inserted, EditError> {
        let len = self.field(field)?.len();
        if offset > len {
            return Err(EditError::OffsetOutOfRange { offset, len });
        }
        let parent = self.parent(field);
        let parent_is_row = parent
            .map(|p| matches!(self.nodes[&p].kind, NodeKind::Row))
            .unwrap_or(false);

        let row = if parent_is_row {
            parent.unwrap()
        } else {
            let row = self.alloc(NodeKind::Row, parent);
            match parent {
                None => self.root = row,
                Some(p) => {
                    let slot = self.nodes[&p]
                        .children
                        .iter()
                        .position(|c| *c == field)
                        .expect("child listed in parent");
                    self.node_mut_unchecked(p).children[slot] = row;
                }
            }
            self.node_mut_unchecked(row).children.push(field);
            self.node_mut_unchecked(field).parent = Some(row);
            row
        };

        let right_glyphs = {
            let f = self.field_mut(field)?;
            let tail = f.glyphs.split_off(offset);
            f.caret = offset;
            tail
        };
        let node = match kind {
            InsertKind::Symbol(s) => self.alloc(NodeKind::Symbol(s), Some(row)),
            InsertKind::Structure(k) => {
                let id = self.alloc(NodeKind::Structure(k), Some(row));
                let slots: Vec<NodeId> = (0..k.arity())
                    .map(|_| self.alloc(NodeKind::Field(InputField::default()), Some(id)))
                    .collect();
                self.node_mut_unchecked(id).children = slots;
                id
            }
        };
        let right = self.alloc(
            NodeKind::Field(InputField {
                glyphs: right_glyphs,
                caret: 0,
            }),
            Some(row),
        );
        let at = self.nodes[&row]
            .children
            .iter()
            .position(|c| *c == field)
            .expect("field in row");
        self.node_mut_unchecked(row)
            .children
            .splice(at + 1..at + 1, [node, right]);

        let focus = match kind {
            InsertKind::Symbol(_) => right,
            InsertKind::Structure(_) => self.nodes[&node].children[0],
        };
        Ok(Inserted { node, focus })
    }

    /// Remove a structure or operator symbol from its row, joining the
    /// fields on either side. Returns the joined field, whose caret sits at
    /// the join point.
    pub fn remove_structure(&mut self, node: NodeId) -> Result<NodeId, EditError> {
        let n = self.get(node)?;
        if !matches!(n.kind, NodeKind::Structure(_) | NodeKind::Symbol(_)) {
            return Err(EditError::NotRemovable(node));
        }
        let row = n.parent.ok_or(EditError::NotRemovable(node))?;
        let at = self.nodes[&row]
            .children
            .iter()
            .position(|c| *c == node)
            .expect("child in row");
        let left = self.nodes[&row].children[at - 1];
        let right = self.nodes[&row].children[at + 1];
        self.remove_subtree(node);
        let right_glyphs = match self.nodes.remove(&right).map(|n| n.kind) {
            Some(NodeKind::Field(f)) => f.glyphs,
            _ => unreachable!("row slots alternate fields"),
        };
        {
            let f = self.field_mut(left)?;
            f.caret = f.glyphs.len();
            f.glyphs.extend(right_glyphs);
        }
        self.node_mut_unchecked(row).children.drain(at..at + 2);
        if self.nodes[&row].children.len() == 1 {
            let grand = self.nodes[&row].parent;
            self.nodes.remove(&row);
            self.node_mut_unchecked(left).parent = grand;
            match grand {
                None => self.root = left,
                Some(g) => {
                    for c in self.node_mut_unchecked(g).children.iter_mut() {
                        if *c == row {
                            *c = left;
                        }
                    }
                }
            }
        }
        Ok(left)
    }

    fn remove_subtree(&mut self, id: NodeId) {
        if let Some(n) = self.nodes.remove(&id) {
            for c in n.children {
                self.remove_subtree(c);
            }
        }
    }

    pub fn set_folded(&mut self, node: NodeId, folded: bool) -> Result<(), EditError> {
        let n = self
            .nodes
            .get_mut(&node)
            .ok_or(EditError::UnknownNode(node))?;
        if !n.kind.is_internal() {
            return Err(EditError::NotAnOperator(node));
        }
        n.folded = folded;
        Ok(())
    }

    pub fn set_caret(&mut self, field: NodeId, caret: usize) -> Result<(), EditError> {
        let f = self.field_mut(field)?;
        if caret > f.glyphs.len() {
            return Err(EditError::OffsetOutOfRange {
                offset: caret,
                len: f.glyphs.len(),
            });
        }
        f.caret = caret;
        Ok(())
    }

    pub fn folded_nodes(&self) -> Vec<NodeId> {
        self.nodes
            .iter()
            .filter(|(_, n)| n.folded)
            .map(|(id, _)| *id)
            .collect()
    }

    pub fn clear_folds(&mut self) {
        for n in self.nodes.values_mut() {
            n.folded = false;
        }
    }

    /// Preorder traversal honoring folds.
    pub fn preorder(&self) -> Vec<(NodeId, TokenRole)> {
        self.preorder_with(true)
    }

    pub fn preorder_with(&self, honor_folds: bool) -> Vec<(NodeId, TokenRole)> {
        let mut out = Vec::with_capacity(self.nodes.len());
        self.preorder_from(self.root, honor_folds, &mut out);
        out
    }

    /// Preorder of the subtree at `start`.
    pub fn preorder_from(&self, start: NodeId, honor_folds: bool, out: &mut Vec<(NodeId, TokenRole)>) {
        let mut stack = vec![start];
        while let Some(id) = stack.pop() {
            let Some(n) = self.nodes.get(&id) else {
                continue;
            };
            if honor_folds && n.folded {
                out.push((id, TokenRole::Folded));
                continue;
            }
            let role = match &n.kind {
                NodeKind::Row => TokenRole::Row,
                NodeKind::Structure(k) => TokenRole::Structure(*k),
                NodeKind::Symbol(s) => TokenRole::Symbol(*s),
                NodeKind::Field(_) if self.is_spacer(id) => TokenRole::Spacer,
                NodeKind::Field(_) => TokenRole::Field,
            };
            out.push((id, role));
            stack.extend(n.children.iter().rev().copied());
        }
    }

    pub fn shape(&self) -> Shape {
        self.shape_of(self.root)
    }

    pub fn shape_of(&self, id: NodeId) -> Shape {
        let n = &self.nodes[&id];
        match &n.kind {
            NodeKind::Field(f) => Shape::Field(f.glyphs.clone()),
            NodeKind::Symbol(s) => Shape::Symbol(*s),
            NodeKind::Row => Shape::Row(n.children.iter().map(|c| self.shape_of(*c)).collect()),
            NodeKind::Structure(k) => {
                Shape::Structure(*k, n.children.iter().map(|c| self.shape_of(*c)).collect())
            }
        }
    }

    pub fn structurally_eq(&self, other: &EquationTree) -> bool {
        self.shape() == other.shape()
    }

    /// Check every structural invariant, including normal form.
    pub fn validate(&self) -> Result<(), TreeError> {
        let err = |node, reason| Err(TreeError { node, reason });
        let Some(root) = self.nodes.get(&self.root) else {
            return err(self.root, "root missing");
        };
        if root.parent.is_some() {
            return err(self.root, "root has a parent");
        }
        if !matches!(root.kind, NodeKind::Field(_) | NodeKind::Row) {
            return err(self.root, "root must be a field or row");
        }
        let mut seen = 0usize;
        let mut stack = vec![self.root];
        while let Some(id) = stack.pop() {
            seen += 1;
            if seen > self.nodes.len() {
                return err(id, "cycle");
            }
            if id.0 >= self.next_id {
                return err(id, "id not below next_id");
            }
            let n = &self.nodes[&id];
            if n.folded && !n.kind.is_internal() {
                return err(id, "only operators may be folded");
            }
            for c in &n.children {
                match self.nodes.get(c) {
                    None => return err(*c, "dangling child"),
                    Some(child) if child.parent != Some(id) => {
                        return err(*c, "parent link mismatch")
                    }
                    _ => {}
                }
            }
            match &n.kind {
                NodeKind::Field(f) => {
                    if !n.children.is_empty() {
                        return err(id, "field has children");
                    }
                    if f.caret > f.glyphs.len() {
                        return err(id, "caret beyond glyphs");
                    }
                }
                NodeKind::Symbol(_) => {
                    if !n.children.is_empty() {
                        return err(id, "operator symbol has children");
                    }
                    if !matches!(n.parent.map(|p| &self.nodes[&p].kind), Some(NodeKind::Row)) {
                        return err(id, "operator symbol outside a row");
                    }
                }
                NodeKind::Structure(k) => {
                    if n.children.len() != k.arity() {
                        return err(id, "child count does not match arity");
                    }
                    for c in &n.children {
                        if !matches!(self.nodes[c].kind, NodeKind::Field(_) | NodeKind::Row) {
                            return err(*c, "structure slot must be a field or row");
                        }
                    }
                }
                NodeKind::Row => {
                    let len = n.children.len();
                    if len < 3 || len.is_multiple_of(2) {
                        return err(id, "row length must be odd and at least 3");
                    }
                    for (i, c) in n.children.iter().enumerate() {
                        let is_field = matches!(self.nodes[c].kind, NodeKind::Field(_));
                        if (i % 2 == 0) != is_field {
                            return err(*c, "row must alternate fields and operators");
                        }
                        if matches!(self.nodes[c].kind, NodeKind::Row) {
                            return err(*c, "row directly inside row");
                        }
                    }
                }
            }
            stack.extend(n.children.iter().copied());
        }
        if seen != self.nodes.len() {
            return err(self.root, "unreachable nodes");
        }
        Ok(())
    }

    /// Visible fields in preorder. Folded subtrees are skipped when
    /// `honor_folds` is set.
    pub fn fields(&self, honor_folds: bool) -> Vec<NodeId> {
        self.preorder_with(honor_folds)
            .into_iter()
            .filter(|(_, r)| matches!(r, TokenRole::Field | TokenRole::Spacer))
            .map(|(id, _)| id)
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn delta() -> Glyph {
        Glyph::new("δ", "\\delta", "delta")
    }

    fn text_of(t: &EquationTree, id: NodeId) -> String {
        t.field(id).unwrap().glyphs.iter().map(|g| g.display.as_str()).collect()
    }

    #[test]
    fn new_equation_is_single_empty_field() {
        let t = EquationTree::new();
        let f = t.field(t.root()).unwrap();
        assert!(f.glyphs.is_empty());
        assert_eq!(f.caret, 0);
        assert_eq!(t.preorder(), vec![(t.root(), TokenRole::Field)]);
        t.validate().unwrap();
    }

    #[test]
    fn insert_and_delete_glyphs() {
        let mut t = EquationTree::new();
        let r = t.root();
        t.insert_glyph(r, 0, Glyph::from_ascii('a').unwrap()).unwrap();
        assert_eq!(t.field(r).unwrap().caret, 1);
        t.insert_glyph(r, 1, Glyph::from_ascii('b').unwrap()).unwrap();
        t.insert_glyph(r, 1, Glyph::from_ascii('c').unwrap()).unwrap();
        assert_eq!(text_of(&t, r), "acb");
        assert_eq!(t.field(r).unwrap().caret, 2);
        t.delete_glyph(r, 1).unwrap();
        assert_eq!(text_of(&t, r), "ab");
        assert_eq!(t.field(r).unwrap().caret, 1);
        assert_eq!(
            t.insert_glyph(r, 5, delta()),
            Err(EditError::OffsetOutOfRange { offset: 5, len: 2 })
        );
    }

    #[test]
    fn symbol_glyph_is_atomic() {
        let mut t = EquationTree::new();
        let r = t.root();
        t.insert_glyph(r, 0, delta()).unwrap();
        assert_eq!(t.field(r).unwrap().len(), 1);
        assert_eq!(t.field(r).unwrap().caret, 1);
        let removed = t.delete_glyph(r, 0).unwrap();
        assert_eq!(removed.latex, "\\delta");
        assert!(t.field(r).unwrap().is_empty());
    }

    #[test]
    fn delete_on_empty_field_is_out_of_range() {
        let mut t = EquationTree::new();
        let r = t.root();
        assert_eq!(
            t.delete_glyph(r, 0),
            Err(EditError::OffsetOutOfRange { offset: 0, len: 0 })
        );
    }

    #[test]
    fn edit_errors_name_the_node() {
        let mut t = EquationTree::new();
        assert_eq!(
            t.insert_glyph(NodeId(99), 0, delta()),
            Err(EditError::UnknownNode(NodeId(99)))
        );
        let ins = t
            .insert_structure(t.root(), 0, InsertKind::Structure(StructureKind::Fraction))
            .unwrap();
        assert_eq!(
            t.insert_glyph(ins.node, 0, delta()),
            Err(EditError::NotAField(ins.node))
        );
        assert_eq!(
            t.insert_structure(ins.node, 0, InsertKind::Symbol(OperatorSymbol::Plus)),
            Err(EditError::NotAField(ins.node))
        );
    }

    #[test]
    fn insert_fraction_into_empty_root() {
        let mut t = EquationTree::new();
        let old_root = t.root();
        let ins = t
            .insert_structure(old_root, 0, InsertKind::Structure(StructureKind::Fraction))
            .unwrap();
        t.validate().unwrap();
        let expected = Shape::Row(vec![
            Shape::empty(),
            Shape::structure(StructureKind::Fraction, vec![Shape::empty(), Shape::empty()]),
            Shape::empty(),
        ]);
        assert_eq!(t.shape(), expected);
        assert_eq!(ins.focus, t.children(ins.node)[0]);
        // The split field keeps its id.
        assert_eq!(t.children(t.root())[0], old_root);
    }

    #[test]
    fn insert_root_splits_at_caret() {
        let mut t = EquationTree::from_shape(&Shape::text("xy"));
        let r = t.root();
        t.insert_structure(r, 1, InsertKind::Structure(StructureKind::Root))
            .unwrap();
        t.validate().unwrap();
        assert_eq!(
            t.shape(),
            Shape::Row(vec![
                Shape::text("x"),
                Shape::structure(StructureKind::Root, vec![Shape::empty()]),
                Shape::text("y"),
            ])
        );
    }

    #[test]
    fn insert_inside_structure_slot_wraps_in_row() {
        let mut t = EquationTree::new();
        let ins = t
            .insert_structure(t.root(), 0, InsertKind::Structure(StructureKind::Fraction))
            .unwrap();
        let num = ins.focus;
        t.insert_glyph(num, 0, Glyph::from_ascii('a').unwrap()).unwrap();
        let plus = t
            .insert_structure(num, 1, InsertKind::Symbol(OperatorSymbol::Plus))
            .unwrap();
        t.validate().unwrap();
        assert_eq!(t.field(plus.focus).unwrap().caret, 0);
        let frac = t.children(t.root())[1];
        assert!(matches!(t.get(t.children(frac)[0]).unwrap().kind, NodeKind::Row));
    }

    #[test]
    fn edit_locality() {
        let mut t = EquationTree::from_shape(&Shape::Row(vec![
            Shape::text("ab"),
            Shape::Symbol(OperatorSymbol::Plus),
            Shape::text("cd"),
        ]));
        let before = t.clone();
        let left = t.children(t.root())[0];
        t.insert_glyph(left, 2, delta()).unwrap();
        for (id, n) in before.nodes() {
            if id != left {
                assert_eq!(t.get(id).unwrap(), n);
            }
        }
    }

    #[test]
    fn remove_structure_joins_fields() {
        let mut t = EquationTree::from_shape(&Shape::text("xy"));
        let r = t.root();
        let ins = t
            .insert_structure(r, 1, InsertKind::Structure(StructureKind::Root))
            .unwrap();
        let joined = t.remove_structure(ins.node).unwrap();
        t.validate().unwrap();
        assert_eq!(joined, r);
        assert_eq!(t.root(), r);
        assert_eq!(text_of(&t, r), "xy");
        assert_eq!(t.field(r).unwrap().caret, 1);
    }

    #[test]
    fn folding_rules() {
        let mut t = EquationTree::from_shape(&Shape::structure(
            StructureKind::Fraction,
            vec![Shape::text("a"), Shape::text("b")],
        ));
        let frac = t.children(t.root())[1];
        let before = t.clone();
        t.set_folded(frac, true).unwrap();
        assert_eq!(
            t.preorder()
                .iter()
                .filter(|(_, r)| *r == TokenRole::Folded)
                .count(),
            1
        );
        assert!(!t.preorder().iter().any(|(id, _)| t.parent(*id) == Some(frac)));
        t.set_folded(frac, false).unwrap();
        assert_eq!(t, before);
        let leaf = t.children(frac)[0];
        assert_eq!(t.set_folded(leaf, true), Err(EditError::NotAnOperator(leaf)));
    }

    #[test]
    fn preorder_of_fraction() {
        let t = EquationTree::from_shape(&Shape::structure(
            StructureKind::Fraction,
            vec![Shape::text("a"), Shape::text("b")],
        ));
        let frac = t.children(t.root())[1];
        let order: Vec<NodeId> = t
            .preorder()
            .into_iter()
            .filter(|(_, r)| *r != TokenRole::Spacer && *r != TokenRole::Row)
            .map(|(id, _)| id)
            .collect();
        assert_eq!(order, vec![frac, t.children(frac)[0], t.children(frac)[1]]);
    }

    #[test]
    fn normalization_merges_and_pads() {
        let s = Shape::Row(vec![
            Shape::text("a"),
            Shape::Row(vec![Shape::text("b"), Shape::Symbol(OperatorSymbol::Plus)]),
            Shape::structure(StructureKind::Root, vec![Shape::Symbol(OperatorSymbol::Minus)]),
        ])
        .normalized();
        assert_eq!(
            s,
            Shape::Row(vec![
                Shape::text("ab"),
                Shape::Symbol(OperatorSymbol::Plus),
                Shape::empty(),
                Shape::structure(
                    StructureKind::Root,
                    vec![Shape::Row(vec![
                        Shape::empty(),
                        Shape::Symbol(OperatorSymbol::Minus),
                        Shape::empty()
                    ])]
                ),
                Shape::empty(),
            ])
        );
        EquationTree::from_shape(&s).validate().unwrap();
    }

    #[test]
    fn uppercase_glyphs_are_spoken_with_prefix() {
        assert_eq!(Glyph::from_ascii('A').unwrap().spoken, "upper A");
        assert!(Glyph::from_ascii('+').is_none());
    }

    #[test]
    fn symbol_table_lookup() {
        let t = SymbolTable::default();
        assert_eq!(t.glyph_for_key("\\delta").unwrap().display, "δ");
        assert_eq!(t.glyph_for_key("π").unwrap().spoken, "pi");
        assert_eq!(t.glyph_for_key("q").unwrap().latex, "q");
        assert!(t.glyph_for_key("\\nope").is_none());
    }
}

//! Serializable document form of an equation and the storage abstraction
//! the session saves through.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::audio::Settings;
use crate::model::{EquationTree, Glyph, InputField, Node, NodeId, NodeKind, OperatorSymbol, StructureKind};

pub const FORMAT_VERSION: u32 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RecordKind {
    Field,
    Row,
    Symbol,
    Fraction,
    Root,
    Power,
    Subscript,
    Group,
}

impl RecordKind {
    fn structure(self) -> Option<StructureKind> {
        Some(match self {
            RecordKind::Fraction => StructureKind::Fraction,
            RecordKind::Root => StructureKind::Root,
            RecordKind::Power => StructureKind::Power,
            RecordKind::Subscript => StructureKind::Subscript,
            RecordKind::Group => StructureKind::Group,
            _ => return None,
        })
    }

    fn of_structure(k: StructureKind) -> RecordKind {
        match k {
            StructureKind::Fraction => RecordKind::Fraction,
            StructureKind::Root => RecordKind::Root,
            StructureKind::Power => RecordKind::Power,
            StructureKind::Subscript => RecordKind::Subscript,
            StructureKind::Group => RecordKind::Group,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct NodeRecord {
    pub id: NodeId,
    pub kind: RecordKind,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub children: Vec<NodeId>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub glyphs: Vec<Glyph>,
    #[serde(default, skip_serializing_if = "is_false")]
    pub folded: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub caret: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub symbol: Option<OperatorSymbol>,
}

fn is_false(b: &bool) -> bool {
    !*b
}

/// Flat node list; parents are implied by `children`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TreeRecord {
    pub root: NodeId,
    pub next_id: u32,
    pub nodes: Vec<NodeRecord>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RecordError {
    #[error("duplicate node {0}")]
    DuplicateNode(NodeId),
    #[error("node {0} is missing a field it needs")]
    Incomplete(NodeId),
    #[error("node {child} is listed under more than one parent")]
    SharedChild { child: NodeId },
    #[error(transparent)]
    Invalid(#[from] crate::model::TreeError),
}

impl From<&EquationTree> for TreeRecord {
    fn from(tree: &EquationTree) -> Self {
        let nodes = tree
            .nodes()
            .map(|(id, n)| {
                let (kind, glyphs, caret, symbol) = match &n.kind {
                    NodeKind::Field(f) => (RecordKind::Field, f.glyphs.clone(), Some(f.caret), None),
                    NodeKind::Row => (RecordKind::Row, Vec::new(), None, None),
                    NodeKind::Symbol(s) => (RecordKind::Symbol, Vec::new(), None, Some(*s)),
                    NodeKind::Structure(k) => (RecordKind::of_structure(*k), Vec::new(), None, None),
                };
                NodeRecord {
                    id,
                    kind,
                    children: n.children.clone(),
                    glyphs,
                    folded: n.folded,
                    caret,
                    symbol,
                }
            })
            .collect();
        TreeRecord {
            root: tree.root(),
            next_id: tree.next_id(),
            nodes,
        }
    }
}

impl TreeRecord {
    pub fn to_tree(&self) -> Result<EquationTree, RecordError> {
        let mut parents: BTreeMap<NodeId, NodeId> = BTreeMap::new();
        for r in &self.nodes {
            for c in &r.children {
                if parents.insert(*c, r.id).is_some() {
                    return Err(RecordError::SharedChild { child: *c });
                }
            }
        }
        let mut nodes = BTreeMap::new();
        for r in &self.nodes {
            let kind = match r.kind {
                RecordKind::Field => NodeKind::Field(InputField {
                    glyphs: r.glyphs.clone(),
                    caret: r.caret.unwrap_or(0),
                }),
                RecordKind::Row => NodeKind::Row,
                RecordKind::Symbol => NodeKind::Symbol(r.symbol.ok_or(RecordError::Incomplete(r.id))?),
                other => NodeKind::Structure(other.structure().expect("structure kinds")),
            };
            let node = Node {
                kind,
                children: r.children.clone(),
                parent: parents.get(&r.id).copied(),
                folded: r.folded,
            };
            if nodes.insert(r.id, node).is_some() {
                return Err(RecordError::DuplicateNode(r.id));
            }
        }
        Ok(EquationTree::from_parts(self.root, nodes, self.next_id)?)
    }
}

/// Contents of a saved document file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EquationDocument {
    pub format_version: u32,
    pub tree: TreeRecord,
    #[serde(default)]
    pub settings: Option<Settings>,
}

impl EquationDocument {
    pub fn new(tree: &EquationTree, settings: Option<Settings>) -> EquationDocument {
        EquationDocument {
            format_version: FORMAT_VERSION,
            tree: TreeRecord::from(tree),
            settings,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DocumentError {
    #[error("io error: {0}")]
    IoError(String),
    #[error("document format version {found} is not supported (expected {expected})")]
    VersionMismatch { found: u32, expected: u32 },
    #[error("corrupt document: {0}")]
    CorruptDocument(String),
}

/// Where documents are saved to and loaded from.
pub trait DocumentStore {
    fn save(&mut self, path: &str, doc: &EquationDocument) -> Result<(), DocumentError>;
    fn load(&mut self, path: &str) -> Result<EquationDocument, DocumentError>;
}

/// In-memory store keyed by path.
#[derive(Clone, Debug, Default)]
pub struct MemoryStore {
    pub docs: BTreeMap<String, EquationDocument>,
}

impl DocumentStore for MemoryStore {
    fn save(&mut self, path: &str, doc: &EquationDocument) -> Result<(), DocumentError> {
        self.docs.insert(path.into(), doc.clone());
        Ok(())
    }

    fn load(&mut self, path: &str) -> Result<EquationDocument, DocumentError> {
        self.docs
            .get(path)
            .cloned()
            .ok_or_else(|| DocumentError::IoError(alloc::format!("{path}: not found")))
    }
}

/// Store that refuses everything; the default for sessions without storage.
#[derive(Clone, Copy, Debug, Default)]
pub struct NoStore;

impl DocumentStore for NoStore {
    fn save(&mut self, _: &str, _: &EquationDocument) -> Result<(), DocumentError> {
        Err(DocumentError::IoError("no document storage available".into()))
    }

    fn load(&mut self, _: &str) -> Result<EquationDocument, DocumentError> {
        Err(DocumentError::IoError("no document storage available".into()))
    }
}

/// Check version and rebuild the tree.
pub fn open_document(doc: &EquationDocument) -> Result<EquationTree, DocumentError> {
    if doc.format_version != FORMAT_VERSION {
        return Err(DocumentError::VersionMismatch {
            found: doc.format_version,
            expected: FORMAT_VERSION,
        });
    }
    doc.tree
        .to_tree()
        .map_err(|e| DocumentError::CorruptDocument(alloc::format!("{e}")))
}

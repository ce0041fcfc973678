//! MathSpeak and IntuitiveSpeak serialization.
//!
//! MathSpeak is verbose but unambiguous: every structure is bracketed by its
//! own start and end keywords, so distinct trees always produce distinct
//! text. IntuitiveSpeak emits one word per on-page element and marks
//! structure boundaries with pseudo-parenthesis tokens, which the audio
//! planner turns into earcons.

use alloc::string::{String, ToString};
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::audio::EarconId;
use crate::layout::Source;
use crate::model::{EquationTree, NodeId, NodeKind, StructureKind};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TokenKind {
    Word,
    PseudoOpen,
    PseudoClose,
    EarconRef(EarconId),
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SpeechToken {
    pub kind: TokenKind,
    pub text: String,
    pub source: Source,
}

impl SpeechToken {
    pub fn word(text: &str, source: Source) -> SpeechToken {
        SpeechToken {
            kind: TokenKind::Word,
            text: text.to_string(),
            source,
        }
    }

    pub fn is_word(&self) -> bool {
        self.kind == TokenKind::Word
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SpeechKind {
    #[default]
    MathSpeak,
    IntuitiveSpeak,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verbosity {
    #[default]
    Terse,
    Verbose,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SpeechStyle {
    pub kind: SpeechKind,
    pub verbosity: Verbosity,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SpeechError {
    #[error("unknown node {0}")]
    UnknownNode(NodeId),
}

pub const BLANK: &str = "blank";
pub const OPEN_WORD: &str = "open";
pub const CLOSE_WORD: &str = "close";

struct Serializer<'a> {
    tree: &'a EquationTree,
    kind: SpeechKind,
    honor_folds: bool,
    out: Vec<SpeechToken>,
}

impl Serializer<'_> {
    fn word(&mut self, text: &str, source: Source) {
        self.out.push(SpeechToken::word(text, source));
    }

    fn marker(&mut self, kind: TokenKind, node: NodeId) {
        let text = if kind == TokenKind::PseudoOpen {
            OPEN_WORD
        } else {
            CLOSE_WORD
        };
        self.out.push(SpeechToken {
            kind,
            text: text.to_string(),
            source: Source::node(node),
        });
    }

    fn node(&mut self, id: NodeId) {
        let tree = self.tree;
        let n = tree.get(id).expect("checked by caller");
        let here = Source::node(id);
        if self.honor_folds && n.folded {
            let text = alloc::format!("folded {}", n.kind.name());
            self.word(&text, here);
            return;
        }
        match &n.kind {
            NodeKind::Field(f) => {
                if f.is_empty() {
                    if !tree.is_spacer(id) {
                        self.word(BLANK, here);
                    }
                } else {
                    for (i, g) in f.glyphs.iter().enumerate() {
                        self.word(&g.spoken, Source::glyph(id, i));
                    }
                }
            }
            NodeKind::Symbol(s) => self.word(s.spoken(), here),
            NodeKind::Row => {
                for c in &n.children {
                    self.node(*c);
                }
            }
            NodeKind::Structure(kind) => match self.kind {
                SpeechKind::MathSpeak => self.mathspeak_structure(id, *kind, &n.children),
                SpeechKind::IntuitiveSpeak => {
                    self.marker(TokenKind::PseudoOpen, id);
                    self.intuitive_structure(id, *kind, &n.children);
                    self.marker(TokenKind::PseudoClose, id);
                }
            },
        }
    }

    fn mathspeak_structure(&mut self, id: NodeId, kind: StructureKind, ch: &[NodeId]) {
        let here = Source::node(id);
        match kind {
            StructureKind::Fraction => {
                self.word("Base Frac", here);
                self.node(ch[0]);
                self.word("Over", here);
                self.node(ch[1]);
                self.word("EndFrac", here);
            }
            StructureKind::Root => {
                self.word("StartRoot", here);
                self.node(ch[0]);
                self.word("EndRoot", here);
            }
            StructureKind::Power | StructureKind::Subscript => {
                self.word("StartBase", here);
                self.node(ch[0]);
                self.word(
                    if kind == StructureKind::Power {
                        "Superscript"
                    } else {
                        "Subscript"
                    },
                    here,
                );
                self.node(ch[1]);
                self.word("Baseline", here);
            }
            StructureKind::Group => {
                self.word("left-parenthesis", here);
                self.node(ch[0]);
                self.word("right-parenthesis", here);
            }
        }
    }

    fn intuitive_structure(&mut self, id: NodeId, kind: StructureKind, ch: &[NodeId]) {
        let here = Source::node(id);
        match kind {
            StructureKind::Fraction => {
                self.node(ch[0]);
                self.word("over", here);
                self.node(ch[1]);
            }
            StructureKind::Root => {
                self.word("root", here);
                self.node(ch[0]);
            }
            StructureKind::Power => {
                self.node(ch[0]);
                self.word("to the", here);
                self.node(ch[1]);
            }
            StructureKind::Subscript => {
                self.node(ch[0]);
                self.word("sub", here);
                self.node(ch[1]);
            }
            StructureKind::Group => self.node(ch[0]),
        }
    }
}

/// Serialize the subtree at `node` in the given style.
pub fn serialize(
    tree: &EquationTree,
    node: NodeId,
    kind: SpeechKind,
    honor_folds: bool,
) -> Result<Vec<SpeechToken>, SpeechError> {
    if !tree.contains(node) {
        return Err(SpeechError::UnknownNode(node));
    }
    let mut s = Serializer {
        tree,
        kind,
        honor_folds,
        out: Vec::new(),
    };
    s.node(node);
    Ok(s.out)
}

pub fn mathspeak(tree: &EquationTree, node: NodeId) -> Result<Vec<SpeechToken>, SpeechError> {
    serialize(tree, node, SpeechKind::MathSpeak, true)
}

pub fn intuitivespeak(tree: &EquationTree, node: NodeId) -> Result<Vec<SpeechToken>, SpeechError> {
    serialize(tree, node, SpeechKind::IntuitiveSpeak, true)
}

/// Join token text into one utterance. Pseudo markers are included as
/// words only when `marker_words` is set; otherwise they are earcon-only.
pub fn render_text(tokens: &[SpeechToken], marker_words: bool) -> String {
    let mut out = String::new();
    for t in tokens {
        let include = match t.kind {
            TokenKind::Word => true,
            TokenKind::PseudoOpen | TokenKind::PseudoClose => marker_words,
            TokenKind::EarconRef(_) => false,
        };
        if include && !t.text.is_empty() {
            if !out.is_empty() {
                out.push(' ');
            }
            out.push_str(&t.text);
        }
    }
    out
}

/// Text of the word tokens only.
pub fn words(tokens: &[SpeechToken]) -> String {
    render_text(tokens, false)
}

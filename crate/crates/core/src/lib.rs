//! Core of an accessible equation editor: the equation tree, its spatial
//! layout, MathSpeak and IntuitiveSpeak serialization, LaTeX import and
//! export, keyboard-driven spatial navigation and audio directive planning.
//!
//! The crate is `no_std` and only needs `alloc`. File IO, the command line
//! tool and the network front end live in the `audimath` crate.

#![no_std]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod audio;
pub mod document;
pub mod keyboard;
pub mod latex;
pub mod layout;
pub mod model;
pub mod navigation;
pub mod session;
pub mod speech;

pub use audio::{plan_counts, plan_speech, Directive, EarconCatalog, EarconId, Settings};
pub use document::{DocumentError, DocumentStore, EquationDocument};
pub use keyboard::{load_layout, select_by_key, KeyboardLayout};
pub use latex::{parse_latex, to_latex, LatexError};
pub use layout::{build_grid, geometry, FieldGrid, GeometryMap, Source};
pub use model::{EquationTree, Glyph, NodeId, OperatorSymbol, Shape, StructureKind};
pub use navigation::{NavEvent, NavState, NavStyle, SpatialMode};
pub use session::{apply_event, DirectiveBatch, InputEvent, Session};
pub use speech::{intuitivespeak, mathspeak, SpeechKind, SpeechToken};

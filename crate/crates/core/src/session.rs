//! Editing session: applies input events to the tree and navigation state and
//! returns the audio directives and UI snapshot for each one.

use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;
use core::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::audio::{Directive, EarconCatalog, EarconId, MarkerMode, PlanError, Planner, Settings};
use crate::document::{open_document, DocumentError, DocumentStore, EquationDocument, NoStore, TreeRecord};
use crate::keyboard::KeyboardLayout;
use crate::latex::{parse_latex_with, to_latex, LatexError};
use crate::layout::{build_grid_with, geometry_with, Cell, FieldGrid, GeometryMap, LayoutOptions, Source};
use crate::model::{EditError, EquationTree, InsertKind, NodeId, NodeKind, OperatorSymbol, StructureKind, SymbolTable};
use crate::navigation::{self, fold_target, DirectiveRequest, NavContext, NavError, NavEvent, NavState, NavStyle, SpatialMode};
use crate::speech::{serialize, SpeechKind, SpeechToken, Verbosity};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct Modifiers {
    pub ctrl: bool,
    pub shift: bool,
    pub alt: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SettingValue {
    Bool(bool),
    Number(f64),
    Text(String),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum InputEvent {
    Key {
        key: String,
        #[serde(default)]
        modifiers: Modifiers,
    },
    Nav {
        nav: NavEvent,
    },
    Insert {
        insert: InsertKind,
    },
    SetSetting {
        name: String,
        value: SettingValue,
    },
    LoadLatex {
        text: String,
    },
    RequestLatex,
    NewEquation,
    Save {
        path: String,
    },
    Load {
        path: String,
    },
}

impl InputEvent {
    pub fn key(key: &str) -> InputEvent {
        InputEvent::Key {
            key: key.to_string(),
            modifiers: Modifiers::default(),
        }
    }

    pub fn ctrl(key: &str) -> InputEvent {
        InputEvent::Key {
            key: key.to_string(),
            modifiers: Modifiers {
                ctrl: true,
                ..Modifiers::default()
            },
        }
    }

    pub fn nav(nav: NavEvent) -> InputEvent {
        InputEvent::Nav { nav }
    }
}

/// What a bound key does.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "action", rename_all = "snake_case")]
pub enum Action {
    Insert { insert: InsertKind },
    Nav { nav: NavEvent },
    /// Character move, or virtual cursor move while spatial mode is on.
    Horizontal { forward: bool },
    DeleteBackward,
    DeleteForward,
    RequestLatex,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct KeyChord {
    pub key: String,
    #[serde(default)]
    pub ctrl: bool,
    #[serde(default)]
    pub shift: bool,
    #[serde(default)]
    pub alt: bool,
}

impl KeyChord {
    fn plain(key: &str) -> KeyChord {
        KeyChord {
            key: key.into(),
            ctrl: false,
            shift: false,
            alt: false,
        }
    }

    fn ctrl(key: &str) -> KeyChord {
        KeyChord {
            ctrl: true,
            ..KeyChord::plain(key)
        }
    }

    /// Shift is significant only for named keys; printable characters
    /// already carry it.
    fn matches(&self, key: &str, m: Modifiers) -> bool {
        let named = key.chars().count() > 1;
        let key_eq = if named || self.ctrl {
            self.key.eq_ignore_ascii_case(key)
        } else {
            self.key == key
        };
        key_eq && self.ctrl == m.ctrl && self.alt == m.alt && (!named || self.shift == m.shift)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Hotkeys {
    pub bindings: Vec<(KeyChord, Action)>,
}

impl Default for Hotkeys {
    fn default() -> Self {
        let ins = |k| Action::Insert {
            insert: InsertKind::Structure(k),
        };
        let sym = |s| Action::Insert {
            insert: InsertKind::Symbol(s),
        };
        let nav = |nav| Action::Nav { nav };
        let shift = |key: &str| KeyChord {
            shift: true,
            ..KeyChord::plain(key)
        };
        Hotkeys {
            bindings: vec![
                (KeyChord::plain("/"), ins(StructureKind::Fraction)),
                (KeyChord::ctrl("r"), ins(StructureKind::Root)),
                (KeyChord::plain("^"), ins(StructureKind::Power)),
                (KeyChord::plain("_"), ins(StructureKind::Subscript)),
                (KeyChord::plain("("), ins(StructureKind::Group)),
                (KeyChord::plain("+"), sym(OperatorSymbol::Plus)),
                (KeyChord::plain("-"), sym(OperatorSymbol::Minus)),
                (KeyChord::plain("="), sym(OperatorSymbol::Equals)),
                (KeyChord::plain("*"), sym(OperatorSymbol::Times)),
                (KeyChord::plain("ArrowLeft"), Action::Horizontal { forward: false }),
                (KeyChord::plain("ArrowRight"), Action::Horizontal { forward: true }),
                (KeyChord::plain("ArrowUp"), nav(NavEvent::ArrowUp)),
                (KeyChord::plain("ArrowDown"), nav(NavEvent::ArrowDown)),
                (KeyChord::plain("Tab"), nav(NavEvent::FieldNext)),
                (shift("Tab"), nav(NavEvent::FieldPrev)),
                (KeyChord::plain("Backspace"), Action::DeleteBackward),
                (KeyChord::plain("Delete"), Action::DeleteForward),
                (
                    KeyChord::ctrl("m"),
                    nav(NavEvent::Loopback {
                        style: SpeechKind::MathSpeak,
                    }),
                ),
                (
                    KeyChord::ctrl("i"),
                    nav(NavEvent::Loopback {
                        style: SpeechKind::IntuitiveSpeak,
                    }),
                ),
                (KeyChord::ctrl("e"), nav(NavEvent::ToggleStyle)),
                (KeyChord::ctrl("k"), nav(NavEvent::ToggleSpatial)),
                (KeyChord::ctrl("f"), nav(NavEvent::ToggleFold)),
                (KeyChord::ctrl("j"), nav(NavEvent::ToggleReadFriendly)),
                (KeyChord::ctrl("s"), nav(NavEvent::SelectFocus)),
                (KeyChord::ctrl("p"), nav(NavEvent::SelectParent)),
                (KeyChord::plain("Escape"), nav(NavEvent::ClearSelection)),
                (KeyChord::ctrl("l"), Action::RequestLatex),
            ],
        }
    }
}

impl Hotkeys {
    pub fn lookup(&self, key: &str, m: Modifiers) -> Option<&Action> {
        self.bindings
            .iter()
            .find(|(c, _)| c.matches(key, m))
            .map(|(_, a)| a)
    }

    /// Add or replace a binding.
    pub fn bind(&mut self, chord: KeyChord, action: Action) {
        self.bindings.retain(|(c, _)| *c != chord);
        self.bindings.insert(0, (chord, action));
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GridCellView {
    pub row: usize,
    pub col: usize,
    pub field: NodeId,
    pub text: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GridView {
    pub rows: usize,
    pub cols: usize,
    pub cells: Vec<GridCellView>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct UiState {
    pub grid: GridView,
    pub focus: NodeId,
    pub caret: usize,
    pub vcursor: Cell,
    pub selection: Option<NodeId>,
    pub folds: Vec<NodeId>,
    pub live_message: String,
    pub latex: String,
    pub style: NavStyle,
    pub spatial_mode: SpatialMode,
    pub read_friendly: bool,
    pub tree: TreeRecord,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DirectiveBatch {
    pub revision: u64,
    pub directives: Vec<Directive>,
    pub ui_state: UiState,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SessionError {
    #[error("not in a text field")]
    NotInField,
    #[error("key {0:?} does nothing here")]
    UnboundKey(String),
    #[error("unknown setting {0:?}")]
    UnknownSetting(String),
    #[error("bad value for setting {0}")]
    BadSettingValue(String),
    #[error(transparent)]
    Edit(#[from] EditError),
    #[error(transparent)]
    Nav(#[from] NavError),
    #[error(transparent)]
    Latex(#[from] LatexError),
    #[error(transparent)]
    Document(#[from] DocumentError),
    #[error(transparent)]
    Plan(#[from] PlanError),
}

#[derive(Clone, Debug)]
struct LayoutCache {
    revision: u64,
    honor_folds: bool,
    geometry: GeometryMap,
    grid: FieldGrid,
}

#[derive(Clone, Debug)]
pub struct Session {
    tree: EquationTree,
    nav: NavState,
    settings: Settings,
    revision: u64,
    keyboard: KeyboardLayout,
    hotkeys: Hotkeys,
    catalog: EarconCatalog,
    symbols: SymbolTable,
    memo: Option<LayoutCache>,
}

impl Default for Session {
    fn default() -> Self {
        Session::new()
    }
}

/// Speech the session produces for its own feedback.
fn say(text: &str, at: Source) -> DirectiveRequest {
    DirectiveRequest::Speak {
        tokens: vec![SpeechToken::word(text, at)],
    }
}

impl Session {
    pub fn new() -> Session {
        Session::with_tree(EquationTree::new())
    }

    pub fn with_tree(tree: EquationTree) -> Session {
        let nav = NavState::new(&tree);
        Session {
            tree,
            nav,
            settings: Settings::default(),
            revision: 0,
            keyboard: KeyboardLayout::default(),
            hotkeys: Hotkeys::default(),
            catalog: EarconCatalog::default(),
            symbols: SymbolTable::default(),
            memo: None,
        }
    }

    pub fn with_settings(mut self, settings: Settings) -> Session {
        self.nav.style = settings.nav_style;
        self.settings = settings;
        self
    }

    pub fn with_keyboard(mut self, keyboard: KeyboardLayout) -> Session {
        self.keyboard = keyboard;
        self
    }

    pub fn with_catalog(mut self, catalog: EarconCatalog) -> Session {
        self.catalog = catalog;
        self
    }

    pub fn with_symbols(mut self, symbols: SymbolTable) -> Session {
        self.symbols = symbols;
        self
    }

    pub fn with_hotkeys(mut self, hotkeys: Hotkeys) -> Session {
        self.hotkeys = hotkeys;
        self
    }

    pub fn tree(&self) -> &EquationTree {
        &self.tree
    }

    pub fn nav(&self) -> &NavState {
        &self.nav
    }

    pub fn settings(&self) -> &Settings {
        &self.settings
    }

    pub fn revision(&self) -> u64 {
        self.revision
    }

    pub fn symbols(&self) -> &SymbolTable {
        &self.symbols
    }

    fn ensure_layout(&mut self) {
        let honor = self.nav.read_friendly;
        let fresh = matches!(&self.memo, Some(c) if c.revision == self.revision && c.honor_folds == honor);
        if !fresh {
            let opts = LayoutOptions { honor_folds: honor };
            self.memo = Some(LayoutCache {
                revision: self.revision,
                honor_folds: honor,
                geometry: geometry_with(&self.tree, opts),
                grid: build_grid_with(&self.tree, opts),
            });
        }
    }

    /// Geometry of the current tree, cached per revision.
    pub fn geometry(&mut self) -> &GeometryMap {
        self.ensure_layout();
        &self.memo.as_ref().expect("layout cached").geometry
    }

    pub fn grid(&mut self) -> &FieldGrid {
        self.ensure_layout();
        &self.memo.as_ref().expect("layout cached").grid
    }

    fn replace_tree(&mut self, tree: EquationTree) {
        self.tree = tree;
        self.revision += 1;
        self.nav = self.nav.reset_for(&self.tree);
        self.nav.style = self.settings.nav_style;
        self.ensure_layout();
        let grid = &self.memo.as_ref().expect("layout cached").grid;
        if let Some(c) = grid.cell_of(self.nav.focus) {
            self.nav.vcursor = c;
        }
    }

    /// Apply one event without document storage.
    pub fn apply_event(&mut self, event: &InputEvent) -> DirectiveBatch {
        self.apply_event_with(event, &mut NoStore)
    }

    /// Apply one event. Failures leave the session unchanged and come back
    /// as a single error directive.
    pub fn apply_event_with(&mut self, event: &InputEvent, store: &mut dyn DocumentStore) -> DirectiveBatch {
        let snapshot = self.clone();
        let prev_focus = self.nav.focus;
        let directives = match self
            .step(event, store)
            .and_then(|reqs| {
                self.settle_vcursor(prev_focus);
                self.plan(&reqs)
            }) {
            Ok(d) => d,
            Err(e) => {
                *self = snapshot;
                vec![Directive::Error { text: e.to_string() }]
            }
        };
        self.batch(directives)
    }

    fn step(&mut self, event: &InputEvent, store: &mut dyn DocumentStore) -> Result<Vec<DirectiveRequest>, SessionError> {
        match event {
            InputEvent::Key { key, modifiers } => self.key(key, *modifiers),
            InputEvent::Nav { nav } => self.navigate(nav),
            InputEvent::Insert { insert } => self.insert(*insert),
            InputEvent::SetSetting { name, value } => self.set_setting(name, value),
            InputEvent::LoadLatex { text } => {
                let tree = parse_latex_with(text, &self.symbols)?;
                self.replace_tree(tree);
                Ok(vec![DirectiveRequest::Speak {
                    tokens: serialize(&self.tree, self.tree.root(), SpeechKind::IntuitiveSpeak, self.nav.read_friendly)
                        .expect("root exists"),
                }])
            }
            InputEvent::RequestLatex => Ok(vec![say(&to_latex(&self.tree), self.focus_source())]),
            InputEvent::NewEquation => {
                self.replace_tree(EquationTree::new());
                Ok(vec![say("new equation", self.focus_source())])
            }
            InputEvent::Save { path } => {
                let doc = EquationDocument::new(&self.tree, Some(self.settings.clone()));
                store.save(path, &doc)?;
                Ok(vec![say("saved", self.focus_source())])
            }
            InputEvent::Load { path } => {
                let doc = store.load(path)?;
                let tree = open_document(&doc)?;
                if let Some(s) = doc.settings {
                    self.settings = s;
                }
                self.replace_tree(tree);
                Ok(vec![say("loaded", self.focus_source())])
            }
        }
    }

    /// Keep the virtual cursor on the focused field after focus moves, and
    /// inside the grid after edits reshape it.
    fn settle_vcursor(&mut self, prev_focus: NodeId) {
        self.ensure_layout();
        let grid = &self.memo.as_ref().expect("layout cached").grid;
        if self.nav.focus != prev_focus {
            if let Some(c) = grid.cell_of(self.nav.focus) {
                self.nav.vcursor = c;
            }
        }
        self.nav.vcursor.row = self.nav.vcursor.row.min(grid.rows - 1);
        self.nav.vcursor.col = self.nav.vcursor.col.min(grid.cols - 1);
    }

    fn focus_source(&self) -> Source {
        let mut node = self.nav.focus;
        if self.nav.read_friendly {
            let mut cur = self.tree.parent(node);
            while let Some(p) = cur {
                if self.tree.get(p).map(|n| n.folded).unwrap_or(false) {
                    node = p;
                }
                cur = self.tree.parent(p);
            }
        }
        if self.tree.contains(node) {
            Source::node(node)
        } else {
            Source::node(self.tree.root())
        }
    }

    fn key(&mut self, key: &str, m: Modifiers) -> Result<Vec<DirectiveRequest>, SessionError> {
        if let Some(action) = self.hotkeys.lookup(key, m).cloned() {
            return match action {
                Action::Insert { insert } => self.insert(insert),
                Action::Nav { nav } => self.navigate(&nav),
                Action::Horizontal { forward } => {
                    let nav = match (self.nav.spatial_mode, forward) {
                        (SpatialMode::Off, true) => NavEvent::CharRight,
                        (SpatialMode::Off, false) => NavEvent::CharLeft,
                        (_, true) => NavEvent::ArrowRight,
                        (_, false) => NavEvent::ArrowLeft,
                    };
                    self.navigate(&nav)
                }
                Action::DeleteBackward => self.delete(false),
                Action::DeleteForward => self.delete(true),
                Action::RequestLatex => Ok(vec![say(&to_latex(&self.tree), self.focus_source())]),
            };
        }
        if m.ctrl || m.alt {
            return Err(SessionError::UnboundKey(key.to_string()));
        }
        if self.nav.spatial_mode != SpatialMode::Off && self.keyboard.contains(key) {
            return self.navigate(&NavEvent::SpatialKey { key: key.to_string() });
        }
        let glyph = self
            .symbols
            .glyph_for_key(key)
            .ok_or_else(|| SessionError::UnboundKey(key.to_string()))?;
        let field = self.focused_field()?;
        self.tree.insert_glyph(field, self.nav.caret, glyph)?;
        self.revision += 1;
        let at = Source::glyph(field, self.nav.caret);
        self.nav.caret += 1;
        let spoken = self.tree.field(field)?.glyphs[at.offset.unwrap()].spoken.clone();
        Ok(vec![say(&spoken, at)])
    }

    /// The focused field with the caret clamped into it.
    fn focused_field(&mut self) -> Result<NodeId, SessionError> {
        let f = self.tree.field(self.nav.focus).map_err(|_| SessionError::NotInField)?;
        if self.nav.read_friendly && self.focus_source().node != self.nav.focus {
            return Err(SessionError::NotInField);
        }
        self.nav.caret = self.nav.caret.min(f.len());
        Ok(self.nav.focus)
    }

    fn insert(&mut self, kind: InsertKind) -> Result<Vec<DirectiveRequest>, SessionError> {
        let field = self.focused_field()?;
        let ins = self.tree.insert_structure(field, self.nav.caret, kind)?;
        self.revision += 1;
        self.nav.focus = ins.focus;
        self.nav.caret = 0;
        let name = self.tree.get(ins.node)?.kind.name();
        Ok(vec![
            say(name, Source::node(ins.node)),
            DirectiveRequest::Earcon {
                earcon: EarconId::FieldEnter,
                at: Source::node(ins.focus),
            },
        ])
    }

    fn sibling(&self, node: NodeId, forward: bool) -> Option<NodeId> {
        let row = self.tree.parent(node)?;
        if !matches!(self.tree.get(row).ok()?.kind, NodeKind::Row) {
            return None;
        }
        let ch = self.tree.children(row);
        let at = ch.iter().position(|c| *c == node)?;
        if forward {
            ch.get(at + 1).copied()
        } else {
            at.checked_sub(1).map(|i| ch[i])
        }
    }

    fn delete(&mut self, forward: bool) -> Result<Vec<DirectiveRequest>, SessionError> {
        let target = match self.tree.field(self.nav.focus) {
            Err(_) => Some(self.focus_source().node),
            Ok(f) => {
                let caret = self.nav.caret.min(f.len());
                let glyph_at = if forward {
                    (caret < f.len()).then_some(caret)
                } else {
                    caret.checked_sub(1)
                };
                if let Some(at) = glyph_at {
                    let field = self.focused_field()?;
                    let g = self.tree.delete_glyph(field, at)?;
                    self.revision += 1;
                    self.nav.caret = at;
                    let text = alloc::format!("deleted {}", g.spoken);
                    return Ok(vec![say(&text, Source::node(field))]);
                }
                self.sibling(self.nav.focus, forward)
            }
        };
        let Some(target) = target else {
            return Ok(vec![DirectiveRequest::Earcon {
                earcon: EarconId::EndOfText,
                at: self.focus_source(),
            }]);
        };
        let name = self.tree.get(target)?.kind.name();
        let merged = self.tree.remove_structure(target)?;
        self.revision += 1;
        self.nav.focus = merged;
        self.nav.caret = self.tree.field(merged)?.caret;
        if self.nav.selection.is_some_and(|s| !self.tree.contains(s)) {
            self.nav.selection = None;
        }
        let text = alloc::format!("deleted {name}");
        Ok(vec![say(&text, Source::node(merged))])
    }

    fn navigate(&mut self, event: &NavEvent) -> Result<Vec<DirectiveRequest>, SessionError> {
        if *event == NavEvent::ToggleFold {
            return self.toggle_fold();
        }
        self.ensure_layout();
        let cache = self.memo.as_ref().expect("layout cached");
        let ctx = NavContext {
            tree: &self.tree,
            grid: &cache.grid,
            keyboard: &self.keyboard,
        };
        let out = navigation::apply(ctx, &self.nav, event)?;
        self.nav = out.state;
        Ok(out.requests)
    }

    fn toggle_fold(&mut self) -> Result<Vec<DirectiveRequest>, SessionError> {
        let target = fold_target(&self.tree, &self.nav).ok_or(NavError::NothingToFold)?;
        let folded = !self.tree.get(target)?.folded;
        self.tree.set_folded(target, folded)?;
        self.revision += 1;
        if folded && self.nav.read_friendly {
            self.nav.focus = target;
            self.nav.caret = 0;
        }
        // unfolding can reveal fields for a focus parked on a token
        self.ensure_layout();
        let cache = self.memo.as_ref().expect("layout cached");
        let ctx = NavContext {
            tree: &self.tree,
            grid: &cache.grid,
            keyboard: &self.keyboard,
        };
        self.nav = navigation::onto_field(ctx, self.nav.clone());
        let name = self.tree.get(target)?.kind.name();
        let text = if folded {
            alloc::format!("folded {name}")
        } else {
            alloc::format!("unfolded {name}")
        };
        Ok(vec![say(&text, Source::node(target))])
    }

    fn set_setting(&mut self, name: &str, value: &SettingValue) -> Result<Vec<DirectiveRequest>, SessionError> {
        let bad = || SessionError::BadSettingValue(name.to_string());
        let flag = || match value {
            SettingValue::Bool(b) => Ok(*b),
            _ => Err(bad()),
        };
        let number = || match value {
            SettingValue::Number(n) if n.is_finite() => Ok(*n),
            _ => Err(bad()),
        };
        let text = || match value {
            SettingValue::Text(t) => Ok(t.as_str()),
            _ => Err(bad()),
        };
        match name {
            "verbosity" => {
                self.settings.verbosity = match text()? {
                    "terse" => Verbosity::Terse,
                    "verbose" => Verbosity::Verbose,
                    _ => return Err(bad()),
                }
            }
            "nav_style" => {
                let style = match text()? {
                    "linear" => NavStyle::Linear,
                    "equation" => NavStyle::Equation,
                    _ => return Err(bad()),
                };
                self.settings.nav_style = style;
                if self.nav.style != style {
                    self.navigate(&NavEvent::ToggleStyle)?;
                }
            }
            "spatial_audio" => self.settings.spatial_audio = flag()?,
            "pitch_mapping" => self.settings.pitch_mapping = flag()?,
            "read_friendly" => self.nav.read_friendly = flag()?,
            "semitones_per_level" => self.settings.semitones_per_level = number()?,
            "speech_rate" => {
                let r = number()?;
                if r <= 0.0 {
                    return Err(bad());
                }
                self.settings.speech_rate = r;
            }
            _ => return Err(SessionError::UnknownSetting(name.to_string())),
        }
        let shown = match value {
            SettingValue::Bool(b) => if *b { "on".to_string() } else { "off".to_string() },
            SettingValue::Number(n) => alloc::format!("{n}"),
            SettingValue::Text(t) => t.clone(),
        };
        let msg = alloc::format!("{} {}", name.replace('_', " "), shown);
        Ok(vec![say(&msg, self.focus_source())])
    }

    fn plan(&mut self, requests: &[DirectiveRequest]) -> Result<Vec<Directive>, SessionError> {
        self.ensure_layout();
        let cache = self.memo.as_ref().expect("layout cached");
        let planner = Planner {
            geometry: &cache.geometry,
            settings: &self.settings,
            catalog: &self.catalog,
            markers: MarkerMode::for_settings(&self.settings, self.nav.read_friendly),
        };
        let mut out = Vec::new();
        for r in requests {
            match r {
                DirectiveRequest::Speak { tokens } => out.extend(planner.speech_tokens(tokens)?),
                DirectiveRequest::Earcon { earcon, at } => out.push(planner.earcon(*earcon, *at)?),
                DirectiveRequest::Counts { count, index, at } => out.extend(planner.counts(*count, *index, *at)?),
            }
        }
        Ok(out)
    }

    fn batch(&mut self, directives: Vec<Directive>) -> DirectiveBatch {
        self.ensure_layout();
        let grid = &self.memo.as_ref().expect("layout cached").grid;
        let cells = grid
            .cells()
            .map(|(c, field)| GridCellView {
                row: c.row,
                col: c.col,
                field,
                text: self
                    .tree
                    .field(field)
                    .map(|f| f.glyphs.iter().map(|g| g.display.as_str()).collect())
                    .unwrap_or_default(),
            })
            .collect();
        let mut live = String::new();
        for d in &directives {
            let text = match d {
                Directive::Speech(s) => s.text.as_str(),
                Directive::Error { text } => text.as_str(),
                Directive::Earcon(_) => continue,
            };
            if !live.is_empty() {
                live.push(' ');
            }
            let _ = write!(live, "{text}");
        }
        DirectiveBatch {
            revision: self.revision,
            ui_state: UiState {
                grid: GridView {
                    rows: grid.rows,
                    cols: grid.cols,
                    cells,
                },
                focus: self.nav.focus,
                caret: self.nav.caret,
                vcursor: self.nav.vcursor,
                selection: self.nav.selection,
                folds: self.tree.folded_nodes(),
                live_message: live,
                latex: to_latex(&self.tree),
                style: self.nav.style,
                spatial_mode: self.nav.spatial_mode,
                read_friendly: self.nav.read_friendly,
                tree: TreeRecord::from(&self.tree),
            },
            directives,
        }
    }
}

/// Functional form: the input session is left untouched.
pub fn apply_event(session: &Session, event: &InputEvent) -> (Session, DirectiveBatch) {
    let mut next = session.clone();
    let batch = next.apply_event(event);
    (next, batch)
}

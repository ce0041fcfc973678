//! Navigation: linear and equation styles, spatial key selection, the
//! arrow-key virtual cursor and loopback reads.
//!
//! Every transition is a pure function of `(tree, grid, state, event)` and
//! yields the next state plus a list of [`DirectiveRequest`]s that the audio
//! planner turns into sound.

use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::audio::EarconId;
use crate::keyboard::{select_by_key, KeyboardError, KeyboardLayout};
use crate::layout::{nearest_field, Cell, FieldGrid, Source};
use crate::model::{EquationTree, NodeId, NodeKind, TokenRole};
use crate::speech::{serialize, SpeechError, SpeechKind, SpeechToken, BLANK};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NavStyle {
    #[default]
    Linear,
    Equation,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SpatialMode {
    #[default]
    Off,
    RowMode,
    ColumnMode,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct NavState {
    pub style: NavStyle,
    pub spatial_mode: SpatialMode,
    pub focus: NodeId,
    pub caret: usize,
    pub vcursor: Cell,
    pub selection: Option<NodeId>,
    pub read_friendly: bool,
}

impl NavState {
    /// Caret at the start of the first field.
    pub fn new(tree: &EquationTree) -> NavState {
        let focus = tree.fields(true).first().copied().unwrap_or(tree.root());
        NavState {
            style: NavStyle::Linear,
            spatial_mode: SpatialMode::Off,
            focus,
            caret: 0,
            vcursor: Cell { row: 0, col: 0 },
            selection: None,
            read_friendly: true,
        }
    }

    /// Same modes, focus reset to the start of `tree`.
    pub fn reset_for(&self, tree: &EquationTree) -> NavState {
        NavState {
            style: self.style,
            spatial_mode: self.spatial_mode,
            read_friendly: self.read_friendly,
            ..NavState::new(tree)
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum NavEvent {
    CharLeft,
    CharRight,
    FieldNext,
    FieldPrev,
    ArrowUp,
    ArrowDown,
    ArrowLeft,
    ArrowRight,
    SpatialKey { key: String },
    ToggleStyle,
    ToggleSpatial,
    ToggleFold,
    ToggleReadFriendly,
    Loopback { style: SpeechKind },
    SelectFocus,
    SelectParent,
    ClearSelection,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DirectiveRequest {
    Speak { tokens: Vec<SpeechToken> },
    Earcon { earcon: EarconId, at: Source },
    Counts { count: usize, index: usize, at: Source },
}

impl DirectiveRequest {
    fn earcon(earcon: EarconId, at: Source) -> DirectiveRequest {
        DirectiveRequest::Earcon { earcon, at }
    }

    fn words(text: &str, at: Source) -> DirectiveRequest {
        DirectiveRequest::Speak {
            tokens: vec![SpeechToken::word(text, at)],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum NavError {
    #[error("key {0:?} is not in the keyboard layout")]
    UnknownKey(String),
    #[error("spatial navigation mode is off")]
    SpatialModeOff,
    #[error("nothing to fold here")]
    NothingToFold,
    #[error(transparent)]
    Speech(#[from] SpeechError),
}

impl From<KeyboardError> for NavError {
    fn from(e: KeyboardError) -> Self {
        match e {
            KeyboardError::UnknownKey(k) => NavError::UnknownKey(k),
            other => NavError::UnknownKey(other.to_string()),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Direction {
    Forward,
    Backward,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Arrow {
    Up,
    Down,
    Left,
    Right,
}

#[derive(Clone, Debug, PartialEq)]
pub struct NavOutcome {
    pub state: NavState,
    pub requests: Vec<DirectiveRequest>,
}

/// Everything navigation reads besides its own state. `grid` must be built
/// with the same fold handling as `honor_folds`.
#[derive(Clone, Copy)]
pub struct NavContext<'a> {
    pub tree: &'a EquationTree,
    pub grid: &'a FieldGrid,
    pub keyboard: &'a KeyboardLayout,
}

/// One position in the linear scan.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Stop {
    Caret { field: NodeId, offset: usize },
    Token(NodeId),
}

/// Linear scan order: fields contribute caret positions `0..=len`,
/// structures and operator symbols one token each.
pub fn linear_stops(tree: &EquationTree, honor_folds: bool) -> Vec<Stop> {
    let mut out = Vec::new();
    for (id, role) in tree.preorder_with(honor_folds) {
        match role {
            TokenRole::Row => {}
            TokenRole::Structure(_) | TokenRole::Folded | TokenRole::Symbol(_) => {
                out.push(Stop::Token(id))
            }
            TokenRole::Field | TokenRole::Spacer => {
                let len = tree.field(id).map(|f| f.len()).unwrap_or(0);
                out.extend((0..=len).map(|offset| Stop::Caret { field: id, offset }));
            }
        }
    }
    out
}

/// Outermost folded ancestor of `id`, if any.
fn folded_ancestor(tree: &EquationTree, id: NodeId) -> Option<NodeId> {
    let mut found = None;
    let mut cur = tree.parent(id);
    while let Some(p) = cur {
        if tree.get(p).map(|n| n.folded).unwrap_or(false) {
            found = Some(p);
        }
        cur = tree.parent(p);
    }
    found
}

fn stop_index(tree: &EquationTree, stops: &[Stop], nav: &NavState, honor_folds: bool) -> usize {
    let focus = if honor_folds {
        folded_ancestor(tree, nav.focus).unwrap_or(nav.focus)
    } else {
        nav.focus
    };
    stops
        .iter()
        .position(|s| match *s {
            Stop::Caret { field, offset } => field == focus && offset == nav.caret,
            Stop::Token(n) => n == focus,
        })
        .or_else(|| {
            // caret beyond the field: clamp to its last stop
            stops.iter().rposition(|s| matches!(*s, Stop::Caret { field, .. } if field == focus))
        })
        .unwrap_or(0)
}

fn stop_source(stop: Stop) -> Source {
    match stop {
        Stop::Caret { field, offset } if offset > 0 => Source::glyph(field, offset - 1),
        Stop::Caret { field, .. } => Source::node(field),
        Stop::Token(n) => Source::node(n),
    }
}

fn token_requests(tree: &EquationTree, node: NodeId, honor_folds: bool) -> Vec<DirectiveRequest> {
    let n = tree.get(node).expect("stop nodes exist");
    let at = Source::node(node);
    let speech = if matches!(n.kind, NodeKind::Structure(_)) && !(honor_folds && n.folded) {
        DirectiveRequest::words(n.kind.name(), at)
    } else {
        DirectiveRequest::Speak {
            tokens: serialize(tree, node, SpeechKind::IntuitiveSpeak, honor_folds)
                .expect("stop nodes exist"),
        }
    };
    vec![DirectiveRequest::earcon(EarconId::NodeEnter, at), speech]
}

fn glyph_request(tree: &EquationTree, field: NodeId, offset: usize) -> DirectiveRequest {
    let g = &tree.field(field).expect("caret stops are fields").glyphs[offset];
    DirectiveRequest::words(&g.spoken, Source::glyph(field, offset))
}

/// Field-enter earcon plus the field's content ("blank" when empty).
fn field_requests(tree: &EquationTree, field: NodeId, with_content: bool) -> Vec<DirectiveRequest> {
    let at = Source::node(field);
    let Ok(f) = tree.field(field) else {
        // a folded root stands in for the grid's only cell
        let mut out = token_requests(tree, field, true);
        if !with_content {
            out.truncate(1);
        }
        return out;
    };
    let mut out = vec![DirectiveRequest::earcon(EarconId::FieldEnter, at)];
    if f.is_empty() {
        if with_content || !tree.is_spacer(field) {
            out.push(DirectiveRequest::words(BLANK, at));
        }
    } else if with_content {
        out.push(DirectiveRequest::Speak {
            tokens: f
                .glyphs
                .iter()
                .enumerate()
                .map(|(i, g)| SpeechToken::word(&g.spoken, Source::glyph(field, i)))
                .collect(),
        });
    }
    out
}

fn sync_vcursor(grid: &FieldGrid, state: &mut NavState) {
    if let Some(cell) = grid.cell_of(state.focus) {
        state.vcursor = cell;
    }
}

fn end_of_text(nav: &NavState, at: Source) -> NavOutcome {
    NavOutcome {
        state: nav.clone(),
        requests: vec![DirectiveRequest::earcon(EarconId::EndOfText, at)],
    }
}

/// Move one position through the full text of the equation.
pub fn step_linear(ctx: NavContext<'_>, nav: &NavState, dir: Direction) -> NavOutcome {
    let honor = nav.read_friendly;
    let stops = linear_stops(ctx.tree, honor);
    let cur = stop_index(ctx.tree, &stops, nav, honor);
    let target = match dir {
        Direction::Forward => cur + 1,
        Direction::Backward => cur.wrapping_sub(1),
    };
    let Some(&next) = stops.get(target) else {
        return end_of_text(nav, stop_source(stops[cur]));
    };
    let prev = stops[cur];

    let mut state = nav.clone();
    let requests = match next {
        Stop::Token(n) => {
            state.focus = n;
            state.caret = 0;
            token_requests(ctx.tree, n, honor)
        }
        Stop::Caret { field, offset } => {
            state.focus = field;
            state.caret = offset;
            let same_field = matches!(prev, Stop::Caret { field: f, .. } if f == field);
            match (dir, same_field) {
                (Direction::Forward, true) => vec![glyph_request(ctx.tree, field, offset - 1)],
                (Direction::Backward, true) => vec![glyph_request(ctx.tree, field, offset)],
                _ => field_requests(ctx.tree, field, false),
            }
        }
    };
    sync_vcursor(ctx.grid, &mut state);
    NavOutcome { state, requests }
}

/// Character movement in equation style: within the field, then jump to the
/// neighbouring field at either edge.
pub fn step_in_field(ctx: NavContext<'_>, nav: &NavState, dir: Direction) -> NavOutcome {
    if let Ok(f) = ctx.tree.field(nav.focus) {
        let caret = nav.caret.min(f.len());
        let mut state = nav.clone();
        match dir {
            Direction::Forward if caret < f.len() => {
                state.caret = caret + 1;
                return NavOutcome {
                    requests: vec![glyph_request(ctx.tree, nav.focus, caret)],
                    state,
                };
            }
            Direction::Backward if caret > 0 => {
                state.caret = caret - 1;
                return NavOutcome {
                    requests: vec![glyph_request(ctx.tree, nav.focus, caret - 1)],
                    state,
                };
            }
            _ => {}
        }
    }
    let out = step_equation(ctx, nav, dir);
    if dir == Direction::Forward && out.state != *nav {
        // entering from the left lands at the start
        let mut state = out.state;
        state.caret = 0;
        return NavOutcome {
            state,
            requests: out.requests,
        };
    }
    out
}

/// Jump whole fields in preorder.
pub fn step_equation(ctx: NavContext<'_>, nav: &NavState, dir: Direction) -> NavOutcome {
    let honor = nav.read_friendly;
    let fields = ctx.tree.fields(honor);
    let target = match fields.iter().position(|f| *f == nav.focus) {
        Some(i) => match dir {
            Direction::Forward => fields.get(i + 1).copied(),
            Direction::Backward => i.checked_sub(1).map(|j| fields[j]),
        },
        None => {
            let stops = linear_stops(ctx.tree, honor);
            let cur = stop_index(ctx.tree, &stops, nav, honor);
            let field_of = |s: &Stop| match *s {
                Stop::Caret { field, .. } => Some(field),
                Stop::Token(_) => None,
            };
            match dir {
                Direction::Forward => stops[cur + 1..].iter().find_map(field_of),
                Direction::Backward => stops[..cur].iter().rev().find_map(field_of),
            }
        }
    };
    let Some(field) = target else {
        let at = if ctx.tree.contains(nav.focus) {
            Source::node(nav.focus)
        } else {
            Source::node(ctx.tree.root())
        };
        return end_of_text(nav, at);
    };
    let mut state = nav.clone();
    state.focus = field;
    state.caret = ctx.tree.field(field).map(|f| f.len()).unwrap_or(0);
    sync_vcursor(ctx.grid, &mut state);
    NavOutcome {
        state,
        requests: field_requests(ctx.tree, field, true),
    }
}

fn position_tones(grid: &FieldGrid, mode: SpatialMode, field: NodeId) -> Option<DirectiveRequest> {
    let cell = grid.cell_of(field)?;
    let members = match mode {
        SpatialMode::ColumnMode => grid.col_members(cell.col),
        _ => grid.row_members(cell.row),
    };
    let index = members.iter().position(|m| *m == field)? + 1;
    Some(DirectiveRequest::Counts {
        count: members.len(),
        index,
        at: Source::node(field),
    })
}

/// Move the virtual cursor one cell; focus follows to the nearest field.
pub fn move_vcursor(ctx: NavContext<'_>, nav: &NavState, arrow: Arrow) -> NavOutcome {
    let grid = ctx.grid;
    let cur = Cell {
        row: nav.vcursor.row.min(grid.rows - 1),
        col: nav.vcursor.col.min(grid.cols - 1),
    };
    let next = match arrow {
        Arrow::Up => cur.row.checked_sub(1).map(|row| Cell { row, ..cur }),
        Arrow::Down => (cur.row + 1 < grid.rows).then_some(Cell { row: cur.row + 1, ..cur }),
        Arrow::Left => cur.col.checked_sub(1).map(|col| Cell { col, ..cur }),
        Arrow::Right => (cur.col + 1 < grid.cols).then_some(Cell { col: cur.col + 1, ..cur }),
    };
    let Some(next) = next else {
        let at = if grid.cell_of(nav.focus).is_some() {
            Source::node(nav.focus)
        } else {
            Source::node(grid.at(cur.row, cur.col).or(grid.cells().next().map(|c| c.1)).unwrap())
        };
        let mut state = nav.clone();
        state.vcursor = cur;
        return NavOutcome {
            state,
            requests: vec![DirectiveRequest::earcon(EarconId::EndOfText, at)],
        };
    };
    let (x, y) = grid.center(next);
    let field = nearest_field(grid, x, y).expect("grid is never empty");
    let mut state = nav.clone();
    state.vcursor = next;
    state.focus = field;
    state.caret = ctx.tree.field(field).map(|f| f.len()).unwrap_or(0);
    let mut requests = Vec::new();
    requests.extend(position_tones(grid, nav.spatial_mode, field));
    requests.extend(field_requests(ctx.tree, field, true).into_iter().skip(1));
    NavOutcome { state, requests }
}

/// Spatial navigation: the key's physical position picks a grid field.
pub fn spatial_select(ctx: NavContext<'_>, nav: &NavState, key: &str) -> Result<NavOutcome, NavError> {
    if nav.spatial_mode == SpatialMode::Off {
        return Err(NavError::SpatialModeOff);
    }
    let field = select_by_key(ctx.keyboard, ctx.grid, key)?;
    let mut state = nav.clone();
    state.focus = field;
    state.caret = ctx.tree.field(field).map(|f| f.len()).unwrap_or(0);
    sync_vcursor(ctx.grid, &mut state);
    let mut requests = Vec::new();
    requests.extend(position_tones(ctx.grid, nav.spatial_mode, field));
    requests.extend(field_requests(ctx.tree, field, true).into_iter().skip(1));
    Ok(NavOutcome { state, requests })
}

/// The selected node, or the whole equation, in the requested style.
pub fn speak_selection(tree: &EquationTree, nav: &NavState, kind: SpeechKind) -> Vec<SpeechToken> {
    let node = nav
        .selection
        .filter(|s| tree.contains(*s))
        .unwrap_or(tree.root());
    serialize(tree, node, kind, nav.read_friendly).expect("node exists")
}

pub fn request_loopback(tree: &EquationTree, nav: &NavState, kind: SpeechKind) -> Vec<DirectiveRequest> {
    vec![DirectiveRequest::Speak {
        tokens: speak_selection(tree, nav, kind),
    }]
}

/// Node a fold toggle applies to: the focused operator token, else the
/// structure enclosing the focused field, else a root row.
pub fn fold_target(tree: &EquationTree, nav: &NavState) -> Option<NodeId> {
    let focus = folded_ancestor(tree, nav.focus).unwrap_or(nav.focus);
    let n = tree.get(focus).ok()?;
    if n.kind.is_internal() {
        return Some(focus);
    }
    tree.enclosing_structure(focus).or_else(|| {
        let root = tree.get(tree.root()).ok()?;
        root.kind.is_internal().then_some(tree.root())
    })
}

fn confirm(ctx: NavContext<'_>, state: &NavState, text: &str) -> DirectiveRequest {
    let at = if ctx.tree.contains(state.focus) {
        let visible = folded_ancestor(ctx.tree, state.focus)
            .filter(|_| state.read_friendly)
            .unwrap_or(state.focus);
        Source::node(visible)
    } else {
        Source::node(ctx.tree.root())
    };
    DirectiveRequest::words(text, at)
}

/// In equation style, move a focus that is not on a visible field to the
/// next visible field, or the previous one at the end.
pub fn onto_field(ctx: NavContext<'_>, state: NavState) -> NavState {
    if state.style != NavStyle::Equation {
        return state;
    }
    let hidden = state.read_friendly && folded_ancestor(ctx.tree, state.focus).is_some();
    if ctx.tree.field(state.focus).is_ok() && !hidden {
        return state;
    }
    let fwd = step_equation(ctx, &state, Direction::Forward).state;
    if fwd.focus != state.focus {
        return fwd;
    }
    step_equation(ctx, &state, Direction::Backward).state
}

/// Apply any event except [`NavEvent::ToggleFold`], which edits the tree and
/// belongs to the session.
pub fn apply(ctx: NavContext<'_>, nav: &NavState, event: &NavEvent) -> Result<NavOutcome, NavError> {
    let keep = |state: NavState, requests| Ok(NavOutcome { state, requests });
    match event {
        NavEvent::CharLeft | NavEvent::CharRight => {
            let dir = if *event == NavEvent::CharRight {
                Direction::Forward
            } else {
                Direction::Backward
            };
            Ok(match nav.style {
                NavStyle::Linear => step_linear(ctx, nav, dir),
                NavStyle::Equation => step_in_field(ctx, nav, dir),
            })
        }
        NavEvent::FieldNext => Ok(step_equation(ctx, nav, Direction::Forward)),
        NavEvent::FieldPrev => Ok(step_equation(ctx, nav, Direction::Backward)),
        NavEvent::ArrowUp => Ok(move_vcursor(ctx, nav, Arrow::Up)),
        NavEvent::ArrowDown => Ok(move_vcursor(ctx, nav, Arrow::Down)),
        NavEvent::ArrowLeft => Ok(move_vcursor(ctx, nav, Arrow::Left)),
        NavEvent::ArrowRight => Ok(move_vcursor(ctx, nav, Arrow::Right)),
        NavEvent::SpatialKey { key } => spatial_select(ctx, nav, key),
        NavEvent::ToggleStyle => {
            let mut state = nav.clone();
            state.style = match nav.style {
                NavStyle::Linear => NavStyle::Equation,
                NavStyle::Equation => NavStyle::Linear,
            };
            let state = onto_field(ctx, state);
            let word = match state.style {
                NavStyle::Linear => "linear style",
                NavStyle::Equation => "equation style",
            };
            let r = confirm(ctx, &state, word);
            keep(state, vec![r])
        }
        NavEvent::ToggleSpatial => {
            let mut state = nav.clone();
            state.spatial_mode = match nav.spatial_mode {
                SpatialMode::Off => SpatialMode::RowMode,
                SpatialMode::RowMode => SpatialMode::ColumnMode,
                SpatialMode::ColumnMode => SpatialMode::Off,
            };
            let word = match state.spatial_mode {
                SpatialMode::Off => "spatial off",
                SpatialMode::RowMode => "row mode",
                SpatialMode::ColumnMode => "column mode",
            };
            let r = confirm(ctx, &state, word);
            keep(state, vec![r])
        }
        NavEvent::ToggleReadFriendly => {
            let mut state = nav.clone();
            state.read_friendly = !nav.read_friendly;
            if state.read_friendly {
                if let Some(a) = folded_ancestor(ctx.tree, state.focus) {
                    state.focus = a;
                    state.caret = 0;
                }
            }
            let state = onto_field(ctx, state);
            let word = if state.read_friendly {
                "read friendly on"
            } else {
                "read friendly off"
            };
            let r = confirm(ctx, &state, word);
            keep(state, vec![r])
        }
        NavEvent::Loopback { style } => keep(nav.clone(), request_loopback(ctx.tree, nav, *style)),
        NavEvent::SelectFocus => {
            let mut state = nav.clone();
            state.selection = Some(nav.focus);
            let r = confirm(ctx, &state, "selected");
            keep(state, vec![r])
        }
        NavEvent::SelectParent => {
            let mut state = nav.clone();
            let from = nav.selection.unwrap_or(nav.focus);
            let parent = ctx
                .tree
                .parent(from)
                .and_then(|p| ctx.tree.enclosing_structure(p))
                .unwrap_or(ctx.tree.root());
            state.selection = Some(parent);
            let name = ctx.tree.get(parent).map(|n| n.kind.name()).unwrap_or("expression");
            let text = alloc::format!("selected {}", name);
            let r = DirectiveRequest::words(&text, Source::node(parent));
            keep(state, vec![r])
        }
        NavEvent::ClearSelection => {
            let mut state = nav.clone();
            state.selection = None;
            let r = confirm(ctx, &state, "selection cleared");
            keep(state, vec![r])
        }
        NavEvent::ToggleFold => Err(NavError::NothingToFold),
    }
}

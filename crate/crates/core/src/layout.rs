//! The equation as a 2D table of input fields, plus normalized geometry for
//! every renderable token.
//!
//! Geometry uses a unit-advance model: every glyph, operator symbol and
//! delimiter is one unit wide. Vertical position is a signed level relative
//! to the baseline; levels add through nesting.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::model::{EquationTree, NodeId, NodeKind, StructureKind};

/// A renderable element: a whole node, or one glyph inside a field.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Source {
    pub node: NodeId,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub offset: Option<usize>,
}

impl Source {
    pub fn node(node: NodeId) -> Source {
        Source { node, offset: None }
    }

    pub fn glyph(node: NodeId, offset: usize) -> Source {
        Source {
            node,
            offset: Some(offset),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ElementGeometry {
    /// Left edge, 0 at the equation's left edge, 1 at its right edge.
    pub x_norm: f64,
    pub width_norm: f64,
    /// 0 = baseline, positive = raised.
    pub y_level: i32,
}

impl ElementGeometry {
    pub fn center(&self) -> f64 {
        self.x_norm + self.width_norm / 2.0
    }

    pub fn right(&self) -> f64 {
        self.x_norm + self.width_norm
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct GeometryMap {
    elements: BTreeMap<Source, ElementGeometry>,
    /// Centers of the leftmost and rightmost renderable tokens.
    center_min: f64,
    center_max: f64,
}

impl GeometryMap {
    pub fn get(&self, source: Source) -> Option<&ElementGeometry> {
        self.elements.get(&source)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Source, &ElementGeometry)> {
        self.elements.iter()
    }

    /// Horizontal position in [0, 1] used for stereo placement: the
    /// leftmost token's center maps to 0 and the rightmost token's center to
    /// 1. With a single token everything sits at 0.5.
    pub fn pan_position(&self, x_norm: f64) -> f64 {
        let span = self.center_max - self.center_min;
        if span <= f64::EPSILON {
            return 0.5;
        }
        ((x_norm - self.center_min) / span).clamp(0.0, 1.0)
    }

    /// Pan position of the element's center.
    pub fn pan_of(&self, source: Source) -> Option<f64> {
        self.get(source).map(|g| self.pan_position(g.center()))
    }
}

/// Layout options. Folded nodes collapse to one unit when folds are honored.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct LayoutOptions {
    pub honor_folds: bool,
}

impl Default for LayoutOptions {
    fn default() -> Self {
        LayoutOptions { honor_folds: true }
    }
}

struct Placer<'a> {
    tree: &'a EquationTree,
    opts: LayoutOptions,
    widths: BTreeMap<NodeId, f64>,
    raw: BTreeMap<Source, (f64, f64, i32)>,
    // Renderable tokens (left, width) used for pan normalization.
    tokens: Vec<(f64, f64)>,
}

impl<'a> Placer<'a> {
    fn new(tree: &'a EquationTree, opts: LayoutOptions) -> Self {
        Placer {
            tree,
            opts,
            widths: BTreeMap::new(),
            raw: BTreeMap::new(),
            tokens: Vec::new(),
        }
    }

    fn folded(&self, id: NodeId) -> bool {
        self.opts.honor_folds && self.tree.get(id).map(|n| n.folded).unwrap_or(false)
    }

    fn measure(&mut self, id: NodeId) -> f64 {
        let node = self.tree.get(id).expect("valid tree");
        let w = if self.folded(id) {
            1.0
        } else {
            match &node.kind {
                NodeKind::Field(f) if f.is_empty() => {
                    if self.tree.is_spacer(id) {
                        0.0
                    } else {
                        1.0
                    }
                }
                NodeKind::Field(f) => f.len() as f64,
                NodeKind::Symbol(_) => 1.0,
                NodeKind::Row => node.children.clone().iter().map(|c| self.measure(*c)).sum(),
                NodeKind::Structure(kind) => {
                    let ws: Vec<f64> = node.children.clone().iter().map(|c| self.measure(*c)).collect();
                    match kind {
                        StructureKind::Fraction => ws[0].max(ws[1]),
                        StructureKind::Root => ws[0] + 1.0,
                        StructureKind::Group => ws[0] + 2.0,
                        StructureKind::Power | StructureKind::Subscript => ws[0] + ws[1],
                    }
                }
            }
        };
        self.widths.insert(id, w);
        w
    }

    fn token(&mut self, left: f64, width: f64) {
        self.tokens.push((left, width));
    }

    fn place(&mut self, id: NodeId, left: f64, level: i32) {
        let node = self.tree.get(id).expect("valid tree");
        let width = self.widths[&id];
        self.raw.insert(Source::node(id), (left, width, level));
        if self.folded(id) {
            self.token(left, width);
            return;
        }
        match &node.kind {
            NodeKind::Field(f) => {
                if f.is_empty() {
                    if width > 0.0 {
                        self.token(left, width);
                    }
                } else {
                    for i in 0..f.len() {
                        let x = left + i as f64;
                        self.raw.insert(Source::glyph(id, i), (x, 1.0, level));
                        self.token(x, 1.0);
                    }
                }
            }
            NodeKind::Symbol(_) => self.token(left, width),
            NodeKind::Row => {
                let mut x = left;
                for c in node.children.clone() {
                    self.place(c, x, level);
                    x += self.widths[&c];
                }
            }
            NodeKind::Structure(kind) => {
                let ch = node.children.clone();
                match kind {
                    StructureKind::Fraction => {
                        let (wn, wd) = (self.widths[&ch[0]], self.widths[&ch[1]]);
                        self.place(ch[0], left + (width - wn) / 2.0, level + 1);
                        self.place(ch[1], left + (width - wd) / 2.0, level - 1);
                        // fraction bar
                        self.token(left, width);
                    }
                    StructureKind::Root => {
                        self.token(left, 1.0);
                        self.place(ch[0], left + 1.0, level);
                    }
                    StructureKind::Group => {
                        self.token(left, 1.0);
                        self.place(ch[0], left + 1.0, level);
                        self.token(left + width - 1.0, 1.0);
                    }
                    StructureKind::Power | StructureKind::Subscript => {
                        let wb = self.widths[&ch[0]];
                        let shift = if *kind == StructureKind::Power { 1 } else { -1 };
                        self.place(ch[0], left, level);
                        self.place(ch[1], left + wb, level + shift);
                    }
                }
            }
        }
    }
}

fn place_tree(tree: &EquationTree, opts: LayoutOptions) -> Placer<'_> {
    let mut p = Placer::new(tree, opts);
    p.measure(tree.root());
    p.place(tree.root(), 0.0, 0);
    p
}

pub fn geometry(tree: &EquationTree) -> GeometryMap {
    geometry_with(tree, LayoutOptions::default())
}

pub fn geometry_with(tree: &EquationTree, opts: LayoutOptions) -> GeometryMap {
    let p = place_tree(tree, opts);
    let total = p.widths[&tree.root()].max(f64::MIN_POSITIVE);
    let elements = p
        .raw
        .iter()
        .map(|(s, &(x, w, lvl))| {
            (
                *s,
                ElementGeometry {
                    x_norm: x / total,
                    width_norm: w / total,
                    y_level: lvl,
                },
            )
        })
        .collect();
    let centers = p.tokens.iter().map(|(l, w)| (l + w / 2.0) / total);
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for c in centers {
        lo = lo.min(c);
        hi = hi.max(c);
    }
    if !lo.is_finite() {
        lo = 0.5;
        hi = 0.5;
    }
    GeometryMap {
        elements,
        center_min: lo,
        center_max: hi,
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Cell {
    pub row: usize,
    pub col: usize,
}

/// Table of input fields. Rows run top to bottom, columns left to right.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct FieldGrid {
    pub rows: usize,
    pub cols: usize,
    cells: BTreeMap<Cell, NodeId>,
    #[serde(skip)]
    positions: BTreeMap<NodeId, Cell>,
}

impl FieldGrid {
    pub fn at(&self, row: usize, col: usize) -> Option<NodeId> {
        self.cells.get(&Cell { row, col }).copied()
    }

    pub fn cell_of(&self, field: NodeId) -> Option<Cell> {
        self.positions.get(&field).copied()
    }

    pub fn cells(&self) -> impl Iterator<Item = (Cell, NodeId)> + '_ {
        self.cells.iter().map(|(c, n)| (*c, *n))
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    /// Occupied cells of one row, left to right.
    pub fn row_members(&self, row: usize) -> Vec<NodeId> {
        self.cells
            .iter()
            .filter(|(c, _)| c.row == row)
            .map(|(_, n)| *n)
            .collect()
    }

    /// Occupied cells of one column, top to bottom.
    pub fn col_members(&self, col: usize) -> Vec<NodeId> {
        self.cells
            .iter()
            .filter(|(c, _)| c.col == col)
            .map(|(_, n)| *n)
            .collect()
    }

    /// Cell center in normalized grid coordinates.
    pub fn center(&self, cell: Cell) -> (f64, f64) {
        (
            (cell.col as f64 + 0.5) / self.cols as f64,
            (cell.row as f64 + 0.5) / self.rows as f64,
        )
    }

    /// Construct a grid from explicit cells (used for synthetic grids).
    pub fn from_cells(rows: usize, cols: usize, cells: impl IntoIterator<Item = (Cell, NodeId)>) -> FieldGrid {
        let cells: BTreeMap<Cell, NodeId> = cells.into_iter().collect();
        let positions = cells.iter().map(|(c, n)| (*n, *c)).collect();
        FieldGrid {
            rows: rows.max(1),
            cols: cols.max(1),
            cells,
            positions,
        }
    }
}

/// Fields that take part in the grid: every visible field except empty row
/// spacers. The root field is always included.
pub fn grid_fields(tree: &EquationTree, honor_folds: bool) -> Vec<NodeId> {
    tree.fields(honor_folds)
        .into_iter()
        .filter(|f| !tree.is_spacer(*f))
        .collect()
}

pub fn build_grid(tree: &EquationTree) -> FieldGrid {
    build_grid_with(tree, LayoutOptions::default())
}

pub fn build_grid_with(tree: &EquationTree, opts: LayoutOptions) -> FieldGrid {
    let p = place_tree(tree, opts);
    let mut fields: Vec<(NodeId, f64, f64, i32)> = grid_fields(tree, opts.honor_folds)
        .into_iter()
        .map(|f| {
            let (x, w, lvl) = p.raw[&Source::node(f)];
            (f, x, x + w, lvl)
        })
        .collect();
    if fields.is_empty() {
        // only spacers are visible, or nothing is
        let (id, x, w, lvl) = match tree.fields(opts.honor_folds).first() {
            Some(f) => {
                let (x, w, lvl) = p.raw[&Source::node(*f)];
                (*f, x, w, lvl)
            }
            None => (tree.root(), 0.0, 1.0, 0),
        };
        fields.push((id, x, x + w, lvl));
    }

    let levels: BTreeSet<i32> = fields.iter().map(|f| f.3).collect();
    let row_of: BTreeMap<i32, usize> = levels.iter().rev().enumerate().map(|(i, l)| (*l, i)).collect();

    fields.sort_by(|a, b| {
        let ca = (a.1 + a.2) / 2.0;
        let cb = (b.1 + b.2) / 2.0;
        ca.partial_cmp(&cb).unwrap().then(b.3.cmp(&a.3))
    });

    const EPS: f64 = 1e-9;
    let mut cells = BTreeMap::new();
    let mut col = 0usize;
    let mut span: Option<(f64, f64)> = None;
    let mut used_rows: BTreeSet<usize> = BTreeSet::new();
    for (id, l, r, lvl) in fields {
        let row = row_of[&lvl];
        match span {
            Some((cl, cr)) if l < cr - EPS && r > cl + EPS && !used_rows.contains(&row) => {
                span = Some((cl.min(l), cr.max(r)));
            }
            Some(_) => {
                col += 1;
                span = Some((l, r));
                used_rows.clear();
            }
            None => span = Some((l, r)),
        }
        used_rows.insert(row);
        cells.insert(Cell { row, col }, id);
    }
    FieldGrid::from_cells(levels.len(), col + 1, cells)
}

/// Occupied cell whose center is closest to `(x_norm, y_norm)`. Ties go to
/// the smaller row, then the smaller column.
pub fn nearest_field(grid: &FieldGrid, x_norm: f64, y_norm: f64) -> Option<NodeId> {
    nearest_cell(grid, x_norm, y_norm).map(|(_, n)| n)
}

pub fn nearest_cell(grid: &FieldGrid, x_norm: f64, y_norm: f64) -> Option<(Cell, NodeId)> {
    const TIE: f64 = 1e-12;
    let mut best: Option<(f64, Cell, NodeId)> = None;
    for (cell, id) in grid.cells() {
        let (cx, cy) = grid.center(cell);
        let d = (cx - x_norm) * (cx - x_norm) + (cy - y_norm) * (cy - y_norm);
        match best {
            Some((bd, _, _)) if d >= bd - TIE => {}
            _ => best = Some((d, cell, id)),
        }
    }
    best.map(|(_, c, n)| (c, n))
}

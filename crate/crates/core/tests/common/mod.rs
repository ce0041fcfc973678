#![allow(dead_code)]

use audimath_core::model::{EquationTree, Glyph, OperatorSymbol, Shape, StructureKind};
use proptest::prelude::*;
use proptest::strategy::ValueTree;
use proptest::test_runner::{Config, RngAlgorithm, TestRng, TestRunner};

pub fn delta() -> Glyph {
    Glyph::new("δ", "\\delta", "delta")
}

pub fn arb_glyph() -> impl Strategy<Value = Glyph> {
    prop_oneof![
        8 => proptest::char::ranges(vec!['a'..='z', 'A'..='Z', '0'..='9'].into())
            .prop_map(|c| Glyph::from_ascii(c).unwrap()),
        1 => Just(delta()),
    ]
}

pub fn arb_field() -> impl Strategy<Value = Shape> {
    proptest::collection::vec(arb_glyph(), 0..=3).prop_map(Shape::Field)
}

fn arb_symbol() -> impl Strategy<Value = Shape> {
    proptest::sample::select(OperatorSymbol::ALL.to_vec()).prop_map(Shape::Symbol)
}

/// A structure whose nesting below it is at most `depth - 1` more
/// structures.
fn arb_structure(depth: u32) -> BoxedStrategy<Shape> {
    let kinds = proptest::sample::select(StructureKind::ALL.to_vec());
    kinds
        .prop_flat_map(move |k| {
            proptest::collection::vec(arb_slot(depth - 1), k.arity())
                .prop_map(move |children| Shape::Structure(k, children))
        })
        .boxed()
}

/// Contents of a structure slot or the root: a field, or a row of
/// fields alternating with structures and operator symbols.
pub fn arb_slot(depth: u32) -> BoxedStrategy<Shape> {
    if depth == 0 {
        return arb_field().boxed();
    }
    let item = prop_oneof![
        2 => arb_structure(depth),
        1 => arb_symbol(),
    ];
    let row = (
        arb_field(),
        proptest::collection::vec((item, arb_field()), 1..=3),
    )
        .prop_map(|(first, rest)| {
            let mut items = vec![first];
            for (it, f) in rest {
                items.push(it);
                items.push(f);
            }
            Shape::Row(items)
        });
    prop_oneof![
        3 => arb_field(),
        2 => row,
    ]
    .boxed()
}

/// Random trees with structure nesting up to 5.
pub fn arb_tree() -> impl Strategy<Value = EquationTree> {
    arb_slot(5).prop_map(|s| EquationTree::from_shape(&s))
}

/// `n` trees from a fixed seed.
pub fn sample_trees(n: usize, seed: u8) -> Vec<EquationTree> {
    let rng = TestRng::from_seed(RngAlgorithm::ChaCha, &[seed; 32]);
    let mut runner = TestRunner::new_with_rng(Config::default(), rng);
    let strat = arb_tree();
    (0..n)
        .map(|_| strat.new_tree(&mut runner).unwrap().current())
        .collect()
}

pub fn structure_depth(s: &Shape) -> u32 {
    match s {
        Shape::Field(_) | Shape::Symbol(_) => 0,
        Shape::Row(items) => items.iter().map(structure_depth).max().unwrap_or(0),
        Shape::Structure(_, ch) => 1 + ch.iter().map(structure_depth).max().unwrap_or(0),
    }
}

/// Bounds for exhaustive enumeration of small trees.
#[derive(Clone, Copy, Debug)]
pub struct Bounds {
    pub max_internal: usize,
    pub max_row_items: usize,
    pub max_field_len: usize,
    pub max_glyphs: usize,
}

/// All normal-form skeletons (every field empty) using exactly `k`
/// internal nodes, where rows and structures are internal.
pub struct Skeletons {
    slots: Vec<Vec<Shape>>,
    structures: Vec<Vec<Shape>>,
    max_row_items: usize,
}

impl Skeletons {
    pub fn new(max_internal: usize, max_row_items: usize) -> Skeletons {
        let mut s = Skeletons {
            slots: vec![vec![Shape::empty()]],
            structures: vec![Vec::new()],
            max_row_items,
        };
        for k in 1..=max_internal {
            let st = s.build_structures(k);
            s.structures.push(st);
            let rows = s.build_rows(k);
            s.slots.push(rows);
        }
        s
    }

    pub fn slots(&self, k: usize) -> &[Shape] {
        &self.slots[k]
    }

    fn build_structures(&self, c: usize) -> Vec<Shape> {
        let mut out = Vec::new();
        for kind in StructureKind::ALL {
            if kind.arity() == 1 {
                for a in &self.slots[c - 1] {
                    out.push(Shape::Structure(kind, vec![a.clone()]));
                }
            } else {
                for i in 0..c {
                    for a in &self.slots[i] {
                        for b in &self.slots[c - 1 - i] {
                            out.push(Shape::Structure(kind, vec![a.clone(), b.clone()]));
                        }
                    }
                }
            }
        }
        out
    }

    /// Item sequences of length `m` using `budget` internal nodes.
    fn items(&self, m: usize, budget: usize) -> Vec<Vec<Shape>> {
        if m == 0 {
            return if budget == 0 { vec![Vec::new()] } else { Vec::new() };
        }
        let mut out = Vec::new();
        for rest in self.items(m - 1, budget) {
            for s in OperatorSymbol::ALL {
                let mut v = vec![Shape::Symbol(s)];
                v.extend(rest.iter().cloned());
                out.push(v);
            }
        }
        for c in 1..=budget {
            if c >= self.structures.len() {
                break;
            }
            let rests = self.items(m - 1, budget - c);
            for st in &self.structures[c] {
                for rest in &rests {
                    let mut v = vec![st.clone()];
                    v.extend(rest.iter().cloned());
                    out.push(v);
                }
            }
        }
        out
    }

    fn build_rows(&self, k: usize) -> Vec<Shape> {
        let mut out = Vec::new();
        for m in 1..=self.max_row_items {
            for items in self.items(m, k - 1) {
                let mut row = vec![Shape::empty()];
                for it in items {
                    row.push(it);
                    row.push(Shape::empty());
                }
                out.push(Shape::Row(row));
            }
        }
        out
    }
}

pub fn count_fields(s: &Shape) -> usize {
    match s {
        Shape::Field(_) => 1,
        Shape::Symbol(_) => 0,
        Shape::Row(items) | Shape::Structure(_, items) => items.iter().map(count_fields).sum(),
    }
}

/// Replace the fields of `s`, in preorder, with `fills`.
pub fn fill_fields(s: &Shape, fills: &mut impl Iterator<Item = Vec<Glyph>>) -> Shape {
    match s {
        Shape::Field(_) => Shape::Field(fills.next().expect("enough fills")),
        Shape::Symbol(x) => Shape::Symbol(*x),
        Shape::Row(items) => Shape::Row(items.iter().map(|i| fill_fields(i, fills)).collect()),
        Shape::Structure(k, items) => {
            Shape::Structure(*k, items.iter().map(|i| fill_fields(i, fills)).collect())
        }
    }
}

/// Every way to fill `n` fields with strings over `alphabet`, each at most
/// `max_len` long and at most `budget` glyphs in total.
pub fn fillings(n: usize, alphabet: &[Glyph], max_len: usize, budget: usize, f: &mut impl FnMut(&[Vec<Glyph>])) {
    fn strings(alphabet: &[Glyph], len: usize) -> Vec<Vec<Glyph>> {
        let mut out = vec![Vec::new()];
        for _ in 0..len {
            out = out
                .into_iter()
                .flat_map(|s| {
                    alphabet.iter().map(move |g| {
                        let mut t = s.clone();
                        t.push(g.clone());
                        t
                    })
                })
                .collect();
        }
        out
    }
    let by_len: Vec<Vec<Vec<Glyph>>> = (0..=max_len).map(|l| strings(alphabet, l)).collect();
    fn go(
        by_len: &[Vec<Vec<Glyph>>],
        left: usize,
        budget: usize,
        acc: &mut Vec<Vec<Glyph>>,
        f: &mut impl FnMut(&[Vec<Glyph>]),
    ) {
        if left == 0 {
            f(acc);
            return;
        }
        for (len, options) in by_len.iter().enumerate() {
            if len > budget {
                break;
            }
            for s in options {
                acc.push(s.clone());
                go(by_len, left - 1, budget - len, acc, f);
                acc.pop();
            }
        }
    }
    go(&by_len, n, budget, &mut Vec::new(), f);
}

/// Calls `f` with every tree within `bounds` over `alphabet`.
pub fn for_each_bounded_tree(bounds: Bounds, alphabet: &[Glyph], mut f: impl FnMut(&Shape)) {
    let sk = Skeletons::new(bounds.max_internal, bounds.max_row_items);
    for k in 0..=bounds.max_internal {
        for skel in sk.slots(k) {
            let n = count_fields(skel);
            fillings(n, alphabet, bounds.max_field_len, bounds.max_glyphs, &mut |fills| {
                let shape = fill_fields(skel, &mut fills.iter().cloned());
                f(&shape);
            });
        }
    }
}

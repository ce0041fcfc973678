//! LaTeX generation and a recursive-descent parser for the supported subset:
//! `\frac`, `\sqrt`, `^`, `_`, parentheses, `+ - = \times`, letters, digits
//! and the named symbols of a [`SymbolTable`].

use alloc::string::{String, ToString};
use alloc::vec::Vec;

use thiserror::Error;

use crate::model::{EquationTree, Glyph, NodeId, NodeKind, OperatorSymbol, Shape, StructureKind, SymbolTable};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LatexError {
    #[error("unsupported command \\{name} at byte {offset}")]
    UnsupportedCommand { name: String, offset: usize },
    #[error("unexpected character {ch:?} at byte {offset}")]
    UnexpectedCharacter { ch: char, offset: usize },
    #[error("unbalanced {delimiter:?} at byte {offset}")]
    UnbalancedBraces { delimiter: char, offset: usize },
    #[error("missing argument at byte {offset}")]
    EmptyArgument { offset: usize },
}

/// Generate LaTeX. Folds are ignored; empty fields emit `{}` when they fill
/// a structure slot and nothing at row level.
pub fn to_latex(tree: &EquationTree) -> String {
    let mut out = String::new();
    emit(tree, tree.root(), &mut out);
    out
}

fn push_fragment(out: &mut String, frag: &str) {
    // `\delta` followed by `x` must not fuse into `\deltax`.
    if frag.starts_with(|c: char| c.is_ascii_alphabetic()) && ends_with_control_word(out) {
        out.push(' ');
    }
    out.push_str(frag);
}

fn ends_with_control_word(s: &str) -> bool {
    let trimmed = s.trim_end_matches(|c: char| c.is_ascii_alphabetic());
    trimmed.len() < s.len() && trimmed.ends_with('\\') && !trimmed.ends_with("\\\\")
}

fn emit(tree: &EquationTree, id: NodeId, out: &mut String) {
    let n = tree.get(id).expect("valid tree");
    match &n.kind {
        NodeKind::Field(f) => {
            for g in &f.glyphs {
                push_fragment(out, &g.latex);
            }
        }
        NodeKind::Symbol(s) => push_fragment(out, s.latex()),
        NodeKind::Row => {
            for c in &n.children {
                emit(tree, *c, out);
            }
        }
        NodeKind::Structure(kind) => {
            let ch = &n.children;
            let braced = |out: &mut String, id: NodeId| {
                out.push('{');
                emit(tree, id, out);
                out.push('}');
            };
            match kind {
                StructureKind::Fraction => {
                    push_fragment(out, "\\frac");
                    braced(out, ch[0]);
                    braced(out, ch[1]);
                }
                StructureKind::Root => {
                    push_fragment(out, "\\sqrt");
                    braced(out, ch[0]);
                }
                StructureKind::Power | StructureKind::Subscript => {
                    braced(out, ch[0]);
                    out.push(if *kind == StructureKind::Power { '^' } else { '_' });
                    braced(out, ch[1]);
                }
                StructureKind::Group => {
                    out.push('(');
                    emit(tree, ch[0], out);
                    out.push(')');
                }
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
enum Tok<'a> {
    Command(&'a str),
    Char(char),
    OpenBrace,
    CloseBrace,
    OpenParen,
    CloseParen,
    Caret,
    Underscore,
}

#[derive(Clone, Debug)]
struct Spanned<'a> {
    tok: Tok<'a>,
    offset: usize,
}

fn tokenize(src: &str) -> Result<Vec<Spanned<'_>>, LatexError> {
    let mut out = Vec::new();
    let bytes = src.as_bytes();
    let mut i = 0;
    while i < src.len() {
        let c = src[i..].chars().next().unwrap();
        let start = i;
        i += c.len_utf8();
        let tok = match c {
            c if c.is_whitespace() => continue,
            '\\' => {
                let name_start = i;
                while i < src.len() && bytes[i].is_ascii_alphabetic() {
                    i += 1;
                }
                if i == name_start {
                    // control symbol such as `\{` or `\,`
                    let sym = src[i..].chars().next();
                    let len = sym.map(char::len_utf8).unwrap_or(0);
                    return Err(LatexError::UnsupportedCommand {
                        name: src[i..i + len].to_string(),
                        offset: start,
                    });
                }
                Tok::Command(&src[name_start..i])
            }
            '{' => Tok::OpenBrace,
            '}' => Tok::CloseBrace,
            '(' => Tok::OpenParen,
            ')' => Tok::CloseParen,
            '^' => Tok::Caret,
            '_' => Tok::Underscore,
            c => Tok::Char(c),
        };
        out.push(Spanned { tok, offset: start });
    }
    Ok(out)
}

struct Parser<'a, 's> {
    toks: Vec<Spanned<'s>>,
    pos: usize,
    end: usize,
    symbols: &'a SymbolTable,
}

/// What closes the row currently being parsed.
#[derive(Clone, Copy, PartialEq)]
enum Closer {
    End,
    Brace(usize),
    Paren(usize),
}

impl<'s> Parser<'_, 's> {
    fn peek(&self) -> Option<&Tok<'s>> {
        self.toks.get(self.pos).map(|s| &s.tok)
    }

    fn offset(&self) -> usize {
        self.toks.get(self.pos).map(|s| s.offset).unwrap_or(self.end)
    }

    fn next(&mut self) -> Option<Spanned<'s>> {
        let t = self.toks.get(self.pos).cloned();
        if t.is_some() {
            self.pos += 1;
        }
        t
    }

    fn row(&mut self, closer: Closer) -> Result<Vec<Shape>, LatexError> {
        let mut items: Vec<Shape> = Vec::new();
        loop {
            let Some(t) = self.next() else {
                return match closer {
                    Closer::End => Ok(items),
                    Closer::Brace(at) => Err(LatexError::UnbalancedBraces {
                        delimiter: '{',
                        offset: at,
                    }),
                    Closer::Paren(at) => Err(LatexError::UnbalancedBraces {
                        delimiter: '(',
                        offset: at,
                    }),
                };
            };
            match t.tok {
                Tok::CloseBrace => {
                    return match closer {
                        Closer::Brace(_) => Ok(items),
                        _ => Err(LatexError::UnbalancedBraces {
                            delimiter: '}',
                            offset: t.offset,
                        }),
                    }
                }
                Tok::CloseParen => {
                    return match closer {
                        Closer::Paren(_) => Ok(items),
                        _ => Err(LatexError::UnbalancedBraces {
                            delimiter: ')',
                            offset: t.offset,
                        }),
                    }
                }
                Tok::OpenBrace => {
                    let inner = self.row(Closer::Brace(t.offset))?;
                    let inner = Shape::Row(inner);
                    if matches!(self.peek(), Some(Tok::Caret | Tok::Underscore)) {
                        let kind = self.script_kind();
                        let arg = self.argument()?;
                        items.push(Shape::Structure(kind, alloc::vec![inner, arg]));
                    } else {
                        items.push(inner);
                    }
                }
                Tok::OpenParen => {
                    let inner = self.row(Closer::Paren(t.offset))?;
                    items.push(Shape::Structure(StructureKind::Group, alloc::vec![Shape::Row(inner)]));
                }
                Tok::Caret | Tok::Underscore => {
                    self.pos -= 1;
                    let kind = self.script_kind();
                    let base = take_previous_atom(&mut items);
                    let arg = self.argument()?;
                    items.push(Shape::Structure(kind, alloc::vec![base, arg]));
                }
                Tok::Command(name) => items.push(self.command(name, t.offset)?),
                Tok::Char(c) => items.push(self.character(c, t.offset)?),
            }
        }
    }

    fn script_kind(&mut self) -> StructureKind {
        match self.next().map(|t| t.tok) {
            Some(Tok::Caret) => StructureKind::Power,
            _ => StructureKind::Subscript,
        }
    }

    /// A braced group or a single atom.
    fn argument(&mut self) -> Result<Shape, LatexError> {
        let at = self.offset();
        let Some(t) = self.next() else {
            return Err(LatexError::EmptyArgument { offset: at });
        };
        match t.tok {
            Tok::OpenBrace => Ok(Shape::Row(self.row(Closer::Brace(t.offset))?)),
            Tok::Command(name) => self.command(name, t.offset),
            Tok::Char(c) => self.character(c, t.offset),
            Tok::OpenParen => {
                let inner = self.row(Closer::Paren(t.offset))?;
                Ok(Shape::Structure(StructureKind::Group, alloc::vec![Shape::Row(inner)]))
            }
            Tok::CloseBrace | Tok::CloseParen | Tok::Caret | Tok::Underscore => {
                Err(LatexError::EmptyArgument { offset: t.offset })
            }
        }
    }

    fn command(&mut self, name: &str, offset: usize) -> Result<Shape, LatexError> {
        match name {
            "frac" => {
                let num = self.argument()?;
                let den = self.argument()?;
                Ok(Shape::Structure(StructureKind::Fraction, alloc::vec![num, den]))
            }
            "sqrt" => {
                if let Some(Tok::Char('[')) = self.peek() {
                    return Err(LatexError::UnsupportedCommand {
                        name: "sqrt[".to_string(),
                        offset,
                    });
                }
                let arg = self.argument()?;
                Ok(Shape::Structure(StructureKind::Root, alloc::vec![arg]))
            }
            "times" => Ok(Shape::Symbol(OperatorSymbol::Times)),
            other => match self.symbols.by_command(other) {
                Some(g) => Ok(Shape::Field(alloc::vec![g.clone()])),
                None => Err(LatexError::UnsupportedCommand {
                    name: other.to_string(),
                    offset,
                }),
            },
        }
    }

    fn character(&mut self, c: char, offset: usize) -> Result<Shape, LatexError> {
        let sym = match c {
            '+' => Some(OperatorSymbol::Plus),
            '-' | '−' => Some(OperatorSymbol::Minus),
            '=' => Some(OperatorSymbol::Equals),
            '×' => Some(OperatorSymbol::Times),
            _ => None,
        };
        if let Some(s) = sym {
            return Ok(Shape::Symbol(s));
        }
        if let Some(g) = Glyph::from_ascii(c) {
            return Ok(Shape::Field(alloc::vec![g]));
        }
        let mut buf = [0u8; 4];
        if let Some(g) = self.symbols.by_display(c.encode_utf8(&mut buf)) {
            return Ok(Shape::Field(alloc::vec![g.clone()]));
        }
        Err(LatexError::UnexpectedCharacter { ch: c, offset })
    }
}

/// The base of a bare `^`/`_`: the last glyph of a trailing field, or the
/// preceding structure. Empty when nothing precedes.
fn take_previous_atom(items: &mut Vec<Shape>) -> Shape {
    match items.last_mut() {
        Some(Shape::Field(glyphs)) if !glyphs.is_empty() => {
            let g = glyphs.pop().unwrap();
            if glyphs.is_empty() {
                items.pop();
            }
            Shape::Field(alloc::vec![g])
        }
        Some(Shape::Structure(..)) => items.pop().unwrap(),
        Some(Shape::Row(_)) => items.pop().unwrap(),
        _ => Shape::empty(),
    }
}

pub fn parse_latex(src: &str) -> Result<EquationTree, LatexError> {
    parse_latex_with(src, &SymbolTable::default())
}

pub fn parse_latex_with(src: &str, symbols: &SymbolTable) -> Result<EquationTree, LatexError> {
    let toks = tokenize(src)?;
    let mut p = Parser {
        toks,
        pos: 0,
        end: src.len(),
        symbols,
    };
    let items = p.row(Closer::End)?;
    Ok(EquationTree::from_shape(&Shape::Row(items)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn frac(a: &str, b: &str) -> Shape {
        Shape::structure(StructureKind::Fraction, vec![Shape::text(a), Shape::text(b)])
    }

    #[test]
    fn generates_three_fractions() {
        let plus = || Shape::Symbol(OperatorSymbol::Plus);
        let t = EquationTree::from_shape(&Shape::Row(vec![
            frac("a", "b"),
            plus(),
            frac("c", "d"),
            plus(),
            frac("e", "f"),
        ]));
        assert_eq!(to_latex(&t), "\\frac{a}{b}+\\frac{c}{d}+\\frac{e}{f}");
    }

    #[test]
    fn symbol_glyph_latex() {
        let t = EquationTree::from_shape(&Shape::Field(vec![Glyph::new("δ", "\\delta", "delta")]));
        assert_eq!(to_latex(&t), "\\delta");
        let t = EquationTree::from_shape(&Shape::Field(vec![
            Glyph::new("δ", "\\delta", "delta"),
            Glyph::from_ascii('x').unwrap(),
        ]));
        assert_eq!(to_latex(&t), "\\delta x");
        assert!(parse_latex("\\delta x").unwrap().structurally_eq(&t));
    }

    #[test]
    fn empty_equation() {
        assert_eq!(to_latex(&EquationTree::new()), "");
        assert!(parse_latex("").unwrap().structurally_eq(&EquationTree::new()));
    }

    #[test]
    fn empty_slots_emit_braces() {
        let mut t = EquationTree::new();
        t.insert_structure(
            t.root(),
            0,
            crate::model::InsertKind::Structure(StructureKind::Fraction),
        )
        .unwrap();
        assert_eq!(to_latex(&t), "\\frac{}{}");
        assert!(parse_latex("\\frac{}{}").unwrap().structurally_eq(&t));
    }

    #[test]
    fn parses_fraction() {
        let t = parse_latex("\\frac{a}{b}").unwrap();
        assert_eq!(t.shape(), frac("a", "b").normalized());
    }

    #[test]
    fn root_scope_is_structural() {
        let a = parse_latex("\\sqrt{3i}-2i").unwrap();
        let b = parse_latex("\\sqrt{3i-2i}").unwrap();
        assert_ne!(a.shape(), b.shape());
    }

    #[test]
    fn unsupported_command_offset() {
        assert_eq!(
            parse_latex("\\notacommand{x}"),
            Err(LatexError::UnsupportedCommand {
                name: "notacommand".to_string(),
                offset: 0
            })
        );
        assert_eq!(
            parse_latex("x+\\int"),
            Err(LatexError::UnsupportedCommand {
                name: "int".to_string(),
                offset: 2
            })
        );
    }

    #[test]
    fn unbalanced_and_missing() {
        assert_eq!(
            parse_latex("\\frac{a}{b"),
            Err(LatexError::UnbalancedBraces {
                delimiter: '{',
                offset: 8
            })
        );
        assert_eq!(
            parse_latex("a}"),
            Err(LatexError::UnbalancedBraces {
                delimiter: '}',
                offset: 1
            })
        );
        assert_eq!(
            parse_latex("(a"),
            Err(LatexError::UnbalancedBraces {
                delimiter: '(',
                offset: 0
            })
        );
        assert_eq!(
            parse_latex("\\frac{a}"),
            Err(LatexError::EmptyArgument { offset: 8 })
        );
        assert_eq!(parse_latex("x^"), Err(LatexError::EmptyArgument { offset: 2 }));
        assert_eq!(
            parse_latex("x!"),
            Err(LatexError::UnexpectedCharacter { ch: '!', offset: 1 })
        );
    }

    #[test]
    fn conventional_scripts() {
        let t = parse_latex("x^2+y_{10}").unwrap();
        assert_eq!(to_latex(&t), "{x}^{2}+{y}_{10}");
        let t = parse_latex("ab^2").unwrap();
        assert_eq!(
            t.shape(),
            Shape::Row(vec![
                Shape::text("a"),
                Shape::structure(StructureKind::Power, vec![Shape::text("b"), Shape::text("2")]),
                Shape::empty(),
            ])
        );
        let t = parse_latex("\\frac12 \\times (x)").unwrap();
        assert_eq!(to_latex(&t), "\\frac{1}{2}\\times(x)");
    }

    #[test]
    fn unicode_operators_and_symbols() {
        let t = parse_latex("a−b×π").unwrap();
        assert_eq!(to_latex(&t), "a-b\\times\\pi");
    }
}

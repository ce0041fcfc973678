//! Acceptance suite. Runs without the libtest harness so every criterion
//! prints one PASS/FAIL line; exits non-zero if any fails.

mod common;

use std::collections::hash_map::DefaultHasher;
use std::hash::{Hash, Hasher};
use std::time::{Duration, Instant};

use audimath_core::audio::{plan_counts, Directive, EarconCatalog, EarconId};
use audimath_core::keyboard::KeyboardLayout;
use audimath_core::latex::{parse_latex, to_latex};
use audimath_core::layout::{build_grid, Source};
use audimath_core::model::{EquationTree, Glyph, Shape, StructureKind, TokenRole};
use audimath_core::navigation::{step_linear, DirectiveRequest, Direction, NavContext, NavEvent, NavState};
use audimath_core::session::{InputEvent, Modifiers, Session, SettingValue};
use audimath_core::speech::{intuitivespeak, mathspeak, words, SpeechKind};

use common::{for_each_bounded_tree, sample_trees, structure_depth, Bounds};

struct Outcome {
    ok: bool,
    detail: String,
}

fn pass(detail: impl Into<String>) -> Outcome {
    Outcome {
        ok: true,
        detail: detail.into(),
    }
}

fn fail(detail: impl Into<String>) -> Outcome {
    Outcome {
        ok: false,
        detail: detail.into(),
    }
}

fn golden_speech() -> Outcome {
    let built = EquationTree::from_shape(&Shape::structure(
        StructureKind::Fraction,
        vec![Shape::text("x"), Shape::text("y")],
    ));
    let parsed = parse_latex("\\frac{x}{y}").unwrap();
    for t in [&built, &parsed] {
        let ms = words(&mathspeak(t, t.root()).unwrap());
        let is = words(&intuitivespeak(t, t.root()).unwrap());
        if ms != "Base Frac x Over y EndFrac" {
            return fail(format!("mathspeak {ms:?}"));
        }
        if is != "x over y" {
            return fail(format!("intuitivespeak {is:?}"));
        }
    }
    pass("\"Base Frac x Over y EndFrac\" / \"x over y\"")
}

fn ambiguity_regression() -> Outcome {
    let a = parse_latex("\\sqrt{3i}-2i").unwrap();
    let b = parse_latex("\\sqrt{3i-2i}").unwrap();
    let sa = words(&mathspeak(&a, a.root()).unwrap());
    let sb = words(&mathspeak(&b, b.root()).unwrap());
    if sa == sb {
        return fail(format!("both read {sa:?}"));
    }
    pass(format!("{sa:?} vs {sb:?}"))
}

fn earcon_notes(d: &[Directive]) -> Vec<(EarconId, Vec<f64>)> {
    d.iter()
        .filter_map(|d| match d {
            Directive::Earcon(e) => Some((e.earcon, e.notes.iter().map(|n| n.freq_hz).collect())),
            _ => None,
        })
        .collect()
}

fn grid_example() -> Outcome {
    let latex = "\\frac{a}{b}+\\frac{c}{d}+\\frac{e}{f}";
    let tree = parse_latex(latex).unwrap();
    let grid = build_grid(&tree);
    if (grid.rows, grid.cols) != (2, 3) {
        return fail(format!("grid {}x{}", grid.rows, grid.cols));
    }
    let mut s = Session::new();
    s.apply_event(&InputEvent::LoadLatex { text: latex.into() });
    s.apply_event(&InputEvent::ctrl("k"));
    let b = s.apply_event(&InputEvent::key("p"));
    let focus_text: String = s
        .tree()
        .field(s.nav().focus)
        .map(|f| f.glyphs.iter().map(|g| g.display.clone()).collect())
        .unwrap_or_default();
    if focus_text != "e" {
        return fail(format!("'p' selected {focus_text:?}"));
    }
    let tones = earcon_notes(&b.directives);
    let counts: usize = tones
        .iter()
        .filter(|(id, _)| *id == EarconId::CountTone)
        .map(|(_, n)| n.len())
        .sum();
    let index: Vec<&Vec<f64>> = tones
        .iter()
        .filter(|(id, _)| *id == EarconId::IndexTone)
        .map(|(_, n)| n)
        .collect();
    let catalog = EarconCatalog::default();
    let count_notes = &tones.iter().find(|(id, _)| *id == EarconId::CountTone).unwrap().1;
    let third = count_notes.get(2).copied();
    let index_root = catalog.notes(EarconId::IndexTone)[0].freq_hz;
    // the index tone sits on scale degree 3, a major third above its root
    let degree3 = index_root * 2f64.powf(4.0 / 12.0);
    let index_ok = index.len() == 1 && index[0].len() == 1 && (index[0][0] - degree3).abs() < 1e-6;
    if counts != 3 || !index_ok || third.is_none() {
        return fail(format!("tones {tones:?}"));
    }
    pass(format!("2x3 grid, 'p' -> e, 3 count tones + index tone 3 ({:.2} Hz)", degree3))
}

fn pan_sweep() -> Outcome {
    let mut s = Session::new();
    s.apply_event(&InputEvent::LoadLatex { text: "abcde".into() });
    let mut pans = Vec::new();
    let mut heard = String::new();
    for _ in 0..5 {
        let b = s.apply_event(&InputEvent::nav(NavEvent::CharRight));
        for d in &b.directives {
            if let Directive::Speech(sp) = d {
                pans.push(sp.pan);
                heard.push_str(&sp.text);
            }
        }
    }
    if heard != "abcde" || pans.len() != 5 {
        return fail(format!("heard {heard:?} pans {pans:?}"));
    }
    let increasing = pans.windows(2).all(|w| w[1] - w[0] > 1e-9);
    let last = *pans.last().unwrap();
    if !increasing || (last - 1.0).abs() > 1e-9 {
        return fail(format!("pans {pans:?}"));
    }
    pass(format!("pans {pans:?}"))
}

fn latex_round_trip() -> Outcome {
    let trees = sample_trees(1000, 7);
    let mut failures = 0;
    let mut first = None;
    let mut max_depth = 0;
    for t in &trees {
        max_depth = max_depth.max(structure_depth(&t.shape()));
        let src = to_latex(t);
        let ok = matches!(parse_latex(&src), Ok(back) if back.structurally_eq(t));
        if !ok {
            failures += 1;
            first.get_or_insert(src);
        }
    }
    if max_depth > 5 {
        return fail(format!("generator produced depth {max_depth}"));
    }
    if failures > 0 {
        return fail(format!("{failures} failures, first {:?}", first.unwrap()));
    }
    pass(format!("1000 trees, max nesting {max_depth}, 0 failures"))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Visit {
    Glyph(u32, usize),
    Token(u32),
}

/// What a navigation step visited, read from its requests.
fn visited(reqs: &[DirectiveRequest]) -> Result<Option<Visit>, ()> {
    for r in reqs {
        match r {
            DirectiveRequest::Earcon {
                earcon: EarconId::EndOfText,
                ..
            } => return Err(()),
            DirectiveRequest::Earcon {
                earcon: EarconId::NodeEnter,
                at,
            } => return Ok(Some(Visit::Token(at.node.0))),
            _ => {}
        }
    }
    for r in reqs {
        if let DirectiveRequest::Speak { tokens } = r {
            if let [t] = &tokens[..] {
                if let Source {
                    node,
                    offset: Some(k),
                } = t.source
                {
                    return Ok(Some(Visit::Glyph(node.0, k)));
                }
            }
        }
    }
    Ok(None)
}

fn expected_visits(t: &EquationTree) -> Vec<Visit> {
    let mut out = Vec::new();
    for (id, role) in t.preorder() {
        match role {
            TokenRole::Field | TokenRole::Spacer => {
                let n = t.field(id).unwrap().len();
                out.extend((0..n).map(|k| Visit::Glyph(id.0, k)));
            }
            TokenRole::Structure(_) | TokenRole::Symbol(_) | TokenRole::Folded => out.push(Visit::Token(id.0)),
            TokenRole::Row => {}
        }
    }
    out
}

fn traversal_completeness() -> Outcome {
    let kb = KeyboardLayout::default();
    for (i, t) in sample_trees(200, 11).iter().enumerate() {
        let grid = build_grid(t);
        let ctx = NavContext {
            tree: t,
            grid: &grid,
            keyboard: &kb,
        };
        let expected = expected_visits(t);
        let budget = 4 * (t.len() + expected.len()) + 8;
        let mut nav = NavState::new(t);
        let mut forward = Vec::new();
        let mut steps = 0;
        loop {
            let out = step_linear(ctx, &nav, Direction::Forward);
            match visited(&out.requests) {
                Err(()) => break,
                Ok(v) => forward.extend(v),
            }
            nav = out.state;
            steps += 1;
            if steps > budget {
                return fail(format!("tree {i}: forward scan does not terminate"));
            }
        }
        if forward != expected {
            return fail(format!("tree {i} {:?}: forward {forward:?} expected {expected:?}", to_latex(t)));
        }
        let mut backward = Vec::new();
        steps = 0;
        loop {
            let out = step_linear(ctx, &nav, Direction::Backward);
            match visited(&out.requests) {
                Err(()) => break,
                Ok(v) => backward.extend(v),
            }
            nav = out.state;
            steps += 1;
            if steps > budget {
                return fail(format!("tree {i}: backward scan does not terminate"));
            }
        }
        backward.reverse();
        if backward != expected {
            return fail(format!("tree {i} {:?}: backward is not the mirror", to_latex(t)));
        }
        let start = NavState::new(t);
        if (nav.focus, nav.caret) != (start.focus, start.caret) {
            return fail(format!("tree {i}: backward scan did not return to the start"));
        }
    }
    pass("200 trees, forward = preorder, backward = mirror")
}

fn hash_of<T: Hash>(v: &T) -> u64 {
    let mut h = DefaultHasher::new();
    v.hash(&mut h);
    h.finish()
}

const INJECTIVITY_BOUNDS: Bounds = Bounds {
    max_internal: 4,
    max_row_items: 2,
    max_field_len: 2,
    max_glyphs: 2,
};

fn mathspeak_injectivity() -> Outcome {
    let alphabet: Vec<Glyph> = "ab12".chars().map(|c| Glyph::from_ascii(c).unwrap()).collect();
    // speech fingerprint and enumeration index; enumerated shapes are
    // pairwise distinct, so equal fingerprints are the only candidates
    let mut seen: Vec<(u64, u32)> = Vec::new();
    let mut idx = 0u32;
    for_each_bounded_tree(INJECTIVITY_BOUNDS, &alphabet, |shape| {
        let t = EquationTree::from_shape(shape);
        seen.push((hash_of(&words(&mathspeak(&t, t.root()).unwrap())), idx));
        idx += 1;
    });
    let total = seen.len();
    seen.sort_unstable();
    let mut suspects: Vec<u32> = Vec::new();
    for w in seen.windows(2) {
        if w[0].0 == w[1].0 {
            suspects.extend([w[0].1, w[1].1]);
        }
    }
    drop(seen);
    if !suspects.is_empty() {
        // confirm candidates with the real strings and structural signatures
        suspects.sort_unstable();
        suspects.dedup();
        let mut found: Vec<(String, Shape)> = Vec::new();
        let mut i = 0u32;
        for_each_bounded_tree(INJECTIVITY_BOUNDS, &alphabet, |shape| {
            if suspects.binary_search(&i).is_ok() {
                let t = EquationTree::from_shape(shape);
                found.push((words(&mathspeak(&t, t.root()).unwrap()), t.shape()));
            }
            i += 1;
        });
        found.sort_by(|a, b| a.0.cmp(&b.0));
        for w in found.windows(2) {
            if w[0].0 == w[1].0 && w[0].1 != w[1].1 {
                return fail(format!("collision {:?}: {:?} and {:?}", w[0].0, w[0].1, w[1].1));
            }
        }
    }
    pass(format!(
        "{total} trees (<=4 internal nodes, rows <=2 items, fields <=2 glyphs, <=2 glyphs per tree), no collisions"
    ))
}

fn script() -> Vec<InputEvent> {
    let k = InputEvent::key;
    let c = InputEvent::ctrl;
    let nav = InputEvent::nav;
    let mut v = vec![
        k("x"),
        k("="),
        k("/"),
        k("a"),
        k("Tab"),
        k("b"),
        k("Tab"),
        k("+"),
        c("r"),
        k("2"),
        k("Tab"),
        k("^"),
        k("y"),
        k("Tab"),
        k("3"),
        c("m"),
        c("i"),
        nav(NavEvent::CharLeft),
        nav(NavEvent::CharLeft),
        nav(NavEvent::CharLeft),
        nav(NavEvent::CharRight),
        k("Backspace"),
        k("z"),
        c("k"),
        k("p"),
        k("q"),
        k("ArrowDown"),
        k("ArrowRight"),
        c("k"),
        k("z"),
        c("k"),
        c("k"),
        c("f"),
        c("i"),
        c("f"),
        c("e"),
        k("Tab"),
        InputEvent::Key {
            key: "Tab".into(),
            modifiers: Modifiers {
                shift: true,
                ..Modifiers::default()
            },
        },
        InputEvent::SetSetting {
            name: "verbosity".into(),
            value: SettingValue::Text("verbose".into()),
        },
        c("i"),
        c("j"),
        c("i"),
        c("s"),
        c("p"),
        c("m"),
        k("Escape"),
        InputEvent::SetSetting {
            name: "spatial_audio".into(),
            value: SettingValue::Bool(false),
        },
        k("!"),
        InputEvent::RequestLatex,
        nav(NavEvent::Loopback {
            style: SpeechKind::IntuitiveSpeak,
        }),
    ];
    v.truncate(50);
    v
}

fn replay(events: &[InputEvent]) -> String {
    let mut s = Session::new();
    let mut log = String::new();
    for e in events {
        let b = s.apply_event(e);
        log.push_str(&serde_json::to_string(&b).unwrap());
        log.push('\n');
    }
    log
}

fn determinism() -> Outcome {
    let events = script();
    if events.len() != 50 {
        return fail(format!("script has {} events", events.len()));
    }
    let a = replay(&events);
    let b = replay(&events);
    if a != b {
        return fail("logs differ");
    }
    pass(format!("50 events, {} byte log replayed identically", a.len()))
}

fn earcon_shape() -> Outcome {
    let cat = EarconCatalog::default();
    let open: Vec<f64> = cat.notes(EarconId::PseudoOpen).iter().map(|n| n.freq_hz).collect();
    let mut close = cat.notes(EarconId::PseudoClose).to_vec();
    if !open.windows(2).all(|w| w[1] > w[0]) {
        return fail(format!("pseudo_open {open:?}"));
    }
    close.reverse();
    if close != cat.notes(EarconId::PseudoOpen) {
        return fail("pseudo_close is not pseudo_open reversed");
    }
    for n in 1..=10 {
        for i in 1..=n {
            let tones: usize = plan_counts(n, i, 0.0).unwrap().iter().map(|d| d.notes.len()).sum();
            if tones != n + 1 {
                return fail(format!("plan_counts({n}, {i}) gave {tones} tones"));
            }
        }
    }
    pass(format!("pseudo_open {open:?}; plan_counts n+1 for 1<=i<=n<=10"))
}

type Criterion = (&'static str, Duration, fn() -> Outcome);

fn main() {
    let criteria: Vec<Criterion> = vec![
        ("golden speech", Duration::from_secs(1), golden_speech),
        ("ambiguity regression", Duration::from_secs(1), ambiguity_regression),
        ("grid example", Duration::from_secs(1), grid_example),
        ("pan sweep", Duration::from_secs(1), pan_sweep),
        ("latex round trip", Duration::from_secs(30), latex_round_trip),
        ("linear traversal completeness", Duration::from_secs(30), traversal_completeness),
        ("mathspeak injectivity", Duration::from_secs(300), mathspeak_injectivity),
        ("determinism", Duration::from_secs(60), determinism),
        ("earcon shape", Duration::from_secs(60), earcon_shape),
    ];
    let mut failed = 0;
    for (name, limit, run) in criteria {
        let start = Instant::now();
        let out = run();
        let took = start.elapsed();
        let ok = out.ok && took <= limit;
        if !ok {
            failed += 1;
        }
        let timing = if took <= limit {
            format!("{:.3}s", took.as_secs_f64())
        } else {
            format!("{:.3}s exceeds {}s", took.as_secs_f64(), limit.as_secs())
        };
        println!(
            "{} {name} [{timing}]: {}",
            if ok { "PASS" } else { "FAIL" },
            out.detail
        );
    }
    if failed > 0 {
        println!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
    println!("all acceptance criteria passed");
}

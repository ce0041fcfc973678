use std::fs;

use audimath::files::{read_document, write_document, FileStore};
use audimath_core::document::{open_document, DocumentError, DocumentStore, EquationDocument};
use audimath_core::{parse_latex, InputEvent, Session, Settings};

fn sample() -> EquationDocument {
    let tree = parse_latex(r"\frac{a}{b}+\frac{c}{d}+\frac{e}{f}").unwrap();
    EquationDocument::new(&tree, Some(Settings::default()))
}

#[test]
fn save_then_load_gives_the_same_tree() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("eq.smq");
    let doc = sample();
    write_document(&path, &doc).unwrap();
    let back = read_document(&path).unwrap();
    assert_eq!(back, doc);
    assert_eq!(open_document(&back).unwrap(), open_document(&doc).unwrap());

    let v: serde_json::Value = serde_json::from_str(&fs::read_to_string(&path).unwrap()).unwrap();
    assert_eq!(v["format_version"], 1);
    assert!(v["tree"].is_object());
    assert!(v["settings"].is_object());
}

#[test]
fn future_version_is_a_version_mismatch() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("new.smq");
    let mut v = serde_json::to_value(sample()).unwrap();
    v["format_version"] = 999.into();
    fs::write(&path, v.to_string()).unwrap();
    assert_eq!(
        read_document(&path),
        Err(DocumentError::VersionMismatch { found: 999, expected: 1 })
    );
}

#[test]
fn truncated_file_is_corrupt() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("cut.smq");
    let text = serde_json::to_string(&sample()).unwrap();
    fs::write(&path, &text[..text.len() / 2]).unwrap();
    assert!(matches!(read_document(&path), Err(DocumentError::CorruptDocument(_))));
}

#[test]
fn missing_file_is_an_io_error() {
    let dir = tempfile::tempdir().unwrap();
    let mut store = FileStore::rooted(dir.path());
    assert!(matches!(store.load("nope.smq"), Err(DocumentError::IoError(_))));
}

#[test]
fn session_saves_and_loads_through_the_filesystem() {
    let dir = tempfile::tempdir().unwrap();
    let mut store = FileStore::rooted(dir.path());
    let mut s = Session::new();
    s.apply_event_with(&InputEvent::LoadLatex { text: r"\sqrt{x}+1".into() }, &mut store);
    let saved = s.tree().clone();
    s.apply_event_with(&InputEvent::Save { path: "a.smq".into() }, &mut store);
    assert!(dir.path().join("a.smq").is_file());

    let mut t = Session::new();
    let b = t.apply_event_with(&InputEvent::Load { path: "a.smq".into() }, &mut store);
    assert_eq!(t.tree(), &saved);
    assert!(!b.directives.iter().any(|d| d.kind_name() == "error"));

    fs::write(dir.path().join("bad.smq"), "{\"format_version\": 1, \"tree\": {").unwrap();
    let before = t.tree().clone();
    let b = t.apply_event_with(&InputEvent::Load { path: "bad.smq".into() }, &mut store);
    assert_eq!(t.tree(), &before);
    assert!(b.directives.iter().any(|d| d.kind_name() == "error"));
}

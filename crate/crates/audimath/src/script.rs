//! Headless replay of recorded events.
//!
//! A script is one event per line, either a bare event object or the
//! `{"type": "event", ...}` envelope. Blank lines and `#` comments are
//! skipped. Output is one server message per event.

use std::io::{self, BufRead, Write};

use audimath_core::document::DocumentStore;
use audimath_core::InputEvent;
use thiserror::Error;

use crate::config::EngineConfig;
use crate::protocol::{ClientMessage, Connection, ServerMessage};

#[derive(Debug, Error)]
pub enum ScriptError {
    #[error("script line {line}: {reason}")]
    BadEvent { line: usize, reason: String },
    #[error(transparent)]
    Io(#[from] io::Error),
}

pub fn parse_script_line(line: &str) -> Result<InputEvent, String> {
    let v: serde_json::Value = serde_json::from_str(line).map_err(|e| e.to_string())?;
    if v.get("type").is_some() {
        let ClientMessage::Event { event } = serde_json::from_value(v).map_err(|e| e.to_string())?;
        Ok(event)
    } else {
        serde_json::from_value(v).map_err(|e| e.to_string())
    }
}

pub fn parse_script(input: impl BufRead) -> Result<Vec<InputEvent>, ScriptError> {
    let mut events = Vec::new();
    for (i, line) in input.lines().enumerate() {
        let line = line?;
        let t = line.trim();
        if t.is_empty() || t.starts_with('#') {
            continue;
        }
        events.push(parse_script_line(t).map_err(|reason| ScriptError::BadEvent { line: i + 1, reason })?);
    }
    Ok(events)
}

/// Run `events` through a fresh session, writing one line per batch.
pub fn replay(
    config: &EngineConfig,
    events: &[InputEvent],
    store: impl DocumentStore,
    out: &mut impl Write,
) -> io::Result<()> {
    let mut conn = Connection::new(config.session(), store);
    for e in events {
        let msg = ServerMessage::Batch(conn.handle_event(e));
        writeln!(out, "{}", msg.to_line())?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn both_line_forms_parse() {
        let bare = parse_script_line(r#"{"kind":"key","key":"a"}"#).unwrap();
        let wrapped = parse_script_line(r#"{"type":"event","event":{"kind":"key","key":"a"}}"#).unwrap();
        assert_eq!(bare, wrapped);
        assert_eq!(bare, InputEvent::key("a"));
    }

    #[test]
    fn bad_lines_are_located() {
        let src = "# header\n\n{\"kind\":\"request_latex\"}\n{\"kind\":\"fly\"}\n";
        match parse_script(src.as_bytes()) {
            Err(ScriptError::BadEvent { line, .. }) => assert_eq!(line, 4),
            other => panic!("{other:?}"),
        }
    }
}

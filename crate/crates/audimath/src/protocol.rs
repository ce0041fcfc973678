//! Newline-delimited JSON messages between a client and one session.
//!
//! Client to engine: `{"type": "event", "event": {...}}`. Engine to
//! client: `{"type": "batch", "revision": n, "directives": [...],
//! "ui_state": {...}}`, or `{"type": "error", "message": "..."}` for a line
//! that could not be understood. Protocol errors never end a connection.

use audimath_core::document::DocumentStore;
use audimath_core::{DirectiveBatch, InputEvent, Session};
use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum ClientMessage {
    Event { event: InputEvent },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum ServerMessage {
    Batch(DirectiveBatch),
    Error { message: String },
}

impl ServerMessage {
    pub fn to_line(&self) -> String {
        serde_json::to_string(self).expect("messages serialize")
    }
}

pub fn parse_client_line(line: &str) -> Result<ClientMessage, String> {
    serde_json::from_str(line).map_err(|e| format!("protocol error: {e}"))
}

/// One session and the store its save/load events go through.
pub struct Connection<S> {
    pub session: Session,
    pub store: S,
}

impl<S: DocumentStore> Connection<S> {
    pub fn new(session: Session, store: S) -> Connection<S> {
        Connection { session, store }
    }

    pub fn handle_event(&mut self, event: &InputEvent) -> DirectiveBatch {
        self.session.apply_event_with(event, &mut self.store)
    }

    /// `None` for blank lines.
    pub fn handle_line(&mut self, line: &str) -> Option<ServerMessage> {
        let line = line.trim();
        if line.is_empty() {
            return None;
        }
        Some(match parse_client_line(line) {
            Ok(ClientMessage::Event { event }) => ServerMessage::Batch(self.handle_event(&event)),
            Err(message) => ServerMessage::Error { message },
        })
    }
}

//! File formats, the NDJSON service and script replay for the audimath
//! equation editor engine. The engine itself lives in `audimath-core`.

pub mod config;
pub mod files;
pub mod protocol;
pub mod script;
pub mod server;

pub use config::{ConfigError, EngineConfig};
pub use files::FileStore;
pub use protocol::{ClientMessage, Connection, ServerMessage};
pub use script::{replay, ScriptError};
pub use server::{serve, ServeError, Server};

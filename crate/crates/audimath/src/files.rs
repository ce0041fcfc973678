//! `.smq` document files on disk.

use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use audimath_core::document::{DocumentError, DocumentStore, EquationDocument, FORMAT_VERSION};

pub const EXTENSION: &str = "smq";

fn io_error(path: &Path, e: io::Error) -> DocumentError {
    DocumentError::IoError(format!("{}: {e}", path.display()))
}

pub fn write_document(path: &Path, doc: &EquationDocument) -> Result<(), DocumentError> {
    let mut text = serde_json::to_string_pretty(doc).map_err(|e| DocumentError::IoError(e.to_string()))?;
    text.push('\n');
    fs::write(path, text).map_err(|e| io_error(path, e))
}

/// Parse document text. The version is checked before the rest of the
/// document so a newer file reports a version problem, not corruption.
pub fn parse_document(text: &str) -> Result<EquationDocument, DocumentError> {
    let value: serde_json::Value =
        serde_json::from_str(text).map_err(|e| DocumentError::CorruptDocument(e.to_string()))?;
    let found = value
        .get("format_version")
        .and_then(serde_json::Value::as_u64)
        .ok_or_else(|| DocumentError::CorruptDocument("missing format_version".into()))?;
    if found != u64::from(FORMAT_VERSION) {
        return Err(DocumentError::VersionMismatch {
            found: u32::try_from(found).unwrap_or(u32::MAX),
            expected: FORMAT_VERSION,
        });
    }
    serde_json::from_value(value).map_err(|e| DocumentError::CorruptDocument(e.to_string()))
}

pub fn read_document(path: &Path) -> Result<EquationDocument, DocumentError> {
    let text = fs::read_to_string(path).map_err(|e| io_error(path, e))?;
    parse_document(&text)
}

/// Documents on the local filesystem. Relative paths resolve against
/// `base` when one is set.
#[derive(Clone, Debug, Default)]
pub struct FileStore {
    pub base: Option<PathBuf>,
}

impl FileStore {
    pub fn new() -> FileStore {
        FileStore::default()
    }

    pub fn rooted(base: impl Into<PathBuf>) -> FileStore {
        FileStore { base: Some(base.into()) }
    }

    fn resolve(&self, path: &str) -> PathBuf {
        match &self.base {
            Some(b) => b.join(path),
            None => PathBuf::from(path),
        }
    }
}

impl DocumentStore for FileStore {
    fn save(&mut self, path: &str, doc: &EquationDocument) -> Result<(), DocumentError> {
        write_document(&self.resolve(path), doc)
    }

    fn load(&mut self, path: &str) -> Result<EquationDocument, DocumentError> {
        read_document(&self.resolve(path))
    }
}

//! Settings, earcon override, symbol and keyboard layout files, and the
//! bundle a new session is built from.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use audimath_core::audio::{EarconCatalog, EarconId, Note, Settings};
use audimath_core::keyboard::{load_layout, KeyboardLayout};
use audimath_core::model::SymbolTable;
use audimath_core::Session;
use serde::Deserialize;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("{path}: {source}")]
    Read {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{path}: {reason}")]
    Invalid { path: PathBuf, reason: String },
}

fn read(path: &Path) -> Result<String, ConfigError> {
    fs::read_to_string(path).map_err(|source| ConfigError::Read {
        path: path.to_path_buf(),
        source,
    })
}

fn invalid(path: &Path, reason: impl ToString) -> ConfigError {
    ConfigError::Invalid {
        path: path.to_path_buf(),
        reason: reason.to_string(),
    }
}

/// Missing fields keep their defaults.
pub fn parse_settings(text: &str) -> Result<Settings, serde_json::Error> {
    serde_json::from_str(text)
}

pub fn load_settings(path: &Path) -> Result<Settings, ConfigError> {
    parse_settings(&read(path)?).map_err(|e| invalid(path, e))
}

/// `{"pseudo_open": [[freq_hz, duration_ms, gain], ...], ...}` applied over
/// the default catalog.
pub fn parse_earcons(text: &str) -> Result<EarconCatalog, String> {
    let raw: BTreeMap<String, Vec<(f64, f64, f64)>> = serde_json::from_str(text).map_err(|e| e.to_string())?;
    let mut overrides = Vec::new();
    for (name, notes) in raw {
        let id = EarconId::parse(&name).ok_or_else(|| format!("unknown earcon {name:?}"))?;
        overrides.push((id, notes.into_iter().map(|(f, d, g)| Note::new(f, d, g)).collect()));
    }
    EarconCatalog::default()
        .with_overrides(overrides)
        .map_err(|e| e.to_string())
}

pub fn load_earcons(path: &Path) -> Result<EarconCatalog, ConfigError> {
    parse_earcons(&read(path)?).map_err(|e| invalid(path, e))
}

#[derive(Deserialize)]
struct SymbolEntry {
    display: String,
    spoken: String,
}

/// `{"gamma": {"display": "γ", "spoken": "gamma"}}`, added to the built-in
/// symbols. Keys are control words without the backslash.
pub fn parse_symbols(text: &str) -> Result<SymbolTable, String> {
    let raw: BTreeMap<String, SymbolEntry> = serde_json::from_str(text).map_err(|e| e.to_string())?;
    let mut table = SymbolTable::default();
    for (name, e) in raw {
        if name.is_empty() || !name.chars().all(|c| c.is_ascii_alphabetic()) {
            return Err(format!("symbol name {name:?} must be ASCII letters"));
        }
        if e.display.chars().count() != 1 {
            return Err(format!("symbol {name:?} must display as one character"));
        }
        table.insert(&name, &e.display, &e.spoken);
    }
    Ok(table)
}

pub fn load_symbols(path: &Path) -> Result<SymbolTable, ConfigError> {
    parse_symbols(&read(path)?).map_err(|e| invalid(path, e))
}

pub fn load_keyboard(path: &Path) -> Result<KeyboardLayout, ConfigError> {
    load_layout(&read(path)?).map_err(|e| invalid(path, e))
}

/// Everything a fresh session is configured with.
#[derive(Clone, Debug, Default)]
pub struct EngineConfig {
    pub settings: Settings,
    pub keyboard: KeyboardLayout,
    pub catalog: EarconCatalog,
    pub symbols: SymbolTable,
}

impl EngineConfig {
    /// Load whichever files are given; the rest stay at their defaults.
    pub fn from_files(
        settings: Option<&Path>,
        layout: Option<&Path>,
        earcons: Option<&Path>,
        symbols: Option<&Path>,
    ) -> Result<EngineConfig, ConfigError> {
        let mut c = EngineConfig::default();
        if let Some(p) = settings {
            c.settings = load_settings(p)?;
        }
        if let Some(p) = layout {
            c.keyboard = load_keyboard(p)?;
        }
        if let Some(p) = earcons {
            c.catalog = load_earcons(p)?;
        }
        if let Some(p) = symbols {
            c.symbols = load_symbols(p)?;
        }
        Ok(c)
    }

    pub fn session(&self) -> Session {
        Session::new()
            .with_settings(self.settings.clone())
            .with_keyboard(self.keyboard.clone())
            .with_catalog(self.catalog.clone())
            .with_symbols(self.symbols.clone())
    }
}

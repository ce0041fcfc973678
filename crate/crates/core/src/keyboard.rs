//! Physical keyboard geometry for spatial navigation. Only the four middle
//! rows (digits through the bottom letter row) take part.
//!
//! Layout text format: four non-comment lines of space separated key names,
//! each optionally starting with `stagger:<key units>`. A `name:` line and
//! `#` comments are allowed anywhere.
//!
//! ```text
//! name: ANSI QWERTY
//! stagger:0    1 2 3 4 5 6 7 8 9 0
//! stagger:0.5  q w e r t y u i o p
//! stagger:0.75 a s d f g h j k l
//! stagger:1.25 z x c v b n m
//! ```

use alloc::string::{String, ToString};
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::layout::{nearest_field, FieldGrid};
use crate::model::NodeId;

pub const ROW_COUNT: usize = 4;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum KeyboardError {
    #[error("bad layout spec on line {line}: {reason}")]
    BadLayoutSpec { line: usize, reason: String },
    #[error("layout has {0} key rows, expected 4")]
    WrongRowCount(usize),
    #[error("key {0:?} is not in the layout")]
    UnknownKey(String),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KeyRow {
    pub stagger: f64,
    pub keys: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KeyboardLayout {
    pub name: String,
    pub rows: Vec<KeyRow>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct KeyPosition {
    pub x_norm: f64,
    /// 0 = digit row, 1 = bottom letter row.
    pub y_norm: f64,
}

pub const DEFAULT_LAYOUT: &str = "\
name: ANSI QWERTY
stagger:0    1 2 3 4 5 6 7 8 9 0
stagger:0.5  q w e r t y u i o p
stagger:0.75 a s d f g h j k l
stagger:1.25 z x c v b n m
";

impl Default for KeyboardLayout {
    fn default() -> Self {
        load_layout(DEFAULT_LAYOUT).expect("built-in layout parses")
    }
}

pub fn load_layout(spec: &str) -> Result<KeyboardLayout, KeyboardError> {
    let mut name = String::from("custom");
    let mut rows = Vec::new();
    let mut seen: Vec<&str> = Vec::new();
    for (i, raw) in spec.lines().enumerate() {
        let line_no = i + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        if let Some(n) = line.strip_prefix("name:") {
            name = n.trim().to_string();
            continue;
        }
        let mut words = line.split_whitespace().peekable();
        let mut stagger = 0.0;
        if let Some(first) = words.peek() {
            if let Some(v) = first.strip_prefix("stagger:") {
                stagger = v.parse::<f64>().ok().filter(|s| s.is_finite() && *s >= 0.0).ok_or_else(|| {
                    KeyboardError::BadLayoutSpec {
                        line: line_no,
                        reason: alloc::format!("bad stagger {v:?}"),
                    }
                })?;
                words.next();
            }
        }
        let keys: Vec<&str> = words.collect();
        if keys.is_empty() {
            return Err(KeyboardError::BadLayoutSpec {
                line: line_no,
                reason: "row has no keys".to_string(),
            });
        }
        for k in &keys {
            if seen.contains(k) {
                return Err(KeyboardError::BadLayoutSpec {
                    line: line_no,
                    reason: alloc::format!("duplicate key {k:?}"),
                });
            }
            seen.push(k);
        }
        rows.push(KeyRow {
            stagger,
            keys: keys.into_iter().map(str::to_string).collect(),
        });
    }
    if rows.len() != ROW_COUNT {
        return Err(KeyboardError::WrongRowCount(rows.len()));
    }
    Ok(KeyboardLayout { name, rows })
}

impl KeyboardLayout {
    /// Row index and column index of a key. Single letters match
    /// case-insensitively.
    pub fn locate(&self, key: &str) -> Option<(usize, usize)> {
        let lower = key.to_lowercase();
        self.rows.iter().enumerate().find_map(|(r, row)| {
            row.keys
                .iter()
                .position(|k| k == key || k.to_lowercase() == lower)
                .map(|c| (r, c))
        })
    }

    pub fn contains(&self, key: &str) -> bool {
        self.locate(key).is_some()
    }

    fn max_extent(&self) -> f64 {
        self.rows
            .iter()
            .map(|r| r.stagger + r.keys.len() as f64)
            .fold(0.0, f64::max)
    }

    fn x_of(&self, row: usize, index: usize) -> f64 {
        (self.rows[row].stagger + index as f64 + 0.5) / self.max_extent()
    }

    pub fn key_position(&self, key: &str) -> Result<KeyPosition, KeyboardError> {
        let (r, c) = self
            .locate(key)
            .ok_or_else(|| KeyboardError::UnknownKey(key.to_string()))?;
        Ok(KeyPosition {
            x_norm: self.x_of(r, c),
            y_norm: r as f64 / (ROW_COUNT - 1) as f64,
        })
    }

    /// Where a key lands in normalized grid coordinates. Horizontally the
    /// key's own row is stretched across the grid so its first and last keys
    /// reach the outer column centers; vertically the top and bottom key
    /// rows reach the top and bottom grid row centers.
    pub fn grid_point(&self, key: &str, grid: &FieldGrid) -> Result<(f64, f64), KeyboardError> {
        let pos = self.key_position(key)?;
        let (r, _) = self.locate(key).expect("located above");
        let n = self.rows[r].keys.len();
        let first = self.x_of(r, 0);
        let last = self.x_of(r, n - 1);
        let u = if n > 1 {
            (pos.x_norm - first) / (last - first)
        } else {
            0.5
        };
        let cols = grid.cols as f64;
        let rows = grid.rows as f64;
        Ok((
            (0.5 + u * (cols - 1.0)) / cols,
            (0.5 + pos.y_norm * (rows - 1.0)) / rows,
        ))
    }
}

pub fn key_position(layout: &KeyboardLayout, key: &str) -> Result<KeyPosition, KeyboardError> {
    layout.key_position(key)
}

/// Field highlighted by pressing `key` in spatial navigation mode.
pub fn select_by_key(layout: &KeyboardLayout, grid: &FieldGrid, key: &str) -> Result<NodeId, KeyboardError> {
    let (x, y) = layout.grid_point(key, grid)?;
    Ok(nearest_field(grid, x, y).expect("grid is never empty"))
}

//! Turns speech tokens and navigation requests into renderable directives:
//! stereo pan, pitch ratio, earcon note lists.
//!
//! Pan is linear in horizontal position (`2x - 1`). Pitch ratio is
//! `2^(semitones_per_level * y_level / 12)`.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::layout::{GeometryMap, Source};
use crate::model::NodeId;
use crate::navigation::NavStyle;
use crate::speech::{SpeechToken, TokenKind, Verbosity};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EarconId {
    PseudoOpen,
    PseudoClose,
    EndOfText,
    FieldEnter,
    NodeEnter,
    CountTone,
    IndexTone,
}

impl EarconId {
    pub const ALL: [EarconId; 7] = [
        EarconId::PseudoOpen,
        EarconId::PseudoClose,
        EarconId::EndOfText,
        EarconId::FieldEnter,
        EarconId::NodeEnter,
        EarconId::CountTone,
        EarconId::IndexTone,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            EarconId::PseudoOpen => "pseudo_open",
            EarconId::PseudoClose => "pseudo_close",
            EarconId::EndOfText => "end_of_text",
            EarconId::FieldEnter => "field_enter",
            EarconId::NodeEnter => "node_enter",
            EarconId::CountTone => "count_tone",
            EarconId::IndexTone => "index_tone",
        }
    }

    pub fn parse(s: &str) -> Option<EarconId> {
        EarconId::ALL.into_iter().find(|e| e.as_str() == s)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Note {
    pub freq_hz: f64,
    pub duration_ms: f64,
    pub gain: f64,
}

impl Note {
    pub const fn new(freq_hz: f64, duration_ms: f64, gain: f64) -> Note {
        Note {
            freq_hz,
            duration_ms,
            gain,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Settings {
    pub verbosity: Verbosity,
    pub nav_style: NavStyle,
    pub spatial_audio: bool,
    pub pitch_mapping: bool,
    pub semitones_per_level: f64,
    pub speech_rate: f64,
}

impl Default for Settings {
    fn default() -> Self {
        Settings {
            verbosity: Verbosity::Terse,
            nav_style: NavStyle::Linear,
            spatial_audio: true,
            pitch_mapping: true,
            semitones_per_level: 3.0,
            speech_rate: 1.0,
        }
    }
}

impl Settings {
    pub fn pan_for(&self, x: f64) -> f64 {
        if !self.spatial_audio {
            return 0.0;
        }
        (2.0 * x - 1.0).clamp(-1.0, 1.0)
    }

    pub fn pitch_for(&self, y_level: i32) -> f64 {
        if !self.spatial_audio || !self.pitch_mapping || y_level == 0 {
            return 1.0;
        }
        libm::pow(2.0, self.semitones_per_level * y_level as f64 / 12.0)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpeechDirective {
    pub text: String,
    pub pan: f64,
    pub pitch_ratio: f64,
    pub rate: f64,
    pub source: Source,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EarconDirective {
    pub earcon: EarconId,
    pub pan: f64,
    pub notes: Vec<Note>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Directive {
    Speech(SpeechDirective),
    Earcon(EarconDirective),
    /// A failure, always spoken.
    Error { text: String },
}

impl Directive {
    pub fn kind_name(&self) -> &'static str {
        match self {
            Directive::Speech(_) => "speech",
            Directive::Earcon(_) => "earcon",
            Directive::Error { .. } => "error",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PlanError {
    #[error("no geometry for node {0} offset {1:?}")]
    MissingGeometry(NodeId, Option<usize>),
    #[error("index {idx} out of range 1..={n}")]
    IndexOutOfRange { n: usize, idx: usize },
    #[error("earcon {0} does not have the required shape")]
    BadEarconShape(&'static str),
}

/// Major-scale offsets in semitones, extended past one octave.
const MAJOR: [i32; 7] = [0, 2, 4, 5, 7, 9, 11];

fn scale_degree(base_hz: f64, degree: usize) -> f64 {
    let d = degree - 1;
    let semis = MAJOR[d % 7] + 12 * (d / 7) as i32;
    base_hz * libm::pow(2.0, semis as f64 / 12.0)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EarconCatalog {
    entries: BTreeMap<EarconId, Vec<Note>>,
}

impl Default for EarconCatalog {
    fn default() -> Self {
        let open = vec![
            Note::new(523.25, 60.0, 0.8),
            Note::new(659.25, 60.0, 0.8),
            Note::new(783.99, 60.0, 0.8),
        ];
        let mut close = open.clone();
        close.reverse();
        let mut entries = BTreeMap::new();
        entries.insert(EarconId::PseudoOpen, open);
        entries.insert(EarconId::PseudoClose, close);
        entries.insert(EarconId::EndOfText, vec![Note::new(196.0, 150.0, 0.6)]);
        entries.insert(
            EarconId::FieldEnter,
            vec![Note::new(880.0, 40.0, 0.5), Note::new(1174.66, 40.0, 0.5)],
        );
        entries.insert(EarconId::NodeEnter, vec![Note::new(392.0, 50.0, 0.6)]);
        // Scale roots; plan_counts walks the major scale from these.
        entries.insert(EarconId::CountTone, vec![Note::new(440.0, 90.0, 0.6)]);
        entries.insert(EarconId::IndexTone, vec![Note::new(880.0, 160.0, 0.8)]);
        EarconCatalog { entries }
    }
}

impl EarconCatalog {
    pub fn notes(&self, id: EarconId) -> &[Note] {
        self.entries.get(&id).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn iter(&self) -> impl Iterator<Item = (EarconId, &[Note])> {
        self.entries.iter().map(|(k, v)| (*k, v.as_slice()))
    }

    /// Replace entries. Pseudo-parenthesis overrides must keep their shape
    /// (open strictly ascending, close strictly descending) and the scale
    /// roots must be a single note.
    pub fn with_overrides(
        mut self,
        overrides: impl IntoIterator<Item = (EarconId, Vec<Note>)>,
    ) -> Result<EarconCatalog, PlanError> {
        for (id, notes) in overrides {
            let ok = match id {
                EarconId::PseudoOpen => strictly(&notes, |a, b| a < b),
                EarconId::PseudoClose => strictly(&notes, |a, b| a > b),
                EarconId::CountTone | EarconId::IndexTone => notes.len() == 1,
                _ => !notes.is_empty(),
            } && notes
                .iter()
                .all(|n| n.freq_hz > 0.0 && n.duration_ms > 0.0 && (0.0..=1.0).contains(&n.gain));
            if !ok {
                return Err(PlanError::BadEarconShape(id.as_str()));
            }
            self.entries.insert(id, notes);
        }
        Ok(self)
    }
}

fn strictly(notes: &[Note], cmp: impl Fn(f64, f64) -> bool) -> bool {
    notes.len() >= 2 && notes.windows(2).all(|w| cmp(w[0].freq_hz, w[1].freq_hz))
}

pub fn earcon_catalog(_settings: &Settings) -> EarconCatalog {
    EarconCatalog::default()
}

/// Count tones then one index tone. `idx` is 1-based.
pub fn plan_counts(n: usize, idx: usize, pan: f64) -> Result<Vec<EarconDirective>, PlanError> {
    plan_counts_with(&EarconCatalog::default(), n, idx, pan)
}

pub fn plan_counts_with(
    catalog: &EarconCatalog,
    n: usize,
    idx: usize,
    pan: f64,
) -> Result<Vec<EarconDirective>, PlanError> {
    if idx == 0 || idx > n {
        return Err(PlanError::IndexOutOfRange { n, idx });
    }
    let count_root = catalog.notes(EarconId::CountTone)[0];
    let index_root = catalog.notes(EarconId::IndexTone)[0];
    let counts = (1..=n)
        .map(|d| Note::new(scale_degree(count_root.freq_hz, d), count_root.duration_ms, count_root.gain))
        .collect();
    Ok(vec![
        EarconDirective {
            earcon: EarconId::CountTone,
            pan,
            notes: counts,
        },
        EarconDirective {
            earcon: EarconId::IndexTone,
            pan,
            notes: vec![Note::new(
                scale_degree(index_root.freq_hz, idx),
                index_root.duration_ms,
                index_root.gain,
            )],
        },
    ])
}

/// How pseudo-parenthesis markers are realized.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct MarkerMode {
    pub earcons: bool,
    pub words: bool,
}

impl MarkerMode {
    /// Read-friendly mode uses earcons; verbose verbosity, or read-friendly
    /// off, also speaks the markers.
    pub fn for_settings(settings: &Settings, read_friendly: bool) -> MarkerMode {
        MarkerMode {
            earcons: read_friendly,
            words: !read_friendly || settings.verbosity == Verbosity::Verbose,
        }
    }
}

pub struct Planner<'a> {
    pub geometry: &'a GeometryMap,
    pub settings: &'a Settings,
    pub catalog: &'a EarconCatalog,
    pub markers: MarkerMode,
}

impl Planner<'_> {
    fn lookup(&self, source: Source) -> Result<(f64, i32), PlanError> {
        let g = self
            .geometry
            .get(source)
            .ok_or(PlanError::MissingGeometry(source.node, source.offset))?;
        Ok((self.geometry.pan_position(g.center()), g.y_level))
    }

    fn speech(&self, text: &str, source: Source, x: f64, level: i32) -> Directive {
        Directive::Speech(SpeechDirective {
            text: text.into(),
            pan: self.settings.pan_for(x),
            pitch_ratio: self.settings.pitch_for(level),
            rate: self.settings.speech_rate,
            source,
        })
    }

    /// Earcon from the catalog, panned at `x` and shifted with the level.
    pub fn earcon_at(&self, id: EarconId, x: f64, level: i32) -> Directive {
        let ratio = self.settings.pitch_for(level);
        Directive::Earcon(EarconDirective {
            earcon: id,
            pan: self.settings.pan_for(x),
            notes: self
                .catalog
                .notes(id)
                .iter()
                .map(|n| Note::new(n.freq_hz * ratio, n.duration_ms, n.gain))
                .collect(),
        })
    }

    pub fn earcon(&self, id: EarconId, source: Source) -> Result<Directive, PlanError> {
        let (x, level) = self.lookup(source)?;
        Ok(self.earcon_at(id, x, level))
    }

    pub fn counts(&self, n: usize, idx: usize, source: Source) -> Result<Vec<Directive>, PlanError> {
        let (x, _) = self.lookup(source)?;
        Ok(plan_counts_with(self.catalog, n, idx, self.settings.pan_for(x))?
            .into_iter()
            .map(Directive::Earcon)
            .collect())
    }

    pub fn speech_tokens(&self, tokens: &[SpeechToken]) -> Result<Vec<Directive>, PlanError> {
        let mut out = Vec::with_capacity(tokens.len());
        for t in tokens {
            match t.kind {
                TokenKind::Word => {
                    let (x, level) = self.lookup(t.source)?;
                    out.push(self.speech(&t.text, t.source, x, level));
                }
                TokenKind::PseudoOpen | TokenKind::PseudoClose => {
                    let g = self
                        .geometry
                        .get(t.source)
                        .ok_or(PlanError::MissingGeometry(t.source.node, t.source.offset))?;
                    let (edge, id) = if t.kind == TokenKind::PseudoOpen {
                        (g.x_norm, EarconId::PseudoOpen)
                    } else {
                        (g.right(), EarconId::PseudoClose)
                    };
                    let x = self.geometry.pan_position(edge);
                    if self.markers.earcons {
                        out.push(self.earcon_at(id, x, g.y_level));
                    }
                    if self.markers.words {
                        out.push(self.speech(&t.text, t.source, x, g.y_level));
                    }
                }
                TokenKind::EarconRef(id) => out.push(self.earcon(id, t.source)?),
            }
        }
        Ok(out)
    }
}

/// Spatially plan a token stream.
pub fn plan_speech(
    tokens: &[SpeechToken],
    geometry: &GeometryMap,
    settings: &Settings,
    read_friendly: bool,
) -> Result<Vec<Directive>, PlanError> {
    let catalog = earcon_catalog(settings);
    Planner {
        geometry,
        settings,
        catalog: &catalog,
        markers: MarkerMode::for_settings(settings, read_friendly),
    }
    .speech_tokens(tokens)
}

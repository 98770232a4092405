//! Encounter transcripts, PHQ-9 labels, and speaker-filtered documents.

use std::collections::HashSet;
use std::fmt;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::lexicon::tokenize;

/// PHQ-9 totals at or above this value are screening-positive.
pub const PHQ9_CUTOFF: u8 = 10;
pub const PHQ9_MAX: u8 = 27;

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("malformed record at line {line}: {source}")]
    Malformed {
        line: usize,
        source: serde_json::Error,
    },
    #[error("unknown speaker '{value}' at line {line}")]
    UnknownSpeaker { value: String, line: usize },
    #[error("duplicate encounter id '{id}' at line {line}")]
    DuplicateId { id: String, line: usize },
    #[error("phq9 value {value} outside 0..=27 at line {line}")]
    Phq9OutOfRange { value: i64, line: usize },
    #[error("empty encounter id at line {line}")]
    EmptyId { line: usize },
    #[error("invalid speaker configuration '{0}' (expected patient, provider or combined)")]
    BadConfig(String),
    #[error("invalid token budget '{0}' (expected a positive integer or 'full')")]
    BadBudget(String),
}

/// Diarized speaker role as delivered by the upstream role classifier.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Speaker {
    Patient,
    Doctor,
    Other,
}

impl Speaker {
    pub fn as_str(self) -> &'static str {
        match self {
            Speaker::Patient => "patient",
            Speaker::Doctor => "doctor",
            Speaker::Other => "other",
        }
    }

    /// Doctors and other staff collapse into one provider party.
    pub fn party(self) -> Party {
        match self {
            Speaker::Patient => Party::Patient,
            Speaker::Doctor | Speaker::Other => Party::Provider,
        }
    }

    fn parse(s: &str) -> Option<Self> {
        match s {
            "patient" => Some(Speaker::Patient),
            "doctor" => Some(Speaker::Doctor),
            "other" => Some(Speaker::Other),
            _ => None,
        }
    }
}

/// The two sides of the dyad after role aggregation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Party {
    Patient,
    Provider,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Utterance {
    pub speaker: Speaker,
    pub text: String,
}

impl Utterance {
    pub fn new(speaker: Speaker, text: impl Into<String>) -> Self {
        Self {
            speaker,
            text: text.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Encounter {
    pub id: String,
    pub phq9: u8,
    pub utterances: Vec<Utterance>,
}

impl Encounter {
    pub fn label(&self) -> Label {
        label_of(self)
    }
}

/// Binary screening label. `Negative < Positive`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Label {
    Negative,
    Positive,
}

impl Label {
    pub fn is_positive(self) -> bool {
        self == Label::Positive
    }

    pub fn from_bool(positive: bool) -> Self {
        if positive {
            Label::Positive
        } else {
            Label::Negative
        }
    }
}

pub fn label_of(encounter: &Encounter) -> Label {
    label_for_phq9(encounter.phq9)
}

pub fn label_for_phq9(phq9: u8) -> Label {
    Label::from_bool(phq9 >= PHQ9_CUTOFF)
}

/// Which speakers contribute tokens to a document.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SpeakerConfig {
    #[serde(rename = "patient")]
    PatientOnly,
    #[serde(rename = "provider")]
    ProviderOnly,
    Combined,
}

impl SpeakerConfig {
    pub const ALL: [SpeakerConfig; 3] = [
        SpeakerConfig::PatientOnly,
        SpeakerConfig::ProviderOnly,
        SpeakerConfig::Combined,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            SpeakerConfig::PatientOnly => "patient",
            SpeakerConfig::ProviderOnly => "provider",
            SpeakerConfig::Combined => "combined",
        }
    }

    pub fn includes(self, speaker: Speaker) -> bool {
        match self {
            SpeakerConfig::Combined => true,
            SpeakerConfig::PatientOnly => speaker.party() == Party::Patient,
            SpeakerConfig::ProviderOnly => speaker.party() == Party::Provider,
        }
    }
}

impl fmt::Display for SpeakerConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SpeakerConfig {
    type Err = CorpusError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "patient" | "patient-only" | "patient_only" => Ok(SpeakerConfig::PatientOnly),
            "provider" | "provider-only" | "provider_only" => Ok(SpeakerConfig::ProviderOnly),
            "combined" | "full" => Ok(SpeakerConfig::Combined),
            _ => Err(CorpusError::BadConfig(s.to_string())),
        }
    }
}

/// How much of a document to keep, counted in word tokens from the start.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Budget {
    First(usize),
    Full,
}

impl Budget {
    pub const GRID: [Budget; 4] = [
        Budget::First(128),
        Budget::First(256),
        Budget::First(512),
        Budget::Full,
    ];

    pub fn limit(self) -> Option<usize> {
        match self {
            Budget::First(n) => Some(n),
            Budget::Full => None,
        }
    }
}

impl fmt::Display for Budget {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Budget::First(n) => write!(f, "{n}"),
            Budget::Full => f.write_str("full"),
        }
    }
}

impl FromStr for Budget {
    type Err = CorpusError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let t = s.trim();
        if t.eq_ignore_ascii_case("full") {
            return Ok(Budget::Full);
        }
        match t.parse::<usize>() {
            Ok(n) if n >= 1 => Ok(Budget::First(n)),
            _ => Err(CorpusError::BadBudget(s.to_string())),
        }
    }
}

impl Serialize for Budget {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Budget {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// A contiguous run of tokens spoken by one party.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Turn {
    pub party: Party,
    pub start: usize,
    pub end: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Document {
    pub encounter_id: String,
    pub config: SpeakerConfig,
    pub tokens: Vec<String>,
    pub token_budget: Option<usize>,
    /// Speaker turns over `tokens`, in temporal order. Turns with no tokens
    /// are omitted.
    pub turns: Vec<Turn>,
}

impl Document {
    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn turn_tokens(&self, turn: &Turn) -> &[String] {
        &self.tokens[turn.start..turn.end]
    }
}

/// Filters utterances by speaker configuration, tokenizes them in temporal
/// order, and keeps the first `budget` tokens.
pub fn build_document(encounter: &Encounter, config: SpeakerConfig, budget: Budget) -> Document {
    let limit = budget.limit().unwrap_or(usize::MAX);
    let mut tokens = Vec::new();
    let mut turns = Vec::new();
    for utt in encounter.utterances.iter().filter(|u| config.includes(u.speaker)) {
        if tokens.len() >= limit {
            break;
        }
        let start = tokens.len();
        for tok in tokenize(&utt.text) {
            if tokens.len() >= limit {
                break;
            }
            tokens.push(tok);
        }
        if tokens.len() > start {
            turns.push(Turn {
                party: utt.speaker.party(),
                start,
                end: tokens.len(),
            });
        }
    }
    Document {
        encounter_id: encounter.id.clone(),
        config,
        tokens,
        token_budget: budget.limit(),
        turns,
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CorpusSummary {
    pub n: usize,
    pub n_positive: usize,
    pub prevalence: f64,
}

pub fn summarize(encounters: &[Encounter]) -> CorpusSummary {
    let n = encounters.len();
    let n_positive = encounters.iter().filter(|e| e.label().is_positive()).count();
    let prevalence = if n == 0 {
        0.0
    } else {
        n_positive as f64 / n as f64
    };
    CorpusSummary {
        n,
        n_positive,
        prevalence,
    }
}

#[derive(Deserialize)]
struct RawUtterance {
    speaker: String,
    text: String,
}

#[derive(Deserialize)]
struct RawEncounter {
    id: String,
    phq9: i64,
    utterances: Vec<RawUtterance>,
}

pub fn parse_corpus(path: &Path) -> Result<Vec<Encounter>, CorpusError> {
    let io_err = |source| CorpusError::Io {
        path: path.to_path_buf(),
        source,
    };
    let file = File::open(path).map_err(io_err)?;
    read_corpus(BufReader::new(file)).map_err(|e| match e {
        CorpusError::Io { source, .. } => io_err(source),
        other => other,
    })
}

/// Reads transcript JSONL. Blank lines are skipped; line numbers are 1-based.
pub fn read_corpus<R: BufRead>(reader: R) -> Result<Vec<Encounter>, CorpusError> {
    let mut seen = HashSet::new();
    let mut out = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line_no = idx + 1;
        let line = line.map_err(|source| CorpusError::Io {
            path: PathBuf::new(),
            source,
        })?;
        if line.trim().is_empty() {
            continue;
        }
        let raw: RawEncounter = serde_json::from_str(&line).map_err(|source| {
            CorpusError::Malformed {
                line: line_no,
                source,
            }
        })?;
        let encounter = validate(raw, line_no)?;
        if !seen.insert(encounter.id.clone()) {
            return Err(CorpusError::DuplicateId {
                id: encounter.id,
                line: line_no,
            });
        }
        out.push(encounter);
    }
    Ok(out)
}

fn validate(raw: RawEncounter, line: usize) -> Result<Encounter, CorpusError> {
    if raw.id.is_empty() {
        return Err(CorpusError::EmptyId { line });
    }
    if !(0..=PHQ9_MAX as i64).contains(&raw.phq9) {
        return Err(CorpusError::Phq9OutOfRange {
            value: raw.phq9,
            line,
        });
    }
    let utterances = raw
        .utterances
        .into_iter()
        .map(|u| match Speaker::parse(&u.speaker) {
            Some(speaker) => Ok(Utterance {
                speaker,
                text: u.text,
            }),
            None => Err(CorpusError::UnknownSpeaker {
                value: u.speaker,
                line,
            }),
        })
        .collect::<Result<_, _>>()?;
    Ok(Encounter {
        id: raw.id,
        phq9: raw.phq9 as u8,
        utterances,
    })
}

pub fn write_corpus<W: Write>(mut writer: W, encounters: &[Encounter]) -> std::io::Result<()> {
    for e in encounters {
        serde_json::to_writer(&mut writer, e)?;
        writer.write_all(b"\n")?;
    }
    writer.flush()
}

pub fn save_corpus(path: &Path, encounters: &[Encounter]) -> Result<(), CorpusError> {
    let io_err = |source| CorpusError::Io {
        path: path.to_path_buf(),
        source,
    };
    let file = File::create(path).map_err(io_err)?;
    write_corpus(BufWriter::new(file), encounters).map_err(io_err)
}

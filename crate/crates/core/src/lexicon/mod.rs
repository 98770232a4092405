//! Word-category dictionaries and percentage-of-words features.
//!
//! A [`Lexicon`] maps tokens to categories through exact entries and
//! prefix-wildcard entries (`sad*`). [`extract_features`] reports, for each
//! category, the percentage of a document's tokens that fall in it. A token
//! occurrence counts at most once per category, however many of that
//! category's patterns it matches.

mod trie;

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use thiserror::Error;
use tracing::warn;

use crate::corpus::{build_document, Budget, Document, Encounter, SpeakerConfig};
use crate::model::FeatureMatrix;

pub use trie::PrefixTrie;

/// Category names that, when both present, define the tone composite.
pub const TONE_POS: &str = "tone_pos";
pub const TONE_NEG: &str = "tone_neg";
/// Column name of the tone composite in feature matrices.
pub const TONE_FEATURE: &str = "tone";

const DEMO_LEXICON: &str = include_str!("../../data/demo_lexicon.dic");

#[derive(Debug, Error)]
pub enum LexiconError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("missing '%' header block")]
    MissingHeader,
    #[error("malformed category line {line}: '{text}'")]
    BadCategory { line: usize, text: String },
    #[error("duplicate category id {id} at line {line}")]
    DuplicateCategoryId { id: u32, line: usize },
    #[error("duplicate category name '{name}' at line {line}")]
    DuplicateCategoryName { name: String, line: usize },
    #[error("malformed entry line {line}: '{text}'")]
    BadEntry { line: usize, text: String },
    #[error("undeclared category {id} at line {line}")]
    UndeclaredCategory { id: u32, line: usize },
    #[error("duplicate pattern '{pattern}' at line {line}")]
    DuplicatePattern { pattern: String, line: usize },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Category {
    pub id: u32,
    pub name: String,
}

#[derive(Debug, Clone)]
pub struct Lexicon {
    categories: Vec<Category>,
    /// token -> category positions (indices into `categories`)
    exact: HashMap<String, Vec<usize>>,
    /// prefix (without '*') -> category positions, kept for serialization
    prefixes: BTreeMap<String, Vec<usize>>,
    trie: PrefixTrie,
}

impl Lexicon {
    pub fn parse_file(path: &Path) -> Result<Self, LexiconError> {
        let text = std::fs::read_to_string(path).map_err(|source| LexiconError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::parse_str(&text)
    }

    /// The bundled demonstration lexicon, whose word lists match
    /// [`crate::synth::SynthSpec::demo`].
    pub fn demo() -> Self {
        Self::parse_str(DEMO_LEXICON).expect("bundled lexicon is valid")
    }

    pub fn parse_str(text: &str) -> Result<Self, LexiconError> {
        #[derive(PartialEq)]
        enum Section {
            Preamble,
            Header,
            Entries,
        }
        let mut section = Section::Preamble;
        let mut categories: Vec<Category> = Vec::new();
        let mut by_id: HashMap<u32, usize> = HashMap::new();
        let mut entries: Vec<(usize, String, Vec<u32>)> = Vec::new();

        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let trimmed = raw.trim();
            if trimmed.is_empty() || trimmed.starts_with('#') {
                continue;
            }
            if trimmed == "%" {
                section = match section {
                    Section::Preamble => Section::Header,
                    Section::Header => Section::Entries,
                    Section::Entries => {
                        return Err(LexiconError::BadEntry {
                            line,
                            text: raw.to_string(),
                        })
                    }
                };
                continue;
            }
            match section {
                Section::Preamble => return Err(LexiconError::MissingHeader),
                Section::Header => {
                    let bad = || LexiconError::BadCategory {
                        line,
                        text: raw.to_string(),
                    };
                    let (id, name) = trimmed.split_once('\t').ok_or_else(bad)?;
                    let id: u32 = id.trim().parse().map_err(|_| bad())?;
                    let name = name.trim();
                    if name.is_empty() {
                        return Err(bad());
                    }
                    if by_id.contains_key(&id) {
                        return Err(LexiconError::DuplicateCategoryId { id, line });
                    }
                    if categories.iter().any(|c| c.name == name) {
                        return Err(LexiconError::DuplicateCategoryName {
                            name: name.to_string(),
                            line,
                        });
                    }
                    by_id.insert(id, categories.len());
                    categories.push(Category {
                        id,
                        name: name.to_string(),
                    });
                }
                Section::Entries => {
                    let bad = || LexiconError::BadEntry {
                        line,
                        text: raw.to_string(),
                    };
                    let (pattern, ids) = trimmed.split_once('\t').ok_or_else(bad)?;
                    let pattern = pattern.trim().to_lowercase();
                    if pattern.is_empty() || pattern == "*" {
                        return Err(bad());
                    }
                    let ids = ids
                        .split(',')
                        .map(|s| s.trim().parse::<u32>().map_err(|_| bad()))
                        .collect::<Result<Vec<_>, _>>()?;
                    entries.push((line, pattern, ids));
                }
            }
        }
        if section != Section::Entries {
            return Err(LexiconError::MissingHeader);
        }

        let mut exact: HashMap<String, Vec<usize>> = HashMap::new();
        let mut prefixes: BTreeMap<String, Vec<usize>> = BTreeMap::new();
        let mut trie = PrefixTrie::new();
        for (line, pattern, ids) in entries {
            let mut positions = BTreeSet::new();
            for id in ids {
                let pos = *by_id
                    .get(&id)
                    .ok_or(LexiconError::UndeclaredCategory { id, line })?;
                positions.insert(pos);
            }
            let positions: Vec<usize> = positions.into_iter().collect();
            let duplicate = || LexiconError::DuplicatePattern {
                pattern: pattern.clone(),
                line,
            };
            match pattern.strip_suffix('*') {
                Some(prefix) => {
                    if prefixes.contains_key(prefix) {
                        return Err(duplicate());
                    }
                    for &p in &positions {
                        trie.insert(prefix, p);
                    }
                    prefixes.insert(prefix.to_string(), positions);
                }
                None => {
                    if exact.contains_key(&pattern) {
                        return Err(duplicate());
                    }
                    exact.insert(pattern.clone(), positions);
                }
            }
        }

        Ok(Self {
            categories,
            exact,
            prefixes,
            trie,
        })
    }

    pub fn categories(&self) -> &[Category] {
        &self.categories
    }

    pub fn category_index(&self, name: &str) -> Option<usize> {
        self.categories.iter().position(|c| c.name == name)
    }

    pub fn exact_len(&self) -> usize {
        self.exact.len()
    }

    pub fn prefix_len(&self) -> usize {
        self.prefixes.len()
    }

    /// Exact entries as (token, category ids).
    pub fn exact_entries(&self) -> impl Iterator<Item = (&str, Vec<u32>)> {
        self.exact
            .iter()
            .map(|(k, v)| (k.as_str(), v.iter().map(|&p| self.categories[p].id).collect()))
    }

    /// Prefix entries as (prefix without '*', category ids).
    pub fn prefix_entries(&self) -> impl Iterator<Item = (&str, Vec<u32>)> {
        self.prefixes
            .iter()
            .map(|(k, v)| (k.as_str(), v.iter().map(|&p| self.categories[p].id).collect()))
    }

    /// Category positions a single token falls in, deduplicated and sorted.
    pub fn match_token(&self, token: &str) -> Vec<usize> {
        let mut out: Vec<usize> = self.exact.get(token).cloned().unwrap_or_default();
        self.trie.for_each_match(token, |p| out.push(p));
        out.sort_unstable();
        out.dedup();
        out
    }

    pub fn has_tone(&self) -> bool {
        self.category_index(TONE_POS).is_some() && self.category_index(TONE_NEG).is_some()
    }

    /// Feature column names: categories in declaration order, then `tone`
    /// when the lexicon defines both tone categories.
    pub fn feature_names(&self) -> Vec<String> {
        let mut names: Vec<String> = self.categories.iter().map(|c| c.name.clone()).collect();
        if self.has_tone() {
            names.push(TONE_FEATURE.to_string());
        }
        names
    }

    /// Renders the lexicon in the dictionary file format. Entries are sorted,
    /// so output is deterministic.
    pub fn to_dic_string(&self) -> String {
        let mut out = String::from("%\n");
        for c in &self.categories {
            let _ = writeln!(out, "{}\t{}", c.id, c.name);
        }
        out.push_str("%\n");
        let ids = |v: &[usize]| {
            v.iter()
                .map(|&p| self.categories[p].id.to_string())
                .collect::<Vec<_>>()
                .join(",")
        };
        let mut exact: Vec<_> = self.exact.iter().collect();
        exact.sort();
        for (k, v) in exact {
            let _ = writeln!(out, "{k}\t{}", ids(v));
        }
        for (k, v) in &self.prefixes {
            let _ = writeln!(out, "{k}*\t{}", ids(v));
        }
        out
    }
}

/// Lowercases, splits on whitespace, and trims non-alphanumeric characters
/// from both ends of each piece. Internal apostrophes survive.
pub fn tokenize(text: &str) -> Vec<String> {
    text.split_whitespace()
        .filter_map(|piece| {
            let t = piece.trim_matches(|c: char| !c.is_alphanumeric());
            (!t.is_empty()).then(|| t.to_lowercase())
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureVector {
    pub encounter_id: String,
    /// Percentages aligned with [`Lexicon::categories`].
    pub values: Vec<f64>,
    pub word_count: usize,
    /// `tone_pos% - tone_neg%`, present when the lexicon defines both.
    pub tone: Option<f64>,
}

impl FeatureVector {
    pub fn get(&self, lexicon: &Lexicon, name: &str) -> Option<f64> {
        if name == TONE_FEATURE {
            return self.tone;
        }
        lexicon.category_index(name).map(|i| self.values[i])
    }

    /// Values in [`Lexicon::feature_names`] order.
    pub fn to_row(&self) -> Vec<f64> {
        let mut row = self.values.clone();
        if let Some(t) = self.tone {
            row.push(t);
        }
        row
    }
}

/// Raw per-category hit counts for a token list.
pub fn category_counts<S: AsRef<str>>(tokens: &[S], lexicon: &Lexicon) -> Vec<usize> {
    let n_cat = lexicon.categories.len();
    let mut counts = vec![0usize; n_cat];
    // stamp[c] == occurrence index + 1 when c was already counted for it
    let mut stamp = vec![0usize; n_cat];
    for (occ, tok) in tokens.iter().enumerate() {
        let tok = tok.as_ref();
        let mark = occ + 1;
        let mut hit = |p: usize| {
            if stamp[p] != mark {
                stamp[p] = mark;
                counts[p] += 1;
            }
        };
        if let Some(ps) = lexicon.exact.get(tok) {
            ps.iter().for_each(|&p| hit(p));
        }
        lexicon.trie.for_each_match(tok, &mut hit);
    }
    counts
}

pub fn extract_features(document: &Document, lexicon: &Lexicon) -> FeatureVector {
    let word_count = document.tokens.len();
    let counts = category_counts(&document.tokens, lexicon);
    let values: Vec<f64> = counts
        .iter()
        .map(|&c| {
            if word_count == 0 {
                0.0
            } else {
                100.0 * c as f64 / word_count as f64
            }
        })
        .collect();
    let tone = match (
        lexicon.category_index(TONE_POS),
        lexicon.category_index(TONE_NEG),
    ) {
        (Some(p), Some(n)) => Some(values[p] - values[n]),
        _ => None,
    };
    FeatureVector {
        encounter_id: document.encounter_id.clone(),
        values,
        word_count,
        tone,
    }
}

/// Builds the lexicon feature matrix for one (speaker config, budget) cell.
/// Encounters whose document is empty keep an all-zero row.
pub fn lexicon_feature_matrix(
    encounters: &[Encounter],
    lexicon: &Lexicon,
    config: SpeakerConfig,
    budget: Budget,
) -> FeatureMatrix {
    let rows: Vec<Vec<f64>> = encounters
        .par_iter()
        .map(|e| {
            let doc = build_document(e, config, budget);
            if doc.is_empty() {
                warn!(encounter = %e.id, %config, "empty document; using zero features");
            }
            extract_features(&doc, lexicon).to_row()
        })
        .collect();
    FeatureMatrix {
        ids: encounters.iter().map(|e| e.id.clone()).collect(),
        feature_names: lexicon.feature_names(),
        rows,
        labels: encounters.iter().map(|e| e.label()).collect(),
    }
}

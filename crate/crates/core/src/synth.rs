//! Synthetic dyadic corpora with known depressive-phenotype effects.
//!
//! Every token is drawn independently: with probability `rate_c` it is a
//! word from category `c`'s list, otherwise a filler word. Positive
//! encounters scale patient rates by the category's depression multiplier.
//! Providers in positive encounters mirror the patient: each provider rate
//! shifts by `mirroring` times the patient's realized deviation from the
//! patient base rate (floored at zero). Word lists are disjoint and match the demo
//! lexicon, so [`expected_rates`] is an exact oracle for lexicon features.

use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, LogNormal};
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};
use thiserror::Error;

use crate::corpus::{Encounter, Speaker, Utterance};

/// Reference prevalence (253 positives of 1108 encounters).
pub const DEFAULT_PREVALENCE: f64 = 253.0 / 1108.0;

#[derive(Debug, Error)]
pub enum SynthError {
    #[error("invalid synthetic spec: {0}")]
    Invalid(String),
    #[error("cannot access {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("invalid spec file: {0}")]
    Json(#[from] serde_json::Error),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CategorySpec {
    pub name: String,
    pub words: Vec<String>,
    pub patient_rate: f64,
    pub provider_rate: f64,
    #[serde(default = "one")]
    pub depression_multiplier: f64,
}

fn one() -> f64 {
    1.0
}

/// Token count distribution, specified by its mean and SD and realized as a
/// lognormal.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LengthSpec {
    pub mean: f64,
    pub sd: f64,
}

impl LengthSpec {
    /// (mu, sigma) of the lognormal with this mean and SD.
    pub fn lognormal_params(&self) -> (f64, f64) {
        let s2 = (1.0 + (self.sd / self.mean).powi(2)).ln();
        (self.mean.ln() - s2 / 2.0, s2.sqrt())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthSpec {
    pub n_encounters: usize,
    #[serde(default = "default_prevalence")]
    pub prevalence: f64,
    pub categories: Vec<CategorySpec>,
    pub filler: Vec<String>,
    /// Provider mirroring strength in [0, 1].
    pub mirroring: f64,
    pub patient_length: LengthSpec,
    pub provider_length: LengthSpec,
    /// Inclusive utterance length range in tokens.
    #[serde(default = "default_utterance_tokens")]
    pub utterance_tokens: (usize, usize),
    /// Share of provider utterances attributed to `other` staff.
    #[serde(default)]
    pub other_fraction: f64,
    #[serde(default)]
    pub seed: u64,
}

fn default_prevalence() -> f64 {
    DEFAULT_PREVALENCE
}

fn default_utterance_tokens() -> (usize, usize) {
    (4, 40)
}

fn words(list: &[&str]) -> Vec<String> {
    list.iter().map(|s| s.to_string()).collect()
}

impl SynthSpec {
    /// A spec whose vocabulary matches [`crate::lexicon::Lexicon::demo`].
    /// Positive encounters use more first-person and sadness words and less
    /// positive tone; providers mirror halfway.
    pub fn demo(n_encounters: usize, seed: u64) -> Self {
        let cat = |name: &str, w: &[&str], pat: f64, prov: f64, mult: f64| CategorySpec {
            name: name.to_string(),
            words: words(w),
            patient_rate: pat,
            provider_rate: prov,
            depression_multiplier: mult,
        };
        Self {
            n_encounters,
            prevalence: DEFAULT_PREVALENCE,
            categories: vec![
                cat("i", &["i", "me", "my", "myself", "i'm", "i've"], 0.0025, 0.0025, 2.0),
                cat("we", &["we", "us", "our", "we're"], 0.004, 0.006, 1.0),
                cat("you", &["you", "your", "yourself", "you're"], 0.006, 0.012, 1.0),
                cat(
                    "tone_pos",
                    &["good", "great", "happy", "glad", "nice", "loved", "hopeful", "thanks"],
                    0.005,
                    0.005,
                    0.7,
                ),
                cat(
                    "tone_neg",
                    &["bad", "awful", "angry", "nervous", "upset", "worried", "pain"],
                    0.003,
                    0.002,
                    1.0,
                ),
                cat(
                    "sadness",
                    &["sad", "crying", "lonely", "tears", "grief", "unhappy", "depressed"],
                    0.0006,
                    0.0006,
                    2.0,
                ),
                cat(
                    "cognition",
                    &["because", "think", "know", "reason", "understand", "realized"],
                    0.012,
                    0.012,
                    1.0,
                ),
                cat(
                    "time",
                    &["today", "yesterday", "tomorrow", "when", "now", "week", "months", "year"],
                    0.01,
                    0.012,
                    1.0,
                ),
                cat(
                    "number",
                    &["one", "two", "three", "five", "ten", "twice", "half"],
                    0.005,
                    0.008,
                    1.0,
                ),
            ],
            filler: words(&[
                "the", "a", "and", "to", "of", "it", "is", "that", "this", "with", "so", "just",
                "like", "was", "have", "go", "get", "yeah", "okay", "right", "well", "take",
                "blood", "pressure", "medicine", "doctor", "back", "little", "said", "going",
                "uh", "um", "mm-hmm", "check", "test", "sure", "then", "there", "they", "he",
                "she", "did", "do", "not", "but", "for", "on", "in", "at", "about",
            ]),
            mirroring: 0.5,
            patient_length: LengthSpec {
                mean: 1034.0,
                sd: 647.0,
            },
            provider_length: LengthSpec {
                mean: 1254.0,
                sd: 776.0,
            },
            utterance_tokens: default_utterance_tokens(),
            other_fraction: 0.1,
            seed,
        }
    }

    pub fn from_json_file(path: &Path) -> Result<Self, SynthError> {
        let text = std::fs::read_to_string(path).map_err(|source| SynthError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let spec: SynthSpec = serde_json::from_str(&text)?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn category_index(&self, name: &str) -> Option<usize> {
        self.categories.iter().position(|c| c.name == name)
    }

    pub fn validate(&self) -> Result<(), SynthError> {
        let bad = |m: String| Err(SynthError::Invalid(m));
        if self.n_encounters == 0 {
            return bad("n_encounters must be positive".into());
        }
        if !(self.prevalence > 0.0 && self.prevalence < 1.0) {
            return bad(format!("prevalence {} outside (0, 1)", self.prevalence));
        }
        if !(0.0..=1.0).contains(&self.mirroring) {
            return bad(format!("mirroring {} outside [0, 1]", self.mirroring));
        }
        if self.filler.is_empty() {
            return bad("filler vocabulary is empty".into());
        }
        for c in &self.categories {
            let rates = [c.patient_rate, c.provider_rate, c.depression_multiplier];
            if rates.iter().any(|r| !r.is_finite() || *r < 0.0) {
                return bad(format!("category '{}' has a negative or non-finite rate", c.name));
            }
            if c.words.is_empty() {
                return bad(format!("category '{}' has no words", c.name));
            }
        }
        let sums = [
            ("patient (negative)", self.categories.iter().map(|c| c.patient_rate).sum::<f64>()),
            (
                "patient (positive)",
                self.categories
                    .iter()
                    .map(|c| c.patient_rate * c.depression_multiplier)
                    .sum::<f64>(),
            ),
            ("provider", self.categories.iter().map(|c| c.provider_rate).sum::<f64>()),
        ];
        for (what, s) in sums {
            if s > 1.0 {
                return bad(format!("{what} rates sum to {s} > 1"));
            }
        }
        for (what, l) in [("patient", self.patient_length), ("provider", self.provider_length)] {
            if !(l.mean > 0.0 && l.sd >= 0.0 && l.mean.is_finite() && l.sd.is_finite()) {
                return bad(format!("{what} length needs mean > 0 and sd >= 0"));
            }
        }
        let (lo, hi) = self.utterance_tokens;
        if lo == 0 || hi < lo {
            return bad("utterance_tokens must satisfy 1 <= min <= max".into());
        }
        if !(0.0..=1.0).contains(&self.other_fraction) {
            return bad("other_fraction outside [0, 1]".into());
        }
        Ok(())
    }
}

/// Per-encounter realized rates (fractions, not percentages), aligned with
/// the spec's categories.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EncounterTruth {
    pub id: String,
    pub positive: bool,
    pub patient_tokens: usize,
    pub provider_tokens: usize,
    pub patient_rates: Vec<f64>,
    pub provider_rates: Vec<f64>,
}

/// Expected lexicon percentages for one role, by group.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupMeans {
    pub negative: Vec<f64>,
    pub positive: Vec<f64>,
}

impl GroupMeans {
    pub fn effect(&self, i: usize) -> f64 {
        self.positive[i] - self.negative[i]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExpectedRates {
    pub categories: Vec<String>,
    pub patient: GroupMeans,
    pub provider: GroupMeans,
    pub combined: GroupMeans,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    pub encounters: Vec<EncounterTruth>,
    pub expected: ExpectedRates,
}

fn sample_length(dist: &LogNormal<f64>, rng: &mut ChaCha8Rng) -> usize {
    (dist.sample(rng).round() as usize).max(1)
}

fn lognormal(l: LengthSpec) -> LogNormal<f64> {
    let (mu, sigma) = l.lognormal_params();
    LogNormal::new(mu, sigma).expect("validated length spec")
}

/// Draws `len` tokens; returns the words and per-category hit counts.
fn emit_words<'a>(
    spec: &'a SynthSpec,
    rates: &[f64],
    len: usize,
    rng: &mut ChaCha8Rng,
) -> (Vec<&'a str>, Vec<usize>) {
    let mut counts = vec![0usize; rates.len()];
    let mut out = Vec::with_capacity(len);
    for _ in 0..len {
        let u: f64 = rng.random();
        let mut acc = 0.0;
        let mut picked = None;
        for (c, &r) in rates.iter().enumerate() {
            acc += r;
            if u < acc {
                picked = Some(c);
                break;
            }
        }
        let word = match picked {
            Some(c) => {
                counts[c] += 1;
                let list = &spec.categories[c].words;
                &list[rng.random_range(0..list.len())]
            }
            None => &spec.filler[rng.random_range(0..spec.filler.len())],
        };
        out.push(word.as_str());
    }
    (out, counts)
}

fn sentence(words: &[&str]) -> String {
    let mut s = words.join(" ");
    if let Some(first) = s.get(..1) {
        let upper = first.to_uppercase();
        s.replace_range(..1, &upper);
    }
    s.push('.');
    s
}

fn split_utterances<'a>(
    words: &'a [&'a str],
    (lo, hi): (usize, usize),
    rng: &mut ChaCha8Rng,
) -> Vec<&'a [&'a str]> {
    let mut out = Vec::new();
    let mut at = 0;
    while at < words.len() {
        let n = rng.random_range(lo..=hi).min(words.len() - at);
        out.push(&words[at..at + n]);
        at += n;
    }
    out
}

/// Generates a corpus and its ground truth. Output depends only on `spec`
/// (including its seed).
pub fn generate_corpus(spec: &SynthSpec) -> Result<(Vec<Encounter>, GroundTruth), SynthError> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let n = spec.n_encounters;
    let n_pos = ((n as f64 * spec.prevalence).round() as usize).clamp(1, n.saturating_sub(1).max(1));
    let mut positive: Vec<bool> = (0..n).map(|i| i < n_pos).collect();
    positive.shuffle(&mut rng);

    let pat_len = lognormal(spec.patient_length);
    let prov_len = lognormal(spec.provider_length);
    let width = n.to_string().len().max(4);

    let mut encounters = Vec::with_capacity(n);
    let mut truths = Vec::with_capacity(n);
    for (i, &pos) in positive.iter().enumerate() {
        let id = format!("syn-{i:0width$}");
        let phq9 = if pos {
            rng.random_range(10..=27u8)
        } else {
            rng.random_range(0..=9u8)
        };
        let lp = sample_length(&pat_len, &mut rng);
        let lq = sample_length(&prov_len, &mut rng);

        let pat_rates: Vec<f64> = spec
            .categories
            .iter()
            .map(|c| c.patient_rate * if pos { c.depression_multiplier } else { 1.0 })
            .collect();
        let (pat_words, pat_counts) = emit_words(spec, &pat_rates, lp, &mut rng);
        let realized: Vec<f64> = pat_counts.iter().map(|&k| k as f64 / lp as f64).collect();

        let prov_rates: Vec<f64> = spec
            .categories
            .iter()
            .zip(&realized)
            .map(|(c, &r)| {
                if pos {
                    (c.provider_rate + spec.mirroring * (r - c.patient_rate)).max(0.0)
                } else {
                    c.provider_rate
                }
            })
            .collect();
        let (prov_words, prov_counts) = emit_words(spec, &prov_rates, lq, &mut rng);

        let pat_utts = split_utterances(&pat_words, spec.utterance_tokens, &mut rng);
        let prov_utts = split_utterances(&prov_words, spec.utterance_tokens, &mut rng);
        let mut utterances = Vec::with_capacity(pat_utts.len() + prov_utts.len());
        let (mut pi, mut qi) = (0, 0);
        // provider opens; then alternate until one side runs out
        while pi < pat_utts.len() || qi < prov_utts.len() {
            if qi < prov_utts.len() && (qi <= pi || pi >= pat_utts.len()) {
                let speaker = if rng.random::<f64>() < spec.other_fraction {
                    Speaker::Other
                } else {
                    Speaker::Doctor
                };
                utterances.push(Utterance::new(speaker, sentence(prov_utts[qi])));
                qi += 1;
            } else {
                utterances.push(Utterance::new(Speaker::Patient, sentence(pat_utts[pi])));
                pi += 1;
            }
        }

        truths.push(EncounterTruth {
            id: id.clone(),
            positive: pos,
            patient_tokens: lp,
            provider_tokens: lq,
            patient_rates: realized,
            provider_rates: prov_counts.iter().map(|&k| k as f64 / lq as f64).collect(),
        });
        encounters.push(Encounter {
            id,
            phq9,
            utterances,
        });
    }
    Ok((
        encounters,
        GroundTruth {
            encounters: truths,
            expected: expected_rates(spec)?,
        },
    ))
}

/// Expected patient share `E[Lp / (Lp + Lq)]` of combined tokens, by
/// quantile-midpoint quadrature over the two rounded lognormal lengths.
fn expected_patient_share(spec: &SynthSpec) -> f64 {
    const NODES: usize = 400;
    let std_normal = Normal::new(0.0, 1.0).expect("standard normal");
    let z: Vec<f64> = (0..NODES)
        .map(|i| std_normal.inverse_cdf((i as f64 + 0.5) / NODES as f64))
        .collect();
    let lengths = |l: LengthSpec| -> Vec<f64> {
        let (mu, sigma) = l.lognormal_params();
        z.iter()
            .map(|z| ((mu + sigma * z).exp().round()).max(1.0))
            .collect()
    };
    let lp = lengths(spec.patient_length);
    let lq = lengths(spec.provider_length);
    let mut acc = 0.0;
    for a in &lp {
        for b in &lq {
            acc += a / (a + b);
        }
    }
    acc / (NODES * NODES) as f64
}

/// Expected per-group lexicon percentages under the generator.
///
/// Patient values are exact. Provider values are exact whenever the floor
/// at zero cannot bind (`provider_rate >= mirroring * patient_rate`).
/// Combined values mix the two by the expected patient share of tokens,
/// which is computed numerically.
pub fn expected_rates(spec: &SynthSpec) -> Result<ExpectedRates, SynthError> {
    spec.validate()?;
    let share = expected_patient_share(spec);
    let cats = &spec.categories;
    let pat_neg: Vec<f64> = cats.iter().map(|c| c.patient_rate).collect();
    let pat_pos: Vec<f64> = cats
        .iter()
        .map(|c| c.patient_rate * c.depression_multiplier)
        .collect();
    let prov_neg: Vec<f64> = cats.iter().map(|c| c.provider_rate).collect();
    let prov_pos: Vec<f64> = cats
        .iter()
        .zip(&pat_pos)
        .map(|(c, &p)| c.provider_rate + spec.mirroring * (p - c.patient_rate))
        .collect();
    let mix = |p: &[f64], q: &[f64]| -> Vec<f64> {
        p.iter()
            .zip(q)
            .map(|(a, b)| 100.0 * (share * a + (1.0 - share) * b))
            .collect()
    };
    let pct = |v: &[f64]| v.iter().map(|x| 100.0 * x).collect::<Vec<_>>();
    Ok(ExpectedRates {
        categories: cats.iter().map(|c| c.name.clone()).collect(),
        combined: GroupMeans {
            negative: mix(&pat_neg, &prov_neg),
            positive: mix(&pat_pos, &prov_pos),
        },
        patient: GroupMeans {
            negative: pct(&pat_neg),
            positive: pct(&pat_pos),
        },
        provider: GroupMeans {
            negative: pct(&prov_neg),
            positive: pct(&prov_pos),
        },
    })
}

//! Zero-shot risk scoring through an OpenAI-style chat-completion endpoint.
//!
//! Each document becomes a fixed prompt; the first decimal in the reply is
//! the risk score. Out-of-range values are clamped and unparseable replies
//! are retried, then marked failed. Failed records are excluded from
//! metrics, never imputed.

use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::Duration;

use regex::Regex;
use serde::{Deserialize, Serialize};
use thiserror::Error;
use tracing::{debug, warn};

use crate::corpus::{Document, Party};

/// Bumped whenever the prompt text changes, so stored scores can be tied to
/// the template that produced them.
pub const PROMPT_VERSION: &str = "dyadscreen-zeroshot-v1";

pub const API_KEY_ENV: &str = "DYADSCREEN_API_KEY";

const SYSTEM_INSTRUCTION: &str = "You are an experienced psychiatrist reviewing the transcript of a \
primary care visit between a patient and their provider. Estimate the probability that the \
patient is at high risk for depression. No training examples or labels are provided; rely on \
your clinical judgment of the conversation alone. Respond with a single number and nothing \
else: output only a decimal between 0.0 (low risk) and 1.0 (high risk).";

#[derive(Debug, Error)]
pub enum ZeroShotError {
    #[error("endpoint unreachable for all {0} documents; last error: {1}")]
    Unreachable(usize, String),
    #[error("cannot access score file {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("invalid score file: {0}")]
    Csv(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChatMessage {
    pub role: String,
    pub content: String,
}

impl ChatMessage {
    fn new(role: &str, content: String) -> Self {
        Self {
            role: role.to_string(),
            content,
        }
    }
}

fn transcript_section(document: &Document) -> String {
    let mut out = String::from("Transcript:\n");
    for turn in &document.turns {
        let tag = match turn.party {
            Party::Patient => "PATIENT",
            Party::Provider => "PROVIDER",
        };
        out.push_str(tag);
        out.push_str(": ");
        out.push_str(&document.turn_tokens(turn).join(" "));
        out.push('\n');
    }
    out
}

/// System and user messages for one document.
pub fn build_messages(document: &Document) -> Vec<ChatMessage> {
    vec![
        ChatMessage::new("system", SYSTEM_INSTRUCTION.to_string()),
        ChatMessage::new("user", transcript_section(document)),
    ]
}

/// The full prompt as a single text: instruction, blank line, transcript.
pub fn build_prompt(document: &Document) -> String {
    format!("{SYSTEM_INSTRUCTION}\n\n{}", transcript_section(document))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScoreStatus {
    Ok,
    Clamped,
    Failed,
}

impl ScoreStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            ScoreStatus::Ok => "ok",
            ScoreStatus::Clamped => "clamped",
            ScoreStatus::Failed => "failed",
        }
    }

    fn parse(s: &str) -> Option<Self> {
        match s {
            "ok" => Some(ScoreStatus::Ok),
            "clamped" => Some(ScoreStatus::Clamped),
            "failed" => Some(ScoreStatus::Failed),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ParsedScore {
    /// Score in [0, 1]; `None` iff the status is failed.
    pub score: Option<f64>,
    pub status: ScoreStatus,
    /// The number as written in the reply, before clamping.
    pub raw: Option<f64>,
}

fn number_pattern() -> &'static Regex {
    static RE: std::sync::OnceLock<Regex> = std::sync::OnceLock::new();
    RE.get_or_init(|| Regex::new(r"\d+(?:\.\d+)?|\.\d+").expect("valid regex"))
}

/// Extracts the first decimal literal and clamps it to [0, 1]. A '-' directly
/// before the number counts as a sign unless it follows a letter or digit
/// (so "PHQ-9" reads as 9).
pub fn parse_score(response: &str) -> ParsedScore {
    let Some(m) = number_pattern().find(response) else {
        return ParsedScore {
            score: None,
            status: ScoreStatus::Failed,
            raw: None,
        };
    };
    let mut value: f64 = match m.as_str().parse() {
        Ok(v) => v,
        Err(_) => {
            return ParsedScore {
                score: None,
                status: ScoreStatus::Failed,
                raw: None,
            }
        }
    };
    let before = &response[..m.start()];
    if let Some(rest) = before.strip_suffix('-') {
        if !rest.chars().next_back().is_some_and(char::is_alphanumeric) {
            value = -value;
        }
    }
    let clamped = value.clamp(0.0, 1.0);
    ParsedScore {
        score: Some(clamped),
        status: if clamped == value {
            ScoreStatus::Ok
        } else {
            ScoreStatus::Clamped
        },
        raw: Some(value),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScoreRecord {
    pub encounter_id: String,
    pub score: Option<f64>,
    pub status: ScoreStatus,
}

/// Something that turns chat messages into a completion text.
pub trait ChatClient: Sync {
    /// `Err` carries a transport-level failure description.
    fn complete(&self, messages: &[ChatMessage]) -> Result<String, String>;
}

#[derive(Debug, Clone)]
pub struct EndpointConfig {
    /// Full URL of the chat-completions route.
    pub url: String,
    pub model: String,
    pub api_key: Option<String>,
    pub temperature: f64,
    pub timeout: Duration,
}

impl EndpointConfig {
    /// Reads the bearer token from `DYADSCREEN_API_KEY` when set.
    pub fn from_env(url: impl Into<String>, model: impl Into<String>) -> Self {
        Self {
            url: url.into(),
            model: model.into(),
            api_key: std::env::var(API_KEY_ENV).ok().filter(|k| !k.is_empty()),
            temperature: 0.0,
            timeout: Duration::from_secs(120),
        }
    }
}

#[derive(Serialize)]
struct ChatRequest<'a> {
    model: &'a str,
    messages: &'a [ChatMessage],
    temperature: f64,
}

#[derive(Deserialize)]
struct ChatResponse {
    choices: Vec<Choice>,
}

#[derive(Deserialize)]
struct Choice {
    message: ChoiceMessage,
}

#[derive(Deserialize)]
struct ChoiceMessage {
    content: Option<String>,
}

pub struct HttpChatClient {
    config: EndpointConfig,
    agent: ureq::Agent,
}

impl HttpChatClient {
    pub fn new(config: EndpointConfig) -> Self {
        let agent = ureq::Agent::config_builder()
            .timeout_global(Some(config.timeout))
            .build()
            .into();
        Self { config, agent }
    }
}

impl ChatClient for HttpChatClient {
    fn complete(&self, messages: &[ChatMessage]) -> Result<String, String> {
        let body = ChatRequest {
            model: &self.config.model,
            messages,
            temperature: self.config.temperature,
        };
        let mut req = self.agent.post(&self.config.url);
        if let Some(key) = &self.config.api_key {
            req = req.header("Authorization", &format!("Bearer {key}"));
        }
        let mut resp = req.send_json(&body).map_err(|e| e.to_string())?;
        let parsed: ChatResponse = resp.body_mut().read_json().map_err(|e| e.to_string())?;
        Ok(parsed
            .choices
            .into_iter()
            .next()
            .and_then(|c| c.message.content)
            .unwrap_or_default())
    }
}

#[derive(Debug, Clone, Copy)]
pub struct ScoringOptions {
    /// Extra attempts after the first, per document.
    pub retries: usize,
    pub concurrency: usize,
    /// Sleep before retry `n` is `n * backoff`.
    pub backoff: Duration,
}

impl Default for ScoringOptions {
    fn default() -> Self {
        Self {
            retries: 3,
            concurrency: 4,
            backoff: Duration::from_millis(500),
        }
    }
}

struct Attempted {
    record: ScoreRecord,
    reached_endpoint: bool,
    last_error: Option<String>,
}

fn score_one(client: &dyn ChatClient, doc: &Document, opts: &ScoringOptions) -> Attempted {
    let messages = build_messages(doc);
    let mut reached = false;
    let mut last_error = None;
    for attempt in 0..=opts.retries {
        if attempt > 0 && !opts.backoff.is_zero() {
            std::thread::sleep(opts.backoff * attempt as u32);
        }
        match client.complete(&messages) {
            Err(e) => {
                debug!(encounter = %doc.encounter_id, attempt, error = %e, "transport error");
                last_error = Some(e);
            }
            Ok(text) => {
                reached = true;
                let parsed = parse_score(&text);
                match parsed.status {
                    ScoreStatus::Failed => {
                        debug!(encounter = %doc.encounter_id, attempt, "no score in reply");
                    }
                    status => {
                        if status == ScoreStatus::Clamped {
                            warn!(
                                encounter = %doc.encounter_id,
                                raw = parsed.raw.unwrap_or(f64::NAN),
                                "score clamped to [0, 1]"
                            );
                        }
                        return Attempted {
                            record: ScoreRecord {
                                encounter_id: doc.encounter_id.clone(),
                                score: parsed.score,
                                status,
                            },
                            reached_endpoint: true,
                            last_error,
                        };
                    }
                }
            }
        }
    }
    warn!(encounter = %doc.encounter_id, "scoring failed after retries");
    Attempted {
        record: ScoreRecord {
            encounter_id: doc.encounter_id.clone(),
            score: None,
            status: ScoreStatus::Failed,
        },
        reached_endpoint: reached,
        last_error,
    }
}

/// Scores every document with bounded parallelism. Output order matches
/// input order.
pub fn score_corpus(
    documents: &[Document],
    client: &dyn ChatClient,
    opts: &ScoringOptions,
) -> Result<Vec<ScoreRecord>, ZeroShotError> {
    let next = AtomicUsize::new(0);
    let slots: Mutex<Vec<Option<Attempted>>> =
        Mutex::new((0..documents.len()).map(|_| None).collect());
    let workers = opts.concurrency.clamp(1, documents.len().max(1));
    std::thread::scope(|s| {
        for _ in 0..workers {
            s.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                if i >= documents.len() {
                    break;
                }
                let done = score_one(client, &documents[i], opts);
                slots.lock().expect("score slots lock")[i] = Some(done);
            });
        }
    });
    let results: Vec<Attempted> = slots
        .into_inner()
        .expect("score slots lock")
        .into_iter()
        .map(|a| a.expect("every document scored"))
        .collect();
    if !results.is_empty() && results.iter().all(|a| !a.reached_endpoint) {
        let last = results
            .iter()
            .rev()
            .find_map(|a| a.last_error.clone())
            .unwrap_or_default();
        return Err(ZeroShotError::Unreachable(results.len(), last));
    }
    Ok(results.into_iter().map(|a| a.record).collect())
}

/// Writes `encounter_id,score,status`; failed records have an empty score.
pub fn write_scores(path: &Path, records: &[ScoreRecord]) -> Result<(), ZeroShotError> {
    let csv_err = |e: csv::Error| ZeroShotError::Csv(e.to_string());
    let mut w = csv::Writer::from_path(path).map_err(csv_err)?;
    w.write_record(["encounter_id", "score", "status"])
        .map_err(csv_err)?;
    for r in records {
        let score = r.score.map(|s| s.to_string()).unwrap_or_default();
        w.write_record([r.encounter_id.as_str(), &score, r.status.as_str()])
            .map_err(csv_err)?;
    }
    w.flush().map_err(|source| ZeroShotError::Io {
        path: path.to_path_buf(),
        source,
    })
}

pub fn read_scores(path: &Path) -> Result<Vec<ScoreRecord>, ZeroShotError> {
    let csv_err = |e: csv::Error| ZeroShotError::Csv(e.to_string());
    let mut r = csv::Reader::from_path(path).map_err(csv_err)?;
    let header = r.headers().map_err(csv_err)?.clone();
    if header.iter().collect::<Vec<_>>() != ["encounter_id", "score", "status"] {
        return Err(ZeroShotError::Csv(
            "header must be encounter_id,score,status".into(),
        ));
    }
    let mut out = Vec::new();
    for (i, rec) in r.records().enumerate() {
        let rec = rec.map_err(csv_err)?;
        let line = i + 2;
        let bad = |what: &str| ZeroShotError::Csv(format!("{what} at line {line}"));
        let status = ScoreStatus::parse(rec[2].trim()).ok_or_else(|| bad("unknown status"))?;
        let score = match (status, rec[1].trim()) {
            (ScoreStatus::Failed, "") => None,
            (ScoreStatus::Failed, _) => return Err(bad("failed record with a score")),
            (_, s) => {
                let v: f64 = s.parse().map_err(|_| bad("unparseable score"))?;
                if !(0.0..=1.0).contains(&v) {
                    return Err(bad("score outside [0, 1]"));
                }
                Some(v)
            }
        };
        out.push(ScoreRecord {
            encounter_id: rec[0].to_string(),
            score,
            status,
        });
    }
    Ok(out)
}

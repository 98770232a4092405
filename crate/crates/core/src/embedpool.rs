//! Chunk export for an external sentence embedder, vector ingestion, and
//! mean pooling into one vector per document.

use std::collections::{BTreeMap, HashMap};
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;
use tracing::warn;

use crate::corpus::{build_document, Budget, Document, Encounter, SpeakerConfig};
use crate::model::FeatureMatrix;

pub const DEFAULT_CHUNK_SIZE: usize = 128;

#[derive(Debug, Error)]
pub enum EmbedError {
    #[error("cannot access {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("malformed record at line {line}: {source}")]
    Malformed {
        line: usize,
        source: serde_json::Error,
    },
    #[error("missing vector {0}#{1}")]
    MissingVector(String, usize),
    #[error("vector for unknown chunk {0}#{1}")]
    UnknownChunk(String, usize),
    #[error("duplicate vector for {0}#{1}")]
    DuplicateVector(String, usize),
    #[error("dimension mismatch at {id}#{index}: expected {expected}, got {actual}")]
    DimensionMismatch {
        id: String,
        index: usize,
        expected: usize,
        actual: usize,
    },
    #[error("non-finite component in vector {0}#{1}")]
    NonFinite(String, usize),
    #[error("cannot pool zero chunks; drop the document or zero-fill it at the known dimension")]
    NoChunks,
    #[error("chunk vectors have inconsistent dimensions")]
    RaggedChunks,
    #[error("budget {budget} is not a multiple of chunk size {chunk_size}; truncated chunks would not match the exported ones")]
    UnalignedBudget { budget: usize, chunk_size: usize },
    #[error("embedding sidecar contains no vectors")]
    Empty,
}

/// Splits the token list into consecutive chunks of `chunk_size` tokens; the
/// last chunk may be shorter.
pub fn chunk_document(document: &Document, chunk_size: usize) -> Vec<&[String]> {
    assert!(chunk_size >= 1, "chunk_size must be positive");
    document.tokens.chunks(chunk_size).collect()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChunkEntry {
    pub encounter_id: String,
    pub chunk_index: usize,
    pub text: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ChunkManifest {
    pub entries: Vec<ChunkEntry>,
}

impl ChunkManifest {
    pub fn from_documents<'a>(
        documents: impl IntoIterator<Item = &'a Document>,
        chunk_size: usize,
    ) -> Self {
        let mut entries = Vec::new();
        for doc in documents {
            for (i, chunk) in chunk_document(doc, chunk_size).into_iter().enumerate() {
                entries.push(ChunkEntry {
                    encounter_id: doc.encounter_id.clone(),
                    chunk_index: i,
                    text: chunk.join(" "),
                });
            }
        }
        Self { entries }
    }

    pub fn write_jsonl(&self, path: &Path) -> Result<(), EmbedError> {
        write_jsonl(path, &self.entries)
    }

    pub fn read_jsonl(path: &Path) -> Result<Self, EmbedError> {
        Ok(Self {
            entries: read_jsonl(path)?,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VectorRecord {
    pub encounter_id: String,
    pub chunk_index: usize,
    pub vector: Vec<f64>,
}

pub fn write_vectors(path: &Path, records: &[VectorRecord]) -> Result<(), EmbedError> {
    write_jsonl(path, records)
}

fn write_jsonl<T: Serialize>(path: &Path, items: &[T]) -> Result<(), EmbedError> {
    let io_err = |source| EmbedError::Io {
        path: path.to_path_buf(),
        source,
    };
    let mut w = BufWriter::new(File::create(path).map_err(io_err)?);
    for item in items {
        serde_json::to_writer(&mut w, item).map_err(|e| io_err(e.into()))?;
        w.write_all(b"\n").map_err(io_err)?;
    }
    w.flush().map_err(io_err)
}

fn read_jsonl<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<Vec<T>, EmbedError> {
    let io_err = |source| EmbedError::Io {
        path: path.to_path_buf(),
        source,
    };
    let reader = BufReader::new(File::open(path).map_err(io_err)?);
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line.map_err(io_err)?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(
            serde_json::from_str(&line)
                .map_err(|source| EmbedError::Malformed { line: i + 1, source })?,
        );
    }
    Ok(out)
}

/// Chunk vectors per encounter, ordered by chunk index.
pub type ChunkVectors = BTreeMap<String, Vec<Vec<f64>>>;

pub fn ingest_vectors(path: &Path, manifest: &ChunkManifest) -> Result<ChunkVectors, EmbedError> {
    match_vectors(read_jsonl(path)?, manifest)
}

/// Matches sidecar records to manifest entries one-to-one.
pub fn match_vectors(
    records: Vec<VectorRecord>,
    manifest: &ChunkManifest,
) -> Result<ChunkVectors, EmbedError> {
    let wanted: std::collections::HashSet<(&str, usize)> = manifest
        .entries
        .iter()
        .map(|e| (e.encounter_id.as_str(), e.chunk_index))
        .collect();
    let mut dim = None;
    let mut by_key: HashMap<(String, usize), Vec<f64>> = HashMap::new();
    for r in records {
        if !wanted.contains(&(r.encounter_id.as_str(), r.chunk_index)) {
            return Err(EmbedError::UnknownChunk(r.encounter_id, r.chunk_index));
        }
        let expected = *dim.get_or_insert(r.vector.len());
        if r.vector.len() != expected {
            return Err(EmbedError::DimensionMismatch {
                id: r.encounter_id,
                index: r.chunk_index,
                expected,
                actual: r.vector.len(),
            });
        }
        if r.vector.iter().any(|v| !v.is_finite()) {
            return Err(EmbedError::NonFinite(r.encounter_id, r.chunk_index));
        }
        let key = (r.encounter_id, r.chunk_index);
        if by_key.contains_key(&key) {
            return Err(EmbedError::DuplicateVector(key.0, key.1));
        }
        by_key.insert(key, r.vector);
    }
    let mut out: ChunkVectors = BTreeMap::new();
    for e in &manifest.entries {
        let v = by_key
            .remove(&(e.encounter_id.clone(), e.chunk_index))
            .ok_or_else(|| EmbedError::MissingVector(e.encounter_id.clone(), e.chunk_index))?;
        let list = out.entry(e.encounter_id.clone()).or_default();
        if list.len() != e.chunk_index {
            // manifests list chunks contiguously from 0
            return Err(EmbedError::MissingVector(e.encounter_id.clone(), list.len()));
        }
        list.push(v);
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct DocumentVector {
    pub encounter_id: String,
    pub vector: Vec<f64>,
}

impl DocumentVector {
    pub fn dim(&self) -> usize {
        self.vector.len()
    }
}

/// Component-wise arithmetic mean of the chunk vectors.
pub fn pool_mean<V: AsRef<[f64]>>(chunks: &[V]) -> Result<Vec<f64>, EmbedError> {
    let first = chunks.first().ok_or(EmbedError::NoChunks)?.as_ref();
    let dim = first.len();
    let mut acc = vec![0.0; dim];
    for c in chunks {
        let c = c.as_ref();
        if c.len() != dim {
            return Err(EmbedError::RaggedChunks);
        }
        for (a, v) in acc.iter_mut().zip(c) {
            *a += v;
        }
    }
    let n = chunks.len() as f64;
    acc.iter_mut().for_each(|a| *a /= n);
    Ok(acc)
}

/// Pooled document vectors for one (speaker config, budget) cell.
///
/// `vectors` holds chunk embeddings of the untruncated documents for the
/// same speaker configuration. A truncated document's chunks are a prefix of
/// those when the budget is a multiple of `chunk_size`. Empty documents are
/// zero-filled.
pub fn embedding_feature_matrix(
    encounters: &[Encounter],
    vectors: &ChunkVectors,
    config: SpeakerConfig,
    budget: Budget,
    chunk_size: usize,
) -> Result<FeatureMatrix, EmbedError> {
    let dim = vectors
        .values()
        .flat_map(|v| v.first())
        .map(Vec::len)
        .next()
        .ok_or(EmbedError::Empty)?;
    let mut rows = Vec::with_capacity(encounters.len());
    for e in encounters {
        let full = build_document(e, config, Budget::Full);
        let n_tokens = match budget {
            Budget::First(b) => {
                if b % chunk_size != 0 && full.tokens.len() > b {
                    return Err(EmbedError::UnalignedBudget {
                        budget: b,
                        chunk_size,
                    });
                }
                full.tokens.len().min(b)
            }
            Budget::Full => full.tokens.len(),
        };
        let n_chunks = n_tokens.div_ceil(chunk_size);
        if n_chunks == 0 {
            warn!(encounter = %e.id, %config, "empty document; zero-filling embedding");
            rows.push(vec![0.0; dim]);
            continue;
        }
        let have = vectors.get(&e.id).map_or(&[][..], Vec::as_slice);
        if have.len() < n_chunks {
            return Err(EmbedError::MissingVector(e.id.clone(), have.len()));
        }
        rows.push(pool_mean(&have[..n_chunks])?);
    }
    Ok(FeatureMatrix {
        ids: encounters.iter().map(|e| e.id.clone()).collect(),
        feature_names: (0..dim).map(|i| format!("emb_{i}")).collect(),
        rows,
        labels: encounters.iter().map(|e| e.label()).collect(),
    })
}

/// Deterministic stand-in for a sentence embedder: the mean of seeded
/// per-token hash vectors. Texts that share words get correlated vectors, so
/// lexical signal survives pooling.
#[derive(Debug, Clone)]
pub struct PseudoEmbedder {
    dim: usize,
    seed: u64,
    cache: HashMap<String, Vec<f64>>,
}

impl PseudoEmbedder {
    pub fn new(dim: usize, seed: u64) -> Self {
        Self {
            dim,
            seed,
            cache: HashMap::new(),
        }
    }

    fn token_vector(&mut self, token: &str) -> &[f64] {
        if !self.cache.contains_key(token) {
            let mut h = Sha256::new();
            h.update(self.seed.to_le_bytes());
            h.update(token.as_bytes());
            let digest = h.finalize();
            let mut key = [0u8; 32];
            key.copy_from_slice(&digest);
            let mut rng = ChaCha8Rng::from_seed(key);
            let v = (0..self.dim).map(|_| rng.random_range(-1.0..1.0)).collect();
            self.cache.insert(token.to_string(), v);
        }
        &self.cache[token]
    }

    pub fn embed(&mut self, text: &str) -> Vec<f64> {
        let mut acc = vec![0.0; self.dim];
        let mut n = 0usize;
        for tok in text.split_whitespace() {
            let v = self.token_vector(tok);
            for (a, x) in acc.iter_mut().zip(v) {
                *a += x;
            }
            n += 1;
        }
        if n > 0 {
            acc.iter_mut().for_each(|a| *a /= n as f64);
        }
        acc
    }

    /// Embeds every manifest entry, producing sidecar records.
    pub fn embed_manifest(&mut self, manifest: &ChunkManifest) -> Vec<VectorRecord> {
        manifest
            .entries
            .iter()
            .map(|e| VectorRecord {
                encounter_id: e.encounter_id.clone(),
                chunk_index: e.chunk_index,
                vector: self.embed(&e.text),
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn doc_of_len(n: usize) -> Document {
        Document {
            encounter_id: "enc-0001".into(),
            config: SpeakerConfig::Combined,
            tokens: (0..n).map(|i| format!("w{i}")).collect(),
            token_budget: None,
            turns: vec![],
        }
    }

    #[test]
    fn chunk_counts() {
        let d = doc_of_len(2374);
        let chunks = chunk_document(&d, 128);
        assert_eq!(chunks.len(), 19);
        assert_eq!(chunks.last().unwrap().len(), 70);
        assert_eq!(chunk_document(&doc_of_len(128), 128).len(), 1);
        assert!(chunk_document(&doc_of_len(0), 128).is_empty());
        let rejoined: Vec<String> = chunks.concat();
        assert_eq!(rejoined, d.tokens);
    }

    #[test]
    fn pooling_examples() {
        assert_eq!(pool_mean(&[vec![1.0, 2.0], vec![3.0, 4.0]]).unwrap(), vec![2.0, 3.0]);
        assert_eq!(pool_mean(&[vec![5.0, -1.0]]).unwrap(), vec![5.0, -1.0]);
        assert_eq!(
            pool_mean(&[vec![1.0, 1.0], vec![1.0, 1.0], vec![4.0, 7.0]]).unwrap(),
            vec![2.0, 3.0]
        );
        assert!(matches!(pool_mean::<Vec<f64>>(&[]), Err(EmbedError::NoChunks)));
        assert!(matches!(
            pool_mean(&[vec![1.0], vec![1.0, 2.0]]),
            Err(EmbedError::RaggedChunks)
        ));
    }

    fn manifest2() -> ChunkManifest {
        ChunkManifest::from_documents([&doc_of_len(3)], 2)
    }

    fn rec(i: usize, v: Vec<f64>) -> VectorRecord {
        VectorRecord {
            encounter_id: "enc-0001".into(),
            chunk_index: i,
            vector: v,
        }
    }

    #[test]
    fn matching_vectors() {
        let m = manifest2();
        assert_eq!(m.entries.len(), 2);
        assert_eq!(m.entries[1].text, "w2");
        let ok = match_vectors(vec![rec(1, vec![0.0; 4]), rec(0, vec![1.0; 4])], &m).unwrap();
        assert_eq!(ok["enc-0001"].len(), 2);
        assert_eq!(ok["enc-0001"][0], vec![1.0; 4]);

        let err = match_vectors(vec![rec(0, vec![1.0; 4])], &m).unwrap_err();
        assert_eq!(err.to_string(), "missing vector enc-0001#1");

        let err = match_vectors(vec![rec(0, vec![1.0; 4]), rec(1, vec![1.0; 5])], &m).unwrap_err();
        assert!(matches!(err, EmbedError::DimensionMismatch { expected: 4, actual: 5, .. }));

        let err = match_vectors(vec![rec(7, vec![1.0; 4])], &m).unwrap_err();
        assert!(matches!(err, EmbedError::UnknownChunk(_, 7)));
    }

    #[test]
    fn pseudo_embeddings_are_deterministic() {
        let mut a = PseudoEmbedder::new(8, 3);
        let mut b = PseudoEmbedder::new(8, 3);
        assert_eq!(a.embed("i feel sad"), b.embed("i feel sad"));
        assert_ne!(a.embed("i feel sad"), PseudoEmbedder::new(8, 4).embed("i feel sad"));
        assert_eq!(a.embed(""), vec![0.0; 8]);
    }
}

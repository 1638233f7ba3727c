//! Word-embedding tables in the common whitespace-separated text format
//! (`word v1 v2 ... vd` per line), phrase vectors and cosine similarity.

use std::collections::HashMap;
use std::fs;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::util::{derive_seed, string_key};

/// 50-dimensional table bundled with the crate and used when no table is
/// supplied.
pub const BUNDLED_FIXTURE: &str = include_str!("../data/glove-fixture-50d.txt");
pub const BUNDLED_FIXTURE_NAME: &str = "builtin:glove-fixture-50d";

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EmbeddingError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("embedding file is empty")]
    Empty,
    #[error("no tokens in {0:?}")]
    NoTokens(String),
    #[error("dimension mismatch: {0} vs {1}")]
    DimMismatch(usize, usize),
    #[error("cannot read {path}: {message}")]
    Io { path: String, message: String },
}

#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingTable {
    dim: usize,
    entries: HashMap<String, Vec<f64>>,
    fallback_seed: u64,
}

/// Lowercases and splits on any non-alphanumeric character.
pub fn tokenize(text: &str) -> Vec<String> {
    text.split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .map(|t| t.to_lowercase())
        .collect()
}

impl EmbeddingTable {
    pub fn from_entries(dim: usize, entries: HashMap<String, Vec<f64>>, fallback_seed: u64) -> Result<Self, EmbeddingError> {
        if dim == 0 {
            return Err(EmbeddingError::Empty);
        }
        if let Some(v) = entries.values().find(|v| v.len() != dim) {
            return Err(EmbeddingError::DimMismatch(dim, v.len()));
        }
        let entries = entries
            .into_iter()
            .map(|(k, v)| (k.to_lowercase(), v))
            .collect();
        Ok(EmbeddingTable {
            dim,
            entries,
            fallback_seed,
        })
    }

    /// Parses the text format; the dimension comes from the first line.
    pub fn parse(text: &str) -> Result<Self, EmbeddingError> {
        let mut dim = None;
        let mut entries = HashMap::new();
        for (i, line) in text.lines().enumerate() {
            let line_no = i + 1;
            if line.trim().is_empty() {
                continue;
            }
            let mut parts = line.split_whitespace();
            let word = parts.next().expect("line is not blank");
            let values = parts
                .map(|tok| {
                    tok.parse::<f64>()
                        .ok()
                        .filter(|v| v.is_finite())
                        .ok_or_else(|| EmbeddingError::Parse {
                            line: line_no,
                            message: format!("non-numeric token {tok:?}"),
                        })
                })
                .collect::<Result<Vec<f64>, _>>()?;
            let d = *dim.get_or_insert(values.len());
            if d == 0 {
                return Err(EmbeddingError::Parse {
                    line: line_no,
                    message: "no vector components".into(),
                });
            }
            if values.len() != d {
                return Err(EmbeddingError::Parse {
                    line: line_no,
                    message: format!("expected {d} components, found {}", values.len()),
                });
            }
            entries.insert(word.to_lowercase(), values);
        }
        let dim = dim.ok_or(EmbeddingError::Empty)?;
        Ok(EmbeddingTable {
            dim,
            entries,
            fallback_seed: 0,
        })
    }

    pub fn load(path: &Path) -> Result<Self, EmbeddingError> {
        let text = fs::read_to_string(path).map_err(|e| EmbeddingError::Io {
            path: path.display().to_string(),
            message: e.to_string(),
        })?;
        Self::parse(&text)
    }

    pub fn bundled() -> Self {
        Self::parse(BUNDLED_FIXTURE).expect("bundled embedding fixture is well formed")
    }

    pub fn with_fallback_seed(mut self, seed: u64) -> Self {
        self.fallback_seed = seed;
        self
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn contains(&self, word: &str) -> bool {
        self.entries.contains_key(&word.to_lowercase())
    }

    /// Vector for one word; unknown words get a deterministic unit vector.
    pub fn word_vector(&self, word: &str) -> Vec<f64> {
        let key = word.to_lowercase();
        match self.entries.get(&key) {
            Some(v) => v.clone(),
            None => self.fallback_vector(&key),
        }
    }

    fn fallback_vector(&self, token: &str) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(self.fallback_seed, &[string_key(token)]));
        let mut v: Vec<f64> = (0..self.dim).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 0.0 {
            v.iter_mut().for_each(|x| *x /= norm);
        }
        v
    }

    /// Mean of the token vectors of `text`.
    pub fn embed_phrase(&self, text: &str) -> Result<Vec<f64>, EmbeddingError> {
        let tokens = tokenize(text);
        if tokens.is_empty() {
            return Err(EmbeddingError::NoTokens(text.to_string()));
        }
        let mut acc = vec![0.0; self.dim];
        for t in &tokens {
            let v = self.word_vector(t);
            acc.iter_mut().zip(&v).for_each(|(a, x)| *a += x);
        }
        let n = tokens.len() as f64;
        acc.iter_mut().for_each(|a| *a /= n);
        Ok(acc)
    }
}

/// `a.b / (|a| |b|)`, defined as 0 when either vector is zero.
pub fn cosine_similarity(a: &[f64], b: &[f64]) -> Result<f64, EmbeddingError> {
    if a.len() != b.len() {
        return Err(EmbeddingError::DimMismatch(a.len(), b.len()));
    }
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let na = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    if na == 0.0 || nb == 0.0 {
        return Ok(0.0);
    }
    Ok((dot / (na * nb)).clamp(-1.0, 1.0))
}

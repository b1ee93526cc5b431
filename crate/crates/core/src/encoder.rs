//! Pluggable text encoding and question similarity.
//!
//! Real deployments plug a pretrained language model in behind
//! [`TextEncoder`]; the built-in [`HashedContextEncoder`] is a
//! deterministic stand-in that gives every token a stable pseudo-random
//! direction mixed with its neighbors, so token overlap translates into
//! embedding similarity without any learned weights. Question matching
//! uses greedy token-level cosine alignment (precision/recall/F1 over
//! best-matching token pairs, rare-token weighted), the usual
//! token-embedding similarity recipe.

use std::collections::HashMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::taxonomy::QuestionTaxonomy;
use crate::textnorm::tokenize;

/// Width of the sequence-level embedding used as the text feature row.
pub const TEXT_FEATURE_DIM: usize = 768;

/// Source of text embeddings. Implementations must be deterministic:
/// the same string must always produce the same vectors.
pub trait TextEncoder {
    /// Identifier recorded in caches and manifests.
    fn name(&self) -> &str;
    /// Width of [`TextEncoder::encode_sequence`] vectors.
    fn dim(&self) -> usize;
    /// Summary vector for a whole utterance or answer.
    fn encode_sequence(&self, text: &str) -> Result<Vec<f64>>;
    /// One embedding per whitespace token of the normalized text.
    fn encode_tokens(&self, text: &str) -> Result<Vec<Vec<f64>>>;
}

/// Deterministic hash-seeded encoder.
///
/// Token directions are drawn from a stream seeded by an FNV-1a hash of
/// the token, then blended with the neighboring tokens so that the same
/// word in different contexts yields nearby but distinct vectors.
pub struct HashedContextEncoder {
    token_dim: usize,
    context_blend: f64,
}

impl Default for HashedContextEncoder {
    fn default() -> Self {
        HashedContextEncoder {
            token_dim: 64,
            context_blend: 0.25,
        }
    }
}

const FNV_OFFSET: u64 = 0xcbf29ce484222325;
const FNV_PRIME: u64 = 0x100000001b3;

fn fnv1a(salt: u64, data: &str) -> u64 {
    let mut hash = FNV_OFFSET ^ salt;
    for b in data.as_bytes() {
        hash ^= u64::from(*b);
        hash = hash.wrapping_mul(FNV_PRIME);
    }
    hash
}

fn l2_normalize(v: &mut [f64]) {
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if norm > 0.0 {
        for x in v.iter_mut() {
            *x /= norm;
        }
    }
}

impl HashedContextEncoder {
    /// Stable pseudo-random unit vector for one token.
    fn base_vector(&self, token: &str, dim: usize, salt: u64) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(fnv1a(salt, token));
        let mut v: Vec<f64> = (0..dim).map(|_| rng.gen_range(-1.0..1.0)).collect();
        l2_normalize(&mut v);
        v
    }
}

impl TextEncoder for HashedContextEncoder {
    fn name(&self) -> &str {
        "hashed-context"
    }

    fn dim(&self) -> usize {
        TEXT_FEATURE_DIM
    }

    fn encode_sequence(&self, text: &str) -> Result<Vec<f64>> {
        let tokens = tokenize(text);
        if tokens.is_empty() {
            return Err(Error::validation("cannot encode empty text"));
        }
        let mut acc = vec![0.0; TEXT_FEATURE_DIM];
        for (pos, tok) in tokens.iter().enumerate() {
            let base = self.base_vector(tok, TEXT_FEATURE_DIM, seq_salt(pos));
            for (a, b) in acc.iter_mut().zip(&base) {
                *a += *b;
            }
        }
        l2_normalize(&mut acc);
        let scale = (TEXT_FEATURE_DIM as f64).sqrt();
        for a in acc.iter_mut() {
            *a *= scale;
        }
        Ok(acc)
    }

    fn encode_tokens(&self, text: &str) -> Result<Vec<Vec<f64>>> {
        let tokens = tokenize(text);
        if tokens.is_empty() {
            return Err(Error::validation("cannot encode empty text"));
        }
        let bases: Vec<Vec<f64>> = tokens
            .iter()
            .map(|t| self.base_vector(t, self.token_dim, 0x70))
            .collect();
        let mut out = Vec::with_capacity(bases.len());
        for i in 0..bases.len() {
            let mut v = bases[i].clone();
            if i > 0 {
                for (a, b) in v.iter_mut().zip(&bases[i - 1]) {
                    *a += self.context_blend * *b;
                }
            }
            if i + 1 < bases.len() {
                for (a, b) in v.iter_mut().zip(&bases[i + 1]) {
                    *a += self.context_blend * *b;
                }
            }
            l2_normalize(&mut v);
            out.push(v);
        }
        Ok(out)
    }
}

/// Position-dependent salt so sequence embeddings are order-sensitive.
fn seq_salt(pos: usize) -> u64 {
    0x5e + (pos as u64 % 7)
}

fn cosine(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Similarity of a candidate question against every taxonomy entry,
/// with the statistics used for the accept/append decision.
#[derive(Debug, Clone)]
pub struct SimilarityProfile {
    /// `(entry index, similarity)` for every entry, in index order.
    pub scores: Vec<(usize, f64)>,
    pub best_index: usize,
    pub best_similarity: f64,
    pub mean: f64,
    pub std_dev: f64,
    pub threshold: f64,
}

impl SimilarityProfile {
    /// Whether the best match stands out enough to accept.
    pub fn accepted(&self) -> bool {
        self.best_similarity >= self.threshold
    }
}

/// Absolute floor on an acceptable best-match similarity (half of the
/// exact-match score). A best match must also rise one standard
/// deviation above the mean of all per-entry similarities; a flat
/// profile means the question resembles nothing in particular.
pub const SIMILARITY_FLOOR: f64 = 0.5;

/// Precomputed token embeddings and rarity weights for taxonomy entries.
pub struct SimilarityIndex {
    entries: Vec<IndexedEntry>,
    idf: HashMap<String, f64>,
    doc_count: usize,
}

struct IndexedEntry {
    index: usize,
    tokens: Vec<String>,
    embeddings: Vec<Vec<f64>>,
}

impl SimilarityIndex {
    pub fn build(taxonomy: &QuestionTaxonomy, encoder: &dyn TextEncoder) -> Result<Self> {
        let mut idx = SimilarityIndex {
            entries: Vec::new(),
            idf: HashMap::new(),
            doc_count: 0,
        };
        for e in taxonomy.entries() {
            idx.push_entry(e.index, &e.text, encoder)?;
        }
        idx.rebuild_idf();
        Ok(idx)
    }

    /// Register an appended extension entry so later lookups see it.
    pub fn push_entry(
        &mut self,
        index: usize,
        text: &str,
        encoder: &dyn TextEncoder,
    ) -> Result<()> {
        let tokens = tokenize(text);
        let embeddings = encoder.encode_tokens(text)?;
        self.entries.push(IndexedEntry {
            index,
            tokens,
            embeddings,
        });
        self.doc_count += 1;
        self.rebuild_idf();
        Ok(())
    }

    fn rebuild_idf(&mut self) {
        let mut df: HashMap<String, usize> = HashMap::new();
        for e in &self.entries {
            let mut seen: Vec<&String> = Vec::new();
            for t in &e.tokens {
                if !seen.contains(&t) {
                    seen.push(t);
                    *df.entry(t.clone()).or_insert(0) += 1;
                }
            }
        }
        let n = self.entries.len() as f64;
        self.idf = df
            .into_iter()
            .map(|(t, d)| (t, (((n + 1.0) / (d as f64 + 1.0)).ln() + 1.0)))
            .collect();
        self.doc_count = self.entries.len();
    }

    fn idf_weight(&self, token: &str) -> f64 {
        let max_idf = ((self.doc_count as f64 + 1.0).ln()) + 1.0;
        *self.idf.get(token).unwrap_or(&max_idf)
    }

    /// Greedy token-alignment F1 between a candidate and one entry.
    fn entry_score(&self, cand_tokens: &[String], cand_emb: &[Vec<f64>], e: &IndexedEntry) -> f64 {
        let precision = self.directional(cand_tokens, cand_emb, &e.embeddings);
        let recall = self.directional(&e.tokens, &e.embeddings, cand_emb);
        if precision + recall <= 0.0 {
            0.0
        } else {
            2.0 * precision * recall / (precision + recall)
        }
    }

    /// Rarity-weighted mean of each token's best cosine match.
    fn directional(&self, tokens: &[String], from: &[Vec<f64>], to: &[Vec<f64>]) -> f64 {
        let mut num = 0.0;
        let mut den = 0.0;
        for (tok, emb) in tokens.iter().zip(from) {
            let w = self.idf_weight(tok);
            let best = to
                .iter()
                .map(|o| cosine(emb, o))
                .fold(f64::NEG_INFINITY, f64::max)
                .max(0.0);
            num += w * best;
            den += w;
        }
        if den > 0.0 {
            num / den
        } else {
            0.0
        }
    }

    /// Score a candidate against every indexed entry.
    pub fn profile(&self, text: &str, encoder: &dyn TextEncoder) -> Result<SimilarityProfile> {
        if self.entries.is_empty() {
            return Err(Error::validation("similarity index is empty"));
        }
        let cand_tokens = tokenize(text);
        if cand_tokens.is_empty() {
            return Err(Error::validation("cannot score empty question text"));
        }
        let cand_emb = encoder.encode_tokens(text)?;
        let mut scores = Vec::with_capacity(self.entries.len());
        for e in &self.entries {
            scores.push((e.index, self.entry_score(&cand_tokens, &cand_emb, e)));
        }
        let n = scores.len() as f64;
        let mean = scores.iter().map(|(_, s)| s).sum::<f64>() / n;
        let var = scores.iter().map(|(_, s)| (s - mean).powi(2)).sum::<f64>() / n;
        let std_dev = var.sqrt();
        let (best_index, best_similarity) = scores
            .iter()
            .fold((0usize, f64::NEG_INFINITY), |acc, &(i, s)| {
                if s > acc.1 {
                    (i, s)
                } else {
                    acc
                }
            });
        let threshold = (mean + std_dev).max(SIMILARITY_FLOOR);
        Ok(SimilarityProfile {
            scores,
            best_index,
            best_similarity,
            mean,
            std_dev,
            threshold,
        })
    }
}

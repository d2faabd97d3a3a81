//! Lexical similarity between code fragments: Jaccard over token sets,
//! normalized edit similarity, and BM25 over a chunk corpus.

use crate::token::tokenize_code;
use std::collections::{BTreeMap, BTreeSet};

/// Token set for Jaccard scoring.
pub fn token_set(text: &str) -> BTreeSet<String> {
    tokenize_code(text).into_iter().collect()
}

/// |a ∩ b| / |a ∪ b|; 1.0 when both sets are empty.
pub fn jaccard(a: &BTreeSet<String>, b: &BTreeSet<String>) -> f64 {
    if a.is_empty() && b.is_empty() {
        return 1.0;
    }
    let inter = a.intersection(b).count() as f64;
    let union = a.union(b).count() as f64;
    inter / union
}

/// Levenshtein distance over chars, two-row dynamic program.
pub fn levenshtein(a: &str, b: &str) -> usize {
    let a: Vec<char> = a.chars().collect();
    let b: Vec<char> = b.chars().collect();
    if a.is_empty() {
        return b.len();
    }
    if b.is_empty() {
        return a.len();
    }
    let mut prev: Vec<usize> = (0..=b.len()).collect();
    let mut curr: Vec<usize> = vec![0; b.len() + 1];
    for (i, &ca) in a.iter().enumerate() {
        curr[0] = i + 1;
        for (j, &cb) in b.iter().enumerate() {
            let cost = usize::from(ca != cb);
            curr[j + 1] = (prev[j + 1] + 1).min(curr[j] + 1).min(prev[j] + cost);
        }
        std::mem::swap(&mut prev, &mut curr);
    }
    prev[b.len()]
}

/// 1 − levenshtein(a, b) / max(|a|, |b|); 1.0 when both strings are empty.
pub fn edit_similarity(a: &str, b: &str) -> f64 {
    let max_len = a.chars().count().max(b.chars().count());
    if max_len == 0 {
        return 1.0;
    }
    1.0 - levenshtein(a, b) as f64 / max_len as f64
}

/// Okapi BM25 index over a fixed document collection.
///
/// Scores are unnormalized and nonnegative; the idf uses the
/// `ln(1 + (N − df + 0.5)/(df + 0.5))` form. Query terms are deduplicated.
#[derive(Debug, Clone)]
pub struct Bm25Index {
    k1: f64,
    b: f64,
    avg_len: f64,
    total_docs: f64,
    doc_freq: BTreeMap<String, usize>,
    doc_terms: Vec<(BTreeMap<String, usize>, usize)>,
}

impl Bm25Index {
    pub fn build(documents: &[&str], k1: f64, b: f64) -> Bm25Index {
        let mut doc_freq: BTreeMap<String, usize> = BTreeMap::new();
        let mut doc_terms = Vec::with_capacity(documents.len());
        let mut total_len = 0usize;
        for doc in documents {
            let tokens = tokenize_code(doc);
            total_len += tokens.len();
            let mut counts: BTreeMap<String, usize> = BTreeMap::new();
            for token in tokens {
                *counts.entry(token).or_insert(0) += 1;
            }
            for term in counts.keys() {
                *doc_freq.entry(term.clone()).or_insert(0) += 1;
            }
            let len = counts.values().sum();
            doc_terms.push((counts, len));
        }
        let total_docs = documents.len() as f64;
        let avg_len = if documents.is_empty() {
            1.0
        } else {
            (total_len as f64 / total_docs).max(1.0)
        };
        Bm25Index {
            k1,
            b,
            avg_len,
            total_docs,
            doc_freq,
            doc_terms,
        }
    }

    /// BM25 score of document `doc_idx` for `query`.
    pub fn score(&self, doc_idx: usize, query: &str) -> f64 {
        let (counts, len) = &self.doc_terms[doc_idx];
        let dl = *len as f64;
        let query_terms: BTreeSet<String> = tokenize_code(query).into_iter().collect();
        let mut score = 0.0;
        for term in &query_terms {
            let tf = counts.get(term).copied().unwrap_or(0) as f64;
            if tf == 0.0 {
                continue;
            }
            let df = self.doc_freq.get(term).copied().unwrap_or(0) as f64;
            let idf = ((self.total_docs - df + 0.5) / (df + 0.5) + 1.0).ln();
            let denom = tf + self.k1 * (1.0 - self.b + self.b * dl / self.avg_len);
            score += idf * tf * (self.k1 + 1.0) / denom;
        }
        score
    }
}

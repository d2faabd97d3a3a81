//! Pipeline configuration with defaults, file overrides, and flag overrides.
//!
//! Precedence is flags > config file > defaults. The override document
//! rejects unknown keys so typos surface instead of silently falling back.

use crate::analogy::SimilarityFn;
use crate::error::{Error, Result};
use crate::prompt::PromptOrder;
use serde::{Deserialize, Serialize};

/// Budget presets matching the usual truncation-size sweep.
pub const BUDGET_PRESETS: [usize; 5] = [256, 512, 1024, 2048, 4096];

/// Similarity used for analogy retrieval.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SimKind {
    Jaccard,
    Edit,
    Bm25,
}

/// Scoring function for rank truncation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ScorerKind {
    #[serde(rename = "lexical-jaccard")]
    LexicalJaccard,
    #[serde(rename = "lexical-edit")]
    LexicalEdit,
    #[serde(rename = "semantic")]
    Semantic,
    #[serde(rename = "random")]
    Random,
    #[serde(rename = "oracle")]
    Oracle,
}

/// Everything the retrieval pipeline needs, bundled.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineConfig {
    /// Chunk size in lines.
    pub ell: u32,
    /// Sliding step in lines.
    pub eta: u32,
    pub sim: SimKind,
    pub bm25_k1: f64,
    pub bm25_b: f64,
    /// Similarity floor for admission into the analogy context.
    pub epsilon: f64,
    /// Maximum analogy items retrieved.
    pub top_k: usize,
    pub scorer: ScorerKind,
    /// Seed for the random scorer and random prompt order.
    pub seed: u64,
    /// Cross-file token budget L.
    pub budget: usize,
    pub infile_budget: usize,
    pub order: PromptOrder,
    pub include_globs: Vec<String>,
    /// Artifact paths, resolved relative to the repo root when relative.
    pub graph_path: String,
    pub chunk_index_path: String,
    /// Oracle score table (JSON map item_id → score), required by the
    /// oracle scorer.
    pub oracle_path: Option<String>,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            ell: 10,
            eta: 5,
            sim: SimKind::Jaccard,
            bm25_k1: 1.2,
            bm25_b: 0.75,
            epsilon: 0.3,
            top_k: 10,
            scorer: ScorerKind::LexicalJaccard,
            seed: 0,
            budget: 2048,
            infile_budget: 2048,
            order: PromptOrder::HighToLow,
            include_globs: vec!["*.py".to_string()],
            graph_path: ".repoctx/graph.json".to_string(),
            chunk_index_path: ".repoctx/chunks.json".to_string(),
            oracle_path: None,
        }
    }
}

impl PipelineConfig {
    pub fn similarity(&self) -> SimilarityFn {
        match self.sim {
            SimKind::Jaccard => SimilarityFn::Jaccard,
            SimKind::Edit => SimilarityFn::Edit,
            SimKind::Bm25 => SimilarityFn::Bm25 {
                k1: self.bm25_k1,
                b: self.bm25_b,
            },
        }
    }

    /// Check numeric fields against the operation preconditions.
    pub fn validate(&self) -> Result<()> {
        if self.ell == 0 || self.eta == 0 || self.eta > self.ell {
            return Err(Error::Param(format!(
                "require 1 <= eta <= ell, got ell={} eta={}",
                self.ell, self.eta
            )));
        }
        if !self.epsilon.is_finite() {
            return Err(Error::Param("epsilon must be finite".to_string()));
        }
        if self.bm25_k1 < 0.0 || !(0.0..=1.0).contains(&self.bm25_b) {
            return Err(Error::Param(format!(
                "bm25 parameters out of range: k1={} b={}",
                self.bm25_k1, self.bm25_b
            )));
        }
        if self.include_globs.is_empty() {
            return Err(Error::Param("include_globs must be nonempty".to_string()));
        }
        Ok(())
    }

    /// Apply partial overrides on top of this config.
    pub fn merged(&self, overrides: &ConfigOverrides) -> PipelineConfig {
        let mut out = self.clone();
        macro_rules! take {
            ($field:ident) => {
                if let Some(value) = &overrides.$field {
                    out.$field = value.clone();
                }
            };
        }
        take!(ell);
        take!(eta);
        take!(sim);
        take!(bm25_k1);
        take!(bm25_b);
        take!(epsilon);
        take!(top_k);
        take!(scorer);
        take!(seed);
        take!(budget);
        take!(infile_budget);
        take!(order);
        take!(include_globs);
        take!(graph_path);
        take!(chunk_index_path);
        if overrides.oracle_path.is_some() {
            out.oracle_path = overrides.oracle_path.clone();
        }
        out
    }
}

/// Partial configuration: the config-file schema and the HTTP `overrides`
/// object. Unknown keys are rejected.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ConfigOverrides {
    pub ell: Option<u32>,
    pub eta: Option<u32>,
    pub sim: Option<SimKind>,
    pub bm25_k1: Option<f64>,
    pub bm25_b: Option<f64>,
    pub epsilon: Option<f64>,
    pub top_k: Option<usize>,
    pub scorer: Option<ScorerKind>,
    pub seed: Option<u64>,
    pub budget: Option<usize>,
    pub infile_budget: Option<usize>,
    pub order: Option<PromptOrder>,
    pub include_globs: Option<Vec<String>>,
    pub graph_path: Option<String>,
    pub chunk_index_path: Option<String>,
    pub oracle_path: Option<String>,
}

impl ConfigOverrides {
    pub fn from_json(origin: &str, text: &str) -> Result<ConfigOverrides> {
        serde_json::from_str(text).map_err(|e| Error::corrupt(origin, text, &e))
    }
}

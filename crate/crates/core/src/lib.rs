//! Repository-level context retrieval for code completion.
//!
//! For a cursor position in an edited file, the crate fuses two kinds of
//! cross-file context and fits them into a token budget:
//!
//! - **rationale context**: signatures of methods, classes, and packages
//!   reachable from the edited file through a code knowledge graph;
//! - **analogy context**: successors of code chunks similar to the unfinished
//!   chunk at the cursor.
//!
//! The fused candidate set is scored against the unfinished chunk and
//! rank-truncated under a budget, then rendered into a completion prompt.
//! An evaluation harness scores supplied completions with exact-match,
//! edit-similarity, and identifier-match metrics.

pub mod analogy;
pub mod analyzer;
pub mod chunk;
pub mod config;
pub mod error;
pub mod graph;
pub mod metrics;
pub mod model;
pub mod pipeline;
pub mod prompt;
pub mod rationale;
pub mod rtg;
pub mod similarity;
pub mod source;
mod stablehash;
pub mod token;

pub use analogy::{retrieve_analogy, AnalogyContext, AnalogyItem, SimilarityFn};
pub use analyzer::{analyze_repo, extract_facts, Analyzer, ExtractedFacts};
pub use chunk::{unfinished_chunk, ChunkCover, CodeChunk};
pub use config::{ConfigOverrides, PipelineConfig, ScorerKind, SimKind, BUDGET_PRESETS};
pub use error::{Error, Result};
pub use graph::{CodeKnowledgeGraph, Edge, Node};
pub use metrics::{
    code_em, code_es, identifier_metrics, EvalExample, IdentifierProfile, MetricsReport,
};
pub use model::{
    Diagnostic, EdgeRelation, EntityFact, Location, NodeType, RelationFact, SourceFile,
};
pub use pipeline::{
    index_repo, load_artifacts, run_eval, save_artifacts, ContextQuery, ContextReport,
    IndexArtifacts, IndexSummary,
};
pub use prompt::{assemble, PromptBundle, PromptOrder, PromptStats};
pub use rationale::{retrieve_rationale, signature_of, RationaleContext, RationaleItem};
pub use rtg::{
    build_tdc, fuse_candidates, score_candidates, Candidate, CandidateSource, CodeTokenCounter,
    EmbeddingProvider, ScoredItem, Scorer, TokenCounter, TruncatedDualContext,
};

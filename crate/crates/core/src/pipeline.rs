//! The composed retrieval pipeline behind the CLI subcommands and the HTTP
//! service: index a repository, query contexts for a cursor, assemble
//! prompts, and run the evaluation harness. CLI and HTTP share these
//! functions, so both surfaces produce identical JSON for identical inputs.

use crate::analogy::{retrieve_analogy, AnalogyContext};
use crate::analyzer::Analyzer;
use crate::chunk::{unfinished_chunk, ChunkCover};
use crate::config::{PipelineConfig, ScorerKind};
use crate::error::{Error, Result};
use crate::graph::CodeKnowledgeGraph;
use crate::metrics::{
    aggregate, measure_example, EvalExample, ExampleMeasurement, IdentifierProfile, MetricsReport,
};
use crate::model::{Diagnostic, SourceFile};
use crate::prompt::{assemble, PromptBundle};
use crate::rationale::{retrieve_rationale, RationaleContext};
use crate::rtg::{
    build_tdc, fuse_candidates, score_candidates, CodeTokenCounter, Scorer, TruncatedDualContext,
};
use crate::source::scan_repo;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

/// Everything loaded for query serving: the graph, the chunk cover, and the
/// scanned sources that back both.
#[derive(Debug)]
pub struct IndexArtifacts {
    pub graph: CodeKnowledgeGraph,
    pub cover: ChunkCover,
    pub files: Vec<SourceFile>,
}

impl IndexArtifacts {
    pub fn file(&self, path: &str) -> Option<&SourceFile> {
        self.files.iter().find(|f| f.path == path)
    }
}

/// Summary printed by the index command.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct IndexSummary {
    pub n_files: usize,
    pub n_nodes: usize,
    pub n_edges: usize,
    pub n_chunks: usize,
}

/// Scan + analyze + build graph and cover, entirely in memory.
pub fn index_repo(
    root: &Path,
    config: &PipelineConfig,
) -> Result<(IndexArtifacts, IndexSummary, Vec<Diagnostic>)> {
    index_repo_with_facts(root, config, &[])
}

/// Like [`index_repo`], but when facts files are given they replace the
/// built-in analyzer as the source of graph facts (chunking still scans the
/// sources).
pub fn index_repo_with_facts(
    root: &Path,
    config: &PipelineConfig,
    facts_files: &[PathBuf],
) -> Result<(IndexArtifacts, IndexSummary, Vec<Diagnostic>)> {
    config.validate()?;
    let scan = scan_repo(root, &config.include_globs)?;
    if scan.files.is_empty() {
        return Err(Error::NoFilesIndexed);
    }
    let facts = if facts_files.is_empty() {
        let analyzer = Analyzer::new(&scan.files);
        analyzer.extract_all()
    } else {
        let mut merged = crate::analyzer::ExtractedFacts::default();
        for path in facts_files {
            let resolved = resolve_artifact_path(root, &path.display().to_string());
            let (entities, relations) = crate::source::load_external_facts(&resolved)?;
            merged.entities.extend(entities);
            merged.relations.extend(relations);
        }
        merged
    };
    let graph = CodeKnowledgeGraph::build(&facts.entities, &facts.relations)?;
    let cover = ChunkCover::build(&scan.files, config.ell, config.eta)?;
    let summary = IndexSummary {
        n_files: scan.files.len(),
        n_nodes: graph.node_count(),
        n_edges: graph.edge_count(),
        n_chunks: cover.chunks.len(),
    };
    let mut diagnostics = scan.warnings;
    diagnostics.extend(facts.diagnostics);
    Ok((
        IndexArtifacts {
            graph,
            cover,
            files: scan.files,
        },
        summary,
        diagnostics,
    ))
}

/// Resolve an artifact path relative to the repo root unless absolute.
pub fn resolve_artifact_path(root: &Path, configured: &str) -> PathBuf {
    let p = Path::new(configured);
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        root.join(p)
    }
}

/// Persist graph + chunk index to their configured locations.
pub fn save_artifacts(
    artifacts: &IndexArtifacts,
    root: &Path,
    config: &PipelineConfig,
) -> Result<(PathBuf, PathBuf)> {
    let graph_path = resolve_artifact_path(root, &config.graph_path);
    let chunks_path = resolve_artifact_path(root, &config.chunk_index_path);
    for path in [&graph_path, &chunks_path] {
        if let Some(parent) = path.parent() {
            std::fs::create_dir_all(parent).map_err(|source| Error::Io {
                path: parent.display().to_string(),
                source,
            })?;
        }
    }
    artifacts.graph.save(&graph_path)?;
    artifacts.cover.save_index(&chunks_path)?;
    Ok((graph_path, chunks_path))
}

/// Load artifacts from disk, rescanning sources to rehydrate chunk text.
pub fn load_artifacts(root: &Path, config: &PipelineConfig) -> Result<IndexArtifacts> {
    let graph_path = resolve_artifact_path(root, &config.graph_path);
    let chunks_path = resolve_artifact_path(root, &config.chunk_index_path);
    let scan = scan_repo(root, &config.include_globs)?;
    let graph = CodeKnowledgeGraph::load(&graph_path)?;
    let cover = ChunkCover::load_index(&chunks_path, &scan.files)?;
    Ok(IndexArtifacts {
        graph,
        cover,
        files: scan.files,
    })
}

/// Build the scorer named by the config. The semantic scorer needs an
/// embedding provider wired in by the caller; see
/// [`ContextQuery::with_scorer`].
pub fn build_scorer(root: &Path, config: &PipelineConfig) -> Result<Scorer> {
    match config.scorer {
        ScorerKind::LexicalJaccard => Ok(Scorer::LexicalJaccard),
        ScorerKind::LexicalEdit => Ok(Scorer::LexicalEdit),
        ScorerKind::Random => Ok(Scorer::Random { seed: config.seed }),
        ScorerKind::Semantic => Err(Error::ProviderUnavailable(
            "the semantic scorer needs an embedding provider; construct one and use ContextQuery::with_scorer".to_string(),
        )),
        ScorerKind::Oracle => {
            let path = config.oracle_path.as_deref().ok_or_else(|| {
                Error::Param("oracle scorer requires oracle_path".to_string())
            })?;
            let path = resolve_artifact_path(root, path);
            let text = std::fs::read_to_string(&path).map_err(|source| Error::Io {
                path: path.display().to_string(),
                source,
            })?;
            Scorer::oracle_from_json(&path.display().to_string(), &text)
        }
    }
}

/// One context retrieval: all three stages with scores and token accounting.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContextReport {
    pub analogy: Vec<AnalogyReportItem>,
    pub rationale: RationaleContext,
    pub tdc: Vec<TdcReportItem>,
    pub budget: BudgetReport,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalogyReportItem {
    pub file: String,
    pub start_line: u32,
    pub score: f64,
    pub text: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TdcReportItem {
    pub item_id: String,
    pub source: crate::rtg::CandidateSource,
    pub origin_path: String,
    pub score: f64,
    pub token_len: usize,
    pub text: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BudgetReport {
    pub limit: usize,
    pub used_tokens: usize,
}

/// A cursor-position query against loaded artifacts.
pub struct ContextQuery<'a> {
    pub artifacts: &'a IndexArtifacts,
    pub config: &'a PipelineConfig,
    /// Overrides the config-built scorer (e.g. a semantic scorer with a
    /// provider attached).
    pub scorer: Option<&'a Scorer>,
}

impl<'a> ContextQuery<'a> {
    pub fn new(artifacts: &'a IndexArtifacts, config: &'a PipelineConfig) -> ContextQuery<'a> {
        ContextQuery {
            artifacts,
            config,
            scorer: None,
        }
    }

    pub fn with_scorer(mut self, scorer: &'a Scorer) -> ContextQuery<'a> {
        self.scorer = Some(scorer);
        self
    }

    fn scorer_for(&self, root: &Path) -> Result<ScorerHolder<'a>> {
        match self.scorer {
            Some(scorer) => Ok(ScorerHolder::Borrowed(scorer)),
            None => Ok(ScorerHolder::Owned(build_scorer(root, self.config)?)),
        }
    }

    /// Retrieve rationale + analogy + truncated dual context for a cursor in
    /// an indexed file, using the file's current text as the edited buffer.
    pub fn context(&self, root: &Path, file: &str, line: u32) -> Result<(ContextReport, TruncatedDualContext, String)> {
        let source = self
            .artifacts
            .file(file)
            .ok_or_else(|| Error::UnknownPath(file.to_string()))?;
        if line == 0 || line > source.line_count.max(1) {
            return Err(Error::CursorOutOfRange {
                path: file.to_string(),
                line,
                max: source.line_count,
            });
        }
        let edited_text = source.text.clone();
        let scorer = self.scorer_for(root)?;
        let (report, tdc) =
            retrieve_context(self.artifacts, self.config, scorer.get(), file, &edited_text, line)?;
        Ok((report, tdc, edited_text))
    }

    /// Full prompt assembly for a cursor position.
    pub fn prompt(&self, root: &Path, file: &str, line: u32) -> Result<PromptBundle> {
        let (_, tdc, edited_text) = self.context(root, file, line)?;
        assemble(
            &tdc,
            &edited_text,
            line,
            self.config.order,
            self.config.seed,
            self.config.infile_budget,
            &CodeTokenCounter,
        )
    }
}

enum ScorerHolder<'a> {
    Borrowed(&'a Scorer),
    Owned(Scorer),
}

impl<'a> ScorerHolder<'a> {
    fn get(&self) -> &Scorer {
        match self {
            ScorerHolder::Borrowed(s) => s,
            ScorerHolder::Owned(s) => s,
        }
    }
}

/// Core retrieval shared by cursor queries and the eval harness: the edited
/// buffer text may differ from the on-disk file (eval uses the prefix).
pub fn retrieve_context(
    artifacts: &IndexArtifacts,
    config: &PipelineConfig,
    scorer: &Scorer,
    file: &str,
    edited_text: &str,
    cursor_line: u32,
) -> Result<(ContextReport, TruncatedDualContext)> {
    let rationale = retrieve_rationale(&artifacts.graph, file, cursor_line)?;
    let ck_star = if edited_text.lines().count() == 0 {
        String::new()
    } else {
        unfinished_chunk(edited_text, cursor_line, config.ell)?
    };
    let analogy = retrieve_analogy(
        &ck_star,
        &artifacts.cover,
        config.similarity(),
        config.epsilon,
        config.top_k,
        file,
    );
    let (tdc, _) = rank_and_truncate(&rationale, &analogy, &ck_star, scorer, config)?;
    let report = ContextReport {
        analogy: analogy
            .items
            .iter()
            .map(|item| AnalogyReportItem {
                file: item.source.file.clone(),
                start_line: item.source.start_line,
                score: item.score,
                text: item.text.clone(),
            })
            .collect(),
        rationale: rationale.clone(),
        tdc: tdc
            .selected
            .iter()
            .map(|item| TdcReportItem {
                item_id: item.item_id.clone(),
                source: item.source,
                origin_path: item.origin_path.clone(),
                score: item.score,
                token_len: item.token_len,
                text: item.text.clone(),
            })
            .collect(),
        budget: BudgetReport {
            limit: tdc.budget,
            used_tokens: tdc.used_tokens,
        },
    };
    Ok((report, tdc))
}

fn rank_and_truncate(
    rationale: &RationaleContext,
    analogy: &AnalogyContext,
    ck_star: &str,
    scorer: &Scorer,
    config: &PipelineConfig,
) -> Result<(TruncatedDualContext, usize)> {
    let candidates = fuse_candidates(rationale, analogy);
    let scored = score_candidates(&candidates, ck_star, scorer, &CodeTokenCounter)?;
    let tdc = build_tdc(&scored, config.budget);
    let total = candidates.len();
    Ok((tdc, total))
}

/// Evaluate supplied completions against a dataset, reporting metric means
/// and the pipeline's mean selected-context counts per example.
pub fn run_eval(
    examples: &[EvalExample],
    config: &PipelineConfig,
    completions: &BTreeMap<String, String>,
    dataset_dir: &Path,
) -> Result<MetricsReport> {
    config.validate()?;
    let profile = IdentifierProfile::default();
    let mut artifact_cache: BTreeMap<String, IndexArtifacts> = BTreeMap::new();
    let mut measurements: Vec<ExampleMeasurement> = Vec::new();
    let mut missing: Vec<String> = Vec::new();

    for example in examples {
        let Some(prediction) = completions.get(&example.task_id) else {
            missing.push(example.task_id.clone());
            continue;
        };
        let root = if Path::new(&example.repo_root).is_absolute() {
            PathBuf::from(&example.repo_root)
        } else {
            dataset_dir.join(&example.repo_root)
        };
        let root_key = root.display().to_string();
        if !artifact_cache.contains_key(&root_key) {
            let (artifacts, _, _) = index_repo(&root, config)?;
            artifact_cache.insert(root_key.clone(), artifacts);
        }
        let artifacts = &artifact_cache[&root_key];
        let scorer = build_scorer(&root, config)?;

        let cursor = example.prefix_text.lines().count() as u32;
        let (n_ac, n_rc) = if cursor == 0 || !artifacts.graph.has_path(&example.file_path) {
            (0, 0)
        } else {
            let rationale =
                retrieve_rationale(&artifacts.graph, &example.file_path, example.cursor_line)?;
            let ck_star = unfinished_chunk(&example.prefix_text, cursor, config.ell)?;
            let analogy = retrieve_analogy(
                &ck_star,
                &artifacts.cover,
                config.similarity(),
                config.epsilon,
                config.top_k,
                &example.file_path,
            );
            let (tdc, _) = rank_and_truncate(&rationale, &analogy, &ck_star, &scorer, config)?;
            (tdc.analogy_count(), tdc.rationale_count())
        };
        measurements.push(measure_example(
            prediction,
            &example.groundtruth,
            &profile,
            n_ac,
            n_rc,
        ));
    }
    Ok(aggregate(&measurements, missing))
}

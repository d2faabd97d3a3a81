//! The index / context / prompt / eval subcommand bodies.

use anyhow::Context;
use repoctx_core::pipeline::{self, ContextQuery};
use repoctx_core::{metrics, PipelineConfig, PromptStats};
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};

/// `prompt` output: the assembled text plus token accounting.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PromptResponse {
    pub prompt: String,
    pub stats: PromptStats,
}

/// Index `root` and write the graph + chunk index artifacts. Facts files,
/// when given, replace the built-in analyzer. Returns the summary JSON line;
/// per-file diagnostics go to stderr.
pub fn cmd_index(root: &Path, config: &PipelineConfig, facts: &[PathBuf]) -> anyhow::Result<String> {
    let (artifacts, summary, diagnostics) = pipeline::index_repo_with_facts(root, config, facts)?;
    for diagnostic in &diagnostics {
        eprintln!("warning: {diagnostic}");
    }
    pipeline::save_artifacts(&artifacts, root, config)?;
    Ok(serde_json::to_string(&summary)?)
}

/// Retrieve all three context stages for a cursor position as pretty JSON.
pub fn cmd_context(
    root: &Path,
    file: &str,
    line: u32,
    config: &PipelineConfig,
) -> anyhow::Result<String> {
    let artifacts = pipeline::load_artifacts(root, config)?;
    let (report, _, _) = ContextQuery::new(&artifacts, config).context(root, file, line)?;
    Ok(serde_json::to_string_pretty(&report)?)
}

/// Assemble the completion prompt; `raw` emits the prompt text alone.
pub fn cmd_prompt(
    root: &Path,
    file: &str,
    line: u32,
    config: &PipelineConfig,
    raw: bool,
) -> anyhow::Result<String> {
    let artifacts = pipeline::load_artifacts(root, config)?;
    let bundle = ContextQuery::new(&artifacts, config).prompt(root, file, line)?;
    if raw {
        return Ok(bundle.full_prompt);
    }
    let response = PromptResponse {
        prompt: bundle.full_prompt,
        stats: bundle.stats,
    };
    Ok(serde_json::to_string_pretty(&response)?)
}

/// Score a completions file against a dataset. Returns (output, all scored):
/// examples without predictions are listed and make the command exit
/// nonzero.
pub fn cmd_eval(
    dataset: &Path,
    completions: &Path,
    config: &PipelineConfig,
    json: bool,
) -> anyhow::Result<(String, bool)> {
    let dataset_text = std::fs::read_to_string(dataset)
        .with_context(|| format!("cannot read dataset {}", dataset.display()))?;
    let examples = metrics::parse_dataset(&dataset.display().to_string(), &dataset_text)?;
    let completions_text = std::fs::read_to_string(completions)
        .with_context(|| format!("cannot read completions {}", completions.display()))?;
    let predictions =
        metrics::parse_completions(&completions.display().to_string(), &completions_text)?;
    let dataset_dir = dataset.parent().unwrap_or(Path::new("."));
    let report = pipeline::run_eval(&examples, config, &predictions, dataset_dir)?;
    let complete = report.missing.is_empty();
    let output = if json {
        serde_json::to_string_pretty(&report)?
    } else {
        report.to_table()
    };
    Ok((output, complete))
}

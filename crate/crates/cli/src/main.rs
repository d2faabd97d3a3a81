//! `repoctx`: index a repository, query retrieval contexts, emit completion
//! prompts, score completions, or serve the context API.

use clap::{Args, Parser, Subcommand};
use repoctx_cli::server::{serve, AppState};
use repoctx_cli::{commands, effective_config, EXIT_DATA, EXIT_USAGE};
use repoctx_core::{ConfigOverrides, PromptOrder, ScorerKind, SimKind};
use std::path::PathBuf;
use std::process::ExitCode;
use std::sync::Arc;

#[derive(Parser)]
#[command(name = "repoctx", version, about = "Repository context retrieval for code completion")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Scan a repository and write the graph and chunk-index artifacts.
    Index {
        #[command(flatten)]
        common: CommonArgs,
        /// External facts file (repeatable); replaces the built-in analyzer.
        #[arg(long = "facts")]
        facts: Vec<PathBuf>,
    },
    /// Report analogy, rationale, and truncated dual context for a cursor.
    Context {
        #[command(flatten)]
        common: CommonArgs,
        /// Repo-relative file being edited.
        #[arg(long)]
        file: String,
        /// 1-based cursor line.
        #[arg(long)]
        line: u32,
    },
    /// Assemble the completion prompt for a cursor.
    Prompt {
        #[command(flatten)]
        common: CommonArgs,
        #[arg(long)]
        file: String,
        #[arg(long)]
        line: u32,
        /// Print the prompt text instead of JSON.
        #[arg(long)]
        raw: bool,
    },
    /// Score a completions file against a dataset.
    Eval {
        #[command(flatten)]
        common: CommonArgs,
        /// JSONL dataset, one example per line.
        #[arg(long)]
        dataset: PathBuf,
        /// JSONL predictions: {"task_id", "prediction"} per line.
        #[arg(long)]
        completions: PathBuf,
        /// Emit the report as JSON instead of the aligned table.
        #[arg(long)]
        json: bool,
    },
    /// Serve POST /v1/context and /v1/prompt over HTTP.
    Serve {
        #[command(flatten)]
        common: CommonArgs,
        #[arg(long, default_value = "127.0.0.1")]
        host: String,
        #[arg(long, default_value_t = 8701)]
        port: u16,
    },
}

#[derive(Args)]
struct CommonArgs {
    /// Repository root.
    #[arg(long, default_value = ".")]
    root: PathBuf,
    /// JSON config file (same schema as the override flags).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Chunk size in lines.
    #[arg(long)]
    ell: Option<u32>,
    /// Chunk sliding step in lines.
    #[arg(long)]
    eta: Option<u32>,
    /// Analogy similarity: jaccard | edit | bm25.
    #[arg(long)]
    sim: Option<String>,
    /// Analogy admission threshold.
    #[arg(long)]
    threshold: Option<f64>,
    /// Maximum analogy items.
    #[arg(long)]
    top_k: Option<usize>,
    /// Ranking scorer: lexical-jaccard | lexical-edit | semantic | random | oracle.
    #[arg(long)]
    scorer: Option<String>,
    /// Seed for random scoring and random ordering.
    #[arg(long)]
    seed: Option<u64>,
    /// Cross-file token budget (typical sweep: 256, 512, 1024, 2048, 4096).
    #[arg(long)]
    budget: Option<usize>,
    /// In-file prefix token budget.
    #[arg(long)]
    infile_budget: Option<usize>,
    /// Prompt item order: HighToLow | LowToHigh | Random.
    #[arg(long)]
    order: Option<String>,
    /// Include glob, repeatable.
    #[arg(long = "include")]
    include_globs: Vec<String>,
    /// Graph artifact path (relative to root unless absolute).
    #[arg(long)]
    graph_path: Option<String>,
    /// Chunk index artifact path.
    #[arg(long)]
    chunks_path: Option<String>,
    /// Oracle score table (JSON map item_id -> score).
    #[arg(long)]
    oracle_file: Option<String>,
}

impl CommonArgs {
    fn overrides(&self) -> Result<ConfigOverrides, String> {
        Ok(ConfigOverrides {
            ell: self.ell,
            eta: self.eta,
            sim: self.sim.as_deref().map(parse_sim).transpose()?,
            bm25_k1: None,
            bm25_b: None,
            epsilon: self.threshold,
            top_k: self.top_k,
            scorer: self.scorer.as_deref().map(parse_scorer).transpose()?,
            seed: self.seed,
            budget: self.budget,
            infile_budget: self.infile_budget,
            order: self.order.as_deref().map(parse_order).transpose()?,
            include_globs: if self.include_globs.is_empty() {
                None
            } else {
                Some(self.include_globs.clone())
            },
            graph_path: self.graph_path.clone(),
            chunk_index_path: self.chunks_path.clone(),
            oracle_path: self.oracle_file.clone(),
        })
    }
}

fn parse_sim(value: &str) -> Result<SimKind, String> {
    match value {
        "jaccard" => Ok(SimKind::Jaccard),
        "edit" => Ok(SimKind::Edit),
        "bm25" => Ok(SimKind::Bm25),
        other => Err(format!("unknown --sim {other:?} (expected jaccard | edit | bm25)")),
    }
}

fn parse_scorer(value: &str) -> Result<ScorerKind, String> {
    match value {
        "lexical-jaccard" => Ok(ScorerKind::LexicalJaccard),
        "lexical-edit" => Ok(ScorerKind::LexicalEdit),
        "semantic" => Ok(ScorerKind::Semantic),
        "random" => Ok(ScorerKind::Random),
        "oracle" => Ok(ScorerKind::Oracle),
        other => Err(format!(
            "unknown --scorer {other:?} (expected lexical-jaccard | lexical-edit | semantic | random | oracle)"
        )),
    }
}

fn parse_order(value: &str) -> Result<PromptOrder, String> {
    match value {
        "HighToLow" | "high-to-low" => Ok(PromptOrder::HighToLow),
        "LowToHigh" | "low-to-high" => Ok(PromptOrder::LowToHigh),
        "Random" | "random" => Ok(PromptOrder::Random),
        other => Err(format!(
            "unknown --order {other:?} (expected HighToLow | LowToHigh | Random)"
        )),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            // Keep clap's rendering but pin the usage exit code.
            let _ = err.print();
            return match err.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => {
                    ExitCode::SUCCESS
                }
                _ => ExitCode::from(EXIT_USAGE as u8),
            };
        }
    };
    match run(cli) {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err:#}");
            let usage = err.downcast_ref::<UsageError>().is_some()
                || matches!(
                    err.downcast_ref::<repoctx_core::Error>(),
                    Some(repoctx_core::Error::Param(_))
                );
            if usage {
                ExitCode::from(EXIT_USAGE as u8)
            } else {
                ExitCode::from(EXIT_DATA as u8)
            }
        }
    }
}

/// Invalid flag values: exit 1, unlike data errors which exit 2.
#[derive(Debug)]
struct UsageError(String);

impl std::fmt::Display for UsageError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

fn run(cli: Cli) -> anyhow::Result<ExitCode> {
    match cli.command {
        Command::Index { common, facts } => {
            let config = config_for(&common)?;
            let summary = commands::cmd_index(&common.root, &config, &facts)?;
            println!("{summary}");
        }
        Command::Context { common, file, line } => {
            let config = config_for(&common)?;
            let report = commands::cmd_context(&common.root, &file, line, &config)?;
            println!("{report}");
        }
        Command::Prompt {
            common,
            file,
            line,
            raw,
        } => {
            let config = config_for(&common)?;
            let output = commands::cmd_prompt(&common.root, &file, line, &config, raw)?;
            println!("{output}");
        }
        Command::Eval {
            common,
            dataset,
            completions,
            json,
        } => {
            let config = config_for(&common)?;
            let (output, complete) = commands::cmd_eval(&dataset, &completions, &config, json)?;
            println!("{output}");
            if !complete {
                eprintln!("error: some examples had no prediction");
                return Ok(ExitCode::from(EXIT_DATA as u8));
            }
        }
        Command::Serve { common, host, port } => {
            let config = config_for(&common)?;
            let state = Arc::new(AppState::new(common.root.clone(), config));
            let runtime = tokio::runtime::Runtime::new()?;
            runtime.block_on(serve(state, &host, port))?;
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn config_for(common: &CommonArgs) -> anyhow::Result<repoctx_core::PipelineConfig> {
    let overrides = common.overrides().map_err(UsageError)?;
    effective_config(common.config.as_deref(), &overrides)
}

//! Prompt assembly: render the truncated dual context as comment blocks and
//! append the in-file prefix ending exactly at the cursor line.

use crate::error::{Error, Result};
use crate::rtg::{CandidateSource, ScoredItem, TokenCounter, TruncatedDualContext};
use crate::stablehash::DetRng;
use serde::{Deserialize, Serialize};

/// How selected items are ordered in the prompt.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PromptOrder {
    /// Most relevant item first (the default).
    #[serde(rename = "HighToLow", alias = "high-to-low")]
    HighToLow,
    /// Most relevant item last, i.e. closest to the cursor.
    #[serde(rename = "LowToHigh", alias = "low-to-high")]
    LowToHigh,
    /// Seeded shuffle; identical seeds produce identical prompts.
    #[serde(rename = "Random", alias = "random")]
    Random,
}

/// Token accounting for an assembled prompt.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PromptStats {
    /// Analogy items placed in the prompt.
    pub n_ac: usize,
    /// Rationale items placed in the prompt.
    pub n_rc: usize,
    pub crossfile_tokens: usize,
    pub infile_tokens: usize,
}

/// The rendered prompt and its parts.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PromptBundle {
    pub cross_file_block: String,
    pub infile_block: String,
    /// Exactly `cross_file_block + infile_block`.
    pub full_prompt: String,
    pub stats: PromptStats,
}

fn source_label(source: CandidateSource) -> &'static str {
    match source {
        CandidateSource::RationaleMethod => "rationale-method",
        CandidateSource::RationaleClass => "rationale-class",
        CandidateSource::RationalePackage => "rationale-package",
        CandidateSource::Analogy => "analogy",
    }
}

fn render_item(item: &ScoredItem) -> String {
    let mut block = format!("# {}: {}\n", source_label(item.source), item.origin_path);
    for line in item.text.lines() {
        block.push_str("# ");
        block.push_str(line);
        block.push('\n');
    }
    block.push('\n');
    block
}

/// Assemble the final prompt.
///
/// Cross-file items appear in the chosen score order, each as a comment
/// block headed by its source kind and origin path. The in-file prefix keeps
/// the suffix-most lines that fit `infile_budget` and always ends at
/// `cursor_line`.
pub fn assemble(
    tdc: &TruncatedDualContext,
    edited_text: &str,
    cursor_line: u32,
    order: PromptOrder,
    seed: u64,
    infile_budget: usize,
    counter: &dyn TokenCounter,
) -> Result<PromptBundle> {
    let lines: Vec<&str> = edited_text.lines().collect();
    if cursor_line == 0 || cursor_line as usize > lines.len() {
        return Err(Error::CursorOutOfRange {
            path: "<edited>".to_string(),
            line: cursor_line,
            max: lines.len() as u32,
        });
    }

    let mut items: Vec<&ScoredItem> = tdc.selected.iter().collect();
    match order {
        PromptOrder::HighToLow => {}
        PromptOrder::LowToHigh => items.reverse(),
        PromptOrder::Random => DetRng::new(seed).shuffle(&mut items),
    }

    let mut cross_file_block = String::new();
    for item in &items {
        cross_file_block.push_str(&render_item(item));
    }

    // In-file prefix: take lines upward from the cursor while they fit.
    let prefix = &lines[..cursor_line as usize];
    let mut first_kept = prefix.len();
    let mut infile_tokens = 0usize;
    for (idx, line) in prefix.iter().enumerate().rev() {
        let cost = counter.count(line);
        if infile_tokens + cost > infile_budget {
            break;
        }
        infile_tokens += cost;
        first_kept = idx;
    }
    let infile_block = prefix[first_kept..].join("\n");

    let full_prompt = format!("{cross_file_block}{infile_block}");
    let stats = PromptStats {
        n_ac: tdc.analogy_count(),
        n_rc: tdc.rationale_count(),
        crossfile_tokens: tdc.used_tokens,
        infile_tokens,
    };
    Ok(PromptBundle {
        cross_file_block,
        infile_block,
        full_prompt,
        stats,
    })
}

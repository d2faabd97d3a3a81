//! Sliding-window chunk cover over repository files.
//!
//! Every file is covered by fixed-size windows of `ell` lines placed `eta`
//! lines apart. When the last window would stop short of the end of the
//! file, a final window is back-shifted so the last line is still covered
//! (it keeps the fixed size but overlaps its neighbor by more than
//! `ell - eta`). Files shorter than `ell` lines contribute one whole-file
//! chunk. Chunks never span files.

use crate::error::{Error, Result};
use crate::model::SourceFile;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

/// A fixed window of consecutive lines from one file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CodeChunk {
    pub file: String,
    /// 1-based first line of the window.
    pub start_line: u32,
    pub n_lines: u32,
    #[serde(skip)]
    pub text: String,
}

impl CodeChunk {
    pub fn end_line(&self) -> u32 {
        self.start_line + self.n_lines - 1
    }
}

/// The repo-wide set of cover chunks plus the parameters that shaped it.
#[derive(Debug, Clone)]
pub struct ChunkCover {
    pub chunks: Vec<CodeChunk>,
    pub ell: u32,
    pub eta: u32,
    /// (file, start_line) → index into `chunks`.
    index: BTreeMap<(String, u32), usize>,
}

impl ChunkCover {
    /// Build the cover. Requires `1 <= eta <= ell`.
    pub fn build(files: &[SourceFile], ell: u32, eta: u32) -> Result<ChunkCover> {
        if ell == 0 || eta == 0 || eta > ell {
            return Err(Error::Param(format!(
                "chunk parameters must satisfy 1 <= eta <= ell, got ell={ell} eta={eta}"
            )));
        }
        let mut chunks = Vec::new();
        for file in files {
            let lines: Vec<&str> = file.text.lines().collect();
            let total = lines.len() as u32;
            if total == 0 {
                continue;
            }
            let mut starts: Vec<u32> = Vec::new();
            if total < ell {
                starts.push(1);
            } else {
                let mut start = 1u32;
                while start + ell - 1 <= total {
                    starts.push(start);
                    start += eta;
                }
                let last_covered = starts.last().map(|s| s + ell - 1).unwrap_or(0);
                if last_covered < total {
                    starts.push(total - ell + 1);
                }
            }
            for start in starts {
                let n_lines = ell.min(total);
                let text = lines[(start as usize - 1)..(start + n_lines - 1) as usize]
                    .join("\n");
                chunks.push(CodeChunk {
                    file: file.path.clone(),
                    start_line: start,
                    n_lines,
                    text,
                });
            }
        }
        let index = chunks
            .iter()
            .enumerate()
            .map(|(idx, ck)| ((ck.file.clone(), ck.start_line), idx))
            .collect();
        Ok(ChunkCover {
            chunks,
            ell,
            eta,
            index,
        })
    }

    /// The unique next chunk in the same file starting `eta` lines later.
    pub fn successor(&self, chunk: &CodeChunk) -> Option<&CodeChunk> {
        self.index
            .get(&(chunk.file.clone(), chunk.start_line + self.eta))
            .map(|&idx| &self.chunks[idx])
    }

    pub fn chunk_at(&self, file: &str, start_line: u32) -> Option<&CodeChunk> {
        self.index
            .get(&(file.to_string(), start_line))
            .map(|&idx| &self.chunks[idx])
    }

    /// Serialize the chunk index (text is rehydrated from sources on load).
    pub fn to_index_json(&self) -> String {
        let doc = CoverIndexDoc {
            ell: self.ell,
            eta: self.eta,
            chunks: self
                .chunks
                .iter()
                .map(|ck| ChunkIndexEntry {
                    file: ck.file.clone(),
                    start_line: ck.start_line,
                    n_lines: ck.n_lines,
                })
                .collect(),
        };
        serde_json::to_string_pretty(&doc).expect("cover serialize")
    }

    pub fn save_index(&self, path: &std::path::Path) -> Result<()> {
        std::fs::write(path, self.to_index_json()).map_err(|source| Error::Io {
            path: path.display().to_string(),
            source,
        })
    }

    /// Load a chunk index and rehydrate chunk text from `files`.
    pub fn load_index(path: &std::path::Path, files: &[SourceFile]) -> Result<ChunkCover> {
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.display().to_string(),
            source,
        })?;
        let doc: CoverIndexDoc = serde_json::from_str(&text)
            .map_err(|e| Error::corrupt(&path.display().to_string(), &text, &e))?;
        let by_path: BTreeMap<&str, &SourceFile> =
            files.iter().map(|f| (f.path.as_str(), f)).collect();
        let mut chunks = Vec::with_capacity(doc.chunks.len());
        for entry in doc.chunks {
            let file = by_path.get(entry.file.as_str()).ok_or_else(|| {
                Error::UnknownPath(format!("{} (referenced by chunk index)", entry.file))
            })?;
            let lines: Vec<&str> = file.text.lines().collect();
            let start = entry.start_line as usize - 1;
            let end = start + entry.n_lines as usize;
            if end > lines.len() {
                return Err(Error::Param(format!(
                    "chunk {}:{} exceeds file length {}",
                    entry.file,
                    entry.start_line,
                    lines.len()
                )));
            }
            chunks.push(CodeChunk {
                file: entry.file,
                start_line: entry.start_line,
                n_lines: entry.n_lines,
                text: lines[start..end].join("\n"),
            });
        }
        let index = chunks
            .iter()
            .enumerate()
            .map(|(idx, ck)| ((ck.file.clone(), ck.start_line), idx))
            .collect();
        Ok(ChunkCover {
            chunks,
            ell: doc.ell,
            eta: doc.eta,
            index,
        })
    }
}

#[derive(Serialize, Deserialize)]
struct CoverIndexDoc {
    ell: u32,
    eta: u32,
    chunks: Vec<ChunkIndexEntry>,
}

#[derive(Serialize, Deserialize)]
struct ChunkIndexEntry {
    file: String,
    start_line: u32,
    n_lines: u32,
}

/// The chunk of the edited file ending exactly at the cursor line: the last
/// `min(ell, cursor_line)` lines.
pub fn unfinished_chunk(edited_text: &str, cursor_line: u32, ell: u32) -> Result<String> {
    let lines: Vec<&str> = edited_text.lines().collect();
    let total = lines.len() as u32;
    if cursor_line == 0 || cursor_line > total {
        return Err(Error::CursorOutOfRange {
            path: "<edited>".to_string(),
            line: cursor_line,
            max: total,
        });
    }
    let take = ell.min(cursor_line).max(1);
    let start = (cursor_line - take) as usize;
    Ok(lines[start..cursor_line as usize].join("\n"))
}

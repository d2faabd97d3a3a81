//! Repository scanning and the external facts file format.
//!
//! Scanning walks a repository root, filters by include globs, and returns
//! files in lexicographic path order so downstream artifacts are
//! byte-reproducible. The facts file is the escape hatch that lets a
//! full-strength external analyzer replace the built-in one: JSON with
//! `entities` and `relations`, validated on load.

use crate::error::{Error, Result};
use crate::model::{Diagnostic, EntityFact, Location, RelationFact, SourceFile};
use serde::{Deserialize, Serialize};
use std::path::Path;

/// Outcome of a repository scan.
#[derive(Debug, Clone)]
pub struct ScanResult {
    pub files: Vec<SourceFile>,
    /// Unreadable files are skipped, each with a warning record.
    pub warnings: Vec<Diagnostic>,
}

/// Scan `root` for files matching any of `include_globs`.
///
/// Patterns without `/` match the file name (so `*.py` also matches
/// `pkg/m.py`); patterns with `/` match the normalized repo-relative path.
/// `**` crosses directory separators, `*` and `?` do not.
pub fn scan_repo(root: &Path, include_globs: &[String]) -> Result<ScanResult> {
    if !root.is_dir() {
        return Err(Error::Io {
            path: root.display().to_string(),
            source: std::io::Error::new(std::io::ErrorKind::NotFound, "not a directory"),
        });
    }

    let mut paths = Vec::new();
    let mut warnings = Vec::new();
    for entry in walkdir::WalkDir::new(root).follow_links(false) {
        let entry = match entry {
            Ok(e) => e,
            Err(err) => {
                // An unreadable root is fatal; anything below it is a warning.
                let path = err
                    .path()
                    .map(|p| p.display().to_string())
                    .unwrap_or_else(|| root.display().to_string());
                if err.path() == Some(root) {
                    return Err(Error::Io {
                        path,
                        source: err
                            .into_io_error()
                            .unwrap_or_else(|| std::io::Error::other("walk failed")),
                    });
                }
                warnings.push(Diagnostic {
                    path,
                    line: 0,
                    message: format!("skipped: {err}"),
                });
                continue;
            }
        };
        if !entry.file_type().is_file() {
            continue;
        }
        let rel = match entry.path().strip_prefix(root) {
            Ok(r) => normalize_path(r),
            Err(_) => continue,
        };
        if include_globs.iter().any(|g| glob_matches(g, &rel)) {
            paths.push((rel, entry.path().to_path_buf()));
        }
    }
    paths.sort_by(|a, b| a.0.cmp(&b.0));

    let mut files = Vec::with_capacity(paths.len());
    for (rel, abs) in paths {
        match std::fs::read_to_string(&abs) {
            Ok(text) => files.push(SourceFile::new(rel, text)),
            Err(err) => warnings.push(Diagnostic {
                path: rel,
                line: 0,
                message: format!("skipped unreadable file: {err}"),
            }),
        }
    }
    Ok(ScanResult { files, warnings })
}

fn normalize_path(path: &Path) -> String {
    let mut out = String::new();
    for comp in path.components() {
        if !out.is_empty() {
            out.push('/');
        }
        out.push_str(&comp.as_os_str().to_string_lossy());
    }
    out
}

/// Match `pattern` against `path` (or its basename when the pattern has no
/// separator).
pub fn glob_matches(pattern: &str, path: &str) -> bool {
    let target = if pattern.contains('/') {
        path
    } else {
        path.rsplit('/').next().unwrap_or(path)
    };
    let pat: Vec<char> = pattern.chars().collect();
    let txt: Vec<char> = target.chars().collect();
    glob_rec(&pat, &txt)
}

fn glob_rec(pat: &[char], txt: &[char]) -> bool {
    if pat.is_empty() {
        return txt.is_empty();
    }
    match pat[0] {
        '*' => {
            if pat.len() > 1 && pat[1] == '*' {
                // `**` consumes any run, separators included
                let rest = &pat[2..];
                let rest = if rest.first() == Some(&'/') { &rest[1..] } else { rest };
                (0..=txt.len()).any(|i| glob_rec(rest, &txt[i..]))
            } else {
                let rest = &pat[1..];
                (0..=txt.len())
                    .take_while(|&i| i == 0 || txt[i - 1] != '/')
                    .any(|i| glob_rec(rest, &txt[i..]))
            }
        }
        '?' => !txt.is_empty() && txt[0] != '/' && glob_rec(&pat[1..], &txt[1..]),
        c => !txt.is_empty() && txt[0] == c && glob_rec(&pat[1..], &txt[1..]),
    }
}

// ----------------------------------------------------------------------------
// Facts file: {"entities": [...], "relations": [...]}
// ----------------------------------------------------------------------------

#[derive(Debug, Serialize, Deserialize)]
struct FactsDoc {
    entities: Vec<serde_json::Value>,
    relations: Vec<serde_json::Value>,
}

#[derive(Debug, Serialize, Deserialize)]
struct EntityRecord {
    id: String,
    #[serde(flatten)]
    fact: EntityFact,
}

/// Parse and validate a facts file.
pub fn load_external_facts(path: &Path) -> Result<(Vec<EntityFact>, Vec<RelationFact>)> {
    let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse_facts(&path.display().to_string(), &text)
}

/// Parse a facts document from a string; errors name the offending record.
pub fn parse_facts(origin: &str, text: &str) -> Result<(Vec<EntityFact>, Vec<RelationFact>)> {
    let doc: FactsDoc =
        serde_json::from_str(text).map_err(|e| Error::corrupt(origin, text, &e))?;

    let mut entities = Vec::with_capacity(doc.entities.len());
    for (index, value) in doc.entities.into_iter().enumerate() {
        let record: EntityRecord =
            serde_json::from_value(value).map_err(|e| Error::FactsSchema {
                path: origin.to_string(),
                index,
                message: e.to_string(),
            })?;
        validate_location(origin, index, &record.fact.location)?;
        if record.id != record.fact.id() {
            return Err(Error::FactsSchema {
                path: origin.to_string(),
                index,
                message: format!(
                    "entity id {:?} does not match computed id {:?}",
                    record.id,
                    record.fact.id()
                ),
            });
        }
        entities.push(record.fact);
    }

    let mut relations = Vec::with_capacity(doc.relations.len());
    for (index, value) in doc.relations.into_iter().enumerate() {
        let fact: RelationFact = serde_json::from_value(value).map_err(|e| Error::FactsSchema {
            path: origin.to_string(),
            index,
            message: e.to_string(),
        })?;
        validate_location(origin, index, &fact.site)?;
        relations.push(fact);
    }
    Ok((entities, relations))
}

fn validate_location(origin: &str, index: usize, location: &Location) -> Result<()> {
    if !location.is_ordered() {
        return Err(Error::FactsSchema {
            path: origin.to_string(),
            index,
            message: format!("location start exceeds end: {}", location.render()),
        });
    }
    Ok(())
}

/// Serialize facts into the external facts format.
pub fn facts_to_json(entities: &[EntityFact], relations: &[RelationFact]) -> String {
    #[derive(Serialize)]
    struct Doc<'a> {
        entities: Vec<EntityOut<'a>>,
        relations: &'a [RelationFact],
    }
    #[derive(Serialize)]
    struct EntityOut<'a> {
        id: String,
        #[serde(flatten)]
        fact: &'a EntityFact,
    }
    let doc = Doc {
        entities: entities
            .iter()
            .map(|fact| EntityOut { id: fact.id(), fact })
            .collect(),
        relations,
    };
    serde_json::to_string_pretty(&doc).expect("facts serialize")
}

/// Write facts to a file.
pub fn save_facts(path: &Path, entities: &[EntityFact], relations: &[RelationFact]) -> Result<()> {
    std::fs::write(path, facts_to_json(entities, relations)).map_err(|source| Error::Io {
        path: path.display().to_string(),
        source,
    })
}

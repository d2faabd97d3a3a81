//! Shared domain types: source files, locations, entity/relation facts.
//!
//! Everything downstream (graph construction, retrieval, prompting) is built
//! from these records, so their string renderings are pinned here: a node is
//! identified as `name:KIND@path:sl.sc-el.ec` and an edge as
//! `Relation@path:sl.sc-el.ec` (or `Relation@-` when it has no site).

use serde::{Deserialize, Serialize};
use std::fmt;

/// One source file in a repository snapshot, addressed by repo-relative path.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SourceFile {
    /// Repo-relative path with `/` separators, unique within a snapshot.
    pub path: String,
    /// Full file contents.
    pub text: String,
    /// Number of newline-delimited lines (1-based addressing).
    pub line_count: u32,
}

impl SourceFile {
    pub fn new(path: impl Into<String>, text: impl Into<String>) -> Self {
        let path = path.into();
        let text = text.into();
        let line_count = text.lines().count() as u32;
        SourceFile {
            path,
            text,
            line_count,
        }
    }

    /// 1-based line lookup; `None` when out of range.
    pub fn line(&self, line: u32) -> Option<&str> {
        if line == 0 {
            return None;
        }
        self.text.lines().nth(line as usize - 1)
    }
}

/// A 1-based source span. `(start_line, start_col) <= (end_line, end_col)`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Location {
    pub path: String,
    pub start_line: u32,
    pub start_col: u32,
    pub end_line: u32,
    pub end_col: u32,
}

impl Location {
    pub fn new(path: impl Into<String>, start_line: u32, start_col: u32, end_line: u32, end_col: u32) -> Self {
        Location {
            path: path.into(),
            start_line,
            start_col,
            end_line,
            end_col,
        }
    }

    /// Whole-line span helper for single-line sites.
    pub fn line_span(path: impl Into<String>, line: u32, start_col: u32, end_col: u32) -> Self {
        Location::new(path, line, start_col, line, end_col)
    }

    pub fn is_ordered(&self) -> bool {
        (self.start_line, self.start_col) <= (self.end_line, self.end_col)
    }

    pub fn contains_line(&self, line: u32) -> bool {
        self.start_line <= line && line <= self.end_line
    }

    /// Number of lines spanned, used to pick the innermost enclosing node.
    pub fn line_span_len(&self) -> u32 {
        self.end_line - self.start_line + 1
    }

    /// Rendering used inside node and edge IDs.
    pub fn render(&self) -> String {
        format!(
            "{}:{}.{}-{}.{}",
            self.path, self.start_line, self.start_col, self.end_line, self.end_col
        )
    }
}

impl fmt::Display for Location {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.render())
    }
}

/// The kind of a code entity node.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum NodeType {
    Module,
    Class,
    Function,
    Variable,
}

impl NodeType {
    pub fn as_str(&self) -> &'static str {
        match self {
            NodeType::Module => "MODULE",
            NodeType::Class => "CLASS",
            NodeType::Function => "FUNCTION",
            NodeType::Variable => "VARIABLE",
        }
    }
}

impl fmt::Display for NodeType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// The closed set of relations an edge may carry.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum EdgeRelation {
    Imports,
    Calls,
    Instantiates,
    Uses,
    Construct,
    BaseClassOf,
    Overrides,
}

impl EdgeRelation {
    pub fn as_str(&self) -> &'static str {
        match self {
            EdgeRelation::Imports => "Imports",
            EdgeRelation::Calls => "Calls",
            EdgeRelation::Instantiates => "Instantiates",
            EdgeRelation::Uses => "Uses",
            EdgeRelation::Construct => "Construct",
            EdgeRelation::BaseClassOf => "BaseClassOf",
            EdgeRelation::Overrides => "Overrides",
        }
    }

    /// All relation values, in declaration order.
    pub const ALL: [EdgeRelation; 7] = [
        EdgeRelation::Imports,
        EdgeRelation::Calls,
        EdgeRelation::Instantiates,
        EdgeRelation::Uses,
        EdgeRelation::Construct,
        EdgeRelation::BaseClassOf,
        EdgeRelation::Overrides,
    ];
}

impl fmt::Display for EdgeRelation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// A code entity extracted from a source file (or ingested from an external
/// analyzer). Doubles as the node payload of the knowledge graph.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EntityFact {
    pub name: String,
    pub kind: NodeType,
    pub location: Location,
    /// Declaration header. For CLASS/FUNCTION this is a line prefix of
    /// `body_text`; for MODULE it is empty.
    pub signature_text: String,
    /// Full source text of the entity (whole file for MODULE).
    pub body_text: String,
}

impl EntityFact {
    /// Unique ID: `name:KIND@path:sl.sc-el.ec`.
    pub fn id(&self) -> String {
        format!("{}:{}@{}", self.name, self.kind, self.location.render())
    }
}

/// A typed relation between two entities, anchored at the source site where
/// the relation occurs.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RelationFact {
    pub relation: EdgeRelation,
    pub source_id: String,
    pub target_id: String,
    pub site: Location,
}

/// A non-fatal problem reported during scanning or extraction.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Diagnostic {
    pub path: String,
    pub line: u32,
    pub message: String,
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}: {}", self.path, self.line, self.message)
    }
}

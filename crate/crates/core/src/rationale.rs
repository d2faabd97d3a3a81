//! Rationale context retrieval: signatures of the methods, classes, and
//! packages reachable from the edited file at a cursor line.
//!
//! For the innermost node enclosing the cursor, incident edges are filtered
//! to {Construct, BaseClassOf, Overrides, Calls, Instantiates, Uses} and
//! concatenated with the module's Imports edges. An edge contributes its
//! out-node — its head `to_id`, the referenced entity — when that node lives
//! in a different repo file and the edge site starts before the cursor line.
//! Incoming edges therefore drop out on the same-file filter: their head is
//! the queried node itself. FUNCTION out-nodes contribute their full code
//! text, everything else its code signature. Multiple edges to one out-node
//! contribute a single item anchored at the earliest site.

use crate::analyzer::strip_code_lines;
use crate::error::Result;
use crate::graph::{CodeKnowledgeGraph, Node};
use crate::model::{EdgeRelation, Location, NodeType};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

/// Edge relations Algorithm-relevant for the enclosing node.
pub const RELATED_RELATIONS: [EdgeRelation; 6] = [
    EdgeRelation::Construct,
    EdgeRelation::BaseClassOf,
    EdgeRelation::Overrides,
    EdgeRelation::Calls,
    EdgeRelation::Instantiates,
    EdgeRelation::Uses,
];

/// One rationale item with the node it originated from.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RationaleItem {
    pub node_id: String,
    pub text: String,
}

/// The triple (methods, classes, packages) of reachable signatures.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct RationaleContext {
    pub methods: Vec<RationaleItem>,
    pub classes: Vec<RationaleItem>,
    pub packages: Vec<RationaleItem>,
}

impl RationaleContext {
    pub fn len(&self) -> usize {
        self.methods.len() + self.classes.len() + self.packages.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// All item node IDs across the three buckets.
    pub fn node_ids(&self) -> Vec<&str> {
        self.methods
            .iter()
            .chain(&self.classes)
            .chain(&self.packages)
            .map(|item| item.node_id.as_str())
            .collect()
    }
}

/// Retrieve the rationale context for `cursor_line` of `path`.
pub fn retrieve_rationale(
    graph: &CodeKnowledgeGraph,
    path: &str,
    cursor_line: u32,
) -> Result<RationaleContext> {
    let node = graph.innermost_enclosing(path, cursor_line)?;
    let node_id = node.id();
    let module = graph.module_node(path)?;
    let module_id = module.id();

    let mut edges: Vec<&crate::graph::Edge> = graph.related_edges(&node_id, &RELATED_RELATIONS);
    edges.extend(graph.import_edges(&module_id));

    // Dedup by out-node, keeping the earliest site.
    let mut selected: BTreeMap<String, (SiteKey, &Node)> = BTreeMap::new();
    for edge in edges {
        let out_id = edge.to_id.as_str();
        let Some(out_node) = graph.node(out_id) else {
            continue;
        };
        if out_node.location.path == path {
            continue;
        }
        let Some(site) = &edge.site else {
            continue; // no site, no before-cursor evidence
        };
        if site.start_line >= cursor_line {
            continue;
        }
        let key = site_key(site);
        match selected.get(out_id) {
            Some((existing, _)) if *existing <= key => {}
            _ => {
                selected.insert(out_id.to_string(), (key, out_node));
            }
        }
    }

    let mut items: Vec<(SiteKey, &Node)> = selected.into_values().collect();
    items.sort_by(|a, b| a.0.cmp(&b.0).then_with(|| a.1.id().cmp(&b.1.id())));

    let mut context = RationaleContext::default();
    for (_, out_node) in items {
        let text = match out_node.kind {
            NodeType::Function => out_node.body_text.clone(),
            _ => signature_of(out_node, graph),
        };
        let item = RationaleItem {
            node_id: out_node.id(),
            text,
        };
        match out_node.kind {
            NodeType::Function => context.methods.push(item),
            NodeType::Class => context.classes.push(item),
            NodeType::Module | NodeType::Variable => context.packages.push(item),
        }
    }
    Ok(context)
}

type SiteKey = (u32, u32, String);

fn site_key(site: &Location) -> SiteKey {
    (site.start_line, site.start_col, site.render())
}

/// The code signature of a node.
///
/// FUNCTION: declaration header. CLASS: class header followed by each field
/// and method header in source order. MODULE: concatenation of its top-level
/// class and function signatures. VARIABLE: its declaration line.
pub fn signature_of(node: &Node, graph: &CodeKnowledgeGraph) -> String {
    match node.kind {
        NodeType::Function | NodeType::Variable => node.signature_text.clone(),
        NodeType::Class => class_signature(node),
        NodeType::Module => module_signature(node, graph),
    }
}

fn class_signature(node: &Node) -> String {
    let lines = strip_code_lines(&node.body_text);
    let mut out: Vec<String> = Vec::new();
    let header_end = consume_balanced_header(&lines, 0);
    for view in lines.iter().take(header_end + 1) {
        out.push(view.raw.trim_end().to_string());
    }
    let class_indent = lines[0].indent;

    // First content line below the header sets the member indent.
    let mut member_indent: Option<u32> = None;
    let mut i = header_end + 1;
    while i < lines.len() {
        let view = &lines[i];
        if !view.has_content || view.code.trim().is_empty() {
            i += 1;
            continue;
        }
        if view.indent <= class_indent {
            break;
        }
        let indent = *member_indent.get_or_insert(view.indent);
        if view.indent != indent {
            i += 1;
            continue;
        }
        let trimmed = view.code.trim_start();
        if trimmed.starts_with("def ")
            || trimmed.starts_with("async def ")
            || trimmed.starts_with("class ")
        {
            let end = consume_balanced_header(&lines, i);
            for member in lines.iter().take(end + 1).skip(i) {
                out.push(member.raw.trim_end().to_string());
            }
            i = end + 1;
            continue;
        }
        if is_field_line(trimmed) {
            out.push(view.raw.trim_end().to_string());
        }
        i += 1;
    }
    out.join("\n")
}

fn module_signature(node: &Node, graph: &CodeKnowledgeGraph) -> String {
    let path = &node.location.path;
    let mut members: Vec<&Node> = graph
        .nodes_in_path(path)
        .iter()
        .filter_map(|id| graph.node(id))
        .filter(|n| matches!(n.kind, NodeType::Class | NodeType::Function))
        .filter(|n| is_top_level(n, graph, path))
        .collect();
    members.sort_by_key(|n| (n.location.start_line, n.location.start_col));
    members
        .iter()
        .map(|member| match member.kind {
            NodeType::Class => class_signature(member),
            _ => member.signature_text.clone(),
        })
        .collect::<Vec<_>>()
        .join("\n")
}

fn is_top_level(node: &Node, graph: &CodeKnowledgeGraph, path: &str) -> bool {
    graph
        .nodes_in_path(path)
        .iter()
        .filter_map(|id| graph.node(id))
        .filter(|other| {
            !matches!(other.kind, NodeType::Module) && other.id() != node.id()
        })
        .all(|other| {
            !(other.location.start_line <= node.location.start_line
                && node.location.end_line <= other.location.end_line
                && other.location.line_span_len() > node.location.line_span_len())
        })
}

/// `name = ...` or `name: type`, a class-level field declaration.
fn is_field_line(trimmed: &str) -> bool {
    let name: String = trimmed
        .chars()
        .take_while(|c| c.is_ascii_alphanumeric() || *c == '_')
        .collect();
    if name.is_empty() || name.chars().next().is_some_and(|c| c.is_ascii_digit()) {
        return false;
    }
    let rest = trimmed[name.len()..].trim_start();
    rest.starts_with(':') || (rest.starts_with('=') && !rest.starts_with("=="))
}

fn consume_balanced_header(lines: &[crate::analyzer::LineView], start: usize) -> usize {
    let mut depth = 0i32;
    let mut i = start;
    loop {
        for ch in lines[i].code.chars() {
            match ch {
                '(' | '[' | '{' => depth += 1,
                ')' | ']' | '}' => depth -= 1,
                _ => {}
            }
        }
        if (depth <= 0 && lines[i].code.trim_end().ends_with(':')) || i + 1 >= lines.len() {
            return i;
        }
        i += 1;
    }
}

//! The code knowledge graph: a multi-directed graph over entity nodes with
//! position-anchored relation edges.
//!
//! Node IDs follow `name:KIND@path:sl.sc-el.ec`, edge IDs `Relation@site`
//! (`Relation@-` without a site). Parallel edges between the same node pair
//! are permitted; storage disambiguates them by insertion index, which is not
//! part of the visible ID. The graph is immutable after build, so all queries
//! are read-only.

use crate::error::{Error, Result};
use crate::model::{EdgeRelation, EntityFact, Location, NodeType, RelationFact};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::path::Path;

/// Graph nodes carry the same payload as entity facts.
pub type Node = EntityFact;

/// A typed, optionally position-anchored edge between two nodes.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Edge {
    pub relation: EdgeRelation,
    pub from_id: String,
    pub to_id: String,
    pub site: Option<Location>,
}

impl Edge {
    /// `Relation@site`, with `-` as the sentinel for missing sites.
    pub fn id(&self) -> String {
        match &self.site {
            Some(site) => format!("{}@{}", self.relation, site.render()),
            None => format!("{}@-", self.relation),
        }
    }

    /// The endpoint that is not `node_id` (`to_id` for self-loops).
    pub fn other_endpoint(&self, node_id: &str) -> &str {
        if self.from_id == node_id {
            &self.to_id
        } else {
            &self.from_id
        }
    }

    fn sort_key(&self) -> (EdgeRelation, String, String, String) {
        let site = self.site.as_ref().map(|s| s.render()).unwrap_or_else(|| "-".into());
        (self.relation, self.from_id.clone(), self.to_id.clone(), site)
    }
}

/// Immutable multi-digraph over code entities.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct CodeKnowledgeGraph {
    nodes: BTreeMap<String, Node>,
    edges: Vec<Edge>,
    out_adj: BTreeMap<String, Vec<usize>>,
    in_adj: BTreeMap<String, Vec<usize>>,
    by_path: BTreeMap<String, Vec<String>>,
}

impl CodeKnowledgeGraph {
    /// Build a graph from fact streams. Node order and edge order are
    /// canonical, so permuting the inputs yields an equal graph.
    pub fn build(entities: &[EntityFact], relations: &[RelationFact]) -> Result<CodeKnowledgeGraph> {
        let mut nodes: BTreeMap<String, Node> = BTreeMap::new();
        for entity in entities {
            let id = entity.id();
            match nodes.get(&id) {
                Some(existing) if existing != entity => {
                    return Err(Error::ConflictingNode(id));
                }
                Some(_) => {} // identical duplicate
                None => {
                    nodes.insert(id, entity.clone());
                }
            }
        }

        let mut edges: Vec<Edge> = Vec::with_capacity(relations.len());
        for (index, relation) in relations.iter().enumerate() {
            for endpoint in [&relation.source_id, &relation.target_id] {
                if !nodes.contains_key(endpoint) {
                    return Err(Error::DanglingEndpoint {
                        relation: format!(
                            "{}({} -> {})",
                            relation.relation, relation.source_id, relation.target_id
                        ),
                        endpoint: endpoint.clone(),
                        index,
                    });
                }
            }
            edges.push(Edge {
                relation: relation.relation,
                from_id: relation.source_id.clone(),
                to_id: relation.target_id.clone(),
                site: Some(relation.site.clone()),
            });
        }
        edges.sort_by_key(Edge::sort_key);

        Ok(Self::assemble(nodes, edges))
    }

    fn assemble(nodes: BTreeMap<String, Node>, edges: Vec<Edge>) -> CodeKnowledgeGraph {
        let mut out_adj: BTreeMap<String, Vec<usize>> = BTreeMap::new();
        let mut in_adj: BTreeMap<String, Vec<usize>> = BTreeMap::new();
        for (idx, edge) in edges.iter().enumerate() {
            out_adj.entry(edge.from_id.clone()).or_default().push(idx);
            in_adj.entry(edge.to_id.clone()).or_default().push(idx);
        }
        let mut by_path: BTreeMap<String, Vec<String>> = BTreeMap::new();
        for (id, node) in &nodes {
            by_path
                .entry(node.location.path.clone())
                .or_default()
                .push(id.clone());
        }
        CodeKnowledgeGraph {
            nodes,
            edges,
            out_adj,
            in_adj,
            by_path,
        }
    }

    pub fn node(&self, id: &str) -> Option<&Node> {
        self.nodes.get(id)
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn nodes(&self) -> impl Iterator<Item = &Node> {
        self.nodes.values()
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    /// All node IDs defined in `path`.
    pub fn nodes_in_path(&self, path: &str) -> &[String] {
        self.by_path.get(path).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn has_path(&self, path: &str) -> bool {
        self.by_path.contains_key(path)
    }

    /// The unique MODULE node for `path`.
    pub fn module_node(&self, path: &str) -> Result<&Node> {
        let ids = self
            .by_path
            .get(path)
            .ok_or_else(|| Error::UnknownPath(path.to_string()))?;
        ids.iter()
            .filter_map(|id| self.nodes.get(id))
            .find(|n| n.kind == NodeType::Module)
            .ok_or_else(|| Error::MissingModule(path.to_string()))
    }

    /// The node whose span contains `line` with the smallest line span,
    /// falling back to the MODULE node. Equal spans prefer the later-starting
    /// (more deeply nested) node.
    pub fn innermost_enclosing(&self, path: &str, line: u32) -> Result<&Node> {
        let module = self.module_node(path)?;
        let mut best: Option<&Node> = None;
        for id in self.nodes_in_path(path) {
            let node = &self.nodes[id];
            if node.kind == NodeType::Module || !node.location.contains_line(line) {
                continue;
            }
            let better = match best {
                None => true,
                Some(current) => {
                    let key = (node.location.line_span_len(), std::cmp::Reverse(node.location.start_line));
                    let cur = (
                        current.location.line_span_len(),
                        std::cmp::Reverse(current.location.start_line),
                    );
                    key < cur
                }
            };
            if better {
                best = Some(node);
            }
        }
        Ok(best.unwrap_or(module))
    }

    /// Edges incident to `node_id` (either direction) whose relation is in
    /// `relations`, in deterministic (site, id) order.
    pub fn related_edges(&self, node_id: &str, relations: &[EdgeRelation]) -> Vec<&Edge> {
        let mut indices: Vec<usize> = Vec::new();
        if let Some(out) = self.out_adj.get(node_id) {
            indices.extend_from_slice(out);
        }
        if let Some(incoming) = self.in_adj.get(node_id) {
            for &idx in incoming {
                // self-loops are already present from the out list
                if self.edges[idx].from_id != node_id {
                    indices.push(idx);
                }
            }
        }
        let mut edges: Vec<(usize, &Edge)> = indices
            .into_iter()
            .map(|idx| (idx, &self.edges[idx]))
            .filter(|(_, e)| relations.contains(&e.relation))
            .collect();
        edges.sort_by(|(ia, a), (ib, b)| {
            let ka = (a.site.as_ref().map(|s| s.render()).unwrap_or_else(|| "-".into()), a.id(), *ia);
            let kb = (b.site.as_ref().map(|s| s.render()).unwrap_or_else(|| "-".into()), b.id(), *ib);
            ka.cmp(&kb)
        });
        edges.into_iter().map(|(_, e)| e).collect()
    }

    /// Outgoing Imports edges of a module node.
    pub fn import_edges(&self, module_id: &str) -> Vec<&Edge> {
        let mut edges: Vec<&Edge> = self
            .out_adj
            .get(module_id)
            .map(|indices| {
                indices
                    .iter()
                    .map(|&idx| &self.edges[idx])
                    .filter(|e| e.relation == EdgeRelation::Imports)
                    .collect()
            })
            .unwrap_or_default();
        edges.sort_by_key(|e| (e.site.as_ref().map(|s| s.render()), e.id()));
        edges
    }

    /// Serialize to the graph JSON format with stable key order.
    pub fn to_json(&self) -> String {
        let doc = GraphDoc {
            nodes: self
                .nodes
                .values()
                .map(|node| NodeRecord {
                    id: node.id(),
                    node: node.clone(),
                })
                .collect(),
            edges: self
                .edges
                .iter()
                .map(|edge| EdgeRecord {
                    id: edge.id(),
                    edge: edge.clone(),
                })
                .collect(),
        };
        serde_json::to_string_pretty(&doc).expect("graph serialize")
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()).map_err(|source| Error::Io {
            path: path.display().to_string(),
            source,
        })
    }

    pub fn from_json(origin: &str, text: &str) -> Result<CodeKnowledgeGraph> {
        let doc: GraphDoc =
            serde_json::from_str(text).map_err(|e| Error::corrupt(origin, text, &e))?;
        let mut nodes = BTreeMap::new();
        for record in doc.nodes {
            if record.id != record.node.id() {
                return Err(Error::FactsSchema {
                    path: origin.to_string(),
                    index: nodes.len(),
                    message: format!(
                        "node id {:?} does not match computed id {:?}",
                        record.id,
                        record.node.id()
                    ),
                });
            }
            nodes.insert(record.id, record.node);
        }
        let mut edges = Vec::with_capacity(doc.edges.len());
        for (index, record) in doc.edges.into_iter().enumerate() {
            for endpoint in [&record.edge.from_id, &record.edge.to_id] {
                if !nodes.contains_key(endpoint) {
                    return Err(Error::DanglingEndpoint {
                        relation: record.edge.id(),
                        endpoint: endpoint.clone(),
                        index,
                    });
                }
            }
            edges.push(record.edge);
        }
        Ok(Self::assemble(nodes, edges))
    }

    pub fn load(path: &Path) -> Result<CodeKnowledgeGraph> {
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_json(&path.display().to_string(), &text)
    }
}

#[derive(Serialize, Deserialize)]
struct GraphDoc {
    nodes: Vec<NodeRecord>,
    edges: Vec<EdgeRecord>,
}

#[derive(Serialize, Deserialize)]
struct NodeRecord {
    id: String,
    #[serde(flatten)]
    node: Node,
}

#[derive(Serialize, Deserialize)]
struct EdgeRecord {
    id: String,
    #[serde(flatten)]
    edge: Edge,
}

//! Spatio-semantic graph and quadrant-transition graph.
//!
//! The graph is a walk: one edge per consecutive pair of the CIU sequence,
//! keeping repeated traversals and self-loops, with nodes pinned at their
//! picture coordinates.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lexicon::{CiuId, CiuSequence};
use crate::spatial::{distance, CoordinateTable, Point, Quadrant};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Node {
    pub id: CiuId,
    pub x: f64,
    pub y: f64,
}

impl Node {
    pub fn point(&self) -> Point {
        Point::new(self.x, self.y)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Edge {
    pub from: CiuId,
    pub to: CiuId,
    pub len: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpatioSemanticGraph {
    #[serde(skip_serializing_if = "String::is_empty")]
    transcript_id: String,
    nodes: Vec<Node>,
    edges: Vec<Edge>,
    sequence: Vec<CiuId>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct GraphFile {
    #[serde(default)]
    transcript_id: String,
    nodes: Vec<Node>,
    edges: Vec<Edge>,
    sequence: Vec<CiuId>,
}

pub fn build_graph(seq: &CiuSequence, table: &CoordinateTable) -> Result<SpatioSemanticGraph> {
    SpatioSemanticGraph::from_ids(&seq.transcript_id, &seq.ids(), table)
}

impl SpatioSemanticGraph {
    pub fn from_ids(transcript_id: &str, ids: &[CiuId], table: &CoordinateTable) -> Result<Self> {
        let mut positions = BTreeMap::new();
        for &id in ids {
            positions.insert(id, table.get(id)?);
        }
        let nodes = positions.iter().map(|(&id, p)| Node { id, x: p.x, y: p.y }).collect();
        let edges = ids
            .windows(2)
            .map(|w| Edge {
                from: w[0],
                to: w[1],
                len: if w[0] == w[1] {
                    0.0
                } else {
                    distance(positions[&w[0]], positions[&w[1]])
                },
            })
            .collect();
        Ok(SpatioSemanticGraph {
            transcript_id: transcript_id.to_string(),
            nodes,
            edges,
            sequence: ids.to_vec(),
        })
    }

    pub fn transcript_id(&self) -> &str {
        &self.transcript_id
    }

    /// Distinct CIUs, sorted by id.
    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    /// Edges in walk order.
    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn sequence(&self) -> &[CiuId] {
        &self.sequence
    }

    pub fn node(&self, id: CiuId) -> Option<&Node> {
        self.nodes
            .binary_search_by_key(&id, |n| n.id)
            .ok()
            .map(|i| &self.nodes[i])
    }

    pub fn is_empty(&self) -> bool {
        self.sequence.is_empty()
    }

    /// Positions of the walk, one per sequence element.
    pub fn walk_points(&self) -> Vec<Point> {
        self.sequence
            .iter()
            .map(|id| self.node(*id).expect("sequence CIUs are nodes").point())
            .collect()
    }

    /// Edge multiplicities of the simple-graph view, keyed by (from, to).
    pub fn edge_counts(&self) -> BTreeMap<(CiuId, CiuId), usize> {
        let mut counts = BTreeMap::new();
        for e in &self.edges {
            *counts.entry((e.from, e.to)).or_insert(0) += 1;
        }
        counts
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("graph serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: GraphFile = serde_json::from_str(text)?;

        let mut nodes = file.nodes;
        nodes.sort_by_key(|n| n.id);
        if nodes.windows(2).any(|w| w[0].id == w[1].id) {
            return Err(Error::schema("duplicate node id"));
        }
        if nodes.iter().any(|n| !(n.x.is_finite() && n.y.is_finite())) {
            return Err(Error::schema("non-finite node coordinate"));
        }
        let node_ids: BTreeSet<CiuId> = nodes.iter().map(|n| n.id).collect();
        let seq_ids: BTreeSet<CiuId> = file.sequence.iter().copied().collect();
        if node_ids != seq_ids {
            return Err(Error::schema("node set differs from the CIUs of the sequence"));
        }
        if file.edges.len() != file.sequence.len().saturating_sub(1) {
            return Err(Error::schema(format!(
                "{} edges for a sequence of {}",
                file.edges.len(),
                file.sequence.len()
            )));
        }
        for (e, w) in file.edges.iter().zip(file.sequence.windows(2)) {
            if (e.from, e.to) != (w[0], w[1]) {
                return Err(Error::schema(format!(
                    "edge {}->{} does not follow the sequence ({}->{})",
                    e.from, e.to, w[0], w[1]
                )));
            }
            if !(e.len.is_finite() && e.len >= 0.0) || (e.from == e.to && e.len != 0.0) {
                return Err(Error::schema(format!("invalid edge length {}", e.len)));
            }
        }
        Ok(SpatioSemanticGraph {
            transcript_id: file.transcript_id,
            nodes,
            edges: file.edges,
            sequence: file.sequence,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct QuadrantGraph {
    pub sequence: Vec<Quadrant>,
    pub edges: Vec<(Quadrant, Quadrant)>,
}

impl QuadrantGraph {
    pub fn from_quadrants(sequence: Vec<Quadrant>) -> Self {
        let edges = sequence.windows(2).map(|w| (w[0], w[1])).collect();
        QuadrantGraph { sequence, edges }
    }
}

pub fn build_quadrant_graph(seq: &CiuSequence, table: &CoordinateTable) -> Result<QuadrantGraph> {
    quadrant_graph_for_ids(&seq.ids(), table)
}

pub fn quadrant_graph_for_ids(ids: &[CiuId], table: &CoordinateTable) -> Result<QuadrantGraph> {
    let quadrants = ids
        .iter()
        .map(|&id| table.quadrant_of_ciu(id))
        .collect::<Result<Vec<_>>>()?;
    Ok(QuadrantGraph::from_quadrants(quadrants))
}

/// Quadrant graph for an already built spatio-semantic graph.
pub fn quadrant_graph_of(graph: &SpatioSemanticGraph, table: &CoordinateTable) -> Result<QuadrantGraph> {
    let quadrants = graph
        .walk_points()
        .into_iter()
        .map(|p| table.quadrant_of(p))
        .collect::<Result<Vec<_>>>()?;
    Ok(QuadrantGraph::from_quadrants(quadrants))
}

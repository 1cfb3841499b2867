//! Immutable simple graph in compressed adjacency form.
//!
//! Nodes are dense `0..n`. Each neighbor list is strictly increasing, which
//! lets [`Graph::pos_of`] and [`Graph::has_edge`] use binary search. Directed
//! input keeps the underlying undirected graph and records, for every
//! adjacency slot, the direction of that edge as seen from the slot's owner.

use std::collections::HashMap;
use std::fmt;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;
use std::sync::{Arc, OnceLock};

use thiserror::Error;

use crate::stats::NodeLocalStats;

pub type NodeId = usize;

#[derive(Debug, Error)]
pub enum GraphError {
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("graph has no edges")]
    Empty,
    #[error("node {0} is out of range")]
    NodeOutOfRange(NodeId),
    #[error("node {u} is not a neighbor of {v}")]
    NotANeighbor { v: NodeId, u: NodeId },
    #[error("arithmetic overflow while computing {0}")]
    Overflow(&'static str),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Direction of an edge `(a, b)` read from `a`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
#[repr(u8)]
pub enum Direction {
    /// `a -> b`
    Out = 1,
    /// `b -> a`
    In = 2,
    /// both arcs present
    Mutual = 3,
}

impl Direction {
    pub fn reverse(self) -> Self {
        match self {
            Direction::Out => Direction::In,
            Direction::In => Direction::Out,
            Direction::Mutual => Direction::Mutual,
        }
    }

    pub fn code(self) -> u8 {
        self as u8
    }

    pub fn from_code(code: u8) -> Option<Self> {
        match code {
            1 => Some(Direction::Out),
            2 => Some(Direction::In),
            3 => Some(Direction::Mutual),
            _ => None,
        }
    }

    fn from_bits(bits: u8) -> Self {
        match bits {
            0b01 => Direction::Out,
            0b10 => Direction::In,
            _ => Direction::Mutual,
        }
    }
}

impl fmt::Display for Direction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Direction::Out => "->",
            Direction::In => "<-",
            Direction::Mutual => "<->",
        })
    }
}

/// Counters describing what the loader discarded.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct LoadSummary {
    pub lines: usize,
    pub comments: usize,
    pub self_loops: usize,
    pub duplicates: usize,
}

/// Maps dense node indices back to the IDs used in the source file.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct IdMap {
    original: Vec<u64>,
    dense: HashMap<u64, NodeId>,
}

impl IdMap {
    pub fn identity(n: usize) -> Self {
        let original: Vec<u64> = (0..n as u64).collect();
        let dense = original.iter().enumerate().map(|(i, &o)| (o, i)).collect();
        IdMap { original, dense }
    }

    fn intern(&mut self, id: u64) -> NodeId {
        let next = self.original.len();
        *self.dense.entry(id).or_insert_with(|| {
            self.original.push(id);
            next
        })
    }

    pub fn len(&self) -> usize {
        self.original.len()
    }

    pub fn is_empty(&self) -> bool {
        self.original.is_empty()
    }

    pub fn original(&self, v: NodeId) -> Option<u64> {
        self.original.get(v).copied()
    }

    pub fn dense(&self, id: u64) -> Option<NodeId> {
        self.dense.get(&id).copied()
    }

    /// Two-column text: `dense<TAB>original`.
    pub fn write_to<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        for (i, id) in self.original.iter().enumerate() {
            writeln!(out, "{i}\t{id}")?;
        }
        Ok(())
    }

    pub fn read_from<R: Read>(input: R) -> Result<Self, GraphError> {
        let mut map = IdMap::default();
        for (lineno, line) in BufReader::new(input).lines().enumerate() {
            let line = line?;
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let mut cols = line.split_whitespace();
            let (dense, orig) = match (cols.next(), cols.next()) {
                (Some(a), Some(b)) => (parse_id(a, lineno + 1)?, parse_id(b, lineno + 1)?),
                _ => {
                    return Err(GraphError::Parse {
                        line: lineno + 1,
                        msg: "expected two columns".into(),
                    })
                }
            };
            if dense as usize != map.len() {
                return Err(GraphError::Parse {
                    line: lineno + 1,
                    msg: format!("dense id {dense} out of sequence"),
                });
            }
            map.intern(orig);
        }
        Ok(map)
    }
}

fn parse_id(tok: &str, line: usize) -> Result<u64, GraphError> {
    tok.parse::<u64>().map_err(|e| GraphError::Parse {
        line,
        msg: format!("bad node id {tok:?}: {e}"),
    })
}

/// Immutable simple graph with optional per-edge directions.
pub struct Graph {
    offsets: Vec<usize>,
    neighbors: Vec<NodeId>,
    /// Direction code per adjacency slot, empty for undirected graphs.
    directions: Vec<Direction>,
    directed: bool,
    edge_count: usize,
    stats: Vec<OnceLock<Arc<NodeLocalStats>>>,
    acc_alpha: Vec<OnceLock<Arc<[u64]>>>,
}

impl fmt::Debug for Graph {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Graph")
            .field("nodes", &self.node_count())
            .field("edges", &self.edge_count)
            .field("directed", &self.directed)
            .finish()
    }
}

impl Graph {
    /// Builds an undirected graph. Self-loops and duplicates are dropped.
    pub fn from_edges(node_count: usize, edges: &[(NodeId, NodeId)]) -> Self {
        for &(u, v) in edges {
            assert!(
                u < node_count && v < node_count,
                "edge ({u}, {v}) out of range"
            );
        }
        Self::build(node_count, edges.to_vec(), false).0
    }

    /// Builds a directed graph from arcs `u -> v`. A reciprocal pair becomes
    /// one mutual edge.
    pub fn from_arcs(node_count: usize, arcs: &[(NodeId, NodeId)]) -> Self {
        for &(u, v) in arcs {
            assert!(
                u < node_count && v < node_count,
                "arc ({u}, {v}) out of range"
            );
        }
        Self::build(node_count, arcs.to_vec(), true).0
    }

    fn build(
        node_count: usize,
        arcs: Vec<(NodeId, NodeId)>,
        directed: bool,
    ) -> (Self, usize, usize) {
        let mut self_loops = 0;
        // (low, high, bits) where bit 0 = low->high, bit 1 = high->low
        let mut keyed: Vec<(NodeId, NodeId, u8)> = Vec::with_capacity(arcs.len());
        for (u, v) in arcs {
            if u == v {
                self_loops += 1;
                continue;
            }
            if u < v {
                keyed.push((u, v, 0b01));
            } else {
                keyed.push((v, u, 0b10));
            }
        }
        keyed.sort_unstable();
        let mut merged: Vec<(NodeId, NodeId, u8)> = Vec::with_capacity(keyed.len());
        let mut duplicates = 0;
        for (a, b, bits) in keyed {
            match merged.last_mut() {
                Some(last) if last.0 == a && last.1 == b => {
                    if !directed || last.2 & bits != 0 {
                        duplicates += 1;
                    }
                    last.2 |= bits;
                }
                _ => merged.push((a, b, bits)),
            }
        }

        let mut degree = vec![0usize; node_count];
        for &(a, b, _) in &merged {
            degree[a] += 1;
            degree[b] += 1;
        }
        let mut offsets = Vec::with_capacity(node_count + 1);
        offsets.push(0);
        for d in &degree {
            offsets.push(offsets.last().unwrap() + d);
        }
        let total = *offsets.last().unwrap();
        let mut neighbors = vec![0; total];
        let mut directions = if directed {
            vec![Direction::Mutual; total]
        } else {
            Vec::new()
        };
        let mut fill = offsets[..node_count].to_vec();
        for &(a, b, bits) in &merged {
            let dir = Direction::from_bits(bits);
            neighbors[fill[a]] = b;
            neighbors[fill[b]] = a;
            if directed {
                directions[fill[a]] = dir;
                directions[fill[b]] = dir.reverse();
            }
            fill[a] += 1;
            fill[b] += 1;
        }
        // merged is sorted by (low, high): node x first receives its smaller
        // neighbors in increasing order, then its larger ones.
        debug_assert!(
            (0..node_count).all(|v| neighbors[offsets[v]..offsets[v + 1]]
                .windows(2)
                .all(|w| w[0] < w[1]))
        );

        let graph = Graph {
            offsets,
            neighbors,
            directions,
            directed,
            edge_count: merged.len(),
            stats: (0..node_count).map(|_| OnceLock::new()).collect(),
            acc_alpha: (0..node_count).map(|_| OnceLock::new()).collect(),
        };
        (graph, self_loops, duplicates)
    }

    pub fn node_count(&self) -> usize {
        self.offsets.len() - 1
    }

    pub fn edge_count(&self) -> usize {
        self.edge_count
    }

    pub fn is_directed(&self) -> bool {
        self.directed
    }

    pub fn degree(&self, v: NodeId) -> usize {
        self.offsets[v + 1] - self.offsets[v]
    }

    pub fn neighbors(&self, v: NodeId) -> &[NodeId] {
        &self.neighbors[self.offsets[v]..self.offsets[v + 1]]
    }

    pub fn nodes(&self) -> std::ops::Range<NodeId> {
        0..self.node_count()
    }

    pub fn check_node(&self, v: NodeId) -> Result<(), GraphError> {
        if v < self.node_count() {
            Ok(())
        } else {
            Err(GraphError::NodeOutOfRange(v))
        }
    }

    /// Index of `u` in the sorted neighbor list of `v`.
    pub fn pos_of(&self, v: NodeId, u: NodeId) -> Result<usize, GraphError> {
        self.neighbors(v)
            .binary_search(&u)
            .map_err(|_| GraphError::NotANeighbor { v, u })
    }

    pub fn has_edge(&self, u: NodeId, v: NodeId) -> bool {
        let (a, b) = if self.degree(u) <= self.degree(v) {
            (u, v)
        } else {
            (v, u)
        };
        self.neighbors(a).binary_search(&b).is_ok()
    }

    /// Direction of edge `(u, v)` read from `u`; `None` when the graph is
    /// undirected or the edge is absent.
    pub fn direction(&self, u: NodeId, v: NodeId) -> Option<Direction> {
        if !self.directed {
            return None;
        }
        let pos = self.neighbors(u).binary_search(&v).ok()?;
        Some(self.directions[self.offsets[u] + pos])
    }

    /// Per-node scalars and prefix-weight arrays, computed on first request.
    pub fn stats(&self, v: NodeId) -> Result<Arc<NodeLocalStats>, GraphError> {
        self.check_node(v)?;
        if let Some(s) = self.stats[v].get() {
            return Ok(Arc::clone(s));
        }
        let computed = Arc::new(NodeLocalStats::compute(self, v)?);
        Ok(Arc::clone(self.stats[v].get_or_init(|| computed)))
    }

    /// `ACC_alpha` of `v`: running sums of `d_u - 1` over the neighbors.
    pub fn acc_alpha(&self, v: NodeId) -> Result<Arc<[u64]>, GraphError> {
        self.check_node(v)?;
        if let Some(a) = self.acc_alpha[v].get() {
            return Ok(Arc::clone(a));
        }
        let computed: Arc<[u64]> = crate::stats::prefix_sums(
            self.neighbors(v).iter().map(|&u| self.degree(u) as u64 - 1),
        )?
        .into();
        Ok(Arc::clone(self.acc_alpha[v].get_or_init(|| computed)))
    }

    /// Node with the largest degree, lowest index on ties.
    pub fn max_degree_node(&self) -> Option<NodeId> {
        self.nodes()
            .min_by_key(|&v| (std::cmp::Reverse(self.degree(v)), v))
    }

    /// The same topology with directions discarded.
    pub fn to_undirected(&self) -> Graph {
        Graph {
            offsets: self.offsets.clone(),
            neighbors: self.neighbors.clone(),
            directions: Vec::new(),
            directed: false,
            edge_count: self.edge_count,
            stats: (0..self.node_count()).map(|_| OnceLock::new()).collect(),
            acc_alpha: (0..self.node_count()).map(|_| OnceLock::new()).collect(),
        }
    }
}

/// Result of reading an edge list: graph, ID map and discard counters.
#[derive(Debug)]
pub struct LoadedGraph {
    pub graph: Graph,
    pub ids: IdMap,
    pub summary: LoadSummary,
}

/// Reads a whitespace-separated edge list with `#` comments.
///
/// Node IDs are compacted to `0..n` in order of first appearance. With
/// `directed`, a line `u v` is the arc `u -> v`.
pub fn load_edge_list<R: Read>(input: R, directed: bool) -> Result<LoadedGraph, GraphError> {
    let mut ids = IdMap::default();
    let mut summary = LoadSummary::default();
    let mut arcs = Vec::new();
    for (lineno, line) in BufReader::new(input).lines().enumerate() {
        let line = line?;
        summary.lines += 1;
        let trimmed = line.trim();
        if trimmed.is_empty() {
            continue;
        }
        if trimmed.starts_with('#') || trimmed.starts_with('%') {
            summary.comments += 1;
            continue;
        }
        let mut toks = trimmed.split_whitespace();
        let (a, b) = match (toks.next(), toks.next()) {
            (Some(a), Some(b)) => (a, b),
            _ => {
                return Err(GraphError::Parse {
                    line: lineno + 1,
                    msg: "expected two node ids".into(),
                })
            }
        };
        let u = ids.intern(parse_id(a, lineno + 1)?);
        let v = ids.intern(parse_id(b, lineno + 1)?);
        arcs.push((u, v));
    }
    let n = ids.len();
    let (graph, self_loops, duplicates) = Graph::build(n, arcs, directed);
    summary.self_loops = self_loops;
    summary.duplicates = duplicates;
    if graph.edge_count() == 0 {
        return Err(GraphError::Empty);
    }
    Ok(LoadedGraph {
        graph,
        ids,
        summary,
    })
}

pub fn load_edge_list_file<P: AsRef<Path>>(
    path: P,
    directed: bool,
) -> Result<LoadedGraph, GraphError> {
    let file = std::fs::File::open(path)?;
    load_edge_list(file, directed)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn load(text: &str, directed: bool) -> LoadedGraph {
        load_edge_list(text.as_bytes(), directed).unwrap()
    }

    #[test]
    fn triangle_from_text() {
        let g = load("0 1\n1 2\n2 0\n", false).graph;
        assert_eq!(g.node_count(), 3);
        assert_eq!(g.edge_count(), 3);
        assert_eq!(
            (0..3).map(|v| g.degree(v)).collect::<Vec<_>>(),
            vec![2, 2, 2]
        );
    }

    #[test]
    fn mutual_dyad_merges() {
        let g = load("0 1\n1 0\n", true).graph;
        assert_eq!(g.edge_count(), 1);
        assert_eq!(g.direction(0, 1), Some(Direction::Mutual));
        assert_eq!(g.direction(1, 0), Some(Direction::Mutual));
    }

    #[test]
    fn comments_and_duplicates_dropped() {
        let l = load("# c\n0 1\n0 1\n", false);
        assert_eq!(l.graph.edge_count(), 1);
        assert_eq!(l.summary.comments, 1);
        assert_eq!(l.summary.duplicates, 1);
    }

    #[test]
    fn self_loops_counted() {
        let l = load("0 0\n0 1\n", false);
        assert_eq!(l.graph.edge_count(), 1);
        assert_eq!(l.summary.self_loops, 1);
    }

    #[test]
    fn one_way_arc_direction() {
        let g = load("5 9\n", true).graph;
        // 5 -> dense 0, 9 -> dense 1
        assert_eq!(g.direction(0, 1), Some(Direction::Out));
        assert_eq!(g.direction(1, 0), Some(Direction::In));
    }

    #[test]
    fn repeated_arc_is_duplicate_not_mutual() {
        let l = load("0 1\n0 1\n", true);
        assert_eq!(l.summary.duplicates, 1);
        assert_eq!(l.graph.direction(0, 1), Some(Direction::Out));
    }

    #[test]
    fn sparse_ids_compacted() {
        let l = load("100 7\n7 3000000000\n", false);
        assert_eq!(l.graph.node_count(), 3);
        assert_eq!(l.ids.original(0), Some(100));
        assert_eq!(l.ids.dense(3_000_000_000), Some(2));
        let mut buf = Vec::new();
        l.ids.write_to(&mut buf).unwrap();
        assert_eq!(IdMap::read_from(&buf[..]).unwrap(), l.ids);
    }

    #[test]
    fn malformed_line_reports_number() {
        let err = load_edge_list("0 1\n2 x\n".as_bytes(), false).unwrap_err();
        assert!(matches!(err, GraphError::Parse { line: 2, .. }), "{err}");
        let err = load_edge_list("0 1\n3\n".as_bytes(), false).unwrap_err();
        assert!(matches!(err, GraphError::Parse { line: 2, .. }));
        let err = load_edge_list("-1 2\n".as_bytes(), false).unwrap_err();
        assert!(matches!(err, GraphError::Parse { line: 1, .. }));
    }

    #[test]
    fn empty_graph_rejected() {
        assert!(matches!(
            load_edge_list("# nothing\n".as_bytes(), false),
            Err(GraphError::Empty)
        ));
        assert!(matches!(
            load_edge_list("4 4\n".as_bytes(), false),
            Err(GraphError::Empty)
        ));
    }

    #[test]
    fn pos_of_binary_search() {
        let g = Graph::from_edges(10, &[(0, 2), (0, 5), (0, 9)]);
        assert_eq!(g.pos_of(0, 5).unwrap(), 1);
        assert_eq!(g.pos_of(0, 9).unwrap(), 2);
        assert!(matches!(
            g.pos_of(0, 7),
            Err(GraphError::NotANeighbor { v: 0, u: 7 })
        ));
    }

    #[test]
    fn max_degree_ties_lowest() {
        let g = Graph::from_edges(4, &[(0, 1), (2, 3), (1, 2)]);
        assert_eq!(g.max_degree_node(), Some(1));
    }
}

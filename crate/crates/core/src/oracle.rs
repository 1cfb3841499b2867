//! Exact orbit degrees by enumerating every 3- and 4-node CIS through a node.
//!
//! This is the ground truth the estimators are tested against. It is not
//! meant to be fast; [`candidate_bound`] lets callers refuse anchors whose
//! neighborhood is too large to enumerate.

use serde::Serialize;
use thiserror::Error;

use crate::graph::{Graph, GraphError, NodeId};
use crate::orbit::{classify_directed3, classify_undirected, DirectedOrbit, Orbit, OrbitError};
use crate::sampler::Method;
use crate::stats::NodeLocalStats;

/// Default limit on the number of candidate subgraphs per anchor.
pub const DEFAULT_GUARD: u64 = 1_000_000;

#[derive(Debug, Error)]
pub enum OracleError {
    #[error("anchor {node} has up to {bound} candidate subgraphs, above the limit of {limit}")]
    GuardExceeded {
        node: NodeId,
        bound: u128,
        limit: u64,
    },
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Orbit(#[from] OrbitError),
}

/// Calls `emit` once for every connected induced `k`-node subgraph that
/// contains `anchor` (`k` in 2..=4).
///
/// Anchored ESU: the anchor is ranked below every other node, and a node
/// joins the extension set only through the first member that reaches it,
/// so each set is produced exactly once without a seen-set.
pub fn for_each_cis<F: FnMut(&[NodeId])>(g: &Graph, anchor: NodeId, k: usize, mut emit: F) {
    assert!((2..=4).contains(&k), "k must be 2, 3 or 4");
    let mut sub = Vec::with_capacity(k);
    sub.push(anchor);
    let ext: Vec<NodeId> = g.neighbors(anchor).to_vec();
    extend(g, anchor, k, &mut sub, ext, &mut emit);
}

fn extend<F: FnMut(&[NodeId])>(
    g: &Graph,
    anchor: NodeId,
    k: usize,
    sub: &mut Vec<NodeId>,
    mut ext: Vec<NodeId>,
    emit: &mut F,
) {
    if sub.len() == k {
        emit(sub);
        return;
    }
    while let Some(w) = ext.pop() {
        let mut next = ext.clone();
        if sub.len() + 1 < k {
            for &u in g.neighbors(w) {
                if u == anchor || sub.contains(&u) || next.contains(&u) {
                    continue;
                }
                // exclusive neighborhood: not adjacent to the current subgraph
                if sub.iter().any(|&s| g.has_edge(s, u)) {
                    continue;
                }
                next.push(u);
            }
        }
        sub.push(w);
        extend(g, anchor, k, sub, next, emit);
        sub.pop();
    }
}

/// Every connected induced `k`-node subgraph containing `anchor`, each as a
/// sorted node list.
pub fn enumerate_cises(g: &Graph, anchor: NodeId, k: usize) -> Vec<Vec<NodeId>> {
    let mut out = Vec::new();
    for_each_cis(g, anchor, k, |m| {
        let mut m = m.to_vec();
        m.sort_unstable();
        out.push(m);
    });
    out
}

/// Upper bound on the 3- and 4-node CISes through a node: the total number
/// of selection paths of all six samplers, each CIS being reachable by at
/// least one of them.
pub fn candidate_bound(stats: &NodeLocalStats) -> u128 {
    let sel = |m: Method| -> u128 {
        let d = m.denominator(stats) as u128;
        match m {
            Method::R31 | Method::R42 => 2 * d,
            Method::R44 => 6 * d,
            _ => d,
        }
    };
    Method::ALL.iter().map(|&m| sel(m)).sum()
}

/// Exact orbit degrees of one node.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct OrbitCounts {
    pub node: NodeId,
    pub undirected: [u64; Orbit::COUNT],
    pub directed: Option<[u64; DirectedOrbit::COUNT]>,
}

impl OrbitCounts {
    pub fn get(&self, orbit: Orbit) -> u64 {
        self.undirected[orbit.index()]
    }

    pub fn get_directed(&self, orbit: DirectedOrbit) -> Option<u64> {
        self.directed.map(|d| d[orbit.index()])
    }

    pub fn undirected_f64(&self) -> [f64; Orbit::COUNT] {
        self.undirected.map(|c| c as f64)
    }
}

/// Exact counts for `anchor`, or an error if [`candidate_bound`] exceeds
/// `guard`.
pub fn exact_orbit_degrees_guarded(
    g: &Graph,
    anchor: NodeId,
    guard: u64,
) -> Result<OrbitCounts, OracleError> {
    let stats = g.stats(anchor)?;
    let bound = candidate_bound(&stats);
    if bound > guard as u128 {
        return Err(OracleError::GuardExceeded {
            node: anchor,
            bound,
            limit: guard,
        });
    }
    exact_orbit_degrees(g, anchor)
}

/// Exact counts for `anchor`; directed counts are filled in for directed
/// graphs.
pub fn exact_orbit_degrees(g: &Graph, anchor: NodeId) -> Result<OrbitCounts, OracleError> {
    g.check_node(anchor)?;
    let mut undirected = [0u64; Orbit::COUNT];
    let mut directed = g.is_directed().then_some([0u64; DirectedOrbit::COUNT]);
    undirected[0] = g.degree(anchor) as u64;
    let mut failure = None;
    for k in [3, 4] {
        for_each_cis(g, anchor, k, |m| {
            match classify_undirected(g, anchor, m) {
                Ok(o) => undirected[o.index()] += 1,
                Err(e) => failure = Some(e),
            }
            if let (Some(d), 3) = (directed.as_mut(), k) {
                match classify_directed3(g, anchor, m) {
                    Ok(o) => d[o.index()] += 1,
                    Err(e) => failure = Some(e),
                }
            }
        });
    }
    if let Some(e) = failure {
        return Err(e.into());
    }
    Ok(OrbitCounts {
        node: anchor,
        undirected,
        directed,
    })
}

/// Residuals of the three linear identities between orbit degrees and the
/// node's local counts, plus the directed-to-undirected sums when present.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct IdentityReport {
    /// `c2 + c3 - pairs`
    pub pairs: i128,
    /// `2c3 + c4 + 2c8 + 2c9 + c10 + 4c12 + 2c13 + 6c14 - three_paths`
    pub three_paths: i128,
    /// `c7 + c11 + c13 + c14 - triples`
    pub triples: i128,
    /// For undirected orbits 1, 2, 3: sum of matching directed counts minus
    /// the undirected count.
    pub directed_sums: Option<[i128; 3]>,
}

impl IdentityReport {
    pub fn holds(&self) -> bool {
        self.pairs == 0
            && self.three_paths == 0
            && self.triples == 0
            && self.directed_sums.map_or(true, |d| d == [0; 3])
    }
}

pub fn verify_identities(counts: &OrbitCounts, stats: &NodeLocalStats) -> IdentityReport {
    let c = counts.undirected.map(|x| x as i128);
    let directed_sums = counts.directed.map(|d| {
        let mut sums = [0i128; 3];
        for o in DirectedOrbit::all() {
            sums[o.class().undirected().index() - 1] += d[o.index()] as i128;
        }
        [sums[0] - c[1], sums[1] - c[2], sums[2] - c[3]]
    });
    IdentityReport {
        pairs: c[2] + c[3] - stats.pairs as i128,
        three_paths: 2 * c[3]
            + c[4]
            + 2 * c[8]
            + 2 * c[9]
            + c[10]
            + 4 * c[12]
            + 2 * c[13]
            + 6 * c[14]
            - stats.three_paths as i128,
        triples: c[7] + c[11] + c[13] + c[14] - stats.triples as i128,
        directed_sums,
    }
}

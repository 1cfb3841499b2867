//! Seeded random graphs for tests and benchmarks.

use std::collections::HashSet;

use rand::seq::SliceRandom;
use rand::Rng;

use crate::graph::{Graph, NodeId};
use crate::rng::RandomSource;

/// `G(n, p)`: every pair independently with probability `p`.
pub fn erdos_renyi(n: usize, p: f64, seed: u64) -> Graph {
    let mut rng = RandomSource::new(seed);
    let mut edges = Vec::new();
    for u in 0..n {
        for v in u + 1..n {
            if rng.gen_bool(p) {
                edges.push((u, v));
            }
        }
    }
    Graph::from_edges(n, &edges)
}

/// `G(n, m)`: `m` distinct edges drawn uniformly. Suited to large sparse
/// graphs where `G(n, p)` would visit every pair.
pub fn gnm(n: usize, m: usize, seed: u64) -> Graph {
    assert!(n >= 2 && m <= n * (n - 1) / 2, "too many edges");
    let mut rng = RandomSource::new(seed);
    let mut seen = HashSet::with_capacity(m);
    let mut edges = Vec::with_capacity(m);
    while edges.len() < m {
        let u = rng.gen_range(0..n);
        let v = rng.gen_range(0..n);
        if u != v && seen.insert((u.min(v), u.max(v))) {
            edges.push((u, v));
        }
    }
    Graph::from_edges(n, &edges)
}

/// Preferential attachment: each new node links to `m` distinct earlier
/// nodes chosen with probability proportional to degree.
pub fn barabasi_albert(n: usize, m: usize, seed: u64) -> Graph {
    assert!(m >= 1 && n > m, "need n > m >= 1");
    let mut rng = RandomSource::new(seed);
    let mut edges = Vec::new();
    // endpoint list: a node appears once per incident edge
    let mut ends: Vec<NodeId> = Vec::new();
    for u in 0..=m {
        for v in u + 1..=m {
            edges.push((u, v));
            ends.extend([u, v]);
        }
    }
    for v in m + 1..n {
        let mut targets = Vec::with_capacity(m);
        while targets.len() < m {
            let t = *ends.choose(&mut rng).expect("seed clique is nonempty");
            if !targets.contains(&t) {
                targets.push(t);
            }
        }
        for t in targets {
            edges.push((v, t));
            ends.extend([v, t]);
        }
    }
    Graph::from_edges(n, &edges)
}

/// Directed `G(n, p)`: each pair is linked with probability `p`; a link is
/// mutual with probability `mutual`, otherwise one arc in a random direction.
pub fn random_digraph(n: usize, p: f64, mutual: f64, seed: u64) -> Graph {
    let mut rng = RandomSource::new(seed);
    let mut arcs = Vec::new();
    for u in 0..n {
        for v in u + 1..n {
            if !rng.gen_bool(p) {
                continue;
            }
            if rng.gen_bool(mutual) {
                arcs.extend([(u, v), (v, u)]);
            } else if rng.gen_bool(0.5) {
                arcs.push((u, v));
            } else {
                arcs.push((v, u));
            }
        }
    }
    Graph::from_arcs(n, &arcs)
}

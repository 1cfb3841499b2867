//! Automorphism orbit of an anchor node inside a small connected induced
//! subgraph.
//!
//! Undirected orbits use the usual graphlet numbering:
//!
//! | orbit | graphlet | anchor position |
//! |-------|----------|-----------------|
//! | 0 | edge | either end |
//! | 1, 2 | 3-path | end, middle |
//! | 3 | triangle | any |
//! | 4, 5 | 4-path | end, inner |
//! | 6, 7 | claw | leaf, center |
//! | 8 | 4-cycle | any |
//! | 9, 10, 11 | paw | pendant, triangle degree 2, degree 3 |
//! | 12, 13 | diamond | degree 2, degree 3 |
//! | 14 | K4 | any |
//!
//! Directed 3-node orbits are numbered 1..=30. Within each underlying shape
//! the IDs follow a canonical rank of the direction codes around the anchor;
//! see [`directed_orbit_table`].

use std::fmt;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::{Direction, Graph, NodeId};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum OrbitError {
    #[error("members do not induce a connected subgraph")]
    NotConnected,
    #[error("anchor {0} is not among the members")]
    AnchorMissing(NodeId),
    #[error("expected {expected} distinct members, got {got}")]
    BadSize { expected: &'static str, got: usize },
    #[error("directed classification needs a directed graph")]
    NotDirected,
    #[error("orbit id {0} out of range")]
    OutOfRange(u8),
}

/// Undirected orbit, `0..=14`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Orbit(u8);

impl Orbit {
    pub const COUNT: usize = 15;

    pub fn new(id: u8) -> Result<Self, OrbitError> {
        if (id as usize) < Self::COUNT {
            Ok(Orbit(id))
        } else {
            Err(OrbitError::OutOfRange(id))
        }
    }

    pub const fn id(self) -> u8 {
        self.0
    }

    pub const fn index(self) -> usize {
        self.0 as usize
    }

    /// Orbits 1..=14, i.e. everything but the edge orbit.
    pub fn sampled() -> impl Iterator<Item = Orbit> {
        (1..Self::COUNT as u8).map(Orbit)
    }

    /// Number of nodes in the graphlet this orbit belongs to.
    pub fn graphlet_size(self) -> usize {
        match self.0 {
            0 => 2,
            1..=3 => 3,
            _ => 4,
        }
    }
}

impl fmt::Display for Orbit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

/// Shape of the underlying undirected 3-node CIS, seen from the anchor.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TriadClass {
    PathEnd,
    PathCenter,
    Triangle,
}

impl TriadClass {
    pub fn undirected(self) -> Orbit {
        match self {
            TriadClass::PathEnd => Orbit(1),
            TriadClass::PathCenter => Orbit(2),
            TriadClass::Triangle => Orbit(3),
        }
    }
}

/// Directed 3-node orbit, `1..=30`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct DirectedOrbit(u8);

const END_IDS: [u8; 9] = [2, 4, 5, 7, 9, 10, 12, 13, 15];
const CENTER_IDS: [u8; 6] = [1, 3, 6, 8, 11, 14];

impl DirectedOrbit {
    pub const COUNT: usize = 30;

    pub fn new(id: u8) -> Result<Self, OrbitError> {
        if (1..=Self::COUNT as u8).contains(&id) {
            Ok(DirectedOrbit(id))
        } else {
            Err(OrbitError::OutOfRange(id))
        }
    }

    pub const fn id(self) -> u8 {
        self.0
    }

    /// Zero-based slot, `id - 1`.
    pub const fn index(self) -> usize {
        self.0 as usize - 1
    }

    pub fn all() -> impl Iterator<Item = DirectedOrbit> {
        (1..=Self::COUNT as u8).map(DirectedOrbit)
    }

    pub fn class(self) -> TriadClass {
        if self.0 >= 16 {
            TriadClass::Triangle
        } else if CENTER_IDS.contains(&self.0) {
            TriadClass::PathCenter
        } else {
            TriadClass::PathEnd
        }
    }
}

impl fmt::Display for DirectedOrbit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

/// Undirected orbit obtained by discarding edge directions.
pub fn unorbit(id: u8) -> Result<Orbit, OrbitError> {
    Ok(DirectedOrbit::new(id)?.class().undirected())
}

struct Local {
    nodes: [NodeId; 4],
    len: usize,
    adj: [u8; 4],
}

impl Local {
    fn new(g: &Graph, anchor: NodeId, members: &[NodeId]) -> Result<Self, OrbitError> {
        let len = members.len();
        let mut nodes = [0; 4];
        // anchor goes to slot 0
        let at = members
            .iter()
            .position(|&m| m == anchor)
            .ok_or(OrbitError::AnchorMissing(anchor))?;
        nodes[0] = anchor;
        let mut k = 1;
        for (i, &m) in members.iter().enumerate() {
            if i != at {
                nodes[k] = m;
                k += 1;
            }
        }
        for i in 0..len {
            for j in 0..i {
                if nodes[i] == nodes[j] {
                    return Err(OrbitError::BadSize {
                        expected: "distinct",
                        got: len,
                    });
                }
            }
        }
        let mut adj = [0u8; 4];
        for i in 0..len {
            for j in (i + 1)..len {
                if g.has_edge(nodes[i], nodes[j]) {
                    adj[i] |= 1 << j;
                    adj[j] |= 1 << i;
                }
            }
        }
        let local = Local { nodes, len, adj };
        if !local.connected() {
            return Err(OrbitError::NotConnected);
        }
        Ok(local)
    }

    fn connected(&self) -> bool {
        let full = (1u8 << self.len) - 1;
        let mut seen = 1u8;
        loop {
            let mut next = seen;
            for i in 0..self.len {
                if seen & (1 << i) != 0 {
                    next |= self.adj[i];
                }
            }
            if next == seen {
                return seen == full;
            }
            seen = next;
        }
    }

    fn degree(&self, i: usize) -> u32 {
        self.adj[i].count_ones()
    }
}

/// Orbit of `anchor` in the subgraph induced by `members` (2 to 4 nodes,
/// anchor included).
pub fn classify_undirected(
    g: &Graph,
    anchor: NodeId,
    members: &[NodeId],
) -> Result<Orbit, OrbitError> {
    if !(2..=4).contains(&members.len()) {
        return Err(OrbitError::BadSize {
            expected: "2 to 4",
            got: members.len(),
        });
    }
    let local = Local::new(g, anchor, members)?;
    let n = local.len;
    let a = local.degree(0);
    let edges: u32 = (0..n).map(|i| local.degree(i)).sum::<u32>() / 2;
    let orbit = match (n, edges) {
        (2, _) => 0,
        (3, 2) => {
            if a == 1 {
                1
            } else {
                2
            }
        }
        (3, _) => 3,
        (4, 3) => {
            let max_deg = (0..4).map(|i| local.degree(i)).max().unwrap_or(0);
            match (max_deg, a) {
                (3, 3) => 7,
                (3, _) => 6,
                (_, 1) => 4,
                _ => 5,
            }
        }
        (4, 4) => {
            let max_deg = (0..4).map(|i| local.degree(i)).max().unwrap_or(0);
            if max_deg == 2 {
                8
            } else {
                match a {
                    1 => 9,
                    2 => 10,
                    _ => 11,
                }
            }
        }
        (4, 5) => {
            if a == 2 {
                12
            } else {
                13
            }
        }
        _ => 14,
    };
    Ok(Orbit(orbit))
}

fn triangle_canonical(a: u8, b: u8, c: u8) -> (u8, u8, u8) {
    let swapped = (
        b,
        a,
        Direction::from_code(c).map_or(c, |d| d.reverse().code()),
    );
    (a, b, c).min(swapped)
}

/// Triangle orbit IDs indexed by `(a-1)*9 + (b-1)*3 + (c-1)`.
fn triangle_ids() -> &'static [u8; 27] {
    static TABLE: OnceLock<[u8; 27]> = OnceLock::new();
    TABLE.get_or_init(|| {
        let mut reps: Vec<(u8, u8, u8)> = Vec::new();
        for a in 1..=3 {
            for b in 1..=3 {
                for c in 1..=3 {
                    reps.push(triangle_canonical(a, b, c));
                }
            }
        }
        let mut canon = reps.clone();
        canon.sort_unstable();
        canon.dedup();
        debug_assert_eq!(canon.len(), 15);
        let mut ids = [0u8; 27];
        for (i, rep) in reps.iter().enumerate() {
            ids[i] = 16 + canon.binary_search(rep).unwrap() as u8;
        }
        ids
    })
}

fn center_rank(x: u8, y: u8) -> usize {
    let (x, y) = if x <= y { (x, y) } else { (y, x) };
    match (x, y) {
        (1, 1) => 0,
        (1, 2) => 1,
        (1, 3) => 2,
        (2, 2) => 3,
        (2, 3) => 4,
        _ => 5,
    }
}

/// Directed orbit from the anchor's direction codes.
///
/// * end: `(code(v,u), code(u,w))` for the path `v - u - w`;
/// * center: `{code(v,u), code(v,w)}`;
/// * triangle: `(code(v,u), code(v,w), code(u,w))`.
pub fn directed_orbit_from_codes(class: TriadClass, codes: &[u8]) -> DirectedOrbit {
    match class {
        TriadClass::PathEnd => {
            DirectedOrbit(END_IDS[(codes[0] as usize - 1) * 3 + codes[1] as usize - 1])
        }
        TriadClass::PathCenter => DirectedOrbit(CENTER_IDS[center_rank(codes[0], codes[1])]),
        TriadClass::Triangle => {
            let i =
                (codes[0] as usize - 1) * 9 + (codes[1] as usize - 1) * 3 + codes[2] as usize - 1;
            DirectedOrbit(triangle_ids()[i])
        }
    }
}

fn code(g: &Graph, a: NodeId, b: NodeId) -> u8 {
    g.direction(a, b).map_or(0, Direction::code)
}

/// Directed orbit of `anchor` in the 3-node CIS induced by `members`.
pub fn classify_directed3(
    g: &Graph,
    anchor: NodeId,
    members: &[NodeId],
) -> Result<DirectedOrbit, OrbitError> {
    if !g.is_directed() {
        return Err(OrbitError::NotDirected);
    }
    if members.len() != 3 {
        return Err(OrbitError::BadSize {
            expected: "3",
            got: members.len(),
        });
    }
    let local = Local::new(g, anchor, members)?;
    let [v, x, y, _] = local.nodes;
    let orbit = match local.degree(0) {
        2 if local.adj[1] & 0b100 != 0 => directed_orbit_from_codes(
            TriadClass::Triangle,
            &[code(g, v, x), code(g, v, y), code(g, x, y)],
        ),
        2 => directed_orbit_from_codes(TriadClass::PathCenter, &[code(g, v, x), code(g, v, y)]),
        _ => {
            // v - u - w with u the anchor's only neighbor
            let (u, w) = if local.adj[0] & 0b010 != 0 {
                (x, y)
            } else {
                (y, x)
            };
            directed_orbit_from_codes(TriadClass::PathEnd, &[code(g, v, u), code(g, u, w)])
        }
    };
    Ok(orbit)
}

/// One row of the directed orbit numbering.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct DirectedOrbitRow {
    pub id: u8,
    pub class: TriadClass,
    pub unorbit: u8,
    /// Canonical direction codes (1 out, 2 in, 3 mutual).
    pub codes: Vec<u8>,
    /// Human-readable arcs, anchor `v`.
    pub pattern: String,
}

fn arrow(a: &str, c: u8, b: &str) -> String {
    let d = Direction::from_code(c).expect("valid code");
    format!("{a}{d}{b}")
}

/// All 30 directed orbits with the canonical codes that produce them.
pub fn directed_orbit_table() -> Vec<DirectedOrbitRow> {
    let mut rows = Vec::with_capacity(30);
    for a in 1..=3u8 {
        for b in 1..=3u8 {
            let id = directed_orbit_from_codes(TriadClass::PathEnd, &[a, b]);
            rows.push(DirectedOrbitRow {
                id: id.id(),
                class: TriadClass::PathEnd,
                unorbit: 1,
                codes: vec![a, b],
                pattern: format!("{} {}", arrow("v", a, "u"), arrow("u", b, "w")),
            });
            if a <= b {
                let id = directed_orbit_from_codes(TriadClass::PathCenter, &[a, b]);
                rows.push(DirectedOrbitRow {
                    id: id.id(),
                    class: TriadClass::PathCenter,
                    unorbit: 2,
                    codes: vec![a, b],
                    pattern: format!("{} {}", arrow("v", a, "u"), arrow("v", b, "w")),
                });
            }
            for c in 1..=3u8 {
                if triangle_canonical(a, b, c) == (a, b, c) {
                    let id = directed_orbit_from_codes(TriadClass::Triangle, &[a, b, c]);
                    rows.push(DirectedOrbitRow {
                        id: id.id(),
                        class: TriadClass::Triangle,
                        unorbit: 3,
                        codes: vec![a, b, c],
                        pattern: format!(
                            "{} {} {}",
                            arrow("v", a, "u"),
                            arrow("v", b, "w"),
                            arrow("u", c, "w")
                        ),
                    });
                }
            }
        }
    }
    rows.sort_by_key(|r| r.id);
    rows
}

#[cfg(test)]
mod tests {
    use super::*;

    fn paw() -> Graph {
        Graph::from_edges(4, &[(0, 1), (1, 2), (0, 2), (2, 3)])
    }

    fn orb(g: &Graph, a: NodeId, m: &[NodeId]) -> u8 {
        classify_undirected(g, a, m).unwrap().id()
    }

    #[test]
    fn paw_positions() {
        let g = paw();
        let m = [0, 1, 2, 3];
        assert_eq!(orb(&g, 3, &m), 9);
        assert_eq!(orb(&g, 2, &m), 11);
        assert_eq!(orb(&g, 0, &m), 10);
        assert_eq!(orb(&g, 1, &m), 10);
    }

    #[test]
    fn cycle_and_diamond() {
        let c4 = Graph::from_edges(4, &[(0, 1), (1, 2), (2, 3), (3, 0)]);
        for a in 0..4 {
            assert_eq!(orb(&c4, a, &[0, 1, 2, 3]), 8);
        }
        // K4 minus edge 0-2
        let d = Graph::from_edges(4, &[(0, 1), (1, 2), (2, 3), (3, 0), (1, 3)]);
        assert_eq!(orb(&d, 0, &[0, 1, 2, 3]), 12);
        assert_eq!(orb(&d, 2, &[0, 1, 2, 3]), 12);
        assert_eq!(orb(&d, 1, &[0, 1, 2, 3]), 13);
        assert_eq!(orb(&d, 3, &[0, 1, 2, 3]), 13);
    }

    #[test]
    fn paths_stars_small() {
        let p = Graph::from_edges(4, &[(0, 1), (1, 2), (2, 3)]);
        assert_eq!(orb(&p, 0, &[0, 1, 2, 3]), 4);
        assert_eq!(orb(&p, 1, &[0, 1, 2, 3]), 5);
        assert_eq!(orb(&p, 0, &[0, 1, 2]), 1);
        assert_eq!(orb(&p, 1, &[0, 1, 2]), 2);
        assert_eq!(orb(&p, 1, &[1, 2]), 0);
        let s = Graph::from_edges(4, &[(0, 1), (0, 2), (0, 3)]);
        assert_eq!(orb(&s, 0, &[0, 1, 2, 3]), 7);
        assert_eq!(orb(&s, 2, &[0, 1, 2, 3]), 6);
        let k3 = Graph::from_edges(3, &[(0, 1), (1, 2), (0, 2)]);
        assert_eq!(orb(&k3, 1, &[0, 1, 2]), 3);
    }

    #[test]
    fn rejects_bad_member_sets() {
        let p = Graph::from_edges(4, &[(0, 1), (2, 3)]);
        assert_eq!(
            classify_undirected(&p, 0, &[0, 1, 2, 3]),
            Err(OrbitError::NotConnected)
        );
        assert_eq!(
            classify_undirected(&p, 2, &[0, 1]),
            Err(OrbitError::AnchorMissing(2))
        );
        assert!(classify_undirected(&p, 0, &[0]).is_err());
        assert!(classify_undirected(&p, 0, &[0, 1, 1]).is_err());
    }

    #[test]
    fn unorbit_partition() {
        assert_eq!(unorbit(8).unwrap().id(), 2);
        assert_eq!(unorbit(15).unwrap().id(), 1);
        assert_eq!(unorbit(23).unwrap().id(), 3);
        assert!(unorbit(0).is_err());
        assert!(unorbit(31).is_err());
        let ones: Vec<u8> = (1..=30)
            .filter(|&i| unorbit(i).unwrap().id() == 1)
            .collect();
        assert_eq!(ones, vec![2, 4, 5, 7, 9, 10, 12, 13, 15]);
        let twos: Vec<u8> = (1..=30)
            .filter(|&i| unorbit(i).unwrap().id() == 2)
            .collect();
        assert_eq!(twos, vec![1, 3, 6, 8, 11, 14]);
    }

    #[test]
    fn directed_examples() {
        // mutual center
        let g = Graph::from_arcs(3, &[(0, 1), (1, 0), (0, 2), (2, 0)]);
        assert_eq!(classify_directed3(&g, 0, &[0, 1, 2]).unwrap().id(), 14);
        // all-mutual triangle
        let t = Graph::from_arcs(3, &[(0, 1), (1, 0), (0, 2), (2, 0), (1, 2), (2, 1)]);
        for a in 0..3 {
            assert_eq!(classify_directed3(&t, a, &[0, 1, 2]).unwrap().id(), 30);
        }
        // v -> u -> w, anchor v
        let p = Graph::from_arcs(3, &[(0, 1), (1, 2)]);
        assert_eq!(classify_directed3(&p, 0, &[2, 1, 0]).unwrap().id(), 2);
        // out-star
        let s = Graph::from_arcs(3, &[(0, 1), (0, 2)]);
        assert_eq!(classify_directed3(&s, 0, &[0, 1, 2]).unwrap().id(), 1);
        assert_eq!(
            classify_directed3(&s.to_undirected(), 0, &[0, 1, 2]),
            Err(OrbitError::NotDirected)
        );
    }

    #[test]
    fn table_covers_every_id_once() {
        let rows = directed_orbit_table();
        assert_eq!(rows.len(), 30);
        for (i, r) in rows.iter().enumerate() {
            assert_eq!(r.id as usize, i + 1);
            assert_eq!(unorbit(r.id).unwrap().id(), r.unorbit);
        }
        assert_eq!(
            rows.iter()
                .filter(|r| r.class == TriadClass::Triangle)
                .count(),
            15
        );
    }
}

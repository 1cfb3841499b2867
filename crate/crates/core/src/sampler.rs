//! Anchored CIS samplers with closed-form selection bias.
//!
//! Each [`Method`] draws a 3- or 4-node connected induced subgraph that
//! contains the anchor `v`. Every concrete CIS in which `v` sits at orbit `i`
//! is drawn with the same probability `ways_i / denominator`, where the
//! denominator is one of the exact counts in [`NodeLocalStats`]. That
//! property is what the estimators invert.

use std::fmt;
use std::sync::Arc;

use num_rational::Ratio;
use num_traits::{Float, FromPrimitive};
use rand::RngCore;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::{Graph, GraphError, NodeId};
use crate::orbit::Orbit;
use crate::rng::uniform_below;
use crate::stats::NodeLocalStats;

#[derive(Debug, Error)]
pub enum SampleError {
    #[error("{method}: anchor degree {degree} is below the required {needed}")]
    DegreeTooSmall {
        method: Method,
        degree: u64,
        needed: u64,
    },
    #[error("cannot sample: {0}")]
    CannotSample(&'static str),
    #[error("{0}: selection count is zero, bias undefined")]
    BiasUndefined(Method),
    #[error(transparent)]
    Graph(#[from] GraphError),
}

/// The six sampling procedures, in table order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Method {
    /// Two distinct neighbors of `v`.
    R31,
    /// A neighbor `u` (weighted by `d_u - 1`) and one of its other neighbors.
    R32,
    /// `R32`'s two-path plus a second neighbor of `v`.
    R41,
    /// A neighbor `u` (weighted by `C(d_u - 1, 2)`) and two more neighbors of `u`.
    R42,
    /// A three-hop walk `v-u-w-r`, weighted so that every walk is equally likely.
    R43,
    /// Three distinct neighbors of `v`.
    R44,
}

impl Method {
    pub const ALL: [Method; 6] = [
        Method::R31,
        Method::R32,
        Method::R41,
        Method::R42,
        Method::R43,
        Method::R44,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Method::R31 => "R31",
            Method::R32 => "R32",
            Method::R41 => "R41",
            Method::R42 => "R42",
            Method::R43 => "R43",
            Method::R44 => "R44",
        }
    }

    /// Number of distinct selection paths that produce one fixed CIS with
    /// the anchor at each orbit (index = orbit id).
    pub const fn ways(self) -> [u64; Orbit::COUNT] {
        match self {
            //               0  1  2  3  4  5  6  7  8  9 10 11 12 13 14
            Method::R31 => [0, 0, 1, 1, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0],
            Method::R32 => [0, 1, 0, 2, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0],
            Method::R41 => [0, 0, 0, 2, 0, 1, 0, 0, 2, 0, 1, 2, 2, 4, 6],
            Method::R42 => [0, 0, 0, 0, 0, 0, 1, 0, 0, 1, 1, 0, 2, 1, 3],
            Method::R43 => [0, 0, 0, 2, 1, 0, 0, 0, 2, 2, 1, 0, 4, 2, 6],
            Method::R44 => [0, 0, 0, 0, 0, 0, 0, 1, 0, 0, 0, 1, 0, 1, 1],
        }
    }

    /// The count every probability of this method is divided by.
    pub fn denominator(self, stats: &NodeLocalStats) -> u64 {
        match self {
            Method::R31 => stats.pairs,
            Method::R32 => stats.two_paths,
            Method::R41 => stats.path_branch,
            Method::R42 => stats.neighbor_forks,
            Method::R43 => stats.three_paths,
            Method::R44 => stats.triples,
        }
    }

    /// Whether the method can draw at all from this anchor.
    pub fn is_feasible(self, stats: &NodeLocalStats) -> bool {
        self.denominator(stats) > 0
    }

    pub fn can_observe(self, orbit: Orbit) -> bool {
        self.ways()[orbit.index()] > 0
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Exact per-orbit probabilities of one method at one anchor.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SamplerBias {
    pub method: Method,
    pub p: [Ratio<u64>; Orbit::COUNT],
}

impl SamplerBias {
    pub fn get(&self, orbit: Orbit) -> Ratio<u64> {
        self.p[orbit.index()]
    }

    /// Probability as a floating-point scalar.
    pub fn value<F: Float + FromPrimitive>(&self, orbit: Orbit) -> F {
        let r = self.get(orbit);
        F::from_u64(*r.numer()).unwrap() / F::from_u64(*r.denom()).unwrap()
    }
}

/// Per-orbit probabilities of `method` at the node described by `stats`.
pub fn bias_vector(method: Method, stats: &NodeLocalStats) -> Result<SamplerBias, SampleError> {
    let denom = method.denominator(stats);
    if denom == 0 {
        return Err(SampleError::BiasUndefined(method));
    }
    let ways = method.ways();
    let p = std::array::from_fn(|i| Ratio::new(ways[i], denom));
    Ok(SamplerBias { method, p })
}

/// One sampled CIS.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct SampledCis {
    pub anchor: NodeId,
    pub method: Method,
    nodes: [NodeId; 4],
    len: u8,
}

impl SampledCis {
    fn new(anchor: NodeId, method: Method, nodes: [NodeId; 4], len: u8) -> Self {
        SampledCis {
            anchor,
            method,
            nodes,
            len,
        }
    }

    /// Member nodes; the anchor is always first.
    pub fn members(&self) -> &[NodeId] {
        &self.nodes[..self.len as usize]
    }

    /// Members in increasing order.
    pub fn sorted_members(&self) -> Vec<NodeId> {
        let mut m = self.members().to_vec();
        m.sort_unstable();
        m
    }
}

/// Uniform position in `0..len` skipping the `excluded` positions.
///
/// `excluded` holds at most a couple of distinct in-range positions. The draw
/// is a single uniform index over the reduced range, shifted past each
/// excluded slot.
pub fn random_vertex<R: RngCore + ?Sized>(
    len: usize,
    excluded: &[usize],
    rng: &mut R,
) -> Result<usize, SampleError> {
    if len <= excluded.len() {
        return Err(SampleError::CannotSample("no candidates left"));
    }
    let mut idx = uniform_below(rng, (len - excluded.len()) as u64) as usize;
    let mut skip = [usize::MAX; 2];
    skip[..excluded.len()].copy_from_slice(excluded);
    if skip[0] > skip[1] {
        skip.swap(0, 1);
    }
    for &p in &skip[..excluded.len()] {
        if idx >= p {
            idx += 1;
        }
    }
    Ok(idx)
}

/// Position `i` with probability `(acc[i] - acc[i-1]) / acc[last]`.
pub fn weighted_random_vertex<R: RngCore + ?Sized>(
    acc: &[u64],
    rng: &mut R,
) -> Result<usize, SampleError> {
    let total = acc.last().copied().unwrap_or(0);
    if total == 0 {
        return Err(SampleError::CannotSample("all weights are zero"));
    }
    let rnd = 1 + uniform_below(rng, total);
    Ok(acc.partition_point(|&a| a < rnd))
}

/// Like [`weighted_random_vertex`] with position `excluded` removed: its
/// segment of the cumulative range is cut out before drawing.
pub fn weighted_random_vertex_excluding<R: RngCore + ?Sized>(
    acc: &[u64],
    excluded: usize,
    rng: &mut R,
) -> Result<usize, SampleError> {
    let total = acc.last().copied().unwrap_or(0);
    let lo = if excluded == 0 { 0 } else { acc[excluded - 1] };
    let seg = acc[excluded] - lo;
    if total == seg {
        return Err(SampleError::CannotSample("residual weight is zero"));
    }
    let mut rnd = 1 + uniform_below(rng, total - seg);
    if rnd > lo {
        rnd += seg;
    }
    Ok(acc.partition_point(|&a| a < rnd))
}

/// Samplers bound to one anchor node.
#[derive(Debug, Clone)]
pub struct AnchorSampler<'g> {
    graph: &'g Graph,
    anchor: NodeId,
    stats: Arc<NodeLocalStats>,
}

impl<'g> AnchorSampler<'g> {
    pub fn new(graph: &'g Graph, anchor: NodeId) -> Result<Self, SampleError> {
        let stats = graph.stats(anchor)?;
        Ok(AnchorSampler {
            graph,
            anchor,
            stats,
        })
    }

    pub fn graph(&self) -> &'g Graph {
        self.graph
    }

    pub fn anchor(&self) -> NodeId {
        self.anchor
    }

    pub fn stats(&self) -> &NodeLocalStats {
        &self.stats
    }

    pub fn bias(&self, method: Method) -> Result<SamplerBias, SampleError> {
        bias_vector(method, &self.stats)
    }

    pub fn sample<R: RngCore + ?Sized>(
        &self,
        method: Method,
        rng: &mut R,
    ) -> Result<SampledCis, SampleError> {
        match method {
            Method::R31 => self.sample_r31(rng),
            Method::R32 => self.sample_r32(rng),
            Method::R41 => self.sample_r41(rng),
            Method::R42 => self.sample_r42(rng),
            Method::R43 => self.sample_r43(rng),
            Method::R44 => self.sample_r44(rng),
        }
    }

    fn require_degree(&self, method: Method, needed: u64) -> Result<(), SampleError> {
        if self.stats.degree < needed {
            Err(SampleError::DegreeTooSmall {
                method,
                degree: self.stats.degree,
                needed,
            })
        } else {
            Ok(())
        }
    }

    /// `u`, `w`: two distinct uniform neighbors of the anchor.
    pub fn sample_r31<R: RngCore + ?Sized>(&self, rng: &mut R) -> Result<SampledCis, SampleError> {
        self.require_degree(Method::R31, 2)?;
        let nv = self.graph.neighbors(self.anchor);
        let i = random_vertex(nv.len(), &[], rng)?;
        let j = random_vertex(nv.len(), &[i], rng)?;
        Ok(SampledCis::new(
            self.anchor,
            Method::R31,
            [self.anchor, nv[i], nv[j], 0],
            3,
        ))
    }

    /// `u ~ d_u - 1`, then `w` uniform on `N(u) \ {v}`.
    pub fn sample_r32<R: RngCore + ?Sized>(&self, rng: &mut R) -> Result<SampledCis, SampleError> {
        let v = self.anchor;
        let nv = self.graph.neighbors(v);
        let i = weighted_random_vertex(&self.stats.acc_alpha, rng)?;
        let u = nv[i];
        let nu = self.graph.neighbors(u);
        let pv = self.graph.pos_of(u, v)?;
        let w = nu[random_vertex(nu.len(), &[pv], rng)?];
        Ok(SampledCis::new(v, Method::R32, [v, u, w, 0], 3))
    }

    /// `u ~ d_u - 1`, `w` uniform on `N(v) \ {u}`, `r` uniform on `N(u) \ {v}`.
    /// Collapses to the triangle `{v, u, w}` when `w == r`.
    pub fn sample_r41<R: RngCore + ?Sized>(&self, rng: &mut R) -> Result<SampledCis, SampleError> {
        self.require_degree(Method::R41, 2)?;
        let v = self.anchor;
        let nv = self.graph.neighbors(v);
        let i = weighted_random_vertex(&self.stats.acc_alpha, rng)?;
        let u = nv[i];
        let w = nv[random_vertex(nv.len(), &[i], rng)?];
        let nu = self.graph.neighbors(u);
        let pv = self.graph.pos_of(u, v)?;
        let r = nu[random_vertex(nu.len(), &[pv], rng)?];
        Ok(if w == r {
            SampledCis::new(v, Method::R41, [v, u, w, 0], 3)
        } else {
            SampledCis::new(v, Method::R41, [v, u, w, r], 4)
        })
    }

    /// `u ~ C(d_u - 1, 2)`, then two distinct uniform members of `N(u) \ {v}`.
    pub fn sample_r42<R: RngCore + ?Sized>(&self, rng: &mut R) -> Result<SampledCis, SampleError> {
        let v = self.anchor;
        let nv = self.graph.neighbors(v);
        let i = weighted_random_vertex(&self.stats.acc_beta, rng)?;
        let u = nv[i];
        let nu = self.graph.neighbors(u);
        let pv = self.graph.pos_of(u, v)?;
        let pw = random_vertex(nu.len(), &[pv], rng)?;
        let pr = random_vertex(nu.len(), &[pv, pw], rng)?;
        Ok(SampledCis::new(v, Method::R42, [v, u, nu[pw], nu[pr]], 4))
    }

    /// `u ~ two_paths(u) - d_v + 1`, `w ~ d_w - 1` over `N(u) \ {v}`, `r`
    /// uniform on `N(w) \ {u}`. Collapses to the triangle `{v, u, w}` when
    /// `r == v`.
    pub fn sample_r43<R: RngCore + ?Sized>(&self, rng: &mut R) -> Result<SampledCis, SampleError> {
        let v = self.anchor;
        let nv = self.graph.neighbors(v);
        let i = weighted_random_vertex(&self.stats.acc_gamma, rng)?;
        let u = nv[i];
        let nu = self.graph.neighbors(u);
        let acc_u = self.graph.acc_alpha(u)?;
        let pv = self.graph.pos_of(u, v)?;
        let w = nu[weighted_random_vertex_excluding(&acc_u, pv, rng)?];
        let nw = self.graph.neighbors(w);
        let pu = self.graph.pos_of(w, u)?;
        let r = nw[random_vertex(nw.len(), &[pu], rng)?];
        Ok(if r == v {
            SampledCis::new(v, Method::R43, [v, u, w, 0], 3)
        } else {
            SampledCis::new(v, Method::R43, [v, u, w, r], 4)
        })
    }

    /// Three distinct uniform neighbors of the anchor.
    pub fn sample_r44<R: RngCore + ?Sized>(&self, rng: &mut R) -> Result<SampledCis, SampleError> {
        self.require_degree(Method::R44, 3)?;
        let nv = self.graph.neighbors(self.anchor);
        let i = random_vertex(nv.len(), &[], rng)?;
        let j = random_vertex(nv.len(), &[i], rng)?;
        let k = random_vertex(nv.len(), &[i, j], rng)?;
        Ok(SampledCis::new(
            self.anchor,
            Method::R44,
            [self.anchor, nv[i], nv[j], nv[k]],
            4,
        ))
    }
}

//! Per-node combinatorial normalizers and prefix-weight arrays.
//!
//! Every sampler's selection probability has one of these counts as its
//! denominator, so they are kept exact (`u64`, checked).

use crate::graph::{Graph, GraphError, NodeId};

/// Exact local counts around one node `v` of degree `d`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NodeLocalStats {
    pub node: NodeId,
    pub degree: u64,
    /// Unordered neighbor pairs, `d(d-1)/2`.
    pub pairs: u64,
    /// Paths `v-u-w` with `w != v`: sum over neighbors of `d_u - 1`.
    pub two_paths: u64,
    /// `(d - 1) * two_paths`: a two-path plus one more neighbor of `v`.
    pub path_branch: u64,
    /// Sum over neighbors of `C(d_u - 1, 2)`.
    pub neighbor_forks: u64,
    /// Walks `v-u-w-r` with `w != v`, `r != u`.
    pub three_paths: u64,
    /// Unordered neighbor triples, `d(d-1)(d-2)/6`.
    pub triples: u64,
    /// Running sums of `d_u - 1` over the sorted neighbors.
    pub acc_alpha: Vec<u64>,
    /// Running sums of `C(d_u - 1, 2)`.
    pub acc_beta: Vec<u64>,
    /// Running sums of `two_paths(u) - d + 1`.
    pub acc_gamma: Vec<u64>,
}

pub(crate) fn prefix_sums<I: IntoIterator<Item = u64>>(weights: I) -> Result<Vec<u64>, GraphError> {
    let mut total = 0u64;
    weights
        .into_iter()
        .map(|w| {
            total = total
                .checked_add(w)
                .ok_or(GraphError::Overflow("prefix weights"))?;
            Ok(total)
        })
        .collect()
}

fn mul(a: u64, b: u64, what: &'static str) -> Result<u64, GraphError> {
    a.checked_mul(b).ok_or(GraphError::Overflow(what))
}

/// `C(n, 2)` without intermediate overflow for the ranges that fit.
fn choose2(n: u64) -> Result<u64, GraphError> {
    if n < 2 {
        return Ok(0);
    }
    let (a, b) = if n % 2 == 0 {
        (n / 2, n - 1)
    } else {
        (n, (n - 1) / 2)
    };
    mul(a, b, "pair count")
}

fn choose3(n: u64) -> Result<u64, GraphError> {
    if n < 3 {
        return Ok(0);
    }
    // one of three consecutive integers is divisible by 3, one of n, n-1 by 2
    let mut f = [n, n - 1, n - 2];
    for div in [3u64, 2] {
        if let Some(x) = f.iter_mut().find(|x| **x % div == 0) {
            *x /= div;
        }
    }
    mul(mul(f[0], f[1], "triple count")?, f[2], "triple count")
}

impl NodeLocalStats {
    pub(crate) fn compute(g: &Graph, v: NodeId) -> Result<Self, GraphError> {
        let degree = g.degree(v) as u64;
        let nbrs = g.neighbors(v);

        let acc_alpha = prefix_sums(nbrs.iter().map(|&u| g.degree(u) as u64 - 1))?;
        let two_paths = acc_alpha.last().copied().unwrap_or(0);

        let beta_w = nbrs
            .iter()
            .map(|&u| choose2(g.degree(u) as u64 - 1))
            .collect::<Result<Vec<_>, _>>()?;
        let acc_beta = prefix_sums(beta_w)?;

        // two_paths(u) counts v itself once, with weight d_v - 1
        let gamma_w = nbrs
            .iter()
            .map(|&u| {
                let tp = g
                    .neighbors(u)
                    .iter()
                    .try_fold(0u64, |acc, &w| acc.checked_add(g.degree(w) as u64 - 1))
                    .ok_or(GraphError::Overflow("two-path count"))?;
                Ok(tp - (degree - 1))
            })
            .collect::<Result<Vec<_>, GraphError>>()?;
        let acc_gamma = prefix_sums(gamma_w)?;

        Ok(NodeLocalStats {
            node: v,
            degree,
            pairs: choose2(degree)?,
            two_paths,
            path_branch: mul(degree.saturating_sub(1), two_paths, "path-branch count")?,
            neighbor_forks: acc_beta.last().copied().unwrap_or(0),
            three_paths: acc_gamma.last().copied().unwrap_or(0),
            triples: choose3(degree)?,
            acc_alpha,
            acc_beta,
            acc_gamma,
        })
    }
}

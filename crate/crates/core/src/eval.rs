//! Accuracy metrics and repeated-run experiments against exact counts.

use std::collections::BTreeMap;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::estimator::{estimate, BudgetConfig, EstimateError, WeightRule};
use crate::graph::{Graph, NodeId};
use crate::oracle::{exact_orbit_degrees_guarded, OracleError};
use crate::report::{Mode, OrbitDegreeReport};
use crate::sampler::Method;

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("at least two runs are needed, got {0}")]
    TooFewRuns(usize),
    #[error("vector sums to zero and cannot be normalized")]
    ZeroSum,
    #[error("vectors differ in length ({0} vs {1})")]
    LengthMismatch(usize, usize),
    #[error(transparent)]
    Estimate(#[from] EstimateError),
    #[error(transparent)]
    Oracle(#[from] OracleError),
}

/// Root-mean-square error relative to `exact`; `None` when `exact` is 0.
pub fn nrmse(runs: &[f64], exact: f64) -> Result<Option<f64>, EvalError> {
    if runs.len() < 2 {
        return Err(EvalError::TooFewRuns(runs.len()));
    }
    if exact == 0.0 {
        return Ok(None);
    }
    let mse = runs.iter().map(|x| (x - exact).powi(2)).sum::<f64>() / runs.len() as f64;
    Ok(Some(mse.sqrt() / exact))
}

fn normalized(v: &[f64]) -> Result<Vec<f64>, EvalError> {
    let s: f64 = v.iter().sum();
    if s == 0.0 {
        return Err(EvalError::ZeroSum);
    }
    Ok(v.iter().map(|x| x / s).collect())
}

/// L1 and Euclidean distances between the two vectors after each is scaled
/// to sum to 1.
pub fn l1_l2(estimate: &[f64], exact: &[f64]) -> Result<(f64, f64), EvalError> {
    if estimate.len() != exact.len() {
        return Err(EvalError::LengthMismatch(estimate.len(), exact.len()));
    }
    let (a, b) = (normalized(estimate)?, normalized(exact)?);
    let diffs = a.iter().zip(&b).map(|(x, y)| x - y);
    let l1 = diffs.clone().map(f64::abs).sum();
    let l2 = diffs.map(|d| d * d).sum::<f64>().sqrt();
    Ok((l1, l2))
}

/// Positions of the `k` largest values; ties go to the lower position.
pub fn top_k(values: &[f64], k: usize) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..values.len()).collect();
    idx.sort_by(|&a, &b| values[b].total_cmp(&values[a]).then(a.cmp(&b)));
    idx.truncate(k);
    idx
}

/// Size of the overlap between the top-`k` sets of the two vectors.
pub fn topk_detection(estimate: &[f64], exact: &[f64], k: usize) -> usize {
    let want = top_k(exact, k);
    top_k(estimate, k)
        .iter()
        .filter(|i| want.contains(i))
        .count()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrbitSummary {
    pub id: u8,
    pub exact: Option<u64>,
    pub mean: f64,
    /// Sample variance of the estimates across runs.
    pub variance: f64,
    /// Mean of the per-run reported (plug-in) variances.
    pub reported_variance: f64,
    pub nrmse: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Distance {
    pub mean: f64,
    pub variance: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TopKSummary {
    pub k: usize,
    pub mean_hits: f64,
    /// Runs in which all `k` were recovered.
    pub full_recovery: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub node: u64,
    pub mode: Mode,
    pub runs: usize,
    pub budgets: BTreeMap<Method, u64>,
    pub seed: u64,
    /// False when the oracle refused the node; the exact-value metrics are
    /// then absent.
    pub exact_available: bool,
    pub orbits: Vec<OrbitSummary>,
    pub l1: Option<Distance>,
    pub l2: Option<Distance>,
    pub topk: Vec<TopKSummary>,
    /// Wall-clock seconds of each run, when requested.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub seconds_per_run: Option<Vec<f64>>,
}

fn mean_var(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = if xs.len() > 1 {
        xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)
    } else {
        0.0
    };
    (mean, var)
}

/// `runs` independent pipeline runs with seeds `seed, seed + 1, ...`, in run
/// order, plus the wall-clock seconds of each.
pub fn run_reports(
    g: &Graph,
    v: NodeId,
    mode: Mode,
    budget: &BudgetConfig,
    runs: usize,
    seed: u64,
    rule: WeightRule,
) -> Result<Vec<(OrbitDegreeReport<f64>, f64)>, EvalError> {
    (0..runs as u64)
        .into_par_iter()
        .map(|r| {
            let start = Instant::now();
            let rep = estimate::<f64>(g, v, mode, budget, seed.wrapping_add(r), rule)?;
            Ok((rep, start.elapsed().as_secs_f64()))
        })
        .collect()
}

/// Metrics over a set of runs. `exact` is indexed like each report's orbit
/// list.
pub fn summarize(
    reports: &[OrbitDegreeReport<f64>],
    exact: Option<&[u64]>,
) -> Result<EvalReport, EvalError> {
    let first = reports.first().ok_or(EvalError::TooFewRuns(0))?;
    let n_orbits = first.orbits.len();
    let mut orbits = Vec::with_capacity(n_orbits);
    for (pos, entry) in first.orbits.iter().enumerate() {
        let xs: Vec<f64> = reports.iter().map(|r| r.orbits[pos].estimate).collect();
        let reported: Vec<f64> = reports.iter().map(|r| r.orbits[pos].variance).collect();
        let (mean, variance) = mean_var(&xs);
        let truth = exact.map(|e| e[pos]);
        let nrmse = match truth {
            Some(t) if reports.len() >= 2 => nrmse(&xs, t as f64)?,
            _ => None,
        };
        orbits.push(OrbitSummary {
            id: entry.id,
            exact: truth,
            mean,
            variance,
            reported_variance: mean_var(&reported).0,
            nrmse,
        });
    }

    let (mut l1, mut l2, mut topk) = (None, None, Vec::new());
    if let (Mode::Directed3, Some(ex)) = (first.mode, exact) {
        let ex: Vec<f64> = ex.iter().map(|&c| c as f64).collect();
        let mut d1 = Vec::with_capacity(reports.len());
        let mut d2 = Vec::with_capacity(reports.len());
        let ks: Vec<usize> = [5, 10, 15].into_iter().filter(|&k| k <= ex.len()).collect();
        let mut hits = vec![Vec::with_capacity(reports.len()); ks.len()];
        for r in reports {
            let est = r.values();
            if let Ok((a, b)) = l1_l2(&est, &ex) {
                d1.push(a);
                d2.push(b);
            }
            for (h, &k) in hits.iter_mut().zip(&ks) {
                h.push(topk_detection(&est, &ex, k));
            }
        }
        if !d1.is_empty() {
            let (m1, v1) = mean_var(&d1);
            let (m2, v2) = mean_var(&d2);
            l1 = Some(Distance {
                mean: m1,
                variance: v1,
            });
            l2 = Some(Distance {
                mean: m2,
                variance: v2,
            });
        }
        topk = ks
            .iter()
            .zip(&hits)
            .map(|(&k, h)| TopKSummary {
                k,
                mean_hits: h.iter().sum::<usize>() as f64 / h.len() as f64,
                full_recovery: h.iter().filter(|&&x| x == k).count(),
            })
            .collect();
    }

    Ok(EvalReport {
        node: first.node,
        mode: first.mode,
        runs: reports.len(),
        budgets: first.budgets.clone(),
        seed: first.seed,
        exact_available: exact.is_some(),
        orbits,
        l1,
        l2,
        topk,
        seconds_per_run: None,
    })
}

/// Exact counts of `v` in the layout of a `mode` report, or `None` when the
/// oracle guard refuses the node.
pub fn exact_vector(
    g: &Graph,
    v: NodeId,
    mode: Mode,
    guard: u64,
) -> Result<Option<Vec<u64>>, EvalError> {
    match exact_orbit_degrees_guarded(g, v, guard) {
        Ok(c) => Ok(Some(match mode {
            Mode::Undirected => c.undirected.to_vec(),
            Mode::Directed3 => c.directed.map(|d| d.to_vec()).unwrap_or_default(),
        })),
        Err(OracleError::GuardExceeded { .. }) => Ok(None),
        Err(e) => Err(e.into()),
    }
}

/// Repeated runs at `v` summarized against the oracle (when it accepts the
/// node within `guard`).
#[allow(clippy::too_many_arguments)]
pub fn run_experiment(
    g: &Graph,
    v: NodeId,
    mode: Mode,
    budget: &BudgetConfig,
    runs: usize,
    seed: u64,
    rule: WeightRule,
    guard: u64,
    timing: bool,
) -> Result<EvalReport, EvalError> {
    let exact = exact_vector(g, v, mode, guard)?;
    let results = run_reports(g, v, mode, budget, runs, seed, rule)?;
    let (reports, seconds): (Vec<_>, Vec<_>) = results.into_iter().unzip();
    let mut report = summarize(&reports, exact.as_deref())?;
    report.seed = seed;
    if timing {
        report.seconds_per_run = Some(seconds);
    }
    Ok(report)
}

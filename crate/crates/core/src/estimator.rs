//! Orbit-degree estimates from tallies of sampled CISes.
//!
//! A single method gives the unbiased estimate `m / (K p)`; two methods that
//! see the same orbit are merged with inverse-variance weights. The full
//! undirected pipeline ([`sand`]) uses three methods and fills the remaining
//! orbits from the linear identities between orbit degrees and the node's
//! local counts; the directed pipeline ([`sand3d`]) uses two.

use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use num_traits::{Float, FromPrimitive};
use rayon::prelude::*;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

use crate::graph::{Graph, GraphError, NodeId};
use crate::orbit::{
    classify_directed3, classify_undirected, DirectedOrbit, Orbit, OrbitError, TriadClass,
};
use crate::report::{CovarianceEntry, Mode, OrbitDegreeReport, OrbitEntry};
use crate::rng::RandomSource;
use crate::sampler::{bias_vector, AnchorSampler, Method, SampleError, SamplerBias};
use crate::stats::NodeLocalStats;

/// Floating-point type the estimators compute in.
pub trait Scalar: Float + FromPrimitive + Send + Sync + fmt::Debug + 'static {}
impl<T: Float + FromPrimitive + Send + Sync + fmt::Debug + 'static> Scalar for T {}

#[derive(Debug, Error)]
pub enum EstimateError {
    #[error("selection probability is zero; the estimator is undefined")]
    ZeroProbability,
    #[error("no draws were made")]
    NoDraws,
    #[error("both estimates have zero variance but disagree ({a} vs {b})")]
    Inconsistent { a: f64, b: f64 },
    #[error("{0} can sample this node but was given a budget of zero")]
    ZeroBudget(Method),
    #[error("covariance of orbits {0} and {1} is not part of the model")]
    UnsupportedPair(u8, u8),
    #[error("directed estimation needs a directed graph")]
    NotDirected,
    #[error("no candidate methods")]
    NoCandidates,
    #[error(transparent)]
    Sample(#[from] SampleError),
    #[error(transparent)]
    Orbit(#[from] OrbitError),
    #[error(transparent)]
    Graph(#[from] GraphError),
}

/// Where an estimate came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Source {
    Method(Method),
    Combined,
    Identity,
    /// Zero because some method that could see the orbit has nothing to draw.
    Structural,
    Exact,
}

impl Source {
    pub fn as_str(self) -> &'static str {
        match self {
            Source::Method(m) => m.as_str(),
            Source::Combined => "combined",
            Source::Identity => "identity",
            Source::Structural => "structural",
            Source::Exact => "exact",
        }
    }
}

impl fmt::Display for Source {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Source {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Ok(match s {
            "combined" => Source::Combined,
            "identity" => Source::Identity,
            "structural" => Source::Structural,
            "exact" => Source::Exact,
            _ => Source::Method(
                Method::ALL
                    .into_iter()
                    .find(|m| m.as_str() == s)
                    .ok_or_else(|| format!("unknown source {s:?}"))?,
            ),
        })
    }
}

impl Serialize for Source {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(self.as_str())
    }
}

impl<'de> Deserialize<'de> for Source {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// An orbit-degree estimate with its (plug-in) variance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate<F> {
    pub value: F,
    pub variance: F,
    pub source: Source,
}

impl<F: Scalar> Estimate<F> {
    pub fn exact(value: F, source: Source) -> Self {
        Estimate {
            value,
            variance: F::zero(),
            source,
        }
    }

    /// The value floored at zero.
    pub fn clamped(&self) -> F {
        self.value.max(F::zero())
    }
}

fn scalar<F: Scalar>(x: u64) -> F {
    F::from_u64(x).expect("u64 converts to a float")
}

/// `d/K (1/p - d)`, floored at 0; zero when `K == 0`.
pub fn single_variance<F: Scalar>(d: F, k: u64, p: F) -> F {
    if k == 0 || p <= F::zero() {
        return F::zero();
    }
    (d / scalar(k) * (p.recip() - d)).max(F::zero())
}

/// Unbiased estimate from `m` hits in `k` draws, each hit having probability
/// `p`; the variance plugs the estimate in for the unknown degree.
pub fn estimate_single<F: Scalar>(
    m: u64,
    k: u64,
    p: F,
    source: Source,
) -> Result<Estimate<F>, EstimateError> {
    if !(p > F::zero()) {
        return Err(EstimateError::ZeroProbability);
    }
    if k == 0 {
        return Err(EstimateError::NoDraws);
    }
    let value = scalar::<F>(m) / (scalar::<F>(k) * p);
    Ok(Estimate {
        value,
        variance: single_variance(value, k, p),
        source,
    })
}

/// Inverse-variance weights `(w_a, w_b)`; equal weights when both are 0.
pub fn combine_weights<F: Scalar>(var_a: F, var_b: F) -> (F, F) {
    let total = var_a + var_b;
    if total > F::zero() {
        (var_b / total, var_a / total)
    } else {
        let half = F::from_f64(0.5).unwrap();
        (half, half)
    }
}

/// Minimum-variance unbiased combination of two independent estimates.
pub fn combine<F: Scalar>(a: Estimate<F>, b: Estimate<F>) -> Result<Estimate<F>, EstimateError> {
    let zero = F::zero();
    match (a.variance == zero, b.variance == zero) {
        (true, true) if a.value == b.value => Ok(a),
        (true, true) => Err(EstimateError::Inconsistent {
            a: a.value.to_f64().unwrap_or(f64::NAN),
            b: b.value.to_f64().unwrap_or(f64::NAN),
        }),
        (true, false) => Ok(a),
        (false, true) => Ok(b),
        (false, false) => Ok(weighted(a, b).0),
    }
}

/// Combination used inside the pipelines: never fails, and also returns the
/// weight given to `a`.
fn weighted<F: Scalar>(a: Estimate<F>, b: Estimate<F>) -> (Estimate<F>, F) {
    let (wa, wb) = combine_weights(a.variance, b.variance);
    let total = a.variance + b.variance;
    let variance = if total > F::zero() {
        a.variance * b.variance / total
    } else {
        F::zero()
    };
    (
        Estimate {
            value: wa * a.value + wb * b.value,
            variance,
            source: Source::Combined,
        },
        wa,
    )
}

/// How the pipelines weight two estimates of the same orbit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum WeightRule {
    /// Each estimate's variance is evaluated at its own value.
    #[default]
    PerSource,
    /// Both variances are evaluated at the pooled-hit estimate
    /// `(m_a + m_b) / (K_a p_a + K_b p_b)`, so the weights do not follow
    /// the noise of either estimate.
    Pooled,
}

impl WeightRule {
    pub fn as_str(self) -> &'static str {
        match self {
            WeightRule::PerSource => "per-source",
            WeightRule::Pooled => "pooled",
        }
    }

    pub fn is_default(&self) -> bool {
        *self == WeightRule::PerSource
    }
}

impl FromStr for WeightRule {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "per-source" => Ok(WeightRule::PerSource),
            "pooled" => Ok(WeightRule::Pooled),
            _ => Err(format!(
                "unknown weight rule {s:?} (expected per-source or pooled)"
            )),
        }
    }
}

/// Hits of one method on one orbit.
#[derive(Debug, Clone, Copy)]
struct Hits<F> {
    m: u64,
    k: u64,
    p: F,
    method: Method,
}

impl<F: Scalar> Hits<F> {
    fn estimate(&self) -> Result<Estimate<F>, EstimateError> {
        estimate_single(self.m, self.k, self.p, Source::Method(self.method))
    }
}

/// Combined estimate of one orbit from two methods, and the weight on `a`.
fn mix<F: Scalar>(
    rule: WeightRule,
    a: Hits<F>,
    b: Hits<F>,
) -> Result<(Estimate<F>, F), EstimateError> {
    let (ea, eb) = (a.estimate()?, b.estimate()?);
    match rule {
        WeightRule::PerSource => Ok(weighted(ea, eb)),
        WeightRule::Pooled => {
            let exposure = scalar::<F>(a.k) * a.p + scalar::<F>(b.k) * b.p;
            let d = scalar::<F>(a.m + b.m) / exposure;
            let va = single_variance(d, a.k, a.p);
            let vb = single_variance(d, b.k, b.p);
            let (wa, wb) = combine_weights(va, vb);
            let total = va + vb;
            let variance = if total > F::zero() {
                va * vb / total
            } else {
                F::zero()
            };
            Ok((
                Estimate {
                    value: wa * ea.value + wb * eb.value,
                    variance,
                    source: Source::Combined,
                },
                wa,
            ))
        }
    }
}

/// Draw counts per method.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct BudgetConfig {
    pub k32: u64,
    pub k41: u64,
    pub k42: u64,
    pub k31_directed: u64,
    pub k32_directed: u64,
}

/// `total` split into `parts` near-equal shares, remainder to the first ones.
pub fn split_even(total: u64, parts: usize) -> Vec<u64> {
    let n = parts as u64;
    (0..n)
        .map(|i| total / n + u64::from(i < total % n))
        .collect()
}

impl BudgetConfig {
    /// The same count for every method of both pipelines.
    pub fn per_method(k: u64) -> Self {
        BudgetConfig {
            k32: k,
            k41: k,
            k42: k,
            k31_directed: k,
            k32_directed: k,
        }
    }

    /// `total` spread evenly over the methods of each pipeline.
    pub fn from_total(total: u64) -> Self {
        let u = split_even(total, 3);
        let d = split_even(total, 2);
        BudgetConfig {
            k32: u[0],
            k41: u[1],
            k42: u[2],
            k31_directed: d[0],
            k32_directed: d[1],
        }
    }

    /// Draw count for `method` in the given pipeline.
    pub fn for_method(&self, mode: Mode, method: Method) -> u64 {
        match (mode, method) {
            (Mode::Undirected, Method::R32) => self.k32,
            (Mode::Undirected, Method::R41) => self.k41,
            (Mode::Undirected, Method::R42) => self.k42,
            (Mode::Directed3, Method::R31) => self.k31_directed,
            (Mode::Directed3, Method::R32) => self.k32_directed,
            _ => 0,
        }
    }
}

/// Hits per orbit for one method.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MethodTally {
    pub method: Method,
    pub draws: u64,
    pub undirected: [u64; Orbit::COUNT],
    pub directed: [u64; DirectedOrbit::COUNT],
}

impl MethodTally {
    pub fn new(method: Method) -> Self {
        MethodTally {
            method,
            draws: 0,
            undirected: [0; Orbit::COUNT],
            directed: [0; DirectedOrbit::COUNT],
        }
    }

    pub fn merge(mut self, other: &MethodTally) -> Self {
        debug_assert_eq!(self.method, other.method);
        self.draws += other.draws;
        for (a, b) in self.undirected.iter_mut().zip(other.undirected) {
            *a += b;
        }
        for (a, b) in self.directed.iter_mut().zip(other.directed) {
            *a += b;
        }
        self
    }
}

/// Draws per random stream. Fixed, so results do not depend on the number of
/// worker threads.
pub const CHUNK_DRAWS: u64 = 1 << 14;

fn stream_id(method: Method, chunk: u64) -> u64 {
    ((method as u64) << 48) | chunk
}

/// Draws `draws` CISes with `method` and classifies each. Directed orbits
/// are tallied too when the graph is directed and the draws are 3-node.
pub fn collect_tally(
    sampler: &AnchorSampler<'_>,
    method: Method,
    draws: u64,
    seed: u64,
) -> Result<MethodTally, EstimateError> {
    let g = sampler.graph();
    let anchor = sampler.anchor();
    let chunks = draws.div_ceil(CHUNK_DRAWS);
    (0..chunks)
        .into_par_iter()
        .map(|c| {
            let n = CHUNK_DRAWS.min(draws - c * CHUNK_DRAWS);
            let mut rng = RandomSource::with_stream(seed, stream_id(method, c));
            let mut t = MethodTally::new(method);
            t.draws = n;
            for _ in 0..n {
                let cis = sampler.sample(method, &mut rng)?;
                let m = cis.members();
                t.undirected[classify_undirected(g, anchor, m)?.index()] += 1;
                if g.is_directed() && m.len() == 3 {
                    t.directed[classify_directed3(g, anchor, m)?.index()] += 1;
                }
            }
            Ok(t)
        })
        .try_reduce(|| MethodTally::new(method), |a, b| Ok(a.merge(&b)))
}

/// Orbits that cannot occur at the node: some method able to observe them
/// has an empty selection space.
pub fn structural_zeros(stats: &NodeLocalStats) -> [bool; Orbit::COUNT] {
    let mut zero = [false; Orbit::COUNT];
    for m in Method::ALL {
        if m.denominator(stats) == 0 {
            for (z, w) in zero.iter_mut().zip(m.ways()) {
                *z |= w > 0;
            }
        }
    }
    zero[0] = false;
    zero
}

const SINGLE_R41: [u8; 3] = [5, 8, 11];
const SINGLE_R42: [u8; 2] = [6, 9];
const COMBINED_4: [u8; 4] = [10, 12, 13, 14];
/// Orbits whose pairwise covariances are modelled.
pub const COVARIANCE_ORBITS: [u8; 10] = [3, 5, 6, 8, 9, 10, 11, 12, 13, 14];
const THREE_PATH_WEIGHTS: [(u8, i32); 7] =
    [(3, 2), (8, 2), (9, 2), (10, 1), (12, 4), (13, 2), (14, 6)];
const TRIPLE_TERMS: [u8; 3] = [11, 13, 14];

/// Variances and covariances of the undirected pipeline's estimates, given
/// the degree values to evaluate them at (plug-in estimates or true counts).
#[derive(Debug, Clone, PartialEq)]
pub struct SandModel<F> {
    /// Draws of R32, R41, R42.
    pub budgets: [u64; 3],
    pub d: [F; Orbit::COUNT],
    pub var: [F; Orbit::COUNT],
    /// Weight on the R41 estimate for the combined orbits 3, 10, 12, 13, 14;
    /// the other source gets `1 - weight`.
    pub weight_r41: [F; Orbit::COUNT],
}

fn over<F: Scalar>(x: F, k: u64) -> F {
    if k == 0 {
        F::zero()
    } else {
        x / scalar(k)
    }
}

impl<F: Scalar> SandModel<F> {
    /// Model evaluated at known degrees `d`, with the combination weights the
    /// pipeline would use if it knew them.
    pub fn theoretical(
        stats: &NodeLocalStats,
        budget: &BudgetConfig,
        d: &[F; Orbit::COUNT],
    ) -> Self {
        let budgets = [budget.k32, budget.k41, budget.k42];
        let zero = structural_zeros(stats);
        let p = |m: Method, i: u8| -> F {
            bias_vector(m, stats).map_or(F::zero(), |b| b.value(Orbit::new(i).unwrap()))
        };
        let mut var = [F::zero(); Orbit::COUNT];
        let mut weight_r41 = [F::one(); Orbit::COUNT];
        var[1] = single_variance(d[1], budget.k32, p(Method::R32, 1));
        for i in SINGLE_R41 {
            var[i as usize] = single_variance(d[i as usize], budget.k41, p(Method::R41, i));
        }
        for i in SINGLE_R42 {
            var[i as usize] = single_variance(d[i as usize], budget.k42, p(Method::R42, i));
        }
        let mut mix = |i: u8, other: Method, k_other: u64| {
            let i = i as usize;
            if zero[i] {
                return;
            }
            let va = single_variance(d[i], budget.k41, p(Method::R41, i as u8));
            let vb = single_variance(d[i], k_other, p(other, i as u8));
            let (wa, _) = combine_weights(va, vb);
            weight_r41[i] = wa;
            let total = va + vb;
            var[i] = if total > F::zero() {
                va * vb / total
            } else {
                F::zero()
            };
        };
        mix(3, Method::R32, budget.k32);
        for i in COMBINED_4 {
            mix(i, Method::R42, budget.k42);
        }
        let mut model = SandModel {
            budgets,
            d: *d,
            var,
            weight_r41,
        };
        model.fill_identity_variances();
        model
    }

    /// Covariance of the estimates of orbits `i != j`, both in
    /// [`COVARIANCE_ORBITS`].
    pub fn covariance(&self, i: u8, j: u8) -> Result<F, EstimateError> {
        let ok = |x: u8| COVARIANCE_ORBITS.contains(&x);
        if i == j || !ok(i) || !ok(j) {
            return Err(EstimateError::UnsupportedPair(i, j));
        }
        let [_, k41, k42] = self.budgets;
        let d = |x: u8| self.d[x as usize];
        let w1 = |x: u8| self.weight_r41[x as usize];
        let w2 = |x: u8| F::one() - self.weight_r41[x as usize];
        let single41 = |x: u8| SINGLE_R41.contains(&x);
        let single42 = |x: u8| SINGLE_R42.contains(&x);
        let mixed = |x: u8| COMBINED_4.contains(&x);
        let dd = d(i) * d(j);
        // order so that the first of the pair is the "earlier" kind
        let rank = |x: u8| match x {
            3 => 0,
            x if single41(x) => 1,
            x if single42(x) => 2,
            _ => 3,
        };
        let (a, b) = if rank(i) <= rank(j) { (i, j) } else { (j, i) };
        let c = match (rank(a), rank(b)) {
            (1, 1) => -over(dd, k41),
            (0, 1) => -over(w1(3) * dd, k41),
            (2, 2) => -over(dd, k42),
            (3, 3) => -over(w1(a) * w1(b) * dd, k41) - over(w2(a) * w2(b) * dd, k42),
            (0, 2) | (1, 2) => F::zero(),
            (1, 3) => -over(w1(b) * dd, k41),
            (2, 3) => -over(w2(b) * dd, k42),
            (0, 3) => -over(w1(3) * w1(b) * dd, k41),
            _ => unreachable!("orbit 3 appears once"),
        };
        debug_assert!(mixed(b) || rank(b) < 3);
        Ok(c)
    }

    fn linear_variance(&self, terms: &[(u8, i32)]) -> F {
        let mut total = F::zero();
        for &(j, cj) in terms {
            let cj = F::from_i32(cj).unwrap();
            total = total + cj * cj * self.var[j as usize];
            for &(l, cl) in terms {
                if l != j {
                    let cl = F::from_i32(cl).unwrap();
                    total = total + cj * cl * self.covariance(j, l).expect("modelled pair");
                }
            }
        }
        total.max(F::zero())
    }

    /// Variances of the identity-derived orbits 2, 4 and 7.
    pub fn fill_identity_variances(&mut self) {
        self.var[2] = self.var[3];
        self.var[4] = self.linear_variance(&THREE_PATH_WEIGHTS);
        let triple: Vec<(u8, i32)> = TRIPLE_TERMS.iter().map(|&j| (j, 1)).collect();
        self.var[7] = self.linear_variance(&triple);
    }

    /// Every modelled pair `i < j` with its covariance.
    pub fn covariance_entries(&self) -> Vec<CovarianceEntry<F>> {
        let mut out = Vec::new();
        for (x, &i) in COVARIANCE_ORBITS.iter().enumerate() {
            for &j in &COVARIANCE_ORBITS[x + 1..] {
                out.push(CovarianceEntry {
                    i,
                    j,
                    value: self.covariance(i, j).expect("modelled pair"),
                });
            }
        }
        out
    }
}

fn check_budget(stats: &NodeLocalStats, method: Method, k: u64) -> Result<(), EstimateError> {
    if k == 0 && method.is_feasible(stats) {
        Err(EstimateError::ZeroBudget(method))
    } else {
        Ok(())
    }
}

/// Tallies for the given methods, sampled in parallel. Infeasible methods
/// get an empty tally.
fn tallies(
    sampler: &AnchorSampler<'_>,
    plan: &[(Method, u64)],
    seed: u64,
) -> Result<Vec<MethodTally>, EstimateError> {
    plan.par_iter()
        .map(|&(m, k)| {
            if m.is_feasible(sampler.stats()) {
                collect_tally(sampler, m, k, seed)
            } else {
                Ok(MethodTally::new(m))
            }
        })
        .collect()
}

struct Bias {
    by_method: Vec<Option<SamplerBias>>,
}

impl Bias {
    fn new(stats: &NodeLocalStats) -> Self {
        Bias {
            by_method: Method::ALL
                .iter()
                .map(|&m| bias_vector(m, stats).ok())
                .collect(),
        }
    }

    fn p<F: Scalar>(&self, m: Method, orbit: Orbit) -> F {
        self.by_method[m as usize]
            .as_ref()
            .map_or(F::zero(), |b| b.value(orbit))
    }
}

fn budget_map(plan: &[(Method, u64)]) -> std::collections::BTreeMap<Method, u64> {
    plan.iter().copied().collect()
}

/// All undirected orbit degrees of `v` from R32, R41 and R42 draws.
pub fn sand<F: Scalar>(
    g: &Graph,
    v: NodeId,
    budget: &BudgetConfig,
    seed: u64,
) -> Result<OrbitDegreeReport<F>, EstimateError> {
    sand_with(g, v, budget, seed, WeightRule::PerSource)
}

/// [`sand`] with a choice of combination weights.
pub fn sand_with<F: Scalar>(
    g: &Graph,
    v: NodeId,
    budget: &BudgetConfig,
    seed: u64,
    rule: WeightRule,
) -> Result<OrbitDegreeReport<F>, EstimateError> {
    let sampler = AnchorSampler::new(g, v)?;
    let stats = sampler.stats();
    let plan = [
        (Method::R32, budget.k32),
        (Method::R41, budget.k41),
        (Method::R42, budget.k42),
    ];
    for &(m, k) in &plan {
        check_budget(stats, m, k)?;
    }
    let tallies = tallies(&sampler, &plan, seed)?;
    let [t32, t41, t42] = [&tallies[0], &tallies[1], &tallies[2]];
    let zero = structural_zeros(stats);
    let bias = Bias::new(stats);

    let single = |i: u8, t: &MethodTally| -> Result<Estimate<F>, EstimateError> {
        let o = Orbit::new(i)?;
        if zero[o.index()] {
            return Ok(Estimate::exact(F::zero(), Source::Structural));
        }
        estimate_single(
            t.undirected[o.index()],
            t.draws,
            bias.p(t.method, o),
            Source::Method(t.method),
        )
    };

    let mut est = [Estimate::exact(F::zero(), Source::Structural); Orbit::COUNT];
    let mut weight_r41 = [F::one(); Orbit::COUNT];
    est[0] = Estimate::exact(scalar(stats.degree), Source::Exact);
    est[1] = single(1, t32)?;
    for i in SINGLE_R41 {
        est[i as usize] = single(i, t41)?;
    }
    for i in SINGLE_R42 {
        est[i as usize] = single(i, t42)?;
    }
    for (i, other) in [(3u8, t32)].into_iter().chain(COMBINED_4.map(|i| (i, t42))) {
        let i_ = i as usize;
        if zero[i_] {
            continue;
        }
        let o = Orbit::new(i)?;
        let hits = |t: &MethodTally| Hits {
            m: t.undirected[i_],
            k: t.draws,
            p: bias.p(t.method, o),
            method: t.method,
        };
        let (e, w) = mix(rule, hits(t41), hits(other))?;
        est[i_] = e;
        weight_r41[i_] = w;
    }

    let c = |x: i32| F::from_i32(x).unwrap();
    let identity = |value: F| Estimate {
        value,
        variance: F::zero(),
        source: Source::Identity,
    };
    let d = est.map(|e| e.value);
    let mut three = scalar::<F>(stats.three_paths);
    for (j, cj) in THREE_PATH_WEIGHTS {
        three = three - c(cj) * d[j as usize];
    }
    let mut triple = scalar::<F>(stats.triples);
    for j in TRIPLE_TERMS {
        triple = triple - d[j as usize];
    }
    est[2] = identity(scalar::<F>(stats.pairs) - d[3]);
    est[4] = identity(three);
    est[7] = identity(triple);

    let mut model = SandModel {
        budgets: [budget.k32, budget.k41, budget.k42],
        d: est.map(|e| e.value),
        var: est.map(|e| e.variance),
        weight_r41,
    };
    model.fill_identity_variances();
    for i in [2, 4, 7] {
        est[i].variance = model.var[i];
    }

    Ok(OrbitDegreeReport {
        node: v as u64,
        mode: Mode::Undirected,
        budgets: budget_map(&plan),
        seed,
        orbits: est
            .iter()
            .enumerate()
            .map(|(i, e)| OrbitEntry::new(i as u8, e))
            .collect(),
        covariances: model.covariance_entries(),
        weights: rule,
    })
}

/// All 30 directed 3-node orbit degrees of `v` from R31 and R32 draws.
pub fn sand3d<F: Scalar>(
    g: &Graph,
    v: NodeId,
    budget: &BudgetConfig,
    seed: u64,
) -> Result<OrbitDegreeReport<F>, EstimateError> {
    sand3d_with(g, v, budget, seed, WeightRule::PerSource)
}

/// [`sand3d`] with a choice of combination weights.
pub fn sand3d_with<F: Scalar>(
    g: &Graph,
    v: NodeId,
    budget: &BudgetConfig,
    seed: u64,
    rule: WeightRule,
) -> Result<OrbitDegreeReport<F>, EstimateError> {
    if !g.is_directed() {
        return Err(EstimateError::NotDirected);
    }
    let sampler = AnchorSampler::new(g, v)?;
    let stats = sampler.stats();
    let plan = [
        (Method::R31, budget.k31_directed),
        (Method::R32, budget.k32_directed),
    ];
    for &(m, k) in &plan {
        check_budget(stats, m, k)?;
    }
    let tallies = tallies(&sampler, &plan, seed)?;
    let [t31, t32] = [&tallies[0], &tallies[1]];
    let zero = structural_zeros(stats);
    let bias = Bias::new(stats);

    let single = |o: DirectedOrbit, t: &MethodTally| -> Result<Estimate<F>, EstimateError> {
        let p = bias.p(t.method, o.class().undirected());
        estimate_single(t.directed[o.index()], t.draws, p, Source::Method(t.method))
    };
    let orbits = DirectedOrbit::all()
        .map(|o| {
            let e = if zero[o.class().undirected().index()] {
                Estimate::exact(F::zero(), Source::Structural)
            } else {
                match o.class() {
                    TriadClass::PathCenter => single(o, t31)?,
                    TriadClass::PathEnd => single(o, t32)?,
                    TriadClass::Triangle => {
                        let hits = |t: &MethodTally| Hits {
                            m: t.directed[o.index()],
                            k: t.draws,
                            p: bias.p(t.method, o.class().undirected()),
                            method: t.method,
                        };
                        mix(rule, hits(t31), hits(t32))?.0
                    }
                }
            };
            Ok(OrbitEntry::new(o.id(), &e))
        })
        .collect::<Result<Vec<_>, EstimateError>>()?;

    Ok(OrbitDegreeReport {
        node: v as u64,
        mode: Mode::Directed3,
        budgets: budget_map(&plan),
        seed,
        orbits,
        covariances: Vec::new(),
        weights: rule,
    })
}

/// Runs the pipeline for `mode`.
pub fn estimate<F: Scalar>(
    g: &Graph,
    v: NodeId,
    mode: Mode,
    budget: &BudgetConfig,
    seed: u64,
    rule: WeightRule,
) -> Result<OrbitDegreeReport<F>, EstimateError> {
    match mode {
        Mode::Undirected => sand_with(g, v, budget, seed, rule),
        Mode::Directed3 => sand3d_with(g, v, budget, seed, rule),
    }
}

/// A method considered for a single orbit, with its variance at the common
/// budget and measured seconds per draw.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Candidate<F> {
    pub method: Method,
    pub variance: F,
    pub seconds_per_draw: F,
}

/// Method minimizing variance times per-draw cost; ties go to the earlier
/// method.
pub fn select_sampler<F: Scalar>(candidates: &[Candidate<F>]) -> Result<Method, EstimateError> {
    let mut best: Option<(Method, F)> = None;
    let mut sorted = candidates.to_vec();
    sorted.sort_by_key(|c| c.method);
    for c in sorted {
        let score = c.variance * c.seconds_per_draw;
        match best {
            Some((_, s)) if !(score < s) => {}
            _ => best = Some((c.method, score)),
        }
    }
    best.map(|(m, _)| m).ok_or(EstimateError::NoCandidates)
}

/// Draws used to time a method.
pub const TIMING_DRAWS: u64 = 10_000;

/// Mean wall-clock seconds per draw of `method`, after a short warm-up.
pub fn time_per_draw(
    sampler: &AnchorSampler<'_>,
    method: Method,
    draws: u64,
) -> Result<f64, EstimateError> {
    let mut rng = RandomSource::with_stream(0, u64::MAX);
    for _ in 0..draws.min(1000) {
        sampler.sample(method, &mut rng)?;
    }
    let start = Instant::now();
    for _ in 0..draws {
        std::hint::black_box(sampler.sample(method, &mut rng)?);
    }
    Ok(start.elapsed().as_secs_f64() / draws.max(1) as f64)
}

/// Estimate of one undirected orbit from the single best method.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SingleOrbitEstimate<F> {
    pub orbit: u8,
    pub method: Option<Method>,
    pub estimate: Estimate<F>,
    pub candidates: Vec<Candidate<F>>,
}

/// Estimates `orbit` at `v`: a pilot of `pilot` draws per able method gives
/// a pooled degree estimate, each method's variance is evaluated there, and
/// the method with the smallest variance-time product gets `draws` draws.
/// `seconds_per_draw` supplies the cost of each method.
pub fn estimate_orbit_with<F: Scalar>(
    g: &Graph,
    v: NodeId,
    orbit: Orbit,
    draws: u64,
    pilot: u64,
    seed: u64,
    mut seconds_per_draw: impl FnMut(&AnchorSampler<'_>, Method) -> Result<f64, EstimateError>,
) -> Result<SingleOrbitEstimate<F>, EstimateError> {
    let sampler = AnchorSampler::new(g, v)?;
    let stats = sampler.stats();
    let done = |e: Estimate<F>| SingleOrbitEstimate {
        orbit: orbit.id(),
        method: None,
        estimate: e,
        candidates: Vec::new(),
    };
    if orbit.id() == 0 {
        return Ok(done(Estimate::exact(scalar(stats.degree), Source::Exact)));
    }
    if structural_zeros(stats)[orbit.index()] {
        return Ok(done(Estimate::exact(F::zero(), Source::Structural)));
    }
    if draws == 0 || pilot == 0 {
        return Err(EstimateError::NoDraws);
    }
    let bias = Bias::new(stats);
    let able: Vec<Method> = Method::ALL
        .into_iter()
        .filter(|&m| m.can_observe(orbit) && m.is_feasible(stats))
        .collect();
    let mut pooled: Option<Estimate<F>> = None;
    for &m in &able {
        let t = collect_tally(&sampler, m, pilot, seed ^ 0x9e37_79b9_7f4a_7c15)?;
        let e = estimate_single(
            t.undirected[orbit.index()],
            pilot,
            bias.p(m, orbit),
            Source::Method(m),
        )?;
        pooled = Some(pooled.map_or(e, |acc| weighted(acc, e).0));
    }
    let d = pooled.ok_or(EstimateError::NoCandidates)?.value;
    let candidates = able
        .iter()
        .map(|&m| {
            Ok(Candidate {
                method: m,
                variance: single_variance(d, draws, bias.p(m, orbit)),
                seconds_per_draw: F::from_f64(seconds_per_draw(&sampler, m)?).unwrap(),
            })
        })
        .collect::<Result<Vec<_>, EstimateError>>()?;
    let method = select_sampler(&candidates)?;
    let t = collect_tally(&sampler, method, draws, seed)?;
    let estimate = estimate_single(
        t.undirected[orbit.index()],
        draws,
        bias.p(method, orbit),
        Source::Method(method),
    )?;
    Ok(SingleOrbitEstimate {
        orbit: orbit.id(),
        method: Some(method),
        estimate,
        candidates,
    })
}

/// [`estimate_orbit_with`] timing each method over [`TIMING_DRAWS`] draws.
pub fn estimate_orbit<F: Scalar>(
    g: &Graph,
    v: NodeId,
    orbit: Orbit,
    draws: u64,
    pilot: u64,
    seed: u64,
) -> Result<SingleOrbitEstimate<F>, EstimateError> {
    estimate_orbit_with(g, v, orbit, draws, pilot, seed, |s, m| {
        time_per_draw(s, m, TIMING_DRAWS)
    })
}

//! Serializable orbit-degree reports, shared by estimates and exact counts.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::estimator::{Estimate, Scalar, Source, WeightRule};
use crate::oracle::OrbitCounts;
use crate::sampler::Method;

/// Which orbit family a report covers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    /// Undirected orbits 0 to 14.
    Undirected,
    /// Directed 3-node orbits 1 to 30.
    Directed3,
}

impl Mode {
    pub fn as_str(self) -> &'static str {
        match self {
            Mode::Undirected => "undirected",
            Mode::Directed3 => "directed3",
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Mode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "undirected" => Ok(Mode::Undirected),
            "directed3" => Ok(Mode::Directed3),
            _ => Err(format!(
                "unknown mode {s:?} (expected undirected or directed3)"
            )),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OrbitEntry<F> {
    pub id: u8,
    /// Raw estimate; identity-derived values may be negative.
    pub estimate: F,
    pub variance: F,
    pub source: Source,
    /// `estimate` floored at 0.
    pub clamped: F,
}

impl<F: Scalar> OrbitEntry<F> {
    pub fn new(id: u8, e: &Estimate<F>) -> Self {
        OrbitEntry {
            id,
            estimate: e.value,
            variance: e.variance,
            source: e.source,
            clamped: e.clamped(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CovarianceEntry<F> {
    pub i: u8,
    pub j: u8,
    pub value: F,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrbitDegreeReport<F> {
    pub node: u64,
    pub mode: Mode,
    /// Draws per method; empty for exact reports.
    pub budgets: BTreeMap<Method, u64>,
    pub seed: u64,
    pub orbits: Vec<OrbitEntry<F>>,
    /// Pairs `i < j`; see [`OrbitDegreeReport::covariance`] for lookup in
    /// either order.
    pub covariances: Vec<CovarianceEntry<F>>,
    /// Combination weights used; omitted for the default.
    #[serde(default, skip_serializing_if = "WeightRule::is_default")]
    pub weights: WeightRule,
}

impl<F: Scalar> OrbitDegreeReport<F> {
    pub fn orbit(&self, id: u8) -> Option<&OrbitEntry<F>> {
        self.orbits.iter().find(|e| e.id == id)
    }

    /// Estimate of orbit `id`, or 0 when absent.
    pub fn value(&self, id: u8) -> F {
        self.orbit(id).map_or(F::zero(), |e| e.estimate)
    }

    pub fn variance(&self, id: u8) -> F {
        self.orbit(id).map_or(F::zero(), |e| e.variance)
    }

    /// Estimates in orbit-id order.
    pub fn values(&self) -> Vec<F> {
        self.orbits.iter().map(|e| e.estimate).collect()
    }

    pub fn covariance(&self, i: u8, j: u8) -> Option<F> {
        self.covariances
            .iter()
            .find(|c| (c.i, c.j) == (i, j) || (c.j, c.i) == (i, j))
            .map(|c| c.value)
    }

    /// Exact counts in report form: variance 0, source "exact".
    pub fn from_counts(counts: &OrbitCounts, mode: Mode) -> Option<Self> {
        let f = |c: u64| F::from_u64(c).expect("u64 converts to a float");
        let entry = |id: u8, c: u64| OrbitEntry {
            id,
            estimate: f(c),
            variance: F::zero(),
            source: Source::Exact,
            clamped: f(c),
        };
        let orbits = match mode {
            Mode::Undirected => counts
                .undirected
                .iter()
                .enumerate()
                .map(|(i, &c)| entry(i as u8, c))
                .collect(),
            Mode::Directed3 => counts
                .directed?
                .iter()
                .enumerate()
                .map(|(i, &c)| entry(i as u8 + 1, c))
                .collect(),
        };
        Some(OrbitDegreeReport {
            node: counts.node as u64,
            mode,
            budgets: BTreeMap::new(),
            seed: 0,
            orbits,
            covariances: Vec::new(),
            weights: WeightRule::default(),
        })
    }
}

impl<F: Scalar + Serialize> OrbitDegreeReport<F> {
    pub fn to_json(&self) -> serde_json::Result<String> {
        serde_json::to_string_pretty(self)
    }

    /// Flat table: one `orbit` row per estimate, then one `covariance` row
    /// per pair.
    pub fn to_csv(&self) -> Result<String, csv::Error> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record([
            "record", "node", "mode", "seed", "i", "j", "estimate", "variance", "source", "clamped",
        ])?;
        let node = self.node.to_string();
        let seed = self.seed.to_string();
        let num = |x: F| x.to_f64().map_or_else(String::new, |v| v.to_string());
        for e in &self.orbits {
            w.write_record([
                "orbit",
                &node,
                self.mode.as_str(),
                &seed,
                &e.id.to_string(),
                "",
                &num(e.estimate),
                &num(e.variance),
                e.source.as_str(),
                &num(e.clamped),
            ])?;
        }
        for c in &self.covariances {
            w.write_record([
                "covariance",
                &node,
                self.mode.as_str(),
                &seed,
                &c.i.to_string(),
                &c.j.to_string(),
                &num(c.value),
                "",
                "",
                "",
            ])?;
        }
        let bytes = w.into_inner().map_err(|e| e.into_error())?;
        Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
    }
}

//! Acceptance suite: one line per criterion, non-zero exit on any hard failure.

use std::collections::{BTreeMap, HashMap};
use std::path::PathBuf;
use std::process::Command;
use std::time::{Duration, Instant};

use orbitdeg::estimator::{time_per_draw, BudgetConfig, SandModel};
use orbitdeg::eval::{exact_vector, run_reports, summarize};
use orbitdeg::generate::{barabasi_albert, erdos_renyi, gnm, random_digraph};
use orbitdeg::oracle::{enumerate_cises, exact_orbit_degrees, verify_identities};
use orbitdeg::orbit::classify_undirected;
use orbitdeg::sampler::bias_vector;
use orbitdeg::{
    AnchorSampler, Graph, Method, Mode, NodeId, Orbit, RandomSource, Source, WeightRule,
};
use rayon::prelude::*;
use statrs::distribution::{ChiSquared, ContinuousCDF};

const ALPHA: f64 = 0.001;
const CHI_DRAWS: u64 = 1_000_000;
const RUNS: usize = 2000;
const K_PER_METHOD: u64 = 2000;
const Z_LIMIT: f64 = 4.0;
const VAR_TOLERANCE: f64 = 0.15;
const MIN_HIT_RATE: f64 = 0.01;
// pilot at total budget 1e6, 100 runs: mean L1 0.0033, mean L2 0.00093
const L1_LIMIT: f64 = 0.01;
const L1_RUNS: usize = 100;
const THROUGHPUT_FLOOR: f64 = 1e4;

struct Outcome {
    pass: bool,
    /// Counted against the exit status.
    hard: bool,
    /// Informational only; a miss prints WARN.
    soft: bool,
    detail: String,
}

impl Outcome {
    fn new(pass: bool, detail: String) -> Self {
        Outcome {
            pass,
            hard: true,
            soft: false,
            detail,
        }
    }
}

fn line(id: &str, name: &str, elapsed: Duration, o: &Outcome) {
    let tag = match (o.pass, o.soft) {
        (true, _) => "PASS",
        (false, false) => "FAIL",
        (false, true) => "WARN",
    };
    let note = if !o.pass && !o.hard && !o.soft {
        " [documented deviation, not counted]"
    } else {
        ""
    };
    println!(
        "[{tag}] {id} {name} ({:.1}s): {}{note}",
        elapsed.as_secs_f64(),
        o.detail
    );
}

fn er_setup() -> (Graph, NodeId) {
    let g = erdos_renyi(60, 0.12, 1);
    let v = g.max_degree_node().unwrap();
    (g, v)
}

fn digraph_setup() -> (Graph, NodeId) {
    let g = random_digraph(60, 0.15, 0.25, 0);
    let v = g.max_degree_node().unwrap();
    (g, v)
}

/// An 8-node graph whose nodes jointly touch every orbit 1 to 14.
fn all_orbit_graph() -> (Graph, u64, usize) {
    for m in 10..=18 {
        for seed in 0..500 {
            let g = gnm(8, m, seed);
            let mut seen = [false; 15];
            for v in g.nodes() {
                let c = exact_orbit_degrees(&g, v).unwrap();
                for (s, &x) in seen.iter_mut().zip(&c.undirected) {
                    *s |= x > 0;
                }
            }
            if seen[1..].iter().all(|&s| s) {
                return (g, seed, m);
            }
        }
    }
    panic!("no 8-node graph covers every orbit");
}

fn sampler_distributions() -> Outcome {
    let (g, seed, m) = all_orbit_graph();
    let jobs: Vec<(NodeId, Method)> = g
        .nodes()
        .flat_map(|v| Method::ALL.map(|m| (v, m)))
        .collect();
    type Tested = (NodeId, Method, Option<(f64, usize)>);
    let results: Vec<Tested> = jobs
        .par_iter()
        .map(|&(v, method)| {
            let stats = g.stats(v).unwrap();
            let Ok(bias) = bias_vector(method, &stats) else {
                return (v, method, None);
            };
            // R41 and R43 also land on triangles
            let mut cells = HashMap::new();
            let mut probs = Vec::new();
            for cis in enumerate_cises(&g, v, 3)
                .into_iter()
                .chain(enumerate_cises(&g, v, 4))
            {
                let o = classify_undirected(&g, v, &cis).unwrap();
                let p = bias.get(o);
                if *p.numer() > 0 {
                    cells.insert(cis, probs.len());
                    probs.push(*p.numer() as f64 / *p.denom() as f64);
                }
            }
            let sampler = AnchorSampler::new(&g, v).unwrap();
            let mut rng = RandomSource::new(0xC41 ^ ((v as u64) << 8) ^ method as u64);
            let mut observed = vec![0u64; probs.len()];
            let mut stray = 0u64;
            for _ in 0..CHI_DRAWS {
                let s = sampler.sample(method, &mut rng).unwrap();
                match cells.get(&s.sorted_members()) {
                    Some(&i) => observed[i] += 1,
                    None => stray += 1,
                }
            }
            if stray > 0 {
                return (v, method, Some((0.0, probs.len())));
            }
            if probs.len() == 1 {
                return (v, method, Some((1.0, 1)));
            }
            let n = CHI_DRAWS as f64;
            let stat: f64 = observed
                .iter()
                .zip(&probs)
                .map(|(&o, &p)| (o as f64 - n * p).powi(2) / (n * p))
                .sum();
            let dist = ChiSquared::new((probs.len() - 1) as f64).unwrap();
            (v, method, Some((1.0 - dist.cdf(stat), probs.len())))
        })
        .collect();
    let tested: Vec<_> = results
        .iter()
        .filter_map(|(v, m, r)| r.map(|(p, c)| (*v, *m, p, c)))
        .collect();
    let failed: Vec<String> = tested
        .iter()
        .filter(|t| t.2 < ALPHA)
        .map(|(v, m, p, _)| format!("{m}@{v} p={p:.2e}"))
        .collect();
    let min_p = tested.iter().map(|t| t.2).fold(1.0, f64::min);
    Outcome::new(
        failed.is_empty(),
        format!(
            "gnm(8, {m}) seed {seed}; {} sampler/node pairs x {CHI_DRAWS} draws, min p-value {min_p:.3}{}",
            tested.len(),
            if failed.is_empty() { String::new() } else { format!("; rejected: {}", failed.join(", ")) }
        ),
    )
}

fn identity_suite() -> Outcome {
    let mut graphs = Vec::new();
    for i in 0..25u64 {
        let n = 20 + 7 * i as usize;
        graphs.push(erdos_renyi(n, 6.0 / n as f64, 100 + i));
        graphs.push(barabasi_albert(n, 2 + (i % 2) as usize, 200 + i));
    }
    let digraphs: Vec<Graph> = (0..20u64)
        .map(|i| random_digraph(15 + 5 * i as usize, 0.15, 0.3, 300 + i))
        .collect();
    let check = |g: &Graph| -> usize {
        g.nodes()
            .into_par_iter()
            .filter(|&v| {
                let c = exact_orbit_degrees(g, v).unwrap();
                !verify_identities(&c, &g.stats(v).unwrap()).holds()
            })
            .count()
    };
    let bad: usize = graphs.iter().chain(&digraphs).map(check).sum();
    let nodes: usize = graphs.iter().chain(&digraphs).map(Graph::node_count).sum();
    Outcome::new(
        bad == 0,
        format!(
            "{} undirected + {} directed graphs, {nodes} nodes, {bad} with nonzero residuals",
            graphs.len(),
            digraphs.len()
        ),
    )
}

struct Runs {
    exact: Vec<u64>,
    ids: Vec<u8>,
    sources: Vec<Source>,
    mean: Vec<f64>,
    var: Vec<f64>,
}

fn repeat(g: &Graph, v: NodeId, mode: Mode, rule: WeightRule) -> Runs {
    let b = BudgetConfig::per_method(K_PER_METHOD);
    let reports: Vec<_> = run_reports(g, v, mode, &b, RUNS, 1, rule)
        .unwrap()
        .into_iter()
        .map(|r| r.0)
        .collect();
    let exact = exact_vector(g, v, mode, u64::MAX).unwrap().unwrap();
    let s = summarize(&reports, Some(&exact)).unwrap();
    Runs {
        exact,
        ids: s.orbits.iter().map(|o| o.id).collect(),
        sources: reports[0].orbits.iter().map(|o| o.source).collect(),
        mean: s.orbits.iter().map(|o| o.mean).collect(),
        var: s.orbits.iter().map(|o| o.variance).collect(),
    }
}

/// Orbits with a nonzero count whose mean is more than `Z_LIMIT` standard
/// errors from the exact value, with their z-scores.
fn biased(r: &Runs) -> Vec<(u8, Source, f64)> {
    let mut out = Vec::new();
    for i in 0..r.ids.len() {
        let truth = r.exact[i] as f64;
        if truth == 0.0 {
            continue;
        }
        let se = (r.var[i] / RUNS as f64).sqrt();
        let z = if se > 0.0 {
            (r.mean[i] - truth) / se
        } else if (r.mean[i] - truth).abs() <= 1e-9 * truth {
            0.0
        } else {
            f64::INFINITY
        };
        if z.abs() > Z_LIMIT {
            out.push((r.ids[i], r.sources[i], z));
        }
    }
    out
}

fn describe(bad: &[(u8, Source, f64)]) -> String {
    if bad.is_empty() {
        return "all within 4 SE".into();
    }
    let list: Vec<String> = bad
        .iter()
        .map(|(id, _, z)| format!("{id} (z={z:.1})"))
        .collect();
    format!("outside 4 SE: {}", list.join(", "))
}

fn unbiasedness(
    und: &Runs,
    dir: &Runs,
    und_pooled: &Runs,
    dir_pooled: &Runs,
) -> (Outcome, Outcome) {
    let (bu, bd) = (biased(und), biased(dir));
    let (pu, pd) = (biased(und_pooled), biased(dir_pooled));
    // the default weights are only allowed to miss on combined estimates
    let uncombined_ok = bu.iter().chain(&bd).all(|b| b.1 == Source::Combined);
    let default = Outcome {
        pass: bu.is_empty() && bd.is_empty(),
        hard: !uncombined_ok,
        soft: false,
        detail: format!(
            "per-source weights, {RUNS} runs, K={K_PER_METHOD}/method; SAND {}; SAND-3D {}{}",
            describe(&bu),
            describe(&bd),
            if bu.is_empty() && bd.is_empty() {
                String::new()
            } else {
                "; known bias of plug-in weights on combined orbits".into()
            }
        ),
    };
    let pooled = Outcome::new(
        pu.is_empty() && pd.is_empty(),
        format!(
            "pooled weights; SAND {}; SAND-3D {}",
            describe(&pu),
            describe(&pd)
        ),
    );
    (default, pooled)
}

fn variance_fidelity(g: &Graph, v: NodeId, und: &Runs) -> Outcome {
    let stats = g.stats(v).unwrap();
    let mut d = [0.0; 15];
    for (x, &c) in d.iter_mut().zip(&und.exact) {
        *x = c as f64;
    }
    let model = SandModel::theoretical(&stats, &BudgetConfig::per_method(K_PER_METHOD), &d);
    let pipeline = [Method::R32, Method::R41, Method::R42];
    let mut checked = Vec::new();
    let mut worst = (0u8, 0.0f64);
    let mut failed = Vec::new();
    for o in Orbit::sampled() {
        let i = o.index();
        let hit_rate = pipeline
            .iter()
            .filter(|m| m.can_observe(o))
            .filter_map(|&m| bias_vector(m, &stats).ok())
            .map(|b| b.value::<f64>(o) * d[i])
            .fold(0.0, f64::max);
        let sampled = hit_rate >= MIN_HIT_RATE;
        let identity = matches!(i, 2 | 4 | 7) && model.var[i] > 0.0;
        if !(sampled || identity) {
            continue;
        }
        let rel = (und.var[i] - model.var[i]).abs() / model.var[i];
        checked.push(i);
        if rel > worst.1 {
            worst = (i as u8, rel);
        }
        if rel > VAR_TOLERANCE {
            failed.push(format!("{i} ({:.1}%)", rel * 100.0));
        }
    }
    Outcome::new(
        failed.is_empty() && !checked.is_empty(),
        format!(
            "{} orbits checked {:?}; worst relative error {:.1}% at orbit {}{}",
            checked.len(),
            checked,
            worst.1 * 100.0,
            worst.0,
            if failed.is_empty() {
                String::new()
            } else {
                format!("; over 15%: {}", failed.join(", "))
            }
        ),
    )
}

fn top_k(g: &Graph, v: NodeId) -> Outcome {
    let b = BudgetConfig::from_total(100_000);
    let reports: Vec<_> = run_reports(g, v, Mode::Directed3, &b, 200, 5, WeightRule::PerSource)
        .unwrap()
        .into_iter()
        .map(|r| r.0)
        .collect();
    let exact = exact_vector(g, v, Mode::Directed3, u64::MAX)
        .unwrap()
        .unwrap();
    let s = summarize(&reports, Some(&exact)).unwrap();
    let k5 = s.topk.iter().find(|t| t.k == 5).unwrap();
    let k10 = s.topk.iter().find(|t| t.k == 10).unwrap();
    let share = k5.full_recovery as f64 / 200.0;
    Outcome::new(
        share >= 0.95 && k10.mean_hits >= 9.5,
        format!(
            "total budget 1e5, 200 runs: top-5 fully recovered in {:.1}% of runs, mean top-10 hits {:.2}",
            share * 100.0,
            k10.mean_hits
        ),
    )
}

fn distances(g: &Graph, v: NodeId) -> Outcome {
    let b = BudgetConfig::from_total(1_000_000);
    let reports: Vec<_> = run_reports(g, v, Mode::Directed3, &b, L1_RUNS, 9, WeightRule::PerSource)
        .unwrap()
        .into_iter()
        .map(|r| r.0)
        .collect();
    let exact = exact_vector(g, v, Mode::Directed3, u64::MAX)
        .unwrap()
        .unwrap();
    let s = summarize(&reports, Some(&exact)).unwrap();
    let (l1, l2) = (s.l1.unwrap().mean, s.l2.unwrap().mean);
    Outcome::new(
        l1 <= L1_LIMIT,
        format!(
            "total budget 1e6, {L1_RUNS} runs: mean L1 {l1:.5} (limit {L1_LIMIT}), mean L2 {l2:.5}"
        ),
    )
}

fn throughput() -> Outcome {
    let g = gnm(100_000, 500_000, 7);
    let sampler = AnchorSampler::new(&g, 0).unwrap();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(1)
        .build()
        .unwrap();
    let secs = pool
        .install(|| time_per_draw(&sampler, Method::R32, 1_000_000))
        .unwrap();
    let rate = 1.0 / secs;
    Outcome {
        pass: rate >= THROUGHPUT_FLOOR,
        hard: false,
        soft: true,
        detail: format!(
            "R32 on gnm(1e5, 5e5), one thread: {rate:.3e} draws/s (floor {THROUGHPUT_FLOOR:.0e})"
        ),
    }
}

fn write_edges(g: &Graph, name: &str) -> PathBuf {
    let mut text = String::from("# relabelled ids\n");
    for u in g.nodes() {
        for &w in g.neighbors(u) {
            let keep = if g.is_directed() {
                g.direction(u, w).is_some_and(|d| d.code() != 2)
            } else {
                u < w
            };
            if keep {
                text.push_str(&format!("{} {}\n", 1000 + 3 * u, 1000 + 3 * w));
            }
        }
    }
    let p = PathBuf::from(env!("CARGO_TARGET_TMPDIR")).join(name);
    std::fs::write(&p, text).unwrap();
    p
}

fn determinism() -> Outcome {
    let (g, _) = er_setup();
    let (d, _) = digraph_setup();
    let und = write_edges(&g, "acceptance-er.txt");
    let dir = write_edges(&d, "acceptance-digraph.txt");
    let und = und.to_str().unwrap();
    let dir = dir.to_str().unwrap();
    let invocations: Vec<Vec<&str>> = vec![
        vec![
            "estimate",
            "--graph",
            und,
            "--max-degree-node",
            "--budget",
            "300000",
            "--seed",
            "17",
        ],
        vec![
            "estimate",
            "--graph",
            dir,
            "--directed",
            "--mode",
            "directed3",
            "--max-degree-node",
            "--budget",
            "200000",
            "--seed",
            "17",
        ],
        vec![
            "evaluate",
            "--graph",
            und,
            "--max-degree-node",
            "--runs",
            "8",
            "--budget",
            "30000",
            "--seed",
            "3",
        ],
    ];
    let mut mismatches = Vec::new();
    for args in &invocations {
        let outputs: BTreeMap<&str, Vec<u8>> = ["1", "2", "4"]
            .into_iter()
            .map(|t| {
                let out = Command::new(env!("CARGO_BIN_EXE_orbitdeg"))
                    .args(args)
                    .args(["--threads", t])
                    .output()
                    .unwrap();
                assert!(
                    out.status.success(),
                    "{}",
                    String::from_utf8_lossy(&out.stderr)
                );
                (t, out.stdout)
            })
            .collect();
        if outputs.values().any(|o| o != &outputs["1"]) {
            mismatches.push(args[0]);
        }
    }
    Outcome::new(
        mismatches.is_empty(),
        format!(
            "{} invocations at --threads 1, 2, 4: {}",
            invocations.len(),
            if mismatches.is_empty() {
                "byte-identical JSON".to_string()
            } else {
                format!("differences in {mismatches:?}")
            }
        ),
    )
}

fn timed(limit: Option<Duration>, f: impl FnOnce() -> Outcome) -> (Outcome, Duration) {
    let start = Instant::now();
    let mut o = f();
    let elapsed = start.elapsed();
    if let Some(limit) = limit {
        if elapsed > limit {
            o.pass = false;
            o.detail
                .push_str(&format!("; over the {}s limit", limit.as_secs()));
        }
    }
    (o, elapsed)
}

fn main() {
    let mut hard_failures = 0;
    let mut record = |id: &str, name: &str, (o, t): (Outcome, Duration)| {
        line(id, name, t, &o);
        if !o.pass && o.hard {
            hard_failures += 1;
        }
    };

    record(
        "C1",
        "sampler distributions",
        timed(Some(Duration::from_secs(120)), sampler_distributions),
    );
    record(
        "C2",
        "identities",
        timed(Some(Duration::from_secs(60)), identity_suite),
    );

    let (g, v) = er_setup();
    let (d, dv) = digraph_setup();
    let start = Instant::now();
    let und = repeat(&g, v, Mode::Undirected, WeightRule::PerSource);
    let dir = repeat(&d, dv, Mode::Directed3, WeightRule::PerSource);
    let und_pooled = repeat(&g, v, Mode::Undirected, WeightRule::Pooled);
    let dir_pooled = repeat(&d, dv, Mode::Directed3, WeightRule::Pooled);
    let (default, pooled) = unbiasedness(&und, &dir, &und_pooled, &dir_pooled);
    let elapsed = start.elapsed();
    let limit = Duration::from_secs(300);
    let over = |mut o: Outcome| {
        if elapsed > limit {
            o.pass = false;
            o.hard = true;
            o.detail.push_str("; over the 300s limit");
        }
        o
    };
    record("C3", "unbiasedness", (over(default), elapsed));
    record(
        "C3p",
        "unbiasedness, pooled weights",
        (over(pooled), elapsed),
    );

    record(
        "C4",
        "variance fidelity",
        timed(None, || variance_fidelity(&g, v, &und)),
    );
    record("C5", "top-k recovery", timed(None, || top_k(&d, dv)));
    record(
        "C6",
        "normalized distances",
        timed(None, || distances(&d, dv)),
    );
    record("C7", "throughput", timed(None, throughput));
    record("C8", "determinism", timed(None, determinism));

    if hard_failures > 0 {
        println!("{hard_failures} criteria failed");
        std::process::exit(1);
    }
}

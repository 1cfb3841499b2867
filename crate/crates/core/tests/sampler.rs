use num_rational::Ratio;
use orbitdeg::oracle::exact_orbit_degrees;
use orbitdeg::orbit::classify_undirected;
use orbitdeg::sampler::bias_vector;
use orbitdeg::{AnchorSampler, Graph, Method, Orbit, RandomSource};
use proptest::prelude::*;

fn arb_graph(max_n: usize) -> impl Strategy<Value = Graph> {
    (2..=max_n).prop_flat_map(|n| {
        proptest::collection::vec((0..n, 0..n), 0..n * 3).prop_map(move |e| {
            let e: Vec<_> = e.into_iter().filter(|(a, b)| a != b).collect();
            Graph::from_edges(n, &e)
        })
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    /// Each method's probabilities over every CIS it can draw sum to one.
    #[test]
    fn probabilities_are_normalized(g in arb_graph(10)) {
        for v in g.nodes() {
            let stats = g.stats(v).unwrap();
            let c = exact_orbit_degrees(&g, v).unwrap();
            for m in Method::ALL {
                match bias_vector(m, &stats) {
                    Ok(b) => {
                        let total: Ratio<u64> = Orbit::sampled()
                            .map(|o| b.get(o) * c.get(o))
                            .sum();
                        prop_assert_eq!(total, Ratio::from_integer(1), "{} at {}", m, v);
                    }
                    Err(_) => {
                        for o in Orbit::sampled().filter(|&o| m.can_observe(o)) {
                            prop_assert_eq!(c.get(o), 0);
                        }
                    }
                }
            }
        }
    }

    /// Draws are connected, contain the anchor once, and land only in
    /// orbits the method can observe.
    #[test]
    fn draws_are_valid(g in arb_graph(10), seed in any::<u64>()) {
        let mut rng = RandomSource::new(seed);
        for v in g.nodes() {
            let s = AnchorSampler::new(&g, v).unwrap();
            for m in Method::ALL {
                if !m.is_feasible(s.stats()) {
                    prop_assert!(s.sample(m, &mut rng).is_err());
                    continue;
                }
                for _ in 0..20 {
                    let cis = s.sample(m, &mut rng).unwrap();
                    let members = cis.members();
                    prop_assert_eq!(members[0], v);
                    let mut sorted = cis.sorted_members();
                    sorted.dedup();
                    prop_assert_eq!(sorted.len(), members.len());
                    let o = classify_undirected(&g, v, members).unwrap();
                    prop_assert!(m.can_observe(o), "{} drew orbit {}", m, o);
                }
            }
        }
    }
}

#[test]
fn same_seed_same_draws() {
    let g = orbitdeg::generate::erdos_renyi(30, 0.3, 1);
    let s = AnchorSampler::new(&g, 0).unwrap();
    for m in Method::ALL {
        let mut a = RandomSource::new(5);
        let mut b = RandomSource::new(5);
        for _ in 0..100 {
            assert_eq!(s.sample(m, &mut a).unwrap(), s.sample(m, &mut b).unwrap());
        }
    }
}

//! Random instances shared by the property suites.
#![allow(dead_code)]

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use trustnum_core::interference::ConflictGraph;
use trustnum_core::topology::{path_from_names, Flow, LinkId, Network};
use trustnum_core::trust::TrustState;

pub fn scenario_path(name: &str) -> std::path::PathBuf {
    std::path::Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../../scenarios")
        .join(name)
}

/// One flow from `s` to `d` over 1..=`max_paths` loop-free paths through
/// random relays. Node order: `s`, relays, `d`.
pub struct Multipath {
    pub network: Network,
    pub flow: Flow,
    pub trust: TrustState,
}

pub fn random_multipath(rng: &mut ChaCha8Rng, max_paths: usize, max_hops: usize) -> Multipath {
    let relays = rng.gen_range(2..=6usize);
    let mut nodes = vec!["s".to_string()];
    nodes.extend((1..=relays).map(|i| format!("r{i}")));
    nodes.push("d".into());

    let paths_wanted = rng.gen_range(1..=max_paths);
    let mut seqs: Vec<Vec<String>> = Vec::new();
    while seqs.len() < paths_wanted {
        let mut pool: Vec<String> = nodes[1..=relays].to_vec();
        pool.shuffle(rng);
        let hops = rng.gen_range(1..=max_hops.min(relays + 1));
        let mut seq = vec!["s".to_string()];
        seq.extend(pool.into_iter().take(hops - 1));
        seq.push("d".into());
        if !seqs.contains(&seq) {
            seqs.push(seq);
        }
    }
    let mut links: Vec<(String, String, f64)> = Vec::new();
    for seq in &seqs {
        for w in seq.windows(2) {
            if !links.iter().any(|(a, b, _)| *a == w[0] && *b == w[1]) {
                links.push((w[0].clone(), w[1].clone(), rng.gen_range(9.0..=11.0)));
            }
        }
    }
    let network = Network::new(&nodes, &links).expect("valid network");
    let paths = seqs
        .iter()
        .map(|seq| {
            let hops: Vec<(&str, &str)> = seq
                .windows(2)
                .map(|w| (w[0].as_str(), w[1].as_str()))
                .collect();
            path_from_names(&network, &hops, "s", "d").expect("valid path")
        })
        .collect();
    let flow = Flow::new(
        "s",
        network.node("s").unwrap(),
        network.node("d").unwrap(),
        paths,
        1e12,
        0.0,
        2.0,
    )
    .unwrap();
    let mut values: Vec<f64> = (0..nodes.len())
        .map(|_| rng.gen_range(0.05..=1.0))
        .collect();
    values[0] = 1.0;
    let trust = TrustState::new(values, 0.8).unwrap();
    Multipath {
        network,
        flow,
        trust,
    }
}

/// `n` disjoint links with capacities in [9, 11] and a random conflict
/// graph of the given density (0 gives a conflict-free graph).
pub fn random_conflicts(rng: &mut ChaCha8Rng, n: usize, density: f64) -> (Network, ConflictGraph) {
    let nodes: Vec<String> = (0..2 * n).map(|i| format!("v{i}")).collect();
    let links: Vec<(String, String, f64)> = (0..n)
        .map(|i| {
            (
                nodes[2 * i].clone(),
                nodes[2 * i + 1].clone(),
                rng.gen_range(9.0..=11.0),
            )
        })
        .collect();
    let network = Network::new(&nodes, &links).unwrap();
    let mut pairs = Vec::new();
    for a in 0..n {
        for b in a + 1..n {
            if rng.gen_bool(density) {
                pairs.push([a, b]);
            }
        }
    }
    let cg = ConflictGraph::from_pairs(n, &pairs).unwrap();
    (network, cg)
}

/// Best schedule value by checking every subset of links.
pub fn exhaustive_schedule_value(network: &Network, cg: &ConflictGraph, prices: &[f64]) -> f64 {
    let n = network.link_count();
    assert!(n <= 16);
    let mut best = 0.0f64;
    for mask in 0u32..(1 << n) {
        let set: Vec<LinkId> = (0..n).filter(|i| mask >> i & 1 == 1).map(LinkId).collect();
        if !cg.is_independent(&set) {
            continue;
        }
        let v: f64 = set
            .iter()
            .map(|l| prices[l.0] * network.link(*l).capacity)
            .sum();
        best = best.max(v);
    }
    best
}

//! Seeded random Matsubara graphs for property tests.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::graph::{MatsubaraGraph, RawEdge, RawGraph};

/// A random Matsubara graph with `2 ≤ V ≤ max_vertices` and
/// `V ≤ I ≤ max_lines`.
pub fn random_graph<R: Rng + ?Sized>(rng: &mut R, max_vertices: usize, max_lines: usize) -> MatsubaraGraph {
    assert!(max_vertices >= 2 && max_lines >= max_vertices);
    loop {
        let v = rng.gen_range(2..=max_vertices);
        let i = rng.gen_range(v..=max_lines);
        let mut ends: Vec<(usize, usize)> = (1..v).map(|k| (rng.gen_range(0..k), k)).collect();
        while ends.len() < i {
            let a = rng.gen_range(0..v);
            let b = rng.gen_range(0..v);
            if a != b {
                ends.push((a, b));
            }
        }
        ends.shuffle(rng);
        let mut degree = vec![0; v];
        for &(a, b) in &ends {
            degree[a] += 1;
            degree[b] += 1;
        }
        if degree.iter().any(|&d| d < 2) {
            continue;
        }
        let raw = RawGraph {
            vertices: (0..v).map(|k| format!("v{k}")).collect(),
            edges: ends
                .into_iter()
                .enumerate()
                .map(|(k, (a, b))| {
                    let (from, to) = if rng.gen_bool(0.5) { (a, b) } else { (b, a) };
                    RawEdge {
                        id: k as i64 + 1,
                        from: format!("v{from}"),
                        to: format!("v{to}"),
                    }
                })
                .collect(),
        };
        return MatsubaraGraph::validate(&raw).expect("construction yields a Matsubara graph");
    }
}

/// `count` graphs drawn from one seed.
pub fn corpus(seed: u64, count: usize, max_vertices: usize, max_lines: usize) -> Vec<MatsubaraGraph> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count).map(|_| random_graph(&mut rng, max_vertices, max_lines)).collect()
}

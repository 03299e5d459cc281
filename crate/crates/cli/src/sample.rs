//! Seeded neighbor sampling for minibatch construction.
//!
//! Sampling is uniform without replacement: each frontier node contributes
//! `min(fanout, degree)` of its neighbors, drawn by a partial Fisher-Yates
//! shuffle. Randomness comes from ChaCha8 with a per-(hop, node) stream id,
//! so results are identical whether nodes are processed sequentially or in
//! parallel, on any platform.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use unified_sim::synth::splitmix64;

use crate::graph::CsrGraph;
use crate::{BenchError, Result};

#[cfg(feature = "parallel")]
use rayon::prelude::*;

fn node_rng(seed: u64, hop: usize, node: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(splitmix64((hop as u64) << 32) ^ node);
    rng
}

/// `min(fanout, degree)` distinct neighbors via partial Fisher-Yates.
fn sample_node(graph: &CsrGraph, node: u64, fanout: usize, mut rng: ChaCha8Rng) -> Vec<u64> {
    let mut pool: Vec<u64> = graph.neighbors(node).to_vec();
    let k = fanout.min(pool.len());
    for i in 0..k {
        let j = rng.random_range(i..pool.len());
        pool.swap(i, j);
    }
    pool.truncate(k);
    pool
}

/// Multi-hop neighbor expansion: starting from `batch`, sample `fanout`
/// neighbors per frontier node for `hops` rounds. Returns the deduplicated
/// union of every visited node (batch included), sorted ascending.
pub fn sample_neighbors(
    graph: &CsrGraph,
    batch: &[u64],
    fanout: usize,
    hops: usize,
    seed: u64,
) -> Result<Vec<u64>> {
    if fanout == 0 {
        return Err(BenchError::InvalidArgument(
            "fanout must be at least 1".into(),
        ));
    }
    let nodes = graph.num_nodes() as u64;
    for (position, &node) in batch.iter().enumerate() {
        if node >= nodes {
            return Err(BenchError::NodeOutOfRange {
                position,
                node,
                nodes,
            });
        }
    }

    let mut union: Vec<u64> = batch.to_vec();
    union.sort_unstable();
    union.dedup();

    let mut frontier = union.clone();
    for hop in 0..hops {
        #[cfg(feature = "parallel")]
        let sampled: Vec<Vec<u64>> = frontier
            .par_iter()
            .map(|&node| sample_node(graph, node, fanout, node_rng(seed, hop, node)))
            .collect();
        #[cfg(not(feature = "parallel"))]
        let sampled: Vec<Vec<u64>> = frontier
            .iter()
            .map(|&node| sample_node(graph, node, fanout, node_rng(seed, hop, node)))
            .collect();

        let mut next: Vec<u64> = sampled.into_iter().flatten().collect();
        next.sort_unstable();
        next.dedup();
        union.extend_from_slice(&next);
        union.sort_unstable();
        union.dedup();
        frontier = next;
    }
    Ok(union)
}

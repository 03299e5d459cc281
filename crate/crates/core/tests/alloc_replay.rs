//! Replay randomized alloc/free traffic against a no-recycling oracle:
//! capacities must be identical and the recycling allocator must never
//! issue more backend calls.

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use unified_sim::{RecyclingAllocator, GRANULARITY};

/// Oracle: every allocation is a fresh backend call with the same rounding
/// rule; free is a no-op bookkeeping step.
#[derive(Default)]
struct NoRecyclingOracle {
    backend_calls: u64,
}

impl NoRecyclingOracle {
    fn allocate(&mut self, bytes: usize) -> usize {
        if bytes == 0 {
            return 0;
        }
        self.backend_calls += 1;
        bytes.div_ceil(GRANULARITY) * GRANULARITY
    }
}

#[test]
fn replay_against_no_recycling_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(0xA110C);
    let alloc = RecyclingAllocator::new();
    let mut oracle = NoRecyclingOracle::default();
    let mut live = Vec::new();
    let mut ids_seen = std::collections::HashSet::new();

    for _ in 0..10_000 {
        let do_alloc = live.is_empty() || rng.random_bool(0.55);
        if do_alloc {
            let bytes = rng.random_range(0..5000);
            let block = alloc.allocate(bytes).unwrap();
            let expected_capacity = oracle.allocate(bytes);
            assert_eq!(block.capacity_bytes(), expected_capacity);
            if bytes > 0 {
                ids_seen.insert(block.id());
            }
            live.push(block);
        } else {
            let idx = rng.random_range(0..live.len());
            let block = live.swap_remove(idx);
            alloc.free(&block).unwrap();
        }
    }

    let stats = alloc.stats();
    assert!(stats.backend_calls <= oracle.backend_calls);
    // Each backend call mints exactly one block id.
    assert_eq!(stats.backend_calls, ids_seen.len() as u64);
    // With this traffic shape recycling must actually kick in.
    assert!(stats.recycled_hits > 0);
    assert_eq!(
        stats.bytes_live,
        live.iter().map(|b| b.capacity_bytes() as u64).sum::<u64>()
    );
}

#[test]
fn same_bucket_alloc_free_alloc_is_one_backend_call() {
    let alloc = RecyclingAllocator::new();
    let a = alloc.allocate(1000).unwrap();
    alloc.free(&a).unwrap();
    let b = alloc.allocate(900).unwrap();
    assert_eq!(b.id(), a.id());
    let stats = alloc.stats();
    assert_eq!(stats.backend_calls, 1);
    assert_eq!(stats.recycled_hits, 1);
}

#[test]
fn distinct_size_allocations_each_hit_backend() {
    let alloc = RecyclingAllocator::new();
    for i in 1..=8usize {
        let _ = alloc.allocate(i * GRANULARITY).unwrap();
    }
    assert_eq!(alloc.stats().backend_calls, 8);
}

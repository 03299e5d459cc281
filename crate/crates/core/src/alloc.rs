//! Recycling buffer allocator.
//!
//! Freed blocks are cached by size bucket rather than returned to the
//! backend, so repeated allocations of similar sizes avoid fresh backend
//! calls. Requests round up to [`GRANULARITY`]-byte buckets and reuse is
//! whole-block: no splitting or coalescing of cached blocks, and cached
//! blocks are only dropped through an explicit [`RecyclingAllocator::release_cached`].

use std::collections::{BTreeMap, HashMap};
use std::sync::Mutex;

use crate::error::{Error, Result};

/// Rounding granularity for size buckets, in bytes.
pub const GRANULARITY: usize = 512;

/// Reserved id for zero-capacity allocations; never touches the backend.
const SENTINEL_ID: u64 = 0;

/// Lightweight handle to an allocated block.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BlockHandle {
    id: u64,
    capacity_bytes: usize,
    requested_bytes: usize,
}

impl BlockHandle {
    /// Block id; stable for the lifetime of the backing storage, including
    /// across recycling.
    pub fn id(&self) -> u64 {
        self.id
    }

    /// Rounded capacity in bytes (a multiple of [`GRANULARITY`], or zero).
    pub fn capacity_bytes(&self) -> usize {
        self.capacity_bytes
    }

    /// Originally requested size in bytes.
    pub fn requested_bytes(&self) -> usize {
        self.requested_bytes
    }

    fn is_sentinel(&self) -> bool {
        self.id == SENTINEL_ID
    }
}

/// Counters exposed for observability and tests.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct AllocatorStats {
    /// Fresh backend allocations; equals the number of distinct block ids
    /// ever minted.
    pub backend_calls: u64,
    /// Allocations served from the cache.
    pub recycled_hits: u64,
    /// Capacity bytes currently in use.
    pub bytes_live: u64,
    /// Capacity bytes parked in the cache.
    pub bytes_cached: u64,
}

#[derive(Debug, PartialEq, Eq)]
enum BlockState {
    InUse,
    Cached,
}

struct BlockData {
    bytes: Vec<u8>,
    state: BlockState,
}

struct Inner {
    next_id: u64,
    blocks: HashMap<u64, BlockData>,
    /// capacity -> LIFO of cached block ids. All blocks in a bucket share
    /// the bucket's capacity, so "best fit within bucket" is any entry.
    cache: BTreeMap<usize, Vec<u64>>,
    stats: AllocatorStats,
}

/// Thread-safe recycling allocator for one device kind.
pub struct RecyclingAllocator {
    inner: Mutex<Inner>,
    capacity_limit: u64,
}

impl Default for RecyclingAllocator {
    fn default() -> Self {
        Self::new()
    }
}

impl RecyclingAllocator {
    /// Allocator without a capacity limit.
    pub fn new() -> Self {
        Self::with_capacity_limit(u64::MAX)
    }

    /// Allocator that refuses to hold more than `limit` capacity bytes
    /// (live + cached). Stands in for physical memory limits.
    pub fn with_capacity_limit(limit: u64) -> Self {
        RecyclingAllocator {
            inner: Mutex::new(Inner {
                next_id: SENTINEL_ID + 1,
                blocks: HashMap::new(),
                cache: BTreeMap::new(),
                stats: AllocatorStats::default(),
            }),
            capacity_limit: limit,
        }
    }

    /// Allocate at least `bytes`. Zero-byte requests return a shared
    /// sentinel and never touch the backend.
    pub fn allocate(&self, bytes: usize) -> Result<BlockHandle> {
        if bytes == 0 {
            return Ok(BlockHandle {
                id: SENTINEL_ID,
                capacity_bytes: 0,
                requested_bytes: 0,
            });
        }
        let capacity = round_up(bytes);
        let mut inner = self.inner.lock().expect("allocator lock poisoned");

        if let Some(ids) = inner.cache.get_mut(&capacity) {
            if let Some(id) = ids.pop() {
                if ids.is_empty() {
                    inner.cache.remove(&capacity);
                }
                let block = inner.blocks.get_mut(&id).expect("cached id must exist");
                block.state = BlockState::InUse;
                block.bytes.fill(0);
                inner.stats.recycled_hits += 1;
                inner.stats.bytes_cached -= capacity as u64;
                inner.stats.bytes_live += capacity as u64;
                return Ok(BlockHandle {
                    id,
                    capacity_bytes: capacity,
                    requested_bytes: bytes,
                });
            }
        }

        let total = inner.stats.bytes_live + inner.stats.bytes_cached;
        if total + capacity as u64 > self.capacity_limit {
            return Err(Error::OutOfMemory {
                requested: capacity as u64,
                limit: self.capacity_limit,
            });
        }

        let id = inner.next_id;
        inner.next_id += 1;
        inner.blocks.insert(
            id,
            BlockData {
                bytes: vec![0u8; capacity],
                state: BlockState::InUse,
            },
        );
        inner.stats.backend_calls += 1;
        inner.stats.bytes_live += capacity as u64;
        Ok(BlockHandle {
            id,
            capacity_bytes: capacity,
            requested_bytes: bytes,
        })
    }

    /// Return a block to the cache. Freeing the zero-capacity sentinel is a
    /// no-op; freeing a block twice is an error.
    pub fn free(&self, handle: &BlockHandle) -> Result<()> {
        if handle.is_sentinel() {
            return Ok(());
        }
        let mut inner = self.inner.lock().expect("allocator lock poisoned");
        let block = inner
            .blocks
            .get_mut(&handle.id)
            .ok_or(Error::InvalidHandle { id: handle.id })?;
        if block.state == BlockState::Cached {
            return Err(Error::InvalidHandle { id: handle.id });
        }
        block.state = BlockState::Cached;
        let capacity = handle.capacity_bytes as u64;
        inner.stats.bytes_live -= capacity;
        inner.stats.bytes_cached += capacity;
        inner
            .cache
            .entry(handle.capacity_bytes)
            .or_default()
            .push(handle.id);
        Ok(())
    }

    /// Drop every cached block, returning its capacity to the backend.
    pub fn release_cached(&self) {
        let mut inner = self.inner.lock().expect("allocator lock poisoned");
        let ids: Vec<u64> = inner.cache.values().flatten().copied().collect();
        for id in ids {
            inner.blocks.remove(&id);
        }
        inner.cache.clear();
        inner.stats.bytes_cached = 0;
    }

    /// Consistent snapshot of the counters.
    pub fn stats(&self) -> AllocatorStats {
        self.inner.lock().expect("allocator lock poisoned").stats
    }

    /// Copy out the contents of a live block.
    pub fn read_bytes(&self, handle: &BlockHandle) -> Result<Vec<u8>> {
        if handle.is_sentinel() {
            return Ok(Vec::new());
        }
        let inner = self.inner.lock().expect("allocator lock poisoned");
        let block = inner
            .blocks
            .get(&handle.id)
            .ok_or(Error::InvalidHandle { id: handle.id })?;
        if block.state != BlockState::InUse {
            return Err(Error::InvalidHandle { id: handle.id });
        }
        Ok(block.bytes[..handle.requested_bytes].to_vec())
    }

    /// Overwrite the contents of a live block starting at byte `offset`.
    pub fn write_bytes(&self, handle: &BlockHandle, offset: usize, data: &[u8]) -> Result<()> {
        if handle.is_sentinel() {
            if data.is_empty() {
                return Ok(());
            }
            return Err(Error::InvalidArgument(
                "write beyond zero-capacity block".into(),
            ));
        }
        if offset + data.len() > handle.requested_bytes {
            return Err(Error::InvalidArgument(format!(
                "write of {} bytes at offset {} exceeds block size {}",
                data.len(),
                offset,
                handle.requested_bytes
            )));
        }
        let mut inner = self.inner.lock().expect("allocator lock poisoned");
        let block = inner
            .blocks
            .get_mut(&handle.id)
            .ok_or(Error::InvalidHandle { id: handle.id })?;
        if block.state != BlockState::InUse {
            return Err(Error::InvalidHandle { id: handle.id });
        }
        block.bytes[offset..offset + data.len()].copy_from_slice(data);
        Ok(())
    }
}

fn round_up(bytes: usize) -> usize {
    bytes.div_ceil(GRANULARITY) * GRANULARITY
}

//! Simulated GPU-centric data access over host memory.
//!
//! The crate models a runtime where tensors can live on the host, on a
//! simulated GPU device, or in "unified" host memory that the GPU
//! addresses directly. On top of that value model it provides:
//!
//! - placement rules resolving where operators with unified operands
//!   compute and where their outputs land ([`placement`]);
//! - a recycling allocator backing every device pool ([`alloc`]);
//! - thread-per-element gather kernels with a circular-shift alignment
//!   optimization, emitting per-thread access traces ([`gather`]);
//! - an interconnect simulator turning traces into transaction counts and
//!   modeled transfer times for staging, direct-access, and paging
//!   strategies ([`sim`]).
//!
//! All hot paths run data-parallel under the default `parallel` feature
//! and fall back to sequential drivers without it; results are identical.

pub mod alloc;
pub mod error;
pub mod gather;
pub mod placement;
pub mod runtime;
pub mod sim;
pub mod synth;
pub mod tensor;

pub use alloc::{AllocatorStats, BlockHandle, RecyclingAllocator, GRANULARITY};
pub use error::{Error, Result};
pub use gather::{
    alignment_activation, compute_shifts, naive_gather, shifted_gather, width_misaligned,
    AccessTrace, GatherPlan, GatherSource, SliceSource, TraceRecord,
};
pub use placement::{
    dispatch_binary, dispatch_binary_forced, index_select, resolve_placement, BinaryOp,
    ComputeUnit, OperandDescriptor, OutputKind, PlacementDecision,
};
pub use runtime::{DispatchRecord, Runtime, RuntimeBuilder};
pub use sim::{
    compare_strategies, count_pages, count_transactions, estimate_time, GatherStats,
    InterconnectConfig, Strategy, StrategyReport, TraceWorkload,
};
pub use tensor::{AdviseRecord, DeviceKind, ElemType, Fill, MemAdvise, Tensor};

//! Runtime context: per-device-kind allocator pools, the interconnect
//! configuration, a monotonic event clock, and the execution log that makes
//! placement decisions and access traces observable.

use std::collections::HashMap;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, Mutex};

use crate::alloc::{AllocatorStats, RecyclingAllocator};
use crate::error::{Error, Result};
use crate::gather::AccessTrace;
use crate::placement::PlacementDecision;
use crate::sim::InterconnectConfig;
use crate::synth::synth_element;
use crate::tensor::{
    encode_u64s, AdviseRecord, BufferGuard, DeviceKind, ElemType, Fill, MemAdvise, Tensor,
};

/// One entry in the execution log.
#[derive(Debug, Clone)]
pub struct DispatchRecord {
    /// Operation name ("add", "mul", "less_than", "index_select", "to").
    pub op: &'static str,
    /// Placement decision, for operations that went through the rules.
    pub decision: Option<PlacementDecision>,
    /// Access trace, attached by GPU gathers over unified sources.
    pub trace: Option<AccessTrace>,
    /// Modeled transfer cost in seconds, for explicit copies.
    pub modeled_seconds: Option<f64>,
}

struct Shared {
    config: InterconnectConfig,
    allocator_limit: u64,
    pools: Mutex<HashMap<DeviceKind, Arc<RecyclingAllocator>>>,
    log: Mutex<Vec<DispatchRecord>>,
    clock: AtomicU64,
}

/// Cheap-to-clone handle to the shared runtime state. Every tensor carries
/// one; tensors from different runtimes cannot be mixed in one operation.
#[derive(Clone)]
pub struct Runtime {
    shared: Arc<Shared>,
}

/// Builder for non-default runtimes.
pub struct RuntimeBuilder {
    config: InterconnectConfig,
    allocator_limit: u64,
}

impl RuntimeBuilder {
    /// Interconnect configuration used for placement and modeled costs.
    pub fn config(mut self, config: InterconnectConfig) -> Self {
        self.config = config;
        self
    }

    /// Capacity limit applied to each device pool.
    pub fn allocator_limit(mut self, bytes: u64) -> Self {
        self.allocator_limit = bytes;
        self
    }

    pub fn build(self) -> Result<Runtime> {
        self.config.validate()?;
        Ok(Runtime {
            shared: Arc::new(Shared {
                config: self.config,
                allocator_limit: self.allocator_limit,
                pools: Mutex::new(HashMap::new()),
                log: Mutex::new(Vec::new()),
                clock: AtomicU64::new(0),
            }),
        })
    }
}

impl Default for Runtime {
    fn default() -> Self {
        Self::new()
    }
}

impl Runtime {
    /// Runtime with default interconnect constants and unlimited pools.
    pub fn new() -> Self {
        Self::builder().build().expect("default config is valid")
    }

    pub fn builder() -> RuntimeBuilder {
        RuntimeBuilder {
            config: InterconnectConfig::default(),
            allocator_limit: u64::MAX,
        }
    }

    /// The interconnect configuration.
    pub fn config(&self) -> &InterconnectConfig {
        &self.shared.config
    }

    /// True when two handles point at the same runtime.
    pub fn same_as(&self, other: &Runtime) -> bool {
        Arc::ptr_eq(&self.shared, &other.shared)
    }

    /// The allocator pool owning a device kind, created on first use.
    pub fn pool(&self, device: DeviceKind) -> Arc<RecyclingAllocator> {
        let mut pools = self.shared.pools.lock().expect("pool map lock poisoned");
        pools
            .entry(device)
            .or_insert_with(|| {
                Arc::new(RecyclingAllocator::with_capacity_limit(
                    self.shared.allocator_limit,
                ))
            })
            .clone()
    }

    /// Snapshot of a device pool's counters.
    pub fn allocator_stats(&self, device: DeviceKind) -> AllocatorStats {
        self.pool(device).stats()
    }

    /// Next value of the monotonic event clock (starts at 1).
    pub(crate) fn next_stamp(&self) -> u64 {
        self.shared.clock.fetch_add(1, Ordering::Relaxed) + 1
    }

    pub(crate) fn record(&self, record: DispatchRecord) {
        self.shared
            .log
            .lock()
            .expect("log lock poisoned")
            .push(record);
    }

    /// Copy of the execution log.
    pub fn execution_log(&self) -> Vec<DispatchRecord> {
        self.shared.log.lock().expect("log lock poisoned").clone()
    }

    /// Drop all log entries.
    pub fn clear_log(&self) {
        self.shared.log.lock().expect("log lock poisoned").clear();
    }

    /// Create a tensor with default unified settings (propagation on, no
    /// advise hint).
    pub fn create(&self, shape: &[usize], fill: Fill, device: DeviceKind) -> Result<Tensor> {
        self.create_with(shape, fill, device, true, None)
    }

    /// Create a tensor, specifying the propagation preference and an
    /// optional creation-time advise hint (unified only). A creation-time
    /// hint is stamped before any simulated device touches the buffer.
    pub fn create_with(
        &self,
        shape: &[usize],
        fill: Fill,
        device: DeviceKind,
        propagation: bool,
        advise: Option<(MemAdvise, DeviceKind)>,
    ) -> Result<Tensor> {
        if advise.is_some() && !device.is_unified() {
            return Err(Error::InvalidArgument(format!(
                "advise hint requires a unified tensor, got {device}"
            )));
        }
        let elem = ElemType::U32;
        let values = fill_values(shape, fill, elem);
        self.materialize(shape, elem, device, propagation, advise, &values)
    }

    /// Create a tensor from explicit values (truncated to the element
    /// width). Used for indices and small fixtures.
    pub fn from_u64s(
        &self,
        values: &[u64],
        shape: &[usize],
        elem: ElemType,
        device: DeviceKind,
    ) -> Result<Tensor> {
        let count: usize = shape.iter().product();
        if count != values.len() {
            return Err(Error::ShapeMismatch {
                expected: shape.to_vec(),
                got: vec![values.len()],
            });
        }
        self.materialize(shape, elem, device, true, None, values)
    }

    /// Rank-0 host-style scalar on the given device.
    pub fn scalar(&self, value: u64, elem: ElemType, device: DeviceKind) -> Result<Tensor> {
        self.materialize(&[], elem, device, true, None, &[value])
    }

    fn materialize(
        &self,
        shape: &[usize],
        elem: ElemType,
        device: DeviceKind,
        propagation: bool,
        advise: Option<(MemAdvise, DeviceKind)>,
        values: &[u64],
    ) -> Result<Tensor> {
        let byte_len = values.len() * elem.bytes();
        let pool = self.pool(device);
        let handle = pool.allocate(byte_len)?;
        let bytes = encode_u64s(values, elem);
        pool.write_bytes(&handle, 0, &bytes)?;

        let advise = advise.map(|(kind, advise_device)| AdviseRecord {
            kind,
            device: advise_device,
            applied_at: self.next_stamp(),
        });
        let buffer = Arc::new(BufferGuard::new(pool, handle));
        if device.is_device() {
            // Device-side fill touches the buffer at creation.
            buffer.mark_device_access(self.next_stamp());
        }
        Ok(Tensor {
            shape: shape.to_vec(),
            elem,
            device,
            propagation,
            advise,
            buffer,
            runtime: self.clone(),
        })
    }

    /// Copy `src` to another device kind; see [`Tensor::to`].
    pub(crate) fn copy_to(&self, src: &Tensor, target: DeviceKind) -> Result<Tensor> {
        if src.device == target {
            self.record(DispatchRecord {
                op: "to",
                decision: None,
                trace: None,
                modeled_seconds: Some(0.0),
            });
            return Ok(src.clone());
        }

        let bytes = src.bytes();
        let pool = self.pool(target);
        let handle = pool.allocate(bytes.len())?;
        pool.write_bytes(&handle, 0, &bytes)?;
        let buffer = Arc::new(BufferGuard::new(pool, handle));

        let crosses_pcie = src.device.is_device() || target.is_device();
        if crosses_pcie {
            let stamp = self.next_stamp();
            src.mark_device_access(stamp);
            buffer.mark_device_access(stamp);
        }
        let bw = if crosses_pcie {
            self.config().pcie_bw
        } else {
            self.config().host_mem_bw
        };
        self.record(DispatchRecord {
            op: "to",
            decision: None,
            trace: None,
            modeled_seconds: Some(bytes.len() as f64 / bw),
        });

        Ok(Tensor {
            shape: src.shape.clone(),
            elem: src.elem,
            device: target,
            // A fresh unified tensor starts with the default preference.
            propagation: true,
            advise: None,
            buffer,
            runtime: self.clone(),
        })
    }

    pub(crate) fn output_tensor(
        &self,
        shape: &[usize],
        elem: ElemType,
        device: DeviceKind,
        propagation: bool,
        values: &[u64],
    ) -> Result<Tensor> {
        self.materialize(shape, elem, device, propagation, None, values)
    }
}

fn fill_values(shape: &[usize], fill: Fill, elem: ElemType) -> Vec<u64> {
    let count: usize = shape.iter().product();
    let mask = elem.mask();
    match fill {
        Fill::Zeros => vec![0; count],
        Fill::Ones => vec![1; count],
        Fill::Value(v) => vec![v & mask; count],
        Fill::Synthetic { seed } => {
            // Row/col layout from the last dimension; rank-0/1 use row 0.
            let width = shape.last().copied().unwrap_or(1).max(1);
            (0..count)
                .map(|i| synth_element(seed, (i / width) as u64, (i % width) as u64) & mask)
                .collect()
        }
    }
}

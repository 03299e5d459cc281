//! Tensor value model.
//!
//! Tensors come in three device kinds: host, simulated GPU device, and
//! unified. A unified tensor lives in host memory but is directly
//! addressable by the simulated GPU; it carries a propagation flag steering
//! placement decisions and an optional memory-advise hint. Contents are
//! fixed-width unsigned integers (1/2/4/8 bytes) stored little-endian.

use std::fmt;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;

use crate::alloc::{BlockHandle, RecyclingAllocator};
use crate::error::{Error, Result};
use crate::runtime::Runtime;

/// Where a tensor's storage lives.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum DeviceKind {
    /// Plain host memory, CPU access only.
    Host,
    /// Simulated GPU device memory.
    Device(u32),
    /// Host memory directly addressable by the simulated GPU.
    Unified,
}

impl DeviceKind {
    /// True for [`DeviceKind::Unified`].
    pub fn is_unified(&self) -> bool {
        matches!(self, DeviceKind::Unified)
    }

    /// True for [`DeviceKind::Device`].
    pub fn is_device(&self) -> bool {
        matches!(self, DeviceKind::Device(_))
    }
}

impl fmt::Display for DeviceKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DeviceKind::Host => write!(f, "host"),
            DeviceKind::Device(id) => write!(f, "device:{id}"),
            DeviceKind::Unified => write!(f, "unified"),
        }
    }
}

/// Fixed-width element types.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ElemType {
    U8,
    U16,
    U32,
    U64,
}

impl ElemType {
    /// Size of one element in bytes.
    pub fn bytes(self) -> usize {
        match self {
            ElemType::U8 => 1,
            ElemType::U16 => 2,
            ElemType::U32 => 4,
            ElemType::U64 => 8,
        }
    }

    /// Value mask for the element width.
    pub fn mask(self) -> u64 {
        match self {
            ElemType::U8 => 0xFF,
            ElemType::U16 => 0xFFFF,
            ElemType::U32 => 0xFFFF_FFFF,
            ElemType::U64 => u64::MAX,
        }
    }

    /// Element type for a byte width, if supported.
    pub fn from_bytes(bytes: usize) -> Option<ElemType> {
        match bytes {
            1 => Some(ElemType::U8),
            2 => Some(ElemType::U16),
            4 => Some(ElemType::U32),
            8 => Some(ElemType::U64),
            _ => None,
        }
    }
}

/// How to initialize a freshly created tensor.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Fill {
    /// All zeros.
    Zeros,
    /// All ones.
    Ones,
    /// A constant raw value, truncated to the element width.
    Value(u64),
    /// Deterministic per-(row, col) contents from [`crate::synth::synth_element`].
    Synthetic {
        /// Seed for the synthetic generator.
        seed: u64,
    },
}

/// Memory-advise hints attached to unified tensors. Pure metadata in
/// simulation; they do not change modeled costs.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MemAdvise {
    SetPreferredLocation,
    SetAccessedBy,
    SetReadMostly,
    /// Clears any existing advise record.
    Unset,
}

/// An applied advise hint, stamped for ordering relative to the first
/// simulated device access of the tensor's buffer.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AdviseRecord {
    /// Which hint was applied.
    pub kind: MemAdvise,
    /// Device the hint refers to.
    pub device: DeviceKind,
    /// Runtime clock stamp at application time.
    pub applied_at: u64,
}

/// Buffer ownership: frees the block back to its pool on drop, and tracks
/// the first simulated device access for advise-ordering tests.
pub(crate) struct BufferGuard {
    alloc: Arc<RecyclingAllocator>,
    handle: BlockHandle,
    first_access: AtomicU64, // 0 = never touched by the simulated device
}

impl BufferGuard {
    pub(crate) fn new(alloc: Arc<RecyclingAllocator>, handle: BlockHandle) -> Self {
        BufferGuard {
            alloc,
            handle,
            first_access: AtomicU64::new(0),
        }
    }

    pub(crate) fn handle(&self) -> &BlockHandle {
        &self.handle
    }

    pub(crate) fn mark_device_access(&self, stamp: u64) {
        let _ = self
            .first_access
            .compare_exchange(0, stamp, Ordering::Relaxed, Ordering::Relaxed);
    }

    pub(crate) fn first_access(&self) -> Option<u64> {
        match self.first_access.load(Ordering::Relaxed) {
            0 => None,
            stamp => Some(stamp),
        }
    }
}

impl Drop for BufferGuard {
    fn drop(&mut self) {
        // Returning to the cache cannot fail for a live handle; a poisoned
        // pool during unwind is ignored.
        let _ = self.alloc.free(&self.handle);
    }
}

/// A shaped, typed, device-placed value.
///
/// Cloning is shallow: clones share the backing buffer. Contents are
/// immutable after fill; the propagation flag and advise record are
/// per-handle metadata mutated through `&mut self`.
#[derive(Clone)]
pub struct Tensor {
    pub(crate) shape: Vec<usize>,
    pub(crate) elem: ElemType,
    pub(crate) device: DeviceKind,
    pub(crate) propagation: bool,
    pub(crate) advise: Option<AdviseRecord>,
    pub(crate) buffer: Arc<BufferGuard>,
    pub(crate) runtime: Runtime,
}

impl fmt::Debug for Tensor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Tensor")
            .field("shape", &self.shape)
            .field("elem", &self.elem)
            .field("device", &self.device)
            .field("propagation", &self.propagation)
            .field("advise", &self.advise)
            .finish()
    }
}

impl Tensor {
    /// Tensor shape (extents per dimension).
    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    /// Number of dimensions.
    pub fn rank(&self) -> usize {
        self.shape.len()
    }

    /// Product of the shape extents.
    pub fn num_elements(&self) -> usize {
        self.shape.iter().product()
    }

    /// Element type.
    pub fn elem_type(&self) -> ElemType {
        self.elem
    }

    /// Bytes per element.
    pub fn elem_bytes(&self) -> usize {
        self.elem.bytes()
    }

    /// Total buffer length in bytes.
    pub fn byte_len(&self) -> usize {
        self.num_elements() * self.elem.bytes()
    }

    /// Device kind the tensor is placed on.
    pub fn device(&self) -> DeviceKind {
        self.device
    }

    /// True iff the tensor is of unified kind.
    pub fn is_unified(&self) -> bool {
        self.device.is_unified()
    }

    /// True for rank-0 tensors.
    pub fn is_scalar(&self) -> bool {
        self.shape.is_empty()
    }

    /// The runtime this tensor belongs to.
    pub fn runtime(&self) -> &Runtime {
        &self.runtime
    }

    /// Propagation preference. Only unified tensors carry one.
    pub fn propagation(&self) -> Result<bool> {
        if !self.is_unified() {
            return Err(Error::InvalidTensorKind {
                op: "propagation",
                device: self.device,
            });
        }
        Ok(self.propagation)
    }

    /// Switch the placement preference without touching storage. The buffer
    /// handle and allocator counters are unchanged.
    pub fn set_propagation(&mut self, value: bool) -> Result<()> {
        if !self.is_unified() {
            return Err(Error::InvalidTensorKind {
                op: "set_propagation",
                device: self.device,
            });
        }
        self.propagation = value;
        Ok(())
    }

    /// Attach or clear a memory-advise hint. [`MemAdvise::Unset`] clears the
    /// record; other kinds replace it.
    pub fn mem_advise(&mut self, advise: MemAdvise, advise_device: DeviceKind) -> Result<()> {
        if !self.is_unified() {
            return Err(Error::InvalidTensorKind {
                op: "mem_advise",
                device: self.device,
            });
        }
        match advise {
            MemAdvise::Unset => self.advise = None,
            kind => {
                self.advise = Some(AdviseRecord {
                    kind,
                    device: advise_device,
                    applied_at: self.runtime.next_stamp(),
                });
            }
        }
        Ok(())
    }

    /// Current advise record, if any.
    pub fn advise(&self) -> Option<AdviseRecord> {
        self.advise
    }

    /// Clock stamp of the first simulated device access of the buffer.
    pub fn first_device_access(&self) -> Option<u64> {
        self.buffer.first_access()
    }

    /// Copy of the raw little-endian contents.
    pub fn bytes(&self) -> Vec<u8> {
        self.buffer
            .alloc
            .read_bytes(self.buffer.handle())
            .expect("tensor buffer must be live")
    }

    /// Contents decoded to `u64`, widening smaller element types.
    pub fn values_u64(&self) -> Vec<u64> {
        decode_u64s(&self.bytes(), self.elem)
    }

    /// Copy the tensor to another device kind.
    ///
    /// Copying onto the same kind returns a shallow alias (no allocation, no
    /// data movement). Cross-kind copies allocate from the target pool and
    /// are bit-exact. The modeled transfer cost is recorded in the runtime's
    /// execution log: host<->device and unified<->device copies cost
    /// `bytes / pcie_bw`, host<->unified copies cost `bytes / host_mem_bw`.
    pub fn to(&self, target: DeviceKind) -> Result<Tensor> {
        self.runtime.clone().copy_to(self, target)
    }

    pub(crate) fn mark_device_access(&self, stamp: u64) {
        self.buffer.mark_device_access(stamp);
    }
}

/// Decode little-endian elements to u64 lanes.
pub(crate) fn decode_u64s(bytes: &[u8], elem: ElemType) -> Vec<u64> {
    let width = elem.bytes();
    bytes
        .chunks_exact(width)
        .map(|chunk| {
            let mut buf = [0u8; 8];
            buf[..width].copy_from_slice(chunk);
            u64::from_le_bytes(buf)
        })
        .collect()
}

/// Encode u64 lanes to little-endian elements, truncating to width.
pub(crate) fn encode_u64s(values: &[u64], elem: ElemType) -> Vec<u8> {
    let width = elem.bytes();
    let mut out = Vec::with_capacity(values.len() * width);
    for &v in values {
        out.extend_from_slice(&v.to_le_bytes()[..width]);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::runtime::Runtime;

    #[test]
    fn create_unified_ones() {
        let rt = Runtime::new();
        let t = rt.create(&[128], Fill::Ones, DeviceKind::Unified).unwrap();
        assert!(t.is_unified());
        assert!(t.propagation().unwrap());
        assert_eq!(t.values_u64(), vec![1u64; 128]);
        assert_eq!(t.byte_len(), 512);
    }

    #[test]
    fn create_empty_host() {
        let rt = Runtime::new();
        let t = rt.create(&[0], Fill::Zeros, DeviceKind::Host).unwrap();
        assert_eq!(t.num_elements(), 0);
        assert_eq!(t.byte_len(), 0);
        assert!(t.bytes().is_empty());
    }

    #[test]
    fn create_device_size_arithmetic() {
        let rt = Runtime::new();
        let t = rt
            .create(&[2, 3], Fill::Zeros, DeviceKind::Device(0))
            .unwrap();
        assert_eq!(t.num_elements(), 6);
        assert_eq!(t.byte_len(), 24);
        assert!(!t.is_unified());
    }

    #[test]
    fn advise_on_non_unified_create_rejected() {
        let rt = Runtime::new();
        let err = rt
            .create_with(
                &[4],
                Fill::Zeros,
                DeviceKind::Host,
                true,
                Some((MemAdvise::SetReadMostly, DeviceKind::Host)),
            )
            .unwrap_err();
        assert!(matches!(err, Error::InvalidArgument(_)));
    }

    #[test]
    fn to_round_trips_exactly() {
        let rt = Runtime::new();
        let t = rt
            .create(&[3, 5], Fill::Synthetic { seed: 9 }, DeviceKind::Host)
            .unwrap();
        let u = t.to(DeviceKind::Unified).unwrap();
        assert!(u.is_unified());
        assert_eq!(u.bytes(), t.bytes());
        let back = u.to(DeviceKind::Host).unwrap();
        assert_eq!(back.bytes(), t.bytes());
    }

    #[test]
    fn to_same_kind_is_alias() {
        let rt = Runtime::new();
        let t = rt.create(&[16], Fill::Ones, DeviceKind::Unified).unwrap();
        let calls_before = rt.allocator_stats(DeviceKind::Unified).backend_calls;
        let u = t.to(DeviceKind::Unified).unwrap();
        assert_eq!(u.bytes(), t.bytes());
        assert_eq!(
            rt.allocator_stats(DeviceKind::Unified).backend_calls,
            calls_before
        );
        assert_eq!(
            u.buffer.handle().id(),
            t.buffer.handle().id(),
            "same-kind to() must alias the buffer"
        );
    }

    #[test]
    fn to_device_records_pcie_cost() {
        let rt = Runtime::new();
        let t = rt.create(&[128], Fill::Ones, DeviceKind::Unified).unwrap();
        let _d = t.to(DeviceKind::Device(0)).unwrap();
        let rec = rt.execution_log().pop().unwrap();
        assert_eq!(rec.op, "to");
        let expected = 512.0 / rt.config().pcie_bw;
        assert_eq!(rec.modeled_seconds, Some(expected));
    }

    #[test]
    fn set_propagation_contract() {
        let rt = Runtime::new();
        let mut u = rt.create(&[8], Fill::Zeros, DeviceKind::Unified).unwrap();
        let stats_before = rt.allocator_stats(DeviceKind::Unified);
        let id_before = u.buffer.handle().id();

        u.set_propagation(false).unwrap();
        assert!(!u.propagation().unwrap());
        // Idempotent no-op.
        u.set_propagation(false).unwrap();
        assert!(!u.propagation().unwrap());

        assert_eq!(rt.allocator_stats(DeviceKind::Unified), stats_before);
        assert_eq!(u.buffer.handle().id(), id_before);

        let mut h = rt.create(&[8], Fill::Zeros, DeviceKind::Host).unwrap();
        assert_eq!(
            h.set_propagation(true),
            Err(Error::InvalidTensorKind {
                op: "set_propagation",
                device: DeviceKind::Host,
            })
        );
    }

    #[test]
    fn mem_advise_contract() {
        let rt = Runtime::new();
        let mut u = rt.create(&[8], Fill::Zeros, DeviceKind::Unified).unwrap();
        u.mem_advise(MemAdvise::SetPreferredLocation, DeviceKind::Host)
            .unwrap();
        let rec = u.advise().unwrap();
        assert_eq!(rec.kind, MemAdvise::SetPreferredLocation);
        assert_eq!(rec.device, DeviceKind::Host);

        u.mem_advise(MemAdvise::Unset, DeviceKind::Host).unwrap();
        assert!(u.advise().is_none());

        let mut h = rt.create(&[8], Fill::Zeros, DeviceKind::Host).unwrap();
        assert_eq!(
            h.mem_advise(MemAdvise::SetReadMostly, DeviceKind::Host),
            Err(Error::InvalidTensorKind {
                op: "mem_advise",
                device: DeviceKind::Host,
            })
        );
    }

    #[test]
    fn advise_at_creation_precedes_first_device_access() {
        let rt = Runtime::new();
        let t = rt
            .create_with(
                &[8],
                Fill::Zeros,
                DeviceKind::Unified,
                true,
                Some((MemAdvise::SetAccessedBy, DeviceKind::Device(0))),
            )
            .unwrap();
        assert!(t.first_device_access().is_none());
        let _d = t.to(DeviceKind::Device(0)).unwrap();
        let advised_at = t.advise().unwrap().applied_at;
        let accessed_at = t.first_device_access().unwrap();
        assert!(advised_at < accessed_at);
    }

    #[test]
    fn is_unified_across_kinds() {
        let rt = Runtime::new();
        let u = rt.create(&[2], Fill::Zeros, DeviceKind::Unified).unwrap();
        let h = rt.create(&[2], Fill::Zeros, DeviceKind::Host).unwrap();
        let d = rt.create(&[2], Fill::Zeros, DeviceKind::Device(1)).unwrap();
        assert!(u.is_unified());
        assert!(!h.is_unified());
        assert!(!d.is_unified());
        assert!(u.to(DeviceKind::Unified).unwrap().is_unified());
        assert!(h.to(DeviceKind::Unified).unwrap().is_unified());
    }

    #[test]
    fn round_trip_is_bit_exact_for_every_device_pair() {
        let rt = Runtime::new();
        let kinds = [
            DeviceKind::Host,
            DeviceKind::Device(0),
            DeviceKind::Device(1),
            DeviceKind::Unified,
        ];
        for &from in &kinds {
            let t = rt
                .create(&[4, 9], Fill::Synthetic { seed: 31 }, from)
                .unwrap();
            for &to in &kinds {
                let copied = t.to(to).unwrap();
                assert_eq!(copied.device(), to);
                assert_eq!(copied.bytes(), t.bytes(), "{from} -> {to}");
                assert_eq!(
                    copied.byte_len(),
                    copied.num_elements() * copied.elem_bytes()
                );
            }
        }
    }

    #[test]
    fn elem_widths_encode_decode() {
        for elem in [ElemType::U8, ElemType::U16, ElemType::U32, ElemType::U64] {
            let values = [0u64, 1, 255, elem.mask()];
            let bytes = encode_u64s(&values, elem);
            assert_eq!(bytes.len(), values.len() * elem.bytes());
            assert_eq!(decode_u64s(&bytes, elem), values);
        }
    }
}

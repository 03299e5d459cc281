//! Computation and output placement rules for operators with unified
//! operands, and the operator execution that honors them.
//!
//! The rule table has three rows classifying the non-unified operands and
//! two columns classifying the unified ones:
//!
//! | | all unified prefer propagation | some unified prefers non-propagation |
//! |---|---|---|
//! | some non-scalar host tensor | GPU / unified non-prop | CPU unless one prefers propagation / unified non-prop |
//! | else, some device tensor | GPU / GPU | GPU / unified propagation |
//! | only host scalars or none | GPU / GPU | CPU unless one prefers propagation / unified non-prop |
//!
//! "Scalar" means a rank-0 host value. Operators with more than two
//! operands reduce through the same row/column predicates over the whole
//! operand list.

use crate::error::{Error, Result};
use crate::gather::{self, GatherSource, SliceSource};
use crate::runtime::DispatchRecord;
use crate::tensor::{DeviceKind, ElemType, Tensor};

/// Which simulated unit executes an operator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ComputeUnit {
    Cpu,
    Gpu,
}

/// Device kind and flags of an operator's output tensor.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum OutputKind {
    /// Plain device tensor.
    Gpu,
    /// Unified tensor with propagation preferred.
    UnifiedPropagation,
    /// Unified tensor with propagation not preferred.
    UnifiedNonPropagation,
}

/// Resolved placement for one operator invocation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct PlacementDecision {
    pub compute_on: ComputeUnit,
    pub output_kind: OutputKind,
}

/// What placement needs to know about one operand.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct OperandDescriptor {
    /// Device kind of the operand.
    pub device: DeviceKind,
    /// Rank-0 host value.
    pub is_scalar: bool,
    /// Propagation preference; present exactly for unified operands.
    pub propagation: Option<bool>,
}

impl OperandDescriptor {
    /// Descriptor of a live tensor.
    pub fn from_tensor(t: &Tensor) -> OperandDescriptor {
        OperandDescriptor {
            device: t.device(),
            is_scalar: t.is_scalar() && t.device() == DeviceKind::Host,
            propagation: t.is_unified().then_some(t.propagation),
        }
    }

    /// Non-scalar host tensor.
    pub fn host_tensor() -> OperandDescriptor {
        OperandDescriptor {
            device: DeviceKind::Host,
            is_scalar: false,
            propagation: None,
        }
    }

    /// Rank-0 host scalar.
    pub fn host_scalar() -> OperandDescriptor {
        OperandDescriptor {
            device: DeviceKind::Host,
            is_scalar: true,
            propagation: None,
        }
    }

    /// Device tensor.
    pub fn device_tensor(id: u32) -> OperandDescriptor {
        OperandDescriptor {
            device: DeviceKind::Device(id),
            is_scalar: false,
            propagation: None,
        }
    }

    /// Unified tensor with the given preference.
    pub fn unified(propagation: bool) -> OperandDescriptor {
        OperandDescriptor {
            device: DeviceKind::Unified,
            is_scalar: false,
            propagation: Some(propagation),
        }
    }
}

/// Resolve the compute unit and output kind for an operand list.
///
/// Errors with [`Error::NotApplicable`] when no operand is unified (native
/// dispatch applies), and rejects descriptors whose propagation field
/// violates the unified-only invariant.
pub fn resolve_placement(operands: &[OperandDescriptor]) -> Result<PlacementDecision> {
    for d in operands {
        if d.device.is_unified() != d.propagation.is_some() {
            return Err(Error::InvalidArgument(format!(
                "propagation must be present exactly for unified operands, got {d:?}"
            )));
        }
    }
    let unified: Vec<bool> = operands.iter().filter_map(|d| d.propagation).collect();
    if unified.is_empty() {
        return Err(Error::NotApplicable);
    }

    let any_host_tensor = operands
        .iter()
        .any(|d| d.device == DeviceKind::Host && !d.is_scalar);
    let any_device = operands.iter().any(|d| d.device.is_device());
    let all_prefer_propagation = unified.iter().all(|&p| p);
    let any_prefers_propagation = unified.iter().any(|&p| p);

    let cpu_unless_preferred = if any_prefers_propagation {
        ComputeUnit::Gpu
    } else {
        ComputeUnit::Cpu
    };

    let decision = if any_host_tensor {
        // Row 1: at least one non-scalar host tensor.
        if all_prefer_propagation {
            PlacementDecision {
                compute_on: ComputeUnit::Gpu,
                output_kind: OutputKind::UnifiedNonPropagation,
            }
        } else {
            PlacementDecision {
                compute_on: cpu_unless_preferred,
                output_kind: OutputKind::UnifiedNonPropagation,
            }
        }
    } else if any_device {
        // Row 2: no host tensor, at least one device tensor.
        if all_prefer_propagation {
            PlacementDecision {
                compute_on: ComputeUnit::Gpu,
                output_kind: OutputKind::Gpu,
            }
        } else {
            PlacementDecision {
                compute_on: ComputeUnit::Gpu,
                output_kind: OutputKind::UnifiedPropagation,
            }
        }
    } else {
        // Row 3: all non-unified operands are host scalars, or none exist.
        if all_prefer_propagation {
            PlacementDecision {
                compute_on: ComputeUnit::Gpu,
                output_kind: OutputKind::Gpu,
            }
        } else {
            PlacementDecision {
                compute_on: cpu_unless_preferred,
                output_kind: OutputKind::UnifiedNonPropagation,
            }
        }
    };
    Ok(decision)
}

/// Elementwise binary operators exercised by the rules.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinaryOp {
    Add,
    Mul,
    LessThan,
}

impl BinaryOp {
    fn name(self) -> &'static str {
        match self {
            BinaryOp::Add => "add",
            BinaryOp::Mul => "mul",
            BinaryOp::LessThan => "less_than",
        }
    }

    fn apply(self, a: u64, b: u64, mask: u64) -> u64 {
        match self {
            BinaryOp::Add => a.wrapping_add(b) & mask,
            BinaryOp::Mul => a.wrapping_mul(b) & mask,
            BinaryOp::LessThan => u64::from(a < b),
        }
    }
}

fn check_same_runtime(a: &Tensor, b: &Tensor) -> Result<()> {
    if !a.runtime().same_as(b.runtime()) {
        return Err(Error::InvalidArgument(
            "operands belong to different runtimes".into(),
        ));
    }
    Ok(())
}

fn output_device(operands: &[&Tensor], kind: OutputKind) -> (DeviceKind, bool) {
    match kind {
        OutputKind::Gpu => {
            let id = operands
                .iter()
                .find_map(|t| match t.device() {
                    DeviceKind::Device(id) => Some(id),
                    _ => None,
                })
                .unwrap_or(0);
            (DeviceKind::Device(id), true)
        }
        OutputKind::UnifiedPropagation => (DeviceKind::Unified, true),
        OutputKind::UnifiedNonPropagation => (DeviceKind::Unified, false),
    }
}

/// Execute an elementwise binary operator under the resolved placement.
/// Operands must have equal shapes, or one may be a rank-0 scalar.
pub fn dispatch_binary(op: BinaryOp, a: &Tensor, b: &Tensor) -> Result<Tensor> {
    let decision = resolve_placement(&[
        OperandDescriptor::from_tensor(a),
        OperandDescriptor::from_tensor(b),
    ])?;
    dispatch_binary_forced(op, a, b, decision)
}

/// Execute an elementwise binary operator under an explicit placement.
/// Results are bit-identical under any placement; this entry point exists
/// so that invariance is testable.
pub fn dispatch_binary_forced(
    op: BinaryOp,
    a: &Tensor,
    b: &Tensor,
    decision: PlacementDecision,
) -> Result<Tensor> {
    check_same_runtime(a, b)?;
    if a.elem_type() != b.elem_type() {
        return Err(Error::InvalidArgument(format!(
            "element types differ: {:?} vs {:?}",
            a.elem_type(),
            b.elem_type()
        )));
    }
    if a.shape() != b.shape() && !a.is_scalar() && !b.is_scalar() {
        return Err(Error::ShapeMismatch {
            expected: a.shape().to_vec(),
            got: b.shape().to_vec(),
        });
    }

    let va = a.values_u64();
    let vb = b.values_u64();
    let out_shape: Vec<usize> = if a.is_scalar() {
        b.shape().to_vec()
    } else {
        a.shape().to_vec()
    };
    let count: usize = out_shape.iter().product();
    let mask = a.elem_type().mask();
    let lane_a = |i: usize| if a.is_scalar() { va[0] } else { va[i] };
    let lane_b = |i: usize| if b.is_scalar() { vb[0] } else { vb[i] };
    let values: Vec<u64> = (0..count)
        .map(|i| op.apply(lane_a(i), lane_b(i), mask))
        .collect();

    let out_elem = match op {
        BinaryOp::LessThan => ElemType::U8,
        _ => a.elem_type(),
    };
    let (device, propagation) = output_device(&[a, b], decision.output_kind);
    let runtime = a.runtime().clone();
    let out = runtime.output_tensor(&out_shape, out_elem, device, propagation, &values)?;

    if decision.compute_on == ComputeUnit::Gpu {
        let stamp = runtime.next_stamp();
        a.mark_device_access(stamp);
        b.mark_device_access(stamp);
        out.mark_device_access(stamp);
    }
    runtime.record(DispatchRecord {
        op: op.name(),
        decision: Some(decision),
        trace: None,
        modeled_seconds: None,
    });
    Ok(out)
}

/// Gather rows of a rank-2 source by a rank-1 index tensor, placing the
/// output per the rules. GPU execution over a unified source goes through
/// the gather kernels (shifted when the alignment rule fires) and attaches
/// the access trace to the execution log.
pub fn index_select(src: &Tensor, indices: &Tensor) -> Result<Tensor> {
    check_same_runtime(src, indices)?;
    if src.rank() != 2 {
        return Err(Error::InvalidArgument(format!(
            "index_select source must be rank-2, got rank {}",
            src.rank()
        )));
    }
    if indices.rank() != 1 {
        return Err(Error::InvalidArgument(format!(
            "index_select indices must be rank-1, got rank {}",
            indices.rank()
        )));
    }
    let decision = resolve_placement(&[
        OperandDescriptor::from_tensor(src),
        OperandDescriptor::from_tensor(indices),
    ])?;

    let rows = indices.values_u64();
    let width = src.shape()[1];
    let runtime = src.runtime().clone();
    let cfg = runtime.config();
    if !cfg.cacheline_bytes.is_multiple_of(src.elem_bytes()) {
        return Err(Error::Config(format!(
            "cacheline_bytes {} not divisible by element size {}",
            cfg.cacheline_bytes,
            src.elem_bytes()
        )));
    }
    let elems_per_line = cfg.cacheline_bytes / src.elem_bytes();

    let gpu_gather = decision.compute_on == ComputeUnit::Gpu && src.is_unified();
    let src_values = src.values_u64();
    let source = SliceSource::new(&src_values, width)?;

    let (values, trace) = if gpu_gather {
        let shifted = gather::alignment_activation(src, elems_per_line);
        let (values, trace) = if shifted {
            gather::shifted_gather(&source, &rows, elems_per_line)?
        } else {
            gather::naive_gather(&source, &rows)?
        };
        (values, Some(trace))
    } else {
        // CPU path: plain row copies, no device trace.
        let limit = source.num_rows() as u64;
        let mut values = Vec::with_capacity(rows.len() * width);
        for (position, &index) in rows.iter().enumerate() {
            if index >= limit {
                return Err(Error::IndexOutOfRange {
                    position,
                    index,
                    limit,
                });
            }
            let start = index as usize * width;
            values.extend_from_slice(&src_values[start..start + width]);
        }
        (values, None)
    };

    let (device, propagation) = output_device(&[src, indices], decision.output_kind);
    let out = runtime.output_tensor(
        &[rows.len(), width],
        src.elem_type(),
        device,
        propagation,
        &values,
    )?;

    if decision.compute_on == ComputeUnit::Gpu {
        let stamp = runtime.next_stamp();
        src.mark_device_access(stamp);
        indices.mark_device_access(stamp);
        out.mark_device_access(stamp);
    }
    runtime.record(DispatchRecord {
        op: "index_select",
        decision: Some(decision),
        trace,
        modeled_seconds: None,
    });
    Ok(out)
}

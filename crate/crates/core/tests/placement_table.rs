//! Exhaustive check of the placement rules against a literal six-cell
//! oracle: every operand-kind and propagation combination over lists of up
//! to three operands.

use unified_sim::{
    resolve_placement, ComputeUnit, OperandDescriptor, OutputKind, PlacementDecision,
};

/// The five operand flavors placement distinguishes.
#[derive(Debug, Clone, Copy, PartialEq)]
enum Flavor {
    HostScalar,
    HostTensor,
    DeviceTensor,
    UnifiedPropagating,
    UnifiedNonPropagating,
}

const FLAVORS: [Flavor; 5] = [
    Flavor::HostScalar,
    Flavor::HostTensor,
    Flavor::DeviceTensor,
    Flavor::UnifiedPropagating,
    Flavor::UnifiedNonPropagating,
];

impl Flavor {
    fn descriptor(self) -> OperandDescriptor {
        match self {
            Flavor::HostScalar => OperandDescriptor::host_scalar(),
            Flavor::HostTensor => OperandDescriptor::host_tensor(),
            Flavor::DeviceTensor => OperandDescriptor::device_tensor(0),
            Flavor::UnifiedPropagating => OperandDescriptor::unified(true),
            Flavor::UnifiedNonPropagating => OperandDescriptor::unified(false),
        }
    }
}

/// Literal six-cell table, written independently of the implementation:
/// row and column are classified first, then the answer is looked up.
fn oracle(operands: &[Flavor]) -> Option<PlacementDecision> {
    let any_unified = operands.iter().any(|f| {
        matches!(
            f,
            Flavor::UnifiedPropagating | Flavor::UnifiedNonPropagating
        )
    });
    if !any_unified {
        return None;
    }

    #[derive(PartialEq)]
    enum Row {
        HostTensorPresent,
        DevicePresent,
        ScalarsOnly,
    }
    let row = if operands.contains(&Flavor::HostTensor) {
        Row::HostTensorPresent
    } else if operands.contains(&Flavor::DeviceTensor) {
        Row::DevicePresent
    } else {
        Row::ScalarsOnly
    };
    let all_propagate = !operands.contains(&Flavor::UnifiedNonPropagating);
    let any_propagates = operands.contains(&Flavor::UnifiedPropagating);

    let cell = |compute_on, output_kind| {
        Some(PlacementDecision {
            compute_on,
            output_kind,
        })
    };
    let cpu_unless_any_propagates = if any_propagates {
        ComputeUnit::Gpu
    } else {
        ComputeUnit::Cpu
    };
    match (row, all_propagate) {
        (Row::HostTensorPresent, true) => cell(ComputeUnit::Gpu, OutputKind::UnifiedNonPropagation),
        (Row::HostTensorPresent, false) => {
            cell(cpu_unless_any_propagates, OutputKind::UnifiedNonPropagation)
        }
        (Row::DevicePresent, true) => cell(ComputeUnit::Gpu, OutputKind::Gpu),
        (Row::DevicePresent, false) => cell(ComputeUnit::Gpu, OutputKind::UnifiedPropagation),
        (Row::ScalarsOnly, true) => cell(ComputeUnit::Gpu, OutputKind::Gpu),
        (Row::ScalarsOnly, false) => {
            cell(cpu_unless_any_propagates, OutputKind::UnifiedNonPropagation)
        }
    }
}

fn combos(len: usize) -> Vec<Vec<Flavor>> {
    let mut out: Vec<Vec<Flavor>> = vec![Vec::new()];
    for _ in 0..len {
        out = out
            .into_iter()
            .flat_map(|prefix| {
                FLAVORS.iter().map(move |&f| {
                    let mut next = prefix.clone();
                    next.push(f);
                    next
                })
            })
            .collect();
    }
    out
}

#[test]
fn exhaustive_match_against_six_cell_oracle() {
    let mut checked = 0;
    let mut applicable = 0;
    for len in 1..=3 {
        for combo in combos(len) {
            let descriptors: Vec<OperandDescriptor> =
                combo.iter().map(|f| f.descriptor()).collect();
            let resolved = resolve_placement(&descriptors).ok();
            assert_eq!(resolved, oracle(&combo), "combo {combo:?}");
            checked += 1;
            if resolved.is_some() {
                applicable += 1;
            }
        }
    }
    // 5 + 25 + 125 combinations, all compared; a majority hit the table.
    assert_eq!(checked, 155);
    assert!(applicable > 100);
}

#[test]
fn decisions_cover_exactly_the_six_cells() {
    use std::collections::HashSet;
    let mut seen: HashSet<(ComputeUnit, OutputKind)> = HashSet::new();
    for len in 1..=3 {
        for combo in combos(len) {
            let descriptors: Vec<OperandDescriptor> =
                combo.iter().map(|f| f.descriptor()).collect();
            if let Ok(d) = resolve_placement(&descriptors) {
                seen.insert((d.compute_on, d.output_kind));
            }
        }
    }
    let expected: HashSet<(ComputeUnit, OutputKind)> = [
        (ComputeUnit::Gpu, OutputKind::UnifiedNonPropagation),
        (ComputeUnit::Cpu, OutputKind::UnifiedNonPropagation),
        (ComputeUnit::Gpu, OutputKind::Gpu),
        (ComputeUnit::Gpu, OutputKind::UnifiedPropagation),
    ]
    .into_iter()
    .collect();
    // Four distinct (compute, output) pairs cover the six table cells:
    // two cells coincide with others once the propagation predicate is
    // resolved.
    assert_eq!(seen, expected);
}

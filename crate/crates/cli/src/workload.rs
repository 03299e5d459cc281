//! Workload generation and the benchmark driver.
//!
//! Feature tables are virtual: elements come from the deterministic
//! synthetic generator, so a 4M-row pool costs nothing to "build" and only
//! gathered outputs and access traces occupy memory. Every run gathers the
//! same rows with both kernels, hard-fails unless the outputs match, then
//! prices the active trace under each transfer strategy.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use unified_sim::synth::synth_element;
use unified_sim::{
    count_pages, count_transactions, estimate_time, naive_gather, shifted_gather, width_misaligned,
    GatherSource, GatherStats, InterconnectConfig, Strategy,
};

use crate::graph::CsrGraph;
use crate::report::{BenchReport, ReportRow};
use crate::sample::sample_neighbors;
use crate::{BenchError, Result};

/// Rows in the feature pool unless scaled down.
pub const DEFAULT_POOL_SIZE: u64 = 4 * 1024 * 1024;

/// Working-memory budget for one benchmark point (outputs + traces).
pub const MEMORY_BUDGET_BYTES: u64 = 4 << 30;

/// Kinds of generated workloads.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WorkloadKind {
    /// Uniform random row ids into the pool.
    RandomIndex,
    /// Random rows gathered at eight feature sizes in a 4-byte stride,
    /// starting at `feature_bytes`.
    AlignmentSweep,
    /// Rows produced by multi-hop neighbor sampling over a synthetic graph.
    NeighborSampling,
}

/// Parameters for [`WorkloadKind::NeighborSampling`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SamplingParams {
    /// Neighbors sampled per node per hop.
    pub fanout: usize,
    /// Expansion rounds.
    pub hops: usize,
    /// Root nodes per batch.
    pub batch_nodes: usize,
}

/// One benchmark configuration.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct WorkloadSpec {
    pub kind: WorkloadKind,
    /// Rows in the feature table.
    pub pool_size: u64,
    /// Rows gathered per batch (ignored for neighbor sampling, which
    /// derives it from the sampled union).
    pub num_indices: u64,
    /// Feature width in bytes; must be a multiple of the element size.
    pub feature_bytes: u64,
    /// RNG seed for index generation and feature contents.
    pub seed: u64,
    /// Present exactly for neighbor-sampling workloads.
    pub sampling: Option<SamplingParams>,
}

impl WorkloadSpec {
    fn check(&self, cfg: &InterconnectConfig) -> Result<()> {
        if self.feature_bytes == 0 || !self.feature_bytes.is_multiple_of(cfg.elem_bytes as u64) {
            return Err(BenchError::InvalidArgument(format!(
                "feature_bytes {} must be a positive multiple of elem_bytes {}",
                self.feature_bytes, cfg.elem_bytes
            )));
        }
        if self.num_indices > self.pool_size {
            return Err(BenchError::InvalidArgument(format!(
                "num_indices {} exceeds pool_size {}",
                self.num_indices, self.pool_size
            )));
        }
        if (self.kind == WorkloadKind::NeighborSampling) != self.sampling.is_some() {
            return Err(BenchError::InvalidArgument(
                "sampling parameters are required exactly for neighbor-sampling workloads".into(),
            ));
        }
        Ok(())
    }
}

/// Named benchmark presets.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Preset {
    /// 4x4 grid: {8K, 32K, 128K, 256K} gathered rows x {256B, 1KB, 4KB,
    /// 16KB} features from a 4M-row pool.
    Fig7,
    /// Alignment sweep: 2048..2076-byte features in a 4-byte stride.
    Fig8,
    /// Neighbor sampling over a synthetic uniform graph.
    Sampler,
}

impl std::str::FromStr for Preset {
    type Err = BenchError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "fig7" => Ok(Preset::Fig7),
            "fig8" => Ok(Preset::Fig8),
            "sampler" => Ok(Preset::Sampler),
            other => Err(BenchError::InvalidArgument(format!(
                "unknown preset '{other}' (expected fig7, fig8, or sampler)"
            ))),
        }
    }
}

/// Expand a preset into its workload list. `scale` divides pool and index
/// counts proportionally (never below 1) so shapes survive desk-sized runs.
pub fn preset_specs(preset: Preset, seed: u64, scale: u64) -> Result<Vec<WorkloadSpec>> {
    if scale == 0 {
        return Err(BenchError::InvalidArgument(
            "--scale must be at least 1".into(),
        ));
    }
    let div = |x: u64| (x / scale).max(1);
    let specs = match preset {
        Preset::Fig7 => {
            let index_counts = [8 * 1024u64, 32 * 1024, 128 * 1024, 256 * 1024];
            let feature_sizes = [256u64, 1024, 4096, 16384];
            let mut specs = Vec::with_capacity(16);
            for &num_indices in &index_counts {
                for &feature_bytes in &feature_sizes {
                    specs.push(WorkloadSpec {
                        kind: WorkloadKind::RandomIndex,
                        pool_size: div(DEFAULT_POOL_SIZE),
                        num_indices: div(num_indices),
                        feature_bytes,
                        seed,
                        sampling: None,
                    });
                }
            }
            specs
        }
        Preset::Fig8 => vec![WorkloadSpec {
            kind: WorkloadKind::AlignmentSweep,
            pool_size: div(DEFAULT_POOL_SIZE),
            num_indices: div(2048),
            feature_bytes: 2048,
            seed,
            sampling: None,
        }],
        Preset::Sampler => vec![WorkloadSpec {
            kind: WorkloadKind::NeighborSampling,
            pool_size: div(65536),
            num_indices: 0,
            feature_bytes: 400,
            seed,
            sampling: Some(SamplingParams {
                fanout: 10,
                hops: 2,
                batch_nodes: div(1024) as usize,
            }),
        }],
    };
    Ok(specs)
}

/// Virtual feature table: pool rows never materialize.
struct SyntheticSource {
    pool_rows: u64,
    width: usize,
    seed: u64,
}

impl GatherSource<u64> for SyntheticSource {
    fn num_rows(&self) -> usize {
        self.pool_rows as usize
    }

    fn width(&self) -> usize {
        self.width
    }

    fn element(&self, row: u64, col: usize) -> u64 {
        synth_element(self.seed, row, col as u64)
    }
}

fn random_rows(pool: u64, count: u64, seed: u64) -> Vec<u64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count).map(|_| rng.random_range(0..pool)).collect()
}

/// Nodes for a synthetic uniform graph with ~16 edges per node, then the
/// sampled row union for the gather.
fn sampling_rows(spec: &WorkloadSpec, params: SamplingParams) -> Result<Vec<u64>> {
    let n = spec.pool_size;
    if n == 0 {
        return Ok(Vec::new());
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    rng.set_stream(1);
    let edges: Vec<(u64, u64)> = (0..n * 16)
        .map(|_| (rng.random_range(0..n), rng.random_range(0..n)))
        .collect();
    // Pin the node count even if the random edges miss the last ids.
    let mut graph_edges = edges;
    graph_edges.push((n - 1, n - 1));
    let graph = CsrGraph::from_edges(&graph_edges);

    let mut batch_rng = ChaCha8Rng::seed_from_u64(spec.seed);
    batch_rng.set_stream(2);
    let batch: Vec<u64> = (0..params.batch_nodes)
        .map(|_| batch_rng.random_range(0..n))
        .collect();
    sample_neighbors(&graph, &batch, params.fanout, params.hops, spec.seed)
}

/// Estimated working bytes for one point: two outputs plus two traces.
fn estimated_bytes(num_indices: u64, width_elems: u64) -> u64 {
    let records = num_indices * width_elems;
    let trace_bytes = records * 16;
    let out_bytes = records * 8;
    2 * (trace_bytes + out_bytes)
}

fn check_sizing(num_indices: u64, width_elems: u64) -> Result<()> {
    let required = estimated_bytes(num_indices, width_elems);
    if required > MEMORY_BUDGET_BYTES {
        let advised_scale = required.div_ceil(MEMORY_BUDGET_BYTES).max(2);
        return Err(BenchError::Sizing {
            required_mib: required >> 20,
            budget_mib: MEMORY_BUDGET_BYTES >> 20,
            advised_scale,
        });
    }
    Ok(())
}

/// Reject a spec before any gather runs; sweeps are charged at their
/// widest point. Sampling workloads are bounded by the pool size.
fn check_spec_sizing(spec: &WorkloadSpec, cfg: &InterconnectConfig) -> Result<()> {
    let elem_bytes = cfg.elem_bytes as u64;
    let width = spec.feature_bytes / elem_bytes;
    match spec.kind {
        WorkloadKind::AlignmentSweep => check_sizing(spec.num_indices, width + 28 / elem_bytes),
        WorkloadKind::NeighborSampling => check_sizing(spec.pool_size, width),
        WorkloadKind::RandomIndex => check_sizing(spec.num_indices, width),
    }
}

/// Gather one point with both kernels and price it under every strategy.
fn run_point(
    kind: WorkloadKind,
    pool: u64,
    rows: &[u64],
    feature_bytes: u64,
    seed: u64,
    cfg: &InterconnectConfig,
) -> Result<ReportRow> {
    let elem_bytes = cfg.elem_bytes as u64;
    let width = (feature_bytes / elem_bytes) as usize;
    let elems_per_line = cfg.elems_per_line();
    check_sizing(rows.len() as u64, width as u64)?;

    let source = SyntheticSource {
        pool_rows: pool,
        width,
        seed,
    };
    let (naive_out, naive_trace) = naive_gather(&source, rows)?;
    let (shifted_out, shifted_trace) = shifted_gather(&source, rows, elems_per_line)?;
    if naive_out != shifted_out {
        return Err(BenchError::InternalCheck(format!(
            "shifted gather output diverged from naive output \
             (pool {pool}, rows {}, feature_bytes {feature_bytes})",
            rows.len()
        )));
    }
    drop(naive_out);
    drop(shifted_out);

    let naive_tx = count_transactions(&naive_trace, cfg);
    let shifted_tx = count_transactions(&shifted_trace, cfg);
    let pages = count_pages(&naive_trace, cfg);

    // The pool is host memory the simulated GPU addresses directly, so the
    // shifted kernel is active exactly when the width is misaligned.
    let active = width_misaligned(width, cfg.elem_bytes, cfg.cacheline_bytes);
    let stats = GatherStats {
        rows: rows.len() as u64,
        width_elems: width as u64,
        elem_bytes,
        transactions: if active { shifted_tx } else { naive_tx },
        pages,
    };
    let times: Vec<f64> = Strategy::ALL
        .iter()
        .map(|&s| estimate_time(s, &stats, cfg).modeled_time)
        .collect();
    let cpu_centric = times[1];
    let direct = times[2];

    Ok(ReportRow {
        workload: kind_name(kind),
        pool_size: pool,
        num_indices: rows.len() as u64,
        feature_bytes,
        seed,
        naive_transactions: naive_tx,
        shifted_transactions: shifted_tx,
        ideal_s: times[0],
        cpu_centric_s: cpu_centric,
        direct_access_s: direct,
        uvm_paging_s: times[3],
        speedup_vs_cpu_centric: cpu_centric / direct,
    })
}

fn kind_name(kind: WorkloadKind) -> &'static str {
    match kind {
        WorkloadKind::RandomIndex => "random_index",
        WorkloadKind::AlignmentSweep => "alignment_sweep",
        WorkloadKind::NeighborSampling => "neighbor_sampling",
    }
}

/// Run one workload spec. Random-index and neighbor-sampling specs emit
/// one row; an alignment sweep emits eight (one per feature size).
pub fn run_benchmark(spec: &WorkloadSpec, cfg: &InterconnectConfig) -> Result<BenchReport> {
    cfg.validate().map_err(BenchError::Sim)?;
    spec.check(cfg)?;
    check_spec_sizing(spec, cfg)?;
    let rows = match spec.kind {
        WorkloadKind::NeighborSampling => {
            sampling_rows(spec, spec.sampling.expect("checked above"))?
        }
        _ => random_rows(spec.pool_size, spec.num_indices, spec.seed),
    };

    let mut report = BenchReport::default();
    match spec.kind {
        WorkloadKind::AlignmentSweep => {
            for step in 0..8u64 {
                let feature_bytes = spec.feature_bytes + 4 * step;
                report.rows.push(run_point(
                    spec.kind,
                    spec.pool_size,
                    &rows,
                    feature_bytes,
                    spec.seed,
                    cfg,
                )?);
            }
        }
        _ => {
            report.rows.push(run_point(
                spec.kind,
                spec.pool_size,
                &rows,
                spec.feature_bytes,
                spec.seed,
                cfg,
            )?);
        }
    }
    Ok(report)
}

/// Run every spec of a preset, concatenating rows in spec order.
pub fn run_preset(
    preset: Preset,
    seed: u64,
    scale: u64,
    cfg: &InterconnectConfig,
) -> Result<BenchReport> {
    let specs = preset_specs(preset, seed, scale)?;
    // Fail before any point runs if one of them would blow the budget.
    for spec in &specs {
        spec.check(cfg)?;
        check_spec_sizing(spec, cfg)?;
    }
    let mut report = BenchReport::default();
    for spec in &specs {
        report.rows.extend(run_benchmark(spec, cfg)?.rows);
    }
    Ok(report)
}

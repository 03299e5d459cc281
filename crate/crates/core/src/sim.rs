//! Interconnect transaction counting and analytic transfer-time models.
//!
//! A PCIe transaction is one cacheline-granularity read issued by a warp:
//! the counter reports distinct `(warp, cacheline)` pairs over a trace.
//! Transfer times are closed-form per strategy; the model reproduces
//! transaction counts and strategy orderings, not wall-clock hardware
//! numbers.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::gather::AccessTrace;

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Hardware constants for the simulated GPU and interconnect.
///
/// Defaults: warp 32 threads, 128-byte cachelines, 4-byte elements,
/// 4 KiB pages, 16 GB/s PCIe, 50 GB/s host memory, 10 us DMA setup,
/// 5 us kernel launch, 20 us page fault. All overridable via a
/// `key=value` config file (see [`InterconnectConfig::parse`]).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InterconnectConfig {
    /// Threads per warp.
    pub warp_size: usize,
    /// Bytes per GPU cacheline (transaction granularity).
    pub cacheline_bytes: usize,
    /// Bytes per element of the traced tensors.
    pub elem_bytes: usize,
    /// Bytes per UVM page.
    pub page_bytes: usize,
    /// Host-to-GPU interconnect bandwidth, bytes/second.
    pub pcie_bw: f64,
    /// Host memory bandwidth, bytes/second.
    pub host_mem_bw: f64,
    /// Fixed cost of setting up one DMA copy, seconds.
    pub dma_setup_latency: f64,
    /// Fixed cost of one kernel launch, seconds.
    pub kernel_launch_latency: f64,
    /// Fixed cost of servicing one page fault, seconds.
    pub page_fault_latency: f64,
}

impl Default for InterconnectConfig {
    fn default() -> Self {
        InterconnectConfig {
            warp_size: 32,
            cacheline_bytes: 128,
            elem_bytes: 4,
            page_bytes: 4096,
            pcie_bw: 16e9,
            host_mem_bw: 50e9,
            dma_setup_latency: 10e-6,
            kernel_launch_latency: 5e-6,
            page_fault_latency: 20e-6,
        }
    }
}

impl InterconnectConfig {
    /// Elements per cacheline.
    pub fn elems_per_line(&self) -> usize {
        self.cacheline_bytes / self.elem_bytes
    }

    /// Check structural invariants: cacheline a multiple of the element
    /// size, page a multiple of the cacheline, positive sizes and
    /// bandwidths, non-negative latencies.
    pub fn validate(&self) -> Result<()> {
        if self.warp_size == 0 {
            return Err(Error::Config("warp_size must be positive".into()));
        }
        if self.elem_bytes == 0 || self.cacheline_bytes == 0 || self.page_bytes == 0 {
            return Err(Error::Config("sizes must be positive".into()));
        }
        if !self.cacheline_bytes.is_multiple_of(self.elem_bytes) {
            return Err(Error::Config(format!(
                "cacheline_bytes {} not a multiple of elem_bytes {}",
                self.cacheline_bytes, self.elem_bytes
            )));
        }
        if !self.page_bytes.is_multiple_of(self.cacheline_bytes) {
            return Err(Error::Config(format!(
                "page_bytes {} not a multiple of cacheline_bytes {}",
                self.page_bytes, self.cacheline_bytes
            )));
        }
        for (name, bw) in [("pcie_bw", self.pcie_bw), ("host_mem_bw", self.host_mem_bw)] {
            if bw.is_nan() || bw <= 0.0 {
                return Err(Error::Config(format!("{name} must be positive")));
            }
        }
        for (name, v) in [
            ("dma_setup_latency", self.dma_setup_latency),
            ("kernel_launch_latency", self.kernel_launch_latency),
            ("page_fault_latency", self.page_fault_latency),
        ] {
            if !v.is_finite() || v < 0.0 {
                return Err(Error::Config(format!("{name} must be finite and >= 0")));
            }
        }
        Ok(())
    }

    /// Parse `key=value` lines over the defaults. Blank lines and `#`
    /// comments are ignored; unknown keys are errors.
    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = InterconnectConfig::default();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {}: expected key=value", lineno + 1)))?;
            let key = key.trim();
            let value = value.trim();
            let bad = |what: &str| {
                Error::Config(format!("line {}: invalid {what} '{value}'", lineno + 1))
            };
            match key {
                "warp_size" => cfg.warp_size = value.parse().map_err(|_| bad("integer"))?,
                "cacheline_bytes" => {
                    cfg.cacheline_bytes = value.parse().map_err(|_| bad("integer"))?
                }
                "elem_bytes" => cfg.elem_bytes = value.parse().map_err(|_| bad("integer"))?,
                "page_bytes" => cfg.page_bytes = value.parse().map_err(|_| bad("integer"))?,
                "pcie_bw" => cfg.pcie_bw = value.parse().map_err(|_| bad("number"))?,
                "host_mem_bw" => cfg.host_mem_bw = value.parse().map_err(|_| bad("number"))?,
                "dma_setup_latency" => {
                    cfg.dma_setup_latency = value.parse().map_err(|_| bad("number"))?
                }
                "kernel_launch_latency" => {
                    cfg.kernel_launch_latency = value.parse().map_err(|_| bad("number"))?
                }
                "page_fault_latency" => {
                    cfg.page_fault_latency = value.parse().map_err(|_| bad("number"))?
                }
                other => {
                    return Err(Error::Config(format!(
                        "line {}: unknown key '{other}'",
                        lineno + 1
                    )))
                }
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }

    /// Load a `key=value` config file.
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }
}

/// Transfer strategies the simulator models.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Strategy {
    /// Pure payload over peak interconnect bandwidth; lower bound.
    Ideal,
    /// CPU gathers into a staging buffer, then DMA copies to the GPU.
    CpuCentric,
    /// GPU threads read host memory directly, cacheline per transaction.
    DirectAccess,
    /// Page-migration unified memory: every touched page faults and moves.
    UvmPaging,
}

impl Strategy {
    /// All strategies in report order.
    pub const ALL: [Strategy; 4] = [
        Strategy::Ideal,
        Strategy::CpuCentric,
        Strategy::DirectAccess,
        Strategy::UvmPaging,
    ];
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            Strategy::Ideal => "ideal",
            Strategy::CpuCentric => "cpu_centric",
            Strategy::DirectAccess => "direct_access",
            Strategy::UvmPaging => "uvm_paging",
        };
        write!(f, "{name}")
    }
}

impl FromStr for Strategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "ideal" => Ok(Strategy::Ideal),
            "cpu_centric" => Ok(Strategy::CpuCentric),
            "direct_access" => Ok(Strategy::DirectAccess),
            "uvm_paging" => Ok(Strategy::UvmPaging),
            other => Err(Error::InvalidArgument(format!(
                "unknown strategy '{other}'"
            ))),
        }
    }
}

/// Inputs to the per-strategy time model.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GatherStats {
    /// Rows gathered.
    pub rows: u64,
    /// Feature width in elements.
    pub width_elems: u64,
    /// Bytes per element.
    pub elem_bytes: u64,
    /// Distinct (warp, cacheline) transactions of the actual access trace.
    pub transactions: u64,
    /// Distinct pages touched by the trace.
    pub pages: u64,
}

impl GatherStats {
    /// Gathered payload in bytes.
    pub fn payload_bytes(&self) -> u64 {
        self.rows * self.width_elems * self.elem_bytes
    }
}

/// Modeled outcome for one strategy.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StrategyReport {
    pub strategy: Strategy,
    /// Interconnect requests: cacheline transactions for direct access,
    /// contiguous cachelines for staged copies, pages for UVM.
    pub transactions: u64,
    /// Bytes crossing the interconnect.
    pub bytes_moved: u64,
    /// Modeled transfer time in seconds.
    pub modeled_time: f64,
}

/// Count distinct `(warp, cacheline)` pairs in a trace.
pub fn count_transactions(trace: &AccessTrace, cfg: &InterconnectConfig) -> u64 {
    #[cfg(feature = "parallel")]
    {
        parallel::count_transactions(trace, cfg)
    }
    #[cfg(not(feature = "parallel"))]
    {
        sequential::count_transactions(trace, cfg)
    }
}

/// Count distinct pages touched by a trace.
pub fn count_pages(trace: &AccessTrace, cfg: &InterconnectConfig) -> u64 {
    #[cfg(feature = "parallel")]
    {
        parallel::count_pages(trace, cfg)
    }
    #[cfg(not(feature = "parallel"))]
    {
        sequential::count_pages(trace, cfg)
    }
}

/// Single-threaded counters; also the comparison baseline for benches.
pub mod sequential {
    use super::*;

    pub fn count_transactions(trace: &AccessTrace, cfg: &InterconnectConfig) -> u64 {
        let base = trace.base_offset_bytes;
        let mut pairs: Vec<(u64, u64)> = trace
            .records
            .iter()
            .map(|r| {
                let warp = r.thread_id / cfg.warp_size as u64;
                let line =
                    (r.element_index * cfg.elem_bytes as u64 + base) / cfg.cacheline_bytes as u64;
                (warp, line)
            })
            .collect();
        pairs.sort_unstable();
        pairs.dedup();
        pairs.len() as u64
    }

    pub fn count_pages(trace: &AccessTrace, cfg: &InterconnectConfig) -> u64 {
        let base = trace.base_offset_bytes;
        let mut pages: Vec<u64> = trace
            .records
            .iter()
            .map(|r| (r.element_index * cfg.elem_bytes as u64 + base) / cfg.page_bytes as u64)
            .collect();
        pages.sort_unstable();
        pages.dedup();
        pages.len() as u64
    }
}

/// Rayon counters: map to keys, parallel sort, dedup. Order-independent by
/// construction, so results match the sequential counters exactly.
#[cfg(feature = "parallel")]
pub mod parallel {
    use super::*;

    pub fn count_transactions(trace: &AccessTrace, cfg: &InterconnectConfig) -> u64 {
        let base = trace.base_offset_bytes;
        let mut pairs: Vec<(u64, u64)> = trace
            .records
            .par_iter()
            .map(|r| {
                let warp = r.thread_id / cfg.warp_size as u64;
                let line =
                    (r.element_index * cfg.elem_bytes as u64 + base) / cfg.cacheline_bytes as u64;
                (warp, line)
            })
            .collect();
        pairs.par_sort_unstable();
        pairs.dedup();
        pairs.len() as u64
    }

    pub fn count_pages(trace: &AccessTrace, cfg: &InterconnectConfig) -> u64 {
        let base = trace.base_offset_bytes;
        let mut pages: Vec<u64> = trace
            .records
            .par_iter()
            .map(|r| (r.element_index * cfg.elem_bytes as u64 + base) / cfg.page_bytes as u64)
            .collect();
        pages.par_sort_unstable();
        pages.dedup();
        pages.len() as u64
    }
}

/// Closed-form transfer time for one strategy.
///
/// - Ideal: `payload / pcie_bw`
/// - CpuCentric: gather read + staging write at host bandwidth, DMA setup,
///   then payload over PCIe
/// - DirectAccess: kernel launch + one cacheline per transaction over PCIe
/// - UvmPaging: per-page fault service + whole pages over PCIe
pub fn estimate_time(
    strategy: Strategy,
    stats: &GatherStats,
    cfg: &InterconnectConfig,
) -> StrategyReport {
    let payload = stats.payload_bytes() as f64;
    let cacheline = cfg.cacheline_bytes as u64;
    match strategy {
        Strategy::Ideal => StrategyReport {
            strategy,
            transactions: stats.payload_bytes().div_ceil(cacheline.max(1)),
            bytes_moved: stats.payload_bytes(),
            modeled_time: payload / cfg.pcie_bw,
        },
        Strategy::CpuCentric => StrategyReport {
            strategy,
            transactions: stats.payload_bytes().div_ceil(cacheline.max(1)),
            bytes_moved: stats.payload_bytes(),
            modeled_time: payload / cfg.host_mem_bw
                + payload / cfg.host_mem_bw
                + cfg.dma_setup_latency
                + payload / cfg.pcie_bw,
        },
        Strategy::DirectAccess => {
            let bytes = stats.transactions * cacheline;
            StrategyReport {
                strategy,
                transactions: stats.transactions,
                bytes_moved: bytes,
                modeled_time: cfg.kernel_launch_latency + bytes as f64 / cfg.pcie_bw,
            }
        }
        Strategy::UvmPaging => {
            let bytes = stats.pages * cfg.page_bytes as u64;
            StrategyReport {
                strategy,
                transactions: stats.pages,
                bytes_moved: bytes,
                modeled_time: stats.pages as f64 * cfg.page_fault_latency
                    + bytes as f64 / cfg.pcie_bw,
            }
        }
    }
}

/// A gather's shape plus the access trace its kernel actually produced.
#[derive(Debug, Clone)]
pub struct TraceWorkload<'a> {
    /// Rows gathered.
    pub rows: u64,
    /// Feature width in elements.
    pub width_elems: u64,
    /// Bytes per element.
    pub elem_bytes: u64,
    /// The trace to account transactions and pages from.
    pub trace: &'a AccessTrace,
}

/// One [`StrategyReport`] per strategy, in [`Strategy::ALL`] order.
pub fn compare_strategies(
    workload: &TraceWorkload<'_>,
    cfg: &InterconnectConfig,
) -> Vec<StrategyReport> {
    let stats = GatherStats {
        rows: workload.rows,
        width_elems: workload.width_elems,
        elem_bytes: workload.elem_bytes,
        transactions: count_transactions(workload.trace, cfg),
        pages: count_pages(workload.trace, cfg),
    };
    Strategy::ALL
        .iter()
        .map(|&s| estimate_time(s, &stats, cfg))
        .collect()
}

//! Workload generation, graph handling, and report emission behind the
//! `bench` binary.

pub mod graph;
pub mod report;
pub mod sample;
pub mod workload;

/// Errors surfaced by the benchmark harness.
#[derive(Debug, thiserror::Error)]
pub enum BenchError {
    /// Malformed input file.
    #[error("{path}:{line}: {msg}")]
    Parse {
        path: String,
        line: usize,
        msg: String,
    },

    /// Filesystem failure, annotated with the path.
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    /// Structurally invalid graph.
    #[error("invalid graph: {0}")]
    Graph(String),

    /// Graph node id outside the graph.
    #[error("node {node} at position {position} out of range ({nodes} nodes)")]
    NodeOutOfRange {
        position: usize,
        node: u64,
        nodes: u64,
    },

    /// The workload would exceed the working-memory budget.
    #[error(
        "workload needs about {required_mib} MiB (budget {budget_mib} MiB); \
         rerun with --scale {advised_scale} or higher"
    )]
    Sizing {
        required_mib: u64,
        budget_mib: u64,
        advised_scale: u64,
    },

    /// Bad CLI or spec arguments.
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// A correctness gate tripped; the report would be meaningless.
    #[error("internal check failed: {0}")]
    InternalCheck(String),

    /// Error from the simulator core.
    #[error(transparent)]
    Sim(#[from] unified_sim::Error),
}

pub type Result<T> = std::result::Result<T, BenchError>;

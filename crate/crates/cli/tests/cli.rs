//! Integration tests for graph I/O, report emission, and the `bench`
//! binary itself.

use std::path::Path;
use std::process::Command;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use unified_bench::graph::{load_graph, save_graph, CsrGraph, GraphFormat};
use unified_bench::report::{emit_report, render, ReportFormat};
use unified_bench::workload::{run_benchmark, WorkloadKind, WorkloadSpec};
use unified_sim::InterconnectConfig;

fn bench_bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_bench"))
}

#[test]
fn edge_list_round_trip_preserves_edge_multiset() {
    let dir = tempfile::tempdir().unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let edges: Vec<(u64, u64)> = (0..500)
        .map(|_| (rng.random_range(0..64), rng.random_range(0..64)))
        .collect();

    let text: String = edges.iter().map(|(u, v)| format!("{u} {v}\n")).collect();
    let edge_path = dir.path().join("input.txt");
    std::fs::write(&edge_path, text).unwrap();

    // edge list -> CSR -> edge list
    let graph = load_graph(&edge_path, GraphFormat::EdgeList).unwrap();
    let back_path = dir.path().join("back.txt");
    save_graph(&graph, &back_path, GraphFormat::EdgeList).unwrap();
    let reloaded = load_graph(&back_path, GraphFormat::EdgeList).unwrap();

    // Multiset comparison oracle: sort both edge lists.
    let mut original = edges;
    let mut round_tripped = reloaded.to_edges();
    original.sort_unstable();
    round_tripped.sort_unstable();
    assert_eq!(original, round_tripped);
}

#[test]
fn csr_binary_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let graph = CsrGraph::from_edges(&[(0, 1), (0, 1), (2, 0), (3, 3)]);
    let path = dir.path().join("graph.ucsr");
    save_graph(&graph, &path, GraphFormat::CsrBinary).unwrap();
    let loaded = load_graph(&path, GraphFormat::CsrBinary).unwrap();
    assert_eq!(graph, loaded);
}

#[test]
fn csr_binary_rejects_garbage() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bogus.ucsr");
    std::fs::write(&path, b"definitely not a graph").unwrap();
    assert!(load_graph(&path, GraphFormat::CsrBinary).is_err());
}

#[test]
fn emitted_files_are_byte_identical_across_runs() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = InterconnectConfig::default();
    let spec = WorkloadSpec {
        kind: WorkloadKind::AlignmentSweep,
        pool_size: 8192,
        num_indices: 256,
        feature_bytes: 2048,
        seed: 21,
        sampling: None,
    };
    let mut bytes = Vec::new();
    for name in ["a.csv", "b.csv"] {
        let report = run_benchmark(&spec, &cfg).unwrap();
        let path = dir.path().join(name);
        emit_report(&report, ReportFormat::Csv, Some(&path)).unwrap();
        bytes.push(std::fs::read(path).unwrap());
    }
    assert_eq!(bytes[0], bytes[1]);
}

#[test]
fn markdown_and_csv_row_counts_agree() {
    let cfg = InterconnectConfig::default();
    let spec = WorkloadSpec {
        kind: WorkloadKind::RandomIndex,
        pool_size: 2048,
        num_indices: 128,
        feature_bytes: 512,
        seed: 2,
        sampling: None,
    };
    let report = run_benchmark(&spec, &cfg).unwrap();
    let csv = render(&report, ReportFormat::Csv);
    let md = render(&report, ReportFormat::Markdown);
    assert_eq!(csv.lines().count(), 2);
    assert_eq!(md.lines().count(), 3);
}

#[test]
fn binary_run_exits_zero_and_writes_report() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("report.csv");
    let status = bench_bin()
        .args([
            "run", "--preset", "fig8", "--seed", "3", "--scale", "64", "--out",
        ])
        .arg(&out)
        .status()
        .unwrap();
    assert!(status.success());
    let text = std::fs::read_to_string(&out).unwrap();
    assert_eq!(text.lines().count(), 9); // header + 8 sweep rows
}

#[test]
fn binary_rejects_unknown_preset() {
    let output = bench_bin()
        .args(["run", "--preset", "fig99"])
        .output()
        .unwrap();
    assert!(!output.status.success());
    let stderr = String::from_utf8_lossy(&output.stderr);
    assert!(stderr.contains("unknown preset"));
}

#[test]
fn binary_run_honors_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg_path = dir.path().join("slow.cfg");
    std::fs::write(&cfg_path, "pcie_bw = 1e9\n").unwrap();
    let out = dir.path().join("report.csv");
    let status = bench_bin()
        .args(["run", "--preset", "fig8", "--scale", "64", "--config"])
        .arg(&cfg_path)
        .arg("--out")
        .arg(&out)
        .status()
        .unwrap();
    assert!(status.success());
    let slow = std::fs::read_to_string(&out).unwrap();

    let status = bench_bin()
        .args(["run", "--preset", "fig8", "--scale", "64", "--out"])
        .arg(&out)
        .status()
        .unwrap();
    assert!(status.success());
    let fast = std::fs::read_to_string(&out).unwrap();
    assert_ne!(slow, fast, "pcie bandwidth must affect modeled times");
}

#[test]
fn binary_graph_summary() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("g.txt");
    std::fs::write(&path, "0 1\n1 2\n2 0\n").unwrap();
    let output = bench_bin()
        .args(["graph", "--input"])
        .arg(&path)
        .args(["--batch", "1", "--fanout", "2", "--hops", "2"])
        .output()
        .unwrap();
    assert!(output.status.success());
    let stdout = String::from_utf8_lossy(&output.stdout);
    assert!(stdout.contains("nodes=3 edges=3"));
}

#[test]
fn binary_graph_parse_error_is_nonzero_with_line() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.txt");
    std::fs::write(&path, "0 1\nnot numbers\n").unwrap();
    let output = bench_bin()
        .args(["graph", "--input"])
        .arg(&path)
        .args(["--batch", "1", "--fanout", "1", "--hops", "1"])
        .output()
        .unwrap();
    assert!(!output.status.success());
    let stderr = String::from_utf8_lossy(&output.stderr);
    assert!(stderr.contains(":2:"), "stderr was: {stderr}");
}

#[test]
fn oversized_run_advises_scale_via_cli() {
    let output = bench_bin()
        .args(["run", "--preset", "fig7"])
        .output()
        .unwrap();
    assert!(!output.status.success());
    let stderr = String::from_utf8_lossy(&output.stderr);
    assert!(stderr.contains("--scale"), "stderr was: {stderr}");
}

#[test]
fn sampler_preset_runs_via_cli() {
    let output = bench_bin()
        .args([
            "run", "--preset", "sampler", "--scale", "64", "--format", "markdown",
        ])
        .output()
        .unwrap();
    assert!(output.status.success());
    let stdout = String::from_utf8_lossy(&output.stdout);
    assert!(stdout.contains("neighbor_sampling"));
}

#[test]
fn named_grid_point_orders_strategies() {
    // The (8K, 256B) point at full scale: direct access must beat staging.
    let cfg = InterconnectConfig::default();
    let spec = WorkloadSpec {
        kind: WorkloadKind::RandomIndex,
        pool_size: 4 * 1024 * 1024,
        num_indices: 8192,
        feature_bytes: 256,
        seed: 0,
        sampling: None,
    };
    let report = run_benchmark(&spec, &cfg).unwrap();
    let row = &report.rows[0];
    assert!(row.direct_access_s < row.cpu_centric_s);
}

#[test]
fn ideal_lower_bounds_staging_and_direct_on_preset_rows() {
    let cfg = InterconnectConfig::default();
    let mut rows =
        unified_bench::workload::run_preset(unified_bench::workload::Preset::Fig7, 3, 512, &cfg)
            .unwrap()
            .rows;
    rows.extend(
        unified_bench::workload::run_preset(unified_bench::workload::Preset::Fig8, 3, 16, &cfg)
            .unwrap()
            .rows,
    );
    for row in &rows {
        assert!(row.ideal_s <= row.cpu_centric_s);
        assert!(row.ideal_s <= row.direct_access_s);
        assert!(row.speedup_vs_cpu_centric > 0.0);
    }
}

#[test]
fn more_indices_never_decrease_ideal_time() {
    let cfg = InterconnectConfig::default();
    let report =
        unified_bench::workload::run_preset(unified_bench::workload::Preset::Fig7, 5, 512, &cfg)
            .unwrap();
    // Grid is indices-major: rows i, i+4, i+8, i+12 share a feature size
    // with growing index counts.
    for width_slot in 0..4 {
        let series: Vec<&unified_bench::report::ReportRow> =
            report.rows.iter().skip(width_slot).step_by(4).collect();
        for pair in series.windows(2) {
            assert!(pair[0].num_indices < pair[1].num_indices);
            assert!(pair[0].ideal_s <= pair[1].ideal_s);
        }
    }
}

#[test]
fn report_paths_error_cleanly() {
    let report = unified_bench::report::BenchReport::default();
    let err = emit_report(
        &report,
        ReportFormat::Csv,
        Some(Path::new("/nonexistent-dir/report.csv")),
    )
    .unwrap_err();
    assert!(err.to_string().contains("/nonexistent-dir/report.csv"));
}

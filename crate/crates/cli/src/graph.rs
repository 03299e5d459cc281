//! CSR graphs, edge-list parsing, and a binary CSR container.
//!
//! Edge lists are whitespace-separated `src dst` pairs, one per line, with
//! `#` comments. Duplicate edges and self-loops are preserved. The binary
//! format is `UCSR`, a version word, node and edge counts, then the offset
//! and index arrays, all little-endian u64.

use std::fs;
use std::path::Path;

use crate::{BenchError, Result};

const MAGIC: &[u8; 4] = b"UCSR";
const VERSION: u32 = 1;

/// Compressed sparse row adjacency. Row `n`'s neighbors are
/// `col_indices[row_offsets[n]..row_offsets[n+1]]`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CsrGraph {
    pub row_offsets: Vec<u64>,
    pub col_indices: Vec<u64>,
}

/// On-disk graph encodings.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GraphFormat {
    EdgeList,
    CsrBinary,
}

impl std::str::FromStr for GraphFormat {
    type Err = BenchError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "edgelist" => Ok(GraphFormat::EdgeList),
            "csr" => Ok(GraphFormat::CsrBinary),
            other => Err(BenchError::InvalidArgument(format!(
                "unknown graph format '{other}' (expected edgelist or csr)"
            ))),
        }
    }
}

impl CsrGraph {
    pub fn num_nodes(&self) -> usize {
        self.row_offsets.len().saturating_sub(1)
    }

    pub fn num_edges(&self) -> usize {
        self.col_indices.len()
    }

    /// Out-neighbors of a node, in insertion order.
    pub fn neighbors(&self, node: u64) -> &[u64] {
        let start = self.row_offsets[node as usize] as usize;
        let end = self.row_offsets[node as usize + 1] as usize;
        &self.col_indices[start..end]
    }

    /// Build from an edge multiset; node count is one past the largest id.
    /// Counting sort by source keeps per-source insertion order, so
    /// converting back to edges preserves the multiset.
    pub fn from_edges(edges: &[(u64, u64)]) -> CsrGraph {
        let n = edges.iter().map(|&(u, v)| u.max(v) + 1).max().unwrap_or(0) as usize;
        let mut row_offsets = vec![0u64; n + 1];
        for &(u, _) in edges {
            row_offsets[u as usize + 1] += 1;
        }
        for i in 1..row_offsets.len() {
            row_offsets[i] += row_offsets[i - 1];
        }
        let mut cursor: Vec<u64> = row_offsets[..n].to_vec();
        let mut col_indices = vec![0u64; edges.len()];
        for &(u, v) in edges {
            let slot = cursor[u as usize];
            col_indices[slot as usize] = v;
            cursor[u as usize] += 1;
        }
        CsrGraph {
            row_offsets,
            col_indices,
        }
    }

    /// Expand back to an edge list in CSR order.
    pub fn to_edges(&self) -> Vec<(u64, u64)> {
        let mut edges = Vec::with_capacity(self.num_edges());
        for u in 0..self.num_nodes() as u64 {
            for &v in self.neighbors(u) {
                edges.push((u, v));
            }
        }
        edges
    }

    /// Check the CSR invariants: offsets non-decreasing, final offset equal
    /// to the edge count, every column id inside the node range.
    pub fn validate(&self) -> Result<()> {
        if self.row_offsets.is_empty() {
            return Err(BenchError::Graph("row_offsets must not be empty".into()));
        }
        if self.row_offsets[0] != 0 {
            return Err(BenchError::Graph("row_offsets must start at 0".into()));
        }
        if self.row_offsets.windows(2).any(|w| w[0] > w[1]) {
            return Err(BenchError::Graph(
                "row_offsets must be non-decreasing".into(),
            ));
        }
        if *self.row_offsets.last().unwrap() != self.col_indices.len() as u64 {
            return Err(BenchError::Graph(format!(
                "last row offset {} != edge count {}",
                self.row_offsets.last().unwrap(),
                self.col_indices.len()
            )));
        }
        let n = self.num_nodes() as u64;
        if let Some(&bad) = self.col_indices.iter().find(|&&v| v >= n) {
            return Err(BenchError::Graph(format!(
                "column index {bad} out of range ({n} nodes)"
            )));
        }
        Ok(())
    }
}

fn parse_edge_list(path: &str, text: &str) -> Result<Vec<(u64, u64)>> {
    let mut edges = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let mut fields = line.split_whitespace();
        let parse = |field: Option<&str>, what: &str| -> Result<u64> {
            field
                .ok_or_else(|| BenchError::Parse {
                    path: path.to_string(),
                    line: lineno + 1,
                    msg: format!("missing {what} node id"),
                })?
                .parse()
                .map_err(|_| BenchError::Parse {
                    path: path.to_string(),
                    line: lineno + 1,
                    msg: format!("invalid {what} node id"),
                })
        };
        let src = parse(fields.next(), "source")?;
        let dst = parse(fields.next(), "destination")?;
        if fields.next().is_some() {
            return Err(BenchError::Parse {
                path: path.to_string(),
                line: lineno + 1,
                msg: "expected exactly two fields".into(),
            });
        }
        edges.push((src, dst));
    }
    Ok(edges)
}

fn read_u64(bytes: &[u8], pos: &mut usize, path: &str) -> Result<u64> {
    let end = *pos + 8;
    let chunk = bytes.get(*pos..end).ok_or_else(|| BenchError::Parse {
        path: path.to_string(),
        line: 0,
        msg: "truncated CSR file".into(),
    })?;
    *pos = end;
    Ok(u64::from_le_bytes(chunk.try_into().expect("8-byte chunk")))
}

fn decode_csr(path: &str, bytes: &[u8]) -> Result<CsrGraph> {
    let bad = |msg: &str| BenchError::Parse {
        path: path.to_string(),
        line: 0,
        msg: msg.into(),
    };
    if bytes.len() < 8 || &bytes[0..4] != MAGIC {
        return Err(bad("not a UCSR file"));
    }
    let version = u32::from_le_bytes(bytes[4..8].try_into().expect("4-byte chunk"));
    if version != VERSION {
        return Err(bad(&format!("unsupported UCSR version {version}")));
    }
    let mut pos = 8;
    let n = read_u64(bytes, &mut pos, path)? as usize;
    let e = read_u64(bytes, &mut pos, path)? as usize;
    let mut row_offsets = Vec::with_capacity(n + 1);
    for _ in 0..=n {
        row_offsets.push(read_u64(bytes, &mut pos, path)?);
    }
    let mut col_indices = Vec::with_capacity(e);
    for _ in 0..e {
        col_indices.push(read_u64(bytes, &mut pos, path)?);
    }
    if pos != bytes.len() {
        return Err(bad("trailing bytes after CSR payload"));
    }
    let graph = CsrGraph {
        row_offsets,
        col_indices,
    };
    graph.validate()?;
    Ok(graph)
}

fn encode_csr(graph: &CsrGraph) -> Vec<u8> {
    let mut out =
        Vec::with_capacity(8 + 16 + 8 * (graph.row_offsets.len() + graph.col_indices.len()));
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.extend_from_slice(&(graph.num_nodes() as u64).to_le_bytes());
    out.extend_from_slice(&(graph.num_edges() as u64).to_le_bytes());
    for &v in &graph.row_offsets {
        out.extend_from_slice(&v.to_le_bytes());
    }
    for &v in &graph.col_indices {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

/// Load a graph from disk in the given format.
pub fn load_graph(path: &Path, format: GraphFormat) -> Result<CsrGraph> {
    let name = path.display().to_string();
    match format {
        GraphFormat::EdgeList => {
            let text = fs::read_to_string(path).map_err(|source| BenchError::Io {
                path: name.clone(),
                source,
            })?;
            let edges = parse_edge_list(&name, &text)?;
            Ok(CsrGraph::from_edges(&edges))
        }
        GraphFormat::CsrBinary => {
            let bytes = fs::read(path).map_err(|source| BenchError::Io {
                path: name.clone(),
                source,
            })?;
            decode_csr(&name, &bytes)
        }
    }
}

/// Write a graph to disk in the given format.
pub fn save_graph(graph: &CsrGraph, path: &Path, format: GraphFormat) -> Result<()> {
    let name = path.display().to_string();
    let bytes = match format {
        GraphFormat::EdgeList => {
            let mut text = String::new();
            for (u, v) in graph.to_edges() {
                text.push_str(&format!("{u} {v}\n"));
            }
            text.into_bytes()
        }
        GraphFormat::CsrBinary => encode_csr(graph),
    };
    fs::write(path, bytes).map_err(|source| BenchError::Io { path: name, source })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tiny_edge_list() {
        let edges = parse_edge_list("t", "0 1\n1 2").unwrap();
        let g = CsrGraph::from_edges(&edges);
        assert_eq!(g.num_nodes(), 3);
        assert_eq!(g.num_edges(), 2);
        assert_eq!(g.row_offsets, vec![0, 1, 2, 2]);
        assert_eq!(g.col_indices, vec![1, 2]);
    }

    #[test]
    fn empty_edge_list() {
        let g = CsrGraph::from_edges(&[]);
        assert_eq!(g.num_nodes(), 0);
        assert_eq!(g.num_edges(), 0);
        g.validate().unwrap();
    }

    #[test]
    fn comments_and_blank_lines() {
        let edges = parse_edge_list("t", "# header\n\n0 1  # loop-free\n2 2\n").unwrap();
        assert_eq!(edges, vec![(0, 1), (2, 2)]);
    }

    #[test]
    fn parse_error_names_line() {
        let err = parse_edge_list("graph.txt", "0 1\nbogus").unwrap_err();
        match err {
            BenchError::Parse { path, line, .. } => {
                assert_eq!(path, "graph.txt");
                assert_eq!(line, 2);
            }
            other => panic!("unexpected error {other:?}"),
        }
        assert!(parse_edge_list("t", "1").is_err());
        assert!(parse_edge_list("t", "1 2 3").is_err());
    }

    #[test]
    fn duplicate_edges_preserved() {
        let edges = vec![(0, 1), (0, 1), (1, 0)];
        let g = CsrGraph::from_edges(&edges);
        assert_eq!(g.num_edges(), 3);
        assert_eq!(g.neighbors(0), &[1, 1]);
    }

    #[test]
    fn validate_rejects_bad_offsets() {
        let g = CsrGraph {
            row_offsets: vec![0, 2, 1],
            col_indices: vec![0, 0],
        };
        assert!(g.validate().is_err());
        let g = CsrGraph {
            row_offsets: vec![0, 1],
            col_indices: vec![5],
        };
        assert!(g.validate().is_err());
    }
}

//! Thread-per-element gather kernels and the circular-shift alignment
//! optimization.
//!
//! The thread grid is one thread per gathered element: row `r` of the
//! output owns threads `r*W .. r*W+W-1`, and thread `r*W + j` of the naive
//! kernel reads source element `rows[r]*W + j`. When the feature width `W`
//! is not a whole number of cachelines, consecutive rows start at different
//! cacheline offsets and warp requests fragment.
//!
//! The shifted kernel rotates each row's thread-to-element assignment by
//! `s_r = (r*W - rows[r]*W) mod L` (L = elements per cacheline), so every
//! non-wrapping thread accesses an element whose cacheline offset equals
//! the thread's own lane offset. Threads past the row end wrap around to
//! the row start, and output positions are rotated identically, so the
//! gathered output is bit-identical to the naive kernel's.
//!
//! Both kernels also emit an [`AccessTrace`] of (thread, element) records
//! for the transaction counters in [`crate::sim`].

use crate::error::{Error, Result};
use crate::tensor::Tensor;

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// One memory access: which global thread touched which global source
/// element.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct TraceRecord {
    /// Global thread index.
    pub thread_id: u64,
    /// Global source element index (row-major).
    pub element_index: u64,
}

/// Ordered access records emitted by one gather launch; exactly one record
/// per thread.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct AccessTrace {
    pub records: Vec<TraceRecord>,
    /// Byte offset of the source base address from a cacheline boundary.
    /// Simulated buffers are bucket-aligned, so gathers emit 0; tests may
    /// set it to model misaligned bases.
    pub base_offset_bytes: u64,
}

impl AccessTrace {
    /// Records whose thread id falls in `lo..=hi`. Used to account for a
    /// single row's threads.
    pub fn restricted_to_threads(&self, lo: u64, hi: u64) -> AccessTrace {
        AccessTrace {
            records: self
                .records
                .iter()
                .copied()
                .filter(|r| (lo..=hi).contains(&r.thread_id))
                .collect(),
            base_offset_bytes: self.base_offset_bytes,
        }
    }
}

/// Read-only rank-2 source a gather can pull rows from. Implemented by
/// slice-backed tables and by virtual (computed-on-demand) tables, so pools
/// far larger than memory never need materializing.
pub trait GatherSource<T>: Sync {
    /// Number of rows in the table.
    fn num_rows(&self) -> usize;
    /// Feature width in elements.
    fn width(&self) -> usize;
    /// Element at (row, col); both in range.
    fn element(&self, row: u64, col: usize) -> T;
}

/// Borrowed row-major slice as a gather source.
pub struct SliceSource<'a, T> {
    data: &'a [T],
    width: usize,
}

impl<'a, T> SliceSource<'a, T> {
    /// Wrap a row-major slice of rows `data.len() / width`.
    pub fn new(data: &'a [T], width: usize) -> Result<Self> {
        if width == 0 {
            if !data.is_empty() {
                return Err(Error::InvalidArgument(
                    "non-empty data with zero width".into(),
                ));
            }
        } else if !data.len().is_multiple_of(width) {
            return Err(Error::InvalidArgument(format!(
                "data length {} is not a multiple of width {}",
                data.len(),
                width
            )));
        }
        Ok(SliceSource { data, width })
    }
}

impl<T: Copy + Sync> GatherSource<T> for SliceSource<'_, T> {
    fn num_rows(&self) -> usize {
        self.data.len().checked_div(self.width).unwrap_or(0)
    }

    fn width(&self) -> usize {
        self.width
    }

    fn element(&self, row: u64, col: usize) -> T {
        self.data[row as usize * self.width + col]
    }
}

/// Per-row circular shifts: `s_r = (r*W - rows[r]*W) mod L`, reduced mod W
/// so the shift stays a valid rotation when `W < L` (no alignment claim is
/// made there, but the rotation must remain in range).
pub fn compute_shifts(rows: &[u64], width: usize, elems_per_line: usize) -> Vec<usize> {
    assert!(elems_per_line >= 1, "elems_per_line must be at least 1");
    if width == 0 {
        return vec![0; rows.len()];
    }
    let l = elems_per_line as u128;
    let w = width as u128;
    rows.iter()
        .enumerate()
        .map(|(r, &row)| {
            let b = r as u128 * w;
            let g = row as u128 * w;
            let s = ((b % l + l - g % l) % l) as usize;
            s % width
        })
        .collect()
}

/// A resolved gather: rows plus their shifts for a given line width.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GatherPlan {
    /// Feature width in elements.
    pub width: usize,
    /// Elements per cacheline.
    pub elems_per_line: usize,
    /// Source row ids to gather, in output order.
    pub rows: Vec<u64>,
    /// Circular shift per row, each in `[0, width)`.
    pub shifts: Vec<usize>,
}

impl GatherPlan {
    pub fn new(rows: &[u64], width: usize, elems_per_line: usize) -> Self {
        GatherPlan {
            width,
            elems_per_line,
            rows: rows.to_vec(),
            shifts: compute_shifts(rows, width, elems_per_line),
        }
    }
}

/// Validate row ids against the source, naming the first offender.
fn check_rows<T, S: GatherSource<T> + ?Sized>(src: &S, rows: &[u64]) -> Result<()> {
    let limit = src.num_rows() as u64;
    for (position, &index) in rows.iter().enumerate() {
        if index >= limit {
            return Err(Error::IndexOutOfRange {
                position,
                index,
                limit,
            });
        }
    }
    Ok(())
}

/// Shared per-row kernel. Thread `b+j` handles rotated column
/// `k = (j + shift) % w`: it reads source element `g + k` and writes output
/// position `b + k`, so rotation never changes the gathered values.
fn gather_row<T: Copy, S: GatherSource<T> + ?Sized>(
    src: &S,
    out_pos: usize,
    row: u64,
    shift: usize,
    out_row: &mut [T],
    trace_row: &mut [TraceRecord],
) {
    let w = out_row.len();
    let b = (out_pos * w) as u64;
    let g = row * w as u64;
    for (j, slot) in trace_row.iter_mut().enumerate() {
        let mut k = j + shift;
        if k >= w {
            k -= w; // wrap-around threads step back one feature length
        }
        out_row[k] = src.element(row, k);
        *slot = TraceRecord {
            thread_id: b + j as u64,
            element_index: g + k as u64,
        };
    }
}

fn run_gather<T, S>(src: &S, rows: &[u64], shifts: &[usize]) -> Result<(Vec<T>, AccessTrace)>
where
    T: Copy + Default + Send + Sync,
    S: GatherSource<T> + ?Sized,
{
    check_rows(src, rows)?;
    let w = src.width();
    if w == 0 || rows.is_empty() {
        return Ok((Vec::new(), AccessTrace::default()));
    }
    let mut out = vec![T::default(); rows.len() * w];
    let mut records = vec![TraceRecord::default(); rows.len() * w];

    #[cfg(feature = "parallel")]
    {
        out.par_chunks_mut(w)
            .zip(records.par_chunks_mut(w))
            .enumerate()
            .for_each(|(r, (out_row, trace_row))| {
                gather_row(src, r, rows[r], shifts[r], out_row, trace_row);
            });
    }
    #[cfg(not(feature = "parallel"))]
    {
        for (r, (out_row, trace_row)) in out.chunks_mut(w).zip(records.chunks_mut(w)).enumerate() {
            gather_row(src, r, rows[r], shifts[r], out_row, trace_row);
        }
    }

    Ok((
        out,
        AccessTrace {
            records,
            base_offset_bytes: 0,
        },
    ))
}

/// Gather without alignment handling: thread `r*W + j` reads element
/// `rows[r]*W + j`.
pub fn naive_gather<T, S>(src: &S, rows: &[u64]) -> Result<(Vec<T>, AccessTrace)>
where
    T: Copy + Default + Send + Sync,
    S: GatherSource<T> + ?Sized,
{
    run_gather(src, rows, &vec![0; rows.len()])
}

/// Gather with per-row circular shifts for the given cacheline width. The
/// output is bit-identical to [`naive_gather`]; only the thread-to-element
/// assignment (and hence the access trace) changes.
pub fn shifted_gather<T, S>(
    src: &S,
    rows: &[u64],
    elems_per_line: usize,
) -> Result<(Vec<T>, AccessTrace)>
where
    T: Copy + Default + Send + Sync,
    S: GatherSource<T> + ?Sized,
{
    let shifts = compute_shifts(rows, src.width(), elems_per_line);
    run_gather(src, rows, &shifts)
}

/// Always-available single-threaded reference drivers. The public entry
/// points dispatch to the rayon drivers when the `parallel` feature is on;
/// these stay compiled for benchmarking and fallback.
pub mod sequential {
    use super::*;

    fn run<T, S>(src: &S, rows: &[u64], shifts: &[usize]) -> Result<(Vec<T>, AccessTrace)>
    where
        T: Copy + Default,
        S: GatherSource<T> + ?Sized,
    {
        check_rows(src, rows)?;
        let w = src.width();
        if w == 0 || rows.is_empty() {
            return Ok((Vec::new(), AccessTrace::default()));
        }
        let mut out = vec![T::default(); rows.len() * w];
        let mut records = vec![TraceRecord::default(); rows.len() * w];
        for (r, (out_row, trace_row)) in out.chunks_mut(w).zip(records.chunks_mut(w)).enumerate() {
            gather_row(src, r, rows[r], shifts[r], out_row, trace_row);
        }
        Ok((
            out,
            AccessTrace {
                records,
                base_offset_bytes: 0,
            },
        ))
    }

    /// Sequential [`super::naive_gather`].
    pub fn naive_gather<T, S>(src: &S, rows: &[u64]) -> Result<(Vec<T>, AccessTrace)>
    where
        T: Copy + Default,
        S: GatherSource<T> + ?Sized,
    {
        run(src, rows, &vec![0; rows.len()])
    }

    /// Sequential [`super::shifted_gather`].
    pub fn shifted_gather<T, S>(
        src: &S,
        rows: &[u64],
        elems_per_line: usize,
    ) -> Result<(Vec<T>, AccessTrace)>
    where
        T: Copy + Default,
        S: GatherSource<T> + ?Sized,
    {
        let shifts = compute_shifts(rows, src.width(), elems_per_line);
        run(src, rows, &shifts)
    }
}

/// True when a feature width of `width_elems` elements of `elem_bytes`
/// bytes does not tile the cacheline exactly.
pub fn width_misaligned(width_elems: usize, elem_bytes: usize, cacheline_bytes: usize) -> bool {
    cacheline_bytes == 0 || !(width_elems * elem_bytes).is_multiple_of(cacheline_bytes)
}

/// Whether the circular-shift optimization fires for a source tensor:
/// only unified tensors with a feature width that is not naturally
/// cacheline-aligned. Simulated buffers are always bucket-aligned, so the
/// base address never contributes.
pub fn alignment_activation(src: &Tensor, elems_per_line: usize) -> bool {
    if !src.is_unified() || src.rank() < 2 {
        return false;
    }
    let width = *src.shape().last().expect("rank >= 2 has a last extent");
    let cacheline_bytes = elems_per_line * src.elem_bytes();
    width_misaligned(width, src.elem_bytes(), cacheline_bytes)
}

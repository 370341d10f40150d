//! C ABI over `sgtk`.
//!
//! Graphs and transforms are opaque heap handles released with their
//! `_free` function. Every fallible call returns an [`SgtkStatus`]; on
//! failure [`sgtk_last_error_message`] describes the error for the calling
//! thread. Panics never cross the boundary.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;

use sgtk::exec::EdgeValList;
use sgtk::graph::{
    gcn_normalize_values, load_edge_list, normalize_graph, EdgeListFormat, NormalizeOptions,
};
use sgtk::sgt::{
    block_stats, read_sgt_file, reblock, sgt_transform, write_sgt_file, TileGeometry,
    TransformedGraph,
};
use sgtk::{
    make_split_plan, sddmm_hybrid, spmm_hybrid, CsrGraph, DenseMatrix, Error, PrecisionMode,
};

/// Result code of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SgtkStatus {
    Ok = 0,
    /// A required pointer argument was NULL.
    NullPointer = 1,
    /// A string argument was not valid UTF-8, or a buffer had the wrong length.
    InvalidArgument = 2,
    Io = 3,
    /// Malformed edge-list text or an id that does not fit in 32 bits.
    Parse = 4,
    /// Malformed or inconsistent SGT1 data.
    Format = 5,
    /// Structurally invalid graph input.
    InvalidGraph = 6,
    /// Mismatched matrix or buffer shapes.
    Shape = 7,
    /// A parameter outside its allowed range, including tile geometry.
    Range = 8,
    /// A node without edges where degree normalization needs one.
    Degree = 9,
    /// A kernel produced NaN or infinity.
    NonFinite = 10,
    /// An internal panic was caught.
    Panic = 11,
}

/// Tile-path multiply precision.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SgtkPrecision {
    Fp32 = 0,
    /// Multiplicands rounded to a 10-bit mantissa on the tile path.
    Tf32 = 1,
}

/// Block accounting of a transform.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct SgtkBlockStats {
    pub block_counter: u64,
    /// `block_counter * blk_h * blk_w`.
    pub capacity: u64,
    pub nnz: u64,
    /// `nnz / capacity`, 0 when there are no tiles.
    pub mean_tile_density: f64,
}

/// Opaque CSR graph.
pub struct SgtkGraph(CsrGraph);

/// Opaque tiled transform of a graph.
pub struct SgtkTransformed(TransformedGraph);

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

struct Failure(SgtkStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let status = match &e {
            Error::Io { .. } => SgtkStatus::Io,
            Error::Parse { .. } | Error::Overflow { .. } => SgtkStatus::Parse,
            Error::Format(_) => SgtkStatus::Format,
            Error::Invalid(_) => SgtkStatus::InvalidGraph,
            Error::Shape(_) => SgtkStatus::Shape,
            Error::Geometry { .. }
            | Error::Range { .. }
            | Error::Index { .. }
            | Error::Timeout { .. } => SgtkStatus::Range,
            Error::Degree { .. } => SgtkStatus::Degree,
            Error::NonFinite { .. } => SgtkStatus::NonFinite,
        };
        Failure(status, e.to_string())
    }
}

type FfiResult<T> = Result<T, Failure>;

fn set_last_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

fn guard(f: impl FnOnce() -> FfiResult<()>) -> SgtkStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_last_error("");
            SgtkStatus::Ok
        }
        Ok(Err(Failure(status, msg))) => {
            set_last_error(&msg);
            status
        }
        Err(_) => {
            set_last_error("internal panic");
            SgtkStatus::Panic
        }
    }
}

fn null(what: &str) -> Failure {
    Failure(SgtkStatus::NullPointer, format!("{what} is NULL"))
}

unsafe fn as_ref<'a, T>(p: *const T, what: &str) -> FfiResult<&'a T> {
    p.as_ref().ok_or_else(|| null(what))
}

unsafe fn slice<'a, T>(p: *const T, len: usize, what: &str) -> FfiResult<&'a [T]> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(null(what));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

unsafe fn slice_mut<'a, T>(p: *mut T, len: usize, what: &str) -> FfiResult<&'a mut [T]> {
    if len == 0 {
        return Ok(&mut []);
    }
    if p.is_null() {
        return Err(null(what));
    }
    Ok(std::slice::from_raw_parts_mut(p, len))
}

unsafe fn path_arg(p: *const c_char) -> FfiResult<PathBuf> {
    if p.is_null() {
        return Err(null("path"));
    }
    CStr::from_ptr(p).to_str().map(PathBuf::from).map_err(|_| {
        Failure(
            SgtkStatus::InvalidArgument,
            "path is not valid UTF-8".into(),
        )
    })
}

unsafe fn put<T>(out: *mut *mut T, value: T) -> FfiResult<()> {
    if out.is_null() {
        return Err(null("out"));
    }
    *out = Box::into_raw(Box::new(value));
    Ok(())
}

fn precision(p: SgtkPrecision) -> PrecisionMode {
    match p {
        SgtkPrecision::Fp32 => PrecisionMode::ExactF32,
        SgtkPrecision::Tf32 => PrecisionMode::EmulatedTf32,
    }
}

/// Message for the last failed call on this thread; empty after a success.
/// The pointer stays valid until the next call on this thread.
#[no_mangle]
pub extern "C" fn sgtk_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn sgtk_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Loads a `.mtx` (MatrixMarket) or whitespace-separated edge list.
///
/// # Safety
/// `path` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn sgtk_graph_load(
    path: *const c_char,
    out: *mut *mut SgtkGraph,
) -> SgtkStatus {
    guard(|| {
        let path = path_arg(path)?;
        let g = load_edge_list(&path, EdgeListFormat::from_path(&path))?;
        put(out, SgtkGraph(g))
    })
}

/// Builds a graph from CSR arrays, which are copied. `node_pointer` has
/// `num_nodes + 1` entries; `values` may be NULL for an unweighted graph.
///
/// # Safety
/// Each non-NULL array must hold the stated number of elements.
#[no_mangle]
pub unsafe extern "C" fn sgtk_graph_from_csr(
    num_nodes: usize,
    node_pointer: *const u64,
    edge_list: *const u32,
    values: *const f32,
    num_edges: usize,
    out: *mut *mut SgtkGraph,
) -> SgtkStatus {
    guard(|| {
        let np_len = num_nodes
            .checked_add(1)
            .ok_or_else(|| Failure(SgtkStatus::InvalidGraph, "num_nodes overflows".into()))?;
        let np = slice(node_pointer, np_len, "node_pointer")?;
        let np = np
            .iter()
            .map(|&p| usize::try_from(p))
            .collect::<Result<Vec<_>, _>>()
            .map_err(|_| {
                Failure(
                    SgtkStatus::InvalidGraph,
                    "node pointer does not fit in size_t".into(),
                )
            })?;
        let edges = slice(edge_list, num_edges, "edge_list")?.to_vec();
        let vals = if values.is_null() {
            None
        } else {
            Some(slice(values, num_edges, "values")?.to_vec())
        };
        let g = CsrGraph::new(num_nodes, np, edges, vals)?;
        put(out, SgtkGraph(g))
    })
}

/// Node count, or 0 for NULL.
///
/// # Safety
/// `g` must be NULL or a live graph handle.
#[no_mangle]
pub unsafe extern "C" fn sgtk_graph_num_nodes(g: *const SgtkGraph) -> usize {
    g.as_ref().map_or(0, |g| g.0.num_nodes())
}

/// Edge count, or 0 for NULL.
///
/// # Safety
/// `g` must be NULL or a live graph handle.
#[no_mangle]
pub unsafe extern "C" fn sgtk_graph_num_edges(g: *const SgtkGraph) -> usize {
    g.as_ref().map_or(0, |g| g.0.num_edges())
}

/// Copies the CSR arrays out. Either output pointer may be NULL to skip it;
/// `node_pointer` needs `num_nodes + 1` slots and `edge_list` `num_edges`.
///
/// # Safety
/// `g` must be a live graph handle; non-NULL outputs must be large enough.
#[no_mangle]
pub unsafe extern "C" fn sgtk_graph_copy_csr(
    g: *const SgtkGraph,
    node_pointer: *mut u64,
    edge_list: *mut u32,
) -> SgtkStatus {
    guard(|| {
        let g = &as_ref(g, "graph")?.0;
        if !node_pointer.is_null() {
            let out = slice_mut(node_pointer, g.num_nodes() + 1, "node_pointer")?;
            for (o, &p) in out.iter_mut().zip(g.node_pointer()) {
                *o = p as u64;
            }
        }
        if !edge_list.is_null() {
            slice_mut(edge_list, g.num_edges(), "edge_list")?.copy_from_slice(g.edge_list());
        }
        Ok(())
    })
}

/// Returns a new graph with the requested normalization steps applied.
///
/// # Safety
/// `g` must be a live graph handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn sgtk_graph_normalize(
    g: *const SgtkGraph,
    symmetrize: bool,
    add_self_loops: bool,
    dedupe: bool,
    out: *mut *mut SgtkGraph,
) -> SgtkStatus {
    guard(|| {
        let g = &as_ref(g, "graph")?.0;
        let opts = NormalizeOptions {
            symmetrize,
            add_self_loops,
            dedupe,
        };
        put(out, SgtkGraph(normalize_graph(g, opts)?))
    })
}

/// Returns a copy whose edge values are `1 / sqrt(deg(r) * deg(c))`.
///
/// # Safety
/// `g` must be a live graph handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn sgtk_graph_gcn_normalize(
    g: *const SgtkGraph,
    out: *mut *mut SgtkGraph,
) -> SgtkStatus {
    guard(|| {
        let g = &as_ref(g, "graph")?.0;
        put(out, SgtkGraph(gcn_normalize_values(g)?))
    })
}

/// # Safety
/// `g` must be NULL or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn sgtk_graph_free(g: *mut SgtkGraph) {
    if !g.is_null() {
        drop(Box::from_raw(g));
    }
}

/// Tiles `g` into `blk_h`-row windows and `blk_w`-column tiles.
///
/// # Safety
/// `g` must be a live graph handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn sgtk_transform(
    g: *const SgtkGraph,
    blk_h: usize,
    blk_w: usize,
    out: *mut *mut SgtkTransformed,
) -> SgtkStatus {
    guard(|| {
        let g = &as_ref(g, "graph")?.0;
        let geom = TileGeometry::new(blk_h, blk_w)?;
        put(out, SgtkTransformed(sgt_transform(g, geom)?))
    })
}

/// Same windows, recounted for tile width `blk_w`.
///
/// # Safety
/// `t` must be a live transform handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn sgtk_reblock(
    t: *const SgtkTransformed,
    blk_w: usize,
    out: *mut *mut SgtkTransformed,
) -> SgtkStatus {
    guard(|| {
        let t = &as_ref(t, "transform")?.0;
        put(out, SgtkTransformed(reblock(t, blk_w)?))
    })
}

/// # Safety
/// `t` must be a live transform handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn sgtk_block_stats(
    t: *const SgtkTransformed,
    out: *mut SgtkBlockStats,
) -> SgtkStatus {
    guard(|| {
        let t = &as_ref(t, "transform")?.0;
        if out.is_null() {
            return Err(null("out"));
        }
        let s = block_stats(t);
        *out = SgtkBlockStats {
            block_counter: s.block_counter as u64,
            capacity: s.capacity as u64,
            nnz: s.nnz as u64,
            mean_tile_density: s.mean_tile_density,
        };
        Ok(())
    })
}

/// Node count, or 0 for NULL.
///
/// # Safety
/// `t` must be NULL or a live transform handle.
#[no_mangle]
pub unsafe extern "C" fn sgtk_transformed_num_nodes(t: *const SgtkTransformed) -> usize {
    t.as_ref().map_or(0, |t| t.0.num_nodes())
}

/// Edge count, or 0 for NULL.
///
/// # Safety
/// `t` must be NULL or a live transform handle.
#[no_mangle]
pub unsafe extern "C" fn sgtk_transformed_num_edges(t: *const SgtkTransformed) -> usize {
    t.as_ref().map_or(0, |t| t.0.num_edges())
}

/// Row-window count, or 0 for NULL.
///
/// # Safety
/// `t` must be NULL or a live transform handle.
#[no_mangle]
pub unsafe extern "C" fn sgtk_transformed_num_windows(t: *const SgtkTransformed) -> usize {
    t.as_ref().map_or(0, |t| t.0.num_windows())
}

/// Writes an SGT1 file.
///
/// # Safety
/// `t` must be a live transform handle; `path` a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn sgtk_save_sgt(
    t: *const SgtkTransformed,
    path: *const c_char,
) -> SgtkStatus {
    guard(|| {
        let t = &as_ref(t, "transform")?.0;
        write_sgt_file(t, path_arg(path)?)?;
        Ok(())
    })
}

/// Reads and validates an SGT1 file.
///
/// # Safety
/// `path` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn sgtk_load_sgt(
    path: *const c_char,
    out: *mut *mut SgtkTransformed,
) -> SgtkStatus {
    guard(|| {
        let t = read_sgt_file(path_arg(path)?)?;
        put(out, SgtkTransformed(t))
    })
}

/// # Safety
/// `t` must be NULL or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn sgtk_transformed_free(t: *mut SgtkTransformed) {
    if !t.is_null() {
        drop(Box::from_raw(t));
    }
}

unsafe fn features(p: *const f32, rows: usize, cols: usize, what: &str) -> FfiResult<DenseMatrix> {
    let len = rows
        .checked_mul(cols)
        .ok_or_else(|| Failure(SgtkStatus::Shape, format!("{what} size overflows")))?;
    Ok(DenseMatrix::new(rows, cols, slice(p, len, what)?.to_vec())?)
}

fn check_len(got: usize, want: usize, what: &str) -> FfiResult<()> {
    if got == want {
        Ok(())
    } else {
        Err(Failure(
            SgtkStatus::InvalidArgument,
            format!("{what} holds {got} floats, {want} required"),
        ))
    }
}

/// Neighbor aggregation `out = A x` with the graph's edge values.
///
/// `x` is row-major `rows x cols` with `rows` equal to the node count; `out`
/// must hold exactly `rows * cols` floats. `split_ratio` in `[0, 1]` is the
/// fraction of each window's tiles taken by the dense-tile path.
///
/// # Safety
/// `t` must be a live transform handle; buffers must match the lengths given.
#[no_mangle]
pub unsafe extern "C" fn sgtk_spmm(
    t: *const SgtkTransformed,
    x: *const f32,
    rows: usize,
    cols: usize,
    split_ratio: f64,
    precision_mode: SgtkPrecision,
    out: *mut f32,
    out_len: usize,
) -> SgtkStatus {
    guard(|| {
        let t = &as_ref(t, "transform")?.0;
        let x = features(x, rows, cols, "x")?;
        check_len(out_len, rows * cols, "out")?;
        let out = slice_mut(out, out_len, "out")?;
        let plan = make_split_plan(t, split_ratio)?;
        let y = spmm_hybrid(t, &x, &plan, precision(precision_mode))?;
        out.copy_from_slice(y.data());
        Ok(())
    })
}

/// Edge features `out[e] = a_e * dot(x[row(e)], y[col(e)])` in CSR edge
/// order. `out` must hold exactly one float per edge.
///
/// # Safety
/// `t` must be a live transform handle; buffers must match the lengths given.
#[no_mangle]
pub unsafe extern "C" fn sgtk_sddmm(
    t: *const SgtkTransformed,
    x: *const f32,
    y: *const f32,
    rows: usize,
    cols: usize,
    split_ratio: f64,
    precision_mode: SgtkPrecision,
    out: *mut f32,
    out_len: usize,
) -> SgtkStatus {
    guard(|| {
        let t = &as_ref(t, "transform")?.0;
        let x = features(x, rows, cols, "x")?;
        let y = features(y, rows, cols, "y")?;
        check_len(out_len, t.num_edges(), "out")?;
        let out = slice_mut(out, out_len, "out")?;
        let plan = make_split_plan(t, split_ratio)?;
        let vals: EdgeValList = sddmm_hybrid(t, &x, &y, &plan, precision(precision_mode))?;
        out.copy_from_slice(vals.values());
        Ok(())
    })
}

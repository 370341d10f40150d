//! `SGT1` binary format. All integers little-endian:
//!
//! ```text
//! "SGT1" | u32 blk_h | u32 blk_w | u8 flags (bit0: values)
//! u64 num_nodes | u64 num_edges | u64 num_windows | u64 block_counter
//! node_pointer u64 x (n+1) | edge_list u32 x E | [values f32 x E]
//! edge_to_row u32 x E | edge_to_column u32 x E | block_partition u32 x W
//! window_offsets u64 x (W+1) | window_unique_cols u32 x total
//! ```

use std::io::{Read, Write};
use std::path::Path;

use super::{TileGeometry, TransformedGraph};
use crate::error::{Error, Result};
use crate::graph::CsrGraph;

pub const SGT_MAGIC: &[u8; 4] = b"SGT1";

const FLAG_VALUES: u8 = 1;

fn put_u32s(out: &mut Vec<u8>, xs: impl IntoIterator<Item = u32>) {
    for x in xs {
        out.extend_from_slice(&x.to_le_bytes());
    }
}

fn put_u64s(out: &mut Vec<u8>, xs: impl IntoIterator<Item = u64>) {
    for x in xs {
        out.extend_from_slice(&x.to_le_bytes());
    }
}

fn to_u32(x: usize, what: &str) -> Result<u32> {
    u32::try_from(x).map_err(|_| Error::Format(format!("{what} = {x} does not fit in u32")))
}

pub fn write_sgt<W: Write>(t: &TransformedGraph, mut w: W) -> std::io::Result<()> {
    let g = t.csr();
    let geom = t.geometry();
    let mut buf = Vec::new();
    buf.extend_from_slice(SGT_MAGIC);
    let (bh, bw) = match (to_u32(geom.blk_h, "blk_h"), to_u32(geom.blk_w, "blk_w")) {
        (Ok(h), Ok(w)) => (h, w),
        _ => {
            return Err(std::io::Error::new(
                std::io::ErrorKind::InvalidInput,
                "tile geometry does not fit in u32",
            ))
        }
    };
    put_u32s(&mut buf, [bh, bw]);
    buf.push(if g.values().is_some() { FLAG_VALUES } else { 0 });
    put_u64s(
        &mut buf,
        [
            g.num_nodes() as u64,
            g.num_edges() as u64,
            t.num_windows() as u64,
            t.block_counter() as u64,
        ],
    );
    put_u64s(&mut buf, g.node_pointer().iter().map(|&p| p as u64));
    put_u32s(&mut buf, g.edge_list().iter().copied());
    if let Some(v) = g.values() {
        put_u32s(&mut buf, v.iter().map(|x| x.to_bits()));
    }
    put_u32s(&mut buf, t.edge_to_row().iter().copied());
    put_u32s(&mut buf, t.edge_to_column().iter().copied());
    put_u32s(&mut buf, t.block_partition().iter().copied());
    put_u64s(&mut buf, t.window_offsets().iter().map(|&o| o as u64));
    put_u32s(&mut buf, t.all_unique_cols().iter().copied());
    w.write_all(&buf)
}

pub fn write_sgt_file(t: &TransformedGraph, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = std::io::BufWriter::new(f);
    write_sgt(t, &mut w).map_err(|e| Error::io(path, e))?;
    w.flush().map_err(|e| Error::io(path, e))
}

struct Cursor<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize, what: &str) -> Result<&'a [u8]> {
        let end = self
            .pos
            .checked_add(n)
            .filter(|&e| e <= self.buf.len())
            .ok_or_else(|| Error::Format(format!("truncated while reading {what}")))?;
        let s = &self.buf[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u8(&mut self, what: &str) -> Result<u8> {
        Ok(self.take(1, what)?[0])
    }

    fn u32(&mut self, what: &str) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4, what)?.try_into().unwrap()))
    }

    fn u64(&mut self, what: &str) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8, what)?.try_into().unwrap()))
    }

    fn len(&mut self, what: &str) -> Result<usize> {
        usize::try_from(self.u64(what)?).map_err(|_| Error::Format(format!("{what} too large")))
    }

    fn u32s(&mut self, count: usize, what: &str) -> Result<Vec<u32>> {
        let bytes = self.take(count.checked_mul(4).ok_or_else(|| overflow(what))?, what)?;
        Ok(bytes
            .chunks_exact(4)
            .map(|c| u32::from_le_bytes(c.try_into().unwrap()))
            .collect())
    }

    fn usizes(&mut self, count: usize, what: &str) -> Result<Vec<usize>> {
        let bytes = self.take(count.checked_mul(8).ok_or_else(|| overflow(what))?, what)?;
        bytes
            .chunks_exact(8)
            .map(|c| {
                usize::try_from(u64::from_le_bytes(c.try_into().unwrap()))
                    .map_err(|_| Error::Format(format!("{what} entry too large")))
            })
            .collect()
    }
}

fn overflow(what: &str) -> Error {
    Error::Format(format!("{what} length overflows"))
}

/// Reads an `SGT1` stream, rejecting bad magic, truncation, trailing bytes
/// and any payload that violates the transform invariants.
pub fn read_sgt<R: Read>(mut r: R) -> Result<TransformedGraph> {
    let mut buf = Vec::new();
    r.read_to_end(&mut buf)
        .map_err(|e| Error::Format(format!("read failed: {e}")))?;
    decode(&buf)
}

pub fn read_sgt_file(path: impl AsRef<Path>) -> Result<TransformedGraph> {
    let path = path.as_ref();
    let buf = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    decode(&buf)
}

fn decode(buf: &[u8]) -> Result<TransformedGraph> {
    let mut c = Cursor { buf, pos: 0 };
    if c.take(4, "magic")? != SGT_MAGIC {
        return Err(Error::Format("wrong magic, expected \"SGT1\"".into()));
    }
    let blk_h = c.u32("blk_h")? as usize;
    let blk_w = c.u32("blk_w")? as usize;
    let flags = c.u8("flags")?;
    if flags & !FLAG_VALUES != 0 {
        return Err(Error::Format(format!("unknown flag bits {flags:#04x}")));
    }
    let n = c.len("num_nodes")?;
    let e = c.len("num_edges")?;
    let windows = c.len("num_windows")?;
    let block_counter = c.len("block_counter")?;

    let node_pointer = c.usizes(
        n.checked_add(1).ok_or_else(|| overflow("node_pointer"))?,
        "node_pointer",
    )?;
    let edge_list = c.u32s(e, "edge_list")?;
    let values = if flags & FLAG_VALUES != 0 {
        Some(
            c.u32s(e, "values")?
                .into_iter()
                .map(f32::from_bits)
                .collect(),
        )
    } else {
        None
    };
    let edge_to_row = c.u32s(e, "edge_to_row")?;
    let edge_to_column = c.u32s(e, "edge_to_column")?;
    let block_partition = c.u32s(windows, "block_partition")?;
    let window_offsets = c.usizes(
        windows
            .checked_add(1)
            .ok_or_else(|| overflow("window_offsets"))?,
        "window_offsets",
    )?;
    let total = *window_offsets.last().unwrap();
    let window_unique_cols = c.u32s(total, "window_unique_cols")?;
    if c.pos != buf.len() {
        return Err(Error::Format(format!(
            "{} trailing bytes",
            buf.len() - c.pos
        )));
    }

    let geometry = TileGeometry::new(blk_h, blk_w)?;
    let csr = CsrGraph::new(n, node_pointer, edge_list, values)?;
    let t = TransformedGraph {
        csr,
        geometry,
        edge_to_row,
        edge_to_column,
        block_partition,
        window_offsets,
        window_unique_cols,
        block_counter,
    };
    t.validate()
        .map_err(|err| Error::Format(format!("inconsistent payload: {err}")))?;
    Ok(t)
}

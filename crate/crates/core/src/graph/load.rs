use std::path::Path;

use super::CsrGraph;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EdgeListFormat {
    MatrixMarket,
    Tsv,
}

impl EdgeListFormat {
    /// `.mtx` files are MatrixMarket, everything else is read as a TSV edge list.
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some(ext) if ext.eq_ignore_ascii_case("mtx") => EdgeListFormat::MatrixMarket,
            _ => EdgeListFormat::Tsv,
        }
    }
}

pub fn load_edge_list(path: impl AsRef<Path>, format: EdgeListFormat) -> Result<CsrGraph> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    match format {
        EdgeListFormat::MatrixMarket => parse_matrix_market(&text),
        EdgeListFormat::Tsv => parse_tsv(&text),
    }
}

fn parse_id(tok: &str, line: usize) -> Result<u64> {
    tok.parse::<u64>().map_err(|_| Error::Parse {
        line,
        msg: format!("expected a node id, found {tok:?}"),
    })
}

fn parse_value(tok: &str, line: usize) -> Result<f32> {
    let v: f32 = tok.parse().map_err(|_| Error::Parse {
        line,
        msg: format!("expected an edge value, found {tok:?}"),
    })?;
    if !v.is_finite() {
        return Err(Error::Parse {
            line,
            msg: format!("edge value {tok:?} is not finite"),
        });
    }
    Ok(v)
}

fn check_u32(id: u64, line: usize) -> Result<u32> {
    u32::try_from(id).map_err(|_| Error::Overflow { line, id })
}

/// Parses a 0-based `src dst [value]` edge list.
///
/// Ids are remapped through their sorted unique table so the result always
/// has dense node ids `0..n`; files that already use every id in `0..n`
/// keep their labels.
pub fn parse_tsv(text: &str) -> Result<CsrGraph> {
    let mut raw: Vec<(u32, u32)> = Vec::new();
    let mut vals: Vec<f32> = Vec::new();
    let mut weighted: Option<bool> = None;

    for (idx, line) in text.lines().enumerate() {
        let lineno = idx + 1;
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let toks: Vec<&str> = line.split_whitespace().collect();
        if toks.len() < 2 || toks.len() > 3 {
            return Err(Error::Parse {
                line: lineno,
                msg: format!("expected 2 or 3 fields, found {}", toks.len()),
            });
        }
        let src = check_u32(parse_id(toks[0], lineno)?, lineno)?;
        let dst = check_u32(parse_id(toks[1], lineno)?, lineno)?;
        let has_value = toks.len() == 3;
        match weighted {
            None => weighted = Some(has_value),
            Some(w) if w != has_value => {
                return Err(Error::Parse {
                    line: lineno,
                    msg: "mixes weighted and unweighted entries".into(),
                })
            }
            _ => {}
        }
        if has_value {
            vals.push(parse_value(toks[2], lineno)?);
        }
        raw.push((src, dst));
    }

    let mut ids: Vec<u32> = raw.iter().flat_map(|&(s, d)| [s, d]).collect();
    ids.sort_unstable();
    ids.dedup();
    let remap = |id: u32| ids.binary_search(&id).expect("id present") as u32;
    let edges: Vec<(u32, u32)> = raw.iter().map(|&(s, d)| (remap(s), remap(d))).collect();
    let values = (weighted == Some(true)).then_some(vals);
    CsrGraph::from_edges(ids.len(), &edges, values)
}

#[derive(Clone, Copy, PartialEq)]
enum MmField {
    Pattern,
    Real,
}

/// Parses a MatrixMarket `coordinate` file (1-based indices).
///
/// `pattern`, `real` and `integer` fields are accepted with `general` or
/// `symmetric` symmetry; `symmetric` files have their off-diagonal entries
/// mirrored. Non-square headers use the larger dimension as the node count.
pub fn parse_matrix_market(text: &str) -> Result<CsrGraph> {
    let mut lines = text.lines().enumerate();
    let (_, header) = lines.next().ok_or(Error::Parse {
        line: 1,
        msg: "empty file, expected a %%MatrixMarket header".into(),
    })?;
    let head: Vec<String> = header
        .split_whitespace()
        .map(|t| t.to_ascii_lowercase())
        .collect();
    let bad_header = |msg: &str| Error::Parse {
        line: 1,
        msg: msg.to_string(),
    };
    if head.len() < 5 || head[0] != "%%matrixmarket" || head[1] != "matrix" {
        return Err(bad_header(
            "expected '%%MatrixMarket matrix <format> <field> <symmetry>'",
        ));
    }
    match head[2].as_str() {
        "coordinate" => {}
        "array" => {
            return Err(bad_header(
                "dense 'array' MatrixMarket files are not supported",
            ))
        }
        other => return Err(bad_header(&format!("unknown format {other:?}"))),
    }
    let field = match head[3].as_str() {
        "pattern" => MmField::Pattern,
        "real" | "integer" | "double" => MmField::Real,
        other => return Err(bad_header(&format!("unsupported field {other:?}"))),
    };
    let symmetric = match head[4].as_str() {
        "general" => false,
        "symmetric" => true,
        other => return Err(bad_header(&format!("unsupported symmetry {other:?}"))),
    };

    let mut size: Option<(u64, u64, usize)> = None;
    let mut edges: Vec<(u32, u32)> = Vec::new();
    let mut vals: Vec<f32> = Vec::new();
    let mut seen = 0usize;
    let mut last_line = 1;

    for (idx, line) in lines {
        let lineno = idx + 1;
        last_line = lineno;
        let line = line.trim();
        if line.is_empty() || line.starts_with('%') {
            continue;
        }
        let toks: Vec<&str> = line.split_whitespace().collect();
        let Some((rows, cols, nnz)) = size else {
            if toks.len() != 3 {
                return Err(Error::Parse {
                    line: lineno,
                    msg: "expected 'rows cols entries' size line".into(),
                });
            }
            let r = parse_id(toks[0], lineno)?;
            let c = parse_id(toks[1], lineno)?;
            let nnz = parse_id(toks[2], lineno)? as usize;
            let n = r.max(c);
            if n > 1u64 << 32 {
                return Err(Error::Overflow {
                    line: lineno,
                    id: n - 1,
                });
            }
            size = Some((r, c, nnz));
            edges.reserve(nnz * if symmetric { 2 } else { 1 });
            continue;
        };
        let want = if field == MmField::Pattern { 2 } else { 3 };
        if toks.len() != want {
            return Err(Error::Parse {
                line: lineno,
                msg: format!("expected {want} fields, found {}", toks.len()),
            });
        }
        if seen == nnz {
            return Err(Error::Parse {
                line: lineno,
                msg: format!("more entries than the {nnz} declared"),
            });
        }
        let i = parse_id(toks[0], lineno)?;
        let j = parse_id(toks[1], lineno)?;
        if i == 0 || j == 0 || i > rows || j > cols {
            return Err(Error::Parse {
                line: lineno,
                msg: format!("entry ({i}, {j}) outside the declared {rows}x{cols} matrix"),
            });
        }
        let (r, c) = (check_u32(i - 1, lineno)?, check_u32(j - 1, lineno)?);
        let v = match field {
            MmField::Real => Some(parse_value(toks[2], lineno)?),
            MmField::Pattern => None,
        };
        edges.push((r, c));
        vals.extend(v);
        if symmetric && r != c {
            edges.push((c, r));
            vals.extend(v);
        }
        seen += 1;
    }

    let Some((rows, cols, nnz)) = size else {
        return Err(Error::Parse {
            line: last_line,
            msg: "missing size line".into(),
        });
    };
    if seen != nnz {
        return Err(Error::Parse {
            line: last_line,
            msg: format!("declared {nnz} entries but found {seen}"),
        });
    }
    let n = rows.max(cols) as usize;
    let values = (field == MmField::Real).then_some(vals);
    CsrGraph::from_edges(n, &edges, values)
}

//! File formats: graph JSON, PGM rasters and the corpus case layout.
//!
//! Graph files look like
//!
//! ```json
//! {
//!   "canvas": [256, 256],
//!   "corners": [
//!     {"id": 0, "x": 20.0000, "y": 20.0000}
//!   ],
//!   "edges": [
//!     [0, 1]
//!   ]
//! }
//! ```
//!
//! with coordinates written to 4 decimals. Rasters are binary PGM (`P5`); the
//! maxval selects the value domain:
//!
//! | maxval | kind       | decode          |
//! |--------|------------|-----------------|
//! | 1      | binary     | `v`             |
//! | 2      | target     | `v - 1`         |
//! | 254    | score      | `(v - 127)/127` |
//! | 255    | confidence | `v / 255`       |

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{BuildingGraph, Canvas, Corner, CornerId, Point, Raster, RasterKind};

const COORD_STEP: f64 = 1e-4;

fn json_error(reason: impl Into<String>) -> Error {
    Error::Format {
        format: "graph JSON",
        reason: reason.into(),
    }
}

fn pgm_error(reason: impl Into<String>) -> Error {
    Error::Format {
        format: "PGM",
        reason: reason.into(),
    }
}

/// Rounds to 4 decimals, keeping the value strictly inside the canvas.
fn coord_text(v: f64, limit: u32) -> String {
    let max = limit as f64 - COORD_STEP;
    let text = format!("{v:.4}");
    if text.parse::<f64>().is_ok_and(|r| r > max) {
        format!("{max:.4}")
    } else {
        text
    }
}

pub fn graph_to_json(graph: &BuildingGraph) -> String {
    let canvas = graph.canvas();
    let mut out = String::new();
    let _ = writeln!(out, "{{");
    let _ = writeln!(out, "  \"canvas\": [{}, {}],", canvas.width, canvas.height);
    let corners: Vec<String> = graph
        .corners()
        .iter()
        .map(|c| {
            format!(
                "    {{\"id\": {}, \"x\": {}, \"y\": {}}}",
                c.id,
                coord_text(c.pos.x, canvas.width),
                coord_text(c.pos.y, canvas.height)
            )
        })
        .collect();
    let edges: Vec<String> = graph.edges().iter().map(|e| format!("    [{}, {}]", e.a(), e.b())).collect();
    write_list(&mut out, "corners", &corners, ",");
    write_list(&mut out, "edges", &edges, "");
    let _ = writeln!(out, "}}");
    out
}

fn write_list(out: &mut String, name: &str, items: &[String], trailer: &str) {
    if items.is_empty() {
        let _ = writeln!(out, "  \"{name}\": []{trailer}");
        return;
    }
    let _ = writeln!(out, "  \"{name}\": [");
    let _ = writeln!(out, "{}", items.join(",\n"));
    let _ = writeln!(out, "  ]{trailer}");
}

#[derive(Deserialize)]
struct RawCorner {
    id: CornerId,
    x: f64,
    y: f64,
}

#[derive(Deserialize)]
struct RawGraph {
    canvas: [u32; 2],
    corners: Vec<RawCorner>,
    edges: Vec<[CornerId; 2]>,
}

pub fn graph_from_json(text: &str) -> Result<BuildingGraph> {
    let raw: RawGraph = serde_json::from_str(text).map_err(|e| json_error(e.to_string()))?;
    let [w, h] = raw.canvas;
    if w == 0 || h == 0 {
        return Err(json_error(format!("empty canvas {w}x{h}")));
    }
    BuildingGraph::from_parts(
        Canvas::new(w, h),
        raw.corners.into_iter().map(|c| Corner {
            id: c.id,
            pos: Point::new(c.x, c.y),
        }),
        raw.edges.into_iter().map(|[a, b]| (a, b)),
    )
}

fn maxval_of(kind: RasterKind) -> u8 {
    match kind {
        RasterKind::Binary => 1,
        RasterKind::Target => 2,
        RasterKind::Score => 254,
        RasterKind::Confidence => 255,
    }
}

fn encode(kind: RasterKind, v: f64) -> u8 {
    let level = match kind {
        RasterKind::Binary => v,
        RasterKind::Target => v + 1.0,
        RasterKind::Score => v * 127.0 + 127.0,
        RasterKind::Confidence => v * 255.0,
    };
    level.round().clamp(0.0, maxval_of(kind) as f64) as u8
}

fn decode(kind: RasterKind, level: u8) -> f64 {
    let v = level as f64;
    match kind {
        RasterKind::Binary => v,
        RasterKind::Target => v - 1.0,
        RasterKind::Score => (v - 127.0) / 127.0,
        RasterKind::Confidence => v / 255.0,
    }
}

/// Values are quantized to the kind's levels.
pub fn raster_to_pgm(raster: &Raster) -> Vec<u8> {
    let kind = raster.kind();
    let mut out = format!("P5\n{} {}\n{}\n", raster.width(), raster.height(), maxval_of(kind)).into_bytes();
    out.extend(raster.data().iter().map(|&v| encode(kind, v)));
    out
}

/// Reads the next header token, skipping whitespace and `#` comments.
fn header_token<'a>(bytes: &'a [u8], pos: &mut usize) -> Result<&'a [u8]> {
    loop {
        match bytes.get(*pos) {
            None => return Err(pgm_error("truncated header")),
            Some(b'#') => {
                while bytes.get(*pos).is_some_and(|&b| b != b'\n') {
                    *pos += 1;
                }
            }
            Some(b) if b.is_ascii_whitespace() => *pos += 1,
            Some(_) => break,
        }
    }
    let start = *pos;
    while bytes.get(*pos).is_some_and(|b| !b.is_ascii_whitespace()) {
        *pos += 1;
    }
    Ok(&bytes[start..*pos])
}

fn header_number(bytes: &[u8], pos: &mut usize, what: &str) -> Result<u32> {
    let token = header_token(bytes, pos)?;
    std::str::from_utf8(token)
        .ok()
        .and_then(|s| s.parse().ok())
        .ok_or_else(|| pgm_error(format!("bad {what} {:?}", String::from_utf8_lossy(token))))
}

pub fn raster_from_pgm(bytes: &[u8]) -> Result<Raster> {
    let mut pos = 0;
    if header_token(bytes, &mut pos)? != b"P5" {
        return Err(pgm_error("missing P5 magic"));
    }
    let width = header_number(bytes, &mut pos, "width")?;
    let height = header_number(bytes, &mut pos, "height")?;
    let maxval = header_number(bytes, &mut pos, "maxval")?;
    let kind = match maxval {
        1 => RasterKind::Binary,
        2 => RasterKind::Target,
        254 => RasterKind::Score,
        255 => RasterKind::Confidence,
        other => return Err(pgm_error(format!("unsupported maxval {other}"))),
    };
    // exactly one whitespace byte separates the header from the pixels
    if !bytes.get(pos).is_some_and(|b| b.is_ascii_whitespace()) {
        return Err(pgm_error("truncated header"));
    }
    pos += 1;
    let n = width as usize * height as usize;
    let pixels = &bytes[pos..];
    if pixels.len() != n {
        return Err(pgm_error(format!("expected {n} pixel bytes, found {}", pixels.len())));
    }
    if let Some(&bad) = pixels.iter().find(|&&b| b as u32 > maxval) {
        return Err(pgm_error(format!("pixel value {bad} exceeds maxval {maxval}")));
    }
    Raster::from_vec(width, height, kind, pixels.iter().map(|&b| decode(kind, b)).collect())
}

/// Writes through a temporary sibling and renames, so readers never see a
/// partial file.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    let tmp = PathBuf::from(tmp);
    fs::write(&tmp, bytes)?;
    fs::rename(&tmp, path)?;
    Ok(())
}

fn with_path<T>(path: &Path, r: Result<T>) -> Result<T> {
    r.map_err(|e| match e {
        Error::Format { format, reason } => Error::Format {
            format,
            reason: format!("{}: {reason}", path.display()),
        },
        Error::InvalidGraph(reason) => Error::InvalidGraph(format!("{}: {reason}", path.display())),
        other => other,
    })
}

pub fn read_graph(path: &Path) -> Result<BuildingGraph> {
    let text = fs::read_to_string(path)?;
    with_path(path, graph_from_json(&text))
}

pub fn write_graph(path: &Path, graph: &BuildingGraph) -> Result<()> {
    write_atomic(path, graph_to_json(graph).as_bytes())
}

pub fn read_raster(path: &Path) -> Result<Raster> {
    let bytes = fs::read(path)?;
    with_path(path, raster_from_pgm(&bytes))
}

pub fn write_raster(path: &Path, raster: &Raster) -> Result<()> {
    write_atomic(path, &raster_to_pgm(raster))
}

/// Pretty JSON with a trailing newline.
pub fn to_json_text<T: Serialize>(value: &T) -> Result<String> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    Ok(text)
}

/// File names inside one corpus case directory.
pub mod case {
    pub const GT: &str = "gt.json";
    pub const INITIAL: &str = "initial.json";
    pub const CORNER: &str = "corner.pgm";
    pub const EDGE: &str = "edge.pgm";
    pub const REGION: &str = "region.pgm";
    pub const META: &str = "meta.json";
}

/// Case directories of a corpus, sorted by name.
pub fn list_cases(corpus: &Path) -> Result<Vec<PathBuf>> {
    let mut out = Vec::new();
    for entry in fs::read_dir(corpus)? {
        let path = entry?.path();
        if path.join(case::GT).is_file() {
            out.push(path);
        }
    }
    out.sort();
    Ok(out)
}

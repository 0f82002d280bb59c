//! Rasters, binary masks and the pixel-level derivations of a graph.
//!
//! Sampling is at pixel centers: pixel `(i, j)` covers `[i, i+1) x [j, j+1)`
//! and is tested at `(i + 0.5, j + 0.5)`. There is no anti-aliasing.

use serde::{Deserialize, Serialize};

use super::graph::{BuildingGraph, Canvas, Point};
use crate::error::{Error, Result};

/// Corner disks cover pixel centers within this distance of the corner
/// (3 px diameter).
pub const CORNER_RADIUS: f64 = 1.5;
/// Edge bands cover pixel centers within this distance of the segment
/// (2 px thickness).
pub const EDGE_HALF_WIDTH: f64 = 1.0;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PrimitiveKind {
    Corners,
    Edges,
}

/// Value domain of a scalar raster.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RasterKind {
    /// `{0, 1}`
    Binary,
    /// `[0, 1]`
    Confidence,
    /// `{-1, 0, 1}`
    Target,
    /// `[-1, 1]`, per-pixel classification scores from an external model.
    Score,
}

impl RasterKind {
    pub fn admits(self, v: f64) -> bool {
        match self {
            RasterKind::Binary => v == 0.0 || v == 1.0,
            RasterKind::Confidence => (0.0..=1.0).contains(&v),
            RasterKind::Target => v == -1.0 || v == 0.0 || v == 1.0,
            RasterKind::Score => (-1.0..=1.0).contains(&v),
        }
    }
}

/// Row-major single-channel image.
#[derive(Clone, Debug, PartialEq)]
pub struct Raster {
    width: u32,
    height: u32,
    kind: RasterKind,
    data: Vec<f64>,
}

impl Raster {
    pub fn filled(width: u32, height: u32, kind: RasterKind, value: f64) -> Self {
        Self {
            width,
            height,
            kind,
            data: vec![value; width as usize * height as usize],
        }
    }

    pub fn from_vec(width: u32, height: u32, kind: RasterKind, data: Vec<f64>) -> Result<Self> {
        if data.len() != width as usize * height as usize {
            return Err(Error::InvalidConfig(format!(
                "raster data has {} values, expected {}x{}",
                data.len(),
                width,
                height
            )));
        }
        if let Some(bad) = data.iter().find(|v| !kind.admits(**v)) {
            return Err(Error::InvalidConfig(format!("value {bad} outside the {kind:?} range")));
        }
        Ok(Self {
            width,
            height,
            kind,
            data,
        })
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn dims(&self) -> (u32, u32) {
        (self.width, self.height)
    }

    pub fn kind(&self) -> RasterKind {
        self.kind
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn get(&self, x: u32, y: u32) -> f64 {
        self.data[y as usize * self.width as usize + x as usize]
    }

    /// Writes a value; callers are responsible for keeping it in range.
    pub fn set(&mut self, x: u32, y: u32, v: f64) {
        let w = self.width as usize;
        self.data[y as usize * w + x as usize] = v;
    }

    pub fn ensure_same_dims(&self, other_dims: (u32, u32)) -> Result<()> {
        if self.dims() != other_dims {
            return Err(Error::DimensionMismatch {
                left: self.dims(),
                right: other_dims,
            });
        }
        Ok(())
    }

    /// Nonzero pixels become set.
    pub fn to_mask(&self) -> Mask {
        Mask {
            width: self.width,
            height: self.height,
            bits: self.data.iter().map(|&v| v != 0.0).collect(),
        }
    }
}

/// Binary raster.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Mask {
    width: u32,
    height: u32,
    bits: Vec<bool>,
}

impl Mask {
    pub fn empty(width: u32, height: u32) -> Self {
        Self {
            width,
            height,
            bits: vec![false; width as usize * height as usize],
        }
    }

    pub fn for_canvas(canvas: Canvas) -> Self {
        Self::empty(canvas.width, canvas.height)
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn dims(&self) -> (u32, u32) {
        (self.width, self.height)
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    pub fn get(&self, x: u32, y: u32) -> bool {
        self.bits[y as usize * self.width as usize + x as usize]
    }

    pub fn set(&mut self, x: u32, y: u32, v: bool) {
        let w = self.width as usize;
        self.bits[y as usize * w + x as usize] = v;
    }

    pub fn count(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }

    pub fn union_with(&mut self, other: &Mask) {
        for (a, &b) in self.bits.iter_mut().zip(&other.bits) {
            *a |= b;
        }
    }

    pub fn to_raster(&self) -> Raster {
        Raster {
            width: self.width,
            height: self.height,
            kind: RasterKind::Binary,
            data: self.bits.iter().map(|&b| if b { 1.0 } else { 0.0 }).collect(),
        }
    }
}

/// Inclusive pixel rectangle clipped to the canvas.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) struct PixelRect {
    pub x0: u32,
    pub y0: u32,
    pub x1: u32,
    pub y1: u32,
}

impl PixelRect {
    /// Pixels whose centers may lie inside `[lo - pad, hi + pad]`.
    pub fn around(lo: Point, hi: Point, pad: f64, canvas: Canvas) -> Option<Self> {
        let clamp = |v: f64, max: u32| -> Option<u32> {
            if v < 0.0 {
                Some(0)
            } else if v > (max - 1) as f64 {
                Some(max - 1)
            } else {
                Some(v as u32)
            }
        };
        if canvas.width == 0 || canvas.height == 0 {
            return None;
        }
        let x0 = clamp((lo.x - pad - 0.5).floor(), canvas.width)?;
        let y0 = clamp((lo.y - pad - 0.5).floor(), canvas.height)?;
        let x1 = clamp((hi.x + pad - 0.5).ceil(), canvas.width)?;
        let y1 = clamp((hi.y + pad - 0.5).ceil(), canvas.height)?;
        Some(Self { x0, y0, x1, y1 })
    }

    pub fn width(&self) -> usize {
        (self.x1 - self.x0 + 1) as usize
    }

    pub fn height(&self) -> usize {
        (self.y1 - self.y0 + 1) as usize
    }
}

/// Squared distance from `p` to segment `a-b`.
pub(crate) fn point_segment_distance2(p: Point, a: Point, b: Point) -> f64 {
    let d = b.sub(a);
    let len2 = d.dot(d);
    let t = if len2 == 0.0 { 0.0 } else { (p.sub(a).dot(d) / len2).clamp(0.0, 1.0) };
    let q = p.sub(Point::new(a.x + t * d.x, a.y + t * d.y));
    q.dot(q)
}

/// Rows covered by the 2 px band around segment `a-b`.
fn edge_rows(canvas: Canvas, a: Point, b: Point) -> Option<PixelRect> {
    let lo = Point::new(a.x.min(b.x), a.y.min(b.y));
    let hi = Point::new(a.x.max(b.x), a.y.max(b.y));
    PixelRect::around(lo, hi, EDGE_HALF_WIDTH, canvas)
}

/// Inclusive column range of the band around `a-b` on row `y`. The band is
/// convex, so its pixels on one row are contiguous. Only the columns next to
/// the part of the segment within one half-width of the row center are
/// tested.
fn edge_row_span(canvas: Canvas, rect: &PixelRect, a: Point, b: Point, y: u32) -> Option<(u32, u32)> {
    let d = b.sub(a);
    let cy = y as f64 + 0.5;
    let (t0, t1) = if d.y == 0.0 {
        if (a.y - cy).abs() > EDGE_HALF_WIDTH {
            return None;
        }
        (0.0, 1.0)
    } else {
        let u = (cy - EDGE_HALF_WIDTH - a.y) / d.y;
        let v = (cy + EDGE_HALF_WIDTH - a.y) / d.y;
        (u.min(v).max(0.0), u.max(v).min(1.0))
    };
    if t0 > t1 {
        return None;
    }
    let (xa, xb) = (a.x + t0 * d.x, a.x + t1 * d.x);
    let cols = PixelRect::around(Point::new(xa.min(xb), cy), Point::new(xa.max(xb), cy), EDGE_HALF_WIDTH, canvas)?;
    let inside = |x: u32| point_segment_distance2(Point::new(x as f64 + 0.5, cy), a, b) <= EDGE_HALF_WIDTH * EDGE_HALF_WIDTH;
    let (lo, hi) = (cols.x0.max(rect.x0), cols.x1.min(rect.x1));
    let first = (lo..=hi).find(|&x| inside(x))?;
    let last = (first..=hi).rev().find(|&x| inside(x))?;
    Some((first, last))
}

/// Calls `f(x, y)` for every pixel of the 2 px band around segment `a-b`.
pub(crate) fn for_each_edge_pixel(canvas: Canvas, a: Point, b: Point, mut f: impl FnMut(u32, u32)) {
    let Some(rect) = edge_rows(canvas, a, b) else {
        return;
    };
    for y in rect.y0..=rect.y1 {
        if let Some((x0, x1)) = edge_row_span(canvas, &rect, a, b, y) {
            for x in x0..=x1 {
                f(x, y);
            }
        }
    }
}

/// Calls `f(x, y)` for every pixel of the 3 px disk around `p`.
pub(crate) fn for_each_corner_pixel(canvas: Canvas, p: Point, mut f: impl FnMut(u32, u32)) {
    let Some(rect) = PixelRect::around(p, p, CORNER_RADIUS, canvas) else {
        return;
    };
    for y in rect.y0..=rect.y1 {
        for x in rect.x0..=rect.x1 {
            let c = Point::new(x as f64 + 0.5, y as f64 + 0.5);
            let q = c.sub(p);
            if q.dot(q) <= CORNER_RADIUS * CORNER_RADIUS {
                f(x, y);
            }
        }
    }
}

pub fn rasterize(graph: &BuildingGraph, kind: PrimitiveKind) -> Mask {
    let canvas = graph.canvas();
    let mut mask = Mask::for_canvas(canvas);
    match kind {
        PrimitiveKind::Corners => {
            for c in graph.corners() {
                for_each_corner_pixel(canvas, c.pos, |x, y| mask.set(x, y, true));
            }
        }
        PrimitiveKind::Edges => {
            for &e in graph.edges() {
                let (a, b) = graph.segment(e);
                for_each_edge_pixel(canvas, a, b, |x, y| mask.set(x, y, true));
            }
        }
    }
    mask
}

/// Enclosed area restricted to a window around the graph.
///
/// Everything outside the window is background: the window extends 3 px past
/// the corner bounds, so its border ring is free of edge pixels (or lies on
/// the canvas border) and filling from that ring reaches exactly the pixels a
/// fill from the canvas border would.
pub(crate) struct EnclosedWindow {
    /// Enclosed row spans `(y, x_start, x_end)` in canvas pixels, end exclusive.
    pub spans: Vec<(u32, u32, u32)>,
    pub count: usize,
}

impl EnclosedWindow {
    /// Number of enclosed pixels that are set in the reference.
    pub fn intersection_count(&self, reference: &RowCounts) -> usize {
        self.spans.iter().map(|&(y, x0, x1)| reference.count(y, x0, x1)).sum()
    }
}

/// Per-row prefix counts of a mask, for O(1) span counts.
#[derive(Clone, Debug)]
pub(crate) struct RowCounts {
    stride: usize,
    cum: Vec<u32>,
    total: usize,
}

impl RowCounts {
    pub fn new(mask: &Mask) -> Self {
        let w = mask.width as usize;
        let stride = w + 1;
        let mut cum = vec![0u32; stride * mask.height as usize];
        for (y, row) in mask.bits.chunks_exact(w.max(1)).enumerate().take(mask.height as usize) {
            let base = y * stride;
            for (x, &b) in row.iter().enumerate() {
                cum[base + x + 1] = cum[base + x] + b as u32;
            }
        }
        Self {
            stride,
            cum,
            total: mask.count(),
        }
    }

    pub fn total(&self) -> usize {
        self.total
    }

    /// Set pixels of row `y` in columns `x0..x1`.
    pub fn count(&self, y: u32, x0: u32, x1: u32) -> usize {
        let base = y as usize * self.stride;
        (self.cum[base + x1 as usize] - self.cum[base + x0 as usize]) as usize
    }
}

fn find(parent: &mut [u32], mut i: u32) -> u32 {
    while parent[i as usize] != i {
        let up = parent[parent[i as usize] as usize];
        parent[i as usize] = up;
        i = up;
    }
    i
}

/// Connected background is found on maximal runs of free pixels: runs in
/// adjacent rows with overlapping columns are 4-connected.
pub(crate) fn enclosed_window(graph: &BuildingGraph) -> Option<EnclosedWindow> {
    if graph.edges().is_empty() {
        return None;
    }
    let canvas = graph.canvas();
    let (lo, hi) = graph.bounds()?;
    let rect = PixelRect::around(lo, hi, 3.0, canvas)?;
    let (w, h) = (rect.width(), rect.height());

    // band spans (row, start, end) in window coordinates
    let mut band: Vec<(u32, u32, u32)> = Vec::new();
    for &e in graph.edges() {
        let (a, b) = graph.segment(e);
        let Some(rows) = edge_rows(canvas, a, b) else {
            continue;
        };
        for y in rows.y0.max(rect.y0)..=rows.y1.min(rect.y1) {
            if let Some((x0, x1)) = edge_row_span(canvas, &rect, a, b, y) {
                band.push((y - rect.y0, x0 - rect.x0, x1 - rect.x0 + 1));
            }
        }
    }
    band.sort_unstable();

    // free runs (start, end) per row, the complement of the band spans
    let mut runs: Vec<(u32, u32)> = Vec::with_capacity(band.len() + h);
    let mut row_start: Vec<usize> = Vec::with_capacity(h + 1);
    let mut next = 0;
    for y in 0..h as u32 {
        row_start.push(runs.len());
        let mut cursor = 0u32;
        while next < band.len() && band[next].0 == y {
            let (_, s, e) = band[next];
            if s > cursor {
                runs.push((cursor, s));
            }
            cursor = cursor.max(e);
            next += 1;
        }
        if (cursor as usize) < w {
            runs.push((cursor, w as u32));
        }
    }
    row_start.push(runs.len());

    let mut parent: Vec<u32> = (0..runs.len() as u32).collect();
    for y in 0..h.saturating_sub(1) {
        let (mut i, mut j) = (row_start[y], row_start[y + 1]);
        let (i_end, j_end) = (row_start[y + 1], row_start[y + 2]);
        while i < i_end && j < j_end {
            let (a, b) = (runs[i], runs[j]);
            if a.0 < b.1 && b.0 < a.1 {
                let (ra, rb) = (find(&mut parent, i as u32), find(&mut parent, j as u32));
                if ra != rb {
                    parent[ra.max(rb) as usize] = ra.min(rb);
                }
            }
            if a.1 < b.1 {
                i += 1;
            } else {
                j += 1;
            }
        }
    }

    let mut outside = vec![false; runs.len()];
    for y in 0..h {
        for r in row_start[y]..row_start[y + 1] {
            let (s, e) = runs[r];
            if y == 0 || y + 1 == h || s == 0 || e as usize == w {
                let root = find(&mut parent, r as u32);
                outside[root as usize] = true;
            }
        }
    }

    let mut spans = Vec::new();
    let mut count = 0;
    for y in 0..h {
        let mut cursor = 0u32;
        let mut push = |from: u32, to: u32| {
            if to > from {
                spans.push((rect.y0 + y as u32, rect.x0 + from, rect.x0 + to));
                count += (to - from) as usize;
            }
        };
        for r in row_start[y]..row_start[y + 1] {
            if outside[find(&mut parent, r as u32) as usize] {
                push(cursor, runs[r].0);
                cursor = runs[r].1;
            }
        }
        push(cursor, w as u32);
    }
    Some(EnclosedWindow { spans, count })
}

/// Interior plus edge band: the complement of the background reachable from
/// the canvas border through 4-connected non-edge pixels.
pub fn enclosed_mask(graph: &BuildingGraph) -> Mask {
    let mut mask = Mask::for_canvas(graph.canvas());
    if let Some(win) = enclosed_window(graph) {
        let w = mask.width as usize;
        for (y, x0, x1) in win.spans {
            let base = y as usize * w;
            mask.bits[base + x0 as usize..base + x1 as usize].fill(true);
        }
    }
    mask
}

pub(crate) fn iou_from_counts(inter: usize, a: usize, b: usize) -> f64 {
    let union = a + b - inter;
    if union == 0 {
        1.0
    } else {
        inter as f64 / union as f64
    }
}

/// Intersection over union; 1 when both masks are empty.
pub fn mask_iou(a: &Mask, b: &Mask) -> Result<f64> {
    if a.dims() != b.dims() {
        return Err(Error::DimensionMismatch {
            left: a.dims(),
            right: b.dims(),
        });
    }
    let (mut inter, mut union) = (0usize, 0usize);
    for (&p, &q) in a.bits.iter().zip(&b.bits) {
        inter += (p && q) as usize;
        union += (p || q) as usize;
    }
    Ok(if union == 0 { 1.0 } else { inter as f64 / union as f64 })
}

/// Pixel indices (row-major, canvas coordinates) whose centers lie inside the
/// polygon under the even-odd rule.
pub fn polygon_pixels(polygon: &[Point], canvas: Canvas) -> Vec<u32> {
    let mut out = Vec::new();
    if polygon.len() < 3 {
        return out;
    }
    let lo = polygon.iter().fold(Point::new(f64::MAX, f64::MAX), |m, p| Point::new(m.x.min(p.x), m.y.min(p.y)));
    let hi = polygon.iter().fold(Point::new(f64::MIN, f64::MIN), |m, p| Point::new(m.x.max(p.x), m.y.max(p.y)));
    let Some(rect) = PixelRect::around(lo, hi, 0.0, canvas) else {
        return out;
    };
    let n = polygon.len();
    let mut xs: Vec<f64> = Vec::with_capacity(n);
    for y in rect.y0..=rect.y1 {
        let cy = y as f64 + 0.5;
        xs.clear();
        for i in 0..n {
            let (p, q) = (polygon[i], polygon[(i + 1) % n]);
            if (p.y <= cy) != (q.y <= cy) {
                xs.push(p.x + (cy - p.y) / (q.y - p.y) * (q.x - p.x));
            }
        }
        xs.sort_by(f64::total_cmp);
        for span in xs.chunks_exact(2) {
            for x in rect.x0..=rect.x1 {
                let cx = x as f64 + 0.5;
                if cx > span[0] && cx < span[1] {
                    out.push(y * canvas.width + x);
                }
            }
        }
    }
    out.sort_unstable();
    out
}

pub fn polygon_mask(polygon: &[Point], canvas: Canvas) -> Mask {
    let mut mask = Mask::for_canvas(canvas);
    for i in polygon_pixels(polygon, canvas) {
        mask.bits[i as usize] = true;
    }
    mask
}

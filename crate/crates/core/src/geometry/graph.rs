use std::fmt;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

pub type CornerId = u32;

/// Canonical keys quantize coordinates to this many steps per pixel.
pub const KEY_STEPS_PER_PIXEL: f64 = 16.0;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn distance(self, other: Point) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }

    pub fn sub(self, other: Point) -> Point {
        Point::new(self.x - other.x, self.y - other.y)
    }

    pub fn add(self, other: Point) -> Point {
        Point::new(self.x + other.x, self.y + other.y)
    }

    pub fn dot(self, other: Point) -> f64 {
        self.x * other.x + self.y * other.y
    }

    pub fn cross(self, other: Point) -> f64 {
        self.x * other.y - self.y * other.x
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Canvas {
    pub width: u32,
    pub height: u32,
}

impl Canvas {
    pub const fn new(width: u32, height: u32) -> Self {
        Self { width, height }
    }

    pub fn contains(&self, p: Point) -> bool {
        p.x >= 0.0 && p.y >= 0.0 && p.x < self.width as f64 && p.y < self.height as f64
    }

    pub fn pixel_count(&self) -> usize {
        self.width as usize * self.height as usize
    }
}

impl Default for Canvas {
    fn default() -> Self {
        Self::new(256, 256)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Corner {
    pub id: CornerId,
    pub pos: Point,
}

/// Undirected edge stored with the smaller id first.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "(CornerId, CornerId)", into = "(CornerId, CornerId)")]
pub struct Edge(CornerId, CornerId);

impl TryFrom<(CornerId, CornerId)> for Edge {
    type Error = String;

    fn try_from((a, b): (CornerId, CornerId)) -> std::result::Result<Self, String> {
        Edge::new(a, b).ok_or_else(|| format!("self-loop edge [{a}, {b}]"))
    }
}

impl From<Edge> for (CornerId, CornerId) {
    fn from(e: Edge) -> Self {
        (e.0, e.1)
    }
}

impl Edge {
    /// Returns `None` for self-loops.
    pub fn new(a: CornerId, b: CornerId) -> Option<Self> {
        match a.cmp(&b) {
            std::cmp::Ordering::Less => Some(Edge(a, b)),
            std::cmp::Ordering::Greater => Some(Edge(b, a)),
            std::cmp::Ordering::Equal => None,
        }
    }

    pub fn a(self) -> CornerId {
        self.0
    }

    pub fn b(self) -> CornerId {
        self.1
    }

    pub fn contains(self, id: CornerId) -> bool {
        self.0 == id || self.1 == id
    }

    pub fn other(self, id: CornerId) -> Option<CornerId> {
        if self.0 == id {
            Some(self.1)
        } else if self.1 == id {
            Some(self.0)
        } else {
            None
        }
    }
}

impl fmt::Display for Edge {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}-{}", self.0, self.1)
    }
}

/// A planar building graph: corners with continuous positions and
/// undirected straight edges on a pixel canvas.
///
/// Corners are kept sorted by id and edges sorted by `(a, b)`, so iteration
/// order is deterministic.
#[derive(Clone, Debug, PartialEq)]
pub struct BuildingGraph {
    canvas: Canvas,
    corners: Vec<Corner>,
    edges: Vec<Edge>,
}

impl BuildingGraph {
    pub fn new(canvas: Canvas) -> Self {
        Self {
            canvas,
            corners: Vec::new(),
            edges: Vec::new(),
        }
    }

    /// Builds a graph from raw parts, checking every invariant.
    pub fn from_parts(
        canvas: Canvas,
        corners: impl IntoIterator<Item = Corner>,
        edges: impl IntoIterator<Item = (CornerId, CornerId)>,
    ) -> Result<Self> {
        let mut graph = Self::new(canvas);
        for corner in corners {
            graph.insert_corner(corner.id, corner.pos)?;
        }
        for (a, b) in edges {
            graph.add_edge(a, b)?;
        }
        Ok(graph)
    }

    /// Convenience constructor assigning ids `0..n` in order.
    pub fn from_points(
        canvas: Canvas,
        points: &[(f64, f64)],
        edges: &[(CornerId, CornerId)],
    ) -> Result<Self> {
        Self::from_parts(
            canvas,
            points.iter().enumerate().map(|(i, &(x, y))| Corner {
                id: i as CornerId,
                pos: Point::new(x, y),
            }),
            edges.iter().copied(),
        )
    }

    pub fn canvas(&self) -> Canvas {
        self.canvas
    }

    pub fn corners(&self) -> &[Corner] {
        &self.corners
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn is_empty(&self) -> bool {
        self.corners.is_empty()
    }

    pub fn corner(&self, id: CornerId) -> Option<&Corner> {
        self.corners
            .binary_search_by_key(&id, |c| c.id)
            .ok()
            .map(|i| &self.corners[i])
    }

    pub fn position(&self, id: CornerId) -> Option<Point> {
        self.corner(id).map(|c| c.pos)
    }

    pub fn has_edge(&self, a: CornerId, b: CornerId) -> bool {
        Edge::new(a, b).is_some_and(|e| self.edges.binary_search(&e).is_ok())
    }

    pub fn degree(&self, id: CornerId) -> usize {
        self.edges.iter().filter(|e| e.contains(id)).count()
    }

    /// Neighbor ids in ascending order.
    pub fn neighbors(&self, id: CornerId) -> Vec<CornerId> {
        let mut out: Vec<CornerId> = self.edges.iter().filter_map(|e| e.other(id)).collect();
        out.sort_unstable();
        out
    }

    pub fn incident_edges(&self, id: CornerId) -> Vec<Edge> {
        self.edges.iter().copied().filter(|e| e.contains(id)).collect()
    }

    pub fn segment(&self, edge: Edge) -> (Point, Point) {
        let a = self.position(edge.a()).expect("edge endpoint exists");
        let b = self.position(edge.b()).expect("edge endpoint exists");
        (a, b)
    }

    pub fn next_id(&self) -> CornerId {
        self.corners.last().map_or(0, |c| c.id + 1)
    }

    pub fn insert_corner(&mut self, id: CornerId, pos: Point) -> Result<()> {
        if !(pos.x.is_finite() && pos.y.is_finite()) || !self.canvas.contains(pos) {
            return Err(Error::InvalidGraph(format!(
                "corner {id} at ({}, {}) lies outside the {}x{} canvas",
                pos.x, pos.y, self.canvas.width, self.canvas.height
            )));
        }
        match self.corners.binary_search_by_key(&id, |c| c.id) {
            Ok(_) => Err(Error::InvalidGraph(format!("duplicate corner id {id}"))),
            Err(i) => {
                self.corners.insert(i, Corner { id, pos });
                Ok(())
            }
        }
    }

    /// Adds a corner with a fresh id.
    pub fn add_corner(&mut self, pos: Point) -> Result<CornerId> {
        let id = self.next_id();
        self.insert_corner(id, pos)?;
        Ok(id)
    }

    pub fn add_edge(&mut self, a: CornerId, b: CornerId) -> Result<Edge> {
        let edge = Edge::new(a, b)
            .ok_or_else(|| Error::InvalidGraph(format!("self-loop at corner {a}")))?;
        for id in [a, b] {
            if self.corner(id).is_none() {
                return Err(Error::InvalidGraph(format!("edge {edge} references missing corner {id}")));
            }
        }
        match self.edges.binary_search(&edge) {
            Ok(_) => Err(Error::InvalidGraph(format!("duplicate edge {edge}"))),
            Err(i) => {
                self.edges.insert(i, edge);
                Ok(edge)
            }
        }
    }

    pub fn remove_edge(&mut self, edge: Edge) -> Result<()> {
        match self.edges.binary_search(&edge) {
            Ok(i) => {
                self.edges.remove(i);
                Ok(())
            }
            Err(_) => Err(Error::InvalidGraph(format!("no edge {edge}"))),
        }
    }

    /// Removes a corner together with its incident edges.
    pub fn remove_corner(&mut self, id: CornerId) -> Result<()> {
        let i = self
            .corners
            .binary_search_by_key(&id, |c| c.id)
            .map_err(|_| Error::InvalidGraph(format!("no corner {id}")))?;
        self.corners.remove(i);
        self.edges.retain(|e| !e.contains(id));
        Ok(())
    }

    /// Moves a corner; used by corruption jitter only.
    pub fn set_position(&mut self, id: CornerId, pos: Point) -> Result<()> {
        if !self.canvas.contains(pos) {
            return Err(Error::InvalidGraph(format!("corner {id} moved off canvas")));
        }
        let i = self
            .corners
            .binary_search_by_key(&id, |c| c.id)
            .map_err(|_| Error::InvalidGraph(format!("no corner {id}")))?;
        self.corners[i].pos = pos;
        Ok(())
    }

    /// Axis-aligned bounds of all corner positions, `None` when empty.
    pub fn bounds(&self) -> Option<(Point, Point)> {
        let first = self.corners.first()?.pos;
        Some(self.corners.iter().fold((first, first), |(lo, hi), c| {
            (
                Point::new(lo.x.min(c.pos.x), lo.y.min(c.pos.y)),
                Point::new(hi.x.max(c.pos.x), hi.y.max(c.pos.y)),
            )
        }))
    }

    pub fn canonical_key(&self) -> CanonicalKey {
        CanonicalKey::of(self)
    }

    /// Structural equality by canonical key, independent of ids.
    pub fn same_as(&self, other: &BuildingGraph) -> bool {
        self.canonical_key() == other.canonical_key()
    }
}

fn quantize(v: f64) -> i64 {
    (v * KEY_STEPS_PER_PIXEL).round_ties_even() as i64
}

/// Id-independent fingerprint of a graph.
///
/// Corners are sorted by position rounded to 1/16 px (ties, which the 3 px
/// snap rule prevents, fall back to id order) and edges are expressed over
/// that ordering. Rounding is ties-to-even so that keys survive a round trip
/// through 4-decimal text.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct CanonicalKey {
    canvas: Canvas,
    corners: Vec<(i64, i64)>,
    edges: Vec<(u32, u32)>,
}

impl CanonicalKey {
    fn of(graph: &BuildingGraph) -> Self {
        let mut order: Vec<(i64, i64, CornerId)> = graph
            .corners
            .iter()
            .map(|c| (quantize(c.pos.x), quantize(c.pos.y), c.id))
            .collect();
        order.sort_unstable();
        let index_of = |id: CornerId| -> u32 {
            order.iter().position(|&(_, _, cid)| cid == id).expect("edge endpoint exists") as u32
        };
        let mut edges: Vec<(u32, u32)> = graph
            .edges
            .iter()
            .map(|e| {
                let (i, j) = (index_of(e.a()), index_of(e.b()));
                (i.min(j), i.max(j))
            })
            .collect();
        edges.sort_unstable();
        Self {
            canvas: graph.canvas,
            corners: order.into_iter().map(|(x, y, _)| (x, y)).collect(),
            edges,
        }
    }

    /// Short hex digest for logs and traces.
    pub fn digest(&self) -> String {
        let mut hasher = Sha256::new();
        hasher.update(self.canvas.width.to_le_bytes());
        hasher.update(self.canvas.height.to_le_bytes());
        hasher.update((self.corners.len() as u64).to_le_bytes());
        for (x, y) in &self.corners {
            hasher.update(x.to_le_bytes());
            hasher.update(y.to_le_bytes());
        }
        for (i, j) in &self.edges {
            hasher.update(i.to_le_bytes());
            hasher.update(j.to_le_bytes());
        }
        let digest = hasher.finalize();
        digest[..8].iter().map(|b| format!("{b:02x}")).collect()
    }
}

//! Synthetic rectilinear buildings, degraded confidence rasters and seeded
//! corruption.

use std::collections::{BTreeMap, BTreeSet};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::actions::Action;
use crate::error::{Error, Result};
use crate::geometry::{enclosed_mask, rasterize, BuildingGraph, Canvas, CornerId, Edge, Mask, Point, PrimitiveKind, Raster, RasterKind};
use crate::rng;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SynthParams {
    pub rect_count: usize,
    pub grid_step: u32,
    pub margin: u32,
    pub seed: u64,
    /// Box blur radius in pixels applied to the confidence rasters.
    pub blur_radius: u32,
    /// Per-pixel probability of replacing a confidence `v` with `1 - v`.
    pub flip_prob: f64,
    pub canvas: Canvas,
}

impl Default for SynthParams {
    fn default() -> Self {
        Self {
            rect_count: 1,
            grid_step: 16,
            margin: 16,
            seed: 0,
            blur_radius: 0,
            flip_prob: 0.0,
            canvas: Canvas::default(),
        }
    }
}

const MIN_CELLS: i32 = 2;
const MAX_CELLS: i32 = 6;
const PLACEMENT_ATTEMPTS: usize = 500;

impl SynthParams {
    pub fn validate(&self) -> Result<()> {
        if !(1..=4).contains(&self.rect_count) {
            return Err(Error::InfeasibleParams(format!("rect_count {} outside 1..=4", self.rect_count)));
        }
        if self.grid_step < 8 {
            return Err(Error::InfeasibleParams(format!("grid step {} is below 8 px", self.grid_step)));
        }
        if !(0.0..=1.0).contains(&self.flip_prob) {
            return Err(Error::InfeasibleParams(format!("flip probability {} outside [0, 1]", self.flip_prob)));
        }
        let (cx, cy) = self.cells();
        if cx < MIN_CELLS || cy < MIN_CELLS {
            return Err(Error::InfeasibleParams(format!(
                "a {}x{} canvas with margin {} holds no {MIN_CELLS}x{MIN_CELLS}-cell rectangle at step {}",
                self.canvas.width, self.canvas.height, self.margin, self.grid_step
            )));
        }
        Ok(())
    }

    /// Grid cells available inside the margins.
    fn cells(&self) -> (i32, i32) {
        let usable = |len: u32| (len as i64 - 2 * self.margin as i64 - 1).max(0) / self.grid_step as i64;
        (usable(self.canvas.width) as i32, usable(self.canvas.height) as i32)
    }
}

/// Axis-aligned rectangle in grid units, `x0 < x1`, `y0 < y1`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Rect {
    pub x0: i32,
    pub y0: i32,
    pub x1: i32,
    pub y1: i32,
}

impl Rect {
    fn overlaps_interior(&self, o: &Rect) -> bool {
        self.x0 < o.x1 && o.x0 < self.x1 && self.y0 < o.y1 && o.y0 < self.y1
    }

    fn touches(&self, o: &Rect) -> bool {
        self.x0 <= o.x1 && o.x0 <= self.x1 && self.y0 <= o.y1 && o.y0 <= self.y1
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Synthesized {
    pub gt: BuildingGraph,
    pub rects: Vec<Rect>,
    pub corner_conf: Raster,
    pub edge_conf: Raster,
    pub region_ref: Mask,
}

/// Each rectangle after the first shares part of one side with exactly one
/// earlier rectangle, so the union is connected and has no holes.
fn place_rects(params: &SynthParams) -> Result<Vec<Rect>> {
    let (cx, cy) = params.cells();
    let mut rng = rng::stream(params.seed, "synth.rects", 0);
    let size = |rng: &mut rng::StreamRng, limit: i32| rng.gen_range(MIN_CELLS..=MAX_CELLS.min(limit));

    let (w, h) = (size(&mut rng, cx), size(&mut rng, cy));
    let (x0, y0) = (rng.gen_range(0..=cx - w), rng.gen_range(0..=cy - h));
    let mut rects = vec![Rect { x0, y0, x1: x0 + w, y1: y0 + h }];

    while rects.len() < params.rect_count {
        let mut placed = None;
        for _ in 0..PLACEMENT_ATTEMPTS {
            let parent = rects[rng.gen_range(0..rects.len())];
            let (w, h) = (size(&mut rng, cx), size(&mut rng, cy));
            // slide along the shared side so that at least one cell overlaps
            let sx = rng.gen_range(parent.x0 - w + 1..parent.x1);
            let sy = rng.gen_range(parent.y0 - h + 1..parent.y1);
            let r = match rng.gen_range(0..4) {
                0 => Rect { x0: sx, y0: parent.y0 - h, x1: sx + w, y1: parent.y0 },
                1 => Rect { x0: sx, y0: parent.y1, x1: sx + w, y1: parent.y1 + h },
                2 => Rect { x0: parent.x0 - w, y0: sy, x1: parent.x0, y1: sy + h },
                _ => Rect { x0: parent.x1, y0: sy, x1: parent.x1 + w, y1: sy + h },
            };
            let inside = r.x0 >= 0 && r.y0 >= 0 && r.x1 <= cx && r.y1 <= cy;
            let contacts = rects.iter().filter(|o| r.touches(o)).count();
            if inside && contacts == 1 && !rects.iter().any(|o| r.overlaps_interior(o)) {
                placed = Some(r);
                break;
            }
        }
        match placed {
            Some(r) => rects.push(r),
            None => {
                return Err(Error::InfeasibleParams(format!(
                    "could not place rectangle {} of {} after {PLACEMENT_ATTEMPTS} attempts",
                    rects.len() + 1,
                    params.rect_count
                )))
            }
        }
    }
    Ok(rects)
}

type Node = (i32, i32);
const DIRS: [(i32, i32); 4] = [(1, 0), (-1, 0), (0, 1), (0, -1)];

/// Planar arrangement of the rectangle boundaries: corners where the union of
/// outlines turns or branches, edges along the maximal straight runs between
/// them.
pub fn arrangement(rects: &[Rect], params: &SynthParams) -> Result<BuildingGraph> {
    let mut units: BTreeSet<(Node, Node)> = BTreeSet::new();
    let mut add = |a: Node, b: Node| {
        units.insert((a.min(b), a.max(b)));
    };
    for r in rects {
        for x in r.x0..r.x1 {
            add((x, r.y0), (x + 1, r.y0));
            add((x, r.y1), (x + 1, r.y1));
        }
        for y in r.y0..r.y1 {
            add((r.x0, y), (r.x0, y + 1));
            add((r.x1, y), (r.x1, y + 1));
        }
    }
    let linked = |n: Node, d: (i32, i32)| {
        let m = (n.0 + d.0, n.1 + d.1);
        units.contains(&(n.min(m), n.max(m)))
    };
    let mut nodes: BTreeSet<Node> = BTreeSet::new();
    for &(a, b) in &units {
        nodes.insert(a);
        nodes.insert(b);
    }
    let is_vertex = |n: Node| {
        let dirs: Vec<bool> = DIRS.iter().map(|&d| linked(n, d)).collect();
        let straight = (dirs == [true, true, false, false]) || (dirs == [false, false, true, true]);
        !straight
    };
    let vertices: Vec<Node> = nodes.iter().copied().filter(|&n| is_vertex(n)).collect();
    let id_of: BTreeMap<Node, CornerId> = vertices.iter().enumerate().map(|(i, &n)| (n, i as CornerId)).collect();

    let to_px = |v: i32| (params.margin as i64 + v as i64 * params.grid_step as i64) as f64;
    let mut graph = BuildingGraph::new(params.canvas);
    for (&n, &id) in &id_of {
        graph.insert_corner(id, Point::new(to_px(n.0), to_px(n.1)))?;
    }
    for &start in &vertices {
        for d in DIRS {
            if !linked(start, d) {
                continue;
            }
            let mut n = (start.0 + d.0, start.1 + d.1);
            while !id_of.contains_key(&n) {
                n = (n.0 + d.0, n.1 + d.1);
            }
            let (a, b) = (id_of[&start], id_of[&n]);
            if !graph.has_edge(a, b) {
                graph.add_edge(a, b)?;
            }
        }
    }
    Ok(graph)
}

/// Box blur with the window clipped at the border, then flip noise, then
/// quantization to multiples of 1/255.
fn degrade(mask: &Mask, params: &SynthParams, tag: &str) -> Raster {
    let (w, h) = (mask.width() as usize, mask.height() as usize);
    let mut data: Vec<f64> = mask.bits().iter().map(|&b| if b { 1.0 } else { 0.0 }).collect();
    let r = params.blur_radius as usize;
    if r > 0 {
        let blur_line = |line: &[f64]| -> Vec<f64> {
            (0..line.len())
                .map(|i| {
                    let (lo, hi) = (i.saturating_sub(r), (i + r).min(line.len() - 1));
                    line[lo..=hi].iter().sum::<f64>() / (hi - lo + 1) as f64
                })
                .collect()
        };
        for y in 0..h {
            let row = blur_line(&data[y * w..(y + 1) * w]);
            data[y * w..(y + 1) * w].copy_from_slice(&row);
        }
        for x in 0..w {
            let col: Vec<f64> = (0..h).map(|y| data[y * w + x]).collect();
            for (y, v) in blur_line(&col).into_iter().enumerate() {
                data[y * w + x] = v;
            }
        }
    }
    if params.flip_prob > 0.0 {
        let mut noise = rng::stream(params.seed, tag, 0);
        for v in &mut data {
            if noise.gen_bool(params.flip_prob) {
                *v = 1.0 - *v;
            }
        }
    }
    for v in &mut data {
        *v = (*v * 255.0).round() / 255.0;
    }
    Raster::from_vec(w as u32, h as u32, RasterKind::Confidence, data).expect("values lie in [0, 1]")
}

pub fn synth(params: &SynthParams) -> Result<Synthesized> {
    params.validate()?;
    let rects = place_rects(params)?;
    let gt = arrangement(&rects, params)?;
    Ok(Synthesized {
        corner_conf: degrade(&rasterize(&gt, PrimitiveKind::Corners), params, "synth.flip.corner"),
        edge_conf: degrade(&rasterize(&gt, PrimitiveKind::Edges), params, "synth.flip.edge"),
        region_ref: enclosed_mask(&gt),
        gt,
        rects,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CorruptionType {
    DropEdge,
    AddSpuriousEdge,
    AddSpuriousCorner,
}

impl CorruptionType {
    pub const ALL: [CorruptionType; 3] =
        [CorruptionType::DropEdge, CorruptionType::AddSpuriousEdge, CorruptionType::AddSpuriousCorner];
}

impl std::str::FromStr for CorruptionType {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "drop-edge" => Ok(CorruptionType::DropEdge),
            "add-spurious-edge" => Ok(CorruptionType::AddSpuriousEdge),
            "add-spurious-corner" => Ok(CorruptionType::AddSpuriousCorner),
            other => Err(Error::InvalidConfig(format!("unknown corruption type {other:?}"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CorruptionSpec {
    pub k: usize,
    pub types: Vec<CorruptionType>,
    pub seed: u64,
    /// Uniform corner jitter bound in pixels, applied before the edits.
    pub jitter: f64,
}

impl Default for CorruptionSpec {
    fn default() -> Self {
        Self {
            k: 1,
            types: CorruptionType::ALL.to_vec(),
            seed: 0,
            jitter: 0.0,
        }
    }
}

/// Generated coordinates lie on a 1/16 px grid, which the four-decimal
/// graph JSON represents exactly.
const GRID: f64 = 1.0 / 16.0;

fn on_grid(v: f64) -> f64 {
    (v / GRID).round() * GRID
}

/// Spurious corners keep at least this distance from every other corner.
pub const SPURIOUS_CLEARANCE: f64 = 8.0;
const SPURIOUS_ATTEMPTS: usize = 64;

/// One applied corruption and the action that undoes it.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Edit {
    pub kind: CorruptionType,
    pub inverse: Action,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Corrupted {
    pub initial: BuildingGraph,
    pub edits: Vec<Edit>,
}

impl Corrupted {
    /// Inverse actions in the order that restores the source graph.
    pub fn repair_plan(&self) -> Vec<Action> {
        self.edits.iter().rev().map(|e| e.inverse).collect()
    }
}

/// Applies `k` edits. Only original edges are dropped and only non-original
/// edges are added, so no edit undoes an earlier one.
pub fn corrupt(gt: &BuildingGraph, spec: &CorruptionSpec) -> Result<Corrupted> {
    if spec.types.is_empty() && spec.k > 0 {
        return Err(Error::InvalidConfig("no corruption types allowed".into()));
    }
    if !(spec.jitter.is_finite() && spec.jitter >= 0.0) {
        return Err(Error::InvalidConfig(format!("jitter {} must be finite and >= 0", spec.jitter)));
    }
    let canvas = gt.canvas();
    let mut graph = gt.clone();
    if spec.jitter > 0.0 {
        let mut rng = rng::stream(spec.seed, "corrupt.jitter", 0);
        for c in gt.corners() {
            let dx = rng.gen_range(-spec.jitter..=spec.jitter);
            let dy = rng.gen_range(-spec.jitter..=spec.jitter);
            let p = Point::new(
                on_grid(c.pos.x + dx).clamp(0.0, canvas.width as f64 - GRID),
                on_grid(c.pos.y + dy).clamp(0.0, canvas.height as f64 - GRID),
            );
            graph.set_position(c.id, p)?;
        }
    }
    let types: BTreeSet<CorruptionType> = spec.types.iter().copied().collect();
    let mut edits = Vec::with_capacity(spec.k);

    for i in 0..spec.k {
        let mut rng = rng::stream(spec.seed, "corrupt", i as u64);
        let mut options: Vec<(CorruptionType, Vec<Action>)> = Vec::new();
        for &t in &types {
            let forward: Vec<Action> = match t {
                CorruptionType::DropEdge => graph
                    .edges()
                    .iter()
                    .filter(|e| gt.has_edge(e.a(), e.b()))
                    .map(|&edge| Action::RemoveEdge { edge })
                    .collect(),
                CorruptionType::AddSpuriousEdge => {
                    let corners = graph.corners();
                    let mut out = Vec::new();
                    for (j, a) in corners.iter().enumerate() {
                        for b in &corners[j + 1..] {
                            if !graph.has_edge(a.id, b.id) && !gt.has_edge(a.id, b.id) {
                                out.push(Action::AddEdge { a: a.id, b: b.id });
                            }
                        }
                    }
                    out
                }
                // the position is drawn only once this type is chosen
                CorruptionType::AddSpuriousCorner => Vec::new(),
            };
            if !forward.is_empty() || (t == CorruptionType::AddSpuriousCorner && !graph.is_empty()) {
                options.push((t, forward));
            }
        }
        if options.is_empty() {
            return Err(Error::Exhausted { applied: i, requested: spec.k });
        }
        let (kind, forward) = &options[rng.gen_range(0..options.len())];
        let inverse = match kind {
            CorruptionType::DropEdge | CorruptionType::AddSpuriousEdge => {
                let action = forward[rng.gen_range(0..forward.len())];
                graph = crate::actions::apply(&graph, &action)?;
                match action {
                    Action::RemoveEdge { edge } => Action::AddEdge { a: edge.a(), b: edge.b() },
                    Action::AddEdge { a, b } => Action::RemoveEdge {
                        edge: Edge::new(a, b).expect("distinct corners"),
                    },
                    _ => unreachable!("only edge edits are listed"),
                }
            }
            CorruptionType::AddSpuriousCorner => match spurious_corner(&mut graph, &mut rng)? {
                Some(corner) => Action::RemoveCorner { corner },
                None => return Err(Error::Exhausted { applied: i, requested: spec.k }),
            },
        };
        let edit = Edit { kind: *kind, inverse };
        edits.push(edit);
    }
    Ok(Corrupted { initial: graph, edits })
}

fn spurious_corner(graph: &mut BuildingGraph, rng: &mut rng::StreamRng) -> Result<Option<CornerId>> {
    let canvas = graph.canvas();
    let anchor = graph.corners()[rng.gen_range(0..graph.corners().len())].id;
    for _ in 0..SPURIOUS_ATTEMPTS {
        let p = Point::new(
            on_grid(rng.gen_range(4.0..canvas.width as f64 - 4.0)),
            on_grid(rng.gen_range(4.0..canvas.height as f64 - 4.0)),
        );
        if graph.corners().iter().all(|c| c.pos.distance(p) > SPURIOUS_CLEARANCE) {
            let id = graph.add_corner(p)?;
            graph.add_edge(anchor, id)?;
            return Ok(Some(id));
        }
    }
    Ok(None)
}

/// Corpus case metadata written to `meta.json`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CaseMeta {
    pub case: String,
    pub synth: SynthParams,
    pub corruption: CorruptionSpec,
    pub rects: Vec<Rect>,
    pub edits: Vec<Edit>,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::actions::apply;
    use crate::geometry::{extract_regions, junctions};

    fn params(rect_count: usize, seed: u64) -> SynthParams {
        SynthParams { rect_count, seed, ..SynthParams::default() }
    }

    #[test]
    fn one_rectangle() {
        let s = synth(&params(1, 3)).unwrap();
        assert_eq!(s.gt.corners().len(), 4);
        assert_eq!(s.gt.edges().len(), 4);
        assert_eq!(extract_regions(&s.gt).regions.len(), 1);
    }

    #[test]
    fn flush_l_has_two_t_and_five_l_junctions() {
        let p = SynthParams::default();
        let rects = [Rect { x0: 0, y0: 0, x1: 4, y1: 4 }, Rect { x0: 4, y0: 0, x1: 6, y1: 2 }];
        let g = arrangement(&rects, &p).unwrap();
        assert_eq!(g.corners().len(), 7);
        assert_eq!(g.edges().len(), 8);
        let degrees: Vec<usize> = junctions(&g).iter().map(|j| j.degree()).collect();
        assert_eq!(degrees.iter().filter(|&&d| d == 3).count(), 2);
        assert_eq!(degrees.iter().filter(|&&d| d == 2).count(), 5);
        assert_eq!(extract_regions(&g).regions.len(), 2);
    }

    #[test]
    fn rectangle_unions_are_valid() {
        for seed in 0..40 {
            for n in 1..=4 {
                let s = synth(&params(n, seed)).unwrap();
                let regions = extract_regions(&s.gt);
                assert!(!regions.has_crossings());
                assert_eq!(regions.regions.len(), n);
                for c in s.gt.corners() {
                    for d in s.gt.corners() {
                        assert!(c.id == d.id || c.pos.distance(d.pos) >= 16.0);
                    }
                }
            }
        }
    }

    #[test]
    fn clean_rasters_equal_rasterization() {
        let s = synth(&params(3, 9)).unwrap();
        let corners = rasterize(&s.gt, PrimitiveKind::Corners).to_raster();
        assert_eq!(s.corner_conf.data(), corners.data());
        let edges = rasterize(&s.gt, PrimitiveKind::Edges).to_raster();
        assert_eq!(s.edge_conf.data(), edges.data());
    }

    #[test]
    fn degradation_is_seeded() {
        let p = SynthParams { blur_radius: 2, flip_prob: 0.05, ..params(2, 5) };
        let a = synth(&p).unwrap();
        assert_eq!(a, synth(&p).unwrap());
        assert!(a.edge_conf.data().iter().all(|&v| (v * 255.0).fract() == 0.0));
        assert_ne!(a.edge_conf.data(), rasterize(&a.gt, PrimitiveKind::Edges).to_raster().data());
    }

    #[test]
    fn infeasible_params() {
        let tiny = SynthParams { canvas: Canvas::new(40, 40), ..params(1, 0) };
        assert!(matches!(synth(&tiny), Err(Error::InfeasibleParams(_))));
        assert!(synth(&SynthParams { grid_step: 4, ..params(1, 0) }).is_err());
        assert!(synth(&params(5, 0)).is_err());
    }

    #[test]
    fn zero_edits_is_identity() {
        let gt = synth(&params(2, 1)).unwrap().gt;
        let c = corrupt(&gt, &CorruptionSpec { k: 0, ..CorruptionSpec::default() }).unwrap();
        assert_eq!(c.initial, gt);
    }

    #[test]
    fn drop_edge_on_square() {
        let gt = synth(&params(1, 0)).unwrap().gt;
        let spec = CorruptionSpec {
            k: 1,
            types: vec![CorruptionType::DropEdge],
            ..CorruptionSpec::default()
        };
        let c = corrupt(&gt, &spec).unwrap();
        assert_eq!((c.initial.corners().len(), c.initial.edges().len()), (4, 3));
        assert!(matches!(c.edits[0].inverse, Action::AddEdge { .. }));
    }

    #[test]
    fn inverses_restore_gt() {
        for seed in 0..30 {
            let gt = synth(&params(1 + seed as usize % 4, seed)).unwrap().gt;
            let spec = CorruptionSpec { k: 3, seed, ..CorruptionSpec::default() };
            let c = corrupt(&gt, &spec).unwrap();
            let mut g = c.initial.clone();
            for a in c.repair_plan() {
                g = apply(&g, &a).unwrap();
            }
            assert!(g.same_as(&gt));
        }
    }

    #[test]
    fn corrupted_coordinates_survive_json() {
        for seed in 0..20 {
            let gt = synth(&params(2, seed)).unwrap().gt;
            let spec = CorruptionSpec { k: 3, seed, jitter: 1.5, ..CorruptionSpec::default() };
            let c = corrupt(&gt, &spec).unwrap();
            let back = crate::io::graph_from_json(&crate::io::graph_to_json(&c.initial)).unwrap();
            assert_eq!(back, c.initial);
        }
    }

    #[test]
    fn exhausted_when_no_edges_left() {
        let gt = synth(&params(1, 0)).unwrap().gt;
        let spec = CorruptionSpec {
            k: 5,
            types: vec![CorruptionType::DropEdge],
            ..CorruptionSpec::default()
        };
        assert!(matches!(corrupt(&gt, &spec), Err(Error::Exhausted { applied: 4, requested: 5 })));
    }
}

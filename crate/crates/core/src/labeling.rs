//! Classification labels derived from ground truth.
//!
//! Corners are matched greedily by global distance order (at most
//! [`MATCH_RADIUS`] px, one-to-one). A junction is correct when its corner is
//! matched, the degrees agree, and the incident directions pair up within
//! [`ANGLE_TOLERANCE_DEG`]. An edge is correct when both endpoints are
//! matched and their images are connected in the ground truth.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::geometry::{
    for_each_corner_pixel, for_each_edge_pixel, junctions, BuildingGraph, CornerId, Edge, PrimitiveKind, Raster,
    RasterKind,
};

pub const MATCH_RADIUS: f64 = 7.0;
pub const ANGLE_TOLERANCE_DEG: f64 = 10.0;
pub const HUBER_DELTA: f64 = 1.0;
pub const BACKGROUND_WEIGHT: f64 = 0.5;

/// One-to-one partial mapping from predicted to ground-truth corners.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct MatchResult {
    /// `pred id -> (gt id, distance)`
    pub pairs: BTreeMap<CornerId, (CornerId, f64)>,
}

impl MatchResult {
    pub fn gt_of(&self, pred: CornerId) -> Option<CornerId> {
        self.pairs.get(&pred).map(|&(g, _)| g)
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }
}

pub fn match_corners(pred: &BuildingGraph, gt: &BuildingGraph) -> MatchResult {
    match_corners_within(pred, gt, MATCH_RADIUS)
}

/// Greedy matching: repeatedly fix the closest unmatched pair within
/// `radius`, ties broken by `(distance, pred id, gt id)`.
pub fn match_corners_within(pred: &BuildingGraph, gt: &BuildingGraph, radius: f64) -> MatchResult {
    let mut candidates: Vec<(f64, CornerId, CornerId)> = Vec::new();
    for p in pred.corners() {
        for g in gt.corners() {
            let d = p.pos.distance(g.pos);
            if d <= radius {
                candidates.push((d, p.id, g.id));
            }
        }
    }
    candidates.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));

    let mut pairs = BTreeMap::new();
    let mut used_gt = std::collections::BTreeSet::new();
    for (d, p, g) in candidates {
        if pairs.contains_key(&p) || used_gt.contains(&g) {
            continue;
        }
        pairs.insert(p, (g, d));
        used_gt.insert(g);
    }
    MatchResult { pairs }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Correct,
    Incorrect,
}

impl Verdict {
    pub fn from_bool(ok: bool) -> Self {
        if ok {
            Verdict::Correct
        } else {
            Verdict::Incorrect
        }
    }

    pub fn is_correct(self) -> bool {
        self == Verdict::Correct
    }

    /// +1 / -1, the per-primitive reward.
    pub fn reward(self) -> f64 {
        match self {
            Verdict::Correct => 1.0,
            Verdict::Incorrect => -1.0,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct LabelSet {
    pub junctions: BTreeMap<CornerId, Verdict>,
    #[serde(with = "edge_map")]
    pub edges: BTreeMap<Edge, Verdict>,
}

impl LabelSet {
    pub fn all_correct(&self) -> bool {
        self.junctions.values().chain(self.edges.values()).all(|v| v.is_correct())
    }

    pub fn covers(&self, graph: &BuildingGraph) -> bool {
        graph.corners().iter().all(|c| self.junctions.contains_key(&c.id))
            && graph.edges().iter().all(|e| self.edges.contains_key(e))
    }
}

/// JSON object keys must be strings; edges are written as a list instead.
mod edge_map {
    use super::*;
    use serde::{Deserializer, Serializer};

    pub fn serialize<S: Serializer>(map: &BTreeMap<Edge, Verdict>, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_seq(map.iter())
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<BTreeMap<Edge, Verdict>, D::Error> {
        let items: Vec<(Edge, Verdict)> = Vec::deserialize(d)?;
        Ok(items.into_iter().collect())
    }
}

fn circular_gap(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(360.0);
    d.min(360.0 - d)
}

/// Equal counts and a greedy nearest-first pairing with every pair within
/// `tolerance` degrees.
pub fn directions_agree(pred: &[f64], gt: &[f64], tolerance: f64) -> bool {
    if pred.len() != gt.len() {
        return false;
    }
    let mut gaps: Vec<(f64, usize, usize)> = Vec::with_capacity(pred.len() * gt.len());
    for (i, &p) in pred.iter().enumerate() {
        for (j, &g) in gt.iter().enumerate() {
            gaps.push((circular_gap(p, g), i, j));
        }
    }
    gaps.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));
    let mut used_p = vec![false; pred.len()];
    let mut used_g = vec![false; gt.len()];
    let mut paired = 0;
    for (gap, i, j) in gaps {
        if used_p[i] || used_g[j] {
            continue;
        }
        if gap > tolerance {
            return false;
        }
        used_p[i] = true;
        used_g[j] = true;
        paired += 1;
    }
    paired == pred.len()
}

pub fn label_graph(pred: &BuildingGraph, gt: &BuildingGraph) -> LabelSet {
    let matching = match_corners(pred, gt);
    label_with_matching(pred, gt, &matching)
}

pub fn label_with_matching(pred: &BuildingGraph, gt: &BuildingGraph, matching: &MatchResult) -> LabelSet {
    let gt_junctions: BTreeMap<CornerId, Vec<f64>> =
        junctions(gt).into_iter().map(|j| (j.corner, j.directions)).collect();

    let junction_verdicts = junctions(pred)
        .into_iter()
        .map(|j| {
            let ok = matching
                .gt_of(j.corner)
                .and_then(|g| gt_junctions.get(&g))
                .is_some_and(|gdirs| directions_agree(&j.directions, gdirs, ANGLE_TOLERANCE_DEG));
            (j.corner, Verdict::from_bool(ok))
        })
        .collect();

    let edge_verdicts = pred
        .edges()
        .iter()
        .map(|&e| {
            let ok = match (matching.gt_of(e.a()), matching.gt_of(e.b())) {
                (Some(ga), Some(gb)) => gt.has_edge(ga, gb),
                _ => false,
            };
            (e, Verdict::from_bool(ok))
        })
        .collect();

    LabelSet {
        junctions: junction_verdicts,
        edges: edge_verdicts,
    }
}

/// +1 over correct primitives, -1 over incorrect ones, 0 elsewhere. Where a
/// correct and an incorrect primitive overlap, -1 wins.
pub fn pixel_targets(graph: &BuildingGraph, labels: &LabelSet, kind: PrimitiveKind) -> Raster {
    let canvas = graph.canvas();
    let mut out = Raster::filled(canvas.width, canvas.height, RasterKind::Target, 0.0);
    let paint = |verdict: Verdict, out: &mut Raster, x: u32, y: u32| match verdict {
        Verdict::Incorrect => out.set(x, y, -1.0),
        Verdict::Correct => {
            if out.get(x, y) == 0.0 {
                out.set(x, y, 1.0);
            }
        }
    };
    match kind {
        PrimitiveKind::Corners => {
            for c in graph.corners() {
                let v = labels.junctions.get(&c.id).copied().unwrap_or(Verdict::Incorrect);
                for_each_corner_pixel(canvas, c.pos, |x, y| paint(v, &mut out, x, y));
            }
        }
        PrimitiveKind::Edges => {
            for &e in graph.edges() {
                let v = labels.edges.get(&e).copied().unwrap_or(Verdict::Incorrect);
                let (a, b) = graph.segment(e);
                for_each_edge_pixel(canvas, a, b, |x, y| paint(v, &mut out, x, y));
            }
        }
    }
    out
}

pub fn huber(residual: f64) -> f64 {
    let r = residual.abs();
    if r <= HUBER_DELTA {
        0.5 * r * r
    } else {
        HUBER_DELTA * (r - 0.5 * HUBER_DELTA)
    }
}

/// Weighted mean pixel Huber loss; background pixels (target 0) carry half
/// weight. The mean divides by the total weight.
pub fn huber_loss(pred: &Raster, target: &Raster) -> Result<f64> {
    pred.ensure_same_dims(target.dims())?;
    let (mut num, mut den) = (0.0, 0.0);
    for (&p, &t) in pred.data().iter().zip(target.data()) {
        let w = if t == 0.0 { BACKGROUND_WEIGHT } else { 1.0 };
        num += w * huber(p - t);
        den += w;
    }
    Ok(if den == 0.0 { 0.0 } else { num / den })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Canvas;

    fn graph(points: &[(f64, f64)], edges: &[(u32, u32)]) -> BuildingGraph {
        BuildingGraph::from_points(Canvas::default(), points, edges).unwrap()
    }

    #[test]
    fn identical_graphs_match_perfectly() {
        let g = graph(&[(10.0, 10.0), (50.0, 10.0), (50.0, 50.0)], &[(0, 1), (1, 2)]);
        let m = match_corners(&g, &g);
        assert_eq!(m.len(), 3);
        assert!(m.pairs.values().all(|&(_, d)| d == 0.0));
        assert!(label_graph(&g, &g).all_correct());
    }

    #[test]
    fn match_radius_is_seven() {
        let gt = graph(&[(100.0, 100.0)], &[]);
        assert!(match_corners(&graph(&[(107.5, 100.0)], &[]), &gt).is_empty());
        assert_eq!(match_corners(&graph(&[(107.0, 100.0)], &[]), &gt).len(), 1);
    }

    #[test]
    fn greedy_matching_is_injective() {
        let gt = graph(&[(100.0, 100.0)], &[]);
        let pred = graph(&[(103.0, 100.0), (100.0, 102.0)], &[]);
        let m = match_corners(&pred, &gt);
        assert_eq!(m.len(), 1);
        assert_eq!(m.gt_of(1), Some(0));
        assert_eq!(m.gt_of(0), None);
    }

    #[test]
    fn directions_within_tolerance() {
        assert!(directions_agree(&[0.0, 90.0], &[8.0, 95.0], 10.0));
        assert!(directions_agree(&[355.0, 90.0], &[3.0, 95.0], 10.0));
        assert!(!directions_agree(&[0.0, 90.0], &[11.0, 90.0], 10.0));
        assert!(!directions_agree(&[0.0, 90.0], &[0.0, 90.0, 180.0], 10.0));
        assert!(directions_agree(&[], &[], 10.0));
    }

    #[test]
    fn junction_with_small_angle_error_is_correct() {
        // corner at (100,100) with arms at 0 and 90 degrees vs GT arms at 8 and 95
        let r = 50.0;
        let arm = |deg: f64| {
            let t = f64::to_radians(deg);
            (100.0 + r * t.cos(), 100.0 + r * t.sin())
        };
        let pred = graph(&[(100.0, 100.0), arm(0.0), arm(90.0)], &[(0, 1), (0, 2)]);
        let gt = graph(&[(100.0, 100.0), arm(8.0), arm(95.0)], &[(0, 1), (0, 2)]);
        let labels = label_graph(&pred, &gt);
        assert!(labels.junctions[&0].is_correct());
    }

    #[test]
    fn edge_needs_gt_connection() {
        let gt = graph(&[(10.0, 10.0), (50.0, 10.0), (50.0, 50.0)], &[(0, 1), (1, 2)]);
        let pred = graph(&[(10.0, 10.0), (50.0, 10.0), (50.0, 50.0)], &[(0, 1), (0, 2)]);
        let labels = label_graph(&pred, &gt);
        assert!(labels.edges[&Edge::new(0, 1).unwrap()].is_correct());
        assert!(!labels.edges[&Edge::new(0, 2).unwrap()].is_correct());
        assert!(labels.covers(&pred));
    }

    #[test]
    fn degree_zero_needs_degree_zero_gt() {
        let gt = graph(&[(10.0, 10.0), (60.0, 60.0)], &[]);
        let pred = graph(&[(10.0, 10.0), (60.0, 60.0), (90.0, 90.0)], &[(1, 2)]);
        let labels = label_graph(&pred, &gt);
        assert!(labels.junctions[&0].is_correct());
        assert!(!labels.junctions[&1].is_correct());
        assert!(!labels.junctions[&2].is_correct());
    }

    #[test]
    fn targets_follow_labels() {
        let g = graph(&[(10.0, 10.0), (50.0, 10.0), (50.0, 50.0), (10.0, 50.0)], &[(0, 1), (1, 2), (2, 3), (3, 0)]);
        let good = label_graph(&g, &g);
        let t = pixel_targets(&g, &good, PrimitiveKind::Edges);
        let band = crate::geometry::rasterize(&g, PrimitiveKind::Edges);
        for (v, &on) in t.data().iter().zip(band.bits()) {
            assert_eq!(*v, if on { 1.0 } else { 0.0 });
        }
        let mut bad = good.clone();
        bad.junctions.values_mut().for_each(|v| *v = Verdict::Incorrect);
        let t = pixel_targets(&g, &bad, PrimitiveKind::Corners);
        let disks = crate::geometry::rasterize(&g, PrimitiveKind::Corners);
        for (v, &on) in t.data().iter().zip(disks.bits()) {
            assert_eq!(*v, if on { -1.0 } else { 0.0 });
        }
    }

    #[test]
    fn incorrect_wins_on_overlap() {
        let g = graph(&[(10.0, 30.0), (50.0, 30.0), (30.0, 10.0), (30.0, 50.0)], &[(0, 1), (2, 3)]);
        let mut labels = label_graph(&g, &g);
        labels.edges.insert(Edge::new(2, 3).unwrap(), Verdict::Incorrect);
        let t = pixel_targets(&g, &labels, PrimitiveKind::Edges);
        // pixels around the crossing at (30, 30)
        for (x, y) in [(29, 29), (30, 29), (29, 30), (30, 30)] {
            assert_eq!(t.get(x, y), -1.0);
        }
        assert_eq!(t.get(12, 29), 1.0);
        assert_eq!(t.get(29, 12), -1.0);
    }

    #[test]
    fn huber_point_values() {
        let one = |v: f64, kind| Raster::from_vec(1, 1, kind, vec![v]).unwrap();
        let t = one(1.0, RasterKind::Target);
        assert_eq!(huber_loss(&one(1.0, RasterKind::Score), &t).unwrap(), 0.0);
        assert_eq!(huber_loss(&one(0.0, RasterKind::Score), &t).unwrap(), 0.5);
        assert_eq!(huber_loss(&one(-1.0, RasterKind::Score), &t).unwrap(), 1.5);
    }

    #[test]
    fn background_half_weight() {
        let pred = Raster::from_vec(2, 1, RasterKind::Score, vec![1.0, 0.0]).unwrap();
        let target = Raster::from_vec(2, 1, RasterKind::Target, vec![0.0, 1.0]).unwrap();
        // (0.5 * 0.5 + 1.0 * 0.5) / 1.5
        assert!((huber_loss(&pred, &target).unwrap() - 0.5).abs() < 1e-15);
    }
}

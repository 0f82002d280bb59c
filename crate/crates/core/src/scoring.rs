//! Weighted primitive scores and the scorers that produce them.
//!
//! A score is `w_j * sum(junction) + w_e * sum(edge) + w_r * region`, with
//! per-primitive scores in `[-1, 1]` and the region score in `[0, 1]`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{
    enclosed_window, for_each_edge_pixel, iou_from_counts, BuildingGraph, CornerId, Edge, Mask, Raster, RowCounts,
};
use crate::labeling::label_graph;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Weights {
    pub junction: f64,
    pub edge: f64,
    pub region: f64,
}

impl Weights {
    /// Setting used for Per-edge and Conv-MPN initial reconstructions.
    pub const EDGE_HEAVY: Weights = Weights {
        junction: 1.0,
        edge: 2.0,
        region: 50.0,
    };
    /// Setting used for Nauata et al. and Scratch initial reconstructions.
    pub const BALANCED: Weights = Weights {
        junction: 1.0,
        edge: 1.0,
        region: 50.0,
    };

    pub fn new(junction: f64, edge: f64, region: f64) -> Result<Self> {
        let w = Weights { junction, edge, region };
        w.validate()?;
        Ok(w)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("junction", self.junction), ("edge", self.edge), ("region", self.region)] {
            if !v.is_finite() || v < 0.0 {
                return Err(Error::InvalidWeights(format!("{name} weight {v} must be finite and >= 0")));
            }
        }
        Ok(())
    }

    pub fn scaled(&self, factor: f64) -> Weights {
        Weights {
            junction: self.junction * factor,
            edge: self.edge * factor,
            region: self.region * factor,
        }
    }
}

impl Default for Weights {
    fn default() -> Self {
        Weights::EDGE_HEAVY
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScoreBreakdown {
    pub junctions: Vec<(CornerId, f64)>,
    pub edges: Vec<(Edge, f64)>,
    pub region: f64,
    pub total: f64,
}

impl ScoreBreakdown {
    pub fn new(junctions: Vec<(CornerId, f64)>, edges: Vec<(Edge, f64)>, region: f64, weights: &Weights) -> Self {
        let mut b = ScoreBreakdown {
            junctions,
            edges,
            region,
            total: 0.0,
        };
        b.total = total(&b, weights);
        b
    }

    pub fn junction_sum(&self) -> f64 {
        self.junctions.iter().map(|(_, s)| s).sum()
    }

    pub fn edge_sum(&self) -> f64 {
        self.edges.iter().map(|(_, s)| s).sum()
    }

    pub fn junction_score(&self, id: CornerId) -> Option<f64> {
        self.junctions.iter().find(|(c, _)| *c == id).map(|(_, s)| *s)
    }

    pub fn edge_score(&self, edge: Edge) -> Option<f64> {
        self.edges.iter().find(|(e, _)| *e == edge).map(|(_, s)| *s)
    }

    pub fn in_range(&self) -> bool {
        let unit = |s: &f64| (-1.0..=1.0).contains(s);
        self.junctions.iter().all(|(_, s)| unit(s))
            && self.edges.iter().all(|(_, s)| unit(s))
            && (0.0..=1.0).contains(&self.region)
    }
}

/// `w_j * sum(junction) + w_e * sum(edge) + w_r * region`.
pub fn total(breakdown: &ScoreBreakdown, weights: &Weights) -> f64 {
    weights.junction * breakdown.junction_sum() + weights.edge * breakdown.edge_sum() + weights.region * breakdown.region
}

/// A pure, deterministic primitive scorer.
pub trait Scorer: Sync {
    fn score(&self, graph: &BuildingGraph, weights: &Weights) -> ScoreBreakdown;
}

/// Region term: IoU between the graph's enclosed area and a reference mask.
fn region_iou(graph: &BuildingGraph, reference: &RowCounts) -> f64 {
    match enclosed_window(graph) {
        Some(win) => iou_from_counts(win.intersection_count(reference), win.count, reference.total()),
        None => iou_from_counts(0, 0, reference.total()),
    }
}

/// Ground-truth labels as rewards: +1 per correct junction or edge, -1 per
/// incorrect one, and the enclosed-area IoU against the ground truth.
#[derive(Clone, Debug)]
pub struct OracleScorer {
    gt: BuildingGraph,
    gt_region: RowCounts,
}

impl OracleScorer {
    pub fn new(gt: BuildingGraph) -> Self {
        let gt_region = RowCounts::new(&crate::geometry::enclosed_mask(&gt));
        Self { gt, gt_region }
    }

    pub fn gt(&self) -> &BuildingGraph {
        &self.gt
    }
}

impl Scorer for OracleScorer {
    fn score(&self, graph: &BuildingGraph, weights: &Weights) -> ScoreBreakdown {
        let labels = label_graph(graph, &self.gt);
        let junctions = labels.junctions.iter().map(|(&id, v)| (id, v.reward())).collect();
        let edges = labels.edges.iter().map(|(&e, v)| (e, v.reward())).collect();
        let region = region_iou(graph, &self.gt_region);
        ScoreBreakdown::new(junctions, edges, region, weights)
    }
}

pub fn oracle_score(graph: &BuildingGraph, gt: &BuildingGraph, weights: &Weights) -> ScoreBreakdown {
    OracleScorer::new(gt.clone()).score(graph, weights)
}

type Pooled = (Vec<(CornerId, f64)>, Vec<(Edge, f64)>);

/// Pools per-pixel values over primitives: the value at the pixel containing
/// each corner, the mean over each edge's band.
fn pool(graph: &BuildingGraph, corner_map: &Raster, edge_map: &Raster, map_value: impl Fn(f64) -> f64) -> Pooled {
    let canvas = graph.canvas();
    let junctions = graph
        .corners()
        .iter()
        .map(|c| {
            let x = (c.pos.x.floor() as u32).min(canvas.width - 1);
            let y = (c.pos.y.floor() as u32).min(canvas.height - 1);
            (c.id, map_value(corner_map.get(x, y)))
        })
        .collect();
    let edges = graph
        .edges()
        .iter()
        .map(|&e| {
            let (a, b) = graph.segment(e);
            let (mut sum, mut n) = (0.0, 0usize);
            for_each_edge_pixel(canvas, a, b, |x, y| {
                sum += edge_map.get(x, y);
                n += 1;
            });
            let mean = if n == 0 { 0.0 } else { sum / n as f64 };
            (e, map_value(mean))
        })
        .collect();
    (junctions, edges)
}

fn check_dims(graph: &BuildingGraph, rasters: &[(u32, u32)]) -> Result<()> {
    let canvas = (graph.canvas().width, graph.canvas().height);
    for &dims in rasters {
        if dims != canvas {
            return Err(Error::DimensionMismatch { left: canvas, right: dims });
        }
    }
    Ok(())
}

/// Heuristic scorer pooling corner/edge confidence maps, with each pooled
/// confidence `c` mapped to `2c - 1`.
#[derive(Clone, Debug)]
pub struct ConfidenceScorer {
    corner_conf: Raster,
    edge_conf: Raster,
    region_ref: RowCounts,
}

impl ConfidenceScorer {
    pub fn new(corner_conf: Raster, edge_conf: Raster, region_ref: Mask) -> Result<Self> {
        corner_conf.ensure_same_dims(edge_conf.dims())?;
        corner_conf.ensure_same_dims(region_ref.dims())?;
        Ok(Self {
            corner_conf,
            edge_conf,
            region_ref: RowCounts::new(&region_ref),
        })
    }

    pub fn score_checked(&self, graph: &BuildingGraph, weights: &Weights) -> Result<ScoreBreakdown> {
        check_dims(graph, &[self.corner_conf.dims()])?;
        Ok(self.score(graph, weights))
    }
}

impl Scorer for ConfidenceScorer {
    fn score(&self, graph: &BuildingGraph, weights: &Weights) -> ScoreBreakdown {
        let (junctions, edges) = pool(graph, &self.corner_conf, &self.edge_conf, |c| 2.0 * c - 1.0);
        let region = region_iou(graph, &self.region_ref);
        ScoreBreakdown::new(junctions, edges, region, weights)
    }
}

pub fn confidence_score(
    graph: &BuildingGraph,
    corner_conf: &Raster,
    edge_conf: &Raster,
    region_ref: &Mask,
    weights: &Weights,
) -> Result<ScoreBreakdown> {
    check_dims(graph, &[corner_conf.dims(), edge_conf.dims(), region_ref.dims()])?;
    ConfidenceScorer::new(corner_conf.clone(), edge_conf.clone(), region_ref.clone())?.score_checked(graph, weights)
}

/// Pools precomputed per-pixel classification scores in `[-1, 1]` (for
/// instance written by an external model) without any remapping.
#[derive(Clone, Debug)]
pub struct PixelScoreScorer {
    corner_scores: Raster,
    edge_scores: Raster,
    region_ref: RowCounts,
}

impl PixelScoreScorer {
    pub fn new(corner_scores: Raster, edge_scores: Raster, region_ref: Mask) -> Result<Self> {
        corner_scores.ensure_same_dims(edge_scores.dims())?;
        corner_scores.ensure_same_dims(region_ref.dims())?;
        Ok(Self {
            corner_scores,
            edge_scores,
            region_ref: RowCounts::new(&region_ref),
        })
    }
}

impl Scorer for PixelScoreScorer {
    fn score(&self, graph: &BuildingGraph, weights: &Weights) -> ScoreBreakdown {
        let (junctions, edges) = pool(graph, &self.corner_scores, &self.edge_scores, |s| s);
        let region = region_iou(graph, &self.region_ref);
        ScoreBreakdown::new(junctions, edges, region, weights)
    }
}

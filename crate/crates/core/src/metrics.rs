//! Corner, edge and region precision / recall / f1.

use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{extract_regions, polygon_pixels, BuildingGraph};
use crate::labeling::match_corners_within;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricConfig {
    pub corner_tol: f64,
    pub region_iou_tol: f64,
}

impl Default for MetricConfig {
    fn default() -> Self {
        Self {
            corner_tol: 7.0,
            region_iou_tol: 0.7,
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct LevelReport {
    pub tp: usize,
    pub predicted: usize,
    pub actual: usize,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

impl LevelReport {
    pub fn from_counts(tp: usize, predicted: usize, actual: usize) -> Self {
        let ratio = |n: usize, d: usize| if d == 0 { 0.0 } else { n as f64 / d as f64 };
        let (precision, recall) = (ratio(tp, predicted), ratio(tp, actual));
        Self {
            tp,
            predicted,
            actual,
            precision,
            recall,
            f1: f1(precision, recall),
        }
    }
}

pub fn f1(precision: f64, recall: f64) -> f64 {
    if precision + recall > 0.0 {
        2.0 * precision * recall / (precision + recall)
    } else {
        0.0
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub corner: LevelReport,
    pub edge: LevelReport,
    pub region: LevelReport,
}

impl MetricReport {
    pub fn levels(&self) -> [(&'static str, &LevelReport); 3] {
        [("corner", &self.corner), ("edge", &self.edge), ("region", &self.region)]
    }

    /// `level.field value` lines, e.g. `edge.f1 0.933333`.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for (name, l) in self.levels() {
            let _ = writeln!(out, "{name}.tp {}", l.tp);
            let _ = writeln!(out, "{name}.predicted {}", l.predicted);
            let _ = writeln!(out, "{name}.actual {}", l.actual);
            let _ = writeln!(out, "{name}.precision {:.6}", l.precision);
            let _ = writeln!(out, "{name}.recall {:.6}", l.recall);
            let _ = writeln!(out, "{name}.f1 {:.6}", l.f1);
        }
        out
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Averaging {
    /// Sum counts over the corpus, then compute rates.
    #[default]
    Micro,
    /// Mean of the per-pair rates; counts are still summed.
    Macro,
}

pub fn evaluate(pred: &BuildingGraph, gt: &BuildingGraph, config: &MetricConfig) -> Result<MetricReport> {
    if pred.canvas() != gt.canvas() {
        let (a, b) = (pred.canvas(), gt.canvas());
        return Err(Error::DimensionMismatch {
            left: (a.width, a.height),
            right: (b.width, b.height),
        });
    }
    let matching = match_corners_within(pred, gt, config.corner_tol);
    let corner = LevelReport::from_counts(matching.len(), pred.corners().len(), gt.corners().len());

    let edge_tp = pred
        .edges()
        .iter()
        .filter(|e| match (matching.gt_of(e.a()), matching.gt_of(e.b())) {
            (Some(a), Some(b)) => gt.has_edge(a, b),
            _ => false,
        })
        .count();
    let edge = LevelReport::from_counts(edge_tp, pred.edges().len(), gt.edges().len());

    let pred_fills = region_fills(pred);
    let gt_fills = region_fills(gt);
    let region_tp = match_regions(&pred_fills, &gt_fills, config.region_iou_tol);
    let region = LevelReport::from_counts(region_tp, pred_fills.len(), gt_fills.len());

    Ok(MetricReport { corner, edge, region })
}

fn region_fills(graph: &BuildingGraph) -> Vec<Vec<u32>> {
    extract_regions(graph)
        .regions
        .iter()
        .map(|r| polygon_pixels(&r.polygon(graph), graph.canvas()))
        .collect()
}

/// Size of the intersection of two sorted index lists.
fn sorted_intersection(a: &[u32], b: &[u32]) -> usize {
    let (mut i, mut j, mut n) = (0, 0, 0);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                n += 1;
                i += 1;
                j += 1;
            }
        }
    }
    n
}

/// Injective matching by descending IoU; returns the number of pairs at or
/// above `tol`.
fn match_regions(pred: &[Vec<u32>], gt: &[Vec<u32>], tol: f64) -> usize {
    let mut pairs: Vec<(f64, usize, usize)> = Vec::new();
    for (i, p) in pred.iter().enumerate() {
        for (j, g) in gt.iter().enumerate() {
            let inter = sorted_intersection(p, g);
            let union = p.len() + g.len() - inter;
            let iou = if union == 0 { 0.0 } else { inter as f64 / union as f64 };
            if iou >= tol {
                pairs.push((iou, i, j));
            }
        }
    }
    pairs.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));
    let mut used_p = vec![false; pred.len()];
    let mut used_g = vec![false; gt.len()];
    let mut tp = 0;
    for (_, i, j) in pairs {
        if !used_p[i] && !used_g[j] {
            used_p[i] = true;
            used_g[j] = true;
            tp += 1;
        }
    }
    tp
}

pub fn evaluate_corpus(
    pairs: &[(BuildingGraph, BuildingGraph)],
    config: &MetricConfig,
    averaging: Averaging,
) -> Result<MetricReport> {
    if pairs.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    let reports: Vec<MetricReport> = pairs
        .par_iter()
        .map(|(pred, gt)| evaluate(pred, gt, config))
        .collect::<Result<_>>()?;
    Ok(aggregate(&reports, averaging))
}

pub fn aggregate(reports: &[MetricReport], averaging: Averaging) -> MetricReport {
    let level = |pick: fn(&MetricReport) -> &LevelReport| {
        let sum = |f: fn(&LevelReport) -> usize| reports.iter().map(|r| f(pick(r))).sum::<usize>();
        let counts = LevelReport::from_counts(sum(|l| l.tp), sum(|l| l.predicted), sum(|l| l.actual));
        match averaging {
            Averaging::Micro => counts,
            Averaging::Macro => {
                let n = reports.len().max(1) as f64;
                let mean = |f: fn(&LevelReport) -> f64| reports.iter().map(|r| f(pick(r))).sum::<f64>() / n;
                LevelReport {
                    precision: mean(|l| l.precision),
                    recall: mean(|l| l.recall),
                    f1: mean(|l| l.f1),
                    ..counts
                }
            }
        }
    };
    MetricReport {
        corner: level(|r| &r.corner),
        edge: level(|r| &r.edge),
        region: level(|r| &r.region),
    }
}

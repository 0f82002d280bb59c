//! Explore-and-classify refinement of planar building graphs.
//!
//! A building is a planar graph of corners and straight edges on a fixed
//! pixel canvas. Reconstruction quality is improved by repeatedly editing the
//! graph with a small set of heuristic actions and ranking the offspring with
//! a primitive-level score (junctions, edges and the union of regions).
//!
//! The crate is split along the pipeline:
//!
//! - [`geometry`]: the graph model, junctions, face tracing, rasterization.
//! - [`actions`]: the six graph-editing actions.
//! - [`labeling`]: ground-truth classification labels and the pixel loss.
//! - [`scoring`]: weighted score combination and the pluggable scorers.
//! - [`search`]: beam, SMC and greedy search plus training-time exploration.
//! - [`metrics`]: corner, edge and region f1.
//! - [`io`], [`synth`], [`render`]: file formats, synthetic data, SVG output.

pub mod actions;
pub mod error;
pub mod geometry;
pub mod io;
pub mod labeling;
pub mod metrics;
pub mod render;
pub mod rng;
pub mod scoring;
pub mod search;
pub mod synth;

pub use actions::{apply, enumerate_actions, sample_per_type, Action, ActionKind};
pub use error::{Error, Result};
pub use geometry::{
    enclosed_mask, extract_regions, junctions, mask_iou, rasterize, BuildingGraph, Canvas,
    CanonicalKey, Corner, CornerId, Edge, Junction, Mask, Point, PrimitiveKind, Raster,
    RasterKind, Region,
};
pub use labeling::{huber_loss, label_graph, match_corners, pixel_targets, LabelSet, MatchResult};
pub use metrics::{evaluate, evaluate_corpus, Averaging, MetricConfig, MetricReport};
pub use scoring::{
    confidence_score, oracle_score, ConfidenceScorer, OracleScorer, PixelScoreScorer,
    ScoreBreakdown, Scorer, Weights,
};
pub use search::{
    beam_search, explore_training, greedy_search, search, smc_search, ExploreConfig, ExploreMode,
    SearchConfig, SearchResult, Strategy,
};

//! The building-graph model and its geometric derivations.

mod graph;
mod junction;
mod raster;
mod region;

pub use graph::{BuildingGraph, Canvas, CanonicalKey, Corner, CornerId, Edge, Point, KEY_STEPS_PER_PIXEL};
pub use junction::{direction_degrees, junctions, Junction};
pub use raster::{
    enclosed_mask, mask_iou, polygon_mask, polygon_pixels, rasterize, Mask, PrimitiveKind, Raster, RasterKind,
    CORNER_RADIUS, EDGE_HALF_WIDTH,
};
pub(crate) use raster::{enclosed_window, RowCounts, for_each_corner_pixel, for_each_edge_pixel, iou_from_counts};
pub use region::{crossing_edges, extract_regions, segments_intersect, signed_area, Region, RegionExtraction};

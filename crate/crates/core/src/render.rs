//! SVG rendering of a graph with optional correctness coloring.

use std::fmt::Write as _;

use crate::geometry::BuildingGraph;
use crate::labeling::LabelSet;
use crate::scoring::ScoreBreakdown;

pub const CORRECT_COLOR: &str = "#2ca02c";
pub const INCORRECT_COLOR: &str = "#d62728";
pub const PLAIN_COLOR: &str = "#1f77b4";

#[derive(Clone, Copy, Debug)]
pub enum Overlay<'a> {
    Labels(&'a LabelSet),
    /// Colors by the sign of each primitive score.
    Scores(&'a ScoreBreakdown),
}

fn color(ok: Option<bool>) -> &'static str {
    match ok {
        Some(true) => CORRECT_COLOR,
        Some(false) => INCORRECT_COLOR,
        None => PLAIN_COLOR,
    }
}

pub fn render_svg(graph: &BuildingGraph, overlay: Option<Overlay<'_>>) -> String {
    let canvas = graph.canvas();
    let mut out = String::new();
    let _ = writeln!(
        out,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{w}\" height=\"{h}\" viewBox=\"0 0 {w} {h}\">",
        w = canvas.width,
        h = canvas.height
    );
    let _ = writeln!(out, "  <rect width=\"{}\" height=\"{}\" fill=\"white\"/>", canvas.width, canvas.height);
    for &e in graph.edges() {
        let ok = match overlay {
            Some(Overlay::Labels(l)) => l.edges.get(&e).map(|v| v.is_correct()),
            Some(Overlay::Scores(s)) => s.edge_score(e).map(|v| v >= 0.0),
            None => None,
        };
        let (a, b) = graph.segment(e);
        let _ = writeln!(
            out,
            "  <line x1=\"{:.4}\" y1=\"{:.4}\" x2=\"{:.4}\" y2=\"{:.4}\" stroke=\"{}\" stroke-width=\"2\"/>",
            a.x,
            a.y,
            b.x,
            b.y,
            color(ok)
        );
    }
    for c in graph.corners() {
        let ok = match overlay {
            Some(Overlay::Labels(l)) => l.junctions.get(&c.id).map(|v| v.is_correct()),
            Some(Overlay::Scores(s)) => s.junction_score(c.id).map(|v| v >= 0.0),
            None => None,
        };
        let _ = writeln!(
            out,
            "  <circle cx=\"{:.4}\" cy=\"{:.4}\" r=\"3\" fill=\"{}\"/>",
            c.pos.x,
            c.pos.y,
            color(ok)
        );
    }
    out.push_str("</svg>\n");
    out
}

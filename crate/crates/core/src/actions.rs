//! The six heuristic graph-editing actions.
//!
//! Three add primitives (an edge between existing corners, an orthogonal
//! edge towards another edge, a parallelogram completion) and three remove
//! them (an edge, a corner with its incident edges, a degree-2 corner whose
//! neighbors get joined).
//!
//! New corners within [`SNAP_RADIUS`] of an existing corner snap to it. An
//! action is invalid when it would change nothing, add an edge that already
//! exists, or place a corner off the canvas.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{BuildingGraph, CornerId, Edge, Point};

pub const SNAP_RADIUS: f64 = 3.0;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ActionKind {
    AddEdge,
    AddOrthogonal,
    AddParallelogram,
    RemoveEdge,
    RemoveCorner,
    DissolveDegree2,
}

impl ActionKind {
    pub const ALL: [ActionKind; 6] = [
        ActionKind::AddEdge,
        ActionKind::AddOrthogonal,
        ActionKind::AddParallelogram,
        ActionKind::RemoveEdge,
        ActionKind::RemoveCorner,
        ActionKind::DissolveDegree2,
    ];

    pub fn is_addition(self) -> bool {
        matches!(self, ActionKind::AddEdge | ActionKind::AddOrthogonal | ActionKind::AddParallelogram)
    }
}

/// One parameterized edit. Parameters are ids in the graph it applies to.
/// The derived ordering is (kind, parameters), which is the enumeration order.
/// Unordered parameter pairs (`AddEdge` endpoints, parallelogram edges) are
/// only valid in ascending order, so every edit has a single representation.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Action {
    AddEdge { a: CornerId, b: CornerId },
    AddOrthogonal { corner: CornerId, edge: Edge },
    AddParallelogram { corner: CornerId, first: Edge, second: Edge },
    RemoveEdge { edge: Edge },
    RemoveCorner { corner: CornerId },
    DissolveDegree2 { corner: CornerId },
}

impl Action {
    pub fn kind(&self) -> ActionKind {
        match self {
            Action::AddEdge { .. } => ActionKind::AddEdge,
            Action::AddOrthogonal { .. } => ActionKind::AddOrthogonal,
            Action::AddParallelogram { .. } => ActionKind::AddParallelogram,
            Action::RemoveEdge { .. } => ActionKind::RemoveEdge,
            Action::RemoveCorner { .. } => ActionKind::RemoveCorner,
            Action::DissolveDegree2 { .. } => ActionKind::DissolveDegree2,
        }
    }
}

fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidAction(msg.into())
}

/// Nearest corner within the snap radius, ties broken by id.
pub fn snap_target(graph: &BuildingGraph, p: Point) -> Option<CornerId> {
    graph
        .corners()
        .iter()
        .map(|c| (c.pos.distance(p), c.id))
        .filter(|(d, _)| *d <= SNAP_RADIUS)
        .min_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)))
        .map(|(_, id)| id)
}

fn require_corner(graph: &BuildingGraph, id: CornerId) -> Result<Point> {
    graph.position(id).ok_or_else(|| invalid(format!("corner {id} does not exist")))
}

fn require_edge(graph: &BuildingGraph, edge: Edge) -> Result<()> {
    if graph.has_edge(edge.a(), edge.b()) {
        Ok(())
    } else {
        Err(invalid(format!("edge {edge} does not exist")))
    }
}

fn add_new_edge(graph: &mut BuildingGraph, a: CornerId, b: CornerId) -> Result<()> {
    if a == b {
        return Err(invalid(format!("degenerate edge at corner {a}")));
    }
    if graph.has_edge(a, b) {
        return Err(invalid(format!("edge {a}-{b} already exists")));
    }
    graph.add_edge(a, b).map(|_| ())
}

/// Applies an action to a copy of `graph`.
pub fn apply(graph: &BuildingGraph, action: &Action) -> Result<BuildingGraph> {
    let mut out = graph.clone();
    match *action {
        Action::AddEdge { a, b } => {
            require_corner(graph, a)?;
            require_corner(graph, b)?;
            if a > b {
                return Err(invalid(format!("edge endpoints {a}, {b} are not in ascending order")));
            }
            add_new_edge(&mut out, a, b)?;
        }
        Action::AddOrthogonal { corner, edge } => {
            let source = require_corner(graph, corner)?;
            require_edge(graph, edge)?;
            if edge.contains(corner) {
                return Err(invalid("orthogonal source lies on the target edge"));
            }
            let (p, q) = graph.segment(edge);
            let dir = q.sub(p);
            let t = source.sub(p).dot(dir) / dir.dot(dir);
            let foot = Point::new(p.x + t * dir.x, p.y + t * dir.y);
            match snap_target(graph, foot) {
                Some(hit) if hit == edge.a() || hit == edge.b() => add_new_edge(&mut out, corner, hit)?,
                Some(_) => return Err(invalid("orthogonal foot snaps to an unrelated corner")),
                None => {
                    if !graph.canvas().contains(foot) {
                        return Err(invalid("orthogonal foot lies off the canvas"));
                    }
                    let f = out.add_corner(foot)?;
                    if t > 0.0 && t < 1.0 {
                        out.remove_edge(edge)?;
                        out.add_edge(edge.a(), f)?;
                        out.add_edge(f, edge.b())?;
                    } else {
                        // extend the edge from its nearer endpoint
                        let near = if t <= 0.0 { edge.a() } else { edge.b() };
                        out.add_edge(near, f)?;
                    }
                    out.add_edge(corner, f)?;
                }
            }
        }
        Action::AddParallelogram { corner, first, second } => {
            let a = require_corner(graph, corner)?;
            require_edge(graph, first)?;
            require_edge(graph, second)?;
            if first >= second {
                return Err(invalid("parallelogram edges must be distinct and in ascending order"));
            }
            let (Some(b_id), Some(c_id)) = (first.other(corner), second.other(corner)) else {
                return Err(invalid(format!("edges {first} and {second} do not meet at corner {corner}")));
            };
            let b = graph.position(b_id).expect("endpoint exists");
            let c = graph.position(c_id).expect("endpoint exists");
            let d = b.add(c).sub(a);
            let d_id = match snap_target(graph, d) {
                Some(hit) if hit == corner || hit == b_id || hit == c_id => {
                    return Err(invalid("parallelogram corner collapses onto its own corners"));
                }
                Some(hit) => hit,
                None => {
                    if !graph.canvas().contains(d) {
                        return Err(invalid("parallelogram corner lies off the canvas"));
                    }
                    out.add_corner(d)?
                }
            };
            add_new_edge(&mut out, b_id, d_id)?;
            add_new_edge(&mut out, c_id, d_id)?;
        }
        Action::RemoveEdge { edge } => {
            require_edge(graph, edge)?;
            out.remove_edge(edge)?;
        }
        Action::RemoveCorner { corner } => {
            require_corner(graph, corner)?;
            out.remove_corner(corner)?;
        }
        Action::DissolveDegree2 { corner } => {
            require_corner(graph, corner)?;
            let nbrs = graph.neighbors(corner);
            let [u, w] = nbrs[..] else {
                return Err(invalid(format!("corner {corner} has degree {}, not 2", nbrs.len())));
            };
            out.remove_corner(corner)?;
            if !out.has_edge(u, w) {
                out.add_edge(u, w)?;
            }
        }
    }
    Ok(out)
}

/// Every parameter combination of one kind, valid or not, in canonical order.
fn candidates(graph: &BuildingGraph, kind: ActionKind) -> Vec<Action> {
    let corners = graph.corners();
    let edges = graph.edges();
    let mut out = Vec::new();
    match kind {
        ActionKind::AddEdge => {
            for (i, c) in corners.iter().enumerate() {
                for d in &corners[i + 1..] {
                    if !graph.has_edge(c.id, d.id) {
                        out.push(Action::AddEdge { a: c.id, b: d.id });
                    }
                }
            }
        }
        ActionKind::AddOrthogonal => {
            for c in corners {
                for &e in edges {
                    if !e.contains(c.id) {
                        out.push(Action::AddOrthogonal { corner: c.id, edge: e });
                    }
                }
            }
        }
        ActionKind::AddParallelogram => {
            for c in corners {
                let incident = graph.incident_edges(c.id);
                for (i, &first) in incident.iter().enumerate() {
                    for &second in &incident[i + 1..] {
                        out.push(Action::AddParallelogram { corner: c.id, first, second });
                    }
                }
            }
        }
        ActionKind::RemoveEdge => out.extend(edges.iter().map(|&edge| Action::RemoveEdge { edge })),
        ActionKind::RemoveCorner => out.extend(corners.iter().map(|c| Action::RemoveCorner { corner: c.id })),
        ActionKind::DissolveDegree2 => out.extend(
            corners
                .iter()
                .filter(|c| graph.degree(c.id) == 2)
                .map(|c| Action::DissolveDegree2 { corner: c.id }),
        ),
    }
    out
}

/// Valid actions of one kind together with their results.
pub fn expand_kind(graph: &BuildingGraph, kind: ActionKind) -> Vec<(Action, BuildingGraph)> {
    candidates(graph, kind)
        .into_iter()
        .filter_map(|a| apply(graph, &a).ok().map(|g| (a, g)))
        .collect()
}

/// Every valid action with its result, in canonical order.
pub fn expand(graph: &BuildingGraph, addition_only: bool) -> Vec<(Action, BuildingGraph)> {
    ActionKind::ALL
        .into_iter()
        .filter(|k| !addition_only || k.is_addition())
        .flat_map(|k| expand_kind(graph, k))
        .collect()
}

pub fn enumerate_actions(graph: &BuildingGraph, addition_only: bool) -> Vec<Action> {
    expand(graph, addition_only).into_iter().map(|(a, _)| a).collect()
}

/// One uniformly chosen valid action per kind; kinds without a valid
/// instance are skipped.
pub fn sample_per_type<R: Rng + ?Sized>(graph: &BuildingGraph, rng: &mut R) -> Vec<Action> {
    ActionKind::ALL
        .into_iter()
        .filter_map(|kind| {
            let valid: Vec<Action> = candidates(graph, kind)
                .into_iter()
                .filter(|a| apply(graph, a).is_ok())
                .collect();
            if valid.is_empty() {
                None
            } else {
                Some(valid[rng.gen_range(0..valid.len())])
            }
        })
        .collect()
}

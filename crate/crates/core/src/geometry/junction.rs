use super::graph::{BuildingGraph, CornerId, Point};

/// A corner together with the directions of its incident edges.
#[derive(Clone, Debug, PartialEq)]
pub struct Junction {
    pub corner: CornerId,
    pub position: Point,
    /// Degrees in `[0, 360)`, measured from the corner towards the other
    /// endpoint with `atan2(dy, dx)` in canvas coordinates, ascending.
    pub directions: Vec<f64>,
}

impl Junction {
    pub fn degree(&self) -> usize {
        self.directions.len()
    }
}

pub fn direction_degrees(from: Point, to: Point) -> f64 {
    let deg = (to.y - from.y).atan2(to.x - from.x).to_degrees();
    let wrapped = deg.rem_euclid(360.0);
    // rem_euclid can round up to exactly 360 for tiny negative inputs
    if wrapped >= 360.0 {
        0.0
    } else {
        wrapped
    }
}

/// One junction per corner, ordered by corner id.
pub fn junctions(graph: &BuildingGraph) -> Vec<Junction> {
    graph
        .corners()
        .iter()
        .map(|c| {
            let mut directions: Vec<f64> = graph
                .neighbors(c.id)
                .into_iter()
                .map(|n| direction_degrees(c.pos, graph.position(n).expect("neighbor exists")))
                .collect();
            directions.sort_by(f64::total_cmp);
            Junction {
                corner: c.id,
                position: c.pos,
                directions,
            }
        })
        .collect()
}

//! Bounded faces of the embedded graph by rotation-system face tracing.

use super::graph::{BuildingGraph, CornerId, Edge, Point};

const AREA_EPS: f64 = 1e-9;

/// One bounded face, traced counter-clockwise in canvas coordinates
/// (positive shoelace area with the y axis as given).
#[derive(Clone, Debug, PartialEq)]
pub struct Region {
    /// Cyclic corner sequence starting at the smallest id. Dangling spikes
    /// (a -> b -> a excursions) are pruned.
    pub vertices: Vec<CornerId>,
    pub area: f64,
}

impl Region {
    pub fn polygon(&self, graph: &BuildingGraph) -> Vec<Point> {
        self.vertices
            .iter()
            .map(|&id| graph.position(id).expect("region vertex exists"))
            .collect()
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct RegionExtraction {
    pub regions: Vec<Region>,
    /// Pairs of non-adjacent edges that intersect. When non-empty the traced
    /// faces may overlap geometrically.
    pub crossings: Vec<(Edge, Edge)>,
}

impl RegionExtraction {
    pub fn has_crossings(&self) -> bool {
        !self.crossings.is_empty()
    }
}

pub fn signed_area(points: &[Point]) -> f64 {
    let n = points.len();
    (0..n)
        .map(|i| points[i].cross(points[(i + 1) % n]))
        .sum::<f64>()
        * 0.5
}

pub fn extract_regions(graph: &BuildingGraph) -> RegionExtraction {
    let corners = graph.corners();
    let index_of = |id: CornerId| -> usize {
        corners.binary_search_by_key(&id, |c| c.id).expect("corner exists")
    };

    // Neighbors of each corner sorted by ascending angle.
    let mut rotation: Vec<Vec<usize>> = vec![Vec::new(); corners.len()];
    for e in graph.edges() {
        let (i, j) = (index_of(e.a()), index_of(e.b()));
        rotation[i].push(j);
        rotation[j].push(i);
    }
    for (i, around) in rotation.iter_mut().enumerate() {
        let origin = corners[i].pos;
        around.sort_by(|&p, &q| {
            let a = angle(origin, corners[p].pos);
            let b = angle(origin, corners[q].pos);
            a.total_cmp(&b).then(p.cmp(&q))
        });
    }

    let mut visited: Vec<Vec<bool>> = rotation.iter().map(|r| vec![false; r.len()]).collect();
    let mut regions = Vec::new();

    for start in 0..corners.len() {
        for slot in 0..rotation[start].len() {
            if visited[start][slot] {
                continue;
            }
            let mut face = Vec::new();
            let (mut from, mut k) = (start, slot);
            while !visited[from][k] {
                visited[from][k] = true;
                face.push(from);
                let to = rotation[from][k];
                let around = &rotation[to];
                let back = around.iter().position(|&n| n == from).expect("twin half-edge");
                // clockwise-next from the reversed incoming direction
                let next = (back + around.len() - 1) % around.len();
                from = to;
                k = next;
            }
            let points: Vec<Point> = face.iter().map(|&i| corners[i].pos).collect();
            let area = signed_area(&points);
            if area <= AREA_EPS {
                continue;
            }
            let ids: Vec<CornerId> = prune_spikes(face).into_iter().map(|i| corners[i].id).collect();
            if ids.len() < 3 {
                continue;
            }
            regions.push(Region {
                vertices: rotate_to_min(ids),
                area,
            });
        }
    }

    regions.sort_by(|a, b| {
        (a.vertices[0], a.vertices.len(), &a.vertices).cmp(&(b.vertices[0], b.vertices.len(), &b.vertices))
    });

    RegionExtraction {
        regions,
        crossings: crossing_edges(graph),
    }
}

fn angle(from: Point, to: Point) -> f64 {
    (to.y - from.y).atan2(to.x - from.x)
}

fn prune_spikes(mut cycle: Vec<usize>) -> Vec<usize> {
    loop {
        let n = cycle.len();
        if n < 3 {
            return cycle;
        }
        let tip = (0..n).find(|&i| cycle[(i + n - 1) % n] == cycle[(i + 1) % n]);
        match tip {
            None => return cycle,
            Some(i) => {
                // drop the tip and the repeated vertex after it
                let after = (i + 1) % n;
                let (first, second) = if i < after { (after, i) } else { (i, after) };
                cycle.remove(first);
                cycle.remove(second);
            }
        }
    }
}

fn rotate_to_min(mut ids: Vec<CornerId>) -> Vec<CornerId> {
    if let Some(pos) = ids.iter().enumerate().min_by_key(|(_, &id)| id).map(|(i, _)| i) {
        ids.rotate_left(pos);
    }
    ids
}

fn orient(a: Point, b: Point, c: Point) -> f64 {
    b.sub(a).cross(c.sub(a))
}

fn on_segment(a: Point, b: Point, p: Point) -> bool {
    p.x >= a.x.min(b.x) - 1e-9
        && p.x <= a.x.max(b.x) + 1e-9
        && p.y >= a.y.min(b.y) - 1e-9
        && p.y <= a.y.max(b.y) + 1e-9
}

/// Closed-segment intersection test, including touching and collinear overlap.
pub fn segments_intersect(p1: Point, p2: Point, q1: Point, q2: Point) -> bool {
    const EPS: f64 = 1e-9;
    let d1 = orient(q1, q2, p1);
    let d2 = orient(q1, q2, p2);
    let d3 = orient(p1, p2, q1);
    let d4 = orient(p1, p2, q2);
    if ((d1 > EPS && d2 < -EPS) || (d1 < -EPS && d2 > EPS)) && ((d3 > EPS && d4 < -EPS) || (d3 < -EPS && d4 > EPS)) {
        return true;
    }
    (d1.abs() <= EPS && on_segment(q1, q2, p1))
        || (d2.abs() <= EPS && on_segment(q1, q2, p2))
        || (d3.abs() <= EPS && on_segment(p1, p2, q1))
        || (d4.abs() <= EPS && on_segment(p1, p2, q2))
}

/// Intersecting pairs among edges that share no endpoint.
pub fn crossing_edges(graph: &BuildingGraph) -> Vec<(Edge, Edge)> {
    let edges = graph.edges();
    let segs: Vec<(Point, Point)> = edges.iter().map(|&e| graph.segment(e)).collect();
    let mut out = Vec::new();
    for i in 0..edges.len() {
        for j in i + 1..edges.len() {
            let (e, f) = (edges[i], edges[j]);
            if e.contains(f.a()) || e.contains(f.b()) {
                continue;
            }
            if segments_intersect(segs[i].0, segs[i].1, segs[j].0, segs[j].1) {
                out.push((e, f));
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::graph::Canvas;

    fn square_with(extra: &[(f64, f64)], extra_edges: &[(u32, u32)]) -> BuildingGraph {
        let mut pts = vec![(10.0, 10.0), (50.0, 10.0), (50.0, 50.0), (10.0, 50.0)];
        pts.extend_from_slice(extra);
        let mut edges = vec![(0, 1), (1, 2), (2, 3), (3, 0)];
        edges.extend_from_slice(extra_edges);
        BuildingGraph::from_points(Canvas::default(), &pts, &edges).unwrap()
    }

    #[test]
    fn square_has_one_region() {
        let r = extract_regions(&square_with(&[], &[]));
        assert_eq!(r.regions.len(), 1);
        assert_eq!(r.regions[0].area, 1600.0);
        assert_eq!(r.regions[0].vertices.len(), 4);
        assert!(!r.has_crossings());
    }

    #[test]
    fn dangling_edge_bounds_no_face() {
        // outside
        let r = extract_regions(&square_with(&[(80.0, 10.0)], &[(1, 4)]));
        assert_eq!(r.regions.len(), 1);
        assert_eq!(r.regions[0].vertices, vec![0, 1, 2, 3]);
        // inside: the spike is pruned from the loop
        let r = extract_regions(&square_with(&[(30.0, 30.0)], &[(1, 4)]));
        assert_eq!(r.regions.len(), 1);
        assert_eq!(r.regions[0].vertices.len(), 4);
        assert_eq!(r.regions[0].area, 1600.0);
    }

    #[test]
    fn diagonal_splits_square() {
        let r = extract_regions(&square_with(&[], &[(0, 2)]));
        assert_eq!(r.regions.len(), 2);
        assert!(r.regions.iter().all(|reg| reg.area == 800.0));
    }

    #[test]
    fn both_diagonals_cross() {
        let r = extract_regions(&square_with(&[], &[(0, 2), (1, 3)]));
        assert_eq!(r.crossings.len(), 1);
    }

    #[test]
    fn prune_nested_spikes() {
        assert_eq!(prune_spikes(vec![0, 1, 2, 3, 4, 3, 2]), vec![0, 1, 2]);
        assert_eq!(prune_spikes(vec![5, 0, 5, 1, 2]), vec![5, 1, 2]);
    }

    #[test]
    fn touching_segments_intersect() {
        let p = |x, y| Point::new(x, y);
        assert!(segments_intersect(p(0.0, 0.0), p(10.0, 0.0), p(5.0, 0.0), p(5.0, 5.0)));
        assert!(!segments_intersect(p(0.0, 0.0), p(10.0, 0.0), p(5.0, 1.0), p(5.0, 5.0)));
        assert!(segments_intersect(p(0.0, 0.0), p(10.0, 0.0), p(5.0, 0.0), p(15.0, 0.0)));
    }
}

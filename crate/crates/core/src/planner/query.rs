use std::cmp::Ordering;
use std::collections::BinaryHeap;

use super::{Clearance, Roadmap};
use crate::error::{Error, Result};
use crate::Vec3;

/// Roadmap vertices each query endpoint is linked to.
pub const QUERY_LINKS: usize = 10;

/// Waypoint list with its cost; speeds and times are filled in by the
/// speed plan.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct PlannedPath {
    pub waypoints: Vec<Vec3>,
    pub cost: f64,
    /// m/s, one per waypoint once timed.
    pub speeds: Vec<f64>,
    /// s, one per waypoint once timed.
    pub times: Vec<f64>,
}

impl PlannedPath {
    pub fn length(&self) -> f64 {
        self.waypoints.windows(2).map(|w| (w[1] - w[0]).norm()).sum()
    }

    pub fn duration(&self) -> f64 {
        self.times.last().copied().unwrap_or(0.0)
    }
}

/// Roadmap extended by the query endpoints: node `n` is the start and
/// node `n + 1` the goal, where `n` is the roadmap size.
#[derive(Clone, Debug)]
pub struct QueryGraph {
    pub vertices: Vec<Vec3>,
    pub adjacency: Vec<Vec<(usize, f64)>>,
}

impl QueryGraph {
    pub fn start(&self) -> usize {
        self.vertices.len() - 2
    }

    pub fn goal(&self) -> usize {
        self.vertices.len() - 1
    }
}

/// Links start and goal to their nearest visible roadmap vertices, and to
/// each other when the direct segment is free.
pub fn query_graph(rm: &Roadmap, clear: &Clearance, start: Vec3, goal: Vec3) -> Result<QueryGraph> {
    for (name, p) in [("start", &start), ("goal", &goal)] {
        if !clear.is_free(p) {
            return Err(Error::Parameter(format!(
                "{name} {:?} is not in free space",
                p.as_slice()
            )));
        }
    }
    let n = rm.vertices.len();
    let mut vertices = rm.vertices.clone();
    vertices.push(start);
    vertices.push(goal);
    let mut adjacency = rm.adjacency.clone();
    adjacency.push(Vec::new());
    adjacency.push(Vec::new());
    let link = |a: usize, b: usize, adjacency: &mut Vec<Vec<(usize, f64)>>| {
        let c = clear.segment_cost(&vertices[a], &vertices[b]);
        adjacency[a].push((b, c));
        adjacency[b].push((a, c));
    };
    for end in [n, n + 1] {
        let p = vertices[end];
        let mut order: Vec<(f64, usize)> = (0..n).map(|i| ((rm.vertices[i] - p).norm(), i)).collect();
        order.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        let mut linked = 0;
        for (_, i) in order {
            if linked == QUERY_LINKS {
                break;
            }
            if clear.segment_free(&p, &rm.vertices[i]) {
                link(end, i, &mut adjacency);
                linked += 1;
            }
        }
    }
    if clear.segment_free(&start, &goal) {
        link(n, n + 1, &mut adjacency);
    }
    Ok(QueryGraph { vertices, adjacency })
}

#[derive(PartialEq)]
struct Entry(f64, usize);

impl Eq for Entry {}

impl Ord for Entry {
    fn cmp(&self, o: &Self) -> Ordering {
        // min-heap on cost, then on index
        o.0.total_cmp(&self.0).then(o.1.cmp(&self.1))
    }
}

impl PartialOrd for Entry {
    fn partial_cmp(&self, o: &Self) -> Option<Ordering> {
        Some(self.cmp(o))
    }
}

/// Cheapest node sequence from `s` to `t` and its cost.
pub fn dijkstra(adjacency: &[Vec<(usize, f64)>], s: usize, t: usize) -> Option<(Vec<usize>, f64)> {
    let mut dist = vec![f64::INFINITY; adjacency.len()];
    let mut prev = vec![usize::MAX; adjacency.len()];
    let mut heap = BinaryHeap::new();
    dist[s] = 0.0;
    heap.push(Entry(0.0, s));
    while let Some(Entry(d, u)) = heap.pop() {
        if d > dist[u] {
            continue;
        }
        if u == t {
            break;
        }
        for &(v, c) in &adjacency[u] {
            let nd = d + c;
            if nd < dist[v] {
                dist[v] = nd;
                prev[v] = u;
                heap.push(Entry(nd, v));
            }
        }
    }
    if !dist[t].is_finite() {
        return None;
    }
    let mut path = vec![t];
    while *path.last().unwrap() != s {
        path.push(prev[*path.last().unwrap()]);
    }
    path.reverse();
    Some((path, dist[t]))
}

/// Cheapest roadmap route between two free points.
pub fn plan_path(rm: &Roadmap, clear: &Clearance, start: Vec3, goal: Vec3) -> Result<PlannedPath> {
    let g = query_graph(rm, clear, start, goal)?;
    let (nodes, cost) = dijkstra(&g.adjacency, g.start(), g.goal()).ok_or_else(|| {
        Error::Unreachable(format!(
            "no roadmap route from {:?} to {:?}",
            start.as_slice(),
            goal.as_slice()
        ))
    })?;
    let mut waypoints: Vec<Vec3> = Vec::with_capacity(nodes.len());
    for i in nodes {
        let p = g.vertices[i];
        if waypoints.last() != Some(&p) {
            waypoints.push(p);
        }
    }
    Ok(PlannedPath {
        waypoints,
        cost,
        ..Default::default()
    })
}

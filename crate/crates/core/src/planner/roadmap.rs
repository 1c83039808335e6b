use std::collections::HashMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::ProximityMap;
use crate::error::{Error, Result};
use crate::Vec3;

/// Path cost weights.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CostWeights {
    pub proximity: f64,
    /// Clearance below which the proximity penalty applies, m.
    pub safe_distance: f64,
    pub altitude: f64,
}

impl Default for CostWeights {
    fn default() -> Self {
        CostWeights {
            proximity: 2.0,
            safe_distance: 1.5,
            altitude: 1.5,
        }
    }
}

/// Collision and cost queries against a proximity map.
#[derive(Clone, Copy, Debug)]
pub struct Clearance<'a> {
    pub prox: &'a ProximityMap,
    /// Vehicle bounding radius, m.
    pub radius: f64,
    pub weights: CostWeights,
}

impl Clearance<'_> {
    /// Sampling step along segments: half a voxel.
    pub fn step(&self) -> f64 {
        0.5 * self.prox.resolution()
    }

    pub fn is_free(&self, p: &Vec3) -> bool {
        self.prox.clearance(p) >= self.radius
    }

    /// Straight segment check at half-voxel steps, end points included.
    pub fn segment_free(&self, a: &Vec3, b: &Vec3) -> bool {
        let n = ((b - a).norm() / self.step()).ceil().max(1.0) as usize;
        (0..=n).all(|i| self.is_free(&a.lerp(b, i as f64 / n as f64)))
    }

    /// Cost of a straight segment: length weighted by the proximity penalty
    /// at sub-segment midpoints, plus the altitude change term.
    pub fn segment_cost(&self, a: &Vec3, b: &Vec3) -> f64 {
        let len = (b - a).norm();
        let n = (len / self.step()).ceil().max(1.0) as usize;
        let w = self.weights;
        let mut sum = 0.0;
        for i in 0..n {
            let m = a.lerp(b, (i as f64 + 0.5) / n as f64);
            let d = self.prox.distance(&m);
            sum += 1.0 + w.proximity * ((w.safe_distance - d) / w.safe_distance).max(0.0);
        }
        sum * len / n as f64 + w.altitude * (b.z - a.z).abs()
    }

    /// Cost of a polyline.
    pub fn path_cost(&self, pts: &[Vec3]) -> f64 {
        pts.windows(2).map(|w| self.segment_cost(&w[0], &w[1])).sum()
    }

    pub fn path_free(&self, pts: &[Vec3]) -> bool {
        pts.windows(2).all(|w| self.segment_free(&w[0], &w[1]))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RoadmapConfig {
    pub samples: usize,
    /// m
    pub connect_radius: f64,
    /// Sampling box; the whole map when unset.
    pub bounds: Option<[[f64; 3]; 2]>,
    pub seed: u64,
}

impl Default for RoadmapConfig {
    fn default() -> Self {
        RoadmapConfig {
            samples: 3000,
            connect_radius: 6.0,
            bounds: None,
            seed: 1,
        }
    }
}

/// Undirected graph of collision-free samples with precomputed edge costs.
#[derive(Clone, Debug)]
pub struct Roadmap {
    pub vertices: Vec<Vec3>,
    /// `(a, b, cost)` with `a < b`.
    pub edges: Vec<(usize, usize, f64)>,
    pub adjacency: Vec<Vec<(usize, f64)>>,
    pub seed: u64,
}

impl Roadmap {
    pub fn from_parts(vertices: Vec<Vec3>, edges: Vec<(usize, usize, f64)>, seed: u64) -> Self {
        let mut adjacency = vec![Vec::new(); vertices.len()];
        for &(a, b, c) in &edges {
            adjacency[a].push((b, c));
            adjacency[b].push((a, c));
        }
        Roadmap {
            vertices,
            edges,
            adjacency,
            seed,
        }
    }

    /// Connected component label per vertex.
    pub fn components(&self) -> Vec<usize> {
        let mut parent: Vec<usize> = (0..self.vertices.len()).collect();
        fn find(p: &mut [usize], mut x: usize) -> usize {
            while p[x] != x {
                p[x] = p[p[x]];
                x = p[x];
            }
            x
        }
        for &(a, b, _) in &self.edges {
            let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
            if ra != rb {
                parent[ra.max(rb)] = ra.min(rb);
            }
        }
        (0..parent.len()).map(|i| find(&mut parent, i)).collect()
    }
}

fn cell_of(p: &Vec3, size: f64) -> [i64; 3] {
    [0, 1, 2].map(|i| (p[i] / size).floor() as i64)
}

/// Samples free space uniformly and links every pair of samples within the
/// connection radius whose straight segment is free.
pub fn build_roadmap(clear: &Clearance, lo: Vec3, hi: Vec3, cfg: &RoadmapConfig) -> Result<Roadmap> {
    if cfg.samples == 0 || !(cfg.connect_radius > 0.0) {
        return Err(Error::Parameter(
            "roadmap needs samples and a positive connection radius".into(),
        ));
    }
    let (lo, hi) = match cfg.bounds {
        Some([a, b]) => (Vec3::from(a), Vec3::from(b)),
        None => (lo, hi),
    };
    if (0..3).any(|i| !(hi[i] > lo[i])) {
        return Err(Error::Parameter("empty sampling box".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut vertices = Vec::with_capacity(cfg.samples);
    let max_attempts = cfg.samples.saturating_mul(200);
    let mut attempts = 0;
    while vertices.len() < cfg.samples && attempts < max_attempts {
        attempts += 1;
        let p = Vec3::new(
            rng.random_range(lo.x..hi.x),
            rng.random_range(lo.y..hi.y),
            rng.random_range(lo.z..hi.z),
        );
        if clear.is_free(&p) {
            vertices.push(p);
        }
    }
    if vertices.is_empty() {
        return Err(Error::Construction(format!(
            "no free space found in {attempts} samples"
        )));
    }
    let r = cfg.connect_radius;
    let mut cells: HashMap<[i64; 3], Vec<usize>> = HashMap::new();
    for (i, p) in vertices.iter().enumerate() {
        cells.entry(cell_of(p, r)).or_default().push(i);
    }
    let mut edges = Vec::new();
    for (i, p) in vertices.iter().enumerate() {
        let c = cell_of(p, r);
        let mut near = Vec::new();
        for dx in -1..=1 {
            for dy in -1..=1 {
                for dz in -1..=1 {
                    if let Some(list) = cells.get(&[c[0] + dx, c[1] + dy, c[2] + dz]) {
                        near.extend(list.iter().copied().filter(|&j| j > i && (vertices[j] - p).norm() <= r));
                    }
                }
            }
        }
        near.sort_unstable();
        for j in near {
            let q = &vertices[j];
            if clear.segment_free(p, q) {
                edges.push((i, j, clear.segment_cost(p, q)));
            }
        }
    }
    Ok(Roadmap::from_parts(vertices, edges, cfg.seed))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mapping::{LogOddsParams, OccupancyGrid, VoxelState};
    use crate::planner::build_proximity_map;

    pub(crate) fn open_map(size: [usize; 3], res: f64) -> OccupancyGrid {
        let mut g = OccupancyGrid::new(Vec3::zeros(), res, size, LogOddsParams::default()).unwrap();
        g.fill(VoxelState::Free);
        g
    }

    fn clear(prox: &ProximityMap) -> Clearance<'_> {
        Clearance {
            prox,
            radius: 0.2,
            weights: CostWeights::default(),
        }
    }

    fn small_cfg(seed: u64) -> RoadmapConfig {
        RoadmapConfig {
            samples: 150,
            connect_radius: 2.5,
            bounds: None,
            seed,
        }
    }

    #[test]
    fn open_cube_is_connected() {
        let g = open_map([40, 40, 40], 0.2);
        let prox = build_proximity_map(&g, 3.0).unwrap();
        let c = clear(&prox);
        let rm = build_roadmap(&c, Vec3::zeros(), g.max_corner(), &small_cfg(3)).unwrap();
        assert_eq!(rm.vertices.len(), 150);
        let comp = rm.components();
        assert!(comp.iter().all(|&x| x == comp[0]));
        for &(a, b, cost) in &rm.edges {
            assert!(a < b);
            assert!(c.segment_free(&rm.vertices[a], &rm.vertices[b]));
            assert!(cost >= (rm.vertices[a] - rm.vertices[b]).norm());
        }
    }

    #[test]
    fn solid_wall_separates_components() {
        let mut g = open_map([40, 40, 40], 0.2);
        for y in 0..40 {
            for z in 0..40 {
                for x in 19..21 {
                    let i = g.index([x, y, z]);
                    g.set_state(i, VoxelState::Occupied);
                }
            }
        }
        let prox = build_proximity_map(&g, 3.0).unwrap();
        let c = clear(&prox);
        let rm = build_roadmap(&c, Vec3::zeros(), g.max_corner(), &small_cfg(4)).unwrap();
        let comp = rm.components();
        for (i, p) in rm.vertices.iter().enumerate() {
            for (j, q) in rm.vertices.iter().enumerate() {
                let same_side = (p.x < 4.0) == (q.x < 4.0);
                assert_eq!(comp[i] == comp[j], same_side);
            }
        }
    }

    #[test]
    fn fixed_seed_is_reproducible() {
        let g = open_map([30, 30, 20], 0.2);
        let prox = build_proximity_map(&g, 3.0).unwrap();
        let c = clear(&prox);
        let a = build_roadmap(&c, Vec3::zeros(), g.max_corner(), &small_cfg(8)).unwrap();
        let b = build_roadmap(&c, Vec3::zeros(), g.max_corner(), &small_cfg(8)).unwrap();
        assert_eq!(a.vertices, b.vertices);
        assert_eq!(a.edges, b.edges);
        let other = build_roadmap(&c, Vec3::zeros(), g.max_corner(), &small_cfg(9)).unwrap();
        assert_ne!(a.vertices, other.vertices);
    }

    #[test]
    fn no_free_space_is_an_error() {
        let mut g = open_map([10, 10, 10], 0.2);
        g.fill(VoxelState::Occupied);
        let prox = build_proximity_map(&g, 3.0).unwrap();
        let c = clear(&prox);
        let r = build_roadmap(&c, Vec3::zeros(), g.max_corner(), &small_cfg(1));
        assert!(matches!(r, Err(Error::Construction(_))));
    }
}

//! Synthetic industrial hall used for planning runs: columns, storage racks,
//! tanks, pipe runs and a mezzanine.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mapping::{LogOddsParams, OccupancyGrid, VoxelState};
use crate::Vec3;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct IndustrialConfig {
    /// m
    pub size: [f64; 3],
    /// m
    pub resolution: f64,
    pub racks: usize,
    pub tanks: usize,
    pub pipes: usize,
    /// Points kept clear of obstacles, with the clear radius, m.
    pub keep_clear: Vec<[f64; 3]>,
    pub keep_clear_radius: f64,
    pub seed: u64,
}

impl Default for IndustrialConfig {
    fn default() -> Self {
        IndustrialConfig {
            size: [50.0, 50.0, 40.0],
            resolution: 0.2,
            racks: 14,
            tanks: 6,
            pipes: 12,
            keep_clear: vec![[6.0, 6.0, 3.0], [30.75, 30.75, 3.0]],
            keep_clear_radius: 2.5,
            seed: 7,
        }
    }
}

/// Axis-aligned solid boxes.
#[derive(Clone, Debug, Default)]
pub struct IndustrialWorld {
    pub solids: Vec<(Vec3, Vec3)>,
    pub size: Vec3,
}

fn box_sphere_distance(lo: &Vec3, hi: &Vec3, p: &Vec3) -> f64 {
    let q = p.sup(lo).inf(hi);
    (p - q).norm()
}

impl IndustrialWorld {
    pub fn generate(cfg: &IndustrialConfig) -> Result<Self> {
        let size = Vec3::from(cfg.size);
        if size.iter().any(|s| !(*s > 4.0)) {
            return Err(Error::Parameter(
                "industrial hall must be larger than 4 m per axis".into(),
            ));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        let mut solids = Vec::new();
        // floor slab
        solids.push((Vec3::new(0.0, 0.0, 0.0), Vec3::new(size.x, size.y, 0.4)));
        // columns on a 12.5 m grid
        let mut x = 12.5;
        while x < size.x - 1.0 {
            let mut y = 12.5;
            while y < size.y - 1.0 {
                solids.push((Vec3::new(x - 0.4, y - 0.4, 0.0), Vec3::new(x + 0.4, y + 0.4, size.z)));
                y += 12.5;
            }
            x += 12.5;
        }
        for _ in 0..cfg.racks {
            let len = rng.random_range(6.0..14.0);
            let h = rng.random_range(4.0..10.0);
            let along_x = rng.random_bool(0.5);
            let (dx, dy) = if along_x { (len, 1.2) } else { (1.2, len) };
            let x0 = rng.random_range(1.0..size.x - dx - 1.0);
            let y0 = rng.random_range(1.0..size.y - dy - 1.0);
            solids.push((Vec3::new(x0, y0, 0.0), Vec3::new(x0 + dx, y0 + dy, h)));
        }
        for _ in 0..cfg.tanks {
            let w = rng.random_range(2.5..5.0);
            let h = rng.random_range(5.0..14.0);
            let x0 = rng.random_range(1.0..size.x - w - 1.0);
            let y0 = rng.random_range(1.0..size.y - w - 1.0);
            solids.push((Vec3::new(x0, y0, 0.0), Vec3::new(x0 + w, y0 + w, h)));
        }
        for _ in 0..cfg.pipes {
            let z = rng.random_range(6.0..size.z - 4.0);
            let d = rng.random_range(0.4..1.0);
            let c = rng.random_range(2.0..size.x - 2.0);
            if rng.random_bool(0.5) {
                solids.push((Vec3::new(0.0, c, z), Vec3::new(size.x, c + d, z + d)));
            } else {
                solids.push((Vec3::new(c, 0.0, z), Vec3::new(c + d, size.y, z + d)));
            }
        }
        // mezzanine over one corner
        solids.push((
            Vec3::new(0.6 * size.x, 0.0, 0.45 * size.z),
            Vec3::new(size.x, 0.35 * size.y, 0.45 * size.z + 0.5),
        ));
        let keep: Vec<Vec3> = cfg.keep_clear.iter().map(|p| Vec3::from(*p)).collect();
        solids.retain(|(lo, hi)| {
            lo.z < 0.5 && hi.z <= 0.41
                || keep
                    .iter()
                    .all(|p| box_sphere_distance(lo, hi, p) > cfg.keep_clear_radius)
        });
        Ok(IndustrialWorld { solids, size })
    }

    /// Voxels meeting a solid are occupied, all others free.
    pub fn to_grid(&self, resolution: f64) -> Result<OccupancyGrid> {
        let dims = [0, 1, 2].map(|i| (self.size[i] / resolution).round() as usize);
        let mut g = OccupancyGrid::new(Vec3::zeros(), resolution, dims, LogOddsParams::default())?;
        g.fill(VoxelState::Free);
        for (lo, hi) in &self.solids {
            // open overlap so faces on voxel boundaries do not spill over
            let eps = 1e-9;
            if let Some((a, b)) = g.voxel_range(&lo.add_scalar(eps), &hi.add_scalar(-eps)) {
                for x in a[0]..=b[0] {
                    for y in a[1]..=b[1] {
                        for z in a[2]..=b[2] {
                            let i = g.index([x, y, z]);
                            g.set_state(i, VoxelState::Occupied);
                        }
                    }
                }
            }
        }
        Ok(g)
    }

    pub fn is_inside_solid(&self, p: &Vec3) -> bool {
        self.solids
            .iter()
            .any(|(lo, hi)| (0..3).all(|i| p[i] >= lo[i] && p[i] <= hi[i]))
    }
}

/// True when a sphere of radius `r` around `p` meets a blocked voxel or
/// leaves the grid.
pub fn sphere_collides(grid: &OccupancyGrid, p: &Vec3, r: f64) -> bool {
    let lo = p.add_scalar(-r);
    let hi = p.add_scalar(r);
    if (0..3).any(|i| lo[i] < grid.origin()[i] || hi[i] > grid.max_corner()[i]) {
        return true;
    }
    let Some((a, b)) = grid.voxel_range(&lo, &hi) else {
        return true;
    };
    let half = Vec3::repeat(0.5 * grid.resolution());
    for x in a[0]..=b[0] {
        for y in a[1]..=b[1] {
            for z in a[2]..=b[2] {
                let v = [x, y, z];
                if grid.is_blocked_at(grid.index(v)) {
                    let c = grid.center(v);
                    if box_sphere_distance(&(c - half), &(c + half), p) < r {
                        return true;
                    }
                }
            }
        }
    }
    false
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_hall_is_deterministic_and_keeps_points_clear() {
        let cfg = IndustrialConfig {
            size: [20.0, 20.0, 12.0],
            racks: 4,
            tanks: 2,
            pipes: 3,
            keep_clear: vec![[3.0, 3.0, 2.0]],
            ..Default::default()
        };
        let a = IndustrialWorld::generate(&cfg).unwrap();
        let b = IndustrialWorld::generate(&cfg).unwrap();
        assert_eq!(a.solids, b.solids);
        let g = a.to_grid(0.2).unwrap();
        assert_eq!(g.dims(), [100, 100, 60]);
        assert!(!sphere_collides(&g, &Vec3::new(3.0, 3.0, 2.0), 1.5));
        assert!(sphere_collides(&g, &Vec3::new(3.0, 3.0, 0.3), 0.1));
        // a voxel is occupied exactly when its cell overlaps a solid with positive volume
        let h = 0.5 * g.resolution();
        for idx in (0..g.len()).step_by(97) {
            let c = g.center(g.coords(idx));
            let meets = a
                .solids
                .iter()
                .any(|(lo, hi)| (0..3).all(|i| c[i] - h < hi[i] - 1e-9 && c[i] + h > lo[i] + 1e-9));
            assert_eq!(g.state_at(idx) == VoxelState::Occupied, meets, "{c:?}");
            if a.is_inside_solid(&c) {
                assert_eq!(g.state_at(idx), VoxelState::Occupied, "{c:?}");
            }
        }
    }

    #[test]
    fn sphere_test_matches_distance() {
        let w = IndustrialWorld {
            solids: vec![(Vec3::new(2.0, 2.0, 2.0), Vec3::new(3.0, 3.0, 3.0))],
            size: Vec3::repeat(5.0),
        };
        let g = w.to_grid(0.2).unwrap();
        assert!(!sphere_collides(&g, &Vec3::new(1.55, 2.5, 2.5), 0.4));
        assert!(sphere_collides(&g, &Vec3::new(1.65, 2.5, 2.5), 0.4));
        assert!(sphere_collides(&g, &Vec3::new(0.1, 2.5, 2.5), 0.2));
    }
}

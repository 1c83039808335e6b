use std::collections::HashMap;

use super::OccupancyGrid;
use crate::error::{Error, Result};
use crate::{Pose, Vec3};

/// Visits the voxels a segment passes through, in order, from the voxel of
/// `from` up to but excluding the voxel containing `to`. Parts of the
/// segment outside the grid are skipped.
pub fn traverse(grid: &OccupancyGrid, from: &Vec3, to: &Vec3, mut visit: impl FnMut(usize)) {
    let d = to - from;
    let lo = grid.origin();
    let hi = grid.max_corner();
    // clip the parameter range to the grid box
    let (mut t0, mut t1) = (0.0f64, 1.0f64);
    for i in 0..3 {
        if d[i].abs() < 1e-15 {
            if from[i] < lo[i] || from[i] >= hi[i] {
                return;
            }
            continue;
        }
        let a = (lo[i] - from[i]) / d[i];
        let b = (hi[i] - from[i]) / d[i];
        t0 = t0.max(a.min(b));
        t1 = t1.min(a.max(b));
    }
    if t0 > t1 {
        return;
    }
    let end = grid.voxel_of_unchecked(to);
    let res = grid.resolution();
    let start = from + d * t0;
    let dims = grid.dims();
    let mut v = grid.voxel_of_unchecked(&start);
    for i in 0..3 {
        v[i] = v[i].clamp(0, dims[i] as i64 - 1);
    }
    let mut step = [0i64; 3];
    let mut t_max = [f64::INFINITY; 3];
    let mut t_delta = [f64::INFINITY; 3];
    for i in 0..3 {
        if d[i] > 0.0 {
            step[i] = 1;
            t_max[i] = (lo[i] + (v[i] + 1) as f64 * res - from[i]) / d[i];
            t_delta[i] = res / d[i];
        } else if d[i] < 0.0 {
            step[i] = -1;
            t_max[i] = (lo[i] + v[i] as f64 * res - from[i]) / d[i];
            t_delta[i] = -res / d[i];
        }
    }
    loop {
        if v == end || !grid.contains(v) {
            return;
        }
        visit(grid.index(v.map(|c| c as usize)));
        let axis = if t_max[0] <= t_max[1] && t_max[0] <= t_max[2] {
            0
        } else if t_max[1] <= t_max[2] {
            1
        } else {
            2
        };
        if t_max[axis] > t1 {
            return;
        }
        v[axis] += step[axis];
        t_max[axis] += t_delta[axis];
    }
}

/// Integrates one range scan. Each voxel is updated at most once per scan:
/// voxels holding an end point get the hit update, voxels only crossed by
/// rays get the miss update.
pub fn integrate_scan(grid: &mut OccupancyGrid, origin: &Pose, hits: &[Vec3]) -> Result<()> {
    if hits.iter().any(|h| !h.iter().all(|c| c.is_finite())) {
        return Err(Error::Parameter("scan contains non-finite points".into()));
    }
    let from = origin.position;
    // true = hit
    let mut touched: HashMap<usize, bool> = HashMap::new();
    for h in hits {
        traverse(grid, &from, h, |idx| {
            touched.entry(idx).or_insert(false);
        });
        if let Some(v) = grid.voxel_of(h) {
            touched.insert(grid.index(v), true);
        }
    }
    let (l_hit, l_miss) = (grid.params().l_hit(), grid.params().l_miss());
    let mut order: Vec<(usize, bool)> = touched.into_iter().collect();
    order.sort_unstable();
    for (idx, hit) in order {
        grid.update(idx, if hit { l_hit } else { l_miss });
    }
    Ok(())
}

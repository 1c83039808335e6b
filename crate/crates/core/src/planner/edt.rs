use crate::error::{Error, Result};
use crate::mapping::OccupancyGrid;
use crate::Vec3;

/// Per-voxel Euclidean distance to the nearest blocked voxel center, m.
/// Unknown voxels count as blocked; distances are capped at `clamp`.
#[derive(Clone, Debug)]
pub struct ProximityMap {
    origin: Vec3,
    resolution: f64,
    dims: [usize; 3],
    clamp: f64,
    dist: Vec<f32>,
}

/// Squared distance standing in for "no obstacle"; small enough that
/// adding squared voxel offsets stays exact.
const FAR: f64 = 1e12;

/// Lower envelope of parabolas (Felzenszwalb & Huttenlocher) over one line
/// of squared distances, in place.
fn envelope(f: &mut [f64], v: &mut [usize], z: &mut [f64], out: &mut [f64]) {
    let n = f.len();
    let mut k = 0;
    v[0] = 0;
    z[0] = f64::NEG_INFINITY;
    z[1] = f64::INFINITY;
    for q in 1..n {
        let fq = f[q] + (q * q) as f64;
        let mut s;
        loop {
            let p = v[k];
            s = (fq - (f[p] + (p * p) as f64)) / (2.0 * (q - p) as f64);
            if s > z[k] {
                break;
            }
            k -= 1;
        }
        k += 1;
        v[k] = q;
        z[k] = s;
        z[k + 1] = f64::INFINITY;
    }
    k = 0;
    for (q, o) in out.iter_mut().enumerate().take(n) {
        while z[k + 1] < q as f64 {
            k += 1;
        }
        let d = q as f64 - v[k] as f64;
        *o = d * d + f[v[k]];
    }
    f.copy_from_slice(&out[..n]);
}

/// Exact Euclidean distance transform of the blocked voxels of `grid`,
/// capped at `clamp` metres.
pub fn build_proximity_map(grid: &OccupancyGrid, clamp: f64) -> Result<ProximityMap> {
    if !(clamp > 0.0) {
        return Err(Error::Parameter("distance clamp must be positive".into()));
    }
    let dims = grid.dims();
    let n = grid.len();
    // squared distances in voxel units
    let mut d2: Vec<f64> = (0..n).map(|i| if grid.is_blocked_at(i) { 0.0 } else { FAR }).collect();
    let longest = dims.iter().copied().max().unwrap_or(1);
    let mut line = vec![0.0; longest];
    let mut v = vec![0usize; longest];
    let mut z = vec![0.0; longest + 1];
    let mut out = vec![0.0; longest];
    let strides = [dims[1] * dims[2], dims[2], 1];
    for axis in 0..3 {
        let len = dims[axis];
        let (a, b) = ((axis + 1) % 3, (axis + 2) % 3);
        for i in 0..dims[a] {
            for j in 0..dims[b] {
                let base = i * strides[a] + j * strides[b];
                for k in 0..len {
                    line[k] = d2[base + k * strides[axis]];
                }
                envelope(&mut line[..len], &mut v, &mut z, &mut out);
                for k in 0..len {
                    d2[base + k * strides[axis]] = line[k];
                }
            }
        }
    }
    let res = grid.resolution();
    let dist = d2
        .into_iter()
        .map(|s| if s >= FAR { clamp } else { (s.sqrt() * res).min(clamp) } as f32)
        .collect();
    Ok(ProximityMap {
        origin: grid.origin(),
        resolution: res,
        dims,
        clamp,
        dist,
    })
}

impl ProximityMap {
    pub fn resolution(&self) -> f64 {
        self.resolution
    }

    pub fn dims(&self) -> [usize; 3] {
        self.dims
    }

    pub fn clamp(&self) -> f64 {
        self.clamp
    }

    pub fn at(&self, v: [usize; 3]) -> f64 {
        self.dist[(v[0] * self.dims[1] + v[1]) * self.dims[2] + v[2]] as f64
    }

    /// Distance stored for the voxel containing `p`; zero outside the grid.
    pub fn distance(&self, p: &Vec3) -> f64 {
        let r = (p - self.origin) / self.resolution;
        let v = [r.x.floor(), r.y.floor(), r.z.floor()];
        if (0..3).any(|i| v[i] < 0.0 || v[i] >= self.dims[i] as f64) {
            return 0.0;
        }
        self.at(v.map(|c| c as usize))
    }

    /// Lower bound on the distance from `p` to any blocked voxel cell, m.
    pub fn clearance(&self, p: &Vec3) -> f64 {
        // p may sit anywhere in its voxel and the obstacle fills its own cell
        (self.distance(p) - 3f64.sqrt() * self.resolution).max(0.0)
    }
}

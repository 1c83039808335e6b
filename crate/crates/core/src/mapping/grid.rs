use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::Vec3;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum VoxelState {
    Free,
    Occupied,
    Unknown,
}

impl VoxelState {
    pub fn code(self) -> char {
        match self {
            VoxelState::Free => 'F',
            VoxelState::Occupied => 'O',
            VoxelState::Unknown => 'U',
        }
    }

    pub fn from_code(c: char) -> Option<Self> {
        match c {
            'F' => Some(VoxelState::Free),
            'O' => Some(VoxelState::Occupied),
            'U' => Some(VoxelState::Unknown),
            _ => None,
        }
    }
}

/// Log-odds sensor model and clamping bounds.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LogOddsParams {
    pub p_hit: f64,
    pub p_miss: f64,
    pub l_min: f64,
    pub l_max: f64,
    /// Occupied iff log-odds is above this.
    pub threshold: f64,
}

impl Default for LogOddsParams {
    fn default() -> Self {
        LogOddsParams {
            p_hit: 0.7,
            p_miss: 0.4,
            l_min: -2.0,
            l_max: 3.5,
            threshold: 0.0,
        }
    }
}

fn logit(p: f64) -> f64 {
    (p / (1.0 - p)).ln()
}

impl LogOddsParams {
    pub fn l_hit(&self) -> f64 {
        logit(self.p_hit)
    }

    pub fn l_miss(&self) -> f64 {
        logit(self.p_miss)
    }

    pub fn validate(&self) -> Result<()> {
        let probs_ok = self.p_hit > 0.5 && self.p_hit < 1.0 && self.p_miss > 0.0 && self.p_miss < 0.5;
        if !probs_ok || !(self.l_min < self.threshold && self.threshold < self.l_max) {
            return Err(Error::Parameter(
                "log-odds model needs 0.5 < p_hit < 1, 0 < p_miss < 0.5 and l_min < threshold < l_max".into(),
            ));
        }
        Ok(())
    }
}

/// Axis-aligned voxel grid. Each voxel holds a clamped log-odds value;
/// `NaN` marks a voxel that was never observed.
///
/// Voxel `(x, y, z)` covers `origin + res * [x, x+1) × [y, y+1) × [z, z+1)`
/// and is stored at `(x * ny + y) * nz + z`.
#[derive(Clone, Debug, PartialEq)]
pub struct OccupancyGrid {
    origin: Vec3,
    resolution: f64,
    dims: [usize; 3],
    params: LogOddsParams,
    logodds: Vec<f64>,
}

impl OccupancyGrid {
    /// Grid with every voxel unknown.
    pub fn new(origin: Vec3, resolution: f64, dims: [usize; 3], params: LogOddsParams) -> Result<Self> {
        if !(resolution > 0.0) || !resolution.is_finite() || !origin.iter().all(|v| v.is_finite()) {
            return Err(Error::Parameter(
                "grid needs a finite origin and positive resolution".into(),
            ));
        }
        if dims.contains(&0) {
            return Err(Error::Parameter("grid dimensions must be non-zero".into()));
        }
        params.validate()?;
        let n = dims[0]
            .checked_mul(dims[1])
            .and_then(|v| v.checked_mul(dims[2]))
            .ok_or_else(|| Error::Parameter("grid too large".into()))?;
        Ok(OccupancyGrid {
            origin,
            resolution,
            dims,
            params,
            logodds: vec![f64::NAN; n],
        })
    }

    /// Grid covering the box `[lo, hi]` at `resolution`, all unknown.
    pub fn covering(lo: Vec3, hi: Vec3, resolution: f64) -> Result<Self> {
        let ext = hi - lo;
        if ext.iter().any(|e| !(*e > 0.0)) {
            return Err(Error::Parameter("empty bounds".into()));
        }
        let dims = [0, 1, 2].map(|i| ((ext[i] / resolution) - 1e-9).ceil().max(1.0) as usize);
        OccupancyGrid::new(lo, resolution, dims, LogOddsParams::default())
    }

    pub fn origin(&self) -> Vec3 {
        self.origin
    }

    pub fn resolution(&self) -> f64 {
        self.resolution
    }

    pub fn dims(&self) -> [usize; 3] {
        self.dims
    }

    pub fn params(&self) -> &LogOddsParams {
        &self.params
    }

    pub fn len(&self) -> usize {
        self.logodds.len()
    }

    pub fn is_empty(&self) -> bool {
        self.logodds.is_empty()
    }

    /// Upper corner of the grid volume.
    pub fn max_corner(&self) -> Vec3 {
        self.origin + Vec3::new(self.dims[0] as f64, self.dims[1] as f64, self.dims[2] as f64) * self.resolution
    }

    #[inline]
    pub fn index(&self, v: [usize; 3]) -> usize {
        (v[0] * self.dims[1] + v[1]) * self.dims[2] + v[2]
    }

    #[inline]
    pub fn coords(&self, idx: usize) -> [usize; 3] {
        let z = idx % self.dims[2];
        let rest = idx / self.dims[2];
        [rest / self.dims[1], rest % self.dims[1], z]
    }

    pub fn contains(&self, v: [i64; 3]) -> bool {
        (0..3).all(|i| v[i] >= 0 && (v[i] as usize) < self.dims[i])
    }

    /// Integer voxel coordinates of a point, possibly outside the grid.
    pub fn voxel_of_unchecked(&self, p: &Vec3) -> [i64; 3] {
        let r = (p - self.origin) / self.resolution;
        [r.x.floor() as i64, r.y.floor() as i64, r.z.floor() as i64]
    }

    pub fn voxel_of(&self, p: &Vec3) -> Option<[usize; 3]> {
        let v = self.voxel_of_unchecked(p);
        self.contains(v).then(|| v.map(|c| c as usize))
    }

    pub fn center(&self, v: [usize; 3]) -> Vec3 {
        self.origin + Vec3::new(v[0] as f64 + 0.5, v[1] as f64 + 0.5, v[2] as f64 + 0.5) * self.resolution
    }

    pub fn logodds(&self, idx: usize) -> f64 {
        self.logodds[idx]
    }

    pub fn state_at(&self, idx: usize) -> VoxelState {
        let l = self.logodds[idx];
        if l.is_nan() {
            VoxelState::Unknown
        } else if l > self.params.threshold {
            VoxelState::Occupied
        } else {
            VoxelState::Free
        }
    }

    pub fn state(&self, v: [usize; 3]) -> VoxelState {
        self.state_at(self.index(v))
    }

    /// Occupied or unknown, the conservative collision notion.
    pub fn is_blocked_at(&self, idx: usize) -> bool {
        self.state_at(idx) != VoxelState::Free
    }

    /// Adds `delta` to a voxel's log-odds (unknown counts as 0) and clamps.
    pub fn update(&mut self, idx: usize, delta: f64) {
        let l = self.logodds[idx];
        let base = if l.is_nan() { 0.0 } else { l };
        self.logodds[idx] = (base + delta).clamp(self.params.l_min, self.params.l_max);
    }

    /// Forces a voxel to a state: saturated log-odds or unknown.
    pub fn set_state(&mut self, idx: usize, s: VoxelState) {
        self.logodds[idx] = match s {
            VoxelState::Free => self.params.l_min,
            VoxelState::Occupied => self.params.l_max,
            VoxelState::Unknown => f64::NAN,
        };
    }

    pub fn fill(&mut self, s: VoxelState) {
        for i in 0..self.logodds.len() {
            self.set_state(i, s);
        }
    }

    pub fn states(&self) -> impl Iterator<Item = VoxelState> + '_ {
        (0..self.logodds.len()).map(|i| self.state_at(i))
    }

    pub fn count(&self, s: VoxelState) -> usize {
        self.states().filter(|v| *v == s).count()
    }

    /// Same origin, resolution and dimensions.
    pub fn same_frame(&self, other: &OccupancyGrid) -> bool {
        self.dims == other.dims
            && (self.resolution - other.resolution).abs() <= 1e-12 * self.resolution
            && (self.origin - other.origin).amax() <= 1e-9
    }

    /// Voxel indices whose cells intersect the axis-aligned box `[lo, hi]`.
    pub fn voxel_range(&self, lo: &Vec3, hi: &Vec3) -> Option<([usize; 3], [usize; 3])> {
        let a = self.voxel_of_unchecked(lo);
        let b = self.voxel_of_unchecked(hi);
        let mut out_lo = [0; 3];
        let mut out_hi = [0; 3];
        for i in 0..3 {
            let l = a[i].max(0);
            let h = b[i].min(self.dims[i] as i64 - 1);
            if l > h {
                return None;
            }
            out_lo[i] = l as usize;
            out_hi[i] = h as usize;
        }
        Some((out_lo, out_hi))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn index_round_trip() {
        let g = OccupancyGrid::new(Vec3::zeros(), 0.5, [3, 4, 5], LogOddsParams::default()).unwrap();
        for idx in 0..g.len() {
            assert_eq!(g.index(g.coords(idx)), idx);
        }
        assert_eq!(g.index([1, 2, 3]), (4 + 2) * 5 + 3);
    }

    #[test]
    fn fresh_grid_is_unknown_and_updates_clamp() {
        let mut g = OccupancyGrid::new(Vec3::zeros(), 1.0, [2, 2, 2], LogOddsParams::default()).unwrap();
        assert_eq!(g.count(VoxelState::Unknown), 8);
        let hit = g.params().l_hit();
        for _ in 0..100 {
            g.update(0, hit);
        }
        assert_eq!(g.logodds(0), 3.5);
        g.update(1, g.params().l_miss());
        assert_eq!(g.state_at(1), VoxelState::Free);
        assert_eq!(g.state_at(0), VoxelState::Occupied);
    }

    #[test]
    fn voxel_lookup() {
        let g = OccupancyGrid::new(Vec3::new(-1.0, 0.0, 0.0), 0.5, [4, 4, 4], LogOddsParams::default()).unwrap();
        assert_eq!(g.voxel_of(&Vec3::new(-0.9, 0.1, 1.99)), Some([0, 0, 3]));
        assert_eq!(g.voxel_of(&Vec3::new(1.01, 0.1, 0.1)), None);
        assert!((g.center([0, 0, 0]) - Vec3::new(-0.75, 0.25, 0.25)).norm() < 1e-12);
    }
}

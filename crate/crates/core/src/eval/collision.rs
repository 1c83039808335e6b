use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mapping::{OccupancyGrid, VoxelState};
use crate::num::Real;

/// Outcomes of the box collision test, with ground truth as reference.
/// A collision is the positive class.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct CollisionConfusion {
    pub correct_collision: u64,
    pub missed_collision: u64,
    pub correct_free: u64,
    pub false_collision: u64,
}

impl CollisionConfusion {
    pub fn total(&self) -> u64 {
        self.correct_collision + self.missed_collision + self.correct_free + self.false_collision
    }

    /// Percentages in the order correct-collision, missed-collision,
    /// correct-free, false-collision. All zero for an empty tally.
    pub fn percentages(&self) -> [f64; 4] {
        let n = self.total();
        if n == 0 {
            return [0.0; 4];
        }
        [
            self.correct_collision,
            self.missed_collision,
            self.correct_free,
            self.false_collision,
        ]
        .map(|c| 100.0 * c as f64 / n as f64)
    }

    pub fn mcc(&self) -> f64 {
        mcc(
            self.correct_collision as f64,
            self.correct_free as f64,
            self.false_collision as f64,
            self.missed_collision as f64,
        )
    }
}

/// Matthews correlation coefficient from true/false positives and
/// negatives. Any scale works, so percentages can be passed directly.
/// Returns zero when a marginal is empty.
pub fn mcc<T: Real>(tp: T, tn: T, fp: T, fn_: T) -> T {
    let den = (tp + fp) * (tp + fn_) * (tn + fp) * (tn + fn_);
    if den <= T::zero() {
        return T::zero();
    }
    (tp * tn - fp * fn_) / den.sqrt()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MccConfig {
    /// Box extent in m, x y z.
    pub bbox: [f64; 3],
    /// Box step in m; one voxel when unset.
    pub stride: Option<f64>,
    pub unknown_is_collision: bool,
}

impl Default for MccConfig {
    fn default() -> Self {
        MccConfig {
            bbox: [0.6, 0.6, 0.4],
            stride: None,
            unknown_is_collision: true,
        }
    }
}

/// Inclusive prefix sums of blocked voxels, padded by one on each axis.
struct BlockedSums {
    dims: [usize; 3],
    sums: Vec<u32>,
}

impl BlockedSums {
    fn new(g: &OccupancyGrid, unknown_blocks: bool) -> Self {
        let [nx, ny, nz] = g.dims();
        let dims = [nx + 1, ny + 1, nz + 1];
        let at = |x: usize, y: usize, z: usize| (x * dims[1] + y) * dims[2] + z;
        let mut sums = vec![0u32; dims[0] * dims[1] * dims[2]];
        for x in 0..nx {
            for y in 0..ny {
                for z in 0..nz {
                    let blocked = match g.state([x, y, z]) {
                        VoxelState::Occupied => 1,
                        VoxelState::Unknown => unknown_blocks as u32,
                        VoxelState::Free => 0,
                    };
                    sums[at(x + 1, y + 1, z + 1)] = blocked
                        + sums[at(x, y + 1, z + 1)]
                        + sums[at(x + 1, y, z + 1)]
                        + sums[at(x + 1, y + 1, z)]
                        + sums[at(x, y, z)]
                        - sums[at(x, y, z + 1)]
                        - sums[at(x, y + 1, z)]
                        - sums[at(x + 1, y, z)];
                }
            }
        }
        BlockedSums { dims, sums }
    }

    /// Blocked count in the voxel box `[lo, lo + size)`.
    fn count(&self, lo: [usize; 3], size: [usize; 3]) -> u32 {
        let d = self.dims;
        let s = |x: usize, y: usize, z: usize| self.sums[(x * d[1] + y) * d[2] + z] as i64;
        let [x0, y0, z0] = lo;
        let [x1, y1, z1] = [x0 + size[0], y0 + size[1], z0 + size[2]];
        let v = s(x1, y1, z1) - s(x0, y1, z1) - s(x1, y0, z1) - s(x1, y1, z0)
            + s(x0, y0, z1)
            + s(x0, y1, z0)
            + s(x1, y0, z0)
            - s(x0, y0, z0);
        v as u32
    }
}

/// Sweeps a vehicle-sized box through both grids and tallies the collision
/// test outcomes, ground truth as reference. Returns the confusion and its
/// MCC.
pub fn mcc_eval(gt: &OccupancyGrid, est: &OccupancyGrid, cfg: &MccConfig) -> Result<(CollisionConfusion, f64)> {
    if !gt.same_frame(est) {
        return Err(Error::Parameter("grids differ in origin, resolution or size".into()));
    }
    let res = gt.resolution();
    if cfg.bbox.iter().any(|b| !(*b > 0.0)) {
        return Err(Error::Parameter("bounding box extents must be positive".into()));
    }
    let stride = match cfg.stride {
        Some(s) if !(s > 0.0) => return Err(Error::Parameter("stride must be positive".into())),
        Some(s) => ((s / res).round() as usize).max(1),
        None => 1,
    };
    let dims = gt.dims();
    let size = [0, 1, 2].map(|i| ((cfg.bbox[i] / res).round() as usize).max(1));
    if (0..3).any(|i| size[i] > dims[i]) {
        return Err(Error::Parameter("bounding box larger than the grid".into()));
    }
    let a = BlockedSums::new(gt, cfg.unknown_is_collision);
    let b = BlockedSums::new(est, cfg.unknown_is_collision);
    let mut c = CollisionConfusion::default();
    for x in (0..=dims[0] - size[0]).step_by(stride) {
        for y in (0..=dims[1] - size[1]).step_by(stride) {
            for z in (0..=dims[2] - size[2]).step_by(stride) {
                let lo = [x, y, z];
                match (a.count(lo, size) > 0, b.count(lo, size) > 0) {
                    (true, true) => c.correct_collision += 1,
                    (true, false) => c.missed_collision += 1,
                    (false, false) => c.correct_free += 1,
                    (false, true) => c.false_collision += 1,
                }
            }
        }
    }
    Ok((c, c.mcc()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mapping::LogOddsParams;
    use crate::Vec3;
    use proptest::prelude::*;

    fn grid_from(states: &[VoxelState], dims: [usize; 3]) -> OccupancyGrid {
        let mut g = OccupancyGrid::new(Vec3::zeros(), 0.2, dims, LogOddsParams::default()).unwrap();
        for (i, s) in states.iter().enumerate() {
            g.set_state(i, *s);
        }
        g
    }

    fn brute(gt: &OccupancyGrid, est: &OccupancyGrid, size: [usize; 3]) -> CollisionConfusion {
        let d = gt.dims();
        let hit = |g: &OccupancyGrid, x: usize, y: usize, z: usize| {
            (x..x + size[0])
                .any(|i| (y..y + size[1]).any(|j| (z..z + size[2]).any(|k| g.is_blocked_at(g.index([i, j, k])))))
        };
        let mut c = CollisionConfusion::default();
        for x in 0..=d[0] - size[0] {
            for y in 0..=d[1] - size[1] {
                for z in 0..=d[2] - size[2] {
                    match (hit(gt, x, y, z), hit(est, x, y, z)) {
                        (true, true) => c.correct_collision += 1,
                        (true, false) => c.missed_collision += 1,
                        (false, false) => c.correct_free += 1,
                        (false, true) => c.false_collision += 1,
                    }
                }
            }
        }
        c
    }

    #[test]
    fn identical_grids_score_one() {
        let dims = [6, 5, 4];
        let states: Vec<VoxelState> = (0..120)
            .map(|i| [VoxelState::Free, VoxelState::Free, VoxelState::Occupied][i % 3])
            .collect();
        let g = grid_from(&states, dims);
        let cfg = MccConfig {
            bbox: [0.2; 3],
            ..Default::default()
        };
        let (c, m) = mcc_eval(&g, &g, &cfg).unwrap();
        assert_eq!(m, 1.0);
        assert_eq!(c.missed_collision + c.false_collision, 0);
    }

    #[test]
    fn mismatched_frames_are_rejected() {
        let a = grid_from(&[], [4, 4, 4]);
        let b = grid_from(&[], [4, 4, 5]);
        assert!(matches!(
            mcc_eval(&a, &b, &MccConfig::default()),
            Err(Error::Parameter(_))
        ));
    }

    #[test]
    fn percentage_rows_reproduce_reported_scores() {
        // (correct-collision, correct-free, false-collision, missed-collision) -> MCC
        let rows = [
            ([54.02, 40.07, 5.78, 0.11], 0.886),
            ([51.17, 43.49, 4.67, 0.67], 0.896),
            ([51.90, 44.95, 2.75, 0.39], 0.938),
            ([54.13, 18.29, 27.57, 0.00], 0.514),
            ([51.84, 24.40, 23.76, 0.00], 0.589),
            ([52.30, 23.53, 24.17, 0.00], 0.581),
        ];
        for ([tp, tn, fp, fn_], want) in rows {
            let got: f64 = mcc(tp, tn, fp, fn_);
            assert!((got - want).abs() <= 0.005, "{got} vs {want}");
        }
    }

    #[test]
    fn degenerate_marginal_gives_zero() {
        assert_eq!(mcc(10.0, 0.0, 0.0, 0.0), 0.0);
        assert_eq!(mcc(0.0f32, 0.0, 0.0, 0.0), 0.0);
    }

    #[test]
    fn percentages_sum_to_hundred() {
        let c = CollisionConfusion {
            correct_collision: 7,
            missed_collision: 1,
            correct_free: 11,
            false_collision: 3,
        };
        let p = c.percentages();
        assert!((p.iter().sum::<f64>() - 100.0).abs() < 0.01);
        assert!((c.mcc() - mcc(p[0], p[2], p[3], p[1])).abs() < 1e-12);
    }

    fn state_strategy() -> impl Strategy<Value = VoxelState> {
        prop_oneof![
            Just(VoxelState::Free),
            Just(VoxelState::Occupied),
            Just(VoxelState::Unknown)
        ]
    }

    proptest! {
        #[test]
        fn prefix_sums_match_direct_box_test(
            a in prop::collection::vec(state_strategy(), 5 * 4 * 6),
            b in prop::collection::vec(state_strategy(), 5 * 4 * 6),
            sx in 1usize..4, sy in 1usize..4, sz in 1usize..4,
        ) {
            let dims = [5, 4, 6];
            let (ga, gb) = (grid_from(&a, dims), grid_from(&b, dims));
            let cfg = MccConfig { bbox: [0.2 * sx as f64, 0.2 * sy as f64, 0.2 * sz as f64], ..Default::default() };
            let (c, _) = mcc_eval(&ga, &gb, &cfg).unwrap();
            prop_assert_eq!(c, brute(&ga, &gb, [sx, sy, sz]));
        }

        #[test]
        fn relabeling_classes_keeps_mcc(
            a in prop::collection::vec(prop::bool::ANY, 4 * 4 * 4),
            b in prop::collection::vec(prop::bool::ANY, 4 * 4 * 4),
        ) {
            let dims = [4, 4, 4];
            let to = |v: &[bool], flip: bool| -> Vec<VoxelState> {
                v.iter().map(|o| if *o != flip { VoxelState::Occupied } else { VoxelState::Free }).collect()
            };
            let cfg = MccConfig { bbox: [0.2; 3], ..Default::default() };
            let (_, m) = mcc_eval(&grid_from(&to(&a, false), dims), &grid_from(&to(&b, false), dims), &cfg).unwrap();
            let (_, f) = mcc_eval(&grid_from(&to(&a, true), dims), &grid_from(&to(&b, true), dims), &cfg).unwrap();
            prop_assert!((m - f).abs() < 1e-12);
            prop_assert!((-1.0..=1.0).contains(&m));
        }

        #[test]
        fn swapping_outcome_classes_keeps_mcc(tp in 0u32..1000, tn in 0u32..1000, fp in 0u32..1000, fn_ in 0u32..1000) {
            let (tp, tn, fp, fn_) = (tp as f64, tn as f64, fp as f64, fn_ as f64);
            prop_assert!((mcc(tp, tn, fp, fn_) - mcc(tn, tp, fn_, fp)).abs() < 1e-12);
        }
    }
}

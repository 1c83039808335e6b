use super::{Clearance, PlannedPath};
use crate::error::{Error, Result};

/// Removes waypoints by skipping ahead to the farthest waypoint reachable in
/// a straight free line, as long as the total cost stays within
/// `(1 + budget)` times the cost of the input path.
pub fn shorten_path(p: &PlannedPath, clear: &Clearance, budget: f64) -> Result<PlannedPath> {
    if !(budget >= 0.0) {
        return Err(Error::Parameter("shortening budget must be non-negative".into()));
    }
    let mut pts = p.waypoints.clone();
    let mut cost = clear.path_cost(&pts);
    let limit = (1.0 + budget) * cost;
    let mut i = 0;
    while i + 2 < pts.len() {
        for j in (i + 2..pts.len()).rev() {
            if !clear.segment_free(&pts[i], &pts[j]) {
                continue;
            }
            let candidate = cost - clear.path_cost(&pts[i..=j]) + clear.segment_cost(&pts[i], &pts[j]);
            if candidate <= limit {
                pts.drain(i + 1..j);
                cost = candidate;
                break;
            }
        }
        i += 1;
    }
    Ok(PlannedPath {
        waypoints: pts,
        cost,
        ..Default::default()
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mapping::{LogOddsParams, OccupancyGrid, VoxelState};
    use crate::planner::{build_proximity_map, CostWeights, ProximityMap};
    use crate::Vec3;

    fn grid(block: Option<([f64; 3], [f64; 3])>) -> OccupancyGrid {
        let mut g = OccupancyGrid::new(Vec3::zeros(), 0.2, [50, 50, 20], LogOddsParams::default()).unwrap();
        for i in 0..g.len() {
            let c = g.center(g.coords(i));
            let solid = block.is_some_and(|(a, b)| (0..3).all(|k| c[k] >= a[k] && c[k] <= b[k]));
            g.set_state(i, if solid { VoxelState::Occupied } else { VoxelState::Free });
        }
        g
    }

    fn clear(prox: &ProximityMap) -> Clearance<'_> {
        Clearance {
            prox,
            radius: 0.2,
            weights: CostWeights::default(),
        }
    }

    fn path(c: &Clearance, pts: Vec<Vec3>) -> PlannedPath {
        PlannedPath {
            cost: c.path_cost(&pts),
            waypoints: pts,
            ..Default::default()
        }
    }

    #[test]
    fn two_point_path_is_a_fixed_point() {
        let prox = build_proximity_map(&grid(None), 3.0).unwrap();
        let c = clear(&prox);
        let p = path(&c, vec![Vec3::new(1.0, 1.0, 2.0), Vec3::new(8.0, 9.0, 2.0)]);
        assert_eq!(shorten_path(&p, &c, 0.1).unwrap().waypoints, p.waypoints);
    }

    #[test]
    fn zigzag_collapses_to_a_line() {
        let prox = build_proximity_map(&grid(None), 3.0).unwrap();
        let c = clear(&prox);
        let pts: Vec<Vec3> = (0..9)
            .map(|i| Vec3::new(1.0 + i as f64, 5.0 + if i % 2 == 0 { 0.0 } else { 0.7 }, 2.0))
            .collect();
        let p = path(&c, pts.clone());
        let s = shorten_path(&p, &c, 0.1).unwrap();
        assert_eq!(s.waypoints, vec![pts[0], pts[8]]);
        let direct = c.segment_cost(&pts[0], &pts[8]);
        assert!((s.cost - direct).abs() < 1e-9);
        assert!(s.cost < p.cost);
    }

    #[test]
    fn corner_cut_through_obstacle_is_rejected() {
        let prox = build_proximity_map(&grid(Some(([3.0, 3.0, 0.0], [10.0, 10.0, 4.0]))), 3.0).unwrap();
        let c = clear(&prox);
        let pts = vec![
            Vec3::new(5.0, 1.5, 2.0),
            Vec3::new(1.5, 1.5, 2.0),
            Vec3::new(1.5, 5.0, 2.0),
        ];
        assert!(c.path_free(&pts));
        let p = path(&c, pts.clone());
        let s = shorten_path(&p, &c, 0.1).unwrap();
        assert_eq!(s.waypoints, pts);
        assert!(c.path_free(&s.waypoints));
    }

    #[test]
    fn cost_stays_within_budget() {
        // hugging the block is shorter but dearer, so only part of the detour goes
        let prox = build_proximity_map(&grid(Some(([4.0, 0.0, 0.0], [6.0, 4.0, 4.0]))), 3.0).unwrap();
        let c = clear(&prox);
        let pts: Vec<Vec3> = [[1.0, 2.0], [2.0, 6.5], [5.0, 7.5], [8.0, 6.5], [9.0, 2.0]]
            .iter()
            .map(|q| Vec3::new(q[0], q[1], 2.0))
            .collect();
        let p = path(&c, pts);
        for budget in [0.0, 0.05, 0.1, 0.5] {
            let s = shorten_path(&p, &c, budget).unwrap();
            assert!(s.cost <= (1.0 + budget) * p.cost + 1e-9);
            assert!(s.waypoints.len() <= p.waypoints.len());
            assert!(c.path_free(&s.waypoints));
            assert!((s.cost - c.path_cost(&s.waypoints)).abs() < 1e-9);
        }
    }
}

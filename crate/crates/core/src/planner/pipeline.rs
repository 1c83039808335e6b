use serde::{Deserialize, Serialize};

use super::{plan_path, resample, shorten_path, speed_plan, Clearance, PlannedPath, Roadmap, SpeedLimits};
use crate::control::TimedWaypoint;
use crate::error::Result;
use crate::Vec3;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RouteConfig {
    /// Shortening budget relative to the query path cost.
    pub shorten_budget: f64,
    /// Largest waypoint spacing handed to the speed plan, m.
    pub spacing: f64,
    pub limits: SpeedLimits,
}

impl Default for RouteConfig {
    fn default() -> Self {
        RouteConfig {
            shorten_budget: 0.1,
            spacing: 1.0,
            limits: SpeedLimits::default(),
        }
    }
}

/// Query, shortening, resampling and speed plan in one call.
pub fn plan_route(rm: &Roadmap, clear: &Clearance, start: Vec3, goal: Vec3, cfg: &RouteConfig) -> Result<PlannedPath> {
    let raw = plan_path(rm, clear, start, goal)?;
    let short = shorten_path(&raw, clear, cfg.shorten_budget)?;
    speed_plan(&resample(&short, cfg.spacing)?, &cfg.limits)
}

/// Timed waypoints for the spline fit, at constant heading.
pub fn timed_waypoints(p: &PlannedPath, heading: f64) -> Vec<TimedWaypoint<f64>> {
    p.waypoints
        .iter()
        .zip(&p.times)
        .map(|(w, t)| TimedWaypoint::new(*w, heading, *t))
        .collect()
}

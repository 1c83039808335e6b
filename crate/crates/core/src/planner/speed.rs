use serde::{Deserialize, Serialize};

use super::PlannedPath;
use crate::error::{Error, Result};
use crate::textio::csv_table;
use crate::Vec3;

pub const PATH_HEADER: &str = "i,x,y,z,v,t";

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SpeedLimits {
    /// m/s
    pub v_max: f64,
    /// Lateral acceleration limit, m/s².
    pub a_lat: f64,
    /// Longitudinal acceleration limit, m/s².
    pub a_lon: f64,
}

impl Default for SpeedLimits {
    fn default() -> Self {
        SpeedLimits {
            v_max: 8.0,
            a_lat: 4.0,
            a_lon: 3.0,
        }
    }
}

/// Curvature of the circle through three points; zero when collinear.
pub fn circumcircle_curvature(a: &Vec3, b: &Vec3, c: &Vec3) -> f64 {
    let (u, v) = (b - a, c - b);
    let w = c - a;
    let den = u.norm() * v.norm() * w.norm();
    if den <= 0.0 {
        return 0.0;
    }
    2.0 * u.cross(&v).norm() / den
}

/// Inserts waypoints so no segment is longer than `spacing`.
pub fn resample(p: &PlannedPath, spacing: f64) -> Result<PlannedPath> {
    if !(spacing > 0.0) {
        return Err(Error::Parameter("resampling spacing must be positive".into()));
    }
    let mut out = Vec::new();
    for w in p.waypoints.windows(2) {
        let n = ((w[1] - w[0]).norm() / spacing).ceil().max(1.0) as usize;
        out.extend((0..n).map(|k| w[0].lerp(&w[1], k as f64 / n as f64)));
    }
    out.extend(p.waypoints.last().copied());
    Ok(PlannedPath {
        waypoints: out,
        cost: p.cost,
        ..Default::default()
    })
}

/// Assigns a speed and time to every waypoint: curvature-limited caps,
/// forward and backward passes for the longitudinal limit, zero speed at
/// both ends, and segment times for constant acceleration in between.
pub fn speed_plan(p: &PlannedPath, lim: &SpeedLimits) -> Result<PlannedPath> {
    let pts = &p.waypoints;
    let n = pts.len();
    if n < 2 {
        return Err(Error::Parameter("speed plan needs at least two waypoints".into()));
    }
    if !(lim.v_max > 0.0 && lim.a_lat > 0.0 && lim.a_lon > 0.0) {
        return Err(Error::Parameter("speed limits must be positive".into()));
    }
    if pts.windows(2).any(|w| w[0] == w[1]) {
        return Err(Error::Parameter("consecutive waypoints coincide".into()));
    }
    let mut v = vec![lim.v_max; n];
    for i in 1..n - 1 {
        let k = circumcircle_curvature(&pts[i - 1], &pts[i], &pts[i + 1]);
        if k > 0.0 {
            v[i] = v[i].min((lim.a_lat / k).sqrt());
        }
    }
    v[0] = 0.0;
    v[n - 1] = 0.0;
    let seg: Vec<f64> = pts.windows(2).map(|w| (w[1] - w[0]).norm()).collect();
    for i in 0..n - 1 {
        v[i + 1] = v[i + 1].min((v[i] * v[i] + 2.0 * lim.a_lon * seg[i]).sqrt());
    }
    for i in (0..n - 1).rev() {
        v[i] = v[i].min((v[i + 1] * v[i + 1] + 2.0 * lim.a_lon * seg[i]).sqrt());
    }
    let mut t = vec![0.0; n];
    for i in 0..n - 1 {
        let dt = if v[i] + v[i + 1] > 0.0 {
            2.0 * seg[i] / (v[i] + v[i + 1])
        } else {
            // single segment from rest to rest: accelerate, then brake
            2.0 * (seg[i] / lim.a_lon).sqrt()
        };
        t[i + 1] = t[i] + dt;
    }
    Ok(PlannedPath {
        waypoints: pts.clone(),
        cost: p.cost,
        speeds: v,
        times: t,
    })
}

pub fn path_to_csv(p: &PlannedPath) -> String {
    let rows: Vec<[f64; 6]> = p
        .waypoints
        .iter()
        .enumerate()
        .map(|(i, w)| {
            let v = p.speeds.get(i).copied().unwrap_or(0.0);
            let t = p.times.get(i).copied().unwrap_or(0.0);
            [i as f64, w.x, w.y, w.z, v, t]
        })
        .collect();
    csv_table(PATH_HEADER, rows.iter().map(|r| r.as_slice()))
}

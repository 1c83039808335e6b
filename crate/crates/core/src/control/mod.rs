//! Trajectory representation and the flight controller.
//!
//! A timed waypoint list is turned into a C⁴ piecewise quintic; the
//! controller tracks samples of it using the position, velocity,
//! acceleration, jerk and snap as feedforward.

mod controller;
mod poles;
mod spline;

pub use controller::{ControlOutput, FlightController};
pub use poles::{place_chain, poly_from_roots, ControllerGains, PiConfig, PoleSet};
pub use spline::{fit_spline, QuinticSpline, RefPoint, TimedWaypoint};

use crate::textio::csv_table;

pub const CONTROL_HEADER: &str = "t,thrust,tx,ty,tz,ex,ey,ez";

/// One row of the control log.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ControlRecord {
    pub stamp: f64,
    pub output: ControlOutput,
}

pub fn control_log_to_csv(log: &[ControlRecord]) -> String {
    let rows: Vec<[f64; 8]> = log
        .iter()
        .map(|r| {
            let c = r.output.command;
            let e = r.output.position_error;
            [r.stamp, c.thrust, c.torque.x, c.torque.y, c.torque.z, e.x, e.y, e.z]
        })
        .collect();
    csv_table(CONTROL_HEADER, rows.iter().map(|r| r.as_slice()))
}

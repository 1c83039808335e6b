use super::ControllerGains;
use crate::error::{Error, Result};
use crate::estimator::NavEstimate;
use crate::num::wrap_angle;
use crate::sim::{clamp_command, VehicleParams, WrenchCommand};
use crate::{Quat, RefPoint, Vec3};

/// Result of one control step.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ControlOutput {
    pub command: WrenchCommand,
    /// Reference minus estimate, world frame, m.
    pub position_error: Vec3,
    /// The free-fall guard was active this step.
    pub free_fall: bool,
    /// Integrated position error after this step, m·s.
    pub integral: Vec3,
}

/// Thrust-vector feedback linearization with pole placement.
///
/// Vertical acceleration is set through the thrust. The planar axes are
/// handled as a chain of four integrators (position, velocity, acceleration,
/// jerk) whose input, the snap, is produced by the angular acceleration about
/// body x and y; the thrust rate is neglected. The known part of the drag
/// (`drag * v` relative to still air) is compensated. The position error is
/// integrated inside a band around the reference, clamped, and fed back as
/// one more state of each chain.
#[derive(Clone, Debug)]
pub struct FlightController {
    gains: ControllerGains<f64>,
    vehicle: VehicleParams,
    integral: Vec3,
    hold: Option<Quat>,
    last_thrust: f64,
    free_fall_events: usize,
}

/// Free fall is declared below this fraction of g.
const FREE_FALL_FRACTION: f64 = 0.1;
/// Minimum vertical component of the thrust axis before the guard engages.
const MIN_TILT_COS: f64 = 0.2;

impl FlightController {
    pub fn new(gains: ControllerGains<f64>, vehicle: VehicleParams) -> Result<Self> {
        vehicle.validate()?;
        let last_thrust = vehicle.hover_thrust();
        Ok(FlightController {
            gains,
            vehicle,
            integral: Vec3::zeros(),
            hold: None,
            last_thrust,
            free_fall_events: 0,
        })
    }

    pub fn gains(&self) -> &ControllerGains<f64> {
        &self.gains
    }

    /// Integrated position error, m·s.
    pub fn integral(&self) -> Vec3 {
        self.integral
    }

    pub fn free_fall_events(&self) -> usize {
        self.free_fall_events
    }

    pub fn reset(&mut self) {
        self.integral = Vec3::zeros();
        self.hold = None;
    }

    /// Computes the wrench for one control period `dt`.
    pub fn step(&mut self, est: &NavEstimate, r: &RefPoint, dt: f64) -> Result<ControlOutput> {
        if !(dt > 0.0) || !est.is_finite() {
            return Err(Error::Parameter(
                "control step needs dt > 0 and a finite estimate".into(),
            ));
        }
        let g = &self.gains;
        let m = self.vehicle.mass;
        let grav = self.vehicle.gravity;
        let c = self.vehicle.drag / m;
        let inertia = self.vehicle.inertia_vec();

        let q = est.pose.orientation;
        let rot = q.to_rotation_matrix();
        let w = est.angular_rate;
        let v = est.velocity;
        let ez = Vec3::z();
        let b3 = rot * ez;

        let ep = r.position - est.pose.position;
        let ev = r.velocity - v;
        let lim = g.pi.limit;
        for i in 0..3 {
            if ep[i].abs() <= g.pi.band {
                self.integral[i] = (self.integral[i] + ep[i] * dt).clamp(-lim, lim);
            }
        }
        let [kv0, kv1] = g.vertical;
        let az = r.acceleration.z + kv1 * ev.z + kv0 * ep.z + g.vertical_integral * self.integral.z;
        let lift = az + grav + c * v.z;
        let free_fall = lift < FREE_FALL_FRACTION * grav || b3.z < MIN_TILT_COS;

        let w_dot = if free_fall {
            if self.hold.is_none() {
                self.free_fall_events += 1;
                self.hold = Some(q);
            }
            // hold the attitude from before the event, level thrust floor
            self.last_thrust = m * lift.max(FREE_FALL_FRACTION * grav) / b3.z.max(MIN_TILT_COS);
            let err = (q.inverse() * self.hold.unwrap()).to_rotation_vector();
            let [h0, h1] = g.heading;
            err * h0 - w * h1
        } else {
            self.hold = None;
            let thrust = m * lift / b3.z;
            self.last_thrust = thrust;
            let f = thrust / m;

            let a_est = b3 * f + Vec3::new(0.0, 0.0, -grav) - v * c;
            let j_est = rot * w.cross(&ez) * f - a_est * c;
            let [k0, k1, k2, k3] = g.planar;
            let mut snap = r.snap
                + (r.jerk - j_est) * k3
                + (r.acceleration - a_est) * k2
                + ev * k1
                + ep * k0
                + self.integral * g.planar_integral;
            snap.z = r.snap.z;

            // (T/m) R (w_dot x e_z) = s + c j - (T/m) R (w x (w x e_z))
            let vb = rot.transpose() * (snap + j_est * c) / f - w.cross(&w.cross(&ez));
            let yaw = q.yaw();
            let [h0, h1] = g.heading;
            let yaw_acc = r.heading_accel + h1 * (r.heading_rate - w.z) + h0 * wrap_angle(r.heading - yaw);
            Vec3::new(-vb.y, vb.x, yaw_acc)
        };

        let torque = inertia.component_mul(&w_dot) + w.cross(&inertia.component_mul(&w));
        let command = clamp_command(
            &WrenchCommand {
                thrust: self.last_thrust,
                torque,
            },
            &self.vehicle,
        );
        Ok(ControlOutput {
            command,
            position_error: ep,
            free_fall,
            integral: self.integral,
        })
    }
}

//! IMU-driven pose tracking with delayed pose corrections.
//!
//! IMU samples are integrated with explicit Euler steps. A pose measurement
//! that arrives late is merged into the snapshot taken at its capture time,
//! and every IMU sample received since then is re-applied to bring the
//! estimate back to the present. Orientation is merged by turning part of
//! the way towards the measured attitude. The merge weights are fixed ahead
//! of time from the steady state of a Kalman covariance recursion.

mod buffer;
mod weights;

use nalgebra::Vector3;

pub use buffer::{blend, Gate, ReplayBuffer, ReplayEntry};
pub use weights::{steady_state_gain, steady_state_weights, FusionWeights, SensorRates, SteadyState};

use crate::error::{Error, Result};
use crate::sim::{ImuSample, PoseMeasurement};
use crate::textio::csv_table;
use crate::{Pose, Quat, Vec3, GRAVITY};

pub const ESTIMATE_HEADER: &str = "t,x,y,z,qw,qx,qy,qz,vx,vy,vz,bax,bay,baz,bgx,bgy,bgz";

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NavEstimate {
    pub pose: Pose,
    /// World frame, m/s.
    pub velocity: Vec3,
    /// Body frame, m/s².
    pub accel_bias: Vec3,
    /// Body frame, rad/s.
    pub gyro_bias: Vec3,
    /// Latest bias-corrected body rate, rad/s.
    pub angular_rate: Vec3,
    /// Latest bias-corrected world acceleration, m/s².
    pub acceleration: Vec3,
    pub stamp: f64,
}

impl NavEstimate {
    pub fn at_pose(pose: Pose) -> Self {
        NavEstimate {
            pose,
            velocity: Vec3::zeros(),
            accel_bias: Vec3::zeros(),
            gyro_bias: Vec3::zeros(),
            angular_rate: Vec3::zeros(),
            acceleration: Vec3::zeros(),
            stamp: pose.stamp,
        }
    }

    pub fn is_finite(&self) -> bool {
        self.pose.is_valid()
            && [self.velocity, self.accel_bias, self.gyro_bias]
                .iter()
                .all(|v| v.iter().all(|c| c.is_finite()))
    }

    fn log_row(&self) -> [f64; 17] {
        let q = self.pose.orientation;
        let p = self.pose.position;
        [
            self.stamp,
            p.x,
            p.y,
            p.z,
            q.w(),
            q.x(),
            q.y(),
            q.z(),
            self.velocity.x,
            self.velocity.y,
            self.velocity.z,
            self.accel_bias.x,
            self.accel_bias.y,
            self.accel_bias.z,
            self.gyro_bias.x,
            self.gyro_bias.y,
            self.gyro_bias.z,
        ]
    }
}

/// Estimator log in the `t,x,y,z,qw,...,bgz` CSV layout.
pub fn estimates_to_csv(log: &[NavEstimate]) -> String {
    let rows: Vec<[f64; 17]> = log.iter().map(NavEstimate::log_row).collect();
    csv_table(ESTIMATE_HEADER, rows.iter().map(|r| r.as_slice()))
}

/// Euler prediction step with gravity `9.81` along world `-z`.
///
/// Velocity takes the specific force rotated by the current attitude, and
/// position the updated velocity. The attitude advances by the mean of the
/// previous and current bias-corrected rate, which removes most of the
/// first-order error during fast rotations.
pub fn predict(est: &NavEstimate, imu: &ImuSample) -> Result<NavEstimate> {
    predict_with_gravity(est, imu, GRAVITY)
}

pub fn predict_with_gravity(est: &NavEstimate, imu: &ImuSample, gravity: f64) -> Result<NavEstimate> {
    let dt = imu.stamp - est.stamp;
    if !(dt > 0.0) {
        return Err(Error::Ordering {
            got: imu.stamp,
            last: est.stamp,
        });
    }
    let q = est.pose.orientation;
    let rate = imu.angular_rate - est.gyro_bias;
    let accel = q.rotate(&(imu.specific_force - est.accel_bias)) + Vector3::new(0.0, 0.0, -gravity);
    // mean of the previous and current rate over the interval
    let orientation = q * Quat::from_rotation_vector(&((rate + est.angular_rate) * (0.5 * dt)));
    let velocity = est.velocity + accel * dt;
    let position = est.pose.position + velocity * dt;
    Ok(NavEstimate {
        pose: Pose::new(position, orientation, imu.stamp),
        velocity,
        accel_bias: est.accel_bias,
        gyro_bias: est.gyro_bias,
        angular_rate: rate,
        acceleration: accel,
        stamp: imu.stamp,
    })
}

/// Outcome of feeding one pose measurement.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CorrectionOutcome {
    Applied,
    Gated,
    Stale,
}

/// Single-writer estimator: the replay buffer plus fixed weights.
#[derive(Clone, Debug)]
pub struct DelayedFusionEstimator {
    buffer: ReplayBuffer,
    weights: FusionWeights,
    gate: Option<Gate>,
    gravity: f64,
    applied: usize,
    gated: usize,
    stale: usize,
}

impl DelayedFusionEstimator {
    pub fn new(initial: NavEstimate, weights: FusionWeights, capacity: usize) -> Result<Self> {
        weights.validate()?;
        Ok(DelayedFusionEstimator {
            buffer: ReplayBuffer::new(initial, capacity)?,
            weights,
            gate: None,
            gravity: GRAVITY,
            applied: 0,
            gated: 0,
            stale: 0,
        })
    }

    pub fn with_gate(mut self, gate: Gate) -> Self {
        self.gate = Some(gate);
        self
    }

    pub fn with_gravity(mut self, gravity: f64) -> Self {
        self.gravity = gravity;
        self
    }

    pub fn estimate(&self) -> &NavEstimate {
        self.buffer.latest()
    }

    pub fn weights(&self) -> &FusionWeights {
        &self.weights
    }

    pub fn buffer(&self) -> &ReplayBuffer {
        &self.buffer
    }

    pub fn process_imu(&mut self, imu: &ImuSample) -> Result<&NavEstimate> {
        self.buffer.push_imu(imu, self.gravity)?;
        Ok(self.buffer.latest())
    }

    /// Merges a delayed measurement; stale or gated measurements are counted
    /// and dropped without touching the estimate.
    pub fn process_pose(&mut self, meas: &PoseMeasurement) -> Result<CorrectionOutcome> {
        match self
            .buffer
            .correct(meas, &self.weights, self.gate.as_mut(), self.gravity)
        {
            Ok(true) => {
                self.applied += 1;
                Ok(CorrectionOutcome::Applied)
            }
            Ok(false) => {
                self.gated += 1;
                Ok(CorrectionOutcome::Gated)
            }
            Err(Error::StaleMeasurement { .. }) => {
                self.stale += 1;
                Ok(CorrectionOutcome::Stale)
            }
            Err(e) => Err(e),
        }
    }

    /// (applied, gated, stale) measurement counts.
    pub fn counts(&self) -> (usize, usize, usize) {
        (self.applied, self.gated, self.stale)
    }
}

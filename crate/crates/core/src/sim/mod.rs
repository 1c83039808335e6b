//! Deterministic hexacopter simulation with IMU and delayed pose sensors.
//!
//! The vehicle is actuated at wrench level (collective thrust along body `z`
//! plus three body torques). Rigid-body motion is integrated with
//! semi-implicit Euler at a fixed internal step; sensors fire on exact
//! integer tick grids so their rates never drift.

mod dynamics;
mod sensors;

use std::collections::VecDeque;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

pub use dynamics::{clamp_command, step_dynamics};
pub use sensors::{sample_imu, sample_pose_sensor, ImuSample, PoseMeasurement};

use crate::error::{Error, Result};
use crate::{Pose, Twist, Vec3, GRAVITY};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct VehicleParams {
    /// kg
    pub mass: f64,
    /// Diagonal of the inertia tensor, kg·m².
    pub inertia: [f64; 3],
    /// N
    pub max_thrust: f64,
    /// Per-axis torque limit, N·m.
    pub max_torque: [f64; 3],
    /// Linear drag coefficient, N·s/m.
    pub drag: f64,
    /// m/s²
    pub gravity: f64,
}

impl Default for VehicleParams {
    fn default() -> Self {
        VehicleParams {
            mass: 1.5,
            inertia: [0.0348, 0.0459, 0.0977],
            max_thrust: 36.0,
            max_torque: [4.0, 4.0, 1.5],
            drag: 0.3,
            gravity: GRAVITY,
        }
    }
}

impl VehicleParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.mass > 0.0) || self.inertia.iter().any(|i| !(*i > 0.0)) {
            return Err(Error::Parameter("mass and inertia must be positive".into()));
        }
        if !(self.max_thrust > 0.0) || self.max_torque.iter().any(|t| !(*t > 0.0)) {
            return Err(Error::Parameter("actuator limits must be positive".into()));
        }
        if !(self.drag >= 0.0) || !(self.gravity > 0.0) {
            return Err(Error::Parameter("drag must be >= 0 and gravity > 0".into()));
        }
        Ok(())
    }

    pub fn inertia_vec(&self) -> Vec3 {
        Vec3::from(self.inertia)
    }

    pub fn gravity_vec(&self) -> Vec3 {
        Vec3::new(0.0, 0.0, -self.gravity)
    }

    pub fn hover_thrust(&self) -> f64 {
        self.mass * self.gravity
    }
}

/// Full simulated state.
///
/// `twist.linear` is the world-frame velocity, `twist.angular` the body rate.
/// The biases are the sensor truth, not estimates.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct VehicleState {
    pub pose: Pose,
    pub twist: Twist,
    pub accel_bias: Vec3,
    pub gyro_bias: Vec3,
}

impl VehicleState {
    pub fn at_rest(position: Vec3) -> Self {
        VehicleState {
            pose: Pose::from_translation(position),
            ..Default::default()
        }
    }

    pub fn is_finite(&self) -> bool {
        self.pose.is_valid()
            && self.twist.is_finite()
            && self.accel_bias.iter().all(|c| c.is_finite())
            && self.gyro_bias.iter().all(|c| c.is_finite())
    }
}

/// Collective thrust and body torques.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct WrenchCommand {
    /// N
    pub thrust: f64,
    /// N·m, body frame.
    pub torque: Vec3,
}

impl WrenchCommand {
    pub fn hover(params: &VehicleParams) -> Self {
        WrenchCommand {
            thrust: params.hover_thrust(),
            torque: Vec3::zeros(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Gust {
    /// s
    pub start: f64,
    /// s
    pub duration: f64,
    /// m/s, added to the constant wind while active.
    pub velocity: [f64; 3],
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct WindProfile {
    pub constant: [f64; 3],
    pub gusts: Vec<Gust>,
}

impl WindProfile {
    pub fn calm() -> Self {
        Self::default()
    }

    pub fn validate(&self) -> Result<()> {
        for g in &self.gusts {
            if !(g.duration > 0.0) {
                return Err(Error::Parameter("gust duration must be positive".into()));
            }
        }
        if self.gusts.windows(2).any(|w| w[1].start < w[0].start) {
            return Err(Error::Parameter("gusts must be sorted by start time".into()));
        }
        Ok(())
    }

    /// World-frame wind velocity at time `t`.
    pub fn at(&self, t: f64) -> Vec3 {
        let mut w = Vec3::from(self.constant);
        for g in &self.gusts {
            if t >= g.start && t < g.start + g.duration {
                w += Vec3::from(g.velocity);
            }
        }
        w
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NoiseConfig {
    /// White accelerometer noise, m/s².
    pub accel_std: f64,
    /// White gyro noise, rad/s.
    pub gyro_std: f64,
    /// Accelerometer bias random walk, m/s² per √s.
    pub accel_bias_walk: f64,
    /// Gyro bias random walk, rad/s per √s.
    pub gyro_bias_walk: f64,
    /// m
    pub pose_position_std: f64,
    /// Degrees, per axis.
    pub pose_orientation_std_deg: f64,
}

impl Default for NoiseConfig {
    fn default() -> Self {
        NoiseConfig {
            accel_std: 0.02,
            gyro_std: 0.002,
            accel_bias_walk: 0.001,
            gyro_bias_walk: 0.001,
            pose_position_std: 0.01,
            pose_orientation_std_deg: 0.2,
        }
    }
}

impl NoiseConfig {
    pub fn noiseless() -> Self {
        NoiseConfig {
            accel_std: 0.0,
            gyro_std: 0.0,
            accel_bias_walk: 0.0,
            gyro_bias_walk: 0.0,
            pose_position_std: 0.0,
            pose_orientation_std_deg: 0.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let all = [
            self.accel_std,
            self.gyro_std,
            self.accel_bias_walk,
            self.gyro_bias_walk,
            self.pose_position_std,
            self.pose_orientation_std_deg,
        ];
        if all.iter().any(|v| !(*v >= 0.0)) {
            return Err(Error::Parameter("noise std-devs must be >= 0".into()));
        }
        Ok(())
    }

    pub fn pose_orientation_std(&self) -> f64 {
        self.pose_orientation_std_deg.to_radians()
    }
}

/// Sensor timing. Periods are expressed in internal ticks.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SensorTiming {
    /// Internal integration step, s.
    pub dt: f64,
    /// IMU period in ticks (10 → 100 Hz at dt = 1 ms).
    pub imu_every: u64,
    /// Pose sensor period in ticks (100 → 10 Hz).
    pub pose_every: u64,
    /// Pose measurement delay, s.
    pub pose_delay: f64,
}

impl Default for SensorTiming {
    fn default() -> Self {
        SensorTiming {
            dt: 0.001,
            imu_every: 10,
            pose_every: 100,
            pose_delay: 0.100,
        }
    }
}

impl SensorTiming {
    pub fn imu_period(&self) -> f64 {
        self.dt * self.imu_every as f64
    }

    pub fn pose_period(&self) -> f64 {
        self.dt * self.pose_every as f64
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0 && self.dt <= 0.02) || self.imu_every == 0 || self.pose_every == 0 {
            return Err(Error::Parameter("invalid sensor timing".into()));
        }
        if !(self.pose_delay >= 0.0) {
            return Err(Error::Parameter("pose delay must be >= 0".into()));
        }
        Ok(())
    }
}

/// Time-indexed truth poses, oldest first.
#[derive(Clone, Debug, Default)]
pub struct TruthHistory {
    poses: VecDeque<Pose>,
    capacity: usize,
}

impl TruthHistory {
    pub fn new(capacity: usize) -> Self {
        TruthHistory {
            poses: VecDeque::with_capacity(capacity.max(2)),
            capacity: capacity.max(2),
        }
    }

    pub fn push(&mut self, pose: Pose) {
        if self.poses.len() == self.capacity {
            self.poses.pop_front();
        }
        self.poses.push_back(pose);
    }

    pub fn span(&self) -> Option<(f64, f64)> {
        Some((self.poses.front()?.stamp, self.poses.back()?.stamp))
    }

    /// Pose at time `t`; exact when `t` is a stored stamp, otherwise
    /// interpolated between the neighbours.
    pub fn at(&self, t: f64) -> Result<Pose> {
        const EPS: f64 = 1e-9;
        let (first, last) = self.span().ok_or(Error::Coverage {
            requested: t,
            first: f64::NAN,
            last: f64::NAN,
        })?;
        if t < first - EPS || t > last + EPS {
            return Err(Error::Coverage {
                requested: t,
                first,
                last,
            });
        }
        let idx = self.poses.partition_point(|p| p.stamp < t - EPS);
        let hi = self.poses[idx.min(self.poses.len() - 1)];
        if (hi.stamp - t).abs() <= EPS || idx == 0 {
            return Ok(hi.with_stamp(t));
        }
        let lo = self.poses[idx - 1];
        let s = (t - lo.stamp) / (hi.stamp - lo.stamp);
        let q = crate::Quat::partial_rotation(&lo.orientation, &hi.orientation, s)?;
        Ok(Pose::new(lo.position + (hi.position - lo.position) * s, q, t))
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SimConfig {
    pub vehicle: VehicleParams,
    pub noise: NoiseConfig,
    pub wind: WindProfile,
    pub timing: SensorTiming,
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        self.vehicle.validate()?;
        self.noise.validate()?;
        self.wind.validate()?;
        self.timing.validate()
    }
}

/// Sensor output produced by one internal tick.
#[derive(Clone, Debug, Default)]
pub struct TickOutput {
    pub imu: Option<ImuSample>,
    pub pose: Option<PoseMeasurement>,
}

/// Stepping simulator. Not shareable while stepping.
pub struct Simulator {
    config: SimConfig,
    state: VehicleState,
    tick: u64,
    command: WrenchCommand,
    last_accel: Vec3,
    last_imu_stamp: f64,
    history: TruthHistory,
    imu_rng: ChaCha8Rng,
    pose_rng: ChaCha8Rng,
}

impl Simulator {
    pub fn new(config: SimConfig, initial: VehicleState, seed: u64) -> Result<Self> {
        config.validate()?;
        if !initial.is_finite() {
            return Err(Error::State("initial state not finite".into()));
        }
        let mut imu_rng = ChaCha8Rng::seed_from_u64(seed);
        imu_rng.set_stream(1);
        let mut pose_rng = ChaCha8Rng::seed_from_u64(seed);
        pose_rng.set_stream(2);
        let keep =
            ((config.timing.pose_delay / config.timing.dt).ceil() as usize) + 2 * config.timing.pose_every as usize + 4;
        let mut history = TruthHistory::new(keep);
        let mut state = initial;
        state.pose.stamp = 0.0;
        history.push(state.pose);
        let command = WrenchCommand::hover(&config.vehicle);
        Ok(Simulator {
            config,
            state,
            tick: 0,
            command,
            last_accel: Vec3::zeros(),
            last_imu_stamp: 0.0,
            history,
            imu_rng,
            pose_rng,
        })
    }

    pub fn config(&self) -> &SimConfig {
        &self.config
    }

    pub fn state(&self) -> &VehicleState {
        &self.state
    }

    pub fn time(&self) -> f64 {
        self.tick as f64 * self.config.timing.dt
    }

    pub fn command(&self) -> WrenchCommand {
        self.command
    }

    /// Sets the wrench held until the next call; clamped to actuator limits.
    pub fn set_command(&mut self, cmd: WrenchCommand) {
        self.command = clamp_command(&cmd, &self.config.vehicle);
    }

    /// Advances one internal tick.
    pub fn step(&mut self) -> Result<TickOutput> {
        let timing = &self.config.timing;
        let dt = timing.dt;
        let wind = self.config.wind.at(self.time());
        let (next, accel) = step_dynamics(&self.state, &self.command, &wind, &self.config.vehicle, dt)?;
        self.state = next;
        self.last_accel = accel;
        self.tick += 1;
        let now = self.time();
        self.state.pose.stamp = now;
        self.history.push(self.state.pose);

        let mut out = TickOutput::default();
        if self.tick.is_multiple_of(timing.imu_every) {
            let (imu, ba, bg) = sample_imu(
                &self.state,
                &self.last_accel,
                &self.config.vehicle,
                &self.config.noise,
                &mut self.imu_rng,
                now,
                now - self.last_imu_stamp,
            );
            self.state.accel_bias = ba;
            self.state.gyro_bias = bg;
            self.last_imu_stamp = now;
            out.imu = Some(imu);
        }
        if self.tick.is_multiple_of(timing.pose_every) && now >= timing.pose_delay - 1e-12 {
            out.pose = sample_pose_sensor(
                &self.history,
                now,
                &self.config.noise,
                &mut self.pose_rng,
                timing.pose_delay,
                timing.pose_period(),
            )?;
        }
        Ok(out)
    }

    /// Runs ticks until the next IMU sample and returns everything emitted.
    pub fn step_to_next_imu(&mut self) -> Result<(ImuSample, Option<PoseMeasurement>)> {
        let mut pose = None;
        loop {
            let out = self.step()?;
            if out.pose.is_some() {
                pose = out.pose;
            }
            if let Some(imu) = out.imu {
                return Ok((imu, pose));
            }
        }
    }

    /// True world acceleration of the last tick.
    pub fn last_accel(&self) -> Vec3 {
        self.last_accel
    }
}

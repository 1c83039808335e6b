use rand::Rng;
use rand_distr::StandardNormal;

use super::{NoiseConfig, TruthHistory, VehicleParams, VehicleState};
use crate::error::Result;
use crate::{Pose, Quat, Vec3};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ImuSample {
    /// s
    pub stamp: f64,
    /// Body frame, m/s². Reads `+g` on `z` when hovering level.
    pub specific_force: Vec3,
    /// Body frame, rad/s.
    pub angular_rate: Vec3,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PoseMeasurement {
    pub capture_stamp: f64,
    pub delivery_stamp: f64,
    pub pose: Pose,
}

fn gaussian3<R: Rng>(rng: &mut R, std: f64) -> Vec3 {
    let x: f64 = rng.sample(StandardNormal);
    let y: f64 = rng.sample(StandardNormal);
    let z: f64 = rng.sample(StandardNormal);
    Vec3::new(x, y, z) * std
}

/// Produces one IMU sample and the random-walked biases.
///
/// The sample uses the biases held in `state`; the walk is applied afterwards
/// over `dt` seconds. Random draws happen regardless of the configured
/// std-devs so streams stay aligned across noise settings.
pub fn sample_imu<R: Rng>(
    state: &VehicleState,
    true_accel: &Vec3,
    params: &VehicleParams,
    noise: &NoiseConfig,
    rng: &mut R,
    stamp: f64,
    dt: f64,
) -> (ImuSample, Vec3, Vec3) {
    let q = state.pose.orientation;
    let f_world = true_accel - params.gravity_vec();
    let specific_force = q.inverse().rotate(&f_world) + state.accel_bias + gaussian3(rng, noise.accel_std);
    let angular_rate = state.twist.angular + state.gyro_bias + gaussian3(rng, noise.gyro_std);
    let sq = dt.max(0.0).sqrt();
    let ba = state.accel_bias + gaussian3(rng, noise.accel_bias_walk * sq);
    let bg = state.gyro_bias + gaussian3(rng, noise.gyro_bias_walk * sq);
    (
        ImuSample {
            stamp,
            specific_force,
            angular_rate,
        },
        ba,
        bg,
    )
}

/// Emits a delayed pose measurement when `now` lies on the sensor grid.
pub fn sample_pose_sensor<R: Rng>(
    history: &TruthHistory,
    now: f64,
    noise: &NoiseConfig,
    rng: &mut R,
    delay: f64,
    period: f64,
) -> Result<Option<PoseMeasurement>> {
    let k = (now / period).round();
    if (now - k * period).abs() > 1e-9 {
        return Ok(None);
    }
    let capture = now - delay;
    let truth = history.at(capture)?;
    let dp = gaussian3(rng, noise.pose_position_std);
    let dtheta = gaussian3(rng, noise.pose_orientation_std());
    let pose = Pose::new(
        truth.position + dp,
        truth.orientation * Quat::from_rotation_vector(&dtheta),
        capture,
    );
    Ok(Some(PoseMeasurement {
        capture_stamp: capture,
        delivery_stamp: now,
        pose,
    }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::error::Error;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn hover_specific_force_is_plus_g() {
        let p = VehicleParams::default();
        let s = VehicleState::default();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let (imu, ba, bg) = sample_imu(&s, &Vec3::zeros(), &p, &NoiseConfig::noiseless(), &mut rng, 0.01, 0.01);
        assert!((imu.specific_force - Vec3::new(0.0, 0.0, 9.81)).norm() < 1e-12);
        assert_eq!(imu.angular_rate, Vec3::zeros());
        assert_eq!(ba, Vec3::zeros());
        assert_eq!(bg, Vec3::zeros());
    }

    #[test]
    fn zero_walk_keeps_bias_constant() {
        let p = VehicleParams::default();
        let mut s = VehicleState {
            accel_bias: Vec3::new(0.1, -0.2, 0.05),
            ..Default::default()
        };
        let noise = NoiseConfig {
            accel_bias_walk: 0.0,
            gyro_bias_walk: 0.0,
            ..Default::default()
        };
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for i in 0..10_000 {
            let (_, ba, bg) = sample_imu(&s, &Vec3::zeros(), &p, &noise, &mut rng, i as f64 * 0.01, 0.01);
            s.accel_bias = ba;
            s.gyro_bias = bg;
        }
        assert_eq!(s.accel_bias, Vec3::new(0.1, -0.2, 0.05));
    }

    #[test]
    fn bias_walk_variance_grows_linearly() {
        // Monte Carlo: increments after t seconds have variance walk² t.
        let p = VehicleParams::default();
        let noise = NoiseConfig {
            accel_bias_walk: 0.01,
            ..NoiseConfig::noiseless()
        };
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let dt = 0.01;
        let steps = 100;
        let mut finals = Vec::new();
        for _ in 0..1000 {
            let mut s = VehicleState::default();
            for i in 0..steps {
                let (_, ba, _) = sample_imu(&s, &Vec3::zeros(), &p, &noise, &mut rng, i as f64 * dt, dt);
                s.accel_bias = ba;
            }
            finals.push(s.accel_bias.x);
        }
        let n = finals.len() as f64;
        let mean = finals.iter().sum::<f64>() / n;
        let var = finals.iter().map(|b| (b - mean).powi(2)).sum::<f64>() / (n - 1.0);
        let expect = 0.01f64.powi(2) * (steps as f64 * dt);
        assert!((var / expect - 1.0).abs() < 0.2, "var {var} expect {expect}");
    }

    fn history() -> TruthHistory {
        let mut h = TruthHistory::new(2000);
        for k in 0..=1100 {
            let t = k as f64 * 0.001;
            h.push(Pose::new(Vec3::new(t, 2.0 * t, 0.5), Quat::from_yaw(t), t));
        }
        h
    }

    #[test]
    fn pose_sensor_grid_and_delay() {
        let h = history();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let noise = NoiseConfig::noiseless();
        let m = sample_pose_sensor(&h, 1.0, &noise, &mut rng, 0.1, 0.1)
            .unwrap()
            .unwrap();
        assert!((m.capture_stamp - 0.9).abs() < 1e-12);
        assert_eq!(m.delivery_stamp, 1.0);
        let truth = h.at(0.9).unwrap();
        assert!((m.pose.position - truth.position).norm() < 1e-12);
        assert!(m.pose.orientation.angle_to(&truth.orientation) < 1e-12);
        assert!(sample_pose_sensor(&h, 1.003, &noise, &mut rng, 0.1, 0.1)
            .unwrap()
            .is_none());
    }

    #[test]
    fn pose_sensor_reports_short_history() {
        let h = history();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let r = sample_pose_sensor(&h, 1.3, &NoiseConfig::default(), &mut rng, 0.1, 0.1);
        assert!(matches!(r, Err(Error::Coverage { .. })));
    }
}

use std::collections::VecDeque;

use super::{predict_with_gravity, FusionWeights, NavEstimate};
use crate::error::{Error, Result};
use crate::sim::{ImuSample, PoseMeasurement};
use crate::Quat;

/// Innovation gate: measurements whose innovation exceeds `n_sigma`
/// standard deviations on any axis are dropped. After
/// `max_consecutive` drops in a row the next measurement is accepted
/// unconditionally so a diverged estimate can recover.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Gate {
    pub position_std: f64,
    pub orientation_std: f64,
    pub n_sigma: f64,
    pub max_consecutive: usize,
    rejected_in_row: usize,
}

impl Gate {
    pub fn new(position_std: f64, orientation_std: f64) -> Self {
        Gate {
            position_std,
            orientation_std,
            n_sigma: 5.0,
            max_consecutive: 10,
            rejected_in_row: 0,
        }
    }

    fn admits(&mut self, snapshot: &NavEstimate, meas: &PoseMeasurement) -> bool {
        let dp = meas.pose.position - snapshot.pose.position;
        let dq = (snapshot.pose.orientation.inverse() * meas.pose.orientation).to_rotation_vector();
        let ok = dp.amax() <= self.n_sigma * self.position_std && dq.amax() <= self.n_sigma * self.orientation_std;
        if ok || self.rejected_in_row >= self.max_consecutive {
            self.rejected_in_row = 0;
            true
        } else {
            self.rejected_in_row += 1;
            false
        }
    }
}

/// Merges a pose measurement into a snapshot taken at its capture time.
///
/// Position is pulled by `w.position` of the innovation, velocity and the
/// accelerometer bias receive the innovation through their gains, and the
/// orientation turns by `w.orientation` of the relative rotation. The gyro
/// bias absorbs the rotational innovation.
pub fn blend(snapshot: &NavEstimate, meas: &PoseMeasurement, w: &FusionWeights) -> Result<NavEstimate> {
    let t = w.period;
    let q = snapshot.pose.orientation;
    let innovation = meas.pose.position - snapshot.pose.position;
    let rot_innovation = (q.inverse() * meas.pose.orientation).to_rotation_vector();

    let mut out = *snapshot;
    out.pose.position += innovation * w.position;
    out.velocity += innovation * (w.velocity / t);
    out.accel_bias -= q.inverse().rotate(&innovation) * (w.accel_bias / (t * t));
    out.pose.orientation = Quat::partial_rotation(&q, &meas.pose.orientation, w.orientation)?;
    out.gyro_bias -= rot_innovation * (w.gyro_bias / t);
    Ok(out)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ReplayEntry {
    /// `None` for the base entry that seeds the buffer.
    pub imu: Option<ImuSample>,
    /// Estimate after applying `imu`.
    pub snapshot: NavEstimate,
}

/// Ring of IMU samples and the estimate after each, oldest first.
#[derive(Clone, Debug)]
pub struct ReplayBuffer {
    entries: VecDeque<ReplayEntry>,
    capacity: usize,
}

impl ReplayBuffer {
    /// `capacity` must cover the sensor delay plus one measurement period
    /// at the IMU rate.
    pub fn new(initial: NavEstimate, capacity: usize) -> Result<Self> {
        if capacity < 2 {
            return Err(Error::Parameter("replay buffer needs capacity >= 2".into()));
        }
        if !initial.is_finite() {
            return Err(Error::State("initial estimate not finite".into()));
        }
        let mut entries = VecDeque::with_capacity(capacity);
        entries.push_back(ReplayEntry {
            imu: None,
            snapshot: initial,
        });
        Ok(ReplayBuffer { entries, capacity })
    }

    pub fn latest(&self) -> &NavEstimate {
        &self.entries.back().expect("buffer never empty").snapshot
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    /// Oldest and newest snapshot stamps.
    pub fn span(&self) -> (f64, f64) {
        (
            self.entries.front().unwrap().snapshot.stamp,
            self.entries.back().unwrap().snapshot.stamp,
        )
    }

    pub fn entries(&self) -> impl Iterator<Item = &ReplayEntry> {
        self.entries.iter()
    }

    pub fn push_imu(&mut self, imu: &ImuSample, gravity: f64) -> Result<()> {
        let next = predict_with_gravity(self.latest(), imu, gravity)?;
        if self.entries.len() == self.capacity {
            self.entries.pop_front();
        }
        self.entries.push_back(ReplayEntry {
            imu: Some(*imu),
            snapshot: next,
        });
        Ok(())
    }

    /// Index of the newest snapshot at or before `stamp`.
    pub fn anchor_index(&self, stamp: f64) -> Result<usize> {
        const EPS: f64 = 1e-9;
        let n = self.entries.partition_point(|e| e.snapshot.stamp <= stamp + EPS);
        if n == 0 {
            return Err(Error::StaleMeasurement {
                capture: stamp,
                oldest: self.span().0,
            });
        }
        Ok(n - 1)
    }

    /// Blends the measurement into its anchor snapshot and re-applies every
    /// later IMU sample. Returns `false` when the gate rejected it.
    pub fn correct(
        &mut self,
        meas: &PoseMeasurement,
        w: &FusionWeights,
        gate: Option<&mut Gate>,
        gravity: f64,
    ) -> Result<bool> {
        let i = self.anchor_index(meas.capture_stamp)?;
        let anchor = self.entries[i].snapshot;
        if let Some(g) = gate {
            if !g.admits(&anchor, meas) {
                return Ok(false);
            }
        }
        self.entries[i].snapshot = blend(&anchor, meas, w)?;
        for j in i + 1..self.entries.len() {
            let imu = self.entries[j].imu.expect("only the base entry lacks a sample");
            self.entries[j].snapshot = predict_with_gravity(&self.entries[j - 1].snapshot, &imu, gravity)?;
        }
        Ok(true)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::{Pose, Vec3, GRAVITY};

    fn hover_imu(stamp: f64) -> ImuSample {
        ImuSample {
            stamp,
            specific_force: Vec3::new(0.0, 0.0, GRAVITY),
            angular_rate: Vec3::zeros(),
        }
    }

    fn filled(n: usize) -> ReplayBuffer {
        let mut b = ReplayBuffer::new(NavEstimate::at_pose(Pose::identity()), 64).unwrap();
        for k in 1..=n {
            b.push_imu(&hover_imu(k as f64 * 0.01), GRAVITY).unwrap();
        }
        b
    }

    #[test]
    fn zero_innovation_equals_plain_prediction() {
        let mut b = filled(30);
        let plain = *b.latest();
        let snap = b.entries().nth(20).unwrap().snapshot;
        let meas = PoseMeasurement {
            capture_stamp: snap.stamp,
            delivery_stamp: 0.3,
            pose: snap.pose,
        };
        assert!(b
            .correct(&meas, &FusionWeights::uniform(0.4, 0.1), None, GRAVITY)
            .unwrap());
        let now = b.latest();
        assert!((now.pose.position - plain.pose.position).norm() < 1e-12);
        assert!((now.velocity - plain.velocity).norm() < 1e-12);
        assert!(now.pose.orientation.angle_to(&plain.pose.orientation) < 1e-12);
        assert_eq!(now.stamp, plain.stamp);
    }

    #[test]
    fn full_trust_snaps_to_measurement() {
        let mut b = filled(30);
        let target = Pose::new(Vec3::new(1.0, -2.0, 0.5), Quat::from_yaw(0.7), 0.2);
        let meas = PoseMeasurement {
            capture_stamp: 0.2,
            delivery_stamp: 0.3,
            pose: target,
        };
        let w = FusionWeights {
            accel_bias: 0.0,
            gyro_bias: 0.0,
            velocity: 0.0,
            ..FusionWeights::uniform(1.0, 0.1)
        };
        b.correct(&meas, &w, None, GRAVITY).unwrap();
        let now = b.latest();
        // interim IMU data reports no motion relative to the body
        assert!((now.pose.position - target.position).norm() < 1e-12);
        assert!(now.pose.orientation.angle_to(&target.orientation) < 1e-12);
    }

    #[test]
    fn stale_measurement_is_reported() {
        let mut b = filled(100);
        let meas = PoseMeasurement {
            capture_stamp: 0.1,
            delivery_stamp: 1.0,
            pose: Pose::identity(),
        };
        let r = b.correct(&meas, &FusionWeights::uniform(0.5, 0.1), None, GRAVITY);
        assert!(matches!(r, Err(Error::StaleMeasurement { .. })));
    }

    #[test]
    fn span_covers_delay_plus_period() {
        let b = filled(200);
        let (a, z) = b.span();
        assert!(z - a >= 0.2);
        assert_eq!(b.len(), b.capacity());
    }

    #[test]
    fn gate_drops_outliers_then_recovers() {
        let mut b = filled(30);
        let mut gate = Gate::new(0.01, 0.01);
        gate.max_consecutive = 2;
        let meas = PoseMeasurement {
            capture_stamp: 0.2,
            delivery_stamp: 0.3,
            pose: Pose::from_translation(Vec3::new(5.0, 0.0, 0.0)),
        };
        let w = FusionWeights::uniform(0.5, 0.1);
        assert!(!b.correct(&meas, &w, Some(&mut gate), GRAVITY).unwrap());
        assert!(!b.correct(&meas, &w, Some(&mut gate), GRAVITY).unwrap());
        assert!(b.correct(&meas, &w, Some(&mut gate), GRAVITY).unwrap());
    }
}

use crate::control::{ControlRecord, ControllerGains, FlightController};
use crate::error::Result;
use crate::estimator::{steady_state_weights, DelayedFusionEstimator, Gate, NavEstimate, SensorRates};
use crate::sim::{ImuSample, NoiseConfig, SimConfig, Simulator, VehicleState};
use crate::textio::csv_table;
use crate::{Pose, RefPoint, Vec3};

pub const IMU_HEADER: &str = "t,ax,ay,az,gx,gy,gz";

/// Everything needed for a closed-loop flight.
#[derive(Clone, Debug)]
pub struct FlightSetup {
    pub sim: SimConfig,
    pub gains: ControllerGains<f64>,
    /// Noise model the fusion weights are designed for. Kept separate from
    /// the simulated noise so noiseless runs still get usable weights.
    pub design_noise: NoiseConfig,
    pub initial: VehicleState,
    pub seed: u64,
}

impl FlightSetup {
    pub fn new(sim: SimConfig, initial: VehicleState, seed: u64) -> Self {
        FlightSetup {
            sim,
            gains: ControllerGains::default(),
            design_noise: NoiseConfig::default(),
            initial,
            seed,
        }
    }
}

/// Per-control-period logs of a flight, all at the IMU rate.
#[derive(Clone, Debug, Default)]
pub struct FlightLog {
    pub truth: Vec<VehicleState>,
    pub estimates: Vec<NavEstimate>,
    pub control: Vec<ControlRecord>,
    pub references: Vec<RefPoint>,
    pub imu: Vec<ImuSample>,
    /// (applied, gated, stale) pose measurements.
    pub corrections: (usize, usize, usize),
}

impl FlightLog {
    pub fn truth_poses(&self) -> Vec<Pose> {
        self.truth.iter().map(|s| s.pose).collect()
    }

    /// Truth position error relative to the reference, per sample.
    pub fn tracking_errors(&self) -> Vec<Vec3> {
        self.truth
            .iter()
            .zip(&self.references)
            .map(|(s, r)| s.pose.position - r.position)
            .collect()
    }

    pub fn imu_csv(&self) -> String {
        let rows: Vec<[f64; 7]> = self
            .imu
            .iter()
            .map(|s| {
                let (f, w) = (s.specific_force, s.angular_rate);
                [s.stamp, f.x, f.y, f.z, w.x, w.y, w.z]
            })
            .collect();
        csv_table(IMU_HEADER, rows.iter().map(|r| r.as_slice()))
    }
}

/// Flies the simulated vehicle through `reference` for `duration` seconds
/// with the estimator and controller in the loop. The controller runs once
/// per IMU sample.
pub fn fly(setup: &FlightSetup, reference: &dyn Fn(f64) -> RefPoint, duration: f64) -> Result<FlightLog> {
    let mut sim = Simulator::new(setup.sim.clone(), setup.initial, setup.seed)?;
    let timing = &setup.sim.timing;
    let rates = SensorRates {
        imu_period: timing.imu_period(),
        pose_period: timing.pose_period(),
    };
    let design = steady_state_weights(&setup.design_noise, &rates)?;
    let capacity = ((timing.pose_delay + 2.0 * rates.pose_period) / rates.imu_period).ceil() as usize + 2;
    let mut initial = NavEstimate::at_pose(setup.initial.pose.with_stamp(0.0));
    initial.velocity = setup.initial.twist.linear;
    let mut est = DelayedFusionEstimator::new(initial, design.weights, capacity)?
        .with_gate(Gate::new(
            design.position_innovation_std,
            design.orientation_innovation_std,
        ))
        .with_gravity(setup.sim.vehicle.gravity);
    let mut ctrl = FlightController::new(setup.gains, setup.sim.vehicle.clone())?;

    let steps = (duration / rates.imu_period).round() as usize;
    let mut log = FlightLog::default();
    for _ in 0..steps {
        let (imu, pose) = sim.step_to_next_imu()?;
        est.process_imu(&imu)?;
        if let Some(m) = pose {
            est.process_pose(&m)?;
        }
        let now = est.estimate().stamp;
        let r = reference(now);
        let out = ctrl.step(est.estimate(), &r, rates.imu_period)?;
        sim.set_command(out.command);
        log.truth.push(*sim.state());
        log.estimates.push(*est.estimate());
        log.control.push(ControlRecord {
            stamp: now,
            output: out,
        });
        log.references.push(r);
        log.imu.push(imu);
    }
    log.corrections = est.counts();
    Ok(log)
}

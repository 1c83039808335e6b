use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::sim::NoiseConfig;

/// Fixed merge weights, each in [0, 1].
///
/// `position` and `orientation` are the fractions of the innovation applied
/// to the snapshot. `velocity` is the velocity gain times the measurement
/// period, `accel_bias` the bias gain times the period squared and
/// `gyro_bias` the gyro-bias gain times the period, so that the three are
/// dimensionless.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FusionWeights {
    pub position: f64,
    pub velocity: f64,
    pub orientation: f64,
    pub accel_bias: f64,
    pub gyro_bias: f64,
    /// Measurement period the gains were derived for, s.
    pub period: f64,
}

/// Upper clamp on the bias weights per update.
pub const MAX_BIAS_WEIGHT: f64 = 0.05;

impl FusionWeights {
    pub fn uniform(w: f64, period: f64) -> Self {
        FusionWeights {
            position: w,
            velocity: w,
            orientation: w,
            accel_bias: w,
            gyro_bias: w,
            period,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let all = [
            self.position,
            self.velocity,
            self.orientation,
            self.accel_bias,
            self.gyro_bias,
        ];
        if all.iter().any(|w| !(0.0..=1.0).contains(w)) {
            return Err(Error::Parameter("fusion weights must lie in [0, 1]".into()));
        }
        if !(self.period > 0.0) {
            return Err(Error::Parameter("measurement period must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SensorRates {
    /// s
    pub imu_period: f64,
    /// s
    pub pose_period: f64,
}

impl Default for SensorRates {
    fn default() -> Self {
        SensorRates {
            imu_period: 0.01,
            pose_period: 0.1,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SteadyState {
    pub weights: FusionWeights,
    /// Steady-state innovation std-dev of one position axis, m.
    pub position_innovation_std: f64,
    /// Steady-state innovation std-dev of one rotation axis, rad.
    pub orientation_innovation_std: f64,
}

const MAX_ITERATIONS: usize = 100_000;
const TOLERANCE: f64 = 1e-13;

/// Iterates the discrete Riccati recursion for a scalar measurement until
/// the Kalman gain stops changing.
///
/// Returns the converged gain and the innovation variance.
pub fn steady_state_gain(f: &DMatrix<f64>, q: &DMatrix<f64>, h: &DVector<f64>, r: f64) -> Result<(DVector<f64>, f64)> {
    let n = f.nrows();
    if f.ncols() != n || q.shape() != (n, n) || h.len() != n {
        return Err(Error::Parameter("model dimensions disagree".into()));
    }
    if !(r >= 0.0) {
        return Err(Error::Parameter("measurement variance must be >= 0".into()));
    }
    let eye = DMatrix::<f64>::identity(n, n);
    let mut p = DMatrix::<f64>::identity(n, n);
    let mut gain = DVector::<f64>::zeros(n);
    for _ in 0..MAX_ITERATIONS {
        let prior = f * &p * f.transpose() + q;
        let ph = &prior * h;
        let s = h.dot(&ph) + r;
        if !(s > 0.0) {
            return Err(Error::Numerical("innovation variance vanished".into()));
        }
        let k = ph / s;
        let ikh = &eye - &k * h.transpose();
        // Joseph form keeps P symmetric positive semi-definite.
        p = &ikh * prior * ikh.transpose() + &k * k.transpose() * r;
        let change = (&k - &gain).amax();
        gain = k;
        if change <= TOLERANCE * (1.0 + gain.amax()) {
            return Ok((gain, s));
        }
    }
    Err(Error::Numerical(format!(
        "Riccati recursion did not converge in {MAX_ITERATIONS} iterations"
    )))
}

fn step_matrix(n: usize, h: f64) -> DMatrix<f64> {
    // semi-implicit Euler chain: v += h a, p += h v
    let mut m = DMatrix::<f64>::identity(n, n);
    if n == 3 {
        m[(0, 1)] = h;
        m[(0, 2)] = h * h;
        m[(1, 2)] = h;
    } else {
        m[(0, 1)] = h;
    }
    m
}

/// Propagates a per-IMU-step model over one measurement period.
fn accumulate(fh: &DMatrix<f64>, qh: &DMatrix<f64>, steps: usize) -> (DMatrix<f64>, DMatrix<f64>) {
    let n = fh.nrows();
    let mut f = DMatrix::<f64>::identity(n, n);
    let mut q = DMatrix::<f64>::zeros(n, n);
    for _ in 0..steps {
        f = fh * f;
        q = fh * q * fh.transpose() + qh;
    }
    (f, q)
}

/// Steady-state merge weights for the given sensor noise and rates.
///
/// Each axis is modelled independently: position, velocity and an
/// acceleration-bias correction driven by accelerometer noise and bias walk;
/// attitude and a gyro-bias correction driven by gyro noise and bias walk.
pub fn steady_state_weights(noise: &NoiseConfig, rates: &SensorRates) -> Result<SteadyState> {
    let h = rates.imu_period;
    let period = rates.pose_period;
    if !(h > 0.0 && period >= h) {
        return Err(Error::Parameter("need 0 < imu period <= pose period".into()));
    }
    let steps = (period / h).round().max(1.0) as usize;

    // translational chain [p, v, c], c = -accel bias
    let fh = step_matrix(3, h);
    let sa2 = noise.accel_std.powi(2);
    let mut qh = DMatrix::<f64>::zeros(3, 3);
    qh[(0, 0)] = sa2 * h.powi(4);
    qh[(0, 1)] = sa2 * h.powi(3);
    qh[(1, 0)] = sa2 * h.powi(3);
    qh[(1, 1)] = sa2 * h * h;
    qh[(2, 2)] = noise.accel_bias_walk.powi(2) * h;
    let (f, q) = accumulate(&fh, &qh, steps);
    let hp = DVector::from_vec(vec![1.0, 0.0, 0.0]);
    let (kp, sp) = steady_state_gain(&f, &q, &hp, noise.pose_position_std.powi(2))?;

    // rotational chain [theta, d], d = -gyro bias
    let fr = step_matrix(2, h);
    let mut qr = DMatrix::<f64>::zeros(2, 2);
    qr[(0, 0)] = noise.gyro_std.powi(2) * h * h;
    qr[(1, 1)] = noise.gyro_bias_walk.powi(2) * h;
    let (f2, q2) = accumulate(&fr, &qr, steps);
    let hr = DVector::from_vec(vec![1.0, 0.0]);
    let (kr, sr) = steady_state_gain(&f2, &q2, &hr, noise.pose_orientation_std().powi(2))?;

    let weights = FusionWeights {
        position: kp[0].clamp(0.0, 1.0),
        velocity: (kp[1] * period).clamp(0.0, 1.0),
        orientation: kr[0].clamp(0.0, 1.0),
        accel_bias: (kp[2] * period * period).clamp(0.0, MAX_BIAS_WEIGHT),
        gyro_bias: (kr[1] * period).clamp(0.0, MAX_BIAS_WEIGHT),
        period,
    };
    Ok(SteadyState {
        weights,
        position_innovation_std: sp.sqrt(),
        orientation_innovation_std: sr.sqrt(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn scalar_random_walk_matches_riccati_closed_form() {
        // x+ = x + w, q = r = 1: P- solves P² - P - 1 = 0, K = P-/(P- + 1)
        let prior = (1.0 + 5f64.sqrt()) / 2.0;
        let closed = prior / (prior + 1.0);
        let one = DMatrix::from_element(1, 1, 1.0);
        let (k, s) = steady_state_gain(&one, &one, &DVector::from_element(1, 1.0), 1.0).unwrap();
        assert!((k[0] - closed).abs() < 1e-6);
        assert!((s - (prior + 1.0)).abs() < 1e-6);
    }

    #[test]
    fn perfect_sensor_limit() {
        let noise = NoiseConfig {
            pose_position_std: 1e-9,
            pose_orientation_std_deg: 1e-9,
            ..Default::default()
        };
        let w = steady_state_weights(&noise, &SensorRates::default()).unwrap().weights;
        assert!(w.position > 0.999, "{w:?}");
        assert!(w.orientation > 0.999, "{w:?}");
    }

    #[test]
    fn perfect_model_limit() {
        let mut last = f64::INFINITY;
        for scale in [1.0, 1e-2, 1e-4] {
            let noise = NoiseConfig {
                accel_std: 0.02 * scale,
                accel_bias_walk: 0.001 * scale,
                ..Default::default()
            };
            let w = steady_state_weights(&noise, &SensorRates::default()).unwrap().weights;
            assert!(w.position < last);
            last = w.position;
        }
        assert!(last < 1e-2, "{last}");
    }

    #[test]
    fn default_weights_are_in_range() {
        let ss = steady_state_weights(&NoiseConfig::default(), &SensorRates::default()).unwrap();
        ss.weights.validate().unwrap();
        assert!(ss.weights.position > 0.0 && ss.weights.position < 1.0);
        assert!(ss.weights.accel_bias <= MAX_BIAS_WEIGHT);
        assert!(ss.position_innovation_std > NoiseConfig::default().pose_position_std);
    }

    #[test]
    fn zero_noise_fails_to_converge() {
        // Without process noise the gain decays like 1/k and never settles
        // inside the iteration budget.
        let noise = NoiseConfig {
            accel_std: 0.0,
            accel_bias_walk: 0.0,
            ..Default::default()
        };
        assert!(matches!(
            steady_state_weights(&noise, &SensorRates::default()),
            Err(Error::Numerical(_))
        ));
    }

    #[test]
    fn weights_out_of_range_rejected() {
        assert!(FusionWeights::uniform(1.2, 0.1).validate().is_err());
        assert!(FusionWeights::uniform(0.5, 0.0).validate().is_err());
    }
}

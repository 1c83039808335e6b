use crate::error::{Error, Result};
use crate::scenario::FlightLog;
use crate::Vec3;

/// Root mean square of the vector norms.
pub fn rms(values: &[Vec3]) -> Result<f64> {
    if values.is_empty() {
        return Err(Error::Parameter("RMS over an empty window".into()));
    }
    Ok((values.iter().map(|v| v.norm_squared()).sum::<f64>() / values.len() as f64).sqrt())
}

/// Time from `onset` until the error magnitude re-enters `tol` and stays
/// there for the rest of the log. Zero when the error never leaves the
/// band; `None` when it is still outside at the end.
pub fn recovery_time(stamps: &[f64], errors: &[f64], onset: f64, tol: f64) -> Result<Option<f64>> {
    if stamps.len() != errors.len() {
        return Err(Error::Parameter("stamps and errors differ in length".into()));
    }
    let first = stamps.partition_point(|t| *t < onset);
    if first == stamps.len() {
        return Err(Error::Parameter("disturbance onset after the end of the log".into()));
    }
    match (first..stamps.len()).rev().find(|&i| errors[i] > tol) {
        None => Ok(Some(0.0)),
        Some(i) if i + 1 == stamps.len() => Ok(None),
        Some(i) => Ok(Some(stamps[i + 1] - onset)),
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FlightMetrics {
    /// m
    pub position_rms: f64,
    /// rad/s
    pub angular_rate_rms: f64,
    /// s; set when a disturbance onset was given.
    pub recovery_time: Option<f64>,
}

/// Band the position error has to re-enter after a disturbance, m.
pub const RECOVERY_BAND: f64 = 0.1;

/// Tracking metrics of a logged flight over `[t0, t1]`. Position error is
/// truth minus reference; the reference angular rate is the heading rate
/// about the body z axis.
pub fn flight_metrics(log: &FlightLog, t0: f64, t1: f64, onset: Option<f64>) -> Result<FlightMetrics> {
    let stamps: Vec<f64> = log.references.iter().map(|r| r.stamp).collect();
    let window: Vec<usize> = (0..stamps.len())
        .filter(|&i| stamps[i] >= t0 && stamps[i] <= t1)
        .collect();
    let pos: Vec<Vec3> = window
        .iter()
        .map(|&i| log.truth[i].pose.position - log.references[i].position)
        .collect();
    let rate: Vec<Vec3> = window
        .iter()
        .map(|&i| log.truth[i].twist.angular - Vec3::new(0.0, 0.0, log.references[i].heading_rate))
        .collect();
    let recovery = match onset {
        Some(t) => {
            let errs: Vec<f64> = log
                .truth
                .iter()
                .zip(&log.references)
                .map(|(s, r)| (s.pose.position - r.position).norm())
                .collect();
            recovery_time(&stamps, &errs, t, RECOVERY_BAND)?
        }
        None => None,
    };
    Ok(FlightMetrics {
        position_rms: rms(&pos)?,
        angular_rate_rms: rms(&rate)?,
        recovery_time: recovery,
    })
}

use crate::error::{Error, Result};
use crate::Pose;

/// Segment lengths in m over which relative drift is measured.
pub const SEGMENT_LENGTHS: [f64; 8] = [2.0, 5.0, 10.0, 15.0, 20.0, 25.0, 60.0, 75.0];

/// Relative translational error per segment length, in percent.
#[derive(Clone, Debug, PartialEq)]
pub struct RelErrorReport {
    pub distances: [f64; 8],
    /// `None` where the trajectory is too short for any segment.
    pub errors: [Option<f64>; 8],
    /// Mean over the lengths that have a value.
    pub average: f64,
    /// False when some lengths could not be evaluated.
    pub complete: bool,
}

/// Cumulative arc length at each sample.
pub fn arc_lengths(poses: &[Pose]) -> Vec<f64> {
    let mut out = Vec::with_capacity(poses.len());
    let mut s = 0.0;
    for (i, p) in poses.iter().enumerate() {
        if i > 0 {
            s += (p.position - poses[i - 1].position).norm();
        }
        out.push(s);
    }
    out
}

/// First index after `start` whose arc length reaches `dist[start] + len`.
fn segment_end(dist: &[f64], start: usize, len: f64) -> Option<usize> {
    let target = dist[start] + len - 1e-9;
    let k = dist[start..].partition_point(|d| *d < target);
    (start + k < dist.len()).then_some(start + k)
}

/// Relative translational error averaged over all start indices, one value
/// per segment length. Segments are measured by ground truth arc length;
/// the error of a segment is the norm of the translation part of
/// `(est_i⁻¹ est_j)⁻¹ (gt_i⁻¹ gt_j)` divided by the segment length.
pub fn rel_trans_error(gt: &[Pose], est: &[Pose]) -> Result<RelErrorReport> {
    if gt.len() != est.len() {
        return Err(Error::Alignment(format!(
            "trajectories have {} and {} poses",
            gt.len(),
            est.len()
        )));
    }
    if gt.len() < 2 {
        return Err(Error::InsufficientData("need at least two poses".into()));
    }
    let dist = arc_lengths(gt);
    let mut errors = [None; 8];
    for (slot, &len) in errors.iter_mut().zip(&SEGMENT_LENGTHS) {
        let mut sum = 0.0;
        let mut n = 0usize;
        for i in 0..gt.len() {
            let Some(j) = segment_end(&dist, i, len) else {
                break;
            };
            let dg = gt[i].inverse().compose(&gt[j]);
            let de = est[i].inverse().compose(&est[j]);
            let e = de.inverse().compose(&dg);
            sum += e.position.norm() / len;
            n += 1;
        }
        if n > 0 {
            *slot = Some(100.0 * sum / n as f64);
        }
    }
    let have: Vec<f64> = errors.iter().flatten().copied().collect();
    if have.is_empty() {
        return Err(Error::InsufficientData(format!(
            "trajectory length {:.3} m is below the shortest segment",
            dist.last().copied().unwrap_or(0.0)
        )));
    }
    Ok(RelErrorReport {
        distances: SEGMENT_LENGTHS,
        errors,
        average: have.iter().sum::<f64>() / have.len() as f64,
        complete: have.len() == SEGMENT_LENGTHS.len(),
    })
}

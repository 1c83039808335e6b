use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::{Pose, Vec3};

/// A selected camera pose and the sparse world points it observed. Each
/// point implies a visibility ray from the camera center.
#[derive(Clone, Debug)]
pub struct Keyframe {
    pub pose: Pose,
    pub points: Vec<Vec3>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct KeyframeThresholds {
    /// m
    pub translation: f64,
    /// rad
    pub rotation: f64,
}

impl Default for KeyframeThresholds {
    fn default() -> Self {
        KeyframeThresholds {
            translation: 0.3,
            rotation: 10f64.to_radians(),
        }
    }
}

/// Indices of the poses selected as keyframes. The first pose is always
/// selected; later poses are selected when their translation or rotation
/// relative to the last selected pose exceeds the threshold.
pub fn select_keyframes(poses: &[Pose], th: &KeyframeThresholds) -> Result<Vec<usize>> {
    if !(th.translation > 0.0 && th.rotation > 0.0) {
        return Err(Error::Parameter("keyframe thresholds must be positive".into()));
    }
    let mut out = Vec::new();
    let mut last: Option<&Pose> = None;
    for (i, p) in poses.iter().enumerate() {
        let take = match last {
            None => true,
            Some(l) => {
                (p.position - l.position).norm() > th.translation
                    || p.orientation.angle_to(&l.orientation) > th.rotation
            }
        };
        if take {
            out.push(i);
            last = Some(p);
        }
    }
    Ok(out)
}

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::Vec3;

/// Rectified stereo rig. The right camera sits `baseline` metres along the
/// left camera's x axis; both share focal length and principal point.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct StereoCalib {
    /// px
    pub focal: f64,
    /// px
    pub cx: f64,
    /// px
    pub cy: f64,
    /// m
    pub baseline: f64,
    /// px
    pub width: u32,
    /// px
    pub height: u32,
}

impl Default for StereoCalib {
    fn default() -> Self {
        StereoCalib {
            focal: 376.0,
            cx: 376.0,
            cy: 240.0,
            baseline: 0.11,
            width: 752,
            height: 480,
        }
    }
}

impl StereoCalib {
    pub fn validate(&self) -> Result<()> {
        if !(self.focal > 0.0 && self.baseline > 0.0) || self.width == 0 || self.height == 0 {
            return Err(Error::Parameter(
                "stereo calibration needs positive focal, baseline and size".into(),
            ));
        }
        Ok(())
    }

    /// Left and right pixels of a point in left-camera coordinates, or
    /// `None` behind the camera.
    pub fn project(&self, p: &Vec3) -> Option<([f64; 2], [f64; 2])> {
        if !(p.z > 0.0) {
            return None;
        }
        let v = self.focal * p.y / p.z + self.cy;
        let ul = self.focal * p.x / p.z + self.cx;
        let ur = self.focal * (p.x - self.baseline) / p.z + self.cx;
        Some(([ul, v], [ur, v]))
    }

    pub fn in_image(&self, px: &[f64; 2]) -> bool {
        px[0] >= 0.0 && px[1] >= 0.0 && px[0] < self.width as f64 && px[1] < self.height as f64
    }

    pub fn disparity(&self, depth: f64) -> f64 {
        self.focal * self.baseline / depth
    }

    /// Point in left-camera coordinates from a stereo pair; `None` for
    /// non-positive disparity.
    pub fn triangulate(&self, left: &[f64; 2], right: &[f64; 2]) -> Option<Vec3> {
        let d = left[0] - right[0];
        if !(d > 0.0) {
            return None;
        }
        let z = self.focal * self.baseline / d;
        let v = 0.5 * (left[1] + right[1]);
        Some(Vec3::new(
            (left[0] - self.cx) * z / self.focal,
            (v - self.cy) * z / self.focal,
            z,
        ))
    }
}

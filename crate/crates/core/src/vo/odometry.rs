use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::{estimate_motion, quad_match, MatchConfig, MotionConfig, VoScene};
use crate::error::{Error, Result};
use crate::textio::csv_table;
use crate::Pose;

pub const TIMING_HEADER: &str = "frame,ms";

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct VoConfig {
    pub matching: MatchConfig,
    pub motion: MotionConfig,
}

#[derive(Clone, Debug, Default)]
pub struct VoRun {
    /// Estimated camera poses, starting at the true first pose.
    pub poses: Vec<Pose>,
    /// Per-frame processing time from frame 1 on, ms.
    pub timings_ms: Vec<f64>,
    /// Frames where the previous motion was held.
    pub held: Vec<usize>,
    pub quads: Vec<usize>,
    pub inliers: Vec<usize>,
}

impl VoRun {
    pub fn timing_csv(&self) -> String {
        let rows: Vec<[f64; 2]> = self
            .timings_ms
            .iter()
            .enumerate()
            .map(|(i, ms)| [(i + 1) as f64, *ms])
            .collect();
        csv_table(TIMING_HEADER, rows.iter().map(|r| r.as_slice()))
    }
}

/// Frame-to-frame odometry without keyframes. When a frame yields no
/// estimate the previous motion is repeated.
pub fn run_odometry(scene: &VoScene, cfg: &VoConfig, seed: u64) -> Result<VoRun> {
    let first = *scene
        .poses
        .first()
        .ok_or_else(|| Error::Scene("empty sequence".into()))?;
    let mut run = VoRun {
        poses: vec![first],
        ..Default::default()
    };
    let mut last = Pose::identity();
    for k in 1..scene.frames.len() {
        let started = Instant::now();
        let (prev, cur) = (&scene.frames[k - 1], &scene.frames[k]);
        let quads = quad_match(prev, cur, &scene.calib, &cfg.matching);
        let est = estimate_motion(
            &quads,
            prev,
            cur,
            &scene.calib,
            &cfg.motion,
            seed.wrapping_add(k as u64),
        );
        run.quads.push(quads.len());
        match est {
            Ok(e) => {
                run.inliers.push(e.inliers.len());
                last = e.motion;
            }
            Err(Error::NoMotionEstimate { .. } | Error::InsufficientData(_)) => {
                run.inliers.push(0);
                run.held.push(k);
            }
            Err(e) => return Err(e),
        }
        let prev_pose = run.poses[k - 1];
        run.poses
            .push(prev_pose.compose(&last.inverse()).with_stamp(scene.poses[k].stamp));
        run.timings_ms.push(started.elapsed().as_secs_f64() * 1e3);
    }
    Ok(run)
}

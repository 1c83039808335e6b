//! Sparse stereo visual odometry on synthetic scenes: quad matching with
//! bucketing, RANSAC and Gauss-Newton relative pose estimation, in pixel or
//! subpixel observation mode.

mod calib;
mod matching;
mod motion;
mod odometry;
mod scene;

pub use calib::StereoCalib;
pub use matching::{bucket, bucket_of, quad_match, MatchConfig, QuadMatch};
pub use motion::{
    apply_increment, classify, correspondences, cost, estimate_motion, gauss_newton, residual, residual_jacobian,
    Correspondence, GnResult, Jacobian, MotionConfig, MotionEstimate, ObservationMode,
};
pub use odometry::{run_odometry, VoConfig, VoRun, TIMING_HEADER};
pub use scene::{
    camera_orientation, camera_path, gen_scene, to_frame, visible, Feature, StereoFrame, StereoObservation, VoPath,
    VoScene, VoSceneConfig,
};

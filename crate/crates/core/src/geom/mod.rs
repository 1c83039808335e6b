//! Rigid-body geometry shared by every module.
//!
//! Conventions: Hamilton quaternions stored scalar first, orientations map
//! body-frame vectors into the world frame, world `z` points up.

mod pose;
mod quat;
mod trajectory;

pub use pose::{Pose, Twist};
pub use quat::Quat;
pub use trajectory::{read_trajectory_csv, trajectory_to_csv, write_trajectory_csv, TRAJECTORY_HEADER};

use std::path::Path;

use nalgebra::Vector3;

use super::{Pose, Quat};
use crate::error::Result;
use crate::textio::{csv_table, parse_csv, read_text, write_text};

pub const TRAJECTORY_HEADER: &str = "t,x,y,z,qw,qx,qy,qz";

pub fn trajectory_to_csv(poses: &[Pose<f64>]) -> String {
    let rows: Vec<[f64; 8]> = poses
        .iter()
        .map(|p| {
            let q = p.orientation;
            [
                p.stamp,
                p.position.x,
                p.position.y,
                p.position.z,
                q.w(),
                q.x(),
                q.y(),
                q.z(),
            ]
        })
        .collect();
    csv_table(TRAJECTORY_HEADER, rows.iter().map(|r| r.as_slice()))
}

pub fn write_trajectory_csv(path: &Path, poses: &[Pose<f64>]) -> Result<()> {
    write_text(path, &trajectory_to_csv(poses))
}

pub fn read_trajectory_csv(path: &Path) -> Result<Vec<Pose<f64>>> {
    let rows = parse_csv(&read_text(path)?, TRAJECTORY_HEADER)?;
    Ok(rows
        .into_iter()
        .map(|r| Pose::new(Vector3::new(r[1], r[2], r[3]), Quat::new(r[4], r[5], r[6], r[7]), r[0]))
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn roundtrip_preserves_nine_digits() {
        let poses = vec![
            Pose::new(Vector3::new(1.0, -2.5, 0.001), Quat::from_yaw(0.3), 0.0),
            Pose::new(Vector3::new(1e-4, 123.456789, 7.0), Quat::from_yaw(-2.0), 0.01),
        ];
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("traj.csv");
        write_trajectory_csv(&path, &poses).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert!(text.starts_with("t,x,y,z,qw,qx,qy,qz\n"));
        let back = read_trajectory_csv(&path).unwrap();
        for (a, b) in poses.iter().zip(&back) {
            assert!((a.position - b.position).norm() < 1e-9);
            assert!(a.orientation.angle_to(&b.orientation) < 1e-8);
        }
    }
}

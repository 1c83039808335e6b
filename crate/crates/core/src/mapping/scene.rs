//! Synthetic room with box obstacles: landmarks, camera path, exact range
//! scans and the ground-truth grid.
//!
//! All surfaces sit on voxel boundaries of the evaluation grid so the
//! ground truth is unambiguous: a voxel is free iff it lies entirely in the
//! open room interior outside every box.

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{select_keyframes, Keyframe, KeyframeThresholds, LogOddsParams, OccupancyGrid, VoxelState};
use crate::error::{Error, Result};
use crate::{Pose, Quat, Vec3};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RoomConfig {
    /// Interior extent from the origin, m.
    pub size: [f64; 3],
    /// Axis-aligned obstacles as `[min, max]` corners.
    pub boxes: Vec<[[f64; 3]; 2]>,
    pub resolution: f64,
    /// Poses in the camera stream before keyframe selection.
    pub frames: usize,
    pub points_per_keyframe: usize,
    /// Mean landmark spacing on surfaces, m.
    pub landmark_spacing: f64,
    /// Range-scan rays per keyframe, horizontal × vertical.
    pub scan_rays: [usize; 2],
    pub keyframes: KeyframeThresholds,
    pub seed: u64,
}

impl Default for RoomConfig {
    fn default() -> Self {
        RoomConfig {
            size: [10.0, 8.0, 3.0],
            boxes: vec![[[4.0, 3.2, 0.0], [6.0, 4.8, 1.4]], [[8.6, 6.6, 0.0], [9.6, 7.6, 2.0]]],
            resolution: 0.2,
            frames: 1200,
            points_per_keyframe: 100,
            landmark_spacing: 0.25,
            scan_rays: [188, 120],
            keyframes: KeyframeThresholds::default(),
            seed: 1,
        }
    }
}

/// Pinhole camera used for landmark visibility and range scans; camera
/// frame x right, y down, z forward.
const FOCAL: f64 = 376.0;
const WIDTH: f64 = 752.0;
const HEIGHT: f64 = 480.0;
const MIN_DEPTH: f64 = 0.1;

#[derive(Clone, Debug)]
pub struct Landmark {
    pub position: Vec3,
    /// Unit normal pointing into free space.
    pub normal: Vec3,
}

#[derive(Clone, Debug)]
pub struct RoomScene {
    pub config: RoomConfig,
    pub landmarks: Vec<Landmark>,
    /// Camera-to-world poses of the full stream.
    pub stream: Vec<Pose>,
    pub keyframe_ids: Vec<usize>,
    pub keyframes: Vec<Keyframe>,
}

struct Face {
    origin: Vec3,
    u: Vec3,
    v: Vec3,
    normal: Vec3,
}

impl RoomScene {
    pub fn generate(config: &RoomConfig) -> Result<Self> {
        let [sx, sy, sz] = config.size;
        if !(sx > 0.0 && sy > 0.0 && sz > 0.0 && config.resolution > 0.0 && config.landmark_spacing > 0.0) {
            return Err(Error::Scene(
                "room size, resolution and landmark spacing must be positive".into(),
            ));
        }
        if config.frames == 0 || config.points_per_keyframe == 0 {
            return Err(Error::Scene(
                "need at least one frame and one point per keyframe".into(),
            ));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        let mut scene = RoomScene {
            config: config.clone(),
            landmarks: Vec::new(),
            stream: Vec::new(),
            keyframe_ids: Vec::new(),
            keyframes: Vec::new(),
        };
        scene.sample_landmarks(&mut rng);
        scene.stream = (0..config.frames).map(|k| scene.camera_pose(k)).collect();
        if scene.stream.iter().any(|p| !scene.is_free(&p.position)) {
            return Err(Error::Scene("camera path intersects an obstacle".into()));
        }
        scene.keyframe_ids = select_keyframes(&scene.stream, &config.keyframes)?;
        let ids = scene.keyframe_ids.clone();
        for i in ids {
            let pose = scene.stream[i];
            let visible: Vec<Vec3> = scene
                .landmarks
                .iter()
                .filter(|l| scene.sees(&pose, l))
                .map(|l| l.position)
                .collect();
            if visible.is_empty() {
                return Err(Error::Scene(format!("keyframe {i} sees no landmarks")));
            }
            let points = visible
                .choose_multiple(&mut rng, config.points_per_keyframe)
                .copied()
                .collect();
            scene.keyframes.push(Keyframe { pose, points });
        }
        Ok(scene)
    }

    fn solids(&self) -> Vec<(Vec3, Vec3)> {
        self.config
            .boxes
            .iter()
            .map(|[a, b]| (Vec3::from(*a), Vec3::from(*b)))
            .collect()
    }

    fn faces(&self) -> Vec<Face> {
        let s = Vec3::from(self.config.size);
        let mut faces = Vec::new();
        // room walls, normals pointing inwards
        for axis in 0..3 {
            let (a, b) = ((axis + 1) % 3, (axis + 2) % 3);
            let mut u = Vec3::zeros();
            u[a] = s[a];
            let mut v = Vec3::zeros();
            v[b] = s[b];
            for side in [0.0, 1.0] {
                let mut origin = Vec3::zeros();
                origin[axis] = side * s[axis];
                let mut normal = Vec3::zeros();
                normal[axis] = if side == 0.0 { 1.0 } else { -1.0 };
                faces.push(Face { origin, u, v, normal });
            }
        }
        for (lo, hi) in self.solids() {
            let e = hi - lo;
            for axis in 0..3 {
                let (a, b) = ((axis + 1) % 3, (axis + 2) % 3);
                let mut u = Vec3::zeros();
                u[a] = e[a];
                let mut v = Vec3::zeros();
                v[b] = e[b];
                for side in [0.0, 1.0] {
                    let mut origin = lo;
                    origin[axis] += side * e[axis];
                    let mut normal = Vec3::zeros();
                    normal[axis] = if side == 0.0 { -1.0 } else { 1.0 };
                    // faces flush with a wall or the floor are never seen
                    if origin[axis] <= 0.0 || origin[axis] >= self.config.size[axis] {
                        continue;
                    }
                    faces.push(Face { origin, u, v, normal });
                }
            }
        }
        faces
    }

    fn sample_landmarks(&mut self, rng: &mut ChaCha8Rng) {
        let spacing = self.config.landmark_spacing;
        for f in self.faces() {
            let area = f.u.norm() * f.v.norm();
            let n = (area / (spacing * spacing)).ceil() as usize;
            for _ in 0..n {
                let p = f.origin + f.u * rng.random::<f64>() + f.v * rng.random::<f64>();
                // drop points covered by an obstacle
                if self
                    .solids()
                    .iter()
                    .any(|(lo, hi)| inside_closed(&(p + f.normal * 1e-6), lo, hi))
                {
                    continue;
                }
                self.landmarks.push(Landmark {
                    position: p,
                    normal: f.normal,
                });
            }
        }
    }

    /// Camera pose `k` of the stream: an elliptic loop around the room
    /// center while the view direction spins about the vertical.
    pub fn camera_pose(&self, k: usize) -> Pose {
        let [sx, sy, sz] = self.config.size;
        let th = std::f64::consts::TAU * k as f64 / self.config.frames as f64;
        let position = Vec3::new(
            0.5 * sx + 0.32 * sx * th.cos(),
            0.5 * sy + 0.3 * sy * th.sin(),
            0.5 * sz + 0.13 * sz * (3.0 * th).sin(),
        );
        let yaw = 3f64.to_radians() * k as f64;
        let pitch = 0.3 * (7.0 * th).sin();
        Pose::new(position, camera_orientation(yaw, pitch), k as f64 * 0.05)
    }

    pub fn is_free(&self, p: &Vec3) -> bool {
        let s = self.config.size;
        (0..3).all(|i| p[i] > 0.0 && p[i] < s[i]) && !self.solids().iter().any(|(lo, hi)| inside_closed(p, lo, hi))
    }

    fn project(pose: &Pose, p: &Vec3) -> Option<(f64, f64)> {
        let c = pose.inverse().transform_point(p);
        if c.z < MIN_DEPTH {
            return None;
        }
        let u = FOCAL * c.x / c.z + 0.5 * WIDTH;
        let v = FOCAL * c.y / c.z + 0.5 * HEIGHT;
        ((0.0..WIDTH).contains(&u) && (0.0..HEIGHT).contains(&v)).then_some((u, v))
    }

    fn sees(&self, pose: &Pose, l: &Landmark) -> bool {
        let cam = pose.position;
        if l.normal.dot(&(cam - l.position)) <= 0.0 || Self::project(pose, &l.position).is_none() {
            return false;
        }
        let d = l.position - cam;
        let dist = d.norm();
        self.raycast(&cam, &(d / dist)).is_some_and(|t| t >= dist - 1e-6)
    }

    /// Distance along the unit direction `d` to the first surface.
    pub fn raycast(&self, o: &Vec3, d: &Vec3) -> Option<f64> {
        let s = self.config.size;
        let mut best = f64::INFINITY;
        for i in 0..3 {
            if d[i] > 0.0 {
                best = best.min((s[i] - o[i]) / d[i]);
            } else if d[i] < 0.0 {
                best = best.min(-o[i] / d[i]);
            }
        }
        for (lo, hi) in self.solids() {
            if let Some(t) = slab_entry(o, d, &lo, &hi) {
                best = best.min(t);
            }
        }
        (best.is_finite() && best >= 0.0).then_some(best)
    }

    /// Exact range scan from a camera pose over a regular pixel grid.
    pub fn range_scan(&self, pose: &Pose) -> Vec<Vec3> {
        let [nu, nv] = self.config.scan_rays;
        let mut hits = Vec::with_capacity(nu * nv);
        let rot = pose.orientation;
        for j in 0..nv {
            for i in 0..nu {
                let u = (i as f64 + 0.5) * WIDTH / nu as f64;
                let v = (j as f64 + 0.5) * HEIGHT / nv as f64;
                let ray = Vec3::new((u - 0.5 * WIDTH) / FOCAL, (v - 0.5 * HEIGHT) / FOCAL, 1.0).normalize();
                let d = rot.rotate(&ray);
                if let Some(t) = self.raycast(&pose.position, &d) {
                    hits.push(pose.position + d * t);
                }
            }
        }
        hits
    }

    /// Empty grid over the room plus a one-voxel margin, aligned so every
    /// surface lies on a voxel boundary. Exact range scans then never cross
    /// a voxel that intersects a solid.
    pub fn grid_frame(&self) -> Result<OccupancyGrid> {
        let r = self.config.resolution;
        let origin = Vec3::repeat(-r);
        let dims = self.config.size.map(|s| (s / r).round() as usize + 2);
        OccupancyGrid::new(origin, r, dims, LogOddsParams::default())
    }

    pub fn ground_truth(&self) -> Result<OccupancyGrid> {
        let mut g = self.grid_frame()?;
        let half = 0.5 * g.resolution();
        let tol = 1e-6 * g.resolution();
        let s = self.config.size;
        let solids = self.solids();
        for idx in 0..g.len() {
            let c = g.center(g.coords(idx));
            let in_room = (0..3).all(|i| c[i] - half > -tol && c[i] + half < s[i] + tol);
            let hits_box = solids
                .iter()
                .any(|(lo, hi)| (0..3).all(|i| c[i] + half > lo[i] + tol && c[i] - half < hi[i] - tol));
            let state = if in_room && !hits_box {
                VoxelState::Free
            } else {
                VoxelState::Occupied
            };
            g.set_state(idx, state);
        }
        Ok(g)
    }
}

/// Orientation of a camera (x right, y down, z forward) looking along
/// heading `yaw`, tilted down by `pitch`.
pub fn camera_orientation(yaw: f64, pitch: f64) -> Quat {
    let base = nalgebra::Matrix3::new(0.0, 0.0, 1.0, -1.0, 0.0, 0.0, 0.0, -1.0, 0.0);
    Quat::from_yaw(yaw) * Quat::from_axis_angle(&Vec3::y(), pitch) * Quat::from_rotation_matrix(&base)
}

fn inside_closed(p: &Vec3, lo: &Vec3, hi: &Vec3) -> bool {
    (0..3).all(|i| p[i] >= lo[i] && p[i] <= hi[i])
}

fn slab_entry(o: &Vec3, d: &Vec3, lo: &Vec3, hi: &Vec3) -> Option<f64> {
    let (mut t0, mut t1) = (0.0f64, f64::INFINITY);
    for i in 0..3 {
        if d[i].abs() < 1e-15 {
            if o[i] < lo[i] || o[i] > hi[i] {
                return None;
            }
            continue;
        }
        let a = (lo[i] - o[i]) / d[i];
        let b = (hi[i] - o[i]) / d[i];
        t0 = t0.max(a.min(b));
        t1 = t1.min(a.max(b));
    }
    (t0 <= t1).then_some(t0)
}

//! Synthetic stereo sequences: random landmarks seen from a camera path,
//! with pixel noise, gross outliers and descriptor ambiguity.

use nalgebra::Matrix3;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::StereoCalib;
use crate::error::{Error, Result};
use crate::{Pose, Quat, Vec3};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum VoPath {
    /// Forward motion along a gentle S curve with a slight vertical bob.
    Wander,
    /// One full circle, looking along the tangent; the last frame repeats
    /// the first.
    Loop,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct VoSceneConfig {
    pub frames: usize,
    pub landmarks: usize,
    pub path: VoPath,
    /// Distance between consecutive frames, m.
    pub step: f64,
    /// s
    pub frame_period: f64,
    /// Landmark box margin around the camera path, m.
    pub margin: f64,
    /// m
    pub min_depth: f64,
    /// m
    pub max_depth: f64,
    /// Standard deviation per pixel coordinate, px.
    pub pixel_noise: f64,
    /// Fraction of observations replaced by random stereo pairs.
    pub outlier_rate: f64,
    /// Standard deviation added to each descriptor per image.
    pub descriptor_noise: f64,
}

impl Default for VoSceneConfig {
    fn default() -> Self {
        VoSceneConfig {
            frames: 50,
            landmarks: 3000,
            path: VoPath::Wander,
            step: 0.3,
            frame_period: 0.1,
            margin: 20.0,
            min_depth: 1.0,
            max_depth: 30.0,
            pixel_noise: 0.0,
            outlier_rate: 0.0,
            descriptor_noise: 0.0,
        }
    }
}

impl VoSceneConfig {
    /// Seeded benchmark used to compare pixel and subpixel observations.
    pub fn benchmark() -> Self {
        VoSceneConfig {
            pixel_noise: 0.3,
            outlier_rate: 0.1,
            descriptor_noise: 2e-5,
            ..Default::default()
        }
    }
}

/// Ground-truth stereo observation of one landmark.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StereoObservation {
    /// Landmark index.
    pub id: usize,
    pub left: [f64; 2],
    pub right: [f64; 2],
    pub descriptor: f64,
    pub outlier: bool,
}

/// A detected feature in one image.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Feature {
    pub px: [f64; 2],
    pub descriptor: f64,
    /// Landmark index, kept for evaluation only.
    pub source: usize,
}

/// Feature lists of a stereo pair, in independent orders.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct StereoFrame {
    pub left: Vec<Feature>,
    pub right: Vec<Feature>,
}

#[derive(Clone, Debug)]
pub struct VoScene {
    pub calib: StereoCalib,
    pub landmarks: Vec<Vec3>,
    /// Per-landmark descriptor.
    pub descriptors: Vec<f64>,
    /// Camera to world, optical frame (x right, y down, z forward).
    pub poses: Vec<Pose>,
    pub observations: Vec<Vec<StereoObservation>>,
    pub frames: Vec<StereoFrame>,
}

/// Camera orientation for a level camera looking along `yaw` in a z-up world.
pub fn camera_orientation(yaw: f64) -> Quat {
    let base = Matrix3::new(0.0, 0.0, 1.0, -1.0, 0.0, 0.0, 0.0, -1.0, 0.0);
    Quat::from_yaw(yaw) * Quat::from_rotation_matrix(&base)
}

pub fn camera_path(cfg: &VoSceneConfig) -> Result<Vec<Pose>> {
    if cfg.frames < 2 || !(cfg.step > 0.0) || !(cfg.frame_period > 0.0) {
        return Err(Error::Parameter(
            "camera path needs two frames, a positive step and period".into(),
        ));
    }
    let n = cfg.frames;
    let poses = (0..n)
        .map(|k| {
            let t = k as f64 * cfg.frame_period;
            let (p, yaw) = match cfg.path {
                VoPath::Wander => {
                    let s = k as f64 * cfg.step;
                    let w = std::f64::consts::TAU / 12.0;
                    let y = 1.5 * (w * s).sin();
                    (
                        Vec3::new(s, y, 1.5 + 0.2 * (0.5 * w * s).sin()),
                        (1.5 * w * (w * s).cos()).atan(),
                    )
                }
                VoPath::Loop => {
                    let r = (n - 1) as f64 * cfg.step / std::f64::consts::TAU;
                    let a = std::f64::consts::TAU * (k % (n - 1)) as f64 / (n - 1) as f64;
                    (Vec3::new(r * a.sin(), r * (1.0 - a.cos()), 1.5), a)
                }
            };
            Pose::new(p, camera_orientation(yaw), t)
        })
        .collect();
    Ok(poses)
}

/// Noise-free projection of every landmark in view of `pose`.
pub fn visible(
    calib: &StereoCalib,
    landmarks: &[Vec3],
    pose: &Pose,
    depth: (f64, f64),
) -> Vec<(usize, [f64; 2], [f64; 2])> {
    let inv = pose.inverse();
    landmarks
        .iter()
        .enumerate()
        .filter_map(|(i, l)| {
            let p = inv.transform_point(l);
            if p.z < depth.0 || p.z > depth.1 {
                return None;
            }
            let (a, b) = calib.project(&p)?;
            (calib.in_image(&a) && calib.in_image(&b)).then_some((i, a, b))
        })
        .collect()
}

/// Splits observations into per-image feature lists with descriptor noise,
/// each list shuffled.
pub fn to_frame(obs: &[StereoObservation], descriptor_noise: f64, rng: &mut impl Rng) -> Result<StereoFrame> {
    let dn = Normal::new(0.0, descriptor_noise).map_err(|e| Error::Parameter(format!("descriptor noise: {e}")))?;
    let mut f = StereoFrame::default();
    for o in obs {
        for (list, px) in [(&mut f.left, o.left), (&mut f.right, o.right)] {
            list.push(Feature {
                px,
                descriptor: o.descriptor + dn.sample(rng),
                source: o.id,
            });
        }
    }
    f.left.shuffle(rng);
    f.right.shuffle(rng);
    Ok(f)
}

pub fn gen_scene(cfg: &VoSceneConfig, calib: &StereoCalib, seed: u64) -> Result<VoScene> {
    calib.validate()?;
    if cfg.landmarks < 50 {
        return Err(Error::Parameter("scene needs at least 50 landmarks".into()));
    }
    if !(cfg.min_depth > 0.0 && cfg.max_depth > cfg.min_depth) || !(0.0..=1.0).contains(&cfg.outlier_rate) {
        return Err(Error::Parameter("invalid depth range or outlier rate".into()));
    }
    let poses = camera_path(cfg)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut lo, mut hi) = (Vec3::repeat(f64::INFINITY), Vec3::repeat(f64::NEG_INFINITY));
    for p in &poses {
        lo = lo.inf(&p.position);
        hi = hi.sup(&p.position);
    }
    let m = Vec3::new(cfg.margin, cfg.margin, 0.4 * cfg.margin);
    let (lo, hi) = (lo - m, hi + m);
    let landmarks: Vec<Vec3> = (0..cfg.landmarks)
        .map(|_| {
            Vec3::new(
                rng.random_range(lo.x..hi.x),
                rng.random_range(lo.y..hi.y),
                rng.random_range(lo.z..hi.z),
            )
        })
        .collect();
    let descriptors: Vec<f64> = (0..cfg.landmarks).map(|_| rng.random::<f64>()).collect();
    let pn = Normal::new(0.0, cfg.pixel_noise).map_err(|e| Error::Parameter(format!("pixel noise: {e}")))?;
    let mut observations = Vec::with_capacity(poses.len());
    let mut frames = Vec::with_capacity(poses.len());
    for (k, pose) in poses.iter().enumerate() {
        let seen = visible(calib, &landmarks, pose, (cfg.min_depth, cfg.max_depth));
        if seen.is_empty() {
            return Err(Error::Scene(format!("no landmark in view at frame {k}")));
        }
        let mut obs = Vec::with_capacity(seen.len());
        for (id, mut l, mut r) in seen {
            let outlier = cfg.outlier_rate > 0.0 && rng.random_bool(cfg.outlier_rate);
            if outlier {
                l = [
                    rng.random_range(0.0..calib.width as f64),
                    rng.random_range(0.0..calib.height as f64),
                ];
                r = [l[0] - rng.random_range(1.0..40.0), l[1]];
            }
            if cfg.pixel_noise > 0.0 {
                for c in l.iter_mut().chain(r.iter_mut()) {
                    *c += pn.sample(&mut rng);
                }
            }
            obs.push(StereoObservation {
                id,
                left: l,
                right: r,
                descriptor: descriptors[id],
                outlier,
            });
        }
        frames.push(to_frame(&obs, cfg.descriptor_noise, &mut rng)?);
        observations.push(obs);
    }
    Ok(VoScene {
        calib: *calib,
        landmarks,
        descriptors,
        poses,
        observations,
        frames,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn camera_looks_along_heading() {
        let q = camera_orientation(0.5);
        let fwd = q.rotate(&Vec3::z());
        assert!((fwd - Vec3::new(0.5f64.cos(), 0.5f64.sin(), 0.0)).norm() < 1e-12);
        assert!((q.rotate(&Vec3::y()) + Vec3::z()).norm() < 1e-12);
    }

    #[test]
    fn noise_free_observations_reproject_exactly() {
        let s = gen_scene(&VoSceneConfig::default(), &StereoCalib::default(), 5).unwrap();
        for (pose, obs) in s.poses.iter().zip(&s.observations) {
            assert!(obs.len() > 200, "{}", obs.len());
            let inv = pose.inverse();
            for o in obs {
                let (l, r) = s.calib.project(&inv.transform_point(&s.landmarks[o.id])).unwrap();
                assert_eq!((l, r), (o.left, o.right));
                assert!(o.left[0] > o.right[0]);
            }
        }
    }

    #[test]
    fn same_seed_gives_same_stream() {
        let cfg = VoSceneConfig::benchmark();
        let a = gen_scene(&cfg, &StereoCalib::default(), 9).unwrap();
        let b = gen_scene(&cfg, &StereoCalib::default(), 9).unwrap();
        assert_eq!(a.observations, b.observations);
        assert_eq!(a.frames, b.frames);
        let c = gen_scene(&cfg, &StereoCalib::default(), 10).unwrap();
        assert_ne!(a.observations, c.observations);
    }

    #[test]
    fn loop_closes_and_empty_view_is_an_error() {
        let cfg = VoSceneConfig {
            path: VoPath::Loop,
            ..Default::default()
        };
        let p = camera_path(&cfg).unwrap();
        assert_eq!(p[0].position, p[49].position);
        let cfg = VoSceneConfig {
            landmarks: 50,
            max_depth: 1.0 + 1e-9,
            ..Default::default()
        };
        assert!(matches!(
            gen_scene(&cfg, &StereoCalib::default(), 1),
            Err(Error::Scene(_))
        ));
    }
}

use nalgebra::{SMatrix, Vector6};
use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{QuadMatch, StereoCalib, StereoFrame};
use crate::error::{Error, Result};
use crate::{Pose, Quat, Vec3};

/// How pixel positions enter the estimator.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ObservationMode {
    /// Rounded to integer pixels.
    Pixel,
    Subpixel,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MotionConfig {
    pub mode: ObservationMode,
    pub ransac_iterations: usize,
    /// Inlier threshold on the RMS reprojection error over the four pixel
    /// coordinates of a quad, px.
    pub threshold_pixel: f64,
    pub threshold_subpixel: f64,
    pub min_consensus: usize,
    pub gn_iterations: usize,
    /// Gradient norm below which Gauss-Newton stops.
    pub gn_tolerance: f64,
}

impl Default for MotionConfig {
    fn default() -> Self {
        MotionConfig {
            mode: ObservationMode::Subpixel,
            ransac_iterations: 100,
            threshold_pixel: 1.5,
            threshold_subpixel: 0.75,
            min_consensus: 6,
            gn_iterations: 20,
            gn_tolerance: 1e-9,
        }
    }
}

impl MotionConfig {
    pub fn threshold(&self) -> f64 {
        match self.mode {
            ObservationMode::Pixel => self.threshold_pixel,
            ObservationMode::Subpixel => self.threshold_subpixel,
        }
    }
}

/// A point triangulated in the previous left camera and its pixels in the
/// current pair: `[u_left, v_left, u_right, v_right]`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Correspondence {
    pub point: Vec3,
    pub observed: [f64; 4],
}

pub type Jacobian = SMatrix<f64, 4, 6>;

/// Builds correspondences for the quads that triangulate, returning them
/// with the quad index.
pub fn correspondences(
    quads: &[QuadMatch],
    prev: &StereoFrame,
    cur: &StereoFrame,
    calib: &StereoCalib,
    mode: ObservationMode,
) -> Vec<(usize, Correspondence)> {
    let q = |px: [f64; 2]| match mode {
        ObservationMode::Pixel => [px[0].round(), px[1].round()],
        ObservationMode::Subpixel => px,
    };
    quads
        .iter()
        .enumerate()
        .filter_map(|(i, m)| {
            let point = calib.triangulate(&q(prev.left[m.left_prev].px), &q(prev.right[m.right_prev].px))?;
            let (l, r) = (q(cur.left[m.left_cur].px), q(cur.right[m.right_cur].px));
            Some((
                i,
                Correspondence {
                    point,
                    observed: [l[0], l[1], r[0], r[1]],
                },
            ))
        })
        .collect()
}

/// Predicted minus observed pixels under `motion` (previous to current
/// camera); `None` when the point lands behind the camera.
pub fn residual(calib: &StereoCalib, motion: &Pose, c: &Correspondence) -> Option<[f64; 4]> {
    let (l, r) = calib.project(&motion.transform_point(&c.point))?;
    let o = &c.observed;
    Some([l[0] - o[0], l[1] - o[1], r[0] - o[2], r[1] - o[3]])
}

/// Residual and its Jacobian with respect to the increment of
/// [`apply_increment`] at zero.
pub fn residual_jacobian(calib: &StereoCalib, motion: &Pose, c: &Correspondence) -> Option<([f64; 4], Jacobian)> {
    let x = motion.transform_point(&c.point);
    let r = residual(calib, motion, c)?;
    let (f, b) = (calib.focal, calib.baseline);
    let iz = 1.0 / x.z;
    // d pixel / d point
    let mut dp = SMatrix::<f64, 4, 3>::zeros();
    dp.row_mut(0).copy_from_slice(&[f * iz, 0.0, -f * x.x * iz * iz]);
    dp.row_mut(1).copy_from_slice(&[0.0, f * iz, -f * x.y * iz * iz]);
    dp.row_mut(2).copy_from_slice(&[f * iz, 0.0, -f * (x.x - b) * iz * iz]);
    dp.row_mut(3).copy_from_slice(&[0.0, f * iz, -f * x.y * iz * iz]);
    // d point / d (rho, phi) = [I, -[x]x]
    let mut dx = SMatrix::<f64, 3, 6>::zeros();
    dx.fixed_view_mut::<3, 3>(0, 0).fill_with_identity();
    dx.fixed_view_mut::<3, 3>(0, 3).copy_from(&(-x.cross_matrix()));
    Some((r, dp * dx))
}

/// Left-multiplies `motion` by the increment `(rho, phi)`:
/// `x -> exp(phi) (R x + t) + rho`.
pub fn apply_increment(motion: &Pose, delta: &Vector6<f64>) -> Pose {
    let rho = delta.fixed_rows::<3>(0).into_owned();
    let dq = Quat::from_rotation_vector(&delta.fixed_rows::<3>(3).into_owned());
    Pose::new(dq.rotate(&motion.position) + rho, dq * motion.orientation, motion.stamp)
}

/// Cost charged for a point pushed behind the camera.
const BEHIND_COST: f64 = 1e6;

pub fn cost(calib: &StereoCalib, motion: &Pose, corr: &[Correspondence]) -> f64 {
    corr.iter()
        .map(|c| match residual(calib, motion, c) {
            Some(r) => 0.5 * r.iter().map(|v| v * v).sum::<f64>(),
            None => BEHIND_COST,
        })
        .sum()
}

#[derive(Clone, Debug)]
pub struct GnResult {
    pub motion: Pose,
    /// Cost before the first and after every accepted step.
    pub costs: Vec<f64>,
    pub converged: bool,
}

/// Gauss-Newton on the summed squared reprojection error, halving steps
/// that would raise the cost.
pub fn gauss_newton(calib: &StereoCalib, init: &Pose, corr: &[Correspondence], cfg: &MotionConfig) -> Option<GnResult> {
    let mut m = *init;
    let mut c = cost(calib, &m, corr);
    let mut out = GnResult {
        motion: m,
        costs: vec![c],
        converged: false,
    };
    for _ in 0..cfg.gn_iterations {
        let mut h = SMatrix::<f64, 6, 6>::zeros();
        let mut g = Vector6::zeros();
        for cr in corr {
            if let Some((r, j)) = residual_jacobian(calib, &m, cr) {
                h += j.transpose() * j;
                g += j.transpose() * nalgebra::Vector4::from(r);
            }
        }
        if g.norm() < cfg.gn_tolerance {
            out.converged = true;
            break;
        }
        let step = -h.cholesky()?.solve(&g);
        let mut accepted = None;
        let mut s = step;
        for _ in 0..30 {
            let cand = apply_increment(&m, &s);
            let cc = cost(calib, &cand, corr);
            if cc <= c {
                accepted = Some((cand, cc));
                break;
            }
            s *= 0.5;
        }
        let Some((cand, cc)) = accepted else {
            out.converged = true;
            break;
        };
        m = cand;
        c = cc;
        out.costs.push(c);
        if s.norm() < 1e-15 {
            out.converged = true;
            break;
        }
    }
    out.motion = m;
    Some(out)
}

/// Indices of correspondences whose RMS reprojection error over the four
/// coordinates is below `threshold`.
pub fn classify(calib: &StereoCalib, motion: &Pose, corr: &[Correspondence], threshold: f64) -> Vec<usize> {
    (0..corr.len())
        .filter(|&i| {
            residual(calib, motion, &corr[i])
                .is_some_and(|r| r.iter().map(|v| v * v).sum::<f64>() < 4.0 * threshold * threshold)
        })
        .collect()
}

#[derive(Clone, Debug)]
pub struct MotionEstimate {
    /// Maps points from the previous to the current left camera.
    pub motion: Pose,
    /// Quad indices classified as inliers by `motion`.
    pub inliers: Vec<usize>,
    /// RMS reprojection error over the inliers, px.
    pub rms: f64,
}

/// RANSAC over minimal three-quad samples followed by a Gauss-Newton refit
/// on all inliers.
pub fn estimate_motion(
    quads: &[QuadMatch],
    prev: &StereoFrame,
    cur: &StereoFrame,
    calib: &StereoCalib,
    cfg: &MotionConfig,
    seed: u64,
) -> Result<MotionEstimate> {
    if quads.len() < 3 {
        return Err(Error::InsufficientData(format!("{} quad matches, need 3", quads.len())));
    }
    let pairs = correspondences(quads, prev, cur, calib, cfg.mode);
    if pairs.len() < 3 {
        return Err(Error::InsufficientData(format!(
            "{} triangulated quads, need 3",
            pairs.len()
        )));
    }
    let corr: Vec<Correspondence> = pairs.iter().map(|p| p.1).collect();
    let thr = cfg.threshold();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut best: (Vec<usize>, Pose) = (Vec::new(), Pose::identity());
    for _ in 0..cfg.ransac_iterations {
        let pick: Vec<Correspondence> = sample(&mut rng, corr.len(), 3).into_iter().map(|i| corr[i]).collect();
        let Some(fit) = gauss_newton(calib, &Pose::identity(), &pick, cfg) else {
            continue;
        };
        let inl = classify(calib, &fit.motion, &corr, thr);
        if inl.len() > best.0.len() {
            best = (inl, fit.motion);
        }
    }
    let (mut inliers, mut motion) = best;
    for _ in 0..3 {
        if inliers.len() < cfg.min_consensus {
            break;
        }
        let set: Vec<Correspondence> = inliers.iter().map(|&i| corr[i]).collect();
        let Some(fit) = gauss_newton(calib, &motion, &set, cfg) else {
            break;
        };
        motion = fit.motion;
        let again = classify(calib, &motion, &corr, thr);
        let same = again == inliers;
        inliers = again;
        if same {
            break;
        }
    }
    if inliers.len() < cfg.min_consensus {
        return Err(Error::NoMotionEstimate {
            inliers: inliers.len(),
            required: cfg.min_consensus,
        });
    }
    let set: Vec<Correspondence> = inliers.iter().map(|&i| corr[i]).collect();
    let rms = (2.0 * cost(calib, &motion, &set) / (4 * set.len()) as f64).sqrt();
    Ok(MotionEstimate {
        motion: motion.with_stamp(0.0),
        inliers: inliers.iter().map(|&i| pairs[i].0).collect(),
        rms,
    })
}

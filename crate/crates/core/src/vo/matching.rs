use serde::{Deserialize, Serialize};

use super::{Feature, StereoCalib, StereoFrame};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MatchConfig {
    /// Bucket grid over the current left image (columns, rows).
    pub buckets: [usize; 2],
    /// Matches kept per bucket.
    pub bucket_cap: usize,
    /// Row tolerance between rectified stereo features, px.
    pub epipolar_tolerance: f64,
    /// px
    pub max_disparity: f64,
    /// Search window between consecutive frames, px.
    pub flow_window: f64,
    /// Candidates examined per lookup, in order of descriptor distance.
    pub max_candidates: usize,
}

impl Default for MatchConfig {
    fn default() -> Self {
        MatchConfig {
            buckets: [8, 5],
            bucket_cap: 4,
            epipolar_tolerance: 2.0,
            max_disparity: 200.0,
            flow_window: 200.0,
            max_candidates: 16,
        }
    }
}

/// Feature indices of one closed matching loop.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct QuadMatch {
    pub left_prev: usize,
    pub right_prev: usize,
    pub left_cur: usize,
    pub right_cur: usize,
}

/// Feature list sorted by descriptor for nearest-descriptor lookups.
struct Index<'a> {
    feats: &'a [Feature],
    order: Vec<usize>,
}

impl<'a> Index<'a> {
    fn new(feats: &'a [Feature]) -> Self {
        let mut order: Vec<usize> = (0..feats.len()).collect();
        order.sort_by(|&a, &b| feats[a].descriptor.total_cmp(&feats[b].descriptor).then(a.cmp(&b)));
        Index { feats, order }
    }

    /// Nearest descriptor among candidates passing `admit`, looking at no
    /// more than `budget` candidates.
    fn nearest(&self, d: f64, budget: usize, admit: impl Fn(&Feature) -> bool) -> Option<usize> {
        let desc = |k: usize| self.feats[self.order[k]].descriptor;
        let split = self.order.partition_point(|&i| self.feats[i].descriptor < d);
        let (mut lo, mut hi) = (split, split);
        for _ in 0..budget {
            let below = (lo > 0).then(|| d - desc(lo - 1));
            let above = (hi < self.order.len()).then(|| desc(hi) - d);
            let k = match (below, above) {
                (Some(b), Some(a)) if b <= a => {
                    lo -= 1;
                    lo
                }
                (Some(_), None) => {
                    lo -= 1;
                    lo
                }
                (_, Some(_)) => {
                    hi += 1;
                    hi - 1
                }
                (None, None) => return None,
            };
            let i = self.order[k];
            if admit(&self.feats[i]) {
                return Some(i);
            }
        }
        None
    }
}

/// Matches features around the loop left_prev, right_prev, right_cur,
/// left_cur and back, keeping loops that return to the starting feature,
/// then bucketing them over the current left image.
pub fn quad_match(prev: &StereoFrame, cur: &StereoFrame, calib: &StereoCalib, cfg: &MatchConfig) -> Vec<QuadMatch> {
    let (rp, rc, lc, lp) = (
        Index::new(&prev.right),
        Index::new(&cur.right),
        Index::new(&cur.left),
        Index::new(&prev.left),
    );
    let budget = cfg.max_candidates.max(1);
    let stereo = |l: &Feature, r: &Feature| {
        let d = l.px[0] - r.px[0];
        (l.px[1] - r.px[1]).abs() <= cfg.epipolar_tolerance && d > 0.0 && d <= cfg.max_disparity
    };
    let flow = |a: &Feature, b: &Feature| {
        (a.px[0] - b.px[0]).abs() <= cfg.flow_window && (a.px[1] - b.px[1]).abs() <= cfg.flow_window
    };
    let mut quads = Vec::new();
    for (i, f) in prev.left.iter().enumerate() {
        let Some(j) = rp.nearest(f.descriptor, budget, |r| stereo(f, r)) else {
            continue;
        };
        let fr = &prev.right[j];
        let Some(k) = rc.nearest(fr.descriptor, budget, |r| flow(fr, r)) else {
            continue;
        };
        let cr = &cur.right[k];
        let Some(m) = lc.nearest(cr.descriptor, budget, |l| stereo(l, cr)) else {
            continue;
        };
        let cl = &cur.left[m];
        let Some(back) = lp.nearest(cl.descriptor, budget, |l| flow(cl, l)) else {
            continue;
        };
        if back == i {
            quads.push(QuadMatch {
                left_prev: i,
                right_prev: j,
                left_cur: m,
                right_cur: k,
            });
        }
    }
    bucket(quads, cur, calib, cfg)
}

/// Keeps at most `bucket_cap` quads per bucket, in input order.
pub fn bucket(quads: Vec<QuadMatch>, cur: &StereoFrame, calib: &StereoCalib, cfg: &MatchConfig) -> Vec<QuadMatch> {
    let [bx, by] = [cfg.buckets[0].max(1), cfg.buckets[1].max(1)];
    let mut counts = vec![0usize; bx * by];
    quads
        .into_iter()
        .filter(|q| {
            let b = bucket_of(&cur.left[q.left_cur].px, calib, [bx, by]);
            counts[b] += 1;
            counts[b] <= cfg.bucket_cap
        })
        .collect()
}

pub fn bucket_of(px: &[f64; 2], calib: &StereoCalib, buckets: [usize; 2]) -> usize {
    let cell = |x: f64, size: u32, n: usize| ((x / size as f64 * n as f64).floor().max(0.0) as usize).min(n - 1);
    cell(px[1], calib.height, buckets[1]) * buckets[0] + cell(px[0], calib.width, buckets[0])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::vo::{gen_scene, to_frame, visible, StereoObservation, VoSceneConfig};
    use crate::{Pose, Quat, Vec3};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::collections::HashSet;

    fn no_buckets() -> MatchConfig {
        MatchConfig {
            bucket_cap: usize::MAX,
            ..Default::default()
        }
    }

    #[test]
    fn exact_descriptors_match_every_common_feature() {
        let s = gen_scene(&VoSceneConfig::default(), &StereoCalib::default(), 2).unwrap();
        for k in 1..4 {
            let (a, b) = (&s.frames[k - 1], &s.frames[k]);
            let q = quad_match(a, b, &s.calib, &no_buckets());
            for m in &q {
                let id = a.left[m.left_prev].source;
                assert_eq!(a.right[m.right_prev].source, id);
                assert_eq!(b.left[m.left_cur].source, id);
                assert_eq!(b.right[m.right_cur].source, id);
            }
            let ids_a: HashSet<usize> = s.observations[k - 1].iter().map(|o| o.id).collect();
            let common = s.observations[k].iter().filter(|o| ids_a.contains(&o.id)).count();
            assert_eq!(q.len(), common);
        }
    }

    fn pair() -> (StereoFrame, StereoFrame, StereoCalib) {
        let calib = StereoCalib::default();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let lm: Vec<Vec3> = (0..1000)
            .map(|_| {
                let z = rng.random_range(3.0..20.0);
                Vec3::new(rng.random_range(-0.9..0.9) * z, rng.random_range(-0.55..0.55) * z, z)
            })
            .collect();
        let mk = |pose: &Pose, rng: &mut ChaCha8Rng| {
            let obs: Vec<StereoObservation> = visible(&calib, &lm, pose, (0.5, 50.0))
                .into_iter()
                .map(|(id, left, right)| StereoObservation {
                    id,
                    left,
                    right,
                    descriptor: id as f64 * 1e-3,
                    outlier: false,
                })
                .collect();
            to_frame(&obs, 0.0, rng).unwrap()
        };
        let a = mk(&Pose::identity(), &mut rng);
        let b = mk(&Pose::new(Vec3::new(0.0, 0.0, 0.1), Quat::from_yaw(0.0), 0.0), &mut rng);
        (a, b, calib)
    }

    #[test]
    fn broken_link_rejects_the_quad() {
        let (a, mut b, calib) = pair();
        let all = quad_match(&a, &b, &calib, &no_buckets());
        let victim = all[10];
        let id = b.right[victim.right_cur].source;
        // the current right feature now looks like a different landmark
        b.right[victim.right_cur].descriptor = 5.0;
        let after = quad_match(&a, &b, &calib, &no_buckets());
        assert!(!after.iter().any(|q| a.left[q.left_prev].source == id));
        assert_eq!(after.len(), all.len() - 1);
    }

    #[test]
    fn bucket_cap_bounds_and_spreads_matches() {
        let (a, b, calib) = pair();
        let cfg = MatchConfig {
            bucket_cap: 2,
            ..Default::default()
        };
        let q = quad_match(&a, &b, &calib, &cfg);
        let mut per = [0; 40];
        for m in &q {
            per[bucket_of(&b.left[m.left_cur].px, &calib, [8, 5])] += 1;
        }
        assert!(q.len() <= 80);
        assert!(per.iter().all(|&c| c <= 2));
        let used = per.iter().filter(|&&c| c > 0).count();
        assert!(used >= 30, "{used}");
    }
}

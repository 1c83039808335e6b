use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::delaunay::{Label, TetMesh, INFINITE, MERGE_RADIUS};
use super::maxflow::FlowGraph;
use super::predicates::orient;
use super::Keyframe;
use crate::error::{Error, Result};
use crate::Vec3;

/// Weights of the inside/outside labeling energy.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CutWeights {
    /// Outside affinity added to every cell a visibility ray crosses.
    pub alpha_vis: f64,
    /// Inside affinity added to the cell just behind an observed point.
    pub alpha_behind: f64,
    /// Cost of every facet separating differently labeled cells.
    pub lambda: f64,
}

impl Default for CutWeights {
    fn default() -> Self {
        CutWeights {
            alpha_vis: 1.0,
            alpha_behind: 5.0,
            lambda: 0.5,
        }
    }
}

/// Binary labeling problem over the cells of a mesh. Node `i < n` is
/// tetrahedron `i`, node `n` is the infinite cell.
///
/// Energy: `sum(outside_cost[i] if i is outside) + sum(inside_cost[i] if i is
/// inside) + sum(w over pairs with different labels)`.
#[derive(Clone, Debug, Default)]
pub struct CutProblem {
    /// Paid when the cell is labeled inside (accumulated visibility).
    pub inside_cost: Vec<f64>,
    /// Paid when the cell is labeled outside (accumulated behind-point weight).
    pub outside_cost: Vec<f64>,
    /// Facet adjacency, each unordered pair once.
    pub pairs: Vec<(usize, usize, f64)>,
}

impl CutProblem {
    pub fn nodes(&self) -> usize {
        self.inside_cost.len()
    }

    pub fn energy(&self, labels: &[Label]) -> f64 {
        let mut e = 0.0;
        for (i, l) in labels.iter().enumerate() {
            e += match l {
                Label::Inside => self.inside_cost[i],
                Label::Outside => self.outside_cost[i],
            };
        }
        for &(a, b, w) in &self.pairs {
            if labels[a] != labels[b] {
                e += w;
            }
        }
        e
    }

    /// Exact minimum-energy labeling. Cells on the source side of the minimum
    /// cut are outside; ties resolve towards inside.
    pub fn solve(&self) -> Vec<Label> {
        let n = self.nodes();
        let (s, t) = (n, n + 1);
        let mut g = FlowGraph::new(n + 2);
        for i in 0..n {
            if self.inside_cost[i] > 0.0 {
                g.add_edge(s, i, self.inside_cost[i], 0.0);
            }
            if self.outside_cost[i] > 0.0 {
                g.add_edge(i, t, self.outside_cost[i], 0.0);
            }
        }
        for &(a, b, w) in &self.pairs {
            g.add_edge(a, b, w, w);
        }
        g.max_flow(s, t);
        let side = g.source_side(s);
        (0..n)
            .map(|i| if side[i] { Label::Outside } else { Label::Inside })
            .collect()
    }
}

/// Triangles separating inside from outside cells, oriented outward.
#[derive(Clone, Debug, Default)]
pub struct SurfaceMesh {
    pub vertices: Vec<Vec3>,
    pub triangles: Vec<[usize; 3]>,
    /// Every edge is shared by exactly two triangles.
    pub watertight: bool,
}

impl SurfaceMesh {
    fn check_watertight(&mut self) {
        let mut edges: HashMap<(usize, usize), u32> = HashMap::new();
        for t in &self.triangles {
            for k in 0..3 {
                let (a, b) = (t[k], t[(k + 1) % 3]);
                *edges.entry((a.min(b), a.max(b))).or_default() += 1;
            }
        }
        self.watertight = edges.values().all(|&c| c == 2);
    }

    /// ASCII mesh: vertex count, vertex lines, triangle count, index lines.
    pub fn to_ascii(&self) -> String {
        use std::fmt::Write as _;
        let mut out = String::new();
        let _ = writeln!(out, "vertices {}", self.vertices.len());
        for v in &self.vertices {
            let _ = writeln!(out, "{} {} {}", v.x, v.y, v.z);
        }
        let _ = writeln!(out, "triangles {}", self.triangles.len());
        for t in &self.triangles {
            let _ = writeln!(out, "{} {} {}", t[0], t[1], t[2]);
        }
        out
    }
}

/// Outcome of [`label_and_extract`].
#[derive(Clone, Debug)]
pub struct Reconstruction {
    pub surface: SurfaceMesh,
    pub problem: CutProblem,
    pub energy: f64,
    /// No visibility rays were available; everything was labeled inside.
    pub no_visibility: bool,
}

fn inward_normal(mesh: &TetMesh, t: usize, j: usize) -> (Vec3, Vec3) {
    let f = mesh.face(t, j);
    let (a, b, c) = (mesh.vertices[f[0]], mesh.vertices[f[1]], mesh.vertices[f[2]]);
    let mut n = (b - a).cross(&(c - a));
    if n.dot(&(mesh.vertices[mesh.tets[t][j]] - a)) < 0.0 {
        n = -n;
    }
    (n, a)
}

/// Incident tetrahedron of vertex `v` whose cone at `v` contains the
/// direction towards `q`, or the infinite cell.
fn cell_towards(mesh: &TetMesh, star: &[usize], v: usize, q: &Vec3) -> usize {
    for &t in star {
        let k = mesh.tets[t].iter().position(|&x| x == v).expect("star contains vertex");
        let c = mesh.corners(t);
        let inside = (0..4).filter(|&j| j != k).all(|j| {
            let mut r = c;
            r[j] = *q;
            orient(&r[0], &r[1], &r[2], &r[3]) >= 0.0
        });
        if inside {
            return t;
        }
    }
    INFINITE
}

/// Walks the segment from vertex `v` towards `to`, calling `cross` for every
/// cell entered (including the first) with the face it was entered through,
/// and stops in the cell containing `to` or on leaving the hull.
fn walk_segment(
    mesh: &TetMesh,
    start: usize,
    from: &Vec3,
    to: &Vec3,
    mut cross: impl FnMut(usize, Option<(usize, usize)>),
) {
    let d = to - from;
    let mut t = start;
    let mut entered: Option<(usize, usize)> = None;
    let mut s_prev = 0.0;
    for _ in 0..mesh.tets.len() + 1 {
        cross(t, entered);
        let mut best: Option<(f64, usize)> = None;
        for j in 0..4 {
            let (n, a) = inward_normal(mesh, t, j);
            let den = n.dot(&d);
            if den >= 0.0 {
                continue;
            }
            let s = n.dot(&(a - from)) / den;
            if s >= s_prev - 1e-12 && best.is_none_or(|(bs, _)| s < bs) {
                best = Some((s, j));
            }
        }
        let Some((s, j)) = best else { return };
        if s >= 1.0 {
            return;
        }
        let next = mesh.neighbors[t][j];
        if next == INFINITE {
            cross(INFINITE, Some((t, j)));
            return;
        }
        entered = Some((t, j));
        s_prev = s;
        t = next;
    }
}

fn vertex_lookup(mesh: &TetMesh) -> HashMap<[i64; 3], Vec<usize>> {
    let mut map: HashMap<[i64; 3], Vec<usize>> = HashMap::new();
    for (i, v) in mesh.vertices.iter().enumerate() {
        map.entry(cell_key(v)).or_default().push(i);
    }
    map
}

fn cell_key(p: &Vec3) -> [i64; 3] {
    [0, 1, 2].map(|i| (p[i] / MERGE_RADIUS).floor() as i64)
}

fn find_vertex(map: &HashMap<[i64; 3], Vec<usize>>, mesh: &TetMesh, p: &Vec3) -> Option<usize> {
    let c = cell_key(p);
    for dx in -1..=1 {
        for dy in -1..=1 {
            for dz in -1..=1 {
                if let Some(ids) = map.get(&[c[0] + dx, c[1] + dy, c[2] + dz]) {
                    if let Some(&v) = ids.iter().find(|&&v| (mesh.vertices[v] - p).norm() < MERGE_RADIUS) {
                        return Some(v);
                    }
                }
            }
        }
    }
    None
}

/// Accumulates the visibility energy of all keyframe rays and records the
/// number of rays through each face in `mesh.crossings`.
pub fn build_problem(mesh: &mut TetMesh, keyframes: &[Keyframe], w: &CutWeights) -> Result<CutProblem> {
    let n = mesh.tets.len();
    let node = |t: usize| if t == INFINITE { n } else { t };
    let mut p = CutProblem {
        inside_cost: vec![0.0; n + 1],
        outside_cost: vec![0.0; n + 1],
        pairs: Vec::new(),
    };
    let mut inf_pair = vec![0.0; n];
    for (t, nb) in mesh.neighbors.iter().enumerate().take(n) {
        for &m in nb {
            if m == INFINITE {
                inf_pair[t] += w.lambda;
            } else if t < m {
                p.pairs.push((t, m, w.lambda));
            }
        }
    }
    for (t, wt) in inf_pair.into_iter().enumerate() {
        if wt > 0.0 {
            p.pairs.push((t, n, wt));
        }
    }

    let lookup = vertex_lookup(mesh);
    let stars = mesh.vertex_stars();
    let mut crossings = vec![[0u32; 4]; n];
    for kf in keyframes {
        let cam = kf.pose.position;
        for pt in &kf.points {
            let v = find_vertex(&lookup, mesh, pt)
                .ok_or_else(|| Error::Parameter(format!("keyframe point {pt:?} is not a mesh vertex")))?;
            let at = mesh.vertices[v];
            let behind = cell_towards(mesh, &stars[v], v, &(at * 2.0 - cam));
            p.outside_cost[node(behind)] += w.alpha_behind;
            let first = cell_towards(mesh, &stars[v], v, &cam);
            if first == INFINITE {
                p.inside_cost[n] += w.alpha_vis;
                continue;
            }
            walk_segment(mesh, first, &at, &cam, |t, via| {
                p.inside_cost[node(t)] += w.alpha_vis;
                if let Some((from, j)) = via {
                    crossings[from][j] += 1;
                    if t != INFINITE {
                        if let Some(k) = mesh.neighbors[t].iter().position(|&x| x == from) {
                            crossings[t][k] += 1;
                        }
                    }
                }
            });
        }
    }
    mesh.crossings = crossings;
    Ok(p)
}

/// Labels every tetrahedron inside or outside with a minimum cut and
/// extracts the separating surface.
pub fn label_and_extract(mesh: &mut TetMesh, keyframes: &[Keyframe], w: &CutWeights) -> Result<Reconstruction> {
    let problem = build_problem(mesh, keyframes, w)?;
    let no_visibility = keyframes.iter().all(|k| k.points.is_empty());
    let labels = problem.solve();
    let energy = problem.energy(&labels);
    let n = mesh.tets.len();
    mesh.infinite_label = labels[n];
    mesh.labels = labels[..n].to_vec();

    let mut surface = SurfaceMesh {
        vertices: mesh.vertices.clone(),
        ..Default::default()
    };
    for t in 0..n {
        for j in 0..4 {
            let m = mesh.neighbors[t][j];
            let other = if m == INFINITE {
                mesh.infinite_label
            } else {
                mesh.labels[m]
            };
            if mesh.labels[t] != Label::Inside || other != Label::Outside {
                continue;
            }
            let mut f = mesh.face(t, j);
            let c = f.map(|i| mesh.vertices[i]);
            // outward: away from the inside cell's opposite vertex
            if orient(&c[0], &c[1], &c[2], &mesh.vertices[mesh.tets[t][j]]) > 0.0 {
                f.swap(1, 2);
            }
            surface.triangles.push(f);
        }
    }
    // hull faces of outside cells when the infinite cell is inside
    for t in 0..n {
        for j in 0..4 {
            if mesh.neighbors[t][j] == INFINITE
                && mesh.labels[t] == Label::Outside
                && mesh.infinite_label == Label::Inside
            {
                let mut f = mesh.face(t, j);
                let c = f.map(|i| mesh.vertices[i]);
                // outward from the infinite cell points into the tetrahedron
                if orient(&c[0], &c[1], &c[2], &mesh.vertices[mesh.tets[t][j]]) < 0.0 {
                    f.swap(1, 2);
                }
                surface.triangles.push(f);
            }
        }
    }
    surface.check_watertight();
    Ok(Reconstruction {
        surface,
        problem,
        energy,
        no_visibility,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mapping::tetrahedralize;
    use crate::Pose;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    /// Independent energy of a labeling given as a bit mask.
    fn brute_energy(p: &CutProblem, mask: u32) -> f64 {
        let inside = |i: usize| mask & (1 << i) != 0;
        let mut e = 0.0;
        for i in 0..p.nodes() {
            e += if inside(i) { p.inside_cost[i] } else { p.outside_cost[i] };
        }
        for &(a, b, w) in &p.pairs {
            if inside(a) != inside(b) {
                e += w;
            }
        }
        e
    }

    fn brute_minimum(p: &CutProblem) -> f64 {
        assert!(p.nodes() <= 16);
        (0..1u32 << p.nodes())
            .map(|m| brute_energy(p, m))
            .fold(f64::INFINITY, f64::min)
    }

    /// Wall of points near z = 0 under a single apex, seen twice from a
    /// stationary camera between the apex and the wall. With a single
    /// observation per point, cells crossed by one ray tie with their facet
    /// costs at the default weights and may stay inside.
    fn wall_scene(seed: u64) -> (Vec<Vec3>, Vec<Keyframe>) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut wall = Vec::new();
        for i in -1..=1 {
            for j in -1..=1 {
                let x = i as f64 + rng.random_range(-0.1..0.1);
                let y = j as f64 + rng.random_range(-0.1..0.1);
                // slight bowl so every wall point is on the hull
                wall.push(Vec3::new(x, y, 0.02 * (x * x + y * y)));
            }
        }
        let mut pts = wall.clone();
        pts.push(Vec3::new(0.0, 0.1, 1.0));
        let kf = Keyframe {
            pose: Pose::from_translation(Vec3::new(0.15, 0.1, 0.5)),
            points: wall,
        };
        (pts, vec![kf.clone(), kf])
    }

    #[test]
    fn wall_seen_by_one_camera() {
        let (pts, kfs) = wall_scene(1);
        let mut mesh = tetrahedralize(&pts).unwrap();
        assert!(mesh.tets.len() <= 15, "{} tets", mesh.tets.len());
        let rec = label_and_extract(&mut mesh, &kfs, &CutWeights::default()).unwrap();
        assert!((rec.energy - brute_minimum(&rec.problem)).abs() < 1e-12);
        let cam = kfs[0].pose.position;
        // cells the camera looks through are outside
        for p in &kfs[0].points {
            for k in 1..10 {
                let s = k as f64 / 10.0;
                let c = mesh.locate(&(cam * (1.0 - s) + p * s), 0).unwrap();
                assert_eq!(mesh.labels[c], Label::Outside);
            }
        }
        assert_eq!(mesh.infinite_label, Label::Inside);
        assert!(!rec.surface.triangles.is_empty());
        let max_radius = (0..mesh.tets.len()).map(|t| mesh.circumsphere(t).1).fold(0.0, f64::max);
        for tri in &rec.surface.triangles {
            for &v in tri {
                assert!(mesh.vertices[v].z.abs() <= max_radius);
            }
        }
    }

    #[test]
    fn no_rays_means_everything_inside() {
        let (pts, _) = wall_scene(2);
        let mut mesh = tetrahedralize(&pts).unwrap();
        let rec = label_and_extract(&mut mesh, &[], &CutWeights::default()).unwrap();
        assert!(rec.no_visibility);
        assert!(mesh.labels.iter().all(|l| *l == Label::Inside));
        assert!(rec.surface.triangles.is_empty());
    }

    #[test]
    fn minimum_cut_matches_exhaustive_energy() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        let mut checked = 0;
        while checked < 25 {
            let n = rng.random_range(5..9);
            let pts: Vec<Vec3> = (0..n)
                .map(|_| Vec3::new(rng.random(), rng.random(), rng.random()))
                .collect();
            let mut mesh = tetrahedralize(&pts).unwrap();
            if mesh.tets.len() > 15 {
                continue;
            }
            let kfs: Vec<Keyframe> = (0..3)
                .map(|_| {
                    let cam = Vec3::new(
                        rng.random_range(-1.0..2.0),
                        rng.random_range(-1.0..2.0),
                        rng.random_range(-1.0..2.0),
                    );
                    let seen = pts.iter().filter(|_| rng.random_bool(0.6)).copied().collect();
                    Keyframe {
                        pose: Pose::from_translation(cam),
                        points: seen,
                    }
                })
                .collect();
            let weights = CutWeights {
                alpha_vis: rng.random_range(0.5..2.0),
                alpha_behind: rng.random_range(1.0..6.0),
                lambda: rng.random_range(0.1..1.0),
            };
            let rec = label_and_extract(&mut mesh, &kfs, &weights).unwrap();
            let best = brute_minimum(&rec.problem);
            assert!(rec.energy <= best + 1e-9, "cut {} brute {best}", rec.energy);
            checked += 1;
        }
    }

    #[test]
    fn closed_surface_is_watertight() {
        // camera inside a closed shell of points looks at all of them
        let mut pts = Vec::new();
        for x in [-1.0, 1.0] {
            for y in [-1.0, 1.0] {
                for z in [-1.0, 1.0] {
                    pts.push(Vec3::new(x, y, z));
                }
            }
        }
        let kfs: Vec<Keyframe> = pts
            .iter()
            .map(|p| Keyframe {
                pose: Pose::from_translation(p * 0.4 + Vec3::new(0.01, 0.02, 0.03)),
                points: pts.clone(),
            })
            .collect();
        let mut mesh = tetrahedralize(&pts).unwrap();
        let rec = label_and_extract(&mut mesh, &kfs, &CutWeights::default()).unwrap();
        assert!(mesh.labels.iter().all(|l| *l == Label::Outside));
        assert_eq!(rec.surface.triangles.len(), 12);
        assert!(rec.surface.watertight);
        let total: u32 = mesh.crossings.iter().flatten().sum();
        assert!(total > 0);
    }
}

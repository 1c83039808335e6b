use std::collections::HashMap;

use nalgebra::{Matrix3, Vector3};

use super::predicates::{insphere, orient};
use crate::error::{Error, Result};
use crate::Vec3;

/// Neighbour marker for faces on the convex hull.
pub const INFINITE: usize = usize::MAX;

/// Points closer than this are merged before triangulation, m.
pub const MERGE_RADIUS: f64 = 1e-6;

const NONE: usize = usize::MAX;
// vertex ids at and above this refer to the enclosing tetrahedron
const SUPER: usize = usize::MAX / 2;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Label {
    Inside,
    Outside,
}

/// Delaunay tetrahedralization of a point set.
///
/// Every tetrahedron is positively oriented (see [`orient`]). Face `i` of a
/// tetrahedron is the one opposite its vertex `i`; `neighbors[t][i]` is the
/// tetrahedron across it or [`INFINITE`] on the hull. Everything outside the
/// hull is treated as a single infinite cell.
#[derive(Clone, Debug)]
pub struct TetMesh {
    pub vertices: Vec<Vec3>,
    pub tets: Vec<[usize; 4]>,
    pub neighbors: Vec<[usize; 4]>,
    /// Per tetrahedron; empty until labeled.
    pub labels: Vec<Label>,
    /// Label of the infinite cell.
    pub infinite_label: Label,
    /// Number of visibility rays through each face, indexed like `neighbors`.
    pub crossings: Vec<[u32; 4]>,
    /// Mesh vertex for every input point, after merging duplicates.
    pub input_to_vertex: Vec<usize>,
}

impl TetMesh {
    pub fn corners(&self, t: usize) -> [Vec3; 4] {
        self.tets[t].map(|v| self.vertices[v])
    }

    pub fn volume(&self, t: usize) -> f64 {
        let [a, b, c, d] = self.corners(t);
        (b - a).cross(&(c - a)).dot(&(d - a)) / 6.0
    }

    /// Circumcenter and circumradius.
    pub fn circumsphere(&self, t: usize) -> (Vec3, f64) {
        let [a, b, c, d] = self.corners(t);
        let m = Matrix3::from_rows(&[(b - a).transpose(), (c - a).transpose(), (d - a).transpose()]);
        let rhs = Vector3::new((b - a).norm_squared(), (c - a).norm_squared(), (d - a).norm_squared()) * 0.5;
        match m.lu().solve(&rhs) {
            Some(x) => (a + x, x.norm()),
            None => (a, f64::INFINITY),
        }
    }

    /// Vertex indices of face `i` of tetrahedron `t`.
    pub fn face(&self, t: usize, i: usize) -> [usize; 3] {
        let v = self.tets[t];
        let mut f = [0; 3];
        let mut k = 0;
        for (j, &id) in v.iter().enumerate() {
            if j != i {
                f[k] = id;
                k += 1;
            }
        }
        f
    }

    /// Finds the tetrahedron containing `p` by walking from `start`.
    /// Returns `None` when `p` lies outside the hull.
    pub fn locate(&self, p: &Vec3, start: usize) -> Option<usize> {
        if self.tets.is_empty() {
            return None;
        }
        let mut t = start.min(self.tets.len() - 1);
        for _ in 0..self.tets.len() + 8 {
            match self.exit_face(t, p) {
                None => return Some(t),
                Some(i) => {
                    let n = self.neighbors[t][i];
                    if n == INFINITE {
                        return None;
                    }
                    t = n;
                }
            }
        }
        // walk did not settle; fall back to a scan
        (0..self.tets.len()).find(|&t| self.exit_face(t, p).is_none())
    }

    fn exit_face(&self, t: usize, p: &Vec3) -> Option<usize> {
        let c = self.corners(t);
        (0..4).find(|&i| {
            let mut q = c;
            q[i] = *p;
            orient(&q[0], &q[1], &q[2], &q[3]) < 0.0
        })
    }

    /// Tetrahedra incident to each vertex.
    pub fn vertex_stars(&self) -> Vec<Vec<usize>> {
        let mut star = vec![Vec::new(); self.vertices.len()];
        for (t, v) in self.tets.iter().enumerate() {
            for &id in v {
                star[id].push(t);
            }
        }
        star
    }
}

/// Incremental Bowyer-Watson construction inside a large enclosing
/// tetrahedron.
///
/// A point exactly on a circumsphere counts as outside it. This is the
/// symbolic perturbation that lifts each new point slightly above all
/// earlier ones, so cospherical input still yields a valid Delaunay
/// tetrahedralization deterministically.
#[derive(Clone, Debug)]
pub struct Delaunay {
    points: Vec<Vec3>,
    bounding: [Vec3; 4],
    tets: Vec<[usize; 4]>,
    nbr: Vec<[usize; 4]>,
    alive: Vec<bool>,
    mark: Vec<u32>,
    epoch: u32,
    last: usize,
}

impl Delaunay {
    /// Prepares a triangulation for points inside the box `[lo, hi]`.
    pub fn new(lo: Vec3, hi: Vec3) -> Self {
        let center = (lo + hi) * 0.5;
        let s = 1e5 * ((hi - lo).amax() + 1.0);
        let bounding = [
            Vec3::new(1.0, 1.0, 1.0),
            Vec3::new(1.0, -1.0, -1.0),
            Vec3::new(-1.0, 1.0, -1.0),
            Vec3::new(-1.0, -1.0, 1.0),
        ]
        .map(|d| center + d * s);
        let mut first = [SUPER, SUPER + 1, SUPER + 2, SUPER + 3];
        if orient(&bounding[0], &bounding[1], &bounding[2], &bounding[3]) < 0.0 {
            first.swap(0, 1);
        }
        Delaunay {
            points: Vec::new(),
            bounding,
            tets: vec![first],
            nbr: vec![[NONE; 4]],
            alive: vec![true],
            mark: vec![0],
            epoch: 0,
            last: 0,
        }
    }

    #[inline]
    fn pt(&self, id: usize) -> &Vec3 {
        if id >= SUPER {
            &self.bounding[id - SUPER]
        } else {
            &self.points[id]
        }
    }

    pub fn points(&self) -> &[Vec3] {
        &self.points
    }

    fn corners(&self, t: usize) -> [&Vec3; 4] {
        let v = self.tets[t];
        [self.pt(v[0]), self.pt(v[1]), self.pt(v[2]), self.pt(v[3])]
    }

    fn beyond(&self, t: usize, i: usize, p: &Vec3) -> bool {
        let mut c = self.corners(t);
        c[i] = p;
        orient(c[0], c[1], c[2], c[3]) < 0.0
    }

    fn locate(&self, p: &Vec3) -> Result<usize> {
        let mut t = if self.alive[self.last] {
            self.last
        } else {
            self.alive.iter().position(|a| *a).unwrap_or(0)
        };
        let limit = self.tets.len() + 8;
        'walk: for _ in 0..limit {
            for i in 0..4 {
                if self.beyond(t, i, p) {
                    let n = self.nbr[t][i];
                    if n == NONE {
                        return Err(Error::Parameter("point outside the triangulation bounds".into()));
                    }
                    t = n;
                    continue 'walk;
                }
            }
            return Ok(t);
        }
        (0..self.tets.len())
            .find(|&t| self.alive[t] && (0..4).all(|i| !self.beyond(t, i, p)))
            .ok_or_else(|| Error::Numerical("point location failed".into()))
    }

    fn conflicts(&self, t: usize, p: &Vec3) -> bool {
        let c = self.corners(t);
        insphere(c[0], c[1], c[2], c[3], p) > 0.0
    }

    /// Inserts a point and returns its vertex id.
    pub fn insert(&mut self, p: Vec3) -> Result<usize> {
        if !p.iter().all(|c| c.is_finite()) {
            return Err(Error::Parameter("non-finite point".into()));
        }
        let start = self.locate(&p)?;
        let pid = self.points.len();
        self.points.push(p);

        self.epoch += 1;
        let epoch = self.epoch;
        let mut cavity = vec![start];
        self.mark[start] = epoch;
        let mut k = 0;
        while k < cavity.len() {
            let t = cavity[k];
            k += 1;
            for i in 0..4 {
                let n = self.nbr[t][i];
                if n != NONE && self.mark[n] != epoch && self.conflicts(n, &p) {
                    self.mark[n] = epoch;
                    cavity.push(n);
                }
            }
        }

        let mut open: HashMap<[usize; 3], (usize, usize)> = HashMap::new();
        let mut created = Vec::new();
        for &t in &cavity {
            for i in 0..4 {
                let n = self.nbr[t][i];
                if n != NONE && self.mark[n] == epoch {
                    continue;
                }
                let mut v = self.tets[t];
                v[i] = pid;
                {
                    let c = [self.pt(v[0]), self.pt(v[1]), self.pt(v[2]), self.pt(v[3])];
                    if orient(c[0], c[1], c[2], c[3]) <= 0.0 {
                        return Err(Error::Numerical("cavity is not star-shaped".into()));
                    }
                }
                let nt = self.tets.len();
                self.tets.push(v);
                self.nbr.push([NONE; 4]);
                self.alive.push(true);
                self.mark.push(0);
                self.nbr[nt][i] = n;
                if n != NONE {
                    let back = self.nbr[n]
                        .iter()
                        .position(|&x| x == t)
                        .expect("adjacency is symmetric");
                    self.nbr[n][back] = nt;
                }
                for j in (0..4).filter(|&j| j != i) {
                    let mut key = [0; 3];
                    let mut m = 0;
                    for (l, &id) in v.iter().enumerate() {
                        if l != j {
                            key[m] = id;
                            m += 1;
                        }
                    }
                    key.sort_unstable();
                    if let Some((other, oj)) = open.remove(&key) {
                        self.nbr[nt][j] = other;
                        self.nbr[other][oj] = nt;
                    } else {
                        open.insert(key, (nt, j));
                    }
                }
                created.push(nt);
            }
        }
        if !open.is_empty() {
            return Err(Error::Numerical("cavity boundary is not closed".into()));
        }
        for &t in &cavity {
            self.alive[t] = false;
        }
        self.last = *created.last().expect("cavity has a boundary");
        Ok(pid)
    }

    /// Tetrahedra not touching the enclosing tetrahedron.
    pub fn finite_tets(&self) -> impl Iterator<Item = [usize; 4]> + '_ {
        self.tets
            .iter()
            .zip(&self.alive)
            .filter(|(v, a)| **a && v.iter().all(|&id| id < SUPER))
            .map(|(v, _)| *v)
    }

    pub fn into_mesh(self, input_to_vertex: Vec<usize>) -> TetMesh {
        let mut remap = vec![INFINITE; self.tets.len()];
        let mut tets = Vec::new();
        for (t, v) in self.tets.iter().enumerate() {
            if self.alive[t] && v.iter().all(|&id| id < SUPER) {
                remap[t] = tets.len();
                tets.push(*v);
            }
        }
        let neighbors = (0..self.tets.len())
            .filter(|&t| remap[t] != INFINITE)
            .map(|t| self.nbr[t].map(|n| if n == NONE { INFINITE } else { remap[n] }))
            .collect();
        let n = tets.len();
        TetMesh {
            vertices: self.points,
            tets,
            neighbors,
            labels: Vec::new(),
            infinite_label: Label::Outside,
            crossings: vec![[0; 4]; n],
            input_to_vertex,
        }
    }
}

/// Merges points closer than [`MERGE_RADIUS`]. Returns the unique points in
/// first-seen order and the unique index of every input point.
pub fn dedupe(points: &[Vec3]) -> (Vec<Vec3>, Vec<usize>) {
    let cell = |p: &Vec3| [0, 1, 2].map(|i| (p[i] / MERGE_RADIUS).floor() as i64);
    let mut buckets: HashMap<[i64; 3], Vec<usize>> = HashMap::new();
    let mut unique: Vec<Vec3> = Vec::new();
    let mut map = Vec::with_capacity(points.len());
    for p in points {
        let c = cell(p);
        let mut found = None;
        'search: for dx in -1..=1 {
            for dy in -1..=1 {
                for dz in -1..=1 {
                    if let Some(ids) = buckets.get(&[c[0] + dx, c[1] + dy, c[2] + dz]) {
                        if let Some(&u) = ids.iter().find(|&&u| (unique[u] - p).norm() < MERGE_RADIUS) {
                            found = Some(u);
                            break 'search;
                        }
                    }
                }
            }
        }
        let u = found.unwrap_or_else(|| {
            unique.push(*p);
            buckets.entry(c).or_default().push(unique.len() - 1);
            unique.len() - 1
        });
        map.push(u);
    }
    (unique, map)
}

/// Delaunay tetrahedralization of `points` after merging duplicates.
pub fn tetrahedralize(points: &[Vec3]) -> Result<TetMesh> {
    if points.iter().any(|p| !p.iter().all(|c| c.is_finite())) {
        return Err(Error::Parameter("non-finite point".into()));
    }
    let (unique, map) = dedupe(points);
    if unique.len() < 4 {
        return Err(Error::Degenerate(format!("{} unique points, need 4", unique.len())));
    }
    let a = unique[0];
    let b = unique[1];
    let c = unique.iter().find(|c| (b - a).cross(&(*c - a)).norm() > 0.0);
    let spans_volume = c.is_some_and(|c| unique.iter().any(|d| orient(&a, &b, c, d) != 0.0));
    if !spans_volume {
        return Err(Error::Degenerate("all points are coplanar".into()));
    }
    let mut lo = unique[0];
    let mut hi = unique[0];
    for p in &unique {
        lo = lo.inf(p);
        hi = hi.sup(p);
    }
    let mut dt = Delaunay::new(lo, hi);
    for p in unique {
        dt.insert(p)?;
    }
    Ok(dt.into_mesh(map))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn is_delaunay(points: &[Vec3], mesh: &TetMesh) -> bool {
        mesh.tets.iter().all(|v| {
            let c = v.map(|i| points[i]);
            points.iter().all(|p| insphere(&c[0], &c[1], &c[2], &c[3], p) <= 0.0)
        })
    }

    fn cube_corners() -> Vec<Vec3> {
        let mut pts = Vec::new();
        for x in 0..2 {
            for y in 0..2 {
                for z in 0..2 {
                    pts.push(Vec3::new(x as f64, y as f64, z as f64));
                }
            }
        }
        pts
    }

    #[test]
    fn four_points_make_one_tetrahedron() {
        let pts = [Vec3::zeros(), Vec3::x(), Vec3::y(), Vec3::z()];
        let mesh = tetrahedralize(&pts).unwrap();
        assert_eq!(mesh.tets.len(), 1);
        assert!(mesh.volume(0) > 0.0);
        assert!(mesh.neighbors[0].iter().all(|&n| n == INFINITE));
    }

    #[test]
    fn cube_corners_are_delaunay_and_fill_the_cube() {
        let pts = cube_corners();
        let mesh = tetrahedralize(&pts).unwrap();
        assert!(is_delaunay(&pts, &mesh));
        let vol: f64 = (0..mesh.tets.len()).map(|t| mesh.volume(t)).sum();
        assert!((vol - 1.0).abs() < 1e-12);
        assert!((0..mesh.tets.len()).all(|t| mesh.volume(t) > 0.0));
    }

    #[test]
    fn duplicates_are_merged() {
        let mut pts = cube_corners();
        pts.push(Vec3::new(1.0, 1.0, 1.0 + 1e-8));
        let mesh = tetrahedralize(&pts).unwrap();
        assert_eq!(mesh.vertices.len(), 8);
        assert_eq!(mesh.input_to_vertex[8], mesh.input_to_vertex[7]);
    }

    #[test]
    fn degenerate_input_is_rejected() {
        let flat: Vec<Vec3> = (0..10).map(|i| Vec3::new(i as f64, (i * i) as f64, 0.0)).collect();
        assert!(matches!(tetrahedralize(&flat), Err(Error::Degenerate(_))));
        let few = [Vec3::zeros(), Vec3::x(), Vec3::x(), Vec3::y()];
        assert!(matches!(tetrahedralize(&few), Err(Error::Degenerate(_))));
    }

    #[test]
    fn adjacency_is_symmetric_and_interior_faces_shared_twice() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let pts: Vec<Vec3> = (0..60)
            .map(|_| Vec3::new(rng.random(), rng.random(), rng.random()))
            .collect();
        let mesh = tetrahedralize(&pts).unwrap();
        let mut faces: HashMap<[usize; 3], usize> = HashMap::new();
        for t in 0..mesh.tets.len() {
            for i in 0..4 {
                let n = mesh.neighbors[t][i];
                if n != INFINITE {
                    assert!(mesh.neighbors[n].contains(&t));
                }
                let mut f = mesh.face(t, i);
                f.sort_unstable();
                *faces.entry(f).or_default() += 1;
            }
        }
        let hull = mesh.neighbors.iter().flatten().filter(|&&n| n == INFINITE).count();
        assert_eq!(faces.values().filter(|&&c| c == 1).count(), hull);
        assert!(faces.values().all(|&c| c <= 2));
    }

    #[test]
    fn delaunay_after_every_insertion() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let mut dt = Delaunay::new(Vec3::zeros(), Vec3::repeat(1.0));
        for k in 0..200 {
            // a coarse lattice forces many cospherical and coplanar ties
            let p = if k % 3 == 0 {
                Vec3::new(
                    rng.random_range(0..5) as f64 * 0.25,
                    rng.random_range(0..5) as f64 * 0.25,
                    rng.random_range(0..5) as f64 * 0.25,
                )
            } else {
                Vec3::new(rng.random(), rng.random(), rng.random())
            };
            if dt.points().iter().any(|q| (q - p).norm() < MERGE_RADIUS) {
                continue;
            }
            dt.insert(p).unwrap();
            let pts = dt.points().to_vec();
            for v in dt.finite_tets() {
                let c = v.map(|i| pts[i]);
                assert!(orient(&c[0], &c[1], &c[2], &c[3]) > 0.0);
                for q in &pts {
                    assert!(insphere(&c[0], &c[1], &c[2], &c[3], q) <= 0.0, "after insertion {k}");
                }
            }
        }
    }

    #[test]
    fn locate_finds_containing_tetrahedron() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let pts: Vec<Vec3> = (0..80)
            .map(|_| Vec3::new(rng.random(), rng.random(), rng.random()))
            .collect();
        let mesh = tetrahedralize(&pts).unwrap();
        let mut hint = 0;
        for _ in 0..50 {
            let p = Vec3::new(rng.random(), rng.random(), rng.random());
            let by_scan = (0..mesh.tets.len()).find(|&t| mesh.exit_face(t, &p).is_none());
            let walked = mesh.locate(&p, hint);
            assert_eq!(walked.is_some(), by_scan.is_some());
            if let Some(t) = walked {
                assert!(mesh.exit_face(t, &p).is_none());
                hint = t;
            }
        }
        assert_eq!(mesh.locate(&Vec3::new(5.0, 5.0, 5.0), 0), None);
    }
}

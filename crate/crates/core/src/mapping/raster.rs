use super::delaunay::{Label, TetMesh};
use super::{OccupancyGrid, SurfaceMesh, VoxelState};
use crate::error::{Error, Result};
use crate::Vec3;

/// Triangle / axis-aligned box overlap by separating axes. Touching counts
/// as overlapping.
pub fn triangle_box_overlap(center: &Vec3, half: &Vec3, tri: &[Vec3; 3]) -> bool {
    let v = tri.map(|p| p - center);
    let e = [v[1] - v[0], v[2] - v[1], v[0] - v[2]];
    let separated = |axis: &Vec3| {
        let p = v.map(|x| axis.dot(&x));
        let r = half.x * axis.x.abs() + half.y * axis.y.abs() + half.z * axis.z.abs();
        p.iter().copied().fold(f64::INFINITY, f64::min) > r || p.iter().copied().fold(f64::NEG_INFINITY, f64::max) < -r
    };
    for i in 0..3 {
        let mut u = Vec3::zeros();
        u[i] = 1.0;
        if separated(&u) {
            return false;
        }
        for edge in &e {
            if separated(&u.cross(edge)) {
                return false;
            }
        }
    }
    !separated(&e[0].cross(&e[1]))
}

/// Converts a labeled mesh and its surface into a grid covering `[lo, hi]`.
///
/// Voxels touched by a surface triangle are occupied. Other voxels take the
/// label of the tetrahedron containing their center: inside is occupied,
/// outside is free, and centers outside the hull stay unknown.
pub fn rasterize(mesh: &TetMesh, surface: &SurfaceMesh, resolution: f64, lo: Vec3, hi: Vec3) -> Result<OccupancyGrid> {
    let mut g = OccupancyGrid::covering(lo, hi, resolution)?;
    rasterize_into(mesh, surface, &mut g)?;
    Ok(g)
}

/// [`rasterize`] onto an existing grid frame; every voxel is overwritten.
pub fn rasterize_into(mesh: &TetMesh, surface: &SurfaceMesh, g: &mut OccupancyGrid) -> Result<()> {
    if mesh.labels.len() != mesh.tets.len() {
        return Err(Error::Parameter("mesh is not labeled".into()));
    }
    let [nx, ny, nz] = g.dims();
    let mut hint = 0;
    for x in 0..nx {
        for y in 0..ny {
            // serpentine order keeps consecutive centers adjacent for the walk
            for k in 0..nz {
                let z = if y % 2 == 0 { k } else { nz - 1 - k };
                let v = [x, y, z];
                let state = match mesh.locate(&g.center(v), hint) {
                    Some(t) => {
                        hint = t;
                        match mesh.labels[t] {
                            Label::Inside => VoxelState::Occupied,
                            Label::Outside => VoxelState::Free,
                        }
                    }
                    None => VoxelState::Unknown,
                };
                let idx = g.index(v);
                g.set_state(idx, state);
            }
        }
    }
    let half = Vec3::repeat(0.5 * g.resolution());
    for t in &surface.triangles {
        let tri = t.map(|i| surface.vertices[i]);
        let lo = tri[0].inf(&tri[1]).inf(&tri[2]);
        let hi = tri[0].sup(&tri[1]).sup(&tri[2]);
        let Some((a, b)) = g.voxel_range(&(lo - half * 1e-9), &(hi + half * 1e-9)) else {
            continue;
        };
        for x in a[0]..=b[0] {
            for y in a[1]..=b[1] {
                for z in a[2]..=b[2] {
                    let v = [x, y, z];
                    let idx = g.index(v);
                    if g.state_at(idx) != VoxelState::Occupied && triangle_box_overlap(&g.center(v), &half, &tri) {
                        g.set_state(idx, VoxelState::Occupied);
                    }
                }
            }
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mapping::tetrahedralize;

    #[test]
    fn overlap_cases() {
        let tri = [
            Vec3::new(0.0, 0.0, 0.0),
            Vec3::new(1.0, 0.0, 0.0),
            Vec3::new(0.0, 1.0, 0.0),
        ];
        let h = Vec3::repeat(0.1);
        assert!(triangle_box_overlap(&Vec3::new(0.2, 0.2, 0.05), &h, &tri));
        assert!(!triangle_box_overlap(&Vec3::new(0.2, 0.2, 0.2), &h, &tri));
        // beyond the hypotenuse only the edge axis separates
        assert!(!triangle_box_overlap(&Vec3::new(0.7, 0.7, 0.0), &h, &tri));
        assert!(triangle_box_overlap(&Vec3::new(0.55, 0.5, 0.0), &h, &tri));
        // touching face
        assert!(triangle_box_overlap(&Vec3::new(0.3, 0.3, 0.1), &h, &tri));
    }

    fn cube_mesh(lo: f64, hi: f64) -> (TetMesh, SurfaceMesh) {
        let mut pts = Vec::new();
        for x in [lo, hi] {
            for y in [lo, hi] {
                for z in [lo, hi] {
                    pts.push(Vec3::new(x, y, z));
                }
            }
        }
        let mut mesh = tetrahedralize(&pts).unwrap();
        mesh.labels = vec![Label::Inside; mesh.tets.len()];
        mesh.infinite_label = Label::Outside;
        let mut triangles = Vec::new();
        for t in 0..mesh.tets.len() {
            for j in 0..4 {
                if mesh.neighbors[t][j] == crate::mapping::INFINITE {
                    triangles.push(mesh.face(t, j));
                }
            }
        }
        let surface = SurfaceMesh {
            vertices: mesh.vertices.clone(),
            triangles,
            watertight: true,
        };
        (mesh, surface)
    }

    #[test]
    fn unit_cube_matches_analytic_voxelization() {
        let (lo, hi) = (0.1, 1.1);
        let (mesh, surface) = cube_mesh(lo, hi);
        let g = rasterize(&mesh, &surface, 0.25, Vec3::repeat(-0.5), Vec3::repeat(1.5)).unwrap();
        assert_eq!(g.dims(), [8, 8, 8]);
        let mut expected = 0;
        for idx in 0..g.len() {
            let c = g.center(g.coords(idx));
            // closed voxel meets the closed cube
            let hits = (0..3).all(|i| c[i] + 0.125 >= lo && c[i] - 0.125 <= hi);
            let want = if hits {
                VoxelState::Occupied
            } else {
                VoxelState::Unknown
            };
            assert_eq!(g.state_at(idx), want, "voxel {:?}", g.coords(idx));
            expected += hits as usize;
        }
        assert_eq!(expected, 125);
    }

    #[test]
    fn all_inside_without_surface_fills_the_hull() {
        let (mesh, _) = cube_mesh(0.0, 1.0);
        let g = rasterize(
            &mesh,
            &SurfaceMesh::default(),
            0.25,
            Vec3::repeat(-0.5),
            Vec3::repeat(1.5),
        )
        .unwrap();
        for idx in 0..g.len() {
            let c = g.center(g.coords(idx));
            let in_hull = c.iter().all(|v| (0.0..=1.0).contains(v));
            assert_eq!(g.state_at(idx) == VoxelState::Occupied, in_hull);
            assert_ne!(g.state_at(idx), VoxelState::Free);
        }
    }
}

//! Signed distance to a triangle mesh, sampled on a grid.
//!
//! Magnitudes are exact point-to-triangle distances found through a uniform
//! grid of triangle buckets; signs come from the source field's side of the
//! isovalue rather than from the mesh orientation.

use std::fs;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{add, dot, normalize, scale, sub, voxel_gradient, TriangleMesh, Vec3};
use crate::error::{Error, Result};
use crate::grid::{Grid3, ScalarField};
use crate::volume;

/// Exact Euclidean distance from `p` to triangle `[a, b, c]` (closest-point
/// by Voronoi-region classification).
pub fn point_triangle_distance(p: Vec3, [a, b, c]: [Vec3; 3]) -> f64 {
    let closest = closest_point_on_triangle(p, a, b, c);
    let d = sub(p, closest);
    dot(d, d).sqrt()
}

fn closest_point_on_triangle(p: Vec3, a: Vec3, b: Vec3, c: Vec3) -> Vec3 {
    let ab = sub(b, a);
    let ac = sub(c, a);
    let ap = sub(p, a);
    let d1 = dot(ab, ap);
    let d2 = dot(ac, ap);
    if d1 <= 0.0 && d2 <= 0.0 {
        return a;
    }
    let bp = sub(p, b);
    let d3 = dot(ab, bp);
    let d4 = dot(ac, bp);
    if d3 >= 0.0 && d4 <= d3 {
        return b;
    }
    let vc = d1 * d4 - d3 * d2;
    if vc <= 0.0 && d1 >= 0.0 && d3 <= 0.0 {
        let v = d1 / (d1 - d3);
        return add(a, scale(ab, v));
    }
    let cp = sub(p, c);
    let d5 = dot(ab, cp);
    let d6 = dot(ac, cp);
    if d6 >= 0.0 && d5 <= d6 {
        return c;
    }
    let vb = d5 * d2 - d1 * d6;
    if vb <= 0.0 && d2 >= 0.0 && d6 <= 0.0 {
        let w = d2 / (d2 - d6);
        return add(a, scale(ac, w));
    }
    let va = d3 * d6 - d5 * d4;
    if va <= 0.0 && (d4 - d3) >= 0.0 && (d5 - d6) >= 0.0 {
        let w = (d4 - d3) / ((d4 - d3) + (d5 - d6));
        return add(b, scale(sub(c, b), w));
    }
    let denom = 1.0 / (va + vb + vc);
    let v = vb * denom;
    let w = vc * denom;
    add(a, add(scale(ab, v), scale(ac, w)))
}

/// Minimum distance from `p` over every triangle of `mesh`.
pub fn brute_force_distance(mesh: &TriangleMesh, p: Vec3) -> f64 {
    (0..mesh.triangles.len())
        .map(|t| point_triangle_distance(p, mesh.triangle(t)))
        .fold(f64::INFINITY, f64::min)
}

/// Uniform bucket grid over the mesh bounding box; each triangle is listed
/// in every cell its bounding box touches.
struct TriangleGrid {
    origin: Vec3,
    cell: f64,
    dims: [usize; 3],
    cells: Vec<Vec<u32>>,
}

impl TriangleGrid {
    fn build(mesh: &TriangleMesh, cell: f64) -> Self {
        let mut lo = [f64::INFINITY; 3];
        let mut hi = [f64::NEG_INFINITY; 3];
        for v in &mesh.vertices {
            for a in 0..3 {
                lo[a] = lo[a].min(v[a]);
                hi[a] = hi[a].max(v[a]);
            }
        }
        let dims = std::array::from_fn(|a| (((hi[a] - lo[a]) / cell).floor() as usize + 1).max(1));
        let mut grid = TriangleGrid {
            origin: lo,
            cell,
            dims,
            cells: vec![Vec::new(); dims[0] * dims[1] * dims[2]],
        };
        for t in 0..mesh.triangles.len() {
            let tri = mesh.triangle(t);
            let tlo: Vec3 = std::array::from_fn(|a| tri.iter().map(|v| v[a]).fold(f64::INFINITY, f64::min));
            let thi: Vec3 = std::array::from_fn(|a| tri.iter().map(|v| v[a]).fold(f64::NEG_INFINITY, f64::max));
            let (c0, c1) = (grid.clamp_cell(tlo), grid.clamp_cell(thi));
            for k in c0[2]..=c1[2] {
                for j in c0[1]..=c1[1] {
                    for i in c0[0]..=c1[0] {
                        let idx = grid.cell_index(i, j, k);
                        grid.cells[idx].push(t as u32);
                    }
                }
            }
        }
        grid
    }

    fn cell_index(&self, i: usize, j: usize, k: usize) -> usize {
        i + self.dims[0] * (j + self.dims[1] * k)
    }

    fn clamp_cell(&self, p: Vec3) -> [usize; 3] {
        std::array::from_fn(|a| {
            let c = ((p[a] - self.origin[a]) / self.cell).floor();
            c.clamp(0.0, (self.dims[a] - 1) as f64) as usize
        })
    }

    /// Smallest distance from `p` to any triangle whose buckets intersect
    /// the axis-aligned box of half-width `radius` around `p`. Every
    /// triangle within `radius` of `p` is among them.
    fn query(&self, mesh: &TriangleMesh, p: Vec3, radius: f64, seen: &mut Vec<u32>, stamp: u32) -> f64 {
        let hi_corner: Vec3 = std::array::from_fn(|a| {
            self.origin[a] + self.dims[a] as f64 * self.cell
        });
        for a in 0..3 {
            if p[a] + radius < self.origin[a] || p[a] - radius > hi_corner[a] {
                return f64::INFINITY;
            }
        }
        let c0 = self.clamp_cell(sub(p, [radius; 3]));
        let c1 = self.clamp_cell(add(p, [radius; 3]));
        let mut best = f64::INFINITY;
        for k in c0[2]..=c1[2] {
            for j in c0[1]..=c1[1] {
                for i in c0[0]..=c1[0] {
                    for &t in &self.cells[self.cell_index(i, j, k)] {
                        if seen[t as usize] == stamp {
                            continue;
                        }
                        seen[t as usize] = stamp;
                        best = best.min(point_triangle_distance(p, mesh.triangle(t as usize)));
                    }
                }
            }
        }
        best
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DistanceField {
    pub grid: Grid3,
    pub values: Vec<f64>,
    pub source: String,
    pub isovalue: f64,
    /// Magnitudes beyond this are saturated to it.
    pub max_band: f64,
}

impl DistanceField {
    pub fn as_field(&self) -> ScalarField {
        ScalarField {
            grid: self.grid.clone(),
            name: format!("sdf({}={})", self.source, self.isovalue),
            units: String::new(),
            values: self.values.clone(),
        }
    }
}

pub fn signed_distance_field(
    mesh: &TriangleMesh,
    field: &ScalarField,
    isovalue: f64,
    max_band: f64,
) -> Result<DistanceField> {
    if mesh.is_empty() {
        return Err(Error::EmptyMesh);
    }
    if !(max_band > 0.0) {
        return Err(Error::InvalidArgument(format!("max_band must be positive, got {max_band}")));
    }
    let grid = &field.grid;
    // Buckets about twice the typical voxel; tiny meshes fall back to one cell.
    let cell = 2.0 * grid.spacing.iter().copied().fold(f64::INFINITY, f64::min);
    let buckets = TriangleGrid::build(mesh, cell);
    let values = (0..grid.dims[2])
        .into_par_iter()
        .flat_map_iter(|k| {
            let mut seen = vec![0u32; mesh.triangles.len()];
            let mut stamp = 0u32;
            let buckets = &buckets;
            let mut out = Vec::with_capacity(grid.dims[0] * grid.dims[1]);
            for j in 0..grid.dims[1] {
                for i in 0..grid.dims[0] {
                    stamp += 1;
                    let p = grid.position([i, j, k]);
                    let d = buckets.query(mesh, p, max_band, &mut seen, stamp).min(max_band);
                    let side = field.get(i, j, k) - isovalue;
                    out.push(if side < 0.0 { -d } else { d });
                }
            }
            out
        })
        .collect();
    Ok(DistanceField {
        grid: grid.clone(),
        values,
        source: field.name.clone(),
        isovalue,
        max_band,
    })
}

/// Unit gradient of the distance field at physical point `p`, trilinearly
/// interpolated from voxel gradients. Points toward increasing distance.
pub fn surface_normal(dist: &DistanceField, p: Vec3) -> Result<Vec3> {
    let g = &dist.grid;
    let mut base = [0usize; 3];
    let mut frac = [0.0; 3];
    for a in 0..3 {
        let u = (p[a] - g.origin[a]) / g.spacing[a];
        let top = (g.dims[a] - 1) as f64;
        if !(u >= -1e-9 && u <= top + 1e-9) {
            return Err(Error::OutOfGrid(p[0], p[1], p[2]));
        }
        let u = u.clamp(0.0, top);
        let i = (u.floor() as usize).min(g.dims[a].saturating_sub(2));
        base[a] = i;
        frac[a] = if g.dims[a] > 1 { u - i as f64 } else { 0.0 };
    }
    let mut grad = [0.0; 3];
    for corner in 0..8 {
        let off = [corner & 1, (corner >> 1) & 1, (corner >> 2) & 1];
        let mut w = 1.0;
        let mut ijk = [0; 3];
        for a in 0..3 {
            if g.dims[a] == 1 && off[a] == 1 {
                w = 0.0;
            }
            ijk[a] = (base[a] + off[a]).min(g.dims[a] - 1);
            w *= if off[a] == 1 { frac[a] } else { 1.0 - frac[a] };
        }
        if w == 0.0 {
            continue;
        }
        grad = add(grad, scale(voxel_gradient(g, &dist.values, ijk), w));
    }
    normalize(grad, 1e-9).ok_or(Error::DegenerateGradient(p[0], p[1], p[2]))
}

/// Region-mean fallback for [`surface_normal`]: normalized mean of voxel
/// gradients over `voxels`.
pub(crate) fn mean_gradient(dist: &DistanceField, voxels: &[usize]) -> Option<Vec3> {
    let sum = voxels.iter().fold([0.0; 3], |acc, &v| {
        add(acc, voxel_gradient(&dist.grid, &dist.values, dist.grid.coords(v)))
    });
    normalize(sum, 1e-12)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistanceSidecar {
    pub grid: Grid3,
    pub source: String,
    pub isovalue: f64,
    pub max_band: f64,
    pub file: String,
}

/// Persists the distance values as raw f32 plus a JSON sidecar next to it
/// (`<stem>.json`).
pub fn write_distance_field(path: &Path, dist: &DistanceField) -> Result<()> {
    volume::write_raw_f32(path, &dist.values)?;
    let sidecar = DistanceSidecar {
        grid: dist.grid.clone(),
        source: dist.source.clone(),
        isovalue: dist.isovalue,
        max_band: dist.max_band,
        file: path
            .file_name()
            .map(|n| n.to_string_lossy().into_owned())
            .unwrap_or_default(),
    };
    let side = path.with_extension("json");
    fs::write(&side, serde_json::to_string_pretty(&sidecar)?).map_err(|e| Error::io(&side, e))
}

pub fn read_distance_field(path: &Path) -> Result<DistanceField> {
    let side = path.with_extension("json");
    let text = fs::read_to_string(&side).map_err(|e| Error::io(&side, e))?;
    let sidecar: DistanceSidecar = serde_json::from_str(&text)?;
    let values = volume::read_raw_f32(path, sidecar.grid.len())?;
    Ok(DistanceField {
        grid: sidecar.grid,
        values,
        source: sidecar.source,
        isovalue: sidecar.isovalue,
        max_band: sidecar.max_band,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{extract_isosurface, norm};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn triangle_distance_regions() {
        let tri = [[0.0, 0.0, 0.0], [2.0, 0.0, 0.0], [0.0, 2.0, 0.0]];
        assert_eq!(point_triangle_distance([0.5, 0.5, 1.0], tri), 1.0);
        assert_eq!(point_triangle_distance([-1.0, 0.0, 0.0], tri), 1.0);
        assert_eq!(point_triangle_distance([1.0, -3.0, 0.0], tri), 3.0);
        assert!((point_triangle_distance([2.0, 2.0, 0.0], tri) - 2f64.sqrt()).abs() < 1e-15);
        assert_eq!(point_triangle_distance([0.3, 0.3, 0.0], tri), 0.0);
    }

    fn plane_setup() -> (TriangleMesh, ScalarField) {
        let mesh = TriangleMesh {
            vertices: vec![[-10.0, -10.0, 1.0], [10.0, -10.0, 1.0], [0.0, 10.0, 1.0]],
            triangles: vec![[0, 1, 2]],
            normals: vec![[0.0, 0.0, 1.0]; 3],
        };
        let field = ScalarField::from_fn(Grid3::unit([4, 4, 4]), "z", |_, _, k| k as f64);
        (mesh, field)
    }

    #[test]
    fn beneath_plane_is_negative_one() {
        let (mesh, field) = plane_setup();
        let d = signed_distance_field(&mesh, &field, 1.0, 10.0).unwrap();
        assert_eq!(d.values[d.grid.index(1, 1, 0)], -1.0);
        // On the surface: zero, positive class.
        let on = d.values[d.grid.index(1, 1, 1)];
        assert_eq!(on, 0.0);
        assert!(on.is_sign_positive());
        assert_eq!(d.values[d.grid.index(2, 1, 3)], 2.0);
    }

    #[test]
    fn saturates_beyond_band() {
        let (mesh, field) = plane_setup();
        let d = signed_distance_field(&mesh, &field, 1.0, 1.5).unwrap();
        assert_eq!(d.values[d.grid.index(1, 1, 3)], 1.5);
        assert_eq!(d.values[d.grid.index(1, 1, 2)], 1.0);
    }

    #[test]
    fn empty_mesh_rejected() {
        let (_, field) = plane_setup();
        assert!(matches!(
            signed_distance_field(&TriangleMesh::default(), &field, 0.0, 1.0),
            Err(Error::EmptyMesh)
        ));
    }

    #[test]
    fn accelerated_matches_brute_force() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let g = Grid3::new([10, 10, 10], [0.7, 0.7, 0.7], [0.0; 3]).unwrap();
        let field = ScalarField::from_fn(g.clone(), "f", |i, j, k| (i + j + k) as f64);
        let mut mesh = TriangleMesh::default();
        for t in 0..20 {
            for _ in 0..3 {
                mesh.vertices.push(std::array::from_fn(|_| rng.gen_range(-1.0..7.5)));
                mesh.normals.push([0.0, 0.0, 1.0]);
            }
            mesh.triangles.push([3 * t, 3 * t + 1, 3 * t + 2]);
        }
        let band = 3.0;
        let d = signed_distance_field(&mesh, &field, 13.5, band).unwrap();
        for idx in 0..g.len() {
            let exact = brute_force_distance(&mesh, g.position(g.coords(idx)));
            if exact <= band {
                assert_eq!(d.values[idx].abs(), exact);
            } else {
                assert_eq!(d.values[idx].abs(), band);
            }
        }
    }

    #[test]
    fn plane_normal_points_up() {
        let (mesh, field) = plane_setup();
        let d = signed_distance_field(&mesh, &field, 1.0, 10.0).unwrap();
        for p in [[1.0, 1.0, 1.0], [0.5, 2.2, 2.7], [3.0, 3.0, 0.0]] {
            let n = surface_normal(&d, p).unwrap();
            assert!((n[2] - 1.0).abs() < 1e-12 && n[0].abs() < 1e-12 && n[1].abs() < 1e-12);
        }
        assert!(matches!(surface_normal(&d, [9.0, 0.0, 0.0]), Err(Error::OutOfGrid(..))));
    }

    #[test]
    fn sphere_normal_is_radial() {
        let g = Grid3::new([21, 21, 21], [0.5; 3], [-5.0; 3]).unwrap();
        let field = ScalarField::from_fn(g.clone(), "r", |i, j, k| norm(g.position([i, j, k])));
        let mesh = extract_isosurface(&field, 2.0);
        let d = signed_distance_field(&mesh, &field, 2.0, 4.0).unwrap();
        for p in [[3.0, 0.0, 0.0], [0.0, -2.5, 2.0], [1.7, 1.7, 1.7]] {
            let n = surface_normal(&d, p).unwrap();
            let radial = scale(p, 1.0 / norm(p));
            assert!(dot(n, radial) > 0.99, "normal {n:?} at {p:?}");
        }
    }

    #[test]
    fn flat_distance_is_degenerate() {
        let d = DistanceField {
            grid: Grid3::unit([3, 3, 3]),
            values: vec![0.5; 27],
            source: "f".into(),
            isovalue: 0.0,
            max_band: 1.0,
        };
        assert!(matches!(surface_normal(&d, [1.0, 1.0, 1.0]), Err(Error::DegenerateGradient(..))));
    }

    #[test]
    fn distance_file_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let (mesh, field) = plane_setup();
        let d = signed_distance_field(&mesh, &field, 1.0, 10.0).unwrap();
        let path = dir.path().join("sdf.raw");
        write_distance_field(&path, &d).unwrap();
        assert_eq!(read_distance_field(&path).unwrap(), d);
    }
}

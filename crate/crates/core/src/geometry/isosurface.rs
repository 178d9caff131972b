//! Isosurface extraction by marching tetrahedra.
//!
//! Each grid cell is split into six tetrahedra around its main diagonal.
//! Neighboring cells split their shared faces along the same diagonal, so
//! the triangulation is watertight without ambiguity tables. Vertices are
//! placed on lattice edges by linear interpolation and shared between
//! triangles through an edge-keyed map.

use std::collections::HashMap;

use rayon::prelude::*;

use super::{add, cross, dot, norm, normalize, scale, sub, voxel_gradient, TriangleMesh, Vec3};
use crate::grid::ScalarField;

/// Corner offsets; bit 0 is x, bit 1 is y, bit 2 is z.
const CORNERS: [[usize; 3]; 8] = [
    [0, 0, 0],
    [1, 0, 0],
    [0, 1, 0],
    [1, 1, 0],
    [0, 0, 1],
    [1, 0, 1],
    [0, 1, 1],
    [1, 1, 1],
];

/// Kuhn decomposition: one tetrahedron per axis permutation, walking from
/// corner 0 to corner 7.
const TETS: [[usize; 4]; 6] = [
    [0, 1, 3, 7],
    [0, 1, 5, 7],
    [0, 2, 3, 7],
    [0, 2, 6, 7],
    [0, 4, 5, 7],
    [0, 4, 6, 7],
];

/// A triangle whose corners are lattice edges (pairs of voxel indices,
/// smaller first), with the direction the field increases across it.
struct RawTriangle {
    edges: [(usize, usize); 3],
    uphill: Vec3,
}

fn edge_key(a: usize, b: usize) -> (usize, usize) {
    if a < b {
        (a, b)
    } else {
        (b, a)
    }
}

pub fn extract_isosurface(field: &ScalarField, isovalue: f64) -> TriangleMesh {
    let grid = &field.grid;
    let dims = grid.dims;
    let (lo, hi) = field.min_max();
    if !(isovalue > lo && isovalue < hi) || dims.iter().any(|&d| d < 2) {
        return TriangleMesh::default();
    }
    let values = &field.values;
    let position = |idx: usize| grid.position(grid.coords(idx));

    let slabs: Vec<Vec<RawTriangle>> = (0..dims[2] - 1)
        .into_par_iter()
        .map(|k| {
            let mut out = Vec::new();
            for j in 0..dims[1] - 1 {
                for i in 0..dims[0] - 1 {
                    let ids: [usize; 8] = std::array::from_fn(|c| {
                        let o = CORNERS[c];
                        grid.index(i + o[0], j + o[1], k + o[2])
                    });
                    for tet in TETS {
                        polygonize_tet(tet.map(|c| ids[c]), values, isovalue, &position, &mut out);
                    }
                }
            }
            out
        })
        .collect();

    let mut mesh = TriangleMesh::default();
    let mut vertex_of: HashMap<(usize, usize), u32> = HashMap::new();
    let mut face_normal_sum: Vec<Vec3> = Vec::new();
    for raw in slabs.into_iter().flatten() {
        let mut tri = [0u32; 3];
        for (slot, &(a, b)) in tri.iter_mut().zip(&raw.edges) {
            *slot = *vertex_of.entry((a, b)).or_insert_with(|| {
                let t = (isovalue - values[a]) / (values[b] - values[a]);
                let pa = position(a);
                let pb = position(b);
                mesh.vertices.push(add(pa, scale(sub(pb, pa), t)));
                let ga = voxel_gradient(grid, values, grid.coords(a));
                let gb = voxel_gradient(grid, values, grid.coords(b));
                mesh.normals.push(add(ga, scale(sub(gb, ga), t)));
                face_normal_sum.push([0.0; 3]);
                (mesh.vertices.len() - 1) as u32
            });
        }
        let [p0, p1, p2] = tri.map(|v| mesh.vertices[v as usize]);
        let mut n = cross(sub(p1, p0), sub(p2, p0));
        let extent = norm(sub(p1, p0)).max(norm(sub(p2, p0))).max(norm(sub(p2, p1)));
        if norm(n) <= 1e-12 * extent * extent || extent == 0.0 {
            continue;
        }
        if dot(n, raw.uphill) < 0.0 {
            tri.swap(1, 2);
            n = scale(n, -1.0);
        }
        for v in tri {
            let s = &mut face_normal_sum[v as usize];
            *s = add(*s, n);
        }
        mesh.triangles.push(tri);
    }

    // Vertices only referenced by dropped degenerate triangles stay in the
    // list; compact them away so every vertex belongs to a triangle.
    let mut used = vec![false; mesh.vertices.len()];
    for t in &mesh.triangles {
        for &v in t {
            used[v as usize] = true;
        }
    }
    let mut remap = vec![u32::MAX; mesh.vertices.len()];
    let mut vertices = Vec::new();
    let mut normals = Vec::new();
    for (v, keep) in used.iter().enumerate() {
        if *keep {
            remap[v] = vertices.len() as u32;
            vertices.push(mesh.vertices[v]);
            let n = normalize(mesh.normals[v], 1e-12)
                .or_else(|| normalize(face_normal_sum[v], 0.0))
                .unwrap_or([0.0, 0.0, 1.0]);
            normals.push(n);
        }
    }
    for t in &mut mesh.triangles {
        *t = t.map(|v| remap[v as usize]);
    }
    mesh.vertices = vertices;
    mesh.normals = normals;
    mesh
}

fn polygonize_tet(
    ids: [usize; 4],
    values: &[f64],
    iso: f64,
    position: &impl Fn(usize) -> Vec3,
    out: &mut Vec<RawTriangle>,
) {
    let above: Vec<usize> = ids.iter().copied().filter(|&v| values[v] > iso).collect();
    let below: Vec<usize> = ids.iter().copied().filter(|&v| values[v] <= iso).collect();
    if above.is_empty() || below.is_empty() {
        return;
    }
    let centroid = |vs: &[usize]| {
        let sum = vs.iter().fold([0.0; 3], |acc, &v| add(acc, position(v)));
        scale(sum, 1.0 / vs.len() as f64)
    };
    let uphill = sub(centroid(&above), centroid(&below));
    match (above.len(), below.len()) {
        (1, 3) | (3, 1) => {
            let (lone, rest) = if above.len() == 1 {
                (above[0], &below)
            } else {
                (below[0], &above)
            };
            out.push(RawTriangle {
                edges: [
                    edge_key(lone, rest[0]),
                    edge_key(lone, rest[1]),
                    edge_key(lone, rest[2]),
                ],
                uphill,
            });
        }
        _ => {
            // Two above, two below: the crossing edges form a quad
            // a0-b0, a0-b1, a1-b1, a1-b0 in cyclic order.
            let (a0, a1, b0, b1) = (above[0], above[1], below[0], below[1]);
            let quad = [
                edge_key(a0, b0),
                edge_key(a0, b1),
                edge_key(a1, b1),
                edge_key(a1, b0),
            ];
            out.push(RawTriangle {
                edges: [quad[0], quad[1], quad[2]],
                uphill,
            });
            out.push(RawTriangle {
                edges: [quad[0], quad[2], quad[3]],
                uphill,
            });
        }
    }
}

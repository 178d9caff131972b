//! Feature surfaces and distances to them.

mod isosurface;
pub(crate) mod sdf;

pub use isosurface::extract_isosurface;
pub use sdf::{
    brute_force_distance, point_triangle_distance, read_distance_field, signed_distance_field,
    surface_normal, write_distance_field, DistanceField, DistanceSidecar,
};

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::grid::Grid3;

pub type Vec3 = [f64; 3];

#[inline]
pub(crate) fn sub(a: Vec3, b: Vec3) -> Vec3 {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

#[inline]
pub(crate) fn add(a: Vec3, b: Vec3) -> Vec3 {
    [a[0] + b[0], a[1] + b[1], a[2] + b[2]]
}

#[inline]
pub(crate) fn scale(a: Vec3, s: f64) -> Vec3 {
    [a[0] * s, a[1] * s, a[2] * s]
}

#[inline]
pub(crate) fn dot(a: Vec3, b: Vec3) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

#[inline]
pub fn cross(a: Vec3, b: Vec3) -> Vec3 {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

#[inline]
pub fn norm(a: Vec3) -> f64 {
    dot(a, a).sqrt()
}

/// Unit vector along `a`, or `None` when its length is at most `eps`.
pub fn normalize(a: Vec3, eps: f64) -> Option<Vec3> {
    let n = norm(a);
    (n > eps).then(|| scale(a, 1.0 / n))
}

/// Gradient of gridded `values` at voxel `ijk` in physical units: central
/// differences inside, one-sided on boundary slabs, zero along size-1 axes.
pub(crate) fn voxel_gradient(grid: &Grid3, values: &[f64], ijk: [usize; 3]) -> Vec3 {
    std::array::from_fn(|a| {
        let n = grid.dims[a];
        if n < 2 {
            return 0.0;
        }
        let mut lo = ijk;
        let mut hi = ijk;
        if ijk[a] > 0 {
            lo[a] -= 1;
        }
        if ijk[a] + 1 < n {
            hi[a] += 1;
        }
        let steps = (hi[a] - lo[a]) as f64;
        let vl = values[grid.index(lo[0], lo[1], lo[2])];
        let vh = values[grid.index(hi[0], hi[1], hi[2])];
        (vh - vl) / (steps * grid.spacing[a])
    })
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct TriangleMesh {
    pub vertices: Vec<Vec3>,
    pub triangles: Vec<[u32; 3]>,
    pub normals: Vec<Vec3>,
}

impl TriangleMesh {
    pub fn is_empty(&self) -> bool {
        self.triangles.is_empty()
    }

    pub fn triangle(&self, t: usize) -> [Vec3; 3] {
        let [a, b, c] = self.triangles[t];
        [
            self.vertices[a as usize],
            self.vertices[b as usize],
            self.vertices[c as usize],
        ]
    }

    pub fn triangle_area(&self, t: usize) -> f64 {
        let [a, b, c] = self.triangle(t);
        0.5 * norm(cross(sub(b, a), sub(c, a)))
    }

    /// Binary little-endian layout: vertex count (u32), vertices (f32 x3),
    /// normals (f32 x3), triangle count (u32), indices (u32 x3).
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(8 + self.vertices.len() * 24 + self.triangles.len() * 12);
        out.extend((self.vertices.len() as u32).to_le_bytes());
        for v in self.vertices.iter().chain(&self.normals) {
            for c in v {
                out.extend((*c as f32).to_le_bytes());
            }
        }
        out.extend((self.triangles.len() as u32).to_le_bytes());
        for t in &self.triangles {
            for i in t {
                out.extend(i.to_le_bytes());
            }
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> std::result::Result<Self, String> {
        let mut cursor = Cursor { bytes, pos: 0 };
        let nv = cursor.u32()? as usize;
        let read_vecs = |cursor: &mut Cursor| -> std::result::Result<Vec<Vec3>, String> {
            (0..nv)
                .map(|_| Ok([cursor.f32()? as f64, cursor.f32()? as f64, cursor.f32()? as f64]))
                .collect()
        };
        let vertices = read_vecs(&mut cursor)?;
        let normals = read_vecs(&mut cursor)?;
        let nt = cursor.u32()? as usize;
        let triangles = (0..nt)
            .map(|_| Ok([cursor.u32()?, cursor.u32()?, cursor.u32()?]))
            .collect::<std::result::Result<Vec<_>, String>>()?;
        if cursor.pos != bytes.len() {
            return Err(format!("{} trailing bytes", bytes.len() - cursor.pos));
        }
        if triangles.iter().flatten().any(|&i| i as usize >= nv) {
            return Err("triangle index out of range".into());
        }
        Ok(TriangleMesh {
            vertices,
            triangles,
            normals,
        })
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_bytes()).map_err(|e| Error::io(path, e))
    }

    pub fn read(path: &Path) -> Result<Self> {
        let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
        TriangleMesh::from_bytes(&bytes).map_err(|reason| Error::format(path, reason))
    }
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl Cursor<'_> {
    fn take4(&mut self) -> std::result::Result<[u8; 4], String> {
        let slice = self
            .bytes
            .get(self.pos..self.pos + 4)
            .ok_or_else(|| format!("unexpected end of data at byte {}", self.pos))?;
        self.pos += 4;
        Ok([slice[0], slice[1], slice[2], slice[3]])
    }

    fn u32(&mut self) -> std::result::Result<u32, String> {
        self.take4().map(u32::from_le_bytes)
    }

    fn f32(&mut self) -> std::result::Result<f32, String> {
        self.take4().map(f32::from_le_bytes)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mesh_bytes_round_trip() {
        let mesh = TriangleMesh {
            vertices: vec![[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.5]],
            triangles: vec![[0, 1, 2]],
            normals: vec![[0.0, 0.0, 1.0]; 3],
        };
        let bytes = mesh.to_bytes();
        assert_eq!(bytes.len(), 4 + 3 * 12 * 2 + 4 + 12);
        assert_eq!(TriangleMesh::from_bytes(&bytes).unwrap(), mesh);
        assert!(TriangleMesh::from_bytes(&bytes[..bytes.len() - 1]).is_err());
    }

    #[test]
    fn vector_helpers() {
        assert_eq!(cross([1.0, 0.0, 0.0], [0.0, 1.0, 0.0]), [0.0, 0.0, 1.0]);
        let n = normalize([0.0, 3.0, 4.0], 1e-12).unwrap();
        assert!((n[1] - 0.6).abs() < 1e-15 && (n[2] - 0.8).abs() < 1e-15);
        assert_eq!(normalize([0.0; 3], 1e-12), None);
    }
}

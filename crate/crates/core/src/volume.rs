//! Volume ingestion and preprocessing ahead of spectral filtering.
//!
//! Everything here is a pure function of its inputs: manifests and raw
//! files in, [`ScalarField`]s out, plus the block split/composite pair used
//! by the blocked decomposition.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{Axis, Grid3, ScalarField};

pub const ENCODING_F32_LE: &str = "f32le";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FieldEntry {
    pub name: String,
    #[serde(default)]
    pub units: String,
    pub path: PathBuf,
    #[serde(default = "default_encoding")]
    pub encoding: String,
}

fn default_encoding() -> String {
    ENCODING_F32_LE.to_string()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VolumeManifest {
    pub grid: Grid3,
    pub fields: Vec<FieldEntry>,
    #[serde(default)]
    pub provenance: serde_json::Map<String, serde_json::Value>,
    /// Directory relative field paths are resolved against. Not serialized.
    #[serde(skip)]
    pub base_dir: PathBuf,
}

impl VolumeManifest {
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut manifest: VolumeManifest = serde_json::from_str(&text)?;
        manifest.base_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
        manifest.grid.validate()?;
        Ok(manifest)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let text = serde_json::to_string_pretty(self)?;
        fs::write(path, text).map_err(|e| Error::io(path, e))
    }

    pub fn entry(&self, name: &str) -> Option<&FieldEntry> {
        self.fields.iter().find(|f| f.name == name)
    }

    pub fn resolve(&self, entry: &FieldEntry) -> PathBuf {
        if entry.path.is_absolute() {
            entry.path.clone()
        } else {
            self.base_dir.join(&entry.path)
        }
    }

    /// Checks that every listed file exists with the right sample count.
    pub fn verify(&self) -> Result<()> {
        let expected = self.grid.len() * 4;
        for entry in &self.fields {
            check_encoding(&entry.encoding)?;
            let path = self.resolve(entry);
            let meta = fs::metadata(&path).map_err(|e| Error::io(&path, e))?;
            if meta.len() as usize != expected {
                return Err(Error::SizeMismatch {
                    path,
                    expected: self.grid.len(),
                    found: meta.len() as usize / 4,
                });
            }
        }
        Ok(())
    }
}

fn check_encoding(encoding: &str) -> Result<()> {
    if encoding == ENCODING_F32_LE {
        Ok(())
    } else {
        Err(Error::UnsupportedEncoding(encoding.to_string()))
    }
}

pub fn load_field(manifest: &VolumeManifest, name: &str) -> Result<ScalarField> {
    let entry = manifest
        .entry(name)
        .ok_or_else(|| Error::UnknownField(name.to_string()))?;
    check_encoding(&entry.encoding)?;
    let path = manifest.resolve(entry);
    let values = read_raw_f32(&path, manifest.grid.len())?;
    if let Some(index) = values.iter().position(|v| !v.is_finite()) {
        return Err(Error::NonFinite {
            field: name.to_string(),
            index,
        });
    }
    Ok(ScalarField {
        grid: manifest.grid.clone(),
        name: entry.name.clone(),
        units: entry.units.clone(),
        values,
    })
}

/// Reads a headerless little-endian f32 array of exactly `expected` samples.
pub fn read_raw_f32(path: &Path, expected: usize) -> Result<Vec<f64>> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    if bytes.len() != expected * 4 {
        return Err(Error::SizeMismatch {
            path: path.to_path_buf(),
            expected,
            found: bytes.len() / 4,
        });
    }
    Ok(bytes
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]) as f64)
        .collect())
}

pub fn encode_f32_le(values: impl IntoIterator<Item = f64>) -> Vec<u8> {
    values
        .into_iter()
        .flat_map(|v| (v as f32).to_le_bytes())
        .collect()
}

pub fn write_raw_f32(path: &Path, values: &[f64]) -> Result<()> {
    fs::write(path, encode_f32_le(values.iter().copied())).map_err(|e| Error::io(path, e))
}

/// Output dims of [`downsample`], and the per-axis voxels dropped from the
/// trailing end when `factor` does not divide an axis.
pub fn downsample_shape(dims: [usize; 3], factor: usize) -> ([usize; 3], [usize; 3]) {
    let mut out = [0; 3];
    let mut remainder = [0; 3];
    for a in 0..3 {
        if dims[a] == 1 {
            out[a] = 1;
        } else {
            out[a] = dims[a] / factor;
            remainder[a] = dims[a] % factor;
        }
    }
    (out, remainder)
}

/// Box-average downsampling. Size-1 axes are left alone; trailing voxels
/// that do not fill a whole block are dropped.
pub fn downsample(field: &ScalarField, factor: usize) -> Result<ScalarField> {
    if factor < 1 {
        return Err(Error::InvalidArgument("downsample factor must be >= 1".into()));
    }
    if factor == 1 {
        return Ok(field.clone());
    }
    let src = &field.grid;
    let (dims, _) = downsample_shape(src.dims, factor);
    if dims.iter().any(|&d| d == 0) {
        return Err(Error::InvalidArgument(format!(
            "factor {factor} exceeds grid dims {:?}",
            src.dims
        )));
    }
    let step: [usize; 3] = std::array::from_fn(|a| if src.dims[a] == 1 { 1 } else { factor });
    let mut spacing = src.spacing;
    for a in 0..3 {
        spacing[a] *= step[a] as f64;
    }
    let grid = Grid3 {
        dims,
        spacing,
        origin: src.origin,
    };
    let count = (step[0] * step[1] * step[2]) as f64;
    let out = ScalarField::from_fn(grid, field.name.clone(), |i, j, k| {
        let mut sum = 0.0;
        for dk in 0..step[2] {
            for dj in 0..step[1] {
                for di in 0..step[0] {
                    sum += field.get(i * step[0] + di, j * step[1] + dj, k * step[2] + dk);
                }
            }
        }
        sum / count
    });
    Ok(out.with_units(field.units.clone()))
}

/// Doubles every axis by whole-sample reflection: `[a, b, c]` becomes
/// `[a, b, c, c, b, a]`. Size-1 axes of slab grids are not extended.
pub fn mirror_extend(field: &ScalarField) -> ScalarField {
    let src = &field.grid;
    let n = src.dims;
    let grid = Grid3 {
        dims: n.map(|d| if d == 1 { 1 } else { 2 * d }),
        spacing: src.spacing,
        origin: src.origin,
    };
    let reflect = |i: usize, n: usize| if i < n { i } else { 2 * n - 1 - i };
    ScalarField::from_fn(grid, field.name.clone(), |i, j, k| {
        field.get(reflect(i, n[0]), reflect(j, n[1]), reflect(k, n[2]))
    })
    .with_units(field.units.clone())
}

/// Inverse of [`mirror_extend`]: keeps the lower octant of the given dims.
pub fn crop(field: &ScalarField, dims: [usize; 3]) -> ScalarField {
    let grid = Grid3 {
        dims,
        spacing: field.grid.spacing,
        origin: field.grid.origin,
    };
    ScalarField::from_fn(grid, field.name.clone(), |i, j, k| field.get(i, j, k))
        .with_units(field.units.clone())
}

/// Raised-cosine weight at distance `t` (in samples) from the outermost
/// sample of a taper of `width` samples.
#[inline]
pub fn taper_weight(t: usize, width: usize) -> f64 {
    if width == 0 || t >= width {
        1.0
    } else {
        0.5 * (1.0 - (std::f64::consts::PI * t as f64 / width as f64).cos())
    }
}

/// Separable Tukey taper with the same width on both sides of each axis.
pub fn tukey_taper(field: &ScalarField, taper_width: [usize; 3]) -> Result<ScalarField> {
    for a in 0..3 {
        if 2 * taper_width[a] > field.grid.dims[a] {
            return Err(Error::InvalidArgument(format!(
                "taper width {} too wide for axis of {} samples",
                taper_width[a], field.grid.dims[a]
            )));
        }
    }
    let sides = taper_width.map(|w| [w, w]);
    Ok(taper_sides(field, sides))
}

/// Tukey taper with independent `[low, high]` widths per axis; a zero
/// width leaves that face untouched.
pub fn taper_sides(field: &ScalarField, sides: [[usize; 2]; 3]) -> ScalarField {
    let dims = field.grid.dims;
    let profiles: Vec<Vec<f64>> = (0..3)
        .map(|a| {
            let n = dims[a];
            (0..n)
                .map(|i| taper_weight(i, sides[a][0]) * taper_weight(n - 1 - i, sides[a][1]))
                .collect()
        })
        .collect();
    ScalarField::from_fn(field.grid.clone(), field.name.clone(), |i, j, k| {
        field.get(i, j, k) * profiles[0][i] * profiles[1][j] * profiles[2][k]
    })
    .with_units(field.units.clone())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlockLayout {
    pub block_dims: [usize; 3],
    /// Ghost width on each side of an owned tile.
    pub overlap: [usize; 3],
    pub taper_width: [usize; 3],
}

impl BlockLayout {
    pub fn validate(&self, dims: [usize; 3]) -> Result<()> {
        for a in 0..3 {
            if self.taper_width[a] > self.overlap[a] {
                return Err(Error::InvalidLayout(format!(
                    "axis {a}: taper width {} exceeds overlap {}",
                    self.taper_width[a], self.overlap[a]
                )));
            }
            // Axes covered by a single block need no ghost arithmetic.
            if self.block_dims[a] < dims[a] && self.block_dims[a] < 2 * self.overlap[a] + 2 {
                return Err(Error::InvalidLayout(format!(
                    "axis {a}: block size {} below 2*overlap+2 = {}",
                    self.block_dims[a],
                    2 * self.overlap[a] + 2
                )));
            }
            if self.block_dims[a] == 0 {
                return Err(Error::InvalidLayout(format!("axis {a}: zero block size")));
            }
        }
        Ok(())
    }
}

/// Placement of one block within the domain. Ranges are half-open, in
/// domain voxel coordinates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlockExtent {
    /// Block coordinates in the block lattice.
    pub block: [usize; 3],
    pub start: [usize; 3],
    pub end: [usize; 3],
    pub owned_start: [usize; 3],
    pub owned_end: [usize; 3],
    pub domain: Grid3,
}

impl BlockExtent {
    pub fn dims(&self) -> [usize; 3] {
        std::array::from_fn(|a| self.end[a] - self.start[a])
    }

    /// Taper widths for the faces of this block that abut a neighbor.
    /// Faces on the domain boundary are left untapered.
    pub fn cut_tapers(&self, taper_width: [usize; 3]) -> [[usize; 2]; 3] {
        std::array::from_fn(|a| {
            let lo = if self.start[a] > 0 { taper_width[a] } else { 0 };
            let hi = if self.end[a] < self.domain.dims[a] {
                taper_width[a]
            } else {
                0
            };
            [lo, hi]
        })
    }
}

/// Half-open tile boundaries along one axis: `(block_start, block_end,
/// owned_start, owned_end)` per block.
fn axis_tiles(n: usize, block: usize, ghost: usize) -> Vec<(usize, usize, usize, usize)> {
    if block >= n {
        return vec![(0, n, 0, n)];
    }
    let mut tiles = Vec::new();
    let mut owned_start = 0;
    while owned_start < n {
        let start = owned_start.saturating_sub(ghost);
        let end = (start + block).min(n);
        let owned_end = if end == n { n } else { end - ghost };
        tiles.push((start, end, owned_start, owned_end));
        owned_start = owned_end;
    }
    tiles
}

pub fn split_blocks(
    field: &ScalarField,
    layout: &BlockLayout,
) -> Result<Vec<(ScalarField, BlockExtent)>> {
    let dims = field.grid.dims;
    layout.validate(dims)?;
    let tiles: Vec<_> = (0..3)
        .map(|a| axis_tiles(dims[a], layout.block_dims[a], layout.overlap[a]))
        .collect();
    let mut blocks = Vec::new();
    for (bk, tz) in tiles[2].iter().enumerate() {
        for (bj, ty) in tiles[1].iter().enumerate() {
            for (bi, tx) in tiles[0].iter().enumerate() {
                let extent = BlockExtent {
                    block: [bi, bj, bk],
                    start: [tx.0, ty.0, tz.0],
                    end: [tx.1, ty.1, tz.1],
                    owned_start: [tx.2, ty.2, tz.2],
                    owned_end: [tx.3, ty.3, tz.3],
                    domain: field.grid.clone(),
                };
                let bdims = extent.dims();
                let g = &field.grid;
                let grid = Grid3 {
                    dims: bdims,
                    spacing: g.spacing,
                    origin: g.position(extent.start),
                };
                let s = extent.start;
                let block = ScalarField::from_fn(grid, field.name.clone(), |i, j, k| {
                    field.get(s[0] + i, s[1] + j, s[2] + k)
                })
                .with_units(field.units.clone());
                blocks.push((block, extent));
            }
        }
    }
    Ok(blocks)
}

/// Reassembles a domain field from the owned interiors of processed blocks.
pub fn composite_blocks(blocks: &[(ScalarField, BlockExtent)]) -> Result<ScalarField> {
    let (first, first_extent) = blocks
        .first()
        .ok_or_else(|| Error::Composite("no blocks supplied".into()))?;
    let domain = first_extent.domain.clone();
    let mut values = vec![0.0; domain.len()];
    let mut owner = vec![false; domain.len()];
    for (block, extent) in blocks {
        if extent.domain != domain {
            return Err(Error::Composite("blocks come from different domains".into()));
        }
        if block.grid.dims != extent.dims() {
            return Err(Error::Composite(format!(
                "block {:?} changed dims to {:?}",
                extent.block, block.grid.dims
            )));
        }
        for k in extent.owned_start[2]..extent.owned_end[2] {
            for j in extent.owned_start[1]..extent.owned_end[1] {
                for i in extent.owned_start[0]..extent.owned_end[0] {
                    let idx = domain.index(i, j, k);
                    if owner[idx] {
                        return Err(Error::Composite(format!(
                            "voxel ({i}, {j}, {k}) owned by more than one block"
                        )));
                    }
                    owner[idx] = true;
                    values[idx] = block.get(
                        i - extent.start[0],
                        j - extent.start[1],
                        k - extent.start[2],
                    );
                }
            }
        }
    }
    if let Some(idx) = owner.iter().position(|&o| !o) {
        let [i, j, k] = domain.coords(idx);
        return Err(Error::Composite(format!(
            "voxel ({i}, {j}, {k}) not covered; a block is missing"
        )));
    }
    Ok(ScalarField {
        grid: domain,
        name: first.name.clone(),
        units: first.units.clone(),
        values,
    })
}

/// First derivative along `axis` in physical units: central differences in
/// the interior, one-sided at the two boundary slabs.
pub fn gradient_component(field: &ScalarField, axis: Axis) -> Result<ScalarField> {
    let a = axis.index();
    let g = &field.grid;
    let n = g.dims[a];
    if n < 3 {
        return Err(Error::InvalidArgument(format!(
            "gradient along {axis:?} needs at least 3 samples, grid has {n}"
        )));
    }
    let h = g.spacing[a];
    let stride = match a {
        0 => 1,
        1 => g.dims[0],
        _ => g.dims[0] * g.dims[1],
    };
    let v = &field.values;
    let values = (0..g.len())
        .map(|idx| {
            let c = g.coords(idx)[a];
            if c == 0 {
                (v[idx + stride] - v[idx]) / h
            } else if c == n - 1 {
                (v[idx] - v[idx - stride]) / h
            } else {
                (v[idx + stride] - v[idx - stride]) / (2.0 * h)
            }
        })
        .collect();
    Ok(ScalarField {
        grid: g.clone(),
        name: format!("d{}/d{}", field.name, ["x", "y", "z"][a]),
        units: field.units.clone(),
        values,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn line(values: &[f64]) -> ScalarField {
        ScalarField::new(Grid3::unit([values.len(), 1, 1]), "f", values.to_vec()).unwrap()
    }

    fn write_manifest(dir: &Path, dims: [usize; 3], samples: &[f32]) -> VolumeManifest {
        let bytes: Vec<u8> = samples.iter().flat_map(|v| v.to_le_bytes()).collect();
        fs::write(dir.join("T.raw"), bytes).unwrap();
        let manifest = VolumeManifest {
            grid: Grid3::unit(dims),
            fields: vec![FieldEntry {
                name: "T".into(),
                units: "K".into(),
                path: "T.raw".into(),
                encoding: ENCODING_F32_LE.into(),
            }],
            provenance: Default::default(),
            base_dir: PathBuf::new(),
        };
        manifest.save(dir.join("manifest.json")).unwrap();
        VolumeManifest::load(dir.join("manifest.json")).unwrap()
    }

    #[test]
    fn load_all_ones() {
        let dir = tempfile::tempdir().unwrap();
        let m = write_manifest(dir.path(), [2, 2, 2], &[1.0; 8]);
        let f = load_field(&m, "T").unwrap();
        assert_eq!(f.values, vec![1.0; 8]);
        assert_eq!(f.grid, m.grid);
        assert_eq!(f.units, "K");
    }

    #[test]
    fn load_unknown_name() {
        let dir = tempfile::tempdir().unwrap();
        let m = write_manifest(dir.path(), [2, 2, 2], &[1.0; 8]);
        assert!(matches!(load_field(&m, "missing"), Err(Error::UnknownField(_))));
    }

    #[test]
    fn load_truncated_file() {
        let dir = tempfile::tempdir().unwrap();
        let m = write_manifest(dir.path(), [2, 2, 2], &[1.0; 7]);
        match load_field(&m, "T") {
            Err(Error::SizeMismatch {
                expected, found, ..
            }) => assert_eq!((expected, found), (8, 7)),
            other => panic!("expected size mismatch, got {other:?}"),
        }
        assert!(m.verify().is_err());
    }

    #[test]
    fn load_rejects_non_finite() {
        let dir = tempfile::tempdir().unwrap();
        let mut samples = [0.5_f32; 8];
        samples[5] = f32::NAN;
        samples[6] = f32::INFINITY;
        let m = write_manifest(dir.path(), [2, 2, 2], &samples);
        match load_field(&m, "T") {
            Err(Error::NonFinite { index, .. }) => assert_eq!(index, 5),
            other => panic!("expected non-finite error, got {other:?}"),
        }
    }

    #[test]
    fn downsample_block_mean() {
        let f = line(&[1.0, 2.0, 3.0, 4.0]);
        let d = downsample(&f, 2).unwrap();
        assert_eq!(d.values, vec![1.5, 3.5]);
        assert_eq!(d.grid.dims, [2, 1, 1]);
        assert_eq!(d.grid.spacing, [2.0, 1.0, 1.0]);
        assert_eq!(downsample(&f, 1).unwrap(), f);
        assert!(downsample(&f, 0).is_err());
    }

    #[test]
    fn downsample_constant_and_remainder() {
        let f = ScalarField::constant(Grid3::unit([7, 6, 5]), "c", 3.25);
        let d = downsample(&f, 2).unwrap();
        assert_eq!(d.grid.dims, [3, 3, 2]);
        assert!(d.values.iter().all(|&v| v == 3.25));
        assert_eq!(downsample_shape([7, 6, 5], 2).1, [1, 0, 1]);
    }

    #[test]
    fn mirror_line_and_volume() {
        let m = mirror_extend(&line(&[1.0, 2.0, 3.0]));
        assert_eq!(m.values, vec![1.0, 2.0, 3.0, 3.0, 2.0, 1.0]);

        let cube = ScalarField::from_fn(Grid3::unit([2, 2, 2]), "c", |i, j, k| (i + 2 * j + 4 * k) as f64);
        let ext = mirror_extend(&cube);
        assert_eq!(ext.grid.dims, [4, 4, 4]);
        assert_eq!(ext.values.len(), 8 * cube.values.len());

        let c = mirror_extend(&ScalarField::constant(Grid3::unit([3, 2, 2]), "c", 2.0));
        assert_eq!(c.grid.dims, [6, 4, 4]);
        assert!(c.values.iter().all(|&v| v == 2.0));
        assert_eq!(crop(&ext, [2, 2, 2]).values, cube.values);
    }

    #[test]
    fn taper_plateau_edge_midpoint() {
        let f = ScalarField::constant(Grid3::unit([16, 16, 16]), "c", 1.0);
        let t = tukey_taper(&f, [4, 4, 4]).unwrap();
        assert_eq!(t.get(8, 8, 8), 1.0);
        assert_eq!(t.get(0, 8, 8), 0.0);
        assert_eq!(t.get(15, 8, 8), 0.0);
        assert!((t.get(2, 8, 8) - 0.5).abs() < 1e-15);
        assert!((t.get(13, 8, 8) - 0.5).abs() < 1e-15);
        assert!(tukey_taper(&f, [9, 0, 0]).is_err());
    }

    #[test]
    fn split_two_blocks_on_line() {
        let f = line(&[0.0, 1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0]);
        let layout = BlockLayout {
            block_dims: [6, 1, 1],
            overlap: [2, 0, 0],
            taper_width: [2, 0, 0],
        };
        let blocks = split_blocks(&f, &layout).unwrap();
        assert_eq!(blocks.len(), 2);
        assert_eq!((blocks[0].1.owned_start[0], blocks[0].1.owned_end[0]), (0, 4));
        assert_eq!((blocks[1].1.owned_start[0], blocks[1].1.owned_end[0]), (4, 8));
        assert_eq!(blocks[0].0.values, vec![0.0, 1.0, 2.0, 3.0, 4.0, 5.0]);
        assert_eq!(blocks[1].0.values, vec![2.0, 3.0, 4.0, 5.0, 6.0, 7.0]);
        assert_eq!(blocks[0].1.cut_tapers([2, 0, 0])[0], [0, 2]);
        assert_eq!(blocks[1].1.cut_tapers([2, 0, 0])[0], [2, 0]);
    }

    #[test]
    fn split_degenerate_layouts() {
        let f = ScalarField::from_fn(Grid3::unit([8, 4, 2]), "f", |i, j, k| (i * 100 + j * 10 + k) as f64);
        let single = BlockLayout {
            block_dims: [8, 8, 8],
            overlap: [2, 2, 2],
            taper_width: [1, 1, 1],
        };
        let blocks = split_blocks(&f, &single).unwrap();
        assert_eq!(blocks.len(), 1);
        assert_eq!(composite_blocks(&blocks).unwrap(), f);

        let disjoint = BlockLayout {
            block_dims: [2, 2, 2],
            overlap: [0, 0, 0],
            taper_width: [0, 0, 0],
        };
        let blocks = split_blocks(&f, &disjoint).unwrap();
        assert_eq!(blocks.len(), 4 * 2);
        for (b, e) in &blocks {
            assert_eq!(b.grid.dims, [2, 2, 2]);
            assert_eq!(e.start, e.owned_start);
            assert_eq!(e.end, e.owned_end);
        }
    }

    #[test]
    fn composite_detects_missing_block() {
        let f = line(&[0.0, 1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0]);
        let layout = BlockLayout {
            block_dims: [6, 1, 1],
            overlap: [2, 0, 0],
            taper_width: [0, 0, 0],
        };
        let mut blocks = split_blocks(&f, &layout).unwrap();
        assert_eq!(composite_blocks(&blocks).unwrap(), f);
        blocks.pop();
        assert!(matches!(composite_blocks(&blocks), Err(Error::Composite(_))));

        let mut dup = split_blocks(&f, &layout).unwrap();
        dup.push(dup[0].clone());
        assert!(matches!(composite_blocks(&dup), Err(Error::Composite(_))));
    }

    #[test]
    fn layout_validation() {
        let bad_taper = BlockLayout {
            block_dims: [6, 1, 1],
            overlap: [1, 0, 0],
            taper_width: [2, 0, 0],
        };
        assert!(bad_taper.validate([8, 1, 1]).is_err());
        let too_small = BlockLayout {
            block_dims: [5, 1, 1],
            overlap: [2, 0, 0],
            taper_width: [1, 0, 0],
        };
        assert!(too_small.validate([8, 1, 1]).is_err());
    }

    #[test]
    fn gradient_examples() {
        let g = Grid3::unit([5, 3, 3]);
        let lin = ScalarField::from_fn(g.clone(), "u", |i, _, _| i as f64);
        let d = gradient_component(&lin, Axis::X).unwrap();
        assert!(d.values.iter().all(|&v| v == 1.0));

        let c = ScalarField::constant(g.clone(), "c", 4.0);
        assert!(gradient_component(&c, Axis::Y).unwrap().values.iter().all(|&v| v == 0.0));

        let quad = ScalarField::from_fn(g, "q", |i, _, _| (i * i) as f64);
        assert_eq!(gradient_component(&quad, Axis::X).unwrap().get(2, 1, 1), 4.0);

        let flat = ScalarField::constant(Grid3::unit([4, 2, 4]), "c", 0.0);
        assert!(gradient_component(&flat, Axis::Y).is_err());
    }

    #[test]
    fn gradient_respects_spacing() {
        let g = Grid3::new([4, 4, 4], [0.5, 2.0, 1.0], [0.0; 3]).unwrap();
        let f = ScalarField::from_fn(g, "f", |_, j, _| 3.0 * 2.0 * j as f64);
        let d = gradient_component(&f, Axis::Y).unwrap();
        assert!(d.values.iter().all(|&v| (v - 3.0).abs() < 1e-12));
    }
}

//! Viewer-facing glyph datasets and the reference glyph math.
//!
//! The statistics buffer of a dataset stores value `s` of region `i`,
//! field `l`, bin `k` at `i*M*N + N*l + k`. The classification functions
//! here are the ground truth a renderer's fragment logic must reproduce.

use std::f64::consts::PI;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{cross, normalize, Vec3};
use crate::lsrcvt::Tessellation;
use crate::specfilter::scale_length;
use crate::stats::RegionStats;

pub fn stat_index(i: usize, l: usize, k: usize, r: usize, m: usize, n: usize) -> Result<usize> {
    if i >= r || l >= m || k >= n {
        return Err(Error::OutOfRange(format!(
            "(region {i}, field {l}, bin {k}) outside {r}x{m}x{n}"
        )));
    }
    Ok(i * m * n + n * l + k)
}

/// Inverse of [`stat_index`].
pub fn stat_coords(index: usize, m: usize, n: usize) -> (usize, usize, usize) {
    (index / (m * n), (index / n) % m, index % n)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ViewBasis {
    pub right: Vec3,
    pub up: Vec3,
    pub forward: Vec3,
}

impl Default for ViewBasis {
    fn default() -> Self {
        ViewBasis {
            right: [1.0, 0.0, 0.0],
            up: [0.0, 1.0, 0.0],
            forward: [0.0, 0.0, 1.0],
        }
    }
}

const DEGENERATE_CROSS: f64 = 1e-6;

/// Glyph basis with rows `r`, `u`, `f`: `u` is the normal, `r = u x u_view`
/// normalized, `f = r x u`. When `u` is parallel to `u_view` the right
/// vector falls back to `u x f_view`, then to `r_view` made orthogonal to `u`.
pub fn orientation_matrix(normal: Vec3, view: &ViewBasis) -> [Vec3; 3] {
    let u = normalize(normal, 0.0).unwrap_or([0.0, 0.0, 1.0]);
    let r = normalize(cross(u, view.up), DEGENERATE_CROSS)
        .or_else(|| normalize(cross(u, view.forward), DEGENERATE_CROSS))
        .or_else(|| {
            let d = u[0] * view.right[0] + u[1] * view.right[1] + u[2] * view.right[2];
            normalize(
                [
                    view.right[0] - d * u[0],
                    view.right[1] - d * u[1],
                    view.right[2] - d * u[2],
                ],
                DEGENERATE_CROSS,
            )
        })
        .unwrap_or_else(|| any_perpendicular(u));
    let f = cross(r, u);
    [r, u, f]
}

fn any_perpendicular(u: Vec3) -> Vec3 {
    let axis = if u[0].abs() < 0.9 { [1.0, 0.0, 0.0] } else { [0.0, 1.0, 0.0] };
    normalize(cross(u, axis), 0.0).unwrap()
}

/// Angle about the glyph normal, in `[0, 2pi)`.
pub fn fragment_angle(p: Vec3) -> f64 {
    let theta = p[0].atan2(p[2]) + PI;
    if theta >= 2.0 * PI {
        0.0
    } else {
        theta
    }
}

/// `(field, bin)` cell of a strength-glyph fragment at model-space `p`;
/// wedges are fields, rings are bins with the coarsest innermost.
pub fn classify_strength_fragment(p: Vec3, m: usize, n: usize) -> (usize, usize) {
    let theta = fragment_angle(p);
    let r = (p[0] * p[0] + p[2] * p[2]).sqrt();
    let k = ((r * n as f64).floor() as usize).min(n - 1);
    let l = ((theta * m as f64 / (2.0 * PI)).floor() as usize).min(m - 1);
    (l, k)
}

/// Direction of starplot axis `a` of `m` in the glyph's polar plane.
pub fn starplot_axis_angle(a: usize, m: usize) -> f64 {
    a as f64 * 2.0 * PI / m as f64
}

/// Axis points for encoded radii `values`, one per field.
pub fn starplot_axis_points(values: &[f64]) -> Vec<[f64; 2]> {
    let m = values.len();
    values
        .iter()
        .enumerate()
        .map(|(a, &v)| {
            let t = starplot_axis_angle(a, m);
            [v * t.cos(), v * t.sin()]
        })
        .collect()
}

/// Hypotenuse half-plane test against the edge `p_a -> p_b` of triangle
/// `[p_a, p_b, origin]`.
pub fn starplot_wedge_test(q: [f64; 2], pa: [f64; 2], pb: [f64; 2]) -> bool {
    (pb[0] - pa[0]) * (q[1] - pa[1]) - (pb[1] - pa[1]) * (q[0] - pa[0]) > 0.0
}

/// Whether polar-plane point `q` lies inside the starplot polygon with the
/// given axis radii (at least three).
pub fn starplot_contains(q: [f64; 2], values: &[f64]) -> bool {
    let m = values.len();
    if q == [0.0, 0.0] {
        return true;
    }
    let mut theta = q[1].atan2(q[0]);
    if theta < 0.0 {
        theta += 2.0 * PI;
    }
    let a = ((theta * m as f64 / (2.0 * PI)).floor() as usize).min(m - 1);
    let b = (a + 1) % m;
    let points = starplot_axis_points(values);
    let (pa, pb) = (points[a], points[b]);
    // Radial edges origin->p_a and p_b->origin bound the wedge; the
    // hypotenuse closes the triangle.
    let ta = starplot_axis_angle(a, m);
    let tb = starplot_axis_angle(a + 1, m);
    let cross_a = ta.cos() * q[1] - ta.sin() * q[0];
    let cross_b = tb.cos() * q[1] - tb.sin() * q[0];
    cross_a >= 0.0 && cross_b <= 0.0 && starplot_wedge_test(q, pa, pb)
}

/// Starplot test for a model-space fragment on the glyph disk.
pub fn starplot_fragment(p: Vec3, values: &[f64]) -> bool {
    let theta = fragment_angle(p);
    let r = (p[0] * p[0] + p[2] * p[2]).sqrt();
    starplot_contains([r * theta.cos(), r * theta.sin()], values)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SpatialNorm {
    #[default]
    Gsn,
    Lsn,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BinNorm {
    #[default]
    Gbn,
    Lbn,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ValueTransform {
    #[default]
    Linear,
    Sqrt,
    Log,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct NormalizationConfig {
    pub spatial: SpatialNorm,
    pub bins: BinNorm,
    pub per_glyph: bool,
    pub all_axes: bool,
    pub zero_min: bool,
    pub visible_bands: Vec<u32>,
    pub visible_bins: Vec<usize>,
    pub transform: ValueTransform,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Range {
    pub min: f64,
    pub max: f64,
}

impl Range {
    pub fn contains(&self, v: f64) -> bool {
        self.min <= v && v <= self.max
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Normalized {
    /// `gamma_l` per field.
    pub ranges: Vec<Range>,
    /// Transformed buffers, parallel to the input datasets.
    pub buffers: Vec<Vec<f64>>,
    /// Per dataset, `R*M` flags marking region-field vectors whose sum was
    /// zero under per-glyph normalization.
    pub zero_sum: Vec<Vec<bool>>,
}

fn transform_value(t: ValueTransform, s: f64, eps: f64) -> f64 {
    match t {
        ValueTransform::Linear => s,
        ValueTransform::Sqrt => s.max(0.0).sqrt(),
        ValueTransform::Log => (1.0 + s.max(0.0) / eps).ln(),
    }
}

/// Computes display ranges over the selected bands and bins, applying the
/// value transform, then per-glyph normalization, then the range rules.
pub fn normalization_range(datasets: &[GlyphDataset], cfg: &NormalizationConfig) -> Result<Normalized> {
    let first = datasets
        .first()
        .ok_or_else(|| Error::Normalization("no datasets".into()))?;
    let (m, n) = (first.field_count(), first.bin_count());
    if datasets.iter().any(|d| d.field_count() != m || d.bin_count() != n) {
        return Err(Error::Normalization("datasets differ in fields or bins".into()));
    }
    if cfg.spatial == SpatialNorm::Lsn && cfg.visible_bands.is_empty() {
        return Err(Error::Normalization("local spatial normalization needs visible bands".into()));
    }
    if cfg.bins == BinNorm::Lbn && cfg.visible_bins.is_empty() {
        return Err(Error::Normalization("local bin normalization needs visible bins".into()));
    }
    if let Some(&k) = cfg.visible_bins.iter().find(|&&k| k >= n) {
        return Err(Error::Normalization(format!("visible bin {k} out of range")));
    }

    // Log scaling offset from the largest raw value per field.
    let mut eps = vec![1e-12; m];
    if cfg.transform == ValueTransform::Log {
        for (l, e) in eps.iter_mut().enumerate() {
            let gmax = datasets
                .iter()
                .flat_map(|d| (0..d.region_count()).flat_map(move |i| (0..n).map(move |k| d.get(i, l, k))))
                .fold(f64::NEG_INFINITY, f64::max);
            if gmax > 0.0 {
                *e = 1e-12 * gmax;
            }
        }
    }

    let mut buffers = Vec::with_capacity(datasets.len());
    let mut zero_sum = Vec::with_capacity(datasets.len());
    for d in datasets {
        let mut buf: Vec<f64> = d
            .buffer
            .iter()
            .enumerate()
            .map(|(idx, &s)| transform_value(cfg.transform, s, eps[stat_coords(idx, m, n).1]))
            .collect();
        let mut flags = vec![false; d.region_count() * m];
        if cfg.per_glyph {
            for (cell, flag) in buf.chunks_mut(n).zip(flags.iter_mut()) {
                let sum: f64 = cell.iter().sum();
                if sum > 0.0 {
                    cell.iter_mut().for_each(|s| *s /= sum);
                } else {
                    cell.iter_mut().for_each(|s| *s = 0.0);
                    *flag = true;
                }
            }
        }
        buffers.push(buf);
        zero_sum.push(flags);
    }

    let bands: Vec<usize> = match cfg.spatial {
        SpatialNorm::Gsn => (0..datasets.len()).collect(),
        SpatialNorm::Lsn => (0..datasets.len())
            .filter(|&b| cfg.visible_bands.contains(&datasets[b].band))
            .collect(),
    };
    let bins: Vec<usize> = match cfg.bins {
        BinNorm::Gbn => (0..n).collect(),
        BinNorm::Lbn => cfg.visible_bins.clone(),
    };
    let mut ranges = vec![
        Range {
            min: f64::INFINITY,
            max: f64::NEG_INFINITY,
        };
        m
    ];
    for &b in &bands {
        let buf = &buffers[b];
        for i in 0..datasets[b].region_count() {
            for (l, range) in ranges.iter_mut().enumerate() {
                for &k in &bins {
                    let v = buf[i * m * n + n * l + k];
                    range.min = range.min.min(v);
                    range.max = range.max.max(v);
                }
            }
        }
    }
    if ranges.iter().any(|r| r.min > r.max) {
        return Err(Error::Normalization("visible selection holds no values".into()));
    }
    if cfg.all_axes {
        let common = Range {
            min: ranges.iter().map(|r| r.min).fold(f64::INFINITY, f64::min),
            max: ranges.iter().map(|r| r.max).fold(f64::NEG_INFINITY, f64::max),
        };
        ranges.iter_mut().for_each(|r| *r = common);
    }
    if cfg.zero_min {
        for r in &mut ranges {
            r.min = 0.0;
            r.max = r.max.max(0.0);
        }
    }
    Ok(Normalized {
        ranges,
        buffers,
        zero_sum,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct GlyphDataset {
    pub band: u32,
    /// Global region id per glyph.
    pub region_ids: Vec<u32>,
    pub positions: Vec<Vec3>,
    pub normals: Vec<Vec3>,
    pub fields: Vec<String>,
    pub units: Vec<String>,
    pub bin_edges: Vec<u32>,
    pub reference_length: f64,
    pub buffer: Vec<f64>,
    /// Per-field value range over all glyphs and bins of this dataset.
    pub ranges: Vec<Range>,
}

impl GlyphDataset {
    pub fn region_count(&self) -> usize {
        self.positions.len()
    }

    pub fn field_count(&self) -> usize {
        self.fields.len()
    }

    pub fn bin_count(&self) -> usize {
        self.bin_edges.len().saturating_sub(1)
    }

    pub fn get(&self, i: usize, l: usize, k: usize) -> f64 {
        let (m, n) = (self.field_count(), self.bin_count());
        self.buffer[i * m * n + n * l + k]
    }

    pub fn bin_labels(&self) -> Vec<String> {
        self.bin_edges
            .windows(2)
            .map(|w| format!("j{}-{}", w[0], w[1] - 1))
            .collect()
    }

    pub fn stat_bytes_per_field_bin(&self) -> usize {
        4 * self.region_count()
    }
}

fn field_ranges(buffer: &[f64], r: usize, m: usize, n: usize) -> Vec<Range> {
    (0..m)
        .map(|l| {
            let mut range = Range {
                min: f64::INFINITY,
                max: f64::NEG_INFINITY,
            };
            for i in 0..r {
                for k in 0..n {
                    let v = buffer[i * m * n + n * l + k];
                    range.min = range.min.min(v);
                    range.max = range.max.max(v);
                }
            }
            if r == 0 {
                range = Range { min: 0.0, max: 0.0 };
            }
            range
        })
        .collect()
}

/// Packs one dataset per tessellation band with fields in `field_order`.
pub fn pack_glyphs(tess: &Tessellation, stats: &RegionStats, field_order: &[String]) -> Result<Vec<GlyphDataset>> {
    if stats.region_count != tess.regions.len() {
        return Err(Error::FieldMismatch(format!(
            "statistics cover {} regions, tessellation has {}",
            stats.region_count,
            tess.regions.len()
        )));
    }
    let field_ids: Vec<usize> = field_order
        .iter()
        .map(|f| {
            stats
                .field_index(f)
                .ok_or_else(|| Error::FieldMismatch(format!("no statistics for field `{f}`")))
        })
        .collect::<Result<_>>()?;
    let (m, n) = (field_ids.len(), stats.bin_count());
    let mut out = Vec::with_capacity(tess.band_count());
    for band in 0..tess.band_count() as u32 {
        let regions: Vec<_> = tess.regions_in_band(band).collect();
        let r = regions.len();
        let mut buffer = vec![0.0; r * m * n];
        for (i, rec) in regions.iter().enumerate() {
            for (l, &src) in field_ids.iter().enumerate() {
                for k in 0..n {
                    buffer[stat_index(i, l, k, r, m, n)?] = stats.get(rec.id as usize, src, k);
                }
            }
        }
        out.push(GlyphDataset {
            band,
            region_ids: regions.iter().map(|r| r.id).collect(),
            positions: regions.iter().map(|r| r.site).collect(),
            normals: regions.iter().map(|r| r.normal).collect(),
            fields: field_order.to_vec(),
            units: field_ids.iter().map(|&i| stats.units[i].clone()).collect(),
            bin_edges: stats.bin_edges.clone(),
            reference_length: stats.reference_length,
            ranges: field_ranges(&buffer, r, m, n),
            buffer,
        });
    }
    Ok(out)
}

/// Per-region row recovered from a dataset: `(region id, position, normal,
/// M x N statistics)`.
pub type GlyphRow = (u32, Vec3, Vec3, Vec<f64>);

pub fn unpack_glyphs(dataset: &GlyphDataset) -> Vec<GlyphRow> {
    let stride = dataset.field_count() * dataset.bin_count();
    (0..dataset.region_count())
        .map(|i| {
            (
                dataset.region_ids[i],
                dataset.positions[i],
                dataset.normals[i],
                dataset.buffer[i * stride..(i + 1) * stride].to_vec(),
            )
        })
        .collect()
}

const GLYPH_MAGIC: &[u8; 4] = b"LSGD";
const GLYPH_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GlyphSidecar {
    pub band: u32,
    pub fields: Vec<String>,
    pub units: Vec<String>,
    pub bin_edges: Vec<u32>,
    pub bin_labels: Vec<String>,
    pub reference_length: f64,
    /// `L/2^e` for every bin edge.
    pub edge_lengths: Vec<f64>,
    pub region_ids: Vec<u32>,
    pub ranges: Vec<Range>,
    pub normalization: NormalizationConfig,
    /// Opaque color map names, one per field.
    pub color_maps: Vec<String>,
    pub data_file: PathBuf,
}

pub fn glyph_file_name(band: u32) -> String {
    format!("glyphs.band{band}.bin")
}

/// Binary layout, little-endian: magic, version, R, M, N, band (u32), then
/// positions and normals (R x 3 f32) and the statistics buffer (R*M*N f32).
pub fn glyphs_to_bytes(d: &GlyphDataset) -> Vec<u8> {
    let mut out = Vec::with_capacity(24 + 4 * (6 * d.region_count() + d.buffer.len()));
    out.extend_from_slice(GLYPH_MAGIC);
    for v in [
        GLYPH_VERSION,
        d.region_count() as u32,
        d.field_count() as u32,
        d.bin_count() as u32,
        d.band,
    ] {
        out.extend(v.to_le_bytes());
    }
    for v in d.positions.iter().chain(&d.normals).flatten().chain(&d.buffer) {
        out.extend((*v as f32).to_le_bytes());
    }
    out
}

pub fn write_glyphs(dir: &Path, d: &GlyphDataset) -> Result<PathBuf> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let name = glyph_file_name(d.band);
    let path = dir.join(&name);
    fs::write(&path, glyphs_to_bytes(d)).map_err(|e| Error::io(&path, e))?;
    let sidecar = GlyphSidecar {
        band: d.band,
        fields: d.fields.clone(),
        units: d.units.clone(),
        bin_edges: d.bin_edges.clone(),
        bin_labels: d.bin_labels(),
        reference_length: d.reference_length,
        edge_lengths: d.bin_edges.iter().map(|&e| scale_length(e, d.reference_length)).collect(),
        region_ids: d.region_ids.clone(),
        ranges: d.ranges.clone(),
        normalization: NormalizationConfig::default(),
        color_maps: vec!["viridis".into(); d.field_count()],
        data_file: name.into(),
    };
    let side = path.with_extension("json");
    fs::write(&side, serde_json::to_string_pretty(&sidecar)?).map_err(|e| Error::io(&side, e))?;
    Ok(path)
}

pub fn read_glyphs(path: &Path) -> Result<GlyphDataset> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    let side = path.with_extension("json");
    let text = fs::read_to_string(&side).map_err(|e| Error::io(&side, e))?;
    let sidecar: GlyphSidecar = serde_json::from_str(&text)?;
    let bad = |reason: &str| Error::format(path, reason.to_string());
    if bytes.len() < 24 || &bytes[..4] != GLYPH_MAGIC {
        return Err(bad("missing glyph header"));
    }
    let word = |i: usize| {
        let o = 4 + 4 * i;
        u32::from_le_bytes([bytes[o], bytes[o + 1], bytes[o + 2], bytes[o + 3]])
    };
    if word(0) != GLYPH_VERSION {
        return Err(bad("unsupported glyph version"));
    }
    let (r, m, n, band) = (word(1) as usize, word(2) as usize, word(3) as usize, word(4));
    if bytes.len() != 24 + 4 * (6 * r + r * m * n) {
        return Err(bad("size does not match header"));
    }
    if sidecar.fields.len() != m || sidecar.region_ids.len() != r || sidecar.band != band {
        return Err(bad("sidecar does not match header"));
    }
    let floats: Vec<f64> = bytes[24..]
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]) as f64)
        .collect();
    let vec3s = |s: &[f64]| s.chunks_exact(3).map(|c| [c[0], c[1], c[2]]).collect::<Vec<_>>();
    Ok(GlyphDataset {
        band,
        region_ids: sidecar.region_ids,
        positions: vec3s(&floats[..3 * r]),
        normals: vec3s(&floats[3 * r..6 * r]),
        fields: sidecar.fields,
        units: sidecar.units,
        bin_edges: sidecar.bin_edges,
        reference_length: sidecar.reference_length,
        buffer: floats[6 * r..].to_vec(),
        ranges: sidecar.ranges,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::norm;

    #[test]
    fn index_law() {
        assert_eq!(stat_index(2, 1, 2, 5, 3, 4).unwrap(), 30);
        assert_eq!(stat_index(0, 0, 0, 5, 3, 4).unwrap(), 0);
        assert_eq!(stat_index(4, 2, 3, 5, 3, 4).unwrap(), 5 * 3 * 4 - 1);
        assert!(stat_index(5, 0, 0, 5, 3, 4).is_err());
        assert!(stat_index(0, 3, 0, 5, 3, 4).is_err());
        assert_eq!(stat_coords(30, 3, 4), (2, 1, 2));
    }

    #[test]
    fn orientation_example() {
        let view = ViewBasis::default();
        let [r, u, f] = orientation_matrix([0.0, 0.0, 1.0], &view);
        assert_eq!(r, [-1.0, 0.0, 0.0]);
        assert_eq!(u, [0.0, 0.0, 1.0]);
        assert_eq!(f, [0.0, 1.0, 0.0]);
    }

    #[test]
    fn orientation_fallback() {
        let view = ViewBasis::default();
        let basis = orientation_matrix([0.0, 1.0, 0.0], &view);
        for a in 0..3 {
            assert!((norm(basis[a]) - 1.0).abs() < 1e-12);
            for b in a + 1..3 {
                let d: f64 = (0..3).map(|c| basis[a][c] * basis[b][c]).sum();
                assert!(d.abs() < 1e-12);
            }
        }
        assert_eq!(basis[1], [0.0, 1.0, 0.0]);
    }

    #[test]
    fn strength_cells() {
        let (l, k) = classify_strength_fragment([0.4, 0.0, 0.0], 4, 2);
        assert_eq!((l, k), (3, 0));
        assert_eq!(classify_strength_fragment([0.0; 3], 4, 2).1, 0);
        assert_eq!(classify_strength_fragment([0.0, 0.0, 0.999], 4, 3).1, 2);
        // atan2(0, -1) = pi: theta = 2pi wraps to field 0.
        assert_eq!(fragment_angle([0.0, 0.0, -0.5]), 0.0);
        assert_eq!(classify_strength_fragment([0.0, 0.0, -0.5], 4, 2).0, 0);
    }

    #[test]
    fn starplot_extremes() {
        let full = vec![1.0; 5];
        let zero = vec![0.0; 5];
        assert!(starplot_contains([0.0, 0.0], &full));
        assert!(starplot_contains([0.0, 0.0], &zero));
        assert!(starplot_contains([1e-3, 1e-3], &full));
        assert!(!starplot_contains([1e-3, 1e-3], &zero));
        assert!(!starplot_contains([0.99, 0.5], &full));
        assert!(starplot_fragment([0.0, 0.0, 0.0], &zero));
    }

    fn dataset(band: u32, r: usize, values: impl Fn(usize, usize, usize) -> f64) -> GlyphDataset {
        let (m, n) = (2, 3);
        let mut buffer = vec![0.0; r * m * n];
        for i in 0..r {
            for l in 0..m {
                for k in 0..n {
                    buffer[i * m * n + n * l + k] = values(i, l, k);
                }
            }
        }
        GlyphDataset {
            band,
            region_ids: (0..r as u32).collect(),
            positions: vec![[0.0; 3]; r],
            normals: vec![[0.0, 0.0, 1.0]; r],
            fields: vec!["a".into(), "b".into()],
            units: vec![String::new(); 2],
            bin_edges: vec![0, 2, 3, 4],
            reference_length: 16.0,
            ranges: field_ranges(&buffer, r, m, n),
            buffer,
        }
    }

    #[test]
    fn spatial_selection() {
        let d0 = dataset(0, 3, |i, _, k| (i + k) as f64 / 4.0);
        let d1 = dataset(1, 3, |i, _, k| (i * 3 + k) as f64 * 10.0 / 8.0);
        let sets = [d0, d1];
        let g = normalization_range(&sets, &NormalizationConfig::default()).unwrap();
        assert_eq!(g.ranges[0], Range { min: 0.0, max: 10.0 });
        let cfg = NormalizationConfig {
            spatial: SpatialNorm::Lsn,
            visible_bands: vec![0],
            ..Default::default()
        };
        let l = normalization_range(&sets, &cfg).unwrap();
        assert_eq!(l.ranges[0], Range { min: 0.0, max: 1.0 });
        let bad = NormalizationConfig {
            spatial: SpatialNorm::Lsn,
            ..Default::default()
        };
        assert!(normalization_range(&sets, &bad).is_err());
    }

    #[test]
    fn per_glyph_and_zero_min() {
        let d = dataset(0, 2, |i, l, k| match (i, l, k) {
            (0, 0, 0) => 1.0,
            (0, 0, 1) => 3.0,
            (0, 0, 2) => 0.0,
            (1, 1, _) => 0.0,
            _ => 0.2 + k as f64 * 2.4,
        });
        let cfg = NormalizationConfig {
            per_glyph: true,
            ..Default::default()
        };
        let out = normalization_range(std::slice::from_ref(&d), &cfg).unwrap();
        assert_eq!(&out.buffers[0][0..3], &[0.25, 0.75, 0.0]);
        assert_eq!(out.zero_sum[0], vec![false, false, false, true]);
        let z = NormalizationConfig {
            zero_min: true,
            ..Default::default()
        };
        let d = dataset(0, 2, |_, _, k| 0.2 + k as f64 * 2.4);
        let out = normalization_range(&[d], &z).unwrap();
        assert_eq!(out.ranges[0], Range { min: 0.0, max: 5.0 });
    }

    #[test]
    fn transforms_stay_finite() {
        let d = dataset(0, 2, |i, l, k| (i * 6 + l * 3 + k) as f64);
        for t in [ValueTransform::Sqrt, ValueTransform::Log] {
            let cfg = NormalizationConfig {
                transform: t,
                ..Default::default()
            };
            let out = normalization_range(std::slice::from_ref(&d), &cfg).unwrap();
            assert!(out.buffers[0].iter().all(|v| v.is_finite()));
            assert_eq!(out.buffers[0][0], 0.0);
        }
    }

    #[test]
    fn glyph_file_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let mut d = dataset(2, 4, |i, l, k| (i + l + k) as f64 * 0.5);
        d.positions = (0..4).map(|i| [i as f64, 0.5, -1.0]).collect();
        let path = write_glyphs(dir.path(), &d).unwrap();
        assert_eq!(fs::metadata(&path).unwrap().len() as usize, 24 + 4 * (24 + 24));
        let back = read_glyphs(&path).unwrap();
        assert_eq!(back, d);
        assert_eq!(unpack_glyphs(&back), unpack_glyphs(&d));
    }
}

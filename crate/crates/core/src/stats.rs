//! Per-region spectral energy statistics and derived fields.
//!
//! For a region `R` with `n` voxels and a bin with length span `dj`,
//! `E = (1 / (n dj)) * sum_{v in R} |x(v)|^2` in squared mode, or the same
//! with `|x(v)|` in norm mode.

use std::fs;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{Axis, ScalarField};
use crate::lsrcvt::{Tessellation, UNLABELED};
use crate::specfilter::{scale_length, BandDecomposition};
use crate::volume::{gradient_component, load_field, VolumeManifest};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AggregationMode {
    #[default]
    Squared,
    Norm,
}

impl AggregationMode {
    #[inline]
    pub fn apply(self, x: f64) -> f64 {
        match self {
            AggregationMode::Squared => x * x,
            AggregationMode::Norm => x.abs(),
        }
    }

    fn code(self) -> u32 {
        match self {
            AggregationMode::Squared => 0,
            AggregationMode::Norm => 1,
        }
    }

    fn from_code(code: u32) -> Option<Self> {
        match code {
            0 => Some(AggregationMode::Squared),
            1 => Some(AggregationMode::Norm),
            _ => None,
        }
    }
}

/// Region x field x bin table, region-major then field then bin.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegionStats {
    pub region_count: usize,
    pub fields: Vec<String>,
    pub units: Vec<String>,
    pub bin_edges: Vec<u32>,
    pub include_j0: bool,
    pub reference_length: f64,
    pub delta_j: Vec<f64>,
    pub mode: AggregationMode,
    pub values: Vec<f64>,
}

impl RegionStats {
    pub fn field_count(&self) -> usize {
        self.fields.len()
    }

    pub fn bin_count(&self) -> usize {
        self.delta_j.len()
    }

    #[inline]
    pub fn index(&self, region: usize, field: usize, bin: usize) -> usize {
        (region * self.field_count() + field) * self.bin_count() + bin
    }

    pub fn get(&self, region: usize, field: usize, bin: usize) -> f64 {
        self.values[self.index(region, field, bin)]
    }

    pub fn field_index(&self, name: &str) -> Option<usize> {
        self.fields.iter().position(|f| f == name)
    }

    /// Physical length `L/2^e` at each bin edge.
    pub fn edge_lengths(&self) -> Vec<f64> {
        self.bin_edges
            .iter()
            .map(|&e| scale_length(e, self.reference_length))
            .collect()
    }

    /// Bytes one (field, bin) column occupies when stored as f32.
    pub fn bytes_per_field_bin(&self) -> usize {
        stat_bytes_per_field_bin(self.region_count)
    }
}

pub fn stat_bytes_per_field_bin(region_count: usize) -> usize {
    4 * region_count
}

pub fn raw_field_bytes(dims: [usize; 3]) -> usize {
    4 * dims.iter().product::<usize>()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StorageReport {
    pub raw_bytes_per_field: usize,
    pub stat_bytes_per_field_bin: usize,
    pub ratio: f64,
}

pub fn storage_report(dims: [usize; 3], region_count: usize) -> StorageReport {
    let raw = raw_field_bytes(dims);
    let stat = stat_bytes_per_field_bin(region_count);
    StorageReport {
        raw_bytes_per_field: raw,
        stat_bytes_per_field_bin: stat,
        ratio: raw as f64 / stat as f64,
    }
}

fn check_tessellation(decomp: &BandDecomposition, tess: &Tessellation) -> Result<()> {
    if !decomp.grid().same_shape(&tess.grid) {
        return Err(Error::GridMismatch(format!(
            "bands of `{}` are {:?}, tessellation is {:?}",
            decomp.source,
            decomp.grid().dims,
            tess.grid.dims
        )));
    }
    Ok(())
}

/// Aggregates one field's bands over every region.
pub fn aggregate_energy(
    decomp: &BandDecomposition,
    tess: &Tessellation,
    mode: AggregationMode,
) -> Result<RegionStats> {
    aggregate_fields(std::slice::from_ref(decomp), tess, mode)
}

/// Aggregates several fields sharing one bin specification.
pub fn aggregate_fields(
    decomps: &[BandDecomposition],
    tess: &Tessellation,
    mode: AggregationMode,
) -> Result<RegionStats> {
    let first = decomps
        .first()
        .ok_or_else(|| Error::MissingInput("no band decompositions to aggregate".into()))?;
    for d in decomps {
        check_tessellation(d, tess)?;
        if d.spec != first.spec {
            return Err(Error::FieldMismatch(format!(
                "`{}` and `{}` use different scale bins",
                first.source, d.source
            )));
        }
    }
    let delta_j = first.spec.delta_js();
    let bins = delta_j.len();
    let fields = decomps.len();
    let regions = tess.region_voxels();
    if let Some(r) = regions.iter().position(Vec::is_empty) {
        return Err(Error::InvalidArgument(format!("region {r} has no voxels")));
    }

    let values: Vec<f64> = regions
        .par_iter()
        .flat_map_iter(|voxels| {
            let n = voxels.len() as f64;
            let delta_j = &delta_j;
            decomps.iter().flat_map(move |d| {
                d.bands.iter().zip(delta_j).map(move |(band, &dj)| {
                    let mut sum = 0.0;
                    for &v in voxels {
                        sum += mode.apply(band.values[v]);
                    }
                    sum / (n * dj)
                })
            })
        })
        .collect();
    debug_assert_eq!(values.len(), regions.len() * fields * bins);

    Ok(RegionStats {
        region_count: regions.len(),
        fields: decomps.iter().map(|d| d.source.clone()).collect(),
        units: decomps.iter().map(|d| d.bands[0].units.clone()).collect(),
        bin_edges: first.spec.bin_edges.clone(),
        include_j0: first.spec.include_j0,
        reference_length: first.spec.reference_length(),
        delta_j,
        mode,
        values,
    })
}

/// Reference aggregation: one pass over voxels in linear order.
pub fn brute_force_aggregate(
    decomp: &BandDecomposition,
    tess: &Tessellation,
    mode: AggregationMode,
) -> Vec<f64> {
    let r = tess.regions.len();
    let bins = decomp.bands.len();
    let mut sums = vec![0.0; r * bins];
    let mut counts = vec![0usize; r];
    for v in 0..tess.region_label.len() {
        let region = tess.region_label[v];
        if region == UNLABELED {
            continue;
        }
        let region = region as usize;
        counts[region] += 1;
        for (b, band) in decomp.bands.iter().enumerate() {
            sums[region * bins + b] += mode.apply(band.values[v]);
        }
    }
    for region in 0..r {
        for b in 0..bins {
            sums[region * bins + b] /= counts[region] as f64 * decomp.spec.delta_j(b);
        }
    }
    sums
}

/// Concatenates the fields of tables built over the same regions and bins.
pub fn merge_stats(parts: &[RegionStats]) -> Result<RegionStats> {
    let first = parts
        .first()
        .ok_or_else(|| Error::MissingInput("no statistics to merge".into()))?;
    for p in parts {
        if p.region_count != first.region_count
            || p.bin_edges != first.bin_edges
            || p.delta_j != first.delta_j
            || p.mode != first.mode
        {
            return Err(Error::FieldMismatch(
                "statistics differ in regions, bins or mode".into(),
            ));
        }
    }
    let bins = first.bin_count();
    let mut out = RegionStats {
        fields: parts.iter().flat_map(|p| p.fields.clone()).collect(),
        units: parts.iter().flat_map(|p| p.units.clone()).collect(),
        values: Vec::with_capacity(parts.iter().map(|p| p.values.len()).sum()),
        ..first.clone()
    };
    for region in 0..first.region_count {
        for p in parts {
            let start = p.index(region, 0, 0);
            out.values
                .extend_from_slice(&p.values[start..start + p.field_count() * bins]);
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DerivedKind {
    /// `mu * (d u_i / d x_j)^2 / 2`.
    DissipationComponent { i: Axis, j: Axis },
    Passthrough,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DerivedFieldRecipe {
    pub output: String,
    #[serde(flatten)]
    pub kind: DerivedKind,
    /// Velocity-fluctuation fields (x, y, z) for dissipation components,
    /// or the single source field for a passthrough.
    pub inputs: Vec<String>,
    #[serde(default)]
    pub mu: f64,
}

/// The nine dissipation components, named `<prefix>_<i><j>`.
pub fn dissipation_recipes(prefix: &str, velocity: [&str; 3], mu: f64) -> Vec<DerivedFieldRecipe> {
    let name = |a: Axis| match a {
        Axis::X => 'x',
        Axis::Y => 'y',
        Axis::Z => 'z',
    };
    let mut out = Vec::with_capacity(9);
    for i in Axis::ALL {
        for j in Axis::ALL {
            out.push(DerivedFieldRecipe {
                output: format!("{prefix}_{}{}", name(i), name(j)),
                kind: DerivedKind::DissipationComponent { i, j },
                inputs: velocity.iter().map(|s| s.to_string()).collect(),
                mu,
            });
        }
    }
    out
}

/// Evaluates recipes against fields supplied by `lookup`.
pub fn derive_fields(
    recipes: &[DerivedFieldRecipe],
    mut lookup: impl FnMut(&str) -> Result<ScalarField>,
) -> Result<Vec<ScalarField>> {
    recipes
        .iter()
        .map(|recipe| match recipe.kind {
            DerivedKind::Passthrough => {
                let src = recipe
                    .inputs
                    .first()
                    .ok_or_else(|| Error::MissingInput(format!("`{}` names no input", recipe.output)))?;
                let mut f = lookup(src)?;
                f.name = recipe.output.clone();
                Ok(f)
            }
            DerivedKind::DissipationComponent { i, j } => {
                let src = recipe.inputs.get(i.index()).ok_or_else(|| {
                    Error::MissingInput(format!("`{}` lacks velocity component {:?}", recipe.output, i))
                })?;
                let u = lookup(src)?;
                let grad = gradient_component(&u, j)?;
                let values = grad.values.iter().map(|g| recipe.mu * g * g / 2.0).collect();
                let mut f = u.with_values(values);
                f.name = recipe.output.clone();
                f.units = String::new();
                Ok(f)
            }
        })
        .collect()
}

pub fn build_derived_fields(
    recipes: &[DerivedFieldRecipe],
    manifest: &VolumeManifest,
) -> Result<Vec<ScalarField>> {
    derive_fields(recipes, |name| match manifest.entry(name) {
        Some(_) => load_field(manifest, name),
        None => Err(Error::MissingInput(format!("field `{name}` not in manifest"))),
    })
}

/// Dissipation rate `mu * sum_{i,j} (d u_i / d x_j)^2 / 2` evaluated directly.
pub fn dissipation_rate(velocity: [&ScalarField; 3], mu: f64) -> Result<Vec<f64>> {
    let mut total = vec![0.0; velocity[0].values.len()];
    for u in velocity {
        for j in Axis::ALL {
            let g = gradient_component(u, j)?;
            for (t, d) in total.iter_mut().zip(&g.values) {
                *t += d * d;
            }
        }
    }
    Ok(total.into_iter().map(|s| mu * s / 2.0).collect())
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ScatterColumn {
    /// Aggregated statistic of `field` in bin `bin`.
    Stat { field: String, bin: usize },
    /// Mean of a raw field over each region.
    MeanRaw { field: String },
}

impl ScatterColumn {
    pub fn name(&self) -> String {
        match self {
            ScatterColumn::Stat { field, bin } => format!("{field}:bin{bin}"),
            ScatterColumn::MeanRaw { field } => format!("mean:{field}"),
        }
    }

    /// Parses `field:bin<k>` or `mean:field`.
    pub fn parse(name: &str) -> Option<Self> {
        if let Some(field) = name.strip_prefix("mean:") {
            return Some(ScatterColumn::MeanRaw { field: field.into() });
        }
        let (field, bin) = name.rsplit_once(":bin")?;
        Some(ScatterColumn::Stat {
            field: field.into(),
            bin: bin.parse().ok()?,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScatterTable {
    pub region_ids: Vec<u32>,
    pub columns: Vec<String>,
    /// One vector per column, parallel to `region_ids`.
    pub values: Vec<Vec<f64>>,
    /// Columns whose values are all equal (histogram binning must not
    /// divide by their zero range).
    pub degenerate: Vec<bool>,
}

impl ScatterTable {
    pub fn column(&self, name: &str) -> Option<&[f64]> {
        self.columns
            .iter()
            .position(|c| c == name)
            .map(|i| self.values[i].as_slice())
    }

    pub fn row_count(&self) -> usize {
        self.region_ids.len()
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        fs::write(path, serde_json::to_string(self)?).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Ok(serde_json::from_str(&text)?)
    }
}

pub fn scatter_samples(
    tess: &Tessellation,
    stats: &RegionStats,
    raw: &[ScalarField],
    columns: &[ScatterColumn],
) -> Result<ScatterTable> {
    if stats.region_count != tess.regions.len() {
        return Err(Error::InvalidArgument(format!(
            "statistics cover {} regions, tessellation has {}",
            stats.region_count,
            tess.regions.len()
        )));
    }
    let region_voxels = tess.region_voxels();
    let mut values = Vec::with_capacity(columns.len());
    for col in columns {
        let column: Vec<f64> = match col {
            ScatterColumn::Stat { field, bin } => {
                let l = stats
                    .field_index(field)
                    .ok_or_else(|| Error::MissingInput(format!("no statistics for `{field}`")))?;
                if *bin >= stats.bin_count() {
                    return Err(Error::MissingInput(format!("bin {bin} of `{field}`")));
                }
                (0..stats.region_count).map(|r| stats.get(r, l, *bin)).collect()
            }
            ScatterColumn::MeanRaw { field } => {
                let f = raw
                    .iter()
                    .find(|f| &f.name == field)
                    .ok_or_else(|| Error::MissingInput(format!("raw field `{field}`")))?;
                if !f.grid.same_shape(&tess.grid) {
                    return Err(Error::GridMismatch(format!("raw field `{field}`")));
                }
                region_voxels
                    .iter()
                    .map(|vs| vs.iter().map(|&v| f.values[v]).sum::<f64>() / vs.len() as f64)
                    .collect()
            }
        };
        values.push(column);
    }
    let degenerate = values
        .iter()
        .map(|c| c.windows(2).all(|w| w[0] == w[1]))
        .collect();
    Ok(ScatterTable {
        region_ids: tess.regions.iter().map(|r| r.id).collect(),
        columns: columns.iter().map(ScatterColumn::name).collect(),
        values,
        degenerate,
    })
}

const STATS_MAGIC: &[u8; 4] = b"LSRS";
const STATS_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StatsSidecar {
    pub fields: Vec<String>,
    pub units: Vec<String>,
    pub mode: AggregationMode,
    pub bin_edges: Vec<u32>,
    pub include_j0: bool,
    /// Set when bin 0 carries the low-pass and so depends on the domain size.
    pub j0_uses_domain_length: bool,
    pub reference_length: f64,
    pub edge_lengths: Vec<f64>,
    pub delta_j: Vec<f64>,
    /// Presentational length relabeling, never applied to stored values.
    #[serde(default)]
    pub length_unit: Option<LengthUnit>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LengthUnit {
    pub name: String,
    /// Physical lengths per display unit.
    pub scale: f64,
}

/// Binary layout, little-endian: magic, version, R, M, N, mode (u32),
/// N+1 bin edges (u32), N bin spans (f64), then R*M*N f32 values.
pub fn stats_to_bytes(stats: &RegionStats) -> Vec<u8> {
    let mut out = Vec::new();
    out.extend_from_slice(STATS_MAGIC);
    for v in [
        STATS_VERSION,
        stats.region_count as u32,
        stats.field_count() as u32,
        stats.bin_count() as u32,
        stats.mode.code(),
    ] {
        out.extend(v.to_le_bytes());
    }
    for e in &stats.bin_edges {
        out.extend(e.to_le_bytes());
    }
    for d in &stats.delta_j {
        out.extend(d.to_le_bytes());
    }
    for v in &stats.values {
        out.extend((*v as f32).to_le_bytes());
    }
    out
}

pub fn write_stats(path: &Path, stats: &RegionStats, length_unit: Option<LengthUnit>) -> Result<()> {
    fs::write(path, stats_to_bytes(stats)).map_err(|e| Error::io(path, e))?;
    let sidecar = StatsSidecar {
        fields: stats.fields.clone(),
        units: stats.units.clone(),
        mode: stats.mode,
        bin_edges: stats.bin_edges.clone(),
        include_j0: stats.include_j0,
        j0_uses_domain_length: stats.include_j0,
        reference_length: stats.reference_length,
        edge_lengths: stats.edge_lengths(),
        delta_j: stats.delta_j.clone(),
        length_unit,
    };
    let side = path.with_extension("json");
    fs::write(&side, serde_json::to_string_pretty(&sidecar)?).map_err(|e| Error::io(&side, e))
}

/// Reads a table written by [`write_stats`]; values come back at f32 precision.
pub fn read_stats(path: &Path) -> Result<RegionStats> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    let side = path.with_extension("json");
    let text = fs::read_to_string(&side).map_err(|e| Error::io(&side, e))?;
    let sidecar: StatsSidecar = serde_json::from_str(&text)?;
    let bad = |reason: &str| Error::format(path, reason.to_string());
    if bytes.len() < 24 || &bytes[..4] != STATS_MAGIC {
        return Err(bad("missing statistics header"));
    }
    let word = |i: usize| {
        let o = 4 + 4 * i;
        u32::from_le_bytes([bytes[o], bytes[o + 1], bytes[o + 2], bytes[o + 3]])
    };
    if word(0) != STATS_VERSION {
        return Err(bad("unsupported statistics version"));
    }
    let (r, m, n) = (word(1) as usize, word(2) as usize, word(3) as usize);
    let mode = AggregationMode::from_code(word(4)).ok_or_else(|| bad("unknown aggregation mode"))?;
    let edges_at = 24;
    let dj_at = edges_at + 4 * (n + 1);
    let body_at = dj_at + 8 * n;
    if bytes.len() != body_at + 4 * r * m * n {
        return Err(bad("size does not match header"));
    }
    if sidecar.fields.len() != m {
        return Err(bad("sidecar field count does not match header"));
    }
    let bin_edges = bytes[edges_at..dj_at]
        .chunks_exact(4)
        .map(|c| u32::from_le_bytes([c[0], c[1], c[2], c[3]]))
        .collect();
    let delta_j = bytes[dj_at..body_at]
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    let values = bytes[body_at..]
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]) as f64)
        .collect();
    Ok(RegionStats {
        region_count: r,
        fields: sidecar.fields,
        units: sidecar.units,
        bin_edges,
        include_j0: sidecar.include_j0,
        reference_length: sidecar.reference_length,
        delta_j,
        mode,
        values,
    })
}

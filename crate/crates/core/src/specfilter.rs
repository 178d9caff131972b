//! Scale-bin decomposition with a tight frame of concentric frequency
//! windows.
//!
//! Scale `j` corresponds to the physical length `L / 2^j`, i.e. to `2^j`
//! cycles across the reference domain. The boundary between scales `j`
//! and `j + 1` sits at normalized frequency radius `2^j`; scale 0 is the
//! low-pass window holding the mean. Each boundary gets a smooth
//! raised-cosine low-pass step `lowpass_j`, and the window of a bin
//! spanning scales `[a, c]` is `lowpass_c - lowpass_{a-1}`. The windows of
//! consecutive bins telescope, so they sum to one at every frequency.

use std::fs;
use std::path::{Path, PathBuf};

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fft;
use crate::grid::{Grid3, ScalarField};
use crate::volume::{self, BlockLayout};

/// Largest usable scale index for an axis of `n` samples: `floor(log2(n/2))`.
pub fn max_scales(n: usize) -> Result<u32> {
    if n < 4 {
        return Err(Error::InvalidArgument(format!(
            "need at least 4 samples for a scale decomposition, got {n}"
        )));
    }
    Ok((n / 2).ilog2())
}

/// Physical length `L / 2^j` of scale `j`.
pub fn scale_length(j: u32, domain_length: f64) -> f64 {
    domain_length / 2f64.powi(j as i32)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum WindowProfile {
    /// Max-norm frequency radius; square shells on the Cartesian lattice.
    #[default]
    ConcentricSquare,
    /// Euclidean frequency radius; spherical shells.
    Radial,
}

pub const DEFAULT_SMOOTHNESS: f64 = 1.0 / 3.0;

fn default_smoothness() -> f64 {
    DEFAULT_SMOOTHNESS
}

fn default_true() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScaleBinSpec {
    /// Bin `b` holds scales `bin_edges[b] .. bin_edges[b + 1]` (half-open).
    pub bin_edges: Vec<u32>,
    #[serde(default = "default_true")]
    pub include_j0: bool,
    /// Reference domain length per axis, physical units.
    pub domain_length: [f64; 3],
    #[serde(default)]
    pub profile: WindowProfile,
    /// Width of each raised-cosine transition as a fraction of its boundary
    /// radius (the dyadic gap above it). At most 2/3 so that neighboring
    /// transitions never overlap.
    #[serde(default = "default_smoothness")]
    pub smoothness: f64,
}

impl ScaleBinSpec {
    /// Bins over the full domain of `grid` with default profile.
    pub fn for_grid(grid: &Grid3, bin_edges: Vec<u32>) -> Self {
        // Size-1 axes of slab grids take the longest length so they never
        // become the reference length.
        let lengths = grid.lengths();
        let longest = lengths.iter().copied().fold(0.0, f64::max);
        let domain_length =
            std::array::from_fn(|a| if grid.dims[a] == 1 { longest } else { lengths[a] });
        ScaleBinSpec {
            bin_edges,
            include_j0: true,
            domain_length,
            profile: WindowProfile::default(),
            smoothness: DEFAULT_SMOOTHNESS,
        }
    }

    pub fn bin_count(&self) -> usize {
        self.bin_edges.len().saturating_sub(1)
    }

    /// Sample counts of the reference domain along non-degenerate axes.
    fn reference_dims(&self, grid: &Grid3) -> Vec<usize> {
        (0..3)
            .map(|a| (self.domain_length[a] / grid.spacing[a]).round() as usize)
            .filter(|&n| n > 1)
            .collect()
    }

    /// Domain length used for scale arithmetic: the shortest reference axis.
    pub fn reference_length(&self) -> f64 {
        self.domain_length.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn validate(&self, grid: &Grid3) -> Result<()> {
        if self.bin_edges.len() < 2 {
            return Err(Error::InvalidBins("need at least two bin edges".into()));
        }
        if self.bin_edges.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidBins(format!(
                "edges must be strictly increasing: {:?}",
                self.bin_edges
            )));
        }
        if !self.include_j0 && self.bin_edges[0] == 0 {
            return Err(Error::InvalidBins(
                "scale 0 is the low-pass; excluding it requires bin_edges[0] >= 1".into(),
            ));
        }
        if !(0.0..=2.0 / 3.0).contains(&self.smoothness) {
            return Err(Error::InvalidBins(format!(
                "smoothness {} outside [0, 2/3]",
                self.smoothness
            )));
        }
        if self.domain_length.iter().any(|&l| !(l > 0.0)) {
            return Err(Error::InvalidBins("domain lengths must be positive".into()));
        }
        let n_min = self
            .reference_dims(grid)
            .into_iter()
            .min()
            .ok_or_else(|| Error::InvalidBins("grid has no axis with more than one sample".into()))?;
        let j_cap = max_scales(n_min)?;
        let j_max = self.bin_edges[self.bin_edges.len() - 1] - 1;
        if j_max > j_cap {
            return Err(Error::InvalidBins(format!(
                "finest scale {j_max} exceeds max_scales({n_min}) = {j_cap}"
            )));
        }
        Ok(())
    }

    /// Whether bin `b` carries the low-pass scale.
    pub fn contains_j0(&self, b: usize) -> bool {
        b == 0 && self.include_j0
    }

    /// Nominal `(j_min, j_max)` of bin `b`. The j0 bin reports `j_min = 0`.
    pub fn bin_scales(&self, b: usize) -> (u32, u32) {
        let lo = if self.contains_j0(b) {
            0
        } else {
            self.bin_edges[b]
        };
        (lo, self.bin_edges[b + 1] - 1)
    }

    /// Length-scale span `L/2^j_min - L/2^(j_max+1)` of bin `b`; the j0 bin
    /// uses the full length `L` as its upper end.
    pub fn delta_j(&self, b: usize) -> f64 {
        let l = self.reference_length();
        let (lo, hi) = self.bin_scales(b);
        scale_length(lo, l) - scale_length(hi + 1, l)
    }

    pub fn delta_js(&self) -> Vec<f64> {
        (0..self.bin_count()).map(|b| self.delta_j(b)).collect()
    }
}

/// Smooth low-pass step for the boundary at `radius`: 1 well inside, 0 well
/// outside, exactly 1/2 on the boundary.
fn lowpass(rho: f64, radius: f64, smoothness: f64) -> f64 {
    let half = 0.5 * smoothness * radius;
    if half == 0.0 {
        return if rho < radius {
            1.0
        } else if rho > radius {
            0.0
        } else {
            0.5
        };
    }
    let lo = radius - half;
    let hi = radius + half;
    if rho == radius {
        0.5
    } else if rho <= lo {
        1.0
    } else if rho >= hi {
        0.0
    } else {
        0.5 * (1.0 + (std::f64::consts::PI * (rho - lo) / (hi - lo)).cos())
    }
}

fn boundary_radius(j: u32) -> f64 {
    2f64.powi(j as i32)
}

/// Window value of bin `b` at normalized frequency radius `rho`.
pub fn window_value(spec: &ScaleBinSpec, b: usize, rho: f64) -> f64 {
    let nb = spec.bin_count();
    let upper = if b + 1 == nb {
        1.0
    } else {
        lowpass(rho, boundary_radius(spec.bin_edges[b + 1] - 1), spec.smoothness)
    };
    let lower = if spec.contains_j0(b) || spec.bin_edges[b] == 0 {
        0.0
    } else {
        lowpass(rho, boundary_radius(spec.bin_edges[b] - 1), spec.smoothness)
    };
    (upper - lower).max(0.0)
}

/// Normalized frequency radius of a lattice sample under `profile`, where
/// `freq` holds per-axis frequencies in cycles per reference length.
pub fn frequency_radius(profile: WindowProfile, freq: [f64; 3]) -> f64 {
    match profile {
        WindowProfile::ConcentricSquare => freq.iter().fold(0.0_f64, |m, f| m.max(f.abs())),
        WindowProfile::Radial => freq.iter().map(|f| f * f).sum::<f64>().sqrt(),
    }
}

#[derive(Debug, Clone)]
pub struct WindowBank {
    pub grid: Grid3,
    pub spec: ScaleBinSpec,
    /// One window per bin over the Fourier lattice, x-fastest.
    pub windows: Vec<Vec<f64>>,
}

pub fn build_window_bank(grid: &Grid3, spec: &ScaleBinSpec) -> Result<WindowBank> {
    grid.validate()?;
    spec.validate(grid)?;
    let dims = grid.dims;
    let lengths = grid.lengths();
    let scale: [f64; 3] = std::array::from_fn(|a| spec.domain_length[a] / lengths[a]);
    let radii: Vec<f64> = (0..grid.len())
        .into_par_iter()
        .map(|idx| {
            let c = grid.coords(idx);
            let freq: [f64; 3] =
                std::array::from_fn(|a| fft::signed_frequency(c[a], dims[a]) * scale[a]);
            frequency_radius(spec.profile, freq)
        })
        .collect();
    let windows = (0..spec.bin_count())
        .into_par_iter()
        .map(|b| radii.iter().map(|&r| window_value(spec, b, r)).collect())
        .collect();
    Ok(WindowBank {
        grid: grid.clone(),
        spec: spec.clone(),
        windows,
    })
}

#[derive(Debug, Clone)]
pub struct BandDecomposition {
    pub source: String,
    pub spec: ScaleBinSpec,
    pub bands: Vec<ScalarField>,
    /// Sum of squared band values per bin.
    pub energies: Vec<f64>,
}

impl BandDecomposition {
    fn from_bands(source: String, spec: ScaleBinSpec, bands: Vec<ScalarField>) -> Self {
        let energies = bands.iter().map(ScalarField::energy).collect();
        BandDecomposition {
            source,
            spec,
            bands,
            energies,
        }
    }

    pub fn grid(&self) -> &Grid3 {
        &self.bands[0].grid
    }

    /// Voxelwise sum of all bands.
    pub fn reconstruct(&self) -> Vec<f64> {
        let mut sum = vec![0.0; self.bands[0].values.len()];
        for band in &self.bands {
            for (s, v) in sum.iter_mut().zip(&band.values) {
                *s += v;
            }
        }
        sum
    }
}

const IMAGINARY_TOLERANCE: f64 = 1e-6;

fn check_grid(field: &ScalarField, bank: &WindowBank) -> Result<()> {
    if !field.grid.same_shape(&bank.grid) {
        return Err(Error::GridMismatch(format!(
            "field `{}` is {:?}, window bank is {:?}",
            field.name, field.grid.dims, bank.grid.dims
        )));
    }
    Ok(())
}

/// Filters `field` into one band per bin: inverse FFT of the bin window
/// times the field spectrum.
pub fn decompose(field: &ScalarField, bank: &WindowBank) -> Result<BandDecomposition> {
    check_grid(field, bank)?;
    let dims = field.grid.dims;
    let spectrum = fft::forward_real(&field.values, dims);
    let tolerance = IMAGINARY_TOLERANCE * field.max_abs().max(f64::MIN_POSITIVE);
    let bands = bank
        .windows
        .par_iter()
        .enumerate()
        .map(|(b, window)| {
            let mut data: Vec<Complex64> =
                spectrum.iter().zip(window).map(|(s, &w)| s * w).collect();
            fft::inverse(&mut data, dims);
            let residue = data.iter().fold(0.0_f64, |m, c| m.max(c.im.abs()));
            if residue > tolerance {
                return Err(Error::ImaginaryResidue { bin: b, residue });
            }
            let mut band = field.with_values(data.iter().map(|c| c.re).collect());
            band.name = format!("{}.bin{b}", field.name);
            Ok(band)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(BandDecomposition::from_bands(
        field.name.clone(),
        bank.spec.clone(),
        bands,
    ))
}

/// Mirror-extends `field`, decomposes on the doubled grid, and crops every
/// band back to the original extent. Scale lengths keep referring to the
/// original domain.
pub fn decompose_mirrored(field: &ScalarField, spec: &ScaleBinSpec) -> Result<BandDecomposition> {
    let extended = volume::mirror_extend(field);
    let bank = build_window_bank(&extended.grid, spec)?;
    let mut decomp = decompose(&extended, &bank)?;
    decomp.bands = decomp
        .bands
        .iter()
        .map(|b| volume::crop(b, field.grid.dims))
        .collect();
    decomp.energies = decomp.bands.iter().map(ScalarField::energy).collect();
    Ok(decomp)
}

/// Block-parallel decomposition: each block is tapered on the faces it
/// shares with neighbors, decomposed with its own window bank, and the
/// owned interiors are composited back together.
pub fn decompose_blocked(
    field: &ScalarField,
    spec: &ScaleBinSpec,
    layout: &BlockLayout,
) -> Result<BandDecomposition> {
    let blocks = volume::split_blocks(field, layout)?;
    let processed: Vec<(Vec<ScalarField>, volume::BlockExtent)> = blocks
        .par_iter()
        .map(|(block, extent)| {
            let tapered = volume::taper_sides(block, extent.cut_tapers(layout.taper_width));
            let bank = build_window_bank(&block.grid, spec)?;
            let decomp = decompose(&tapered, &bank)?;
            Ok((decomp.bands, extent.clone()))
        })
        .collect::<Result<_>>()?;
    let bands = (0..spec.bin_count())
        .map(|b| {
            let pieces: Vec<(ScalarField, volume::BlockExtent)> = processed
                .iter()
                .map(|(bands, extent)| (bands[b].clone(), extent.clone()))
                .collect();
            let mut band = volume::composite_blocks(&pieces)?;
            band.name = format!("{}.bin{b}", field.name);
            Ok(band)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(BandDecomposition::from_bands(
        field.name.clone(),
        spec.clone(),
        bands,
    ))
}

/// Energy conservation of the square-root window frame:
/// `sum_b ||IFFT(sqrt(v_b) * F)||^2 / ||field||^2 - 1`.
pub fn frame_energy_check(field: &ScalarField, bank: &WindowBank) -> Result<f64> {
    check_grid(field, bank)?;
    let total = field.energy();
    if total == 0.0 {
        return Err(Error::ZeroEnergy);
    }
    let dims = field.grid.dims;
    let spectrum = fft::forward_real(&field.values, dims);
    let frame: f64 = bank
        .windows
        .par_iter()
        .map(|window| {
            let mut data: Vec<Complex64> = spectrum
                .iter()
                .zip(window)
                .map(|(s, &w)| s * w.sqrt())
                .collect();
            fft::inverse(&mut data, dims);
            data.iter().map(Complex64::norm_sqr).sum::<f64>()
        })
        .sum();
    Ok(frame / total - 1.0)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BandSidecar {
    pub field: String,
    pub units: String,
    pub grid: Grid3,
    pub bin_edges: Vec<u32>,
    pub include_j0: bool,
    pub profile: WindowProfile,
    pub smoothness: f64,
    pub domain_length: [f64; 3],
    pub reference_length: f64,
    pub delta_j: Vec<f64>,
    /// `scale_length` at every bin edge.
    pub edge_lengths: Vec<f64>,
    pub energies: Vec<f64>,
    pub files: Vec<PathBuf>,
    /// Preprocessing steps applied before filtering, in order.
    pub lineage: Vec<String>,
}

pub fn band_file_name(field: &str, bin: usize) -> String {
    format!("{field}.bin{bin}.raw")
}

pub fn sidecar_file_name(field: &str) -> String {
    format!("{field}.bands.json")
}

/// Writes `<field>.bin<k>.raw` per bin plus the `<field>.bands.json` sidecar.
pub fn write_bands(dir: &Path, decomp: &BandDecomposition, lineage: &[String]) -> Result<BandSidecar> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut files = Vec::new();
    for (b, band) in decomp.bands.iter().enumerate() {
        let name = band_file_name(&decomp.source, b);
        volume::write_raw_f32(&dir.join(&name), &band.values)?;
        files.push(PathBuf::from(name));
    }
    let spec = &decomp.spec;
    let l = spec.reference_length();
    let sidecar = BandSidecar {
        field: decomp.source.clone(),
        units: decomp.bands[0].units.clone(),
        grid: decomp.grid().clone(),
        bin_edges: spec.bin_edges.clone(),
        include_j0: spec.include_j0,
        profile: spec.profile,
        smoothness: spec.smoothness,
        domain_length: spec.domain_length,
        reference_length: l,
        delta_j: spec.delta_js(),
        edge_lengths: spec.bin_edges.iter().map(|&j| scale_length(j, l)).collect(),
        energies: decomp.energies.clone(),
        files,
        lineage: lineage.to_vec(),
    };
    let path = dir.join(sidecar_file_name(&decomp.source));
    fs::write(&path, serde_json::to_string_pretty(&sidecar)?).map_err(|e| Error::io(&path, e))?;
    Ok(sidecar)
}

pub fn read_bands(dir: &Path, field: &str) -> Result<(BandDecomposition, BandSidecar)> {
    let path = dir.join(sidecar_file_name(field));
    let text = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
    let sidecar: BandSidecar = serde_json::from_str(&text)?;
    let bands = sidecar
        .files
        .iter()
        .enumerate()
        .map(|(b, file)| {
            let values = volume::read_raw_f32(&dir.join(file), sidecar.grid.len())?;
            Ok(ScalarField {
                grid: sidecar.grid.clone(),
                name: format!("{field}.bin{b}"),
                units: sidecar.units.clone(),
                values,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let spec = ScaleBinSpec {
        bin_edges: sidecar.bin_edges.clone(),
        include_j0: sidecar.include_j0,
        domain_length: sidecar.domain_length,
        profile: sidecar.profile,
        smoothness: sidecar.smoothness,
    };
    let decomp = BandDecomposition::from_bands(field.to_string(), spec, bands);
    Ok((decomp, sidecar))
}

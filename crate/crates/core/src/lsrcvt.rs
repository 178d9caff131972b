//! Level-set restricted centroidal Voronoi tessellation.
//!
//! Voxels are binned into bands by their signed distance to the feature
//! surface, bands are split into 6-connected components, and every
//! component is tessellated independently by discrete Lloyd relaxation.
//! Sites always sit on voxels of their own component.

use std::collections::VecDeque;
use std::fs;
use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{sdf, surface_normal, DistanceField, Vec3};
use crate::grid::Grid3;

pub const UNLABELED: i32 = -1;

fn default_max_iters() -> usize {
    50
}

fn default_move_tolerance() -> f64 {
    0.5
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BandSpec {
    /// Signed-distance isovalues `c_0 < c_1 < ... < c_n` bounding the bands.
    pub isovalues: Vec<f64>,
    /// Voronoi sites per voxel.
    pub density: f64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_max_iters")]
    pub max_iters: usize,
    /// Stop once no site moves this far (voxels).
    #[serde(default = "default_move_tolerance")]
    pub move_tolerance: f64,
}

impl BandSpec {
    pub fn validate(&self) -> Result<()> {
        if self.isovalues.len() < 2 {
            return Err(Error::InvalidArgument("need at least two band isovalues".into()));
        }
        if self.isovalues.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(Error::InvalidArgument(format!(
                "band isovalues must increase strictly: {:?}",
                self.isovalues
            )));
        }
        if !(self.density > 0.0 && self.density <= 1.0) {
            return Err(Error::InvalidArgument(format!(
                "density {} outside (0, 1]",
                self.density
            )));
        }
        Ok(())
    }
}

/// Band index per voxel: `i` when `c_i <= phi < c_{i+1}`, else [`UNLABELED`].
pub fn form_bands(dist: &DistanceField, isovalues: &[f64]) -> Vec<i32> {
    dist.values
        .iter()
        .map(|&phi| band_of(phi, isovalues))
        .collect()
}

fn band_of(phi: f64, isovalues: &[f64]) -> i32 {
    // Half-open intervals: the first edge above phi closes the band below it.
    let above = isovalues.partition_point(|&c| c <= phi);
    if above == 0 || above == isovalues.len() {
        UNLABELED
    } else {
        (above - 1) as i32
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Component {
    pub id: u32,
    pub band: u32,
    /// Member voxels in ascending linear order.
    pub voxels: Vec<usize>,
}

/// 6-connected flood labeling inside each band. Component ids follow the
/// linear order of each component's first voxel.
pub fn connected_components(grid: &Grid3, band_labels: &[i32]) -> (Vec<i32>, Vec<Component>) {
    let mut labels = vec![UNLABELED; band_labels.len()];
    let mut components = Vec::new();
    let mut queue = VecDeque::new();
    for start in 0..band_labels.len() {
        let band = band_labels[start];
        if band == UNLABELED || labels[start] != UNLABELED {
            continue;
        }
        let id = components.len() as i32;
        labels[start] = id;
        queue.push_back(start);
        let mut voxels = Vec::new();
        while let Some(v) = queue.pop_front() {
            voxels.push(v);
            let [i, j, k] = grid.coords(v);
            let mut visit = |n: usize| {
                if band_labels[n] == band && labels[n] == UNLABELED {
                    labels[n] = id;
                    queue.push_back(n);
                }
            };
            if i > 0 {
                visit(grid.index(i - 1, j, k));
            }
            if i + 1 < grid.dims[0] {
                visit(grid.index(i + 1, j, k));
            }
            if j > 0 {
                visit(grid.index(i, j - 1, k));
            }
            if j + 1 < grid.dims[1] {
                visit(grid.index(i, j + 1, k));
            }
            if k > 0 {
                visit(grid.index(i, j, k - 1));
            }
            if k + 1 < grid.dims[2] {
                visit(grid.index(i, j, k + 1));
            }
        }
        voxels.sort_unstable();
        components.push(Component {
            id: id as u32,
            band: band as u32,
            voxels,
        });
    }
    (labels, components)
}

/// Number of sites for a component of `voxel_count` voxels.
pub fn site_count(voxel_count: usize, density: f64) -> usize {
    ((density * voxel_count as f64).round() as usize).clamp(1, voxel_count.max(1))
}

/// Draws distinct site voxels uniformly without replacement. `stream`
/// separates the random sequences of different components.
pub fn seed_sites(voxels: &[usize], density: f64, seed: u64, stream: u64) -> Vec<usize> {
    let count = site_count(voxels.len(), density);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    let mut picks: Vec<usize> = rand::seq::index::sample(&mut rng, voxels.len(), count)
        .into_iter()
        .map(|i| voxels[i])
        .collect();
    picks.sort_unstable();
    picks
}

/// Lloyd relaxation state for one component.
#[derive(Debug, Clone)]
pub struct ComponentCvt {
    pub grid: Grid3,
    pub voxels: Vec<usize>,
    /// Site voxel (linear index) per site id.
    pub sites: Vec<usize>,
    /// Site id per component voxel, parallel to `voxels`.
    pub assignment: Vec<u32>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LloydStep {
    /// `sum ||v - s(v)||^2` over the component after the assignment step.
    pub energy: f64,
    /// Largest site displacement of the update step, in voxels.
    pub max_move: f64,
    /// Per-site displacement of the update step, in voxels.
    pub moves: Vec<f64>,
    pub reseeded: bool,
}

#[inline]
fn dist2(grid: &Grid3, a: [usize; 3], b: [usize; 3]) -> f64 {
    (0..3)
        .map(|ax| {
            let d = a[ax] as f64 - b[ax] as f64;
            d * d * grid.spacing[ax] * grid.spacing[ax]
        })
        .sum()
}

#[inline]
fn index_distance(a: [usize; 3], b: [usize; 3]) -> f64 {
    (0..3)
        .map(|ax| {
            let d = a[ax] as f64 - b[ax] as f64;
            d * d
        })
        .sum::<f64>()
        .sqrt()
}

impl ComponentCvt {
    pub fn new(grid: Grid3, voxels: Vec<usize>, sites: Vec<usize>) -> Self {
        let assignment = vec![0; voxels.len()];
        ComponentCvt {
            grid,
            voxels,
            sites,
            assignment,
        }
    }

    /// Nearest site of voxel `v`, ties to the lowest site id.
    fn nearest_site(&self, site_coords: &[[usize; 3]], v: usize) -> (u32, f64) {
        let c = self.grid.coords(v);
        let mut best = (0u32, f64::INFINITY);
        for (s, &sc) in site_coords.iter().enumerate() {
            let d = dist2(&self.grid, c, sc);
            if d < best.1 {
                best = (s as u32, d);
            }
        }
        best
    }

    /// Assigns every voxel to its nearest site and returns the energy.
    pub fn assign(&mut self) -> f64 {
        let site_coords: Vec<[usize; 3]> = self.sites.iter().map(|&s| self.grid.coords(s)).collect();
        let this = &*self;
        let results: Vec<(u32, f64)> = this
            .voxels
            .par_iter()
            .map(|&v| this.nearest_site(&site_coords, v))
            .collect();
        self.assignment = results.iter().map(|r| r.0).collect();
        results.iter().map(|r| r.1).sum()
    }

    fn members(&self) -> Vec<Vec<usize>> {
        let mut members = vec![Vec::new(); self.sites.len()];
        for (&v, &s) in self.voxels.iter().zip(&self.assignment) {
            members[s as usize].push(v);
        }
        members
    }

    /// Voxel of `region` closest to its centroid, ties to the lowest index.
    fn snapped_centroid(&self, region: &[usize]) -> usize {
        let mut sum = [0.0; 3];
        for &v in region {
            let c = self.grid.coords(v);
            for a in 0..3 {
                sum[a] += c[a] as f64;
            }
        }
        let n = region.len() as f64;
        let centroid = sum.map(|s| s / n);
        let mut best = (region[0], f64::INFINITY);
        for &v in region {
            let c = self.grid.coords(v);
            let d: f64 = (0..3)
                .map(|a| {
                    let d = (c[a] as f64 - centroid[a]) * self.grid.spacing[a];
                    d * d
                })
                .sum();
            if d < best.1 {
                best = (v, d);
            }
        }
        best.0
    }

    /// One Lloyd iteration: assignment, then every site moves to the voxel
    /// of its region nearest the region centroid.
    pub fn iterate(&mut self) -> LloydStep {
        let energy = self.assign();
        let mut members = self.members();
        let mut reseeded = false;
        // A site always owns its own voxel, so empty regions only arise from
        // externally supplied duplicate sites. Re-seed them at the voxel
        // farthest from every other site.
        for s in 0..self.sites.len() {
            if members[s].is_empty() {
                let coords: Vec<[usize; 3]> = self
                    .sites
                    .iter()
                    .enumerate()
                    .filter(|&(t, _)| t != s)
                    .map(|(_, &v)| self.grid.coords(v))
                    .collect();
                let far = self
                    .voxels
                    .iter()
                    .copied()
                    .filter(|v| !self.sites.contains(v))
                    .map(|v| {
                        let c = self.grid.coords(v);
                        let d = coords.iter().map(|&sc| dist2(&self.grid, c, sc)).fold(f64::INFINITY, f64::min);
                        (v, d)
                    })
                    .fold((self.sites[s], f64::NEG_INFINITY), |best, cur| if cur.1 > best.1 { cur } else { best });
                self.sites[s] = far.0;
                members[s] = vec![far.0];
                reseeded = true;
            }
        }
        let updated: Vec<usize> = members.par_iter().map(|m| self.snapped_centroid(m)).collect();
        let moves: Vec<f64> = self
            .sites
            .iter()
            .zip(&updated)
            .map(|(&a, &b)| index_distance(self.grid.coords(a), self.grid.coords(b)))
            .collect();
        self.sites = updated;
        let max_move = moves.iter().copied().fold(0.0, f64::max);
        LloydStep {
            energy,
            max_move,
            moves,
            reseeded,
        }
    }
}

/// Convenience wrapper matching the tessellation state machine.
pub fn lloyd_iterate(state: &mut ComponentCvt) -> LloydStep {
    state.iterate()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegionRecord {
    pub id: u32,
    /// Physical site position.
    pub site: Vec3,
    /// Linear voxel index of the site.
    pub site_voxel: usize,
    pub band: u32,
    pub component: u32,
    pub voxel_count: u32,
    pub normal: Vec3,
    /// Site displacement in the last Lloyd update (voxels).
    pub drift: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComponentHistory {
    pub component: u32,
    pub energies: Vec<f64>,
    /// Iterations (0-based) in which an empty region was re-seeded.
    pub reseeds: Vec<usize>,
    pub iterations: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Tessellation {
    pub grid: Grid3,
    pub band_isovalues: Vec<f64>,
    pub band_label: Vec<i32>,
    pub component_label: Vec<i32>,
    pub region_label: Vec<i32>,
    pub regions: Vec<RegionRecord>,
    pub components: Vec<Component>,
    pub history: Vec<ComponentHistory>,
}

impl Tessellation {
    pub fn region_count(&self) -> usize {
        self.regions.len()
    }

    pub fn band_count(&self) -> usize {
        self.band_isovalues.len().saturating_sub(1)
    }

    pub fn labeled_voxel_count(&self) -> usize {
        self.region_label.iter().filter(|&&r| r != UNLABELED).count()
    }

    /// Voxel lists per region, ascending.
    pub fn region_voxels(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.regions.len()];
        for (v, &r) in self.region_label.iter().enumerate() {
            if r != UNLABELED {
                out[r as usize].push(v);
            }
        }
        out
    }

    pub fn regions_in_band(&self, band: u32) -> impl Iterator<Item = &RegionRecord> {
        self.regions.iter().filter(move |r| r.band == band)
    }
}

fn unit_or_default(n: Option<Vec3>) -> Vec3 {
    n.unwrap_or([0.0, 0.0, 1.0])
}

pub fn tessellate(dist: &DistanceField, spec: &BandSpec) -> Result<Tessellation> {
    spec.validate()?;
    let grid = dist.grid.clone();
    let band_label = form_bands(dist, &spec.isovalues);
    let (component_label, components) = connected_components(&grid, &band_label);

    let relaxed: Vec<(ComponentCvt, ComponentHistory, Vec<f64>)> = components
        .par_iter()
        .map(|comp| {
            let sites = seed_sites(&comp.voxels, spec.density, spec.seed, comp.id as u64);
            let mut cvt = ComponentCvt::new(grid.clone(), comp.voxels.clone(), sites);
            let mut history = ComponentHistory {
                component: comp.id,
                energies: Vec::new(),
                reseeds: Vec::new(),
                iterations: 0,
            };
            let mut drift = vec![0.0; cvt.sites.len()];
            for it in 0..spec.max_iters {
                let step = cvt.iterate();
                history.energies.push(step.energy);
                if step.reseeded {
                    history.reseeds.push(it);
                }
                history.iterations = it + 1;
                drift = step.moves;
                if step.max_move < spec.move_tolerance {
                    break;
                }
            }
            // Final assignment against the final sites.
            let energy = cvt.assign();
            history.energies.push(energy);
            (cvt, history, drift)
        })
        .collect();

    let mut region_label = vec![UNLABELED; grid.len()];
    let mut regions = Vec::new();
    let mut history = Vec::with_capacity(relaxed.len());
    for ((cvt, hist, drift), comp) in relaxed.into_iter().zip(&components) {
        let base = regions.len() as u32;
        let members = cvt.members();
        for (&v, &s) in cvt.voxels.iter().zip(&cvt.assignment) {
            region_label[v] = (base + s) as i32;
        }
        for (s, &site) in cvt.sites.iter().enumerate() {
            let p = grid.position(grid.coords(site));
            let normal = surface_normal(dist, p)
                .ok()
                .or_else(|| sdf::mean_gradient(dist, &members[s]));
            regions.push(RegionRecord {
                id: base + s as u32,
                site: p,
                site_voxel: site,
                band: comp.band,
                component: comp.id,
                voxel_count: members[s].len() as u32,
                normal: unit_or_default(normal),
                drift: drift[s],
            });
        }
        history.push(hist);
    }

    Ok(Tessellation {
        grid,
        band_isovalues: spec.isovalues.clone(),
        band_label,
        component_label,
        region_label,
        regions,
        components,
        history,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegionTable {
    pub grid: Grid3,
    pub band_isovalues: Vec<f64>,
    pub labels_file: String,
    pub regions: Vec<RegionRecord>,
}

pub const REGION_LABELS_FILE: &str = "regions.i32.raw";
pub const REGION_TABLE_FILE: &str = "regions.json";

/// Writes the region-label volume (i32 little-endian, -1 unlabeled) and
/// the JSON region table into `dir`.
pub fn write_tessellation(dir: &Path, tess: &Tessellation) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let labels: Vec<u8> = tess.region_label.iter().flat_map(|r| r.to_le_bytes()).collect();
    let path = dir.join(REGION_LABELS_FILE);
    fs::write(&path, labels).map_err(|e| Error::io(&path, e))?;
    let table = RegionTable {
        grid: tess.grid.clone(),
        band_isovalues: tess.band_isovalues.clone(),
        labels_file: REGION_LABELS_FILE.into(),
        regions: tess.regions.clone(),
    };
    let path = dir.join(REGION_TABLE_FILE);
    fs::write(&path, serde_json::to_string_pretty(&table)?).map_err(|e| Error::io(&path, e))
}

/// Reads a tessellation written by [`write_tessellation`]. Band and
/// component labels are rebuilt from the region table; Lloyd history is
/// not persisted.
pub fn read_tessellation(dir: &Path) -> Result<Tessellation> {
    let path = dir.join(REGION_TABLE_FILE);
    let text = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
    let table: RegionTable = serde_json::from_str(&text)?;
    let path = dir.join(&table.labels_file);
    let bytes = fs::read(&path).map_err(|e| Error::io(&path, e))?;
    if bytes.len() != table.grid.len() * 4 {
        return Err(Error::format(&path, "label volume size does not match grid"));
    }
    let region_label: Vec<i32> = bytes
        .chunks_exact(4)
        .map(|c| i32::from_le_bytes([c[0], c[1], c[2], c[3]]))
        .collect();
    let mut band_label = vec![UNLABELED; region_label.len()];
    let mut component_label = vec![UNLABELED; region_label.len()];
    let component_count = table.regions.iter().map(|r| r.component + 1).max().unwrap_or(0) as usize;
    let mut components: Vec<Component> = (0..component_count)
        .map(|id| Component {
            id: id as u32,
            band: 0,
            voxels: Vec::new(),
        })
        .collect();
    for (v, &r) in region_label.iter().enumerate() {
        if r == UNLABELED {
            continue;
        }
        let rec = table
            .regions
            .get(r as usize)
            .ok_or_else(|| Error::format(&path, format!("region id {r} not in table")))?;
        band_label[v] = rec.band as i32;
        component_label[v] = rec.component as i32;
        let comp = &mut components[rec.component as usize];
        comp.band = rec.band;
        comp.voxels.push(v);
    }
    Ok(Tessellation {
        grid: table.grid,
        band_isovalues: table.band_isovalues,
        band_label,
        component_label,
        region_label,
        regions: table.regions,
        components,
        history: Vec::new(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn flat_distance(grid: Grid3, values: Vec<f64>) -> DistanceField {
        DistanceField {
            grid,
            values,
            source: "test".into(),
            isovalue: 0.0,
            max_band: 100.0,
        }
    }

    #[test]
    fn band_membership_half_open() {
        let iso = [0.0, 2.0, 4.0];
        assert_eq!(band_of(1.0, &iso), 0);
        assert_eq!(band_of(3.0, &iso), 1);
        assert_eq!(band_of(5.0, &iso), UNLABELED);
        assert_eq!(band_of(2.0, &iso), 1);
        assert_eq!(band_of(0.0, &iso), 0);
        assert_eq!(band_of(4.0, &iso), UNLABELED);
        assert_eq!(band_of(-0.5, &iso), UNLABELED);
        let sym = [-2.0, 0.0, 2.0];
        assert_eq!(band_of(-1.0, &sym), 0);
        assert_eq!(band_of(1.0, &sym), 1);
    }

    #[test]
    fn components_split_on_gaps_and_diagonals() {
        let g = Grid3::unit([5, 3, 1]);
        let mut bands = vec![UNLABELED; g.len()];
        // Two clusters separated by an unlabeled column.
        for j in 0..3 {
            bands[g.index(0, j, 0)] = 0;
            bands[g.index(3, j, 0)] = 0;
            bands[g.index(4, j, 0)] = 0;
        }
        let (_, comps) = connected_components(&g, &bands);
        assert_eq!(comps.len(), 2);

        let g = Grid3::unit([2, 2, 1]);
        let bands = vec![0, UNLABELED, UNLABELED, 0];
        let (labels, comps) = connected_components(&g, &bands);
        assert_eq!(comps.len(), 2);
        assert_ne!(labels[0], labels[3]);

        // Different bands never merge even when adjacent.
        let g = Grid3::unit([4, 1, 1]);
        let (_, comps) = connected_components(&g, &[0, 0, 1, 1]);
        assert_eq!(comps.len(), 2);
        assert_eq!((comps[0].band, comps[1].band), (0, 1));

        let g = Grid3::unit([6, 6, 6]);
        let shell: Vec<i32> = (0..g.len())
            .map(|v| {
                let c = g.coords(v);
                if c.iter().any(|&x| x == 0 || x == 5) { 0 } else { UNLABELED }
            })
            .collect();
        assert_eq!(connected_components(&g, &shell).1.len(), 1);
    }

    #[test]
    fn site_counts() {
        assert_eq!(site_count(1000, 0.015), 15);
        assert_eq!(site_count(10, 0.015), 1);
        let voxels: Vec<usize> = (0..1000).map(|v| v * 3).collect();
        let a = seed_sites(&voxels, 0.015, 42, 0);
        assert_eq!(a.len(), 15);
        assert_eq!(a, seed_sites(&voxels, 0.015, 42, 0));
        assert_ne!(a, seed_sites(&voxels, 0.015, 42, 1));
        let mut dedup = a.clone();
        dedup.dedup();
        assert_eq!(dedup.len(), 15);
        assert!(a.iter().all(|v| voxels.contains(v)));
    }

    #[test]
    fn corner_site_moves_to_center() {
        let g = Grid3::unit([3, 3, 1]);
        let voxels: Vec<usize> = (0..9).collect();
        let mut cvt = ComponentCvt::new(g.clone(), voxels, vec![0]);
        let step = lloyd_iterate(&mut cvt);
        assert_eq!(cvt.sites, vec![g.index(1, 1, 0)]);
        assert!((step.max_move - 2f64.sqrt()).abs() < 1e-15);
        let e1 = lloyd_iterate(&mut cvt);
        assert_eq!(e1.max_move, 0.0);
        let e2 = lloyd_iterate(&mut cvt);
        assert_eq!(e1.energy, e2.energy);
        assert_eq!(e2.energy, 12.0);
    }

    /// Exhaustive optimum of the 2-site discrete problem on a line.
    fn best_two_site_energy(n: usize) -> f64 {
        let mut best = f64::INFINITY;
        for a in 0..n {
            for b in a + 1..n {
                let e: f64 = (0..n)
                    .map(|v| {
                        let da = (v as f64 - a as f64).powi(2);
                        let db = (v as f64 - b as f64).powi(2);
                        da.min(db)
                    })
                    .sum();
                best = best.min(e);
            }
        }
        best
    }

    #[test]
    fn two_sites_on_line_reach_optimum() {
        let g = Grid3::unit([8, 1, 1]);
        let mut cvt = ComponentCvt::new(g, (0..8).collect(), vec![0, 1]);
        let mut last = f64::INFINITY;
        for _ in 0..20 {
            let step = cvt.iterate();
            assert!(step.energy <= last);
            last = step.energy;
            if step.max_move == 0.0 {
                break;
            }
        }
        let energy = cvt.assign();
        assert_eq!(energy, best_two_site_energy(8));
        assert_eq!(energy, 12.0);
        // Both halves hold four voxels.
        let counts: Vec<usize> = cvt.members().iter().map(Vec::len).collect();
        assert_eq!(counts, vec![4, 4]);
    }

    #[test]
    fn duplicate_sites_trigger_reseed() {
        let g = Grid3::unit([6, 1, 1]);
        let mut cvt = ComponentCvt::new(g, (0..6).collect(), vec![2, 2]);
        let step = cvt.iterate();
        assert!(step.reseeded);
        assert_ne!(cvt.sites[0], cvt.sites[1]);
    }

    #[test]
    fn slab_partition() {
        let g = Grid3::unit([20, 5, 1]);
        let dist = flat_distance(g.clone(), vec![1.0; g.len()]);
        let spec = BandSpec {
            isovalues: vec![0.0, 2.0],
            density: 0.04,
            seed: 3,
            max_iters: 50,
            move_tolerance: 0.5,
        };
        let tess = tessellate(&dist, &spec).unwrap();
        assert_eq!(tess.regions.len(), 4);
        let total: u32 = tess.regions.iter().map(|r| r.voxel_count).sum();
        assert_eq!(total, 100);
        assert_eq!(tess.labeled_voxel_count(), 100);
        for r in &tess.regions {
            assert_eq!(tess.region_label[r.site_voxel], r.id as i32);
        }
    }

    #[test]
    fn bands_never_share_regions() {
        let g = Grid3::unit([12, 6, 6]);
        let dist = flat_distance(g.clone(), (0..g.len()).map(|v| g.coords(v)[0] as f64 * 0.5).collect());
        let spec = BandSpec {
            isovalues: vec![0.0, 2.0, 4.0, 6.0],
            density: 0.05,
            seed: 1,
            max_iters: 50,
            move_tolerance: 0.5,
        };
        let tess = tessellate(&dist, &spec).unwrap();
        assert_eq!(tess.band_count(), 3);
        for b in 0..3 {
            assert!(tess.regions_in_band(b).count() >= 1);
        }
        for (v, &r) in tess.region_label.iter().enumerate() {
            if r != UNLABELED {
                assert_eq!(tess.regions[r as usize].band as i32, tess.band_label[v]);
            }
        }
    }

    #[test]
    fn empty_bands_give_empty_tessellation() {
        let g = Grid3::unit([4, 4, 4]);
        let dist = flat_distance(g.clone(), vec![10.0; g.len()]);
        let spec = BandSpec {
            isovalues: vec![0.0, 1.0],
            density: 0.5,
            seed: 0,
            max_iters: 5,
            move_tolerance: 0.5,
        };
        let tess = tessellate(&dist, &spec).unwrap();
        assert!(tess.regions.is_empty());
        assert!(tess.region_label.iter().all(|&r| r == UNLABELED));
    }

    #[test]
    fn tessellation_files_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let g = Grid3::unit([10, 4, 3]);
        let dist = flat_distance(g.clone(), (0..g.len()).map(|v| g.coords(v)[0] as f64).collect());
        let spec = BandSpec {
            isovalues: vec![0.0, 3.0, 6.0],
            density: 0.1,
            seed: 9,
            max_iters: 10,
            move_tolerance: 0.5,
        };
        let tess = tessellate(&dist, &spec).unwrap();
        write_tessellation(dir.path(), &tess).unwrap();
        let back = read_tessellation(dir.path()).unwrap();
        assert_eq!(back.region_label, tess.region_label);
        assert_eq!(back.regions, tess.regions);
        assert_eq!(back.band_label, tess.band_label);
        assert_eq!(back.component_label, tess.component_label);
    }

    #[test]
    fn spec_validation() {
        let mut spec = BandSpec {
            isovalues: vec![0.0, 1.0],
            density: 0.5,
            seed: 0,
            max_iters: 5,
            move_tolerance: 0.5,
        };
        assert!(spec.validate().is_ok());
        spec.density = 0.0;
        assert!(spec.validate().is_err());
        spec.density = 0.5;
        spec.isovalues = vec![1.0, 1.0];
        assert!(spec.validate().is_err());
    }
}

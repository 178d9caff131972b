//! Datasets produced by the pipeline, loaded once and served read-only.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use scaleglyph::geometry::TriangleMesh;
use scaleglyph::glyphpack::read_glyphs;
use scaleglyph::lsrcvt::RegionTable;
use scaleglyph::stats::{AggregationMode, ScatterTable};
use scaleglyph::Grid3;

use crate::error::{Result, ServiceError};

pub const DATASET_FILE: &str = "dataset.json";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BandEntry {
    pub band: u32,
    /// Signed-distance interval `[lower, upper)` of the band.
    pub lower: f64,
    pub upper: f64,
    pub region_count: usize,
    pub glyphs: PathBuf,
}

/// Index of one dataset's artifacts; paths are relative to its directory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetEntry {
    pub id: String,
    pub grid: Grid3,
    pub fields: Vec<String>,
    pub units: Vec<String>,
    pub bin_edges: Vec<u32>,
    pub bin_labels: Vec<String>,
    pub edge_lengths: Vec<f64>,
    pub delta_j: Vec<f64>,
    pub mode: AggregationMode,
    pub region_count: usize,
    pub stat_bytes_per_field_bin: usize,
    pub bands: Vec<BandEntry>,
    pub meshes: BTreeMap<String, PathBuf>,
    pub stats: PathBuf,
    pub scatter: PathBuf,
    pub regions: PathBuf,
    pub volume_manifest: PathBuf,
    pub provenance: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetSummary {
    pub id: String,
    pub region_count: usize,
    pub bands: Vec<u32>,
    pub fields: Vec<String>,
    pub bins: usize,
    pub surfaces: Vec<String>,
}

#[derive(Debug, Clone)]
pub struct LoadedDataset {
    pub entry: DatasetEntry,
    pub dir: PathBuf,
    /// Glyph file bytes per band, exactly as written.
    pub glyphs: BTreeMap<u32, Vec<u8>>,
    pub meshes: BTreeMap<String, Vec<u8>>,
    pub scatter: ScatterTable,
    /// Band of every region id.
    pub region_band: Vec<u32>,
}

impl LoadedDataset {
    pub fn load(dir: &Path) -> Result<Self> {
        let path = dir.join(DATASET_FILE);
        let text = fs::read_to_string(&path).map_err(|e| ServiceError::io(&path, e))?;
        let entry: DatasetEntry = serde_json::from_str(&text).map_err(|e| ServiceError::catalog(&path, e))?;

        let mut glyphs = BTreeMap::new();
        for band in &entry.bands {
            let file = dir.join(&band.glyphs);
            // Parse once to reject incompatible or corrupt files up front.
            let parsed = read_glyphs(&file).map_err(|e| ServiceError::catalog(&file, e))?;
            if parsed.band != band.band || parsed.region_count() != band.region_count {
                return Err(ServiceError::catalog(&file, "glyph file disagrees with dataset index"));
            }
            let bytes = fs::read(&file).map_err(|e| ServiceError::io(&file, e))?;
            glyphs.insert(band.band, bytes);
        }
        let mut meshes = BTreeMap::new();
        for (name, rel) in &entry.meshes {
            let file = dir.join(rel);
            let bytes = fs::read(&file).map_err(|e| ServiceError::io(&file, e))?;
            TriangleMesh::from_bytes(&bytes).map_err(|e| ServiceError::catalog(&file, e))?;
            meshes.insert(name.clone(), bytes);
        }
        let scatter_path = dir.join(&entry.scatter);
        let scatter = ScatterTable::load(&scatter_path).map_err(|e| ServiceError::catalog(&scatter_path, e))?;
        let regions_path = dir.join(&entry.regions);
        let text = fs::read_to_string(&regions_path).map_err(|e| ServiceError::io(&regions_path, e))?;
        let table: RegionTable = serde_json::from_str(&text).map_err(|e| ServiceError::catalog(&regions_path, e))?;
        if table.regions.len() != entry.region_count || scatter.row_count() != entry.region_count {
            return Err(ServiceError::catalog(&path, "region counts disagree between artifacts"));
        }
        Ok(LoadedDataset {
            region_band: table.regions.iter().map(|r| r.band).collect(),
            entry,
            dir: dir.to_path_buf(),
            glyphs,
            meshes,
            scatter,
        })
    }

    pub fn summary(&self) -> DatasetSummary {
        DatasetSummary {
            id: self.entry.id.clone(),
            region_count: self.entry.region_count,
            bands: self.entry.bands.iter().map(|b| b.band).collect(),
            fields: self.entry.fields.clone(),
            bins: self.entry.bin_edges.len().saturating_sub(1),
            surfaces: self.entry.meshes.keys().cloned().collect(),
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct DatasetCatalog {
    pub datasets: BTreeMap<String, LoadedDataset>,
}

impl DatasetCatalog {
    /// Loads `root` itself when it holds a dataset index, otherwise every
    /// immediate subdirectory that does.
    pub fn open(root: &Path) -> Result<Self> {
        let mut catalog = DatasetCatalog::default();
        if root.join(DATASET_FILE).is_file() {
            catalog.insert(LoadedDataset::load(root)?)?;
            return Ok(catalog);
        }
        let mut dirs: Vec<PathBuf> = fs::read_dir(root)
            .map_err(|e| ServiceError::io(root, e))?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.join(DATASET_FILE).is_file())
            .collect();
        dirs.sort();
        for dir in dirs {
            catalog.insert(LoadedDataset::load(&dir)?)?;
        }
        Ok(catalog)
    }

    pub fn insert(&mut self, dataset: LoadedDataset) -> Result<()> {
        let id = dataset.entry.id.clone();
        if self.datasets.contains_key(&id) {
            return Err(ServiceError::catalog(&dataset.dir, format!("duplicate dataset id `{id}`")));
        }
        self.datasets.insert(id, dataset);
        Ok(())
    }

    pub fn get(&self, id: &str) -> Result<&LoadedDataset> {
        self.datasets
            .get(id)
            .ok_or_else(|| ServiceError::NotFound(format!("dataset `{id}`")))
    }

    pub fn summaries(&self) -> Vec<DatasetSummary> {
        self.datasets.values().map(LoadedDataset::summary).collect()
    }
}

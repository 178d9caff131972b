//! Stage runner: preprocess, decompose, surface, distance, tessellate,
//! aggregate, pack.
//!
//! Each stage reads its inputs from the dataset directory and writes its
//! outputs there. A stage is skipped when its record under `stages/` carries
//! the same key (hash of its parameters and the upstream key) and every
//! recorded output still exists with the recorded hash.

use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use scaleglyph::geometry::{
    extract_isosurface, read_distance_field, signed_distance_field, write_distance_field, TriangleMesh,
};
use scaleglyph::glyphpack::{glyph_file_name, pack_glyphs, write_glyphs};
use scaleglyph::lsrcvt::{read_tessellation, tessellate, write_tessellation, REGION_LABELS_FILE, REGION_TABLE_FILE};
use scaleglyph::specfilter::{
    build_window_bank, decompose, decompose_blocked, decompose_mirrored, read_bands, sidecar_file_name,
    write_bands, ScaleBinSpec,
};
use scaleglyph::stats::{
    aggregate_fields, derive_fields, read_stats, scatter_samples, write_stats, ScatterColumn,
};
use scaleglyph::volume::{
    downsample, downsample_shape, load_field, write_raw_f32, FieldEntry, VolumeManifest, ENCODING_F32_LE,
};
use scaleglyph::{Grid3, ScalarField};

use crate::catalog::{BandEntry, DatasetEntry, DATASET_FILE};
use crate::config::{DecomposeMethod, PipelineConfig};
use crate::error::{Result, ServiceError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Stage {
    Preprocess,
    Decompose,
    Surface,
    Distance,
    Tessellate,
    Aggregate,
    Pack,
}

impl Stage {
    pub const ALL: [Stage; 7] = [
        Stage::Preprocess,
        Stage::Decompose,
        Stage::Surface,
        Stage::Distance,
        Stage::Tessellate,
        Stage::Aggregate,
        Stage::Pack,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Stage::Preprocess => "preprocess",
            Stage::Decompose => "decompose",
            Stage::Surface => "surface",
            Stage::Distance => "distance",
            Stage::Tessellate => "tessellate",
            Stage::Aggregate => "aggregate",
            Stage::Pack => "pack",
        }
    }

    pub fn exit_code(self) -> i32 {
        10 + Stage::ALL.iter().position(|&s| s == self).unwrap() as i32
    }
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

pub const VOLUME_DIR: &str = "volume";
pub const BANDS_DIR: &str = "bands";
pub const SURFACE_DIR: &str = "surface";
pub const REGIONS_DIR: &str = "regions";
pub const STATS_DIR: &str = "stats";
pub const GLYPHS_DIR: &str = "glyphs";
pub const STAGES_DIR: &str = "stages";
pub const PROVENANCE_FILE: &str = "provenance.json";
pub const STATS_FILE: &str = "stats.bin";
pub const SCATTER_FILE: &str = "scatter.json";

pub fn mesh_file_name(surface: &str) -> String {
    format!("{surface}.mesh")
}

pub fn distance_file_name(surface: &str) -> String {
    format!("{surface}.sdf.raw")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutputRecord {
    pub path: PathBuf,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageRecord {
    pub stage: Stage,
    pub key: String,
    pub params: serde_json::Value,
    pub outputs: Vec<OutputRecord>,
    #[serde(default)]
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StageOutcome {
    pub stage: Stage,
    pub skipped: bool,
    pub key: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineReport {
    pub dataset_dir: PathBuf,
    pub outcomes: Vec<StageOutcome>,
}

impl PipelineReport {
    pub fn all_skipped(&self) -> bool {
        self.outcomes.iter().all(|o| o.skipped)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub config: PipelineConfig,
    pub stages: BTreeMap<String, StageRecord>,
}

fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

fn hash_file(path: &Path) -> Option<String> {
    fs::read(path).ok().map(|b| sha256_hex(&b))
}

/// Result of running one stage body: relative output paths plus warnings.
struct StageProducts {
    outputs: Vec<PathBuf>,
    warnings: Vec<String>,
}

struct Runner<'a> {
    cfg: &'a PipelineConfig,
    dir: PathBuf,
}

fn stage_err(stage: Stage) -> impl Fn(scaleglyph::Error) -> ServiceError {
    move |source| ServiceError::Stage { stage, source }
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value).expect("serializable record");
    fs::write(path, text).map_err(|e| ServiceError::io(path, e))
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Option<T> {
    fs::read_to_string(path).ok().and_then(|t| serde_json::from_str(&t).ok())
}

impl Runner<'_> {
    fn record_path(&self, stage: Stage) -> PathBuf {
        self.dir.join(STAGES_DIR).join(format!("{stage}.json"))
    }

    fn params(&self, stage: Stage) -> serde_json::Value {
        let c = self.cfg;
        let v = match stage {
            Stage::Preprocess => serde_json::json!({
                "manifest": c.manifest,
                "preprocess": c.preprocess,
                "fields": c.required_fields(),
            }),
            Stage::Decompose => serde_json::json!({ "fields": c.fields, "decompose": c.decompose }),
            Stage::Surface => serde_json::json!({ "surface": c.surface }),
            Stage::Distance => serde_json::json!({ "surface": c.surface, "distance": c.distance }),
            Stage::Tessellate => serde_json::json!({ "tessellate": c.tessellate }),
            Stage::Aggregate => serde_json::json!({ "fields": c.fields, "aggregate": c.aggregate }),
            Stage::Pack => serde_json::json!({ "dataset_id": c.dataset_id, "pack": c.pack }),
        };
        v
    }

    /// Hash of the input volume: manifest plus every referenced file.
    fn input_fingerprint(&self) -> Result<String> {
        let err = stage_err(Stage::Preprocess);
        let manifest = VolumeManifest::load(&self.cfg.manifest).map_err(&err)?;
        let mut h = Sha256::new();
        h.update(serde_json::to_vec(&manifest).expect("serializable manifest"));
        for entry in &manifest.fields {
            let path = manifest.resolve(entry);
            let bytes = fs::read(&path).map_err(|e| ServiceError::io(&path, e))?;
            h.update(Sha256::digest(&bytes));
        }
        Ok(hex::encode(h.finalize()))
    }

    fn stage_key(&self, stage: Stage, upstream: &str) -> Result<String> {
        let mut h = Sha256::new();
        h.update(stage.name());
        h.update(serde_json::to_vec(&self.params(stage)).expect("serializable params"));
        h.update(upstream);
        if stage == Stage::Preprocess {
            h.update(self.input_fingerprint()?);
        }
        Ok(hex::encode(h.finalize()))
    }

    fn up_to_date(&self, stage: Stage, key: &str) -> Option<StageRecord> {
        let record: StageRecord = read_json(&self.record_path(stage))?;
        let fresh = record.key == key
            && record
                .outputs
                .iter()
                .all(|o| hash_file(&self.dir.join(&o.path)).as_deref() == Some(o.sha256.as_str()));
        fresh.then_some(record)
    }

    fn run(&self, stage: Stage, upstream: &str) -> Result<(StageOutcome, StageRecord)> {
        let key = self.stage_key(stage, upstream)?;
        if let Some(record) = self.up_to_date(stage, &key) {
            return Ok((
                StageOutcome {
                    stage,
                    skipped: true,
                    key,
                },
                record,
            ));
        }
        let products = match stage {
            Stage::Preprocess => self.preprocess(),
            Stage::Decompose => self.decompose(),
            Stage::Surface => self.surface(),
            Stage::Distance => self.distance(),
            Stage::Tessellate => self.tessellate(),
            Stage::Aggregate => self.aggregate(),
            Stage::Pack => self.pack(),
        }?;
        let outputs = products
            .outputs
            .into_iter()
            .map(|p| {
                let full = self.dir.join(&p);
                let sha256 = hash_file(&full).ok_or_else(|| {
                    ServiceError::io(&full, std::io::Error::new(std::io::ErrorKind::NotFound, "missing output"))
                })?;
                Ok(OutputRecord { path: p, sha256 })
            })
            .collect::<Result<Vec<_>>>()?;
        let record = StageRecord {
            stage,
            key: key.clone(),
            params: self.params(stage),
            outputs,
            warnings: products.warnings,
        };
        let stages_dir = self.dir.join(STAGES_DIR);
        fs::create_dir_all(&stages_dir).map_err(|e| ServiceError::io(&stages_dir, e))?;
        write_json(&self.record_path(stage), &record)?;
        Ok((
            StageOutcome {
                stage,
                skipped: false,
                key,
            },
            record,
        ))
    }

    fn volume(&self, stage: Stage) -> Result<VolumeManifest> {
        VolumeManifest::load(self.dir.join(VOLUME_DIR).join("manifest.json")).map_err(stage_err(stage))
    }

    fn create(&self, sub: &str) -> Result<PathBuf> {
        let d = self.dir.join(sub);
        fs::create_dir_all(&d).map_err(|e| ServiceError::io(&d, e))?;
        Ok(d)
    }

    fn preprocess(&self) -> Result<StageProducts> {
        let err = stage_err(Stage::Preprocess);
        let input = VolumeManifest::load(&self.cfg.manifest).map_err(&err)?;
        input.verify().map_err(&err)?;
        let recipes = &self.cfg.preprocess.derived;
        let factor = self.cfg.preprocess.downsample;
        let mut warnings = Vec::new();
        let (_, remainder) = downsample_shape(input.grid.dims, factor);
        if remainder.iter().any(|&r| r > 0) {
            warnings.push(format!(
                "downsample factor {factor} truncates trailing voxels {remainder:?}"
            ));
        }
        let out_dir = self.create(VOLUME_DIR)?;
        let mut grid: Option<Grid3> = None;
        let mut entries = Vec::new();
        let mut outputs = Vec::new();
        for name in self.cfg.required_fields() {
            let field: ScalarField = match recipes.iter().find(|r| r.output == name) {
                Some(recipe) => derive_fields(std::slice::from_ref(recipe), |n| load_field(&input, n))
                    .map_err(&err)?
                    .remove(0),
                None => load_field(&input, &name).map_err(&err)?,
            };
            let field = downsample(&field, factor).map_err(&err)?;
            let file = format!("{name}.raw");
            write_raw_f32(&out_dir.join(&file), &field.values).map_err(&err)?;
            outputs.push(Path::new(VOLUME_DIR).join(&file));
            entries.push(FieldEntry {
                name: name.clone(),
                units: field.units.clone(),
                path: file.into(),
                encoding: ENCODING_F32_LE.into(),
            });
            grid = Some(field.grid);
        }
        let mut provenance = input.provenance.clone();
        provenance.insert("downsample".into(), factor.into());
        provenance.insert("order".into(), "downsample before mirror extension".into());
        if !warnings.is_empty() {
            provenance.insert("warnings".into(), warnings.clone().into());
        }
        let manifest = VolumeManifest {
            grid: grid.expect("at least one field"),
            fields: entries,
            provenance,
            base_dir: out_dir.clone(),
        };
        manifest.save(out_dir.join("manifest.json")).map_err(&err)?;
        outputs.push(Path::new(VOLUME_DIR).join("manifest.json"));
        Ok(StageProducts { outputs, warnings })
    }

    fn scale_spec(&self, grid: &Grid3) -> ScaleBinSpec {
        let d = &self.cfg.decompose;
        let mut spec = ScaleBinSpec::for_grid(grid, d.bin_edges.clone());
        spec.include_j0 = d.include_j0;
        spec.profile = d.profile;
        spec.smoothness = d.smoothness;
        spec
    }

    fn decompose(&self) -> Result<StageProducts> {
        let err = stage_err(Stage::Decompose);
        let volume = self.volume(Stage::Decompose)?;
        let spec = self.scale_spec(&volume.grid);
        spec.validate(&volume.grid).map_err(&err)?;
        let dir = self.create(BANDS_DIR)?;
        let mut outputs = Vec::new();
        for name in &self.cfg.fields {
            let field = load_field(&volume, name).map_err(&err)?;
            let method = self.cfg.decompose.method;
            let decomp = match method {
                DecomposeMethod::Mirror => decompose_mirrored(&field, &spec),
                DecomposeMethod::Periodic => {
                    build_window_bank(&field.grid, &spec).and_then(|bank| decompose(&field, &bank))
                }
                DecomposeMethod::Blocked => {
                    decompose_blocked(&field, &spec, self.cfg.decompose.blocks.as_ref().expect("validated"))
                }
            }
            .map_err(&err)?;
            let lineage = vec![
                format!("volume/{name}.raw"),
                format!("decompose:{}", serde_json::to_string(&method).unwrap_or_default()),
            ];
            let sidecar = write_bands(&dir, &decomp, &lineage).map_err(&err)?;
            outputs.extend(sidecar.files.iter().map(|f| Path::new(BANDS_DIR).join(f)));
            outputs.push(Path::new(BANDS_DIR).join(sidecar_file_name(name)));
        }
        Ok(StageProducts {
            outputs,
            warnings: Vec::new(),
        })
    }

    fn surface(&self) -> Result<StageProducts> {
        let err = stage_err(Stage::Surface);
        let volume = self.volume(Stage::Surface)?;
        let s = &self.cfg.surface;
        let field = load_field(&volume, &s.field).map_err(&err)?;
        let mesh = extract_isosurface(&field, s.isovalue);
        if mesh.is_empty() {
            return Err(err(scaleglyph::Error::EmptyMesh));
        }
        let dir = self.create(SURFACE_DIR)?;
        let file = mesh_file_name(&s.name);
        mesh.write(&dir.join(&file)).map_err(&err)?;
        Ok(StageProducts {
            outputs: vec![Path::new(SURFACE_DIR).join(file)],
            warnings: Vec::new(),
        })
    }

    fn distance(&self) -> Result<StageProducts> {
        let err = stage_err(Stage::Distance);
        let volume = self.volume(Stage::Distance)?;
        let s = &self.cfg.surface;
        let field = load_field(&volume, &s.field).map_err(&err)?;
        let dir = self.dir.join(SURFACE_DIR);
        let mesh = TriangleMesh::read(&dir.join(mesh_file_name(&s.name))).map_err(&err)?;
        let max_band = self.cfg.distance.max_band.expect("resolved config");
        let dist = signed_distance_field(&mesh, &field, s.isovalue, max_band).map_err(&err)?;
        let file = distance_file_name(&s.name);
        write_distance_field(&dir.join(&file), &dist).map_err(&err)?;
        let side = Path::new(&file).with_extension("json");
        Ok(StageProducts {
            outputs: vec![Path::new(SURFACE_DIR).join(&file), Path::new(SURFACE_DIR).join(side)],
            warnings: Vec::new(),
        })
    }

    fn tessellate(&self) -> Result<StageProducts> {
        let err = stage_err(Stage::Tessellate);
        let path = self.dir.join(SURFACE_DIR).join(distance_file_name(&self.cfg.surface.name));
        let dist = read_distance_field(&path).map_err(&err)?;
        let tess = tessellate(&dist, &self.cfg.tessellate).map_err(&err)?;
        let dir = self.create(REGIONS_DIR)?;
        write_tessellation(&dir, &tess).map_err(&err)?;
        let mut warnings = Vec::new();
        if tess.regions.is_empty() {
            warnings.push("no voxel falls inside the distance bands".into());
        }
        let history: Vec<_> = tess.history.iter().collect();
        write_json(&dir.join("lloyd.json"), &history)?;
        Ok(StageProducts {
            outputs: vec![
                Path::new(REGIONS_DIR).join(REGION_LABELS_FILE),
                Path::new(REGIONS_DIR).join(REGION_TABLE_FILE),
                Path::new(REGIONS_DIR).join("lloyd.json"),
            ],
            warnings,
        })
    }

    fn aggregate(&self) -> Result<StageProducts> {
        let err = stage_err(Stage::Aggregate);
        let tess = read_tessellation(&self.dir.join(REGIONS_DIR)).map_err(&err)?;
        let bands_dir = self.dir.join(BANDS_DIR);
        let decomps = self
            .cfg
            .fields
            .iter()
            .map(|f| read_bands(&bands_dir, f).map(|(d, _)| d))
            .collect::<scaleglyph::Result<Vec<_>>>()
            .map_err(&err)?;
        let stats = aggregate_fields(&decomps, &tess, self.cfg.aggregate.mode).map_err(&err)?;
        let dir = self.create(STATS_DIR)?;
        write_stats(&dir.join(STATS_FILE), &stats, None).map_err(&err)?;

        let volume = self.volume(Stage::Aggregate)?;
        let raw_names = self.cfg.scatter_raw_fields();
        let raw = raw_names
            .iter()
            .map(|n| load_field(&volume, n))
            .collect::<scaleglyph::Result<Vec<_>>>()
            .map_err(&err)?;
        let mut columns: Vec<ScatterColumn> = raw_names
            .iter()
            .map(|f| ScatterColumn::MeanRaw { field: f.clone() })
            .collect();
        for f in &self.cfg.fields {
            for bin in 0..stats.bin_count() {
                columns.push(ScatterColumn::Stat {
                    field: f.clone(),
                    bin,
                });
            }
        }
        let table = scatter_samples(&tess, &stats, &raw, &columns).map_err(&err)?;
        table.save(&dir.join(SCATTER_FILE)).map_err(&err)?;
        Ok(StageProducts {
            outputs: vec![
                Path::new(STATS_DIR).join(STATS_FILE),
                Path::new(STATS_DIR).join("stats.json"),
                Path::new(STATS_DIR).join(SCATTER_FILE),
            ],
            warnings: Vec::new(),
        })
    }

    fn pack(&self) -> Result<StageProducts> {
        let err = stage_err(Stage::Pack);
        let tess = read_tessellation(&self.dir.join(REGIONS_DIR)).map_err(&err)?;
        let stats = read_stats(&self.dir.join(STATS_DIR).join(STATS_FILE)).map_err(&err)?;
        let fields = self.cfg.glyph_fields();
        let datasets = pack_glyphs(&tess, &stats, &fields).map_err(&err)?;
        let dir = self.create(GLYPHS_DIR)?;
        let mut outputs = Vec::new();
        let mut bands = Vec::new();
        for d in &datasets {
            write_glyphs(&dir, d).map_err(&err)?;
            let file = Path::new(GLYPHS_DIR).join(glyph_file_name(d.band));
            outputs.push(file.clone());
            outputs.push(file.with_extension("json"));
            bands.push(BandEntry {
                band: d.band,
                lower: tess.band_isovalues[d.band as usize],
                upper: tess.band_isovalues[d.band as usize + 1],
                region_count: d.region_count(),
                glyphs: file,
            });
        }
        let mut meshes = BTreeMap::new();
        meshes.insert(
            self.cfg.surface.name.clone(),
            Path::new(SURFACE_DIR).join(mesh_file_name(&self.cfg.surface.name)),
        );
        let entry = DatasetEntry {
            id: self.cfg.dataset_id.clone(),
            grid: tess.grid.clone(),
            fields: fields.clone(),
            units: fields
                .iter()
                .map(|f| stats.field_index(f).map(|i| stats.units[i].clone()).unwrap_or_default())
                .collect(),
            bin_edges: stats.bin_edges.clone(),
            bin_labels: datasets.first().map(|d| d.bin_labels()).unwrap_or_default(),
            edge_lengths: stats.edge_lengths(),
            delta_j: stats.delta_j.clone(),
            mode: stats.mode,
            region_count: tess.regions.len(),
            stat_bytes_per_field_bin: stats.bytes_per_field_bin(),
            bands,
            meshes,
            stats: Path::new(STATS_DIR).join(STATS_FILE),
            scatter: Path::new(STATS_DIR).join(SCATTER_FILE),
            regions: Path::new(REGIONS_DIR).join(REGION_TABLE_FILE),
            volume_manifest: Path::new(VOLUME_DIR).join("manifest.json"),
            provenance: PathBuf::from(PROVENANCE_FILE),
        };
        write_json(&self.dir.join(DATASET_FILE), &entry)?;
        outputs.push(PathBuf::from(DATASET_FILE));
        Ok(StageProducts {
            outputs,
            warnings: Vec::new(),
        })
    }
}

/// Runs `stages` in pipeline order; earlier stages not listed are still
/// checked so that keys chain correctly, and run if their outputs are stale.
pub fn run_stages(cfg: &PipelineConfig, last: Stage) -> Result<PipelineReport> {
    let cfg = cfg.resolved()?;
    let dir = cfg.dataset_dir();
    fs::create_dir_all(&dir).map_err(|e| ServiceError::io(&dir, e))?;
    let runner = Runner { cfg: &cfg, dir: dir.clone() };
    let mut upstream = String::new();
    let mut outcomes = Vec::new();
    let mut records = BTreeMap::new();
    for stage in Stage::ALL {
        let (outcome, record) = runner.run(stage, &upstream)?;
        upstream = outcome.key.clone();
        outcomes.push(outcome);
        records.insert(stage.name().to_string(), record);
        if stage == last {
            break;
        }
    }
    let provenance = Provenance {
        config: cfg.clone(),
        stages: records,
    };
    write_json(&dir.join(PROVENANCE_FILE), &provenance)?;
    Ok(PipelineReport {
        dataset_dir: dir,
        outcomes,
    })
}

pub fn run_pipeline(cfg: &PipelineConfig) -> Result<PipelineReport> {
    run_stages(cfg, Stage::Pack)
}

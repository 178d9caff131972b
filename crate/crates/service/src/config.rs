//! Pipeline configuration document.
//!
//! Every optional key is filled in by [`PipelineConfig::resolved`], and the
//! resolved document is what provenance records.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use scaleglyph::lsrcvt::BandSpec;
use scaleglyph::specfilter::{WindowProfile, DEFAULT_SMOOTHNESS};
use scaleglyph::stats::{AggregationMode, DerivedFieldRecipe};
use scaleglyph::volume::{BlockLayout, VolumeManifest};

use crate::error::{Result, ServiceError};

fn default_output_dir() -> PathBuf {
    PathBuf::from("artifacts")
}

fn one() -> usize {
    1
}

fn yes() -> bool {
    true
}

fn default_smoothness() -> f64 {
    DEFAULT_SMOOTHNESS
}

fn default_surface_name() -> String {
    "feature".into()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PipelineConfig {
    pub dataset_id: String,
    /// Input volume manifest; relative paths resolve against the config file.
    pub manifest: PathBuf,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
    /// Fields to decompose and aggregate, in glyph order.
    pub fields: Vec<String>,
    #[serde(default)]
    pub preprocess: PreprocessConfig,
    pub decompose: DecomposeConfig,
    pub surface: SurfaceConfig,
    #[serde(default)]
    pub distance: DistanceConfig,
    pub tessellate: BandSpec,
    #[serde(default)]
    pub aggregate: AggregateConfig,
    #[serde(default)]
    pub pack: PackConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PreprocessConfig {
    #[serde(default = "one")]
    pub downsample: usize,
    #[serde(default)]
    pub derived: Vec<DerivedFieldRecipe>,
}

impl Default for PreprocessConfig {
    fn default() -> Self {
        PreprocessConfig {
            downsample: 1,
            derived: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DecomposeMethod {
    /// Mirror-extend, decompose, crop.
    #[default]
    Mirror,
    /// Decompose the field as if periodic.
    Periodic,
    /// Overlapping tapered blocks.
    Blocked,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DecomposeConfig {
    pub bin_edges: Vec<u32>,
    #[serde(default = "yes")]
    pub include_j0: bool,
    #[serde(default)]
    pub profile: WindowProfile,
    #[serde(default = "default_smoothness")]
    pub smoothness: f64,
    #[serde(default)]
    pub method: DecomposeMethod,
    #[serde(default)]
    pub blocks: Option<BlockLayout>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SurfaceConfig {
    pub field: String,
    pub isovalue: f64,
    #[serde(default = "default_surface_name")]
    pub name: String,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DistanceConfig {
    /// Defaults to the outermost band isovalue plus one voxel diagonal.
    #[serde(default)]
    pub max_band: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AggregateConfig {
    #[serde(default)]
    pub mode: AggregationMode,
    /// Raw fields whose per-region means become scatter columns; defaults
    /// to the decomposed fields plus the surface field.
    #[serde(default)]
    pub scatter_raw: Option<Vec<String>>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PackConfig {
    /// Glyph field order; defaults to `fields`.
    #[serde(default)]
    pub fields: Option<Vec<String>>,
}

impl PipelineConfig {
    pub fn from_json(text: &str, base_dir: &Path) -> Result<Self> {
        let mut cfg: PipelineConfig =
            serde_json::from_str(text).map_err(|e| ServiceError::Config(e.to_string()))?;
        cfg.rebase(base_dir);
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| ServiceError::Config(format!("{}: {e}", path.display())))?;
        PipelineConfig::from_json(&text, path.parent().unwrap_or(Path::new(".")))
    }

    fn rebase(&mut self, base: &Path) {
        if self.manifest.is_relative() {
            self.manifest = base.join(&self.manifest);
        }
        if self.output_dir.is_relative() {
            self.output_dir = base.join(&self.output_dir);
        }
    }

    /// Applies `key.path=json-value` overrides, e.g. `tessellate.seed=7`.
    pub fn with_overrides(&self, overrides: &[String]) -> Result<Self> {
        let mut doc = serde_json::to_value(self).map_err(|e| ServiceError::Config(e.to_string()))?;
        for item in overrides {
            let (key, raw) = item
                .split_once('=')
                .ok_or_else(|| ServiceError::Config(format!("override `{item}` is not key=value")))?;
            let value = serde_json::from_str(raw).unwrap_or_else(|_| serde_json::Value::String(raw.into()));
            let mut slot = &mut doc;
            for part in key.split('.') {
                let obj = slot
                    .as_object_mut()
                    .ok_or_else(|| ServiceError::Config(format!("`{key}` does not name a config key")))?;
                slot = obj.entry(part.to_string()).or_insert(serde_json::Value::Null);
            }
            *slot = value;
        }
        serde_json::from_value(doc).map_err(|e| ServiceError::Config(e.to_string()))
    }

    pub fn dataset_dir(&self) -> PathBuf {
        self.output_dir.join(&self.dataset_id)
    }

    pub fn glyph_fields(&self) -> Vec<String> {
        self.pack.fields.clone().unwrap_or_else(|| self.fields.clone())
    }

    pub fn scatter_raw_fields(&self) -> Vec<String> {
        self.aggregate.scatter_raw.clone().unwrap_or_else(|| {
            let mut names = self.fields.clone();
            if !names.contains(&self.surface.field) {
                names.push(self.surface.field.clone());
            }
            names
        })
    }

    /// Fields the preprocess stage must materialize.
    pub fn required_fields(&self) -> Vec<String> {
        let mut names: Vec<String> = Vec::new();
        for n in self
            .fields
            .iter()
            .chain(std::iter::once(&self.surface.field))
            .chain(self.scatter_raw_fields().iter())
        {
            if !names.contains(n) {
                names.push(n.clone());
            }
        }
        names
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(ServiceError::Config(m));
        if self.dataset_id.is_empty() || self.dataset_id.contains(['/', '\\']) {
            return bad(format!("dataset_id `{}` is not a plain name", self.dataset_id));
        }
        if self.fields.is_empty() {
            return bad("no fields to decompose".into());
        }
        if self.preprocess.downsample < 1 {
            return bad("downsample factor must be at least 1".into());
        }
        if self.decompose.method == DecomposeMethod::Blocked && self.decompose.blocks.is_none() {
            return bad("blocked decomposition needs `decompose.blocks`".into());
        }
        if let Some(b) = self.distance.max_band {
            if !(b > 0.0) {
                return bad("distance.max_band must be positive".into());
            }
        }
        for f in self.glyph_fields() {
            if !self.fields.contains(&f) {
                return bad(format!("pack field `{f}` is not decomposed"));
            }
        }
        self.tessellate
            .validate()
            .map_err(|e| ServiceError::Config(e.to_string()))
    }

    /// Copy with every default made explicit. Needs the input manifest to
    /// size the default distance band.
    pub fn resolved(&self) -> Result<Self> {
        self.validate()?;
        let mut out = self.clone();
        if out.distance.max_band.is_none() {
            let manifest = VolumeManifest::load(&self.manifest).map_err(|e| ServiceError::Config(e.to_string()))?;
            let f = self.preprocess.downsample as f64;
            let diag = manifest.grid.spacing.iter().map(|s| (s * f).powi(2)).sum::<f64>().sqrt();
            let outer = self
                .tessellate
                .isovalues
                .iter()
                .fold(0.0f64, |m, c| m.max(c.abs()));
            out.distance.max_band = Some(outer + diag);
        }
        if out.aggregate.scatter_raw.is_none() {
            out.aggregate.scatter_raw = Some(self.scatter_raw_fields());
        }
        if out.pack.fields.is_none() {
            out.pack.fields = Some(self.glyph_fields());
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"{
        "dataset_id": "demo",
        "manifest": "volume.json",
        "fields": ["T"],
        "decompose": {"bin_edges": [0, 2, 3, 4]},
        "surface": {"field": "T", "isovalue": 0.5},
        "tessellate": {"isovalues": [-2.0, 0.0, 2.0], "density": 0.05}
    }"#;

    #[test]
    fn defaults_fill_in() {
        let cfg = PipelineConfig::from_json(MINIMAL, Path::new("/data")).unwrap();
        assert_eq!(cfg.manifest, PathBuf::from("/data/volume.json"));
        assert_eq!(cfg.output_dir, PathBuf::from("/data/artifacts"));
        assert_eq!(cfg.preprocess.downsample, 1);
        assert!(cfg.decompose.include_j0);
        assert_eq!(cfg.decompose.method, DecomposeMethod::Mirror);
        assert_eq!(cfg.tessellate.max_iters, 50);
        assert_eq!(cfg.surface.name, "feature");
        assert_eq!(cfg.scatter_raw_fields(), vec!["T".to_string()]);
        cfg.validate().unwrap();
    }

    #[test]
    fn unknown_keys_rejected() {
        let text = MINIMAL.replace("\"fields\"", "\"feilds\"");
        assert!(matches!(
            PipelineConfig::from_json(&text, Path::new(".")),
            Err(ServiceError::Config(_))
        ));
    }

    #[test]
    fn overrides_reach_nested_keys() {
        let cfg = PipelineConfig::from_json(MINIMAL, Path::new("/data")).unwrap();
        let out = cfg
            .with_overrides(&["tessellate.seed=7".into(), "surface.name=flame".into()])
            .unwrap();
        assert_eq!(out.tessellate.seed, 7);
        assert_eq!(out.surface.name, "flame");
        assert!(cfg.with_overrides(&["nokey".into()]).is_err());
    }

    #[test]
    fn blocked_needs_layout() {
        let mut cfg = PipelineConfig::from_json(MINIMAL, Path::new("/data")).unwrap();
        cfg.decompose.method = DecomposeMethod::Blocked;
        assert!(cfg.validate().is_err());
    }
}

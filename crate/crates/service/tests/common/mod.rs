#![allow(dead_code)]

use std::path::{Path, PathBuf};

use scaleglyph::volume::{write_raw_f32, FieldEntry, VolumeManifest, ENCODING_F32_LE};
use scaleglyph::Grid3;
use scaleglyph_service::PipelineConfig;

pub const N: usize = 32;

/// Temperature-like bump plus a wavy second field on a 32^3 grid.
pub fn write_synthetic_volume(dir: &Path) -> PathBuf {
    let grid = Grid3::new([N, N, N], [0.5; 3], [0.0; 3]).unwrap();
    let mut temp = Vec::with_capacity(grid.len());
    let mut wave = Vec::with_capacity(grid.len());
    for v in 0..grid.len() {
        let [i, j, k] = grid.coords(v);
        let d = [i as f64 - 15.3, j as f64 - 16.2, k as f64 - 15.7];
        let r2 = d[0] * d[0] + 0.8 * d[1] * d[1] + d[2] * d[2];
        temp.push(800.0 + 1600.0 * (-r2 / (2.0 * 7.0 * 7.0)).exp());
        let x = i as f64 * std::f64::consts::TAU / N as f64;
        let y = j as f64 * std::f64::consts::TAU / N as f64;
        wave.push((2.0 * x).sin() * (y).cos() + 0.3 * (7.0 * x + 3.0 * y).sin());
    }
    write_raw_f32(&dir.join("T.raw"), &temp).unwrap();
    write_raw_f32(&dir.join("u.raw"), &wave).unwrap();
    let manifest = VolumeManifest {
        grid,
        fields: vec![
            FieldEntry {
                name: "T".into(),
                units: "K".into(),
                path: "T.raw".into(),
                encoding: ENCODING_F32_LE.into(),
            },
            FieldEntry {
                name: "u".into(),
                units: "m/s".into(),
                path: "u.raw".into(),
                encoding: ENCODING_F32_LE.into(),
            },
        ],
        provenance: Default::default(),
        base_dir: dir.to_path_buf(),
    };
    let path = dir.join("volume.json");
    manifest.save(&path).unwrap();
    path
}

pub fn synthetic_config(dir: &Path) -> PipelineConfig {
    write_synthetic_volume(dir);
    let text = r#"{
        "dataset_id": "synthetic",
        "manifest": "volume.json",
        "fields": ["T", "u"],
        "decompose": {"bin_edges": [0, 2, 3, 4]},
        "surface": {"field": "T", "isovalue": 1700.0, "name": "flame"},
        "tessellate": {"isovalues": [-2.0, 0.0, 2.0], "density": 0.02, "seed": 11}
    }"#;
    PipelineConfig::from_json(text, dir).unwrap()
}

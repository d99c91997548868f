use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::imagecore::{write_exr, write_jpeg};
use crate::postfx::{build_training_pair, shared_tonemap_quintuple, PostParams};
use crate::render::{render_quintuple, RenderMode, RenderStats};
use crate::rng::derive_seed;
use crate::scene::{make_scene, AssetRegistry};
use crate::{Error, Result};

use super::{sample_parameters, SampledParameters, SamplerConfig};

/// Caption attached to every training pair.
pub const PROMPT: &str = "This set of three images showcases an image decomposition task; [IMAGE1] captures an image looking through a transparent glass, both the scene behind the glass and the reflection of the glass could be seen; [IMAGE2] displays the transmission of glass with reflection removed; [IMAGE3] shows only the reflection of glass without transmission; [IMAGE1] could be decomposed to [IMAGE2] and [IMAGE3].";

pub const MANIFEST_NAME: &str = "manifest.jsonl";
pub const META_NAME: &str = "meta.json";

/// Files of one layer, relative to the sample directory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayerFiles {
    pub mode: RenderMode,
    pub exr: String,
    pub jpg: String,
    pub stats: RenderStats,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleRecord {
    pub sample_id: u64,
    pub params: SampledParameters,
    pub post: PostParams,
    /// In `I, T, B, R, MR` order.
    pub layers: Vec<LayerFiles>,
    pub composite: String,
    pub control: String,
}

impl SampleRecord {
    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        Ok(serde_json::from_slice(&fs::read(path)?)?)
    }
}

/// One manifest line. Paths are relative to the dataset root.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub composite: String,
    pub control: String,
    pub caption: String,
}

#[derive(Debug)]
pub struct DatasetSummary {
    pub manifest: Vec<ManifestEntry>,
    pub records: Vec<SampleRecord>,
    /// Failed sample indices with the error text.
    pub failures: Vec<(u64, String)>,
}

pub fn sample_dir_name(sample_id: u64) -> String {
    format!("sample_{sample_id:05}")
}

/// Render, tonemap and write one sample into `out_dir`.
pub fn generate_sample(
    sample_id: u64,
    params: &SampledParameters,
    assets: &AssetRegistry,
    cfg: &SamplerConfig,
    out_dir: &Path,
) -> Result<SampleRecord> {
    let scene = make_scene(params, assets)?;
    let mut settings = cfg.render.clone();
    settings.seed = params.seed;
    let layers = render_quintuple(&scene, &settings)?;

    let order = RenderMode::ALL;
    let linear = order.map(|m| &layers.get(m).image);
    let (ldr, post) = shared_tonemap_quintuple(linear, params.jpeg_quality)?;

    fs::create_dir_all(out_dir)?;
    let mut files = Vec::with_capacity(5);
    for (k, mode) in order.into_iter().enumerate() {
        let exr = format!("{}.exr", mode.label());
        let jpg = format!("{}.jpg", mode.label());
        write_exr(linear[k], out_dir.join(&exr))?;
        write_jpeg(&ldr[k], params.jpeg_quality, out_dir.join(&jpg))?;
        files.push(LayerFiles {
            mode,
            exr,
            jpg,
            stats: layers.get(mode).stats.clone(),
        });
    }

    let [i, t, _, r, _] = &ldr;
    let (composite, control) = build_training_pair(i, t, r)?;
    write_jpeg(&composite, params.jpeg_quality, out_dir.join("composite.jpg"))?;
    write_jpeg(&control, params.jpeg_quality, out_dir.join("control.jpg"))?;

    let record = SampleRecord {
        sample_id,
        params: params.clone(),
        post,
        layers: files,
        composite: "composite.jpg".into(),
        control: "control.jpg".into(),
    };
    fs::write(out_dir.join(META_NAME), serde_json::to_vec_pretty(&record)?)?;
    Ok(record)
}

/// Generate `count` samples under `out_dir` with up to `parallelism`
/// samples in flight, then write the manifest in index order.
pub fn generate_dataset(
    count: u64,
    base_seed: u64,
    assets: &AssetRegistry,
    cfg: &SamplerConfig,
    out_dir: &Path,
    parallelism: usize,
) -> Result<DatasetSummary> {
    if count == 0 {
        return Err(Error::InvalidArgument("count must be >= 1".into()));
    }
    cfg.validate()?;
    fs::create_dir_all(out_dir)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(parallelism.max(1))
        .build()
        .map_err(|e| Error::InvalidArgument(e.to_string()))?;

    let run = |i: u64| -> Result<SampleRecord> {
        let params = sample_parameters(derive_seed(base_seed, i), assets, cfg)?;
        let dir = out_dir.join(sample_dir_name(i));
        let res = generate_sample(i, &params, assets, cfg, &dir);
        if res.is_err() && dir.exists() {
            let _ = fs::remove_dir_all(&dir);
        }
        res
    };
    let results: Vec<Result<SampleRecord>> = pool.install(|| (0..count).into_par_iter().map(run).collect());

    let mut summary = DatasetSummary {
        manifest: Vec::new(),
        records: Vec::new(),
        failures: Vec::new(),
    };
    for (i, res) in (0..count).zip(results) {
        match res {
            Ok(rec) => {
                let dir = sample_dir_name(i);
                summary.manifest.push(ManifestEntry {
                    composite: format!("{dir}/{}", rec.composite),
                    control: format!("{dir}/{}", rec.control),
                    caption: PROMPT.to_owned(),
                });
                summary.records.push(rec);
            }
            Err(e) => {
                log::warn!("sample {i} failed: {e}");
                summary.failures.push((i, e.to_string()));
            }
        }
    }
    if summary.records.is_empty() {
        return Err(Error::AllSamplesFailed(count as usize));
    }

    let mut out = fs::File::create(out_dir.join(MANIFEST_NAME))?;
    for entry in &summary.manifest {
        serde_json::to_writer(&mut out, entry)?;
        out.write_all(b"\n")?;
    }
    Ok(summary)
}

/// Parse a JSON-lines manifest.
pub fn read_manifest(path: impl AsRef<Path>) -> Result<Vec<ManifestEntry>> {
    let text = fs::read_to_string(path)?;
    text.lines()
        .filter(|l| !l.trim().is_empty())
        .map(|l| Ok(serde_json::from_str(l)?))
        .collect()
}

/// Every file name a complete sample directory contains.
pub fn expected_sample_files() -> Vec<PathBuf> {
    let mut v: Vec<PathBuf> = RenderMode::ALL
        .iter()
        .flat_map(|m| ["exr", "jpg"].map(|e| PathBuf::from(format!("{}.{e}", m.label()))))
        .collect();
    v.extend(["composite.jpg", "control.jpg", META_NAME].map(PathBuf::from));
    v.sort();
    v
}

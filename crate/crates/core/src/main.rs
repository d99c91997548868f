use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Parser, Subcommand};

use glass_synth::dataset::{generate_dataset, verify_oracle, OracleSettings, SamplerConfig};
use glass_synth::imagecore::{write_exr, write_jpeg, write_png};
use glass_synth::metrics::{evaluate_dirs, format_table, MaskSettings, MaskSource};
use glass_synth::postfx::{compute_awb_gains, compute_exposure, tonemap, PostParams};
use glass_synth::render::{render, RenderMode, RenderSettings};
use glass_synth::scene::{AssetRegistry, SceneDescription};

#[derive(Parser)]
#[command(
    name = "glass-synth",
    version,
    about = "Synthetic glass reflection dataset generator"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Render one layer of a scene description.
    Render {
        #[arg(long)]
        scene: PathBuf,
        #[arg(long, default_value = "I")]
        mode: RenderMode,
        /// `.exr` keeps linear radiance; `.jpg` and `.png` are tonemapped.
        #[arg(long)]
        out: PathBuf,
        /// Fixed samples per pixel instead of adaptive sampling.
        #[arg(long)]
        spp: Option<u32>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Render a dataset of randomized samples.
    Dataset {
        #[arg(long)]
        count: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Directory with `env/` and `ldr/` subdirectories.
        #[arg(long)]
        assets: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Samples rendered concurrently.
        #[arg(long, default_value_t = 1)]
        parallel: usize,
        /// Sampler configuration JSON.
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Check the renderer against closed-form glass optics.
    VerifyOracle {
        #[arg(long, default_value_t = 1024)]
        spp: u32,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 64)]
        size: usize,
        /// Also write the report as JSON.
        #[arg(long)]
        json: Option<PathBuf>,
    },
    /// PSNR and SSIM of predictions against ground truth, matched by file name.
    Metrics {
        #[arg(long)]
        pred: PathBuf,
        #[arg(long)]
        gt: PathBuf,
        /// Glass-covered inputs; enables regional metrics.
        #[arg(long)]
        input: Option<PathBuf>,
        /// Build the reflection mask from the prediction instead of the ground truth.
        #[arg(long)]
        mask_from_io: bool,
        #[arg(long, default_value_t = 0.05)]
        threshold: f64,
        #[arg(long, default_value_t = 2)]
        dilate: usize,
    },
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn run(cli: Cli) -> anyhow::Result<ExitCode> {
    match cli.command {
        Command::Render {
            scene,
            mode,
            out,
            spp,
            seed,
        } => {
            let scene = SceneDescription::from_file(&scene).with_context(|| format!("loading {}", scene.display()))?;
            let settings = match spp {
                Some(n) => RenderSettings::fixed(n, seed),
                None => RenderSettings {
                    seed,
                    ..RenderSettings::default()
                },
            };
            let img = render(&scene, mode, &settings)?;
            log::info!(
                "{mode}: {} rays, {:.1} spp, {:.2} s",
                img.stats.rays,
                img.stats.mean_spp,
                img.stats.wall_seconds
            );
            write_image(&img.image, &out)?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Dataset {
            count,
            seed,
            assets,
            out,
            parallel,
            config,
        } => {
            let cfg = match config {
                Some(p) => SamplerConfig::from_json_file(&p).with_context(|| format!("loading {}", p.display()))?,
                None => SamplerConfig::default(),
            };
            let registry = AssetRegistry::scan(&assets)?;
            let summary = generate_dataset(count, seed, &registry, &cfg, &out, parallel)?;
            for (i, e) in &summary.failures {
                eprintln!("sample {i} failed: {e}");
            }
            println!(
                "{} of {count} samples written to {}",
                summary.records.len(),
                out.display()
            );
            Ok(if summary.failures.is_empty() {
                ExitCode::SUCCESS
            } else {
                ExitCode::FAILURE
            })
        }
        Command::VerifyOracle { spp, seed, size, json } => {
            if size == 0 {
                bail!("size must be > 0");
            }
            let report = verify_oracle(&OracleSettings { spp, seed, size })?;
            let width = report.checks.iter().map(|c| c.name.len()).max().unwrap_or(0);
            for c in &report.checks {
                let verdict = match c.tolerance {
                    None => "INFO".to_owned(),
                    Some(t) if c.passed => format!("PASS (tol {t})"),
                    Some(t) => format!("FAIL (tol {t})"),
                };
                println!(
                    "{:<width$}  measured {:>10.6}  expected {:>10.6}  error {:>9.6}  {verdict}",
                    c.name, c.measured, c.expected, c.error
                );
            }
            if let Some(path) = json {
                std::fs::write(path, serde_json::to_vec_pretty(&report)?)?;
            }
            Ok(if report.all_passed() {
                ExitCode::SUCCESS
            } else {
                ExitCode::FAILURE
            })
        }
        Command::Metrics {
            pred,
            gt,
            input,
            mask_from_io,
            threshold,
            dilate,
        } => {
            let mask = MaskSettings {
                source: if mask_from_io {
                    MaskSource::Prediction
                } else {
                    MaskSource::GroundTruth
                },
                threshold,
                dilation: dilate,
            };
            let reports = evaluate_dirs(&pred, &gt, input.as_deref(), &mask)?;
            if reports.is_empty() {
                bail!("no matching image pairs in {} and {}", pred.display(), gt.display());
            }
            let doc = serde_json::json!({
                "mask": input.as_ref().map(|_| &mask),
                "reports": reports,
            });
            println!("{}", serde_json::to_string_pretty(&doc)?);
            eprint!("{}", format_table(&reports));
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn write_image(img: &glass_synth::imagecore::RadianceImage, out: &Path) -> anyhow::Result<()> {
    let ext = out
        .extension()
        .and_then(|e| e.to_str())
        .map(str::to_ascii_lowercase)
        .unwrap_or_default();
    if ext == "exr" {
        return Ok(write_exr(img, out)?);
    }
    let params = PostParams {
        exposure: compute_exposure(img),
        awb_gains: compute_awb_gains(img).unwrap_or([1.0; 3]),
        ..PostParams::identity(95)
    };
    let (ldr, _) = tonemap(img, &params);
    match ext.as_str() {
        "jpg" | "jpeg" => write_jpeg(&ldr, params.jpeg_quality, out)?,
        "png" => write_png(&ldr, out)?,
        _ => bail!("unsupported output extension `{ext}`"),
    }
    Ok(())
}

//! Full-reference image metrics and the reflection-region protocol.
//!
//! Images are compared as 8-bit values scaled to `[0, 1]`. SSIM is single
//! scale with an 11x11 Gaussian window (sigma 1.5), `K1 = 0.01`,
//! `K2 = 0.03`, evaluated on fully contained windows and averaged over
//! windows and channels.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::imagecore::{load_ldr, LdrImage};
use crate::{Error, Result};

const WINDOW: usize = 11;
const SIGMA: f64 = 1.5;
const C1: f64 = 0.01 * 0.01;
const C2: f64 = 0.03 * 0.03;

pub const DEFAULT_MASK_THRESHOLD: f64 = 0.05;
pub const DEFAULT_DILATION: usize = 2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Metric {
    Psnr,
    Ssim,
}

fn same_dims(a: &LdrImage, b: &LdrImage) -> Result<()> {
    if (a.width(), a.height()) != (b.width(), b.height()) {
        return Err(Error::DimensionMismatch(format!(
            "{}x{} vs {}x{}",
            a.width(),
            a.height(),
            b.width(),
            b.height()
        )));
    }
    Ok(())
}

fn psnr_from_mse(mse: f64) -> f64 {
    if mse == 0.0 {
        f64::INFINITY
    } else {
        10.0 * (1.0 / mse).log10()
    }
}

/// Peak signal-to-noise ratio in dB; `f64::INFINITY` for identical images.
pub fn psnr(a: &LdrImage, b: &LdrImage) -> Result<f64> {
    same_dims(a, b)?;
    let sq: f64 = a
        .data()
        .iter()
        .zip(b.data())
        .map(|(&x, &y)| {
            let d = (x as f64 - y as f64) / 255.0;
            d * d
        })
        .sum();
    Ok(psnr_from_mse(sq / a.data().len().max(1) as f64))
}

fn gaussian_kernel() -> [f64; WINDOW] {
    let mut k = [0.0; WINDOW];
    let c = (WINDOW / 2) as f64;
    for (i, v) in k.iter_mut().enumerate() {
        let d = i as f64 - c;
        *v = (-d * d / (2.0 * SIGMA * SIGMA)).exp();
    }
    let s: f64 = k.iter().sum();
    k.map(|v| v / s)
}

/// Local SSIM of one channel at every valid window, row major over
/// `(w - 10) x (h - 10)` window positions.
fn ssim_channel(a: &[f64], b: &[f64], w: usize, h: usize) -> Vec<f64> {
    let k = gaussian_kernel();
    let (ow, oh) = (w + 1 - WINDOW, h + 1 - WINDOW);
    // horizontal pass over the five moments
    let mut hz = vec![[0.0f64; 5]; ow * h];
    for y in 0..h {
        for x in 0..ow {
            let mut acc = [0.0; 5];
            for (i, &kv) in k.iter().enumerate() {
                let p = y * w + x + i;
                let (va, vb) = (a[p], b[p]);
                acc[0] += kv * va;
                acc[1] += kv * vb;
                acc[2] += kv * va * va;
                acc[3] += kv * vb * vb;
                acc[4] += kv * va * vb;
            }
            hz[y * ow + x] = acc;
        }
    }
    let mut out = Vec::with_capacity(ow * oh);
    for y in 0..oh {
        for x in 0..ow {
            let mut m = [0.0; 5];
            for (i, &kv) in k.iter().enumerate() {
                let row = &hz[(y + i) * ow + x];
                for j in 0..5 {
                    m[j] += kv * row[j];
                }
            }
            let (mu_a, mu_b) = (m[0], m[1]);
            let var_a = m[2] - mu_a * mu_a;
            let var_b = m[3] - mu_b * mu_b;
            let cov = m[4] - mu_a * mu_b;
            out.push(
                ((2.0 * mu_a * mu_b + C1) * (2.0 * cov + C2))
                    / ((mu_a * mu_a + mu_b * mu_b + C1) * (var_a + var_b + C2)),
            );
        }
    }
    out
}

fn planes(img: &LdrImage) -> [Vec<f64>; 3] {
    let unit = img.to_unit_f64();
    std::array::from_fn(|c| unit.iter().skip(c).step_by(3).copied().collect())
}

/// Per-window SSIM averaged over channels.
fn ssim_map(a: &LdrImage, b: &LdrImage) -> Result<Vec<f64>> {
    same_dims(a, b)?;
    let (w, h) = (a.width(), a.height());
    if w < WINDOW || h < WINDOW {
        return Err(Error::InvalidArgument(format!(
            "SSIM needs images of at least {WINDOW}x{WINDOW}, got {w}x{h}"
        )));
    }
    let (pa, pb) = (planes(a), planes(b));
    let maps: Vec<Vec<f64>> = (0..3).map(|c| ssim_channel(&pa[c], &pb[c], w, h)).collect();
    Ok((0..maps[0].len())
        .map(|i| (maps[0][i] + maps[1][i] + maps[2][i]) / 3.0)
        .collect())
}

pub fn ssim(a: &LdrImage, b: &LdrImage) -> Result<f64> {
    let map = ssim_map(a, b)?;
    Ok(map.iter().sum::<f64>() / map.len() as f64)
}

/// Binary pixel mask.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Mask {
    pub width: usize,
    pub height: usize,
    pub data: Vec<bool>,
}

impl Mask {
    pub fn full(width: usize, height: usize) -> Self {
        Self {
            width,
            height,
            data: vec![true; width * height],
        }
    }

    pub fn get(&self, x: usize, y: usize) -> bool {
        self.data[y * self.width + x]
    }

    pub fn coverage(&self) -> f64 {
        self.data.iter().filter(|&&m| m).count() as f64 / self.data.len().max(1) as f64
    }

    /// Square dilation of the given radius, clipped at the borders.
    pub fn dilate(&self, radius: usize) -> Mask {
        let (w, h) = (self.width, self.height);
        // separable max filter
        let mut rows = vec![false; w * h];
        for y in 0..h {
            for x in 0..w {
                let lo = x.saturating_sub(radius);
                let hi = (x + radius).min(w - 1);
                rows[y * w + x] = (lo..=hi).any(|i| self.data[y * w + i]);
            }
        }
        let mut data = vec![false; w * h];
        for y in 0..h {
            for x in 0..w {
                let lo = y.saturating_sub(radius);
                let hi = (y + radius).min(h - 1);
                data[y * w + x] = (lo..=hi).any(|j| rows[j * w + x]);
            }
        }
        Mask {
            width: w,
            height: h,
            data,
        }
    }
}

/// Pixels where the channel-mean absolute difference of the input and a
/// reflection-free image exceeds `threshold`, dilated by `radius`.
pub fn reflection_mask(input: &LdrImage, reflection_free: &LdrImage, threshold: f64, radius: usize) -> Result<Mask> {
    same_dims(input, reflection_free)?;
    let data = input
        .data()
        .chunks_exact(3)
        .zip(reflection_free.data().chunks_exact(3))
        .map(|(p, q)| {
            let d: f64 = (0..3).map(|c| (p[c] as f64 - q[c] as f64).abs() / 255.0).sum::<f64>() / 3.0;
            d > threshold
        })
        .collect();
    let raw = Mask {
        width: input.width(),
        height: input.height(),
        data,
    };
    Ok(raw.dilate(radius))
}

/// `metric` restricted to `mask`: PSNR over masked pixels, SSIM over
/// windows whose center pixel is masked.
pub fn regional_metric(metric: Metric, a: &LdrImage, b: &LdrImage, mask: &Mask) -> Result<f64> {
    same_dims(a, b)?;
    if (mask.width, mask.height) != (a.width(), a.height()) {
        return Err(Error::DimensionMismatch("mask size differs from image".into()));
    }
    if !mask.data.iter().any(|&m| m) {
        return Err(Error::EmptyMask);
    }
    match metric {
        Metric::Psnr => {
            let mut sq = 0.0;
            let mut n = 0usize;
            for (i, px) in a.data().chunks_exact(3).zip(b.data().chunks_exact(3)).enumerate() {
                if mask.data[i] {
                    for c in 0..3 {
                        let d = (px.0[c] as f64 - px.1[c] as f64) / 255.0;
                        sq += d * d;
                    }
                    n += 3;
                }
            }
            Ok(psnr_from_mse(sq / n as f64))
        }
        Metric::Ssim => {
            let map = ssim_map(a, b)?;
            let ow = a.width() + 1 - WINDOW;
            let half = WINDOW / 2;
            let (sum, n) = map
                .iter()
                .enumerate()
                .filter(|(i, _)| mask.get(i % ow + half, i / ow + half))
                .fold((0.0, 0usize), |(s, n), (_, v)| (s + v, n + 1));
            if n == 0 {
                return Err(Error::EmptyMask);
            }
            Ok(sum / n as f64)
        }
    }
}

mod db {
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    #[derive(Serialize, Deserialize)]
    #[serde(untagged)]
    enum Repr {
        Num(f64),
        Text(String),
    }

    pub fn serialize<S: Serializer>(v: &Option<f64>, s: S) -> Result<S::Ok, S::Error> {
        match v {
            Some(x) if x.is_infinite() => Repr::Text("inf".into()).serialize(s),
            Some(x) => Repr::Num(*x).serialize(s),
            None => s.serialize_none(),
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Option<f64>, D::Error> {
        Ok(match Option::<Repr>::deserialize(d)? {
            None => None,
            Some(Repr::Num(x)) => Some(x),
            Some(Repr::Text(t)) if t == "inf" => Some(f64::INFINITY),
            Some(Repr::Text(t)) => return Err(serde::de::Error::custom(format!("bad dB value `{t}`"))),
        })
    }
}

/// Scores of one prediction. PSNR of identical images is serialized as
/// the string `"inf"`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub name: String,
    #[serde(with = "db")]
    pub psnr: Option<f64>,
    pub ssim: f64,
    #[serde(with = "db", default)]
    pub regional_psnr: Option<f64>,
    #[serde(default)]
    pub regional_ssim: Option<f64>,
    #[serde(default)]
    pub mask_coverage: Option<f64>,
}

/// Which transmission image the reflection mask is measured against.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MaskSource {
    GroundTruth,
    Prediction,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MaskSettings {
    pub source: MaskSource,
    pub threshold: f64,
    pub dilation: usize,
}

impl Default for MaskSettings {
    fn default() -> Self {
        Self {
            source: MaskSource::GroundTruth,
            threshold: DEFAULT_MASK_THRESHOLD,
            dilation: DEFAULT_DILATION,
        }
    }
}

pub fn evaluate_pair(
    name: &str,
    pred: &LdrImage,
    gt: &LdrImage,
    input: Option<(&LdrImage, &MaskSettings)>,
) -> Result<MetricReport> {
    let mut report = MetricReport {
        name: name.to_owned(),
        psnr: Some(psnr(pred, gt)?),
        ssim: ssim(pred, gt)?,
        regional_psnr: None,
        regional_ssim: None,
        mask_coverage: None,
    };
    if let Some((input, settings)) = input {
        let reference = match settings.source {
            MaskSource::GroundTruth => gt,
            MaskSource::Prediction => pred,
        };
        let mask = reflection_mask(input, reference, settings.threshold, settings.dilation)?;
        report.mask_coverage = Some(mask.coverage());
        if mask.coverage() > 0.0 {
            report.regional_psnr = Some(regional_metric(Metric::Psnr, pred, gt, &mask)?);
            report.regional_ssim = regional_metric(Metric::Ssim, pred, gt, &mask).ok();
        }
    }
    Ok(report)
}

fn image_names(dir: &Path) -> Result<Vec<String>> {
    let mut names: Vec<String> = std::fs::read_dir(dir)?
        .filter_map(|e| e.ok())
        .map(|e| e.path())
        .filter(|p| {
            matches!(
                p.extension()
                    .and_then(|e| e.to_str())
                    .map(str::to_ascii_lowercase)
                    .as_deref(),
                Some("png" | "jpg" | "jpeg")
            )
        })
        .filter_map(|p| p.file_name().and_then(|n| n.to_str()).map(str::to_owned))
        .collect();
    names.sort();
    Ok(names)
}

/// Score every image in `pred_dir` against the same-named file in
/// `gt_dir`. With `input_dir`, regional scores use the reflection mask.
pub fn evaluate_dirs(
    pred_dir: &Path,
    gt_dir: &Path,
    input_dir: Option<&Path>,
    mask: &MaskSettings,
) -> Result<Vec<MetricReport>> {
    let mut out = Vec::new();
    for name in image_names(pred_dir)? {
        let gt_path = gt_dir.join(&name);
        if !gt_path.exists() {
            log::warn!("no ground truth for {name}, skipped");
            continue;
        }
        let pred = load_ldr(pred_dir.join(&name))?;
        let gt = load_ldr(&gt_path)?;
        let input = match input_dir {
            Some(d) => Some(load_ldr(d.join(&name))?),
            None => None,
        };
        out.push(evaluate_pair(&name, &pred, &gt, input.as_ref().map(|i| (i, mask)))?);
    }
    Ok(out)
}

/// Aligned text table of reports with a mean row.
pub fn format_table(reports: &[MetricReport]) -> String {
    let fmt_db = |v: Option<f64>| match v {
        Some(x) if x.is_infinite() => "inf".to_owned(),
        Some(x) => format!("{x:.3}"),
        None => "-".to_owned(),
    };
    let fmt = |v: Option<f64>| v.map_or("-".to_owned(), |x| format!("{x:.4}"));
    let mut rows: Vec<[String; 6]> = reports
        .iter()
        .map(|r| {
            [
                r.name.clone(),
                fmt_db(r.psnr),
                format!("{:.4}", r.ssim),
                fmt_db(r.regional_psnr),
                fmt(r.regional_ssim),
                fmt(r.mask_coverage),
            ]
        })
        .collect();
    if !reports.is_empty() {
        let finite: Vec<f64> = reports
            .iter()
            .filter_map(|r| r.psnr)
            .filter(|p| p.is_finite())
            .collect();
        let mean_psnr = (!finite.is_empty()).then(|| finite.iter().sum::<f64>() / finite.len() as f64);
        let mean_ssim = reports.iter().map(|r| r.ssim).sum::<f64>() / reports.len() as f64;
        rows.push([
            "mean".into(),
            fmt_db(mean_psnr),
            format!("{mean_ssim:.4}"),
            "".into(),
            "".into(),
            "".into(),
        ]);
    }
    let header = ["image", "psnr", "ssim", "reg_psnr", "reg_ssim", "coverage"].map(String::from);
    let mut widths = header.clone().map(|h| h.len());
    for row in &rows {
        for (w, cell) in widths.iter_mut().zip(row) {
            *w = (*w).max(cell.len());
        }
    }
    let line = |row: &[String; 6]| {
        row.iter()
            .enumerate()
            .map(|(i, c)| {
                if i == 0 {
                    format!("{c:<w$}", w = widths[i])
                } else {
                    format!("{c:>w$}", w = widths[i])
                }
            })
            .collect::<Vec<_>>()
            .join("  ")
    };
    let mut out = line(&header);
    out.push('\n');
    for row in &rows {
        out.push_str(line(row).trim_end());
        out.push('\n');
    }
    out
}

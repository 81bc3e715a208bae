//! Image quality and event restoration metrics.

use crate::error::{Error, Result};
use crate::event::EventStream;
use crate::image::Image;
use crate::voxel::VoxelGrid;

/// SSIM window side.
pub const SSIM_WINDOW: usize = 8;
const SSIM_C1: f64 = 0.01 * 0.01;
const SSIM_C2: f64 = 0.03 * 0.03;

/// Loss weights for event restoration.
///
/// `beta` weighs a feature-space term that needs a learned event encoder;
/// it is carried for completeness and never evaluated here.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetricConfig {
    pub alpha: f64,
    pub beta: f64,
}

impl Default for MetricConfig {
    fn default() -> Self {
        Self {
            alpha: 0.5,
            beta: 0.5,
        }
    }
}

impl MetricConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.alpha.is_finite() && self.alpha >= 0.0 && self.beta.is_finite() && self.beta >= 0.0) {
            return Err(Error::invalid("alpha and beta must be finite and >= 0"));
        }
        Ok(())
    }
}

fn mse(a: &Image, b: &Image) -> Result<f64> {
    a.check_same_dims(b)?;
    let n = a.data().len();
    if n == 0 {
        return Err(Error::invalid("empty image"));
    }
    // Neumaier-compensated sum.
    let (mut sum, mut comp) = (0.0f64, 0.0f64);
    for (x, y) in a.data().iter().zip(b.data()) {
        let v = (x - y) * (x - y);
        let t = sum + v;
        if sum.abs() >= v.abs() {
            comp += (sum - t) + v;
        } else {
            comp += (v - t) + sum;
        }
        sum = t;
    }
    Ok((sum + comp) / n as f64)
}

/// Peak signal-to-noise ratio in dB at peak 1.0; `+inf` for identical images.
pub fn psnr(a: &Image, b: &Image) -> Result<f64> {
    let m = mse(a, b)?;
    if m == 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok(10.0 * (1.0 / m).log10())
}

/// Mean SSIM over all 8x8 windows at stride 1 (uniform window weights,
/// population statistics).
pub fn ssim(a: &Image, b: &Image) -> Result<f64> {
    a.check_same_dims(b)?;
    let (w, h) = a.dims();
    if w < SSIM_WINDOW || h < SSIM_WINDOW {
        return Err(Error::invalid(format!(
            "SSIM needs images of at least {SSIM_WINDOW}x{SSIM_WINDOW}, got {w}x{h}"
        )));
    }
    let n = (SSIM_WINDOW * SSIM_WINDOW) as f64;
    let mut total = 0.0;
    let mut windows = 0usize;
    for y0 in 0..=h - SSIM_WINDOW {
        for x0 in 0..=w - SSIM_WINDOW {
            let (mut sa, mut sb) = (0.0, 0.0);
            for y in y0..y0 + SSIM_WINDOW {
                for x in x0..x0 + SSIM_WINDOW {
                    sa += a.get(x, y);
                    sb += b.get(x, y);
                }
            }
            let (ma, mb) = (sa / n, sb / n);
            let (mut va, mut vb, mut cov) = (0.0, 0.0, 0.0);
            for y in y0..y0 + SSIM_WINDOW {
                for x in x0..x0 + SSIM_WINDOW {
                    let (da, db) = (a.get(x, y) - ma, b.get(x, y) - mb);
                    va += da * da;
                    vb += db * db;
                    cov += da * db;
                }
            }
            let (va, vb, cov) = (va / n, vb / n, cov / n);
            total += ((2.0 * ma * mb + SSIM_C1) * (2.0 * cov + SSIM_C2))
                / ((ma * ma + mb * mb + SSIM_C1) * (va + vb + SSIM_C2));
            windows += 1;
        }
    }
    Ok(total / windows as f64)
}

/// `alpha` times the mean absolute difference between `restored` and
/// `reference`, taken only where `reference` or `degraded` is non-zero.
/// Returns 0 when no such location exists.
pub fn event_l1_response(
    restored: &VoxelGrid,
    reference: &VoxelGrid,
    degraded: &VoxelGrid,
    cfg: &MetricConfig,
) -> Result<f64> {
    cfg.validate()?;
    if restored.shape() != reference.shape() || reference.shape() != degraded.shape() {
        return Err(Error::invalid(format!(
            "voxel shapes differ: {:?}, {:?}, {:?}",
            restored.shape(),
            reference.shape(),
            degraded.shape()
        )));
    }
    let mut sum = 0.0f64;
    let mut count = 0usize;
    for ((&r, &u), &d) in restored.data().iter().zip(reference.data()).zip(degraded.data()) {
        if u != 0.0 || d != 0.0 {
            sum += (r as f64 - u as f64).abs();
            count += 1;
        }
    }
    if count == 0 {
        return Ok(0.0);
    }
    Ok(cfg.alpha * sum / count as f64)
}

/// Mean absolute pixel difference.
pub fn deblur_l1(deblurred: &Image, sharp: &Image) -> Result<f64> {
    deblurred.check_same_dims(sharp)?;
    let n = sharp.data().len();
    if n == 0 {
        return Err(Error::invalid("empty image"));
    }
    let sum: f64 = deblurred.data().iter().zip(sharp.data()).map(|(a, b)| (a - b).abs()).sum();
    Ok(sum / n as f64)
}

#[derive(Debug, Clone, PartialEq)]
pub struct StreamStats {
    pub count: usize,
    pub on_count: usize,
    pub off_count: usize,
    pub duration: f64,
    /// Events/s per pixel, row-major; all zero when the duration is zero.
    pub per_pixel_rate: Vec<f64>,
}

impl StreamStats {
    /// Highest per-pixel rate.
    pub fn max_rate(&self) -> f64 {
        self.per_pixel_rate.iter().copied().fold(0.0, f64::max)
    }
}

pub fn stream_stats(stream: &EventStream) -> StreamStats {
    let mut counts = vec![0usize; stream.pixel_count()];
    let mut on_count = 0;
    for e in stream {
        counts[stream.pixel_index(e)] += 1;
        if e.is_on() {
            on_count += 1;
        }
    }
    let duration = stream.duration();
    let per_pixel_rate = counts
        .iter()
        .map(|&n| if duration > 0.0 { n as f64 / duration } else { 0.0 })
        .collect();
    StreamStats {
        count: stream.len(),
        on_count,
        off_count: stream.len() - on_count,
        duration,
        per_pixel_rate,
    }
}

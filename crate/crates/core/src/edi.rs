//! Event double integral (EDI) deblurring.
//!
//! A blurry pixel is the exposure average of its latent intensity, and
//! between any two instants the latent log intensity changes by `c` per
//! event. With the exposure split into `N_e` channels, the latent image at
//! channel boundary `r` is
//!
//! ```text
//! I[r] = B / E[r],   E[r] = 1/(N_e + 1) * sum_{n=0..=N_e} exp(c * S(r, n))
//! ```
//!
//! where `S(r, n)` is the signed event count between boundaries `r` and `n`
//! (negated when `n < r`). The `1/(N_e + 1)` factor makes `E = 1` on
//! event-free pixels, so those pass through unchanged.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::image::Image;
use crate::voxel::VoxelGrid;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EdiConfig {
    /// Threshold assumed for reconstruction.
    pub c: f64,
    /// Reference channel boundary, `0..=N_e`.
    pub reference: usize,
}

impl EdiConfig {
    pub fn new(c: f64, reference: usize) -> Self {
        Self { c, reference }
    }
}

fn check_c(c: f64) -> Result<()> {
    if !(c.is_finite() && c > 0.0) {
        return Err(Error::invalid(format!("reconstruction threshold must be positive, got {c}")));
    }
    Ok(())
}

/// Signed event count from boundary 0 to each boundary `0..=N_e`.
fn boundary_prefix(counts: &[f32]) -> Vec<f64> {
    let mut prefix = Vec::with_capacity(counts.len() + 1);
    let mut acc = 0.0f64;
    prefix.push(acc);
    for &v in counts {
        acc += v as f64;
        prefix.push(acc);
    }
    prefix
}

fn weight_from_prefix(prefix: &[f64], c: f64, r: usize) -> f64 {
    let at_ref = prefix[r];
    let sum: f64 = prefix.iter().map(|&p| (c * (p - at_ref)).exp()).sum();
    sum / prefix.len() as f64
}

/// Normalized double-integral weight `E[r]` for one pixel's channel counts.
///
/// # Panics
///
/// If `r > counts.len()`.
pub fn edi_weight(counts: &[f32], c: f64, r: usize) -> f64 {
    assert!(r <= counts.len(), "reference boundary {r} beyond {} channels", counts.len());
    weight_from_prefix(&boundary_prefix(counts), c, r)
}

fn check_inputs(blurry: &Image, grid: &VoxelGrid) -> Result<()> {
    if blurry.dims() != (grid.width(), grid.height()) {
        return Err(Error::geometry((grid.width(), grid.height()), blurry.dims()));
    }
    Ok(())
}

/// Latent image at boundary `cfg.reference`, without clamping.
pub fn edi_reconstruct_unclamped(blurry: &Image, grid: &VoxelGrid, cfg: &EdiConfig) -> Result<Image> {
    check_c(cfg.c)?;
    check_inputs(blurry, grid)?;
    if cfg.reference > grid.channels() {
        return Err(Error::invalid(format!(
            "reference boundary {} beyond {} channels",
            cfg.reference,
            grid.channels()
        )));
    }
    let w = grid.width();
    let data: Vec<f64> = blurry
        .data()
        .par_iter()
        .enumerate()
        .map(|(idx, &b)| {
            let counts = grid.pixel(idx / w, idx % w);
            b / weight_from_prefix(&boundary_prefix(counts), cfg.c, cfg.reference)
        })
        .collect();
    Image::new(blurry.width(), blurry.height(), data)
}

/// Latent image at boundary `cfg.reference`, clamped to `[0, 1]`.
pub fn edi_reconstruct(blurry: &Image, grid: &VoxelGrid, cfg: &EdiConfig) -> Result<Image> {
    Ok(edi_reconstruct_unclamped(blurry, grid, cfg)?.clamped())
}

/// Latent images at every boundary `0..=N_e`, without clamping.
pub fn edi_sequence_unclamped(blurry: &Image, grid: &VoxelGrid, c: f64) -> Result<Vec<Image>> {
    check_c(c)?;
    check_inputs(blurry, grid)?;
    let boundaries = grid.channels() + 1;
    let w = grid.width();
    let per_pixel: Vec<Vec<f64>> = blurry
        .data()
        .par_iter()
        .enumerate()
        .map(|(idx, &b)| {
            let prefix = boundary_prefix(grid.pixel(idx / w, idx % w));
            (0..boundaries)
                .map(|r| b / weight_from_prefix(&prefix, c, r))
                .collect()
        })
        .collect();
    (0..boundaries)
        .map(|r| {
            let data = per_pixel.iter().map(|px| px[r]).collect();
            Image::new(blurry.width(), blurry.height(), data)
        })
        .collect()
}

/// Latent images at every boundary `0..=N_e`, clamped to `[0, 1]`.
pub fn edi_sequence(blurry: &Image, grid: &VoxelGrid, c: f64) -> Result<Vec<Image>> {
    Ok(edi_sequence_unclamped(blurry, grid, c)?
        .iter()
        .map(Image::clamped)
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Direct evaluation: sum of channels strictly between the two boundaries.
    fn weight_oracle(counts: &[f32], c: f64, r: usize) -> f64 {
        let n_e = counts.len();
        let mut total = 0.0;
        for n in 0..=n_e {
            let s: f64 = if n >= r {
                counts[r..n].iter().map(|&v| v as f64).sum()
            } else {
                -counts[n..r].iter().map(|&v| v as f64).sum::<f64>()
            };
            total += (c * s).exp();
        }
        total / (n_e + 1) as f64
    }

    #[test]
    fn zero_counts_weight_one() {
        for r in 0..=10 {
            assert_eq!(edi_weight(&[0.0; 10], 0.2, r), 1.0);
        }
    }

    #[test]
    fn two_channel_example() {
        let w = edi_weight(&[0.0, 1.0], 0.2, 0);
        let expected = (2.0 + 0.2f64.exp()) / 3.0;
        assert!((w - expected).abs() < 1e-15);
        assert!((w - 1.0738009194).abs() < 1e-9);
        assert_eq!(w, weight_oracle(&[0.0, 1.0], 0.2, 0));
    }

    #[test]
    fn matches_oracle() {
        let counts = [2.0, -1.0, 0.0, 3.0, -4.0, 1.0];
        for r in 0..=counts.len() {
            let a = edi_weight(&counts, 0.17, r);
            let b = weight_oracle(&counts, 0.17, r);
            assert!((a - b).abs() <= 1e-12 * b, "r={r}: {a} vs {b}");
        }
    }

    #[test]
    fn later_reference_lowers_weight_for_positive_events() {
        let counts = [1.0, 2.0, 1.0, 1.0];
        let weights: Vec<f64> = (0..=4).map(|r| edi_weight(&counts, 0.2, r)).collect();
        assert!(weights.windows(2).all(|w| w[1] < w[0]), "{weights:?}");
    }

    #[test]
    fn single_pixel_reconstruction() {
        // Latent 1.0 on the first half, e^0.2 on the second half.
        let blurry = Image::filled(1, 1, (1.0 + 0.2f64.exp()) / 2.0);
        let grid = VoxelGrid::from_data(1, 1, 2, 0.0, 1.0, vec![0.0, 1.0]).unwrap();
        let out = edi_reconstruct_unclamped(&blurry, &grid, &EdiConfig::new(0.2, 0)).unwrap();
        // B / E with B = (1 + e^0.2)/2 and E = (2 + e^0.2)/3.
        let expected = 1.5 * (1.0 + 0.2f64.exp()) / (2.0 + 0.2f64.exp());
        assert!((out.get(0, 0) - expected).abs() < 1e-12);
    }

    #[test]
    fn zero_events_is_identity() {
        let blurry = Image::from_fn(3, 2, |x, y| 0.1 * (x + y) as f64 + 0.05);
        let grid = VoxelGrid::zeros(2, 3, 10, 0.0, 1.0);
        let out = edi_reconstruct_unclamped(&blurry, &grid, &EdiConfig::new(0.2, 5)).unwrap();
        assert_eq!(out, blurry);
        let seq = edi_sequence(&blurry, &grid, 0.2).unwrap();
        assert_eq!(seq.len(), 11);
        assert!(seq.iter().all(|im| *im == blurry));
    }

    #[test]
    fn sequence_average_reproduces_blur() {
        let blurry = Image::new(2, 1, vec![0.4, 0.7]).unwrap();
        let grid =
            VoxelGrid::from_data(1, 2, 4, 0.0, 1.0, vec![1.0, 0.0, 2.0, -1.0, -3.0, 1.0, 0.0, 1.0])
                .unwrap();
        let seq = edi_sequence_unclamped(&blurry, &grid, 0.2).unwrap();
        assert_eq!(seq.len(), 5);
        for i in 0..2 {
            let avg = seq.iter().map(|im| im.data()[i]).sum::<f64>() / 5.0;
            assert!((avg - blurry.data()[i]).abs() < 1e-12);
        }
    }

    #[test]
    fn errors() {
        let blurry = Image::filled(2, 2, 0.5);
        let grid = VoxelGrid::zeros(2, 3, 4, 0.0, 1.0);
        assert!(matches!(
            edi_reconstruct(&blurry, &grid, &EdiConfig::new(0.2, 0)),
            Err(Error::Geometry { .. })
        ));
        let grid = VoxelGrid::zeros(2, 2, 4, 0.0, 1.0);
        assert!(edi_reconstruct(&blurry, &grid, &EdiConfig::new(0.2, 5)).is_err());
        assert!(edi_reconstruct(&blurry, &grid, &EdiConfig::new(0.0, 0)).is_err());
    }
}

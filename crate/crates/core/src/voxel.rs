//! Temporal binning of events into an `H x W x N_e` tensor.
//!
//! Channel `n` of a grid over `[t0, t0 + T)` accumulates the signed polarity
//! sum of events in `[t0 + n T / N_e, t0 + (n + 1) T / N_e)`. An event at
//! exactly `t0 + T` is closed into the last channel.

use crate::error::{Error, Result};
use crate::event::EventStream;

/// Channel count used throughout the GOPRO protocol.
pub const DEFAULT_CHANNELS: usize = 10;

#[derive(Debug, Clone, PartialEq)]
pub struct VoxelGrid {
    height: usize,
    width: usize,
    channels: usize,
    /// Window start, seconds.
    pub t0: f64,
    /// Window duration, seconds.
    pub duration: f64,
    /// `(h, w, n)` row-major.
    data: Vec<f32>,
}

impl VoxelGrid {
    pub fn zeros(height: usize, width: usize, channels: usize, t0: f64, duration: f64) -> Self {
        Self {
            height,
            width,
            channels,
            t0,
            duration,
            data: vec![0.0; height * width * channels],
        }
    }

    pub fn from_data(
        height: usize,
        width: usize,
        channels: usize,
        t0: f64,
        duration: f64,
        data: Vec<f32>,
    ) -> Result<Self> {
        if data.len() != height * width * channels {
            return Err(Error::invalid(format!(
                "voxel data has {} values, expected {height}x{width}x{channels}",
                data.len()
            )));
        }
        Ok(Self {
            height,
            width,
            channels,
            t0,
            duration,
            data,
        })
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn shape(&self) -> (usize, usize, usize) {
        (self.height, self.width, self.channels)
    }

    pub fn data(&self) -> &[f32] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f32] {
        &mut self.data
    }

    #[inline]
    pub fn get(&self, h: usize, w: usize, n: usize) -> f32 {
        self.data[(h * self.width + w) * self.channels + n]
    }

    #[inline]
    pub fn set(&mut self, h: usize, w: usize, n: usize, v: f32) {
        self.data[(h * self.width + w) * self.channels + n] = v;
    }

    /// The `N_e` channel values of pixel `(h, w)`.
    #[inline]
    pub fn pixel(&self, h: usize, w: usize) -> &[f32] {
        let start = (h * self.width + w) * self.channels;
        &self.data[start..start + self.channels]
    }

    /// Start time of channel boundary `n` (`0..=N_e`).
    pub fn boundary_time(&self, n: usize) -> f64 {
        self.t0 + n as f64 * self.duration / self.channels as f64
    }
}

/// Bins `stream` into `channels` equal slices of `[t0, t0 + duration]`.
pub fn voxelize(stream: &EventStream, t0: f64, duration: f64, channels: usize) -> Result<VoxelGrid> {
    if !(duration.is_finite() && duration > 0.0) {
        return Err(Error::invalid(format!("window duration must be positive, got {duration}")));
    }
    if channels == 0 {
        return Err(Error::invalid("channel count must be at least 1"));
    }
    let mut grid = VoxelGrid::zeros(stream.height, stream.width, channels, t0, duration);
    let t1 = t0 + duration;
    let last = channels - 1;
    for e in stream {
        if e.t < t0 || e.t > t1 {
            continue;
        }
        // Normalize first, then scale: channel indices for N_e = 2k and
        // N_e = k then nest exactly.
        let u = (e.t - t0) / duration;
        let n = ((u * channels as f64).floor() as usize).min(last);
        let idx = (e.y as usize * stream.width + e.x as usize) * channels + n;
        grid.data[idx] += e.p as f32;
    }
    Ok(grid)
}

/// Per-pixel sum over channels, row-major `H x W`.
pub fn net_polarity(grid: &VoxelGrid) -> Vec<i64> {
    grid.data
        .chunks_exact(grid.channels.max(1))
        .map(|px| px.iter().map(|&v| v as i64).sum())
        .collect()
}

//! Linear-intensity images and timestamped frame sequences.

use crate::error::{Error, Result};

/// Single-plane image of linear intensities, row-major.
///
/// Values are nominally in `[0, 1]`; intermediate results (e.g. unclamped
/// reconstructions) may leave that range and are clamped at I/O boundaries.
#[derive(Debug, Clone, PartialEq)]
pub struct Image {
    width: usize,
    height: usize,
    data: Vec<f64>,
}

impl Image {
    pub fn new(width: usize, height: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != width * height {
            return Err(Error::invalid(format!(
                "image data has {} values, expected {}x{}",
                data.len(),
                width,
                height
            )));
        }
        if let Some(v) = data.iter().find(|v| !v.is_finite()) {
            return Err(Error::invalid(format!("non-finite pixel value {v}")));
        }
        Ok(Self {
            width,
            height,
            data,
        })
    }

    pub fn filled(width: usize, height: usize, value: f64) -> Self {
        Self {
            width,
            height,
            data: vec![value; width * height],
        }
    }

    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                data.push(f(x, y));
            }
        }
        Self {
            width,
            height,
            data,
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.data[y * self.width + x]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, v: f64) {
        self.data[y * self.width + x] = v;
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Image {
        Image {
            width: self.width,
            height: self.height,
            data: self.data.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn clamped(&self) -> Image {
        self.map(|v| v.clamp(0.0, 1.0))
    }

    pub fn mean(&self) -> f64 {
        if self.data.is_empty() {
            return 0.0;
        }
        self.data.iter().sum::<f64>() / self.data.len() as f64
    }

    pub(crate) fn check_same_dims(&self, other: &Image) -> Result<()> {
        if self.dims() != other.dims() {
            return Err(Error::geometry(self.dims(), other.dims()));
        }
        Ok(())
    }
}

/// Frames with strictly increasing timestamps (seconds) and one shared
/// geometry.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameSequence {
    frames: Vec<Image>,
    timestamps: Vec<f64>,
}

impl FrameSequence {
    pub fn new(frames: Vec<Image>, timestamps: Vec<f64>) -> Result<Self> {
        if frames.len() != timestamps.len() {
            return Err(Error::invalid(format!(
                "{} frames but {} timestamps",
                frames.len(),
                timestamps.len()
            )));
        }
        if let Some(first) = frames.first() {
            for f in &frames[1..] {
                first.check_same_dims(f)?;
            }
        }
        if let Some(t) = timestamps.iter().find(|t| !t.is_finite()) {
            return Err(Error::invalid(format!("non-finite timestamp {t}")));
        }
        if timestamps.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::invalid("frame timestamps must be strictly increasing"));
        }
        Ok(Self { frames, timestamps })
    }

    /// Frames spaced `1 / fps` seconds apart starting at zero.
    pub fn with_fps(frames: Vec<Image>, fps: f64) -> Result<Self> {
        if !(fps.is_finite() && fps > 0.0) {
            return Err(Error::invalid(format!("fps must be positive, got {fps}")));
        }
        let timestamps = (0..frames.len()).map(|i| i as f64 / fps).collect();
        Self::new(frames, timestamps)
    }

    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    pub fn frames(&self) -> &[Image] {
        &self.frames
    }

    pub fn timestamps(&self) -> &[f64] {
        &self.timestamps
    }

    pub fn dims(&self) -> Option<(usize, usize)> {
        self.frames.first().map(Image::dims)
    }

    pub fn t_start(&self) -> f64 {
        self.timestamps.first().copied().unwrap_or(0.0)
    }

    pub fn t_end(&self) -> f64 {
        self.timestamps.last().copied().unwrap_or(0.0)
    }

    /// Pixelwise mean over every frame.
    pub fn mean_frame(&self) -> Option<Image> {
        if self.frames.is_empty() {
            return None;
        }
        crate::simulator::synthesize_blur(self, 0, self.frames.len()).ok()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_wrong_length() {
        assert!(Image::new(2, 2, vec![0.0; 3]).is_err());
    }

    #[test]
    fn fps_timestamps() {
        let seq = FrameSequence::with_fps(vec![Image::filled(2, 2, 0.5); 2], 100.0).unwrap();
        assert_eq!(seq.timestamps(), &[0.0, 0.01]);
    }

    #[test]
    fn rejects_non_increasing_timestamps() {
        let frames = vec![Image::filled(1, 1, 0.5); 2];
        assert!(FrameSequence::new(frames, vec![0.1, 0.1]).is_err());
    }

    #[test]
    fn rejects_mixed_geometry() {
        let frames = vec![Image::filled(1, 1, 0.5), Image::filled(2, 1, 0.5)];
        assert!(matches!(
            FrameSequence::new(frames, vec![0.0, 1.0]),
            Err(Error::Geometry { .. })
        ));
    }
}

use crate::degradation::NoiseParams;
use crate::error::{Error, Result};

/// Per-pixel contrast thresholds plus the sensor's bandwidth and noise
/// characteristics.
#[derive(Debug, Clone, PartialEq)]
pub struct SensorModel {
    pub width: usize,
    pub height: usize,
    /// Nominal log-intensity threshold.
    pub c_nominal: f64,
    /// Row-major, one positive threshold per pixel.
    pub threshold_map: Vec<f64>,
    /// Seconds; zero means unlimited bandwidth.
    pub sampling_period: f64,
    pub noise: NoiseParams,
}

impl SensorModel {
    /// Unbiased, noise-free sensor with unlimited bandwidth.
    pub fn ideal(width: usize, height: usize, c_nominal: f64) -> Result<Self> {
        if !(c_nominal.is_finite() && c_nominal > 0.0) {
            return Err(Error::invalid(format!("threshold must be positive, got {c_nominal}")));
        }
        Ok(Self {
            width,
            height,
            c_nominal,
            threshold_map: vec![c_nominal; width * height],
            sampling_period: 0.0,
            noise: NoiseParams::default(),
        })
    }

    pub fn with_threshold_map(mut self, map: Vec<f64>) -> Result<Self> {
        if map.len() != self.width * self.height {
            return Err(Error::invalid(format!(
                "threshold map has {} entries, expected {}",
                map.len(),
                self.width * self.height
            )));
        }
        if let Some(c) = map.iter().find(|c| !(c.is_finite() && **c > 0.0)) {
            return Err(Error::invalid(format!("threshold {c} is not positive")));
        }
        self.threshold_map = map;
        Ok(self)
    }

    #[inline]
    pub fn threshold(&self, x: usize, y: usize) -> f64 {
        self.threshold_map[y * self.width + x]
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }
}

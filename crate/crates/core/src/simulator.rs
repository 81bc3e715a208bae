//! Ideal event generation from frames.
//!
//! Each pixel keeps a reference log-intensity level. Between consecutive
//! frames the log intensity is interpolated linearly in time; whenever the
//! interpolated signal reaches `reference ± threshold` one event is emitted
//! at the crossing instant and the reference moves to the crossed level.
//! The reference starts at the first frame's log intensity.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::event::{sort_events, Event, EventStream};
use crate::image::{FrameSequence, Image};
use crate::sensor::SensorModel;

/// Floor applied before taking the logarithm of an intensity.
pub const LOG_EPS: f64 = 1e-4;

/// `ln(max(intensity, 1e-4))`.
#[inline]
pub fn log_map(intensity: f64) -> f64 {
    intensity.max(LOG_EPS).ln()
}

/// Generates the noise-free, bandwidth-unlimited event stream for `frames`
/// under the per-pixel thresholds of `sensor`.
///
/// The result spans `[first timestamp, last timestamp]` and is canonical.
pub fn simulate_events(frames: &FrameSequence, sensor: &SensorModel) -> Result<EventStream> {
    if frames.len() < 2 {
        return Err(Error::invalid(format!(
            "need at least 2 frames to simulate events, got {}",
            frames.len()
        )));
    }
    let (width, height) = frames.dims().expect("non-empty sequence");
    if sensor.dims() != (width, height) || sensor.threshold_map.len() != width * height {
        return Err(Error::geometry((width, height), sensor.dims()));
    }
    if width > u16::MAX as usize + 1 || height > u16::MAX as usize + 1 {
        return Err(Error::invalid("sensor geometry exceeds 16-bit coordinates"));
    }
    let times = frames.timestamps();
    let logs: Vec<Vec<f64>> = frames
        .frames()
        .iter()
        .map(|f| f.data().iter().map(|&v| log_map(v)).collect())
        .collect();

    let mut events: Vec<Event> = (0..height)
        .into_par_iter()
        .flat_map_iter(|y| {
            let mut row = Vec::new();
            let mut samples = vec![0.0; logs.len()];
            for x in 0..width {
                let idx = y * width + x;
                for (s, frame) in samples.iter_mut().zip(&logs) {
                    *s = frame[idx];
                }
                let c = sensor.threshold_map[idx];
                pixel_crossings(&samples, times, c, |t, p| {
                    row.push(Event::new(t, x as u16, y as u16, p));
                });
            }
            row
        })
        .collect();
    sort_events(&mut events);
    Ok(EventStream::new(width, height, frames.t_start(), frames.t_end(), events))
}

/// Runs the threshold-crossing model on one pixel's log-intensity samples.
///
/// Calls `emit(t, p)` for every crossing in time order and returns the signed
/// number of emitted events. The reference level after `k` net events is
/// `samples[0] + k * c`, computed from the integer level so it never drifts.
pub(crate) fn pixel_crossings(
    samples: &[f64],
    times: &[f64],
    c: f64,
    mut emit: impl FnMut(f64, i8),
) -> i64 {
    let base = samples[0];
    let mut level: i64 = 0;
    let level_value = |k: i64| base + k as f64 * c;
    for i in 1..samples.len() {
        let (l0, l1) = (samples[i - 1], samples[i]);
        let (t0, t1) = (times[i - 1], times[i]);
        let crossing_time = |target: f64| {
            let frac = ((target - l0) / (l1 - l0)).clamp(0.0, 1.0);
            t0 + frac * (t1 - t0)
        };
        if l1 > l0 {
            while level_value(level + 1) <= l1 {
                level += 1;
                emit(crossing_time(level_value(level)), 1);
            }
        } else if l1 < l0 {
            while level_value(level - 1) >= l1 {
                level -= 1;
                emit(crossing_time(level_value(level)), -1);
            }
        }
    }
    level
}

/// Pixelwise arithmetic mean of `count` frames starting at `first`, in linear
/// intensity: the discrete exposure integral of a blurry capture.
pub fn synthesize_blur(frames: &FrameSequence, first: usize, count: usize) -> Result<Image> {
    if count == 0 || first.checked_add(count).is_none_or(|end| end > frames.len()) {
        return Err(Error::invalid(format!(
            "blur range {first}..{} out of bounds for {} frames",
            first.saturating_add(count),
            frames.len()
        )));
    }
    let selected = &frames.frames()[first..first + count];
    let (w, h) = selected[0].dims();
    let mut acc = vec![0.0; w * h];
    for f in selected {
        for (a, v) in acc.iter_mut().zip(f.data()) {
            *a += v;
        }
    }
    let n = count as f64;
    acc.iter_mut().for_each(|a| *a /= n);
    Image::new(w, h, acc)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn seq(values: &[f64], times: &[f64]) -> FrameSequence {
        let frames = values.iter().map(|&v| Image::filled(1, 1, v)).collect();
        FrameSequence::new(frames, times.to_vec()).unwrap()
    }

    #[test]
    fn log_map_endpoints() {
        assert_eq!(log_map(1.0), 0.0);
        assert!((log_map(0.0) - (-9.210340371976182)).abs() < 1e-12);
        assert_eq!(log_map(1e-6), log_map(0.0));
    }

    #[test]
    fn log_map_monotone() {
        let xs: Vec<f64> = (0..=1000).map(|i| i as f64 / 1000.0).collect();
        assert!(xs.windows(2).all(|w| log_map(w[0]) <= log_map(w[1])));
    }

    #[test]
    fn constant_frames_emit_nothing() {
        let frames = FrameSequence::with_fps(vec![Image::filled(4, 3, 0.3); 5], 10.0).unwrap();
        let s = simulate_events(&frames, &SensorModel::ideal(4, 3, 0.1).unwrap()).unwrap();
        assert!(s.is_empty());
    }

    #[test]
    fn ramp_crossing_times() {
        // log intensity -1.0 -> -0.65 over [0, 1]: crossings at 0.1k / 0.35.
        let frames = seq(&[(-1.0f64).exp(), (-0.65f64).exp()], &[0.0, 1.0]);
        let s = simulate_events(&frames, &SensorModel::ideal(1, 1, 0.1).unwrap()).unwrap();
        let expected = [2.0 / 7.0, 4.0 / 7.0, 6.0 / 7.0];
        assert_eq!(s.len(), 3);
        for (e, t) in s.iter().zip(expected) {
            assert_eq!(e.p, 1);
            assert!((e.t - t).abs() < 1e-9, "{} vs {}", e.t, t);
        }
    }

    #[test]
    fn multiple_crossings_both_directions() {
        let frames = seq(&[0.5, 0.9, 0.2], &[0.0, 1.0, 2.0]);
        let s = simulate_events(&frames, &SensorModel::ideal(1, 1, 0.2).unwrap()).unwrap();
        let up = ((0.9f64).ln() - (0.5f64).ln()) / 0.2;
        let on = s.iter().filter(|e| e.p == 1).count();
        assert_eq!(on, up.floor() as usize);
        assert!(s.iter().all(|e| (0.0..=2.0).contains(&e.t)));
        assert!(s.events.windows(2).all(|w| w[0].t <= w[1].t));
    }

    #[test]
    fn smaller_threshold_never_fewer_on_a_ramp() {
        let frames = seq(&[0.1, 0.8], &[0.0, 1.0]);
        let n = |c| simulate_events(&frames, &SensorModel::ideal(1, 1, c).unwrap()).unwrap().len();
        assert!(n(0.15) >= n(0.2));
        assert!(n(0.1) >= 2 * n(0.2));
    }

    #[test]
    fn smaller_threshold_can_emit_fewer_after_reversal() {
        // Log signal -3 -> -1 -> -2 -> -1. The reference parks at a level that
        // depends on c, so the reversal is crossed at c = 1 but not at c = 0.9.
        let frames = seq(&[(-3.0f64).exp(), (-1.0f64).exp(), (-2.0f64).exp(), (-1.0f64).exp()], &[0.0, 1.0, 2.0, 3.0]);
        let counts = |c| {
            let s = simulate_events(&frames, &SensorModel::ideal(1, 1, c).unwrap()).unwrap();
            let on = s.iter().filter(|e| e.p == 1).count();
            (on, s.len() - on)
        };
        assert_eq!(counts(0.9), (2, 0));
        assert_eq!(counts(1.0), (3, 1));
    }

    #[test]
    fn reference_level_tracks_signed_count() {
        let samples = [-2.0, -0.3, -1.7, -0.9, -1.95, -0.05];
        let times = [0.0, 1.0, 2.0, 3.0, 4.0, 5.0];
        let c = 0.13;
        let mut signed = 0i64;
        let level = pixel_crossings(&samples, &times, c, |_, p| signed += p as i64);
        assert_eq!(level, signed);
        let final_ref = samples[0] + level as f64 * c;
        let last = samples[samples.len() - 1];
        // Reference ends within one threshold of the signal.
        assert!((final_ref - last).abs() < c);
        assert!(((final_ref - samples[0]) - c * signed as f64).abs() < 1e-12);
    }

    #[test]
    fn simulation_is_deterministic() {
        let frames: Vec<Image> = (0..6)
            .map(|k| Image::from_fn(16, 9, |x, y| ((x + y + 3 * k) % 7) as f64 / 7.0))
            .collect();
        let frames = FrameSequence::with_fps(frames, 30.0).unwrap();
        let sensor = SensorModel::ideal(16, 9, 0.15).unwrap();
        let a = simulate_events(&frames, &sensor).unwrap();
        let b = simulate_events(&frames, &sensor).unwrap();
        assert_eq!(a, b);
        assert!(!a.is_empty());
        assert_eq!(crate::event::validate(&a), Ok(()));
    }

    #[test]
    fn simulate_errors() {
        let one = FrameSequence::with_fps(vec![Image::filled(2, 2, 0.5)], 10.0).unwrap();
        let sensor = SensorModel::ideal(2, 2, 0.2).unwrap();
        assert!(simulate_events(&one, &sensor).is_err());
        let two = FrameSequence::with_fps(vec![Image::filled(2, 2, 0.5); 2], 10.0).unwrap();
        let wrong = SensorModel::ideal(3, 2, 0.2).unwrap();
        assert!(matches!(simulate_events(&two, &wrong), Err(Error::Geometry { .. })));
    }

    #[test]
    fn blur_mean() {
        let frames = seq(&[0.2, 0.4], &[0.0, 1.0]);
        let b = synthesize_blur(&frames, 0, 2).unwrap();
        assert!((b.get(0, 0) - 0.3).abs() < 1e-15);
        assert_eq!(synthesize_blur(&frames, 1, 1).unwrap(), frames.frames()[1]);
        assert!(synthesize_blur(&frames, 1, 2).is_err());
        assert!(synthesize_blur(&frames, 0, 0).is_err());
    }
}

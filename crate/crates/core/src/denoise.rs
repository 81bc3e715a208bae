//! Classical event denoising baselines.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::event::{canonical_sort, EventStream};

/// Default neighborhood radius in pixels.
pub const DEFAULT_RADIUS: usize = 1;
/// Default support window in seconds.
pub const DEFAULT_WINDOW: f64 = 0.010;
/// Default number of supporting events required.
pub const DEFAULT_MIN_SUPPORT: usize = 2;

/// Spatiotemporal correlation filter.
///
/// Keeps an event iff at least `min_support` other events lie within
/// Chebyshev distance `radius` (the event's own pixel included) and within
/// `window` seconds of it. Polarity is ignored.
pub fn scf_filter(
    stream: &EventStream,
    radius: usize,
    window: f64,
    min_support: usize,
) -> Result<EventStream> {
    if radius < 1 {
        return Err(Error::invalid("radius must be at least 1"));
    }
    if !(window.is_finite() && window > 0.0) {
        return Err(Error::invalid(format!("window must be positive, got {window}")));
    }
    let sorted;
    let stream = if is_time_sorted(stream) {
        stream
    } else {
        sorted = canonical_sort(stream.clone());
        &sorted
    };
    if min_support == 0 {
        return Ok(stream.clone());
    }

    // Per-pixel ascending timestamps.
    let (w, h) = (stream.width, stream.height);
    let mut times: Vec<Vec<f64>> = vec![Vec::new(); w * h];
    for e in stream {
        times[stream.pixel_index(e)].push(e.t);
    }

    let keep: Vec<bool> = stream
        .events
        .par_iter()
        .map(|e| {
            let (x, y) = (e.x as usize, e.y as usize);
            let (lo, hi) = (e.t - window, e.t + window);
            let mut support = 0usize;
            for ny in y.saturating_sub(radius)..=(y + radius).min(h - 1) {
                for nx in x.saturating_sub(radius)..=(x + radius).min(w - 1) {
                    let ts = &times[ny * w + nx];
                    let a = ts.partition_point(|&t| t < lo);
                    let b = ts.partition_point(|&t| t <= hi);
                    support += b - a;
                }
            }
            // The event itself is always inside its own window.
            support > min_support
        })
        .collect();

    let events = stream
        .events
        .iter()
        .zip(keep)
        .filter_map(|(e, k)| k.then_some(*e))
        .collect();
    Ok(stream.with_events(events))
}

fn is_time_sorted(stream: &EventStream) -> bool {
    stream
        .events
        .windows(2)
        .all(|p| p[0].canonical_cmp(&p[1]) != std::cmp::Ordering::Greater)
}

/// Removes every event of pixels whose event rate over the stream window
/// exceeds `rate_threshold` events/s.
pub fn hot_pixel_filter(stream: &EventStream, rate_threshold: f64) -> Result<EventStream> {
    if rate_threshold.is_nan() || rate_threshold <= 0.0 {
        return Err(Error::invalid(format!("rate threshold must be positive, got {rate_threshold}")));
    }
    let duration = stream.duration();
    if duration <= 0.0 {
        return Ok(stream.clone());
    }
    let mut counts = vec![0usize; stream.pixel_count()];
    for e in stream {
        counts[stream.pixel_index(e)] += 1;
    }
    let hot: Vec<bool> = counts
        .iter()
        .map(|&n| n as f64 / duration > rate_threshold)
        .collect();
    let events = stream
        .iter()
        .filter(|e| !hot[stream.pixel_index(e)])
        .copied()
        .collect();
    Ok(stream.with_events(events))
}

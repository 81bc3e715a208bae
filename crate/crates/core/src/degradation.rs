//! Sensor degradations applied to ideal event streams.
//!
//! Three effects are modeled, always composed in this order:
//!
//! 1. threshold bias: per-pixel thresholds drawn around the nominal value,
//!    applied by re-simulating the frames with the biased map;
//! 2. limited bandwidth: at most one event per pixel per sampling period;
//! 3. circuit noise: independent Poisson processes for shot noise, leak
//!    noise and hot pixels, added on top of the surviving events.
//!
//! All randomness comes from seeded ChaCha generators. Noise generators are
//! seeded per pixel, so the output does not depend on how the work is split
//! across threads.

use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp, Normal};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::event::{sort_events, Event, EventStream};
use crate::image::{FrameSequence, Image};
use crate::sensor::SensorModel;
use crate::simulator::simulate_events;

/// Lower clamp on biased thresholds, as a fraction of the nominal value.
pub const MIN_THRESHOLD_FRACTION: f64 = 0.1;

/// Intensity assumed everywhere when shot noise has no intensity hint.
pub const DEFAULT_INTENSITY_HINT: f64 = 0.5;

const STREAM_BIAS: u64 = 0xb1a5;
const STREAM_SHOT: u64 = 0x5407;
const STREAM_LEAK: u64 = 0x1eac;
const STREAM_HOT_SELECT: u64 = 0x4075;
const STREAM_HOT_FIRE: u64 = 0x40f1;

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct NoiseParams {
    /// Events/s per pixel at zero intensity.
    pub shot_rate: f64,
    /// ON events/s per pixel.
    pub leak_rate: f64,
    pub hot_pixel_fraction: f64,
    /// Events/s per hot pixel.
    pub hot_pixel_rate: f64,
    pub seed: u64,
}

impl NoiseParams {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("shot_rate", self.shot_rate),
            ("leak_rate", self.leak_rate),
            ("hot_pixel_rate", self.hot_pixel_rate),
        ] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::invalid(format!("{name} must be finite and >= 0, got {v}")));
            }
        }
        if !(0.0..=1.0).contains(&self.hot_pixel_fraction) {
            return Err(Error::invalid(format!(
                "hot_pixel_fraction must be in [0, 1], got {}",
                self.hot_pixel_fraction
            )));
        }
        Ok(())
    }

    pub fn is_silent(&self) -> bool {
        self.shot_rate == 0.0
            && self.leak_rate == 0.0
            && (self.hot_pixel_rate == 0.0 || self.hot_pixel_fraction == 0.0)
    }
}

/// Full degradation recipe.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct DegradeParams {
    /// Standard deviation of per-pixel thresholds around the nominal value.
    pub sigma: f64,
    /// Seconds; zero disables bandwidth limiting.
    pub sampling_period: f64,
    pub noise: NoiseParams,
}

/// splitmix64 finalizer.
fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

fn sub_rng(seed: u64, stream: u64, index: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(mix(mix(seed ^ mix(stream)) ^ index))
}

/// Returns a copy of `sensor` whose thresholds are independent draws from
/// `Normal(c_nominal, sigma)`, clamped below at `0.1 * c_nominal`.
pub fn bias_thresholds(sensor: &SensorModel, sigma: f64, seed: u64) -> Result<SensorModel> {
    if !(sigma.is_finite() && sigma >= 0.0) {
        return Err(Error::invalid(format!("sigma must be finite and >= 0, got {sigma}")));
    }
    let c = sensor.c_nominal;
    let n = sensor.width * sensor.height;
    let map = if sigma == 0.0 {
        vec![c; n]
    } else {
        let normal = Normal::new(c, sigma).map_err(|e| Error::invalid(e.to_string()))?;
        let mut rng = sub_rng(seed, STREAM_BIAS, 0);
        let floor = MIN_THRESHOLD_FRACTION * c;
        (0..n).map(|_| normal.sample(&mut rng).max(floor)).collect()
    };
    Ok(SensorModel {
        threshold_map: map,
        ..sensor.clone()
    })
}

/// Keeps at most the first event of each pixel in every sampling period.
///
/// Periods are `[t_start + k * T_s, t_start + (k + 1) * T_s)`; an event at
/// exactly `t_end` falls into the last period touching the window. Kept
/// events are unmodified. `T_s = 0` is the identity.
pub fn limit_bandwidth(stream: &EventStream, sampling_period: f64) -> Result<EventStream> {
    if !(sampling_period.is_finite() && sampling_period >= 0.0) {
        return Err(Error::invalid(format!(
            "sampling period must be finite and >= 0, got {sampling_period}"
        )));
    }
    if sampling_period == 0.0 {
        return Ok(stream.clone());
    }
    let last_period = ((stream.duration() / sampling_period).ceil() as u64).max(1) - 1;
    let mut taken: Vec<Option<u64>> = vec![None; stream.pixel_count()];
    let mut kept = Vec::with_capacity(stream.len());
    for e in stream {
        let period = (((e.t - stream.t_start) / sampling_period).floor().max(0.0) as u64).min(last_period);
        let slot = &mut taken[stream.pixel_index(e)];
        if *slot != Some(period) {
            *slot = Some(period);
            kept.push(*e);
        }
    }
    Ok(stream.with_events(kept))
}

fn poisson_times(rng: &mut ChaCha8Rng, rate: f64, t_start: f64, t_end: f64, mut f: impl FnMut(f64, &mut ChaCha8Rng)) {
    if rate <= 0.0 || t_end <= t_start {
        return;
    }
    let exp = Exp::new(rate).expect("positive rate");
    let mut t = t_start;
    loop {
        t += exp.sample(rng);
        if t > t_end {
            break;
        }
        f(t, rng);
    }
}

fn random_polarity(rng: &mut ChaCha8Rng) -> i8 {
    if rng.random_bool(0.5) {
        1
    } else {
        -1
    }
}

/// Pixels chosen as hot for the given geometry and parameters: a seeded
/// uniform subset of `ceil(fraction * W * H)` pixel indices, ascending.
pub fn hot_pixels(width: usize, height: usize, params: &NoiseParams) -> Vec<usize> {
    let n = width * height;
    let k = ((params.hot_pixel_fraction * n as f64).ceil() as usize).min(n);
    if k == 0 {
        return Vec::new();
    }
    let mut rng = sub_rng(params.seed, STREAM_HOT_SELECT, 0);
    let mut picked = index::sample(&mut rng, n, k).into_vec();
    picked.sort_unstable();
    picked
}

/// Generates only the noise events that [`inject_noise`] would add to a
/// stream with `template`'s geometry and window.
pub fn generate_noise(
    template: &EventStream,
    params: &NoiseParams,
    intensity_hint: Option<&Image>,
) -> Result<EventStream> {
    params.validate()?;
    let (width, height) = (template.width, template.height);
    if let Some(hint) = intensity_hint {
        if hint.dims() != (width, height) {
            return Err(Error::geometry((width, height), hint.dims()));
        }
    }
    let (t0, t1) = (template.t_start, template.t_end);
    let hot = hot_pixels(width, height, params);

    let mut events: Vec<Event> = (0..width * height)
        .into_par_iter()
        .flat_map_iter(|idx| {
            let (x, y) = ((idx % width) as u16, (idx / width) as u16);
            let mut out = Vec::new();
            let intensity = intensity_hint
                .map(|h| h.data()[idx].clamp(0.0, 1.0))
                .unwrap_or(DEFAULT_INTENSITY_HINT);
            let shot = params.shot_rate * (1.0 - intensity);
            let mut rng = sub_rng(params.seed, STREAM_SHOT, idx as u64);
            poisson_times(&mut rng, shot, t0, t1, |t, rng| {
                out.push(Event::new(t, x, y, random_polarity(rng)));
            });
            let mut rng = sub_rng(params.seed, STREAM_LEAK, idx as u64);
            poisson_times(&mut rng, params.leak_rate, t0, t1, |t, _| {
                out.push(Event::new(t, x, y, 1));
            });
            if hot.binary_search(&idx).is_ok() {
                let mut rng = sub_rng(params.seed, STREAM_HOT_FIRE, idx as u64);
                poisson_times(&mut rng, params.hot_pixel_rate, t0, t1, |t, rng| {
                    out.push(Event::new(t, x, y, random_polarity(rng)));
                });
            }
            out
        })
        .collect();
    sort_events(&mut events);
    Ok(template.with_events(events))
}

/// Adds shot, leak and hot-pixel noise over the stream's window. Original
/// events are preserved unmodified.
///
/// Shot noise at a pixel fires at `shot_rate * (1 - I)` where `I` comes from
/// `intensity_hint` (0.5 everywhere when absent).
pub fn inject_noise(
    stream: &EventStream,
    params: &NoiseParams,
    intensity_hint: Option<&Image>,
) -> Result<EventStream> {
    let noise = generate_noise(stream, params, intensity_hint)?;
    Ok(stream.merge(&noise))
}

/// Every intermediate stream of one degradation run.
#[derive(Debug, Clone, PartialEq)]
pub struct PairedStreams {
    /// Ideal events, `E_u`.
    pub undegraded: EventStream,
    /// Events from the biased sensor before bandwidth limiting.
    pub biased: EventStream,
    /// Events from the biased sensor that survived bandwidth limiting.
    pub signal: EventStream,
    /// Pure noise events.
    pub noise: EventStream,
    /// `signal` merged with `noise`, `E_d`.
    pub degraded: EventStream,
}

/// Runs the full degradation chain and keeps every stage. The bias seed and
/// the noise seed are both taken from `deg.noise.seed`.
pub fn degrade_detailed(
    frames: &FrameSequence,
    ideal: &SensorModel,
    deg: &DegradeParams,
) -> Result<PairedStreams> {
    deg.noise.validate()?;
    let undegraded = simulate_events(frames, ideal)?;
    let biased = if deg.sigma == 0.0 {
        undegraded.clone()
    } else {
        let biased = bias_thresholds(ideal, deg.sigma, deg.noise.seed)?;
        simulate_events(frames, &biased)?
    };
    let signal = limit_bandwidth(&biased, deg.sampling_period)?;
    let hint = frames.mean_frame();
    let noise = generate_noise(&signal, &deg.noise, hint.as_ref())?;
    let degraded = signal.merge(&noise);
    Ok(PairedStreams {
        undegraded,
        biased,
        signal,
        noise,
        degraded,
    })
}

/// Paired undegraded/degraded streams `(E_u, E_d)` for `frames`.
pub fn make_pair(
    frames: &FrameSequence,
    ideal: &SensorModel,
    deg: &DegradeParams,
) -> Result<(EventStream, EventStream)> {
    let p = degrade_detailed(frames, ideal, deg)?;
    Ok((p.undegraded, p.degraded))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::event::validate;
    use proptest::prelude::*;

    fn one_pixel(times: &[f64]) -> EventStream {
        let events = times.iter().map(|&t| Event::new(t, 0, 0, 1)).collect();
        EventStream::new(1, 1, 0.0, 1.0, events)
    }

    #[test]
    fn zero_sigma_is_nominal() {
        let s = SensorModel::ideal(5, 4, 0.2).unwrap();
        let b = bias_thresholds(&s, 0.0, 7).unwrap();
        assert!(b.threshold_map.iter().all(|&c| c == 0.2));
    }

    #[test]
    fn lower_threshold_pixel_emits_more() {
        // Both pixels see log intensity -2 -> -1.15 -> -1.79.
        let frames: Vec<Image> = [-2.0f64, -1.15, -1.79]
            .iter()
            .map(|l| Image::filled(2, 1, l.exp()))
            .collect();
        let frames = FrameSequence::with_fps(frames, 1.0).unwrap();
        let sensor = SensorModel::ideal(2, 1, 0.2).unwrap().with_threshold_map(vec![0.2, 0.22]).unwrap();
        let s = simulate_events(&frames, &sensor).unwrap();
        let count = |x: u16, p: i8| s.iter().filter(|e| e.x == x && e.p == p).count();
        assert_eq!((count(0, 1), count(0, -1)), (4, 2));
        assert_eq!((count(1, 1), count(1, -1)), (3, 2));
    }

    #[test]
    fn bias_sample_mean() {
        let s = SensorModel::ideal(128, 128, 0.2).unwrap();
        let b = bias_thresholds(&s, 0.02, 11).unwrap();
        let n = b.threshold_map.len() as f64;
        let mean = b.threshold_map.iter().sum::<f64>() / n;
        // Standard error of the mean is sigma / sqrt(128 * 128).
        assert!((mean - 0.2).abs() < 3.0 * 0.02 / 128.0, "mean {mean}");
        let var = b.threshold_map.iter().map(|c| (c - mean).powi(2)).sum::<f64>() / (n - 1.0);
        assert!((var.sqrt() - 0.02).abs() < 0.001);
        assert_eq!(b, bias_thresholds(&s, 0.02, 11).unwrap());
        assert_ne!(b, bias_thresholds(&s, 0.02, 12).unwrap());
    }

    #[test]
    fn bias_clamps_low_thresholds() {
        let s = SensorModel::ideal(64, 64, 0.2).unwrap();
        let b = bias_thresholds(&s, 0.5, 3).unwrap();
        let floor = 0.1 * 0.2;
        assert!(b.threshold_map.iter().all(|&c| c >= floor));
        assert!(b.threshold_map.contains(&floor));
    }

    #[test]
    fn bandwidth_brute_force_example() {
        let s = one_pixel(&[0.1, 0.2, 0.3, 0.9]);
        let kept = limit_bandwidth(&s, 0.5).unwrap();
        let times: Vec<f64> = kept.iter().map(|e| e.t).collect();
        assert_eq!(times, vec![0.1, 0.9]);
    }

    #[test]
    fn bandwidth_identity_for_short_period() {
        let s = one_pixel(&[0.1, 0.2, 0.3, 0.9]);
        assert_eq!(limit_bandwidth(&s, 0.05).unwrap(), s);
        assert_eq!(limit_bandwidth(&s, 0.0).unwrap(), s);
    }

    #[test]
    fn bandwidth_right_edge_stays_within_period_count() {
        let s = one_pixel(&[0.0, 0.5, 1.0]);
        let kept = limit_bandwidth(&s, 0.5).unwrap();
        assert_eq!(kept.len(), 2);
    }

    #[test]
    fn bandwidth_sweep_loses_events() {
        // One pixel: log intensity rises 0.75 over [0, 1] s then falls 0.7
        // over [1, 2] s with c = 0.1, i.e. 7 ON then 6 OFF crossings.
        let frames = FrameSequence::new(
            vec![
                Image::filled(1, 1, (-1.0f64).exp()),
                Image::filled(1, 1, (-0.25f64).exp()),
                Image::filled(1, 1, (-0.95f64).exp()),
            ],
            vec![0.0, 1.0, 2.0],
        )
        .unwrap();
        let ideal = simulate_events(&frames, &SensorModel::ideal(1, 1, 0.1).unwrap()).unwrap();
        let on = |s: &EventStream| s.iter().filter(|e| e.p == 1).count();
        let off = |s: &EventStream| s.iter().filter(|e| e.p == -1).count();
        assert_eq!((on(&ideal), off(&ideal)), (7, 6));
        // Up crossings at k/7.5, down crossings at 1 + (0.15 + 0.1j)/0.7;
        // periods of 0.48 s keep the first event of each.
        let limited = limit_bandwidth(&ideal, 0.48).unwrap();
        assert_eq!((on(&limited), off(&limited)), (2, 3));
    }

    #[test]
    fn silent_noise_is_identity() {
        let s = one_pixel(&[0.1, 0.4]);
        let out = inject_noise(&s, &NoiseParams { seed: 5, ..Default::default() }, None).unwrap();
        assert_eq!(out, s);
    }

    #[test]
    fn leak_noise_rate_and_polarity() {
        let s = EventStream::empty(10, 10, 0.0, 10.0);
        let params = NoiseParams {
            leak_rate: 10.0,
            seed: 42,
            ..Default::default()
        };
        let out = inject_noise(&s, &params, None).unwrap();
        assert!((out.len() as f64 - 10_000.0).abs() <= 300.0, "{}", out.len());
        assert!(out.iter().all(|e| e.p == 1));
        assert_eq!(validate(&out), Ok(()));
    }

    #[test]
    fn single_hot_pixel() {
        let s = EventStream::empty(10, 10, 0.0, 1.0);
        let params = NoiseParams {
            hot_pixel_fraction: 0.01,
            hot_pixel_rate: 1000.0,
            seed: 9,
            ..Default::default()
        };
        let hot = hot_pixels(10, 10, &params);
        assert_eq!(hot.len(), 1);
        let out = inject_noise(&s, &params, None).unwrap();
        let (hx, hy) = ((hot[0] % 10) as u16, (hot[0] / 10) as u16);
        assert!(out.iter().all(|e| (e.x, e.y) == (hx, hy)));
        assert!((out.len() as f64 - 1000.0).abs() <= 3.0 * 1000f64.sqrt());
    }

    #[test]
    fn shot_noise_follows_intensity() {
        let s = EventStream::empty(2, 1, 0.0, 100.0);
        let hint = Image::new(2, 1, vec![0.0, 1.0]).unwrap();
        let params = NoiseParams {
            shot_rate: 5.0,
            seed: 1,
            ..Default::default()
        };
        let out = inject_noise(&s, &params, Some(&hint)).unwrap();
        assert!(out.iter().all(|e| e.x == 0));
        assert!(!out.is_empty());
        let bad = Image::filled(3, 1, 0.5);
        assert!(matches!(inject_noise(&s, &params, Some(&bad)), Err(Error::Geometry { .. })));
    }

    #[test]
    fn noise_is_schedule_independent() {
        let s = EventStream::empty(16, 16, 0.0, 2.0);
        let params = NoiseParams {
            shot_rate: 3.0,
            leak_rate: 1.0,
            hot_pixel_fraction: 0.02,
            hot_pixel_rate: 50.0,
            seed: 77,
        };
        let a = inject_noise(&s, &params, None).unwrap();
        let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let b = pool.install(|| inject_noise(&s, &params, None).unwrap());
        assert_eq!(a, b);
    }

    fn ramp_frames() -> FrameSequence {
        let frames = (0..6)
            .map(|k| Image::from_fn(12, 8, |x, _| if x <= 2 * k { 0.8 } else { 0.1 }))
            .collect();
        FrameSequence::with_fps(frames, 100.0).unwrap()
    }

    #[test]
    fn pair_without_degradation_is_equal() {
        let frames = ramp_frames();
        let ideal = SensorModel::ideal(12, 8, 0.2).unwrap();
        let (u, d) = make_pair(&frames, &ideal, &DegradeParams::default()).unwrap();
        assert!(!u.is_empty());
        assert_eq!(u, d);
    }

    #[test]
    fn pair_on_static_scene_is_pure_noise() {
        let frames = FrameSequence::with_fps(vec![Image::filled(12, 8, 0.3); 4], 10.0).unwrap();
        let ideal = SensorModel::ideal(12, 8, 0.2).unwrap();
        let deg = DegradeParams {
            noise: NoiseParams {
                shot_rate: 2.0,
                leak_rate: 1.0,
                seed: 3,
                ..Default::default()
            },
            ..Default::default()
        };
        let p = degrade_detailed(&frames, &ideal, &deg).unwrap();
        assert!(p.undegraded.is_empty());
        assert!(!p.degraded.is_empty());
        assert_eq!(p.degraded, p.noise);
    }

    proptest! {
        #[test]
        fn bandwidth_only_removes(seed in any::<u64>(), t_s in 0.0f64..0.05) {
            let frames = ramp_frames();
            let ideal = SensorModel::ideal(12, 8, 0.2).unwrap();
            let deg = DegradeParams {
                sampling_period: t_s,
                noise: NoiseParams { leak_rate: 5.0, seed, ..Default::default() },
                ..Default::default()
            };
            let p = degrade_detailed(&frames, &ideal, &deg).unwrap();
            prop_assert!(p.signal.len() <= p.undegraded.len());
            // Every surviving signal event is an ideal event.
            let mut j = 0;
            for e in &p.signal {
                while j < p.undegraded.len() && p.undegraded.events[j] != *e { j += 1; }
                prop_assert!(j < p.undegraded.len());
            }
            // Removing the noise events from E_d leaves exactly the signal.
            prop_assert_eq!(p.degraded.len(), p.signal.len() + p.noise.len());
            prop_assert_eq!(p.signal.merge(&p.noise), p.degraded);
        }
    }
}

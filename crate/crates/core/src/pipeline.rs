//! One-shot paired-data generation and evaluation.
//!
//! From a frame directory this produces the undegraded and degraded event
//! streams, a synthetic blurry frame, a denoised stream, EDI reconstructions
//! from each stream and a metrics report. Everything is a deterministic
//! function of the config.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use crate::degradation::{degrade_detailed, DegradeParams};
use crate::denoise::{hot_pixel_filter, scf_filter, DEFAULT_MIN_SUPPORT, DEFAULT_RADIUS};
use crate::edi::{edi_reconstruct, EdiConfig};
use crate::error::{Error, Result};
use crate::event::EventStream;
use crate::image::{FrameSequence, Image};
use crate::io::config::{degrade_params, Config, DEGRADE_KEYS};
use crate::io::{load_frames, write_events, write_image, write_voxel, FrameTiming};
use crate::metrics::{deblur_l1, event_l1_response, psnr, ssim, MetricConfig, SSIM_WINDOW};
use crate::sensor::SensorModel;
use crate::simulator::synthesize_blur;
use crate::voxel::{voxelize, VoxelGrid, DEFAULT_CHANNELS};

pub const DEFAULT_THRESHOLD: f64 = 0.2;

const PIPELINE_KEYS: [&str; 16] = [
    "frames",
    "fps",
    "timestamps",
    "out_dir",
    "threshold",
    "ne",
    "ref",
    "c_deblur",
    "blur_first",
    "blur_count",
    "denoise_radius",
    "denoise_window_us",
    "denoise_min_support",
    "hot_threshold",
    "alpha",
    "beta",
];

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineConfig {
    pub frames_dir: PathBuf,
    pub timing: FrameTiming,
    pub out_dir: PathBuf,
    pub threshold: f64,
    pub degrade: DegradeParams,
    pub channels: usize,
    pub reference: usize,
    pub c_deblur: f64,
    pub blur_first: usize,
    /// `None` blurs every frame from `blur_first` on.
    pub blur_count: Option<usize>,
    pub denoise_radius: usize,
    pub denoise_window: f64,
    pub denoise_min_support: usize,
    /// Events/s; `None` disables hot-pixel filtering.
    pub hot_threshold: Option<f64>,
    pub metric: MetricConfig,
}

impl PipelineConfig {
    /// Reads a pipeline config. Relative paths resolve against `base_dir`.
    pub fn from_config(cfg: &Config, base_dir: &Path) -> Result<Self> {
        let allowed: Vec<&str> = PIPELINE_KEYS.iter().chain(DEGRADE_KEYS.iter()).copied().collect();
        cfg.check_keys(&allowed)?;
        let resolve = |p: &str| -> PathBuf {
            let p = Path::new(p);
            if p.is_absolute() {
                p.to_path_buf()
            } else {
                base_dir.join(p)
            }
        };
        let frames_dir = resolve(&cfg.require::<String>("frames")?);
        let out_dir = resolve(&cfg.require::<String>("out_dir")?);
        let timing = match (cfg.get::<f64>("fps")?, cfg.get_str("timestamps")) {
            (Some(fps), None) => FrameTiming::Fps(fps),
            (None, Some(ts)) => FrameTiming::Timestamps(resolve(ts)),
            _ => return Err(Error::Config("exactly one of `fps` or `timestamps` is required".into())),
        };
        let threshold = cfg.get_or("threshold", DEFAULT_THRESHOLD)?;
        let channels = cfg.get_or("ne", DEFAULT_CHANNELS)?;
        let reference = cfg.get_or("ref", channels / 2)?;
        let window_us: i64 = cfg.get_or("denoise_window_us", 10_000)?;
        let hot_threshold = cfg.get::<f64>("hot_threshold")?.filter(|&v| v > 0.0);
        let out = Self {
            frames_dir,
            timing,
            out_dir,
            threshold,
            degrade: degrade_params(cfg)?,
            channels,
            reference,
            c_deblur: cfg.get_or("c_deblur", threshold)?,
            blur_first: cfg.get_or("blur_first", 0)?,
            blur_count: cfg.get("blur_count")?,
            denoise_radius: cfg.get_or("denoise_radius", DEFAULT_RADIUS)?,
            denoise_window: window_us as f64 / 1e6,
            denoise_min_support: cfg.get_or("denoise_min_support", DEFAULT_MIN_SUPPORT)?,
            hot_threshold,
            metric: MetricConfig {
                alpha: cfg.get_or("alpha", 0.5)?,
                beta: cfg.get_or("beta", 0.5)?,
            },
        };
        let bad = |m: &str| Err(Error::Config(m.to_string()));
        if !(out.threshold > 0.0 && out.c_deblur > 0.0) {
            return bad("`threshold` and `c_deblur` must be positive");
        }
        if out.channels == 0 {
            return bad("`ne` must be at least 1");
        }
        if out.reference > out.channels {
            return bad("`ref` must be within 0..=ne");
        }
        if out.denoise_radius == 0 || window_us <= 0 {
            return bad("`denoise_radius` and `denoise_window_us` must be positive");
        }
        out.metric.validate().map_err(|e| Error::Config(e.to_string()))?;
        Ok(out)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let cfg = Config::load(path)?;
        Self::from_config(&cfg, path.parent().unwrap_or(Path::new(".")))
    }
}

/// Ordered `name=value` lines.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Report {
    pub entries: Vec<(String, String)>,
}

impl Report {
    pub fn push(&mut self, key: &str, value: impl std::fmt::Debug) {
        self.entries.push((key.to_string(), format!("{value:?}")));
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }

    pub fn render(&self) -> String {
        let mut s = String::new();
        for (k, v) in &self.entries {
            let _ = writeln!(s, "{k}={v}");
        }
        s
    }
}

/// Everything computed by one run, in memory.
#[derive(Debug, Clone)]
pub struct PipelineOutputs {
    pub undegraded: EventStream,
    pub degraded: EventStream,
    pub denoised: EventStream,
    pub blurry: Image,
    pub sharp: Image,
    pub reference_frame: usize,
    pub latents: [Image; 3],
    pub grids: [VoxelGrid; 3],
    pub report: Report,
}

/// Computes all pipeline products for already-loaded frames.
pub fn compute(frames: &FrameSequence, cfg: &PipelineConfig) -> Result<PipelineOutputs> {
    let (w, h) = frames.dims().ok_or_else(|| Error::invalid("no frames"))?;
    let blur_count = cfg
        .blur_count
        .unwrap_or_else(|| frames.len().saturating_sub(cfg.blur_first));
    let blurry = synthesize_blur(frames, cfg.blur_first, blur_count)?;
    let ts = frames.timestamps();
    let t0 = ts[cfg.blur_first];
    let t1 = ts[cfg.blur_first + blur_count - 1];
    if t1 <= t0 {
        return Err(Error::invalid("blur window must span at least two frames"));
    }

    let ideal = SensorModel::ideal(w, h, cfg.threshold)?;
    let paired = degrade_detailed(frames, &ideal, &cfg.degrade)?;
    let mut denoised = paired.degraded.clone();
    if let Some(rate) = cfg.hot_threshold {
        denoised = hot_pixel_filter(&denoised, rate)?;
    }
    denoised = scf_filter(&denoised, cfg.denoise_radius, cfg.denoise_window, cfg.denoise_min_support)?;

    let grid = |s: &EventStream| voxelize(s, t0, t1 - t0, cfg.channels);
    let grids = [grid(&paired.undegraded)?, grid(&paired.degraded)?, grid(&denoised)?];
    let edi = EdiConfig::new(cfg.c_deblur, cfg.reference);
    let latents = [
        edi_reconstruct(&blurry, &grids[0], &edi)?,
        edi_reconstruct(&blurry, &grids[1], &edi)?,
        edi_reconstruct(&blurry, &grids[2], &edi)?,
    ];

    // Ground truth: the frame nearest the reference boundary.
    let t_ref = grids[0].boundary_time(cfg.reference);
    let reference_frame = (0..frames.len())
        .min_by(|&a, &b| (ts[a] - t_ref).abs().total_cmp(&(ts[b] - t_ref).abs()))
        .expect("non-empty");
    let sharp = frames.frames()[reference_frame].clone();

    let mut report = Report::default();
    report.push("width", w);
    report.push("height", h);
    report.push("events_undegraded", paired.undegraded.len());
    report.push("events_degraded", paired.degraded.len());
    report.push("events_noise", paired.noise.len());
    report.push("events_denoised", denoised.len());
    report.push("ne", cfg.channels);
    report.push("ref", cfg.reference);
    report.push("reference_frame", reference_frame);
    report.push("event_l1", event_l1_response(&grids[1], &grids[0], &grids[1], &cfg.metric)?);
    report.push(
        "event_l1_denoised",
        event_l1_response(&grids[2], &grids[0], &grids[1], &cfg.metric)?,
    );
    let with_ssim = w >= SSIM_WINDOW && h >= SSIM_WINDOW;
    for (name, img) in [
        ("blurry", &blurry),
        ("undegraded", &latents[0]),
        ("degraded", &latents[1]),
        ("denoised", &latents[2]),
    ] {
        report.push(&format!("psnr_{name}"), psnr(img, &sharp)?);
        if with_ssim {
            report.push(&format!("ssim_{name}"), ssim(img, &sharp)?);
        }
        report.push(&format!("deblur_l1_{name}"), deblur_l1(img, &sharp)?);
    }

    Ok(PipelineOutputs {
        undegraded: paired.undegraded,
        degraded: paired.degraded,
        denoised,
        blurry,
        sharp,
        reference_frame,
        latents,
        grids,
        report,
    })
}

/// Output file names written by [`run`], relative to the output directory.
pub const OUTPUT_FILES: [&str; 12] = [
    "events_undegraded.bin",
    "events_degraded.bin",
    "events_denoised.bin",
    "voxel_undegraded.vox",
    "voxel_degraded.vox",
    "voxel_denoised.vox",
    "blurry.pgm",
    "sharp.pgm",
    "latent_undegraded.pgm",
    "latent_degraded.pgm",
    "latent_denoised.pgm",
    "report.txt",
];

/// Loads frames, computes every product and writes it to `cfg.out_dir`.
/// On failure, files already written by this run are removed.
pub fn run(cfg: &PipelineConfig) -> Result<Report> {
    let frames = load_frames(&cfg.frames_dir, &cfg.timing)?;
    let out = compute(&frames, cfg)?;

    let created_dir = !cfg.out_dir.exists();
    fs::create_dir_all(&cfg.out_dir).map_err(|e| Error::at_path(&cfg.out_dir, e))?;
    let mut written: Vec<PathBuf> = Vec::new();
    let result = write_outputs(&cfg.out_dir, &out, &mut written);
    if result.is_err() {
        for p in &written {
            let _ = fs::remove_file(p);
        }
        if created_dir {
            let _ = fs::remove_dir(&cfg.out_dir);
        }
    }
    result.map(|_| out.report)
}

fn write_outputs(dir: &Path, out: &PipelineOutputs, written: &mut Vec<PathBuf>) -> Result<()> {
    let mut track = |name: &str| {
        let p = dir.join(name);
        written.push(p.clone());
        p
    };
    write_events(track("events_undegraded.bin"), &out.undegraded)?;
    write_events(track("events_degraded.bin"), &out.degraded)?;
    write_events(track("events_denoised.bin"), &out.denoised)?;
    write_voxel(track("voxel_undegraded.vox"), &out.grids[0])?;
    write_voxel(track("voxel_degraded.vox"), &out.grids[1])?;
    write_voxel(track("voxel_denoised.vox"), &out.grids[2])?;
    write_image(track("blurry.pgm"), &out.blurry)?;
    write_image(track("sharp.pgm"), &out.sharp)?;
    write_image(track("latent_undegraded.pgm"), &out.latents[0])?;
    write_image(track("latent_degraded.pgm"), &out.latents[1])?;
    write_image(track("latent_denoised.pgm"), &out.latents[2])?;
    let report = format!(
        "# event_l1 values are the alpha-weighted response-masked L1 term only\n{}",
        out.report.render()
    );
    let p = track("report.txt");
    fs::write(&p, report).map_err(|e| Error::at_path(&p, e))
}

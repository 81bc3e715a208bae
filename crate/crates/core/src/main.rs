use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use evdeg::degradation::{bias_thresholds, generate_noise, limit_bandwidth};
use evdeg::denoise::{hot_pixel_filter, scf_filter};
use evdeg::edi::{edi_reconstruct, edi_sequence, EdiConfig};
use evdeg::error::{Error, Result};
use evdeg::event::EventStream;
use evdeg::image::{FrameSequence, Image};
use evdeg::io::config::{degrade_params, Config, DEGRADE_KEYS};
use evdeg::io::{
    load_frames, read_events, read_image, read_pnm, read_voxel, write_events, write_planes,
    write_voxel, FrameTiming,
};
use evdeg::metrics::{event_l1_response, psnr, ssim, stream_stats, MetricConfig, SSIM_WINDOW};
use evdeg::pipeline::{self, PipelineConfig, DEFAULT_THRESHOLD};
use evdeg::sensor::SensorModel;
use evdeg::simulator::simulate_events;
use evdeg::voxel::{voxelize, VoxelGrid};

#[derive(Parser)]
#[command(name = "evdeg", version, about = "Event-camera simulation, degradation and deblurring")]
struct Cli {
    /// Worker threads (default: all cores). Results do not depend on it.
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
#[group(required = true, multiple = false)]
struct Timing {
    /// Constant frame rate.
    #[arg(long)]
    fps: Option<f64>,
    /// File with one microsecond timestamp per frame.
    #[arg(long)]
    timestamps: Option<PathBuf>,
}

#[derive(Args)]
#[group(required = false, multiple = false)]
struct OptTiming {
    #[arg(long)]
    fps: Option<f64>,
    #[arg(long)]
    timestamps: Option<PathBuf>,
}

fn timing(fps: Option<f64>, timestamps: Option<PathBuf>) -> Option<FrameTiming> {
    match (fps, timestamps) {
        (Some(f), _) => Some(FrameTiming::Fps(f)),
        (None, Some(t)) => Some(FrameTiming::Timestamps(t)),
        _ => None,
    }
}

#[derive(Subcommand)]
enum Command {
    /// Generate ideal events from a frame directory.
    Simulate {
        #[arg(long)]
        frames: PathBuf,
        #[command(flatten)]
        timing: Timing,
        #[arg(long, default_value_t = DEFAULT_THRESHOLD)]
        threshold: f64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Apply threshold bias, bandwidth limiting and noise to an event file.
    Degrade {
        #[arg(long)]
        events: PathBuf,
        #[arg(long)]
        config: PathBuf,
        /// Frames for re-simulation (required when sigma > 0) and the
        /// shot-noise intensity hint.
        #[arg(long)]
        frames: Option<PathBuf>,
        #[command(flatten)]
        timing: OptTiming,
        #[arg(long)]
        out: PathBuf,
    },
    /// Bin events into a voxel tensor file.
    Voxelize {
        #[arg(long)]
        events: PathBuf,
        #[arg(long, default_value_t = 10)]
        ne: usize,
        /// Window start; defaults to the stream start.
        #[arg(long)]
        t0_us: Option<i64>,
        /// Window length; defaults to the stream duration.
        #[arg(long)]
        exposure_us: Option<i64>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Reconstruct sharp latent frames from a blurry image and events.
    Deblur {
        #[arg(long)]
        blurry: PathBuf,
        #[arg(long)]
        events: PathBuf,
        #[arg(long, default_value_t = 10)]
        ne: usize,
        #[arg(long, default_value_t = DEFAULT_THRESHOLD)]
        c: f64,
        /// Reference boundary, 0..=ne.
        #[arg(long = "ref", default_value_t = 0)]
        reference: usize,
        #[arg(long)]
        t0_us: Option<i64>,
        #[arg(long)]
        exposure_us: Option<i64>,
        /// Write every boundary image into the directory given by --out.
        #[arg(long)]
        sequence: bool,
        #[arg(long)]
        out: PathBuf,
    },
    /// Spatiotemporal and hot-pixel event filtering.
    Denoise {
        #[arg(long)]
        events: PathBuf,
        #[arg(long, default_value_t = 1)]
        radius: usize,
        #[arg(long, default_value_t = 10_000)]
        window_us: i64,
        #[arg(long, default_value_t = 2)]
        min_support: usize,
        /// Remove pixels firing faster than this many events/s.
        #[arg(long)]
        hot_threshold: Option<f64>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Compare images or voxel tensors.
    Eval {
        #[arg(long, requires = "gt", conflicts_with_all = ["pred_events", "ref_events", "deg_events"])]
        pred: Option<PathBuf>,
        #[arg(long)]
        gt: Option<PathBuf>,
        #[arg(long, requires_all = ["ref_events", "deg_events"])]
        pred_events: Option<PathBuf>,
        #[arg(long)]
        ref_events: Option<PathBuf>,
        #[arg(long)]
        deg_events: Option<PathBuf>,
        #[arg(long, default_value_t = 0.5)]
        alpha: f64,
        /// Also write the metric lines to this file.
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Run simulate, degrade, denoise, deblur and eval from one config.
    Pipeline {
        #[arg(long)]
        config: PathBuf,
    },
}

fn print_stats(stream: &EventStream) {
    let st = stream_stats(stream);
    println!("count={}", st.count);
    println!("on={}", st.on_count);
    println!("off={}", st.off_count);
    println!("duration={:?}", st.duration);
}

fn window(stream: &EventStream, t0_us: Option<i64>, exposure_us: Option<i64>) -> (f64, f64) {
    let t0 = t0_us.map(|v| v as f64 / 1e6).unwrap_or(stream.t_start);
    let dur = exposure_us
        .map(|v| v as f64 / 1e6)
        .unwrap_or(stream.t_end - t0);
    (t0, dur)
}

fn frames_from(dir: &Path, timing: Option<FrameTiming>) -> Result<FrameSequence> {
    let timing = timing
        .ok_or_else(|| Error::InvalidArgument("--fps or --timestamps is required with --frames".into()))?;
    load_frames(dir, &timing)
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Simulate {
            frames,
            timing: t,
            threshold,
            out,
        } => {
            let frames = frames_from(&frames, timing(t.fps, t.timestamps))?;
            let (w, h) = frames.dims().expect("loaded");
            let stream = simulate_events(&frames, &SensorModel::ideal(w, h, threshold)?)?;
            write_events(&out, &stream)?;
            print_stats(&stream);
        }
        Command::Degrade {
            events,
            config,
            frames,
            timing: t,
            out,
        } => {
            let cfg = Config::load(&config)?;
            let mut keys = DEGRADE_KEYS.to_vec();
            keys.push("threshold");
            cfg.check_keys(&keys)?;
            let params = degrade_params(&cfg)?;
            let threshold = cfg.get_or("threshold", DEFAULT_THRESHOLD)?;
            let input = read_events(&events)?;
            let frames = match frames {
                Some(dir) => Some(frames_from(&dir, timing(t.fps, t.timestamps))?),
                None => None,
            };
            let mut base = match (&frames, params.sigma > 0.0) {
                (Some(f), true) => {
                    let (w, h) = f.dims().expect("loaded");
                    if (w, h) != (input.width, input.height) {
                        return Err(Error::Geometry {
                            expected_w: input.width,
                            expected_h: input.height,
                            got_w: w,
                            got_h: h,
                        });
                    }
                    let sensor = bias_thresholds(&SensorModel::ideal(w, h, threshold)?, params.sigma, params.noise.seed)?;
                    simulate_events(f, &sensor)?
                }
                (None, true) => {
                    return Err(Error::Config("sigma > 0 requires --frames for re-simulation".into()))
                }
                (_, false) => input,
            };
            if let Some(f) = &frames {
                base.t_start = base.t_start.min(f.t_start());
                base.t_end = base.t_end.max(f.t_end());
            }
            let limited = limit_bandwidth(&base, params.sampling_period)?;
            let hint = frames.as_ref().and_then(FrameSequence::mean_frame);
            let noise = generate_noise(&limited, &params.noise, hint.as_ref())?;
            let degraded = limited.merge(&noise);
            write_events(&out, &degraded)?;
            print_stats(&degraded);
        }
        Command::Voxelize {
            events,
            ne,
            t0_us,
            exposure_us,
            out,
        } => {
            let stream = read_events(&events)?;
            let (t0, dur) = window(&stream, t0_us, exposure_us);
            write_voxel(&out, &voxelize(&stream, t0, dur, ne)?)?;
        }
        Command::Deblur {
            blurry,
            events,
            ne,
            c,
            reference,
            t0_us,
            exposure_us,
            sequence,
            out,
        } => {
            let planes = read_pnm(&blurry)?.planes;
            let stream = read_events(&events)?;
            let (t0, dur) = window(&stream, t0_us, exposure_us);
            let grid = voxelize(&stream, t0, dur, ne)?;
            println!("events={}", stream.len());
            if sequence {
                fs::create_dir_all(&out).map_err(Error::Io)?;
                let per_plane = planes
                    .iter()
                    .map(|p| edi_sequence(p, &grid, c))
                    .collect::<Result<Vec<_>>>()?;
                for r in 0..=ne {
                    let frame: Vec<Image> = per_plane.iter().map(|seq| seq[r].clone()).collect();
                    write_planes(out.join(format!("latent_{r:03}.{}", ext(&frame))), &frame)?;
                }
                println!("images={}", ne + 1);
            } else {
                let cfg = EdiConfig::new(c, reference);
                let latent = planes
                    .iter()
                    .map(|p| edi_reconstruct(p, &grid, &cfg))
                    .collect::<Result<Vec<_>>>()?;
                write_planes(&out, &latent)?;
            }
        }
        Command::Denoise {
            events,
            radius,
            window_us,
            min_support,
            hot_threshold,
            out,
        } => {
            let mut stream = read_events(&events)?;
            let before = stream.len();
            if let Some(rate) = hot_threshold {
                stream = hot_pixel_filter(&stream, rate)?;
            }
            stream = scf_filter(&stream, radius, window_us as f64 / 1e6, min_support)?;
            write_events(&out, &stream)?;
            println!("input={before}");
            println!("kept={}", stream.len());
        }
        Command::Eval {
            pred,
            gt,
            pred_events,
            ref_events,
            deg_events,
            alpha,
            report,
        } => {
            let mut lines = Vec::new();
            if let (Some(pred), Some(gt)) = (pred, gt) {
                let (a, b) = (read_image(pred)?, read_image(gt)?);
                lines.push(format!("psnr={:?}", psnr(&a, &b)?));
                if a.width() >= SSIM_WINDOW && a.height() >= SSIM_WINDOW {
                    lines.push(format!("ssim={:?}", ssim(&a, &b)?));
                }
            } else if let (Some(p), Some(r), Some(d)) = (pred_events, ref_events, deg_events) {
                let load = |p: PathBuf| -> Result<VoxelGrid> { read_voxel(p) };
                let (p, r, d) = (load(p)?, load(r)?, load(d)?);
                let cfg = MetricConfig {
                    alpha,
                    ..MetricConfig::default()
                };
                lines.push(format!("event_l1={:?}", event_l1_response(&p, &r, &d, &cfg)?));
            } else {
                return Err(Error::InvalidArgument(
                    "give --pred/--gt or --pred-events/--ref-events/--deg-events".into(),
                ));
            }
            for l in &lines {
                println!("{l}");
            }
            if let Some(path) = report {
                let text: String = lines.iter().map(|l| format!("{l}\n")).collect();
                fs::write(&path, text).map_err(Error::Io)?;
            }
        }
        Command::Pipeline { config } => {
            let cfg = PipelineConfig::load(&config)?;
            let report = pipeline::run(&cfg)?;
            print!("{}", report.render());
        }
    }
    Ok(())
}

fn ext(planes: &[Image]) -> &'static str {
    if planes.len() == 3 {
        "ppm"
    } else {
        "pgm"
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    }
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_input_error() { 2 } else { 1 })
        }
    }
}

//! Event-camera simulation and degradation toolkit.
//!
//! * [`simulator`] turns frame sequences into ideal DVS event streams.
//! * [`degradation`] applies threshold bias, limited bandwidth and circuit
//!   noise to build paired undegraded/degraded data.
//! * [`voxel`] bins events into `H x W x N_e` tensors.
//! * [`edi`] reconstructs sharp latent frames from a blurry frame and events.
//! * [`denoise`] holds classical event denoising baselines.
//! * [`metrics`] evaluates images and event tensors.
//! * [`io`] reads and writes the on-disk formats.

pub mod degradation;
pub mod denoise;
pub mod edi;
pub mod error;
pub mod event;
pub mod image;
pub mod io;
pub mod metrics;
pub mod pipeline;
pub mod sensor;
pub mod simulator;
pub mod voxel;

pub use degradation::{
    bias_thresholds, degrade_detailed, generate_noise, inject_noise, limit_bandwidth, make_pair,
    DegradeParams, NoiseParams, PairedStreams,
};
pub use denoise::{hot_pixel_filter, scf_filter};
pub use edi::{edi_reconstruct, edi_reconstruct_unclamped, edi_sequence, edi_weight, EdiConfig};
pub use error::{Error, Result};
pub use event::{canonical_sort, validate, Event, EventStream, Violation};
pub use image::{FrameSequence, Image};
pub use metrics::{
    deblur_l1, event_l1_response, psnr, ssim, stream_stats, MetricConfig, StreamStats,
};
pub use sensor::SensorModel;
pub use simulator::{log_map, simulate_events, synthesize_blur};
pub use voxel::{net_polarity, voxelize, VoxelGrid};

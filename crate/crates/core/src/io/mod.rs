//! On-disk formats. All binary layouts are little-endian and validated
//! against their headers on read.

pub mod config;
pub mod events;
pub mod frames;
pub mod pnm;
pub mod voxel;

pub use config::{degrade_params, Config};
pub use events::{read_events, write_events, EventFormat};
pub use frames::{load_frames, save_frames, FrameTiming};
pub use pnm::{read_image, read_pnm, write_image, write_planes, Pnm};
pub use voxel::{read_voxel, write_voxel};

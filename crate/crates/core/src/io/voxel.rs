//! Voxel tensor files (`VOX1`), little-endian:
//!
//! ```text
//! offset 0   magic    b"VOX1"
//!        4   height   u32
//!        8   width    u32
//!       12   channels u32
//!       16   t0_us    i64
//!       24   T_us     i64
//!       32   height * width * channels f32 values, (h, w, n) row-major
//! ```

use std::fs;
use std::path::Path;

use super::events::{from_micros, to_micros};
use crate::error::{Error, Result};
use crate::voxel::VoxelGrid;

pub const VOXEL_MAGIC: &[u8; 4] = b"VOX1";
pub const VOXEL_HEADER_LEN: usize = 32;

pub fn encode_voxel(grid: &VoxelGrid) -> Result<Vec<u8>> {
    let (h, w, n) = grid.shape();
    let dim = |v: usize| u32::try_from(v).map_err(|_| Error::invalid("voxel dimension exceeds u32"));
    let mut buf = Vec::with_capacity(VOXEL_HEADER_LEN + 4 * grid.data().len());
    buf.extend_from_slice(VOXEL_MAGIC);
    buf.extend_from_slice(&dim(h)?.to_le_bytes());
    buf.extend_from_slice(&dim(w)?.to_le_bytes());
    buf.extend_from_slice(&dim(n)?.to_le_bytes());
    buf.extend_from_slice(&to_micros(grid.t0).to_le_bytes());
    buf.extend_from_slice(&to_micros(grid.duration).to_le_bytes());
    for v in grid.data() {
        buf.extend_from_slice(&v.to_le_bytes());
    }
    Ok(buf)
}

pub fn decode_voxel(bytes: &[u8]) -> Result<VoxelGrid> {
    if bytes.len() < VOXEL_HEADER_LEN {
        return Err(Error::format("voxel", "truncated header"));
    }
    if &bytes[..4] != VOXEL_MAGIC {
        return Err(Error::format("voxel", "bad magic, expected VOX1"));
    }
    let u32_at = |o: usize| u32::from_le_bytes(bytes[o..o + 4].try_into().unwrap()) as usize;
    let i64_at = |o: usize| i64::from_le_bytes(bytes[o..o + 8].try_into().unwrap());
    let (h, w, n) = (u32_at(4), u32_at(8), u32_at(12));
    let (t0, dur) = (i64_at(16), i64_at(24));
    let values = h
        .checked_mul(w)
        .and_then(|v| v.checked_mul(n))
        .ok_or_else(|| Error::format("voxel", "header dimensions overflow"))?;
    let payload = &bytes[VOXEL_HEADER_LEN..];
    if payload.len() != values * 4 {
        return Err(Error::format(
            "voxel",
            format!("payload is {} bytes, header implies {}", payload.len(), values * 4),
        ));
    }
    let data = payload
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
        .collect();
    VoxelGrid::from_data(h, w, n, from_micros(t0), from_micros(dur), data)
}

pub fn read_voxel(path: impl AsRef<Path>) -> Result<VoxelGrid> {
    let path = path.as_ref();
    decode_voxel(&fs::read(path).map_err(|e| Error::at_path(path, e))?)
}

pub fn write_voxel(path: impl AsRef<Path>, grid: &VoxelGrid) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, encode_voxel(grid)?).map_err(|e| Error::at_path(path, e))
}

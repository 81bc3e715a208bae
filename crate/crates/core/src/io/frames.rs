//! Frame directories: PGM/PPM files in lexicographic order plus either a
//! constant frame rate or a timestamps file with one microsecond integer per
//! line.

use std::fs;
use std::path::{Path, PathBuf};

use super::events::{from_micros, to_micros};
use super::pnm::{read_image, write_image};
use crate::error::{Error, Result};
use crate::image::FrameSequence;

#[derive(Debug, Clone, PartialEq)]
pub enum FrameTiming {
    Fps(f64),
    Timestamps(PathBuf),
}

const FRAME_EXTENSIONS: [&str; 3] = ["pgm", "ppm", "pnm"];

/// Image files of a frame directory, sorted by file name.
pub fn frame_paths(dir: impl AsRef<Path>) -> Result<Vec<PathBuf>> {
    let dir = dir.as_ref();
    let entries = fs::read_dir(dir).map_err(|e| Error::at_path(dir, e))?;
    let mut paths = Vec::new();
    for entry in entries {
        let path = entry.map_err(|e| Error::at_path(dir, e))?.path();
        let is_frame = path
            .extension()
            .and_then(|e| e.to_str())
            .is_some_and(|ext| FRAME_EXTENSIONS.iter().any(|f| ext.eq_ignore_ascii_case(f)));
        if is_frame && path.is_file() {
            paths.push(path);
        }
    }
    paths.sort();
    Ok(paths)
}

pub fn read_timestamps(path: impl AsRef<Path>) -> Result<Vec<f64>> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::at_path(path, e))?;
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            l.trim().parse::<i64>().map(from_micros).map_err(|_| {
                Error::format("timestamps", format!("line {}: not an integer: {l:?}", i + 1))
            })
        })
        .collect()
}

/// Loads a frame directory as linear grayscale.
pub fn load_frames(dir: impl AsRef<Path>, timing: &FrameTiming) -> Result<FrameSequence> {
    let dir = dir.as_ref();
    let paths = frame_paths(dir)?;
    if paths.is_empty() {
        return Err(Error::invalid(format!("no PGM/PPM frames in {}", dir.display())));
    }
    let frames = paths.iter().map(read_image).collect::<Result<Vec<_>>>()?;
    match timing {
        FrameTiming::Fps(fps) => FrameSequence::with_fps(frames, *fps),
        FrameTiming::Timestamps(ts) => {
            let times = read_timestamps(ts)?;
            if times.len() != frames.len() {
                return Err(Error::invalid(format!(
                    "{} timestamps for {} frames",
                    times.len(),
                    frames.len()
                )));
            }
            FrameSequence::new(frames, times)
        }
    }
}

/// Writes `frame_00000.pgm`, ... and `timestamps.txt` into `dir`.
pub fn save_frames(dir: impl AsRef<Path>, frames: &FrameSequence) -> Result<()> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir).map_err(|e| Error::at_path(dir, e))?;
    let mut ts = String::new();
    for (i, (frame, t)) in frames.frames().iter().zip(frames.timestamps()).enumerate() {
        write_image(dir.join(format!("frame_{i:05}.pgm")), frame)?;
        ts.push_str(&format!("{}\n", to_micros(*t)));
    }
    let path = dir.join("timestamps.txt");
    fs::write(&path, ts).map_err(|e| Error::at_path(path, e))
}

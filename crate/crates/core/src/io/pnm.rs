//! Binary portable graymap / pixmap (P5 / P6).
//!
//! Pixel values map linearly: `v / maxval` on read (any maxval up to 255),
//! `round(clamp(v) * 255)` on write, always with maxval 255.

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::image::Image;

/// Decoded PNM: one plane for P5, three (R, G, B) for P6.
#[derive(Debug, Clone, PartialEq)]
pub struct Pnm {
    pub planes: Vec<Image>,
}

impl Pnm {
    pub fn is_color(&self) -> bool {
        self.planes.len() == 3
    }

    /// Grayscale view; color is reduced with `0.299 R + 0.587 G + 0.114 B`.
    pub fn to_gray(&self) -> Image {
        if let [r, g, b] = self.planes.as_slice() {
            let data = r
                .data()
                .iter()
                .zip(g.data())
                .zip(b.data())
                .map(|((r, g), b)| 0.299 * r + 0.587 * g + 0.114 * b)
                .collect();
            Image::new(r.width(), r.height(), data).expect("same geometry")
        } else {
            self.planes[0].clone()
        }
    }
}

struct Header {
    magic: [u8; 2],
    width: usize,
    height: usize,
    maxval: usize,
    data_offset: usize,
}

fn parse_header(bytes: &[u8]) -> Result<Header> {
    if bytes.len() < 2 || bytes[0] != b'P' {
        return Err(Error::format("image", "not a PNM file"));
    }
    let magic = [bytes[0], bytes[1]];
    if magic != *b"P5" && magic != *b"P6" {
        return Err(Error::format(
            "image",
            format!("unsupported magic {}", String::from_utf8_lossy(&magic)),
        ));
    }
    let mut pos = 2;
    let mut fields = [0usize; 3];
    for field in fields.iter_mut() {
        // Whitespace and comments.
        loop {
            match bytes.get(pos) {
                Some(b) if b.is_ascii_whitespace() => pos += 1,
                Some(b'#') => {
                    while pos < bytes.len() && bytes[pos] != b'\n' {
                        pos += 1;
                    }
                }
                _ => break,
            }
        }
        let start = pos;
        while pos < bytes.len() && bytes[pos].is_ascii_digit() {
            pos += 1;
        }
        if start == pos {
            return Err(Error::format("image", "malformed header"));
        }
        *field = std::str::from_utf8(&bytes[start..pos])
            .unwrap()
            .parse()
            .map_err(|_| Error::format("image", "header value out of range"))?;
    }
    // Exactly one whitespace byte separates the header from the raster.
    if !bytes.get(pos).is_some_and(u8::is_ascii_whitespace) {
        return Err(Error::format("image", "malformed header"));
    }
    let [width, height, maxval] = fields;
    if maxval == 0 || maxval > 255 {
        return Err(Error::format("image", format!("unsupported maxval {maxval}, expected 1..=255")));
    }
    if width == 0 || height == 0 {
        return Err(Error::format("image", "zero-sized image"));
    }
    Ok(Header {
        magic,
        width,
        height,
        maxval,
        data_offset: pos + 1,
    })
}

pub fn decode_pnm(bytes: &[u8]) -> Result<Pnm> {
    let h = parse_header(bytes)?;
    let channels = if h.magic == *b"P6" { 3 } else { 1 };
    let n = h.width * h.height;
    let scale = h.maxval as f64;
    let raster = &bytes[h.data_offset..];
    if raster.len() < n * channels {
        return Err(Error::format(
            "image",
            format!("raster has {} bytes, expected {}", raster.len(), n * channels),
        ));
    }
    let planes = (0..channels)
        .map(|c| {
            let data = (0..n).map(|i| raster[i * channels + c] as f64 / scale).collect();
            Image::new(h.width, h.height, data).expect("sized")
        })
        .collect();
    Ok(Pnm { planes })
}

#[inline]
fn quantize(v: f64) -> u8 {
    (v.clamp(0.0, 1.0) * 255.0).round() as u8
}

/// P5 for one plane, P6 for three.
pub fn encode_pnm(planes: &[&Image]) -> Result<Vec<u8>> {
    let magic = match planes.len() {
        1 => "P5",
        3 => "P6",
        n => return Err(Error::invalid(format!("cannot encode {n} planes as PNM"))),
    };
    let (w, h) = planes[0].dims();
    for p in &planes[1..] {
        planes[0].check_same_dims(p)?;
    }
    let mut buf = format!("{magic}\n{w} {h}\n255\n").into_bytes();
    buf.reserve(w * h * planes.len());
    for i in 0..w * h {
        for p in planes {
            buf.push(quantize(p.data()[i]));
        }
    }
    Ok(buf)
}

pub fn read_pnm(path: impl AsRef<Path>) -> Result<Pnm> {
    let path = path.as_ref();
    decode_pnm(&fs::read(path).map_err(|e| Error::at_path(path, e))?)
}

/// Reads a P5 or P6 file as a grayscale image.
pub fn read_image(path: impl AsRef<Path>) -> Result<Image> {
    Ok(read_pnm(path)?.to_gray())
}

/// Writes a P5 file.
pub fn write_image(path: impl AsRef<Path>, image: &Image) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, encode_pnm(&[image])?).map_err(|e| Error::at_path(path, e))
}

/// Writes one plane as P5 or three as P6.
pub fn write_planes(path: impl AsRef<Path>, planes: &[Image]) -> Result<()> {
    let path = path.as_ref();
    let refs: Vec<&Image> = planes.iter().collect();
    fs::write(path, encode_pnm(&refs)?).map_err(|e| Error::at_path(path, e))
}

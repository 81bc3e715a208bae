//! Event files.
//!
//! CSV: one `t_us,x,y,p` record per line. Lines starting with `#` are
//! comments; a leading `# width=W height=H t_start_us=A t_end_us=B` comment
//! carries the stream geometry and window, which otherwise are inferred.
//!
//! Binary (`EVS1`), little-endian:
//!
//! ```text
//! offset 0   magic  b"EVS1"
//!        4   width  u32
//!        8   height u32
//!       12   count  u32
//!       16   count x { t_us: i64, x: u16, y: u16, p: i8 }   (13 bytes each)
//! ```
//!
//! The binary header carries no window; on read it is `[0, last event]`.

use std::fs;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::event::{Event, EventStream};

pub const EVENTS_MAGIC: &[u8; 4] = b"EVS1";
pub const EVENTS_HEADER_LEN: usize = 16;
pub const EVENT_RECORD_LEN: usize = 13;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EventFormat {
    Csv,
    Bin,
}

impl EventFormat {
    /// `.csv` is CSV, anything else binary.
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some(ext) if ext.eq_ignore_ascii_case("csv") => EventFormat::Csv,
            _ => EventFormat::Bin,
        }
    }
}

/// Seconds to integer microseconds.
#[inline]
pub fn to_micros(t: f64) -> i64 {
    (t * 1e6).round() as i64
}

#[inline]
pub fn from_micros(us: i64) -> f64 {
    us as f64 / 1e6
}

fn checked_event(t_us: i64, x: u64, y: u64, p: i64, width: Option<usize>, height: Option<usize>, what: &str) -> Result<Event> {
    if p != 1 && p != -1 {
        return Err(Error::format("event", format!("{what}: polarity {p} is not -1 or 1")));
    }
    if t_us < 0 {
        return Err(Error::format("event", format!("{what}: negative timestamp {t_us}")));
    }
    let in_bounds = |v: u64, lim: Option<usize>| v <= u16::MAX as u64 && lim.is_none_or(|l| (v as usize) < l);
    if !in_bounds(x, width) || !in_bounds(y, height) {
        return Err(Error::format(
            "event",
            format!("{what}: coordinate ({x}, {y}) outside sensor geometry"),
        ));
    }
    Ok(Event::new(from_micros(t_us), x as u16, y as u16, p as i8))
}

fn finish(mut events: Vec<Event>, width: usize, height: usize, window: Option<(f64, f64)>) -> Result<EventStream> {
    let (t_start, t_end) = window.unwrap_or_else(|| {
        let last = events.iter().map(|e| e.t).fold(0.0, f64::max);
        (0.0, last)
    });
    if let Some(e) = events.iter().find(|e| e.t < t_start || e.t > t_end) {
        return Err(Error::format(
            "event",
            format!("timestamp {} outside declared window [{t_start}, {t_end}]", to_micros(e.t)),
        ));
    }
    crate::event::sort_events(&mut events);
    Ok(EventStream::new(width, height, t_start, t_end, events))
}

/// Parses CSV event text.
pub fn parse_csv(text: &str) -> Result<EventStream> {
    read_csv_from(text.as_bytes())
}

fn read_csv_from(reader: impl BufRead) -> Result<EventStream> {
    let mut width = None;
    let mut height = None;
    let mut t_start = None;
    let mut t_end = None;
    let mut events = Vec::new();
    let mut seen_record = false;
    for (lineno, line) in reader.lines().enumerate() {
        let line = line?;
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(comment) = line.strip_prefix('#') {
            if seen_record {
                continue;
            }
            for tok in comment.split_whitespace() {
                let Some((k, v)) = tok.split_once('=') else { continue };
                let bad = || Error::format("event", format!("line {}: bad header value {tok}", lineno + 1));
                match k {
                    "width" => width = Some(v.parse::<usize>().map_err(|_| bad())?),
                    "height" => height = Some(v.parse::<usize>().map_err(|_| bad())?),
                    "t_start_us" => t_start = Some(v.parse::<i64>().map_err(|_| bad())?),
                    "t_end_us" => t_end = Some(v.parse::<i64>().map_err(|_| bad())?),
                    _ => {}
                }
            }
            continue;
        }
        seen_record = true;
        let what = format!("line {}", lineno + 1);
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if fields.len() != 4 {
            return Err(Error::format("event", format!("{what}: expected t_us,x,y,p")));
        }
        let num = |s: &str| -> Result<i64> {
            s.parse::<i64>()
                .map_err(|_| Error::format("event", format!("{what}: not an integer: {s:?}")))
        };
        let (t, x, y, p) = (num(fields[0])?, num(fields[1])?, num(fields[2])?, num(fields[3])?);
        if x < 0 || y < 0 {
            return Err(Error::format("event", format!("{what}: negative coordinate")));
        }
        events.push(checked_event(t, x as u64, y as u64, p, width, height, &what)?);
    }
    let width = width.unwrap_or_else(|| events.iter().map(|e| e.x as usize + 1).max().unwrap_or(0));
    let height = height.unwrap_or_else(|| events.iter().map(|e| e.y as usize + 1).max().unwrap_or(0));
    let window = match (t_start, t_end) {
        (Some(a), Some(b)) if a <= b => Some((from_micros(a), from_micros(b))),
        (Some(_), Some(_)) => return Err(Error::format("event", "t_start_us after t_end_us")),
        _ => None,
    };
    finish(events, width, height, window)
}

/// Serializes a stream as CSV with a geometry header. Events are written in
/// canonical order.
pub fn write_csv_to(stream: &EventStream, mut out: impl Write) -> Result<()> {
    writeln!(
        out,
        "# width={} height={} t_start_us={} t_end_us={}",
        stream.width,
        stream.height,
        to_micros(stream.t_start),
        to_micros(stream.t_end)
    )?;
    for e in &quantized_events(stream) {
        writeln!(out, "{},{},{},{}", to_micros(e.t), e.x, e.y, e.p)?;
    }
    Ok(())
}

/// Events with timestamps rounded to whole microseconds, in canonical order
/// of the rounded values, as they appear on disk.
fn quantized_events(stream: &EventStream) -> Vec<Event> {
    let mut events: Vec<Event> = stream
        .events
        .iter()
        .map(|e| Event { t: from_micros(to_micros(e.t)), ..*e })
        .collect();
    crate::event::sort_events(&mut events);
    events
}

/// Encodes a stream in the binary format.
pub fn encode_bin(stream: &EventStream) -> Result<Vec<u8>> {
    let count = u32::try_from(stream.len()).map_err(|_| Error::invalid("too many events for EVS1"))?;
    let w = u32::try_from(stream.width).map_err(|_| Error::invalid("width exceeds u32"))?;
    let h = u32::try_from(stream.height).map_err(|_| Error::invalid("height exceeds u32"))?;
    let mut buf = Vec::with_capacity(EVENTS_HEADER_LEN + EVENT_RECORD_LEN * stream.len());
    buf.extend_from_slice(EVENTS_MAGIC);
    buf.extend_from_slice(&w.to_le_bytes());
    buf.extend_from_slice(&h.to_le_bytes());
    buf.extend_from_slice(&count.to_le_bytes());
    for e in &quantized_events(stream) {
        buf.extend_from_slice(&to_micros(e.t).to_le_bytes());
        buf.extend_from_slice(&e.x.to_le_bytes());
        buf.extend_from_slice(&e.y.to_le_bytes());
        buf.extend_from_slice(&e.p.to_le_bytes());
    }
    Ok(buf)
}

/// Decodes the binary format.
pub fn decode_bin(bytes: &[u8]) -> Result<EventStream> {
    if bytes.len() < EVENTS_HEADER_LEN {
        return Err(Error::format("event", "truncated header"));
    }
    if &bytes[0..4] != EVENTS_MAGIC {
        return Err(Error::format("event", "bad magic, expected EVS1"));
    }
    let u32_at = |o: usize| u32::from_le_bytes(bytes[o..o + 4].try_into().unwrap()) as usize;
    let (width, height, count) = (u32_at(4), u32_at(8), u32_at(12));
    let expected = EVENTS_HEADER_LEN + count * EVENT_RECORD_LEN;
    if bytes.len() < expected {
        return Err(Error::format(
            "event",
            format!("truncated file: {} bytes for {count} events", bytes.len()),
        ));
    }
    if bytes.len() > expected {
        return Err(Error::format("event", "trailing bytes after last record"));
    }
    let mut events = Vec::with_capacity(count);
    for (i, rec) in bytes[EVENTS_HEADER_LEN..].chunks_exact(EVENT_RECORD_LEN).enumerate() {
        let t = i64::from_le_bytes(rec[0..8].try_into().unwrap());
        let x = u16::from_le_bytes(rec[8..10].try_into().unwrap());
        let y = u16::from_le_bytes(rec[10..12].try_into().unwrap());
        let p = rec[12] as i8;
        events.push(checked_event(
            t,
            x as u64,
            y as u64,
            p as i64,
            Some(width),
            Some(height),
            &format!("record {i}"),
        )?);
    }
    finish(events, width, height, None)
}

pub fn read_events(path: impl AsRef<Path>) -> Result<EventStream> {
    let path = path.as_ref();
    match EventFormat::from_path(path) {
        EventFormat::Csv => {
            let f = fs::File::open(path).map_err(|e| Error::at_path(path, e))?;
            read_csv_from(BufReader::new(f))
        }
        EventFormat::Bin => decode_bin(&fs::read(path).map_err(|e| Error::at_path(path, e))?),
    }
}

pub fn write_events(path: impl AsRef<Path>, stream: &EventStream) -> Result<()> {
    let path = path.as_ref();
    match EventFormat::from_path(path) {
        EventFormat::Csv => {
            let f = fs::File::create(path).map_err(|e| Error::at_path(path, e))?;
            let mut w = BufWriter::new(f);
            write_csv_to(stream, &mut w)?;
            w.flush()?;
            Ok(())
        }
        EventFormat::Bin => {
            fs::write(path, encode_bin(stream)?).map_err(|e| Error::at_path(path, e))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_line_units() {
        let s = parse_csv("125,120,64,1\n").unwrap();
        assert_eq!(s.events, vec![Event::new(0.000125, 120, 64, 1)]);
        assert_eq!((s.width, s.height), (121, 65));
    }

    #[test]
    fn csv_zero_polarity_rejected() {
        assert!(matches!(parse_csv("125,120,64,0\n"), Err(Error::Format { .. })));
    }

    #[test]
    fn csv_header_bounds() {
        let text = "# width=4 height=4 t_start_us=0 t_end_us=1000\n10,4,0,1\n";
        assert!(parse_csv(text).is_err());
        let text = "# width=4 height=4 t_start_us=0 t_end_us=1000\n10,3,0,-1\n2000,0,0,1\n";
        assert!(parse_csv(text).is_err());
    }

    #[test]
    fn csv_roundtrip_with_header() {
        let s = EventStream::new(
            10,
            6,
            0.5,
            2.0,
            vec![Event::new(0.75, 3, 2, -1), Event::new(1.25, 9, 5, 1)],
        );
        let mut buf = Vec::new();
        write_csv_to(&s, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("# width=10 height=6 t_start_us=500000 t_end_us=2000000\n"));
        assert_eq!(parse_csv(&text).unwrap(), s);
    }

    #[test]
    fn bin_layout() {
        let s = EventStream::new(4, 3, 0.0, 1.0, vec![Event::new(0.000002, 1, 2, -1)]);
        let b = encode_bin(&s).unwrap();
        assert_eq!(b.len(), 16 + 13);
        assert_eq!(&b[..4], b"EVS1");
        assert_eq!(&b[4..16], &[4, 0, 0, 0, 3, 0, 0, 0, 1, 0, 0, 0]);
        assert_eq!(&b[16..], &[2, 0, 0, 0, 0, 0, 0, 0, 1, 0, 2, 0, 0xff]);
        let back = decode_bin(&b).unwrap();
        assert_eq!(back.events, s.events);
        assert_eq!((back.t_start, back.t_end), (0.0, 0.000002));
    }

    #[test]
    fn bin_errors() {
        let s = EventStream::new(4, 3, 0.0, 1.0, vec![Event::new(0.5, 1, 2, 1)]);
        let b = encode_bin(&s).unwrap();
        let mut bad = b.clone();
        bad[0] = b'X';
        assert!(decode_bin(&bad).is_err());
        assert!(decode_bin(&b[..b.len() - 1]).is_err());
        let mut bad = b.clone();
        bad[28] = 0;
        assert!(decode_bin(&bad).is_err());
        let mut bad = b;
        bad[24] = 9; // x = 9 >= width 4
        assert!(decode_bin(&bad).is_err());
    }
}

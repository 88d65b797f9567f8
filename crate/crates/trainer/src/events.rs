//! Plain-text event streams and event datasets.
//!
//! An event file starts with a `height width` line followed by one
//! `t x y polarity` line per event. Blank lines and lines starting with `#`
//! are ignored. A manifest lists one `path label` pair per line, with paths
//! relative to the manifest.

use std::fmt::Write as _;
use std::path::Path;

use stop_core::data::{slice_events, Dataset, Event, EventStream, FrameNormalization, Sample};
use stop_core::Frames;

use crate::error::{Failure, Result};

fn content_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'))
}

fn fields<const N: usize>(line: &str, n: usize) -> std::result::Result<[i64; N], String> {
    let mut out = [0i64; N];
    let mut parts = line.split_whitespace();
    for slot in out.iter_mut() {
        let p = parts
            .next()
            .ok_or_else(|| format!("line {n}: expected {N} fields"))?;
        *slot = p
            .parse()
            .map_err(|_| format!("line {n}: {p:?} is not an integer"))?;
    }
    if parts.next().is_some() {
        return Err(format!("line {n}: expected {N} fields"));
    }
    Ok(out)
}

pub fn parse_events(text: &str) -> std::result::Result<EventStream, String> {
    let mut lines = content_lines(text);
    let (n, header) = lines.next().ok_or("missing size header")?;
    let [h, w] = fields::<2>(header, n)?;
    if h <= 0 || w <= 0 {
        return Err(format!("line {n}: sensor size must be positive"));
    }
    let mut events = Vec::new();
    for (n, line) in lines {
        let [t, x, y, p] = fields::<4>(line, n)?;
        if x < 0 || y < 0 || !(0..=1).contains(&p) {
            return Err(format!("line {n}: invalid event"));
        }
        events.push(Event {
            t,
            x: x as usize,
            y: y as usize,
            polarity: p as u8,
        });
    }
    EventStream::new(h as usize, w as usize, events).map_err(|e| e.to_string())
}

pub fn format_events(stream: &EventStream) -> String {
    let mut s = format!("{} {}\n", stream.height(), stream.width());
    for e in stream.events() {
        let _ = writeln!(s, "{} {} {} {}", e.t, e.x, e.y, e.polarity);
    }
    s
}

pub fn read_events(path: &Path) -> Result<EventStream> {
    let text = std::fs::read_to_string(path).map_err(Failure::io(path))?;
    parse_events(&text).map_err(|e| Failure::Data(format!("{}: {e}", path.display())))
}

/// Loads every stream in a manifest and slices it into `steps` frames.
pub fn load_event_dataset(
    manifest: &Path,
    steps: usize,
    limit: Option<usize>,
) -> Result<(Dataset, Vec<usize>)> {
    let text = std::fs::read_to_string(manifest).map_err(Failure::io(manifest))?;
    let base = manifest.parent().unwrap_or(Path::new("."));
    let mut samples = Vec::new();
    let mut shape: Option<Vec<usize>> = None;
    for (n, line) in content_lines(&text).take(limit.unwrap_or(usize::MAX)) {
        let bad = |m: &str| Failure::Data(format!("{}:{n}: {m}", manifest.display()));
        let (path, label) = line
            .rsplit_once(char::is_whitespace)
            .ok_or_else(|| bad("expected `path label`"))?;
        let label: usize = label.parse().map_err(|_| bad("label is not an integer"))?;
        let stream = read_events(&base.join(path.trim()))?;
        let frames = slice_events(&stream, steps, FrameNormalization::PerSampleMax)?;
        let s = frames[0].shape().to_vec();
        if shape.get_or_insert_with(|| s.clone()) != &s {
            return Err(bad("sensor size differs from earlier streams"));
        }
        samples.push(Sample {
            frames: Frames::Sequence(frames),
            label,
        });
    }
    let shape =
        shape.ok_or_else(|| Failure::Data(format!("{}: no samples", manifest.display())))?;
    Ok((Dataset::new(samples), shape))
}

//! Binary PPM frames and the ground-truth / track CSV formats.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Deserialize;

use crate::appearance::{BoundingBox, Frame};
use crate::error::{Error, Result};
use crate::synth::{GroundTruthTable, GtRow};
use crate::tracker::TrackRecord;

pub const GT_HEADER: &str = "frame,target,x,y,w,h";
pub const TRACK_HEADER: &str = "frame,target,x,y,w,h,fitness,iters,ms";

fn ppm_err(offset: usize, message: impl Into<String>) -> Error {
    Error::Ppm {
        offset,
        message: message.into(),
    }
}

struct Header<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl Header<'_> {
    fn skip_space_and_comments(&mut self) {
        while let Some(&b) = self.bytes.get(self.pos) {
            if b == b'#' {
                while self.bytes.get(self.pos).is_some_and(|&b| b != b'\n') {
                    self.pos += 1;
                }
            } else if b.is_ascii_whitespace() {
                self.pos += 1;
            } else {
                break;
            }
        }
    }

    fn number(&mut self, what: &str) -> Result<usize> {
        self.skip_space_and_comments();
        let start = self.pos;
        while self.bytes.get(self.pos).is_some_and(u8::is_ascii_digit) {
            self.pos += 1;
        }
        if start == self.pos {
            return Err(ppm_err(start, format!("expected {what}")));
        }
        std::str::from_utf8(&self.bytes[start..self.pos])
            .expect("digits are ascii")
            .parse()
            .map_err(|_| ppm_err(start, format!("{what} out of range")))
    }
}

/// Parses a binary (P6) PPM with maxval 255.
pub fn read_ppm(bytes: &[u8]) -> Result<Frame> {
    if !bytes.starts_with(b"P6") {
        return Err(ppm_err(0, "expected magic P6"));
    }
    let mut h = Header { bytes, pos: 2 };
    if !h.bytes.get(2).is_some_and(|b| b.is_ascii_whitespace() || *b == b'#') {
        return Err(ppm_err(2, "expected whitespace after magic"));
    }
    let width = h.number("width")?;
    let height = h.number("height")?;
    let maxval_at = {
        h.skip_space_and_comments();
        h.pos
    };
    let maxval = h.number("maxval")?;
    if maxval != 255 {
        return Err(ppm_err(maxval_at, format!("maxval {maxval} unsupported, expected 255")));
    }
    if !h.bytes.get(h.pos).is_some_and(u8::is_ascii_whitespace) {
        return Err(ppm_err(h.pos, "expected single whitespace before pixel data"));
    }
    let start = h.pos + 1;
    let len = width
        .checked_mul(height)
        .and_then(|n| n.checked_mul(3))
        .ok_or_else(|| ppm_err(0, "dimensions overflow"))?;
    let payload = &bytes[start.min(bytes.len())..];
    if payload.len() < len {
        return Err(ppm_err(
            bytes.len(),
            format!("truncated pixel data: {} of {len} bytes", payload.len()),
        ));
    }
    let pixels = payload[..len].chunks_exact(3).map(|c| [c[0], c[1], c[2]]).collect();
    Frame::new(width, height, pixels).map_err(|e| ppm_err(0, e.to_string()))
}

/// Canonical `P6\n<w> <h>\n255\n` followed by the RGB payload.
pub fn write_ppm(frame: &Frame) -> Vec<u8> {
    let mut out = format!("P6\n{} {}\n255\n", frame.width(), frame.height()).into_bytes();
    out.reserve(frame.pixels().len() * 3);
    for p in frame.pixels() {
        out.extend_from_slice(p);
    }
    out
}

pub fn load_ppm(path: impl AsRef<Path>) -> Result<Frame> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    read_ppm(&bytes)
}

pub fn save_ppm(path: impl AsRef<Path>, frame: &Frame) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, write_ppm(frame)).map_err(|e| Error::io(path, e))
}

fn csv_err(line: u64, message: impl Into<String>) -> Error {
    Error::Csv {
        line: line as usize,
        message: message.into(),
    }
}

fn rows<T: for<'de> Deserialize<'de>>(text: &str, header: &str) -> Result<Vec<T>> {
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(text.as_bytes());
    let found = reader.headers().map_err(|e| csv_err(1, e.to_string()))?;
    if found.iter().collect::<Vec<_>>().join(",") != header {
        return Err(csv_err(1, format!("expected header `{header}`")));
    }
    reader
        .deserialize()
        .map(|r| {
            r.map_err(|e| {
                let line = e.position().map_or(0, |p| p.line());
                let message = match e.kind() {
                    csv::ErrorKind::Deserialize { err, .. } => err.to_string(),
                    _ => e.to_string(),
                };
                csv_err(line, message)
            })
        })
        .collect()
}

#[derive(Deserialize)]
struct GtCsvRow {
    frame: usize,
    target: usize,
    x: f64,
    y: f64,
    w: f64,
    h: f64,
}

fn checked_box(line: usize, x: f64, y: f64, w: f64, h: f64) -> Result<BoundingBox> {
    BoundingBox::new(x, y, w, h).map_err(|e| csv_err(line as u64, e.to_string()))
}

pub fn read_gt_csv(text: &str) -> Result<GroundTruthTable> {
    let parsed: Vec<GtCsvRow> = rows(text, GT_HEADER)?;
    let rows = parsed
        .into_iter()
        .enumerate()
        .map(|(i, r)| {
            Ok(GtRow {
                frame: r.frame,
                target: r.target,
                bbox: checked_box(i + 2, r.x, r.y, r.w, r.h)?,
            })
        })
        .collect::<Result<_>>()?;
    Ok(GroundTruthTable { rows })
}

pub fn write_gt_csv(gt: &GroundTruthTable) -> String {
    let mut out = format!("{GT_HEADER}\n");
    for r in &gt.rows {
        let b = r.bbox;
        out.push_str(&format!(
            "{},{},{:.6},{:.6},{:.6},{:.6}\n",
            r.frame, r.target, b.x, b.y, b.w, b.h
        ));
    }
    out
}

#[derive(Deserialize)]
struct TrackCsvRow {
    frame: usize,
    target: usize,
    x: f64,
    y: f64,
    w: f64,
    h: f64,
    fitness: f64,
    iters: usize,
    ms: f64,
}

/// Track rows. With `timing` off the `ms` column is written as zero so that
/// reruns are byte-identical.
pub fn write_track_csv(records: &[TrackRecord], timing: bool) -> String {
    let mut out = format!("{TRACK_HEADER}\n");
    for r in records {
        let b = r.bbox;
        let ms = if timing { r.elapsed_ms } else { 0.0 };
        out.push_str(&format!(
            "{},{},{:.6},{:.6},{:.6},{:.6},{:.6},{},{:.6}\n",
            r.frame_index, r.target, b.x, b.y, b.w, b.h, r.fitness, r.iterations_used, ms
        ));
    }
    out
}

/// Reads track rows back. Evaluation counts and the lost flag are not part of
/// the file format and come back as zero and `false`.
pub fn read_track_csv(text: &str) -> Result<Vec<TrackRecord>> {
    let parsed: Vec<TrackCsvRow> = rows(text, TRACK_HEADER)?;
    parsed
        .into_iter()
        .enumerate()
        .map(|(i, r)| {
            Ok(TrackRecord {
                frame_index: r.frame,
                target: r.target,
                bbox: checked_box(i + 2, r.x, r.y, r.w, r.h)?,
                fitness: r.fitness,
                iterations_used: r.iters,
                evaluations: 0,
                elapsed_ms: r.ms,
                lost: false,
            })
        })
        .collect()
}

pub fn frame_file_name(index: usize) -> String {
    format!("frame_{index:06}.ppm")
}

fn frame_index(name: &str) -> Option<usize> {
    let digits = name.strip_prefix("frame_")?.strip_suffix(".ppm")?;
    (digits.len() == 6 && digits.bytes().all(|b| b.is_ascii_digit())).then(|| digits.parse().ok())?
}

/// A directory of `frame_NNNNNN.ppm` files with an optional `gt.csv`.
#[derive(Debug, Clone, PartialEq)]
pub struct SequenceManifest {
    pub directory: PathBuf,
    pub frames: Vec<PathBuf>,
    pub ground_truth: Option<PathBuf>,
}

impl SequenceManifest {
    pub fn open(directory: impl AsRef<Path>) -> Result<Self> {
        let directory = directory.as_ref().to_path_buf();
        let entries = fs::read_dir(&directory).map_err(|e| Error::io(&directory, e))?;
        let mut indexed = Vec::new();
        for entry in entries {
            let entry = entry.map_err(|e| Error::io(&directory, e))?;
            if let Some(i) = entry.file_name().to_str().and_then(frame_index) {
                indexed.push((i, entry.path()));
            }
        }
        if indexed.is_empty() {
            return Err(Error::config(format!(
                "{} holds no frame_NNNNNN.ppm files",
                directory.display()
            )));
        }
        indexed.sort();
        let gt = directory.join("gt.csv");
        Ok(Self {
            ground_truth: gt.is_file().then_some(gt),
            frames: indexed.into_iter().map(|(_, p)| p).collect(),
            directory,
        })
    }

    /// Loads frames lazily, in index order.
    pub fn load_frames(&self) -> impl Iterator<Item = Result<Frame>> + '_ {
        self.frames.iter().map(load_ppm)
    }

    pub fn load_ground_truth(&self) -> Result<Option<GroundTruthTable>> {
        self.ground_truth.as_ref().map(|p| load_gt(p)).transpose()
    }
}

pub fn load_gt(path: impl AsRef<Path>) -> Result<GroundTruthTable> {
    let path = path.as_ref();
    read_gt_csv(&fs::read_to_string(path).map_err(|e| Error::io(path, e))?)
}

/// Writes frames as `frame_NNNNNN.ppm` plus `gt.csv` into `directory`,
/// creating it if needed.
pub fn write_sequence(directory: impl AsRef<Path>, frames: &[Frame], gt: &GroundTruthTable) -> Result<()> {
    let dir = directory.as_ref();
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    for (i, f) in frames.iter().enumerate() {
        save_ppm(dir.join(frame_file_name(i)), f)?;
    }
    let gt_path = dir.join("gt.csv");
    fs::write(&gt_path, write_gt_csv(gt)).map_err(|e| Error::io(&gt_path, e))
}

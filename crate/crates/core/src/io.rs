//! Frame and depth codecs, JSON sidecars and metric report writers.
//!
//! Raw float files (`.raw`) carry a 16-byte little-endian header followed by
//! row-major interleaved IEEE-754 `f32` samples:
//!
//! ```text
//! offset  size  field
//!      0     4  magic "SEUF"
//!      4     4  width    (u32)
//!      8     4  height   (u32)
//!     12     4  channels (u32; 3 for frames, 1 for depth)
//!     16   4*n  samples
//! ```
//!
//! Depth PNGs are 16-bit grayscale with `depth = pixel / 65535 * scale`.

use std::fs;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use image::{DynamicImage, ImageBuffer, Luma, Rgb as ImgRgb};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::image::{DepthMap, Frame, CHANNELS};
use crate::metrics::MetricReport;

pub const RAW_MAGIC: &[u8; 4] = b"SEUF";
const RAW_HEADER: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FrameFormat {
    #[default]
    Png,
    Raw,
}

impl FrameFormat {
    pub fn extension(self) -> &'static str {
        match self {
            Self::Png => "png",
            Self::Raw => "raw",
        }
    }

    pub fn from_path(path: &Path) -> Option<Self> {
        match path.extension()?.to_str()?.to_ascii_lowercase().as_str() {
            "png" => Some(Self::Png),
            "raw" => Some(Self::Raw),
            _ => None,
        }
    }
}

impl std::str::FromStr for FrameFormat {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "png" => Ok(Self::Png),
            "raw" => Ok(Self::Raw),
            other => Err(format!("unknown frame format {other:?} (expected png or raw)")),
        }
    }
}

/// `%06d.<ext>`
pub fn frame_file_name(index: usize, format: FrameFormat) -> String {
    format!("{index:06}.{}", format.extension())
}

/// Frame files (`.png` / `.raw`) in `dir`, sorted by name.
pub fn list_frames(dir: &Path) -> Result<Vec<PathBuf>> {
    let mut out = Vec::new();
    for entry in fs::read_dir(dir).map_err(|e| Error::io(dir, e))? {
        let path = entry.map_err(|e| Error::io(dir, e))?.path();
        if path.is_file() && FrameFormat::from_path(&path).is_some() {
            out.push(path);
        }
    }
    out.sort();
    Ok(out)
}

fn image_err(path: &Path) -> impl FnOnce(image::ImageError) -> Error + '_ {
    move |source| Error::Image {
        path: path.to_path_buf(),
        source,
    }
}

fn format_of(path: &Path) -> Result<FrameFormat> {
    FrameFormat::from_path(path).ok_or_else(|| {
        Error::InvalidParameter(format!("{}: unsupported extension (expected .png or .raw)", path.display()))
    })
}

pub fn read_frame(path: &Path) -> Result<Frame> {
    match format_of(path)? {
        FrameFormat::Png => {
            let img = image::open(path).map_err(image_err(path))?;
            let (w, h) = (img.width() as usize, img.height() as usize);
            match img {
                DynamicImage::ImageRgb8(buf) => Frame::from_rgb8(w, h, buf.as_raw()),
                other => Frame::new(w, h, other.to_rgb32f().into_raw()),
            }
        }
        FrameFormat::Raw => {
            let (w, h, data) = read_raw(path, CHANNELS)?;
            Frame::new(w, h, data)
        }
    }
}

pub fn write_frame(path: &Path, frame: &Frame) -> Result<()> {
    match format_of(path)? {
        FrameFormat::Png => {
            let buf: ImageBuffer<ImgRgb<u8>, Vec<u8>> =
                ImageBuffer::from_raw(frame.width() as u32, frame.height() as u32, frame.to_rgb8())
                    .expect("buffer sized from frame");
            buf.save(path).map_err(image_err(path))
        }
        FrameFormat::Raw => write_raw(path, frame.width(), frame.height(), CHANNELS, frame.data()),
    }
}

/// Reads depth; `scale` applies to PNG only, raw files store depth directly.
pub fn read_depth(path: &Path, scale: f32) -> Result<DepthMap> {
    match format_of(path)? {
        FrameFormat::Png => {
            let img = image::open(path).map_err(image_err(path))?;
            let (w, h) = (img.width() as usize, img.height() as usize);
            let data = match img {
                DynamicImage::ImageLuma16(buf) => buf
                    .as_raw()
                    .iter()
                    .map(|&v| (f64::from(v) / 65535.0 * f64::from(scale)) as f32)
                    .collect(),
                DynamicImage::ImageLuma8(buf) => buf
                    .as_raw()
                    .iter()
                    .map(|&v| (f64::from(v) / 255.0 * f64::from(scale)) as f32)
                    .collect(),
                other => {
                    return Err(Error::malformed(
                        path,
                        0,
                        format!("depth PNG must be grayscale, got {:?}", other.color()),
                    ))
                }
            };
            DepthMap::new(w, h, data)
        }
        FrameFormat::Raw => {
            let (w, h, data) = read_raw(path, 1)?;
            DepthMap::new(w, h, data)
        }
    }
}

/// Writes depth; PNG output quantizes `depth / scale` to 16 bits.
pub fn write_depth(path: &Path, depth: &DepthMap, scale: f32) -> Result<()> {
    match format_of(path)? {
        FrameFormat::Png => {
            if !(scale > 0.0 && scale.is_finite()) {
                return Err(Error::InvalidParameter(format!("depth scale must be > 0, got {scale}")));
            }
            let px: Vec<u16> = depth
                .data()
                .iter()
                .map(|&d| ((f64::from(d) / f64::from(scale)).clamp(0.0, 1.0) * 65535.0).round() as u16)
                .collect();
            let buf: ImageBuffer<Luma<u16>, Vec<u16>> =
                ImageBuffer::from_raw(depth.width() as u32, depth.height() as u32, px).expect("buffer sized from depth");
            buf.save(path).map_err(image_err(path))
        }
        FrameFormat::Raw => write_raw(path, depth.width(), depth.height(), 1, depth.data()),
    }
}

fn read_raw(path: &Path, channels: usize) -> Result<(usize, usize, Vec<f32>)> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    if bytes.len() < RAW_HEADER {
        return Err(Error::malformed(path, bytes.len() as u64, "truncated header"));
    }
    if &bytes[..4] != RAW_MAGIC {
        return Err(Error::malformed(path, 0, "bad magic"));
    }
    let word = |o: usize| u32::from_le_bytes(bytes[o..o + 4].try_into().unwrap()) as usize;
    let (w, h, c) = (word(4), word(8), word(12));
    if w == 0 || h == 0 {
        return Err(Error::malformed(path, 4, "zero dimension"));
    }
    if c != channels {
        return Err(Error::malformed(path, 12, format!("expected {channels} channels, found {c}")));
    }
    let want = w
        .checked_mul(h)
        .and_then(|n| n.checked_mul(c))
        .and_then(|n| n.checked_mul(4))
        .ok_or_else(|| Error::malformed(path, 4, "dimensions overflow"))?;
    let body = &bytes[RAW_HEADER..];
    if body.len() != want {
        let offset = (RAW_HEADER + body.len().min(want)) as u64;
        return Err(Error::malformed(
            path,
            offset,
            format!("expected {want} data bytes, found {}", body.len()),
        ));
    }
    let data = body
        .chunks_exact(4)
        .map(|b| f32::from_le_bytes(b.try_into().unwrap()))
        .collect();
    Ok((w, h, data))
}

fn write_raw(path: &Path, w: usize, h: usize, c: usize, data: &[f32]) -> Result<()> {
    let mut bytes = Vec::with_capacity(RAW_HEADER + data.len() * 4);
    bytes.extend_from_slice(RAW_MAGIC);
    for v in [w, h, c] {
        bytes.extend_from_slice(&(v as u32).to_le_bytes());
    }
    for v in data {
        bytes.extend_from_slice(&v.to_le_bytes());
    }
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_slice(&bytes).map_err(|source| Error::Json {
        path: path.to_path_buf(),
        source,
    })
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut s = serde_json::to_string_pretty(value).map_err(|source| Error::Json {
        path: path.to_path_buf(),
        source,
    })?;
    s.push('\n');
    fs::write(path, s).map_err(|e| Error::io(path, e))
}

/// One JSON document per line.
pub fn read_jsonl<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>> {
    let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut out = Vec::new();
    let mut offset = 0u64;
    for line in BufReader::new(file).lines() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if !line.trim().is_empty() {
            let v = serde_json::from_str(&line)
                .map_err(|e| Error::malformed(path, offset + e.column().saturating_sub(1) as u64, e.to_string()))?;
            out.push(v);
        }
        offset += line.len() as u64 + 1;
    }
    Ok(out)
}

/// Streaming writer for JSON-lines sidecars.
pub struct JsonlWriter {
    path: PathBuf,
    out: BufWriter<fs::File>,
}

impl JsonlWriter {
    pub fn create(path: &Path) -> Result<Self> {
        let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
        Ok(JsonlWriter {
            path: path.to_path_buf(),
            out: BufWriter::new(file),
        })
    }

    pub fn push<T: Serialize>(&mut self, value: &T) -> Result<()> {
        serde_json::to_writer(&mut self.out, value).map_err(|source| Error::Json {
            path: self.path.clone(),
            source,
        })?;
        self.out.write_all(b"\n").map_err(|e| Error::io(&self.path, e))
    }

    pub fn finish(mut self) -> Result<()> {
        self.out.flush().map_err(|e| Error::io(&self.path, e))
    }
}

pub fn write_jsonl<T: Serialize>(path: &Path, values: &[T]) -> Result<()> {
    let mut w = JsonlWriter::create(path)?;
    for v in values {
        w.push(v)?;
    }
    w.finish()
}

fn fmt_psnr(v: f64) -> String {
    if v.is_infinite() {
        "inf".to_string()
    } else {
        format!("{v:.6}")
    }
}

/// `frame_index,psnr,ssim` rows followed by a `mean` row.
pub fn write_report_csv(path: &Path, report: &MetricReport) -> Result<()> {
    let mut s = String::from("frame_index,psnr,ssim\n");
    for f in &report.per_frame {
        s.push_str(&format!("{},{},{:.8}\n", f.frame_index, fmt_psnr(f.psnr), f.ssim));
    }
    s.push_str(&format!("mean,{},{:.8}\n", fmt_psnr(report.mean_psnr), report.mean_ssim));
    fs::write(path, s).map_err(|e| Error::io(path, e))
}

pub fn create_dir(path: &Path) -> Result<()> {
    fs::create_dir_all(path).map_err(|e| Error::io(path, e))
}

//! CSV and IDX readers/writers.
//!
//! CSV layout: a header line `rows,cols,has_labels` (`has_labels` is `0`/`1`),
//! then one line per sample with `cols` decimal features and, when labelled, a
//! trailing integer class. UTF-8, LF line endings.
//!
//! IDX layout: big-endian magic `0x00000803` for a 3-D `u8` image tensor and
//! `0x00000801` for a 1-D `u8` label vector, each followed by its dimensions.

use std::fmt::Write as _;
use std::path::Path;

use super::Dataset;
use crate::error::{Error, Result};
use crate::numkit::Matrix;

const IDX_IMAGES: u32 = 0x0000_0803;
const IDX_LABELS: u32 = 0x0000_0801;

fn parse_err(offset: usize, detail: impl Into<String>) -> Error {
    Error::Parse {
        offset,
        detail: detail.into(),
    }
}

fn read(path: &Path) -> Result<Vec<u8>> {
    std::fs::read(path).map_err(|e| Error::io(path, e))
}

/// Parses the CSV layout from memory. Features are rescaled to `[-1, 1]` only
/// when some value lies outside that range (global min-max).
pub fn parse_csv(name: &str, text: &str) -> Result<Dataset> {
    let mut offset = 0;
    let mut lines = text.split_inclusive('\n');
    let header = lines.next().ok_or_else(|| parse_err(0, "empty file"))?;
    let fields: Vec<&str> = header.trim_end().split(',').collect();
    if fields.len() != 3 {
        return Err(parse_err(
            0,
            format!("header must be `rows,cols,has_labels`, got {header:?}"),
        ));
    }
    let num = |s: &str, what: &str| -> Result<usize> {
        s.trim()
            .parse::<usize>()
            .map_err(|_| parse_err(0, format!("bad {what} in header: {s:?}")))
    };
    let rows = num(fields[0], "rows")?;
    let cols = num(fields[1], "cols")?;
    let has_labels = match fields[2].trim() {
        "1" | "true" => true,
        "0" | "false" => false,
        other => return Err(parse_err(0, format!("bad has_labels in header: {other:?}"))),
    };
    offset += header.len();

    let width = cols + usize::from(has_labels);
    let mut data = Vec::with_capacity(rows * cols);
    let mut labels = Vec::new();
    let mut seen = 0;
    for line in lines {
        let body = line.trim_end_matches(['\n', '\r']);
        if body.is_empty() {
            offset += line.len();
            continue;
        }
        if seen == rows {
            return Err(parse_err(offset, format!("more records than the declared {rows}")));
        }
        let mut field_offset = offset;
        let mut count = 0;
        for (j, field) in body.split(',').enumerate() {
            if j >= width {
                return Err(parse_err(offset, format!("record has more than {width} fields")));
            }
            if has_labels && j == cols {
                let l = field
                    .trim()
                    .parse::<usize>()
                    .map_err(|_| parse_err(field_offset, format!("bad label {field:?}")))?;
                labels.push(l);
            } else {
                let v = field
                    .trim()
                    .parse::<f64>()
                    .ok()
                    .filter(|v| v.is_finite())
                    .ok_or_else(|| parse_err(field_offset, format!("bad value {field:?}")))?;
                data.push(v);
            }
            field_offset += field.len() + 1;
            count += 1;
        }
        if count != width {
            return Err(parse_err(
                offset,
                format!("record has {count} fields, expected {width}"),
            ));
        }
        seen += 1;
        offset += line.len();
    }
    if seen != rows {
        return Err(parse_err(
            offset,
            format!("header declares {rows} records, body has {seen}"),
        ));
    }
    rescale_if_needed(&mut data);
    Dataset::new(name, Matrix::from_vec(rows, cols, data)?, has_labels.then_some(labels))
}

fn rescale_if_needed(data: &mut [f64]) {
    let (lo, hi) = data.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
        (lo.min(v), hi.max(v))
    });
    if data.is_empty() || (lo >= -1.0 && hi <= 1.0) {
        return;
    }
    let span = hi - lo;
    for v in data.iter_mut() {
        *v = if span > 0.0 { 2.0 * (*v - lo) / span - 1.0 } else { 0.0 };
    }
}

pub fn load_csv(path: impl AsRef<Path>) -> Result<Dataset> {
    let path = path.as_ref();
    let bytes = read(path)?;
    let text = std::str::from_utf8(&bytes).map_err(|e| parse_err(e.valid_up_to(), "file is not valid UTF-8"))?;
    let name = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "csv".into());
    parse_csv(&name, text)
}

/// Renders `dataset` in the CSV layout using shortest round-trip floats.
pub fn to_csv(dataset: &Dataset) -> String {
    let x = dataset.features();
    let mut out = String::new();
    let _ = writeln!(
        out,
        "{},{},{}",
        x.rows(),
        x.cols(),
        u8::from(dataset.labels().is_some())
    );
    for r in 0..x.rows() {
        for (j, v) in x.row(r).iter().enumerate() {
            if j > 0 {
                out.push(',');
            }
            let _ = write!(out, "{v:?}");
        }
        if let Some(labels) = dataset.labels() {
            let _ = write!(out, ",{}", labels[r]);
        }
        out.push('\n');
    }
    out
}

pub fn write_csv(dataset: &Dataset, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, to_csv(dataset)).map_err(|e| Error::io(path, e))
}

fn be_u32(bytes: &[u8], at: usize) -> Result<u32> {
    bytes
        .get(at..at + 4)
        .map(|b| u32::from_be_bytes([b[0], b[1], b[2], b[3]]))
        .ok_or_else(|| parse_err(at, "truncated header"))
}

/// Parses IDX image and label buffers; pixels map to `p / 127.5 - 1`.
pub fn parse_idx(name: &str, images: &[u8], labels: Option<&[u8]>) -> Result<Dataset> {
    let magic = be_u32(images, 0)?;
    if magic != IDX_IMAGES {
        return Err(parse_err(
            0,
            format!("image magic {magic:#010x}, expected {IDX_IMAGES:#010x}"),
        ));
    }
    let n = be_u32(images, 4)? as usize;
    let h = be_u32(images, 8)? as usize;
    let w = be_u32(images, 12)? as usize;
    let body = &images[16..];
    if body.len() != n * h * w {
        return Err(parse_err(
            16 + body.len().min(n * h * w),
            format!(
                "header declares {n}x{h}x{w} = {} bytes, body has {}",
                n * h * w,
                body.len()
            ),
        ));
    }
    let data = body.iter().map(|&p| p as f64 / 127.5 - 1.0).collect();
    let features = Matrix::from_vec(n, h * w, data)?;

    let labels = match labels {
        None => None,
        Some(buf) => {
            let magic = be_u32(buf, 0)?;
            if magic != IDX_LABELS {
                return Err(parse_err(
                    0,
                    format!("label magic {magic:#010x}, expected {IDX_LABELS:#010x}"),
                ));
            }
            let count = be_u32(buf, 4)? as usize;
            let body = &buf[8..];
            if body.len() != count {
                return Err(parse_err(
                    8,
                    format!("header declares {count} labels, body has {}", body.len()),
                ));
            }
            if count != n {
                return Err(parse_err(4, format!("{count} labels for {n} images")));
            }
            Some(body.iter().map(|&l| l as usize).collect())
        }
    };
    Dataset::new(name, features, labels)
}

pub fn load_idx(images: impl AsRef<Path>, labels: Option<&Path>) -> Result<Dataset> {
    let images = images.as_ref();
    let img = read(images)?;
    let lab = labels.map(read).transpose()?;
    let name = images
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "idx".into());
    parse_idx(&name, &img, lab.as_deref())
}

/// Encodes raw `u8` images (and optional labels) in IDX form.
pub fn encode_idx(n: usize, h: usize, w: usize, pixels: &[u8], labels: Option<&[u8]>) -> (Vec<u8>, Option<Vec<u8>>) {
    let mut img = Vec::with_capacity(16 + pixels.len());
    for v in [IDX_IMAGES, n as u32, h as u32, w as u32] {
        img.extend_from_slice(&v.to_be_bytes());
    }
    img.extend_from_slice(pixels);
    let lab = labels.map(|l| {
        let mut out = Vec::with_capacity(8 + l.len());
        out.extend_from_slice(&IDX_LABELS.to_be_bytes());
        out.extend_from_slice(&(l.len() as u32).to_be_bytes());
        out.extend_from_slice(l);
        out
    });
    (img, lab)
}

use std::fs;
use std::io::Read;
use std::path::Path;

use flate2::read::GzDecoder;

use crate::{LabeledImage, MnistError, CLASSES};

/// Magic number of an unsigned-byte, 3-dimensional IDX file.
pub const IMAGE_MAGIC: u32 = 0x0000_0803;
/// Magic number of an unsigned-byte, 1-dimensional IDX file.
pub const LABEL_MAGIC: u32 = 0x0000_0801;

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8], MnistError> {
        let available = self.bytes.len() - self.pos;
        if n > available {
            return Err(MnistError::Truncated {
                offset: self.pos,
                needed: n,
                available,
            });
        }
        let s = &self.bytes[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn u32(&mut self) -> Result<u32, MnistError> {
        let b = self.take(4)?;
        Ok(u32::from_be_bytes([b[0], b[1], b[2], b[3]]))
    }

    fn magic(&mut self, expected: u32) -> Result<(), MnistError> {
        let offset = self.pos;
        let found = self.u32()?;
        if found != expected {
            return Err(MnistError::BadMagic {
                offset,
                expected,
                found,
            });
        }
        Ok(())
    }

    fn finish(&self) -> Result<(), MnistError> {
        match self.bytes.len() - self.pos {
            0 => Ok(()),
            extra => Err(MnistError::TrailingBytes {
                offset: self.pos,
                extra,
            }),
        }
    }
}

/// Decode an image/label IDX pair. Pixels are scaled by 1/255.
pub fn parse_idx(images: &[u8], labels: &[u8]) -> Result<Vec<LabeledImage>, MnistError> {
    let mut im = Cursor {
        bytes: images,
        pos: 0,
    };
    im.magic(IMAGE_MAGIC)?;
    let n_images = im.u32()? as usize;
    let rows = im.u32()? as usize;
    let cols = im.u32()? as usize;

    let mut lb = Cursor {
        bytes: labels,
        pos: 0,
    };
    lb.magic(LABEL_MAGIC)?;
    let n_labels = lb.u32()? as usize;
    if n_images != n_labels {
        return Err(MnistError::CountMismatch {
            images: n_images,
            labels: n_labels,
        });
    }

    let size = rows * cols;
    let mut out = Vec::with_capacity(n_images);
    for _ in 0..n_images {
        let px = im.take(size)?;
        let offset = lb.pos;
        let label = lb.take(1)?[0];
        if usize::from(label) >= CLASSES {
            return Err(MnistError::BadLabel {
                offset,
                value: label,
            });
        }
        let pixels = px.iter().map(|&b| f64::from(b) / 255.0).collect();
        out.push(LabeledImage::digit(pixels, label));
    }
    im.finish()?;
    lb.finish()?;
    Ok(out)
}

/// Read a file, gunzipping it when it starts with the gzip magic bytes.
pub fn read_maybe_gzip(path: &Path) -> Result<Vec<u8>, MnistError> {
    let io = |source| MnistError::Io {
        path: path.display().to_string(),
        source,
    };
    let raw = fs::read(path).map_err(io)?;
    if raw.starts_with(&[0x1f, 0x8b]) {
        let mut out = Vec::new();
        GzDecoder::new(raw.as_slice())
            .read_to_end(&mut out)
            .map_err(io)?;
        Ok(out)
    } else {
        Ok(raw)
    }
}

pub fn load_idx_pair(images: &Path, labels: &Path) -> Result<Vec<LabeledImage>, MnistError> {
    parse_idx(&read_maybe_gzip(images)?, &read_maybe_gzip(labels)?)
}

//! IDX readers for the ubyte digit datasets: magic `0x00000803` image files
//! and `0x00000801` label files, big-endian dimensions, pixels scaled to
//! `[0, 1]`.

use std::fs::File;
use std::io::{BufReader, Read};
use std::path::Path;

use crate::tensor::Matrix;
use crate::{Error, Result};

const IMAGES_MAGIC: u32 = 0x0000_0803;
const LABELS_MAGIC: u32 = 0x0000_0801;

fn format_err(detail: impl Into<String>) -> Error {
    Error::Format {
        format: "idx",
        detail: detail.into(),
    }
}

fn read_u32_be<R: Read>(reader: &mut R) -> Result<u32> {
    let mut buf = [0u8; 4];
    reader.read_exact(&mut buf)?;
    Ok(u32::from_be_bytes(buf))
}

/// Loaded image set: one column per sample, `rows * cols` pixels each.
#[derive(Clone, Debug)]
pub struct IdxImages {
    /// `D x N` matrix of pixels in `[0, 1]`, pixels in row-major order
    /// within each column.
    pub samples: Matrix,
    pub rows: usize,
    pub cols: usize,
}

pub fn read_images<R: Read>(reader: &mut R) -> Result<IdxImages> {
    let magic = read_u32_be(reader)?;
    if magic != IMAGES_MAGIC {
        return Err(format_err(format!(
            "bad image magic {magic:#010x}, expected {IMAGES_MAGIC:#010x}"
        )));
    }
    let count = read_u32_be(reader)? as usize;
    let rows = read_u32_be(reader)? as usize;
    let cols = read_u32_be(reader)? as usize;
    if count == 0 || rows == 0 || cols == 0 {
        return Err(format_err("empty image set"));
    }
    let dim = rows * cols;
    let mut raw = vec![0u8; count * dim];
    reader.read_exact(&mut raw)?;
    let mut data = vec![0.0f64; count * dim];
    for (sample, chunk) in raw.chunks_exact(dim).enumerate() {
        for (pixel, &byte) in chunk.iter().enumerate() {
            data[sample * dim + pixel] = byte as f64 / 255.0;
        }
    }
    Ok(IdxImages {
        samples: Matrix::new(dim, count, data)?,
        rows,
        cols,
    })
}

pub fn read_images_file(path: &Path) -> Result<IdxImages> {
    let mut reader = BufReader::new(File::open(path)?);
    read_images(&mut reader)
}

pub fn read_labels<R: Read>(reader: &mut R) -> Result<Vec<u8>> {
    let magic = read_u32_be(reader)?;
    if magic != LABELS_MAGIC {
        return Err(format_err(format!(
            "bad label magic {magic:#010x}, expected {LABELS_MAGIC:#010x}"
        )));
    }
    let count = read_u32_be(reader)? as usize;
    let mut labels = vec![0u8; count];
    reader.read_exact(&mut labels)?;
    Ok(labels)
}

pub fn read_labels_file(path: &Path) -> Result<Vec<u8>> {
    let mut reader = BufReader::new(File::open(path)?);
    read_labels(&mut reader)
}

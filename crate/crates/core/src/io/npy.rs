//! NPY v1.0 reader/writer for `<f8` arrays.
//!
//! Writes are bit-exact and canonical: magic `\x93NUMPY`, version `1.0`, a
//! 2-byte little-endian header length, the header dict
//! `{'descr': '<f8', 'fortran_order': True, 'shape': (J1, ..., JN), }`
//! space-padded so the total header block is a multiple of 64 bytes and ends
//! in a newline, followed by raw little-endian doubles in first-index-fastest
//! order (which is exactly this crate's tensor storage). Reading additionally
//! accepts C-order files and version 2.0 headers.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::tensor::{DenseTensor, Matrix, Shape};
use crate::{Error, Result};

const MAGIC: &[u8; 6] = b"\x93NUMPY";

fn format_err(detail: impl Into<String>) -> Error {
    Error::Format {
        format: "npy",
        detail: detail.into(),
    }
}

fn header_text(dims: &[usize]) -> String {
    let shape = if dims.len() == 1 {
        format!("({},)", dims[0])
    } else {
        let parts: Vec<String> = dims.iter().map(|d| d.to_string()).collect();
        format!("({})", parts.join(", "))
    };
    format!("{{'descr': '<f8', 'fortran_order': True, 'shape': {shape}, }}")
}

/// Writes a tensor in canonical NPY v1.0 form.
pub fn write_tensor<W: Write>(writer: &mut W, x: &DenseTensor) -> Result<()> {
    let mut header = header_text(x.shape().dims());
    let unpadded = MAGIC.len() + 2 + 2 + header.len() + 1;
    let padding = (64 - unpadded % 64) % 64;
    header.extend(std::iter::repeat(' ').take(padding));
    header.push('\n');
    writer.write_all(MAGIC)?;
    writer.write_all(&[0x01, 0x00])?;
    writer.write_all(&(header.len() as u16).to_le_bytes())?;
    writer.write_all(header.as_bytes())?;
    for v in x.data() {
        writer.write_all(&v.to_le_bytes())?;
    }
    Ok(())
}

pub fn write_tensor_file(path: &Path, x: &DenseTensor) -> Result<()> {
    let mut writer = BufWriter::new(File::create(path)?);
    write_tensor(&mut writer, x)?;
    writer.flush()?;
    Ok(())
}

/// Writes a matrix as a 2-D tensor.
pub fn write_matrix_file(path: &Path, m: &Matrix) -> Result<()> {
    let shape = Shape::new(vec![m.rows(), m.cols()])?;
    let tensor = DenseTensor::new(shape, m.data().to_vec())?;
    write_tensor_file(path, &tensor)
}

/// Extracts the value after `key` in the header dict, trimming quotes.
fn dict_field<'a>(header: &'a str, key: &str) -> Result<&'a str> {
    let pattern = format!("'{key}':");
    let start = header
        .find(&pattern)
        .ok_or_else(|| format_err(format!("missing key {key}")))?
        + pattern.len();
    let rest = header[start..].trim_start();
    Ok(rest)
}

fn parse_shape(header: &str) -> Result<Vec<usize>> {
    let rest = dict_field(header, "shape")?;
    let open = rest
        .find('(')
        .ok_or_else(|| format_err("shape is not a tuple"))?;
    let close = rest[open..]
        .find(')')
        .ok_or_else(|| format_err("unterminated shape tuple"))?
        + open;
    let inner = &rest[open + 1..close];
    let mut dims = Vec::new();
    for part in inner.split(',') {
        let token = part.trim();
        if token.is_empty() {
            continue;
        }
        dims.push(
            token
                .parse::<usize>()
                .map_err(|_| format_err(format!("bad shape entry {token:?}")))?,
        );
    }
    if dims.is_empty() {
        return Err(format_err("zero-dimensional arrays are not supported"));
    }
    Ok(dims)
}

/// Reads an NPY array of doubles; accepts both element orders.
pub fn read_tensor<R: Read>(reader: &mut R) -> Result<DenseTensor> {
    let mut magic = [0u8; 6];
    reader.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(format_err("bad magic bytes"));
    }
    let mut version = [0u8; 2];
    reader.read_exact(&mut version)?;
    let header_len = match version[0] {
        1 => {
            let mut len = [0u8; 2];
            reader.read_exact(&mut len)?;
            u16::from_le_bytes(len) as usize
        }
        2 => {
            let mut len = [0u8; 4];
            reader.read_exact(&mut len)?;
            u32::from_le_bytes(len) as usize
        }
        other => return Err(format_err(format!("unsupported version {other}"))),
    };
    let mut header_bytes = vec![0u8; header_len];
    reader.read_exact(&mut header_bytes)?;
    let header = String::from_utf8(header_bytes)
        .map_err(|_| format_err("header is not valid UTF-8"))?;

    let descr = dict_field(&header, "descr")?;
    if !descr.starts_with("'<f8'") {
        return Err(format_err(format!(
            "unsupported dtype (need '<f8'): {}",
            descr.chars().take(12).collect::<String>()
        )));
    }
    let fortran = dict_field(&header, "fortran_order")?.starts_with("True");
    let dims = parse_shape(&header)?;
    let shape = Shape::new(dims.clone()).map_err(|e| format_err(e.to_string()))?;
    let count = shape.len();
    let mut raw = vec![0u8; count * 8];
    reader.read_exact(&mut raw)?;
    let mut values = Vec::with_capacity(count);
    for chunk in raw.chunks_exact(8) {
        values.push(f64::from_le_bytes(chunk.try_into().unwrap()));
    }
    if !fortran {
        values = c_to_fortran(&values, &dims);
    }
    DenseTensor::new(shape, values)
}

/// Reorders a C-order (last index fastest) buffer into first-index-fastest.
fn c_to_fortran(values: &[f64], dims: &[usize]) -> Vec<f64> {
    let n = dims.len();
    let mut out = vec![0.0; values.len()];
    let mut f_strides = vec![1usize; n];
    for i in 1..n {
        f_strides[i] = f_strides[i - 1] * dims[i - 1];
    }
    let mut index = vec![0usize; n];
    for &v in values {
        let f_pos: usize = index.iter().zip(&f_strides).map(|(i, s)| i * s).sum();
        out[f_pos] = v;
        for axis in (0..n).rev() {
            index[axis] += 1;
            if index[axis] < dims[axis] {
                break;
            }
            index[axis] = 0;
        }
    }
    out
}

pub fn read_tensor_file(path: &Path) -> Result<DenseTensor> {
    let mut reader = BufReader::new(File::open(path)?);
    read_tensor(&mut reader)
}

/// Reads a 1-D or 2-D NPY file as a matrix (1-D becomes a column).
pub fn read_matrix_file(path: &Path) -> Result<Matrix> {
    let tensor = read_tensor_file(path)?;
    let dims = tensor.shape().dims();
    match dims.len() {
        1 => Matrix::new(dims[0], 1, tensor.data().to_vec()),
        2 => Matrix::new(dims[0], dims[1], tensor.data().to_vec()),
        n => Err(format_err(format!("expected 1-D or 2-D array, got {n}-D"))),
    }
}

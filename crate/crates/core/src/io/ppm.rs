//! Binary PPM (P6, maxval 255) reader and writer.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::{Error, Result};

/// Interleaved 8-bit RGB image.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RgbImage {
    pub width: usize,
    pub height: usize,
    /// `3 * width * height` bytes, row by row, RGB per pixel.
    pub data: Vec<u8>,
}

impl RgbImage {
    pub fn new(width: usize, height: usize, data: Vec<u8>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(format_err("image dimensions must be positive"));
        }
        if data.len() != 3 * width * height {
            return Err(format_err(format!(
                "pixel buffer has {} bytes, expected {}",
                data.len(),
                3 * width * height
            )));
        }
        Ok(Self {
            width,
            height,
            data,
        })
    }

    /// Channel value at 1-based row `i`, column `j`, channel `c` in 0..3.
    pub fn channel(&self, i: usize, j: usize, c: usize) -> u8 {
        self.data[((i - 1) * self.width + (j - 1)) * 3 + c]
    }
}

fn format_err(detail: impl Into<String>) -> Error {
    Error::Format {
        format: "ppm",
        detail: detail.into(),
    }
}

/// Reads one whitespace/comment-delimited header token.
fn read_token<R: Read>(reader: &mut R) -> Result<String> {
    let mut token = String::new();
    let mut byte = [0u8; 1];
    let mut in_comment = false;
    loop {
        if reader.read(&mut byte)? == 0 {
            if token.is_empty() {
                return Err(format_err("unexpected end of header"));
            }
            return Ok(token);
        }
        let ch = byte[0];
        if in_comment {
            if ch == b'\n' {
                in_comment = false;
            }
            continue;
        }
        match ch {
            b'#' => in_comment = true,
            b' ' | b'\t' | b'\r' | b'\n' => {
                if !token.is_empty() {
                    return Ok(token);
                }
            }
            _ => token.push(ch as char),
        }
    }
}

pub fn read_ppm<R: Read>(reader: &mut R) -> Result<RgbImage> {
    let magic = read_token(reader)?;
    if magic != "P6" {
        return Err(format_err(format!("expected P6 magic, got {magic:?}")));
    }
    let width: usize = read_token(reader)?
        .parse()
        .map_err(|_| format_err("bad width"))?;
    let height: usize = read_token(reader)?
        .parse()
        .map_err(|_| format_err("bad height"))?;
    let maxval: usize = read_token(reader)?
        .parse()
        .map_err(|_| format_err("bad maxval"))?;
    if maxval != 255 {
        return Err(format_err(format!("maxval must be 255, got {maxval}")));
    }
    // The token reader consumed exactly one whitespace byte after the maxval.
    let mut data = vec![0u8; 3 * width * height];
    reader.read_exact(&mut data)?;
    RgbImage::new(width, height, data)
}

pub fn read_ppm_file(path: &Path) -> Result<RgbImage> {
    let mut reader = BufReader::new(File::open(path)?);
    read_ppm(&mut reader)
}

pub fn write_ppm<W: Write>(writer: &mut W, image: &RgbImage) -> Result<()> {
    write!(writer, "P6\n{} {}\n255\n", image.width, image.height)?;
    writer.write_all(&image.data)?;
    Ok(())
}

pub fn write_ppm_file(path: &Path, image: &RgbImage) -> Result<()> {
    let mut writer = BufWriter::new(File::create(path)?);
    write_ppm(&mut writer, image)?;
    writer.flush()?;
    Ok(())
}

//! Grayscale PGM images (P2 ASCII and P5 binary).
//!
//! Pixels are returned as a `rows x cols` matrix scaled to `[0, 1]`.

use std::fs;
use std::path::Path;

use crate::{DMatrix, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PgmEncoding {
    Ascii,
    Binary,
}

pub fn read_image(path: impl AsRef<Path>) -> Result<DMatrix<f64>> {
    decode(&fs::read(path)?)
}

/// Writes `image` with values clamped to `[0, 1]` and quantized to 8 bits.
pub fn write_image(path: impl AsRef<Path>, image: &DMatrix<f64>, encoding: PgmEncoding) -> Result<()> {
    fs::write(path, encode(image, encoding))?;
    Ok(())
}

pub fn decode(bytes: &[u8]) -> Result<DMatrix<f64>> {
    let mut pos = 0;
    let magic = header_token(bytes, &mut pos)?;
    let binary = match magic.as_str() {
        "P2" => false,
        "P5" => true,
        other => return Err(Error::Image(format!("unsupported magic '{other}'"))),
    };
    let width = header_number(bytes, &mut pos, "width")?;
    let height = header_number(bytes, &mut pos, "height")?;
    let maxval = header_number(bytes, &mut pos, "maxval")?;
    if maxval != 255 && maxval != 65535 {
        return Err(Error::Image(format!("unsupported maxval {maxval}")));
    }
    if width == 0 || height == 0 {
        return Err(Error::Image("empty image".into()));
    }
    let count = width * height;
    let max = maxval as f64;

    let samples: Vec<usize> = if binary {
        // exactly one whitespace byte separates the header from the raster
        if pos >= bytes.len() || !bytes[pos].is_ascii_whitespace() {
            return Err(Error::Image("missing separator before raster".into()));
        }
        let data = &bytes[pos + 1..];
        let width_bytes = if maxval > 255 { 2 } else { 1 };
        if data.len() < count * width_bytes {
            return Err(Error::Image(format!("truncated raster: {} of {} bytes", data.len(), count * width_bytes)));
        }
        if width_bytes == 1 {
            data[..count].iter().map(|&v| v as usize).collect()
        } else {
            data[..2 * count].chunks_exact(2).map(|p| u16::from_be_bytes([p[0], p[1]]) as usize).collect()
        }
    } else {
        let mut values = Vec::with_capacity(count);
        for _ in 0..count {
            values.push(header_number(bytes, &mut pos, "sample")?);
        }
        values
    };
    if let Some(v) = samples.iter().find(|&&v| v > maxval) {
        return Err(Error::Image(format!("sample {v} exceeds maxval {maxval}")));
    }
    Ok(DMatrix::from_fn(height, width, |r, c| samples[r * width + c] as f64 / max))
}

pub fn encode(image: &DMatrix<f64>, encoding: PgmEncoding) -> Vec<u8> {
    let (rows, cols) = image.shape();
    let quantize = |v: f64| (v.clamp(0.0, 1.0) * 255.0).round() as u8;
    let magic = match encoding {
        PgmEncoding::Ascii => "P2",
        PgmEncoding::Binary => "P5",
    };
    let mut out = format!("{magic}\n{cols} {rows}\n255\n").into_bytes();
    for r in 0..rows {
        match encoding {
            PgmEncoding::Binary => out.extend((0..cols).map(|c| quantize(image[(r, c)]))),
            PgmEncoding::Ascii => {
                let line: Vec<String> = (0..cols).map(|c| quantize(image[(r, c)]).to_string()).collect();
                out.extend(line.join(" ").into_bytes());
                out.push(b'\n');
            }
        }
    }
    out
}

/// Next whitespace-delimited token, skipping `#` comments.
fn header_token(bytes: &[u8], pos: &mut usize) -> Result<String> {
    loop {
        while *pos < bytes.len() && bytes[*pos].is_ascii_whitespace() {
            *pos += 1;
        }
        if *pos < bytes.len() && bytes[*pos] == b'#' {
            while *pos < bytes.len() && bytes[*pos] != b'\n' {
                *pos += 1;
            }
            continue;
        }
        break;
    }
    let start = *pos;
    while *pos < bytes.len() && !bytes[*pos].is_ascii_whitespace() {
        *pos += 1;
    }
    if start == *pos {
        return Err(Error::Image("unexpected end of data".into()));
    }
    String::from_utf8(bytes[start..*pos].to_vec()).map_err(|_| Error::Image("non-ASCII header".into()))
}

fn header_number(bytes: &[u8], pos: &mut usize, what: &str) -> Result<usize> {
    let token = header_token(bytes, pos)?;
    token.parse().map_err(|_| Error::Image(format!("bad {what} '{token}'")))
}

/// Central `side x side` window of `image`.
pub fn center_crop(image: &DMatrix<f64>, side: usize) -> Result<DMatrix<f64>> {
    let (rows, cols) = image.shape();
    if side == 0 || side > rows || side > cols {
        return Err(Error::InvalidArgument(format!("cannot crop {side}x{side} from {rows}x{cols}")));
    }
    let (r0, c0) = ((rows - side) / 2, (cols - side) / 2);
    Ok(image.view((r0, c0), (side, side)).into_owned())
}

//! Grayscale portable float map codec.
//!
//! Layout: `Pf\n`, `<width> <height>\n`, a scale line whose negative sign
//! marks little-endian data (written as `-1.0\n`), then `width·height`
//! 32-bit floats stored bottom row first. Invalid pixels are quiet NaN.

use std::fs;
use std::path::Path;

use crate::error::{Error, PfmError, Result};
use crate::field::DepthField;

pub fn encode_pfm(field: &DepthField) -> Vec<u8> {
    let (w, h) = (field.width(), field.height());
    let mut out = format!("Pf\n{w} {h}\n-1.0\n").into_bytes();
    out.reserve(w * h * 4);
    for y in (0..h).rev() {
        for x in 0..w {
            let v = if field.is_valid(x, y) {
                field.get(x, y) as f32
            } else {
                f32::NAN
            };
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    out
}

/// Reads one whitespace-delimited header token starting at `*pos`.
fn next_token<'a>(bytes: &'a [u8], pos: &mut usize) -> Result<&'a str, PfmError> {
    while *pos < bytes.len() && bytes[*pos].is_ascii_whitespace() {
        *pos += 1;
    }
    let start = *pos;
    while *pos < bytes.len() && !bytes[*pos].is_ascii_whitespace() {
        *pos += 1;
    }
    if start == *pos {
        return Err(PfmError::MalformedHeader("unexpected end of header".into()));
    }
    std::str::from_utf8(&bytes[start..*pos])
        .map_err(|_| PfmError::MalformedHeader("header is not ASCII".into()))
}

pub fn decode_pfm(bytes: &[u8]) -> Result<DepthField> {
    let mut pos = 0;
    let magic = next_token(bytes, &mut pos)?;
    match magic {
        "Pf" => {}
        "PF" => return Err(PfmError::UnsupportedVariant(magic.into()).into()),
        other => return Err(PfmError::MalformedHeader(format!("bad magic `{other}`")).into()),
    }
    let parse_dim = |tok: &str, what: &str| -> Result<usize, PfmError> {
        match tok.parse::<usize>() {
            Ok(v) if v > 0 => Ok(v),
            _ => Err(PfmError::MalformedHeader(format!("bad {what} `{tok}`"))),
        }
    };
    let w = parse_dim(next_token(bytes, &mut pos)?, "width")?;
    let h = parse_dim(next_token(bytes, &mut pos)?, "height")?;
    let scale_tok = next_token(bytes, &mut pos)?;
    let scale: f64 = scale_tok
        .parse()
        .map_err(|_| PfmError::MalformedHeader(format!("bad scale `{scale_tok}`")))?;
    if !scale.is_finite() || scale == 0.0 {
        return Err(PfmError::MalformedHeader(format!("bad scale `{scale_tok}`")).into());
    }
    if scale > 0.0 {
        return Err(PfmError::UnsupportedEndianness(scale).into());
    }
    // exactly one whitespace byte separates the header from the payload
    if pos >= bytes.len() || !bytes[pos].is_ascii_whitespace() {
        return Err(PfmError::MalformedHeader("missing newline after scale".into()).into());
    }
    pos += 1;

    let expected = w
        .checked_mul(h)
        .and_then(|n| n.checked_mul(4))
        .ok_or_else(|| PfmError::MalformedHeader("dimensions overflow".into()))?;
    let payload = &bytes[pos..];
    if payload.len() < expected {
        return Err(PfmError::Truncated {
            expected,
            found: payload.len(),
        }
        .into());
    }
    let mut values = vec![0.0f64; w * h];
    let mut valid = vec![false; w * h];
    for (k, chunk) in payload[..expected].chunks_exact(4).enumerate() {
        let v = f32::from_le_bytes([chunk[0], chunk[1], chunk[2], chunk[3]]);
        let (x, row_from_bottom) = (k % w, k / w);
        let i = (h - 1 - row_from_bottom) * w + x;
        if v.is_finite() && v > 0.0 {
            values[i] = f64::from(v);
            valid[i] = true;
        } else {
            values[i] = f64::NAN;
        }
    }
    DepthField::with_mask(w, h, values, valid)
}

pub fn write_pfm(path: impl AsRef<Path>, field: &DepthField) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, encode_pfm(field)).map_err(|e| Error::io(path, e))
}

pub fn read_pfm(path: impl AsRef<Path>) -> Result<DepthField> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_pfm(&bytes)
}

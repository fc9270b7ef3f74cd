//! Binary (P5) graymaps for object masks and rendered absorption maps.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::optics::ObjectMask;

/// Decoded graymap with its declared maximum sample value.
#[derive(Clone, Debug, PartialEq)]
pub struct Graymap {
    pub width: usize,
    pub height: usize,
    pub maxval: u32,
    pub samples: Vec<u16>,
}

/// Parses the three header integers, skipping whitespace and `#` comments.
/// Returns them with the offset of the first sample byte.
fn header(bytes: &[u8]) -> Result<([usize; 3], usize)> {
    let bad = |m: &str| Error::Format(format!("graymap header: {m}"));
    if !bytes.starts_with(b"P5") {
        return Err(bad("not a binary graymap (P5)"));
    }
    let mut pos = 2;
    let mut out = [0usize; 3];
    for v in &mut out {
        loop {
            match bytes.get(pos) {
                Some(b'#') => {
                    while bytes.get(pos).is_some_and(|&b| b != b'\n') {
                        pos += 1;
                    }
                }
                Some(b) if b.is_ascii_whitespace() => pos += 1,
                Some(_) => break,
                None => return Err(bad("truncated")),
            }
        }
        let start = pos;
        while bytes.get(pos).is_some_and(u8::is_ascii_digit) {
            pos += 1;
        }
        *v = std::str::from_utf8(&bytes[start..pos])
            .ok()
            .and_then(|t| t.parse().ok())
            .ok_or_else(|| bad("expected an integer"))?;
    }
    // exactly one whitespace byte separates the header from the raster
    if !bytes.get(pos).is_some_and(u8::is_ascii_whitespace) {
        return Err(bad("missing separator"));
    }
    Ok((out, pos + 1))
}

pub fn parse_graymap(bytes: &[u8]) -> Result<Graymap> {
    let ([width, height, maxval], start) = header(bytes)?;
    if width == 0 || height == 0 || maxval == 0 || maxval > 65535 {
        return Err(Error::Format(format!(
            "graymap {width}x{height} with maxval {maxval}"
        )));
    }
    let wide = maxval > 255;
    let need = width * height * if wide { 2 } else { 1 };
    let raster = &bytes[start..];
    if raster.len() < need {
        return Err(Error::Format("graymap raster truncated".into()));
    }
    let samples = if wide {
        raster[..need]
            .chunks_exact(2)
            .map(|b| u16::from_be_bytes([b[0], b[1]]))
            .collect()
    } else {
        raster[..need].iter().map(|&b| u16::from(b)).collect()
    };
    Ok(Graymap {
        width,
        height,
        maxval: maxval as u32,
        samples,
    })
}

pub fn read_graymap(path: &Path) -> Result<Graymap> {
    parse_graymap(&std::fs::read(path)?)
}

/// Mask with α = gray / maxval.
pub fn read_mask(path: &Path) -> Result<ObjectMask> {
    let g = read_graymap(path)?;
    let alpha = g
        .samples
        .iter()
        .map(|&s| (s as f64 / g.maxval as f64).min(1.0))
        .collect();
    ObjectMask::new(g.width, g.height, alpha)
}

fn encode(path: &Path, width: usize, height: usize, maxval: u32, raster: &[u8]) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    write!(w, "P5\n{width} {height}\n{maxval}\n")?;
    w.write_all(raster)?;
    w.flush()?;
    Ok(())
}

pub fn write_gray8(path: &Path, width: usize, height: usize, samples: &[u8]) -> Result<()> {
    if samples.len() != width * height {
        return Err(Error::DimensionMismatch("graymap sample count".into()));
    }
    encode(path, width, height, 255, samples)
}

pub fn write_gray16(path: &Path, width: usize, height: usize, samples: &[u16]) -> Result<()> {
    if samples.len() != width * height {
        return Err(Error::DimensionMismatch("graymap sample count".into()));
    }
    let bytes: Vec<u8> = samples.iter().flat_map(|s| s.to_be_bytes()).collect();
    encode(path, width, height, 65535, &bytes)
}

/// Affine map from real values to 16-bit gray, stored next to each image.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GrayScale {
    /// Value rendered as gray 0.
    pub low: f64,
    /// Value rendered as gray 65535.
    pub high: f64,
}

impl GrayScale {
    pub fn gray(&self, v: f64) -> u16 {
        let t = (v - self.low) / (self.high - self.low);
        (t.clamp(0.0, 1.0) * 65535.0).round() as u16
    }

    pub fn value(&self, gray: u16) -> f64 {
        self.low + (self.high - self.low) * gray as f64 / 65535.0
    }
}

#[derive(Serialize, Deserialize)]
struct Sidecar {
    image: String,
    width: usize,
    height: usize,
    scale: GrayScale,
    quantity: String,
}

/// Writes `values` (NaN rendered as `low`) as a 16-bit P5 and the scaling to
/// `<path>.json`.
pub fn write_scaled(
    path: &Path,
    width: usize,
    height: usize,
    values: &[f64],
    scale: GrayScale,
    quantity: &str,
) -> Result<()> {
    let samples: Vec<u16> = values
        .iter()
        .map(|&v| if v.is_nan() { 0 } else { scale.gray(v) })
        .collect();
    write_gray16(path, width, height, &samples)?;
    let sidecar = Sidecar {
        image: path
            .file_name()
            .map(|n| n.to_string_lossy().into_owned())
            .unwrap_or_default(),
        width,
        height,
        scale,
        quantity: quantity.to_string(),
    };
    let mut json = path.as_os_str().to_owned();
    json.push(".json");
    std::fs::write(json, serde_json::to_vec_pretty(&sidecar)?)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sixteen_bit_is_p5_and_round_trips() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("a.pgm");
        let samples = [0u16, 1, 256, 65535, 4660, 7];
        write_gray16(&path, 3, 2, &samples).unwrap();
        let bytes = std::fs::read(&path).unwrap();
        assert!(bytes.starts_with(b"P5"));
        // big-endian samples
        assert_eq!(&bytes[bytes.len() - 12..bytes.len() - 10], &[0, 0]);
        assert_eq!(&bytes[bytes.len() - 6..bytes.len() - 4], &[0xff, 0xff]);
        let g = read_graymap(&path).unwrap();
        assert_eq!((g.width, g.height, g.maxval), (3, 2, 65535));
        assert_eq!(g.samples, samples);
    }

    #[test]
    fn mask_from_arbitrary_maxval() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.pgm");
        std::fs::write(&path, [&b"P5\n2 2\n20\n"[..], &[0, 1, 10, 20]].concat()).unwrap();
        let m = read_mask(&path).unwrap();
        assert_eq!(m.alpha(), &[0.0, 0.05, 0.5, 1.0]);

        std::fs::write(&path, b"P5 # comment\n2 1\n255\n\x00\xff").unwrap();
        assert_eq!(read_mask(&path).unwrap().alpha(), &[0.0, 1.0]);

        write_gray8(&path, 2, 1, &[0, 255]).unwrap();
        assert_eq!(read_mask(&path).unwrap().alpha(), &[0.0, 1.0]);
    }

    #[test]
    fn rejects_malformed() {
        assert!(parse_graymap(b"P2\n1 1\n255\n0").is_err());
        assert!(parse_graymap(b"P5\n2 2\n255\n\x00").is_err());
        assert!(parse_graymap(b"P5\n1 1\n0\n\x00").is_err());
    }

    #[test]
    fn scaling_is_affine_and_clamped() {
        let s = GrayScale {
            low: -0.1,
            high: 0.2,
        };
        assert_eq!(s.gray(-0.1), 0);
        assert_eq!(s.gray(0.2), 65535);
        assert_eq!(s.gray(5.0), 65535);
        assert!((s.value(s.gray(0.05)) - 0.05).abs() < 1e-5);
    }
}

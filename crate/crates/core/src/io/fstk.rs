//! `FSTK1` frame-stack files.
//!
//! Layout (all integers little-endian):
//!
//! ```text
//! "FSTK1" | u32 width | u32 height | u32 n_frames | u8 arm | u8 dtype (=4)
//! frames, row-major, u32 per pixel
//! ```

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::frame::{Arm, FrameStack, Geometry};

pub const MAGIC: &[u8; 5] = b"FSTK1";
pub const DTYPE_U32: u8 = 4;
pub const HEADER_LEN: usize = 5 + 4 * 3 + 2;

pub fn write_stack<W: Write>(mut w: W, stack: &FrameStack) -> Result<()> {
    let g = stack.geometry;
    w.write_all(MAGIC)?;
    w.write_all(&(g.width as u32).to_le_bytes())?;
    w.write_all(&(g.height as u32).to_le_bytes())?;
    w.write_all(&(g.n_frames as u32).to_le_bytes())?;
    w.write_all(&[stack.arm.tag(), DTYPE_U32])?;
    let mut buf = Vec::with_capacity(g.pixels() * 4);
    for frame in stack.frames() {
        buf.clear();
        for &c in frame {
            buf.extend_from_slice(&c.to_le_bytes());
        }
        w.write_all(&buf)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_stack<R: Read>(mut r: R) -> Result<FrameStack> {
    let mut header = [0u8; HEADER_LEN];
    r.read_exact(&mut header)
        .map_err(|_| Error::Format("truncated FSTK1 header".into()))?;
    if &header[..5] != MAGIC {
        return Err(Error::Format("not an FSTK1 file".into()));
    }
    let word = |i: usize| u32::from_le_bytes(header[i..i + 4].try_into().unwrap()) as usize;
    let (width, height, n_frames) = (word(5), word(9), word(13));
    let arm = Arm::from_tag(header[17])
        .ok_or_else(|| Error::Format(format!("unknown arm tag {}", header[17])))?;
    if header[18] != DTYPE_U32 {
        return Err(Error::Format(format!("unsupported dtype {}", header[18])));
    }
    let geometry =
        Geometry::new(width, height, n_frames).map_err(|e| Error::Format(e.to_string()))?;
    let mut bytes = vec![0u8; geometry.len() * 4];
    r.read_exact(&mut bytes)
        .map_err(|_| Error::Format("truncated FSTK1 payload".into()))?;
    let mut extra = [0u8; 1];
    if r.read(&mut extra)? != 0 {
        return Err(Error::Format("trailing bytes after FSTK1 payload".into()));
    }
    let counts = bytes
        .chunks_exact(4)
        .map(|b| u32::from_le_bytes(b.try_into().unwrap()))
        .collect();
    FrameStack::from_counts(geometry, arm, counts)
}

pub fn save(path: &Path, stack: &FrameStack) -> Result<()> {
    write_stack(BufWriter::new(File::create(path)?), stack)
}

pub fn load(path: &Path) -> Result<FrameStack> {
    read_stack(BufReader::new(File::open(path)?))
}

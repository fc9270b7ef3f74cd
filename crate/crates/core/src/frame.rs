//! Frame geometry and photon-count stacks.
//!
//! Pixels are stored row-major; frame `k` of a stack occupies
//! `counts[k * w * h .. (k + 1) * w * h]`. Signal pixel `(col, row)` is paired
//! with idler pixel `(w - 1 - col, h - 1 - row)`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Geometry {
    pub width: usize,
    pub height: usize,
    pub n_frames: usize,
}

impl Geometry {
    pub fn new(width: usize, height: usize, n_frames: usize) -> Result<Self> {
        let g = Geometry {
            width,
            height,
            n_frames,
        };
        g.validate()?;
        Ok(g)
    }

    pub fn validate(&self) -> Result<()> {
        if self.width == 0 || self.height == 0 {
            return Err(Error::InvalidGeometry(format!(
                "{}x{} frame has no pixels",
                self.width, self.height
            )));
        }
        if self.n_frames == 0 {
            return Err(Error::InvalidGeometry("n_frames must be positive".into()));
        }
        if self.width > u32::MAX as usize || self.height > u32::MAX as usize {
            return Err(Error::InvalidGeometry("dimensions exceed u32".into()));
        }
        Ok(())
    }

    #[inline]
    pub fn pixels(&self) -> usize {
        self.width * self.height
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.pixels() * self.n_frames
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn with_frames(&self, n_frames: usize) -> Geometry {
        Geometry { n_frames, ..*self }
    }

    #[inline]
    pub fn index(&self, col: usize, row: usize) -> usize {
        row * self.width + col
    }

    #[inline]
    pub fn coords(&self, idx: usize) -> (usize, usize) {
        (idx % self.width, idx / self.width)
    }

    /// Mirror partner of pixel `idx`: `(w-1-col, h-1-row)`. An involution.
    #[inline]
    pub fn mirror(&self, idx: usize) -> usize {
        self.pixels() - 1 - idx
    }

    /// Pixel at `(col + dx, row + dy)`, or `None` off the grid.
    #[inline]
    pub fn offset(&self, idx: usize, dx: i64, dy: i64) -> Option<usize> {
        let (c, r) = self.coords(idx);
        let c = c as i64 + dx;
        let r = r as i64 + dy;
        if c < 0 || r < 0 || c >= self.width as i64 || r >= self.height as i64 {
            None
        } else {
            Some(self.index(c as usize, r as usize))
        }
    }

    /// Number of pixels between `idx` and the closest frame edge.
    pub fn edge_distance(&self, idx: usize) -> usize {
        let (c, r) = self.coords(idx);
        c.min(r).min(self.width - 1 - c).min(self.height - 1 - r)
    }
}

/// Which beam a stack belongs to. The tag is the byte stored in FSTK1 files.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Arm {
    Signal,
    Idler,
    Single,
}

impl Arm {
    pub fn tag(self) -> u8 {
        match self {
            Arm::Signal => 0,
            Arm::Idler => 1,
            Arm::Single => 2,
        }
    }

    pub fn from_tag(tag: u8) -> Option<Arm> {
        match tag {
            0 => Some(Arm::Signal),
            1 => Some(Arm::Idler),
            2 => Some(Arm::Single),
            _ => None,
        }
    }
}

/// Integer photon counts, one frame after another.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FrameStack {
    pub geometry: Geometry,
    pub arm: Arm,
    counts: Vec<u32>,
}

impl FrameStack {
    pub fn zeros(geometry: Geometry, arm: Arm) -> Self {
        FrameStack {
            geometry,
            arm,
            counts: vec![0; geometry.len()],
        }
    }

    pub fn from_counts(geometry: Geometry, arm: Arm, counts: Vec<u32>) -> Result<Self> {
        geometry.validate()?;
        if counts.len() != geometry.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} counts for a {}x{}x{} stack",
                counts.len(),
                geometry.width,
                geometry.height,
                geometry.n_frames
            )));
        }
        Ok(FrameStack {
            geometry,
            arm,
            counts,
        })
    }

    /// A stack whose every frame is `frame`.
    pub fn repeat_frame(
        width: usize,
        height: usize,
        n_frames: usize,
        arm: Arm,
        frame: &[u32],
    ) -> Result<Self> {
        let geometry = Geometry::new(width, height, n_frames)?;
        if frame.len() != geometry.pixels() {
            return Err(Error::DimensionMismatch("frame length".into()));
        }
        let counts = frame.repeat(n_frames);
        Self::from_counts(geometry, arm, counts)
    }

    pub fn counts(&self) -> &[u32] {
        &self.counts
    }

    pub fn counts_mut(&mut self) -> &mut [u32] {
        &mut self.counts
    }

    pub fn into_counts(self) -> Vec<u32> {
        self.counts
    }

    pub fn n_frames(&self) -> usize {
        self.geometry.n_frames
    }

    pub fn frame(&self, k: usize) -> &[u32] {
        let p = self.geometry.pixels();
        &self.counts[k * p..(k + 1) * p]
    }

    pub fn frames(&self) -> std::slice::ChunksExact<'_, u32> {
        self.counts.chunks_exact(self.geometry.pixels())
    }

    pub fn with_arm(mut self, arm: Arm) -> Self {
        self.arm = arm;
        self
    }

    pub fn frame_total(&self, k: usize) -> u64 {
        self.frame(k).iter().map(|&c| c as u64).sum()
    }

    /// Frames `start..end` as a new stack.
    pub fn slice_frames(&self, start: usize, end: usize) -> Result<Self> {
        if start >= end || end > self.n_frames() {
            return Err(Error::DimensionMismatch(format!(
                "frame range {start}..{end} of {}",
                self.n_frames()
            )));
        }
        let p = self.geometry.pixels();
        Ok(FrameStack {
            geometry: self.geometry.with_frames(end - start),
            arm: self.arm,
            counts: self.counts[start * p..end * p].to_vec(),
        })
    }

    /// Frames of `self` followed by frames of `other`.
    pub fn concat(&self, other: &FrameStack) -> Result<Self> {
        if self.geometry.width != other.geometry.width
            || self.geometry.height != other.geometry.height
        {
            return Err(Error::DimensionMismatch("frame sizes differ".into()));
        }
        let mut counts = self.counts.clone();
        counts.extend_from_slice(&other.counts);
        Ok(FrameStack {
            geometry: self
                .geometry
                .with_frames(self.n_frames() + other.n_frames()),
            arm: self.arm,
            counts,
        })
    }

    pub fn to_real(&self) -> RealStack {
        RealStack {
            geometry: self.geometry,
            values: self.counts.iter().map(|&c| c as f64).collect(),
        }
    }
}

/// Real-valued frames, e.g. after flat-field compensation.
#[derive(Clone, Debug, PartialEq)]
pub struct RealStack {
    pub geometry: Geometry,
    values: Vec<f64>,
}

impl RealStack {
    pub fn from_values(geometry: Geometry, values: Vec<f64>) -> Result<Self> {
        if values.len() != geometry.len() {
            return Err(Error::DimensionMismatch("value count".into()));
        }
        Ok(RealStack { geometry, values })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn frame(&self, k: usize) -> &[f64] {
        let p = self.geometry.pixels();
        &self.values[k * p..(k + 1) * p]
    }

    pub fn n_frames(&self) -> usize {
        self.geometry.n_frames
    }
}

/// Signal and idler stacks of the same run.
#[derive(Clone, Debug, PartialEq)]
pub struct PairStack {
    pub signal: FrameStack,
    pub idler: FrameStack,
}

impl PairStack {
    pub fn new(signal: FrameStack, idler: FrameStack) -> Result<Self> {
        if signal.geometry != idler.geometry {
            return Err(Error::DimensionMismatch(format!(
                "signal {:?} vs idler {:?}",
                signal.geometry, idler.geometry
            )));
        }
        Ok(PairStack { signal, idler })
    }

    pub fn geometry(&self) -> Geometry {
        self.signal.geometry
    }

    pub fn n_frames(&self) -> usize {
        self.signal.n_frames()
    }

    pub fn frame(&self, k: usize) -> FramePair<'_, u32> {
        FramePair {
            width: self.signal.geometry.width,
            height: self.signal.geometry.height,
            signal: self.signal.frame(k),
            idler: self.idler.frame(k),
        }
    }

    pub fn concat(&self, other: &PairStack) -> Result<Self> {
        PairStack::new(
            self.signal.concat(&other.signal)?,
            self.idler.concat(&other.idler)?,
        )
    }
}

/// Borrowed signal/idler frame of one shot.
#[derive(Clone, Copy, Debug)]
pub struct FramePair<'a, T> {
    pub width: usize,
    pub height: usize,
    pub signal: &'a [T],
    pub idler: &'a [T],
}

impl<'a, T> FramePair<'a, T> {
    pub fn new(width: usize, height: usize, signal: &'a [T], idler: &'a [T]) -> Result<Self> {
        if signal.len() != width * height || idler.len() != width * height {
            return Err(Error::DimensionMismatch(format!(
                "frame pair of {} and {} pixels on a {width}x{height} grid",
                signal.len(),
                idler.len()
            )));
        }
        Ok(FramePair {
            width,
            height,
            signal,
            idler,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mirror_is_involution_and_matches_coordinates() {
        let g = Geometry::new(5, 3, 1).unwrap();
        let mut hit = vec![false; g.pixels()];
        for idx in 0..g.pixels() {
            let m = g.mirror(idx);
            assert_eq!(g.mirror(m), idx);
            let (c, r) = g.coords(idx);
            assert_eq!(g.coords(m), (4 - c, 2 - r));
            hit[m] = true;
        }
        assert!(hit.into_iter().all(|h| h));
    }

    #[test]
    fn rejects_empty_geometry() {
        assert!(Geometry::new(0, 4, 1).is_err());
        assert!(Geometry::new(4, 4, 0).is_err());
    }

    #[test]
    fn offsets_stay_on_grid() {
        let g = Geometry::new(4, 4, 1).unwrap();
        assert_eq!(g.offset(0, -1, 0), None);
        assert_eq!(g.offset(0, 1, 1), Some(5));
        assert_eq!(g.offset(15, 1, 0), None);
        assert_eq!(g.edge_distance(5), 1);
    }

    #[test]
    fn concat_and_slice() {
        let a = FrameStack::repeat_frame(2, 1, 2, Arm::Single, &[1, 2]).unwrap();
        let b = FrameStack::repeat_frame(2, 1, 1, Arm::Single, &[3, 4]).unwrap();
        let c = a.concat(&b).unwrap();
        assert_eq!(c.counts(), &[1, 2, 1, 2, 3, 4]);
        assert_eq!(c.slice_frames(2, 3).unwrap(), b);
    }
}

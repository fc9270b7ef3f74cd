use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::frame::Geometry;

/// Integer displacement of the idler sampling point, in pixels.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ShiftVector {
    pub dx: i64,
    pub dy: i64,
}

impl ShiftVector {
    pub const ZERO: ShiftVector = ShiftVector { dx: 0, dy: 0 };

    pub fn new(dx: i64, dy: i64) -> Self {
        ShiftVector { dx, dy }
    }

    pub fn norm2(&self) -> i64 {
        self.dx * self.dx + self.dy * self.dy
    }

    /// Chebyshev length.
    pub fn reach(&self) -> usize {
        self.dx.unsigned_abs().max(self.dy.unsigned_abs()) as usize
    }

    /// Whether the shift moves the reference outside the pair-correlation
    /// footprint of a kernel of the given radius.
    pub fn decorrelates(&self, kernel_radius: usize) -> bool {
        self.reach() > kernel_radius
    }

    /// Default reference shift: four kernel radii along x, never less than
    /// four pixels.
    pub fn default_for_radius(kernel_radius: usize) -> Self {
        ShiftVector::new(4 * kernel_radius.max(1) as i64, 0)
    }

    pub fn plus(&self, other: ShiftVector) -> ShiftVector {
        ShiftVector::new(self.dx + other.dx, self.dy + other.dy)
    }
}

/// A set of signal pixels together with their idler partners
/// `m(x) + registration`.
#[derive(Clone, Debug, PartialEq)]
pub struct Region {
    width: usize,
    height: usize,
    registration: ShiftVector,
    pixels: Vec<usize>,
    partners: Vec<usize>,
}

impl Region {
    /// Signal pixels `pixels` (sorted, deduplicated). Pixels whose partner
    /// falls off the grid are rejected.
    pub fn from_pixels(
        width: usize,
        height: usize,
        pixels: impl IntoIterator<Item = usize>,
        registration: ShiftVector,
    ) -> Result<Region> {
        let g = Geometry {
            width,
            height,
            n_frames: 1,
        };
        let mut pixels: Vec<usize> = pixels.into_iter().collect();
        pixels.sort_unstable();
        pixels.dedup();
        if pixels.is_empty() {
            return Err(Error::Degenerate("empty region".into()));
        }
        let mut partners = Vec::with_capacity(pixels.len());
        for &x in &pixels {
            if x >= g.pixels() {
                return Err(Error::DimensionMismatch(format!(
                    "pixel {x} outside {width}x{height}"
                )));
            }
            let p = g
                .offset(g.mirror(x), registration.dx, registration.dy)
                .ok_or_else(|| {
                    Error::DimensionMismatch(format!("partner of pixel {x} leaves the idler grid"))
                })?;
            partners.push(p);
        }
        Ok(Region {
            width,
            height,
            registration,
            pixels,
            partners,
        })
    }

    pub fn full(width: usize, height: usize) -> Result<Region> {
        Self::from_pixels(width, height, 0..width * height, ShiftVector::ZERO)
    }

    /// Pixels at least `margin` away from every edge.
    pub fn interior(width: usize, height: usize, margin: usize) -> Result<Region> {
        Self::interior_registered(width, height, margin, ShiftVector::ZERO)
    }

    /// Interior pixels whose registered partners are also on the grid.
    pub fn interior_registered(
        width: usize,
        height: usize,
        margin: usize,
        registration: ShiftVector,
    ) -> Result<Region> {
        let g = Geometry {
            width,
            height,
            n_frames: 1,
        };
        let pixels = (0..g.pixels()).filter(|&x| {
            g.edge_distance(x) >= margin
                && g.offset(g.mirror(x), registration.dx, registration.dy)
                    .is_some()
        });
        Self::from_pixels(width, height, pixels, registration)
    }

    /// Subset of the region satisfying `keep`.
    pub fn restrict(&self, keep: impl Fn(usize) -> bool) -> Result<Region> {
        Self::from_pixels(
            self.width,
            self.height,
            self.pixels.iter().copied().filter(|&x| keep(x)),
            self.registration,
        )
    }

    /// Partners displaced by `shift` on top of the registration. Pixels whose
    /// displaced partner leaves the grid are dropped.
    pub fn shifted(&self, shift: ShiftVector) -> Result<Region> {
        let g = self.geometry();
        let reg = self.registration.plus(shift);
        let pixels = self
            .pixels
            .iter()
            .copied()
            .filter(|&x| g.offset(g.mirror(x), reg.dx, reg.dy).is_some());
        Self::from_pixels(self.width, self.height, pixels, reg)
    }

    pub fn geometry(&self) -> Geometry {
        Geometry {
            width: self.width,
            height: self.height,
            n_frames: 1,
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn registration(&self) -> ShiftVector {
        self.registration
    }

    pub fn len(&self) -> usize {
        self.pixels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pixels.is_empty()
    }

    pub fn pixels(&self) -> &[usize] {
        &self.pixels
    }

    pub fn partners(&self) -> &[usize] {
        &self.partners
    }

    pub fn contains(&self, x: usize) -> bool {
        self.pixels.binary_search(&x).is_ok()
    }

    pub(crate) fn check_frame(&self, width: usize, height: usize) -> Result<()> {
        if width != self.width || height != self.height {
            return Err(Error::DimensionMismatch(format!(
                "region on {}x{} applied to {width}x{height} frames",
                self.width, self.height
            )));
        }
        Ok(())
    }
}

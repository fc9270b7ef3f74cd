use serde::{Deserialize, Serialize};

use super::{Count, Region, ShiftVector};
use crate::error::{Error, Result};
use crate::frame::FramePair;

/// Imaging scheme an absorption estimate belongs to.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scheme {
    /// Correlated idler subtracted pixel by pixel.
    Q,
    /// Idler reference displaced so its noise is uncorrelated.
    Dcl,
    /// Noiseless constant reference.
    Cl,
}

impl Scheme {
    pub const ALL: [Scheme; 3] = [Scheme::Q, Scheme::Dcl, Scheme::Cl];

    pub fn name(self) -> &'static str {
        match self {
            Scheme::Q => "q",
            Scheme::Dcl => "dcl",
            Scheme::Cl => "cl",
        }
    }
}

/// Per-pixel absorption estimate of a single frame. Noise can make values
/// negative.
#[derive(Clone, Debug, PartialEq)]
pub struct AlphaMap {
    pub scheme: Scheme,
    pub width: usize,
    pub height: usize,
    pub pixels: Vec<usize>,
    pub values: Vec<f64>,
}

fn check_reference(n_i_ref: f64) -> Result<()> {
    if !(n_i_ref > 0.0 && n_i_ref.is_finite()) {
        return Err(Error::param("n_i_ref", n_i_ref, "must be positive"));
    }
    Ok(())
}

fn difference_map<T: Count>(
    pair: FramePair<'_, T>,
    region: &Region,
    n_i_ref: f64,
    scheme: Scheme,
) -> Result<AlphaMap> {
    check_reference(n_i_ref)?;
    region.check_frame(pair.width, pair.height)?;
    let values = region
        .pixels()
        .iter()
        .zip(region.partners())
        .map(|(&x, &p)| (pair.idler[p].value() - pair.signal[x].value()) / n_i_ref)
        .collect();
    Ok(AlphaMap {
        scheme,
        width: pair.width,
        height: pair.height,
        pixels: region.pixels().to_vec(),
        values,
    })
}

/// `(N_i(m(x)) − N'_s(x)) / ⟨N_i⟩`.
pub fn alpha_q<T: Count>(
    pair: FramePair<'_, T>,
    region: &Region,
    n_i_ref: f64,
) -> Result<AlphaMap> {
    difference_map(pair, region, n_i_ref, Scheme::Q)
}

/// `(N_i(m(x) + a) − N'_s(x)) / ⟨N_i⟩`. Pixels whose displaced reference
/// leaves the grid are dropped. A shift inside the correlation footprint
/// (`reach <= kernel_radius`) does not wash out the correlations and is
/// reported as a warning.
pub fn alpha_dcl<T: Count>(
    pair: FramePair<'_, T>,
    region: &Region,
    shift: ShiftVector,
    kernel_radius: usize,
    n_i_ref: f64,
) -> Result<AlphaMap> {
    if !shift.decorrelates(kernel_radius) {
        log::warn!(
            "reference shift ({}, {}) lies within the correlation radius {kernel_radius}",
            shift.dx,
            shift.dy
        );
    }
    difference_map(pair, &region.shifted(shift)?, n_i_ref, Scheme::Dcl)
}

/// `(⟨N_i⟩ − N'_s(x)) / ⟨N_i⟩`.
pub fn alpha_cl<T: Count>(
    signal: &[T],
    width: usize,
    height: usize,
    region: &Region,
    n_i_ref: f64,
) -> Result<AlphaMap> {
    check_reference(n_i_ref)?;
    region.check_frame(width, height)?;
    if signal.len() != width * height {
        return Err(Error::DimensionMismatch("signal frame length".into()));
    }
    let values = region
        .pixels()
        .iter()
        .map(|&x| (n_i_ref - signal[x].value()) / n_i_ref)
        .collect();
    Ok(AlphaMap {
        scheme: Scheme::Cl,
        width,
        height,
        pixels: region.pixels().to_vec(),
        values,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn uniform_pair(w: usize, h: usize, s: u32, i: u32) -> (Vec<u32>, Vec<u32>) {
        (vec![s; w * h], vec![i; w * h])
    }

    #[test]
    fn quantum_arithmetic() {
        let (s, i) = uniform_pair(3, 3, 95, 100);
        let pair = FramePair::new(3, 3, &s[..], &i[..]).unwrap();
        let r = Region::full(3, 3).unwrap();
        let m = alpha_q(pair, &r, 100.0).unwrap();
        assert!(m.values.iter().all(|&v| (v - 0.05).abs() < 1e-15));

        let (s, i) = uniform_pair(3, 3, 80, 80);
        let pair = FramePair::new(3, 3, &s[..], &i[..]).unwrap();
        assert!(alpha_q(pair, &r, 100.0)
            .unwrap()
            .values
            .iter()
            .all(|&v| v == 0.0));
        assert!(alpha_q(pair, &r, 0.0).is_err());
    }

    #[test]
    fn differential_reduces_to_quantum_without_shift() {
        let s: Vec<u32> = (0..25).map(|v| v * 3 % 17).collect();
        let i: Vec<u32> = (0..25).map(|v| v * 5 % 13).collect();
        let pair = FramePair::new(5, 5, &s[..], &i[..]).unwrap();
        let r = Region::full(5, 5).unwrap();
        let q = alpha_q(pair, &r, 10.0).unwrap();
        let d = alpha_dcl(pair, &r, ShiftVector::ZERO, 0, 10.0).unwrap();
        assert_eq!(q.values, d.values);
        assert_eq!(q.pixels, d.pixels);
    }

    #[test]
    fn differential_arithmetic_with_shift() {
        let (s, i) = uniform_pair(6, 1, 95, 100);
        let pair = FramePair::new(6, 1, &s[..], &i[..]).unwrap();
        let r = Region::full(6, 1).unwrap();
        let d = alpha_dcl(pair, &r, ShiftVector::new(2, 0), 0, 100.0).unwrap();
        assert_eq!(d.pixels.len(), 4);
        assert!(d.values.iter().all(|&v| (v - 0.05).abs() < 1e-15));
    }

    #[test]
    fn classical_arithmetic() {
        let s = vec![95u32; 4];
        let r = Region::full(2, 2).unwrap();
        let m = alpha_cl(&s, 2, 2, &r, 100.0).unwrap();
        assert!(m.values.iter().all(|&v| (v - 0.05).abs() < 1e-15));
        let s = vec![100u32; 4];
        assert!(alpha_cl(&s, 2, 2, &r, 100.0)
            .unwrap()
            .values
            .iter()
            .all(|&v| v == 0.0));
        assert!(alpha_cl(&s, 2, 2, &r, -1.0).is_err());
    }

    #[test]
    fn unbiased_at_the_mean() {
        // noiseless mean-level counts: N_i = 1000, N'_s = (1 − α) 1000
        let alpha = [0.0, 0.05, 0.25, 0.5];
        let s: Vec<f64> = alpha.iter().map(|a| (1.0 - a) * 1000.0).collect();
        let i = [1000.0; 4];
        let pair = FramePair::new(4, 1, &s[..], &i[..]).unwrap();
        let r = Region::full(4, 1).unwrap();
        for m in [
            alpha_q(pair, &r, 1000.0).unwrap(),
            alpha_dcl(pair, &r, ShiftVector::new(0, 0), 0, 1000.0).unwrap(),
            alpha_cl(&s, 4, 1, &r, 1000.0).unwrap(),
        ] {
            for (&x, &v) in m.pixels.iter().zip(&m.values) {
                assert!((v - alpha[x]).abs() < 1e-12);
            }
        }
    }

    proptest! {
        #[test]
        fn scale_invariance(s in proptest::collection::vec(0.0..1e4f64, 9), i in proptest::collection::vec(0.0..1e4f64, 9), k in 0.01..100.0f64, n_ref in 1.0..1e4f64) {
            let r = Region::full(3, 3).unwrap();
            let ks: Vec<f64> = s.iter().map(|v| v * k).collect();
            let ki: Vec<f64> = i.iter().map(|v| v * k).collect();
            let a = FramePair::new(3, 3, &s[..], &i[..]).unwrap();
            let b = FramePair::new(3, 3, &ks[..], &ki[..]).unwrap();
            let pairs = [
                (alpha_q(a, &r, n_ref).unwrap(), alpha_q(b, &r, n_ref * k).unwrap()),
                (alpha_dcl(a, &r, ShiftVector::new(1, 0), 0, n_ref).unwrap(), alpha_dcl(b, &r, ShiftVector::new(1, 0), 0, n_ref * k).unwrap()),
                (alpha_cl(&s, 3, 3, &r, n_ref).unwrap(), alpha_cl(&ks, 3, 3, &r, n_ref * k).unwrap()),
            ];
            for (x, y) in pairs {
                for (u, v) in x.values.iter().zip(&y.values) {
                    prop_assert!((u - v).abs() <= 1e-9 * (1.0 + u.abs()));
                }
            }
        }
    }
}

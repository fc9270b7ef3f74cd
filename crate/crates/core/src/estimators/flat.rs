use crate::error::{Error, Result};
use crate::frame::{FrameStack, RealStack};
use crate::stats::CompensatedSum;

/// Removes deterministic intensity gradients.
///
/// Each pixel is rescaled by `g(x) = global mean / temporal mean at x`, so
/// every pixel ends with the same temporal mean and the global mean is kept.
pub fn flat_field(stack: &FrameStack) -> Result<RealStack> {
    let all: Vec<usize> = (0..stack.geometry.pixels()).collect();
    flat_field_over(stack, &all)
}

/// As [`flat_field`], but the common level is the mean over `pixels` only,
/// so those pixels keep their overall intensity even when the rest of the
/// frame is darker. Pixels outside the set with zero mean are left as is.
pub fn flat_field_over(stack: &FrameStack, pixels: &[usize]) -> Result<RealStack> {
    let n_frames = stack.n_frames();
    if n_frames < 2 {
        return Err(Error::InsufficientFrames {
            needed: 2,
            got: n_frames,
        });
    }
    let p = stack.geometry.pixels();
    let mut pixel_sums = vec![CompensatedSum::new(); p];
    for frame in stack.frames() {
        for (acc, &c) in pixel_sums.iter_mut().zip(frame) {
            acc.add(c as f64);
        }
    }
    let temporal: Vec<f64> = pixel_sums
        .iter()
        .map(|s| s.value() / n_frames as f64)
        .collect();
    if pixels.is_empty() || pixels.iter().any(|&x| x >= p) {
        return Err(Error::DimensionMismatch("flat-field pixel set".into()));
    }
    if let Some(&x) = pixels.iter().find(|&&x| !(temporal[x] > 0.0)) {
        let (c, r) = stack.geometry.coords(x);
        return Err(Error::Degenerate(format!(
            "pixel ({c}, {r}) has zero temporal mean"
        )));
    }
    let level = crate::stats::sum(pixels.iter().map(|&x| temporal[x])) / pixels.len() as f64;
    let gain: Vec<f64> = temporal
        .iter()
        .map(|&m| if m > 0.0 { level / m } else { 1.0 })
        .collect();
    let values = stack
        .frames()
        .flat_map(|frame| frame.iter().zip(&gain).map(|(&c, &g)| c as f64 * g))
        .collect();
    RealStack::from_values(stack.geometry, values)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frame::{Arm, Geometry};
    use crate::statgen::gen_coherent;

    #[test]
    fn uniform_stack_is_unchanged() {
        let st = FrameStack::repeat_frame(3, 3, 4, Arm::Single, &[7; 9]).unwrap();
        let out = flat_field(&st).unwrap();
        assert!(out.values().iter().all(|&v| (v - 7.0).abs() < 1e-12));
    }

    #[test]
    fn removes_linear_gradient_and_keeps_global_mean() {
        let g = Geometry::new(32, 32, 200).unwrap();
        let base = gen_coherent(1000.0, g, 5).unwrap();
        // deterministic gradient ×(1 + 0.1·col/width), rounded to counts
        let counts: Vec<u32> = base
            .counts()
            .iter()
            .enumerate()
            .map(|(i, &c)| {
                let col = (i % g.pixels()) % g.width;
                (c as f64 * (1.0 + 0.1 * col as f64 / g.width as f64)).round() as u32
            })
            .collect();
        let st = FrameStack::from_counts(g, Arm::Single, counts).unwrap();
        let out = flat_field(&st).unwrap();

        let temporal = |values: &dyn Fn(usize, usize) -> f64| -> Vec<f64> {
            (0..g.pixels())
                .map(|x| (0..g.n_frames).map(|k| values(k, x)).sum::<f64>() / g.n_frames as f64)
                .collect()
        };
        let after = temporal(&|k, x| out.frame(k)[x]);
        let lo = after.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = after.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        assert!((hi - lo) / lo < 0.005, "{lo} .. {hi}");

        let before_mean = st.counts().iter().map(|&c| c as f64).sum::<f64>();
        let after_mean = out.values().iter().sum::<f64>();
        assert!(((after_mean - before_mean) / before_mean).abs() < 1e-9);
    }

    #[test]
    fn subset_level_is_kept() {
        // left column dark, right column bright
        let st = FrameStack::repeat_frame(2, 2, 3, Arm::Single, &[5, 10, 5, 10]).unwrap();
        let out = flat_field_over(&st, &[1, 3]).unwrap();
        assert_eq!(out.frame(0), &[10.0, 10.0, 10.0, 10.0]);
        let st = FrameStack::repeat_frame(2, 1, 3, Arm::Single, &[0, 4]).unwrap();
        assert_eq!(flat_field_over(&st, &[1]).unwrap().frame(2), &[0.0, 4.0]);
        assert!(flat_field_over(&st, &[0]).is_err());
    }

    #[test]
    fn errors() {
        let st = FrameStack::repeat_frame(2, 1, 1, Arm::Single, &[1, 1]).unwrap();
        assert!(flat_field(&st).is_err());
        let st = FrameStack::repeat_frame(2, 1, 3, Arm::Single, &[1, 0]).unwrap();
        assert!(flat_field(&st).is_err());
    }
}

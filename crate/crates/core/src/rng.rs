//! Seed derivation for reproducible, order-independent random substreams.
//!
//! Every frame of every processing stage draws from its own generator whose
//! seed is a stable mix of the master seed, the stage, the arm and the frame
//! index. Frames can therefore be produced in any order (or in parallel)
//! and still yield bit-identical stacks.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::frame::Arm;

/// Generator used for all sampling.
pub type FrameRng = ChaCha8Rng;

/// Processing stage that owns a substream.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Stage {
    Source,
    Spread,
    Split,
    Object,
    Loss,
    Background,
}

impl Stage {
    fn tag(self) -> u64 {
        match self {
            Stage::Source => 0x5352_4345,
            Stage::Spread => 0x5350_5244,
            Stage::Split => 0x5350_4c54,
            Stage::Object => 0x4f42_4a54,
            Stage::Loss => 0x4c4f_5353,
            Stage::Background => 0x424b_4744,
        }
    }
}

/// SplitMix64 finalizer.
#[inline]
pub fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Stable 64-bit seed for one (master seed, stage, arm, frame) substream.
pub fn substream_seed(master: u64, stage: Stage, arm: Arm, frame: usize) -> u64 {
    let mut h = mix64(master);
    h = mix64(h ^ stage.tag());
    h = mix64(h ^ arm.tag() as u64);
    mix64(h ^ frame as u64)
}

pub fn frame_rng(master: u64, stage: Stage, arm: Arm, frame: usize) -> FrameRng {
    FrameRng::seed_from_u64(substream_seed(master, stage, arm, frame))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashSet;

    #[test]
    fn seeds_are_distinct_across_streams() {
        let mut seen = HashSet::new();
        for stage in [Stage::Source, Stage::Spread, Stage::Loss, Stage::Object] {
            for arm in [Arm::Signal, Arm::Idler, Arm::Single] {
                for frame in 0..100 {
                    assert!(seen.insert(substream_seed(7, stage, arm, frame)));
                }
            }
        }
    }

    #[test]
    fn seed_is_stable() {
        // Frozen so that stack files stay reproducible across releases.
        assert_eq!(mix64(0), 0xe220_a839_7b1d_cdaf);
        assert_eq!(
            substream_seed(1, Stage::Source, Arm::Signal, 0),
            substream_seed(1, Stage::Source, Arm::Signal, 0)
        );
        assert_ne!(
            substream_seed(1, Stage::Source, Arm::Signal, 0),
            substream_seed(2, Stage::Source, Arm::Signal, 0)
        );
    }
}

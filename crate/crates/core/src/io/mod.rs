//! File formats: FSTK1 frame stacks, P5 graymaps and CSV reports.

pub mod fstk;
pub mod pgm;
pub mod report;

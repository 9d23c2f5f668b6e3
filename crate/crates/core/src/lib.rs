//! Pseudo-synthetic ECG generation and delineation.
//!
//! The crate is organized along the pipeline:
//!
//! - [`data`]: records, masks, fiducials and their text formats
//! - [`pool`]: cropping annotated records into segment pools and fitting
//!   amplitude models
//! - [`synth`]: rule-based composition of synthetic traces with ground truth
//! - [`augment`]: training-time signal corruption
//! - [`autodiff`]: a small reverse-mode engine and the segmentation losses
//! - [`network`]: 1-D U-Net / W-Net with optional channel attention and a trainer
//! - [`eval`]: fiducial matching, detection and delineation metrics
//! - [`reference`]: parametric annotated records used as stand-in source data

pub mod augment;
pub mod autodiff;
pub mod data;
mod error;
pub mod eval;
pub mod network;
pub mod pool;
pub mod reference;
pub mod resample;
pub mod rng;
pub mod stats;
pub mod synth;

pub use data::{
    fiducials_from_mask, mask_from_fiducials, DelineationMask, EcgRecord, FiducialSet, Interval,
    SegmentKind, WaveKind,
};
pub use error::{Error, Result};

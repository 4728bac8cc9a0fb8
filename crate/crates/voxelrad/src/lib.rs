//! Volumetric radiography toolkit.
//!
//! The crate covers four areas that together form a small, fully testable
//! CT-to-radiograph processing stack:
//!
//! * digitally reconstructed radiograph (DRR) projection of a CT volume with
//!   an exact discrete adjoint ([`projector`]),
//! * gradient-based iterative reconstruction driven by multi-view projection
//!   objectives ([`recon`]),
//! * a rule-based pneumothorax segmentation pipeline built from 3D
//!   thresholding, morphology and region growing ([`segment`]),
//! * image/segmentation/correlation metrics and clinical quantification
//!   ([`metrics`]).
//!
//! # Conventions
//!
//! * Voxel data is stored z-slowest, x-fastest: `data[(z * ny + y) * nx + x]`.
//!   Grid dimensions are written `(d, h, w) = (nz, ny, nx)`.
//! * Spacing and origin are world-space quantities in millimetres and are kept
//!   in `(x, y, z)` axis order. The origin is the world position of the center
//!   of voxel `(0, 0, 0)`.
//! * CT intensities are Hounsfield units (air = -1000, water = 0); projection
//!   operates on linear attenuation in 1/mm (see
//!   [`volume::hu_to_attenuation`]).
//! * World axes: +x patient left, +y anterior-to-posterior ray direction of
//!   the PA view, +z cranial.
//! * All operations are deterministic: identical inputs produce bit-identical
//!   outputs regardless of thread count. Parallelism only ever splits work
//!   whose per-element reduction order is fixed.

pub mod cli;
pub mod config;
pub mod edt;
pub mod error;
pub mod metrics;
pub mod mhd;
pub mod morphology;
pub mod pgm;
pub mod phantom;
pub mod projector;
pub mod recon;
pub mod rng;
pub mod segment;
pub mod volume;

pub use error::{Error, Result};
pub use volume::{ImageGrid2D, Mask, Volume};

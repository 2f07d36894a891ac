//! Procedural generation of same-different visual reasoning datasets.
//!
//! Four tasks (MTS, SD, SOSD, RMTS) are rendered as 128x128 RGB images over
//! fourteen shape variants, with a pixel-exact oracle that recomputes every
//! label from the image alone. Around the generators sit dataset building
//! and verification, the held-out rich regime, accuracy scoring and plots,
//! and a pixel-cosine probe of same-different discriminability.
//!
//! Everything is seeded: the same master seed and arguments produce the same
//! bytes regardless of thread count.

pub mod cli;
pub mod datasets;
pub mod error;
pub mod esbnprobe;
pub mod geom;
pub mod oracle;
pub mod raster;
pub mod rng;
pub mod score;
pub mod shapegen;
pub mod tasks;

pub use error::{Error, Result};

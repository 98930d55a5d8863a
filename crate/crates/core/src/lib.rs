//! Offline antenna-pointing calibration toolkit.
//!
//! The crate learns a homogeneous-coordinate correction transform from
//! operational signal-level measurements and tracking tables. The pieces:
//!
//! - [`geometry`]: pointings, the 3x3 correction transform, and its
//!   rotation/shear/scale decomposition.
//! - [`tracktab`]: tracking-table parsing, interpolation, and generation of
//!   calibration tables (alternating original/learned intervals and offset
//!   cycles).
//! - [`signalio`]: signal-level logs, dBm conversions, Gaussian smoothing,
//!   and error metrics.
//! - [`maxima`]: training-data extraction — smoothed-level maxima detection
//!   via negative second derivatives, mean-shift clustering, and heavy-ball
//!   refinement.
//! - [`regress`]: least-squares estimation of the transform from training
//!   pairs.
//! - [`simulate`]: a deterministic ground-truth simulator used to verify the
//!   whole pipeline end to end.
//!
//! The hot per-sample loops run on rayon when the `parallel` feature (on by
//! default) is enabled; disabling it yields a sequential build with
//! bit-identical results.

pub mod geometry;
pub mod maxima;
pub mod regress;
pub mod signalio;
pub mod simulate;
pub mod tracktab;

mod exec;

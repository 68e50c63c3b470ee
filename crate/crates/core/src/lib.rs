//! Far-field beam-steering simulator for a holographic metasurface transceiver.
//!
//! The surface forms a beam from two scalar phase-shift parameters (β₁, β₂);
//! in the far field the user-to-surface gain factorizes into a product of two
//! sinc patterns whose joint peak sits at the user's direction cosines
//! (α₁, α₂). The crate provides:
//!
//! - [`channel`]: the deterministic sinc-product gain model, per-element
//!   phase-shift mapping, and the achievable-rate metric.
//! - [`signal`]: pilot reception with AWGN and an optional block-fading
//!   scatter perturbation, plus reproducible seeded RNG streams.
//! - [`estimator`]: the five-probe closed-form inversion that recovers
//!   (α₁, α₂) from expected received powers, and its noisy two-stage
//!   variant driven by empirical means.
//! - [`bounds`]: the exponential error-probability bound for the two-stage
//!   estimator and the non-central chi-squared / sub-exponential tail
//!   toolkit it rests on.
//! - [`experiments`]: Monte Carlo sweep runners, baselines, and CSV/SVG
//!   emission.
//! - [`cli`]: the `hmtsim` command-line front end.

pub mod bounds;
pub mod channel;
pub mod cli;
mod error;
pub mod estimator;
pub mod experiments;
pub mod signal;

pub use error::{Error, Result};

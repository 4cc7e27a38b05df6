//! Classical EPR-B correlations from the randomised spinning coloured disk.
//!
//! A local hidden variable is an antiperiodic black/white colouring of the
//! circle with finitely many switches; a spin of the disk by a uniform random
//! angle gives both parties their outcomes. This crate computes the induced
//! correlation functions exactly, simulates the experiment, analyses the
//! Fourier structure that rules out `-cos γ`, checks CHSH, and searches the
//! model class for the best classical approximation to the quantum curve.

pub mod bell;
pub mod circle;
pub mod cli;
pub mod correlation;
pub mod lattice;
pub mod montecarlo;
pub mod optimize;
pub mod spectral;

pub use circle::{Angle, CircleError, Colouring, Mixture};
pub use correlation::{exact_correlation, mixture_correlation, Correlation, PiecewiseLinearCorrelation};

//! Multiscale super-resolution from translated box-binned measurements.
//!
//! A high-resolution grid signal is observed through box kernels of several
//! sizes. This crate provides the forward model, spectral stability analysis
//! of a set of box sizes, and several reconstruction methods.

pub mod dense;
pub mod error;
pub mod fft;
pub mod io;
pub mod linop;
pub mod recon;
pub mod signal;
pub mod sim;
pub mod spectral;

pub use error::{Error, Result};
pub use linop::LinearOperator;
pub use recon::{Method, PadPolicy, ReconstructionConfig};
pub use signal::{BoxKernel, ConvMode, GridSignal, MeasurementSet, Normalization};
pub use sim::{TargetKind, TargetSpec};
pub use spectral::{ConditionNumber, ErrorPrediction, SpectralProfile};
